#include <CLI11.hpp>

#include <iostream>

#include "landau/landau.hpp"

namespace {

constexpr const char* units_note =
    "Units: time in inverse plasma frequencies, length in Debye-type units in which the\n"
    "Poisson equilibrium is M0(v) = 1/(pi^2 (1+|v|^2)^2) and the field obeys E = grad Delta^-1 rho.";

landau::RunConfig load(const std::string& path, const std::string& output, int workers) {
  landau::RunConfig c = path.empty() ? landau::RunConfig{} : landau::parse_config(path);
  if (!output.empty()) c.output_dir = output;
  if (workers >= 0) c.workers = workers;
  landau::validate(c);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linearized and nonlinear Vlasov-Poisson toolkit around a Poisson equilibrium"};
  app.footer(units_note);
  app.require_subcommand(1);

  std::string config, output, mode, input;
  int workers = -1;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "TOML-style key = value configuration file");
    sub->add_option("--output", output, "output directory (overrides output_dir)");
    sub->add_option("--workers", workers, "worker threads, 0 = $LANDAU_WORKERS or 1");
  };
  auto* disp = app.add_subcommand("dispersion", "Landau roots on the configured k grid");
  auto* lin = app.add_subcommand("linear", "linear response, field history and fitted rates");
  auto* nl = app.add_subcommand("nonlinear", "nonlinear solve by direct particle push or Picard iteration");
  auto* dec = app.add_subcommand("decompose", "static/oscillatory representations of a single mode");
  auto* rates = app.add_subcommand("rates", "fit decay rates and the window split from existing artifacts");
  for (auto* s : {disp, lin, nl, dec, rates}) common(s);
  nl->add_option("--mode", mode, "direct|picard")->check(CLI::IsMember({"direct", "picard"}));
  rates->add_option("--input", input, "directory holding run artifacts (default: output directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return landau::exit_codes::config;
  }

  try {
    const landau::RunConfig c = load(config, output, workers);
    if (*disp) return landau::run_dispersion(c);
    if (*lin) return landau::run_linear(c);
    if (*nl) return landau::run_nonlinear(c, mode.empty() ? c.mode : mode);
    if (*dec) return landau::run_decompose(c);
    if (*rates) return landau::run_rates(c, input.empty() ? c.output_dir : input);
  } catch (const landau::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return landau::exit_codes::config;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return landau::exit_codes::config;
}
