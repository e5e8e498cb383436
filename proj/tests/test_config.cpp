#include <gtest/gtest.h>

#include <filesystem>

#include "landau/config.hpp"
#include "landau/io.hpp"

using namespace landau;

namespace {

int code_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const Error& e) {
    return e.exit_code();
  }
  return 0;
}

}  // namespace

TEST(Config, EmptyTextGivesDefaults) {
  EXPECT_EQ(parse_config_text(""), RunConfig{});
  EXPECT_EQ(parse_config_text("# only a comment\n\n   \n"), RunConfig{});
}

TEST(Config, ParsesValuesOfEveryKind) {
  const auto c = parse_config_text(
      "equilibrium = maxwellian\n"
      "  amplitude=2.5e-3  \n"
      "n_r = 64\n"
      "relax = false\n"
      "conserve_mass = 0\n"
      "output_dir = some/dir\n");
  EXPECT_EQ(c.equilibrium, "maxwellian");
  EXPECT_EQ(c.amplitude, 2.5e-3);
  EXPECT_EQ(c.n_r, 64);
  EXPECT_FALSE(c.relax);
  EXPECT_FALSE(c.conserve_mass);
  EXPECT_EQ(c.output_dir, "some/dir");
}

TEST(Config, RoundTripThroughSerialization) {
  RunConfig c;
  c.amplitude = 1.0 / 3.0;
  c.dt = 0.025;
  c.window = 10.0 * pi;
  c.mode = "picard";
  c.n_k = 77;
  c.relax = false;
  c.output_dir = "x y";
  EXPECT_EQ(parse_config_text(serialize_config(c)), c);
  EXPECT_EQ(serialize_config(parse_config_text(serialize_config(c))), serialize_config(c));
}

TEST(Config, InvariantViolationsAreRejected) {
  EXPECT_EQ(code_of("dt = 0.5\n"), exit_codes::config);
  EXPECT_EQ(code_of("n_r = 3\n"), exit_codes::config);
  EXPECT_EQ(code_of("amplitude = -1e-3\n"), exit_codes::config);
  EXPECT_EQ(code_of("mode = sideways\n"), exit_codes::config);
  EXPECT_EQ(code_of("n_u = 3.5\n"), exit_codes::config);
  EXPECT_EQ(code_of("dt = fast\n"), exit_codes::config);
  EXPECT_EQ(code_of("relax = maybe\n"), exit_codes::config);
  EXPECT_EQ(code_of("k_min = 2\nk_max = 1\n"), exit_codes::config);
  EXPECT_EQ(code_of("no equals sign\n"), exit_codes::config);
  EXPECT_EQ(code_of("dt = 0.1\n"), 0);
}

TEST(Config, UnknownAndDuplicateKeys) {
  EXPECT_EQ(code_of("colour = blue\n"), exit_codes::unknown_key);
  EXPECT_EQ(code_of("dt = 0.05\ndt = 0.02\n"), exit_codes::config);
  EXPECT_NE(exit_codes::unknown_key, exit_codes::config);
}

TEST(Config, UnreadableFileIsAnIoError) {
  try {
    parse_config("/nonexistent/dir/run.cfg");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.exit_code(), exit_codes::io);
  }
}

TEST(Config, FileRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "landau_config_test";
  std::filesystem::create_directories(dir);
  RunConfig c;
  c.t_max = 12.5;
  c.spatial_profile = "neutral_gaussian";
  {
    std::ofstream out(dir / "run.cfg");
    out << serialize_config(c);
  }
  EXPECT_EQ(parse_config((dir / "run.cfg").string()), c);
  std::filesystem::remove_all(dir);
}

TEST(ConfigHash, StableAndSensitive) {
  RunConfig a;
  const std::string h = config_hash(a);
  EXPECT_EQ(h.size(), 16u);
  EXPECT_EQ(h, config_hash(parse_config_text(serialize_config(a))));
  RunConfig b = a;
  b.output_dir = "elsewhere";
  b.workers = 3;
  EXPECT_EQ(config_hash(b), h);
  b.amplitude *= 2.0;
  EXPECT_NE(config_hash(b), h);
  RunConfig c = a;
  c.dt = 0.04;
  EXPECT_NE(config_hash(c), h);
}

TEST(ConfigJson, EchoKeepsTypes) {
  RunConfig c;
  const auto j = config_json(c);
  EXPECT_TRUE(j["dt"].is_number_float());
  EXPECT_TRUE(j["n_r"].is_number_integer());
  EXPECT_TRUE(j["relax"].is_boolean());
  EXPECT_EQ(j["equilibrium"], "poisson");
  std::size_t keys = 0;
  detail::for_each_key(c, [&](const char*, auto&) { ++keys; });
  EXPECT_EQ(j.size(), keys);
}
