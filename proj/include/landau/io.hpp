#pragma once

// Artifact writers and readers. Every CSV opens with a comment line
//   # schema_version=1 config_hash=<hash>
// followed by a header row; floats carry 17 significant digits so that identical
// runs give byte-identical files.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "config.hpp"

namespace landau {

inline constexpr int schema_version = 1;

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& hash, const std::vector<std::string>& columns)
      : path_(path), out_(path) {
    if (!out_) throw IoError("cannot write '" + path.string() + "'");
    out_ << "# schema_version=" << schema_version << " config_hash=" << hash << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << "\n";
    out_ << std::setprecision(17);
  }

  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << values[i];
    out_ << "\n";
    if (!out_) throw IoError("write failed on '" + path_.string() + "'");
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

struct CsvTable {
  std::string config_hash;
  int schema_version = 0;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw IoError("csv: missing column '" + name + "'");
  }
  bool has(const std::string& name) const {
    return std::find(columns.begin(), columns.end(), name) != columns.end();
  }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  CsvTable t;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string tok;
      while (ss >> tok) {
        if (tok.rfind("schema_version=", 0) == 0) t.schema_version = std::stoi(tok.substr(15));
        if (tok.rfind("config_hash=", 0) == 0) t.config_hash = tok.substr(12);
      }
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!header) {
      t.columns = cells;
      header = true;
      continue;
    }
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(std::stod(c));
    if (row.size() != t.columns.size()) throw IoError("csv: ragged row in '" + path.string() + "'");
    t.rows.push_back(std::move(row));
  }
  if (!header) throw IoError("csv: no header in '" + path.string() + "'");
  if (t.schema_version != schema_version)
    throw IoError("csv: schema version mismatch in '" + path.string() + "'");
  return t;
}

inline void write_json(const std::filesystem::path& path, nlohmann::json j, const std::string& hash) {
  j["schema_version"] = schema_version;
  j["config_hash"] = hash;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed on '" + path.string() + "'");
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("invalid json in '" + path.string() + "': " + e.what());
  }
}

/// Config echo as a JSON object (numbers stay numbers).
inline nlohmann::json config_json(const RunConfig& c) {
  nlohmann::json j;
  detail::for_each_key(const_cast<RunConfig&>(c), [&](const char* name, auto& member) { j[name] = member; });
  return j;
}

}  // namespace landau
