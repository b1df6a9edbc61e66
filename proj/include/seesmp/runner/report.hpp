#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "seesmp/core/errors.hpp"
#include "seesmp/core/order_report.hpp"

namespace seesmp {

/// One CSV file: fixed columns, numeric cells printed with 17 significant digits.
struct CsvTable {
  std::string name;  // file stem
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> row) {
    if (row.size() != columns.size()) throw InvalidArgument("CsvTable: row width does not match the header");
    rows.push_back(std::move(row));
  }

  std::string render() const {
    std::string out;
    for (std::size_t c = 0; c < columns.size(); ++c) out += (c ? "," : "") + columns[c];
    out += '\n';
    char buf[40];
    for (const auto& r : rows) {
      for (std::size_t c = 0; c < r.size(); ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", r[c]);
        if (c) out += ',';
        out += buf;
      }
      out += '\n';
    }
    return out;
  }
};

struct VerdictEntry {
  std::string name;
  std::string status;  // pass, fail or exact-zero
  nlohmann::json detail = nlohmann::json::object();

  bool passed() const { return status != "fail"; }
};

struct ExperimentReport {
  std::string experiment;
  std::map<std::string, std::string> config_echo;
  std::uint64_t seed = 0;
  nlohmann::json measurements = nlohmann::json::array();
  std::vector<VerdictEntry> verdicts;
  std::vector<CsvTable> tables;
  std::vector<std::string> warnings;
  double runtime_seconds = 0.0;

  bool passed() const {
    for (const auto& v : verdicts) {
      if (!v.passed()) return false;
    }
    return true;
  }

  void verdict(std::string name, bool ok, nlohmann::json detail = nlohmann::json::object()) {
    verdicts.push_back({std::move(name), ok ? "pass" : "fail", std::move(detail)});
  }

  /// Verdict plus one measurement per sweep point, and the sweep as a CSV table.
  void order(const std::string& series, const OrderReport& r, const std::string& abscissa = "rho") {
    CsvTable t{series, {abscissa, "estimate", "stderr"}, {}};
    for (std::size_t j = 0; j < r.rho.size(); ++j) {
      t.add({r.rho[j], r.errors[j], r.stderrs[j]});
      measurements.push_back(
          {{"series", series}, {abscissa, r.rho[j]}, {"estimate", r.errors[j]}, {"stderr", r.stderrs[j]}});
    }
    tables.push_back(std::move(t));
    nlohmann::json d{{"label", r.label},
                     {"claimed_order", r.claimed_order},
                     {"claim", r.claim == OrderClaim::BigO ? "O" : "o"},
                     {"r_squared", nullptr},
                     {"fitted_slope", nullptr}};
    if (!r.exact_zero && std::isfinite(r.fitted_slope)) {
      d["fitted_slope"] = r.fitted_slope;
      d["r_squared"] = r.r_squared;
    }
    if (!r.note.empty()) d["note"] = r.note;
    verdicts.push_back({series, r.verdict_string(), std::move(d)});
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["experiment"] = experiment;
    j["config-echo"] = config_echo;
    j["seed"] = seed;
    j["measurements"] = measurements;
    j["verdicts"] = nlohmann::json::array();
    for (const auto& v : verdicts) j["verdicts"].push_back({{"name", v.name}, {"status", v.status}, {"detail", v.detail}});
    j["runtime_seconds"] = runtime_seconds;
    j["csv"] = nlohmann::json::object();
    for (const auto& t : tables) j["csv"][t.name + ".csv"] = t.columns;
    j["warnings"] = warnings;
    return j;
  }

  /// Writes <dir>/<experiment>_<table>.csv for every table and <dir>/<experiment>.json.
  std::vector<std::filesystem::path> write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> files;
    for (const auto& t : tables) {
      const auto p = dir / (experiment + "_" + t.name + ".csv");
      std::ofstream os(p, std::ios::binary);
      os << t.render();
      if (!os) throw ConfigurationError("cannot write " + p.string());
      files.push_back(p);
    }
    const auto p = dir / (experiment + ".json");
    std::ofstream os(p, std::ios::binary);
    os << to_json().dump(2) << '\n';
    if (!os) throw ConfigurationError("cannot write " + p.string());
    files.push_back(p);
    return files;
  }
};

}  // namespace seesmp
