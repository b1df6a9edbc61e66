#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

// property_tree's JSON reader still pulls in the old global bind placeholders.
#ifndef BOOST_BIND_GLOBAL_PLACEHOLDERS
#define BOOST_BIND_GLOBAL_PLACEHOLDERS
#endif
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/json_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <Eigen/Dense>

#include "seesmp/core/errors.hpp"

namespace seesmp {

inline const std::vector<std::string>& known_experiments() {
  static const std::vector<std::string> names{"see-orders",       "bsie-equivalence", "ito-orders",  "shift-orders",
                                              "variation-orders", "hat-orders",       "smp-verdict", "full-pipeline"};
  return names;
}

/// Parsed experiment definition. Keys are "section.key"; the INI and JSON
/// forms map onto the same tree ({"experiment": {"name": ...}} in JSON).
class ExperimentConfig {
 public:
  ExperimentConfig() = default;
  explicit ExperimentConfig(boost::property_tree::ptree tree) : tree_(std::move(tree)) { validate(); }

  const std::string& name() const { return name_; }
  std::uint64_t seed() const { return get<std::uint64_t>("experiment.seed", 1); }

  bool has(const std::string& key) const { return tree_.get_optional<std::string>(key).has_value(); }

  template <class T>
  T get(const std::string& key, const T& fallback) const {
    const auto raw = tree_.get_optional<std::string>(key);
    if (!raw) return fallback;
    return convert<T>(key, *raw);
  }

  template <class T>
  T require(const std::string& key) const {
    const auto raw = tree_.get_optional<std::string>(key);
    if (!raw) throw ConfigurationError("config: missing key '" + key + "'");
    return convert<T>(key, *raw);
  }

  /// Comma- or whitespace-separated numbers.
  std::vector<double> list(const std::string& key, std::vector<double> fallback = {}) const {
    const auto raw = tree_.get_optional<std::string>(key);
    if (!raw) return fallback;
    std::string s = *raw;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream is(s);
    std::vector<double> out;
    std::string tok;
    while (is >> tok) out.push_back(convert<double>(key, tok));
    return out;
  }

  /// Rows separated by ';', entries by ',' or spaces: "-1 0.3; 0.2 -2".
  Eigen::MatrixXd matrix(const std::string& key, const Eigen::MatrixXd& fallback) const {
    const auto raw = tree_.get_optional<std::string>(key);
    if (!raw) return fallback;
    std::vector<std::vector<double>> rows;
    std::stringstream rs(*raw);
    std::string row;
    while (std::getline(rs, row, ';')) {
      std::replace(row.begin(), row.end(), ',', ' ');
      std::istringstream is(row);
      std::vector<double> r;
      std::string tok;
      while (is >> tok) r.push_back(convert<double>(key, tok));
      if (!r.empty()) rows.push_back(std::move(r));
    }
    if (rows.empty()) throw ConfigurationError("config: empty matrix for '" + key + "'");
    Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows[0].size()) throw ConfigurationError("config: ragged matrix for '" + key + "'");
      for (std::size_t j = 0; j < rows[i].size(); ++j) {
        M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
      }
    }
    return M;
  }

  void set(const std::string& key, const std::string& value) {
    tree_.put(key, value);
    validate();
  }

  /// Flat "section.key" -> value map, sorted; used as the report's config echo.
  std::map<std::string, std::string> echo() const {
    std::map<std::string, std::string> out;
    flatten(tree_, "", out);
    return out;
  }

  /// rho_list from "sweep.rho_list", or rho_max * 2^-j for j < rho_count.
  /// Must be strictly decreasing and aligned with the grid of n_steps over T.
  std::vector<double> rho_list(double horizon, std::size_t n_steps, double t0) const {
    std::vector<double> rho = list("sweep.rho_list");
    if (rho.empty()) {
      const double rmax = get<double>("sweep.rho_max", 0.25);
      const int count = get<int>("sweep.rho_count", 5);
      for (int j = 0; j < count; ++j) rho.push_back(rmax / std::pow(2.0, j));
    }
    const double dt = horizon / static_cast<double>(n_steps);
    auto aligned = [dt](double v) { return std::abs(v / dt - std::round(v / dt)) <= 1e-9 * std::max(1.0, v / dt); };
    if (!aligned(t0)) throw ConfigurationError("config: sweep.t0 is not a grid node");
    for (std::size_t j = 0; j < rho.size(); ++j) {
      if (!(rho[j] > 0.0)) throw ConfigurationError("config: rho values must be positive");
      if (j > 0 && !(rho[j] < rho[j - 1])) throw ConfigurationError("config: rho_list must be strictly decreasing");
      if (!aligned(rho[j])) throw ConfigurationError("config: rho_list entry is not a multiple of dt");
      if (t0 + rho[j] > horizon * (1.0 + 1e-12)) throw ConfigurationError("config: spike window leaves the horizon");
    }
    return rho;
  }

 private:
  template <class T>
  static T convert(const std::string& key, const std::string& raw) {
    std::istringstream is(raw);
    T v{};
    if constexpr (std::is_same_v<T, std::string>) {
      return raw;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (raw == "true" || raw == "1" || raw == "yes") return true;
      if (raw == "false" || raw == "0" || raw == "no") return false;
      throw ConfigurationError("config: '" + key + "' is not a boolean: " + raw);
    } else {
      is >> v;
      if (is.fail() || !(is >> std::ws).eof()) throw ConfigurationError("config: cannot parse '" + key + "': " + raw);
      return v;
    }
  }

  static void flatten(const boost::property_tree::ptree& t, const std::string& prefix,
                      std::map<std::string, std::string>& out) {
    for (const auto& [k, child] : t) {
      const std::string key = prefix.empty() ? k : prefix + "." + k;
      if (child.empty()) {
        out[key] = child.data();
      } else {
        flatten(child, key, out);
      }
    }
  }

  void validate() {
    name_ = tree_.get<std::string>("experiment.name", "");
    if (name_.empty()) throw ConfigurationError("config: missing experiment.name");
    const auto& k = known_experiments();
    if (std::find(k.begin(), k.end(), name_) == k.end()) {
      throw ConfigurationError("config: unknown experiment '" + name_ + "'");
    }
  }

  boost::property_tree::ptree tree_;
  std::string name_;
};

/// INI (any extension other than .json) or JSON.
inline ExperimentConfig load_config(const std::string& path) {
  boost::property_tree::ptree tree;
  try {
    if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
      boost::property_tree::read_json(path, tree);
    } else {
      boost::property_tree::read_ini(path, tree);
    }
  } catch (const boost::property_tree::ptree_error& e) {
    throw ConfigurationError(std::string("config: ") + e.what());
  }
  return ExperimentConfig(std::move(tree));
}

inline ExperimentConfig parse_ini_string(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream is(text);
  try {
    boost::property_tree::read_ini(is, tree);
  } catch (const boost::property_tree::ptree_error& e) {
    throw ConfigurationError(std::string("config: ") + e.what());
  }
  return ExperimentConfig(std::move(tree));
}

}  // namespace seesmp
