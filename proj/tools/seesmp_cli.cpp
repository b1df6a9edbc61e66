#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "seesmp/core/errors.hpp"
#include "seesmp/core/parallel.hpp"
#include "seesmp/runner/experiments.hpp"

namespace {

enum Exit { kPass = 0, kVerdictFail = 1, kConfigError = 2, kNumericalError = 3 };

int run(const std::string& config_path, const std::optional<std::uint64_t>& seed, const std::optional<std::size_t>& paths,
        const std::string& out_dir, std::size_t threads, bool strict) {
  using namespace seesmp;
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
    if (seed) cfg.set("experiment.seed", std::to_string(*seed));
    if (paths) cfg.set("experiment.n_paths", std::to_string(*paths));
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  set_thread_count(threads);

  ExperimentReport rep;
  try {
    rep = run_experiment(cfg);
  } catch (const ConfigurationError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "numerical error in " << cfg.name() << ": " << e.what() << '\n';
    return kNumericalError;
  }

  const std::filesystem::path dir = out_dir.empty() ? std::filesystem::path("out") : std::filesystem::path(out_dir);
  try {
    for (const auto& f : rep.write(dir)) std::cout << "wrote " << f.string() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumericalError;
  }
  for (const auto& v : rep.verdicts) std::cout << v.name << ": " << v.status << '\n';
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
  if (!rep.passed()) return kVerdictFail;
  if (strict && !rep.warnings.empty()) {
    std::cerr << "strict: " << rep.warnings.size() << " warning(s) treated as failure\n";
    return kVerdictFail;
  }
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spike-variation and maximum-principle experiments"};
  app.require_subcommand(1);
  auto* cmd = app.add_subcommand("run", "Run the experiment described by a config file");
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::size_t threads = 1;
  bool strict = false;
  cmd->add_option("config", config_path, "INI or JSON experiment definition")->required();
  cmd->add_option("--seed", seed, "Override experiment.seed");
  cmd->add_option("--paths", paths, "Override experiment.n_paths");
  cmd->add_option("--out", out_dir, "Output directory (default ./out)");
  cmd->add_option("--threads", threads, "Worker threads; 1 gives byte-reproducible CSV, 0 uses all cores");
  cmd->add_flag("--strict", strict, "Treat warnings as failures");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }
  return run(config_path, seed, paths, out_dir, threads, strict);
}
