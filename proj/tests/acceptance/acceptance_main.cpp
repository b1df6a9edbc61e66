// Acceptance run: one PASS/FAIL line per criterion. Criteria run the shipped
// configs in-process, except 9 (unit-test binaries) and 10 (CLI, twice).
// Exit status is 0 only when every line passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <map>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "seesmp/seesmp.hpp"

namespace fs = std::filesystem;
using namespace seesmp;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

ExperimentReport run_config(const std::string& file) {
  return run_experiment(load_config(std::string(SEESMP_CONFIG_DIR) + "/" + file));
}

const VerdictEntry& find_verdict(const ExperimentReport& r, const std::string& name) {
  for (const auto& v : r.verdicts) {
    if (v.name == name) return v;
  }
  throw std::runtime_error(r.experiment + ": no verdict named " + name);
}

std::string describe(const VerdictEntry& v) {
  std::ostringstream os;
  os << v.name << '=' << v.status;
  if (v.detail.contains("fitted_slope") && v.detail["fitted_slope"].is_number()) {
    os << "(slope " << std::setprecision(3) << v.detail["fitted_slope"].get<double>() << ')';
  }
  return os.str();
}

// Requires each named verdict to have the given status.
bool expect(const ExperimentReport& r, const std::vector<std::string>& names, const std::string& status,
            std::string& detail) {
  bool ok = true;
  for (const auto& n : names) {
    const VerdictEntry& v = find_verdict(r, n);
    ok = ok && v.status == status;
    detail += (detail.empty() ? "" : " ") + describe(v);
  }
  return ok;
}

bool expect_all_pass(const ExperimentReport& r, std::string& detail) {
  bool ok = !r.verdicts.empty();
  for (const auto& v : r.verdicts) {
    ok = ok && v.passed();
    detail += (detail.empty() ? "" : " ") + describe(v);
  }
  return ok;
}

Outcome bsie_routes() {
  Outcome o;
  const ExperimentReport r = run_config("bsie_equivalence.ini");
  o.ok = expect(r, {"scalar", "planar-f0", "planar-fP"}, "pass", o.detail);
  return o;
}

Outcome closed_form_adjoint() {
  const double a = -1.0, b = 0.5, T = 1.0;
  const TimeGrid g(T, 256);
  const BrownianEnsemble bm(g, 50000, 2);
  const OperatorProcess P = bsie_picard(GalerkinSystem::scalar(a, b), TerminalMatrix::fixed(Eigen::MatrixXd::Ones(1, 1)),
                                        MatrixGenerator::zero(), {}, bm);
  const double c = 2 * a + b * b;
  double worst = 0.0;
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    const double oracle = std::exp(c * (T - g.node(i)));
    const double tol = 3.0 * P.std_error[i](0, 0) + 2.0 * g.dt() * std::abs(c) * oracle;
    worst = std::max(worst, std::abs(P.P[i](0, 0) - oracle) / tol);
  }
  std::ostringstream os;
  os << "max |P - exp(c(T-t))| / tol = " << std::setprecision(3) << worst << " over " << g.n_nodes() << " nodes";
  return {worst <= 1.0, os.str()};
}

Outcome transform_identity() {
  Outcome o;
  const ExperimentReport r = run_config("see_orders.ini");
  const bool slope = expect(r, {"transform_identity"}, "pass", o.detail);
  const bool null = expect(r, {"null_transform"}, "exact-zero", o.detail);
  o.ok = slope && null;
  return o;
}

Outcome ito_orders() {
  Outcome o;
  bool ok = true;
  for (const char* f : {"ito_orders_scalar.ini", "ito_orders_planar.ini"}) {
    const ExperimentReport r = run_config(f);
    std::string d;
    ok = expect(r, {"sigma", "Z"}, "pass", d) && ok;
    o.detail += std::string(o.detail.empty() ? "" : "; ") + f + ": " + d;
  }
  o.ok = ok;
  return o;
}

Outcome diffusion_shift() {
  Outcome o;
  const bool slope = expect(run_config("shift_orders.ini"), {"shift"}, "pass", o.detail);
  const bool zero = expect(run_config("shift_orders_zero.json"), {"shift"}, "exact-zero", o.detail);
  o.ok = slope && zero;
  return o;
}

Outcome variation_orders() {
  Outcome o;
  o.ok = expect_all_pass(run_config("variation_orders.ini"), o.detail);
  return o;
}

Outcome hat_and_duality() {
  Outcome o;
  const ExperimentReport r = run_config("hat_orders.ini");
  const bool ok = expect(r, {"yhat", "duality_consistency", "yhat_difference"}, "pass", o.detail);
  // The duality check also runs on the full-pipeline instance.
  std::string d;
  const bool pipeline = expect(run_config("full_pipeline.ini"), {"duality_consistency"}, "pass", d);
  o.detail += " full-pipeline " + d;
  o.ok = ok && pipeline;
  return o;
}

Outcome maximum_principle() {
  Outcome o;
  const ExperimentReport bb = run_config("smp_verdict_bang_bang.ini");
  bool ok = expect(bb, {"maximum_principle"}, "pass", o.detail);
  std::size_t enumerated = 0;
  for (const auto& t : bb.tables) {
    if (t.name == "costs") enumerated = t.rows.size();
  }
  ok = ok && enumerated == 8;
  o.detail = "bang-bang " + o.detail + " (" + std::to_string(enumerated) + " controls enumerated)";
  std::string d;
  ok = expect(run_config("smp_verdict_flipped.ini"), {"maximum_principle"}, "fail", d) && ok;
  o.detail += "; flipped " + d;
  d.clear();
  ok = expect(run_config("smp_verdict_lq.ini"), {"maximum_principle"}, "pass", d) && ok;
  o.detail += "; lq " + d;
  o.ok = ok;
  return o;
}

// Exact identities from the unit suites, by binary.
const std::map<std::string, std::vector<std::string>>& trivial_tests() {
  static const std::map<std::string, std::vector<std::string>> tests{
      {SEESMP_TEST_CORE,
       {"TimeGrid.FourStepsOnUnitHorizon", "TimeGrid.DegenerateSingleStep", "TimeGrid.HalfHorizonFiveSteps",
        "Brownian.SameArgumentsGiveIdenticalIncrements", "Brownian.DistinctSeedsDiffer",
        "Assumptions.NegativeIdentityIsCoercive", "Assumptions.IdentityDiffusionBreaksQuasiSkewSymmetry",
        "Assumptions.ExactDerivativePassesGradientCheck", "FitOrder.ExactPowerLaw", "FitOrder.ConstantErrorHasZeroSlope"}},
      {SEESMP_TEST_SPDE, {"SuperParabolic.LaplacianStencil", "SuperParabolic.RejectsStrongAdvection"}},
      {SEESMP_TEST_FORWARD,
       {"SolveSee.ZeroDynamicsKeepInitialState", "SolveSee.ConstantDriftIsRiemannSum",
        "FundamentalMatrix.IdentityFlowForZeroOperators", "FundamentalMatrix.FlowComposition",
        "FundamentalMatrix.IdentityAtAnchor", "StochasticExponential.ZeroExponentIsOne",
        "TransformIdentity.NullTransformIsExactlyZero", "TransformIdentity.DiagonalSystemDecouples",
        "Moments.ZeroPathsGiveZero", "Moments.ConstantPathExact"}},
      {SEESMP_TEST_BSDE,
       {"Regression.ConstantTargetReproducedExactly", "Regression.InSpanTargetRecovered",
        "Lsmc.ConstantTerminalZeroGenerator", "LinearExplicit.ConstantTerminalZeroCoefficients",
        "FirstOrderAdjoint.ZeroDataGivesZero", "FirstOrderAdjoint.TerminalIsExactGradient"}},
      {SEESMP_TEST_BSIE,
       {"BsiePicard.ZeroDataZeroFixedPointInOneIteration", "MatrixBsde.ZeroDataGivesZero",
        "MatrixBsde.SymmetryPreservedWithoutSymmetrizing", "AprioriDiagnostics.ZeroDataZeroRatios",
        "AprioriDiagnostics.DoublingTerminalDoublesP", "ContinuityProbe.ConstantProcessHasZeroModulus"}},
      {SEESMP_TEST_ITO,
       {"ComputeSigma.NullSpikeGivesZeroSigma", "ComputeSigma.ZeroForcingGivesZeroSigmaAndZ",
        "DiffusionShift.VanishingOperatorsAreExact", "DiffusionShift.ZeroBeforeSpike"}},
      {SEESMP_TEST_SMP,
       {"SpikeControl.*", "Variation.NullPerturbationGivesZeroVariations",
        "Variation.LinearCoefficientsMakeTheFirstVariationExact", "HatBsde.*",
        "Duality.ZeroWidthGivesZeroValueAndStderr", "Duality.IsHomogeneousInTheDriftIncrement",
        "Hamiltonian.ZeroAdjointsGiveTheUtilityGenerator", "Hamiltonian.NullDiffusionIncrementRemovesTheShift",
        "SmpVerdict.DegenerateProblemPasses", "SmpVerdict.ExpressionAtTheCandidateIsExactlyZero",
        "BruteForce.ControlFreeProblemReturnsTheFirstControl"}},
      {SEESMP_TEST_RUNNER, {"Runner.SeeOrdersOnTheZeroSystemIsExactZero"}},
  };
  return tests;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

Outcome trivial_identities(const fs::path& scratch) {
  Outcome o;
  bool ok = true;
  std::size_t total = 0;
  for (const auto& [binary, names] : trivial_tests()) {
    std::string filter;
    std::size_t wildcards = 0;
    for (const auto& n : names) {
      filter += (filter.empty() ? "" : ":") + n;
      wildcards += n.find('*') != std::string::npos;
    }
    const fs::path log = scratch / (fs::path(binary).filename().string() + ".log");
    const std::string cmd = "\"" + binary + "\" --gtest_filter='" + filter + "' > \"" + log.string() + "\" 2>&1";
    const int rc = std::system(cmd.c_str());
    // gtest ends with "[  PASSED  ] N tests." and lists failures otherwise.
    const std::string text = slurp(log);
    std::smatch m;
    std::size_t passed = 0;
    if (std::regex_search(text, m, std::regex(R"(\[  PASSED  \] (\d+) tests?\.)"))) passed = std::stoul(m[1]);
    const bool this_ok = rc == 0 && passed >= names.size() - wildcards && passed > 0;
    if (!this_ok) o.detail += " " + fs::path(binary).filename().string() + " failed (see " + log.string() + ")";
    ok = ok && this_ok;
    total += passed;
  }
  o.ok = ok;
  o.detail = std::to_string(total) + " exact-identity tests passed" + o.detail;
  return o;
}

// Runs the CLI on the same config twice with one thread and compares the CSV bytes.
Outcome reproducibility(const fs::path& scratch) {
  struct Run {
    std::string config;
    std::string extra;
  };
  const std::vector<Run> runs{{"see_orders.ini", ""},
                              {"shift_orders.ini", ""},
                              {"bsie_equivalence.ini", "--paths 5000"},
                              {"ito_orders_scalar.ini", "--paths 2000"},
                              {"variation_orders.ini", "--paths 2000"},
                              {"hat_orders.ini", "--paths 2000"},
                              {"smp_verdict_lq.ini", "--paths 2000"}};
  Outcome o;
  bool ok = true;
  std::size_t compared = 0;
  for (const auto& run : runs) {
    std::vector<fs::path> dirs;
    for (int k = 0; k < 2; ++k) {
      const fs::path dir = scratch / ("repro_" + fs::path(run.config).stem().string() + "_" + std::to_string(k));
      fs::remove_all(dir);
      const std::string cmd = std::string("\"") + SEESMP_CLI_PATH + "\" run \"" + SEESMP_CONFIG_DIR + "/" + run.config +
                              "\" --threads 1 " + run.extra + " --out \"" + dir.string() + "\" > \"" +
                              (dir.string() + ".log") + "\" 2>&1";
      const int rc = std::system(cmd.c_str());
      // 0 and 1 are normal (verdicts pass or fail); anything else is an error.
      if (!WIFEXITED(rc) || WEXITSTATUS(rc) > 1) {
        ok = false;
        o.detail += " " + run.config + ": cli error";
      }
      dirs.push_back(dir);
    }
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      if (entry.path().extension() != ".csv") continue;
      ++files;
      const fs::path twin = dirs[1] / entry.path().filename();
      if (!fs::exists(twin) || slurp(entry.path()) != slurp(twin)) {
        ok = false;
        o.detail += " " + entry.path().filename().string() + " differs";
      }
    }
    std::size_t files_b = 0;
    for (const auto& entry : fs::directory_iterator(dirs[1])) files_b += entry.path().extension() == ".csv";
    if (files == 0 || files != files_b) {
      ok = false;
      o.detail += " " + run.config + ": csv sets differ";
    }
    compared += files;
  }
  o.ok = ok;
  o.detail = std::to_string(compared) + " csv files byte-identical across two runs" + o.detail;
  return o;
}

}  // namespace

int main() {
  set_thread_count(1);
  const fs::path scratch = fs::temp_directory_path() / "seesmp_acceptance";
  fs::create_directories(scratch);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"bsie and matrix-bsde routes agree", bsie_routes},
      {"closed-form scalar adjoint", closed_form_adjoint},
      {"exponential transform identity", transform_identity},
      {"weak Ito formula orders", ito_orders},
      {"diffusion shift", diffusion_shift},
      {"variation orders", variation_orders},
      {"yhat estimates and duality", hat_and_duality},
      {"maximum principle verdict", maximum_principle},
      {"trivial identities", [&] { return trivial_identities(scratch); }},
      {"reproducibility", [&] { return reproducibility(scratch); }},
  };

  bool all = true;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    all = all && o.ok;
    std::printf("criterion %2zu %s  %s  [%s] (%.0fs)\n", k + 1, o.ok ? "PASS" : "FAIL", criteria[k].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
