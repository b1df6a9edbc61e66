#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "seesmp/bsde/lsmc.hpp"
#include "seesmp/core/brownian.hpp"
#include "seesmp/core/errors.hpp"
#include "seesmp/core/parallel.hpp"
#include "seesmp/forward/path_ensemble.hpp"
#include "seesmp/smp/reference.hpp"

namespace seesmp {

struct BruteForceOptions {
  std::size_t n_intervals = 3;
  std::size_t enumeration_cap = 4096;
  LsmcOptions lsmc;
};

struct CostEntry {
  std::vector<double> interval_values;
  double cost = 0.0;
};

struct BruteForceResult {
  ControlProcess control;
  std::vector<double> interval_values;
  std::size_t argmin = 0;
  std::vector<CostEntry> table;  // lexicographic order, first interval most significant
};

/// J(u) = y(0) for every piecewise-constant control with values in the
/// lattice on n_intervals equal pieces, all on the same ensemble. Ties go to
/// the lexicographically first control.
inline BruteForceResult brute_force_optimal(const ControlProblem& pb, const ControlSet& lattice,
                                            const BrownianEnsemble& bm, const BruteForceOptions& opt = {}) {
  if (lattice.empty()) throw InvalidArgument("brute_force_optimal: empty control lattice");
  if (opt.n_intervals == 0) throw InvalidArgument("brute_force_optimal: no control intervals");
  const std::size_t L = lattice.size();
  std::size_t count = 1;
  for (std::size_t k = 0; k < opt.n_intervals; ++k) {
    if (count > opt.enumeration_cap / L + 1) {
      count = opt.enumeration_cap + 1;
      break;
    }
    count *= L;
  }
  if (count > opt.enumeration_cap) {
    throw ConfigurationError("brute_force_optimal: " + std::to_string(L) + "^" + std::to_string(opt.n_intervals) +
                             " controls exceed the enumeration cap " + std::to_string(opt.enumeration_cap));
  }
  BruteForceResult out;
  out.table.resize(count);
  for (std::size_t j = 0; j < count; ++j) {
    std::vector<double> vals(opt.n_intervals);
    std::size_t r = j;
    for (std::size_t k = opt.n_intervals; k-- > 0;) {
      vals[k] = lattice.points[r % L];
      r /= L;
    }
    out.table[j].interval_values = std::move(vals);
  }
  // Jobs are independent; each is path-parallel inside, so the outer loop stays sequential.
  for (std::size_t j = 0; j < count; ++j) {
    const ControlProcess u = StepProcess::piecewise(bm.n_steps(), out.table[j].interval_values);
    out.table[j].cost = make_reference(pb, u, bm, opt.lsmc).yz.y0();
  }
  for (std::size_t j = 1; j < count; ++j) {
    if (out.table[j].cost < out.table[out.argmin].cost) out.argmin = j;
  }
  out.interval_values = out.table[out.argmin].interval_values;
  out.control = StepProcess::piecewise(bm.n_steps(), out.interval_values);
  return out;
}

}  // namespace seesmp
