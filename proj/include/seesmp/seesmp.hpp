#pragma once

// Everything, for tools and quick experiments. Library code includes the pieces it needs.

#include "seesmp/bsde/adjoint.hpp"
#include "seesmp/bsde/linear_explicit.hpp"
#include "seesmp/bsde/lsmc.hpp"
#include "seesmp/bsde/regression.hpp"
#include "seesmp/bsie/diagnostics.hpp"
#include "seesmp/bsie/matrix_bsde.hpp"
#include "seesmp/bsie/operator_process.hpp"
#include "seesmp/bsie/picard.hpp"
#include "seesmp/core/assumptions.hpp"
#include "seesmp/core/brownian.hpp"
#include "seesmp/core/coefficients.hpp"
#include "seesmp/core/diagnostics.hpp"
#include "seesmp/core/errors.hpp"
#include "seesmp/core/galerkin_system.hpp"
#include "seesmp/core/order_report.hpp"
#include "seesmp/core/parallel.hpp"
#include "seesmp/core/spike.hpp"
#include "seesmp/core/time_grid.hpp"
#include "seesmp/forward/flow.hpp"
#include "seesmp/forward/moments.hpp"
#include "seesmp/forward/path_ensemble.hpp"
#include "seesmp/forward/scheme.hpp"
#include "seesmp/forward/see_solver.hpp"
#include "seesmp/forward/stochastic_exponential.hpp"
#include "seesmp/ito/shift.hpp"
#include "seesmp/ito/sigma.hpp"
#include "seesmp/runner/config.hpp"
#include "seesmp/runner/experiments.hpp"
#include "seesmp/runner/report.hpp"
#include "seesmp/smp/brute_force.hpp"
#include "seesmp/smp/hamiltonian.hpp"
#include "seesmp/smp/hat_bsde.hpp"
#include "seesmp/smp/instances.hpp"
#include "seesmp/smp/reference.hpp"
#include "seesmp/smp/second_order.hpp"
#include "seesmp/smp/spike_control.hpp"
#include "seesmp/smp/variation.hpp"
#include "seesmp/smp/verdict.hpp"
#include "seesmp/spde/superparabolic.hpp"
