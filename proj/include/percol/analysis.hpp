#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "percol/problem.hpp"
#include "percol/solver.hpp"

namespace percol {

struct ErrorNorms {
  double x = 0.0;
  double y = 0.0;
  double omega = 0.0;
  double y_deriv = 0.0;  // only when the reference provides eval_y_deriv
};

/// Sup of the component-wise differences over the uniform points k/N,
/// k = 0..N with N = samples_per_interval * L, plus |omega - omega_ref|.
ErrorNorms error_norm(const DiscreteSolution& sol, const ReferenceSolution& reference, int samples_per_interval = 16);

/// Converged solution on an (L_ref, m_ref) grid starting from init (any
/// grid; it is resampled).
DiscreteSolution reference_solution(const CoupledSystem& system, const PhaseCondition& phase, int L_ref, int m_ref,
                                    AbscissaeKind kind, const ReferenceSolution& init,
                                    const NewtonOptions& opts = {});

struct ConvergenceRow {
  int L = 0;
  int m = 0;
  AbscissaeKind kind = AbscissaeKind::GaussLegendre;
  int M = 0;
  double err_x = 0.0;
  double err_y = 0.0;
  double err_omega = 0.0;
  double runtime_seconds = 0.0;
  int iterations = 0;
  bool ok = true;
  std::string failure;
};

struct FittedOrders {
  double x = 0.0;
  double y = 0.0;
  double omega = 0.0;  // NaN when some omega error is exactly zero
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  FittedOrders orders;
};

/// Builds the system for a given number M of secondary intervals
/// (M + 1 quadrature nodes).
using SystemForM = std::function<CoupledSystem(int M)>;
using MRule = std::function<int(int L)>;

/// M = 5 L capped at 200.
int default_M_rule(int L);

struct StudyOptions {
  int samples_per_interval = 16;  // per interval of the finest grid
  NewtonOptions newton;
};

/// One solve per L from the restriction of reference, with the same phase
/// condition throughout. Failed rows are kept but excluded from the fit;
/// fewer than 3 surviving rows throws InsufficientData.
ConvergenceTable convergence_study(const SystemForM& system, const PhaseCondition& phase,
                                   const ReferenceSolution& reference, int m, AbscissaeKind kind,
                                   std::span<const int> Ls, const MRule& M_rule = default_M_rule,
                                   const StudyOptions& opts = {});

/// Least-squares slope of log(err) against log(h), h = 1/L.
double estimate_order(std::span<const std::pair<double, double>> errors);

}  // namespace percol
