#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "percol/collocation.hpp"

namespace percol {

struct NewtonOptions {
  int max_iters = 30;
  double residual_tol = 1e-10;  // sup-norm
  double step_tol = 1e-12;      // relative to max(|z|_inf, 1)
  int max_halvings = 8;
  JacobianMethod jacobian = JacobianMethod::Structured;
  Execution execution = Execution::Parallel;

  void validate() const;
};

struct NewtonDiagnostics {
  int iterations = 0;
  double final_residual = 0.0;
  std::vector<double> residual_history;  // entry 0 is the initial residual
  bool step_converged = false;           // stopped on the step criterion
};

struct NewtonResult {
  std::vector<double> z;
  NewtonDiagnostics diagnostics;
};

/// Damped Newton with a dense LU (partial pivoting) per iteration. Throws
/// NoConvergence or SingularJacobian.
NewtonResult newton_solve(const CollocationProblem& problem, std::span<const double> z0,
                          const NewtonOptions& opts = {});

NewtonResult newton_solve(const CoupledSystem& system, const PhaseCondition& phase,
                          std::shared_ptr<const CollocationGrid> grid, std::span<const double> z0,
                          const NewtonOptions& opts = {});

struct BranchPoint {
  double param_value = 0.0;
  DiscreteSolution solution;
  NewtonDiagnostics diagnostics;
};

struct ContinuationOptions {
  double initial_step = 0.05;
  double min_step = 1e-5;
  double max_step = 0.2;
  int easy_iterations = 3;  // at most this many Newton iterations grows the step
  double growth = 1.3;
  /// Corrected points whose summed amplitude drops below this fraction of
  /// the previous point's are rejected as a collapse onto an equilibrium.
  double collapse_ratio = 0.1;
  NewtonOptions newton;
};

enum class BranchStatus { Completed, StepUnderflow };

struct BranchResult {
  std::vector<BranchPoint> points;
  BranchStatus status = BranchStatus::Completed;
  std::string message;
};

using SystemFamily = std::function<CoupledSystem(double param)>;

/// Natural-parameter continuation from p0 to p1. Secant predictor, Newton
/// corrector with an integral phase condition referenced to the predictor.
BranchResult continue_branch(const SystemFamily& family, double p0, double p1, const DiscreteSolution& initial,
                             const ContinuationOptions& opts = {});

/// max - min of one component over a dense sampling of [0, 1], refined
/// around the extrema.
double amplitude(const DiscreteSolution& sol, Block block, std::size_t component);

}  // namespace percol
