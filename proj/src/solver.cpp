#include "percol/solver.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>

#include "percol/errors.hpp"

namespace percol {

void NewtonOptions::validate() const {
  if (max_iters <= 0 || !(residual_tol > 0.0) || !(step_tol > 0.0) || max_halvings <= 0)
    throw std::invalid_argument("newton options must be positive");
}

namespace {

// Residual norm at a trial point; failures of the trial (omega below the
// delay, overflow) count as no decrease.
double trial_residual(const CollocationProblem& problem, std::span<const double> z, Execution execution,
                      std::vector<double>& r) {
  try {
    r = problem.residual(z, execution);
  } catch (const DelayExceedsPeriod&) {
    return std::numeric_limits<double>::infinity();
  } catch (const NonFiniteResidual&) {
    return std::numeric_limits<double>::infinity();
  }
  return sup_norm(r);
}

}  // namespace

NewtonResult newton_solve(const CollocationProblem& problem, std::span<const double> z0,
                          const NewtonOptions& opts) {
  opts.validate();
  if (z0.size() != problem.size())
    throw std::invalid_argument("newton_solve: initial guess has " + std::to_string(z0.size()) +
                                " entries, expected " + std::to_string(problem.size()));
  NewtonResult result;
  result.z.assign(z0.begin(), z0.end());
  std::vector<double> r = problem.residual(result.z, opts.execution);
  double res = sup_norm(r);
  auto& diag = result.diagnostics;
  diag.residual_history.push_back(res);
  diag.final_residual = res;
  if (res <= opts.residual_tol) return result;

  const std::size_t n = problem.size();
  std::vector<double> trial(n), rt;
  Eigen::VectorXd rhs(n);
  for (int it = 1; it <= opts.max_iters; ++it) {
    const Eigen::MatrixXd J = problem.jacobian(result.z, opts.jacobian, opts.execution);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
    if (!(lu.rcond() > 64.0 * std::numeric_limits<double>::epsilon()))
      throw SingularJacobian("Jacobian is numerically singular (rcond " + std::to_string(lu.rcond()) +
                             "); the solution is not isolated, check the phase condition");
    for (std::size_t i = 0; i < n; ++i) rhs[static_cast<Eigen::Index>(i)] = -r[i];
    const Eigen::VectorXd dz = lu.solve(rhs);
    if (!dz.allFinite()) throw SingularJacobian("Newton step is not finite");

    const double step_norm = dz.cwiseAbs().maxCoeff();
    const double z_norm = std::max(sup_norm(result.z), 1.0);

    double lambda = 1.0;
    double res_trial = std::numeric_limits<double>::infinity();
    bool decreased = false;
    for (int h = 0; h <= opts.max_halvings; ++h) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = result.z[i] + lambda * dz[static_cast<Eigen::Index>(i)];
      res_trial = trial_residual(problem, trial, opts.execution, rt);
      if (res_trial < res) {
        decreased = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!decreased) {
      // At the rounding floor the residual can stall while the step is tiny.
      if (step_norm <= opts.step_tol * z_norm) {
        diag.step_converged = true;
        return result;
      }
      throw NoConvergence("Newton line search failed to reduce the residual (" + std::to_string(res) + ")",
                          result.z, res);
    }
    result.z = trial;
    r = rt;
    res = res_trial;
    diag.iterations = it;
    diag.final_residual = res;
    diag.residual_history.push_back(res);
    if (res <= opts.residual_tol) return result;
    if (lambda == 1.0 && step_norm <= opts.step_tol * z_norm) {
      diag.step_converged = true;
      return result;
    }
  }
  throw NoConvergence("Newton did not converge in " + std::to_string(opts.max_iters) + " iterations (residual " +
                          std::to_string(res) + ")",
                      result.z, res);
}

NewtonResult newton_solve(const CoupledSystem& system, const PhaseCondition& phase,
                          std::shared_ptr<const CollocationGrid> grid, std::span<const double> z0,
                          const NewtonOptions& opts) {
  return newton_solve(CollocationProblem(system, phase, std::move(grid)), z0, opts);
}

namespace {

double oscillation(const DiscreteSolution& sol) {
  double total = 0.0;
  for (std::size_t c = 0; c < sol.dim_x(); ++c) total += amplitude(sol, Block::X, c);
  for (std::size_t c = 0; c < sol.dim_y(); ++c) total += amplitude(sol, Block::Y, c);
  return total;
}

}  // namespace

BranchResult continue_branch(const SystemFamily& family, double p0, double p1, const DiscreteSolution& initial,
                             const ContinuationOptions& opts) {
  if (!(opts.initial_step > 0.0) || !(opts.min_step > 0.0) || !(opts.max_step >= opts.min_step))
    throw std::invalid_argument("continue_branch: invalid step options");
  const auto grid = initial.mu.grid_ptr();
  const std::size_t dx = initial.dim_x();
  const std::size_t dy = initial.dim_y();

  auto correct = [&](double p, const std::vector<double>& predictor) {
    auto reference = std::make_shared<const DiscreteSolution>(unpack(predictor, grid, dx, dy));
    return newton_solve(family(p), IntegralPhase{reference}, grid, predictor, opts.newton);
  };

  BranchResult branch;
  {
    NewtonResult first = correct(p0, pack(initial));
    branch.points.push_back({p0, unpack(first.z, grid, dx, dy), first.diagnostics});
  }
  if (p1 == p0) return branch;

  const double direction = p1 > p0 ? 1.0 : -1.0;
  double step = std::min(opts.initial_step, opts.max_step);
  std::vector<double> z_prev;
  std::vector<double> z_last = pack(branch.points.back().solution);
  double p_prev = p0;
  double p = p0;
  while (p != p1) {
    const double remaining = std::abs(p1 - p);
    const double p_next = remaining <= step ? p1 : p + direction * step;

    std::vector<double> predictor = z_last;
    if (!z_prev.empty()) {
      const double ratio = (p_next - p) / (p - p_prev);
      for (std::size_t i = 0; i < predictor.size(); ++i) predictor[i] += ratio * (z_last[i] - z_prev[i]);
    }

    try {
      NewtonResult corrected = correct(p_next, predictor);
      DiscreteSolution sol = unpack(corrected.z, grid, dx, dy);
      // A constant solution also satisfies the discrete system; a jump onto
      // it is a failed step, not a branch point.
      if (oscillation(sol) < opts.collapse_ratio * oscillation(branch.points.back().solution)) {
        step *= 0.5;
        if (step < opts.min_step) {
          branch.status = BranchStatus::StepUnderflow;
          branch.message = "step fell below " + std::to_string(opts.min_step) + " at parameter " +
                           std::to_string(p) + " (corrector collapsed onto an equilibrium)";
          break;
        }
        continue;
      }
      branch.points.push_back({p_next, std::move(sol), corrected.diagnostics});
      z_prev = std::move(z_last);
      z_last = std::move(corrected.z);
      p_prev = p;
      p = p_next;
      if (branch.points.back().diagnostics.iterations <= opts.easy_iterations)
        step = std::min(step * opts.growth, opts.max_step);
    } catch (const NoConvergence&) {
      step *= 0.5;
    } catch (const SingularJacobian&) {
      step *= 0.5;
    } catch (const DelayExceedsPeriod&) {
      step *= 0.5;
    } catch (const NonFiniteResidual&) {
      step *= 0.5;
    }
    if (step < opts.min_step) {
      branch.status = BranchStatus::StepUnderflow;
      branch.message = "step fell below " + std::to_string(opts.min_step) + " at parameter " + std::to_string(p) +
                       " (possible fold or bifurcation)";
      break;
    }
  }
  return branch;
}

double amplitude(const DiscreteSolution& sol, Block block, std::size_t component) {
  const PiecewisePolynomial& p = block == Block::X ? sol.mu : sol.nu;
  if (component >= p.dim()) throw std::invalid_argument("amplitude: component out of range");
  const CollocationGrid& grid = p.grid();
  auto f = [&](double t) {
    if (t < 0.0) t += 1.0;
    if (t > 1.0) t -= 1.0;
    return p.component(grid.locate(std::clamp(t, 0.0, 1.0)), component);
  };
  const std::size_t samples = 16 * static_cast<std::size_t>(grid.intervals());
  std::size_t imax = 0, imin = 0;
  double vmax = f(0.0), vmin = vmax;
  for (std::size_t k = 1; k <= samples; ++k) {
    const double v = f(static_cast<double>(k) / samples);
    if (v > vmax) vmax = v, imax = k;
    if (v < vmin) vmin = v, imin = k;
  }
  // Golden-section refinement on the neighbouring samples.
  auto refine = [&](std::size_t k, double sign) {
    double lo = static_cast<double>(k) - 1.0, hi = static_cast<double>(k) + 1.0;
    lo /= samples;
    hi /= samples;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
    auto F = [&](double t) { return sign * f(t); };
    double fa = F(a), fb = F(b);
    for (int it = 0; it < 80; ++it) {
      if (fa > fb) {
        hi = b, b = a, fb = fa;
        a = hi - g * (hi - lo), fa = F(a);
      } else {
        lo = a, a = b, fa = fb;
        b = lo + g * (hi - lo), fb = F(b);
      }
    }
    return sign * std::max(fa, fb);
  };
  const double top = std::max(vmax, refine(imax, 1.0));
  const double bottom = std::min(vmin, refine(imin, -1.0));
  return top - bottom;
}

}  // namespace percol
