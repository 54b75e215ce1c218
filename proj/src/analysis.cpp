#include "percol/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "percol/errors.hpp"

namespace percol {

ErrorNorms error_norm(const DiscreteSolution& sol, const ReferenceSolution& reference, int samples_per_interval) {
  if (samples_per_interval < 1) throw std::invalid_argument("error_norm: samples_per_interval must be positive");
  if (!reference.eval) throw std::invalid_argument("error_norm: reference has no evaluator");
  if (reference.dim_x != sol.dim_x() || reference.dim_y != sol.dim_y())
    throw std::invalid_argument("error_norm: reference dimensions differ from the solution");
  const std::size_t dx = sol.dim_x(), dy = sol.dim_y();
  const bool with_deriv = static_cast<bool>(reference.eval_y_deriv);
  const std::size_t n = static_cast<std::size_t>(samples_per_interval) * static_cast<std::size_t>(sol.grid().intervals());
  std::vector<double> rx(dx), ry(dy), rd(dy);
  ErrorNorms err;
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(n);
    const PeriodicSample s = eval_periodic(sol, t);
    reference.eval(t, rx, ry);
    for (std::size_t c = 0; c < dx; ++c) err.x = std::max(err.x, std::abs(s.x[c] - rx[c]));
    for (std::size_t c = 0; c < dy; ++c) err.y = std::max(err.y, std::abs(s.y[c] - ry[c]));
    if (with_deriv) {
      reference.eval_y_deriv(t, rd);
      for (std::size_t c = 0; c < dy; ++c) err.y_deriv = std::max(err.y_deriv, std::abs(s.y_deriv[c] - rd[c]));
    }
  }
  err.omega = std::abs(sol.omega - reference.omega);
  return err;
}

DiscreteSolution reference_solution(const CoupledSystem& system, const PhaseCondition& phase, int L_ref, int m_ref,
                                    AbscissaeKind kind, const ReferenceSolution& init, const NewtonOptions& opts) {
  const auto grid = build_grid(L_ref, make_abscissae(kind, m_ref));
  const DiscreteSolution guess = restrict_reference(init, grid);
  const NewtonResult result = newton_solve(system, phase, grid, pack(guess), opts);
  return unpack(result.z, grid, system.dim_x, system.dim_y);
}

int default_M_rule(int L) { return std::min(5 * L, 200); }

ConvergenceTable convergence_study(const SystemForM& system, const PhaseCondition& phase,
                                   const ReferenceSolution& reference, int m, AbscissaeKind kind,
                                   std::span<const int> Ls, const MRule& M_rule, const StudyOptions& opts) {
  if (Ls.size() < 3) throw std::invalid_argument("convergence_study: need at least 3 values of L");
  for (std::size_t i = 0; i < Ls.size(); ++i) {
    if (Ls[i] < 1) throw std::invalid_argument("convergence_study: L must be positive");
    if (i > 0 && Ls[i] <= Ls[i - 1]) throw std::invalid_argument("convergence_study: Ls must be strictly increasing");
  }
  const AbscissaeSet abscissae = make_abscissae(kind, m);
  const int L_max = Ls.back();

  ConvergenceTable table;
  for (const int L : Ls) {
    ConvergenceRow row;
    row.L = L;
    row.m = m;
    row.kind = kind;
    row.M = M_rule(L);
    const auto start = std::chrono::steady_clock::now();
    try {
      const auto grid = build_grid(L, abscissae);
      const CoupledSystem sys = system(row.M);
      const DiscreteSolution guess = restrict_reference(reference, grid);
      const NewtonResult result = newton_solve(sys, phase, grid, pack(guess), opts.newton);
      const DiscreteSolution sol = unpack(result.z, grid, sys.dim_x, sys.dim_y);
      const int per_interval = (opts.samples_per_interval * L_max + L - 1) / L;
      const ErrorNorms err = error_norm(sol, reference, per_interval);
      row.err_x = err.x;
      row.err_y = err.y;
      row.err_omega = err.omega;
      row.iterations = result.diagnostics.iterations;
    } catch (const std::runtime_error& e) {
      row.ok = false;
      row.failure = e.what();
    } catch (const std::domain_error& e) {
      row.ok = false;
      row.failure = e.what();
    }
    row.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (row.ok && !(std::isfinite(row.err_x) && std::isfinite(row.err_y) && std::isfinite(row.err_omega))) {
      row.ok = false;
      row.failure = "non-finite error";
    }
    table.rows.push_back(std::move(row));
  }

  std::vector<std::pair<double, double>> ex, ey, eo;
  bool omega_fit = true;
  for (const auto& row : table.rows) {
    if (!row.ok) continue;
    ex.emplace_back(row.L, row.err_x);
    ey.emplace_back(row.L, row.err_y);
    eo.emplace_back(row.L, row.err_omega);
    if (!(row.err_omega > 0.0)) omega_fit = false;
  }
  if (ex.size() < 3)
    throw InsufficientData("convergence_study: only " + std::to_string(ex.size()) +
                           " rows converged, at least 3 are needed to fit an order");
  table.orders.x = estimate_order(ex);
  table.orders.y = estimate_order(ey);
  table.orders.omega = omega_fit ? estimate_order(eo) : std::numeric_limits<double>::quiet_NaN();
  return table;
}

double estimate_order(std::span<const std::pair<double, double>> errors) {
  if (errors.size() < 2) throw std::invalid_argument("estimate_order: need at least 2 points");
  double sx = 0.0, sy = 0.0;
  for (const auto& [L, e] : errors) {
    if (!(L > 0.0)) throw std::invalid_argument("estimate_order: L must be positive");
    if (!(e > 0.0)) throw std::invalid_argument("estimate_order: errors must be positive");
    sx += -std::log(L);
    sy += std::log(e);
  }
  const double n = static_cast<double>(errors.size());
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [L, e] : errors) {
    const double u = -std::log(L) - mx;
    sxx += u * u;
    sxy += u * (std::log(e) - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("estimate_order: all L are equal");
  return sxy / sxx;
}

}  // namespace percol
