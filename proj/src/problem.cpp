#include "percol/problem.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "percol/errors.hpp"

namespace percol {

double SolutionEvaluator::query(Block block, std::size_t component, double s, int derivative) {
  const MeshLocation loc = sol_->grid().locate(wrap_periodic(s));
  const PiecewisePolynomial& p = block == Block::X ? sol_->mu : sol_->nu;
  return derivative == 0 ? p.component(loc, component) : p.component_derivative(loc, component);
}

KernelIntegral::KernelIntegral(Kernel kernel, std::size_t out_dim, double a, double b, double tau,
                               QuadratureSpec spec, KernelArgs args)
    : kernel_(std::move(kernel)), out_dim_(out_dim), args_(args) {
  if (!kernel_) throw std::invalid_argument("kernel_integral: empty kernel");
  if (out_dim_ == 0) throw std::invalid_argument("kernel_integral: output dimension must be positive");
  if (a < -tau) throw std::invalid_argument("kernel_integral: lower bound below -tau");
  if (b > 0.0) throw std::invalid_argument("kernel_integral: upper bound above 0");
  rule_ = make_rule(spec, a, b);
}

void KernelIntegral::operator()(const StateAccessor& state, double omega, std::span<double> out) const {
  if (rule_.a / omega < -1.0 - 1e-12)
    throw DelayExceedsPeriod("kernel_integral: delay " + std::to_string(-rule_.a) + " exceeds period " +
                             std::to_string(omega));
  const bool use_x = args_ != KernelArgs::Y;
  const bool use_y = args_ != KernelArgs::X;
  std::vector<double> x(use_x ? state.dim_x() : 0);
  std::vector<double> y(use_y ? state.dim_y() : 0);
  std::vector<double> k(out_dim_);
  for (std::size_t c = 0; c < out_dim_; ++c) out[c] = 0.0;
  for (std::size_t i = 0; i < rule_.size(); ++i) {
    const double sigma = rule_.nodes[i];
    const double theta = sigma / omega;
    for (std::size_t c = 0; c < x.size(); ++c) x[c] = state.x(theta, c);
    for (std::size_t c = 0; c < y.size(); ++c) y[c] = state.y(theta, c);
    kernel_(sigma, x, y, k);
    for (std::size_t c = 0; c < out_dim_; ++c) out[c] += rule_.weights[i] * k[c];
  }
}

double KernelIntegral::scalar(const StateAccessor& state, double omega) const {
  double v = 0.0;
  (*this)(state, omega, std::span<double>(&v, 1));
  return v;
}

KernelIntegral kernel_integral(Kernel kernel, std::size_t out_dim, double a, double b, double tau,
                               QuadratureSpec spec, KernelArgs args) {
  return KernelIntegral(std::move(kernel), out_dim, a, b, tau, spec, args);
}

void validate_phase(const PhaseCondition& phase, std::size_t dim_x, std::size_t dim_y) {
  if (const auto* anchor = std::get_if<AnchorPhase>(&phase)) {
    const std::size_t dim = anchor->block == Block::X ? dim_x : dim_y;
    if (anchor->component >= dim)
      throw std::invalid_argument("anchor phase: component " + std::to_string(anchor->component) +
                                  " out of range");
    return;
  }
  const auto& integral = std::get<IntegralPhase>(phase);
  if (!integral.reference) throw std::invalid_argument("integral phase: missing reference solution");
  if (integral.reference->dim_x() != dim_x || integral.reference->dim_y() != dim_y)
    throw std::invalid_argument("integral phase: reference dimensions differ from the system");
}

PhaseQuadrature integral_phase_quadrature(const IntegralPhase& phase, const CollocationGrid& grid,
                                          std::size_t dim_x, std::size_t dim_y) {
  const DiscreteSolution& ref = *phase.reference;
  const int L = grid.intervals();
  const int n = grid.degree() + 1;
  std::vector<double> gx, gw;
  gauss_legendre(n, gx, gw);
  PhaseQuadrature quad;
  quad.terms.reserve(static_cast<std::size_t>(L) * n * (dim_x + dim_y));
  for (int i = 0; i < L; ++i) {
    for (int q = 0; q < n; ++q) {
      const double t = (i + 0.5 * (gx[q] + 1.0)) / L;
      const double w = 0.5 * gw[q] / L;
      const MeshLocation loc = ref.grid().locate(t);
      for (std::size_t c = 0; c < dim_x; ++c)
        quad.terms.push_back({Block::X, c, t, w * ref.mu.component_derivative(loc, c)});
      for (std::size_t c = 0; c < dim_y; ++c)
        quad.terms.push_back({Block::Y, c, t, w * ref.nu.component_derivative(loc, c)});
    }
  }
  return quad;
}

double phase_residual(const PhaseCondition& phase, const DiscreteSolution& sol) {
  validate_phase(phase, sol.dim_x(), sol.dim_y());
  SolutionEvaluator eval(sol);
  if (const auto* anchor = std::get_if<AnchorPhase>(&phase))
    return eval.query(anchor->block, anchor->component, 0.0, 0) - anchor->target;
  const PhaseQuadrature quad =
      integral_phase_quadrature(std::get<IntegralPhase>(phase), sol.grid(), sol.dim_x(), sol.dim_y());
  double sum = 0.0;
  for (const auto& term : quad.terms) sum += term.weight * eval.query(term.block, term.component, term.time, 0);
  return sum;
}

ReferenceSolution as_reference(std::shared_ptr<const DiscreteSolution> sol) {
  ReferenceSolution ref;
  ref.dim_x = sol->dim_x();
  ref.dim_y = sol->dim_y();
  ref.omega = sol->omega;
  ref.eval = [sol](double t, std::span<double> x, std::span<double> y) {
    const MeshLocation loc = sol->grid().locate(clamp_unit(t));
    for (std::size_t c = 0; c < x.size(); ++c) x[c] = sol->mu.component(loc, c);
    for (std::size_t c = 0; c < y.size(); ++c) y[c] = sol->nu.component(loc, c);
  };
  ref.eval_y_deriv = [sol](double t, std::span<double> dy) {
    const MeshLocation loc = sol->grid().locate(clamp_unit(t));
    for (std::size_t c = 0; c < dy.size(); ++c) dy[c] = sol->nu.component_derivative(loc, c);
  };
  return ref;
}

DiscreteSolution restrict_reference(const ReferenceSolution& ref, std::shared_ptr<const CollocationGrid> grid) {
  const std::size_t n = grid->node_count();
  std::vector<double> mu(n * ref.dim_x), nu(n * ref.dim_y);
  for (std::size_t k = 0; k < n; ++k)
    ref.eval(grid->node(k), std::span<double>(mu).subspan(k * ref.dim_x, ref.dim_x),
             std::span<double>(nu).subspan(k * ref.dim_y, ref.dim_y));
  return DiscreteSolution{PiecewisePolynomial(grid, ref.dim_x, std::move(mu)),
                          PiecewisePolynomial(grid, ref.dim_y, std::move(nu)), ref.omega};
}

}  // namespace percol
