#include "percol/meshing.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "percol/errors.hpp"
#include "percol/quadrature.hpp"

namespace percol {

namespace {
constexpr double kUnitTolerance = 1e-12;
}

std::string_view to_string(AbscissaeKind kind) {
  switch (kind) {
    case AbscissaeKind::GaussLegendre: return "gauss-legendre";
    case AbscissaeKind::ChebyshevExtrema: return "chebyshev";
    case AbscissaeKind::Custom: return "custom";
  }
  return "unknown";
}

AbscissaeKind parse_abscissae_kind(std::string_view name) {
  if (name == "gauss-legendre") return AbscissaeKind::GaussLegendre;
  if (name == "chebyshev") return AbscissaeKind::ChebyshevExtrema;
  throw std::invalid_argument("unknown abscissae kind '" + std::string(name) + "'");
}

AbscissaeSet::AbscissaeSet(AbscissaeKind kind, std::vector<double> c) : kind_(kind), c_(std::move(c)) {
  if (c_.empty()) throw std::invalid_argument("abscissae: need at least one point");
  if (c_.size() + 1 > kMaxBasisSize) throw std::invalid_argument("abscissae: degree too large");
  if (!(c_.front() > 0.0) || !(c_.back() <= 1.0))
    throw std::invalid_argument("abscissae: points must lie in (0, 1]");
  for (std::size_t j = 1; j < c_.size(); ++j) {
    if (!(c_[j - 1] < c_[j])) throw std::invalid_argument("abscissae: points must be strictly increasing");
  }
}

AbscissaeSet make_abscissae(AbscissaeKind kind, int m) {
  if (m < 1) throw std::invalid_argument("make_abscissae: degree must be positive");
  std::vector<double> c(m);
  switch (kind) {
    case AbscissaeKind::GaussLegendre: {
      std::vector<double> x, w;
      gauss_legendre(m, x, w);
      for (int j = 0; j < m; ++j) c[j] = 0.5 * (x[j] + 1.0);
      break;
    }
    case AbscissaeKind::ChebyshevExtrema:
      for (int j = 1; j <= m; ++j) c[j - 1] = 0.5 * (1.0 - std::cos(j * std::numbers::pi / m));
      c[m - 1] = 1.0;
      break;
    case AbscissaeKind::Custom:
      throw std::invalid_argument("make_abscissae: custom abscissae must be given explicitly");
  }
  return AbscissaeSet(kind, std::move(c));
}

LagrangeBasis::LagrangeBasis(std::span<const double> inner_abscissae) {
  nodes_.reserve(inner_abscissae.size() + 1);
  nodes_.push_back(0.0);
  nodes_.insert(nodes_.end(), inner_abscissae.begin(), inner_abscissae.end());
  const std::size_t n = nodes_.size();

  bary_.assign(n, 1.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      if (k != j) bary_[j] /= (nodes_[j] - nodes_[k]);
    }
  }

  diff_.assign(n * n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double diag = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == k) continue;
      const double d = (bary_[j] / bary_[k]) / (nodes_[k] - nodes_[j]);
      diff_[k * n + j] = d;
      diag -= d;
    }
    diff_[k * n + k] = diag;
  }

  right_end_.assign(n, 0.0);
  values(1.0, right_end_);
}

void LagrangeBasis::values(double u, std::span<double> out) const {
  const std::size_t n = nodes_.size();
  // A node reached through t -> u rounding is still that node.
  constexpr double snap = 8.0 * std::numeric_limits<double>::epsilon();
  for (std::size_t j = 0; j < n; ++j) {
    if (std::abs(u - nodes_[j]) <= snap) {
      std::fill(out.begin(), out.begin() + n, 0.0);
      out[j] = 1.0;
      return;
    }
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = bary_[j] / (u - nodes_[j]);
    sum += out[j];
  }
  for (std::size_t j = 0; j < n; ++j) out[j] /= sum;
}

void LagrangeBasis::derivatives(double u, std::span<double> out) const {
  const std::size_t n = nodes_.size();
  // l_j'(u) = sum_k l_k(u) D(k, j): the derivative is a polynomial of lower
  // degree, so interpolating its nodal values is exact.
  std::array<double, kMaxBasisSize> ell;
  double* l = ell.data();
  values(u, std::span<double>(l, n));
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += l[k] * diff_[k * n + j];
    out[j] = s;
  }
}

CollocationGrid::CollocationGrid(int intervals, AbscissaeSet abscissae)
    : intervals_(intervals), abscissae_(std::move(abscissae)), basis_(abscissae_.c()) {
  if (intervals < 1) throw std::invalid_argument("build_grid: number of intervals must be positive");
}

std::vector<double> CollocationGrid::outer_nodes() const {
  std::vector<double> t(intervals_ + 1);
  for (int i = 0; i <= intervals_; ++i) t[i] = static_cast<double>(i) / intervals_;
  return t;
}

double CollocationGrid::collocation_node(int i, int j) const {
  return (static_cast<double>(i - 1) + abscissae_.c()[j - 1]) / intervals_;
}

std::vector<double> CollocationGrid::collocation_nodes() const {
  std::vector<double> t;
  t.reserve(static_cast<std::size_t>(intervals_) * degree());
  for (int i = 1; i <= intervals_; ++i)
    for (int j = 1; j <= degree(); ++j) t.push_back(collocation_node(i, j));
  return t;
}

double CollocationGrid::node(std::size_t k) const {
  if (k == 0) return 0.0;
  const std::size_t m = degree();
  return collocation_node(static_cast<int>((k - 1) / m) + 1, static_cast<int>((k - 1) % m) + 1);
}

MeshLocation CollocationGrid::locate(double t) const {
  const double x = t * intervals_;
  const double k = std::round(x);
  // Points within a few ulps of an outer node are treated as that node.
  if (std::abs(x - k) <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, x)) {
    if (k <= 0.0) return {0, 0.0};
    const auto idx = std::min(static_cast<std::size_t>(k), static_cast<std::size_t>(intervals_));
    return {idx - 1, 1.0};
  }
  const double f = std::floor(x);
  if (f < 0.0) return {0, 0.0};
  const auto idx = static_cast<std::size_t>(f);
  if (idx >= static_cast<std::size_t>(intervals_)) return {static_cast<std::size_t>(intervals_) - 1, 1.0};
  return {idx, x - f};
}

std::shared_ptr<const CollocationGrid> build_grid(int intervals, const AbscissaeSet& abscissae) {
  return std::make_shared<const CollocationGrid>(intervals, abscissae);
}

PiecewisePolynomial::PiecewisePolynomial(std::shared_ptr<const CollocationGrid> grid, std::size_t dim,
                                         std::vector<double> values)
    : grid_(std::move(grid)), dim_(dim), values_(std::move(values)) {
  if (!grid_) throw std::invalid_argument("PiecewisePolynomial: null grid");
  if (dim_ == 0) throw std::invalid_argument("PiecewisePolynomial: dimension must be positive");
  if (values_.size() != grid_->node_count() * dim_)
    throw std::invalid_argument("PiecewisePolynomial: expected " + std::to_string(grid_->node_count() * dim_) +
                                " values, got " + std::to_string(values_.size()));
  const std::size_t L = grid_->intervals();
  const std::size_t m = grid_->degree();
  const std::size_t n = m + 1;
  const auto right = grid_->basis().right_end();
  local_.assign(L * n * dim_, 0.0);
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t c = 0; c < dim_; ++c) {
      double left;
      if (i == 0) {
        left = values_[c];
      } else {
        left = 0.0;
        for (std::size_t l = 0; l < n; ++l) left += right[l] * local_[((i - 1) * n + l) * dim_ + c];
      }
      local_[(i * n) * dim_ + c] = left;
      for (std::size_t l = 1; l < n; ++l) local_[(i * n + l) * dim_ + c] = values_[(1 + i * m + (l - 1)) * dim_ + c];
    }
  }
}

double PiecewisePolynomial::component(const MeshLocation& loc, std::size_t c) const {
  const auto& basis = grid_->basis();
  const std::size_t n = basis.size();
  std::array<double, kMaxBasisSize> ell;
  double* l = ell.data();
  basis.values(loc.u, std::span<double>(l, n));
  const double* p = &local_[(loc.interval * n) * dim_ + c];
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += l[j] * p[j * dim_];
  return s;
}

double PiecewisePolynomial::component_derivative(const MeshLocation& loc, std::size_t c) const {
  const auto& basis = grid_->basis();
  const std::size_t n = basis.size();
  std::array<double, kMaxBasisSize> ell;
  double* l = ell.data();
  basis.derivatives(loc.u, std::span<double>(l, n));
  const double* p = &local_[(loc.interval * n) * dim_ + c];
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += l[j] * p[j * dim_];
  return s * grid_->intervals();
}

PiecewisePolynomial::Sample PiecewisePolynomial::eval(double t) const {
  const MeshLocation loc = grid_->locate(clamp_unit(t));
  Sample out{std::vector<double>(dim_), std::vector<double>(dim_)};
  for (std::size_t c = 0; c < dim_; ++c) {
    out.value[c] = component(loc, c);
    out.derivative[c] = component_derivative(loc, c);
  }
  return out;
}

PiecewisePolynomial restrict_function(const std::function<std::vector<double>(double)>& f,
                                      std::shared_ptr<const CollocationGrid> grid, std::size_t dim) {
  std::vector<double> values(grid->node_count() * dim);
  for (std::size_t k = 0; k < grid->node_count(); ++k) {
    const std::vector<double> v = f(grid->node(k));
    if (v.size() != dim) throw std::invalid_argument("restrict_function: evaluator returned wrong dimension");
    std::copy(v.begin(), v.end(), values.begin() + k * dim);
  }
  return PiecewisePolynomial(std::move(grid), dim, std::move(values));
}

double clamp_unit(double t) {
  if (!(t >= -kUnitTolerance && t <= 1.0 + kUnitTolerance))
    throw std::domain_error("evaluation point " + std::to_string(t) + " outside [0, 1]");
  return std::clamp(t, 0.0, 1.0);
}

double wrap_periodic(double s) {
  if (s < -1.0 - kUnitTolerance)
    throw DelayExceedsPeriod("history argument " + std::to_string(s) +
                             " reaches beyond one period (delay exceeds period)");
  if (s > 1.0 + kUnitTolerance) throw std::domain_error("evaluation point " + std::to_string(s) + " beyond 1");
  if (s < 0.0) s += 1.0;
  return std::clamp(s, 0.0, 1.0);
}

PeriodicSample eval_periodic(const DiscreteSolution& sol, double s) {
  const MeshLocation loc = sol.grid().locate(wrap_periodic(s));
  PeriodicSample out;
  out.x.resize(sol.dim_x());
  out.y.resize(sol.dim_y());
  out.y_deriv.resize(sol.dim_y());
  for (std::size_t c = 0; c < sol.dim_x(); ++c) out.x[c] = sol.mu.component(loc, c);
  for (std::size_t c = 0; c < sol.dim_y(); ++c) {
    out.y[c] = sol.nu.component(loc, c);
    out.y_deriv[c] = sol.nu.component_derivative(loc, c);
  }
  return out;
}

}  // namespace percol
