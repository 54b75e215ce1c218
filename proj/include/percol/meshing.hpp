#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace percol {

/// Upper bound on m + 1; per-interval scratch lives on the stack.
inline constexpr std::size_t kMaxBasisSize = 32;

enum class AbscissaeKind { GaussLegendre, ChebyshevExtrema, Custom };

std::string_view to_string(AbscissaeKind kind);
AbscissaeKind parse_abscissae_kind(std::string_view name);

/// Inner abscissae 0 < c_1 < ... < c_m <= 1 of the reference interval.
class AbscissaeSet {
 public:
  AbscissaeSet(AbscissaeKind kind, std::vector<double> c);

  AbscissaeKind kind() const { return kind_; }
  int degree() const { return static_cast<int>(c_.size()); }
  std::span<const double> c() const { return c_; }
  bool includes_right_end() const { return c_.back() == 1.0; }

 private:
  AbscissaeKind kind_;
  std::vector<double> c_;
};

/// Gauss-Legendre roots shifted to (0,1), or the Chebyshev extrema
/// (1 - cos(j pi / m)) / 2 for j = 1..m.
AbscissaeSet make_abscissae(AbscissaeKind kind, int m);

/// Lagrange basis on the reference nodes {0, c_1, ..., c_m}, evaluated in
/// barycentric form.
class LagrangeBasis {
 public:
  explicit LagrangeBasis(std::span<const double> inner_abscissae);

  std::size_t size() const { return nodes_.size(); }
  std::span<const double> nodes() const { return nodes_; }

  /// l_j(u) for all j.
  void values(double u, std::span<double> out) const;
  /// l_j'(u) for all j (derivative in the reference coordinate).
  void derivatives(double u, std::span<double> out) const;
  /// l_j(1): how the right end value of an interval depends on its nodal values.
  std::span<const double> right_end() const { return right_end_; }
  /// D(k, j) = l_j'(c_k), row-major.
  double diff(std::size_t k, std::size_t j) const { return diff_[k * size() + j]; }

 private:
  std::vector<double> nodes_;
  std::vector<double> bary_;
  std::vector<double> diff_;
  std::vector<double> right_end_;
};

/// Position of a point of [0,1] inside the uniform mesh.
struct MeshLocation {
  std::size_t interval;  // 0-based
  double u;              // local coordinate in [0,1]
};

/// Uniform outer mesh t_i = i/L with inner nodes t_{i,j} = t_{i-1} + c_j h.
class CollocationGrid {
 public:
  CollocationGrid(int intervals, AbscissaeSet abscissae);

  int intervals() const { return intervals_; }
  int degree() const { return abscissae_.degree(); }
  double h() const { return 1.0 / intervals_; }
  const AbscissaeSet& abscissae() const { return abscissae_; }
  const LagrangeBasis& basis() const { return basis_; }

  std::vector<double> outer_nodes() const;
  /// t_{i,j} for 1-based interval i and 1-based abscissa j.
  double collocation_node(int i, int j) const;
  /// All t_{i,j}, interval-major.
  std::vector<double> collocation_nodes() const;
  /// 1 + L m representation nodes: 0 followed by all t_{i,j}.
  std::size_t node_count() const { return 1 + static_cast<std::size_t>(intervals_) * degree(); }
  double node(std::size_t k) const;

  /// Owning interval of t in [0,1]. Interior outer nodes belong to the
  /// interval on their left.
  MeshLocation locate(double t) const;

 private:
  int intervals_;
  AbscissaeSet abscissae_;
  LagrangeBasis basis_;
};

std::shared_ptr<const CollocationGrid> build_grid(int intervals, const AbscissaeSet& abscissae);

/// Continuous piecewise polynomial of degree m with values in R^dim, given by
/// its values at the 1 + L m representation nodes.
class PiecewisePolynomial {
 public:
  PiecewisePolynomial(std::shared_ptr<const CollocationGrid> grid, std::size_t dim,
                      std::vector<double> values);

  const CollocationGrid& grid() const { return *grid_; }
  const std::shared_ptr<const CollocationGrid>& grid_ptr() const { return grid_; }
  std::size_t dim() const { return dim_; }
  /// Node-major: values()[k * dim + c].
  std::span<const double> values() const { return values_; }

  /// Nodal value l of interval i (l = 0 is the left end, chained from the
  /// previous interval), component c.
  double local_value(std::size_t interval, std::size_t l, std::size_t c) const {
    return local_[(interval * grid_->basis().size() + l) * dim_ + c];
  }

  double component(const MeshLocation& loc, std::size_t c) const;
  double component_derivative(const MeshLocation& loc, std::size_t c) const;

  struct Sample {
    std::vector<double> value;
    std::vector<double> derivative;
  };
  /// Value and derivative at t in [0,1]; overshoot up to 1e-12 is clamped.
  Sample eval(double t) const;

 private:
  std::shared_ptr<const CollocationGrid> grid_;
  std::size_t dim_;
  std::vector<double> values_;
  std::vector<double> local_;
};

inline PiecewisePolynomial::Sample eval_piecewise(const PiecewisePolynomial& p, double t) {
  return p.eval(t);
}

/// Samples f at the representation nodes.
PiecewisePolynomial restrict_function(const std::function<std::vector<double>(double)>& f,
                                      std::shared_ptr<const CollocationGrid> grid, std::size_t dim);

/// Maps s in [-1,1] into [0,1] by the periodic shift; throws
/// DelayExceedsPeriod below -1 and domain_error above 1.
double wrap_periodic(double s);

/// Clamps t to [0,1] tolerating 1e-12 of overshoot, otherwise domain_error.
double clamp_unit(double t);

/// Periodic solution candidate: RE part mu, RFDE part nu, period omega.
struct DiscreteSolution {
  PiecewisePolynomial mu;
  PiecewisePolynomial nu;
  double omega;

  const CollocationGrid& grid() const { return mu.grid(); }
  std::size_t dim_x() const { return mu.dim(); }
  std::size_t dim_y() const { return nu.dim(); }
};

struct PeriodicSample {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> y_deriv;
};

/// Evaluates the solution at s in [-1,1], shifting negative arguments by one
/// period.
PeriodicSample eval_periodic(const DiscreteSolution& sol, double s);

}  // namespace percol
