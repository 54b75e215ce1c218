#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "percol/meshing.hpp"
#include "percol/quadrature.hpp"

namespace percol {

/// The RE unknown (x, stored as mu) or the RFDE unknown (y, stored as nu).
enum class Block { X, Y };

/// Scalar point queries of the current iterate. Times are absolute and
/// rescaled, s in [-1, 1]; negative times are shifted by one period.
class PointEvaluator {
 public:
  virtual ~PointEvaluator() = default;
  /// derivative = 0 for the value, 1 for the first derivative in rescaled time.
  virtual double query(Block block, std::size_t component, double s, int derivative) = 0;
};

/// Evaluates a DiscreteSolution directly.
class SolutionEvaluator final : public PointEvaluator {
 public:
  explicit SolutionEvaluator(const DiscreteSolution& sol) : sol_(&sol) {}
  double query(Block block, std::size_t component, double s, int derivative) override;

 private:
  const DiscreteSolution* sol_;
};

/// History of the iterate seen from a collocation time t: x(theta) means
/// x(t + theta) with theta in [-1, 0] in rescaled time.
class StateAccessor {
 public:
  StateAccessor(PointEvaluator& eval, double t, std::size_t dim_x, std::size_t dim_y)
      : eval_(&eval), t_(t), dim_x_(dim_x), dim_y_(dim_y) {}

  double x(double theta, std::size_t c = 0) const { return eval_->query(Block::X, c, t_ + theta, 0); }
  double y(double theta, std::size_t c = 0) const { return eval_->query(Block::Y, c, t_ + theta, 0); }
  double y_deriv(double theta, std::size_t c = 0) const { return eval_->query(Block::Y, c, t_ + theta, 1); }

  double time() const { return t_; }
  std::size_t dim_x() const { return dim_x_; }
  std::size_t dim_y() const { return dim_y_; }

 private:
  PointEvaluator* eval_;
  double t_;
  std::size_t dim_x_;
  std::size_t dim_y_;
};

/// out receives dim_x (for F) or dim_y (for G) values. Must be a pure
/// function of its arguments: rows are evaluated concurrently and replayed
/// when differentiating.
using RightHandSide = std::function<void(const StateAccessor& state, double omega, std::span<double> out)>;

/// x(t) = F(x_t, y_t), y'(t) = G(x_t, y_t), written in rescaled time. The
/// assembler multiplies G by omega.
struct CoupledSystem {
  std::string name;
  std::size_t dim_x = 1;
  std::size_t dim_y = 1;
  double tau = 1.0;
  RightHandSide rhs_F;
  RightHandSide rhs_G;
  std::map<std::string, double> params;
};

/// Which parts of the state a kernel reads.
enum class KernelArgs { X, Y, XY };

/// K(sigma, x(t + sigma/omega), y(t + sigma/omega)) with sigma in original
/// time. Unused arguments are empty spans.
using Kernel = std::function<void(double sigma, std::span<const double> x, std::span<const double> y,
                                  std::span<double> out)>;

/// Quadrature approximation of  int_a^b K(sigma, x(t + sigma/omega), ...) dsigma
/// with the rule nodes fixed in original time.
class KernelIntegral {
 public:
  KernelIntegral(Kernel kernel, std::size_t out_dim, double a, double b, double tau, QuadratureSpec spec,
                 KernelArgs args = KernelArgs::XY);

  void operator()(const StateAccessor& state, double omega, std::span<double> out) const;
  /// Convenience for out_dim == 1.
  double scalar(const StateAccessor& state, double omega) const;

  const QuadratureRule& rule() const { return rule_; }
  std::size_t out_dim() const { return out_dim_; }

 private:
  Kernel kernel_;
  std::size_t out_dim_;
  QuadratureRule rule_;
  KernelArgs args_;
};

KernelIntegral kernel_integral(Kernel kernel, std::size_t out_dim, double a, double b, double tau,
                               QuadratureSpec spec, KernelArgs args = KernelArgs::XY);

/// Fixes the selected component at t = 0.
struct AnchorPhase {
  Block block = Block::X;
  std::size_t component = 0;
  double target = 0.0;
};

/// int_0^1 <v(t), v_ref'(t)> dt = 0 with v = (x, y).
struct IntegralPhase {
  std::shared_ptr<const DiscreteSolution> reference;
};

using PhaseCondition = std::variant<AnchorPhase, IntegralPhase>;

/// Weights of the integral phase condition on a given primary mesh: the
/// condition is sum_q weight_q * v_{block_q, comp_q}(time_q).
struct PhaseQuadrature {
  struct Term {
    Block block;
    std::size_t component;
    double time;
    double weight;
  };
  std::vector<Term> terms;
};

/// Per-interval Gauss-Legendre with m + 1 nodes on grid, weighted by the
/// reference derivative.
PhaseQuadrature integral_phase_quadrature(const IntegralPhase& phase, const CollocationGrid& grid,
                                          std::size_t dim_x, std::size_t dim_y);

void validate_phase(const PhaseCondition& phase, std::size_t dim_x, std::size_t dim_y);

double phase_residual(const PhaseCondition& phase, const DiscreteSolution& sol);

/// A known periodic solution in rescaled time t in [0, 1] (closed form or a
/// fine-grid solve), with its period.
struct ReferenceSolution {
  std::size_t dim_x = 1;
  std::size_t dim_y = 1;
  double omega = 1.0;
  std::function<void(double t, std::span<double> x, std::span<double> y)> eval;
  /// Optional rescaled-time derivative of y.
  std::function<void(double t, std::span<double> y_deriv)> eval_y_deriv;
};

ReferenceSolution as_reference(std::shared_ptr<const DiscreteSolution> sol);

/// Samples a reference at the representation nodes of grid.
DiscreteSolution restrict_reference(const ReferenceSolution& ref, std::shared_ptr<const CollocationGrid> grid);

}  // namespace percol
