#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "percol/meshing.hpp"
#include "percol/parallel.hpp"
#include "percol/problem.hpp"

namespace percol {

/// Unknowns (mu_{1,0}, ..., mu_{L,m}, nu_{1,0}, ..., nu_{L,m}, omega), each
/// node carrying dim_x resp. dim_y components.
struct SolutionLayout {
  std::size_t dim_x = 1;
  std::size_t dim_y = 1;
  std::size_t nodes = 1;

  std::size_t size() const { return (dim_x + dim_y) * nodes + 1; }
  std::size_t mu_index(std::size_t node, std::size_t c) const { return node * dim_x + c; }
  std::size_t nu_index(std::size_t node, std::size_t c) const { return dim_x * nodes + node * dim_y + c; }
  std::size_t omega_index() const { return size() - 1; }
};

/// Row order of the residual: RE collocation rows (node-major), RFDE
/// collocation rows, RE boundary row, RFDE periodicity, phase.
struct ResidualLayout {
  std::size_t dim_x = 1;
  std::size_t dim_y = 1;
  std::size_t collocation_nodes = 1;  // L m

  std::size_t re_row(std::size_t node, std::size_t c) const { return node * dim_x + c; }
  std::size_t rfde_row(std::size_t node, std::size_t c) const {
    return collocation_nodes * dim_x + node * dim_y + c;
  }
  std::size_t periodicity_row(Block block, std::size_t c) const {
    return collocation_nodes * (dim_x + dim_y) + (block == Block::X ? c : dim_x + c);
  }
  std::size_t phase_row() const { return size() - 1; }
  std::size_t size() const { return (collocation_nodes + 1) * (dim_x + dim_y) + 1; }
};

std::vector<double> pack(const DiscreteSolution& sol);
DiscreteSolution unpack(std::span<const double> z, std::shared_ptr<const CollocationGrid> grid, std::size_t dim_x,
                        std::size_t dim_y);

/// How the Jacobian is approximated.
///  - ForwardDifference: column k = (R(z + d_k e_k) - R(z)) / d_k.
///  - Structured: each row is differenced with respect to the state values
///    it reads, then mapped to the unknowns through the (linear, exact)
///    interpolation weights; only the omega column is differenced on z.
enum class JacobianMethod { ForwardDifference, Structured };

/// The boundary row of the RE block.
///  - Periodicity: mu(0) = mu(1).
///  - CollocationAtZero: the RE imposed at t = 0, with the history wrapped.
/// Without a collocation node at the right end of each interval, the chained
/// left values carry a mode that vanishes at every collocation node and
/// integrates to zero over each interval; mu(0) = mu(1) leaves it almost
/// undetermined, the RE at t = 0 fixes it. Auto picks Periodicity when
/// c_m = 1 (there the RE at 0 and at 1 would nearly coincide) and
/// CollocationAtZero otherwise.
enum class ReBoundaryRow { Auto, Periodicity, CollocationAtZero };

/// The collocation equations for one system, phase condition and mesh.
class CollocationProblem {
 public:
  CollocationProblem(CoupledSystem system, PhaseCondition phase, std::shared_ptr<const CollocationGrid> grid,
                     ReBoundaryRow re_boundary = ReBoundaryRow::Auto);

  std::size_t size() const { return layout_.size(); }
  const SolutionLayout& layout() const { return layout_; }
  const ResidualLayout& rows() const { return rows_; }
  const CoupledSystem& system() const { return system_; }
  const PhaseCondition& phase() const { return phase_; }
  const std::shared_ptr<const CollocationGrid>& grid() const { return grid_; }
  ReBoundaryRow re_boundary() const { return re_boundary_; }

  DiscreteSolution solution(std::span<const double> z) const;

  std::vector<double> residual(std::span<const double> z, Execution execution = Execution::Parallel) const;

  Eigen::MatrixXd jacobian(std::span<const double> z, JacobianMethod method = JacobianMethod::Structured,
                           Execution execution = Execution::Parallel) const;

  Eigen::MatrixXd jacobian_forward_difference(std::span<const double> z, double step_scale,
                                              Execution execution = Execution::Parallel) const;
  Eigen::MatrixXd jacobian_structured(std::span<const double> z, double step_scale,
                                      Execution execution = Execution::Parallel) const;

  /// Independent row groups: one per collocation node and equation type,
  /// then periodicity, then phase.
  std::size_t group_count() const { return 2 * rows_.collocation_nodes + 2; }
  std::size_t group_first_row(std::size_t g) const;
  std::size_t group_size(std::size_t g) const;
  void evaluate_group(std::size_t g, PointEvaluator& eval, double omega, std::span<double> out) const;

 private:
  void check_omega(double omega) const;

  CoupledSystem system_;
  PhaseCondition phase_;
  std::shared_ptr<const CollocationGrid> grid_;
  ReBoundaryRow re_boundary_;
  SolutionLayout layout_;
  ResidualLayout rows_;
  std::vector<double> collocation_times_;
  PhaseQuadrature phase_quadrature_;
};

inline double default_fd_step() { return std::sqrt(std::numeric_limits<double>::epsilon()); }

std::vector<double> assemble_residual(const CoupledSystem& system, const PhaseCondition& phase,
                                      std::shared_ptr<const CollocationGrid> grid, std::span<const double> z);

/// Plain forward differences, step_scale * max(|z_k|, 1) per column.
Eigen::MatrixXd assemble_jacobian(const CoupledSystem& system, const PhaseCondition& phase,
                                  std::shared_ptr<const CollocationGrid> grid, std::span<const double> z,
                                  double step_scale = default_fd_step());

double sup_norm(std::span<const double> v);

}  // namespace percol
