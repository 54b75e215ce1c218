#include "percol/collocation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "percol/errors.hpp"

namespace percol {

namespace {

struct TapeEntry {
  Block block;
  std::size_t component;
  int derivative;
  double s;
  MeshLocation loc;
  double value;
};

// Evaluates like SolutionEvaluator and records every query.
class RecordingEvaluator final : public PointEvaluator {
 public:
  explicit RecordingEvaluator(const DiscreteSolution& sol) : sol_(&sol) {}

  double query(Block block, std::size_t component, double s, int derivative) override {
    const MeshLocation loc = sol_->grid().locate(wrap_periodic(s));
    const PiecewisePolynomial& p = block == Block::X ? sol_->mu : sol_->nu;
    const double v = derivative == 0 ? p.component(loc, component) : p.component_derivative(loc, component);
    tape.push_back({block, component, derivative, s, loc, v});
    return v;
  }

  std::vector<TapeEntry> tape;

 private:
  const DiscreteSolution* sol_;
};

// Plays a recorded tape back with one value perturbed.
class ReplayEvaluator final : public PointEvaluator {
 public:
  void reset(const std::vector<TapeEntry>* tape, std::size_t perturbed, double perturbed_value) {
    tape_ = tape;
    next_ = 0;
    perturbed_ = perturbed;
    perturbed_value_ = perturbed_value;
  }

  double query(Block block, std::size_t component, double s, int derivative) override {
    if (next_ >= tape_->size()) throw std::logic_error(kMismatch);
    const TapeEntry& e = (*tape_)[next_];
    if (e.block != block || e.component != component || e.derivative != derivative || e.s != s)
      throw std::logic_error(kMismatch);
    return next_++ == perturbed_ ? perturbed_value_ : e.value;
  }

  void expect_consumed() const {
    if (next_ != tape_->size()) throw std::logic_error(kMismatch);
  }

 private:
  static constexpr const char* kMismatch =
      "right-hand side queried the state differently when replayed; it must be a pure function "
      "(use the forward-difference Jacobian for state-dependent query patterns)";
  const std::vector<TapeEntry>* tape_ = nullptr;
  std::size_t next_ = 0;
  std::size_t perturbed_ = 0;
  double perturbed_value_ = 0.0;
};

void check_finite_rows(std::span<const double> r) {
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!std::isfinite(r[i]))
      throw NonFiniteResidual(i, NonFiniteResidual::kNoColumn,
                              "non-finite residual in row " + std::to_string(i));
  }
}

void check_finite_matrix(const Eigen::MatrixXd& J) {
  for (Eigen::Index j = 0; j < J.cols(); ++j)
    for (Eigen::Index i = 0; i < J.rows(); ++i)
      if (!std::isfinite(J(i, j)))
        throw NonFiniteResidual(static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                                "non-finite Jacobian entry at (" + std::to_string(i) + ", " + std::to_string(j) +
                                    ")");
}

double perturbation(double value, double step_scale) {
  const double trial = value + step_scale * std::max(std::abs(value), 1.0);
  return trial - value;
}

}  // namespace

std::vector<double> pack(const DiscreteSolution& sol) {
  std::vector<double> z;
  z.reserve(sol.mu.values().size() + sol.nu.values().size() + 1);
  z.insert(z.end(), sol.mu.values().begin(), sol.mu.values().end());
  z.insert(z.end(), sol.nu.values().begin(), sol.nu.values().end());
  z.push_back(sol.omega);
  return z;
}

DiscreteSolution unpack(std::span<const double> z, std::shared_ptr<const CollocationGrid> grid, std::size_t dim_x,
                        std::size_t dim_y) {
  if (!grid) throw std::invalid_argument("unpack: null grid");
  const SolutionLayout layout{dim_x, dim_y, grid->node_count()};
  if (z.size() != layout.size())
    throw std::invalid_argument("unpack: expected " + std::to_string(layout.size()) + " unknowns, got " +
                                std::to_string(z.size()));
  const auto mid = z.begin() + static_cast<std::ptrdiff_t>(dim_x * layout.nodes);
  const auto end = mid + static_cast<std::ptrdiff_t>(dim_y * layout.nodes);
  return DiscreteSolution{PiecewisePolynomial(grid, dim_x, std::vector<double>(z.begin(), mid)),
                          PiecewisePolynomial(grid, dim_y, std::vector<double>(mid, end)), z.back()};
}

double sup_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

CollocationProblem::CollocationProblem(CoupledSystem system, PhaseCondition phase,
                                       std::shared_ptr<const CollocationGrid> grid, ReBoundaryRow re_boundary)
    : system_(std::move(system)), phase_(std::move(phase)), grid_(std::move(grid)), re_boundary_(re_boundary) {
  if (!grid_) throw std::invalid_argument("collocation: null grid");
  if (re_boundary_ == ReBoundaryRow::Auto)
    re_boundary_ = grid_->abscissae().includes_right_end() ? ReBoundaryRow::Periodicity
                                                           : ReBoundaryRow::CollocationAtZero;
  if (system_.dim_x == 0 || system_.dim_y == 0) throw std::invalid_argument("collocation: empty state block");
  if (!system_.rhs_F || !system_.rhs_G) throw std::invalid_argument("collocation: missing right-hand side");
  if (!(system_.tau > 0.0)) throw std::invalid_argument("collocation: delay must be positive");
  validate_phase(phase_, system_.dim_x, system_.dim_y);
  layout_ = SolutionLayout{system_.dim_x, system_.dim_y, grid_->node_count()};
  rows_ = ResidualLayout{system_.dim_x, system_.dim_y, grid_->node_count() - 1};
  collocation_times_ = grid_->collocation_nodes();
  if (const auto* integral = std::get_if<IntegralPhase>(&phase_))
    phase_quadrature_ = integral_phase_quadrature(*integral, *grid_, system_.dim_x, system_.dim_y);
}

DiscreteSolution CollocationProblem::solution(std::span<const double> z) const {
  return unpack(z, grid_, system_.dim_x, system_.dim_y);
}

void CollocationProblem::check_omega(double omega) const {
  if (!(omega >= system_.tau))
    throw DelayExceedsPeriod("period " + std::to_string(omega) + " is shorter than the delay " +
                             std::to_string(system_.tau));
}

std::size_t CollocationProblem::group_first_row(std::size_t g) const {
  const std::size_t nc = rows_.collocation_nodes;
  if (g < nc) return rows_.re_row(g, 0);
  if (g < 2 * nc) return rows_.rfde_row(g - nc, 0);
  if (g == 2 * nc) return rows_.periodicity_row(Block::X, 0);
  return rows_.phase_row();
}

std::size_t CollocationProblem::group_size(std::size_t g) const {
  const std::size_t nc = rows_.collocation_nodes;
  if (g < nc) return system_.dim_x;
  if (g < 2 * nc) return system_.dim_y;
  if (g == 2 * nc) return system_.dim_x + system_.dim_y;
  return 1;
}

void CollocationProblem::evaluate_group(std::size_t g, PointEvaluator& eval, double omega,
                                        std::span<double> out) const {
  const std::size_t nc = rows_.collocation_nodes;
  const std::size_t dx = system_.dim_x;
  const std::size_t dy = system_.dim_y;
  if (g < nc) {
    const double t = collocation_times_[g];
    const StateAccessor state(eval, t, dx, dy);
    std::vector<double> f(dx);
    system_.rhs_F(state, omega, f);
    for (std::size_t c = 0; c < dx; ++c) out[c] = eval.query(Block::X, c, t, 0) - f[c];
    return;
  }
  if (g < 2 * nc) {
    const double t = collocation_times_[g - nc];
    const StateAccessor state(eval, t, dx, dy);
    std::vector<double> G(dy);
    system_.rhs_G(state, omega, G);
    for (std::size_t c = 0; c < dy; ++c) out[c] = eval.query(Block::Y, c, t, 1) - omega * G[c];
    return;
  }
  if (g == 2 * nc) {
    if (re_boundary_ == ReBoundaryRow::CollocationAtZero) {
      const StateAccessor state(eval, 0.0, dx, dy);
      std::vector<double> f(dx);
      system_.rhs_F(state, omega, f);
      for (std::size_t c = 0; c < dx; ++c) out[c] = eval.query(Block::X, c, 0.0, 0) - f[c];
    } else {
      for (std::size_t c = 0; c < dx; ++c)
        out[c] = eval.query(Block::X, c, 0.0, 0) - eval.query(Block::X, c, 1.0, 0);
    }
    for (std::size_t c = 0; c < dy; ++c)
      out[dx + c] = eval.query(Block::Y, c, 0.0, 0) - eval.query(Block::Y, c, 1.0, 0);
    return;
  }
  if (const auto* anchor = std::get_if<AnchorPhase>(&phase_)) {
    out[0] = eval.query(anchor->block, anchor->component, 0.0, 0) - anchor->target;
    return;
  }
  double sum = 0.0;
  for (const auto& term : phase_quadrature_.terms)
    sum += term.weight * eval.query(term.block, term.component, term.time, 0);
  out[0] = sum;
}

std::vector<double> CollocationProblem::residual(std::span<const double> z, Execution execution) const {
  const DiscreteSolution sol = solution(z);
  check_omega(sol.omega);
  std::vector<double> r(size());
  for_each_index(
      group_count(), execution, [&] { return SolutionEvaluator(sol); },
      [&](SolutionEvaluator& eval, std::size_t g) {
        evaluate_group(g, eval, sol.omega, std::span<double>(r).subspan(group_first_row(g), group_size(g)));
      });
  check_finite_rows(r);
  return r;
}

Eigen::MatrixXd CollocationProblem::jacobian(std::span<const double> z, JacobianMethod method,
                                             Execution execution) const {
  return method == JacobianMethod::Structured ? jacobian_structured(z, default_fd_step(), execution)
                                              : jacobian_forward_difference(z, default_fd_step(), execution);
}

Eigen::MatrixXd CollocationProblem::jacobian_forward_difference(std::span<const double> z, double step_scale,
                                                                Execution execution) const {
  const std::size_t n = size();
  const std::vector<double> r0 = residual(z, execution);
  Eigen::MatrixXd J(n, n);
  for_each_index(
      n, execution, [&] { return std::vector<double>(z.begin(), z.end()); },
      [&](std::vector<double>& zk, std::size_t k) {
        const double delta = perturbation(z[k], step_scale);
        zk[k] = z[k] + delta;
        const std::vector<double> rk = residual(zk, Execution::Serial);
        zk[k] = z[k];
        for (std::size_t i = 0; i < n; ++i) J(i, k) = (rk[i] - r0[i]) / delta;
      });
  check_finite_matrix(J);
  return J;
}

Eigen::MatrixXd CollocationProblem::jacobian_structured(std::span<const double> z, double step_scale,
                                                        Execution execution) const {
  const std::size_t n = size();
  const DiscreteSolution sol = solution(z);
  const double omega = sol.omega;
  check_omega(omega);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);

  // The omega column: query positions move with omega, so difference the
  // whole residual.
  {
    const std::vector<double> r0 = residual(z, execution);
    std::vector<double> zw(z.begin(), z.end());
    const double delta = perturbation(omega, step_scale);
    zw.back() = omega + delta;
    const std::vector<double> rw = residual(zw, execution);
    for (std::size_t i = 0; i < n; ++i) J(i, n - 1) = (rw[i] - r0[i]) / delta;
  }

  const CollocationGrid& grid = *grid_;
  const std::size_t L = grid.intervals();
  const std::size_t m = grid.degree();
  const std::size_t nb = m + 1;
  const auto right = grid.basis().right_end();
  const std::size_t dims[2] = {system_.dim_x, system_.dim_y};

  struct Scratch {
    RecordingEvaluator rec;
    ReplayEvaluator replay;
    std::vector<double> out0, outq;
    std::vector<double> dR;       // group rows x queries, row-major
    std::vector<double> weights;  // queries x nb
    std::vector<double> grad[2];  // local-node gradients per block
  };

  for_each_index(
      group_count(), execution,
      [&] {
        Scratch s{RecordingEvaluator(sol), ReplayEvaluator(), {}, {}, {}, {}, {}};
        s.grad[0].assign(L * nb * dims[0], 0.0);
        s.grad[1].assign(L * nb * dims[1], 0.0);
        return s;
      },
      [&](Scratch& s, std::size_t g) {
        const std::size_t k = group_size(g);
        const std::size_t row0 = group_first_row(g);
        s.out0.assign(k, 0.0);
        s.outq.assign(k, 0.0);
        s.rec.tape.clear();
        evaluate_group(g, s.rec, omega, s.out0);
        const auto& tape = s.rec.tape;
        const std::size_t Q = tape.size();

        // Sensitivity of the group's rows to each queried value.
        s.dR.assign(k * Q, 0.0);
        for (std::size_t q = 0; q < Q; ++q) {
          const double v = tape[q].value;
          const double delta = perturbation(v, step_scale);
          s.replay.reset(&tape, q, v + delta);
          evaluate_group(g, s.replay, omega, s.outq);
          s.replay.expect_consumed();
          for (std::size_t r = 0; r < k; ++r) s.dR[r * Q + q] = (s.outq[r] - s.out0[r]) / delta;
        }

        // How each queried value depends on the local nodal values.
        s.weights.assign(Q * nb, 0.0);
        std::size_t touched[2] = {0, 0};
        bool any[2] = {false, false};
        for (std::size_t q = 0; q < Q; ++q) {
          const auto& e = tape[q];
          std::span<double> w(s.weights.data() + q * nb, nb);
          if (e.derivative == 0) {
            grid.basis().values(e.loc.u, w);
          } else {
            grid.basis().derivatives(e.loc.u, w);
            for (double& x : w) x *= static_cast<double>(L);
          }
          const int b = e.block == Block::X ? 0 : 1;
          touched[b] = std::max(touched[b], e.loc.interval);
          any[b] = true;
        }

        for (std::size_t r = 0; r < k; ++r) {
          const std::size_t row = row0 + r;
          for (int b = 0; b < 2; ++b)
            if (any[b]) std::fill(s.grad[b].begin(), s.grad[b].begin() + (touched[b] + 1) * nb * dims[b], 0.0);
          for (std::size_t q = 0; q < Q; ++q) {
            const double coef = s.dR[r * Q + q];
            if (coef == 0.0) continue;
            const auto& e = tape[q];
            const int b = e.block == Block::X ? 0 : 1;
            const std::size_t d = dims[b];
            double* gbase = s.grad[b].data() + e.loc.interval * nb * d + e.component;
            const double* w = s.weights.data() + q * nb;
            for (std::size_t l = 0; l < nb; ++l) gbase[l * d] += coef * w[l];
          }
          for (int b = 0; b < 2; ++b) {
            if (!any[b]) continue;
            const std::size_t d = dims[b];
            auto& G = s.grad[b];
            // The left value of interval i is the right end of interval i-1.
            for (std::size_t i = touched[b]; i >= 1; --i) {
              for (std::size_t c = 0; c < d; ++c) {
                const double g0 = G[(i * nb) * d + c];
                if (g0 == 0.0) continue;
                for (std::size_t l = 0; l < nb; ++l) G[((i - 1) * nb + l) * d + c] += right[l] * g0;
              }
            }
            for (std::size_t c = 0; c < d; ++c) {
              const std::size_t col0 = b == 0 ? layout_.mu_index(0, c) : layout_.nu_index(0, c);
              J(row, col0) = G[c];
            }
            for (std::size_t i = 0; i <= touched[b]; ++i) {
              for (std::size_t l = 1; l < nb; ++l) {
                const std::size_t node = 1 + i * m + (l - 1);
                for (std::size_t c = 0; c < d; ++c) {
                  const std::size_t col = b == 0 ? layout_.mu_index(node, c) : layout_.nu_index(node, c);
                  J(row, col) = G[((i * nb) + l) * d + c];
                }
              }
            }
          }
        }
      });
  check_finite_matrix(J);
  return J;
}

std::vector<double> assemble_residual(const CoupledSystem& system, const PhaseCondition& phase,
                                      std::shared_ptr<const CollocationGrid> grid, std::span<const double> z) {
  return CollocationProblem(system, phase, std::move(grid)).residual(z);
}

Eigen::MatrixXd assemble_jacobian(const CoupledSystem& system, const PhaseCondition& phase,
                                  std::shared_ptr<const CollocationGrid> grid, std::span<const double> z,
                                  double step_scale) {
  return CollocationProblem(system, phase, std::move(grid)).jacobian_forward_difference(z, step_scale);
}

}  // namespace percol
