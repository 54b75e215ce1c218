// Acceptance checks. Prints one PASS/FAIL line per criterion; with an
// argument N only criterion N runs. Exit status is nonzero on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "percol/analysis.hpp"
#include "percol/collocation.hpp"
#include "percol/models.hpp"
#include "percol/quadrature.hpp"
#include "percol/solver.hpp"
#include "studies.hpp"

using namespace percol;

namespace {

class Criterion {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
    notes_.push_back((ok ? "" : "!") + what);
  }
  bool passed() const { return failures_.empty(); }
  std::string detail() const {
    std::ostringstream s;
    // Failed checks are marked with '!'.
    for (std::size_t i = 0; i < notes_.size(); ++i) s << (i ? "; " : "") << notes_[i];
    return s.str();
  }

 private:
  std::vector<std::string> notes_;
  std::vector<std::string> failures_;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

bool in(double v, double lo, double hi) { return v >= lo && v <= hi; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. Exact-solution recovery.
void exact_recovery(Criterion& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const double gamma = 4.0;
  const int L = 40;
  const auto g = build_grid(L, make_abscissae(AbscissaeKind::GaussLegendre, 3));
  const CollocationProblem p(quadratic_system(gamma, {QuadratureKind::ClenshawCurtis, 5 * L + 1}),
                             AnchorPhase{Block::X, 0, quadratic_sigma(gamma)}, g);
  const NewtonResult r = newton_solve(p, pack(restrict_reference(quadratic_exact(gamma), g)));
  const ErrorNorms e = error_norm(p.solution(r.z), quadratic_exact(gamma));
  const double t = seconds_since(t0);
  c.require(e.x <= 1e-6, "err_x " + num(e.x) + " <= 1e-6");
  c.require(e.y <= 1e-6, "err_y " + num(e.y) + " <= 1e-6");
  c.require(e.omega <= 1e-7, "|omega-4| " + num(e.omega) + " <= 1e-7");
  c.require(t <= 10.0, "runtime " + num(t) + " s <= 10 s");
}

void order_check(Criterion& c, const std::string& label, double order, double lo, double hi) {
  c.require(in(order, lo, hi), label + " " + num(order) + " in [" + num(lo) + ", " + num(hi) + "]");
}

void timed_quadratic_study(Criterion& c, int m, AbscissaeKind kind, const std::vector<int>& Ls, double xlo, double xhi,
                           double ylo, double yhi) {
  const auto t0 = std::chrono::steady_clock::now();
  const ConvergenceTable t = test::quadratic_study(4.327, m, kind, Ls);
  const double s = seconds_since(t0);
  const std::string tag = std::string(to_string(kind)) + " m=" + std::to_string(m);
  order_check(c, tag + " order_x", t.orders.x, xlo, xhi);
  order_check(c, tag + " order_y", t.orders.y, ylo, yhi);
  c.require(s <= 60.0, tag + " runtime " + num(s) + " s <= 60 s");
}

// 2. Gauss-Legendre orders on the quadratic example.
void gauss_legendre_orders(Criterion& c) {
  timed_quadratic_study(c, 3, AbscissaeKind::GaussLegendre, {10, 20, 40, 80}, 3.6, 4.6, 3.6, 4.6);
  timed_quadratic_study(c, 5, AbscissaeKind::GaussLegendre, {5, 10, 20, 40}, 5.4, 6.6, 5.4, 6.6);
}

// 3. Chebyshev mixed orders: RE one above the RFDE.
void chebyshev_orders(Criterion& c) {
  timed_quadratic_study(c, 3, AbscissaeKind::ChebyshevExtrema, {10, 20, 40, 80}, 3.6, 4.6, 2.6, 3.4);
  timed_quadratic_study(c, 4, AbscissaeKind::ChebyshevExtrema, {10, 20, 40, 80}, 4.5, 5.6, 3.6, 4.4);
}

// 4. Daphnia orders against a fine reference.
void daphnia_orders(Criterion& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const double beta = 5.0;
  const auto ref = test::daphnia_fine_reference(beta, 500, 4);
  for (auto [kind, lo, hi] : {std::tuple{AbscissaeKind::ChebyshevExtrema, 2.5, 3.6},
                              std::tuple{AbscissaeKind::GaussLegendre, 3.5, 4.6}}) {
    const std::string tag = std::string(to_string(kind)) + " m=3";
    try {
      const ConvergenceTable t = test::daphnia_study(beta, ref, 3, kind, {10, 20, 40});
      order_check(c, tag + " order_x", t.orders.x, lo, hi);
      order_check(c, tag + " order_y", t.orders.y, lo, hi);
    } catch (const std::exception& e) {
      c.require(false, tag + ": " + e.what());
    }
  }
  const double s = seconds_since(t0);
  c.require(s <= 300.0, "runtime " + num(s) + " s <= 300 s");
}

// 5. Amplitude law along the branch and near the Hopf point.
void amplitude_law(Criterion& c) {
  const auto g = build_grid(40, make_abscissae(AbscissaeKind::GaussLegendre, 4));
  const QuadratureSpec q{QuadratureKind::ClenshawCurtis, 161};
  const auto family = [q](double gamma) { return quadratic_system(gamma, q); };
  const BranchResult b = continue_branch(family, 4.0, 4.327, restrict_reference(quadratic_exact(4.0), g));
  double worst = 0.0;
  for (const auto& pt : b.points)
    worst = std::max(worst, std::abs(amplitude(pt.solution, Block::X, 0) - 2.0 * quadratic_amplitude(pt.param_value)));
  c.require(b.status == BranchStatus::Completed && b.points.back().param_value == 4.327,
            "branch reaches 4.327 (" + std::to_string(b.points.size()) + " points)");
  c.require(worst <= 1e-4, "max amplitude deviation " + num(worst) + " <= 1e-4");

  const double gamma = 2.0 + std::numbers::pi / 2.0 + 0.05;
  const CollocationProblem p(quadratic_system(gamma, q), AnchorPhase{Block::X, 0, quadratic_sigma(gamma)}, g);
  try {
    const NewtonResult r = newton_solve(p, pack(restrict_reference(quadratic_exact(gamma), g)));
    const double dev = std::abs(amplitude(p.solution(r.z), Block::X, 0) - 2.0 * quadratic_amplitude(gamma));
    c.require(dev <= 5e-4, "near Hopf deviation " + num(dev) + " <= 5e-4");
  } catch (const std::exception& e) {
    c.require(false, std::string("near Hopf: ") + e.what());
  }
}

// 6. Property suites.
void properties(Criterion& c) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> unit(0.0, 1.0), coef(-1.0, 1.0);

  bool reproduction = true;
  for (auto kind : {AbscissaeKind::GaussLegendre, AbscissaeKind::ChebyshevExtrema})
    for (int m = 1; m <= 6; ++m) {
      std::vector<double> a(m + 1);
      for (auto& v : a) v = coef(rng);
      auto q = [&](double t) {
        double v = 0.0;
        for (int k = m; k >= 0; --k) v = v * t + a[k];
        return v;
      };
      auto dq = [&](double t) {
        double v = 0.0;
        for (int k = m; k >= 1; --k) v = v * t + k * a[k];
        return v;
      };
      const PiecewisePolynomial p =
          restrict_function([&](double t) { return std::vector<double>{q(t)}; }, build_grid(7, make_abscissae(kind, m)), 1);
      for (int i = 0; i < 100; ++i) {
        const double t = unit(rng);
        const auto s = p.eval(t);
        reproduction &= std::abs(s.value[0] - q(t)) <= 1e-12 * std::max(1.0, std::abs(q(t)));
        reproduction &= std::abs(s.derivative[0] - dq(t)) <= 1e-10 * std::max(1.0, std::abs(dq(t)));
      }
    }
  c.require(reproduction, "polynomial reproduction");

  bool exactness = true;
  auto monomial = [](int k, double a, double b) { return (std::pow(b, k + 1) - std::pow(a, k + 1)) / (k + 1); };
  for (int n = 1; n <= 12; ++n) {
    const QuadratureRule gl = make_rule(QuadratureKind::GaussLegendre, n, -0.5, 1.5);
    for (int k = 0; k <= 2 * n - 1; ++k)
      exactness &= std::abs(integrate(gl, [k](double x) { return std::pow(x, k); }) - monomial(k, -0.5, 1.5)) <=
                   1e-12 * std::max(1.0, std::abs(monomial(k, -0.5, 1.5)));
  }
  for (int n = 2; n <= 13; ++n) {
    const QuadratureRule cc = make_rule(QuadratureKind::ClenshawCurtis, n, -0.5, 1.5);
    for (int k = 0; k <= n - 1; ++k)
      exactness &= std::abs(integrate(cc, [k](double x) { return std::pow(x, k); }) - monomial(k, -0.5, 1.5)) <=
                   1e-12 * std::max(1.0, std::abs(monomial(k, -0.5, 1.5)));
  }
  c.require(exactness, "quadrature exactness degrees");

  bool projection = true, wrap = true;
  {
    const auto g = build_grid(9, make_abscissae(AbscissaeKind::GaussLegendre, 4));
    std::vector<double> v(g->node_count());
    for (auto& x : v) x = coef(rng);
    const PiecewisePolynomial p(g, 1, v);
    const PiecewisePolynomial back = restrict_function([&](double t) { return p.eval(t).value; }, g, 1);
    for (std::size_t i = 0; i < v.size(); ++i)
      projection &= std::abs(back.values()[i] - v[i]) <= 4e-16 * std::max(1.0, std::abs(v[i]));
    const DiscreteSolution sol{p, p, 3.0};
    for (int i = 0; i < 200; ++i) {
      const double s = -1.0 + i / 200.0;
      const PeriodicSample a = eval_periodic(sol, s), b = eval_periodic(sol, s + 1.0);
      wrap &= a.x == b.x && a.y == b.y;
    }
  }
  c.require(projection, "restriction of the interpolant is the identity");
  c.require(wrap, "periodic wrap identity");

  {
    const auto g = build_grid(20, make_abscissae(AbscissaeKind::GaussLegendre, 3));
    const CoupledSystem sys = quadratic_system(4.0, {QuadratureKind::ClenshawCurtis, 41});
    const AnchorPhase phase{Block::X, 0, quadratic_sigma(4.0)};
    std::vector<double> z = pack(restrict_reference(quadratic_exact(4.0), g));
    for (auto& v : z) v += 1e-2 * coef(rng);
    const Eigen::MatrixXd J = assemble_jacobian(sys, phase, g, z);
    Eigen::VectorXd d(z.size());
    for (auto& v : d) v = coef(rng);
    d.normalize();
    const double eps = 1e-6;
    std::vector<double> zp = z;
    for (std::size_t i = 0; i < z.size(); ++i) zp[i] += eps * d[static_cast<Eigen::Index>(i)];
    const auto r0 = assemble_residual(sys, phase, g, z), r1 = assemble_residual(sys, phase, g, zp);
    const Eigen::VectorXd fd = Eigen::Map<const Eigen::VectorXd>(r1.data(), r1.size()) -
                               Eigen::Map<const Eigen::VectorXd>(r0.data(), r0.size());
    const Eigen::VectorXd lin = eps * (J * d);
    const double rel = (fd - lin).norm() / lin.norm();
    c.require(rel <= 1e-5, "Jacobian directional check " + num(rel) + " <= 1e-5");

    const CollocationProblem p(sys, phase, g);
    const NewtonResult a = newton_solve(p, z);
    const auto& h = a.diagnostics.residual_history;
    std::size_t k = h.size() - 1;
    // Last triple above rounding level.
    while (k >= 2 && h[k] < 1e-11) --k;
    const double exponent = k >= 2 ? std::log(h[k] / h[k - 1]) / std::log(h[k - 1] / h[k - 2]) : 0.0;
    c.require(exponent >= 1.7, "Newton contraction exponent " + num(exponent) + " >= 1.7");

    NewtonOptions serial;
    serial.execution = Execution::Serial;
    const bool same = newton_solve(p, z).z == a.z && newton_solve(p, z, serial).z == a.z &&
                      p.residual(z) == p.residual(z, Execution::Serial);
    c.require(same, "bitwise determinism");
  }
  const double s = seconds_since(t0);
  c.require(s <= 60.0, "runtime " + num(s) + " s <= 60 s");
}

// 7. Consistency order of the residual at the restricted exact orbit.
void consistency_order(Criterion& c) {
  const double gamma = 4.0;
  for (auto kind : {AbscissaeKind::GaussLegendre, AbscissaeKind::ChebyshevExtrema})
    for (int m : {2, 3}) {
      std::vector<std::pair<double, double>> pts;
      for (int L : {20, 40, 80}) {
        const auto g = build_grid(L, make_abscissae(kind, m));
        const CollocationProblem p(quadratic_system(gamma, {QuadratureKind::ClenshawCurtis, 201}),
                                   AnchorPhase{Block::X, 0, quadratic_sigma(gamma)}, g);
        const auto r = p.residual(pack(restrict_reference(quadratic_exact(gamma), g)));
        const std::size_t n = p.rows().collocation_nodes * 2;
        double sup = 0.0;
        for (std::size_t i = 0; i < n; ++i) sup = std::max(sup, std::abs(r[i]));
        pts.emplace_back(L, sup);
      }
      const double slope = estimate_order(pts);
      c.require(slope >= m - 0.5,
                std::string(to_string(kind)) + " m=" + std::to_string(m) + " slope " + num(slope) + " >= " + num(m - 0.5));
    }
}

// 8. Plant model with user parameters.
void plant(Criterion& c) {
  PlantParams pp;
  pp.tau = 2.0;
  pp.mu = 0.2;
  pp.a = 0.0;
  pp.b = 0.5;
  pp.r = 0.3;
  const auto g = build_grid(20, make_abscissae(AbscissaeKind::ChebyshevExtrema, 4));
  const DiscreteSolution guess = plant_simulated_guess(pp, g);
  const CollocationProblem p(plant_model(pp, {QuadratureKind::ClenshawCurtis, default_M_rule(20) + 1}),
                             IntegralPhase{std::make_shared<const DiscreteSolution>(guess)}, g);
  NewtonOptions o;
  o.residual_tol = 1e-8;
  const NewtonResult r = newton_solve(p, pack(guess), o);
  const double res = sup_norm(p.residual(r.z));
  c.require(res <= 1e-8, "residual " + num(res) + " <= 1e-8 (omega " + num(r.z.back()) + ")");
}

const std::vector<std::pair<const char*, std::function<void(Criterion&)>>> kCriteria = {
    {"exact-solution recovery", exact_recovery},
    {"Gauss-Legendre orders", gauss_legendre_orders},
    {"Chebyshev mixed orders", chebyshev_orders},
    {"Daphnia coupled orders", daphnia_orders},
    {"branch amplitude law", amplitude_law},
    {"property suites", properties},
    {"consistency order", consistency_order},
    {"Plant model", plant},
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  if (argc > 1) {
    only = std::atoi(argv[1]);
    if (only < 1 || only > static_cast<int>(kCriteria.size())) {
      std::fprintf(stderr, "usage: %s [1-%zu]\n", argv[0], kCriteria.size());
      return 2;
    }
  }
  bool all = true;
  for (std::size_t i = 0; i < kCriteria.size(); ++i) {
    if (only && static_cast<int>(i) + 1 != only) continue;
    Criterion c;
    try {
      kCriteria[i].second(c);
    } catch (const std::exception& e) {
      c.require(false, std::string("exception: ") + e.what());
    }
    all &= c.passed();
    std::printf("criterion %zu (%s): %s - %s\n", i + 1, kCriteria[i].first, c.passed() ? "PASS" : "FAIL",
                c.detail().c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
