#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "percol/collocation.hpp"
#include "percol/errors.hpp"
#include "percol/models.hpp"
#include "percol/quadrature.hpp"
#include "percol/solver.hpp"
#include "support.hpp"

using namespace percol;
using doctest::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

double exact_x(const ReferenceSolution& ref, double t) {
  double x[1], y[1];
  ref.eval(t - std::floor(t), x, y);
  return x[0];
}

double exact_y(const ReferenceSolution& ref, double t) {
  double x[1], y[1];
  ref.eval(t - std::floor(t), x, y);
  return y[0];
}

}  // namespace

TEST_CASE("quadratic example: closed-form constants at gamma = 4") {
  CHECK(quadratic_sigma(4.0) == Approx(0.6963495).epsilon(1e-7));
  CHECK(quadratic_amplitude(4.0) == Approx(0.2733468).epsilon(1e-6));
  const QuadraticExample ex = quadratic_example(4.0);
  CHECK(ex.omega_exact == 4.0);
  CHECK(ex.system.dim_x == 1);
  CHECK(ex.system.dim_y == 1);
  CHECK(ex.system.tau == 3.0);
}

TEST_CASE("quadratic example: Hopf point and below") {
  CHECK(quadratic_hopf_gamma() == Approx(2.0 + kPi / 2.0).epsilon(1e-15));
  CHECK(quadratic_amplitude(2.0 + kPi / 2.0) == 0.0);
  CHECK_THROWS_AS(quadratic_amplitude(3.0), NoPeriodicSolution);
  CHECK_THROWS_AS(quadratic_exact(3.0), NoPeriodicSolution);
  CHECK_FALSE(static_cast<bool>(quadratic_example(3.0).exact.eval));
  CHECK_NOTHROW(quadratic_system(3.0));
}

TEST_CASE("quadratic example: exact orbit is periodic with x(0) = sigma") {
  const ReferenceSolution ex = quadratic_exact(4.0);
  CHECK(exact_x(ex, 0.0) == Approx(quadratic_sigma(4.0)));
  double x1[1], y1[1], x0[1], y0[1];
  ex.eval(1.0, x1, y1);
  ex.eval(0.0, x0, y0);
  CHECK(std::abs(x1[0] - x0[0]) <= 1e-14);
  CHECK(std::abs(y1[0] - y0[0]) <= 1e-14);
}

TEST_CASE("quadratic example: exact orbit satisfies both equations") {
  // Independent check in original time s = 4t: x(s) = (gamma/2) I(s),
  // y'(s) = gamma I(s) + y(s), I(s) = int_{-3}^{-1} x(s+u)(1 - x(s+u)) du.
  for (double gamma : {3.7, 4.0, 4.3}) {
    const ReferenceSolution ex = quadratic_exact(gamma);
    const QuadratureRule rule = make_rule(QuadratureKind::GaussLegendre, 64, -3.0, -1.0);
    for (double t : test::uniform_samples(50, 0.0, 1.0, 17)) {
      const double s = 4.0 * t;
      const double I = integrate(rule, [&](double u) {
        const double x = exact_x(ex, (s + u) / 4.0);
        return x * (1.0 - x);
      });
      CHECK(std::abs(0.5 * gamma * I - exact_x(ex, t)) <= 1e-9);
      const double hs = 1e-4;
      const double dyds = (-exact_y(ex, (s + 2 * hs) / 4) + 8 * exact_y(ex, (s + hs) / 4) -
                           8 * exact_y(ex, (s - hs) / 4) + exact_y(ex, (s - 2 * hs) / 4)) /
                          (12 * hs);
      CHECK(std::abs(dyds - (gamma * I + exact_y(ex, t))) <= 1e-9);
      double dy[1];
      ex.eval_y_deriv(t, dy);
      CHECK(std::abs(dy[0] - 4.0 * dyds) <= 1e-8);
    }
  }
}

TEST_CASE("quadratic system right-hand sides at the exact orbit") {
  const double gamma = 4.1;
  const ReferenceSolution ex = quadratic_exact(gamma);
  const CoupledSystem sys = quadratic_system(gamma, {QuadratureKind::GaussLegendre, 64});
  test::ReferenceEvaluator eval(ex);
  for (double t : test::uniform_samples(10, 0.0, 1.0, 8)) {
    double f[1], g[1], dy[1];
    const StateAccessor st(eval, t, 1, 1);
    sys.rhs_F(st, 4.0, f);
    sys.rhs_G(st, 4.0, g);
    ex.eval_y_deriv(t, dy);
    CHECK(std::abs(f[0] - exact_x(ex, t)) <= 1e-10);
    CHECK(std::abs(4.0 * g[0] - dy[0]) <= 1e-9);
  }
}

TEST_CASE("Daphnia: equilibrium identity for random beta") {
  for (double beta : test::uniform_samples(5, 1.2, 8.0, 23)) {
    DaphniaParams p;
    p.beta = beta;
    const DaphniaEquilibrium eq = daphnia_equilibrium(p);
    CHECK(eq.S == Approx(1.0 / beta));
    CHECK(eq.b == Approx(1.0 - 1.0 / beta));
    CHECK(std::abs(p.beta * eq.S * eq.b * (p.a_max - p.a_bar) - eq.b) <= 1e-14);

    // Both residuals vanish on the constant state.
    const CoupledSystem sys = daphnia_model(p, {QuadratureKind::ClenshawCurtis, 9});
    ReferenceSolution c;
    c.eval = [eq](double, std::span<double> x, std::span<double> y) {
      x[0] = eq.b;
      y[0] = eq.S;
    };
    test::ReferenceEvaluator eval(c);
    double f[1], g[1];
    const StateAccessor st(eval, 0.3, 1, 1);
    sys.rhs_F(st, 5.0, f);
    sys.rhs_G(st, 5.0, g);
    CHECK(std::abs(f[0] - eq.b) <= 1e-13);
    CHECK(std::abs(g[0]) <= 1e-13);
  }
}

TEST_CASE("Daphnia: model structure and kernel on a constant birth rate") {
  DaphniaParams p;
  p.beta = 2.5;
  const CoupledSystem sys = daphnia_model(p, {QuadratureKind::ClenshawCurtis, 5});
  CHECK(sys.tau == 4.0);
  ReferenceSolution c;
  c.eval = [](double, std::span<double> x, std::span<double> y) {
    x[0] = 0.7;
    y[0] = 1.0;
  };
  test::ReferenceEvaluator eval(c);
  double f[1];
  sys.rhs_F(StateAccessor(eval, 0.0, 1, 1), 6.0, f);
  // beta * S * (0.7 * (a_max - a_bar)) with S = 1
  CHECK(f[0] == Approx(2.5 * 0.7));
}

TEST_CASE("Daphnia: Hopf point") {
  const DaphniaHopf h = daphnia_hopf(DaphniaParams{});
  CHECK(std::abs(h.beta - 3.0162) <= 5e-5);
  CHECK(h.frequency > 0.0);
  CHECK(h.period() > DaphniaParams{}.a_bar);
}

TEST_CASE("Daphnia: parameter validation") {
  DaphniaParams p;
  p.a_bar = 4.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.beta = -1.0;
  CHECK_THROWS_AS(daphnia_model(p), std::invalid_argument);
  p = {};
  p.K = 0.0;
  CHECK_THROWS_AS(daphnia_equilibrium(p), std::invalid_argument);
}

TEST_CASE("Daphnia: no orbit below the Hopf point") {
  DaphniaParams p;
  p.beta = 2.9;
  auto g = build_grid(10, make_abscissae(AbscissaeKind::ChebyshevExtrema, 3));
  CHECK_THROWS_AS(daphnia_initial_orbit(p, g), NoPeriodicSolution);
}

TEST_CASE("Daphnia: ansatz is the perturbed equilibrium") {
  DaphniaParams p;
  p.beta = 4.0;
  auto g = build_grid(40, make_abscissae(AbscissaeKind::GaussLegendre, 4));
  const DiscreteSolution a = daphnia_ansatz(p, g, 12.0);
  const DaphniaEquilibrium eq = daphnia_equilibrium(p);
  CHECK(a.omega == 12.0);
  CHECK(amplitude(a, Block::X, 0) == Approx(0.2 * eq.b).epsilon(1e-3));
  CHECK(a.nu.eval(0.37).value[0] == Approx(eq.S));
}

TEST_CASE("Plant: v0 root") {
  CHECK(find_v0(0.0, 1.0) == 0.0);
  for (auto [a, b] : {std::pair{0.7, 0.8}, {-0.3, 2.0}, {1.5, 0.4}, {0.0, 0.5}}) {
    const double v0 = find_v0(a, b);
    CHECK(std::abs(v0 - v0 * v0 * v0 / 3.0 - (v0 + a) / b) <= 1e-12);
  }
  CHECK_THROWS_AS(find_v0(0.5, 0.0), ConfigError);
  PlantParams p;
  p.b = 0.0;
  CHECK_THROWS_AS(plant_model(p), ConfigError);
  p = {};
  p.tau = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("Plant: the constant state at (v0, w0) solves both equations") {
  PlantParams p;
  p.tau = 2.0;
  p.mu = 0.4;
  p.a = 0.7;
  p.b = 0.8;
  p.r = 0.2;
  const double v0 = find_v0(p.a, p.b);
  const double w0 = (v0 + p.a) / p.b;
  const CoupledSystem sys = plant_model(p, {QuadratureKind::ClenshawCurtis, 11});
  ReferenceSolution c;
  c.eval = [v0, w0](double, std::span<double> x, std::span<double> y) {
    x[0] = w0;
    y[0] = v0;
  };
  test::ReferenceEvaluator eval(c);
  double f[1], g[1];
  const StateAccessor st(eval, 0.6, 1, 1);
  sys.rhs_F(st, 5.0, f);
  sys.rhs_G(st, 5.0, g);
  CHECK(std::abs(f[0] - w0) <= 1e-13);
  CHECK(std::abs(g[0]) <= 1e-12);
}

TEST_CASE("Plant: simulated guess is close to a collocation solution") {
  PlantParams p;
  p.tau = 2.0;
  p.mu = 0.2;
  p.a = 0.0;
  p.b = 0.5;
  p.r = 0.3;
  auto g = build_grid(40, make_abscissae(AbscissaeKind::ChebyshevExtrema, 3));
  const DiscreteSolution guess = plant_simulated_guess(p, g);
  CHECK(guess.omega > p.tau);
  CHECK(amplitude(guess, Block::Y, 0) > 1.0);

  const QuadratureSpec q{QuadratureKind::ClenshawCurtis, 41};
  auto shared = std::make_shared<const DiscreteSolution>(guess);
  const CollocationProblem prob(plant_model(p, q), IntegralPhase{shared}, g);
  const NewtonResult r = newton_solve(prob, pack(guess));
  CHECK(r.diagnostics.final_residual <= 1e-10);
  CHECK(std::abs(r.z.back() - guess.omega) <= 1e-2 * guess.omega);
}
