#include "percol/models.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "percol/errors.hpp"

namespace percol {

namespace {

constexpr double kPi = std::numbers::pi;

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

// ---------------------------------------------------------------- quadratic

double quadratic_hopf_gamma() { return 2.0 + kPi / 2.0; }

double quadratic_sigma(double gamma) {
  require(gamma > 0.0, "quadratic example: gamma must be positive");
  return 0.5 + kPi / (4.0 * gamma);
}

double quadratic_amplitude(double gamma) {
  const double sigma = quadratic_sigma(gamma);
  const double a2 = 2.0 * sigma * (1.0 - 1.0 / gamma - sigma);
  // At the Hopf point a2 vanishes up to rounding.
  if (a2 < -1e-14)
    throw NoPeriodicSolution("quadratic example: no periodic solution for gamma = " + std::to_string(gamma) +
                             " (below the Hopf point 2 + pi/2)");
  return a2 > 0.0 ? std::sqrt(a2) : 0.0;
}

CoupledSystem quadratic_system(double gamma, QuadratureSpec quadrature) {
  require(gamma > 0.0, "quadratic example: gamma must be positive");
  const double tau = 3.0;
  auto integral = std::make_shared<KernelIntegral>(
      [](double, std::span<const double> x, std::span<const double>, std::span<double> out) {
        out[0] = x[0] * (1.0 - x[0]);
      },
      1, -3.0, -1.0, tau, quadrature, KernelArgs::X);

  CoupledSystem sys;
  sys.name = "quadratic";
  sys.dim_x = 1;
  sys.dim_y = 1;
  sys.tau = tau;
  sys.params["gamma"] = gamma;
  sys.rhs_F = [gamma, integral](const StateAccessor& s, double omega, std::span<double> out) {
    out[0] = 0.5 * gamma * integral->scalar(s, omega);
  };
  sys.rhs_G = [gamma, integral](const StateAccessor& s, double omega, std::span<double> out) {
    out[0] = gamma * integral->scalar(s, omega) + s.y(0.0);
  };
  return sys;
}

ReferenceSolution quadratic_exact(double gamma) {
  const double sigma = quadratic_sigma(gamma);
  const double A = quadratic_amplitude(gamma);
  const double c = 4.0 + kPi * kPi;
  ReferenceSolution ref;
  ref.omega = 4.0;
  ref.eval = [sigma, A, c](double t, std::span<double> x, std::span<double> y) {
    const double s = 4.0 * t;
    const double sn = std::sin(kPi * s / 2.0), cs = std::cos(kPi * s / 2.0);
    if (!x.empty()) x[0] = sigma + A * sn;
    if (!y.empty()) y[0] = -2.0 * (sigma + 2.0 * A * (2.0 * sn + kPi * cs) / c);
  };
  ref.eval_y_deriv = [A, c](double t, std::span<double> dy) {
    const double s = 4.0 * t;
    const double sn = std::sin(kPi * s / 2.0), cs = std::cos(kPi * s / 2.0);
    const double d = -4.0 * A * (kPi * cs - 0.5 * kPi * kPi * sn) / c;  // d/ds
    dy[0] = 4.0 * d;
  };
  return ref;
}

QuadraticExample quadratic_example(double gamma, QuadratureSpec quadrature) {
  QuadraticExample ex;
  ex.system = quadratic_system(gamma, quadrature);
  if (gamma >= quadratic_hopf_gamma() - 1e-12) ex.exact = quadratic_exact(gamma);
  return ex;
}

// ---------------------------------------------------------------- daphnia

void DaphniaParams::validate() const {
  require(beta > 0.0, "daphnia: beta must be positive");
  require(r > 0.0 && K > 0.0 && gamma_d > 0.0, "daphnia: r, K and gamma_d must be positive");
  require(a_bar > 0.0 && a_bar < a_max, "daphnia: need 0 < a_bar < a_max");
}

CoupledSystem daphnia_model(const DaphniaParams& p, QuadratureSpec quadrature) {
  p.validate();
  auto integral = std::make_shared<KernelIntegral>(
      [](double, std::span<const double> x, std::span<const double>, std::span<double> out) { out[0] = x[0]; }, 1,
      -p.a_max, -p.a_bar, p.a_max, quadrature, KernelArgs::X);

  CoupledSystem sys;
  sys.name = "daphnia";
  sys.dim_x = 1;
  sys.dim_y = 1;
  sys.tau = p.a_max;
  sys.params = {{"beta", p.beta}, {"r", p.r},         {"K", p.K},
                {"gamma_d", p.gamma_d}, {"a_bar", p.a_bar}, {"a_max", p.a_max}};
  sys.rhs_F = [p, integral](const StateAccessor& s, double omega, std::span<double> out) {
    out[0] = p.beta * s.y(0.0) * integral->scalar(s, omega);
  };
  sys.rhs_G = [p, integral](const StateAccessor& s, double omega, std::span<double> out) {
    const double S = s.y(0.0);
    out[0] = p.r * S * (1.0 - S / p.K) - p.gamma_d * S * integral->scalar(s, omega);
  };
  return sys;
}

DaphniaEquilibrium daphnia_equilibrium(const DaphniaParams& p) {
  p.validate();
  const double da = p.a_max - p.a_bar;
  DaphniaEquilibrium eq;
  eq.S = 1.0 / (p.beta * da);
  eq.b = p.r * (1.0 - eq.S / p.K) / (p.gamma_d * da);
  return eq;
}

double DaphniaHopf::period() const { return 2.0 * kPi / frequency; }

namespace {

using cplx = std::complex<double>;

// int_{a_bar}^{a_max} exp(-lambda a) da
cplx daphnia_laplace(const DaphniaParams& p, cplx lambda) {
  if (std::abs(lambda) < 1e-12) return p.a_max - p.a_bar;
  return (std::exp(-lambda * p.a_bar) - std::exp(-lambda * p.a_max)) / lambda;
}

cplx daphnia_characteristic(const DaphniaParams& p, cplx lambda) {
  const DaphniaEquilibrium eq = daphnia_equilibrium(p);
  const double da = p.a_max - p.a_bar;
  const cplx I = daphnia_laplace(p, lambda);
  return (lambda + p.r * eq.S / p.K) * (1.0 - I / da) + p.gamma_d * eq.S * I * p.beta * eq.b * da;
}

// delta S / delta b along the eigenvector for the root lambda.
cplx daphnia_eigen_ratio(const DaphniaParams& p, cplx lambda) {
  const DaphniaEquilibrium eq = daphnia_equilibrium(p);
  return -p.gamma_d * eq.S * daphnia_laplace(p, lambda) / (lambda + p.r * eq.S / p.K);
}

}  // namespace

DaphniaHopf daphnia_hopf(const DaphniaParams& params) {
  params.validate();
  DaphniaParams p = params;
  // Newton in (beta, w) on the real and imaginary parts of the
  // characteristic function at lambda = i w. The start targets the default
  // parameter set; other sets may need a different start.
  const double da = p.a_max - p.a_bar;
  double beta = 3.0 / da, w = 2.0 * kPi / (4.0 * p.a_max);
  for (int it = 0; it < 60; ++it) {
    p.beta = beta;
    const cplx f = daphnia_characteristic(p, {0.0, w});
    if (std::abs(f) < 1e-14) break;
    const double hb = 1e-7 * std::max(1.0, beta), hw = 1e-7 * std::max(1.0, w);
    p.beta = beta + hb;
    const cplx fb = (daphnia_characteristic(p, {0.0, w}) - f) / hb;
    p.beta = beta;
    const cplx fw = (daphnia_characteristic(p, {0.0, w + hw}) - f) / hw;
    const double det = fb.real() * fw.imag() - fw.real() * fb.imag();
    if (det == 0.0) break;
    const double db = -(f.real() * fw.imag() - fw.real() * f.imag()) / det;
    const double dw = -(fb.real() * f.imag() - f.real() * fb.imag()) / det;
    beta += db;
    w += dw;
    if (std::abs(db) < 1e-14 * beta && std::abs(dw) < 1e-14 * std::abs(w)) break;
  }
  p.beta = beta;
  if (!(std::abs(daphnia_characteristic(p, {0.0, w})) < 1e-9) || !(w > 0.0) || !(beta > 0.0))
    throw NoPeriodicSolution("daphnia: Hopf point not found from the default start");
  return {beta, std::abs(w)};
}

DiscreteSolution daphnia_ansatz(const DaphniaParams& params, std::shared_ptr<const CollocationGrid> grid,
                                double omega0, double eps_fraction) {
  require(omega0 >= params.a_max, "daphnia ansatz: omega0 must be at least a_max");
  const DaphniaEquilibrium eq = daphnia_equilibrium(params);
  const double eps = eps_fraction * eq.b;
  ReferenceSolution ref;
  ref.omega = omega0;
  ref.eval = [eq, eps](double t, std::span<double> x, std::span<double> y) {
    x[0] = eq.b + eps * std::sin(2.0 * kPi * t);
    y[0] = eq.S;
  };
  return restrict_reference(ref, std::move(grid));
}

DaphniaStart daphnia_initial_orbit(const DaphniaParams& params, std::shared_ptr<const CollocationGrid> grid,
                                   QuadratureSpec quadrature, const ContinuationOptions& opts,
                                   double hopf_offset) {
  params.validate();
  require(hopf_offset > 0.0, "daphnia: hopf offset must be positive");
  const DaphniaHopf hopf = daphnia_hopf(params);
  if (params.beta <= hopf.beta)
    throw NoPeriodicSolution("daphnia: beta = " + std::to_string(params.beta) + " is not above the Hopf point " +
                             std::to_string(hopf.beta));

  DaphniaStart start;
  start.beta_start = std::min(params.beta, hopf.beta + hopf_offset);
  DaphniaParams p0 = params;
  p0.beta = start.beta_start;

  // Small orbit along the critical eigenvector; the amplitude of b grows like
  // sqrt(beta - beta_H), 0.1 b_bar fits the default offset.
  const DaphniaEquilibrium eq = daphnia_equilibrium(p0);
  const double eps = 0.1 * eq.b * std::sqrt((start.beta_start - hopf.beta) / 0.015);
  const cplx ratio = daphnia_eigen_ratio(p0, {0.0, hopf.frequency});
  ReferenceSolution ref;
  ref.omega = std::max(hopf.period(), params.a_max);
  ref.eval = [eq, eps, ratio](double t, std::span<double> x, std::span<double> y) {
    const cplx e = std::exp(cplx(0.0, 2.0 * kPi * t));
    x[0] = eq.b + eps * e.imag();
    y[0] = eq.S + eps * (ratio * e).imag();
  };
  // The equilibrium also solves the collocation system, so the first
  // correction pins b(0) above b_bar; the ansatz is shifted to put its
  // maximum at t = 0.
  ReferenceSolution shifted = ref;
  shifted.eval = [ref](double t, std::span<double> x, std::span<double> y) {
    ref.eval(t + 0.25 > 1.0 ? t - 0.75 : t + 0.25, x, y);
  };
  const DiscreteSolution guess = restrict_reference(shifted, grid);
  const AnchorPhase top{Block::X, 0, eq.b + 0.5 * eps};
  const DaphniaParams base = params;
  auto family = [base, quadrature](double beta) {
    DaphniaParams q = base;
    q.beta = beta;
    return daphnia_model(q, quadrature);
  };
  NewtonResult first = newton_solve(family(start.beta_start), top, grid, pack(guess), opts.newton);
  const DiscreteSolution corrected = unpack(first.z, grid, 1, 1);
  start.branch = continue_branch(family, start.beta_start, params.beta, corrected, opts);
  return start;
}

// ---------------------------------------------------------------- plant

void PlantParams::validate() const {
  require(tau > 0.0, "plant: tau must be positive");
  if (b == 0.0) throw ConfigError("plant: b must be nonzero");
  require(std::isfinite(mu) && std::isfinite(a) && std::isfinite(r), "plant: parameters must be finite");
}

double find_v0(double a, double b) {
  if (b == 0.0) throw ConfigError("plant: b must be nonzero to define v0");
  auto f = [a, b](double v) { return v - v * v * v / 3.0 - (v + a) / b; };
  // f is a cubic with negative leading coefficient: widen until it changes sign.
  double lo = -1.0, hi = 1.0;
  int widen = 0;
  while (!(f(lo) > 0.0 && f(hi) < 0.0)) {
    lo *= 2.0;
    hi *= 2.0;
    if (++widen > 60) throw ConfigError("plant: no real root bracketed for v0");
  }
  double v = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double fv = f(v);
    if (fv == 0.0) return v;
    if (fv > 0.0)
      lo = v;
    else
      hi = v;
    const double df = 1.0 - v * v - 1.0 / b;
    double next = df != 0.0 ? v - fv / df : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - v) <= 1e-16 * std::max(1.0, std::abs(v)) || hi - lo <= 1e-15 * std::max(1.0, std::abs(v))) {
      v = next;
      break;
    }
    v = next;
  }
  return v;
}

CoupledSystem plant_model(const PlantParams& p, QuadratureSpec quadrature) {
  p.validate();
  const double v0 = find_v0(p.a, p.b);
  auto integral = std::make_shared<KernelIntegral>(
      [p](double, std::span<const double> x, std::span<const double> y, std::span<double> out) {
        out[0] = p.r * (y[0] + p.a - p.b * x[0]);
      },
      1, -p.tau, 0.0, p.tau, quadrature, KernelArgs::XY);

  CoupledSystem sys;
  sys.name = "plant";
  sys.dim_x = 1;
  sys.dim_y = 1;
  sys.tau = p.tau;
  sys.params = {{"tau", p.tau}, {"mu", p.mu}, {"a", p.a}, {"b", p.b}, {"r", p.r}, {"v0", v0}};
  sys.rhs_F = [p, integral](const StateAccessor& s, double omega, std::span<double> out) {
    out[0] = s.x(-p.tau / omega) + integral->scalar(s, omega);
  };
  sys.rhs_G = [p, v0](const StateAccessor& s, double omega, std::span<double> out) {
    const double v = s.y(0.0);
    out[0] = v - v * v * v / 3.0 - s.x(0.0) + p.mu * (s.y(-p.tau / omega) - v0);
  };
  return sys;
}

DiscreteSolution plant_simulated_guess(const PlantParams& p, std::shared_ptr<const CollocationGrid> grid,
                                       const SimulationOptions& opts) {
  p.validate();
  require(opts.dt > 0.0 && opts.t_end > 0.0, "plant simulation: dt and t_end must be positive");
  const double v0 = find_v0(p.a, p.b);
  const double w0 = (v0 + p.a) / p.b;
  const auto lag = static_cast<std::size_t>(std::llround(p.tau / opts.dt));
  require(lag >= 1, "plant simulation: dt must not exceed tau");
  const double dt = p.tau / static_cast<double>(lag);
  const auto steps = static_cast<std::size_t>(std::ceil(opts.t_end / dt));

  // Index k holds time (k - lag) dt; the first lag + 1 entries are history.
  std::vector<double> v(lag + steps + 1, v0 + opts.perturbation), w(lag + steps + 1, w0);
  auto rhs = [&](double vv, double ww, double vd, double& dv, double& dw) {
    dv = vv - vv * vv * vv / 3.0 - ww + p.mu * (vd - v0);
    dw = p.r * (vv + p.a - p.b * ww);
  };
  for (std::size_t k = lag; k < lag + steps; ++k) {
    const double vd0 = v[k - lag], vd1 = v[k - lag + 1], vdh = 0.5 * (vd0 + vd1);
    double k1v, k1w, k2v, k2w, k3v, k3w, k4v, k4w;
    rhs(v[k], w[k], vd0, k1v, k1w);
    rhs(v[k] + 0.5 * dt * k1v, w[k] + 0.5 * dt * k1w, vdh, k2v, k2w);
    rhs(v[k] + 0.5 * dt * k2v, w[k] + 0.5 * dt * k2w, vdh, k3v, k3w);
    rhs(v[k] + dt * k3v, w[k] + dt * k3w, vd1, k4v, k4w);
    v[k + 1] = v[k] + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    w[k + 1] = w[k] + dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
    if (!std::isfinite(v[k + 1]) || !std::isfinite(w[k + 1]))
      throw NoPeriodicSolution("plant simulation diverged");
  }

  // Upward crossings of the mean over the second half of the run.
  const std::size_t begin = lag + steps / 2, end = lag + steps;
  double mean = 0.0, vmax = v[begin], vmin = v[begin];
  for (std::size_t k = begin; k <= end; ++k) {
    mean += v[k];
    vmax = std::max(vmax, v[k]);
    vmin = std::min(vmin, v[k]);
  }
  mean /= static_cast<double>(end - begin + 1);
  if (!(vmax - vmin > 1e-6)) throw NoPeriodicSolution("plant simulation settled on an equilibrium");
  std::vector<double> crossings;
  for (std::size_t k = begin; k < end; ++k)
    if (v[k] < mean && v[k + 1] >= mean) {
      const double frac = (mean - v[k]) / (v[k + 1] - v[k]);
      crossings.push_back((static_cast<double>(k - lag) + frac) * dt);
    }
  if (crossings.size() < 3) throw NoPeriodicSolution("plant simulation: too few oscillations");
  const std::size_t nc = crossings.size();
  const double period = crossings[nc - 1] - crossings[nc - 2];
  const double previous = crossings[nc - 2] - crossings[nc - 3];
  if (std::abs(period - previous) > 1e-2 * period)
    throw NoPeriodicSolution("plant simulation: oscillation has not settled to a periodic orbit");
  if (period < p.tau) throw NoPeriodicSolution("plant simulation: period shorter than the delay");

  const double t0 = crossings[nc - 2];
  auto sample = [&](const std::vector<double>& u, double time) {
    const double pos = time / dt + static_cast<double>(lag);
    const auto k = std::min(static_cast<std::size_t>(pos), u.size() - 2);
    const double frac = pos - static_cast<double>(k);
    return (1.0 - frac) * u[k] + frac * u[k + 1];
  };
  ReferenceSolution ref;
  ref.omega = period;
  ref.eval = [&](double t, std::span<double> x, std::span<double> y) {
    x[0] = sample(w, t0 + period * t);
    y[0] = sample(v, t0 + period * t);
  };
  return restrict_reference(ref, std::move(grid));
}

}  // namespace percol
