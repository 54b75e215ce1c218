#pragma once

#include <memory>

#include "percol/problem.hpp"
#include "percol/solver.hpp"

namespace percol {

// Quadratic test system with a known periodic branch:
//   x(t)  = (gamma/2) int_{-3}^{-1} x(t+s)(1 - x(t+s)) ds
//   y'(t) = gamma int_{-3}^{-1} x(t+s)(1 - x(t+s)) ds + y(t)
// Exact orbit x(t) = sigma + A sin(pi t/2), period 4.

struct QuadraticExampleParams {
  double gamma = 4.0;
};

/// Hopf point of the quadratic example, 2 + pi/2.
double quadratic_hopf_gamma();
double quadratic_sigma(double gamma);
/// A(gamma) >= 0; throws NoPeriodicSolution when A^2 < 0 (below the Hopf point).
double quadratic_amplitude(double gamma);

struct QuadraticExample {
  CoupledSystem system;
  ReferenceSolution exact;  // empty eval when gamma is below the Hopf point
  double omega_exact = 4.0;
};

CoupledSystem quadratic_system(double gamma, QuadratureSpec quadrature = {});
/// Throws NoPeriodicSolution if there is no exact orbit at gamma.
ReferenceSolution quadratic_exact(double gamma);
QuadraticExample quadratic_example(double gamma, QuadratureSpec quadrature = {});

// Logistic Daphnia model, x := b (births), y := S (substrate):
//   b(t)  = beta S(t) int_{a_bar}^{a_max} b(t-a) da
//   S'(t) = r S(t)(1 - S(t)/K) - gamma_d S(t) int_{a_bar}^{a_max} b(t-a) da

struct DaphniaParams {
  double beta = 4.0;
  double r = 1.0;
  double K = 1.0;
  double gamma_d = 1.0;
  double a_bar = 3.0;
  double a_max = 4.0;

  void validate() const;
};

CoupledSystem daphnia_model(const DaphniaParams& params, QuadratureSpec quadrature = {});

struct DaphniaEquilibrium {
  double b = 0.0;
  double S = 0.0;
};

/// Positive equilibrium S = 1/(beta (a_max - a_bar)), b from the S equation.
DaphniaEquilibrium daphnia_equilibrium(const DaphniaParams& params);

struct DaphniaHopf {
  double beta = 0.0;
  double frequency = 0.0;  // imaginary part of the critical root
  double period() const;
};

/// Hopf point of the positive equilibrium in beta (other parameters from
/// params), from the characteristic equation of the linearization.
DaphniaHopf daphnia_hopf(const DaphniaParams& params);

/// Equilibrium plus eps sin(2 pi t) on b, eps = eps_fraction * b_bar, with
/// period guess omega0.
DiscreteSolution daphnia_ansatz(const DaphniaParams& params, std::shared_ptr<const CollocationGrid> grid,
                                double omega0, double eps_fraction = 0.1);

struct DaphniaStart {
  double beta_start = 0.0;
  BranchResult branch;  // from beta_start to params.beta
};

/// Starts slightly past the Hopf point from the critical eigenvector and
/// continues to params.beta. The last branch point is the orbit at
/// params.beta unless branch.status reports an early stop.
DaphniaStart daphnia_initial_orbit(const DaphniaParams& params, std::shared_ptr<const CollocationGrid> grid,
                                   QuadratureSpec quadrature = {}, const ContinuationOptions& opts = {},
                                   double hopf_offset = 0.015);

// Integrated Plant neural model, x := w, y := v:
//   w(t)  = w(t-tau) + int_{-tau}^0 r (v(t+s) + a - b w(t+s)) ds
//   v'(t) = v - v^3/3 - w + mu (v(t-tau) - v0)

struct PlantParams {
  double tau = 2.0;
  double mu = 0.0;
  double a = 0.0;
  double b = 1.0;
  double r = 1.0;

  void validate() const;
};

/// A real root of v - v^3/3 - (v + a)/b. Throws ConfigError when b = 0.
double find_v0(double a, double b);

CoupledSystem plant_model(const PlantParams& params, QuadratureSpec quadrature = {});

struct SimulationOptions {
  double dt = 0.01;
  double t_end = 800.0;
  double perturbation = 0.5;  // initial offset of v from v0
};

/// Simulates the delay equation with RK4 and samples the last full cycle on
/// grid. Throws NoPeriodicSolution if the trajectory does not settle on a
/// periodic orbit.
DiscreteSolution plant_simulated_guess(const PlantParams& params, std::shared_ptr<const CollocationGrid> grid,
                                       const SimulationOptions& opts = {});

}  // namespace percol
