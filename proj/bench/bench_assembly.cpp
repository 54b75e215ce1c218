// Serial reference vs OpenMP assembly of the collocation residual and
// Jacobian, plus one full Newton solve. Arguments: L (intervals).
//   bench_assembly --benchmark_filter=Jacobian

#include <benchmark/benchmark.h>

#include "percol/analysis.hpp"
#include "percol/collocation.hpp"
#include "percol/models.hpp"
#include "percol/solver.hpp"

using namespace percol;

namespace {

struct Fixture {
  CollocationProblem problem;
  std::vector<double> z;
};

Fixture daphnia(int L) {
  DaphniaParams p;
  p.beta = 4.0;
  const auto g = build_grid(L, make_abscissae(AbscissaeKind::ChebyshevExtrema, 3));
  const DiscreteSolution guess = daphnia_ansatz(p, g, 12.0);
  CollocationProblem prob(daphnia_model(p, {QuadratureKind::ClenshawCurtis, default_M_rule(L) + 1}),
                          AnchorPhase{Block::X, 0, daphnia_equilibrium(p).b}, g);
  return {std::move(prob), pack(guess)};
}

Fixture quadratic(int L) {
  const auto g = build_grid(L, make_abscissae(AbscissaeKind::GaussLegendre, 3));
  CollocationProblem prob(quadratic_system(4.0, {QuadratureKind::ClenshawCurtis, default_M_rule(L) + 1}),
                          AnchorPhase{Block::X, 0, quadratic_sigma(4.0)}, g);
  return {std::move(prob), pack(restrict_reference(quadratic_exact(4.0), g))};
}

Execution execution_of(const benchmark::State& state) { return state.range(1) ? Execution::Parallel : Execution::Serial; }

void label(benchmark::State& state) {
  state.SetLabel(state.range(1) ? "parallel, " + std::to_string(max_threads()) + " threads" : "serial");
}

void BM_Residual(benchmark::State& state) {
  const Fixture f = daphnia(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(f.problem.residual(f.z, execution_of(state)));
  label(state);
}

void BM_JacobianStructured(benchmark::State& state) {
  const Fixture f = daphnia(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(f.problem.jacobian(f.z, JacobianMethod::Structured, execution_of(state)));
  label(state);
}

void BM_JacobianForwardDifference(benchmark::State& state) {
  const Fixture f = daphnia(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(f.problem.jacobian(f.z, JacobianMethod::ForwardDifference, execution_of(state)));
  label(state);
}

void BM_NewtonQuadratic(benchmark::State& state) {
  const Fixture f = quadratic(static_cast<int>(state.range(0)));
  NewtonOptions o;
  o.execution = execution_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(newton_solve(f.problem, f.z, o));
  label(state);
}

}  // namespace

BENCHMARK(BM_Residual)->ArgsProduct({{20, 80}, {0, 1}})->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_JacobianStructured)->ArgsProduct({{20, 80}, {0, 1}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_JacobianForwardDifference)->ArgsProduct({{20}, {0, 1}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_NewtonQuadratic)->ArgsProduct({{40}, {0, 1}})->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
