#include "percol/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace percol {

std::string_view to_string(QuadratureKind kind) {
  switch (kind) {
    case QuadratureKind::GaussLegendre: return "gauss-legendre";
    case QuadratureKind::ClenshawCurtis: return "clenshaw-curtis";
  }
  return "unknown";
}

QuadratureKind parse_quadrature_kind(std::string_view name) {
  if (name == "gauss-legendre") return QuadratureKind::GaussLegendre;
  if (name == "clenshaw-curtis") return QuadratureKind::ClenshawCurtis;
  throw std::invalid_argument("unknown quadrature kind '" + std::string(name) + "'");
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one node");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi's initial guess for the i-th largest root.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      // p1 = P_n(x), p0 = P_{n-1}(x)
      dp = n == 1 ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) <= 1e-15) break;
    }
    // Recompute the derivative at the converged root for the weight.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n == 1 ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[n - 1 - i] = x;
    nodes[i] = -x;
    weights[n - 1 - i] = w;
    weights[i] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

void clenshaw_curtis(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 2) throw std::invalid_argument("clenshaw_curtis: need at least two nodes");
  const int N = n - 1;
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int j = 0; j <= N; ++j) {
    const double theta = std::numbers::pi * j / N;
    nodes[j] = -std::cos(theta);
    double s = 1.0;
    for (int k = 1; 2 * k <= N; ++k) {
      const double bk = (2 * k == N) ? 1.0 : 2.0;
      s -= bk * std::cos(2.0 * k * theta) / (4.0 * k * k - 1.0);
    }
    const double cj = (j == 0 || j == N) ? 1.0 : 2.0;
    weights[j] = cj * s / N;
  }
  // Exact symmetric values; cos(j*pi/N) only approximates them.
  for (int j = 0; j < n / 2; ++j) {
    const double x = 0.5 * (nodes[N - j] - nodes[j]);
    nodes[j] = -x;
    nodes[N - j] = x;
  }
  if (N % 2 == 0) nodes[N / 2] = 0.0;
}

QuadratureRule make_rule(QuadratureKind kind, int n_nodes, double a, double b) {
  if (!(a < b)) throw std::invalid_argument("make_rule: require a < b");
  if (n_nodes < 1) throw std::invalid_argument("make_rule: need at least one node");
  QuadratureRule rule;
  rule.kind = kind;
  rule.a = a;
  rule.b = b;
  switch (kind) {
    case QuadratureKind::GaussLegendre: gauss_legendre(n_nodes, rule.nodes, rule.weights); break;
    case QuadratureKind::ClenshawCurtis:
      if (n_nodes < 2) throw std::invalid_argument("make_rule: Clenshaw-Curtis needs at least two nodes");
      clenshaw_curtis(n_nodes, rule.nodes, rule.weights);
      break;
  }
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    rule.nodes[i] = mid + half * rule.nodes[i];
    rule.weights[i] *= half;
  }
  // Pin the end nodes so that closed rules hit a and b exactly.
  if (kind == QuadratureKind::ClenshawCurtis) {
    rule.nodes.front() = a;
    rule.nodes.back() = b;
  }
  return rule;
}

std::vector<double> integrate(const QuadratureRule& rule, std::size_t k,
                              const std::function<void(double, std::span<double>)>& f) {
  std::vector<double> sum(k, 0.0);
  std::vector<double> value(k, 0.0);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    f(rule.nodes[i], value);
    for (std::size_t c = 0; c < k; ++c) sum[c] += rule.weights[i] * value[c];
  }
  return sum;
}

}  // namespace percol
