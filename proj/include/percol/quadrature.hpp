#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace percol {

enum class QuadratureKind { GaussLegendre, ClenshawCurtis };

std::string_view to_string(QuadratureKind kind);
QuadratureKind parse_quadrature_kind(std::string_view name);

/// Interpolatory rule on [a, b]. Nodes are strictly increasing.
struct QuadratureRule {
  QuadratureKind kind = QuadratureKind::GaussLegendre;
  double a = -1.0;
  double b = 1.0;
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// Which rule and how many nodes; the interval is supplied where it is used.
struct QuadratureSpec {
  QuadratureKind kind = QuadratureKind::ClenshawCurtis;
  int nodes = 20;
};

/// Gauss-Legendre nodes and weights on [-1, 1], nodes ascending.
/// Newton on P_n evaluated by the three-term recurrence.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Clenshaw-Curtis on [-1, 1] with n >= 2 nodes (the extrema of T_{n-1}),
/// nodes ascending, weights from the explicit cosine sums.
void clenshaw_curtis(int n, std::vector<double>& nodes, std::vector<double>& weights);

QuadratureRule make_rule(QuadratureKind kind, int n_nodes, double a, double b);
inline QuadratureRule make_rule(const QuadratureSpec& spec, double a, double b) {
  return make_rule(spec.kind, spec.nodes, a, b);
}

/// Sum of w_i f(x_i) for a scalar integrand.
template <class F>
double integrate(const QuadratureRule& rule, F&& f) {
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) sum += rule.weights[i] * f(rule.nodes[i]);
  return sum;
}

/// Vector-valued integrand: f(x, out) writes k components into out.
std::vector<double> integrate(const QuadratureRule& rule, std::size_t k,
                              const std::function<void(double, std::span<double>)>& f);

}  // namespace percol
