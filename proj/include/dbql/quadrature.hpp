#pragma once

// Composite Gauss-Legendre integration on panels split at caller-supplied
// break points (kinks of piecewise integrands).

#include <algorithm>
#include <span>
#include <vector>

namespace dbql::quad {

struct Rule {
  std::vector<double> nodes;    // on [-1, 1], ascending
  std::vector<double> weights;
};

// n-point rule, computed once per n and cached. n >= 1.
const Rule& gauss_legendre(std::size_t n);

// Sorted, deduplicated break points strictly inside (a, b), framed by a and b.
std::vector<double> panel_edges(double a, double b, std::span<const double> breaks);

// Integral of f over [a, b] with n nodes on every panel.
template <class F>
double integrate(F&& f, double a, double b, std::span<const double> breaks, std::size_t n) {
  if (!(b > a)) return 0.0;
  const Rule& rule = gauss_legendre(n);
  const std::vector<double> edges = panel_edges(a, b, breaks);
  double total = 0.0;
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double half = 0.5 * (edges[p + 1] - edges[p]);
    const double mid = 0.5 * (edges[p + 1] + edges[p]);
    double panel = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      panel += rule.weights[k] * f(mid + half * rule.nodes[k]);
    }
    total += half * panel;
  }
  return total;
}

}  // namespace dbql::quad
