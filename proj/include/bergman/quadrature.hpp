#pragma once

#include <bergman/error.hpp>

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace bergman {

/// Gauss–Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendreRule(int order) : nodes(static_cast<std::size_t>(order)), weights(nodes.size()) {
    require(order >= 1, ErrorCode::InvalidArgument, "quadrature order must be positive");
    const int n = order;
    // Returns P_n(x) and P_n'(x) by the three-term recurrence.
    const auto legendre = [n](double x) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      return std::pair{p1, n * (x * p1 - p0) / (x * x - 1.0)};
    };
    for (int i = 0; i < (n + 1) / 2; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      for (int iter = 0; iter < 100; ++iter) {
        const auto [p, dp] = legendre(x);
        const double dx = p / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      const double dp = legendre(x).second;
      const double w = 2.0 / ((1.0 - x * x) * dp * dp);
      const auto lo = static_cast<std::size_t>(i);
      const auto hi = static_cast<std::size_t>(n - 1 - i);
      nodes[lo] = -x;
      nodes[hi] = x;
      weights[lo] = w;
      weights[hi] = w;
    }
  }

  template <class F>
  double integrate(F&& f, double a, double b) const {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(mid + half * nodes[i]);
    return half * acc;
  }

  /// Composite rule over `panels` equal panels of [a, b].
  template <class F>
  double composite(F&& f, double a, double b, int panels) const {
    const double h = (b - a) / panels;
    double acc = 0.0;
    for (int p = 0; p < panels; ++p) acc += integrate(f, a + p * h, a + (p + 1) * h);
    return acc;
  }
};

struct AdaptiveResult {
  double value = 0.0;
  int panels = 0;
  double last_change = 0.0;
};

/// Doubles the panel count until successive composite values agree to
/// rel_tol * max(1, |value|).
template <class F>
AdaptiveResult adaptive_composite(F&& f, double a, double b, const GaussLegendreRule& rule, double rel_tol = 1e-10,
                                  int max_panels = 4096) {
  int panels = 1;
  double prev = rule.composite(f, a, b, panels);
  while (true) {
    panels *= 2;
    const double next = rule.composite(f, a, b, panels);
    const double change = std::abs(next - prev);
    if (change <= rel_tol * std::max(1.0, std::abs(next))) return {next, panels, change};
    if (panels >= max_panels) {
      fail(ErrorCode::QuadratureNotConverged,
           "composite Gauss-Legendre still changing by " + std::to_string(change) + " at " +
               std::to_string(panels) + " panels");
    }
    prev = next;
  }
}

}  // namespace bergman
