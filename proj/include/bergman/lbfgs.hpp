#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <vector>

namespace bergman {

struct LbfgsOptions {
  int history = 8;
  int max_iterations = 5000;
  double f_tol = 1e-10;  // stop when the decrease falls below f_tol * max(1, |f|)
  double g_tol = 1e-12;
  int max_backtracks = 60;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

/// Objective returns f(x) and writes the gradient; +inf marks an infeasible point.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// Limited-memory BFGS with Armijo backtracking.
inline LbfgsResult lbfgs_minimize(const Objective& objective, Eigen::VectorXd x0, const LbfgsOptions& opts = {}) {
  LbfgsResult res;
  res.x = std::move(x0);
  Eigen::VectorXd g(res.x.size());
  res.f = objective(res.x, g);
  if (!std::isfinite(res.f)) return res;
  if (res.x.size() == 0) {
    res.converged = true;
    return res;
  }

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  Eigen::VectorXd g_new(res.x.size());
  int stalls = 0;

  for (res.iterations = 0; res.iterations < opts.max_iterations; ++res.iterations) {
    if (g.lpNorm<Eigen::Infinity>() <= opts.g_tol) {
      res.converged = true;
      return res;
    }

    // Two-loop recursion.
    Eigen::VectorXd q = g;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t i = s_hist.size(); i-- > 0;) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    double gamma = 1.0;
    if (!s_hist.empty()) gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    Eigen::VectorXd d = gamma * q;
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(d);
      d += (alpha[i] - beta) * s_hist[i];
    }
    d = -d;

    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      d = -g;
      slope = -g.squaredNorm();
    }

    double step = 1.0;
    if (s_hist.empty()) step = std::min(1.0, 1.0 / std::max(g.lpNorm<Eigen::Infinity>(), 1e-300));
    Eigen::VectorXd x_new;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int bt = 0; bt < opts.max_backtracks; ++bt) {
      x_new = res.x + step * d;
      f_new = objective(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= res.f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No progress along this direction; a fresh steepest-descent restart gets one more chance.
      if (!s_hist.empty()) {
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
        continue;
      }
      res.converged = g.lpNorm<Eigen::Infinity>() <= std::sqrt(opts.g_tol);
      return res;
    }

    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd y = g_new - g;
    const double decrease = res.f - f_new;
    res.x = x_new;
    res.f = f_new;
    g = g_new;

    const double sy = s.dot(y);
    if (sy > 1e-300) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opts.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    // Two consecutive tiny decreases avoid stopping on a single short step.
    if (decrease <= opts.f_tol * std::max(1.0, std::abs(res.f))) {
      if (++stalls >= 2) {
        res.converged = true;
        ++res.iterations;
        return res;
      }
    } else {
      stalls = 0;
    }
  }
  return res;
}

}  // namespace bergman
