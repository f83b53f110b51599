#pragma once

#include <bergman/domain.hpp>
#include <bergman/error.hpp>
#include <bergman/geometry.hpp>
#include <bergman/kernel.hpp>
#include <bergman/lbfgs.hpp>
#include <bergman/log.hpp>
#include <bergman/path.hpp>
#include <bergman/quadrature.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace bergman {

/// Length of one primitive in the chosen metric.
inline double primitive_length(const DomainSpec& domain, const PathPrimitive& prim, MetricKind kind,
                               int quad_order = 8, const Truncation& trunc = {}) {
  require(quad_order >= 2, ErrorCode::InvalidArgument, "quadrature order must be at least 2");
  if (primitive_extent(prim) == 0.0) return 0.0;
  const GaussLegendreRule rule(quad_order);

  auto integrate_piece = [&](const PathPrimitive& piece) {
    auto speed = [&](double u) {
      const PathSample s = ParamPath::sample_primitive(piece, u);
      require(s.position.dim() == domain.dim(), ErrorCode::InvalidArgument, "path dimension does not match domain");
      require_admissible(domain, s.position, "path sample");
      const DiagonalMetric h = diagonal_metric(domain, s.position, kind, false, trunc);
      double q = 0.0;
      for (std::size_t i = 0; i < h.coeff.size(); ++i) q += h.coeff[i] * std::norm(s.velocity[i]);
      return std::sqrt(std::max(q, 0.0));
    };
    return adaptive_composite(speed, 0.0, 1.0, rule, 1e-10).value;
  };

  if (const auto* poly = std::get_if<Polyline>(&prim)) {
    double total = 0.0;
    for (std::size_t k = 1; k < poly->nodes.size(); ++k) {
      const LinearSegment edge{poly->nodes[k - 1], poly->nodes[k]};
      if (primitive_extent(edge) > 0.0) total += integrate_piece(edge);
    }
    return total;
  }
  return integrate_piece(prim);
}

inline std::vector<double> segment_lengths(const DomainSpec& domain, const ParamPath& path, MetricKind kind,
                                           int quad_order = 8, const Truncation& trunc = {}) {
  std::vector<double> out;
  for (const auto& s : path.segments()) out.push_back(primitive_length(domain, s, kind, quad_order, trunc));
  return out;
}

inline double path_length(const DomainSpec& domain, const ParamPath& path, MetricKind kind, int quad_order = 8,
                          const Truncation& trunc = {}) {
  double total = 0.0;
  for (double l : segment_lengths(domain, path, kind, quad_order, trunc)) total += l;
  return total;
}

struct DistanceOptions {
  int nodes = 64;  // polyline edges at the finest level
  int quad_order = 8;
  double tol = 1e-10;
  int max_iterations = 5000;
  Truncation trunc{};
};

struct DistanceResult {
  double lower = 0.0;
  double upper = 0.0;
  ParamPath path;
  int iterations = 0;
  bool converged = false;
  std::string seed;  // name of the seed whose descendant gave the best path
};

namespace detail {

/// Whether the straight segment a-b stays inside every planar factor.
inline bool segment_in_domain(const DomainSpec& domain, const Point& a, const Point& b) {
  if (!admissible_point(domain, a) || !admissible_point(domain, b)) return false;
  for (std::size_t i = 0; i < domain.dim(); ++i) {
    const DomainSpec& f = domain.factor(i);
    if (!f.is_annulus()) continue;
    const Complex d = b[i] - a[i];
    const double len2 = std::norm(d);
    if (len2 == 0.0) continue;
    const double u = std::clamp(-(std::conj(d) * a[i]).real() / len2, 0.0, 1.0);
    if (!planar_contains(f, a[i] + u * d)) return false;
  }
  return true;
}

enum class SeedShape { Linear, PolarShort, PolarLong, SegmentArc };

inline const char* seed_name(SeedShape s) {
  switch (s) {
    case SeedShape::Linear: return "segment";
    case SeedShape::PolarShort: return "polar";
    case SeedShape::PolarLong: return "polar-long";
    case SeedShape::SegmentArc: return "segment+arc";
  }
  return "?";
}

/// Seed curve coordinate u -> position for one planar factor.
inline Complex seed_coordinate(SeedShape shape, Complex a, Complex b, double u) {
  if (shape == SeedShape::Linear || a == Complex{} || b == Complex{}) return a + u * (b - a);
  const double ra = std::abs(a), rb = std::abs(b);
  double dtheta = std::arg(b / a);
  if (shape == SeedShape::PolarLong) dtheta -= std::copysign(2.0 * std::numbers::pi, dtheta == 0.0 ? 1.0 : dtheta);
  const double ta = std::arg(a);
  if (shape == SeedShape::SegmentArc) {
    const double radial = std::abs(rb - ra);
    const double arc = rb * std::abs(dtheta);
    const double split = radial + arc > 0.0 ? radial / (radial + arc) : 0.0;
    if (u < split) return std::polar(ra + (rb - ra) * (u / split), ta);
    return std::polar(rb, ta + dtheta * (split < 1.0 ? (u - split) / (1.0 - split) : 1.0));
  }
  return std::polar(std::pow(ra, 1.0 - u) * std::pow(rb, u), ta + u * dtheta);
}

inline std::vector<Point> seed_nodes(const DomainSpec& domain, SeedShape shape, const Point& z, const Point& w,
                                     int edges) {
  std::vector<Point> nodes;
  nodes.reserve(static_cast<std::size_t>(edges) + 1);
  for (int k = 0; k <= edges; ++k) {
    const double u = static_cast<double>(k) / edges;
    std::vector<Complex> c(domain.dim());
    for (std::size_t i = 0; i < domain.dim(); ++i) {
      const SeedShape s = domain.factor(i).is_annulus() ? shape : SeedShape::Linear;
      c[i] = seed_coordinate(s, z[i], w[i], u);
    }
    nodes.emplace_back(c);
  }
  nodes.front() = z;
  nodes.back() = w;
  return nodes;
}

inline bool polyline_in_domain(const DomainSpec& domain, const std::vector<Point>& nodes) {
  for (std::size_t k = 1; k < nodes.size(); ++k)
    if (!segment_in_domain(domain, nodes[k - 1], nodes[k])) return false;
  return true;
}

inline std::vector<Point> subdivide(const std::vector<Point>& nodes) {
  std::vector<Point> out;
  out.reserve(2 * nodes.size() - 1);
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
    out.push_back(nodes[k]);
    out.push_back(lerp(nodes[k], nodes[k + 1], 0.5));
  }
  out.push_back(nodes.back());
  return out;
}

/// Discrete energy S * sum_k sum_i h_i(midpoint_k) |x_{k+1,i} - x_{k,i}|^2 over interior nodes.
class PolylineEnergy {
 public:
  PolylineEnergy(const DomainSpec& domain, Point z, Point w, int edges, MetricKind kind, const Truncation& trunc)
      : domain_(domain), z_(std::move(z)), w_(std::move(w)), edges_(edges), kind_(kind), trunc_(trunc) {}

  Eigen::VectorXd pack(const std::vector<Point>& nodes) const {
    const std::size_t n = domain_.dim();
    Eigen::VectorXd x(static_cast<Eigen::Index>(2 * n * static_cast<std::size_t>(edges_ - 1)));
    for (int k = 1; k < edges_; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto idx = static_cast<Eigen::Index>(2 * (n * static_cast<std::size_t>(k - 1) + i));
        x[idx] = nodes[static_cast<std::size_t>(k)][i].real();
        x[idx + 1] = nodes[static_cast<std::size_t>(k)][i].imag();
      }
    }
    return x;
  }

  std::vector<Point> unpack(const Eigen::VectorXd& x) const {
    const std::size_t n = domain_.dim();
    std::vector<Point> nodes;
    nodes.reserve(static_cast<std::size_t>(edges_) + 1);
    nodes.push_back(z_);
    for (int k = 1; k < edges_; ++k) {
      std::vector<Complex> c(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto idx = static_cast<Eigen::Index>(2 * (n * static_cast<std::size_t>(k - 1) + i));
        c[i] = Complex(x[idx], x[idx + 1]);
      }
      nodes.emplace_back(c);
    }
    nodes.push_back(w_);
    return nodes;
  }

  double operator()(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
    const std::size_t n = domain_.dim();
    const std::vector<Point> nodes = unpack(x);
    grad.setZero(x.size());
    const double scale = static_cast<double>(edges_);
    double energy = 0.0;
    for (int k = 0; k < edges_; ++k) {
      const Point& a = nodes[static_cast<std::size_t>(k)];
      const Point& b = nodes[static_cast<std::size_t>(k) + 1];
      if (!segment_in_domain(domain_, a, b)) return std::numeric_limits<double>::infinity();
      DiagonalMetric h;
      try {
        h = diagonal_metric(domain_, lerp(a, b, 0.5), kind_, true, trunc_);
      } catch (const Error&) {
        return std::numeric_limits<double>::infinity();
      }
      for (std::size_t i = 0; i < n; ++i) {
        const Complex delta = b[i] - a[i];
        const double d2 = std::norm(delta);
        energy += scale * h.coeff[i] * d2;
        // Complex-packed gradient: d/dRe + i d/dIm.
        const Complex from_metric = scale * std::conj(h.dz[i]) * d2;
        const Complex from_step = 2.0 * scale * h.coeff[i] * delta;
        if (k >= 1) add(grad, k, i, from_metric - from_step);
        if (k + 1 < edges_) add(grad, k + 1, i, from_metric + from_step);
      }
    }
    return std::isfinite(energy) ? energy : std::numeric_limits<double>::infinity();
  }

 private:
  void add(Eigen::VectorXd& grad, int node, std::size_t i, Complex g) const {
    const auto idx = static_cast<Eigen::Index>(2 * (domain_.dim() * static_cast<std::size_t>(node - 1) + i));
    grad[idx] += g.real();
    grad[idx + 1] += g.imag();
  }

  const DomainSpec& domain_;
  Point z_, w_;
  int edges_;
  MetricKind kind_;
  Truncation trunc_;
};

struct Candidate {
  std::vector<Point> nodes;
  double length = std::numeric_limits<double>::infinity();
  std::string seed;
};

}  // namespace detail

/// Energy-minimizing distance estimate, bracketed by the arccos lower bound.
inline DistanceResult distance(const DomainSpec& domain, const Point& z, const Point& w, MetricKind kind,
                               const DistanceOptions& opts = {}) {
  require(opts.nodes >= 1, ErrorCode::InvalidArgument, "distance needs at least one polyline edge");
  require(z.dim() == domain.dim() && w.dim() == domain.dim(), ErrorCode::InvalidArgument,
          "point dimension does not match domain");
  require_admissible(domain, z, "distance start");
  require_admissible(domain, w, "distance end");

  DistanceResult res;
  if (z == w) {
    res.path = ParamPath::segment(z, w);
    res.converged = true;
    res.seed = "segment";
    return res;
  }
  res.lower = kind == MetricKind::Bergman ? skwarczynski_bound(domain, z, w, opts.trunc)
                                          : tilde_bound(domain, z, w, opts.trunc);

  std::vector<int> levels{opts.nodes};
  while (levels.back() % 2 == 0 && levels.back() / 2 >= 8) levels.push_back(levels.back() / 2);
  std::reverse(levels.begin(), levels.end());

  LbfgsOptions lo;
  lo.f_tol = opts.tol;
  lo.max_iterations = opts.max_iterations;

  auto polyline_length = [&](const std::vector<Point>& nodes) {
    return path_length(domain, ParamPath::polyline(nodes), kind, opts.quad_order, opts.trunc);
  };

  // `best` holds the shortest path at the current level; it never gets longer
  // across levels because each level starts from the previous one subdivided.
  detail::Candidate best;
  bool converged = true;
  auto measure = [&](std::vector<Point> nodes, const std::string& seed) {
    detail::Candidate c{std::move(nodes), std::numeric_limits<double>::infinity(), seed};
    try {
      c.length = polyline_length(c.nodes);
    } catch (const Error& e) {
      logger().debug("distance: discarding {} candidate: {}", seed, e.what());
    }
    return c;
  };
  auto optimize = [&](const detail::Candidate& start, int edges) {
    const detail::PolylineEnergy energy(domain, z, w, edges, kind, opts.trunc);
    const LbfgsResult r = lbfgs_minimize(std::cref(energy), energy.pack(start.nodes), lo);
    res.iterations += r.iterations;
    converged = converged && r.converged;
    if (!std::isfinite(r.f)) return start;
    detail::Candidate c = measure(energy.unpack(r.x), start.seed);
    return c.length < start.length ? c : start;
  };

  bool annulus_factor = false;
  double max_angle = 0.0;
  for (std::size_t i = 0; i < domain.dim(); ++i) {
    if (!domain.factor(i).is_annulus()) continue;
    annulus_factor = true;
    max_angle = std::max(max_angle, std::abs(std::arg(w[i] / z[i])));
  }
  std::vector<detail::SeedShape> shapes{detail::SeedShape::Linear};
  if (annulus_factor) {
    shapes.push_back(detail::SeedShape::PolarShort);
    shapes.push_back(detail::SeedShape::PolarLong);
    if (max_angle > std::numbers::pi / 2) shapes.push_back(detail::SeedShape::SegmentArc);
  }

  const int coarse = levels.front();
  for (const auto shape : shapes) {
    std::vector<Point> nodes = detail::seed_nodes(domain, shape, z, w, coarse);
    if (!detail::polyline_in_domain(domain, nodes)) continue;
    detail::Candidate c = optimize(measure(std::move(nodes), detail::seed_name(shape)), coarse);
    if (c.length < best.length) best = std::move(c);
  }
  require(std::isfinite(best.length), ErrorCode::NearSingularLocus, "no admissible seed path between the endpoints");

  for (std::size_t l = 1; l < levels.size(); ++l) {
    best = optimize({detail::subdivide(best.nodes), best.length, best.seed}, levels[l]);
  }

  if (!converged) logger().warn("distance: optimizer hit its iteration cap; reporting best path so far");
  res.upper = best.length;
  res.path = ParamPath::polyline(best.nodes);
  res.converged = converged;
  res.seed = best.seed;
  return res;
}

/// Segment from the kernel-zero side at -1/(s sqrt|log r^2|) to -1/sqrt|log r^2|,
/// then the upper half-circle of radius 1/sqrt|log r^2| to the positive axis.
inline ParamPath paper_path_thm4(double r, double s) {
  const DomainSpec domain = DomainSpec::annulus(r);
  require(s > 0.0, ErrorCode::InvalidArgument, "path parameter s must be positive");
  const double rho = 1.0 / std::sqrt(std::abs(2.0 * std::log(r)));
  const Complex a(-rho / s, 0.0), b(-rho, 0.0);
  require_admissible(domain, Point(a), "thm4 path start");
  require_admissible(domain, Point(b), "thm4 path corner");
  return ParamPath({LinearSegment{Point(a), Point(b)}, CircularArc{rho, std::numbers::pi, 0.0}});
}

/// Segment from i/(xi (2|log r^2|)^{1/4}) to i/(2|log r^2|)^{1/4}, then the
/// quarter arc of that radius down to the positive axis.
inline ParamPath paper_path_thm5(double r, Complex xi) {
  const DomainSpec domain = DomainSpec::annulus(r);
  require(xi != Complex{}, ErrorCode::InvalidArgument, "path parameter xi must be nonzero");
  const double rho = std::pow(2.0 * std::abs(2.0 * std::log(r)), -0.25);
  const Complex a = Complex(0.0, rho) / xi, b(0.0, rho);
  require_admissible(domain, Point(a), "thm5 path start");
  require_admissible(domain, Point(b), "thm5 path corner");
  return ParamPath({LinearSegment{Point(a), Point(b)}, CircularArc{rho, std::numbers::pi / 2, 0.0}});
}

}  // namespace bergman
