#pragma once

#include <bergman/domain.hpp>
#include <bergman/error.hpp>

#include <algorithm>
#include <cmath>
#include <type_traits>
#include <variant>
#include <utility>
#include <vector>

namespace bergman {

struct LinearSegment {
  Point start;
  Point end;
};

/// Arc of the circle |z| = radius in a planar domain, traversed from angle_start to angle_end.
struct CircularArc {
  double radius = 0.0;
  double angle_start = 0.0;
  double angle_end = 0.0;
};

struct Polyline {
  std::vector<Point> nodes;
};

using PathPrimitive = std::variant<LinearSegment, CircularArc, Polyline>;

/// Position and velocity of a primitive at u in [0, 1].
struct PathSample {
  Point position;
  std::vector<Complex> velocity;
};

namespace detail {

inline std::vector<Complex> point_diff(const Point& a, const Point& b) {
  std::vector<Complex> d(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) d[i] = a[i] - b[i];
  return d;
}

inline double euclidean_norm(std::span<const Complex> v) {
  double s = 0.0;
  for (const Complex& c : v) s += std::norm(c);
  return std::sqrt(s);
}

inline Point lerp(const Point& a, const Point& b, double u) {
  std::vector<Complex> out(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) out[i] = a[i] + u * (b[i] - a[i]);
  return Point(out);
}

}  // namespace detail

inline Point primitive_start(const PathPrimitive& p) {
  return std::visit(
      [](const auto& s) -> Point {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, LinearSegment>) return s.start;
        else if constexpr (std::is_same_v<S, CircularArc>) return Point(std::polar(s.radius, s.angle_start));
        else return s.nodes.front();
      },
      p);
}

inline Point primitive_end(const PathPrimitive& p) {
  return std::visit(
      [](const auto& s) -> Point {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, LinearSegment>) return s.end;
        else if constexpr (std::is_same_v<S, CircularArc>) return Point(std::polar(s.radius, s.angle_end));
        else return s.nodes.back();
      },
      p);
}

/// Euclidean length of a primitive.
inline double primitive_extent(const PathPrimitive& p) {
  return std::visit(
      [](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, LinearSegment>) {
          return detail::euclidean_norm(detail::point_diff(s.end, s.start));
        } else if constexpr (std::is_same_v<S, CircularArc>) {
          return s.radius * std::abs(s.angle_end - s.angle_start);
        } else {
          double total = 0.0;
          for (std::size_t k = 1; k < s.nodes.size(); ++k)
            total += detail::euclidean_norm(detail::point_diff(s.nodes[k], s.nodes[k - 1]));
          return total;
        }
      },
      p);
}

/// Piecewise C^1 path: a chain of primitives with matching endpoints.
class ParamPath {
 public:
  ParamPath() = default;

  explicit ParamPath(std::vector<PathPrimitive> segments) : segments_(std::move(segments)) {
    require(!segments_.empty(), ErrorCode::InvalidArgument, "path needs at least one segment");
    for (const auto& s : segments_) {
      if (const auto* poly = std::get_if<Polyline>(&s))
        require(poly->nodes.size() >= 2, ErrorCode::InvalidArgument, "polyline needs two nodes");
      if (const auto* arc = std::get_if<CircularArc>(&s))
        require(arc->radius > 0.0, ErrorCode::InvalidArgument, "arc radius must be positive");
    }
    for (std::size_t k = 1; k < segments_.size(); ++k) {
      const Point a = primitive_end(segments_[k - 1]);
      const Point b = primitive_start(segments_[k]);
      require(a.dim() == b.dim(), ErrorCode::InvalidArgument, "segment dimensions differ");
      const double gap = detail::euclidean_norm(detail::point_diff(a, b));
      require(gap <= 1e-12 * std::max(1.0, detail::euclidean_norm(a.coords())), ErrorCode::InvalidArgument,
              "consecutive path segments do not meet");
    }
  }

  static ParamPath segment(const Point& a, const Point& b) { return ParamPath({LinearSegment{a, b}}); }
  static ParamPath polyline(std::vector<Point> nodes) { return ParamPath({Polyline{std::move(nodes)}}); }

  const std::vector<PathPrimitive>& segments() const { return segments_; }
  Point start() const { return primitive_start(segments_.front()); }
  Point end() const { return primitive_end(segments_.back()); }
  std::size_t dim() const { return start().dim(); }

  double euclidean_length() const {
    double total = 0.0;
    for (const auto& s : segments_) total += primitive_extent(s);
    return total;
  }

  /// Position at t in [0, 1], segments weighted by Euclidean extent.
  Point at(double t) const {
    const double total = euclidean_length();
    if (total == 0.0) return start();
    double target = std::clamp(t, 0.0, 1.0) * total;
    for (const auto& s : segments_) {
      const double ext = primitive_extent(s);
      if (target <= ext || &s == &segments_.back()) {
        const double u = ext > 0.0 ? std::clamp(target / ext, 0.0, 1.0) : 0.0;
        return sample_primitive(s, u).position;
      }
      target -= ext;
    }
    return end();
  }

  /// Position and velocity on a single primitive; polylines are uniform in node index.
  static PathSample sample_primitive(const PathPrimitive& p, double u) {
    return std::visit(
        [u](const auto& s) -> PathSample {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, LinearSegment>) {
            return {detail::lerp(s.start, s.end, u), detail::point_diff(s.end, s.start)};
          } else if constexpr (std::is_same_v<S, CircularArc>) {
            const double dtheta = s.angle_end - s.angle_start;
            const Complex z = std::polar(s.radius, s.angle_start + u * dtheta);
            return {Point(z), {Complex(0.0, dtheta) * z}};
          } else {
            const auto edges = static_cast<double>(s.nodes.size() - 1);
            const double x = std::clamp(u, 0.0, 1.0) * edges;
            const auto k = std::min(static_cast<std::size_t>(x), s.nodes.size() - 2);
            auto v = detail::point_diff(s.nodes[k + 1], s.nodes[k]);
            for (auto& c : v) c *= edges;
            return {detail::lerp(s.nodes[k], s.nodes[k + 1], x - static_cast<double>(k)), v};
          }
        },
        p);
  }

 private:
  std::vector<PathPrimitive> segments_;
};

}  // namespace bergman
