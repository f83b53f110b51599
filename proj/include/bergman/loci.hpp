#pragma once

#include <bergman/domain.hpp>
#include <bergman/error.hpp>
#include <bergman/geometry.hpp>
#include <bergman/kernel.hpp>
#include <bergman/log.hpp>

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace bergman {

struct SignBracket {
  double lo = 0.0, hi = 0.0;
  double f_lo = 0.0, f_hi = 0.0;
};

struct Winding {
  // Axis-aligned cell [re0, re1] x [im0, im1] whose boundary carried the count.
  double re0 = 0.0, re1 = 0.0, im0 = 0.0, im1 = 0.0;
  int count = 0;
};

struct NewtonTrace {
  int iterations = 0;
  double final_step = 0.0;
};

using RootEvidence = std::variant<SignBracket, Winding, NewtonTrace>;

struct RootReport {
  Complex location;   // root in the searched variable's plane (zeta* for kernel zeros)
  Complex parameter;  // search parameter at the root (s* or xi*)
  double residual = 0.0;
  double scale = 1.0;  // local magnitude the residual is measured against
  RootEvidence evidence;
  std::optional<NewtonTrace> newton;
};

struct RepCoordResult {
  Point z0;
  Point z;
  std::vector<Complex> w;
  Complex jac_det;
  Eigen::MatrixXcd Tinv_at_z0;
  Eigen::MatrixXcd jacobian;  // dw_i / dz_k
};

namespace detail {

inline void require_kernel_nonzero(const KernelJet& off, const DomainSpec& domain, const Point& z, const Point& z0,
                                   const Truncation& trunc) {
  const double scale = std::sqrt(kernel_value(domain, z, z, trunc).real() * kernel_value(domain, z0, z0, trunc).real());
  if (std::abs(off.value()) <= 1e-13 * scale) {
    fail(ErrorCode::KernelZeroAtBasePair, "K(z, z0) vanishes to 1e-13 relative; representative coordinates are undefined");
  }
}

/// d_i d_jbar log K as a matrix, from a (1,1) jet.
inline Eigen::MatrixXcd log_hessian(const KernelJet& jet) {
  const Complex k = jet.value();
  return defect_matrix(jet) / (k * k);
}

}  // namespace detail

/// K(z,z0) d_i d_jbar K - d_i K d_jbar K at (z, z0) when n = 1; its determinant in general.
inline Complex immersion_defect(const DomainSpec& domain, const Point& z0, const Point& z,
                                const Truncation& trunc = {}) {
  return defect_matrix(eval_kernel_jet(domain, z, z0, {1, 1}, trunc)).determinant();
}

/// det of d_i d_jbar log K(z, zeta) at zeta = z0.
inline Complex rep_jacobian_det(const DomainSpec& domain, const Point& z0, const Point& z,
                                const Truncation& trunc = {}) {
  const KernelJet off = eval_kernel_jet(domain, z, z0, {1, 1}, trunc);
  detail::require_kernel_nonzero(off, domain, z, z0, trunc);
  return detail::log_hessian(off).determinant();
}

inline RepCoordResult representative_coordinates(const DomainSpec& domain, const Point& z0, const Point& z,
                                                 const Truncation& trunc = {}) {
  const KernelJet off = eval_kernel_jet(domain, z, z0, {1, 1}, trunc);
  detail::require_kernel_nonzero(off, domain, z, z0, trunc);
  const KernelJet diag = eval_kernel_jet(domain, z0, z0, {1, 1}, trunc);
  const auto n = static_cast<Eigen::Index>(domain.dim());

  RepCoordResult out;
  out.z0 = z0;
  out.z = z;
  const Eigen::MatrixXcd t0 = detail::metric_from_jet(diag);
  out.Tinv_at_z0 = t0.inverse();

  Eigen::VectorXcd v(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    v[j] = off.dzeta_bar(ju) / off.value() - diag.dzeta_bar(ju) / diag.value();
  }
  // w_i = sum_j T^{jbar i} v_j with T^{jbar i} = (T^{-1})_{j i}.
  const Eigen::VectorXcd w = out.Tinv_at_z0.transpose() * v;
  out.w.assign(w.data(), w.data() + n);

  const Eigen::MatrixXcd hess = detail::log_hessian(off);  // (k, j) = d_k d_jbar log K
  out.jacobian = (hess * out.Tinv_at_z0).transpose();
  out.jac_det = hess.determinant();
  return out;
}

struct KernelZeroOptions {
  double scale = 1.0;  // z0 = scale / sqrt|log r^2|
  double s_tol = 1e-12;
  Truncation trunc{};
};

namespace detail {

inline double abs_log_r2(double r) { return std::abs(2.0 * std::log(r)); }

/// K(z0, zeta(s)) with zeta(s) = -1/(s sqrt|log r^2|); real because z0 conj(zeta) is real.
inline double bracket_kernel(const DomainSpec& ann, Complex z0, double s, const Truncation& trunc) {
  const Complex zeta(-1.0 / (s * std::sqrt(abs_log_r2(ann.r()))), 0.0);
  const Complex k = kernel_value(ann, Point(z0), Point(zeta), trunc);
  if (std::abs(k.imag()) > 1e-14 * std::max(1.0, std::abs(k.real()))) {
    fail(ErrorCode::InvalidArgument, "kernel is not real on the bracket");
  }
  return k.real();
}

}  // namespace detail

/// Bisection for the sign change of s -> K(z0, zeta(s)) on [s_lo, s_hi], with
/// K required positive at s_lo and negative at s_hi.
inline RootReport kernel_zero_search(double r, double s_lo, double s_hi, const KernelZeroOptions& opts = {}) {
  const DomainSpec ann = DomainSpec::annulus(r);
  require(0.0 < s_lo && s_lo < s_hi, ErrorCode::InvalidArgument, "need 0 < s_lo < s_hi");
  const double root_l = std::sqrt(detail::abs_log_r2(r));
  const Complex z0(opts.scale / root_l, 0.0);
  require_admissible(ann, Point(z0), "z0");
  for (double s : {s_lo, s_hi}) require_admissible(ann, Point(Complex(-1.0 / (s * root_l), 0.0)), "zeta(s)");

  double lo = s_lo, hi = s_hi;
  double f_lo = detail::bracket_kernel(ann, z0, lo, opts.trunc);
  double f_hi = detail::bracket_kernel(ann, z0, hi, opts.trunc);
  if (!(f_lo > 0.0 && f_hi < 0.0)) {
    fail(ErrorCode::NoSignChange, "no sign change of K(z0, zeta(s)) on [" + std::to_string(s_lo) + ", " +
                                      std::to_string(s_hi) + "]: K = " + std::to_string(f_lo) + ", " +
                                      std::to_string(f_hi));
  }
  const SignBracket bracket{lo, hi, f_lo, f_hi};

  // Bisect past s_tol down to the last representable midpoint.
  while (true) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = detail::bracket_kernel(ann, z0, mid, opts.trunc);
    if (f_mid == 0.0) {
      lo = hi = mid;
      f_lo = f_hi = 0.0;
      break;
    }
    (f_mid > 0.0 ? lo : hi) = mid;
    (f_mid > 0.0 ? f_lo : f_hi) = f_mid;
  }
  require(hi - lo <= opts.s_tol, ErrorCode::InvalidArgument, "bisection failed to reach the requested tolerance");

  const bool take_lo = std::abs(f_lo) <= std::abs(f_hi);
  const double s_star = take_lo ? lo : hi;
  RootReport rep;
  rep.parameter = Complex(s_star, 0.0);
  rep.location = Complex(-1.0 / (s_star * root_l), 0.0);
  rep.residual = std::abs(take_lo ? f_lo : f_hi);
  rep.scale = kernel_value(ann, Point(z0), Point(z0), opts.trunc).real();
  rep.evidence = bracket;
  return rep;
}

/// The symmetric bracket [1 - eps, 1 + eps] around the leading-order zero.
inline RootReport kernel_zero_bisection(double r, double eps, const KernelZeroOptions& opts = {}) {
  require(eps > 0.0 && eps < 1.0, ErrorCode::InvalidArgument, "bracket half-width must lie in (0, 1)");
  const SmallnessReport small = check_smallness(r, eps);
  if (!small.all()) {
    logger().info("kernel_zero_bisection: r = {:g} is outside the smallness window for eps = {:g}", r, eps);
  }
  return kernel_zero_search(r, 1.0 - eps, 1.0 + eps, opts);
}

struct Rect {
  double re0 = 0.0, re1 = 0.0, im0 = 0.0, im1 = 0.0;
  Complex center() const { return {0.5 * (re0 + re1), 0.5 * (im0 + im1)}; }
  double diameter() const { return std::hypot(re1 - re0, im1 - im0); }
  bool contains(Complex z) const { return z.real() >= re0 && z.real() <= re1 && z.imag() >= im0 && z.imag() <= im1; }
};

using ComplexFunction = std::function<Complex(Complex)>;

struct RegionRoots {
  std::vector<RootReport> roots;
  int boundary_winding = 0;
  int cell_winding_sum = 0;
  int perturbations = 0;
};

namespace detail {

struct ContourWinding {
  int count = 0;
  double min_abs = 0.0;
  double max_abs = 0.0;
};

/// (1/2 pi i) of the contour integral of f'/f along a closed polyline of corners,
/// by the trapezoidal rule with differenced f'; refines until the result is near an integer.
inline ContourWinding contour_winding(const ComplexFunction& f, const std::vector<Complex>& corners, double h) {
  int per_edge = 64;
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (int pass = 0; pass < 8; ++pass, per_edge *= 2) {
    Complex integral{};
    double min_abs = std::numeric_limits<double>::infinity(), max_abs = 0.0;
    for (std::size_t e = 0; e < corners.size(); ++e) {
      const Complex a = corners[e], b = corners[(e + 1) % corners.size()];
      const Complex dz = (b - a) / static_cast<double>(per_edge);
      const Complex dir = dz / std::abs(dz);
      for (int k = 0; k <= per_edge; ++k) {
        const Complex z = a + static_cast<double>(k) * dz;
        const Complex fz = f(z);
        const double az = std::abs(fz);
        min_abs = std::min(min_abs, az);
        max_abs = std::max(max_abs, az);
        const Complex fp = (f(z + h * dir) - f(z - h * dir)) / (2.0 * h * dir);
        const double w = (k == 0 || k == per_edge) ? 0.5 : 1.0;
        integral += w * fp / fz * dz;
      }
    }
    const double value = (integral / Complex(0.0, 2.0 * std::numbers::pi)).real();
    const double nearest = std::round(value);
    if (std::abs(value - nearest) < 1e-3 && std::abs(value - prev) < 1e-2) {
      return {static_cast<int>(nearest), min_abs, max_abs};
    }
    prev = value;
    if (!(min_abs > 0.0)) return {0, min_abs, max_abs};
  }
  fail(ErrorCode::ContourThroughZero, "winding integral did not settle to an integer");
}

inline std::vector<Complex> rect_corners(const Rect& c) {
  return {{c.re0, c.im0}, {c.re1, c.im0}, {c.re1, c.im1}, {c.re0, c.im1}};
}

inline std::vector<Complex> circle_corners(Complex center, double radius, int sides) {
  std::vector<Complex> out;
  for (int k = 0; k < sides; ++k) out.push_back(center + std::polar(radius, 2.0 * std::numbers::pi * k / sides));
  return out;
}

inline NewtonTrace newton_refine(const ComplexFunction& f, Complex& z, double h, const Rect& cell) {
  const Complex start = z;
  const double reach = cell.diameter();
  double step = 0.0;
  for (int it = 1; it <= 100; ++it) {
    const Complex fz = f(z);
    const Complex fp = (f(z + h) - f(z - h)) / (2.0 * h);
    if (std::abs(fp) == 0.0) fail(ErrorCode::NewtonDiverged, "zero derivative in Newton refinement");
    const Complex dz = fz / fp;
    z -= dz;
    step = std::abs(dz);
    if (!std::isfinite(step) || std::abs(z - start) > 2.0 * reach) {
      fail(ErrorCode::NewtonDiverged, "Newton refinement left the flagged cell");
    }
    if (step <= 1e-15 * std::max(1.0, std::abs(z))) return {it, step};
  }
  // One-ulp oscillation is accepted when the last step is already tiny.
  if (step <= 1e-12 * std::max(1.0, std::abs(z))) return {100, step};
  fail(ErrorCode::NewtonDiverged, "Newton refinement did not converge in 100 iterations");
}

inline void collect_cell_roots(const ComplexFunction& f, const Rect& cell, int count, int depth, RegionRoots& out) {
  if (count == 0) return;
  const double h = 1e-6 * cell.diameter();
  if (count == 1 || depth >= 6) {
    Complex z = cell.center();
    const NewtonTrace trace = newton_refine(f, z, h, cell);
    RootReport rep;
    rep.location = z;
    rep.parameter = z;
    rep.residual = std::abs(f(z));
    rep.evidence = Winding{cell.re0, cell.re1, cell.im0, cell.im1, count};
    rep.newton = trace;
    out.roots.push_back(rep);
    return;
  }
  const Complex c = cell.center();
  const std::array<Rect, 4> quads{Rect{cell.re0, c.real(), cell.im0, c.imag()}, Rect{c.real(), cell.re1, cell.im0, c.imag()},
                                  Rect{cell.re0, c.real(), c.imag(), cell.im1}, Rect{c.real(), cell.re1, c.imag(), cell.im1}};
  for (const Rect& q : quads) {
    const ContourWinding w = contour_winding(f, rect_corners(q), 1e-6 * q.diameter());
    collect_cell_roots(f, q, w.count, depth + 1, out);
  }
}

}  // namespace detail

/// Winding count of f around the circle |z - center| = radius.
inline int winding_number_circle(const ComplexFunction& f, Complex center, double radius, int sides = 256) {
  return detail::contour_winding(f, detail::circle_corners(center, radius, sides), 1e-6 * radius).count;
}

/// Localizes zeros of an analytic f on a rectangle by per-cell winding numbers and Newton refinement.
inline RegionRoots complex_roots_region(const ComplexFunction& f, const Rect& region, int grid0, int grid1) {
  require(grid0 >= 1 && grid1 >= 1, ErrorCode::InvalidArgument, "grid sizes must be positive");
  require(region.re1 > region.re0 && region.im1 > region.im0, ErrorCode::InvalidArgument, "empty region");
  const double cw = (region.re1 - region.re0) / grid0, ch = (region.im1 - region.im0) / grid1;

  for (int attempt = 0; attempt <= 3; ++attempt) {
    // Perturbations shift the grid lines by a fraction of a cell.
    const double shift = attempt == 0 ? 0.0 : 1e-3 * attempt;
    const Rect box{region.re0 + shift * cw, region.re1 + shift * cw, region.im0 + shift * ch, region.im1 + shift * ch};
    RegionRoots out;
    out.perturbations = attempt;
    bool touched = false;
    try {
      const detail::ContourWinding total = detail::contour_winding(f, detail::rect_corners(box), 1e-6 * box.diameter());
      if (total.min_abs <= 1e-12 * total.max_abs) touched = true;
      out.boundary_winding = total.count;
      for (int i = 0; i < grid0 && !touched; ++i) {
        for (int j = 0; j < grid1 && !touched; ++j) {
          const Rect cell{box.re0 + i * cw, box.re0 + (i + 1) * cw, box.im0 + j * ch, box.im0 + (j + 1) * ch};
          const detail::ContourWinding w = detail::contour_winding(f, detail::rect_corners(cell), 1e-6 * cell.diameter());
          if (w.min_abs <= 1e-12 * w.max_abs) {
            touched = true;
            break;
          }
          out.cell_winding_sum += w.count;
          const std::size_t before = out.roots.size();
          detail::collect_cell_roots(f, cell, w.count, 0, out);
          for (std::size_t k = before; k < out.roots.size(); ++k) out.roots[k].scale = w.max_abs;
        }
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ContourThroughZero) throw;
      touched = true;
    }
    if (!touched) {
      if (out.cell_winding_sum != out.boundary_winding) {
        logger().warn("complex_roots_region: cell counts sum to {} but the boundary winds {}", out.cell_winding_sum,
                      out.boundary_winding);
      }
      return out;
    }
    logger().debug("complex_roots_region: contour passes near a zero, perturbing grid");
  }
  fail(ErrorCode::ContourThroughZero, "a zero lies on the grid after 3 perturbations");
}

struct ReferenceRoot {
  Complex root;
  double residual = 0.0;
  int cube_branch = 0;    // k in the cube root times exp(2 pi i k / 3)
  int sqrt_sign = 1;      // sign taken for the inner square root
  bool principal = true;
};

/// Residual of 2/(1 - i/(xi c))^3 = 2 xi^2 with c = sqrt|2 log r^2|.
inline double reference_cubic_residual(double r, Complex xi) {
  const double c = std::sqrt(2.0 * detail::abs_log_r2(r));
  const Complex i(0.0, 1.0);
  const Complex lhs = 2.0 / std::pow(1.0 - i / (xi * c), 3);
  return std::abs(lhs - 2.0 * xi * xi);
}

/// Closed-form root of the leading-order defect equation, principal branches first.
inline ReferenceRoot thm5_reference_root(double r) {
  require(r > 0.0 && r < 1.0, ErrorCode::InvalidArgument, "need 0 < r < 1");
  const double c = std::sqrt(2.0 * detail::abs_log_r2(r));
  const Complex i(0.0, 1.0);
  const double s3 = std::sqrt(3.0);
  const Complex inner = std::sqrt(Complex(-27.0 * std::pow(c, 16) - 4.0 * std::pow(c, 18), 0.0));
  const Complex omega = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);

  std::optional<ReferenceRoot> best;
  for (int sign : {1, -1}) {
    const Complex q = -9.0 * i * std::pow(c, 8) + static_cast<double>(sign) * s3 * inner;
    for (int k = 0; k < 3; ++k) {
      const Complex u = std::pow(q, 1.0 / 3.0) * std::pow(omega, k);
      const Complex xi = i / c + (1.0 + i * s3) * std::pow(c, 3) / (std::cbrt(12.0) * u) +
                         (1.0 - i * s3) * u / (2.0 * std::pow(c, 3) * std::cbrt(18.0));
      const double res = reference_cubic_residual(r, xi);
      const ReferenceRoot cand{xi, res, k, sign, sign == 1 && k == 0};
      if (cand.principal && res <= 1e-6) return cand;
      if (res <= 1e-6 && !best) best = cand;
    }
  }
  if (best) {
    logger().info("thm5_reference_root: principal branch failed; validated branch k = {}, sign = {}", best->cube_branch,
                  best->sqrt_sign);
    return *best;
  }
  fail(ErrorCode::BranchAmbiguity, "no cube-root branch combination satisfies the reference equation");
}

/// |det(K d_i d_jbar K - d_i K d_jbar K)| at a point of the zero set of K(., z0).
inline double rank1_inclusion_check(const DomainSpec& domain, const Point& z0, const Point& z,
                                    const Truncation& trunc = {}) {
  require(domain.dim() >= 2, ErrorCode::InvalidArgument, "the rank-1 inclusion needs dimension at least 2");
  const KernelJet jet = eval_kernel_jet(domain, z, z0, {1, 1}, trunc);
  const double scale = std::sqrt(kernel_value(domain, z, z, trunc).real() * kernel_value(domain, z0, z0, trunc).real());
  if (std::abs(jet.value()) > 1e-10 * scale) {
    fail(ErrorCode::NotOnZeroSet, "K(z, z0) = " + std::to_string(std::abs(jet.value())) + " is not zero to 1e-10 relative");
  }
  return std::abs(defect_matrix(jet).determinant());
}

}  // namespace bergman
