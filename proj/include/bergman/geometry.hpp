#pragma once

#include <bergman/domain.hpp>
#include <bergman/error.hpp>
#include <bergman/kernel.hpp>
#include <bergman/log.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace bergman {

enum class MetricKind { Bergman, Tilde };

/// Hermitian tensors at a point. T_{ij} stands for the coefficient of dz_i d(conj z_j).
struct MetricSample {
  Point z;
  Eigen::MatrixXcd metric;
  double det_metric = 0.0;
  std::optional<Eigen::MatrixXcd> ricci;
  std::optional<Eigen::MatrixXcd> tilde;
  // Planar domains only: the tilde tensor built directly as d dbar log(K K_11 - K_1 K_1bar).
  std::optional<double> tilde_direct;
};

namespace detail {

// On-diagonal entries of one planar factor. K_ab = d^a_z d^b_zbar K(z, z).
struct DiagonalJets {
  Complex k, k10, k01, k11, k20, k02, k21, k12, k22;

  explicit DiagonalJets(const FactorJet& j)
      : k(j.at(0, 0)),
        k10(j.at(1, 0)),
        k01(j.at(0, 1)),
        k11(j.at(1, 1)),
        k20(j.order.a >= 2 ? j.d[2][0] : Complex{}),
        k02(j.order.b >= 2 ? j.d[0][2] : Complex{}),
        k21(j.order.a >= 2 ? j.d[2][1] : Complex{}),
        k12(j.order.b >= 2 ? j.d[1][2] : Complex{}),
        k22(j.order.a >= 2 && j.order.b >= 2 ? j.d[2][2] : Complex{}) {}

  // D = K K_11 - K_10 K_01 and its first/mixed derivatives.
  Complex d() const { return k * k11 - k10 * k01; }
  Complex d_z() const { return k * k21 - k20 * k01; }
  Complex d_zbar() const { return k * k12 - k10 * k02; }
  Complex d_zzbar() const { return k * k22 - k20 * k02; }
};

inline double planar_metric(const DiagonalJets& j) { return (j.d() / (j.k * j.k)).real(); }

// d/dz of T = D / K^2.
inline Complex planar_metric_dz(const DiagonalJets& j) {
  const Complex k2 = j.k * j.k;
  return j.d_z() / k2 - 2.0 * j.d() * j.k10 / (k2 * j.k);
}

// Ric = -d dbar log T, by the quotient rule on T = D K^-2.
inline double planar_ricci(const DiagonalJets& j) {
  const Complex k = j.k;
  const Complex k2 = k * k;
  const Complex k3 = k2 * k;
  const Complex k4 = k2 * k2;
  const Complex d = j.d();
  const Complex t = d / k2;
  const Complex t_z = j.d_z() / k2 - 2.0 * d * j.k10 / k3;
  const Complex t_zbar = j.d_zbar() / k2 - 2.0 * d * j.k01 / k3;
  const Complex t_zzbar = j.d_zzbar() / k2 - 2.0 * j.d_z() * j.k01 / k3 - 2.0 * j.d_zbar() * j.k10 / k3 -
                          2.0 * d * j.k11 / k3 + 6.0 * d * j.k10 * j.k01 / k4;
  return (-(t * t_zzbar - t_z * t_zbar) / (t * t)).real();
}

// d dbar log D expanded in jet entries (six terms over D and D^2).
inline double planar_tilde_direct(const DiagonalJets& j) {
  const Complex d = j.d();
  const Complex d2 = d * d;
  const Complex k = j.k;
  const Complex out = -j.k10 * j.k01 * j.k20 * j.k02 / d2 - j.k20 * j.k02 / d +
                      k * j.k01 * j.k12 * j.k20 / d2 + k * j.k10 * j.k21 * j.k02 / d2 -
                      k * k * j.k12 * j.k21 / d2 + k * j.k22 / d;
  return out.real();
}

inline Eigen::MatrixXcd metric_from_jet(const KernelJet& jet) {
  const auto n = static_cast<Eigen::Index>(jet.dim());
  const Complex k = jet.value();
  Eigen::MatrixXcd t(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto ui = static_cast<std::size_t>(i);
      const auto uj = static_cast<std::size_t>(j);
      t(i, j) = (k * jet.dz_dzeta_bar(ui, uj) - jet.dz(ui) * jet.dzeta_bar(uj)) / (k * k);
    }
  }
  return t;
}

inline double min_eigenvalue(const Eigen::MatrixXcd& h) {
  if (h.rows() == 1) return h(0, 0).real();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

inline double clamp_cosine(double value, const char* which) {
  if (value > 1.0) {
    logger().debug("{}: arccos argument {:.17g} clamped to 1", which, value);
    return 1.0;
  }
  return std::max(value, 1e-300);
}

}  // namespace detail

/// Matrix K K_{i jbar} - K_i K_{jbar} at (z, zeta); equals K^2 d_i dbar_j log K.
inline Eigen::MatrixXcd defect_matrix(const KernelJet& jet) {
  const auto n = static_cast<Eigen::Index>(jet.dim());
  const Complex k = jet.value();
  Eigen::MatrixXcd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto ui = static_cast<std::size_t>(i);
      const auto uj = static_cast<std::size_t>(j);
      m(i, j) = k * jet.dz_dzeta_bar(ui, uj) - jet.dz(ui) * jet.dzeta_bar(uj);
    }
  }
  return m;
}

/// Bergman metric tensor d_i dbar_j log K(z, z) and its determinant.
inline MetricSample bergman_metric(const DomainSpec& domain, const Point& z, const Truncation& trunc = {}) {
  const KernelJet jet = eval_kernel_jet(domain, z, z, {1, 1}, trunc);
  MetricSample s;
  s.z = z;
  s.metric = detail::metric_from_jet(jet);
  s.det_metric = s.metric.determinant().real();
  if (!(detail::min_eigenvalue(s.metric) > 0.0)) {
    fail(ErrorCode::NonPositiveMetric, "Bergman metric lost positive definiteness at " + domain.describe());
  }
  return s;
}

namespace detail {

inline MetricSample full_sample(const DomainSpec& domain, const Point& z, const Truncation& trunc) {
  const KernelJet jet = eval_kernel_jet(domain, z, z, {2, 2}, trunc);
  MetricSample s;
  s.z = z;
  s.metric = metric_from_jet(jet);
  s.det_metric = s.metric.determinant().real();
  if (!(min_eigenvalue(s.metric) > 0.0)) {
    fail(ErrorCode::NonPositiveMetric, "Bergman metric lost positive definiteness at " + domain.describe());
  }
  const auto n = static_cast<Eigen::Index>(domain.dim());
  // log det T splits over planar factors, so Ric is diagonal with planar entries.
  Eigen::MatrixXcd ric = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    ric(i, i) = planar_ricci(DiagonalJets(jet.factor(static_cast<std::size_t>(i))));
  }
  s.ricci = ric;
  s.tilde = static_cast<double>(n + 1) * s.metric - ric;
  if (domain.is_planar()) s.tilde_direct = planar_tilde_direct(DiagonalJets(jet.factor(0)));
  return s;
}

}  // namespace detail

/// Ricci form -d dbar log det T, with T and det T.
inline MetricSample ricci_tensor(const DomainSpec& domain, const Point& z, const Truncation& trunc = {}) {
  MetricSample s = detail::full_sample(domain, z, trunc);
  s.tilde.reset();
  s.tilde_direct.reset();
  return s;
}

/// All tensors, including the tilde tensor (n+1) T - Ric.
inline MetricSample tilde_metric(const DomainSpec& domain, const Point& z, const Truncation& trunc = {}) {
  return detail::full_sample(domain, z, trunc);
}

inline double vector_length(const MetricSample& sample, std::span<const Complex> x, MetricKind kind) {
  const Eigen::MatrixXcd* h = &sample.metric;
  if (kind == MetricKind::Tilde) {
    require(sample.tilde.has_value(), ErrorCode::InvalidArgument, "sample has no tilde tensor");
    h = &*sample.tilde;
  }
  require(static_cast<Eigen::Index>(x.size()) == h->rows(), ErrorCode::InvalidArgument, "vector size mismatch");
  Complex q{};
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      q += (*h)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * x[i] * std::conj(x[j]);
    }
  }
  return std::sqrt(std::max(0.0, q.real()));
}

/// arccos(|K(z,zeta)| / sqrt(K(z,z) K(zeta,zeta))): lower bound for the Bergman distance.
inline double skwarczynski_bound(const DomainSpec& domain, const Point& z, const Point& zeta,
                                 const Truncation& trunc = {}) {
  const double kzz = kernel_value(domain, z, z, trunc).real();
  const double kww = kernel_value(domain, zeta, zeta, trunc).real();
  const double kzw = std::abs(kernel_value(domain, z, zeta, trunc));
  return std::acos(detail::clamp_cosine(kzw / std::sqrt(kzz * kww), "skwarczynski_bound"));
}

/// sqrt(det(K(z,z)^2 T(z)) det(K(zeta,zeta)^2 T(zeta))): the normalization of the defect determinant.
inline double defect_scale(const DomainSpec& domain, const Point& z, const Point& zeta,
                           const Truncation& trunc = {}) {
  const double dz = defect_matrix(eval_kernel_jet(domain, z, z, {1, 1}, trunc)).determinant().real();
  const double dw = defect_matrix(eval_kernel_jet(domain, zeta, zeta, {1, 1}, trunc)).determinant().real();
  return std::sqrt(dz * dw);
}

/// Lower bound for the tilde distance from the Plücker-composed embedding.
inline double tilde_bound(const DomainSpec& domain, const Point& z, const Point& zeta, const Truncation& trunc = {}) {
  const double num = std::abs(defect_matrix(eval_kernel_jet(domain, z, zeta, {1, 1}, trunc)).determinant());
  return std::acos(detail::clamp_cosine(num / defect_scale(domain, z, zeta, trunc), "tilde_bound"));
}

/// Grid for one planar coordinate: a Cartesian box or a polar sector.
struct SamplingRegion {
  enum class Shape { Box, Polar };
  Shape shape = Shape::Box;
  double lo0 = 0.0, hi0 = 0.0;  // x range, or radius range
  double lo1 = 0.0, hi1 = 0.0;  // y range, or angle range

  static SamplingRegion box(double x0, double x1, double y0, double y1) { return {Shape::Box, x0, x1, y0, y1}; }
  static SamplingRegion polar(double rho0, double rho1, double theta0, double theta1) {
    return {Shape::Polar, rho0, rho1, theta0, theta1};
  }

  // Inclusive endpoints, so the (2k-1)-grid contains the k-grid.
  std::vector<Complex> nodes(int n0, int n1) const {
    auto lin = [](double lo, double hi, int n, int i) { return n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (n - 1); };
    std::vector<Complex> out;
    out.reserve(static_cast<std::size_t>(n0) * static_cast<std::size_t>(n1));
    for (int i = 0; i < n0; ++i) {
      for (int j = 0; j < n1; ++j) {
        const double u = lin(lo0, hi0, n0, i);
        const double v = lin(lo1, hi1, n1, j);
        out.push_back(shape == Shape::Box ? Complex(u, v) : std::polar(u, v));
      }
    }
    return out;
  }
};

struct RicciRatioEstimate {
  double value = std::numeric_limits<double>::infinity();
  Point argmin;
  int grid0 = 0;
  int grid1 = 0;
  std::size_t points = 0;
};

/// Grid estimate of inf Ric(X,X)/T(X,X); a sampled hypothesis constant, not a certified bound.
inline RicciRatioEstimate ricci_ratio_min(const DomainSpec& domain, std::span<const SamplingRegion> regions,
                                          int grid0, int grid1, const Truncation& trunc = {}) {
  require(regions.size() == domain.dim(), ErrorCode::InvalidArgument, "need one sampling region per coordinate");
  require(grid0 >= 1 && grid1 >= 1, ErrorCode::InvalidArgument, "grid sizes must be positive");
  std::vector<std::vector<Complex>> axes;
  for (const auto& region : regions) axes.push_back(region.nodes(grid0, grid1));

  RicciRatioEstimate est;
  est.grid0 = grid0;
  est.grid1 = grid1;
  std::vector<std::size_t> idx(axes.size(), 0);
  while (true) {
    std::vector<Complex> coords;
    for (std::size_t f = 0; f < axes.size(); ++f) coords.push_back(axes[f][idx[f]]);
    Point p(coords);
    require_admissible(domain, p, "ricci_ratio_min grid point");
    const MetricSample s = ricci_tensor(domain, p, trunc);
    double ratio;
    if (domain.is_planar()) {
      ratio = (*s.ricci)(0, 0).real() / s.metric(0, 0).real();
    } else {
      Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> solver(*s.ricci, s.metric, Eigen::EigenvaluesOnly);
      ratio = solver.eigenvalues().minCoeff();
    }
    ++est.points;
    if (ratio < est.value) {
      est.value = ratio;
      est.argmin = p;
    }
    std::size_t f = 0;
    while (f < idx.size() && ++idx[f] == axes[f].size()) idx[f++] = 0;
    if (f == idx.size()) break;
  }
  return est;
}

/// Diagonal metric coefficients h_i(z) (all supported domains have diagonal
/// tensors: planar, or products of planar factors) with optional d h_i / d z_i.
struct DiagonalMetric {
  std::vector<double> coeff;
  std::vector<Complex> dz;
};

inline DiagonalMetric diagonal_metric(const DomainSpec& domain, const Point& z, MetricKind kind, bool with_gradient,
                                      const Truncation& trunc = {}) {
  const std::size_t n = domain.dim();
  DiagonalMetric out;
  out.coeff.resize(n);
  if (with_gradient) out.dz.resize(n);

  auto tilde_at = [&](const DomainSpec& planar, Complex w) {
    const detail::DiagonalJets j(planar_jet(planar, w, w, {2, 2}, trunc));
    return static_cast<double>(n + 1) * detail::planar_metric(j) - detail::planar_ricci(j);
  };

  for (std::size_t i = 0; i < n; ++i) {
    const DomainSpec& planar = domain.factor(i);
    const Complex w = z[i];
    if (kind == MetricKind::Bergman) {
      const JetOrder order = with_gradient ? JetOrder{2, 1} : JetOrder{1, 1};
      const detail::DiagonalJets j(planar_jet(planar, w, w, order, trunc));
      out.coeff[i] = detail::planar_metric(j);
      if (with_gradient) out.dz[i] = detail::planar_metric_dz(j);
    } else {
      out.coeff[i] = tilde_at(planar, w);
      if (with_gradient) {
        // Third-order jets are not carried, so the tilde gradient is differenced.
        const double h = 1e-6 * std::max(1.0, std::abs(w));
        const double fx = (tilde_at(planar, w + h) - tilde_at(planar, w - h)) / (2.0 * h);
        const double fy = (tilde_at(planar, w + Complex(0, h)) - tilde_at(planar, w - Complex(0, h))) / (2.0 * h);
        out.dz[i] = 0.5 * Complex(fx, -fy);
      }
    }
  }
  return out;
}

}  // namespace bergman
