#pragma once

#include <bergman/domain.hpp>
#include <bergman/error.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace bergman {

/// Series truncation controls. An evaluation that returns certifies that the
/// majorant of every dropped tail is below tol_abs, and also below tol_rel
/// times the magnitude of the result (a tail under 1e-300 always stops).
struct Truncation {
  double tol_abs = 1e-14;
  double tol_rel = 1e-17;
  long max_terms = 1'000'000;
  double boundary_margin = 1e-9;
};

struct TruncationCertificate {
  Truncation requested;
  long terms_used = 0;
  double tail_bound = 0.0;
};

/// Highest derivative order per coordinate, in z (a) and in conj(zeta) (b).
struct JetOrder {
  int a = 0;
  int b = 0;
};

inline constexpr int kMaxJetOrder = 2;
inline constexpr int kMaxTOrder = 2 * kMaxJetOrder;

/// Derivatives f^(m)(t), m <= max_order, of the planar kernel written as a
/// function of t = z * conj(zeta).
struct TDerivatives {
  std::array<Complex, kMaxTOrder + 1> f{};
  long terms_used = 0;
  double tail_bound = 0.0;
};

namespace detail {

inline double factorial(int m) {
  double out = 1.0;
  for (int i = 2; i <= m; ++i) out *= i;
  return out;
}

inline Complex ipow(Complex base, int p) {
  Complex out{1.0, 0.0};
  for (int i = 0; i < p; ++i) out *= base;
  return out;
}

inline void check_t_order(int max_order) {
  require(max_order >= 0 && max_order <= kMaxTOrder, ErrorCode::InvalidArgument,
          "t-derivative order must lie in [0, 4]");
}

inline TDerivatives disk_t_derivatives(Complex t, int max_order) {
  TDerivatives out;
  const Complex inv = 1.0 / (1.0 - t);
  Complex p = inv * inv;
  for (int m = 0; m <= max_order; ++m) {
    out.f[m] = factorial(m + 1) * p / std::numbers::pi;
    p *= inv;
  }
  out.terms_used = 1;
  return out;
}

// K(t) = -1/(pi t log r^2)
//        + (1/pi) sum_j [ r^(2j+2)/(t - r^(2j+2))^2 + r^(2j)/(1 - r^(2j) t)^2 ].
// Tail of the j-sum beyond J, for j >= 1, using |t| > r^2:
//   first block  <= (m+1)! r^(2J+4) / ((1-r^2) (|t|(1-r^2))^(m+2))
//   second block <= (m+1)! r^(2(m+1)(J+1)) / ((1-r^(2(m+1))) (1-r^2)^(m+2))
inline TDerivatives annulus_t_derivatives(double r, Complex t, int max_order, const Truncation& trunc) {
  TDerivatives out;
  const double r2 = r * r;
  const double log_r2 = 2.0 * std::log(r);
  const double abs_t = std::abs(t);
  const double pi = std::numbers::pi;

  {
    const Complex inv_t = 1.0 / t;
    Complex p = inv_t;
    double sign = 1.0;
    for (int m = 0; m <= max_order; ++m) {
      out.f[m] = -sign * factorial(m) * p / (pi * log_r2);
      p *= inv_t;
      sign = -sign;
    }
  }

  std::array<Complex, kMaxTOrder + 1> sum{};
  double a = r2;   // r^(2j+2)
  double b = 1.0;  // r^(2j)
  const double one_minus_r2 = 1.0 - r2;
  for (long j = 0;; ++j) {
    if (j >= trunc.max_terms) {
      fail(ErrorCode::SeriesTruncationFailure,
           "annulus kernel series did not reach tol " + std::to_string(trunc.tol_abs) + " within " +
               std::to_string(trunc.max_terms) + " terms");
    }
    const Complex inv_a = 1.0 / (t - a);
    const Complex inv_b = 1.0 / (1.0 - b * t);
    Complex pa = inv_a * inv_a;
    Complex pb = inv_b * inv_b;
    double bpow = b;
    double sign = 1.0;
    for (int m = 0; m <= max_order; ++m) {
      const double fact = factorial(m + 1);
      sum[m] += sign * fact * a * pa + fact * bpow * pb;
      pa *= inv_a;
      pb *= inv_b;
      bpow *= b;
      sign = -sign;
    }

    double tail = 0.0;
    const double a_next_ratio = a * r2;  // r^(2J+4)
    for (int m = 0; m <= max_order; ++m) {
      const double fact = factorial(m + 1);
      const double first = fact * a_next_ratio / (one_minus_r2 * std::pow(abs_t * one_minus_r2, m + 2));
      const double b_next = b * r2;
      const double second = fact * std::pow(b_next, m + 1) /
                            ((1.0 - std::pow(r2, m + 1)) * std::pow(one_minus_r2, m + 2));
      tail = std::max(tail, (first + second) / pi);
    }
    a *= r2;
    b *= r2;
    bool relative_ok = tail < 1e-300;
    if (!relative_ok) {
      relative_ok = true;
      for (int m = 0; m <= max_order; ++m) {
        relative_ok = relative_ok && tail <= trunc.tol_rel * std::abs(out.f[m] + sum[m] / pi);
      }
    }
    if (tail < trunc.tol_abs && relative_ok) {
      out.terms_used = j + 1;
      out.tail_bound = tail;
      break;
    }
  }
  for (int m = 0; m <= max_order; ++m) out.f[m] += sum[m] / pi;
  return out;
}

}  // namespace detail

/// Kernel of a planar domain as a univariate function of t = z conj(zeta),
/// differentiated up to max_order.
inline TDerivatives planar_t_derivatives(const DomainSpec& planar, Complex t, int max_order,
                                         const Truncation& trunc = {}) {
  detail::check_t_order(max_order);
  const double abs_t = std::abs(t);
  if (std::abs(abs_t - 1.0) < trunc.boundary_margin) {
    fail(ErrorCode::NearSingularLocus, "|z conj(zeta)| is within the boundary margin of 1");
  }
  switch (planar.kind()) {
    case DomainKind::UnitDisk: return detail::disk_t_derivatives(t, max_order);
    case DomainKind::Annulus: {
      const double r2 = planar.r() * planar.r();
      if (std::abs(abs_t - r2) < trunc.boundary_margin) {
        fail(ErrorCode::NearSingularLocus, "|z conj(zeta)| is within the boundary margin of r^2");
      }
      return detail::annulus_t_derivatives(planar.r(), t, max_order, trunc);
    }
    case DomainKind::Product: break;
  }
  fail(ErrorCode::InvalidArgument, "planar_t_derivatives needs a planar domain");
}

/// Mixed derivatives d^a_z d^b_{conj zeta} K(z, zeta) of one planar factor, a, b <= 2.
struct FactorJet {
  std::array<std::array<Complex, kMaxJetOrder + 1>, kMaxJetOrder + 1> d{};
  JetOrder order;
  long terms_used = 0;
  double tail_bound = 0.0;

  Complex at(int a, int b) const {
    require(a >= 0 && b >= 0 && a <= order.a && b <= order.b, ErrorCode::InvalidArgument,
            "jet entry (" + std::to_string(a) + "," + std::to_string(b) + ") was not requested");
    return d[a][b];
  }
};

/// Converts t-derivatives of K(z, zeta) = f(z u), u = conj(zeta), into (a,b) jets:
///   d^a_z d^b_u f(z u) = sum_k C(a,k) b!/(b-k)! z^(b-k) u^(a-k) f^(a+b-k)(z u).
inline FactorJet jet_from_t_derivatives(const TDerivatives& td, Complex z, Complex zeta, JetOrder order) {
  FactorJet jet;
  jet.order = order;
  jet.terms_used = td.terms_used;
  jet.tail_bound = td.tail_bound;
  const Complex u = std::conj(zeta);
  for (int a = 0; a <= order.a; ++a) {
    for (int b = 0; b <= order.b; ++b) {
      Complex acc{};
      for (int k = 0; k <= std::min(a, b); ++k) {
        const double binom = detail::factorial(a) / (detail::factorial(k) * detail::factorial(a - k));
        const double falling = detail::factorial(b) / detail::factorial(b - k);
        acc += binom * falling * detail::ipow(z, b - k) * detail::ipow(u, a - k) * td.f[a + b - k];
      }
      jet.d[a][b] = acc;
    }
  }
  return jet;
}

inline FactorJet planar_jet(const DomainSpec& planar, Complex z, Complex zeta, JetOrder order,
                            const Truncation& trunc = {}) {
  const Complex t = z * std::conj(zeta);
  return jet_from_t_derivatives(planar_t_derivatives(planar, t, order.a + order.b, trunc), z, zeta, order);
}

/// Derivative jet of K(z, zeta) for a model domain. Product kernels factor, so
/// entries are assembled lazily from per-factor planar jets.
class KernelJet {
 public:
  KernelJet(DomainSpec domain, Point z, Point zeta, JetOrder order, std::vector<FactorJet> factors,
            TruncationCertificate certificate)
      : domain_(std::move(domain)),
        z_(std::move(z)),
        zeta_(std::move(zeta)),
        order_(order),
        factors_(std::move(factors)),
        certificate_(certificate) {}

  const DomainSpec& domain() const noexcept { return domain_; }
  const Point& z() const noexcept { return z_; }
  const Point& zeta() const noexcept { return zeta_; }
  JetOrder order() const noexcept { return order_; }
  std::size_t dim() const noexcept { return factors_.size(); }
  const FactorJet& factor(std::size_t i) const { return factors_.at(i); }
  const TruncationCertificate& certificate() const noexcept { return certificate_; }

  /// Entry for per-coordinate orders a[i] in z_i and b[i] in conj(zeta_i).
  Complex entry(std::span<const int> a, std::span<const int> b) const {
    require(a.size() == dim() && b.size() == dim(), ErrorCode::InvalidArgument, "multi-index size mismatch");
    Complex out{1.0, 0.0};
    for (std::size_t i = 0; i < dim(); ++i) out *= factors_[i].at(a[i], b[i]);
    return out;
  }

  Complex value() const { return product_except(dim(), {}); }

  /// d/dz_i K
  Complex dz(std::size_t i) const { return product_except(i, factors_.at(i).at(1, 0)); }

  /// d/d(conj zeta_j) K
  Complex dzeta_bar(std::size_t j) const { return product_except(j, factors_.at(j).at(0, 1)); }

  /// d^2/(dz_i d conj zeta_j) K
  Complex dz_dzeta_bar(std::size_t i, std::size_t j) const {
    if (i == j) return product_except(i, factors_.at(i).at(1, 1));
    Complex out = factors_.at(i).at(1, 0) * factors_.at(j).at(0, 1);
    for (std::size_t k = 0; k < dim(); ++k) {
      if (k != i && k != j) out *= factors_[k].at(0, 0);
    }
    return out;
  }

 private:
  Complex product_except(std::size_t skip, Complex replacement) const {
    Complex out = skip < dim() ? replacement : Complex{1.0, 0.0};
    for (std::size_t k = 0; k < dim(); ++k) {
      if (k != skip) out *= factors_[k].at(0, 0);
    }
    return out;
  }

  DomainSpec domain_;
  Point z_;
  Point zeta_;
  JetOrder order_;
  std::vector<FactorJet> factors_;
  TruncationCertificate certificate_;
};

inline KernelJet eval_kernel_jet(const DomainSpec& domain, const Point& z, const Point& zeta, JetOrder order,
                                 const Truncation& trunc = {}) {
  require(order.a >= 0 && order.b >= 0 && order.a <= kMaxJetOrder && order.b <= kMaxJetOrder,
          ErrorCode::InvalidArgument, "jet orders must lie in [0, 2] per coordinate");
  require_admissible(domain, z, "z");
  require_admissible(domain, zeta, "zeta");
  std::vector<FactorJet> factors;
  factors.reserve(domain.dim());
  TruncationCertificate cert{trunc, 0, 0.0};
  for (std::size_t i = 0; i < domain.dim(); ++i) {
    factors.push_back(planar_jet(domain.factor(i), z[i], zeta[i], order, trunc));
    cert.terms_used = std::max(cert.terms_used, factors.back().terms_used);
    cert.tail_bound = std::max(cert.tail_bound, factors.back().tail_bound);
  }
  return KernelJet(domain, z, zeta, order, std::move(factors), cert);
}

inline Complex kernel_value(const DomainSpec& domain, const Point& z, const Point& zeta,
                            const Truncation& trunc = {}) {
  return eval_kernel_jet(domain, z, zeta, {0, 0}, trunc).value();
}

/// Annulus kernel as the Laurent-basis sum  sum_{k in Z} t^k / c_k  with
/// c_k = pi (1 - r^(2k+2)) / (k+1), c_{-1} = 2 pi log(1/r). Independent of
/// the j-series used by eval_kernel_jet.
inline Complex laurent_kernel_oracle(double r, Complex z, Complex zeta, const Truncation& trunc = {}) {
  const DomainSpec domain = DomainSpec::annulus(r);
  require_admissible(domain, Point{z}, "z");
  require_admissible(domain, Point{zeta}, "zeta");
  const double pi = std::numbers::pi;
  const double r2 = r * r;
  const Complex t = z * std::conj(zeta);
  const double x = std::abs(t);
  const double y = r2 / x;

  Complex total = 1.0 / (t * 2.0 * pi * std::log(1.0 / r));

  // k >= 0
  Complex tk{1.0, 0.0};
  double r2k2 = r2;
  for (long k = 0;; ++k) {
    if (k >= trunc.max_terms) fail(ErrorCode::SeriesTruncationFailure, "Laurent oracle (k >= 0) did not converge");
    total += static_cast<double>(k + 1) * tk / (pi * (1.0 - r2k2));
    tk *= t;
    r2k2 *= r2;
    const double tail = std::pow(x, static_cast<double>(k + 1)) * static_cast<double>(k + 2) /
                        ((1.0 - x) * (1.0 - x) * pi * (1.0 - r2));
    if (tail < trunc.tol_abs) break;
  }

  // k = -(m+2), m >= 0:  1/c_k = (m+1) r^(2m+2) / (pi (1 - r^(2m+2)))
  const Complex inv_t = 1.0 / t;
  Complex tneg = inv_t * inv_t;
  double r2m2 = r2;
  for (long m = 0;; ++m) {
    if (m >= trunc.max_terms) fail(ErrorCode::SeriesTruncationFailure, "Laurent oracle (k < -1) did not converge");
    total += static_cast<double>(m + 1) * r2m2 / (pi * (1.0 - r2m2)) * tneg;
    tneg *= inv_t;
    r2m2 *= r2;
    const double tail = std::pow(y, static_cast<double>(m + 1)) * static_cast<double>(m + 2) /
                        ((1.0 - y) * (1.0 - y) * pi * (1.0 - r2) * x);
    if (tail < trunc.tol_abs) break;
  }
  return total;
}

struct SmallnessReport {
  bool inverse_log = false;  // |1/log r^2| < eps^2
  bool r_log = false;        // |r log r^2| < eps
  bool geometric = false;    // r^2/(1-r^2) < eps^2
  bool all() const noexcept { return inverse_log && r_log && geometric; }
};

/// The three smallness inequalities that put r in the asymptotic window for eps.
inline SmallnessReport check_smallness(double r, double eps) {
  require(r > 0.0 && r < 1.0, ErrorCode::InvalidArgument, "check_smallness needs 0 < r < 1");
  require(eps > 0.0 && eps < 1.0, ErrorCode::InvalidArgument, "check_smallness needs 0 < eps < 1");
  const double log_r2 = 2.0 * std::log(r);
  const double r2 = r * r;
  return SmallnessReport{std::abs(1.0 / log_r2) < eps * eps, std::abs(r * log_r2) < eps,
                         r2 / (1.0 - r2) < eps * eps};
}

}  // namespace bergman
