#pragma once

#include <bergman/domain.hpp>
#include <bergman/error.hpp>
#include <bergman/log.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace bergman {

/// Local coordinate Z (n x m) of the Grassmannian of n-planes in C^(n+m).
struct MatrixSample {
  Eigen::MatrixXcd Z;
  std::uint64_t seed = 0;
};

/// Entries uniform in the square of half-width scale/sqrt(2), so |Z_ij| <= scale.
inline MatrixSample random_matrix_sample(int n, int m, std::uint64_t seed, double scale = 1.0) {
  require(n >= 1 && n <= m && m <= 12, ErrorCode::InvalidArgument, "need 1 <= n <= m <= 12");
  require(scale > 0.0 && scale <= 10.0, ErrorCode::InvalidArgument, "entry scale must lie in (0, 10]");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale / std::sqrt(2.0), scale / std::sqrt(2.0));
  MatrixSample s;
  s.seed = seed;
  s.Z.resize(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) s.Z(i, j) = {u(rng), u(rng)};
  return s;
}

/// Max-norm of (I - Z*(I+ZZ*)^{-1} Z)(I + Z*Z) - I.
inline double grassmann_inverse_identity(const Eigen::MatrixXcd& Z) {
  require(Z.rows() <= Z.cols(), ErrorCode::InvalidArgument, "need n <= m");
  const auto n = Z.rows(), m = Z.cols();
  const Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(n, n) + Z * Z.adjoint();
  const Eigen::MatrixXcd b = Eigen::MatrixXcd::Identity(m, m) + Z.adjoint() * Z;
  const Eigen::MatrixXcd lhs = (Eigen::MatrixXcd::Identity(m, m) - Z.adjoint() * a.ldlt().solve(Z)) * b;
  const double res = (lhs - Eigen::MatrixXcd::Identity(m, m)).cwiseAbs().maxCoeff();
  if (logger().should_log(spdlog::level::debug)) {
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXcd>(a).singularValues();
    logger().debug("grassmann_inverse_identity: residual {:.3e}, cond(I+ZZ*) {:.3e}", res, sv(0) / sv(sv.size() - 1));
  }
  return res;
}

struct CauchyBinet {
  double det_side = 0.0;
  double minor_side = 0.0;
  double residual = 0.0;
};

/// det(I + ZZ*) against 1 + the sum of |maximal minors|^2 of (I_n, Z) over all non-leading column sets.
inline CauchyBinet cauchy_binet_check(const Eigen::MatrixXcd& Z) {
  const auto n = static_cast<int>(Z.rows()), m = static_cast<int>(Z.cols());
  require(n >= 1 && n <= m, ErrorCode::InvalidArgument, "need 1 <= n <= m");
  if (n > 4 || m > 9) fail(ErrorCode::TooLarge, "minor enumeration is capped at n <= 4, m <= 9");

  Eigen::MatrixXcd full(n, n + m);
  full << Eigen::MatrixXcd::Identity(n, n), Z;

  CauchyBinet out;
  out.det_side = (Eigen::MatrixXcd::Identity(n, n) + Z * Z.adjoint()).determinant().real();

  std::vector<int> cols(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) cols[static_cast<std::size_t>(i)] = i;
  double sum = 1.0;  // the leading identity minor
  Eigen::MatrixXcd minor(n, n);
  while (true) {
    // Advance to the next n-subset of {0, ..., n+m-1} in lexicographic order.
    int k = n - 1;
    while (k >= 0 && cols[static_cast<std::size_t>(k)] == n + m - n + k) --k;
    if (k < 0) break;
    ++cols[static_cast<std::size_t>(k)];
    for (int j = k + 1; j < n; ++j) cols[static_cast<std::size_t>(j)] = cols[static_cast<std::size_t>(j - 1)] + 1;
    for (int j = 0; j < n; ++j) minor.col(j) = full.col(cols[static_cast<std::size_t>(j)]);
    sum += std::norm(minor.determinant());
  }
  out.minor_side = sum;
  out.residual = std::abs(out.det_side - out.minor_side) / out.det_side;
  return out;
}

struct FubiniStudyCheck {
  Complex finite_difference;
  Complex analytic;
  double mismatch = 0.0;
};

/// Mixed derivative of log det(I + ZZ*) in directions (E, conj F): polarized
/// 5-point Laplacians against Tr((I+ZZ*)^{-1} E (I+Z*Z)^{-1} F*).
inline FubiniStudyCheck fs_pullback_fd_check(const Eigen::MatrixXcd& Z, const Eigen::MatrixXcd& E,
                                             const Eigen::MatrixXcd& F, double h) {
  require(h >= 1e-6 && h <= 1e-3, ErrorCode::InvalidArgument, "step must lie in [1e-6, 1e-3]");
  require(E.rows() == Z.rows() && E.cols() == Z.cols() && F.rows() == Z.rows() && F.cols() == Z.cols(),
          ErrorCode::InvalidArgument, "direction shapes must match Z");
  const auto n = Z.rows(), m = Z.cols();
  auto phi = [&](const Eigen::MatrixXcd& W) {
    return std::log((Eigen::MatrixXcd::Identity(n, n) + W * W.adjoint()).determinant().real());
  };
  auto levi = [&](const Eigen::MatrixXcd& V) {
    const Complex i(0.0, 1.0);
    return (phi(Z + h * V) + phi(Z - h * V) + phi(Z + (i * h) * V) + phi(Z - (i * h) * V) - 4.0 * phi(Z)) /
           (4.0 * h * h);
  };
  FubiniStudyCheck out;
  Complex ik(1.0, 0.0);
  for (int k = 0; k < 4; ++k, ik *= Complex(0.0, 1.0)) out.finite_difference += 0.25 * ik * levi(E + ik * F);

  const Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(n, n) + Z * Z.adjoint();
  const Eigen::MatrixXcd b = Eigen::MatrixXcd::Identity(m, m) + Z.adjoint() * Z;
  out.analytic = (a.inverse() * E * b.inverse() * F.adjoint()).trace();
  out.mismatch = std::abs(out.finite_difference - out.analytic) / std::max(std::abs(out.analytic), 1e-300);
  return out;
}

}  // namespace bergman
