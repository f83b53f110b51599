#include <bergman/loci.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

namespace bergman {
namespace {

using testing::rel_err;

double abs_log_r2(double r) { return std::abs(2.0 * std::log(r)); }
constexpr double kPi = std::numbers::pi;

template <class F>
void expect_code(ErrorCode code, F&& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

Complex thm5_defect(double r, Complex xi) {
  const double c4 = std::pow(2.0 * abs_log_r2(r), 0.25);
  return immersion_defect(DomainSpec::annulus(r), Point{1.0 / c4}, Point{Complex(0, 1) / (xi * c4)});
}

TEST(RepresentativeCoordinates, NormalizedAtBasePoint) {
  std::mt19937_64 rng(21);
  for (const auto& domain : {DomainSpec::unit_disk(), DomainSpec::annulus(0.3)}) {
    for (int i = 0; i < 20; ++i) {
      const double lo = domain.is_annulus() ? 0.35 : 0.0;
      const Point z0{testing::random_planar_point(rng, lo, 0.95)};
      const RepCoordResult res = representative_coordinates(domain, z0, z0);
      EXPECT_LT(std::abs(res.w[0]), 1e-8);
      EXPECT_LT(std::abs(res.jacobian(0, 0) - 1.0), 1e-8);
    }
  }
}

TEST(RepresentativeCoordinates, DiskIsMobius) {
  // Disk: w(z) = (1 - |z0|^2)(z - z0)/(1 - z conj(z0)).
  const auto disk = DomainSpec::unit_disk();
  std::mt19937_64 rng(22);
  for (int i = 0; i < 30; ++i) {
    const Complex z0 = testing::random_planar_point(rng, 0.0, 0.9);
    const Complex z = testing::random_planar_point(rng, 0.0, 0.9);
    const Complex want = (1.0 - std::norm(z0)) * (z - z0) / (1.0 - z * std::conj(z0));
    EXPECT_LT(std::abs(representative_coordinates(disk, Point{z0}, Point{z}).w[0] - want), 1e-12);
  }
  EXPECT_LT(std::abs(representative_coordinates(disk, Point{0.0}, Point{Complex(0.3, 0.2)}).w[0] - Complex(0.3, 0.2)),
            1e-14);
}

TEST(RepresentativeCoordinates, JacobianMatchesFiniteDifference) {
  const auto ann = DomainSpec::annulus(0.3);
  const Point z0{Complex(0.5, 0.2)};
  for (const Complex z : {Complex(0.6, -0.1), Complex(-0.4, 0.5), Complex(0.1, 0.8)}) {
    const RepCoordResult res = representative_coordinates(ann, z0, Point{z});
    const double h = 1e-6;
    const Complex fd = (representative_coordinates(ann, z0, Point{z + h}).w[0] -
                        representative_coordinates(ann, z0, Point{z - h}).w[0]) /
                       (2.0 * h);
    EXPECT_LT(rel_err(res.jacobian(0, 0), fd), 1e-7);
    // n = 1: dw/dz = jac_det / T(z0).
    EXPECT_LT(rel_err(res.jac_det * res.Tinv_at_z0(0, 0), res.jacobian(0, 0)), 1e-12);
  }
}

TEST(RepresentativeCoordinates, ProductNormalization) {
  const auto prod = DomainSpec::product({DomainSpec::annulus(0.2), DomainSpec::unit_disk()});
  const Point z0{Complex(0.5, 0.1), Complex(-0.2, 0.3)};
  const RepCoordResult res = representative_coordinates(prod, z0, z0);
  EXPECT_LT(std::abs(res.w[0]) + std::abs(res.w[1]), 1e-10);
  EXPECT_LT((res.jacobian - Eigen::MatrixXcd::Identity(2, 2)).norm(), 1e-10);
}

TEST(RepJacobian, DiagonalIsDetT) {
  const auto ann = DomainSpec::annulus(0.25);
  const Point z0{Complex(0.3, -0.5)};
  EXPECT_LT(rel_err(rep_jacobian_det(ann, z0, z0), bergman_metric(ann, z0).det_metric), 1e-12);
}

TEST(RepJacobian, SquaredKernelTimesJacobianIsDefect) {
  std::mt19937_64 rng(23);
  for (const auto& domain : {DomainSpec::unit_disk(), DomainSpec::annulus(0.2), DomainSpec::annulus(0.5)}) {
    for (int i = 0; i < 100; ++i) {
      const double lo = domain.is_annulus() ? domain.r() + 0.05 : 0.0;
      const Point z0{testing::random_planar_point(rng, lo, 0.95)};
      const Point z{testing::random_planar_point(rng, lo, 0.95)};
      const Complex k = kernel_value(domain, z, z0);
      EXPECT_LT(rel_err(k * k * rep_jacobian_det(domain, z0, z), immersion_defect(domain, z0, z)), 1e-10);
    }
  }
}

TEST(ImmersionDefect, DiagonalPositivity) {
  const auto ann = DomainSpec::annulus(0.4);
  const Point z0{Complex(0.2, 0.6)};
  const Complex d = immersion_defect(ann, z0, z0);
  const double k = kernel_value(ann, z0, z0).real();
  EXPECT_GT(d.real(), 0.0);
  EXPECT_LT(std::abs(d.imag()), 1e-12 * d.real());
  EXPECT_LT(rel_err(d, k * k * bergman_metric(ann, z0).det_metric), 1e-12);
}

TEST(KernelZero, BracketHoldsOnlyOnceRIsSmallEnough) {
  // s* drifts toward 1 as r -> 0; eps = 0.05 brackets first at r = 1e-10.
  expect_code(ErrorCode::NoSignChange, [] { kernel_zero_bisection(1e-8, 0.05); });
  expect_code(ErrorCode::NoSignChange, [] { kernel_zero_bisection(0.3, 0.05); });
  const RootReport wide = kernel_zero_bisection(1e-8, 0.1);
  EXPECT_NEAR(wide.parameter.real(), 0.94493349, 1e-8);
  for (const auto& [r, s] : {std::pair{1e-10, 0.9560773603}, std::pair{1e-12, 0.9634689266}}) {
    const RootReport rep = kernel_zero_bisection(r, 0.05);
    EXPECT_NEAR(rep.parameter.real(), s, 1e-9);
    EXPECT_LE(rep.residual, 1e-12 * rep.scale);
    const auto& b = std::get<SignBracket>(rep.evidence);
    EXPECT_GT(b.f_lo, 0.0);
    EXPECT_LT(b.f_hi, 0.0);
  }
}

TEST(KernelZero, RealOnBracketAndOnTheSkwarczynskiSphere) {
  for (double r : {1e-4, 1e-8, 1e-12, 1e-100}) {
    const auto ann = DomainSpec::annulus(r);
    const double root_l = std::sqrt(abs_log_r2(r));
    for (double s : {0.8, 0.95, 1.0, 1.05}) {
      const Complex k = kernel_value(ann, Point{1.0 / root_l}, Point{-1.0 / (s * root_l)});
      EXPECT_LE(std::abs(k.imag()), 1e-14);
    }
    const RootReport rep = kernel_zero_search(r, 0.5, 1.5);
    EXPECT_LE(rep.residual, 1e-12 * rep.scale);
    EXPECT_NEAR(skwarczynski_bound(ann, Point{1.0 / root_l}, Point{rep.location}), kPi / 2, 1e-12);
  }
}

TEST(KernelZero, ZeroApproachesLeadingOrder) {
  double prev = 1.0;
  for (double r : {1e-4, 1e-12, 1e-50, 1e-200}) {
    const double gap = 1.0 - kernel_zero_search(r, 0.5, 1.5).parameter.real();
    EXPECT_GT(gap, 0.0);
    EXPECT_LT(gap, prev);
    prev = gap;
  }
  EXPECT_LT(prev, 5e-3);
}

TEST(RepresentativeCoordinates, BlowUpNearKernelZero) {
  const double r = 1e-8;
  const auto ann = DomainSpec::annulus(r);
  const Point z0{1.0 / std::sqrt(abs_log_r2(r))};
  const Complex zstar = kernel_zero_search(r, 0.5, 1.5).location;
  const double far = std::abs(representative_coordinates(ann, z0, Point{zstar + Complex(0, 0.05)}).w[0]);
  const double near = std::abs(representative_coordinates(ann, z0, Point{zstar + Complex(0, 1e-3)}).w[0]);
  EXPECT_GT(near, 10.0 * far);
  expect_code(ErrorCode::KernelZeroAtBasePair, [&] { representative_coordinates(ann, z0, Point{zstar}); });
  expect_code(ErrorCode::KernelZeroAtBasePair, [&] { rep_jacobian_det(ann, z0, Point{zstar}); });
}

TEST(ComplexRoots, QuadraticOnSquare) {
  const ComplexFunction f = [](Complex x) { return x * x - 1.0; };
  const RegionRoots res = complex_roots_region(f, Rect{0.5, 1.5, -0.5, 0.5}, 3, 3);
  ASSERT_EQ(res.roots.size(), 1u);
  EXPECT_LT(std::abs(res.roots[0].location - 1.0), 1e-14);
  EXPECT_EQ(res.boundary_winding, 1);
  EXPECT_EQ(res.cell_winding_sum, 1);
  EXPECT_LE(res.roots[0].residual, 1e-10 * res.roots[0].scale);
}

TEST(ComplexRoots, CountsAddAndClustersSplit) {
  const ComplexFunction f = [](Complex x) { return (x - 0.11) * (x + 0.13) * (x - Complex(0.02, 0.3)); };
  const RegionRoots res = complex_roots_region(f, Rect{-1.0, 1.0, -1.0, 1.0}, 1, 1);
  EXPECT_EQ(res.boundary_winding, 3);
  EXPECT_EQ(res.cell_winding_sum, 3);
  ASSERT_EQ(res.roots.size(), 3u);
  double worst = 0.0;
  for (const auto& root : res.roots) {
    worst = std::max(worst, std::min({std::abs(root.location - 0.11), std::abs(root.location + 0.13),
                                      std::abs(root.location - Complex(0.02, 0.3))}));
  }
  EXPECT_LT(worst, 1e-12);
  EXPECT_EQ(winding_number_circle(f, 0.0, 0.5), 3);
  EXPECT_EQ(winding_number_circle(f, 0.11, 0.05), 1);
}

TEST(ComplexRoots, GridThroughZeroIsReported) {
  const ComplexFunction zero = [](Complex) { return Complex{}; };
  expect_code(ErrorCode::ContourThroughZero, [&] { complex_roots_region(zero, Rect{0, 1, 0, 1}, 2, 2); });
}

TEST(ComplexRoots, PerturbsWhenACellEdgeHitsAZero) {
  const ComplexFunction f = [](Complex x) { return x - 0.5; };
  const RegionRoots res = complex_roots_region(f, Rect{0.0, 1.0, -0.5, 0.5}, 2, 2);
  EXPECT_GE(res.perturbations, 1);
  ASSERT_EQ(res.roots.size(), 1u);
  EXPECT_LT(std::abs(res.roots[0].location - 0.5), 1e-14);
}

TEST(ReferenceRoot, SolvesItsCubic) {
  for (double r : {1e-4, 1e-8, 1e-12, 1e-200}) {
    const ReferenceRoot ref = thm5_reference_root(r);
    EXPECT_TRUE(ref.principal);
    EXPECT_LE(ref.residual, 1e-8);
    // Independent polynomial form: (c xi - i)^3 = c^3 xi.
    const double c = std::sqrt(2.0 * abs_log_r2(r));
    const Complex i(0, 1);
    EXPECT_LT(std::abs(std::pow(c * ref.root - i, 3) - std::pow(c, 3) * ref.root) / std::pow(c, 3), 1e-12);
  }
  const ReferenceRoot at8 = thm5_reference_root(1e-8);
  EXPECT_LT(std::abs(at8.root - Complex(1.00494522, 0.17398648)), 1e-8);
}

TEST(ReferenceRoot, TendsToOneSlowly) {
  double prev = 1.0;
  for (double r : {1e-4, 1e-12, 1e-50, 1e-200}) {
    const double gap = std::abs(thm5_reference_root(r).root - 1.0);
    EXPECT_LT(gap, prev);
    prev = gap;
  }
  EXPECT_LT(prev, 0.05);
}

TEST(DefectRoot, SingleRootNearOneWithSlowDrift) {
  // One defect root near xi = 1; it sits outside |xi - 1| <= 0.05 until r is far below 1e-12.
  double prev = 1.0;
  for (double r : {1e-4, 1e-8, 1e-12, 1e-200}) {
    const ComplexFunction f = [r](Complex xi) { return thm5_defect(r, xi); };
    const RegionRoots res = complex_roots_region(f, Rect{0.6, 1.4, -0.4, 0.4}, 4, 4);
    ASSERT_EQ(res.roots.size(), 1u) << r;
    const double gap = std::abs(res.roots[0].location - 1.0);
    EXPECT_LT(gap, prev);
    prev = gap;
    EXPECT_LE(res.roots[0].residual, 1e-10 * res.roots[0].scale);
    EXPECT_EQ(winding_number_circle(f, 1.0, 0.3), 1);
  }
  EXPECT_EQ(winding_number_circle([](Complex xi) { return thm5_defect(1e-8, xi); }, 1.0, 0.05), 0);
  const ComplexFunction f8 = [](Complex xi) { return thm5_defect(1e-8, xi); };
  const RegionRoots res8 = complex_roots_region(f8, Rect{0.6, 1.4, -0.4, 0.4}, 4, 4);
  EXPECT_LT(std::abs(res8.roots[0].location - Complex(0.95100493, -0.11479969)), 1e-7);
}

TEST(Rank1Inclusion, VanishesOnFirstFactorZeroSet) {
  const double r = 1e-8;
  const auto prod = DomainSpec::product({DomainSpec::annulus(r), DomainSpec::unit_disk()});
  const double root_l = std::sqrt(abs_log_r2(r));
  const Complex zstar = kernel_zero_search(r, 0.5, 1.5).location;
  for (const Complex w : {Complex(0.3, 0), Complex(-0.2, 0.4), Complex(0.0, -0.7)}) {
    const Point z0{Complex(1.0 / root_l, 0), Complex(0.1, 0.2)};
    const Point z{zstar, w};
    EXPECT_LE(rank1_inclusion_check(prod, z0, z), 1e-10 * defect_scale(prod, z, z0));
    expect_code(ErrorCode::KernelZeroAtBasePair, [&] { representative_coordinates(prod, z0, z); });
  }
}

TEST(Rank1Inclusion, GenericPointsAreNonzeroAndPreconditionsHold) {
  const auto prod = DomainSpec::product({DomainSpec::annulus(0.2), DomainSpec::unit_disk()});
  std::mt19937_64 rng(24);
  const Point z0{Complex(0.5, 0.1), Complex(0.1, 0.0)};
  int checked = 0;
  for (int i = 0; i < 20; ++i) {
    const Point z{testing::random_planar_point(rng, 0.3, 0.7), testing::random_planar_point(rng, 0.0, 0.7)};
    expect_code(ErrorCode::NotOnZeroSet, [&] { rank1_inclusion_check(prod, z0, z); });
    // Small near the annulus kernel's own zeros, yet far above the inclusion tolerance.
    EXPECT_GT(std::abs(immersion_defect(prod, z0, z)), 1e-9 * defect_scale(prod, z, z0));
    ++checked;
  }
  EXPECT_EQ(checked, 20);
  expect_code(ErrorCode::InvalidArgument,
              [] { rank1_inclusion_check(DomainSpec::annulus(0.2), Point{0.5}, Point{0.6}); });
}

}  // namespace
}  // namespace bergman
