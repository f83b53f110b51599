#include <bergman/kernel.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

namespace bergman {
namespace {

using testing::rel_err;

double abs_log_r2(double r) { return std::abs(2.0 * std::log(r)); }

// Point pair (z0, zeta(s)) along the negative real bracket.
Point bracket_zeta(double r, double s) { return Point{Complex(-1.0 / (s * std::sqrt(abs_log_r2(r))), 0.0)}; }
Point bracket_z0(double r) { return Point{Complex(1.0 / std::sqrt(abs_log_r2(r)), 0.0)}; }

TEST(KernelJet, DiskOriginMatchesBasisSum) {
  const auto disk = DomainSpec::unit_disk();
  const Complex k = kernel_value(disk, Point{0.0}, Point{0.0});
  EXPECT_NEAR(k.real(), 1.0 / std::numbers::pi, 1e-15);
  EXPECT_NEAR(k.imag(), 0.0, 1e-15);
  const Complex z{0.3, -0.4}, w{-0.2, 0.5};
  EXPECT_LT(rel_err(kernel_value(disk, Point{z}, Point{w}), testing::disk_basis_kernel(z, w)), 1e-13);
}

TEST(KernelJet, AnnulusMatchesHighPrecisionReference) {
  // 40-digit evaluation of the same series, summed without truncation control.
  const auto ann = DomainSpec::annulus(0.3);
  const KernelJet jet = eval_kernel_jet(ann, Point{Complex(0.5, 0.2)}, Point{Complex(-0.4, 0.6)}, {2, 2});
  const auto& f = jet.factor(0);
  EXPECT_LT(rel_err(f.at(0, 0), {0.023244329312874475, 0.047734846034499174}), 1e-12);
  EXPECT_LT(rel_err(f.at(1, 0), {0.099215252221911675, -0.25203156117206}), 1e-12);
  EXPECT_LT(rel_err(f.at(0, 1), {0.04557319759007974, 0.19707202896899956}), 1e-12);
  EXPECT_LT(rel_err(f.at(1, 1), {0.57391927111918316, -0.83447145453941229}), 1e-12);
  EXPECT_LT(rel_err(f.at(2, 1), {-5.2776369353211161, 2.5597249000406481}), 1e-12);
  EXPECT_LT(rel_err(f.at(2, 2), {-20.636759688116758, 13.631206927653904}), 1e-12);
}

TEST(KernelJet, NegativeEndOfBracketAtTinyR) {
  const double r = 1e-8;
  const auto ann = DomainSpec::annulus(r);
  const Complex k = kernel_value(ann, bracket_z0(r), bracket_zeta(r, 1.05));
  EXPECT_LT(k.real(), 0.0);
  EXPECT_EQ(k.imag(), 0.0);
  EXPECT_NEAR(k.real(), -0.0317558223766725, 1e-13);
}

TEST(KernelJet, PositiveEndOfBracketOnlyDeepInTheWindow) {
  // At r = 1e-8 the s = 1 - 0.05 end is still negative; positivity sets in
  // near r = 1e-10 and approaches (eps - 2 eps^2)/pi once the window holds.
  auto value = [](double r) {
    return kernel_value(DomainSpec::annulus(r), bracket_z0(r), bracket_zeta(r, 0.95)).real();
  };
  EXPECT_NEAR(value(1e-8), -0.0015231162303151055, 1e-13);
  EXPECT_NEAR(value(1e-10), 0.0018480309183306396, 1e-13);
  const double deep = value(1e-100);
  EXPECT_NEAR(deep, 0.014465308083349045, 1e-13);
  EXPECT_GT(deep, 0.0);
  EXPECT_NEAR(deep, (0.05 - 2 * 0.05 * 0.05) / std::numbers::pi, 5e-4);
}

TEST(KernelJet, CertificateReportsTail) {
  Truncation trunc;
  const KernelJet jet = eval_kernel_jet(DomainSpec::annulus(0.5), Point{0.7}, Point{0.6}, {2, 2}, trunc);
  EXPECT_LT(jet.certificate().tail_bound, trunc.tol_abs);
  EXPECT_GT(jet.certificate().terms_used, 10);
}

TEST(KernelJet, ErrorPaths) {
  const auto ann = DomainSpec::annulus(0.5);
  try {
    (void)kernel_value(ann, Point{0.2}, Point{0.7});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotInDomain);
  }
  const double inner = std::sqrt(0.25 + 2e-10);
  try {
    (void)kernel_value(ann, Point{inner}, Point{inner});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NearSingularLocus);
  }
  const double outer = std::sqrt(1.0 - 5e-10);
  try {
    (void)kernel_value(DomainSpec::unit_disk(), Point{outer}, Point{outer});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NearSingularLocus);
  }
  Truncation tight;
  tight.max_terms = 2;
  try {
    (void)kernel_value(ann, Point{0.7}, Point{0.7}, tight);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SeriesTruncationFailure);
  }
  EXPECT_THROW((void)eval_kernel_jet(ann, Point{0.7}, Point{0.7}, {3, 0}), Error);
  EXPECT_THROW((void)DomainSpec::annulus(1.0), Error);
}

TEST(LaurentOracle, MatchesSeriesOnDiagonal) {
  const Complex series = kernel_value(DomainSpec::annulus(0.5), Point{0.7}, Point{0.7});
  EXPECT_LT(rel_err(laurent_kernel_oracle(0.5, 0.7, 0.7), series), 1e-10);
}

TEST(LaurentOracle, HermitianAtSwappedArguments) {
  const Complex a = laurent_kernel_oracle(0.1, Complex(0, 0.5), Complex(0, -0.5));
  const Complex b = laurent_kernel_oracle(0.1, Complex(0, -0.5), Complex(0, 0.5));
  EXPECT_LT(std::abs(a - std::conj(b)), 1e-14);
}

TEST(LaurentOracle, SameSignAtBracketEnd) {
  const double r = 1e-8;
  const Complex oracle = laurent_kernel_oracle(r, bracket_z0(r)[0], bracket_zeta(r, 1.05)[0]);
  const Complex series = kernel_value(DomainSpec::annulus(r), bracket_z0(r), bracket_zeta(r, 1.05));
  EXPECT_LT(oracle.real(), 0.0);
  EXPECT_LT(rel_err(oracle, series), 1e-10);
}

TEST(LaurentOracle, RandomPairsAgree) {
  std::mt19937_64 rng(7);
  for (double r : {0.1, 0.5}) {
    for (int i = 0; i < 50; ++i) {
      const Complex z = testing::random_planar_point(rng, r + 0.02, 0.98);
      const Complex w = testing::random_planar_point(rng, r + 0.02, 0.98);
      const Complex series = kernel_value(DomainSpec::annulus(r), Point{z}, Point{w});
      EXPECT_LT(rel_err(laurent_kernel_oracle(r, z, w), series), 1e-10) << "r=" << r << " i=" << i;
    }
  }
}

TEST(Smallness, OutsideTheWindowAtOneEMinusEight) {
  // |1/log r^2| = 0.0271 exceeds eps^2 = 0.0025; the other two hold.
  const SmallnessReport s = check_smallness(1e-8, 0.05);
  EXPECT_FALSE(s.inverse_log);
  EXPECT_TRUE(s.r_log);
  EXPECT_TRUE(s.geometric);
  EXPECT_FALSE(s.all());
}

TEST(Smallness, Cases) {
  EXPECT_FALSE(check_smallness(0.5, 0.05).all());
  EXPECT_TRUE(check_smallness(1e-30, 0.999).all());
  // eq1 needs |log r^2| > 1/eps^2 = 400.
  EXPECT_TRUE(check_smallness(std::exp(-201.0), 0.05).all());
  EXPECT_FALSE(check_smallness(std::exp(-199.0), 0.05).all());
  EXPECT_THROW((void)check_smallness(0.0, 0.1), Error);
  EXPECT_THROW((void)check_smallness(0.5, 1.0), Error);
}

TEST(Admissible, Membership) {
  const double r = 1e-8;
  EXPECT_TRUE(admissible_point(DomainSpec::annulus(r), Point{1.0 / std::sqrt(abs_log_r2(r))}));
  EXPECT_FALSE(admissible_point(DomainSpec::unit_disk(), Point{1.0}));
  EXPECT_FALSE(admissible_point(DomainSpec::annulus(0.5), Point{0.5}));
  const auto prod = DomainSpec::product({DomainSpec::annulus(0.05), DomainSpec::unit_disk()});
  EXPECT_TRUE(admissible_point(prod, Point{0.5, 0.99}));
  EXPECT_FALSE(admissible_point(prod, Point{0.01, 0.5}));
  EXPECT_FALSE(admissible_point(prod, Point{0.5}));
}

class KernelProperties : public ::testing::TestWithParam<DomainSpec> {
 protected:
  Point sample(std::mt19937_64& rng) const {
    const DomainSpec& d = GetParam();
    std::vector<Complex> c;
    for (std::size_t i = 0; i < d.dim(); ++i) {
      const double lo = d.factor(i).is_annulus() ? d.factor(i).r() + 0.02 : 0.0;
      c.push_back(testing::random_planar_point(rng, lo, 0.97));
    }
    return Point(c);
  }
};

TEST_P(KernelProperties, HermitianSymmetryPositivityCauchySchwarz) {
  const DomainSpec& d = GetParam();
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const Point z = sample(rng), w = sample(rng);
    const KernelJet zw = eval_kernel_jet(d, z, w, {2, 2});
    const KernelJet wz = eval_kernel_jet(d, w, z, {2, 2});
    for (std::size_t f = 0; f < d.dim(); ++f) {
      for (int a = 0; a <= 2; ++a) {
        for (int b = 0; b <= 2; ++b) {
          const Complex lhs = zw.factor(f).at(a, b);
          const Complex rhs = std::conj(wz.factor(f).at(b, a));
          EXPECT_LE(std::abs(lhs - rhs), 1e-12 * (1.0 + std::abs(lhs)));
        }
      }
    }
    const Complex kzz = kernel_value(d, z, z);
    const Complex kww = kernel_value(d, w, w);
    EXPECT_GT(kzz.real(), 0.0);
    EXPECT_LT(std::abs(kzz.imag()), 1e-14 * kzz.real());
    EXPECT_LE(std::norm(zw.value()), kzz.real() * kww.real() * (1 + 1e-12));
  }
}

TEST_P(KernelProperties, JetsMatchFiniteDifferences) {
  const DomainSpec& d = GetParam();
  std::mt19937_64 rng(13);
  for (int i = 0; i < 30; ++i) {
    const Point z = sample(rng), w = sample(rng);
    for (std::size_t f = 0; f < d.dim(); ++f) {
      const DomainSpec& planar = d.factor(f);
      const Complex zf = z[f], wf = w[f];
      const double hz = 1e-5 * std::abs(zf);
      const double hw = 1e-5 * std::abs(wf);
      const FactorJet base = planar_jet(planar, zf, wf, {2, 2});
      for (int a = 0; a <= 2; ++a) {
        for (int b = 0; b <= 2; ++b) {
          if (a > 0) {
            const Complex fd = testing::central_difference(
                [&](double h) { return planar_jet(planar, zf + h, wf, {2, 2}).at(a - 1, b); }, hz);
            EXPECT_LT(rel_err(fd, base.at(a, b), 1e-8), 1e-5) << "a=" << a << " b=" << b;
          }
          if (b > 0) {
            // K is antiholomorphic in zeta, so a real shift of zeta differentiates in conj(zeta).
            const Complex fd = testing::central_difference(
                [&](double h) { return planar_jet(planar, zf, wf + h, {2, 2}).at(a, b - 1); }, hw);
            EXPECT_LT(rel_err(fd, base.at(a, b), 1e-8), 1e-5) << "a=" << a << " b=" << b;
          }
        }
      }
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Domains, KernelProperties,
                         ::testing::Values(DomainSpec::unit_disk(), DomainSpec::annulus(0.1),
                                           DomainSpec::annulus(0.5),
                                           DomainSpec::product({DomainSpec::annulus(0.2), DomainSpec::unit_disk()})));

TEST(KernelJet, ProductFactorizes) {
  const auto ann = DomainSpec::annulus(0.2);
  const auto disk = DomainSpec::unit_disk();
  const auto prod = DomainSpec::product({ann, disk});
  const Point z{Complex(0.5, 0.1), Complex(-0.3, 0.2)};
  const Point w{Complex(-0.4, 0.4), Complex(0.1, 0.6)};
  const KernelJet jet = eval_kernel_jet(prod, z, w, {1, 1});
  const FactorJet a = planar_jet(ann, z[0], w[0], {1, 1});
  const FactorJet b = planar_jet(disk, z[1], w[1], {1, 1});
  EXPECT_LT(rel_err(jet.value(), a.at(0, 0) * b.at(0, 0)), 1e-15);
  EXPECT_LT(rel_err(jet.dz_dzeta_bar(0, 1), a.at(1, 0) * b.at(0, 1)), 1e-15);
  const int ia[] = {1, 0}, ib[] = {1, 1};
  EXPECT_LT(rel_err(jet.entry(ia, ib), a.at(1, 1) * b.at(0, 1)), 1e-15);
}

}  // namespace
}  // namespace bergman
