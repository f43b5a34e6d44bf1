#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pdpc/curve.hpp"
#include "pdpc/error.hpp"

using namespace pdpc;

TEST(Curves, ClosedFormValues) {
  EXPECT_DOUBLE_EQ(eval(LinearCurve{-1}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(eval(LinearCurve{-1}, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(eval(LinearCurve{-0.5}, 0.0), 0.75);
  EXPECT_DOUBLE_EQ(eval(ZShapeCurve{0.1}, 0.49), 0.9);
  EXPECT_DOUBLE_EQ(eval(ZShapeCurve{0.1}, 0.5), 0.1);
  EXPECT_DOUBLE_EQ(eval(SShapeCurve{10}, 0.5), 0.5);
  EXPECT_NEAR(eval(SShapeCurve{10}, 0.0), 1 / (1 + std::exp(-5.0)), 1e-15);
  EXPECT_THROW(eval(SShapeCurve{10}, 1.5), ValidationError);
  EXPECT_THROW(eval(SShapeCurve{10}, -0.1), ValidationError);
}

TEST(Curves, ParameterValidation) {
  EXPECT_THROW(validate(LinearCurve{0.0}), ValidationError);
  EXPECT_THROW(validate(LinearCurve{-1.5}), ValidationError);
  EXPECT_THROW(validate(ZShapeCurve{0.5}), ValidationError);
  EXPECT_THROW(validate(ZShapeCurve{-0.1}), ValidationError);
  EXPECT_THROW(validate(SShapeCurve{0.0}), ValidationError);
  EXPECT_NO_THROW(validate(LinearCurve{-1.0}));
  EXPECT_NO_THROW(validate(ZShapeCurve{0.0}));
}

TEST(Curves, IntegralsAreHalf) {
  for (double k : {-1.0, -0.5, -0.01}) EXPECT_NEAR(integral(LinearCurve{k}), 0.5, 1e-9);
  for (double l : {0.0, 0.1, 0.25, 0.49}) EXPECT_NEAR(integral(ZShapeCurve{l}), 0.5, 1e-9);
  for (double a : {2.5, 5.0, 7.5, 10.0, 40.0}) EXPECT_NEAR(integral(SShapeCurve{a}), 0.5, 1e-9);
}

TEST(Curves, SymmetryHolds) {
  for (double a : {2.5, 5.0, 7.5, 10.0}) EXPECT_LE(check_symmetry(SShapeCurve{a}), 1e-12);
  EXPECT_LE(check_symmetry(LinearCurve{-0.7}), 1e-12);
  EXPECT_LE(check_symmetry(ZShapeCurve{0.2}), 1e-12);
}

TEST(Pchip, InterpolatesKnotsExactly) {
  const auto c = fit_pchip({{0, 0.9}, {0.25, 0.8}, {0.5, 0.5}, {0.75, 0.3}, {1, 0.1}});
  for (const auto& k : c.knots) EXPECT_EQ(eval(c, k.p), k.b);
}

TEST(Pchip, FlatDataGivesFlatCurve) {
  const auto c = fit_pchip({{0, 0.5}, {0.5, 0.5}, {1, 0.5}});
  for (int i = 0; i <= 100; ++i) EXPECT_DOUBLE_EQ(eval(c, i / 100.0), 0.5);
}

TEST(Pchip, OvershootingDataStaysMonotone) {
  const auto c = fit_pchip({{0, 1}, {0.1, 1}, {0.2, 0.0}, {1, 0.0}});
  double prev = 2;
  for (int i = 0; i <= 1000; ++i) {
    const double v = eval(c, i / 1000.0);
    EXPECT_LE(v, prev + 1e-15);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    prev = v;
  }
}

TEST(Pchip, TwoPointsIsLine) {
  const auto c = fit_pchip({{0, 1}, {1, 0}});
  for (int i = 0; i <= 10; ++i) EXPECT_NEAR(eval(c, i / 10.0), 1 - i / 10.0, 1e-15);
  EXPECT_NEAR(integral(c), 0.5, 1e-12);
}

TEST(Pchip, ExtrapolatesFlat) {
  const auto c = fit_pchip({{0.2, 0.8}, {0.8, 0.3}});
  EXPECT_DOUBLE_EQ(eval(c, 0.0), 0.8);
  EXPECT_DOUBLE_EQ(eval(c, 1.0), 0.3);
}

TEST(Pchip, Errors) {
  EXPECT_THROW(fit_pchip({{0.5, 0.5}}), ValidationError);
  EXPECT_THROW(fit_pchip({{0.5, 0.5}, {0.5, 0.2}}), ValidationError);
  EXPECT_THROW(fit_pchip({{0.0, 1.2}, {0.5, 0.2}}), ValidationError);
  EXPECT_THROW(fit_pchip({{-0.1, 0.5}, {0.5, 0.2}}), ValidationError);
}

TEST(Pchip, MatchesIndependentHermiteOracle) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + gen() % 10;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < n; ++i) xs.push_back(u(gen));
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    if (xs.size() < 2) continue;
    std::vector<PreferencePoint> pts;
    for (double x : xs) {
      ys.push_back(u(gen));
      pts.push_back({x, ys.back()});
    }
    const auto c = fit_pchip(pts);
    const oracle::PchipOracle o(xs, ys);
    double worst = 0;
    for (int i = 0; i <= 1000; ++i) {
      const double p = i / 1000.0;
      worst = std::max(worst, std::abs(c.eval_unclamped(p) - o(p)));
    }
    EXPECT_LE(worst, 1e-9);
  }
}

TEST(Pchip, PreservesMonotoneData) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + gen() % 12;
    std::vector<double> xs(n), ys(n);
    for (auto& x : xs) x = u(gen);
    for (auto& y : ys) y = u(gen);
    std::sort(xs.begin(), xs.end());
    std::sort(ys.rbegin(), ys.rend());
    std::vector<PreferencePoint> pts;
    for (std::size_t i = 0; i < n; ++i) pts.push_back({xs[i], ys[i]});
    if (std::adjacent_find(xs.begin(), xs.end()) != xs.end()) continue;
    const auto c = fit_pchip(pts);
    double prev = 2;
    for (int i = 0; i <= 1000; ++i) {
      const double v = eval(c, i / 1000.0);
      ASSERT_LE(v, prev + 1e-12);
      prev = v;
    }
  }
}

TEST(Isotonic, PoolsViolators) {
  const auto a = isotonic_non_increasing({0.9, 0.5, 0.7, 0.1});
  const std::vector<double> want{0.9, 0.6, 0.6, 0.1};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(a[i], want[i], 1e-15);
  const auto b = isotonic_non_increasing({0.1, 0.3});
  EXPECT_NEAR(b[0], 0.2, 1e-15);
  EXPECT_NEAR(b[1], 0.2, 1e-15);
  const auto c = fit_pchip({{0, 0.9}, {0.5, 0.5}, {0.6, 0.7}, {1, 0.1}}, PchipOptions{true});
  EXPECT_NEAR(eval(c, 0.5), 0.6, 1e-15);
}

TEST(Curves, IntegralMatchesFineTrapezoid) {
  const auto c = fit_pchip({{0, 1}, {0.3, 0.9}, {0.6, 0.2}, {1, 0}});
  double trap = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) trap += 0.5 * (eval(c, double(i) / n) + eval(c, double(i + 1) / n)) / n;
  EXPECT_NEAR(integral(c), trap, 1e-9);
}

TEST(Curves, MaxDeviationSymmetricAndZeroOnSelf) {
  const PreferenceCurve a = SShapeCurve{10}, b = LinearCurve{-1};
  EXPECT_EQ(max_deviation(a, a), 0.0);
  EXPECT_EQ(max_deviation(a, b), max_deviation(b, a));
  EXPECT_GT(max_deviation(a, b), 0.0);
}

TEST(Curves, JsonRoundTrip) {
  const std::vector<PreferenceCurve> curves{LinearCurve{-0.6}, ZShapeCurve{0.2}, SShapeCurve{7.5},
                                            fit_pchip({{0, 0.9}, {0.5, 0.4}, {1, 0.2}})};
  for (const auto& c : curves) {
    const auto back = curve_from_json(curve_to_json(c));
    EXPECT_EQ(max_deviation(c, back), 0.0) << describe(c);
    EXPECT_EQ(curve_to_json(back).dump(), curve_to_json(c).dump());
  }
  EXPECT_THROW(curve_from_json(nlohmann::json{{"type", "cosine"}}), Error);
}
