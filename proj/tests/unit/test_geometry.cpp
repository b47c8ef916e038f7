#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "widedoa/errors.hpp"
#include "widedoa/geometry.hpp"
#include "widedoa/subspace.hpp"

using namespace widedoa;

namespace {
ArrayGeometry reference_array() { return ArrayGeometry{5, 0.044, 343.0}; }
}  // namespace

TEST(Steering, SecondSensorPhaseAtThirtyDegrees) {
  const ArrayGeometry g{2, 0.044, 343.0};
  const std::vector<double> doa{30.0};
  const CMatrix a = steering_matrix(g, 1000.0, doa);
  EXPECT_NEAR(std::arg(a(1, 0)), -0.40300, 5e-6);
  EXPECT_NEAR(std::arg(a(1, 0)), -2.0 * kPi * 1000.0 * 0.044 * 0.5 / 343.0, 1e-14);
}

TEST(Steering, MatchesDelayOracle) {
  const auto g = reference_array();
  const std::vector<double> doas{-60.0, -12.5, 0.0, 33.0, 90.0};
  for (double f : {109.375, 1000.0, 3890.625}) {
    const CMatrix a = steering_matrix(g, f, doas);
    const CMatrix ref = oracle::steering(5, 0.044, 343.0, f, doas);
    EXPECT_LT((a - ref).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Steering, BroadsideIsAllOnes) {
  const auto g = reference_array();
  const std::vector<double> doa{0.0};
  for (double f : {50.0, 2000.0, 7000.0}) {
    const CMatrix a = steering_matrix(g, f, doa);
    EXPECT_LT((a - CMatrix::Ones(5, 1)).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Steering, UnitModulusAndReferenceRow) {
  const auto g = reference_array();
  const std::vector<double> doas{-80.0, 10.0, 45.0};
  const CMatrix a = steering_matrix(g, 2500.0, doas);
  EXPECT_LT((a.cwiseAbs().array() - 1.0).abs().maxCoeff(), 1e-12);
  for (Eigen::Index q = 0; q < a.cols(); ++q) EXPECT_EQ(a(0, q), Complex(1.0, 0.0));
}

TEST(Steering, ConjugateSymmetricInAngle) {
  const auto g = reference_array();
  for (double th : {5.0, 45.0, 77.0}) {
    const CVector plus = steering_vector(g, 1800.0, th);
    const CVector minus = steering_vector(g, 1800.0, -th);
    EXPECT_LT((plus.conjugate() - minus).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Steering, FrequencyNormalizedPowersAgree) {
  // a(f1)^(1/f1) == a(f2)^(1/f2) elementwise.
  const auto g = reference_array();
  const std::vector<double> doa{45.0};
  const CMatrix a1 = steering_matrix(g, 500.0, doa);
  const CMatrix a2 = steering_matrix(g, 2000.0, doa);
  const CMatrix n1 = scale_phases(a1, 1.0 / 500.0, PhaseBranch::kSensorUnwrapped);
  const CMatrix n2 = scale_phases(a2, 1.0 / 2000.0, PhaseBranch::kSensorUnwrapped);
  EXPECT_LT((n1 - n2).cwiseAbs().maxCoeff(), 1e-10);

  // Principal-branch powers agree only while each element's own phase lies
  // inside (-pi, pi]; at 2000 Hz that holds for sensors 0..2 but not beyond.
  const CMatrix p1 = scale_phases(a1, 1.0 / 500.0, PhaseBranch::kPrincipal);
  const CMatrix p2 = scale_phases(a2, 1.0 / 2000.0, PhaseBranch::kPrincipal);
  for (int p = 0; p < 5; ++p) {
    const double phase = std::abs(2.0 * kPi * 2000.0 * p * 0.044 * std::sin(kPi / 4) / 343.0);
    if (phase < kPi) {
      EXPECT_LT(std::abs(p1(p, 0) - p2(p, 0)), 1e-10) << "sensor " << p;
    } else {
      EXPECT_GT(std::abs(p1(p, 0) - p2(p, 0)), 1e-3) << "sensor " << p;
    }
  }
}

TEST(Steering, NormalizedPowerIdentityBelowAliasing) {
  const auto g = reference_array();
  const double limit = lowest_aliasing_frequency(g);
  for (double th = -90.0; th <= 90.0; th += 7.5) {
    const std::vector<double> doa{th};
    const double f1 = 0.1 * limit;
    const double f2 = 0.999 * limit;
    const CMatrix n1 = scale_phases(steering_matrix(g, f1, doa), 1.0 / f1, PhaseBranch::kSensorUnwrapped);
    const CMatrix n2 = scale_phases(steering_matrix(g, f2, doa), 1.0 / f2, PhaseBranch::kSensorUnwrapped);
    EXPECT_LT((n1 - n2).cwiseAbs().maxCoeff(), 1e-10) << th;
  }
}

TEST(Steering, RejectsBadInputs) {
  const auto g = reference_array();
  const std::vector<double> bad{91.0};
  const std::vector<double> good{10.0};
  EXPECT_THROW(steering_matrix(g, 1000.0, bad), DomainError);
  EXPECT_THROW(steering_matrix(g, 0.0, good), DomainError);
  EXPECT_THROW(steering_matrix(g, -5.0, good), DomainError);
  EXPECT_THROW(steering_vector(g, 1000.0, -90.5), DomainError);
  EXPECT_THROW((ArrayGeometry{1, 0.044, 343.0}.validate()), DomainError);
  EXPECT_THROW((ArrayGeometry{5, 0.0, 343.0}.validate()), DomainError);
  EXPECT_THROW((ArrayGeometry{5, 0.044, -1.0}.validate()), DomainError);
}

TEST(Aliasing, Endfire) {
  EXPECT_NEAR(aliasing_frequency(reference_array(), 90.0), 3897.7, 0.05);
  EXPECT_NEAR(aliasing_frequency(reference_array(), -90.0), 343.0 / 0.088, 1e-9);
}

TEST(Aliasing, ThirtyDegrees) {
  EXPECT_NEAR(aliasing_frequency(reference_array(), 30.0), 7795.5, 0.05);
}

TEST(Aliasing, HalvedSpacingDoublesLimit) {
  auto g = reference_array();
  const double base = aliasing_frequency(g, 90.0);
  g.spacing /= 2.0;
  EXPECT_NEAR(aliasing_frequency(g, 90.0), 2.0 * base, 1e-9);
}

TEST(Aliasing, BroadsideHasNoLimit) {
  const double f = aliasing_frequency(reference_array(), 0.0);
  EXPECT_TRUE(std::isinf(f));
  EXPECT_FALSE(has_aliasing_limit(f));
  EXPECT_TRUE(has_aliasing_limit(aliasing_frequency(reference_array(), 1.0)));
}

TEST(Aliasing, DecreasesWithSine) {
  const auto g = reference_array();
  double prev = aliasing_frequency(g, 1.0);
  for (double th = 2.0; th <= 90.0; th += 1.0) {
    const double f = aliasing_frequency(g, th);
    EXPECT_LT(f, prev);
    prev = f;
  }
}

TEST(Aliasing, LowestLimit) {
  EXPECT_NEAR(lowest_aliasing_frequency(reference_array()), 3897.7, 0.05);
  EXPECT_NEAR(lowest_aliasing_frequency(ArrayGeometry{5, 0.0215, 343.0}), 7976.7, 0.05);
  EXPECT_EQ(lowest_aliasing_frequency(reference_array()), aliasing_frequency(reference_array(), 90.0));
}

TEST(Geometry, SensorDelay) {
  const auto g = reference_array();
  EXPECT_NEAR(g.sensor_delay(1, 90.0) * 16000.0, 2.0525, 1e-4);
  EXPECT_DOUBLE_EQ(g.sensor_delay(0, 45.0), 0.0);
  EXPECT_NEAR(g.sensor_delay(3, -30.0), -3 * 0.044 * 0.5 / 343.0, 1e-15);
}
