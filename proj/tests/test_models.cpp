#include "polyfilt/models.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace polyfilt;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST(Ikeda, OriginMapsToShift) {
  const Vector x = ikeda_step(vec2(0, 0));
  EXPECT_EQ(x(0), 1.0);
  EXPECT_EQ(x(1), 0.0);
}

TEST(Ikeda, UnitPoint) {
  // theta = 0.4 - 6/2 = -2.6.
  const Vector x = ikeda_step(vec2(1, 0));
  EXPECT_NEAR(x(0), 0.228800121967947, 1e-14);
  EXPECT_NEAR(x(1), -0.463951234639318, 1e-14);
  EXPECT_NEAR(x(0), 1.0 + 0.9 * std::cos(-2.6), 1e-15);
  EXPECT_NEAR(x(1), 0.9 * std::sin(-2.6), 1e-15);
}

TEST(Ikeda, LocalContraction) {
  RngStream rng(1);
  for (int i = 0; i < 200; ++i) {
    const Vector x = vec2(rng.uniform(-1, 2), rng.uniform(-2, 1));
    const Vector d = 1e-8 * rng.normal_vector(2);
    const double ratio = (ikeda_step(x + d) - ikeda_step(x)).norm() / d.norm();
    // Rotation contributes 0.9; the angle derivative adds at most 0.9 |x| |grad theta|.
    const double r2 = 1.0 + x.squaredNorm();
    const double bound = 0.9 * (1.0 + x.norm() * 12.0 * x.norm() / (r2 * r2));
    EXPECT_LE(ratio, bound * (1.0 + 1e-6));
  }
}

TEST(Ikeda, TrajectoriesStayBounded) {
  RngStream rng(2);
  for (int t = 0; t < 20; ++t) {
    Vector x = vec2(rng.uniform(-1, 2), rng.uniform(-2, 1));
    for (int k = 0; k < 10000; ++k) {
      x = ikeda_step(x);
      ASSERT_LT(x.norm(), 10.0);
    }
  }
}

TEST(Ikeda, AttractorPointsAvoidStableFixedPoint) {
  const Vector fixed = vec2(2.97213, 4.14595);
  EXPECT_LT((ikeda_step(fixed) - fixed).norm(), 1e-4);
  RngStream rng(4);
  Vector mean = Vector::Zero(2);
  const int draws = 300;
  for (int t = 0; t < draws; ++t) {
    Vector x = ikeda_attractor_point(rng);
    mean += x / draws;
    for (int k = 0; k < 500; ++k) x = ikeda_step(x);
    EXPECT_GT((x - fixed).norm(), 1e-3);
  }
  // The chaotic attractor's mean is near (0.63, -0.42).
  EXPECT_NEAR(mean(0), 0.63, 0.1);
  EXPECT_NEAR(mean(1), -0.42, 0.15);
}

TEST(L96, TendencyExamples) {
  EXPECT_LT(l96_tendency(Vector::Constant(40, 8.0), 8.0).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(l96_tendency(Vector::Zero(40), 8.0), Vector::Constant(40, 8.0));
  Vector x = Vector::Zero(40);
  x(0) = 1.0;
  x(39) = 2.0;
  x(38) = 3.0;
  // x'_0 = -x_39 (x_38 - x_1) - x_0 + F with cyclic wrap.
  EXPECT_DOUBLE_EQ(l96_tendency(x, 8.0)(0), -2.0 * 3.0 - 1.0 + 8.0);
}

TEST(L96, AdvectionConservesEnergy) {
  RngStream rng(3);
  for (int t = 0; t < 50; ++t) {
    const Vector x = 5.0 * rng.normal_vector(40);
    // Quadratic part alone: tendency with F = 0 plus the damping term.
    const Vector adv = l96_tendency(x, 0.0) + x;
    EXPECT_NEAR(x.dot(adv), 0.0, 1e-9);
  }
}

TEST(Rk4, ExponentialAndOrder) {
  const auto f = [](const Vector& x) { return Vector(x); };
  const Vector one = Vector::Constant(1, 1.0);
  EXPECT_NEAR(rk4_step(f, one, 0.05)(0), 1.05127109375, 1e-15);
  const auto zero = [](const Vector& x) { return Vector(Vector::Zero(x.size())); };
  EXPECT_EQ(rk4_step(zero, one, 0.1), one);

  const auto integrate = [&](int steps) {
    Vector x = one;
    for (int k = 0; k < steps; ++k) x = rk4_step(f, x, 1.0 / steps);
    return std::abs(x(0) - std::exp(1.0));
  };
  const double ratio = integrate(10) / integrate(20);
  EXPECT_NEAR(ratio, 16.0, 1.0);
  EXPECT_THROW(rk4_step(f, one, 0.0), Error);
}

TEST(L96, StationaryVarianceBand) {
  RngStream rng(4);
  Vector x = Vector::Constant(40, 8.0) + 0.01 * rng.normal_vector(40);
  Vector sum = Vector::Zero(40), sum_sq = Vector::Zero(40);
  int count = 0;
  for (int k = 1; k <= 1200; ++k) {
    x = l96_step(x);
    if (k >= 200) {
      sum += x;
      sum_sq += x.cwiseProduct(x);
      ++count;
    }
  }
  const Vector mean = sum / count;
  const Vector var = sum_sq / count - mean.cwiseProduct(mean);
  const double avg = var.mean();
  EXPECT_GE(avg, 5.0);
  EXPECT_LE(avg, 25.0);
}

TEST(L96, LongRunStable) {
  RngStream rng(5);
  Vector x = Vector::Constant(40, 8.0) + 0.01 * rng.normal_vector(40);
  for (int k = 0; k < 10000; ++k) x = l96_step(x);
  EXPECT_TRUE(x.allFinite());
  EXPECT_LT(x.cwiseAbs().maxCoeff(), 100.0);
}

TEST(Range, Examples) {
  const MeasurementModel m = range_measurement(2, GaussianNoise{Matrix::Identity(1, 1)});
  EXPECT_EQ(m.h(vec2(3, 4))(0), 5.0);
  const Matrix H = m.jacobian(vec2(3, 4));
  EXPECT_DOUBLE_EQ(H(0, 0), 0.6);
  EXPECT_DOUBLE_EQ(H(0, 1), 0.8);
  EXPECT_THROW(m.h(vec2(0, 0)), Error);
  EXPECT_THROW(m.jacobian(vec2(1e-13, 0)), Error);

  RngStream rng(6);
  for (int t = 0; t < 100; ++t) {
    const Vector x = 3.0 * rng.normal_vector(2);
    EXPECT_NEAR((m.jacobian(x) * x)(0), m.h(x)(0), 1e-12);
    const double e = 1e-6;
    for (Index j = 0; j < 2; ++j) {
      Vector dx = Vector::Zero(2);
      dx(j) = e;
      const double fd = (m.h(x + dx)(0) - m.h(x - dx)(0)) / (2 * e);
      EXPECT_NEAR(fd, m.jacobian(x)(0, j), 1e-6);
    }
  }
}

TEST(Identity, Examples) {
  const MeasurementModel m = identity_measurement(40);
  RngStream rng(7);
  const Vector x = rng.normal_vector(40);
  EXPECT_EQ(m.h(x), x);
  EXPECT_EQ(m.jacobian(x), Matrix::Identity(40, 40));
  EXPECT_EQ(gaussian_cov(m), Matrix::Identity(40, 40));
  const Matrix S = 2.0 * Matrix::Identity(40, 40);
  const Matrix H = m.jacobian(x);
  EXPECT_EQ(H * S * H.transpose() + gaussian_cov(m), S + Matrix::Identity(40, 40));
}
