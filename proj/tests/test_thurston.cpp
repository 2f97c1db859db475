#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "eulerlab/errors.hpp"
#include "eulerlab/thurston.hpp"

using namespace eulerlab;
using namespace eulerlab::thurston;

namespace {

// Heisenberg group as unipotent upper-triangular matrices [[1,a,c],[0,1,b],[0,0,1]].
Eigen::Matrix3d heis(double a, double b, double c) {
  Eigen::Matrix3d M = Eigen::Matrix3d::Identity();
  M(0, 1) = a;
  M(1, 2) = b;
  M(0, 2) = c;
  return M;
}

Eigen::Matrix3d heis(const LatticeElement& g) {
  return heis(static_cast<double>(g.a), static_cast<double>(g.b), static_cast<double>(g.c));
}

// Brute force: all translates of q in a wide box, both directions, lengths
// dx^2 + dy^2 + (dz - x dy)^2 + dt^2 + du^2 with x at the midpoint.
double brute_distance(const ChartPoint& p0, const ChartPoint& q0) {
  const ChartPoint p = canonicalize(p0).point;
  const ChartPoint q = canonicalize(q0).point;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [from, to] : {std::pair{p, q}, std::pair{q, p}}) {
    for (int a = -3; a <= 3; ++a) {
      for (int b = -3; b <= 3; ++b) {
        for (int c = -3; c <= 3; ++c) {
          for (int wt = -2; wt <= 2; ++wt) {
            for (int wu = -2; wu <= 2; ++wu) {
              const double dx = to[kX] + a - from[kX];
              const double dy = to[kY] + b - from[kY];
              const double dz = to[kZ] + a * to[kY] + c - from[kZ];
              const double dt = to[kT] + wt * kTwoPi - from[kT];
              const double du = to[kU] + wu * kTwoPi - from[kU];
              const double xm = from[kX] + 0.5 * dx;
              const double w = dz - xm * dy;
              best = std::min(best, std::sqrt(dx * dx + dy * dy + w * w + dt * dt + du * du));
            }
          }
        }
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("lattice composition matches the matrix group") {
  SplitMix64 rng(1);
  for (int t = 0; t < 100; ++t) {
    const auto r = [&]() { return static_cast<std::int64_t>(rng.next() % 9) - 4; };
    const LatticeElement g{r(), r(), r()};
    const LatticeElement h{r(), r(), r()};
    CHECK(heis(compose(g, h)).isApprox(heis(g) * heis(h), 0.0));
    CHECK(heis(inverse(g)).isApprox(heis(g).inverse(), 1e-15));
    CHECK(compose(g, inverse(g)) == LatticeElement{});
    // action on (x, y, z) is left multiplication
    const ChartPoint p = make_point(rng.uniform(), rng.uniform(), rng.uniform(), 1.0, 2.0);
    const ChartPoint q = lattice_act(g, p);
    const Eigen::Matrix3d M = heis(g) * heis(p[kX], p[kY], p[kZ]);
    CHECK(q[kX] == doctest::Approx(M(0, 1)));
    CHECK(q[kY] == doctest::Approx(M(1, 2)));
    CHECK(q[kZ] == doctest::Approx(M(0, 2)));
    CHECK(q[kT] == p[kT]);
    CHECK(q[kU] == p[kU]);
    const ChartPoint back = lattice_act(compose(inverse(g), g), p);
    CHECK((back - p).norm() == 0.0);
  }
}

TEST_CASE("canonicalize lands in the fundamental domain and is lattice invariant") {
  SplitMix64 rng(2);
  for (int t = 0; t < 200; ++t) {
    const ChartPoint p = make_point(rng.uniform(-50, 50), rng.uniform(-50, 50),
                                    rng.uniform(-50, 50), rng.uniform(-30, 30),
                                    rng.uniform(-30, 30));
    const Canonical c = canonicalize(p);
    for (int i = 0; i < 3; ++i) {
      CHECK(c.point[i] >= 0.0);
      CHECK(c.point[i] < 1.0);
    }
    CHECK(c.point[kT] >= 0.0);
    CHECK(c.point[kT] < kTwoPi);
    CHECK(c.point[kU] >= 0.0);
    CHECK(c.point[kU] < kTwoPi);
    ChartPoint expect = lattice_act(c.element, p);
    expect[kT] += kTwoPi * static_cast<double>(c.wraps[0]);
    expect[kU] += kTwoPi * static_cast<double>(c.wraps[1]);
    CHECK((expect - c.point).norm() < 1e-9);
    const ChartPoint moved = lattice_act({3, -2, 7}, p);
    CHECK((canonicalize(moved).point - c.point).norm() < 1e-9);
  }
}

TEST_CASE("quotient distance agrees with exhaustive search") {
  SplitMix64 rng(3);
  for (int t = 0; t < 60; ++t) {
    const ChartPoint p = random_quotient_point(rng);
    ChartPoint q = random_quotient_point(rng);
    if (t % 3 == 0) q = p + 0.05 * (random_quotient_point(rng) - p);  // nearby pairs
    const double d = quotient_distance(p, q);
    CHECK(d == doctest::Approx(brute_distance(p, q)).epsilon(1e-12));
    CHECK(d == quotient_distance(q, p));
    CHECK(quotient_distance(lattice_act({2, 1, -3}, p), q) == doctest::Approx(d).epsilon(1e-9));
  }
  const ChartPoint p = make_point(0.2, 0.3, 0.4, 1.0, 2.0);
  CHECK(quotient_distance(p, p) == 0.0);
  CHECK(quotient_distance_below(p, make_point(0.7, 0.8, 0.9, 4.0, 5.0), 1e-3) == 1e-3);
}

TEST_CASE("frame metric makes the frame orthonormal") {
  const ChartPoint p = make_point(0.7, 0.1, 0.2, 0.3, 0.4);
  Mat F = Mat::Identity(kDim, kDim);
  F(kZ, kY) = p[kX];  // d/dy + x d/dz
  const Mat G = frame_metric_at(p);
  CHECK((F.transpose() * G * F - Mat::Identity(kDim, kDim)).norm() < 1e-15);
}

TEST_CASE("X decomposes along the frame") {
  SplitMix64 rng(4);
  const VectorField X = field_X();
  const VectorField V1 = frame_V1();
  for (int t = 0; t < 50; ++t) {
    const ChartPoint p = random_quotient_point(rng);
    const double u = p[kU];
    Vec expect = std::sin(2 * u) * V1(p);
    expect[kT] += 2 * std::sin(u) * std::sin(u);
    expect[kZ] -= std::cos(u) * std::cos(u);
    CHECK((X(p) - expect).norm() < 1e-14);
    CHECK(X(p).dot(frame_metric_at(p) * X(p)) == doctest::Approx(speed_squared(u)));
  }
  // along u = 0 the field is -d/dz
  const Vec at_zero = X(make_point(0.3, 0.2, 0.1, 1.0, 0.0));
  CHECK((at_zero + Vec::Unit(kDim, kZ)).norm() == 0.0);
}

TEST_CASE("beta(X) = 1 and W is excluded near the bad set") {
  const VectorField X = field_X();
  const KForm beta = form_beta();
  for (const ChartPoint& p : random_quotient_points(5, 2000)) {
    REQUIRE(std::abs(beta.coeffs(p).dot(X(p)) - 1.0) < 1e-12);
  }
  const VectorField W = field_W();
  CHECK_THROWS_AS(W(make_point(0, 0, 0, 0, 5e-4)), DomainError);
  CHECK_THROWS_AS(W(make_point(0, 0, 0, 0, std::numbers::pi + 1e-4)), DomainError);
  const ChartPoint p = make_point(0.1, 0.2, 0.3, 0.4, 0.8);
  const double s = std::sin(0.8);
  CHECK((W(p) - X(p) / (2 * s * s)).norm() < 1e-14);
  CHECK(bad_set_distance(kTwoPi - 0.01) == doctest::Approx(0.01));
}

TEST_CASE("period and length formulas") {
  CHECK(period_X(std::numbers::pi / 2) == doctest::Approx(std::numbers::pi));
  CHECK(orbit_length_formula(0.0) == 1.0);
  const double ratio = orbit_length_formula(0.05) / orbit_length_formula(0.5);
  CHECK(ratio > 70.0);
  CHECK(ratio < 80.0);
  CHECK_THROWS_AS(period_X(0.0), ContractViolation);
}

TEST_CASE("fields and forms descend") {
  for (int a = -2; a <= 2; ++a) {
    for (int b = -2; b <= 2; ++b) {
      for (int c = -2; c <= 2; ++c) {
        const DescentReport r = verify_descent({a, b, c}, 20, 17);
        REQUIRE(r.passed);
      }
    }
  }
  // negative control: x d/dy is not invariant when a != 0
  const VectorField X = field_X();
  const VectorField broken(kDim, [X](const ChartPoint& p) -> Vec {
    Vec v = X(p);
    v[kY] += 0.05 * p[kX];
    return v;
  });
  CHECK_FALSE(verify_descent({1, 0, 0}, 20, 17, broken).passed);
  CHECK(verify_descent({0, 1, 1}, 20, 17, broken).passed);
}

TEST_CASE("random quotient points are reproducible") {
  const auto a = random_quotient_points(99, 10);
  const auto b = random_quotient_points(99, 10);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK((a[i] - b[i]).norm() == 0.0);
  CHECK((random_quotient_points(100, 1)[0] - a[0]).norm() > 0.0);
}
