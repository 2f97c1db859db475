// Property suites on seeded random trigonometric test forms. Runs standalone.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "eulerlab/exterior_calc.hpp"
#include "eulerlab/flow.hpp"
#include "eulerlab/thurston.hpp"

using namespace eulerlab;
namespace th = eulerlab::thurston;

namespace {

constexpr int kDim = 5;

std::vector<ChartPoint> points(std::uint64_t seed, int count) {
  SplitMix64 rng(seed);
  std::vector<ChartPoint> out;
  for (int i = 0; i < count; ++i) {
    ChartPoint p(kDim);
    for (int j = 0; j < kDim; ++j) p[j] = rng.uniform(-2.0, 2.0);
    out.push_back(p);
  }
  return out;
}

double worst(const KForm& a, const KForm& b, const std::vector<ChartPoint>& pts) {
  double w = 0.0;
  for (const auto& p : pts) w = std::max(w, (a.coeffs(p) - b.coeffs(p)).lpNorm<Eigen::Infinity>());
  return w;
}

double worst(const KForm& a, const std::vector<ChartPoint>& pts) {
  double w = 0.0;
  for (const auto& p : pts) w = std::max(w, a.coeffs(p).lpNorm<Eigen::Infinity>());
  return w;
}

Diffeo shear() {
  return Diffeo(
      kDim,
      [](const ChartPoint& p) -> ChartPoint {
        ChartPoint q = p;
        q[0] += 0.2 * std::sin(p[4]);
        q[1] += 0.3 * p[0] * p[0];
        q[3] += 0.1 * std::exp(0.5 * p[2]);
        return q;
      },
      [](const ChartPoint& p) -> Mat {
        Mat J = Mat::Identity(kDim, kDim);
        J(0, 4) = 0.2 * std::cos(p[4]);
        J(1, 0) = 0.6 * p[0];
        J(3, 2) = 0.05 * std::exp(0.5 * p[2]);
        return J;
      });
}

}  // namespace

TEST_CASE("d o d = 0") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    SplitMix64 rng(seed);
    const auto pts = points(seed + 100, 50);
    for (int k = 0; k <= 3; ++k) {
      const KForm w = random_trig_form(kDim, k, rng);
      CHECK(worst(exterior_derivative(exterior_derivative(w)), pts) < 1e-8);
    }
  }
}

TEST_CASE("Leibniz rule") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    SplitMix64 rng(seed);
    const auto pts = points(seed + 200, 50);
    for (int ka = 0; ka <= 2; ++ka) {
      for (int kb = 0; kb + ka <= 3; ++kb) {
        const KForm a = random_trig_form(kDim, ka, rng);
        const KForm b = random_trig_form(kDim, kb, rng);
        const KForm lhs = exterior_derivative(wedge(a, b));
        const KForm rhs = add(wedge(exterior_derivative(a), b),
                              scale(ka % 2 ? -1.0 : 1.0, wedge(a, exterior_derivative(b))));
        CHECK(worst(lhs, rhs, pts) < 1e-8);
      }
    }
  }
}

TEST_CASE("pullback commutes with d") {
  const Diffeo phis[] = {shear(), th::lattice_diffeo({2, -1, 1})};
  SplitMix64 rng(7);
  const auto pts = points(300, 50);
  for (const Diffeo& phi : phis) {
    for (int k = 0; k <= 3; ++k) {
      const KForm w = random_trig_form(kDim, k, rng);
      CHECK(worst(pullback(phi, exterior_derivative(w)), exterior_derivative(pullback(phi, w)),
                  pts) < 1e-7);
    }
  }
}

TEST_CASE("i_X i_X = 0 exactly") {
  SplitMix64 rng(8);
  const auto pts = points(400, 50);
  const VectorField fields[] = {th::field_X(), random_trig_field(kDim, rng)};
  for (const VectorField& X : fields) {
    for (int k = 2; k <= kDim; ++k) {
      CHECK(worst(interior_product(X, interior_product(X, random_trig_form(kDim, k, rng))), pts) ==
            0.0);
    }
  }
}

TEST_CASE("Cartan formula agrees with flow transport") {
  SplitMix64 rng(9);
  flow::IntegratorConfig cfg;
  cfg.abs_tol = 1e-12;
  cfg.rel_tol = 1e-12;
  const auto pts = points(500, 3);
  const VectorField fields[] = {th::field_X(), random_trig_field(kDim, rng)};
  for (const VectorField& X : fields) {
    for (int k = 0; k <= 3; ++k) {
      const KForm w = random_trig_form(kDim, k, rng);
      const KForm cartan = lie_derivative_form(X, w);
      for (const auto& p : pts) {
        const Vec oracle = flow::transport_lie_derivative(X, w, p, 1e-2, cfg);
        CHECK((cartan.coeffs(p) - oracle).lpNorm<Eigen::Infinity>() < 1e-5);
      }
    }
  }
}

TEST_CASE("wedge is graded commutative and associative") {
  SplitMix64 rng(10);
  const auto pts = points(600, 30);
  const KForm a = random_trig_form(kDim, 1, rng);
  const KForm b = random_trig_form(kDim, 2, rng);
  const KForm c = random_trig_form(kDim, 1, rng);
  CHECK(worst(wedge(a, b), wedge(b, a), pts) < 1e-13);
  CHECK(worst(wedge(a, c), scale(-1.0, wedge(c, a)), pts) < 1e-13);
  CHECK(worst(wedge(wedge(a, b), c), wedge(a, wedge(b, c)), pts) < 1e-12);
}
