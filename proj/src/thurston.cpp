#include "eulerlab/thurston.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "eulerlab/errors.hpp"
#include "eulerlab/rng.hpp"

namespace eulerlab::thurston {

ChartPoint make_point(double x, double y, double z, double t, double u) {
  ChartPoint p(kDim);
  p << x, y, z, t, u;
  return p;
}

LatticeElement compose(const LatticeElement& left, const LatticeElement& right) {
  // [[1,a2,c2],[0,1,b2]] * [[1,a1,c1],[0,1,b1]]
  return {left.a + right.a, left.b + right.b, left.c + right.c + left.a * right.b};
}

LatticeElement inverse(const LatticeElement& g) { return {-g.a, -g.b, g.a * g.b - g.c}; }

ChartPoint lattice_act(const LatticeElement& g, const ChartPoint& p) {
  require(p.size() == kDim, "lattice_act: expected a 5-chart point");
  ChartPoint q = p;
  const auto a = static_cast<double>(g.a);
  q[kX] = p[kX] + a;
  q[kY] = p[kY] + static_cast<double>(g.b);
  q[kZ] = p[kZ] + a * p[kY] + static_cast<double>(g.c);
  return q;
}

Diffeo lattice_diffeo(const LatticeElement& g) {
  const LatticeElement inv = inverse(g);
  Mat J = Mat::Identity(kDim, kDim);
  J(kZ, kY) = static_cast<double>(g.a);
  return Diffeo(
      kDim, [g](const ChartPoint& p) { return lattice_act(g, p); },
      [J](const ChartPoint&) { return J; },
      [inv](const ChartPoint& q) { return lattice_act(inv, q); });
}

namespace {

std::int64_t floor_int(double v) { return static_cast<std::int64_t>(std::floor(v)); }

// Reduces v into [0, period) and returns the number of periods removed.
std::int64_t wrap_into(double& v, double period) {
  const std::int64_t k = floor_int(v / period);
  v -= static_cast<double>(k) * period;
  if (v >= period) {  // rounding at the upper edge
    v -= period;
    return k + 1;
  }
  if (v < 0.0) {
    v += period;
    return k - 1;
  }
  return k;
}

}  // namespace

Canonical canonicalize(const ChartPoint& p) {
  require(p.size() == kDim, "canonicalize: expected a 5-chart point");
  Canonical out;
  const LatticeElement gb{0, -floor_int(p[kY]), 0};
  ChartPoint q = lattice_act(gb, p);
  const LatticeElement ga{-floor_int(q[kX]), 0, 0};
  q = lattice_act(ga, q);
  const LatticeElement gc{0, 0, -floor_int(q[kZ])};
  q = lattice_act(gc, q);
  out.element = compose(gc, compose(ga, gb));
  out.wraps[0] = -wrap_into(q[kT], kTPeriod);
  out.wraps[1] = -wrap_into(q[kU], kUPeriod);
  out.point = q;
  return out;
}

Mat frame_metric_at(const ChartPoint& p) {
  const double x = p[kX];
  Mat g = Mat::Identity(kDim, kDim);
  g(kY, kY) = 1.0 + x * x;
  g(kY, kZ) = -x;
  g(kZ, kY) = -x;
  return g;
}

MetricEval frame_metric() { return MetricEval(kDim, frame_metric_at); }

namespace {

double local_length(const ChartPoint& p, const ChartPoint& q) {
  const Vec d = q - p;
  const double xm = 0.5 * (p[kX] + q[kX]);
  // |d|^2 = dx^2 + dy^2 + (dz - x dy)^2 + dt^2 + du^2
  const double w = d[kZ] - xm * d[kY];
  return std::sqrt(d[kX] * d[kX] + d[kY] * d[kY] + w * w + d[kT] * d[kT] + d[kU] * d[kU]);
}

double one_sided(const ChartPoint& p, const ChartPoint& q, double cutoff) {
  double best = std::numeric_limits<double>::infinity();
  for (int wt = -1; wt <= 1; ++wt) {
    const double dt = q[kT] + wt * kTPeriod - p[kT];
    if (std::abs(dt) >= std::min(best, cutoff)) continue;
    for (int wu = -1; wu <= 1; ++wu) {
      const double du = q[kU] + wu * kUPeriod - p[kU];
      const double torus = std::hypot(dt, du);
      if (torus >= std::min(best, cutoff)) continue;
      for (int a = -1; a <= 1; ++a) {
        for (int b = -1; b <= 1; ++b) {
          for (int c = -1; c <= 1; ++c) {
            ChartPoint r = lattice_act({a, b, c}, q);
            r[kT] += wt * kTPeriod;
            r[kU] += wu * kUPeriod;
            best = std::min(best, local_length(p, r));
          }
        }
      }
    }
  }
  return best;
}

}  // namespace

double quotient_distance_below(const ChartPoint& p, const ChartPoint& q, double cutoff) {
  require(p.size() == kDim && q.size() == kDim, "quotient_distance: expected 5-chart points");
  const ChartPoint cp = canonicalize(p).point;
  const ChartPoint cq = canonicalize(q).point;
  const double d = std::min(one_sided(cp, cq, cutoff), one_sided(cq, cp, cutoff));
  return std::isfinite(d) ? d : cutoff;
}

double quotient_distance(const ChartPoint& p, const ChartPoint& q) {
  return quotient_distance_below(p, q, std::numeric_limits<double>::infinity());
}

VectorField frame_V1() {
  return VectorField(kDim, [](const ChartPoint& p) -> Vec {
    const double ct = std::cos(p[kT]);
    const double st = std::sin(p[kT]);
    Vec v = Vec::Zero(kDim);
    v[kX] = ct;
    v[kY] = st;
    v[kZ] = st * p[kX];
    return v;
  });
}

VectorField frame_V2() {
  return VectorField(kDim, [](const ChartPoint& p) -> Vec {
    const double ct = std::cos(p[kT]);
    const double st = std::sin(p[kT]);
    Vec v = Vec::Zero(kDim);
    v[kX] = -st;
    v[kY] = ct;
    v[kZ] = ct * p[kX];
    return v;
  });
}

namespace {

Vec eval_X(const ChartPoint& p) {
  const double x = p[kX];
  const double t = p[kT];
  const double u = p[kU];
  const double s2u = std::sin(2.0 * u);
  const double su = std::sin(u);
  const double cu = std::cos(u);
  const double st = std::sin(t);
  Vec v(kDim);
  v[kX] = s2u * std::cos(t);
  v[kY] = s2u * st;
  v[kZ] = s2u * st * x - cu * cu;
  v[kT] = 2.0 * su * su;
  v[kU] = 0.0;
  return v;
}

Mat jacobian_X(const ChartPoint& p) {
  const double x = p[kX];
  const double t = p[kT];
  const double u = p[kU];
  const double s2u = std::sin(2.0 * u);
  const double c2u = std::cos(2.0 * u);
  const double st = std::sin(t);
  const double ct = std::cos(t);
  Mat J = Mat::Zero(kDim, kDim);
  J(kX, kT) = -s2u * st;
  J(kX, kU) = 2.0 * c2u * ct;
  J(kY, kT) = s2u * ct;
  J(kY, kU) = 2.0 * c2u * st;
  J(kZ, kX) = s2u * st;
  J(kZ, kT) = s2u * ct * x;
  // d/du (sin2u sin t x - cos^2 u) = 2 cos2u sin t x + sin 2u
  J(kZ, kU) = 2.0 * c2u * st * x + s2u;
  J(kT, kU) = 2.0 * s2u;  // d/du 2 sin^2 u
  return J;
}

}  // namespace

VectorField field_X() { return VectorField(kDim, eval_X, jacobian_X); }

double bad_set_distance(double u) {
  const double r = std::fmod(std::abs(u), std::numbers::pi);
  return std::min(r, std::numbers::pi - r);
}

VectorField field_W(double band_eps) {
  require(band_eps > 0.0, "field_W: excluded band must be positive");
  const auto check = [band_eps](const ChartPoint& p) {
    if (bad_set_distance(p[kU]) <= band_eps) {
      throw DomainError("W is undefined near the bad set u = 0 mod pi (u = " +
                        std::to_string(p[kU]) + ", band " + std::to_string(band_eps) + ")");
    }
  };
  return VectorField(
      kDim,
      [check](const ChartPoint& p) -> Vec {
        check(p);
        const double s = std::sin(p[kU]);
        return eval_X(p) / (2.0 * s * s);
      },
      [check](const ChartPoint& p) -> Mat {
        check(p);
        const double s = std::sin(p[kU]);
        const double f = 1.0 / (2.0 * s * s);
        Mat J = f * jacobian_X(p);
        // d/du of 1/(2 sin^2 u) = -cos u / sin^3 u
        J.col(kU) += (-std::cos(p[kU]) / (s * s * s)) * eval_X(p);
        return J;
      });
}

double speed_squared(double u) {
  const double s2u = std::sin(2.0 * u);
  const double s = std::sin(u);
  const double c = std::cos(u);
  return s2u * s2u + 4.0 * s * s * s * s + c * c * c * c;
}

double period_X(double u) {
  const double s = std::sin(u);
  require(s != 0.0, "period_X: u lies on the bad set");
  return std::numbers::pi / (s * s);
}

double orbit_length_formula(double u) {
  if (std::sin(u) == 0.0) return 1.0;
  return std::sqrt(speed_squared(u)) * period_X(u);
}

KForm form_beta() {
  return KForm(
      kDim, 1,
      [](const ChartPoint& p) -> Vec {
        Vec c(kDim);
        c << 0.0, p[kX], -1.0, 0.5, 0.0;
        return c;
      },
      [](const ChartPoint&) -> Mat {
        Mat d = Mat::Zero(kDim, kDim);
        d(kY, kX) = 1.0;
        return d;
      });
}

KForm form_mu() { return KForm::basis(kDim, {0, 1, 2, 3, 4}); }

ChartPoint random_quotient_point(SplitMix64& rng) {
  const double x = rng.uniform();
  const double y = rng.uniform();
  const double z = rng.uniform();
  const double t = rng.uniform(0.0, kTPeriod);
  const double u = rng.uniform(0.0, kUPeriod);
  return make_point(x, y, z, t, u);
}

std::vector<ChartPoint> random_quotient_points(std::uint64_t seed, int count) {
  require(count >= 0, "random_quotient_points: negative count");
  SplitMix64 rng(seed);
  std::vector<ChartPoint> points;
  points.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) points.push_back(random_quotient_point(rng));
  return points;
}

DescentReport verify_descent(const LatticeElement& g, int samples, std::uint64_t seed,
                             double tolerance) {
  return verify_descent(g, samples, seed, field_X(), tolerance);
}

DescentReport verify_descent(const LatticeElement& g, int samples, std::uint64_t seed,
                             const VectorField& field, double tolerance) {
  require(samples > 0, "verify_descent: samples must be positive");
  require(field.dim() == kDim, "verify_descent: field must live on the 5-chart");
  const Diffeo phi = lattice_diffeo(g);
  const VectorField pushed = pushforward(phi, field);
  const KForm beta = form_beta();
  const KForm mu = form_mu();
  const KForm beta_pulled = pullback(phi, beta);
  const KForm mu_pulled = pullback(phi, mu);

  DescentReport report;
  report.element = g;
  report.samples = samples;
  report.tolerance = tolerance;
  for (const ChartPoint& p : random_quotient_points(seed, samples)) {
    // Compare at the image point so the pushforward is evaluated where it lives.
    const ChartPoint q = lattice_act(g, p);
    report.field_residual =
        std::max(report.field_residual, (pushed(q) - field(q)).lpNorm<Eigen::Infinity>());
    report.beta_residual = std::max(
        report.beta_residual, (beta_pulled.coeffs(p) - beta.coeffs(p)).lpNorm<Eigen::Infinity>());
    report.mu_residual = std::max(
        report.mu_residual, (mu_pulled.coeffs(p) - mu.coeffs(p)).lpNorm<Eigen::Infinity>());
  }
  report.passed = report.field_residual < tolerance && report.beta_residual < tolerance &&
                  report.mu_residual < tolerance;
  return report;
}

}  // namespace eulerlab::thurston
