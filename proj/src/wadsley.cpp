#include "eulerlab/wadsley.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "eulerlab/errors.hpp"
#include "eulerlab/rng.hpp"

namespace eulerlab::wadsley {

namespace {

constexpr int kAmbient = 4;

Mat hopf_rotation(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Mat R = Mat::Zero(kAmbient, kAmbient);
  R(0, 0) = c;
  R(0, 1) = -s;
  R(1, 0) = s;
  R(1, 1) = c;
  R(2, 2) = c;
  R(2, 3) = -s;
  R(3, 2) = s;
  R(3, 3) = c;
  return R;
}

Mat hopf_generator_matrix() {
  Mat J = Mat::Zero(kAmbient, kAmbient);
  J(0, 1) = -1.0;
  J(1, 0) = 1.0;
  J(2, 3) = -1.0;
  J(3, 2) = 1.0;
  return J;
}

}  // namespace

VectorField hopf_field() {
  const Mat J = hopf_generator_matrix();
  return VectorField(
      kAmbient, [J](const ChartPoint& p) -> Vec { return J * p; },
      [J](const ChartPoint&) { return J; });
}

CircleAction hopf_action() {
  return CircleAction{
      kAmbient,
      [](double theta, const ChartPoint& p) -> ChartPoint { return hopf_rotation(theta) * p; },
      [](double theta, const ChartPoint&) { return hopf_rotation(theta); },
      hopf_field()};
}

KForm hopf_contact_form() {
  // coefficients on dx1..dx4: (-x2, x1, -x4, x3)
  const Mat J = hopf_generator_matrix();
  return KForm(
      kAmbient, 1, [J](const ChartPoint& p) -> Vec { return J * p; },
      [J](const ChartPoint&) { return J; });
}

MetricEval round_metric() { return MetricEval::euclidean(kAmbient); }

KForm sphere_volume() {
  // i_p (dx1^dx2^dx3^dx4) = sum_i (-1)^i p_i dx^{all but i}; the 3-subsets in
  // lexicographic order omit index 3, 2, 1, 0 respectively.
  return KForm(
      kAmbient, 3,
      [](const ChartPoint& p) -> Vec {
        Vec c(4);
        c << -p[3], p[2], -p[1], p[0];
        return c;
      },
      [](const ChartPoint&) -> Mat {
        Mat d = Mat::Zero(4, kAmbient);
        d(0, 3) = -1.0;
        d(1, 2) = 1.0;
        d(2, 1) = -1.0;
        d(3, 0) = 1.0;
        return d;
      });
}

TangentBasis sphere_basis() {
  return [](const ChartPoint& p) -> Mat {
    const double r = p.norm();
    require(r > 0.0, "sphere_basis: undefined at the origin");
    Mat E(kAmbient, 3);
    E.col(0) << -p[1], p[0], -p[3], p[2];
    E.col(1) << -p[2], p[3], p[0], -p[1];
    E.col(2) << -p[3], -p[2], p[1], p[0];
    return E / r;
  };
}

std::vector<ChartPoint> random_sphere_points(std::uint64_t seed, int count) {
  require(count >= 0, "random_sphere_points: negative count");
  SplitMix64 rng(seed);
  std::vector<ChartPoint> out;
  out.reserve(static_cast<std::size_t>(count));
  while (static_cast<int>(out.size()) < count) {
    ChartPoint p(kAmbient);
    for (int i = 0; i < kAmbient; ++i) p[i] = rng.normal();
    const double r = p.norm();
    if (r < 1e-8) continue;
    out.push_back(p / r);
  }
  return out;
}

MetricEval perturbed_round_metric(double eps) {
  return MetricEval(kAmbient, [eps](const ChartPoint& p) -> Mat {
    Vec s(kAmbient);
    s << p[0] * p[2] + p[1] * p[1], std::exp(p[0]) * p[3] - p[1], p[2] * p[2] * p[2] - p[0] * p[1],
        std::sin(2.0 * p[3] + p[0]);
    return Mat::Identity(kAmbient, kAmbient) + eps * s * s.transpose();
  });
}

MetricEval average_metric(const MetricEval& g1, const CircleAction& rho, int n_nodes) {
  require(n_nodes >= 1, "average_metric: need at least one quadrature node");
  require(rho.dim == g1.dim(), "average_metric: dimension mismatch");
  const auto act = rho.act;
  const auto jac = rho.jacobian;
  const double eps_pd = g1.eps_pd();
  return MetricEval(
      g1.dim(),
      [g1, act, jac, n_nodes](const ChartPoint& p) -> Mat {
        Mat sum = Mat::Zero(g1.dim(), g1.dim());
        for (int k = 0; k < n_nodes; ++k) {
          const double theta = 2.0 * std::numbers::pi * k / n_nodes;
          const Mat J = jac(theta, p);
          sum += J.transpose() * g1(act(theta, p)) * J;
        }
        Mat g = sum / static_cast<double>(n_nodes);
        g = 0.5 * (g + g.transpose());
        Eigen::LLT<Mat> llt(g);
        if (llt.info() != Eigen::Success) {
          throw ContractViolation("average_metric: averaged metric is not positive definite");
        }
        return g;
      },
      eps_pd);
}

double killing_residual(const VectorField& X, const MetricEval& g,
                        const std::vector<ChartPoint>& samples, double h) {
  double worst = 0.0;
  for (const ChartPoint& p : samples) {
    worst = std::max(worst, lie_derivative_metric(X, g, p, h).cwiseAbs().maxCoeff());
  }
  return worst;
}

MetricEval normalize_metric(const MetricEval& g2, const VectorField& X) {
  require(g2.dim() == X.dim(), "normalize_metric: dimension mismatch");
  return MetricEval(
      g2.dim(),
      [g2, X](const ChartPoint& p) -> Mat {
        const Mat g = g2(p);
        const Vec x = X(p);
        const double norm2 = x.dot(g * x);
        if (!(norm2 > std::numeric_limits<double>::min())) {
          throw ContractViolation("normalize_metric: g2(X, X) vanishes; X must be non-vanishing");
        }
        return g / norm2;
      },
      g2.eps_pd());
}

KForm dual_one_form(const MetricEval& g, const VectorField& X) {
  require(g.dim() == X.dim(), "dual_one_form: dimension mismatch");
  return KForm(g.dim(), 1, [g, X](const ChartPoint& p) -> Vec { return g(p) * X(p); });
}

GeodesibilityReport geodesibility_check(const KForm& alpha, const VectorField& X,
                                        const std::vector<ChartPoint>& samples, double tolerance,
                                        TangentBasis basis) {
  require(alpha.degree() == 1, "geodesibility_check: alpha must be a 1-form");
  require(!samples.empty(), "geodesibility_check: no sample points");
  if (!basis) basis = full_chart_basis(X.dim());
  const KForm contraction = interior_product(X, exterior_derivative(alpha));
  GeodesibilityReport r;
  r.tolerance = tolerance;
  r.min_alpha_X = std::numeric_limits<double>::infinity();
  r.max_alpha_X = -std::numeric_limits<double>::infinity();
  for (const ChartPoint& p : samples) {
    const double ax = alpha.coeffs(p).dot(X(p));
    r.min_alpha_X = std::min(r.min_alpha_X, ax);
    r.max_alpha_X = std::max(r.max_alpha_X, ax);
    r.max_iX_dalpha = std::max(
        r.max_iX_dalpha, restricted_coeffs(contraction, p, basis(p)).lpNorm<Eigen::Infinity>());
  }
  r.passed = r.min_alpha_X > 0.0 && r.max_iX_dalpha < tolerance;
  return r;
}

namespace {

// Tangent-space data at p in the coordinates of the (orthonormal) basis E.
struct TangentData {
  Mat E;
  Vec a;        // alpha(E_i)
  Vec xi;       // X = E xi
  double density;  // mu(E_1, ..., E_m)
};

TangentData tangent_data(const KForm& alpha, const VectorField& X, const KForm& mu,
                         const TangentBasis& basis, const ChartPoint& p) {
  TangentData d;
  d.E = basis(p);
  d.a = restricted_coeffs(alpha, p, d.E);
  d.xi = d.E.transpose() * X(p);
  d.density = restricted_coeffs(mu, p, d.E)[0];
  return d;
}

}  // namespace

MetricEval build_euler_metric(const KForm& alpha, const VectorField& X, const KForm& mu,
                              const MetricEval& base_g, TangentBasis basis) {
  require(alpha.degree() == 1, "build_euler_metric: alpha must be a 1-form");
  require(alpha.dim() == X.dim() && mu.dim() == X.dim() && base_g.dim() == X.dim(),
          "build_euler_metric: dimension mismatch");
  if (!basis) basis = full_chart_basis(X.dim());
  const int n = X.dim();
  return MetricEval(n, [alpha, X, mu, base_g, basis, n](const ChartPoint& p) -> Mat {
    const TangentData d = tangent_data(alpha, X, mu, basis, p);
    const auto m = d.E.cols();
    require(mu.degree() == m, "build_euler_metric: mu must be a top form on the tangent space");
    const double ax = d.a.dot(d.xi);
    require(ax > 0.0, "build_euler_metric: alpha(X) must be positive");
    require(d.density != 0.0, "build_euler_metric: mu vanishes");

    // v = (alpha(v)/alpha(X)) X + P v with P v in ker alpha.
    const Mat P = Mat::Identity(m, m) - d.xi * d.a.transpose() / ax;
    const Mat G = d.E.transpose() * base_g(p) * d.E;
    const Mat along = d.a * d.a.transpose() / ax;
    const Mat across = P.transpose() * G * P;
    // det(along + c across) = c^{m-1} det(along + across)
    const double det1 = (along + across).determinant();
    require(det1 > 0.0, "build_euler_metric: base metric degenerates on ker alpha");
    double c = 1.0;
    if (m > 1) c = std::pow(d.density * d.density / det1, 1.0 / static_cast<double>(m - 1));
    const Mat g_tan = along + c * across;
    return d.E * g_tan * d.E.transpose() + (Mat::Identity(n, n) - d.E * d.E.transpose());
  });
}

EulerMetricResiduals euler_metric_residuals(const MetricEval& g, const KForm& alpha,
                                            const VectorField& X, const KForm& mu,
                                            const std::vector<ChartPoint>& samples,
                                            TangentBasis basis) {
  if (!basis) basis = full_chart_basis(X.dim());
  EulerMetricResiduals r;
  for (const ChartPoint& p : samples) {
    const TangentData d = tangent_data(alpha, X, mu, basis, p);
    const Mat g_tan = d.E.transpose() * g(p) * d.E;
    r.dual = std::max(r.dual, (g_tan * d.xi - d.a).lpNorm<Eigen::Infinity>());
    r.volume = std::max(r.volume, std::abs(std::sqrt(g_tan.determinant()) - std::abs(d.density)));
  }
  return r;
}

VectorField curl_from_form(const KForm& alpha, const KForm& mu, TangentBasis basis) {
  require(alpha.degree() == 1, "curl: alpha must be a 1-form");
  require(alpha.dim() == mu.dim(), "curl: dimension mismatch");
  const int n = alpha.dim();
  if (!basis) basis = full_chart_basis(n);
  const int m = mu.degree();
  if (m % 2 == 0 || m < 3) {
    throw UnsupportedOperation("curl is defined only in odd dimension 2n+1 >= 3");
  }
  const KForm power = wedge_power(exterior_derivative(alpha), (m - 1) / 2);
  return VectorField(n, [power, mu, basis, m](const ChartPoint& p) -> Vec {
    const Mat E = basis(p);
    require(E.cols() == m, "curl: basis dimension must equal the degree of mu");
    const double density = restricted_coeffs(mu, p, E)[0];
    if (!(std::abs(density) > 1e-300)) throw ContractViolation("curl: mu vanishes");
    const Vec rhs = restricted_coeffs(power, p, E);
    // Column i: coefficients of i_{e_i} (density e^1..e^m) = (-1)^i density
    // e^{all but i}, which sits at position m-1-i among the (m-1)-subsets.
    Mat M = Mat::Zero(m, m);
    for (int i = 0; i < m; ++i) M(m - 1 - i, i) = (i % 2 == 0 ? 1.0 : -1.0) * density;
    const Vec w = M.partialPivLu().solve(rhs);
    return E * w;
  });
}

VectorField curl(const VectorField& X, const MetricEval& g, const KForm& mu, TangentBasis basis) {
  return curl_from_form(dual_one_form(g, X), mu, std::move(basis));
}

double beltrami_residual(const VectorField& X, const VectorField& w, const MetricEval& g,
                         const std::vector<ChartPoint>& samples) {
  double worst = 0.0;
  for (const ChartPoint& p : samples) {
    const Vec x = X(p);
    const Vec wp = w(p);
    const double xx = g.inner(p, x, x);
    require(xx > 0.0, "beltrami_residual: X vanishes at a sample");
    const Vec perp = wp - (g.inner(p, wp, x) / xx) * x;
    worst = std::max(worst, g.norm(p, perp));
  }
  return worst;
}

KForm riemannian_volume(const MetricEval& g, const KForm& reference, TangentBasis basis) {
  require(g.dim() == reference.dim(), "riemannian_volume: dimension mismatch");
  if (!basis) basis = full_chart_basis(g.dim());
  const ScalarField density(g.dim(), [g, reference, basis](const ChartPoint& p) {
    const Mat E = basis(p);
    const double ref = restricted_coeffs(reference, p, E)[0];
    require(ref != 0.0, "riemannian_volume: reference form vanishes");
    return std::sqrt((E.transpose() * g(p) * E).determinant()) / ref;
  });
  return scale(density, reference);
}

}  // namespace eulerlab::wadsley
