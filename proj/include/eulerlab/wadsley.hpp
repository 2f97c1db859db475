#pragma once

// Averaging a metric over a circle action and building Beltrami-type Euler
// metrics.
//
// Pipeline: g1 --average--> g2 (generator Killing) --normalize--> g3
// (unit generator) --dual--> alpha with alpha(X) = 1, i_X d alpha = 0
// --build_euler_metric--> g with g(X, .) = alpha, X orthogonal to ker alpha
// and Riemannian volume mu. The curl w of X is defined by i_w mu = (d alpha)^n
// on a manifold of dimension 2n + 1.
//
// S^3 is handled in ambient R^4 coordinates; forms and metrics are evaluated
// on the tangent frame returned by sphere_basis().

#include <cstdint>
#include <functional>
#include <vector>

#include "eulerlab/exterior_calc.hpp"

namespace eulerlab::wadsley {

struct CircleAction {
  int dim = 0;
  std::function<ChartPoint(double, const ChartPoint&)> act;
  std::function<Mat(double, const ChartPoint&)> jacobian;  // d act(theta, .) / dp
  VectorField generator;
};

/// rho_theta rotates (x1, x2) and (x3, x4) by theta; generator is the Hopf field.
CircleAction hopf_action();
/// (-x2, x1, -x4, x3).
VectorField hopf_field();
/// x1 dx2 - x2 dx1 + x3 dx4 - x4 dx3, analytic partials.
KForm hopf_contact_form();
/// The Euclidean metric of R^4, which restricts to the round metric on S^3.
MetricEval round_metric();
/// i_N (dx1 ^ dx2 ^ dx3 ^ dx4) with N = p: the round volume on S^3.
KForm sphere_volume();
/// Quaternionic frame (Hopf field, E2, E3) normalised by |p|; orthonormal and
/// tangent to the sphere through p, positively oriented w.r.t. sphere_volume.
TangentBasis sphere_basis();
/// Uniform points on the unit S^3.
std::vector<ChartPoint> random_sphere_points(std::uint64_t seed, int count);

/// Round metric plus eps * s s^T for a fixed smooth s: R^4 -> R^4 that is not
/// invariant under the Hopf action.
MetricEval perturbed_round_metric(double eps = 0.1);

/// g2(p) = (1/N) sum_k (rho_{theta_k}^* g1)(p), theta_k = 2 pi k / N.
/// Evaluation throws ContractViolation if the average is not positive definite.
MetricEval average_metric(const MetricEval& g1, const CircleAction& rho, int n_nodes);

/// max over samples and coordinate pairs of |(L_X g)_{ij}|.
double killing_residual(const VectorField& X, const MetricEval& g,
                        const std::vector<ChartPoint>& samples, double h = kDefaultFdStep);

/// g3 = g2 / g2(X, X). Throws ContractViolation where g2(X, X) vanishes.
MetricEval normalize_metric(const MetricEval& g2, const VectorField& X);

/// alpha = g(X, .).
KForm dual_one_form(const MetricEval& g, const VectorField& X);

struct GeodesibilityReport {
  double min_alpha_X = 0.0;
  double max_alpha_X = 0.0;
  double max_iX_dalpha = 0.0;  // max |i_X d alpha| coefficient on the basis
  double tolerance = 1e-6;
  bool passed = false;  // alpha(X) > 0 and i_X d alpha = 0 within tolerance
};

GeodesibilityReport geodesibility_check(const KForm& alpha, const VectorField& X,
                                        const std::vector<ChartPoint>& samples,
                                        double tolerance = 1e-6, TangentBasis basis = {});

/// Metric with g(X, .) = alpha, X orthogonal to ker alpha, and the restriction
/// of base_g to ker alpha scaled so that the Riemannian volume equals |mu|.
/// `basis` must return orthonormal columns (identity on a full chart).
MetricEval build_euler_metric(const KForm& alpha, const VectorField& X, const KForm& mu,
                              const MetricEval& base_g, TangentBasis basis = {});

struct EulerMetricResiduals {
  double dual = 0.0;    // max |g(X, v) - alpha(v)| over basis vectors v
  double volume = 0.0;  // max |sqrt(det g) - |mu|| on the basis
};

EulerMetricResiduals euler_metric_residuals(const MetricEval& g, const KForm& alpha,
                                            const VectorField& X, const KForm& mu,
                                            const std::vector<ChartPoint>& samples,
                                            TangentBasis basis = {});

/// The field w with i_w mu = (d alpha)^n, tangent dimension 2n + 1.
/// Throws UnsupportedOperation for even tangent dimension and ContractViolation
/// where mu vanishes.
VectorField curl_from_form(const KForm& alpha, const KForm& mu, TangentBasis basis = {});
/// curl_from_form(g(X, .), mu).
VectorField curl(const VectorField& X, const MetricEval& g, const KForm& mu,
                 TangentBasis basis = {});

/// max over samples of |w - (g(w, X) / g(X, X)) X|_g.
double beltrami_residual(const VectorField& X, const VectorField& w, const MetricEval& g,
                         const std::vector<ChartPoint>& samples);

/// Riemannian volume of g restricted to `basis`, as a top form on the
/// tangent space: sqrt(det(E^T g E)) * reference, where reference(E) = 1.
KForm riemannian_volume(const MetricEval& g, const KForm& reference, TangentBasis basis);

}  // namespace eulerlab::wadsley
