#include "eulerlab/chains.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "eulerlab/errors.hpp"
#include "eulerlab/thurston.hpp"

namespace eulerlab::chains {

double dirac_eval(const ChartPoint& p, const VectorField& X, const KForm& alpha) {
  require(alpha.degree() == 1, "dirac_eval: alpha must be a 1-form");
  Mat v = X(p);
  return eval_form(alpha, p, v);
}

double leaf_integral(const KForm& alpha, const flow::OrbitRecord& orbit) {
  require(alpha.degree() == 1, "leaf_integral: alpha must be a 1-form");
  require(orbit.points.size() == orbit.velocities.size() && orbit.points.size() >= 3,
          "leaf_integral: orbit record has no samples");
  std::vector<double> values;
  values.reserve(orbit.points.size());
  for (std::size_t i = 0; i < orbit.points.size(); ++i) {
    values.push_back(alpha.coeffs(orbit.points[i]).dot(orbit.velocities[i]));
  }
  return flow::simpson(values, orbit.period);
}

ChartPoint LeafFamily::base_point(double s) const {
  return thurston::make_point(x0, y0, z0, t0, s);
}

int leaf_normalizer(double period) {
  require(period > 0.0, "leaf_normalizer: period must be positive");
  return std::max(1, static_cast<int>(std::ceil(period / (2.0 * std::numbers::pi))));
}

CylinderMesh build_cylinder(const VectorField& X, const LeafFamily& family, int n_s,
                            int n_theta, const flow::IntegratorConfig& cfg) {
  cfg.validate();
  require(n_s >= 2 && n_s % 2 == 0, "build_cylinder: n_s must be even and >= 2");
  require(n_theta >= 3, "build_cylinder: n_theta must be >= 3");
  require(X.dim() == thurston::kDim, "build_cylinder: expected a field on the 5-chart");

  CylinderMesh mesh;
  mesh.n_s = n_s;
  mesh.n_theta = n_theta;
  const std::size_t lines = static_cast<std::size_t>(n_s) + 1;
  const double ds = (family.s1 - family.s0) / n_s;
  mesh.s.resize(lines);
  for (std::size_t j = 0; j < lines; ++j) mesh.s[j] = family.s0 + ds * static_cast<double>(j);
  mesh.s.back() = family.s1;
  mesh.periods.assign(lines, 0.0);
  mesh.normalizers.assign(lines, 1);
  mesh.points.assign(lines, {});
  mesh.d_theta.assign(lines, {});

  const flow::ReturnDetector detector = flow::thurston_detector();
  flow::IntegratorConfig line_cfg = cfg;
  line_cfg.samples = 3;  // interior lines only need the period

  flow::parallel_for(lines, [&](std::size_t j) {
    const double s = mesh.s[j];
    const ChartPoint p = family.base_point(s);
    const double sin_s = std::sin(s);
    const double guess = sin_s == 0.0 ? 1.0 : std::numbers::pi / (sin_s * sin_s);
    const bool boundary = j == 0 || j + 1 == lines;
    flow::OrbitRecord rec = flow::find_period(X, p, boundary ? cfg : line_cfg, detector, guess);
    mesh.periods[j] = rec.period;
    mesh.normalizers[j] = leaf_normalizer(rec.period);
    const flow::Trajectory traj = flow::integrate(X, p, rec.period, cfg, n_theta + 1);
    auto& row = mesh.points[j];
    auto& tangent = mesh.d_theta[j];
    row.assign(traj.points.begin(), traj.points.end() - 1);
    tangent.reserve(row.size());
    for (const ChartPoint& q : row) tangent.push_back(rec.period * X(q));
    if (j == 0) mesh.leaf_s0 = std::move(rec);
    if (j + 1 == lines) mesh.leaf_s1 = std::move(rec);
  });

  mesh.d_s.assign(lines, std::vector<Vec>(static_cast<std::size_t>(n_theta),
                                          Vec::Zero(thurston::kDim)));
  if (ds != 0.0) {
    for (std::size_t j = 0; j < lines; ++j) {
      for (std::size_t k = 0; k < static_cast<std::size_t>(n_theta); ++k) {
        const auto& P = mesh.points;
        Vec d;
        if (j == 0) {
          d = (-3.0 * P[0][k] + 4.0 * P[1][k] - P[2][k]) / (2.0 * ds);
        } else if (j + 1 == lines) {
          d = (3.0 * P[j][k] - 4.0 * P[j - 1][k] + P[j - 2][k]) / (2.0 * ds);
        } else {
          d = (P[j + 1][k] - P[j - 1][k]) / (2.0 * ds);
        }
        mesh.d_s[j][k] = d;
      }
    }
  }
  return mesh;
}

double chain_flux(const KForm& omega, const CylinderMesh& mesh) {
  require(omega.degree() == 2, "chain_flux: omega must be a 2-form");
  if (mesh.degenerate()) return 0.0;
  const std::size_t lines = mesh.s.size();
  std::vector<double> per_line(lines, 0.0);
  Mat V(omega.dim(), 2);
  for (std::size_t j = 0; j < lines; ++j) {
    double sum = 0.0;
    for (std::size_t k = 0; k < mesh.points[j].size(); ++k) {
      V.col(0) = mesh.d_s[j][k];
      V.col(1) = mesh.d_theta[j][k];
      sum += eval_form(omega, mesh.points[j][k], V);
    }
    per_line[j] = sum / static_cast<double>(mesh.n_theta);
  }
  return flow::simpson(per_line, mesh.s.back() - mesh.s.front());
}

double tangency_residual(const VectorField& X, const CylinderMesh& mesh) {
  double worst = 0.0;
  if (mesh.degenerate()) return worst;
  Mat A(X.dim(), 2);
  for (std::size_t j = 0; j < mesh.points.size(); ++j) {
    for (std::size_t k = 0; k < mesh.points[j].size(); ++k) {
      const Vec x = X(mesh.points[j][k]);
      A.col(0) = mesh.d_s[j][k];
      A.col(1) = mesh.d_theta[j][k];
      const Vec coef = A.colPivHouseholderQr().solve(x);
      worst = std::max(worst, (A * coef - x).norm() / x.norm());
    }
  }
  return worst;
}

double stokes_residual(const KForm& alpha, const CylinderMesh& mesh) {
  require(alpha.degree() == 1, "stokes_residual: alpha must be a 1-form");
  if (mesh.degenerate()) return 0.0;
  const double flux = chain_flux(exterior_derivative(alpha), mesh);
  const double boundary = leaf_integral(alpha, mesh.leaf_s1) - leaf_integral(alpha, mesh.leaf_s0);
  return std::abs(flux - boundary);
}

FluxReport flux_report(const KForm& alpha, const VectorField& X, const LeafFamily& family,
                       int n_s, int n_theta, const flow::IntegratorConfig& cfg, bool refine) {
  FluxReport r;
  r.s0 = family.s0;
  r.s1 = family.s1;
  r.n_s = n_s;
  r.n_theta = n_theta;
  const CylinderMesh mesh = build_cylinder(X, family, n_s, n_theta, cfg);
  const KForm dalpha = exterior_derivative(alpha);
  r.flux = chain_flux(dalpha, mesh);
  r.boundary_s1 = leaf_integral(alpha, mesh.leaf_s1);
  r.boundary_s0 = leaf_integral(alpha, mesh.leaf_s0);
  r.normalizer = mesh.normalizers.back();
  r.normalized_flux = r.flux / r.normalizer;
  r.stokes_residual = mesh.degenerate() ? 0.0 : std::abs(r.flux - (r.boundary_s1 - r.boundary_s0));
  if (refine) {
    const CylinderMesh fine = build_cylinder(X, family, 2 * n_s, 2 * n_theta, cfg);
    r.refined = true;
    r.refined_residual = stokes_residual(alpha, fine);
    r.refinement_ratio = r.refined_residual > 0.0 ? r.stokes_residual / r.refined_residual : 0.0;
  }
  return r;
}

namespace {

std::string describe(const ChartPoint& p) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
  os << ")";
  return os.str();
}

}  // namespace

Decomposition decompose_dalpha(const KForm& alpha, const ScalarField& B, const VectorField& X,
                               const std::vector<ChartPoint>& samples) {
  require(alpha.degree() == 1, "decompose_dalpha: alpha must be a 1-form");
  require(alpha.dim() == X.dim() && B.dim() == X.dim(), "decompose_dalpha: dimension mismatch");
  for (const ChartPoint& p : samples) {
    if (!(dirac_eval(p, X, alpha) > 0.0)) {
      throw ContractViolation("decompose_dalpha: alpha(X) <= 0 at " + describe(p));
    }
  }
  const ScalarField inv_alpha_x(X.dim(), [alpha, X](const ChartPoint& p) {
    return 1.0 / alpha.coeffs(p).dot(X(p));
  });
  const KForm lambda = scale(inv_alpha_x, alpha);
  const KForm dalpha = exterior_derivative(alpha);
  const KForm dB = differential(B);
  const KForm omega = add(dalpha, wedge(lambda, dB));

  Decomposition out{lambda, omega};
  const KForm iX_omega = interior_product(X, omega);
  const KForm euler = add(interior_product(X, dalpha), dB);
  for (const ChartPoint& p : samples) {
    out.max_iX_omega = std::max(out.max_iX_omega, iX_omega.coeffs(p).lpNorm<Eigen::Infinity>());
    out.max_euler_residual =
        std::max(out.max_euler_residual, euler.coeffs(p).lpNorm<Eigen::Infinity>());
  }
  return out;
}

AdaptedProbe strongly_adapted_probe(const KForm& alpha, const VectorField& X,
                                    const std::vector<ChartPoint>& samples, double tolerance,
                                    TangentBasis basis) {
  require(alpha.degree() == 1, "strongly_adapted_probe: alpha must be a 1-form");
  require(!samples.empty(), "strongly_adapted_probe: no sample points");
  if (!basis) basis = full_chart_basis(X.dim());
  const KForm closedness = exterior_derivative(interior_product(X, exterior_derivative(alpha)));

  AdaptedProbe r;
  r.tolerance = tolerance;
  r.min_alpha_X = std::numeric_limits<double>::infinity();
  r.worst_point = samples.front();
  for (const ChartPoint& p : samples) {
    r.min_alpha_X = std::min(r.min_alpha_X, dirac_eval(p, X, alpha));
    const double c = restricted_coeffs(closedness, p, basis(p)).lpNorm<Eigen::Infinity>();
    if (c > r.max_closedness) {
      r.max_closedness = c;
      r.worst_point = p;
    }
  }
  r.positive = r.min_alpha_X > 0.0;
  r.closed = r.max_closedness < tolerance;
  if (r.positive && r.closed) {
    r.verdict = "necessary conditions only: both hold (strong adaptedness not proven)";
  } else {
    r.verdict = std::string("necessary condition FAILED: ") +
                (r.positive ? "" : "alpha(X) > 0 violated; ") +
                (r.closed ? "" : "i_X d alpha is not closed, hence not exact");
  }
  return r;
}

}  // namespace eulerlab::chains
