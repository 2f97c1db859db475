#pragma once

// Numerical currents and tangent 2-chains for a flow with closed orbits.
//
// A leaf family s -> p_s = (x0, y0, z0, t0, s) sweeps a cylinder
//   Phi(s, th) = phi_{th * T(s)}(p_s),  th in [0, 1),
// whose tangent plane contains X everywhere. With the orientation ds ^ dth,
// its boundary is L_{s1} - L_{s0} and Stokes reads
//   int_cyl d alpha = int_{L_{s1}} alpha - int_{L_{s0}} alpha.

#include <string>
#include <vector>

#include "eulerlab/exterior_calc.hpp"
#include "eulerlab/flow.hpp"

namespace eulerlab::chains {

/// The Dirac 1-current delta_p(alpha) = alpha_p(X_p).
double dirac_eval(const ChartPoint& p, const VectorField& X, const KForm& alpha);

/// int_0^T alpha(X(gamma(theta))) d theta on the orbit's stored samples (Simpson).
double leaf_integral(const KForm& alpha, const flow::OrbitRecord& orbit);

struct LeafFamily {
  double s0 = 0.5;
  double s1 = 0.3;
  double x0 = 0.0;
  double y0 = 0.0;
  double z0 = 0.0;
  double t0 = 0.0;

  ChartPoint base_point(double s) const;
};

/// ceil(T / 2 pi): the mass normalisation of a leaf of flow-time length T.
int leaf_normalizer(double period);

struct CylinderMesh {
  int n_s = 0;      // intervals in s; n_s + 1 grid lines
  int n_theta = 0;  // points per leaf (periodic)
  std::vector<double> s;
  std::vector<double> periods;
  std::vector<int> normalizers;
  std::vector<std::vector<ChartPoint>> points;  // [line][k]
  std::vector<std::vector<Vec>> d_s;            // d Phi / ds
  std::vector<std::vector<Vec>> d_theta;        // d Phi / d th = T(s) X
  flow::OrbitRecord leaf_s0;
  flow::OrbitRecord leaf_s1;

  bool degenerate() const { return s.empty() || s.front() == s.back(); }
};

/// n_s must be even (Simpson in s), n_theta >= 3. Leaves are integrated
/// independently (in parallel when threads are available).
CylinderMesh build_cylinder(const VectorField& X, const LeafFamily& family, int n_s,
                            int n_theta, const flow::IntegratorConfig& cfg);

/// int_cyl omega: periodic trapezoid in th, composite Simpson in s.
double chain_flux(const KForm& omega, const CylinderMesh& mesh);

/// Max over mesh points of the distance of X from span(d_s, d_theta),
/// measured as the least-squares residual relative to |X|.
double tangency_residual(const VectorField& X, const CylinderMesh& mesh);

/// |chain_flux(d alpha) - (int_{L_{s1}} alpha - int_{L_{s0}} alpha)|.
double stokes_residual(const KForm& alpha, const CylinderMesh& mesh);

struct FluxReport {
  double s0 = 0.0;
  double s1 = 0.0;
  int n_s = 0;
  int n_theta = 0;
  double flux = 0.0;        // int_cyl d alpha
  double boundary_s1 = 0.0; // int_{L_{s1}} alpha
  double boundary_s0 = 0.0; // int_{L_{s0}} alpha
  int normalizer = 1;       // ceil(T(s1) / 2 pi)
  double normalized_flux = 0.0;
  double stokes_residual = 0.0;
  bool refined = false;
  double refined_residual = 0.0;  // same with both grid steps halved
  double refinement_ratio = 0.0;  // stokes_residual / refined_residual
};

FluxReport flux_report(const KForm& alpha, const VectorField& X, const LeafFamily& family,
                       int n_s, int n_theta, const flow::IntegratorConfig& cfg,
                       bool refine = false);

struct Decomposition {
  KForm lambda;  // alpha / alpha(X)
  KForm omega;   // d alpha + lambda ^ dB
  double max_iX_omega = 0.0;        // max |i_X omega| coefficient
  double max_euler_residual = 0.0;  // max |i_X d alpha + dB| coefficient
};

/// d alpha = -lambda ^ dB + omega. Throws ContractViolation naming the point
/// if alpha(X) <= 0 at a sample.
Decomposition decompose_dalpha(const KForm& alpha, const ScalarField& B, const VectorField& X,
                               const std::vector<ChartPoint>& samples);

struct AdaptedProbe {
  double min_alpha_X = 0.0;
  double max_closedness = 0.0;  // max |d(i_X d alpha)| coefficient
  ChartPoint worst_point;
  double tolerance = 1e-8;
  bool positive = false;  // condition (i): alpha(X) > 0
  bool closed = false;    // condition (ii): d(i_X d alpha) = 0
  std::string verdict;
};

/// Necessary conditions for alpha to be strongly adapted to X: alpha(X) > 0
/// and i_X d alpha closed. Failure refutes this alpha; success proves nothing.
/// Coefficients are taken on `basis` (the whole chart by default).
AdaptedProbe strongly_adapted_probe(const KForm& alpha, const VectorField& X,
                                    const std::vector<ChartPoint>& samples,
                                    double tolerance = 1e-8, TangentBasis basis = {});

}  // namespace eulerlab::chains
