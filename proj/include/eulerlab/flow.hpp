#pragma once

// Integration of vector fields in the universal cover, closed-orbit detection
// in the quotient, and period / length measurement.

#include <functional>
#include <vector>

#include "eulerlab/exterior_calc.hpp"

namespace eulerlab::flow {

enum class Method { kRK4, kRK45 };

struct IntegratorConfig {
  Method method = Method::kRK45;
  double abs_tol = 1e-10;  // RK45
  double rel_tol = 1e-10;  // RK45
  double step = 1e-3;      // RK4 fixed step
  double max_time = 1e5;
  double close_tol = 1e-6;   // closure threshold in the detector's distance
  double scan_step = 0.05;   // upper bound for the coarse return scan
  double time_tol = 1e-10;   // bracket width for return refinement
  int samples = 2001;        // stored trajectory samples per orbit (odd)

  /// Throws ContractViolation on non-positive tolerances / sizes.
  void validate() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<ChartPoint> points;
};

/// Flow of X from p0 for time T (T may be negative), sampled at n_out
/// uniformly spaced times including both ends. No canonicalization.
Trajectory integrate(const VectorField& X, const ChartPoint& p0, double T,
                     const IntegratorConfig& cfg, int n_out = 2);

/// End point of the flow of X from p0 after time T.
ChartPoint flow_to(const VectorField& X, const ChartPoint& p0, double T,
                   const IntegratorConfig& cfg);

/// How returns are recognised: a distance on the quotient (with an early-out
/// cutoff), a speed used to bound how fast that distance can change, and the
/// coordinate whose drift is reported (-1 for none).
struct ReturnDetector {
  std::function<double(const ChartPoint&, const ChartPoint&, double cutoff)> distance;
  std::function<double(const ChartPoint&, const Vec&)> speed;
  int conserved_coordinate = -1;
};

/// Quotient distance and frame-metric speed on the Thurston chart; tracks u.
ReturnDetector thurston_detector();

struct OrbitRecord {
  ChartPoint initial;
  double period = 0.0;            // flow time
  double length = 0.0;            // arc length in the detector's metric
  double closure_residual = 0.0;  // distance(phi_T(p0), p0)
  double conserved_drift = 0.0;   // max |u - u0| along the stored samples
  std::vector<double> times;          // uniform in [0, period], odd count
  std::vector<ChartPoint> points;     // trajectory in the universal cover
  std::vector<Vec> velocities;        // X at each point
};

/// Smallest T > 0 with distance(phi_T(p0), p0) < close_tol / 10, found by a
/// coarse scan at min(scan_step, period_guess / 100) followed by golden-section
/// refinement of each local minimum. Throws PeriodNotFound past max_time.
OrbitRecord find_period(const VectorField& X, const ChartPoint& p0,
                        const IntegratorConfig& cfg, const ReturnDetector& detector,
                        double period_guess = 0.0);
OrbitRecord find_period(const VectorField& X, const ChartPoint& p0,
                        const IntegratorConfig& cfg, double period_guess = 0.0);

/// Composite Simpson quadrature of |X|_g over the stored samples.
double orbit_length(const OrbitRecord& record, const MetricEval& metric);

/// Composite Simpson rule on uniformly spaced samples (odd count).
double simpson(const std::vector<double>& values, double span);

struct ScanRow {
  double u = 0.0;
  double period = 0.0;
  double length = 0.0;
  double closure_residual = 0.0;
  double u_drift = 0.0;
};

struct ScanResult {
  std::vector<ScanRow> rows;
  /// Lengths strictly increase as u decreases over the rows with u in (0, pi/2].
  bool monotone_blowup = true;
};

/// One closed X-orbit per u through (x0, y0, z0, t0, u). Values inside the
/// excluded band around u = 0 mod pi are rejected with DomainError unless
/// allow_bad_set is set.
ScanResult orbit_scan(const std::vector<double>& u_values, double x0, double y0, double z0,
                      double t0, const IntegratorConfig& cfg, bool allow_bad_set = false,
                      double band_eps = 1e-3);

/// Runs body(i) for i in [0, n) on up to hardware_concurrency threads. The
/// first exception thrown by any job is rethrown.
/// D phi_T at p, from the variational equation dM/dt = DX(phi_t p) M.
Mat flow_jacobian(const VectorField& X, const ChartPoint& p, double T,
                  const IntegratorConfig& cfg);

/// Coefficients of L_X w at p computed without Cartan's formula: the
/// derivative at s = 0 of (phi_s^* w)(p), five-point stencil with step eps.
Vec transport_lie_derivative(const VectorField& X, const KForm& w, const ChartPoint& p,
                             double eps, const IntegratorConfig& cfg);

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace eulerlab::flow
