#pragma once

// The Sullivan-Thurston flow on M = H / Lambda x S^1 x S^1.
//
// Chart coordinates on the universal cover are (x, y, z, t, u), indices 0..4.
// H is the Heisenberg group of unipotent upper-triangular 3x3 matrices with
// entries (x, y, z) and Lambda its integer lattice acting on the left:
//   (a, b, c) . (x, y, z) = (x + a, y + b, z + a y + c).
// Both circle factors have period 2 pi. The field X has closed orbits
// everywhere; their periods blow up near the bad set u = 0 mod pi.

#include <array>
#include <cstdint>
#include <numbers>
#include <vector>

#include "eulerlab/exterior_calc.hpp"
#include "eulerlab/rng.hpp"

namespace eulerlab::thurston {

inline constexpr int kDim = 5;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kTPeriod = kTwoPi;
inline constexpr double kUPeriod = kTwoPi;
inline constexpr double kDefaultBadSetBand = 1e-3;

enum Coord : int { kX = 0, kY = 1, kZ = 2, kT = 3, kU = 4 };

ChartPoint make_point(double x, double y, double z, double t, double u);

struct LatticeElement {
  std::int64_t a = 0;
  std::int64_t b = 0;
  std::int64_t c = 0;

  friend bool operator==(const LatticeElement&, const LatticeElement&) = default;
};

/// Heisenberg product: the element acting as "first `right`, then `left`".
LatticeElement compose(const LatticeElement& left, const LatticeElement& right);
LatticeElement inverse(const LatticeElement& g);

ChartPoint lattice_act(const LatticeElement& g, const ChartPoint& p);
/// phi_g as a Diffeo on the 5-chart, inverse included.
Diffeo lattice_diffeo(const LatticeElement& g);

struct Canonical {
  ChartPoint point;
  LatticeElement element;          // point = lattice_act(element, p) + torus shift
  std::array<std::int64_t, 2> wraps{};  // t and u shifted by 2 pi * wraps
};

/// Fundamental-domain representative: y in [0,1), then x in [0,1), then
/// z in [0,1) (the z correction depends on the reduced y), t and u mod 2 pi.
Canonical canonicalize(const ChartPoint& p);

/// The metric making {dx, dy, dz - x dy, dt, du} orthonormal, equivalently
/// the frame {d_x, d_y + x d_z, d_z, d_t, d_u}. Lattice invariant.
MetricEval frame_metric();
Mat frame_metric_at(const ChartPoint& p);

/// Distance in the quotient, approximated by the frame-metric length of the
/// difference vector (evaluated at the midpoint) minimised over the lattice
/// neighbours |a|,|b|,|c| <= 1 and torus wraps in {-1,0,1}, after
/// canonicalizing both points. Symmetric by construction.
double quotient_distance(const ChartPoint& p, const ChartPoint& q);

/// Same as quotient_distance but may stop early and return any value
/// >= cutoff once the true distance is known to exceed cutoff.
double quotient_distance_below(const ChartPoint& p, const ChartPoint& q, double cutoff);

VectorField frame_V1();
VectorField frame_V2();

/// X = sin(2u) V1 + 2 sin^2(u) d_t - cos^2(u) d_z.
VectorField field_X();

/// W = X / (2 sin^2 u). Throws DomainError when u is within band_eps of the
/// bad set u = 0 mod pi.
VectorField field_W(double band_eps = kDefaultBadSetBand);

/// Distance from u to the bad set {0 mod pi}.
double bad_set_distance(double u);

/// |X|^2 in the frame metric: sin^2(2u) + 4 sin^4 u + cos^4 u.
double speed_squared(double u);

/// Flow time for one closed orbit of X at u (not on the bad set): pi / sin^2 u.
double period_X(double u);

/// Frame-metric length of the closed X-orbit at height u; 1 on the bad set.
double orbit_length_formula(double u);

/// beta = 1/2 dt - dz + x dy, with analytic partials.
KForm form_beta();
/// mu = dx ^ dy ^ dz ^ dt ^ du.
KForm form_mu();

/// A point in the fundamental domain [0,1)^3 x [0, 2pi)^2.
ChartPoint random_quotient_point(SplitMix64& rng);
std::vector<ChartPoint> random_quotient_points(std::uint64_t seed, int count);

struct DescentReport {
  LatticeElement element;
  int samples = 0;
  double field_residual = 0.0;  // max |(phi_g)_* X (q) - X(q)|_inf
  double beta_residual = 0.0;   // max |phi_g^* beta - beta|_inf
  double mu_residual = 0.0;     // max |phi_g^* mu - mu|_inf
  double tolerance = 1e-12;
  bool passed = false;
};

/// Residuals of the descent identities for phi_g at seeded random points.
DescentReport verify_descent(const LatticeElement& g, int samples, std::uint64_t seed,
                             double tolerance = 1e-12);
/// Same, for an arbitrary field in place of X (negative controls).
DescentReport verify_descent(const LatticeElement& g, int samples, std::uint64_t seed,
                             const VectorField& field, double tolerance = 1e-12);

}  // namespace eulerlab::thurston
