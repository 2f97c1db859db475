// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "eulerlab/chains.hpp"
#include "eulerlab/exterior_calc.hpp"
#include "eulerlab/flow.hpp"
#include "eulerlab/thurston.hpp"
#include "eulerlab/wadsley.hpp"

using namespace eulerlab;
namespace th = eulerlab::thurston;
namespace wd = eulerlab::wadsley;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double max_abs(const Vec& v) { return v.lpNorm<Eigen::Infinity>(); }

struct Verdict {
  bool pass;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, const std::function<Verdict()>& body) {
  const auto t0 = Clock::now();
  Verdict v{false, ""};
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  if (!v.pass) ++failures;
  std::printf("%s  %2d  %-34s %s  (%.2f s)\n", v.pass ? "PASS" : "FAIL", id, name.c_str(),
              v.detail.c_str(), seconds_since(t0));
  std::fflush(stdout);
}

// 1 --------------------------------------------------------------------------
Verdict identity_suite() {
  const auto t0 = Clock::now();
  const VectorField X = th::field_X();
  const KForm beta = th::form_beta();
  double bx = 0.0;
  for (const ChartPoint& p : th::random_quotient_points(101, 10000)) {
    bx = std::max(bx, std::abs(beta.coeffs(p).dot(X(p)) - 1.0));
  }
  const KForm db = exterior_derivative(beta);
  const KForm sq = wedge(db, db);
  const KForm dmu = exterior_derivative(interior_product(X, th::form_mu()));
  double s = 0.0;
  double m = 0.0;
  for (const ChartPoint& p : th::random_quotient_points(102, 1000)) {
    s = std::max(s, max_abs(sq.coeffs(p)));
    m = std::max(m, max_abs(dmu.coeffs(p)));
  }
  const double elapsed = seconds_since(t0);
  return {bx < 1e-12 && s < 1e-9 && m < 1e-9 && elapsed < 5.0,
          fmt::format("|beta(X)-1|={:.3g} (dbeta)^2={:.3g} d(iX mu)={:.3g} time={:.2f}s", bx, s,
                      m, elapsed)};
}

// 2 --------------------------------------------------------------------------
Verdict descent_suite() {
  double worst = 0.0;
  int elements = 0;
  for (int a = -2; a <= 2; ++a) {
    for (int b = -2; b <= 2; ++b) {
      for (int c = -2; c <= 2; ++c) {
        const th::DescentReport r = th::verify_descent({a, b, c}, 100, 202);
        worst = std::max({worst, r.field_residual, r.beta_residual, r.mu_residual});
        ++elements;
      }
    }
  }
  return {elements == 125 && worst < 1e-12,
          fmt::format("elements={} max residual={:.3g}", elements, worst)};
}

// 3 --------------------------------------------------------------------------
Verdict period_W() {
  flow::IntegratorConfig cfg;
  cfg.abs_tol = 1e-10;
  cfg.rel_tol = 1e-10;
  const VectorField W = th::field_W();
  double worst = 0.0;
  for (double u : {std::numbers::pi / 6, std::numbers::pi / 4, std::numbers::pi / 3,
                   std::numbers::pi / 2}) {
    const flow::OrbitRecord r = flow::find_period(W, th::make_point(0.1, 0.2, 0.3, 0.4, u), cfg);
    worst = std::max(worst, std::abs(r.period - 2.0 * std::numbers::pi));
  }
  return {worst < 1e-6, fmt::format("max |T - 2pi|={:.3g}", worst)};
}

// 4 --------------------------------------------------------------------------
Verdict period_X() {
  flow::IntegratorConfig cfg;
  const VectorField X = th::field_X();
  double worst = 0.0;
  for (double u : {0.3, 0.6, 1.0, std::numbers::pi / 2}) {
    const flow::OrbitRecord r = flow::find_period(X, th::make_point(0, 0, 0, 0, u), cfg);
    // oracle: T_X = T_W / (2 sin^2 u) with T_W = 2 pi
    const double s = std::sin(u);
    const double expected = 2.0 * std::numbers::pi / (2.0 * s * s);
    worst = std::max(worst, std::abs(r.period - expected) / expected);
  }
  const flow::OrbitRecord r0 = flow::find_period(X, th::make_point(0.4, 0.3, 0.2, 1.0, 0.0), cfg);
  const double zero_err = std::abs(r0.period - 1.0);
  return {worst < 1e-5 && zero_err < 1e-8,
          fmt::format("max rel err={:.3g} |T(0)-1|={:.3g}", worst, zero_err)};
}

// 5 --------------------------------------------------------------------------
Verdict length_blowup() {
  flow::IntegratorConfig cfg;
  const flow::ScanResult s = flow::orbit_scan({0.5, 0.25, 0.1, 0.05}, 0, 0, 0, 0, cfg);
  bool increasing = true;
  for (std::size_t i = 1; i < s.rows.size(); ++i) {
    increasing = increasing && s.rows[i].length > s.rows[i - 1].length;
  }
  const double ratio = s.rows.back().length / s.rows.front().length;
  const auto formula = [](double u) {
    const double su = std::sin(u);
    const double cu = std::cos(u);
    const double s2 = std::sin(2 * u);
    return std::sqrt(s2 * s2 + 4 * std::pow(su, 4) + std::pow(cu, 4)) * std::numbers::pi /
           (su * su);
  };
  const double oracle_ratio = formula(0.05) / formula(0.5);
  return {increasing && ratio > 50.0,
          fmt::format("increasing={} ratio={:.6g} (formula {:.6g})", increasing, ratio,
                      oracle_ratio)};
}

// 6 --------------------------------------------------------------------------
Verdict stokes() {
  flow::IntegratorConfig cfg;
  chains::LeafFamily family;
  family.s0 = 0.3;
  family.s1 = 0.5;
  const chains::FluxReport r =
      chains::flux_report(th::form_beta(), th::field_X(), family, 200, 400, cfg, true);
  const double expected = th::period_X(0.5) - th::period_X(0.3);
  const double rel = std::abs(r.flux - expected) / std::abs(expected);
  return {rel < 1e-3 && r.refinement_ratio >= 3.0,
          fmt::format("rel residual={:.3g} refinement ratio={:.3g}", rel, r.refinement_ratio)};
}

// 7 --------------------------------------------------------------------------
Verdict normalized_flux() {
  flow::IntegratorConfig cfg;
  chains::LeafFamily family;
  family.s0 = 0.5;
  family.s1 = 0.05;
  const chains::FluxReport r =
      chains::flux_report(th::form_beta(), th::field_X(), family, 200, 400, cfg);
  const double n = std::ceil(th::period_X(0.05) / (2.0 * std::numbers::pi));
  const double value = r.flux / n;
  const double rel = std::abs(value - 2.0 * std::numbers::pi) / (2.0 * std::numbers::pi);
  return {rel < 0.05 && r.normalizer == static_cast<int>(n),
          fmt::format("n={} (1/n) flux={:.6g} rel dev from 2pi={:.3g}", r.normalizer, value, rel)};
}

// 8 --------------------------------------------------------------------------
Verdict adapted_probe() {
  const chains::AdaptedProbe b = chains::strongly_adapted_probe(
      th::form_beta(), th::field_X(), {th::make_point(0.0, 0.0, 0.0, 0.0, 0.0)});
  const chains::AdaptedProbe h = chains::strongly_adapted_probe(
      wd::hopf_contact_form(), wd::hopf_field(), wd::random_sphere_points(808, 1000), 1e-8,
      wd::sphere_basis());
  return {!b.closed && b.max_closedness >= 1.9 && h.closed && h.max_closedness < 1e-8,
          fmt::format("beta closedness={:.6g} hopf closedness={:.3g}", b.max_closedness,
                      h.max_closedness)};
}

// 9 --------------------------------------------------------------------------
Verdict wadsley_pipeline() {
  const auto pts = wd::random_sphere_points(909, 200);
  const VectorField X = wd::hopf_field();
  const MetricEval g1 = wd::perturbed_round_metric(0.1);
  const MetricEval g2 = wd::average_metric(g1, wd::hopf_action(), 64);
  const double k1 = wd::killing_residual(X, g1, pts);
  const double k2 = wd::killing_residual(X, g2, pts);
  const MetricEval g3 = wd::normalize_metric(g2, X);
  const KForm alpha = wd::dual_one_form(g3, X);
  const wd::GeodesibilityReport geo =
      wd::geodesibility_check(alpha, X, pts, 1e-6, wd::sphere_basis());
  const double unit = std::max(std::abs(geo.min_alpha_X - 1.0), std::abs(geo.max_alpha_X - 1.0));
  return {k2 < 1e-6 && k1 > 1e-2 && unit < 1e-14 && geo.max_iX_dalpha < 1e-6,
          fmt::format("Killing g2={:.3g} g1={:.3g} |alpha(X)-1|={:.3g} |iX dalpha|={:.3g}", k2,
                      k1, unit, geo.max_iX_dalpha)};
}

// 10 -------------------------------------------------------------------------
Verdict curl_checks() {
  const VectorField X = th::field_X();
  const KForm mu = th::form_mu();
  const MetricEval g = wd::build_euler_metric(th::form_beta(), X, mu, th::frame_metric());
  const VectorField w = wd::curl(X, g, mu);
  double wt = 0.0;
  for (const ChartPoint& p : th::random_quotient_points(1010, 1000)) wt = std::max(wt, max_abs(w(p)));

  const VectorField H = wd::hopf_field();
  const VectorField wh = wd::curl(H, wd::round_metric(), wd::sphere_volume(), wd::sphere_basis());
  double rel = 0.0;
  for (const ChartPoint& p : wd::random_sphere_points(1011, 1000)) {
    rel = std::max(rel, (wh(p) - 2.0 * H(p)).norm() / (2.0 * H(p)).norm());
  }
  return {wt < 1e-8 && rel < 1e-6,
          fmt::format("Thurston |curl|={:.3g} Hopf |curl-2X|/|2X|={:.3g}", wt, rel)};
}

// 11 -------------------------------------------------------------------------
Verdict property_suites() {
  const auto t0 = Clock::now();
  SplitMix64 rng(1111);
  std::vector<ChartPoint> pts;
  for (int i = 0; i < 40; ++i) {
    ChartPoint p(5);
    for (int j = 0; j < 5; ++j) p[j] = rng.uniform(-2.0, 2.0);
    pts.push_back(p);
  }
  const auto worst = [&](const KForm& a) {
    double w = 0.0;
    for (const auto& p : pts) w = std::max(w, max_abs(a.coeffs(p)));
    return w;
  };
  const auto worst_diff = [&](const KForm& a, const KForm& b) {
    double w = 0.0;
    for (const auto& p : pts) w = std::max(w, max_abs(a.coeffs(p) - b.coeffs(p)));
    return w;
  };

  double dd = 0.0, leib = 0.0, nat = 0.0, ii = 0.0, cartan = 0.0;
  for (int k = 0; k <= 3; ++k) {
    dd = std::max(dd, worst(exterior_derivative(exterior_derivative(random_trig_form(5, k, rng)))));
  }
  for (int ka = 0; ka <= 2; ++ka) {
    for (int kb = 0; ka + kb <= 3; ++kb) {
      const KForm a = random_trig_form(5, ka, rng);
      const KForm b = random_trig_form(5, kb, rng);
      leib = std::max(leib, worst_diff(exterior_derivative(wedge(a, b)),
                                       add(wedge(exterior_derivative(a), b),
                                           scale(ka % 2 ? -1.0 : 1.0,
                                                 wedge(a, exterior_derivative(b))))));
    }
  }
  const Diffeo phi = th::lattice_diffeo({1, 2, -1});
  const Diffeo bend(
      5,
      [](const ChartPoint& p) -> ChartPoint {
        ChartPoint q = p;
        q[2] += 0.3 * std::sin(p[0] * p[1]);
        return q;
      },
      [](const ChartPoint& p) -> Mat {
        Mat J = Mat::Identity(5, 5);
        J(2, 0) = 0.3 * p[1] * std::cos(p[0] * p[1]);
        J(2, 1) = 0.3 * p[0] * std::cos(p[0] * p[1]);
        return J;
      });
  for (const Diffeo* f : {&phi, &bend}) {
    for (int k = 0; k <= 3; ++k) {
      const KForm w = random_trig_form(5, k, rng);
      nat = std::max(nat, worst_diff(pullback(*f, exterior_derivative(w)),
                                     exterior_derivative(pullback(*f, w))));
    }
  }
  const VectorField Y = random_trig_field(5, rng);
  for (int k = 2; k <= 5; ++k) {
    ii = std::max(ii, worst(interior_product(Y, interior_product(Y, random_trig_form(5, k, rng)))));
  }
  flow::IntegratorConfig cfg;
  cfg.abs_tol = 1e-12;
  cfg.rel_tol = 1e-12;
  for (const VectorField* f : {&Y}) {
    for (int k = 0; k <= 3; ++k) {
      const KForm w = random_trig_form(5, k, rng);
      const KForm L = lie_derivative_form(*f, w);
      for (int i = 0; i < 3; ++i) {
        cartan = std::max(cartan, max_abs(L.coeffs(pts[i]) -
                                          flow::transport_lie_derivative(*f, w, pts[i], 1e-2, cfg)));
      }
    }
  }
  const double elapsed = seconds_since(t0);
  return {dd < 1e-8 && leib < 1e-8 && nat < 1e-7 && ii == 0.0 && cartan < 1e-5 && elapsed < 60.0,
          fmt::format("dd={:.3g} leibniz={:.3g} naturality={:.3g} iXiX={:.3g} cartan={:.3g}",
                      dd, leib, nat, ii, cartan)};
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  criterion(1, "identity suite", identity_suite);
  criterion(2, "descent suite", descent_suite);
  criterion(3, "period of W", period_W);
  criterion(4, "period of X", period_X);
  criterion(5, "length blow-up", length_blowup);
  criterion(6, "Stokes on the cylinder", stokes);
  criterion(7, "normalized flux near 2 pi", normalized_flux);
  criterion(8, "strongly adapted probe", adapted_probe);
  criterion(9, "Wadsley pipeline on S^3", wadsley_pipeline);
  criterion(10, "curl", curl_checks);
  criterion(11, "property suites", property_suites);
  std::printf("%d of 11 criteria failed; total %.2f s\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
