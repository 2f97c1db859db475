#include "eulerlab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "eulerlab/chains.hpp"
#include "eulerlab/errors.hpp"
#include "eulerlab/flow.hpp"
#include "eulerlab/thurston.hpp"
#include "eulerlab/wadsley.hpp"

namespace eulerlab::cli {

namespace th = eulerlab::thurston;
namespace wd = eulerlab::wadsley;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Anchor strings attached to every check.
constexpr const char* kAnchorBetaX = "β(X)= sin²u + cos²u=1";
constexpr const char* kAnchorDBetaSq = "(dβ)^2=0";
constexpr const char* kAnchorPreserved = "is preserved by X";
constexpr const char* kAnchorBoundary = "∂c(ω)=c(dω)";
constexpr const char* kAnchorInterior = "ι_X d α = −dB";
constexpr const char* kAnchorDescent = "descend to the quotient";
constexpr const char* kAnchorPeriods = "arbitrarily large periods";
constexpr const char* kAnchorAlongZero = "extends as −∂/∂z along u=0";
constexpr const char* kAnchorFlux = "A_i(dα) = (1/n_i)∫_{T_i}dα";
constexpr const char* kAnchorAdapted = "α(X)>0 and ι_Xdα is exact";
constexpr const char* kAnchorAverage = "g₂=∫ρ*g₁";
constexpr const char* kAnchorUnit = "α(X̃)=1";
constexpr const char* kAnchorEulerMetric = "g(X,·)=α";
constexpr const char* kAnchorCurl = "ι_ω μ=(dα)^n";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double tol_or(const RunConfig& cfg, double fallback) { return cfg.tol.value_or(fallback); }

CheckResult at_most(std::string id, std::string description, double measured, double tolerance,
                    std::string anchor) {
  return {std::move(id), std::move(description), measured, tolerance,
          std::isfinite(measured) && measured <= tolerance, std::move(anchor), true};
}

double max_abs(const Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

// y + 0.3 sin x etc.: a triangular, hence invertible, nonlinear map of the 5-chart.
Diffeo shear_diffeo() {
  return Diffeo(
      th::kDim,
      [](const ChartPoint& p) -> ChartPoint {
        ChartPoint q = p;
        q[1] += 0.3 * std::sin(p[0]);
        q[2] += 0.2 * p[0] * p[1];
        q[3] += 0.1 * std::cos(p[1]);
        q[4] += 0.1 * p[0] * p[0];
        return q;
      },
      [](const ChartPoint& p) -> Mat {
        Mat J = Mat::Identity(th::kDim, th::kDim);
        J(1, 0) = 0.3 * std::cos(p[0]);
        J(2, 0) = 0.2 * p[1];
        J(2, 1) = 0.2 * p[0];
        J(3, 1) = -0.1 * std::sin(p[1]);
        J(4, 0) = 0.2 * p[0];
        return J;
      });
}

}  // namespace

// ---------------------------------------------------------------------------

Outcome forms_verify(const RunConfig& cfg) {
  const int n = cfg.samples.value_or(1000);
  if (n < 1) throw UsageError("--samples must be positive");
  Outcome o;
  const VectorField X = th::field_X();
  const KForm beta = th::form_beta();
  const KForm mu = th::form_mu();

  {
    double worst = 0.0;
    for (const ChartPoint& p : th::random_quotient_points(cfg.seed, 10 * n)) {
      worst = std::max(worst, std::abs(beta.coeffs(p).dot(X(p)) - 1.0));
    }
    o.checks.push_back(at_most("forms.beta_X", "max |beta(X) - 1| at random quotient points",
                               worst, tol_or(cfg, 1e-12), kAnchorBetaX));
  }
  const std::vector<ChartPoint> pts = th::random_quotient_points(cfg.seed + 1, n);
  {
    const KForm dbeta = exterior_derivative(beta);
    const KForm sq = wedge(dbeta, dbeta);
    const KForm d_iX_mu = exterior_derivative(interior_product(X, mu));
    double w_sq = 0.0;
    double w_mu = 0.0;
    for (const ChartPoint& p : pts) {
      w_sq = std::max(w_sq, max_abs(sq.coeffs(p)));
      w_mu = std::max(w_mu, max_abs(d_iX_mu.coeffs(p)));
    }
    o.checks.push_back(at_most("forms.dbeta_squared", "max coefficient of d beta ^ d beta", w_sq,
                               tol_or(cfg, 1e-9), kAnchorDBetaSq));
    o.checks.push_back(at_most("forms.d_iX_mu", "max coefficient of d(i_X mu)", w_mu,
                               tol_or(cfg, 1e-9), kAnchorPreserved));
  }

  SplitMix64 rng(cfg.seed + 2);
  const int per_form = std::max(1, n / 10);
  {
    double worst = 0.0;
    for (int k = 0; k <= 3; ++k) {
      for (int rep = 0; rep < 2; ++rep) {
        const KForm w = random_trig_form(th::kDim, k, rng);
        const KForm dd = exterior_derivative(exterior_derivative(w));
        for (int i = 0; i < per_form; ++i) worst = std::max(worst, max_abs(dd.coeffs(pts[i])));
      }
    }
    o.checks.push_back(at_most("forms.d_d", "max coefficient of d(d w), random test forms", worst,
                               tol_or(cfg, 1e-8), kAnchorBoundary));
  }
  {
    double worst = 0.0;
    for (int ka = 0; ka <= 2; ++ka) {
      for (int kb = 0; kb + ka <= 3; ++kb) {
        const KForm a = random_trig_form(th::kDim, ka, rng);
        const KForm b = random_trig_form(th::kDim, kb, rng);
        const KForm lhs = exterior_derivative(wedge(a, b));
        const KForm rhs = add(wedge(exterior_derivative(a), b),
                              scale(ka % 2 == 0 ? 1.0 : -1.0, wedge(a, exterior_derivative(b))));
        for (int i = 0; i < per_form; ++i) {
          worst = std::max(worst, max_abs(lhs.coeffs(pts[i]) - rhs.coeffs(pts[i])));
        }
      }
    }
    o.checks.push_back(at_most("forms.leibniz", "max |d(a^b) - da^b -/+ a^db|", worst,
                               tol_or(cfg, 1e-8), kAnchorBoundary));
  }
  {
    double worst = 0.0;
    const Diffeo shear = shear_diffeo();
    const Diffeo lattice = th::lattice_diffeo({1, -2, 1});
    for (const Diffeo* phi : {&shear, &lattice}) {
      for (int k = 0; k <= 3; ++k) {
        const KForm w = random_trig_form(th::kDim, k, rng);
        const KForm lhs = pullback(*phi, exterior_derivative(w));
        const KForm rhs = exterior_derivative(pullback(*phi, w));
        for (int i = 0; i < per_form; ++i) {
          worst = std::max(worst, max_abs(lhs.coeffs(pts[i]) - rhs.coeffs(pts[i])));
        }
      }
    }
    o.checks.push_back(at_most("forms.naturality", "max |phi^* dw - d phi^* w|", worst,
                               tol_or(cfg, 1e-7), kAnchorBoundary));
  }
  {
    double worst = 0.0;
    for (int k = 2; k <= 5; ++k) {
      const KForm w = random_trig_form(th::kDim, k, rng);
      const KForm ii = interior_product(X, interior_product(X, w));
      for (int i = 0; i < per_form; ++i) worst = std::max(worst, max_abs(ii.coeffs(pts[i])));
    }
    o.checks.push_back(at_most("forms.iota_iota", "max coefficient of i_X i_X w", worst,
                               tol_or(cfg, 0.0), kAnchorInterior));
  }
  {
    flow::IntegratorConfig icfg;
    icfg.abs_tol = 1e-12;
    icfg.rel_tol = 1e-12;
    const VectorField Y = random_trig_field(th::kDim, rng);
    const std::vector<std::pair<const VectorField*, KForm>> cases{
        {&X, beta}, {&X, mu}, {&X, random_trig_form(th::kDim, 2, rng)},
        {&Y, random_trig_form(th::kDim, 1, rng)}, {&Y, random_trig_form(th::kDim, 3, rng)}};
    const int points = std::clamp(n / 200, 2, 10);
    double worst = 0.0;
    for (const auto& [field, w] : cases) {
      const KForm cartan = lie_derivative_form(*field, w);
      for (int i = 0; i < points; ++i) {
        const Vec oracle = flow::transport_lie_derivative(*field, w, pts[i], 1e-2, icfg);
        worst = std::max(worst, max_abs(cartan.coeffs(pts[i]) - oracle));
      }
    }
    o.checks.push_back(at_most("forms.cartan", "max |L_X w (Cartan) - L_X w (flow transport)|",
                               worst, tol_or(cfg, 1e-5), kAnchorPreserved));
  }
  return o;
}

// ---------------------------------------------------------------------------

Outcome descent_verify(const RunConfig& cfg) {
  if (cfg.gamma_min > cfg.gamma_max) {
    throw UsageError(fmt::format("empty lattice range [{}, {}]", cfg.gamma_min, cfg.gamma_max));
  }
  const int n = cfg.samples.value_or(100);
  if (n < 1) throw UsageError("--samples must be positive");
  const double tol = tol_or(cfg, 1e-12);

  // Adds x d/dy, which is not lattice invariant.
  const VectorField X = th::field_X();
  const VectorField broken(th::kDim, [X](const ChartPoint& p) -> Vec {
    Vec v = X(p);
    v[th::kY] += 0.05 * p[th::kX];
    return v;
  });

  Outcome o;
  o.data.columns = {"a", "b", "c", "field_residual", "beta_residual", "mu_residual", "pass"};
  double field = 0.0;
  double beta = 0.0;
  double mu = 0.0;
  for (int a = cfg.gamma_min; a <= cfg.gamma_max; ++a) {
    for (int b = cfg.gamma_min; b <= cfg.gamma_max; ++b) {
      for (int c = cfg.gamma_min; c <= cfg.gamma_max; ++c) {
        const th::LatticeElement g{a, b, c};
        const th::DescentReport r = cfg.broken_field ? th::verify_descent(g, n, cfg.seed, broken, tol)
                                                     : th::verify_descent(g, n, cfg.seed, tol);
        field = std::max(field, r.field_residual);
        beta = std::max(beta, r.beta_residual);
        mu = std::max(mu, r.mu_residual);
        o.data.rows.push_back({std::int64_t{a}, std::int64_t{b}, std::int64_t{c}, r.field_residual,
                               r.beta_residual, r.mu_residual, r.passed});
      }
    }
  }
  o.checks.push_back(at_most("descent.field", "max |(phi_g)_* X - X| over lattice elements", field,
                             tol, kAnchorDescent));
  o.checks.push_back(at_most("descent.beta", "max |phi_g^* beta - beta| over lattice elements",
                             beta, tol, kAnchorDescent));
  o.checks.push_back(at_most("descent.mu", "max |phi_g^* mu - mu| over lattice elements", mu, tol,
                             kAnchorDescent));
  if (cfg.broken_field) o.notes.push_back("negative control: field perturbed by 0.05 x d/dy");
  return o;
}

// ---------------------------------------------------------------------------

Outcome orbit_scan(const RunConfig& cfg) {
  if (cfg.u_values.empty()) throw UsageError("--u-values is empty");
  flow::IntegratorConfig icfg;
  const flow::ScanResult scan =
      flow::orbit_scan(cfg.u_values, 0.0, 0.0, 0.0, 0.0, icfg, cfg.allow_bad_set);
  const double tol = tol_or(cfg, 1e-5);

  Outcome o;
  o.data.columns = {"u",           "period",           "period_formula", "length",
                    "length_formula", "closure_residual", "u_drift"};
  for (std::size_t i = 0; i < scan.rows.size(); ++i) {
    const flow::ScanRow& r = scan.rows[i];
    const bool on_bad_set = std::sin(r.u) == 0.0;
    const double period_formula = on_bad_set ? 1.0 : th::period_X(r.u);
    const double length_formula = th::orbit_length_formula(r.u);
    o.data.rows.push_back({r.u, r.period, period_formula, r.length, length_formula,
                           r.closure_residual, r.u_drift});
    o.checks.push_back(at_most(fmt::format("orbit.period.{}", i),
                               fmt::format("relative period error at u = {:.17g}", r.u),
                               std::abs(r.period - period_formula) / period_formula, tol,
                               on_bad_set ? kAnchorAlongZero : kAnchorPeriods));
    o.checks.push_back(at_most(fmt::format("orbit.length.{}", i),
                               fmt::format("relative length error at u = {:.17g}", r.u),
                               std::abs(r.length - length_formula) / length_formula, tol,
                               kAnchorPeriods));
  }
  CheckResult mono{"orbit.monotone_blowup",
                   "lengths strictly increase as u decreases towards the bad set (exact predicate)",
                   scan.monotone_blowup ? 0.0 : 1.0, 0.0, scan.monotone_blowup, kAnchorPeriods};
  o.checks.push_back(mono);
  return o;
}

// ---------------------------------------------------------------------------

Outcome flux_scan(const RunConfig& cfg) {
  if (cfg.s_intervals.empty()) throw UsageError("--s-interval is empty");
  if (cfg.grid_s < 2 || cfg.grid_s % 2 != 0 || cfg.grid_theta < 3) {
    throw UsageError("--grid needs an even Ns >= 2 and Ntheta >= 3");
  }
  for (const auto& [s0, s1] : cfg.s_intervals) {
    for (double s : {s0, s1}) {
      if (!(s > th::kDefaultBadSetBand && s <= std::numbers::pi / 2)) {
        throw UsageError(fmt::format("s = {} must lie in (1e-3, pi/2]", s));
      }
    }
  }
  const KForm beta = th::form_beta();
  const VectorField X = th::field_X();
  const flow::IntegratorConfig icfg;

  Outcome o;
  o.data.columns = {"s0",          "s1",          "n_s",           "n_theta",
                    "flux",        "boundary_s1", "boundary_s0",   "period_difference",
                    "normalizer",  "normalized_flux", "stokes_residual", "refined_residual",
                    "refinement_ratio"};
  std::vector<chains::FluxReport> reports;
  for (std::size_t i = 0; i < cfg.s_intervals.size(); ++i) {
    chains::LeafFamily family;
    family.s0 = cfg.s_intervals[i].first;
    family.s1 = cfg.s_intervals[i].second;
    const chains::FluxReport r =
        chains::flux_report(beta, X, family, cfg.grid_s, cfg.grid_theta, icfg, cfg.refine);
    reports.push_back(r);
    const double expected = th::period_X(r.s1) - th::period_X(r.s0);
    o.data.rows.push_back({r.s0, r.s1, std::int64_t{r.n_s}, std::int64_t{r.n_theta}, r.flux,
                           r.boundary_s1, r.boundary_s0, expected, std::int64_t{r.normalizer},
                           r.normalized_flux, r.stokes_residual, r.refined_residual,
                           r.refinement_ratio});
    const double scale = std::max(std::abs(r.boundary_s1 - r.boundary_s0), 1.0);
    o.checks.push_back(at_most(fmt::format("flux.stokes.{}", i),
                               fmt::format("relative Stokes residual on s in [{}, {}]", r.s0, r.s1),
                               r.stokes_residual / scale, tol_or(cfg, 1e-3), kAnchorBoundary));
    if (r.refined && r.s0 != r.s1) {
      const double ratio = r.stokes_residual > 0.0 ? r.refined_residual / r.stokes_residual : 0.0;
      o.checks.push_back(at_most(fmt::format("flux.refinement.{}", i),
                                 "refined / coarse Stokes residual with both steps halved", ratio,
                                 tol_or(cfg, 1.0 / 3.0), kAnchorBoundary));
    }
    if (r.s1 < r.s0 && r.s1 <= 0.1) {
      o.checks.push_back(at_most(fmt::format("flux.normalized.{}", i),
                                 "relative distance of the normalized flux from 2 pi",
                                 std::abs(r.normalized_flux - kTwoPi) / kTwoPi, tol_or(cfg, 0.05),
                                 kAnchorFlux));
    }
  }

  // Normalized flux approaches 2 pi as the moving leaf approaches the bad set.
  std::vector<const chains::FluxReport*> inward;
  for (const auto& r : reports) {
    if (r.s1 < r.s0) inward.push_back(&r);
  }
  if (inward.size() >= 2) {
    std::stable_sort(inward.begin(), inward.end(),
                     [](const auto* a, const auto* b) { return a->s1 > b->s1; });
    int violations = 0;
    for (std::size_t i = 1; i < inward.size(); ++i) {
      if (std::abs(inward[i]->normalized_flux - kTwoPi) >
          std::abs(inward[i - 1]->normalized_flux - kTwoPi)) {
        ++violations;
      }
    }
    o.checks.push_back({"flux.trend",
                        "normalized flux moves towards 2 pi as s1 decreases (violations)",
                        static_cast<double>(violations), 0.0, violations == 0, kAnchorFlux, true});
  }
  return o;
}

// ---------------------------------------------------------------------------

Outcome adapted_check(const RunConfig& cfg) {
  const int n = cfg.samples.value_or(200);
  if (n < 1) throw UsageError("--samples must be positive");
  const double tol = tol_or(cfg, 1e-8);

  std::vector<ChartPoint> thurston_pts = th::random_quotient_points(cfg.seed, n);
  thurston_pts.insert(thurston_pts.begin(), th::make_point(0.0, 0.0, 0.0, 0.0, 0.0));
  const chains::AdaptedProbe beta = chains::strongly_adapted_probe(
      th::form_beta(), th::field_X(), thurston_pts, tol);
  const chains::AdaptedProbe hopf = chains::strongly_adapted_probe(
      wd::hopf_contact_form(), wd::hopf_field(), wd::random_sphere_points(cfg.seed, n), tol,
      wd::sphere_basis());

  Outcome o;
  o.data.columns = {"form", "min_alpha_X", "max_closedness", "positive", "closed", "verdict"};
  for (const auto& [name, p] : {std::pair{"beta", &beta}, std::pair{"hopf", &hopf}}) {
    o.data.rows.push_back({std::string(name), p->min_alpha_X, p->max_closedness, p->positive,
                           p->closed, p->verdict});
    o.checks.push_back({fmt::format("adapted.{}.positive", name), "alpha(X) > 0 (exact predicate)",
                        p->min_alpha_X, 0.0, p->positive, kAnchorAdapted, cfg.as_gate});
    o.checks.push_back({fmt::format("adapted.{}.closed", name),
                        "max coefficient of d(i_X d alpha)", p->max_closedness, tol, p->closed,
                        kAnchorAdapted, cfg.as_gate});
    o.notes.push_back(fmt::format("{}: {}", name, p->verdict));
  }
  return o;
}

// ---------------------------------------------------------------------------

Outcome wadsley_demo(const RunConfig& cfg) {
  const int n = cfg.samples.value_or(200);
  if (n < 1) throw UsageError("--samples must be positive");
  if (cfg.quad_nodes < 1) throw UsageError("--quad-nodes must be positive");
  if (cfg.metric != "perturbed" && cfg.metric != "round") {
    throw UsageError("--metric must be perturbed or round");
  }
  const bool round = cfg.metric == "round";
  const std::vector<ChartPoint> pts = wd::random_sphere_points(cfg.seed, n);
  const VectorField X = wd::hopf_field();
  const TangentBasis basis = wd::sphere_basis();
  const MetricEval g1 = round ? wd::round_metric() : wd::perturbed_round_metric(cfg.perturbation);
  const MetricEval g2 = wd::average_metric(g1, wd::hopf_action(), cfg.quad_nodes);

  Outcome o;
  o.data.columns = {"quantity", "value"};
  const double k1 = wd::killing_residual(X, g1, pts);
  const double k2 = wd::killing_residual(X, g2, pts);
  o.data.rows.push_back({std::string("killing_residual_g1"), k1});
  o.data.rows.push_back({std::string("killing_residual_g2"), k2});
  o.checks.push_back(at_most("wadsley.killing", "max |L_X g2| for the averaged metric", k2,
                             tol_or(cfg, 1e-6), kAnchorAverage));
  if (round) {
    double diff = 0.0;
    for (const ChartPoint& p : pts) diff = std::max(diff, (g2(p) - g1(p)).cwiseAbs().maxCoeff());
    o.data.rows.push_back({std::string("idempotence"), diff});
    o.checks.push_back(at_most("wadsley.idempotence",
                               "max |g2 - g1|: averaging an invariant metric changes nothing", diff,
                               tol_or(cfg, 1e-12), kAnchorAverage));
    o.notes.push_back("round metric is already invariant; averaging is idempotent");
  } else {
    o.checks.push_back({"wadsley.killing_control",
                        "max |L_X g1| for the unaveraged metric exceeds the tolerance", k1, 1e-2,
                        k1 > 1e-2, kAnchorAverage, true});
  }

  const MetricEval g3 = wd::normalize_metric(g2, X);
  const KForm alpha = wd::dual_one_form(g3, X);
  const wd::GeodesibilityReport geo =
      wd::geodesibility_check(alpha, X, pts, tol_or(cfg, 1e-6), basis);
  const double unit = std::max(std::abs(geo.min_alpha_X - 1.0), std::abs(geo.max_alpha_X - 1.0));
  o.data.rows.push_back({std::string("alpha_X_deviation"), unit});
  o.data.rows.push_back({std::string("iX_dalpha"), geo.max_iX_dalpha});
  o.checks.push_back(at_most("wadsley.alpha_X", "max |alpha(X) - 1| after normalization", unit,
                             tol_or(cfg, 1e-12), kAnchorUnit));
  o.checks.push_back(at_most("wadsley.iX_dalpha", "max |i_X d alpha| on the sphere",
                             geo.max_iX_dalpha, tol_or(cfg, 1e-6), kAnchorUnit));

  const KForm mu = wd::sphere_volume();
  const MetricEval g = wd::build_euler_metric(alpha, X, mu, g3, basis);
  const wd::EulerMetricResiduals em = wd::euler_metric_residuals(g, alpha, X, mu, pts, basis);
  o.data.rows.push_back({std::string("euler_dual"), em.dual});
  o.data.rows.push_back({std::string("euler_volume"), em.volume});
  o.checks.push_back(at_most("wadsley.euler_dual", "max |g(X, .) - alpha| on the sphere", em.dual,
                             tol_or(cfg, 1e-9), kAnchorEulerMetric));
  o.checks.push_back(at_most("wadsley.euler_volume", "max |sqrt(det g) - |mu||", em.volume,
                             tol_or(cfg, 1e-9), kAnchorEulerMetric));

  const VectorField w = wd::curl(X, g, mu, basis);
  const double beltrami = wd::beltrami_residual(X, w, g, pts);
  o.data.rows.push_back({std::string("beltrami"), beltrami});
  o.checks.push_back(at_most("wadsley.beltrami", "max |curl X - (projection on X)|_g", beltrami,
                             tol_or(cfg, 1e-6), kAnchorCurl));

  const VectorField w_round = wd::curl(X, wd::round_metric(), mu, basis);
  double rel = 0.0;
  for (const ChartPoint& p : pts) rel = std::max(rel, (w_round(p) - 2.0 * X(p)).norm() / X(p).norm());
  o.data.rows.push_back({std::string("hopf_round_curl"), rel});
  o.checks.push_back(at_most("wadsley.hopf_curl", "relative |curl X - 2X|, round metric", rel,
                             tol_or(cfg, 1e-6), kAnchorCurl));
  return o;
}

// ---------------------------------------------------------------------------

int exit_code(const std::vector<CheckResult>& checks) {
  for (const auto& c : checks) {
    if (c.gating && !c.pass) return kExitFail;
  }
  return kExitPass;
}

namespace {

std::string format_double(double x) { return fmt::format("{:.17g}", x); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string cell_text(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) {
          return format_double(v);
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else {
          return csv_field(v);
        }
      },
      cell);
}

nlohmann::ordered_json cell_json(const Cell& cell) {
  return std::visit([](const auto& v) { return nlohmann::ordered_json(v); }, cell);
}

nlohmann::ordered_json check_json(const CheckResult& c) {
  nlohmann::ordered_json j;
  j["id"] = c.id;
  j["description"] = c.description;
  j["measured"] = c.measured;
  j["tolerance"] = c.tolerance;
  j["pass"] = c.pass;
  j["gating"] = c.gating;
  j["anchor"] = c.anchor;
  return j;
}

nlohmann::ordered_json table_json(const Table& t) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json r;
    for (std::size_t i = 0; i < row.size() && i < t.columns.size(); ++i) {
      r[t.columns[i]] = cell_json(row[i]);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError(fmt::format("{}: cannot parse '{}' as a number", what, s));
  }
}

int parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError(fmt::format("{}: cannot parse '{}' as an integer", what, s));
  }
}

void print_summary(const std::string& command, const Outcome& o, std::ostream& os) {
  for (const auto& c : o.checks) {
    os << fmt::format("{} {:<28} measured={} tol={}{}  [{}]\n",
                      c.pass ? "PASS" : "FAIL", c.id, format_double(c.measured),
                      format_double(c.tolerance), c.gating ? "" : " (informational)", c.anchor);
  }
  for (const auto& note : o.notes) os << "note: " << note << "\n";
  os << fmt::format("{}: {}\n", command, exit_code(o.checks) == kExitPass ? "PASS" : "FAIL");
}

nlohmann::ordered_json command_json(const RunConfig& cfg, const Outcome& o) {
  nlohmann::ordered_json j;
  j["command"] = cfg.command;
  j["seed"] = cfg.seed;
  j["pass"] = exit_code(o.checks) == kExitPass;
  j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : o.checks) j["checks"].push_back(check_json(c));
  j["rows"] = table_json(o.data);
  j["notes"] = o.notes;
  return j;
}

Outcome dispatch(const RunConfig& cfg) {
  if (cfg.command == "forms-verify") return forms_verify(cfg);
  if (cfg.command == "descent-verify") return descent_verify(cfg);
  if (cfg.command == "orbit-scan") return orbit_scan(cfg);
  if (cfg.command == "flux-scan") return flux_scan(cfg);
  if (cfg.command == "adapted-check") return adapted_check(cfg);
  if (cfg.command == "wadsley-demo") return wadsley_demo(cfg);
  throw UsageError("unknown command " + cfg.command);
}

// The report runs every suite with its own defaults; --seed, --samples and
// --tol still apply where the suite uses them.
nlohmann::ordered_json report_json(const RunConfig& base, std::vector<CheckResult>& all) {
  nlohmann::ordered_json checks = nlohmann::ordered_json::object();
  nlohmann::ordered_json suites = nlohmann::ordered_json::object();
  for (const char* name : {"forms-verify", "descent-verify", "orbit-scan", "flux-scan",
                           "adapted-check", "wadsley-demo"}) {
    RunConfig cfg = base;
    cfg.command = name;
    if (cfg.command == "flux-scan") cfg.refine = true;
    const Outcome o = dispatch(cfg);
    for (const auto& c : o.checks) {
      nlohmann::ordered_json j = check_json(c);
      j.erase("id");
      j["suite"] = cfg.command;
      checks[c.id] = std::move(j);
      all.push_back(c);
    }
    suites[cfg.command] = table_json(o.data);
  }
  nlohmann::ordered_json j;
  j["command"] = "report";
  j["seed"] = base.seed;
  j["pass"] = exit_code(all) == kExitPass;
  j["checks"] = std::move(checks);
  j["data"] = std::move(suites);
  return j;
}

}  // namespace

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    out += (i ? "," : "") + csv_field(table.columns[i]);
  }
  out += "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + cell_text(row[i]);
    out += "\n";
  }
  return out;
}

std::string checks_csv(const std::vector<CheckResult>& checks) {
  Table t;
  t.columns = {"id", "description", "measured", "tolerance", "pass", "gating", "anchor"};
  for (const auto& c : checks) {
    t.rows.push_back({c.id, c.description, c.measured, c.tolerance, c.pass, c.gating, c.anchor});
  }
  return to_csv(t);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical checks for the Sullivan-Thurston flow and Wadsley averaging", "eulerlab"};
  app.require_subcommand(1, 1);
  app.set_config("--config", "", "flat key=value file; flags take precedence");

  RunConfig cfg;
  double tol = 0.0;
  int samples = 0;
  std::string grid;
  std::vector<std::string> u_values;
  std::vector<std::string> s_intervals;
  std::string gamma;

  auto* tol_opt = app.add_option("--tol", tol, "replace every tolerance");
  auto* samples_opt = app.add_option("--samples", samples, "sample count");
  app.add_option("--seed", cfg.seed, "RNG seed");
  app.add_option("--out", cfg.out, "output file (CSV or JSON)");
  app.add_option("--format", cfg.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  auto* grid_opt = app.add_option("--grid", grid, "cylinder mesh NsxNtheta");
  auto* u_opt = app.add_option("--u-values", u_values, "comma-separated u list")->delimiter(',');
  auto* s_opt =
      app.add_option("--s-interval", s_intervals, "s0:s1 leaf intervals, comma-separated")
          ->delimiter(',');
  app.add_option("--quad-nodes", cfg.quad_nodes, "quadrature nodes for averaging");
  auto* gamma_opt = app.add_option("--gamma", gamma, "lattice range lo:hi for |a|,|b|,|c|");
  app.add_flag("--allow-bad-set", cfg.allow_bad_set, "permit u inside the excluded band");
  app.add_flag("--broken-field", cfg.broken_field, "descent negative control");
  app.add_flag("--refine", cfg.refine, "repeat the flux scan with both steps halved");
  app.add_flag("--as-gate", cfg.as_gate, "adapted-check exits 1 when a probe fails");
  app.add_option("--metric", cfg.metric, "wadsley-demo base metric")
      ->check(CLI::IsMember({"perturbed", "round"}));
  app.add_option("--perturbation", cfg.perturbation, "size of the metric perturbation");

  const std::pair<const char*, const char*> commands[] = {
      {"forms-verify", "identities of beta, X and mu on sampled points"},
      {"descent-verify", "invariance of X, beta and mu under the lattice"},
      {"orbit-scan", "periods and lengths of X orbits across u"},
      {"flux-scan", "flux of d beta through leaf cylinders"},
      {"adapted-check", "necessary conditions for a strongly adapted form"},
      {"wadsley-demo", "averaging, normalization and curl on S^3"},
      {"report", "every suite in one pass"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  cfg.command = app.get_subcommands().front()->get_name();

  try {
    if (tol_opt->count() > 0) cfg.tol = tol;
    if (samples_opt->count() > 0) cfg.samples = samples;
    if (grid_opt->count() > 0) {
      const auto parts = split(grid, 'x');
      if (parts.size() != 2) throw UsageError("--grid expects NsxNtheta");
      cfg.grid_s = parse_int(parts[0], "--grid");
      cfg.grid_theta = parse_int(parts[1], "--grid");
    }
    if (u_opt->count() > 0) {
      cfg.u_values.clear();
      for (const auto& s : u_values) cfg.u_values.push_back(parse_double(s, "--u-values"));
    }
    if (s_opt->count() > 0) {
      cfg.s_intervals.clear();
      for (const auto& s : s_intervals) {
        const auto parts = split(s, ':');
        if (parts.size() != 2) throw UsageError("--s-interval expects s0:s1");
        cfg.s_intervals.emplace_back(parse_double(parts[0], "--s-interval"),
                                     parse_double(parts[1], "--s-interval"));
      }
    }
    if (gamma_opt->count() > 0) {
      const auto parts = split(gamma, ':');
      if (parts.size() != 2) throw UsageError("--gamma expects lo:hi");
      cfg.gamma_min = parse_int(parts[0], "--gamma");
      cfg.gamma_max = parse_int(parts[1], "--gamma");
    }
    std::string format = cfg.format;
    if (format.empty() && !cfg.out.empty()) {
      format = cfg.out.size() >= 5 && cfg.out.ends_with(".json") ? "json" : "csv";
    }
    if (cfg.command == "report" && format.empty()) format = "json";

    std::ofstream file;
    if (!cfg.out.empty()) {
      file.open(cfg.out);
      if (!file) throw UsageError("cannot open " + cfg.out + " for writing");
    }
    std::ostream& data_os = cfg.out.empty() ? out : static_cast<std::ostream&>(file);
    const bool data_on_stdout = cfg.out.empty() && !format.empty();
    std::ostream& summary_os = data_on_stdout ? err : out;

    if (cfg.command == "report") {
      std::vector<CheckResult> all;
      const nlohmann::ordered_json j = report_json(cfg, all);
      if (format == "csv") {
        data_os << checks_csv(all);
      } else {
        data_os << j.dump(2) << "\n";
      }
      Outcome summary;
      summary.checks = all;
      print_summary(cfg.command, summary, summary_os);
      return exit_code(all);
    }

    const Outcome o = dispatch(cfg);
    if (format == "json") {
      data_os << command_json(cfg, o).dump(2) << "\n";
    } else if (format == "csv") {
      data_os << (o.data.columns.empty() ? checks_csv(o.checks) : to_csv(o.data));
    }
    print_summary(cfg.command, o, summary_os);
    return exit_code(o.checks);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ContractViolation& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFail;
  }
}

}  // namespace eulerlab::cli
