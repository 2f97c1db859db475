#include "eulerlab/flow.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <string>
#include <thread>

#include <boost/numeric/odeint.hpp>

#include "eulerlab/errors.hpp"
#include "eulerlab/thurston.hpp"

namespace eulerlab::flow {

namespace odeint = boost::numeric::odeint;
using State = std::vector<double>;

void IntegratorConfig::validate() const {
  require(abs_tol > 0.0 && rel_tol > 0.0, "integrator tolerances must be positive");
  require(step > 0.0, "integrator step must be positive");
  require(max_time > 0.0, "max_time must be positive");
  require(close_tol > 0.0, "close_tol must be positive");
  require(scan_step > 0.0, "scan_step must be positive");
  require(time_tol > 0.0, "time_tol must be positive");
  require(samples >= 3, "at least three trajectory samples are required");
}

namespace {

State to_state(const ChartPoint& p) { return State(p.data(), p.data() + p.size()); }

ChartPoint to_point(const State& s) {
  return Eigen::Map<const Vec>(s.data(), static_cast<Eigen::Index>(s.size()));
}

// Advances `state` along X (or -X when direction < 0) by |duration|.
void advance(const VectorField& X, State& state, double duration, double direction,
             const IntegratorConfig& cfg) {
  if (duration == 0.0) return;
  const auto system = [&X, direction](const State& s, State& ds, double) {
    const Vec v = X(to_point(s));
    for (Eigen::Index i = 0; i < v.size(); ++i) ds[static_cast<std::size_t>(i)] = direction * v[i];
  };
  try {
    if (cfg.method == Method::kRK45) {
      auto stepper =
          odeint::make_controlled(cfg.abs_tol, cfg.rel_tol, odeint::runge_kutta_dopri5<State>());
      odeint::integrate_adaptive(stepper, system, state, 0.0, duration,
                                 std::min(duration, 0.05));
    } else {
      const auto n = static_cast<std::size_t>(std::ceil(duration / cfg.step - 1e-12));
      const double h = duration / static_cast<double>(std::max<std::size_t>(n, 1));
      odeint::runge_kutta4<State> stepper;
      double t = 0.0;
      for (std::size_t i = 0; i < std::max<std::size_t>(n, 1); ++i, t += h) {
        stepper.do_step(system, state, t, h);
      }
    }
  } catch (const odeint::step_adjustment_error& e) {
    throw IntegrationError(std::string("step-size underflow: ") + e.what());
  } catch (const odeint::no_progress_error& e) {
    throw IntegrationError(std::string("step-size underflow: ") + e.what());
  }
  for (double v : state) {
    if (!std::isfinite(v)) throw IntegrationError("integration produced a non-finite state");
  }
}

}  // namespace

Trajectory integrate(const VectorField& X, const ChartPoint& p0, double T,
                     const IntegratorConfig& cfg, int n_out) {
  cfg.validate();
  require(n_out >= 2, "integrate: need at least two output samples");
  require(p0.size() == X.dim(), "integrate: point dimension mismatch");
  require_finite(p0, "integrate");
  if (std::abs(T) > cfg.max_time) {
    throw IntegrationError("requested time " + std::to_string(T) + " exceeds max_time " +
                           std::to_string(cfg.max_time));
  }
  const double direction = T < 0.0 ? -1.0 : 1.0;
  const double dt = std::abs(T) / (n_out - 1);
  Trajectory out;
  out.times.reserve(static_cast<std::size_t>(n_out));
  out.points.reserve(static_cast<std::size_t>(n_out));
  State s = to_state(p0);
  out.times.push_back(0.0);
  out.points.push_back(p0);
  for (int i = 1; i < n_out; ++i) {
    advance(X, s, dt, direction, cfg);
    out.times.push_back(direction * dt * i);
    out.points.push_back(to_point(s));
  }
  out.times.back() = T;
  return out;
}

ChartPoint flow_to(const VectorField& X, const ChartPoint& p0, double T,
                   const IntegratorConfig& cfg) {
  return integrate(X, p0, T, cfg, 2).points.back();
}

ReturnDetector thurston_detector() {
  ReturnDetector d;
  d.distance = [](const ChartPoint& p, const ChartPoint& q, double cutoff) {
    return thurston::quotient_distance_below(p, q, cutoff);
  };
  d.speed = [](const ChartPoint& p, const Vec& v) {
    return std::sqrt(v.dot(thurston::frame_metric_at(p) * v));
  };
  d.conserved_coordinate = thurston::kU;
  return d;
}

double simpson(const std::vector<double>& values, double span) {
  const std::size_t n = values.size();
  require(n >= 3 && n % 2 == 1, "simpson: need an odd number (>= 3) of samples");
  const double h = span / static_cast<double>(n - 1);
  double sum = values.front() + values.back();
  for (std::size_t i = 1; i + 1 < n; ++i) sum += (i % 2 == 1 ? 4.0 : 2.0) * values[i];
  return sum * h / 3.0;
}

namespace {

struct Sample {
  double time;
  State state;
  double distance;
};

constexpr double kGolden = 0.6180339887498949;

// Golden-section minimisation of d(tau) on [lo.time, hi], integrating from lo.
std::pair<double, double> refine_return(const VectorField& X, const ChartPoint& p0,
                                        const Sample& lo, double hi,
                                        const IntegratorConfig& cfg,
                                        const ReturnDetector& detector) {
  const auto dist_at = [&](double tau) {
    State s = lo.state;
    advance(X, s, tau - lo.time, 1.0, cfg);
    return detector.distance(to_point(s), p0, std::numeric_limits<double>::infinity());
  };
  double a = lo.time;
  double b = hi;
  double c = b - kGolden * (b - a);
  double d = a + kGolden * (b - a);
  double fc = dist_at(c);
  double fd = dist_at(d);
  while (b - a > cfg.time_tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kGolden * (b - a);
      fc = dist_at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kGolden * (b - a);
      fd = dist_at(d);
    }
  }
  const double tau = 0.5 * (a + b);
  return {tau, dist_at(tau)};
}

}  // namespace

OrbitRecord find_period(const VectorField& X, const ChartPoint& p0, const IntegratorConfig& cfg,
                        const ReturnDetector& detector, double period_guess) {
  cfg.validate();
  require(static_cast<bool>(detector.distance) && static_cast<bool>(detector.speed),
          "find_period: detector needs a distance and a speed");
  require(p0.size() == X.dim(), "find_period: point dimension mismatch");
  require_finite(p0, "find_period");

  const double h = period_guess > 0.0 ? std::min(cfg.scan_step, period_guess / 100.0)
                                      : cfg.scan_step;
  const double accept = cfg.close_tol / 10.0;
  double max_speed = detector.speed(p0, X(p0));

  Sample prev2{0.0, to_state(p0), 0.0};
  Sample prev1 = prev2;
  bool have_two = false;
  double period = -1.0;
  double residual = 0.0;

  for (std::int64_t k = 1;; ++k) {
    const double tau = static_cast<double>(k) * h;
    if (tau > cfg.max_time) {
      throw PeriodNotFound("no closed-orbit return found before max_time = " +
                               std::to_string(cfg.max_time),
                           cfg.max_time);
    }
    Sample cur{tau, prev1.state, 0.0};
    advance(X, cur.state, h, 1.0, cfg);
    const ChartPoint p = to_point(cur.state);
    max_speed = std::max(max_speed, detector.speed(p, X(p)));
    // The distance changes by at most max_speed * h between samples, so any
    // value above this cutoff cannot be next to a true return.
    const double window = 1.5 * max_speed * h + cfg.close_tol;
    cur.distance = detector.distance(p, p0, 2.0 * window);

    if (have_two && prev2.distance > prev1.distance && prev1.distance <= cur.distance &&
        prev1.distance < window) {
      const auto [t_ret, d_ret] = refine_return(X, p0, prev2, cur.time, cfg, detector);
      if (d_ret < accept) {
        period = t_ret;
        residual = d_ret;
        break;
      }
    }
    prev2 = std::move(prev1);
    prev1 = std::move(cur);
    have_two = true;
  }

  OrbitRecord rec;
  rec.initial = p0;
  rec.period = period;
  rec.closure_residual = residual;
  const int n = cfg.samples % 2 == 1 ? cfg.samples : cfg.samples + 1;
  const Trajectory traj = integrate(X, p0, period, cfg, n);
  rec.times = traj.times;
  rec.points = traj.points;
  rec.velocities.reserve(rec.points.size());
  std::vector<double> speeds;
  speeds.reserve(rec.points.size());
  for (const ChartPoint& q : rec.points) {
    rec.velocities.push_back(X(q));
    speeds.push_back(detector.speed(q, rec.velocities.back()));
    if (detector.conserved_coordinate >= 0) {
      const auto c = detector.conserved_coordinate;
      rec.conserved_drift = std::max(rec.conserved_drift, std::abs(q[c] - p0[c]));
    }
  }
  rec.length = simpson(speeds, period);
  return rec;
}

OrbitRecord find_period(const VectorField& X, const ChartPoint& p0, const IntegratorConfig& cfg,
                        double period_guess) {
  return find_period(X, p0, cfg, thurston_detector(), period_guess);
}

double orbit_length(const OrbitRecord& record, const MetricEval& metric) {
  require(record.points.size() == record.velocities.size(), "orbit_length: malformed record");
  std::vector<double> speeds;
  speeds.reserve(record.points.size());
  for (std::size_t i = 0; i < record.points.size(); ++i) {
    speeds.push_back(metric.norm(record.points[i], record.velocities[i]));
  }
  return simpson(speeds, record.period);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers =
      std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

ScanResult orbit_scan(const std::vector<double>& u_values, double x0, double y0, double z0,
                      double t0, const IntegratorConfig& cfg, bool allow_bad_set,
                      double band_eps) {
  cfg.validate();
  for (double u : u_values) {
    if (!allow_bad_set && thurston::bad_set_distance(u) <= band_eps) {
      throw DomainError("u = " + std::to_string(u) +
                        " lies in the excluded band around the bad set u = 0 mod pi");
    }
  }
  ScanResult result;
  result.rows.resize(u_values.size());
  const VectorField X = thurston::field_X();
  const ReturnDetector detector = thurston_detector();
  parallel_for(u_values.size(), [&](std::size_t i) {
    const double u = u_values[i];
    const double s = std::sin(u);
    const double guess = s == 0.0 ? 1.0 : std::numbers::pi / (s * s);
    const OrbitRecord rec =
        find_period(X, thurston::make_point(x0, y0, z0, t0, u), cfg, detector, guess);
    result.rows[i] = {u, rec.period, rec.length, rec.closure_residual, rec.conserved_drift};
  });

  std::vector<ScanRow> ordered;
  for (const auto& row : result.rows) {
    if (row.u > 0.0 && row.u <= std::numbers::pi / 2 + 1e-15) ordered.push_back(row);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const ScanRow& a, const ScanRow& b) { return a.u > b.u; });
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    if (!(ordered[i].length > ordered[i - 1].length)) result.monotone_blowup = false;
  }
  return result;
}

Mat flow_jacobian(const VectorField& X, const ChartPoint& p, double T,
                  const IntegratorConfig& cfg) {
  const int n = X.dim();
  require(p.size() == n, "flow_jacobian: point dimension mismatch");
  const VectorField augmented(n + n * n, [X, n](const ChartPoint& s) -> Vec {
    const ChartPoint x = s.head(n);
    const Eigen::Map<const Mat> M(s.data() + n, n, n);
    Vec out(n + n * n);
    out.head(n) = X(x);
    Eigen::Map<Mat>(out.data() + n, n, n) = X.jacobian(x) * M;
    return out;
  });
  ChartPoint s0(n + n * n);
  s0.head(n) = p;
  Eigen::Map<Mat>(s0.data() + n, n, n) = Mat::Identity(n, n);
  const ChartPoint s1 = flow_to(augmented, s0, T, cfg);
  return Eigen::Map<const Mat>(s1.data() + n, n, n);
}

namespace {

Vec pulled_back_coeffs(const VectorField& X, const KForm& w, const ChartPoint& p, double s,
                       const IntegratorConfig& cfg) {
  if (w.degree() == 0) return w.coeffs(flow_to(X, p, s, cfg));
  const Mat J = flow_jacobian(X, p, s, cfg);
  const ChartPoint q = flow_to(X, p, s, cfg);
  const auto& indices = multi_indices(w.dim(), w.degree());
  Vec out(static_cast<Eigen::Index>(indices.size()));
  Mat V(w.dim(), w.degree());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    for (int c = 0; c < w.degree(); ++c) V.col(c) = J.col(indices[r][static_cast<std::size_t>(c)]);
    out[static_cast<Eigen::Index>(r)] = eval_form(w, q, V);
  }
  return out;
}

}  // namespace

Vec transport_lie_derivative(const VectorField& X, const KForm& w, const ChartPoint& p,
                             double eps, const IntegratorConfig& cfg) {
  require(eps > 0.0, "transport_lie_derivative: eps must be positive");
  require(X.dim() == w.dim(), "transport_lie_derivative: dimension mismatch");
  const Vec f1 = pulled_back_coeffs(X, w, p, eps, cfg);
  const Vec m1 = pulled_back_coeffs(X, w, p, -eps, cfg);
  const Vec f2 = pulled_back_coeffs(X, w, p, 2.0 * eps, cfg);
  const Vec m2 = pulled_back_coeffs(X, w, p, -2.0 * eps, cfg);
  return (8.0 * (f1 - m1) - (f2 - m2)) / (12.0 * eps);
}

}  // namespace eulerlab::flow
