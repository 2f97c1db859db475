#pragma once

// Chart-level exterior calculus.
//
// Forms are stored as coefficient functions over strictly increasing
// multi-indices I = (i_1 < ... < i_k), ordered lexicographically. With that
// representation wedge, interior product, pullback and d are exact algebra on
// coefficients; only coefficient differentiation may fall back to finite
// differences. Wedge uses the determinant convention:
//   (dx^{i_1} ^ ... ^ dx^{i_k})(v_1, ..., v_k) = det[v_j^{i_l}]
// with no 1/k! factors.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "eulerlab/rng.hpp"

namespace eulerlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Coordinates in a chart: (x, y, z, t, u) for the Thurston chart, ambient
/// (x1, x2, x3, x4) for S^3.
using ChartPoint = Eigen::VectorXd;

inline constexpr double kDefaultFdStep = 1e-4;

/// Throws ContractViolation unless every coordinate is finite.
void require_finite(const ChartPoint& p, const char* what);

// ---------------------------------------------------------------------------
// Multi-index bookkeeping

using MultiIndex = std::vector<int>;

/// Largest chart dimension supported by the multi-index tables.
inline constexpr int kMaxDim = 10;

std::size_t binomial(int n, int k);

/// All strictly increasing k-subsets of {0..n-1}, lexicographic order.
const std::vector<MultiIndex>& multi_indices(int n, int k);

/// Position of a strictly increasing multi-index in multi_indices(n, |I|).
std::size_t index_of(int n, const MultiIndex& I);

// ---------------------------------------------------------------------------
// Fields

class ScalarField {
 public:
  using EvalFn = std::function<double(const ChartPoint&)>;
  using GradFn = std::function<Vec(const ChartPoint&)>;

  ScalarField(int dim, EvalFn eval, GradFn gradient = {});

  int dim() const { return dim_; }
  double operator()(const ChartPoint& p) const;
  bool has_gradient() const { return static_cast<bool>(gradient_); }
  /// Analytic gradient when supplied, otherwise 4th-order central differences.
  Vec gradient(const ChartPoint& p, double h = kDefaultFdStep) const;

  static ScalarField constant(int dim, double value);

 private:
  int dim_;
  EvalFn eval_;
  GradFn gradient_;
};

class VectorField {
 public:
  using EvalFn = std::function<Vec(const ChartPoint&)>;
  using JacobianFn = std::function<Mat(const ChartPoint&)>;

  VectorField(int dim, EvalFn eval, JacobianFn jacobian = {});

  int dim() const { return dim_; }
  Vec operator()(const ChartPoint& p) const;
  bool has_jacobian() const { return static_cast<bool>(jacobian_); }
  /// J(i, j) = d X^i / d x^j. Analytic when supplied, else finite differences.
  Mat jacobian(const ChartPoint& p, double h = kDefaultFdStep) const;

  VectorField scaled(double factor) const;

 private:
  int dim_;
  EvalFn eval_;
  JacobianFn jacobian_;
};

/// Smooth map between charts of equal dimension with its Jacobian and,
/// optionally, its inverse (needed for pushforward).
class Diffeo {
 public:
  using MapFn = std::function<ChartPoint(const ChartPoint&)>;
  using JacobianFn = std::function<Mat(const ChartPoint&)>;

  Diffeo(int dim, MapFn map, JacobianFn jacobian, MapFn inverse = {},
         double eps_jac = 1e-12);

  int dim() const { return dim_; }
  ChartPoint operator()(const ChartPoint& p) const { return map_(p); }
  /// Throws ContractViolation when |det| <= eps_jac.
  Mat jacobian(const ChartPoint& p) const;
  bool has_inverse() const { return static_cast<bool>(inverse_); }
  ChartPoint inverse(const ChartPoint& q) const;

  static Diffeo identity(int dim);

 private:
  int dim_;
  MapFn map_;
  JacobianFn jacobian_;
  MapFn inverse_;
  double eps_jac_;
};

// ---------------------------------------------------------------------------
// Forms

class KForm {
 public:
  using CoeffFn = std::function<Vec(const ChartPoint&)>;
  /// Row r holds the partial derivatives of coefficient r.
  using PartialsFn = std::function<Mat(const ChartPoint&)>;

  KForm(int dim, int degree, CoeffFn coeffs, PartialsFn partials = {});

  int dim() const { return dim_; }
  int degree() const { return degree_; }
  std::size_t size() const { return binomial(dim_, degree_); }

  Vec coeffs(const ChartPoint& p) const;
  bool has_partials() const { return static_cast<bool>(partials_); }
  Mat partials(const ChartPoint& p, double h = kDefaultFdStep) const;

  /// Coefficient on one multi-index.
  double coeff(const ChartPoint& p, const MultiIndex& I) const;

  static KForm zero(int dim, int degree);
  /// Constant-coefficient form.
  static KForm constant(int dim, int degree, Vec coeffs);
  /// The single basis form dx^{i_1} ^ ... ^ dx^{i_k}.
  static KForm basis(int dim, const MultiIndex& I);
  static KForm from_function(const ScalarField& f);

  /// Set on results of interior_product: the uncontracted form and the
  /// fields in contraction order, i_{Xm} ... i_{X1} base.
  struct Contraction;
  const std::shared_ptr<const Contraction>& contraction() const { return contraction_; }
  KForm with_contraction(std::shared_ptr<const Contraction> c) const;

 private:
  int dim_;
  int degree_;
  CoeffFn coeffs_;
  PartialsFn partials_;
  std::shared_ptr<const Contraction> contraction_;
};

struct KForm::Contraction {
  KForm base;
  std::vector<VectorField> fields;
};

/// Columns of `vectors` are the arguments v_1..v_k.
double eval_form(const KForm& w, const ChartPoint& p, const Mat& vectors);
double eval_form(const KForm& w, const ChartPoint& p,
                 std::span<const Vec> vectors);

KForm add(const KForm& a, const KForm& b);
KForm scale(double c, const KForm& w);
KForm scale(const ScalarField& f, const KForm& w);

KForm wedge(const KForm& a, const KForm& b);
/// w ^ w ^ ... (n factors); n = 0 gives the constant 0-form 1.
KForm wedge_power(const KForm& w, int n);

/// Uses analytic coefficient partials when present, else 4th-order central
/// differences with step h. If w has partials, so does the result (one
/// difference of the analytic partials).
KForm exterior_derivative(const KForm& w, double h = kDefaultFdStep);
KForm differential(const ScalarField& f);

KForm interior_product(const VectorField& X, const KForm& w);

KForm pullback(const Diffeo& phi, const KForm& w);
/// Requires phi.has_inverse(); throws UnsupportedOperation otherwise.
VectorField pushforward(const Diffeo& phi, const VectorField& X);

/// Cartan: L_X w = i_X dw + d i_X w.
KForm lie_derivative_form(const VectorField& X, const KForm& w,
                          double h = kDefaultFdStep);

// ---------------------------------------------------------------------------
// Metrics and tangent spaces

/// Pointwise symmetric bilinear form on a chart.
class MetricEval {
 public:
  using EvalFn = std::function<Mat(const ChartPoint&)>;

  MetricEval(int dim, EvalFn eval, double eps_pd = 1e-10);

  int dim() const { return dim_; }
  Mat operator()(const ChartPoint& p) const;
  double inner(const ChartPoint& p, const Vec& v, const Vec& w) const;
  double norm(const ChartPoint& p, const Vec& v) const;
  /// d g / d x^k by 4th-order central differences.
  Mat partial(const ChartPoint& p, int k, double h = kDefaultFdStep) const;
  double eps_pd() const { return eps_pd_; }
  /// Smallest eigenvalue at p.
  double min_eigenvalue(const ChartPoint& p) const;

  static MetricEval euclidean(int dim);

 private:
  int dim_;
  EvalFn eval_;
  double eps_pd_;
};

/// (L_X g)_{ij} = X^k d_k g_ij + g_kj d_i X^k + g_ik d_j X^k, i.e.
/// X(g(e_i, e_j)) - g([X, e_i], e_j) - g(e_i, [X, e_j]).
Mat lie_derivative_metric(const VectorField& X, const MetricEval& g,
                          const ChartPoint& p, double h = kDefaultFdStep);

/// Columns span the tangent space of the sub-manifold through p on which
/// forms are restricted. The identity basis means "the whole chart".
using TangentBasis = std::function<Mat(const ChartPoint&)>;

TangentBasis full_chart_basis(int dim);

/// Coefficients of w restricted to span(E): entry I is w(E_{i_1}, ..., E_{i_k})
/// over multi_indices(E.cols(), k).
Vec restricted_coeffs(const KForm& w, const ChartPoint& p, const Mat& E);

// Seeded smooth test objects: each component is a sum of `terms` sinusoids
// a sin(k . p + phase) with random a, k, phase. Analytic partials included.
KForm random_trig_form(int dim, int degree, SplitMix64& rng, int terms = 3);
VectorField random_trig_field(int dim, SplitMix64& rng, int terms = 3);

}  // namespace eulerlab
