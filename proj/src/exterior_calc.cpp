#include "eulerlab/exterior_calc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>

#include "eulerlab/errors.hpp"

namespace eulerlab {

void require_finite(const ChartPoint& p, const char* what) {
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p[i])) {
      throw ContractViolation(std::string(what) + ": non-finite coordinate " +
                              std::to_string(i));
    }
  }
}

// ---------------------------------------------------------------------------
// Multi-indices

namespace {

struct IndexTables {
  // by_degree[n][k] lists the k-subsets of {0..n-1}; position[n][mask] is the
  // rank of the subset encoded by `mask` within its degree.
  std::array<std::vector<std::vector<MultiIndex>>, kMaxDim + 1> by_degree;
  std::array<std::vector<std::size_t>, kMaxDim + 1> position;

  IndexTables() {
    for (int n = 0; n <= kMaxDim; ++n) {
      by_degree[n].resize(n + 1);
      for (int k = 0; k <= n; ++k) {
        MultiIndex I(k);
        std::iota(I.begin(), I.end(), 0);
        auto& list = by_degree[n][k];
        while (true) {
          list.push_back(I);
          int pos = k - 1;
          while (pos >= 0 && I[pos] == n - k + pos) --pos;
          if (pos < 0) break;
          ++I[pos];
          for (int j = pos + 1; j < k; ++j) I[j] = I[j - 1] + 1;
        }
      }
      position[n].assign(std::size_t{1} << n, 0);
      for (int k = 0; k <= n; ++k) {
        const auto& list = by_degree[n][k];
        for (std::size_t r = 0; r < list.size(); ++r) {
          std::size_t mask = 0;
          for (int i : list[r]) mask |= std::size_t{1} << i;
          position[n][mask] = r;
        }
      }
    }
  }
};

const IndexTables& tables() {
  static const IndexTables t;
  return t;
}

std::size_t mask_of(const MultiIndex& I) {
  std::size_t mask = 0;
  for (int i : I) mask |= std::size_t{1} << i;
  return mask;
}

void require_dim(int n) {
  require(n >= 1 && n <= kMaxDim,
          "chart dimension must be in [1, " + std::to_string(kMaxDim) + "]");
}

// Number of inversions between concatenated sorted lists a ++ b.
int merge_sign(const MultiIndex& a, const MultiIndex& b) {
  int inversions = 0;
  for (int i : a) {
    for (int j : b) {
      if (i > j) ++inversions;
    }
  }
  return inversions % 2 == 0 ? 1 : -1;
}

// 4th-order central differences of a vector-valued map; column k holds d/dx^k.
template <class F>
Mat central_partials(const F& f, const ChartPoint& p, double h) {
  require(h > 0.0, "finite-difference step must be positive");
  const Vec f0 = f(p);
  Mat out(f0.size(), p.size());
  ChartPoint q = p;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    const double x = p[k];
    q[k] = x + 2 * h;
    const Vec fp2 = f(q);
    q[k] = x + h;
    const Vec fp1 = f(q);
    q[k] = x - h;
    const Vec fm1 = f(q);
    q[k] = x - 2 * h;
    const Vec fm2 = f(q);
    q[k] = x;
    out.col(k) = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h);
  }
  return out;
}

}  // namespace

std::size_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::size_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::size_t>(n - k + i) / i;
  return r;
}

const std::vector<MultiIndex>& multi_indices(int n, int k) {
  require_dim(n);
  require(k >= 0 && k <= n, "form degree out of range");
  return tables().by_degree[n][k];
}

std::size_t index_of(int n, const MultiIndex& I) {
  require_dim(n);
  for (std::size_t j = 0; j < I.size(); ++j) {
    require(I[j] >= 0 && I[j] < n, "multi-index entry out of range");
    require(j == 0 || I[j - 1] < I[j], "multi-index must be strictly increasing");
  }
  return tables().position[n][mask_of(I)];
}

// ---------------------------------------------------------------------------
// Fields

ScalarField::ScalarField(int dim, EvalFn eval, GradFn gradient)
    : dim_(dim), eval_(std::move(eval)), gradient_(std::move(gradient)) {
  require_dim(dim);
  require(static_cast<bool>(eval_), "scalar field needs an evaluator");
}

double ScalarField::operator()(const ChartPoint& p) const {
  require(p.size() == dim_, "scalar field: point dimension mismatch");
  return eval_(p);
}

Vec ScalarField::gradient(const ChartPoint& p, double h) const {
  require(p.size() == dim_, "scalar field: point dimension mismatch");
  if (gradient_) return gradient_(p);
  const auto f = [this](const ChartPoint& q) {
    Vec v(1);
    v[0] = eval_(q);
    return v;
  };
  return central_partials(f, p, h).row(0).transpose();
}

ScalarField ScalarField::constant(int dim, double value) {
  return ScalarField(
      dim, [value](const ChartPoint&) { return value; },
      [dim](const ChartPoint&) { return Vec::Zero(dim).eval(); });
}

VectorField::VectorField(int dim, EvalFn eval, JacobianFn jacobian)
    : dim_(dim), eval_(std::move(eval)), jacobian_(std::move(jacobian)) {
  // No upper bound: fields on extended phase spaces (variational equations)
  // never meet the multi-index tables.
  require(dim >= 1, "vector field dimension must be positive");
  require(static_cast<bool>(eval_), "vector field needs an evaluator");
}

Vec VectorField::operator()(const ChartPoint& p) const {
  require(p.size() == dim_, "vector field: point dimension mismatch");
  Vec v = eval_(p);
  require(v.size() == dim_, "vector field: evaluator returned wrong dimension");
  return v;
}

Mat VectorField::jacobian(const ChartPoint& p, double h) const {
  require(p.size() == dim_, "vector field: point dimension mismatch");
  if (jacobian_) return jacobian_(p);
  return central_partials(eval_, p, h);
}

VectorField VectorField::scaled(double factor) const {
  auto eval = eval_;
  auto jac = jacobian_;
  JacobianFn scaled_jac;
  if (jac) scaled_jac = [jac, factor](const ChartPoint& p) -> Mat { return factor * jac(p); };
  return VectorField(
      dim_, [eval, factor](const ChartPoint& p) -> Vec { return factor * eval(p); },
      scaled_jac);
}

Diffeo::Diffeo(int dim, MapFn map, JacobianFn jacobian, MapFn inverse,
               double eps_jac)
    : dim_(dim),
      map_(std::move(map)),
      jacobian_(std::move(jacobian)),
      inverse_(std::move(inverse)),
      eps_jac_(eps_jac) {
  require_dim(dim);
  require(map_ && jacobian_, "diffeomorphism needs a map and its Jacobian");
  require(eps_jac_ >= 0.0, "eps_jac must be non-negative");
}

Mat Diffeo::jacobian(const ChartPoint& p) const {
  Mat J = jacobian_(p);
  require(J.rows() == dim_ && J.cols() == dim_, "diffeo Jacobian has wrong shape");
  require(std::abs(J.determinant()) > eps_jac_,
          "diffeo Jacobian is singular at the evaluation point");
  return J;
}

ChartPoint Diffeo::inverse(const ChartPoint& q) const {
  if (!inverse_) {
    throw UnsupportedOperation("diffeomorphism has no inverse map");
  }
  return inverse_(q);
}

Diffeo Diffeo::identity(int dim) {
  const auto id = [](const ChartPoint& p) { return p; };
  return Diffeo(
      dim, id, [dim](const ChartPoint&) { return Mat::Identity(dim, dim).eval(); }, id);
}

// ---------------------------------------------------------------------------
// Forms

KForm::KForm(int dim, int degree, CoeffFn coeffs, PartialsFn partials)
    : dim_(dim),
      degree_(degree),
      coeffs_(std::move(coeffs)),
      partials_(std::move(partials)) {
  require_dim(dim);
  require(degree >= 0 && degree <= dim, "form degree out of range");
  require(static_cast<bool>(coeffs_), "form needs a coefficient function");
}

Vec KForm::coeffs(const ChartPoint& p) const {
  require(p.size() == dim_, "form: point dimension mismatch");
  Vec c = coeffs_(p);
  require(static_cast<std::size_t>(c.size()) == size(),
          "form: coefficient count must equal binomial(n, k)");
  return c;
}

Mat KForm::partials(const ChartPoint& p, double h) const {
  require(p.size() == dim_, "form: point dimension mismatch");
  if (partials_) return partials_(p);
  return central_partials(coeffs_, p, h);
}

double KForm::coeff(const ChartPoint& p, const MultiIndex& I) const {
  require(static_cast<int>(I.size()) == degree_, "multi-index length must equal degree");
  return coeffs(p)[static_cast<Eigen::Index>(index_of(dim_, I))];
}

KForm KForm::with_contraction(std::shared_ptr<const Contraction> c) const {
  KForm out = *this;
  out.contraction_ = std::move(c);
  return out;
}

KForm KForm::zero(int dim, int degree) {
  return constant(dim, degree, Vec::Zero(static_cast<Eigen::Index>(binomial(dim, degree))));
}

KForm KForm::constant(int dim, int degree, Vec coeffs) {
  require(static_cast<std::size_t>(coeffs.size()) == binomial(dim, degree),
          "constant form: wrong coefficient count");
  const Mat zero = Mat::Zero(coeffs.size(), dim);
  return KForm(
      dim, degree, [coeffs](const ChartPoint&) { return coeffs; },
      [zero](const ChartPoint&) { return zero; });
}

KForm KForm::basis(int dim, const MultiIndex& I) {
  Vec c = Vec::Zero(static_cast<Eigen::Index>(binomial(dim, static_cast<int>(I.size()))));
  c[static_cast<Eigen::Index>(index_of(dim, I))] = 1.0;
  return constant(dim, static_cast<int>(I.size()), c);
}

KForm KForm::from_function(const ScalarField& f) {
  KForm::PartialsFn partials;
  if (f.has_gradient()) {
    partials = [f](const ChartPoint& p) -> Mat { return f.gradient(p).transpose(); };
  }
  return KForm(
      f.dim(), 0,
      [f](const ChartPoint& p) {
        Vec v(1);
        v[0] = f(p);
        return v;
      },
      partials);
}

namespace {

// Lexicographic comparison of two columns.
bool column_less(const Mat& V, Eigen::Index a, Eigen::Index b) {
  for (Eigen::Index r = 0; r < V.rows(); ++r) {
    if (V(r, a) != V(r, b)) return V(r, a) < V(r, b);
  }
  return false;
}

bool column_equal(const Mat& V, Eigen::Index a, Eigen::Index b) {
  return !column_less(V, a, b) && !column_less(V, b, a);
}

}  // namespace

namespace {

// Sum_I c_I det(V[I, :]) with the columns of V sorted into a canonical order
// first, so a transposition of the inputs negates the result bit-exactly.
double contract(const Vec& c, int n, const Mat& vectors) {
  const auto k = static_cast<int>(vectors.cols());
  if (k == 0) return c[0];
  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return column_less(vectors, a, b); });
  for (int j = 1; j < k; ++j) {
    if (column_equal(vectors, order[j - 1], order[j])) return 0.0;
  }
  int inversions = 0;
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      if (order[i] > order[j]) ++inversions;
    }
  }
  Mat sorted(vectors.rows(), k);
  for (int j = 0; j < k; ++j) sorted.col(j) = vectors.col(order[j]);

  const auto& indices = multi_indices(n, k);
  Mat block(k, k);
  double sum = 0.0;
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const double cr = c[static_cast<Eigen::Index>(r)];
    if (cr == 0.0) continue;
    for (int i = 0; i < k; ++i) block.row(i) = sorted.row(indices[r][i]);
    sum += cr * block.determinant();
  }
  return inversions % 2 == 0 ? sum : -sum;
}

}  // namespace

double eval_form(const KForm& w, const ChartPoint& p, const Mat& vectors) {
  require(vectors.rows() == w.dim(), "eval_form: vector dimension mismatch");
  require(vectors.cols() == w.degree(), "eval_form: number of vectors must equal degree");
  return contract(w.coeffs(p), w.dim(), vectors);
}

double eval_form(const KForm& w, const ChartPoint& p, std::span<const Vec> vectors) {
  Mat V(w.dim(), static_cast<Eigen::Index>(vectors.size()));
  for (std::size_t j = 0; j < vectors.size(); ++j) {
    require(vectors[j].size() == w.dim(), "eval_form: vector dimension mismatch");
    V.col(static_cast<Eigen::Index>(j)) = vectors[j];
  }
  return eval_form(w, p, V);
}

KForm add(const KForm& a, const KForm& b) {
  require(a.dim() == b.dim() && a.degree() == b.degree(),
          "add: forms must share dimension and degree");
  KForm::PartialsFn partials;
  if (a.has_partials() && b.has_partials()) {
    partials = [a, b](const ChartPoint& p) -> Mat { return a.partials(p) + b.partials(p); };
  }
  return KForm(
      a.dim(), a.degree(),
      [a, b](const ChartPoint& p) -> Vec { return a.coeffs(p) + b.coeffs(p); }, partials);
}

KForm scale(double c, const KForm& w) {
  KForm::PartialsFn partials;
  if (w.has_partials()) {
    partials = [c, w](const ChartPoint& p) -> Mat { return c * w.partials(p); };
  }
  return KForm(
      w.dim(), w.degree(), [c, w](const ChartPoint& p) -> Vec { return c * w.coeffs(p); },
      partials);
}

KForm scale(const ScalarField& f, const KForm& w) {
  require(f.dim() == w.dim(), "scale: dimension mismatch");
  KForm::PartialsFn partials;
  if (f.has_gradient() && w.has_partials()) {
    partials = [f, w](const ChartPoint& p) -> Mat {
      return f(p) * w.partials(p) + w.coeffs(p) * f.gradient(p).transpose();
    };
  }
  return KForm(
      w.dim(), w.degree(), [f, w](const ChartPoint& p) -> Vec { return f(p) * w.coeffs(p); },
      partials);
}

namespace {

struct Term {
  Eigen::Index target;
  Eigen::Index left;   // first source coefficient (or coordinate)
  Eigen::Index right;  // second source coefficient
  double sign;
};

std::vector<Term> wedge_terms(int n, int p, int q) {
  std::vector<Term> terms;
  const auto& left = multi_indices(n, p);
  const auto& right = multi_indices(n, q);
  for (std::size_t i = 0; i < left.size(); ++i) {
    const std::size_t lmask = mask_of(left[i]);
    for (std::size_t j = 0; j < right.size(); ++j) {
      if (lmask & mask_of(right[j])) continue;
      MultiIndex K;
      std::merge(left[i].begin(), left[i].end(), right[j].begin(), right[j].end(),
                 std::back_inserter(K));
      terms.push_back({static_cast<Eigen::Index>(index_of(n, K)),
                       static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j),
                       static_cast<double>(merge_sign(left[i], right[j]))});
    }
  }
  return terms;
}

}  // namespace

KForm wedge(const KForm& a, const KForm& b) {
  require(a.dim() == b.dim(), "wedge: dimension mismatch");
  require(a.degree() + b.degree() <= a.dim(), "wedge: degree overflow");
  const int n = a.dim();
  const int k = a.degree() + b.degree();
  const auto terms = std::make_shared<const std::vector<Term>>(
      wedge_terms(n, a.degree(), b.degree()));
  const auto out_size = static_cast<Eigen::Index>(binomial(n, k));

  KForm::PartialsFn partials;
  if (a.has_partials() && b.has_partials()) {
    partials = [a, b, terms, out_size, n](const ChartPoint& p) -> Mat {
      const Vec ca = a.coeffs(p);
      const Vec cb = b.coeffs(p);
      const Mat pa = a.partials(p);
      const Mat pb = b.partials(p);
      Mat out = Mat::Zero(out_size, n);
      for (const auto& t : *terms) {
        out.row(t.target) +=
            t.sign * (pa.row(t.left) * cb[t.right] + ca[t.left] * pb.row(t.right));
      }
      return out;
    };
  }
  return KForm(
      n, k,
      [a, b, terms, out_size](const ChartPoint& p) -> Vec {
        const Vec ca = a.coeffs(p);
        const Vec cb = b.coeffs(p);
        Vec out = Vec::Zero(out_size);
        for (const auto& t : *terms) out[t.target] += t.sign * ca[t.left] * cb[t.right];
        return out;
      },
      partials);
}

KForm wedge_power(const KForm& w, int n) {
  require(n >= 0, "wedge_power: exponent must be non-negative");
  if (n == 0) {
    Vec one(1);
    one[0] = 1.0;
    return KForm::constant(w.dim(), 0, one);
  }
  KForm result = w;
  for (int i = 1; i < n; ++i) result = wedge(result, w);
  return result;
}

KForm exterior_derivative(const KForm& w, double h) {
  const int n = w.dim();
  const int k = w.degree();
  require(k < n, "exterior_derivative: degree must be below the dimension");
  require(h > 0.0, "exterior_derivative: step must be positive");

  // (dw)_K = sum_m (-1)^m d_{K_m} w_{K \ K_m}
  auto terms = std::make_shared<std::vector<Term>>();
  const auto& targets = multi_indices(n, k + 1);
  for (std::size_t r = 0; r < targets.size(); ++r) {
    const MultiIndex& K = targets[r];
    for (int m = 0; m <= k; ++m) {
      MultiIndex rest;
      for (int j = 0; j <= k; ++j) {
        if (j != m) rest.push_back(K[j]);
      }
      terms->push_back({static_cast<Eigen::Index>(r), K[m],
                        static_cast<Eigen::Index>(index_of(n, rest)), m % 2 == 0 ? 1.0 : -1.0});
    }
  }
  const auto out_size = static_cast<Eigen::Index>(targets.size());
  std::shared_ptr<const std::vector<Term>> shared = terms;

  // With analytic first partials, second partials are one central difference
  // of those, so d(dw) is not a difference of differences.
  KForm::PartialsFn partials;
  if (w.has_partials()) {
    partials = [w, h, shared, out_size, n](const ChartPoint& p) -> Mat {
      Mat out = Mat::Zero(out_size, n);
      ChartPoint q = p;
      for (int j = 0; j < n; ++j) {
        const double x = p[j];
        q[j] = x + h;
        const Mat p1 = w.partials(q);
        q[j] = x - h;
        const Mat m1 = w.partials(q);
        q[j] = x + 2.0 * h;
        const Mat p2 = w.partials(q);
        q[j] = x - 2.0 * h;
        const Mat m2 = w.partials(q);
        q[j] = x;
        const Mat dj = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
        for (const auto& t : *shared) out(t.target, j) += t.sign * dj(t.right, t.left);
      }
      return out;
    };
  }
  return KForm(
      n, k + 1,
      [w, h, shared, out_size](const ChartPoint& p) -> Vec {
        const Mat d = w.partials(p, h);
        Vec out = Vec::Zero(out_size);
        for (const auto& t : *shared) out[t.target] += t.sign * d(t.right, t.left);
        return out;
      },
      std::move(partials));
}

KForm differential(const ScalarField& f) {
  return exterior_derivative(KForm::from_function(f));
}

KForm interior_product(const VectorField& X, const KForm& w) {
  require(X.dim() == w.dim(), "interior_product: dimension mismatch");
  require(w.degree() >= 1, "interior_product: degree must be at least 1");
  const int n = w.dim();
  const int k = w.degree();

  // (i_X w)_J = sum_{i not in J} X^i sign(i, J) w_{sort(i u J)}
  auto terms = std::make_shared<std::vector<Term>>();
  const auto& targets = multi_indices(n, k - 1);
  for (std::size_t r = 0; r < targets.size(); ++r) {
    const MultiIndex& J = targets[r];
    const std::size_t jmask = mask_of(J);
    for (int i = 0; i < n; ++i) {
      if (jmask & (std::size_t{1} << i)) continue;
      MultiIndex K;
      const MultiIndex single{i};
      std::merge(single.begin(), single.end(), J.begin(), J.end(), std::back_inserter(K));
      terms->push_back({static_cast<Eigen::Index>(r), i,
                        static_cast<Eigen::Index>(index_of(n, K)),
                        static_cast<double>(merge_sign(single, J))});
    }
  }
  const auto out_size = static_cast<Eigen::Index>(targets.size());
  std::shared_ptr<const std::vector<Term>> shared = terms;

  KForm::PartialsFn partials;
  if (X.has_jacobian() && w.has_partials()) {
    partials = [X, w, shared, out_size, n](const ChartPoint& p) -> Mat {
      const Vec x = X(p);
      const Mat jx = X.jacobian(p);
      const Vec c = w.coeffs(p);
      const Mat dc = w.partials(p);
      Mat out = Mat::Zero(out_size, n);
      for (const auto& t : *shared) {
        out.row(t.target) += t.sign * (jx.row(t.left) * c[t.right] + x[t.left] * dc.row(t.right));
      }
      return out;
    };
  }
  auto record = std::make_shared<KForm::Contraction>(
      w.contraction() ? *w.contraction() : KForm::Contraction{w, {}});
  record->fields.push_back(X);
  if (record->fields.size() == 1) {
    return KForm(
               n, k - 1,
               [X, w, shared, out_size](const ChartPoint& p) -> Vec {
                 const Vec x = X(p);
                 const Vec c = w.coeffs(p);
                 Vec out = Vec::Zero(out_size);
                 for (const auto& t : *shared) out[t.target] += t.sign * x[t.left] * c[t.right];
                 return out;
               },
               partials)
        .with_contraction(std::move(record));
  }
  // Nested contractions feed all fields to the base form at once, so
  // repeated fields give duplicate columns and an exact zero.
  std::shared_ptr<const KForm::Contraction> rec = std::move(record);
  return KForm(
             n, k - 1,
             [rec, out_size, n, k](const ChartPoint& p) -> Vec {
               const Vec c = rec->base.coeffs(p);
               const auto m = static_cast<Eigen::Index>(rec->fields.size());
               Mat V(n, m + k - 1);
               for (Eigen::Index j = 0; j < m; ++j) {
                 V.col(j) = rec->fields[static_cast<std::size_t>(j)](p);
               }
               const auto& targets = multi_indices(n, k - 1);
               Vec out(out_size);
               for (std::size_t r = 0; r < targets.size(); ++r) {
                 for (int j = 0; j < k - 1; ++j) {
                   V.col(m + j) = Vec::Unit(n, targets[r][static_cast<std::size_t>(j)]);
                 }
                 // i_{Xm} .. i_{X1} w (v) = w(X1, .., Xm, v)
                 out[static_cast<Eigen::Index>(r)] = contract(c, n, V);
               }
               return out;
             },
             partials)
      .with_contraction(rec);
}

KForm pullback(const Diffeo& phi, const KForm& w) {
  require(phi.dim() == w.dim(), "pullback: dimension mismatch");
  const int n = w.dim();
  const int k = w.degree();
  const auto out_size = static_cast<Eigen::Index>(binomial(n, k));
  return KForm(n, k, [phi, w, n, k, out_size](const ChartPoint& p) -> Vec {
    const ChartPoint q = phi(p);
    const Vec c = w.coeffs(q);
    if (k == 0) return c;
    const Mat J = phi.jacobian(p);
    const auto& indices = multi_indices(n, k);
    Vec out = Vec::Zero(out_size);
    Mat block(k, k);
    for (std::size_t src = 0; src < indices.size(); ++src) {
      const double cs = c[static_cast<Eigen::Index>(src)];
      if (cs == 0.0) continue;
      for (std::size_t dst = 0; dst < indices.size(); ++dst) {
        for (int i = 0; i < k; ++i) {
          for (int j = 0; j < k; ++j) block(i, j) = J(indices[src][i], indices[dst][j]);
        }
        out[static_cast<Eigen::Index>(dst)] += cs * block.determinant();
      }
    }
    return out;
  });
}

VectorField pushforward(const Diffeo& phi, const VectorField& X) {
  require(phi.dim() == X.dim(), "pushforward: dimension mismatch");
  if (!phi.has_inverse()) {
    throw UnsupportedOperation("pushforward requires the inverse map");
  }
  return VectorField(X.dim(), [phi, X](const ChartPoint& q) -> Vec {
    const ChartPoint p = phi.inverse(q);
    return phi.jacobian(p) * X(p);
  });
}

KForm lie_derivative_form(const VectorField& X, const KForm& w, double h) {
  require(X.dim() == w.dim(), "lie_derivative_form: dimension mismatch");
  const int n = w.dim();
  const int k = w.degree();
  if (k == 0) return interior_product(X, exterior_derivative(w, h));
  const KForm d_of_contraction = exterior_derivative(interior_product(X, w), h);
  if (k == n) return d_of_contraction;  // dw = 0 for top-degree forms
  return add(interior_product(X, exterior_derivative(w, h)), d_of_contraction);
}

// ---------------------------------------------------------------------------
// Metrics

MetricEval::MetricEval(int dim, EvalFn eval, double eps_pd)
    : dim_(dim), eval_(std::move(eval)), eps_pd_(eps_pd) {
  require_dim(dim);
  require(static_cast<bool>(eval_), "metric needs an evaluator");
}

Mat MetricEval::operator()(const ChartPoint& p) const {
  require(p.size() == dim_, "metric: point dimension mismatch");
  Mat g = eval_(p);
  require(g.rows() == dim_ && g.cols() == dim_, "metric: evaluator returned wrong shape");
  const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
  require((g - g.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale, "metric: not symmetric");
  const Eigen::SelfAdjointEigenSolver<Mat> eig(g, Eigen::EigenvaluesOnly);
  require(eig.eigenvalues()[0] > eps_pd_, "metric: not positive definite");
  return g;
}

double MetricEval::inner(const ChartPoint& p, const Vec& v, const Vec& w) const {
  return v.dot((*this)(p) * w);
}

double MetricEval::norm(const ChartPoint& p, const Vec& v) const {
  return std::sqrt(std::max(0.0, inner(p, v, v)));
}

Mat MetricEval::partial(const ChartPoint& p, int k, double h) const {
  require(k >= 0 && k < dim_, "metric partial: coordinate out of range");
  require(h > 0.0, "metric partial: step must be positive");
  ChartPoint q = p;
  const double x = p[k];
  q[k] = x + 2 * h;
  const Mat gp2 = (*this)(q);
  q[k] = x + h;
  const Mat gp1 = (*this)(q);
  q[k] = x - h;
  const Mat gm1 = (*this)(q);
  q[k] = x - 2 * h;
  const Mat gm2 = (*this)(q);
  return (-gp2 + 8.0 * gp1 - 8.0 * gm1 + gm2) / (12.0 * h);
}

double MetricEval::min_eigenvalue(const ChartPoint& p) const {
  const Mat g = eval_(p);  // unchecked, so indefinite metrics report a negative value
  Eigen::SelfAdjointEigenSolver<Mat> solver(g, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

MetricEval MetricEval::euclidean(int dim) {
  return MetricEval(dim, [dim](const ChartPoint&) { return Mat::Identity(dim, dim).eval(); });
}

Mat lie_derivative_metric(const VectorField& X, const MetricEval& g, const ChartPoint& p,
                          double h) {
  require(X.dim() == g.dim(), "lie_derivative_metric: dimension mismatch");
  const Vec x = X(p);
  const Mat J = X.jacobian(p, h);
  const Mat G = g(p);
  Mat out = J.transpose() * G + G * J;
  for (int k = 0; k < g.dim(); ++k) {
    if (x[k] != 0.0) out += x[k] * g.partial(p, k, h);
  }
  return out;
}

TangentBasis full_chart_basis(int dim) {
  return [dim](const ChartPoint&) { return Mat::Identity(dim, dim).eval(); };
}

Vec restricted_coeffs(const KForm& w, const ChartPoint& p, const Mat& E) {
  require(E.rows() == w.dim(), "restricted_coeffs: basis dimension mismatch");
  const int m = static_cast<int>(E.cols());
  const int k = w.degree();
  require(k <= m, "restricted_coeffs: degree exceeds tangent dimension");
  const auto& indices = multi_indices(m, k);
  Vec out(static_cast<Eigen::Index>(indices.size()));
  const Vec c = w.coeffs(p);
  Mat V(E.rows(), k);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    for (int j = 0; j < k; ++j) V.col(j) = E.col(indices[r][j]);
    out[static_cast<Eigen::Index>(r)] = contract(c, w.dim(), V);
  }
  return out;
}

namespace {

// Component r is sum_m amp(r, m) sin(freq_{r,m} . p + phase(r, m)).
struct TrigBank {
  int dim = 0;
  int terms = 0;
  Mat amp;                  // components x terms
  Mat phase;                // components x terms
  std::vector<Mat> freq;    // per component: terms x dim

  TrigBank(int dim_, Eigen::Index components, int terms_, SplitMix64& rng)
      : dim(dim_), terms(terms_), amp(components, terms_), phase(components, terms_) {
    for (Eigen::Index r = 0; r < components; ++r) {
      Mat f(terms, dim);
      for (int m = 0; m < terms; ++m) {
        amp(r, m) = rng.uniform(-1.0, 1.0);
        phase(r, m) = rng.uniform(0.0, 6.283185307179586);
        for (int j = 0; j < dim; ++j) f(m, j) = rng.uniform(-1.5, 1.5);
      }
      freq.push_back(f);
    }
  }

  Vec values(const ChartPoint& p) const {
    Vec out(amp.rows());
    for (Eigen::Index r = 0; r < amp.rows(); ++r) {
      const Vec arg = freq[static_cast<std::size_t>(r)] * p + phase.row(r).transpose();
      out[r] = amp.row(r).dot(arg.array().sin().matrix());
    }
    return out;
  }

  Mat partials(const ChartPoint& p) const {
    Mat out(amp.rows(), dim);
    for (Eigen::Index r = 0; r < amp.rows(); ++r) {
      const Mat& f = freq[static_cast<std::size_t>(r)];
      const Vec arg = f * p + phase.row(r).transpose();
      const Vec weights = amp.row(r).transpose().cwiseProduct(arg.array().cos().matrix());
      out.row(r) = weights.transpose() * f;
    }
    return out;
  }
};

}  // namespace

KForm random_trig_form(int dim, int degree, SplitMix64& rng, int terms) {
  require(dim >= 1 && dim <= kMaxDim, "random_trig_form: bad dimension");
  require(degree >= 0 && degree <= dim, "random_trig_form: bad degree");
  require(terms >= 1, "random_trig_form: need at least one term");
  const auto bank = std::make_shared<const TrigBank>(
      dim, static_cast<Eigen::Index>(binomial(dim, degree)), terms, rng);
  return KForm(
      dim, degree, [bank](const ChartPoint& p) { return bank->values(p); },
      [bank](const ChartPoint& p) { return bank->partials(p); });
}

VectorField random_trig_field(int dim, SplitMix64& rng, int terms) {
  require(dim >= 1 && dim <= kMaxDim, "random_trig_field: bad dimension");
  require(terms >= 1, "random_trig_field: need at least one term");
  const auto bank = std::make_shared<const TrigBank>(dim, dim, terms, rng);
  return VectorField(
      dim, [bank](const ChartPoint& p) { return bank->values(p); },
      [bank](const ChartPoint& p) { return bank->partials(p); });
}

}  // namespace eulerlab
