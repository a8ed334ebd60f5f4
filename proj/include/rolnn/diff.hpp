#pragma once

#include <functional>
#include <vector>

#include "rolnn/manifolds.hpp"
#include "rolnn/tape.hpp"

namespace rolnn::diff {

// ---------------------------------------------------------------------------
// Engines: the same forward programs run either on plain matrices or on the
// tape. Tape forward evaluates the identical Eigen expressions, so the value
// path is bit-identical with and without derivative tracking.
// ---------------------------------------------------------------------------

struct ValueEngine {
  using M = Mat;
  M lift(const Mat& m) const { return m; }
  const Mat& value(const M& m) const { return m; }
  M add(const M& a, const M& b) const { return a + b; }
  M sub(const M& a, const M& b) const { return a - b; }
  M neg(const M& a) const { return -a; }
  M scale(const M& a, double c) const { return c * a; }
  M add_k(const M& a, double c) const { return a.array() + c; }
  M matmul(const M& a, const M& b) const { return a * b; }
  M hadamard(const M& a, const M& b) const { return a.cwiseProduct(b); }
  M cdiv(const M& a, const M& b) const { return a.cwiseQuotient(b); }
  M colscale(const M& v, const M& m) const { return v.col(0).asDiagonal() * m; }
  M transpose(const M& a) const { return a.transpose(); }
  M cwise(CwiseTag t, const M& a) const {
    return a.unaryExpr([t](double x) { return detail::cwise_eval(t, x); });
  }
  M dot(const M& a, const M& b) const { return Mat::Constant(1, 1, a.cwiseProduct(b).sum()); }
  M sqnorm(const M& a) const { return Mat::Constant(1, 1, a.squaredNorm()); }
  M sum(const M& a) const { return Mat::Constant(1, 1, a.sum()); }
  M solve_llt(const M& a, const M& b) const {
    Eigen::LLT<Mat> llt(a);
    if (llt.info() != Eigen::Success)
      throw num::NumericalError("solve_llt: matrix not positive definite", 0.0);
    return llt.solve(b);
  }
  M solve_lu(const M& a, const M& b) const { return Eigen::PartialPivLU<Mat>(a).solve(b); }
  M sym_from_tri(const M& v, int n) const {
    Mat s(n, n);
    int k = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        s(i, j) = v(k, 0);
        s(j, i) = v(k, 0);
        ++k;
      }
    return s;
  }
  M lower_from_tri(const M& v, int n) const {
    Mat l = Mat::Zero(n, n);
    int k = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) l(i, j) = v(k++, 0);
    return l;
  }
  M sym_matfunc(MatFuncTag t, const M& a, double eps = 0.0) const {
    num::EigH e = num::sym_eig(0.5 * (a + a.transpose()));
    Vec fw(e.values.size());
    for (Eigen::Index i = 0; i < fw.size(); ++i) fw(i) = detail::mf_eval(t, eps, e.values(i));
    return e.vectors * fw.asDiagonal() * e.vectors.transpose();
  }
  M dsym_matfunc(MatFuncTag t, const M& a, const M& dir, double eps = 0.0) const {
    num::EigH e = num::sym_eig(0.5 * (a + a.transpose()));
    const Eigen::Index d = e.values.size();
    Mat et = e.vectors.transpose() * (0.5 * (dir + dir.transpose())) * e.vectors;
    Mat dd(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j)
        dd(i, j) = detail::divdiff1(t, eps, e.values(i), e.values(j));
    return e.vectors * dd.cwiseProduct(et) * e.vectors.transpose();
  }
  M identity(int n) const { return Mat::Identity(n, n); }
  M zero(int r, int c) const { return Mat::Zero(r, c); }
};

struct TapeEngine {
  Tape* tape;
  using M = MVar;
  M lift(const Mat& m) const { return {tape, tape->leaf(m)}; }
  const Mat& value(const M& m) const { return tape->val(m.i); }
  M add(M a, M b) const { return {tape, tape->add(a.i, b.i)}; }
  M sub(M a, M b) const { return {tape, tape->sub(a.i, b.i)}; }
  M neg(M a) const { return {tape, tape->neg(a.i)}; }
  M scale(M a, double c) const { return {tape, tape->scale(a.i, c)}; }
  M add_k(M a, double c) const { return {tape, tape->add_k(a.i, c)}; }
  M matmul(M a, M b) const { return {tape, tape->matmul(a.i, b.i)}; }
  M hadamard(M a, M b) const { return {tape, tape->hadamard(a.i, b.i)}; }
  M cdiv(M a, M b) const { return {tape, tape->cdiv(a.i, b.i)}; }
  M colscale(M v, M m) const { return {tape, tape->colscale(v.i, m.i)}; }
  M transpose(M a) const { return {tape, tape->transpose(a.i)}; }
  M cwise(CwiseTag t, M a) const { return {tape, tape->cwise(t, a.i)}; }
  M dot(M a, M b) const { return {tape, tape->dot(a.i, b.i)}; }
  M sqnorm(M a) const { return {tape, tape->sqnorm(a.i)}; }
  M sum(M a) const { return {tape, tape->sum(a.i)}; }
  M solve_llt(M a, M b) const { return {tape, tape->solve_llt(a.i, b.i)}; }
  M solve_lu(M a, M b) const { return {tape, tape->solve_lu(a.i, b.i)}; }
  M sym_from_tri(M v, int n) const { return {tape, tape->sym_from_tri(v.i, n)}; }
  M lower_from_tri(M v, int n) const { return {tape, tape->lower_from_tri(v.i, n)}; }
  M sym_matfunc(MatFuncTag t, M a, double eps = 0.0) const {
    return {tape, tape->sym_matfunc(t, a.i, eps)};
  }
  M dsym_matfunc(MatFuncTag t, M a, M dir, double eps = 0.0) const {
    return {tape, tape->dsym_matfunc(t, a.i, dir.i, eps)};
  }
  M identity(int n) const { return lift(Mat::Identity(n, n)); }
  M zero(int r, int c) const { return lift(Mat::Zero(r, c)); }
};

// ---------------------------------------------------------------------------
// Matrix functions as explicit programs (scaling-and-squaring series,
// Denman-Beavers, Gregory series). Usable with either engine; derivatives
// of any order follow from the engine's op rules.
// ---------------------------------------------------------------------------

/// exp of a symmetric matrix, truncated Taylor with scaling and squaring.
template <class E>
typename E::M expm_series(const E& e, const typename E::M& u) {
  const Mat& uv = e.value(u);
  const int n = static_cast<int>(uv.rows());
  int s = 0;
  double nrm = uv.template lpNorm<1>();
  while (nrm > 0.5 && s < 60) {
    nrm *= 0.5;
    ++s;
  }
  auto a = e.scale(u, std::pow(0.5, s));
  auto acc = e.identity(n);
  auto term = e.identity(n);
  for (int k = 1; k <= 13; ++k) {
    term = e.scale(e.matmul(a, term), 1.0 / k);
    acc = e.add(acc, term);
  }
  for (int k = 0; k < s; ++k) acc = e.matmul(acc, acc);
  return acc;
}

/// exp of a symmetric matrix together with directional derivatives along
/// the given symmetric tangents, by the paired series recurrence.
template <class E>
std::pair<typename E::M, std::vector<typename E::M>> expm_series_jvp(
    const E& e, const typename E::M& u, const std::vector<typename E::M>& dirs) {
  using M = typename E::M;
  const Mat& uv = e.value(u);
  const int n = static_cast<int>(uv.rows());
  int s = 0;
  double nrm = uv.template lpNorm<1>();
  while (nrm > 0.5 && s < 60) {
    nrm *= 0.5;
    ++s;
  }
  const double sc = std::pow(0.5, s);
  M a = e.scale(u, sc);
  std::vector<M> b;
  b.reserve(dirs.size());
  for (const M& d : dirs) b.push_back(e.scale(d, sc));

  M acc = e.identity(n);
  M term = e.identity(n);
  std::vector<M> dacc, dterm;
  for (size_t i = 0; i < dirs.size(); ++i) {
    dacc.push_back(e.zero(n, n));
    dterm.push_back(e.zero(n, n));
  }
  for (int k = 1; k <= 13; ++k) {
    for (size_t i = 0; i < dirs.size(); ++i) {
      dterm[i] = e.scale(e.add(e.matmul(b[i], term), e.matmul(a, dterm[i])), 1.0 / k);
      dacc[i] = e.add(dacc[i], dterm[i]);
    }
    term = e.scale(e.matmul(a, term), 1.0 / k);
    acc = e.add(acc, term);
  }
  for (int k = 0; k < s; ++k) {
    for (size_t i = 0; i < dirs.size(); ++i)
      dacc[i] = e.add(e.matmul(dacc[i], acc), e.matmul(acc, dacc[i]));
    acc = e.matmul(acc, acc);
  }
  return {acc, dacc};
}

/// Principal square root of an SPD matrix, Denman-Beavers iteration.
template <class E>
typename E::M sqrtm_db(const E& e, const typename E::M& s0) {
  using M = typename E::M;
  const int n = static_cast<int>(e.value(s0).rows());
  M y = s0;
  M z = e.identity(n);
  M id = e.identity(n);
  Mat prev = e.value(y);
  for (int it = 0; it < 60; ++it) {
    M zin = e.solve_lu(z, id);
    M yin = e.solve_lu(y, id);
    y = e.scale(e.add(y, zin), 0.5);
    z = e.scale(e.add(z, yin), 0.5);
    double delta = (e.value(y) - prev).norm();
    prev = e.value(y);
    if (delta < 1e-14 * (1.0 + prev.norm()) && it >= 2) break;
  }
  return y;
}

/// log of an SPD matrix: inverse scaling by square roots, then the Gregory
/// series 2 * sum G^(2j+1)/(2j+1) with G = (X+I)^-1 (X-I).
template <class E>
typename E::M logm_spd_series(const E& e, const typename E::M& s0) {
  using M = typename E::M;
  const int n = static_cast<int>(e.value(s0).rows());
  M id = e.identity(n);
  M x = s0;
  int k = 0;
  while ((e.value(x) - Mat::Identity(n, n)).template lpNorm<1>() > 0.25 && k < 50) {
    x = sqrtm_db(e, x);
    ++k;
  }
  M g = e.solve_llt(e.add(x, id), e.sub(x, id));
  M g2 = e.matmul(g, g);
  M pw = g;
  M acc = g;
  double gn = e.value(g).template lpNorm<1>();
  int terms = 3;
  if (gn > 1e-3) terms = 8;
  if (gn > 0.05) terms = 14;
  for (int j = 1; j <= terms; ++j) {
    pw = e.matmul(pw, g2);
    acc = e.add(acc, e.scale(pw, 1.0 / (2 * j + 1)));
  }
  return e.scale(acc, 2.0 * std::pow(2.0, k));
}

// ---------------------------------------------------------------------------
// Gradients of scalar losses over product-manifold parameters
// ---------------------------------------------------------------------------

/// Leaf handles for one product component on a tape (b unused except Biorth).
struct LeafPair {
  MVar a;
  MVar b;
};

using ProductLoss = std::function<MVar(TapeEngine&, const std::vector<LeafPair>&)>;

struct GradientResult {
  double value = 0.0;
  geo::ProductTangent grad;          // Riemannian / tangent-projected
  geo::ProductTangent ambient_grad;  // raw leaf adjoints
};

/// Evaluates the loss on a fresh tape at `at`, reverse-accumulates ambient
/// gradients and converts them per component. Throws TrainingDivergence on
/// non-finite loss or gradient.
GradientResult gradient(const ProductLoss& loss, const geo::ProductPoint& at);

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

struct FdReport {
  double max_rel_err = 0.0;
  int worst_index = -1;
};

/// Central differences with h = 1e-6 (1 + |x_i|); relative error scale is
/// max(1e-6, |fd|, |analytic|) per entry.
FdReport fd_check(const std::function<Vec(const Vec&)>& f, const Vec& x, const Mat& analytic);

/// Convenience for scalar fields.
FdReport fd_check_grad(const std::function<double(const Vec&)>& f, const Vec& x,
                       const Vec& analytic_grad);

/// Central-difference Jacobian (oracle helper for tests).
Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x);

// ---------------------------------------------------------------------------
// Analytic input-derivative interface
// ---------------------------------------------------------------------------

/// A vector function exposing analytic input derivatives.
struct DiffFunction {
  virtual ~DiffFunction() = default;
  virtual int in_dim() const = 0;
  virtual int out_dim() const = 0;
  virtual Vec value(const Vec& x) const = 0;
  virtual Mat jacobian(const Vec& x) const = 0;
  /// (d^2 f / dx^2)[v, v]
  virtual Vec hessian_contract(const Vec& x, const Vec& v) const = 0;
};

inline Mat input_jacobian(const DiffFunction& f, const Vec& x) { return f.jacobian(x); }
inline Vec input_hessian_contract(const DiffFunction& f, const Vec& x, const Vec& v) {
  return f.hessian_contract(x, v);
}

struct IdentityFunction : DiffFunction {
  int n;
  explicit IdentityFunction(int dim) : n(dim) {}
  int in_dim() const override { return n; }
  int out_dim() const override { return n; }
  Vec value(const Vec& x) const override { return x; }
  Mat jacobian(const Vec&) const override { return Mat::Identity(n, n); }
  Vec hessian_contract(const Vec&, const Vec&) const override { return Vec::Zero(n); }
};

struct LinearFunction : DiffFunction {
  Mat a;
  explicit LinearFunction(Mat m) : a(std::move(m)) {}
  int in_dim() const override { return static_cast<int>(a.cols()); }
  int out_dim() const override { return static_cast<int>(a.rows()); }
  Vec value(const Vec& x) const override { return a * x; }
  Mat jacobian(const Vec&) const override { return a; }
  Vec hessian_contract(const Vec&, const Vec&) const override { return Vec::Zero(a.rows()); }
};

}  // namespace rolnn::diff
