#pragma once

#include "rolnn/mlp.hpp"

namespace rolnn::net {

using diff::MatFuncTag;

enum class SpdLayerKind { GyroAI, GyroSpdPP, ReEig };

struct SpdLayer {
  SpdLayerKind kind;
  Mat a;  // SPD weight (gyro layers)
  Mat b;  // SPD bias (gyro layers)
  double eps = 1e-4;  // ReEig rectification threshold
};

/// Mass-inertia network: Euclidean head onto the tangent space, exponential
/// map layer, then a stack of SPD-to-SPD layers.
struct SPDNetParams {
  MLPParams head;  // R^n -> R^{m(m+1)/2}
  int dim = 0;     // m
  bool learned_basepoint = false;
  Mat basepoint;   // identity when not learned
  std::vector<SpdLayer> layers;
};

SPDNetParams spdnet_init(int in_dim, int mass_dim, const std::vector<int>& hidden,
                         bool learned_basepoint, const std::vector<SpdLayerKind>& layers,
                         std::mt19937_64& rng, double reeig_eps = 1e-4);

/// DeLaN-style baseline: Euclidean net predicting a Cholesky factor, with
/// SoftPlus-positive diagonal and shift delta.
struct CholeskyHeadParams {
  MLPParams mlp;  // R^n -> R^{m(m+1)/2}, packed lower triangle
  int dim = 0;
  double delta = 1e-6;
};

CholeskyHeadParams cholesky_init(int in_dim, int mass_dim, const std::vector<int>& hidden,
                                 std::mt19937_64& rng);

/// Shared-parameter DeLaN: one activated trunk, two linear output heads.
struct SharedTrunkParams {
  MLPParams trunk;  // activated output
  Mat head_l;
  Vec head_lb;
  Mat head_v;
  Vec head_vb;
  int dim = 0;
  double delta = 1e-6;
};

SharedTrunkParams shared_trunk_init(int in_dim, int mass_dim, const std::vector<int>& hidden,
                                    std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Bound forms and forward programs
// ---------------------------------------------------------------------------

template <class E>
struct BoundSpdLayer {
  SpdLayerKind kind;
  typename E::M a, b;
  typename E::M b_isqrt;  // B^-1/2, GyroSpdPP only
  double eps = 1e-4;
};

template <class E>
struct BoundSPDNet {
  BoundMLP<E> head;
  int dim = 0;
  bool learned_basepoint = false;
  typename E::M bp_sqrt, bp_isqrt;  // set when learned_basepoint
  std::vector<BoundSpdLayer<E>> layers;
};

namespace detail {
inline Mat gyro_iv(int n) {
  Mat iv = Mat::Constant(n, n, 1.0 / std::sqrt(2.0));
  iv.diagonal().setOnes();
  return iv;
}
}  // namespace detail

template <class E>
BoundSPDNet<E> bind_spdnet(const E& e, const SPDNetParams& p) {
  BoundSPDNet<E> out;
  out.head = bind_mlp(e, p.head);
  out.dim = p.dim;
  out.learned_basepoint = p.learned_basepoint;
  if (p.learned_basepoint) {
    typename E::M bp = e.lift(p.basepoint);
    out.bp_sqrt = e.sym_matfunc(MatFuncTag::Sqrt, bp);
    out.bp_isqrt = e.solve_lu(out.bp_sqrt, e.identity(p.dim));
  }
  for (const auto& l : p.layers) {
    BoundSpdLayer<E> bl;
    bl.kind = l.kind;
    bl.eps = l.eps;
    if (l.kind != SpdLayerKind::ReEig) {
      bl.a = e.lift(l.a);
      bl.b = e.lift(l.b);
      if (l.kind == SpdLayerKind::GyroSpdPP)
        bl.b_isqrt = e.sym_matfunc(MatFuncTag::Sqrt, e.solve_lu(bl.b, e.identity(p.dim)));
    }
    out.layers.push_back(std::move(bl));
  }
  return out;
}

/// Lifts bound SPD-net parameters from pre-registered leaves; `next` yields
/// the leaf for each SPD parameter in layer order (basepoint first if
/// learned, then per gyro layer A, B).
// (binding from ProductPoint leaves is handled by the model containers)

template <class E>
typename E::M spd_layer_forward(const E& e, const BoundSpdLayer<E>& l, typename E::M x) {
  using M = typename E::M;
  const int n = static_cast<int>(e.value(x).rows());
  switch (l.kind) {
    case SpdLayerKind::GyroAI: {
      M lg = e.sym_matfunc(MatFuncTag::Log, x);
      M xp = e.sym_matfunc(MatFuncTag::Exp, e.hadamard(l.a, lg));
      M s = e.sym_matfunc(MatFuncTag::Sqrt, xp);
      return e.matmul(s, e.matmul(l.b, s));
    }
    case SpdLayerKind::GyroSpdPP: {
      M y = e.matmul(l.b_isqrt, e.matmul(x, l.b_isqrt));
      M v = e.hadamard(e.sym_matfunc(MatFuncTag::Log, y), l.a);
      M iv = e.lift(detail::gyro_iv(n));
      return e.sym_matfunc(MatFuncTag::Exp, e.hadamard(v, iv));
    }
    case SpdLayerKind::ReEig:
      return e.sym_matfunc(MatFuncTag::ClampMin, x, l.eps);
  }
  throw num::DomainError("spd_layer_forward: unknown layer kind");
}

template <class E>
std::pair<typename E::M, std::vector<typename E::M>> spd_layer_with_jvp(
    const E& e, const BoundSpdLayer<E>& l, typename E::M x,
    const std::vector<typename E::M>& tx) {
  using M = typename E::M;
  const int n = static_cast<int>(e.value(x).rows());
  std::vector<M> tout;
  tout.reserve(tx.size());
  switch (l.kind) {
    case SpdLayerKind::GyroAI: {
      M lg = e.sym_matfunc(MatFuncTag::Log, x);
      M h = e.hadamard(l.a, lg);
      M xp = e.sym_matfunc(MatFuncTag::Exp, h);
      M s = e.sym_matfunc(MatFuncTag::Sqrt, xp);
      M out = e.matmul(s, e.matmul(l.b, s));
      for (const M& t : tx) {
        M dl = e.dsym_matfunc(MatFuncTag::Log, x, t);
        M dxp = e.dsym_matfunc(MatFuncTag::Exp, h, e.hadamard(l.a, dl));
        M ds = e.dsym_matfunc(MatFuncTag::Sqrt, xp, dxp);
        tout.push_back(e.add(e.matmul(ds, e.matmul(l.b, s)), e.matmul(s, e.matmul(l.b, ds))));
      }
      return {out, tout};
    }
    case SpdLayerKind::GyroSpdPP: {
      M y = e.matmul(l.b_isqrt, e.matmul(x, l.b_isqrt));
      M lg = e.sym_matfunc(MatFuncTag::Log, y);
      M iv = e.lift(detail::gyro_iv(n));
      M viv = e.hadamard(e.hadamard(lg, l.a), iv);
      M out = e.sym_matfunc(MatFuncTag::Exp, viv);
      for (const M& t : tx) {
        M dy = e.matmul(l.b_isqrt, e.matmul(t, l.b_isqrt));
        M dv = e.hadamard(e.hadamard(e.dsym_matfunc(MatFuncTag::Log, y, dy), l.a), iv);
        tout.push_back(e.dsym_matfunc(MatFuncTag::Exp, viv, dv));
      }
      return {out, tout};
    }
    case SpdLayerKind::ReEig: {
      M out = e.sym_matfunc(MatFuncTag::ClampMin, x, l.eps);
      for (const M& t : tx) tout.push_back(e.dsym_matfunc(MatFuncTag::ClampMin, x, t, l.eps));
      return {out, tout};
    }
  }
  throw num::DomainError("spd_layer_with_jvp: unknown layer kind");
}

/// M(q) = (g_SPD o g_Exp o g_R)(q)
template <class E>
typename E::M spdnet_mass(const E& e, const BoundSPDNet<E>& p, typename E::M q) {
  using M = typename E::M;
  M u = e.sym_from_tri(mlp_forward(e, p.head, q), p.dim);
  M x;
  if (p.learned_basepoint) {
    M ut = e.matmul(p.bp_isqrt, e.matmul(u, p.bp_isqrt));
    x = e.matmul(p.bp_sqrt, e.matmul(e.sym_matfunc(MatFuncTag::Exp, ut), p.bp_sqrt));
  } else {
    x = e.sym_matfunc(MatFuncTag::Exp, u);
  }
  for (const auto& l : p.layers) x = spd_layer_forward(e, l, x);
  return x;
}

/// M(q) together with dM/dq_k for every input coordinate.
template <class E>
std::pair<typename E::M, std::vector<typename E::M>> spdnet_mass_with_dq(
    const E& e, const BoundSPDNet<E>& p, typename E::M q) {
  using M = typename E::M;
  const int nin = static_cast<int>(e.value(q).rows());
  auto [v, jac] = mlp_with_jacobian(e, p.head, q);
  M u = e.sym_from_tri(v, p.dim);
  std::vector<M> tang;
  tang.reserve(nin);
  for (int k = 0; k < nin; ++k) {
    Mat ek = Mat::Zero(nin, 1);
    ek(k, 0) = 1.0;
    tang.push_back(e.sym_from_tri(e.matmul(jac, e.lift(ek)), p.dim));
  }
  M x;
  if (p.learned_basepoint) {
    M ut = e.matmul(p.bp_isqrt, e.matmul(u, p.bp_isqrt));
    M ex = e.sym_matfunc(MatFuncTag::Exp, ut);
    x = e.matmul(p.bp_sqrt, e.matmul(ex, p.bp_sqrt));
    for (int k = 0; k < nin; ++k) {
      M dt = e.matmul(p.bp_isqrt, e.matmul(tang[k], p.bp_isqrt));
      M dex = e.dsym_matfunc(MatFuncTag::Exp, ut, dt);
      tang[k] = e.matmul(p.bp_sqrt, e.matmul(dex, p.bp_sqrt));
    }
  } else {
    x = e.sym_matfunc(MatFuncTag::Exp, u);
    for (int k = 0; k < nin; ++k) tang[k] = e.dsym_matfunc(MatFuncTag::Exp, u, tang[k]);
  }
  for (const auto& l : p.layers) {
    auto [nx, nt] = spd_layer_with_jvp(e, l, x, tang);
    x = nx;
    tang = nt;
  }
  return {x, tang};
}

// ---------------------------------------------------------------------------
// Cholesky baseline
// ---------------------------------------------------------------------------

template <class E>
struct BoundCholesky {
  BoundMLP<E> mlp;
  int dim = 0;
  double delta = 1e-6;
  typename E::M offdiag_mask;  // packed 0/1 vector, zero at diagonal slots
  typename E::M diag_select;   // m x tri selection of diagonal entries
};

namespace detail {
inline std::pair<Mat, Mat> cholesky_masks(int m) {
  const int tri = m * (m + 1) / 2;
  Mat mask = Mat::Ones(tri, 1);
  Mat sel = Mat::Zero(m, tri);
  int k = 0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) {
      if (i == j) {
        mask(k, 0) = 0.0;
        sel(i, k) = 1.0;
      }
      ++k;
    }
  return {mask, sel};
}
}  // namespace detail

template <class E>
BoundCholesky<E> bind_cholesky(const E& e, const CholeskyHeadParams& p) {
  BoundCholesky<E> out;
  out.mlp = bind_mlp(e, p.mlp);
  out.dim = p.dim;
  out.delta = p.delta;
  auto [mask, sel] = detail::cholesky_masks(p.dim);
  out.offdiag_mask = e.lift(mask);
  out.diag_select = e.lift(sel);
  return out;
}

/// Packed head output -> L with SoftPlus diagonal; shared by the plain and
/// shared-trunk baselines.
template <class E>
typename E::M cholesky_factor_from_packed(const E& e, const BoundCholesky<E>& p,
                                          typename E::M v) {
  using M = typename E::M;
  M diag = e.matmul(p.diag_select, v);
  M vfix = e.add(e.hadamard(p.offdiag_mask, v),
                 e.matmul(e.transpose(p.diag_select), e.cwise(CwiseTag::Softplus, diag)));
  return e.lower_from_tri(vfix, p.dim);
}

template <class E>
typename E::M cholesky_mass(const E& e, const BoundCholesky<E>& p, typename E::M q) {
  using M = typename E::M;
  M l = cholesky_factor_from_packed(e, p, mlp_forward(e, p.mlp, q));
  M m = e.matmul(l, e.transpose(l));
  return e.add(m, e.scale(e.identity(p.dim), p.delta));
}

template <class E>
std::pair<typename E::M, std::vector<typename E::M>> cholesky_mass_with_dq(
    const E& e, const BoundCholesky<E>& p, typename E::M q) {
  using M = typename E::M;
  const int nin = static_cast<int>(e.value(q).rows());
  auto [v, jac] = mlp_with_jacobian(e, p.mlp, q);
  M diag = e.matmul(p.diag_select, v);
  M sig = e.cwise(CwiseTag::Sigmoid, diag);
  M l = cholesky_factor_from_packed(e, p, v);
  M lt = e.transpose(l);
  M m = e.add(e.matmul(l, lt), e.scale(e.identity(p.dim), p.delta));
  std::vector<M> dm;
  dm.reserve(nin);
  for (int k = 0; k < nin; ++k) {
    Mat ek = Mat::Zero(nin, 1);
    ek(k, 0) = 1.0;
    M dv = e.matmul(jac, e.lift(ek));
    M dvfix = e.add(e.hadamard(p.offdiag_mask, dv),
                    e.matmul(e.transpose(p.diag_select),
                             e.hadamard(sig, e.matmul(p.diag_select, dv))));
    M dl = e.lower_from_tri(dvfix, p.dim);
    dm.push_back(e.add(e.matmul(dl, lt), e.matmul(l, e.transpose(dl))));
  }
  return {m, dm};
}

// ---------------------------------------------------------------------------
// Shared trunk (Cholesky + potential from one activated trunk)
// ---------------------------------------------------------------------------

template <class E>
struct BoundSharedTrunk {
  BoundMLP<E> trunk;
  typename E::M head_l, head_lb, head_v, head_vb;
  BoundCholesky<E> chol_helper;  // reuses masks and delta; mlp unused
};

template <class E>
BoundSharedTrunk<E> bind_shared(const E& e, const SharedTrunkParams& p) {
  BoundSharedTrunk<E> out;
  out.trunk = bind_mlp(e, p.trunk);
  out.head_l = e.lift(p.head_l);
  out.head_lb = e.lift(p.head_lb);
  out.head_v = e.lift(p.head_v);
  out.head_vb = e.lift(p.head_vb);
  out.chol_helper.dim = p.dim;
  out.chol_helper.delta = p.delta;
  auto [mask, sel] = detail::cholesky_masks(p.dim);
  out.chol_helper.offdiag_mask = e.lift(mask);
  out.chol_helper.diag_select = e.lift(sel);
  return out;
}

/// Mass matrix, its input derivatives, potential value and potential
/// gradient, all from the shared trunk.
template <class E>
struct SharedOutputs {
  typename E::M mass;
  std::vector<typename E::M> dmass;
  typename E::M potential;   // 1x1
  typename E::M grad_v;      // n x 1
};

template <class E>
SharedOutputs<E> shared_forward(const E& e, const BoundSharedTrunk<E>& p, typename E::M q,
                                bool with_derivs) {
  using M = typename E::M;
  SharedOutputs<E> out;
  const int nin = static_cast<int>(e.value(q).rows());
  const auto& ch = p.chol_helper;
  if (!with_derivs) {
    M t = mlp_forward(e, p.trunk, q);
    M v = e.add(e.matmul(p.head_l, t), p.head_lb);
    M l = cholesky_factor_from_packed(e, ch, v);
    out.mass = e.add(e.matmul(l, e.transpose(l)), e.scale(e.identity(ch.dim), ch.delta));
    out.potential = e.add(e.matmul(p.head_v, t), p.head_vb);
    return out;
  }
  auto [t, jt] = mlp_with_jacobian(e, p.trunk, q);
  M v = e.add(e.matmul(p.head_l, t), p.head_lb);
  M jv = e.matmul(p.head_l, jt);
  M diag = e.matmul(ch.diag_select, v);
  M sig = e.cwise(CwiseTag::Sigmoid, diag);
  M l = cholesky_factor_from_packed(e, ch, v);
  M lt = e.transpose(l);
  out.mass = e.add(e.matmul(l, lt), e.scale(e.identity(ch.dim), ch.delta));
  for (int k = 0; k < nin; ++k) {
    Mat ek = Mat::Zero(nin, 1);
    ek(k, 0) = 1.0;
    M dv = e.matmul(jv, e.lift(ek));
    M dvfix = e.add(e.hadamard(ch.offdiag_mask, dv),
                    e.matmul(e.transpose(ch.diag_select),
                             e.hadamard(sig, e.matmul(ch.diag_select, dv))));
    M dl = e.lower_from_tri(dvfix, ch.dim);
    out.dmass.push_back(e.add(e.matmul(dl, lt), e.matmul(l, e.transpose(dl))));
  }
  out.potential = e.add(e.matmul(p.head_v, t), p.head_vb);
  out.grad_v = e.transpose(e.matmul(p.head_v, jt));
  return out;
}

// ---------------------------------------------------------------------------
// Value-level layer operations (spec surface; thin ValueEngine wrappers)
// ---------------------------------------------------------------------------

Mat expmap_layer(const Mat& u, const Mat& basepoint);
Mat gyroai_forward(const Mat& x, const Mat& a, const Mat& b);
Mat gyrospdpp_forward(const Mat& x, const Mat& a, const Mat& b);
Mat reeig(const Mat& x, double eps);
Vec sym_to_tri(const Mat& s);
Mat sym_assemble(const Vec& v);

}  // namespace rolnn::net
