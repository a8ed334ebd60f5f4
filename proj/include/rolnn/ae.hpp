#pragma once

#include "rolnn/manifolds.hpp"
#include "rolnn/mlp.hpp"

namespace rolnn::net {

// ---------------------------------------------------------------------------
// Smooth invertible activation pair. The pair satisfies sigma_- o sigma_+ =
// id exactly, with leaky-linear asymptote slopes tan(pi/4 +- alpha).
// ---------------------------------------------------------------------------

struct SigmaConsts {
  double alpha, s, c, a, b;
  double u_scale;   // 2/(s c)
  double u_shift;   // sqrt(2)/c
  double y_shift;   // sqrt(2)/(a s)
  explicit SigmaConsts(double alpha_);
};

/// Elementwise sigma_+ (plus) or sigma_- (minus).
template <class E>
typename E::M ae_sigma_eval(const E& e, const SigmaConsts& k, typename E::M x, bool plus) {
  using diff::CwiseTag;
  const double sgn = plus ? 1.0 : -1.0;
  auto u = e.add_k(e.scale(x, k.u_scale), -sgn * k.u_shift);
  auto r = e.cwise(CwiseTag::Sqrt, e.add_k(e.cwise(CwiseTag::Square, u), 2.0 * k.a));
  return e.add_k(e.add(e.scale(x, k.b / k.a), e.scale(r, sgn / k.a)), -sgn * k.y_shift);
}

/// First derivative of the elementwise activation.
template <class E>
typename E::M ae_sigma_d1(const E& e, const SigmaConsts& k, typename E::M x, bool plus) {
  using diff::CwiseTag;
  const double sgn = plus ? 1.0 : -1.0;
  auto u = e.add_k(e.scale(x, k.u_scale), -sgn * k.u_shift);
  auto r = e.cwise(CwiseTag::Sqrt, e.add_k(e.cwise(CwiseTag::Square, u), 2.0 * k.a));
  return e.add_k(e.scale(e.cdiv(u, r), sgn * k.u_scale / k.a), k.b / k.a);
}

/// First and second derivatives at once.
template <class E>
std::pair<typename E::M, typename E::M> ae_sigma_d12(const E& e, const SigmaConsts& k,
                                                     typename E::M x, bool plus) {
  using diff::CwiseTag;
  const double sgn = plus ? 1.0 : -1.0;
  auto u = e.add_k(e.scale(x, k.u_scale), -sgn * k.u_shift);
  auto r = e.cwise(CwiseTag::Sqrt, e.add_k(e.cwise(CwiseTag::Square, u), 2.0 * k.a));
  auto d1 = e.add_k(e.scale(e.cdiv(u, r), sgn * k.u_scale / k.a), k.b / k.a);
  auto r3 = e.hadamard(r, e.hadamard(r, r));
  auto d2 = e.scale(e.cwise(CwiseTag::Recip, r3), sgn * 2.0 * k.u_scale * k.u_scale);
  return {d1, d2};
}

/// Value-level spec surface.
Vec ae_sigma(const Vec& x, double alpha, bool plus);

// ---------------------------------------------------------------------------
// Constrained autoencoder with biorthogonal layer pairs.
// Layer i maps n_i <-> n_{i+1}: decode x -> Phi_i sigma_+(x) + b_i,
// encode x -> sigma_-(Psi_i^T (x - b_i)). Psi^T Phi = I per layer gives
// rho o phi = id exactly.
// ---------------------------------------------------------------------------

struct AELayer {
  Mat phi;  // n_{i+1} x n_i
  Mat psi;  // n_{i+1} x n_i
  Vec b;    // R^{n_{i+1}}
};

struct ConstrainedAEParams {
  std::vector<AELayer> layers;
  double alpha = 0.39269908169872414;  // pi/8
  bool biorthogonal = true;  // false: overparametrized baseline (free weights)

  int latent_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().phi.cols()); }
  int full_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().phi.rows()); }
  /// max over layers of ||Psi^T Phi - I||_inf
  double biorth_residual() const;
};

/// sizes = {n_0, ..., n_L} with d = n_0 <= ... <= n_L = n. Each pair starts
/// from a shared column-orthonormal matrix, which is trivially feasible.
ConstrainedAEParams ae_init(const std::vector<int>& sizes, double alpha, std::mt19937_64& rng,
                            bool biorthogonal = true);

template <class E>
struct BoundAE {
  struct Layer {
    typename E::M phi, psi, b;
  };
  std::vector<Layer> layers;
  SigmaConsts sc;
  explicit BoundAE(double alpha) : sc(alpha) {}
};

template <class E>
BoundAE<E> bind_ae(const E& e, const ConstrainedAEParams& p) {
  BoundAE<E> out(p.alpha);
  for (const auto& l : p.layers)
    out.layers.push_back({e.lift(l.phi), e.lift(l.psi), e.lift(Mat(l.b))});
  return out;
}

template <class E>
typename E::M ae_decode(const E& e, const BoundAE<E>& p, typename E::M x) {
  for (const auto& l : p.layers)
    x = e.add(e.matmul(l.phi, ae_sigma_eval(e, p.sc, x, true)), l.b);
  return x;
}

template <class E>
typename E::M ae_encode(const E& e, const BoundAE<E>& p, typename E::M x) {
  for (auto it = p.layers.rbegin(); it != p.layers.rend(); ++it)
    x = ae_sigma_eval(e, p.sc, e.matmul(e.transpose(it->psi), e.sub(x, it->b)), false);
  return x;
}

/// Decoder with pushforward: returns (phi(x), dphi|_x v).
template <class E>
std::pair<typename E::M, typename E::M> ae_decode_jvp(const E& e, const BoundAE<E>& p,
                                                      typename E::M x, typename E::M v) {
  for (const auto& l : p.layers) {
    auto s = ae_sigma_eval(e, p.sc, x, true);
    auto d1 = ae_sigma_d1(e, p.sc, x, true);
    v = e.matmul(l.phi, e.hadamard(d1, v));
    x = e.add(e.matmul(l.phi, s), l.b);
  }
  return {x, v};
}

/// Decoder with pushforward and curvature: (phi(x), dphi v, d2phi[v, v]).
template <class E>
std::tuple<typename E::M, typename E::M, typename E::M> ae_decode_curv(const E& e,
                                                                       const BoundAE<E>& p,
                                                                       typename E::M x,
                                                                       typename E::M v) {
  using M = typename E::M;
  M k = e.zero(static_cast<int>(e.value(x).rows()), 1);
  for (const auto& l : p.layers) {
    auto s = ae_sigma_eval(e, p.sc, x, true);
    auto [d1, d2] = ae_sigma_d12(e, p.sc, x, true);
    M kin = e.add(e.hadamard(d2, e.hadamard(v, v)), e.hadamard(d1, k));
    k = e.matmul(l.phi, kin);
    v = e.matmul(l.phi, e.hadamard(d1, v));
    x = e.add(e.matmul(l.phi, s), l.b);
  }
  return {x, v, k};
}

/// Encoder with tangent reduction: (rho(x), drho|_x v).
template <class E>
std::pair<typename E::M, typename E::M> ae_encode_jvp(const E& e, const BoundAE<E>& p,
                                                      typename E::M x, typename E::M v) {
  for (auto it = p.layers.rbegin(); it != p.layers.rend(); ++it) {
    auto u = e.matmul(e.transpose(it->psi), e.sub(x, it->b));
    auto d1 = ae_sigma_d1(e, p.sc, u, false);
    v = e.hadamard(d1, e.matmul(e.transpose(it->psi), v));
    x = ae_sigma_eval(e, p.sc, u, false);
  }
  return {x, v};
}

/// Encoder with curvature: (rho(x), drho v, d2rho[v, v]).
template <class E>
std::tuple<typename E::M, typename E::M, typename E::M> ae_encode_curv(const E& e,
                                                                       const BoundAE<E>& p,
                                                                       typename E::M x,
                                                                       typename E::M v) {
  using M = typename E::M;
  M k = e.zero(static_cast<int>(e.value(x).rows()), 1);
  for (auto it = p.layers.rbegin(); it != p.layers.rend(); ++it) {
    auto psit = e.transpose(it->psi);
    auto u = e.matmul(psit, e.sub(x, it->b));
    auto ju = e.matmul(psit, v);
    auto ku = e.matmul(psit, k);
    auto [d1, d2] = ae_sigma_d12(e, p.sc, u, false);
    k = e.add(e.hadamard(d2, e.hadamard(ju, ju)), e.hadamard(d1, ku));
    v = e.hadamard(d1, ju);
    x = ae_sigma_eval(e, p.sc, u, false);
  }
  return {x, v, k};
}

/// dphi|_x^T w (pullback of a full-space covector).
template <class E>
typename E::M ae_decode_vjp(const E& e, const BoundAE<E>& p, typename E::M x, typename E::M w) {
  using M = typename E::M;
  std::vector<M> inputs;
  inputs.reserve(p.layers.size());
  for (const auto& l : p.layers) {
    inputs.push_back(x);
    x = e.add(e.matmul(l.phi, ae_sigma_eval(e, p.sc, x, true)), l.b);
  }
  for (size_t i = p.layers.size(); i-- > 0;) {
    auto d1 = ae_sigma_d1(e, p.sc, inputs[i], true);
    w = e.hadamard(d1, e.matmul(e.transpose(p.layers[i].phi), w));
  }
  return w;
}

/// Full decoder Jacobian dphi|_x (n x d) by composing layer Jacobians.
template <class E>
typename E::M ae_decode_jacobian(const E& e, const BoundAE<E>& p, typename E::M x) {
  using M = typename E::M;
  M j = e.identity(static_cast<int>(e.value(x).rows()));
  for (const auto& l : p.layers) {
    auto d1 = ae_sigma_d1(e, p.sc, x, true);
    j = e.matmul(l.phi, e.colscale(d1, j));
    x = e.add(e.matmul(l.phi, ae_sigma_eval(e, p.sc, x, true)), l.b);
  }
  return j;
}

/// Full encoder Jacobian drho|_x (d x n).
template <class E>
typename E::M ae_encode_jacobian(const E& e, const BoundAE<E>& p, typename E::M x) {
  using M = typename E::M;
  M j = e.identity(static_cast<int>(e.value(x).rows()));
  for (auto it = p.layers.rbegin(); it != p.layers.rend(); ++it) {
    auto u = e.matmul(e.transpose(it->psi), e.sub(x, it->b));
    auto d1 = ae_sigma_d1(e, p.sc, u, false);
    j = e.colscale(d1, e.matmul(e.transpose(it->psi), j));
    x = ae_sigma_eval(e, p.sc, u, false);
  }
  return j;
}

/// Overparametrized-baseline penalty: per layer
/// ||Psi||_F^2 + ||Phi||_F^2 + ||Psi^T Phi - I||_F^2 * ||(Psi^T Phi)^-1||_F^2.
/// A near-singular product contributes a large constant instead of failing.
template <class E>
typename E::M ae_overparam_penalty(const E& e, const BoundAE<E>& p) {
  using M = typename E::M;
  M acc = e.zero(1, 1);
  for (const auto& l : p.layers) {
    const int d = static_cast<int>(e.value(l.phi).cols());
    M prod = e.matmul(e.transpose(l.psi), l.phi);
    Eigen::JacobiSVD<Mat> svd(e.value(prod));
    double smin = svd.singularValues().minCoeff();
    M tail;
    if (smin < 1e-12) {
      tail = e.lift(Mat::Constant(1, 1, 1e12));
    } else {
      M dev = e.sqnorm(e.sub(prod, e.identity(d)));
      M inv = e.sqnorm(e.solve_lu(prod, e.identity(d)));
      tail = e.hadamard(dev, inv);
    }
    acc = e.add(acc, e.add(e.add(e.sqnorm(l.psi), e.sqnorm(l.phi)), tail));
  }
  return acc;
}

/// Value-level spec surface: full-Jacobian pair and second contractions.
Vec ae_encode_value(const ConstrainedAEParams& p, const Vec& q);
Vec ae_decode_value(const ConstrainedAEParams& p, const Vec& qlat);
std::pair<Mat, Mat> ae_jacobians(const ConstrainedAEParams& p, const Vec& qlat);
std::pair<Vec, Vec> ae_second(const ConstrainedAEParams& p, const Vec& qlat, const Vec& vlat);

/// Analytic-derivative adapters.
struct AEDecodeFunction : diff::DiffFunction {
  ConstrainedAEParams params;
  explicit AEDecodeFunction(ConstrainedAEParams p) : params(std::move(p)) {}
  int in_dim() const override { return params.latent_dim(); }
  int out_dim() const override { return params.full_dim(); }
  Vec value(const Vec& x) const override;
  Mat jacobian(const Vec& x) const override;
  Vec hessian_contract(const Vec& x, const Vec& v) const override;
};

struct AEEncodeFunction : diff::DiffFunction {
  ConstrainedAEParams params;
  explicit AEEncodeFunction(ConstrainedAEParams p) : params(std::move(p)) {}
  int in_dim() const override { return params.full_dim(); }
  int out_dim() const override { return params.latent_dim(); }
  Vec value(const Vec& x) const override;
  Mat jacobian(const Vec& x) const override;
  Vec hessian_contract(const Vec& x, const Vec& v) const override;
};

}  // namespace rolnn::net
