#pragma once

#include <random>
#include <tuple>
#include <vector>

#include "rolnn/diff.hpp"

namespace rolnn::net {

using diff::CwiseTag;
using num::Mat;
using num::Vec;

enum class Activation { SoftPlus, Identity };

/// Fully-connected network; hidden layers use the tagged activation, the
/// output layer is linear.
struct MLPParams {
  std::vector<Mat> w;
  std::vector<Vec> b;
  Activation act = Activation::SoftPlus;
  bool act_out = false;  // apply the activation to the last layer too

  int in_dim() const { return w.empty() ? 0 : static_cast<int>(w.front().cols()); }
  int out_dim() const { return w.empty() ? 0 : static_cast<int>(w.back().rows()); }
  size_t layer_count() const { return w.size(); }
};

/// Fan-in scaled uniform init, biases zero.
MLPParams mlp_init(const std::vector<int>& sizes, Activation act, std::mt19937_64& rng);

template <class E>
struct BoundMLP {
  std::vector<typename E::M> w;
  std::vector<typename E::M> b;
  Activation act = Activation::SoftPlus;
  bool act_out = false;
};

template <class E>
BoundMLP<E> bind_mlp(const E& e, const MLPParams& p) {
  BoundMLP<E> out;
  out.act = p.act;
  out.act_out = p.act_out;
  for (size_t l = 0; l < p.w.size(); ++l) {
    out.w.push_back(e.lift(p.w[l]));
    out.b.push_back(e.lift(p.b[l]));
  }
  return out;
}

template <class E>
typename E::M mlp_forward(const E& e, const BoundMLP<E>& p, typename E::M x) {
  const size_t last = p.w.size() - 1;
  for (size_t l = 0; l < p.w.size(); ++l) {
    x = e.add(e.matmul(p.w[l], x), p.b[l]);
    if ((l != last || p.act_out) && p.act == Activation::SoftPlus)
      x = e.cwise(CwiseTag::Softplus, x);
  }
  return x;
}

/// Forward value together with the input Jacobian (chain of per-layer
/// analytic Jacobians).
template <class E>
std::pair<typename E::M, typename E::M> mlp_with_jacobian(const E& e, const BoundMLP<E>& p,
                                                          typename E::M x) {
  using M = typename E::M;
  const int nin = static_cast<int>(e.value(x).rows());
  M j = e.identity(nin);
  const size_t last = p.w.size() - 1;
  for (size_t l = 0; l < p.w.size(); ++l) {
    M z = e.add(e.matmul(p.w[l], x), p.b[l]);
    j = e.matmul(p.w[l], j);
    if ((l != last || p.act_out) && p.act == Activation::SoftPlus) {
      x = e.cwise(CwiseTag::Softplus, z);
      j = e.colscale(e.cwise(CwiseTag::Sigmoid, z), j);
    } else {
      x = z;
    }
  }
  return {x, j};
}

/// Forward value, Jacobian-vector product and second-derivative contraction
/// (d^2 f / dx^2)[v, v].
template <class E>
std::tuple<typename E::M, typename E::M, typename E::M> mlp_with_hessian_contract(
    const E& e, const BoundMLP<E>& p, typename E::M x, typename E::M v) {
  using M = typename E::M;
  const int nin = static_cast<int>(e.value(x).rows());
  M jv = v;
  M k = e.zero(nin, 1);
  const size_t last = p.w.size() - 1;
  for (size_t l = 0; l < p.w.size(); ++l) {
    M z = e.add(e.matmul(p.w[l], x), p.b[l]);
    M jz = e.matmul(p.w[l], jv);
    M kz = e.matmul(p.w[l], k);
    if ((l != last || p.act_out) && p.act == Activation::SoftPlus) {
      M s = e.cwise(CwiseTag::Sigmoid, z);
      M sp = e.hadamard(s, e.add_k(e.neg(s), 1.0));  // sigmoid'
      x = e.cwise(CwiseTag::Softplus, z);
      jv = e.hadamard(s, jz);
      k = e.add(e.hadamard(sp, e.hadamard(jz, jz)), e.hadamard(s, kz));
    } else {
      x = z;
      jv = jz;
      k = kz;
    }
  }
  return {x, jv, k};
}

/// Analytic-derivative adapter for the diffengine interface.
struct MLPFunction : diff::DiffFunction {
  MLPParams params;
  explicit MLPFunction(MLPParams p) : params(std::move(p)) {}
  int in_dim() const override { return params.in_dim(); }
  int out_dim() const override { return params.out_dim(); }
  Vec value(const Vec& x) const override;
  Mat jacobian(const Vec& x) const override;
  Vec hessian_contract(const Vec& x, const Vec& v) const override;
};

}  // namespace rolnn::net
