#pragma once

#include <span>

#include "rolnn/ae.hpp"
#include "rolnn/spdnet.hpp"

namespace rolnn::lag {

using diff::LeafPair;
using diff::MVar;
using diff::TapeEngine;
using diff::ValueEngine;
using num::Mat;
using num::Vec;

/// One instant of an n-DoF system; ddq and tau may be empty.
struct State {
  Vec q;
  Vec dq;
  Vec ddq;
  Vec tau;
};

struct Trajectory {
  double dt = 0.0;
  std::vector<State> states;
};

/// Ground-truth window of H+1 uniformly spaced samples.
struct Window {
  std::vector<Vec> q, dq, tau;
  int horizon() const { return static_cast<int>(q.size()) - 1; }
};

enum class MassKind { SpdNet, Cholesky, SharedCholesky };
enum class Scheme { EulerForward, RK4 };

struct LagrangianModel {
  MassKind kind = MassKind::SpdNet;
  net::SPDNetParams spd;
  net::CholeskyHeadParams chol;
  net::SharedTrunkParams shared;
  net::MLPParams potential;  // unused for SharedCholesky
  double reg = 0.0;          // lambda / gamma knob of the losses
  int dim = 0;
};

/// Raised when the mass matrix is too ill-conditioned to invert reliably.
struct ConditioningError : num::NumericalError {
  using num::NumericalError::NumericalError;
};

/// Raised when an integration produces a non-finite state.
struct DivergenceError : std::runtime_error {
  int step;
  DivergenceError(const std::string& w, int s) : std::runtime_error(w), step(s) {}
};

// ---------------------------------------------------------------------------
// Parameter plumbing: one ProductPoint component per weight matrix / bias /
// SPD parameter, in a fixed documented order (mass net first, potential
// last). collect/assign/bind all walk the same order.
// ---------------------------------------------------------------------------

geo::ProductPoint collect_params(const LagrangianModel& m);
void assign_params(LagrangianModel& m, const geo::ProductPoint& p);

template <class E>
struct CompHandle {
  typename E::M a, b;
};

template <class E>
using CompList = std::vector<CompHandle<E>>;

inline CompList<ValueEngine> comps_from_point(const ValueEngine& e, const geo::ProductPoint& p) {
  CompList<ValueEngine> out;
  out.reserve(p.comps.size());
  for (const auto& c : p.comps) out.push_back({e.lift(c.a), c.b.size() ? e.lift(c.b) : Mat()});
  return out;
}

inline CompList<TapeEngine> comps_from_leaves(const std::vector<LeafPair>& lv) {
  CompList<TapeEngine> out;
  out.reserve(lv.size());
  for (const auto& l : lv) out.push_back({l.a, l.b});
  return out;
}

template <class E>
struct BoundLagrangian {
  MassKind kind = MassKind::SpdNet;
  net::BoundSPDNet<E> spd;
  net::BoundCholesky<E> chol;
  net::BoundSharedTrunk<E> shared;
  net::BoundMLP<E> potential;
  double reg = 0.0;
  int dim = 0;
  std::vector<typename E::M> reg_leaves;  // ambient parameters entering ||theta||^2
};

template <class E>
net::BoundMLP<E> bind_mlp_from(const net::MLPParams& shape, CompList<E>& comps, size_t& k,
                               std::vector<typename E::M>* reg) {
  net::BoundMLP<E> out;
  out.act = shape.act;
  out.act_out = shape.act_out;
  for (size_t l = 0; l < shape.w.size(); ++l) {
    out.w.push_back(comps[k++].a);
    out.b.push_back(comps[k++].a);
    if (reg) {
      reg->push_back(out.w.back());
      reg->push_back(out.b.back());
    }
  }
  return out;
}

template <class E>
BoundLagrangian<E> bind_lagrangian(const E& e, const LagrangianModel& m, CompList<E>& comps,
                                   size_t& k) {
  BoundLagrangian<E> out;
  out.kind = m.kind;
  out.reg = m.reg;
  out.dim = m.dim;
  switch (m.kind) {
    case MassKind::SpdNet: {
      out.spd.head = bind_mlp_from(m.spd.head, comps, k, &out.reg_leaves);
      out.spd.dim = m.spd.dim;
      out.spd.learned_basepoint = m.spd.learned_basepoint;
      if (m.spd.learned_basepoint) {
        typename E::M bp = comps[k++].a;
        out.reg_leaves.push_back(bp);
        out.spd.bp_sqrt = e.sym_matfunc(diff::MatFuncTag::Sqrt, bp);
        out.spd.bp_isqrt = e.solve_lu(out.spd.bp_sqrt, e.identity(m.spd.dim));
      }
      for (const auto& l : m.spd.layers) {
        net::BoundSpdLayer<E> bl;
        bl.kind = l.kind;
        bl.eps = l.eps;
        if (l.kind != net::SpdLayerKind::ReEig) {
          bl.a = comps[k++].a;
          bl.b = comps[k++].a;
          out.reg_leaves.push_back(bl.a);
          out.reg_leaves.push_back(bl.b);
          if (l.kind == net::SpdLayerKind::GyroSpdPP)
            bl.b_isqrt =
                e.sym_matfunc(diff::MatFuncTag::Sqrt, e.solve_lu(bl.b, e.identity(m.spd.dim)));
        }
        out.spd.layers.push_back(std::move(bl));
      }
      break;
    }
    case MassKind::Cholesky: {
      out.chol.mlp = bind_mlp_from(m.chol.mlp, comps, k, &out.reg_leaves);
      out.chol.dim = m.chol.dim;
      out.chol.delta = m.chol.delta;
      auto [mask, sel] = net::detail::cholesky_masks(m.chol.dim);
      out.chol.offdiag_mask = e.lift(mask);
      out.chol.diag_select = e.lift(sel);
      break;
    }
    case MassKind::SharedCholesky: {
      out.shared.trunk = bind_mlp_from(m.shared.trunk, comps, k, &out.reg_leaves);
      out.shared.head_l = comps[k++].a;
      out.shared.head_lb = comps[k++].a;
      out.shared.head_v = comps[k++].a;
      out.shared.head_vb = comps[k++].a;
      for (auto h : {out.shared.head_l, out.shared.head_lb, out.shared.head_v, out.shared.head_vb})
        out.reg_leaves.push_back(h);
      out.shared.chol_helper.dim = m.shared.dim;
      out.shared.chol_helper.delta = m.shared.delta;
      auto [mask, sel] = net::detail::cholesky_masks(m.shared.dim);
      out.shared.chol_helper.offdiag_mask = e.lift(mask);
      out.shared.chol_helper.diag_select = e.lift(sel);
      break;
    }
  }
  if (m.kind != MassKind::SharedCholesky)
    out.potential = bind_mlp_from(m.potential, comps, k, &out.reg_leaves);
  return out;
}

template <class E>
BoundLagrangian<E> bind_lagrangian(const E& e, const LagrangianModel& m) {
  geo::ProductPoint p = collect_params(m);
  if constexpr (std::is_same_v<E, ValueEngine>) {
    CompList<E> comps = comps_from_point(e, p);
    size_t k = 0;
    return bind_lagrangian(e, m, comps, k);
  } else {
    static_assert(std::is_same_v<E, ValueEngine>, "tape binding goes through leaves");
  }
}

// ---------------------------------------------------------------------------
// Dynamics programs
// ---------------------------------------------------------------------------

template <class E>
typename E::M mass_matrix(const E& e, const BoundLagrangian<E>& b, typename E::M q) {
  switch (b.kind) {
    case MassKind::SpdNet: return net::spdnet_mass(e, b.spd, q);
    case MassKind::Cholesky: return net::cholesky_mass(e, b.chol, q);
    case MassKind::SharedCholesky: return net::shared_forward(e, b.shared, q, false).mass;
  }
  throw num::DomainError("mass_matrix: unknown kind");
}

template <class E>
struct DynTerms {
  typename E::M mass;      // M(q)
  typename E::M coriolis;  // c(q, dq)
  typename E::M gravity;   // g(q) = dV/dq
  typename E::M potential; // V(q), 1x1
};

/// Assembles M, c, g with the Coriolis term built from dM/dq:
/// c = (sum_k dM_k dq_k) dq - 0.5 * [dq^T dM_k dq]_k.
template <class E>
DynTerms<E> dynamics_terms(const E& e, const BoundLagrangian<E>& b, typename E::M q,
                           typename E::M dq) {
  using M = typename E::M;
  const int n = static_cast<int>(e.value(q).rows());
  M mass;
  std::vector<M> dmass;
  M pot, gvec;
  if (b.kind == MassKind::SharedCholesky) {
    auto sh = net::shared_forward(e, b.shared, q, true);
    mass = sh.mass;
    dmass = sh.dmass;
    pot = sh.potential;
    gvec = sh.grad_v;
  } else {
    if (b.kind == MassKind::SpdNet) {
      auto [mm, dm] = net::spdnet_mass_with_dq(e, b.spd, q);
      mass = mm;
      dmass = dm;
    } else {
      auto [mm, dm] = net::cholesky_mass_with_dq(e, b.chol, q);
      mass = mm;
      dmass = dm;
    }
    auto [v, jac] = net::mlp_with_jacobian(e, b.potential, q);
    pot = v;
    gvec = e.transpose(jac);
  }
  M mdot_dq = e.zero(n, 1);
  M quad = e.zero(n, 1);
  for (int k = 0; k < n; ++k) {
    Mat ek = Mat::Zero(n, 1);
    ek(k, 0) = 1.0;
    Mat ekt = ek.transpose();
    M dmk_dq = e.matmul(dmass[k], dq);
    M dqk = e.matmul(e.lift(ekt), dq);  // 1x1
    mdot_dq = e.add(mdot_dq, e.matmul(dmk_dq, dqk));
    M qk = e.matmul(e.transpose(dq), dmk_dq);  // 1x1
    quad = e.add(quad, e.matmul(e.lift(ek), qk));
  }
  DynTerms<E> out;
  out.mass = mass;
  out.coriolis = e.sub(mdot_dq, e.scale(quad, 0.5));
  out.gravity = gvec;
  out.potential = pot;
  return out;
}

/// ddq = M(q)^-1 (tau - c - g); no conditioning check (loss path).
template <class E>
typename E::M forward_dynamics_raw(const E& e, const BoundLagrangian<E>& b, typename E::M q,
                                   typename E::M dq, typename E::M tau) {
  DynTerms<E> t = dynamics_terms(e, b, q, dq);
  return e.solve_llt(t.mass, e.sub(tau, e.add(t.coriolis, t.gravity)));
}

// ---------------------------------------------------------------------------
// Value-level operations (spec surface)
// ---------------------------------------------------------------------------

Mat mass_matrix(const LagrangianModel& m, const Vec& q);
double kinetic_energy(const LagrangianModel& m, const State& s);
double potential_energy(const LagrangianModel& m, const State& s);
double total_energy(const LagrangianModel& m, const State& s);
double lagrangian_value(const LagrangianModel& m, const State& s);
Vec coriolis(const LagrangianModel& m, const Vec& q, const Vec& dq);
Vec gravity(const LagrangianModel& m, const Vec& q);
/// Checks cond(M) <= 1e12 and solves; ConditioningError otherwise.
Vec forward_dynamics(const LagrangianModel& m, const Vec& q, const Vec& dq, const Vec& tau);

/// Explicit time stepping of a second-order ODE ddq = f(t, q, dq).
using AccelFn = std::function<Vec(double t, const Vec& q, const Vec& dq)>;
Trajectory integrate_ode(const AccelFn& f, const State& initial, int steps, double dt,
                         Scheme scheme);

/// Explicit rollout of the learned dynamics under per-step constant forces.
Trajectory integrate(const LagrangianModel& m, const State& initial, const std::vector<Vec>& taus,
                     int steps, double dt, Scheme scheme);

// ---------------------------------------------------------------------------
// Losses. Components are reported individually; the total is assembled as
// ((data + reg)) etc. in a fixed order so that the reported parts sum to the
// total bit-exactly.
// ---------------------------------------------------------------------------

struct LossBreakdown {
  double total = 0.0;
  double ae = 0.0;   // unused for full-order losses
  double lnn_d = 0.0;
  double lnn_n = 0.0;
  double reg = 0.0;
  int clamped_windows = 0;
};

template <class E>
typename E::M reg_term(const E& e, const BoundLagrangian<E>& b) {
  typename E::M acc = e.zero(1, 1);
  for (const auto& p : b.reg_leaves) acc = e.add(acc, e.sqnorm(p));
  return e.scale(acc, b.reg);
}

/// Mean acceleration residual plus regularizer (Eq.-7-style loss).
template <class E>
std::pair<typename E::M, LossBreakdown> lnn_acc_loss_t(const E& e, const BoundLagrangian<E>& b,
                                                       std::span<const State> batch,
                                                       double norm = -1.0, bool with_reg = true) {
  using M = typename E::M;
  M acc = e.zero(1, 1);
  for (const State& s : batch) {
    M q = e.lift(Mat(s.q));
    M dq = e.lift(Mat(s.dq));
    M tau = e.lift(s.tau.size() ? Mat(s.tau) : Mat(Mat::Zero(s.q.size(), 1)));
    M pred = forward_dynamics_raw(e, b, q, dq, tau);
    acc = e.add(acc, e.sqnorm(e.sub(pred, e.lift(Mat(s.ddq)))));
  }
  if (norm < 0.0) norm = batch.empty() ? 0.0 : 1.0 / static_cast<double>(batch.size());
  M data = e.scale(acc, norm);
  M reg = with_reg ? reg_term(e, b) : e.zero(1, 1);
  M total = e.add(data, reg);
  LossBreakdown parts;
  parts.lnn_d = e.value(data)(0, 0);
  parts.reg = e.value(reg)(0, 0);
  parts.total = e.value(total)(0, 0);
  return {total, parts};
}

/// Multi-step velocity loss over Euler rollouts (full-order form of the
/// multi-step objective; the d and n components coincide at full order).
template <class E>
std::pair<typename E::M, LossBreakdown> lnn_multistep_loss_t(const E& e,
                                                             const BoundLagrangian<E>& b,
                                                             std::span<const Window> windows,
                                                             double dt, double norm = -1.0,
                                                             bool with_reg = true) {
  using M = typename E::M;
  LossBreakdown parts;
  M accd = e.zero(1, 1);
  M accn = e.zero(1, 1);
  for (const Window& w : windows) {
    const int h = w.horizon();
    M q = e.lift(Mat(w.q[0]));
    M dq = e.lift(Mat(w.dq[0]));
    M wacc = e.zero(1, 1);
    bool dead = false;
    for (int j = 1; j <= h; ++j) {
      M tau = e.lift(Mat(w.tau[j - 1]));
      M ddq = forward_dynamics_raw(e, b, q, dq, tau);
      q = e.add(q, e.scale(dq, dt));
      dq = e.add(dq, e.scale(ddq, dt));
      wacc = e.add(wacc, e.sqnorm(e.sub(dq, e.lift(Mat(w.dq[j])))));
      if (!e.value(dq).allFinite() || e.value(wacc)(0, 0) > 1e6) {
        dead = true;
        break;
      }
    }
    if (dead) {
      // clamp the window and keep it out of the gradient
      accd = e.add(accd, e.lift(Mat::Constant(1, 1, 1e6)));
      accn = e.add(accn, e.lift(Mat::Constant(1, 1, 1e6)));
      parts.clamped_windows++;
    } else {
      accd = e.add(accd, wacc);
      accn = e.add(accn, wacc);
    }
  }
  if (norm < 0.0) {
    int t = 0;
    for (const Window& w : windows) t += w.horizon();
    norm = t == 0 ? 0.0 : 1.0 / static_cast<double>(t);
  }
  M d = e.scale(accd, norm);
  M n = e.scale(accn, norm);
  M reg = with_reg ? reg_term(e, b) : e.zero(1, 1);
  M total = e.add(e.add(d, n), reg);
  parts.lnn_d = e.value(d)(0, 0);
  parts.lnn_n = e.value(n)(0, 0);
  parts.reg = e.value(reg)(0, 0);
  parts.total = e.value(total)(0, 0);
  return {total, parts};
}

LossBreakdown lnn_acc_loss(const LagrangianModel& m, std::span<const State> batch);
LossBreakdown lnn_multistep_loss(const LagrangianModel& m, std::span<const Window> windows,
                                 double dt);

}  // namespace rolnn::lag
