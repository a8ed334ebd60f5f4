#pragma once

#include "rolnn/lagrangian.hpp"

namespace rolnn::rom {

using diff::LeafPair;
using diff::TapeEngine;
using diff::ValueEngine;
using lag::LossBreakdown;
using lag::State;
using lag::Trajectory;
using lag::Window;
using num::Mat;
using num::Vec;

struct ReducedState {
  Vec q;
  Vec dq;
  Vec ddq;  // optional
  Vec tau;  // optional
};

/// Constrained autoencoder plus a latent Lagrangian model of dimension d.
struct ROLNNModel {
  net::ConstrainedAEParams ae;
  lag::LagrangianModel latent;

  int full_dim() const { return ae.full_dim(); }
  int latent_dim() const { return ae.latent_dim(); }
};

/// d-dimensional latent LNN with an identity-basepoint exponential-map mass
/// network (the configuration used for reduced-order experiments).
ROLNNModel rolnn_init(const std::vector<int>& ae_sizes, const std::vector<int>& lnn_hidden,
                      double alpha, double reg, std::mt19937_64& rng, bool biorthogonal = true);

/// Parameter layout: all AE layers first (pair + bias each), then the latent
/// model. Returns the component ranges for the two learning-rate groups.
geo::ProductPoint collect_params(const ROLNNModel& m);
void assign_params(ROLNNModel& m, const geo::ProductPoint& p);
struct GroupSplit {
  std::vector<size_t> ae;
  std::vector<size_t> lnn;
};
GroupSplit param_groups(const ROLNNModel& m);

template <class E>
struct BoundROLNN {
  net::BoundAE<E> ae;
  lag::BoundLagrangian<E> latent;
  explicit BoundROLNN(double alpha) : ae(alpha) {}
};

template <class E>
BoundROLNN<E> bind_rolnn(const E& e, const ROLNNModel& m, lag::CompList<E>& comps, size_t& k) {
  BoundROLNN<E> out(m.ae.alpha);
  for (size_t l = 0; l < m.ae.layers.size(); ++l) {
    typename net::BoundAE<E>::Layer bl;
    if (m.ae.biorthogonal) {
      bl.phi = comps[k].a;
      bl.psi = comps[k].b;
      ++k;
    } else {
      bl.phi = comps[k++].a;
      bl.psi = comps[k++].a;
    }
    bl.b = comps[k++].a;
    out.ae.layers.push_back(std::move(bl));
  }
  out.latent = bind_lagrangian(e, m.latent, comps, k);
  return out;
}

BoundROLNN<ValueEngine> bind_value(const ValueEngine& e, const ROLNNModel& m);

// ---------------------------------------------------------------------------
// Reduction / embedding operations
// ---------------------------------------------------------------------------

/// Lifted embedding (phi_Q(q), dphi_Q dq).
State lift_embed(const ROLNNModel& m, const ReducedState& r);
/// Reduction (rho_Q(q), drho_Q dq) and, when s.ddq is present, the
/// second-order acceleration reduction.
ReducedState reduce_state(const ROLNNModel& m, const State& s);

/// Pullback of an explicit full-order model through the decoder at a latent
/// point (testing surface for the reduced-terms structure).
Mat pullback_mass(const ROLNNModel& m, const Mat& full_mass, const Vec& qlat);
Vec pullback_gravity(const ROLNNModel& m, const Vec& full_gravity, const Vec& qlat);
Vec reduce_force(const ROLNNModel& m, const Vec& qlat, const Vec& tau);

/// Learned reduced terms (the latent networks evaluated directly).
struct ReducedTerms {
  Mat mass;
  Vec coriolis;
  Vec gravity;
};
ReducedTerms reduced_terms(const ROLNNModel& m, const ReducedState& r);

Vec latent_forward_dynamics(const ROLNNModel& m, const ReducedState& r, const Vec& tau_lat);
/// Full-order acceleration from a latent one:
/// ddq = dphi ddq_lat + d2phi[dq_lat, dq_lat].
Vec reconstruct_acceleration(const ROLNNModel& m, const ReducedState& r, const Vec& ddq_lat);
double reduced_energy(const ROLNNModel& m, const ReducedState& r);

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

struct LossMask {
  bool ae = true;
  bool lnn = true;
};

struct OverparamConfig {
  bool enabled = false;
  double weight = 1e-5;
};

/// Acceleration loss: AE reconstruction of (q, dq, ddq), latent residual,
/// reconstructed residual, and the regularizer. Component sums are scaled
/// individually, so total == ((ae + d) + n) + reg (+ penalty) bit-exactly.
template <class E>
std::pair<typename E::M, LossBreakdown> rolnn_acc_loss_t(const E& e, const BoundROLNN<E>& b,
                                                         std::span<const State> batch,
                                                         LossMask mask = {},
                                                         OverparamConfig op = {},
                                                         double norm = -1.0,
                                                         bool with_reg = true) {
  using M = typename E::M;
  M sae = e.zero(1, 1), sd = e.zero(1, 1), sn = e.zero(1, 1);
  for (const State& s : batch) {
    M q = e.lift(Mat(s.q));
    M dq = e.lift(Mat(s.dq));
    M ddq = e.lift(Mat(s.ddq));
    M tau = e.lift(s.tau.size() ? Mat(s.tau) : Mat(Mat::Zero(s.q.size(), 1)));

    auto [qlat, vlat, klat] = net::ae_encode_curv(e, b.ae, q, dq);
    M alat = e.add(std::get<1>(net::ae_encode_jvp(e, b.ae, q, ddq)), klat);

    auto [qrec, vrec, kdec] = net::ae_decode_curv(e, b.ae, qlat, vlat);
    M arec = e.add(std::get<1>(net::ae_decode_jvp(e, b.ae, qlat, alat)), kdec);
    if (mask.ae) {
      M t1 = e.sqnorm(e.sub(qrec, q));
      M t2 = e.sqnorm(e.sub(vrec, dq));
      M t3 = e.sqnorm(e.sub(arec, ddq));
      sae = e.add(sae, e.add(e.add(t1, t2), t3));
    }
    if (mask.lnn) {
      M taulat = net::ae_decode_vjp(e, b.ae, qlat, tau);
      M apred = lag::forward_dynamics_raw(e, b.latent, qlat, vlat, taulat);
      sd = e.add(sd, e.sqnorm(e.sub(apred, alat)));
      M arecp = e.add(std::get<1>(net::ae_decode_jvp(e, b.ae, qlat, apred)), kdec);
      sn = e.add(sn, e.sqnorm(e.sub(arecp, ddq)));
    }
  }
  const double inv = norm >= 0.0 ? norm
                                   : (batch.empty() ? 0.0 : 1.0 / static_cast<double>(batch.size()));
  M lae = e.scale(sae, inv);
  M ld = e.scale(sd, inv);
  M ln = e.scale(sn, inv);
  M reg = with_reg ? lag::reg_term(e, b.latent) : e.zero(1, 1);
  M total = e.add(e.add(e.add(lae, ld), ln), reg);
  if (op.enabled && with_reg)
    total = e.add(total, e.scale(net::ae_overparam_penalty(e, b.ae), op.weight));
  LossBreakdown parts;
  parts.ae = e.value(lae)(0, 0);
  parts.lnn_d = e.value(ld)(0, 0);
  parts.lnn_n = e.value(ln)(0, 0);
  parts.reg = e.value(reg)(0, 0);
  parts.total = e.value(total)(0, 0);
  return {total, parts};
}

/// Multi-step loss: latent Euler rollout with per-step AE reconstruction of
/// the true states, latent velocity residual, and reconstructed velocity
/// residual.
template <class E>
std::pair<typename E::M, LossBreakdown> rolnn_ode_loss_t(const E& e, const BoundROLNN<E>& b,
                                                         std::span<const Window> windows,
                                                         double dt, LossMask mask = {},
                                                         OverparamConfig op = {},
                                                         double norm = -1.0,
                                                         bool with_reg = true) {
  using M = typename E::M;
  LossBreakdown parts;
  M sae = e.zero(1, 1), sd = e.zero(1, 1), sn = e.zero(1, 1);
  int total_steps = 0;
  for (const Window& w : windows) total_steps += w.horizon();
  for (const Window& w : windows) {
    const int h = w.horizon();
    M q0 = e.lift(Mat(w.q[0]));
    M v0 = e.lift(Mat(w.dq[0]));
    auto [qp, vp] = net::ae_encode_jvp(e, b.ae, q0, v0);
    M wae = e.zero(1, 1), wd = e.zero(1, 1), wn = e.zero(1, 1);
    bool dead = false;
    for (int j = 1; j <= h; ++j) {
      M tau = e.lift(Mat(w.tau[j - 1]));
      M taulat = net::ae_decode_vjp(e, b.ae, qp, tau);
      M apred = lag::forward_dynamics_raw(e, b.latent, qp, vp, taulat);
      qp = e.add(qp, e.scale(vp, dt));
      vp = e.add(vp, e.scale(apred, dt));

      M qt = e.lift(Mat(w.q[j]));
      M vt = e.lift(Mat(w.dq[j]));
      auto [qlat_t, vlat_t] = net::ae_encode_jvp(e, b.ae, qt, vt);
      if (mask.ae) {
        auto [qrec, vrec] = net::ae_decode_jvp(e, b.ae, qlat_t, vlat_t);
        wae = e.add(wae, e.add(e.sqnorm(e.sub(qrec, qt)), e.sqnorm(e.sub(vrec, vt))));
      }
      if (mask.lnn) {
        wd = e.add(wd, e.sqnorm(e.sub(vp, vlat_t)));
        auto [qrecp, vrecp] = net::ae_decode_jvp(e, b.ae, qp, vp);
        (void)qrecp;
        wn = e.add(wn, e.sqnorm(e.sub(vrecp, vt)));
      }
      double probe = e.value(wd)(0, 0) + e.value(wn)(0, 0) + e.value(wae)(0, 0);
      if (!std::isfinite(probe) || probe > 1e6) {
        dead = true;
        break;
      }
    }
    if (dead) {
      sae = e.add(sae, e.lift(Mat::Constant(1, 1, mask.ae ? 1e6 : 0.0)));
      sd = e.add(sd, e.lift(Mat::Constant(1, 1, mask.lnn ? 1e6 : 0.0)));
      sn = e.add(sn, e.lift(Mat::Constant(1, 1, mask.lnn ? 1e6 : 0.0)));
      parts.clamped_windows++;
    } else {
      sae = e.add(sae, wae);
      sd = e.add(sd, wd);
      sn = e.add(sn, wn);
    }
  }
  const double inv =
      norm >= 0.0 ? norm : (total_steps > 0 ? 1.0 / static_cast<double>(total_steps) : 0.0);
  M lae = e.scale(sae, inv);
  M ld = e.scale(sd, inv);
  M ln = e.scale(sn, inv);
  M reg = with_reg ? lag::reg_term(e, b.latent) : e.zero(1, 1);
  M total = e.add(e.add(e.add(lae, ld), ln), reg);
  if (op.enabled && with_reg)
    total = e.add(total, e.scale(net::ae_overparam_penalty(e, b.ae), op.weight));
  parts.ae = e.value(lae)(0, 0);
  parts.lnn_d = e.value(ld)(0, 0);
  parts.lnn_n = e.value(ln)(0, 0);
  parts.reg = e.value(reg)(0, 0);
  parts.total = e.value(total)(0, 0);
  return {total, parts};
}

LossBreakdown rolnn_acc_loss(const ROLNNModel& m, std::span<const State> batch,
                             LossMask mask = {}, OverparamConfig op = {});
LossBreakdown rolnn_ode_loss(const ROLNNModel& m, std::span<const Window> windows, double dt,
                             LossMask mask = {}, OverparamConfig op = {});
/// Overparametrized-baseline biorthogonality penalty (unweighted sum).
double overparam_reg_loss(const ROLNNModel& m);

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Every H_test steps the model is re-encoded from the true state and rolled
/// out; errors are recorded per predicted step.
struct RolloutErrors {
  std::vector<double> position;  // per evaluated step ||phi(q_lat) - q||
  std::vector<double> velocity;
  std::vector<double> latent;    // ||q_lat - rho(q)||
  double mean_position = 0.0;
  double mean_velocity = 0.0;
  double mean_latent = 0.0;
};
RolloutErrors rollout_eval(const ROLNNModel& m, const Trajectory& truth, int h_test,
                           lag::Scheme scheme);

/// Unforced latent rollout from a reduced state (energy studies).
std::vector<ReducedState> latent_rollout(const ROLNNModel& m, const ReducedState& r0, int steps,
                                         double dt, lag::Scheme scheme);

}  // namespace rolnn::rom
