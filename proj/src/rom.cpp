#include "rolnn/rom.hpp"

namespace rolnn::rom {

ROLNNModel rolnn_init(const std::vector<int>& ae_sizes, const std::vector<int>& lnn_hidden,
                      double alpha, double reg, std::mt19937_64& rng, bool biorthogonal) {
  ROLNNModel m;
  m.ae = net::ae_init(ae_sizes, alpha, rng, biorthogonal);
  const int d = ae_sizes.front();
  m.latent.kind = lag::MassKind::SpdNet;
  m.latent.dim = d;
  m.latent.spd = net::spdnet_init(d, d, lnn_hidden, false, {}, rng);
  m.latent.potential = net::mlp_init(
      [&] {
        std::vector<int> s{d};
        s.insert(s.end(), lnn_hidden.begin(), lnn_hidden.end());
        s.push_back(1);
        return s;
      }(),
      net::Activation::SoftPlus, rng);
  m.latent.reg = reg;
  return m;
}

geo::ProductPoint collect_params(const ROLNNModel& m) {
  geo::ProductPoint out;
  for (const auto& l : m.ae.layers) {
    if (m.ae.biorthogonal) {
      out.comps.push_back({geo::Kind::Biorth, l.phi, l.psi});
    } else {
      out.comps.push_back({geo::Kind::Euclidean, l.phi, {}});
      out.comps.push_back({geo::Kind::Euclidean, l.psi, {}});
    }
    out.comps.push_back({geo::Kind::Euclidean, Mat(l.b), {}});
  }
  geo::ProductPoint lnn = lag::collect_params(m.latent);
  out.comps.insert(out.comps.end(), lnn.comps.begin(), lnn.comps.end());
  return out;
}

void assign_params(ROLNNModel& m, const geo::ProductPoint& p) {
  size_t k = 0;
  for (auto& l : m.ae.layers) {
    if (m.ae.biorthogonal) {
      l.phi = p.comps[k].a;
      l.psi = p.comps[k].b;
      ++k;
    } else {
      l.phi = p.comps[k++].a;
      l.psi = p.comps[k++].a;
    }
    l.b = p.comps[k++].a.col(0);
  }
  geo::ProductPoint rest;
  rest.comps.assign(p.comps.begin() + static_cast<long>(k), p.comps.end());
  lag::assign_params(m.latent, rest);
}

GroupSplit param_groups(const ROLNNModel& m) {
  GroupSplit g;
  size_t k = 0;
  for (size_t l = 0; l < m.ae.layers.size(); ++l) {
    if (m.ae.biorthogonal) {
      g.ae.push_back(k++);
    } else {
      g.ae.push_back(k++);
      g.ae.push_back(k++);
    }
    g.ae.push_back(k++);
  }
  const size_t total = collect_params(m).comps.size();
  for (; k < total; ++k) g.lnn.push_back(k);
  return g;
}

BoundROLNN<ValueEngine> bind_value(const ValueEngine& e, const ROLNNModel& m) {
  geo::ProductPoint p = collect_params(m);
  lag::CompList<ValueEngine> comps = lag::comps_from_point(e, p);
  size_t k = 0;
  return bind_rolnn(e, m, comps, k);
}

State lift_embed(const ROLNNModel& m, const ReducedState& r) {
  ValueEngine e;
  auto b = bind_value(e, m);
  auto [q, v] = net::ae_decode_jvp(e, b.ae, Mat(r.q), Mat(r.dq));
  State s;
  s.q = q;
  s.dq = v;
  return s;
}

ReducedState reduce_state(const ROLNNModel& m, const State& s) {
  ValueEngine e;
  auto b = bind_value(e, m);
  ReducedState r;
  if (s.ddq.size()) {
    auto [q, v, k2] = net::ae_encode_curv(e, b.ae, Mat(s.q), Mat(s.dq));
    r.q = q;
    r.dq = v;
    r.ddq = Vec(std::get<1>(net::ae_encode_jvp(e, b.ae, Mat(s.q), Mat(s.ddq)))) + Vec(k2);
  } else {
    auto [q, v] = net::ae_encode_jvp(e, b.ae, Mat(s.q), Mat(s.dq));
    r.q = q;
    r.dq = v;
  }
  if (s.tau.size()) r.tau = reduce_force(m, r.q, s.tau);
  return r;
}

Mat pullback_mass(const ROLNNModel& m, const Mat& full_mass, const Vec& qlat) {
  ValueEngine e;
  auto b = bind_value(e, m);
  Mat dphi = net::ae_decode_jacobian(e, b.ae, Mat(qlat));
  Eigen::JacobiSVD<Mat> svd(dphi);
  if (svd.singularValues().minCoeff() < 1e-12)
    throw num::NumericalError("pullback_mass: rank-deficient embedding Jacobian",
                              svd.singularValues().minCoeff());
  return dphi.transpose() * full_mass * dphi;
}

Vec pullback_gravity(const ROLNNModel& m, const Vec& full_gravity, const Vec& qlat) {
  ValueEngine e;
  auto b = bind_value(e, m);
  return net::ae_decode_vjp(e, b.ae, Mat(qlat), Mat(full_gravity));
}

Vec reduce_force(const ROLNNModel& m, const Vec& qlat, const Vec& tau) {
  ValueEngine e;
  auto b = bind_value(e, m);
  return net::ae_decode_vjp(e, b.ae, Mat(qlat), Mat(tau));
}

ReducedTerms reduced_terms(const ROLNNModel& m, const ReducedState& r) {
  ValueEngine e;
  auto b = bind_value(e, m);
  auto t = lag::dynamics_terms(e, b.latent, Mat(r.q), Mat(r.dq));
  return {t.mass, Vec(t.coriolis), Vec(t.gravity)};
}

Vec latent_forward_dynamics(const ROLNNModel& m, const ReducedState& r, const Vec& tau_lat) {
  return lag::forward_dynamics(m.latent, r.q, r.dq, tau_lat);
}

Vec reconstruct_acceleration(const ROLNNModel& m, const ReducedState& r, const Vec& ddq_lat) {
  ValueEngine e;
  auto b = bind_value(e, m);
  auto [q, v, curv] = net::ae_decode_curv(e, b.ae, Mat(r.q), Mat(r.dq));
  (void)q;
  (void)v;
  return Vec(std::get<1>(net::ae_decode_jvp(e, b.ae, Mat(r.q), Mat(ddq_lat)))) + Vec(curv);
}

double reduced_energy(const ROLNNModel& m, const ReducedState& r) {
  lag::State s;
  s.q = r.q;
  s.dq = r.dq;
  return lag::total_energy(m.latent, s);
}

LossBreakdown rolnn_acc_loss(const ROLNNModel& m, std::span<const State> batch, LossMask mask,
                             OverparamConfig op) {
  ValueEngine e;
  auto b = bind_value(e, m);
  return rolnn_acc_loss_t(e, b, batch, mask, op).second;
}

LossBreakdown rolnn_ode_loss(const ROLNNModel& m, std::span<const Window> windows, double dt,
                             LossMask mask, OverparamConfig op) {
  ValueEngine e;
  auto b = bind_value(e, m);
  return rolnn_ode_loss_t(e, b, windows, dt, mask, op).second;
}

double overparam_reg_loss(const ROLNNModel& m) {
  ValueEngine e;
  auto b = bind_value(e, m);
  return net::ae_overparam_penalty(e, b.ae)(0, 0);
}

std::vector<ReducedState> latent_rollout(const ROLNNModel& m, const ReducedState& r0, int steps,
                                         double dt, lag::Scheme scheme) {
  std::vector<Vec> taus;  // unforced
  lag::State init;
  init.q = r0.q;
  init.dq = r0.dq;
  Trajectory t = lag::integrate(m.latent, init, taus, steps, dt, scheme);
  std::vector<ReducedState> out;
  out.reserve(t.states.size());
  for (const auto& s : t.states) out.push_back({s.q, s.dq, s.ddq, s.tau});
  return out;
}

RolloutErrors rollout_eval(const ROLNNModel& m, const Trajectory& truth, int h_test,
                           lag::Scheme scheme) {
  ValueEngine e;
  auto b = bind_value(e, m);
  RolloutErrors out;
  const double dt = truth.dt;
  const int total = static_cast<int>(truth.states.size());
  auto accel = [&](const Vec& qlat, const Vec& vlat, const Vec& tau_full) {
    Vec taulat = net::ae_decode_vjp(e, b.ae, Mat(qlat), Mat(tau_full));
    auto t = lag::dynamics_terms(e, b.latent, Mat(qlat), Mat(vlat));
    return Vec(e.solve_llt(t.mass, Mat(Vec(taulat - Vec(t.coriolis) - Vec(t.gravity)))));
  };
  for (int start = 0; start + 1 < total; start += h_test) {
    const State& s0 = truth.states[start];
    auto [qlat0, vlat0] = net::ae_encode_jvp(e, b.ae, Mat(s0.q), Mat(s0.dq));
    Vec qlat = qlat0, vlat = vlat0;
    const int last = std::min(start + h_test, total - 1);
    for (int k = start; k < last; ++k) {
      const Vec& tau = truth.states[k].tau;
      Vec tau_eff = tau.size() ? tau : Vec(Vec::Zero(m.full_dim()));
      if (scheme == lag::Scheme::EulerForward) {
        Vec a = accel(qlat, vlat, tau_eff);
        qlat = qlat + dt * vlat;
        vlat = vlat + dt * a;
      } else {
        Vec k1q = vlat, k1v = accel(qlat, vlat, tau_eff);
        Vec k2q = vlat + 0.5 * dt * k1v;
        Vec k2v = accel(qlat + 0.5 * dt * k1q, vlat + 0.5 * dt * k1v, tau_eff);
        Vec k3q = vlat + 0.5 * dt * k2v;
        Vec k3v = accel(qlat + 0.5 * dt * k2q, vlat + 0.5 * dt * k2v, tau_eff);
        Vec k4q = vlat + dt * k3v;
        Vec k4v = accel(qlat + dt * k3q, vlat + dt * k3v, tau_eff);
        qlat = qlat + (dt / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        vlat = vlat + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
      }
      const State& target = truth.states[k + 1];
      auto [qrec, vrec] = net::ae_decode_jvp(e, b.ae, Mat(qlat), Mat(vlat));
      out.position.push_back((Vec(qrec) - target.q).norm());
      out.velocity.push_back((Vec(vrec) - target.dq).norm());
      Vec target_lat = net::ae_encode(e, b.ae, Mat(target.q));
      out.latent.push_back((qlat - target_lat).norm());
    }
  }
  auto mean = [](const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double a = 0.0;
    for (double x : v) a += x;
    return a / static_cast<double>(v.size());
  };
  out.mean_position = mean(out.position);
  out.mean_velocity = mean(out.velocity);
  out.mean_latent = mean(out.latent);
  return out;
}

}  // namespace rolnn::rom
