#include "rolnn/lagrangian.hpp"

namespace rolnn::lag {

namespace {

void push_mlp(const net::MLPParams& p, geo::ProductPoint& out) {
  for (size_t l = 0; l < p.w.size(); ++l) {
    out.comps.push_back({geo::Kind::Euclidean, p.w[l], {}});
    out.comps.push_back({geo::Kind::Euclidean, Mat(p.b[l]), {}});
  }
}

void pull_mlp(net::MLPParams& p, const geo::ProductPoint& in, size_t& k) {
  for (size_t l = 0; l < p.w.size(); ++l) {
    p.w[l] = in.comps[k++].a;
    p.b[l] = in.comps[k++].a.col(0);
  }
}

}  // namespace

geo::ProductPoint collect_params(const LagrangianModel& m) {
  geo::ProductPoint out;
  switch (m.kind) {
    case MassKind::SpdNet:
      push_mlp(m.spd.head, out);
      if (m.spd.learned_basepoint) out.comps.push_back({geo::Kind::SPD, m.spd.basepoint, {}});
      for (const auto& l : m.spd.layers) {
        if (l.kind == net::SpdLayerKind::ReEig) continue;
        out.comps.push_back({geo::Kind::SPD, l.a, {}});
        out.comps.push_back({geo::Kind::SPD, l.b, {}});
      }
      break;
    case MassKind::Cholesky:
      push_mlp(m.chol.mlp, out);
      break;
    case MassKind::SharedCholesky:
      push_mlp(m.shared.trunk, out);
      out.comps.push_back({geo::Kind::Euclidean, m.shared.head_l, {}});
      out.comps.push_back({geo::Kind::Euclidean, Mat(m.shared.head_lb), {}});
      out.comps.push_back({geo::Kind::Euclidean, m.shared.head_v, {}});
      out.comps.push_back({geo::Kind::Euclidean, Mat(m.shared.head_vb), {}});
      break;
  }
  if (m.kind != MassKind::SharedCholesky) push_mlp(m.potential, out);
  return out;
}

void assign_params(LagrangianModel& m, const geo::ProductPoint& p) {
  size_t k = 0;
  switch (m.kind) {
    case MassKind::SpdNet:
      pull_mlp(m.spd.head, p, k);
      if (m.spd.learned_basepoint) m.spd.basepoint = p.comps[k++].a;
      for (auto& l : m.spd.layers) {
        if (l.kind == net::SpdLayerKind::ReEig) continue;
        l.a = p.comps[k++].a;
        l.b = p.comps[k++].a;
      }
      break;
    case MassKind::Cholesky:
      pull_mlp(m.chol.mlp, p, k);
      break;
    case MassKind::SharedCholesky:
      pull_mlp(m.shared.trunk, p, k);
      m.shared.head_l = p.comps[k++].a;
      m.shared.head_lb = p.comps[k++].a.col(0);
      m.shared.head_v = p.comps[k++].a;
      m.shared.head_vb = p.comps[k++].a.col(0);
      break;
  }
  if (m.kind != MassKind::SharedCholesky) pull_mlp(m.potential, p, k);
  if (k != p.comps.size()) throw num::DomainError("assign_params: component count mismatch");
}

namespace {

BoundLagrangian<ValueEngine> bind_value(const ValueEngine& e, const LagrangianModel& m) {
  geo::ProductPoint p = collect_params(m);
  CompList<ValueEngine> comps = comps_from_point(e, p);
  size_t k = 0;
  return bind_lagrangian(e, m, comps, k);
}

}  // namespace

Mat mass_matrix(const LagrangianModel& m, const Vec& q) {
  ValueEngine e;
  auto b = bind_value(e, m);
  return mass_matrix(e, b, Mat(q));
}

double kinetic_energy(const LagrangianModel& m, const State& s) {
  Mat mm = mass_matrix(m, s.q);
  return 0.5 * s.dq.dot(mm * s.dq);
}

double potential_energy(const LagrangianModel& m, const State& s) {
  ValueEngine e;
  auto b = bind_value(e, m);
  if (m.kind == MassKind::SharedCholesky)
    return net::shared_forward(e, b.shared, Mat(s.q), false).potential(0, 0);
  return net::mlp_forward(e, b.potential, Mat(s.q))(0, 0);
}

double total_energy(const LagrangianModel& m, const State& s) {
  return kinetic_energy(m, s) + potential_energy(m, s);
}

double lagrangian_value(const LagrangianModel& m, const State& s) {
  return kinetic_energy(m, s) - potential_energy(m, s);
}

Vec coriolis(const LagrangianModel& m, const Vec& q, const Vec& dq) {
  ValueEngine e;
  auto b = bind_value(e, m);
  return dynamics_terms(e, b, Mat(q), Mat(dq)).coriolis;
}

Vec gravity(const LagrangianModel& m, const Vec& q) {
  ValueEngine e;
  auto b = bind_value(e, m);
  return dynamics_terms(e, b, Mat(q), Mat(Vec::Zero(q.size()))).gravity;
}

Vec forward_dynamics(const LagrangianModel& m, const Vec& q, const Vec& dq, const Vec& tau) {
  ValueEngine e;
  auto b = bind_value(e, m);
  DynTerms<ValueEngine> t = dynamics_terms(e, b, Mat(q), Mat(dq));
  double cond = num::sym_cond(t.mass);
  if (cond > 1e12)
    throw ConditioningError("forward_dynamics: mass matrix condition " + std::to_string(cond),
                            cond);
  return e.solve_llt(t.mass, Mat(Vec(tau - Vec(t.coriolis) - Vec(t.gravity))));
}

Trajectory integrate_ode(const AccelFn& f, const State& initial, int steps, double dt,
                         Scheme scheme) {
  if (dt <= 0.0) throw num::DomainError("integrate: dt must be positive");
  Trajectory out;
  out.dt = dt;
  out.states.reserve(steps + 1);
  Vec q = initial.q, dq = initial.dq;
  for (int k = 0; k <= steps; ++k) {
    double t = k * dt;
    State s;
    s.q = q;
    s.dq = dq;
    s.ddq = f(t, q, dq);
    out.states.push_back(s);
    if (k == steps) break;
    if (scheme == Scheme::EulerForward) {
      Vec nq = q + dt * dq;
      Vec ndq = dq + dt * s.ddq;
      q = nq;
      dq = ndq;
    } else {
      Vec k1q = dq, k1v = s.ddq;
      Vec k2q = dq + 0.5 * dt * k1v;
      Vec k2v = f(t + 0.5 * dt, q + 0.5 * dt * k1q, dq + 0.5 * dt * k1v);
      Vec k3q = dq + 0.5 * dt * k2v;
      Vec k3v = f(t + 0.5 * dt, q + 0.5 * dt * k2q, dq + 0.5 * dt * k2v);
      Vec k4q = dq + dt * k3v;
      Vec k4v = f(t + dt, q + dt * k3q, dq + dt * k3v);
      q = q + (dt / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
      dq = dq + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    if (!q.allFinite() || !dq.allFinite())
      throw DivergenceError("integrate: non-finite state", k + 1);
  }
  return out;
}

Trajectory integrate(const LagrangianModel& m, const State& initial, const std::vector<Vec>& taus,
                     int steps, double dt, Scheme scheme) {
  if (dt <= 0.0) throw num::DomainError("integrate: dt must be positive");
  ValueEngine e;
  auto b = bind_value(e, m);
  auto accel = [&](const Vec& q, const Vec& dq, const Vec& tau) -> Vec {
    DynTerms<ValueEngine> t = dynamics_terms(e, b, Mat(q), Mat(dq));
    return e.solve_llt(t.mass, Mat(Vec(tau - Vec(t.coriolis) - Vec(t.gravity))));
  };
  Trajectory out;
  out.dt = dt;
  out.states.reserve(steps + 1);
  Vec q = initial.q, dq = initial.dq;
  for (int k = 0; k <= steps; ++k) {
    // forces are held constant across each step
    Vec tau = (k < static_cast<int>(taus.size())) ? taus[k] : Vec(Vec::Zero(q.size()));
    State s;
    s.q = q;
    s.dq = dq;
    s.tau = tau;
    s.ddq = accel(q, dq, tau);
    out.states.push_back(s);
    if (k == steps) break;
    if (scheme == Scheme::EulerForward) {
      Vec nq = q + dt * dq;
      Vec ndq = dq + dt * s.ddq;
      q = nq;
      dq = ndq;
    } else {
      Vec k1q = dq, k1v = s.ddq;
      Vec k2q = dq + 0.5 * dt * k1v, k2v = accel(q + 0.5 * dt * k1q, dq + 0.5 * dt * k1v, tau);
      Vec k3q = dq + 0.5 * dt * k2v, k3v = accel(q + 0.5 * dt * k2q, dq + 0.5 * dt * k2v, tau);
      Vec k4q = dq + dt * k3v, k4v = accel(q + dt * k3q, dq + dt * k3v, tau);
      q = q + (dt / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
      dq = dq + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    if (!q.allFinite() || !dq.allFinite())
      throw DivergenceError("integrate: non-finite state", k + 1);
  }
  return out;
}

LossBreakdown lnn_acc_loss(const LagrangianModel& m, std::span<const State> batch) {
  ValueEngine e;
  auto b = bind_value(e, m);
  return lnn_acc_loss_t(e, b, batch).second;
}

LossBreakdown lnn_multistep_loss(const LagrangianModel& m, std::span<const Window> windows,
                                 double dt) {
  ValueEngine e;
  auto b = bind_value(e, m);
  return lnn_multistep_loss_t(e, b, windows, dt).second;
}

}  // namespace rolnn::lag
