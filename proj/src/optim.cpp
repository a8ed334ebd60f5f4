#include "rolnn/optim.hpp"

#include <iostream>

#include "rolnn/tape.hpp"

namespace rolnn::opt {

RiemannianAdam::RiemannianAdam(std::vector<ParamGroup> groups, AdamConfig cfg,
                               const geo::ProductPoint& init)
    : groups_(std::move(groups)), cfg_(cfg) {
  state_.resize(init.comps.size());
  comp_lr_.assign(init.comps.size(), -1.0);
  for (size_t i = 0; i < init.comps.size(); ++i) {
    const auto& c = init.comps[i];
    state_[i].m.kind = c.kind;
    state_[i].m.a = Mat::Zero(c.a.rows(), c.a.cols());
    if (c.kind == geo::Kind::Biorth) state_[i].m.b = Mat::Zero(c.b.rows(), c.b.cols());
    if (c.kind == geo::Kind::Euclidean) state_[i].v = Mat::Zero(c.a.rows(), c.a.cols());
  }
  for (const auto& g : groups_)
    for (size_t idx : g.comps) {
      if (idx >= comp_lr_.size() || comp_lr_[idx] >= 0.0)
        throw num::DomainError("RiemannianAdam: groups must cover each component exactly once");
      comp_lr_[idx] = g.lr;
    }
  for (double lr : comp_lr_)
    if (lr < 0.0) throw num::DomainError("RiemannianAdam: component not covered by any group");
}

void RiemannianAdam::set_group_lr(const std::string& name, double lr) {
  bool found = false;
  for (auto& g : groups_)
    if (g.name == name) {
      g.lr = lr;
      for (size_t idx : g.comps) comp_lr_[idx] = lr;
      found = true;
    }
  if (!found) throw num::DomainError("set_group_lr: no group named " + name);
}

geo::ProductPoint RiemannianAdam::step(const geo::ProductPoint& params,
                                       const geo::ProductTangent& grad) {
  if (params.comps.size() != state_.size() || grad.comps.size() != state_.size())
    throw num::DomainError("RiemannianAdam::step: component count mismatch");

  double gnorm2 = 0.0;
  for (size_t i = 0; i < grad.comps.size(); ++i) {
    const auto& g = grad.comps[i];
    if (!g.a.allFinite() || (g.b.size() && !g.b.allFinite()))
      throw diff::TrainingDivergence("RiemannianAdam: non-finite gradient");
    switch (g.kind) {
      case geo::Kind::Euclidean:
      case geo::Kind::Biorth:
        gnorm2 += g.a.squaredNorm() + g.b.squaredNorm();
        break;
      case geo::Kind::SPD:
        gnorm2 += geo::spd_inner(params.comps[i].a, g.a, g.a);
        break;
    }
  }
  double clip = 1.0;
  if (cfg_.clip_norm > 0.0 && gnorm2 > cfg_.clip_norm * cfg_.clip_norm)
    clip = cfg_.clip_norm / std::sqrt(gnorm2);

  ++step_count_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));

  geo::ProductPoint out = params;
  for (size_t i = 0; i < params.comps.size(); ++i) {
    const double lr = comp_lr_[i];
    if (lr == 0.0) continue;
    const auto& p = params.comps[i];
    CompState& st = state_[i];
    switch (p.kind) {
      case geo::Kind::Euclidean: {
        Mat g = clip * grad.comps[i].a;
        st.m.a = cfg_.beta1 * st.m.a + (1.0 - cfg_.beta1) * g;
        st.v = cfg_.beta2 * st.v + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
        Mat mhat = st.m.a / bc1;
        Mat vhat = st.v / bc2;
        Mat denom = vhat.cwiseSqrt() + Mat::Constant(vhat.rows(), vhat.cols(), cfg_.eps);
        out.comps[i].a = p.a - Mat(lr * mhat).cwiseQuotient(denom);
        break;
      }
      case geo::Kind::SPD: {
        Mat g = clip * grad.comps[i].a;
        st.m.a = cfg_.beta1 * st.m.a + (1.0 - cfg_.beta1) * g;
        st.v2 = cfg_.beta2 * st.v2 + (1.0 - cfg_.beta2) * geo::spd_inner(p.a, g, g);
        Mat eta = (st.m.a / bc1) / (std::sqrt(st.v2 / bc2) + cfg_.eps);
        out.comps[i].a = geo::spd_exp(p.a, -lr * eta);
        st.m.a = geo::spd_transport(p.a, out.comps[i].a, st.m.a);
        break;
      }
      case geo::Kind::Biorth: {
        Mat gv = clip * grad.comps[i].a;
        Mat gw = clip * grad.comps[i].b;
        st.m.a = cfg_.beta1 * st.m.a + (1.0 - cfg_.beta1) * gv;
        st.m.b = cfg_.beta1 * st.m.b + (1.0 - cfg_.beta1) * gw;
        st.v2 = cfg_.beta2 * st.v2 +
                (1.0 - cfg_.beta2) * (gv.squaredNorm() + gw.squaredNorm());
        double denom = std::sqrt(st.v2 / bc2) + cfg_.eps;
        Mat ev = (st.m.a / bc1) / denom;
        Mat ew = (st.m.b / bc1) / denom;
        geo::BiorthPair cur{p.a, p.b};
        double step_lr = lr;
        bool done = false;
        for (int attempt = 0; attempt < 60 && !done; ++attempt) {
          try {
            geo::BiorthPair np = geo::bio_retract(cur, {-step_lr * ev, -step_lr * ew});
            out.comps[i].a = np.phi;
            out.comps[i].b = np.psi;
            done = true;
          } catch (const geo::StepTooLarge&) {
            step_lr *= 0.5;
            ++halved_steps_;
            std::cerr << "[optim] biorthogonal retraction step too large on component " << i
                      << ", halving to " << step_lr << "\n";
          }
        }
        if (!done)
          throw num::NumericalError("RiemannianAdam: biorthogonal retraction failed", 0.0);
        geo::BiorthTangent moved =
            geo::bio_transport(cur, {out.comps[i].a, out.comps[i].b}, {st.m.a, st.m.b});
        st.m.a = moved.v;
        st.m.b = moved.w;
        break;
      }
    }
  }
  return out;
}

Vec reference_adam_step(Vec theta, const Vec& g, Vec& m, Vec& v, int64_t t, double lr,
                        const AdamConfig& cfg) {
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
  Vec mhat = m / (1.0 - std::pow(cfg.beta1, static_cast<double>(t)));
  Vec vhat = v / (1.0 - std::pow(cfg.beta2, static_cast<double>(t)));
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    theta(i) -= lr * mhat(i) / (std::sqrt(vhat(i)) + cfg.eps);
  return theta;
}

}  // namespace rolnn::opt
