#include "rolnn/diff.hpp"

#include <cmath>

namespace rolnn::diff {

GradientResult gradient(const ProductLoss& loss, const geo::ProductPoint& at) {
  Tape tape;
  TapeEngine eng{&tape};
  std::vector<LeafPair> leaves;
  leaves.reserve(at.comps.size());
  for (const auto& c : at.comps) {
    LeafPair lp;
    lp.a = eng.lift(c.a);
    lp.b = (c.kind == geo::Kind::Biorth) ? eng.lift(c.b) : MVar{};
    leaves.push_back(lp);
  }
  MVar out = loss(eng, leaves);
  double value = tape.val(out.i)(0, 0);
  if (!std::isfinite(value)) throw TrainingDivergence("gradient: non-finite loss value");
  tape.backward(out.i);

  geo::ProductTangent ambient;
  ambient.comps.reserve(at.comps.size());
  for (size_t i = 0; i < at.comps.size(); ++i) {
    geo::Component g;
    g.kind = at.comps[i].kind;
    g.a = tape.adjoint(leaves[i].a.i);
    if (g.kind == geo::Kind::Biorth) g.b = tape.adjoint(leaves[i].b.i);
    if (!g.a.allFinite() || (g.b.size() && !g.b.allFinite()))
      throw TrainingDivergence("gradient: non-finite gradient component");
    ambient.comps.push_back(std::move(g));
  }
  GradientResult r;
  r.value = value;
  r.ambient_grad = ambient;
  r.grad = geo::to_riemannian(at, ambient);
  return r;
}

Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x) {
  Vec fx = f(x);
  Mat j(fx.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double h = 1e-6 * (1.0 + std::abs(x(i)));
    Vec xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    j.col(i) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return j;
}

FdReport fd_check(const std::function<Vec(const Vec&)>& f, const Vec& x, const Mat& analytic) {
  Mat j = fd_jacobian(f, x);
  FdReport rep;
  for (Eigen::Index c = 0; c < j.cols(); ++c) {
    for (Eigen::Index r = 0; r < j.rows(); ++r) {
      double scale = std::max({1e-6, std::abs(j(r, c)), std::abs(analytic(r, c))});
      double rel = std::abs(j(r, c) - analytic(r, c)) / scale;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_index = static_cast<int>(c * j.rows() + r);
      }
    }
  }
  return rep;
}

FdReport fd_check_grad(const std::function<double(const Vec&)>& f, const Vec& x,
                       const Vec& analytic_grad) {
  auto wrapped = [&f](const Vec& v) { return Vec::Constant(1, f(v)); };
  return fd_check(wrapped, x, analytic_grad.transpose());
}

}  // namespace rolnn::diff
