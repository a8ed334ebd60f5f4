#include "rolnn/ae.hpp"

namespace rolnn::net {

SigmaConsts::SigmaConsts(double alpha_) : alpha(alpha_) {
  if (!(alpha > 0.0 && alpha < M_PI / 4.0))
    throw num::DomainError("SigmaConsts: alpha must lie in (0, pi/4)");
  s = std::sin(alpha);
  c = std::cos(alpha);
  a = 1.0 / (s * s) - 1.0 / (c * c);
  b = 1.0 / (s * s) + 1.0 / (c * c);
  u_scale = 2.0 / (s * c);
  u_shift = std::sqrt(2.0) / c;
  y_shift = std::sqrt(2.0) / (a * s);
}

Vec ae_sigma(const Vec& x, double alpha, bool plus) {
  diff::ValueEngine e;
  SigmaConsts k(alpha);
  return ae_sigma_eval(e, k, Mat(x), plus);
}

double ConstrainedAEParams::biorth_residual() const {
  double worst = 0.0;
  for (const auto& l : layers)
    worst = std::max(worst, geo::bio_residual({l.phi, l.psi}));
  return worst;
}

ConstrainedAEParams ae_init(const std::vector<int>& sizes, double alpha, std::mt19937_64& rng,
                            bool biorthogonal) {
  if (sizes.size() < 2) throw num::DomainError("ae_init: need at least two sizes");
  for (size_t i = 0; i + 1 < sizes.size(); ++i)
    if (sizes[i] > sizes[i + 1])
      throw num::DomainError("ae_init: layer sizes must be monotone non-decreasing");
  ConstrainedAEParams p;
  p.alpha = alpha;
  p.biorthogonal = biorthogonal;
  std::normal_distribution<double> d(0.0, 1.0);
  for (size_t i = 0; i + 1 < sizes.size(); ++i) {
    Mat g(sizes[i + 1], sizes[i]);
    for (Eigen::Index r = 0; r < g.rows(); ++r)
      for (Eigen::Index c = 0; c < g.cols(); ++c) g(r, c) = d(rng);
    Eigen::HouseholderQR<Mat> qr(g);
    Mat q = qr.householderQ() * Mat::Identity(sizes[i + 1], sizes[i]);
    p.layers.push_back({q, q, Vec::Zero(sizes[i + 1])});
  }
  return p;
}

Vec ae_encode_value(const ConstrainedAEParams& p, const Vec& q) {
  diff::ValueEngine e;
  auto b = bind_ae(e, p);
  return ae_encode(e, b, Mat(q));
}

Vec ae_decode_value(const ConstrainedAEParams& p, const Vec& qlat) {
  diff::ValueEngine e;
  auto b = bind_ae(e, p);
  return ae_decode(e, b, Mat(qlat));
}

std::pair<Mat, Mat> ae_jacobians(const ConstrainedAEParams& p, const Vec& qlat) {
  diff::ValueEngine e;
  auto b = bind_ae(e, p);
  Mat dphi = ae_decode_jacobian(e, b, Mat(qlat));
  Mat q = ae_decode(e, b, Mat(qlat));
  Mat drho = ae_encode_jacobian(e, b, q);
  return {dphi, drho};
}

std::pair<Vec, Vec> ae_second(const ConstrainedAEParams& p, const Vec& qlat, const Vec& vlat) {
  diff::ValueEngine e;
  auto b = bind_ae(e, p);
  auto [q, jv, kphi] = ae_decode_curv(e, b, Mat(qlat), Mat(vlat));
  auto [back, jr, krho] = ae_encode_curv(e, b, q, jv);
  (void)back;
  (void)jr;
  return {Vec(kphi), Vec(krho)};
}

Vec AEDecodeFunction::value(const Vec& x) const { return ae_decode_value(params, x); }
Mat AEDecodeFunction::jacobian(const Vec& x) const {
  diff::ValueEngine e;
  auto b = bind_ae(e, params);
  return ae_decode_jacobian(e, b, Mat(x));
}
Vec AEDecodeFunction::hessian_contract(const Vec& x, const Vec& v) const {
  diff::ValueEngine e;
  auto b = bind_ae(e, params);
  return std::get<2>(ae_decode_curv(e, b, Mat(x), Mat(v)));
}

Vec AEEncodeFunction::value(const Vec& x) const { return ae_encode_value(params, x); }
Mat AEEncodeFunction::jacobian(const Vec& x) const {
  diff::ValueEngine e;
  auto b = bind_ae(e, params);
  return ae_encode_jacobian(e, b, Mat(x));
}
Vec AEEncodeFunction::hessian_contract(const Vec& x, const Vec& v) const {
  diff::ValueEngine e;
  auto b = bind_ae(e, params);
  return std::get<2>(ae_encode_curv(e, b, Mat(x), Mat(v)));
}

}  // namespace rolnn::net
