#include "rolnn/spdnet.hpp"

namespace rolnn::net {

namespace {

Mat random_small_spd(int n, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, scale);
  Mat s(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s(i, j) = d(rng);
  return num::spd_expm(0.5 * (s + s.transpose()));
}

}  // namespace

SPDNetParams spdnet_init(int in_dim, int mass_dim, const std::vector<int>& hidden,
                         bool learned_basepoint, const std::vector<SpdLayerKind>& layers,
                         std::mt19937_64& rng, double reeig_eps) {
  SPDNetParams p;
  p.dim = mass_dim;
  std::vector<int> sizes{in_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(mass_dim * (mass_dim + 1) / 2);
  p.head = mlp_init(sizes, Activation::SoftPlus, rng);
  p.learned_basepoint = learned_basepoint;
  p.basepoint = learned_basepoint ? random_small_spd(mass_dim, 0.05, rng)
                                  : Mat::Identity(mass_dim, mass_dim);
  for (SpdLayerKind k : layers) {
    SpdLayer l;
    l.kind = k;
    l.eps = reeig_eps;
    if (k != SpdLayerKind::ReEig) {
      l.a = random_small_spd(mass_dim, 0.1, rng);
      l.b = random_small_spd(mass_dim, 0.1, rng);
    }
    p.layers.push_back(std::move(l));
  }
  return p;
}

CholeskyHeadParams cholesky_init(int in_dim, int mass_dim, const std::vector<int>& hidden,
                                 std::mt19937_64& rng) {
  CholeskyHeadParams p;
  p.dim = mass_dim;
  std::vector<int> sizes{in_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(mass_dim * (mass_dim + 1) / 2);
  p.mlp = mlp_init(sizes, Activation::SoftPlus, rng);
  return p;
}

SharedTrunkParams shared_trunk_init(int in_dim, int mass_dim, const std::vector<int>& hidden,
                                    std::mt19937_64& rng) {
  if (hidden.empty()) throw num::DomainError("shared_trunk_init: need at least one hidden layer");
  SharedTrunkParams p;
  p.dim = mass_dim;
  std::vector<int> sizes{in_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  p.trunk = mlp_init(sizes, Activation::SoftPlus, rng);
  p.trunk.act_out = true;
  const int h = hidden.back();
  const int tri = mass_dim * (mass_dim + 1) / 2;
  double bound = 1.0 / std::sqrt(static_cast<double>(h));
  std::uniform_real_distribution<double> d(-bound, bound);
  p.head_l = Mat::NullaryExpr(tri, h, [&] { return d(rng); });
  p.head_lb = Vec::Zero(tri);
  p.head_v = Mat::NullaryExpr(1, h, [&] { return d(rng); });
  p.head_vb = Vec::Zero(1);
  return p;
}

Mat expmap_layer(const Mat& u, const Mat& basepoint) {
  return rolnn::geo::spd_exp(basepoint, u);
}

Mat gyroai_forward(const Mat& x, const Mat& a, const Mat& b) {
  diff::ValueEngine e;
  BoundSpdLayer<diff::ValueEngine> l;
  l.kind = SpdLayerKind::GyroAI;
  l.a = a;
  l.b = b;
  return spd_layer_forward(e, l, x);
}

Mat gyrospdpp_forward(const Mat& x, const Mat& a, const Mat& b) {
  diff::ValueEngine e;
  BoundSpdLayer<diff::ValueEngine> l;
  l.kind = SpdLayerKind::GyroSpdPP;
  l.a = a;
  l.b = b;
  l.b_isqrt = num::spd_sqrt_inv(b);
  return spd_layer_forward(e, l, x);
}

Mat reeig(const Mat& x, double eps) {
  diff::ValueEngine e;
  return e.sym_matfunc(diff::MatFuncTag::ClampMin, x, eps);
}

Vec sym_to_tri(const Mat& s) {
  const int n = static_cast<int>(s.rows());
  Vec v(n * (n + 1) / 2);
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) v(k++) = s(i, j);
  return v;
}

Mat sym_assemble(const Vec& v) {
  const int m = static_cast<int>(v.size());
  int n = static_cast<int>((std::sqrt(8.0 * m + 1.0) - 1.0) / 2.0 + 0.5);
  if (n * (n + 1) / 2 != m) throw num::DomainError("sym_assemble: bad packed length");
  diff::ValueEngine e;
  return e.sym_from_tri(Mat(v), n);
}

}  // namespace rolnn::net
