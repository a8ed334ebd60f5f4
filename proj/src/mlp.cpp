#include "rolnn/mlp.hpp"

namespace rolnn::net {

MLPParams mlp_init(const std::vector<int>& sizes, Activation act, std::mt19937_64& rng) {
  if (sizes.size() < 2) throw num::DomainError("mlp_init: need at least input and output sizes");
  MLPParams p;
  p.act = act;
  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
    std::uniform_real_distribution<double> d(-bound, bound);
    Mat w(sizes[l + 1], sizes[l]);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = d(rng);
    p.w.push_back(std::move(w));
    p.b.push_back(Vec::Zero(sizes[l + 1]));
  }
  return p;
}

Vec MLPFunction::value(const Vec& x) const {
  diff::ValueEngine e;
  auto b = bind_mlp(e, params);
  return mlp_forward(e, b, Mat(x));
}

Mat MLPFunction::jacobian(const Vec& x) const {
  diff::ValueEngine e;
  auto b = bind_mlp(e, params);
  return mlp_with_jacobian(e, b, Mat(x)).second;
}

Vec MLPFunction::hessian_contract(const Vec& x, const Vec& v) const {
  diff::ValueEngine e;
  auto b = bind_mlp(e, params);
  return std::get<2>(mlp_with_hessian_contract(e, b, Mat(x), Mat(v)));
}

}  // namespace rolnn::net
