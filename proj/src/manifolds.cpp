#include "rolnn/manifolds.hpp"

#include <cmath>

namespace rolnn::geo {

using num::spd_logm;
using num::spd_sqrt_pair;
using num::sym_eig;
using num::symmetrize;

double spd_inner(const Mat& sigma, const Mat& t1, const Mat& t2) {
  if (sigma.rows() != t1.rows() || t1.rows() != t2.rows() || sigma.rows() != sigma.cols())
    throw num::DomainError("spd_inner: dimension mismatch");
  Eigen::LLT<Mat> llt(symmetrize(sigma));
  if (llt.info() != Eigen::Success) throw num::DomainError("spd_inner: base point not PD");
  Mat a = llt.solve(t1);
  Mat b = llt.solve(t2);
  return (a * b).trace();
}

double spd_dist(const Mat& lambda, const Mat& sigma) {
  auto [sq, sqi] = spd_sqrt_pair(sigma);
  Mat m = spd_logm(symmetrize(sqi * lambda * sqi));
  return m.norm();
}

Mat spd_exp(const Mat& sigma, const Mat& l) {
  auto [sq, sqi] = spd_sqrt_pair(sigma);
  return symmetrize(sq * num::spd_expm(symmetrize(sqi * l * sqi)) * sq);
}

Mat spd_log(const Mat& sigma, const Mat& lambda) {
  auto [sq, sqi] = spd_sqrt_pair(sigma);
  return symmetrize(sq * spd_logm(symmetrize(sqi * lambda * sqi)) * sq);
}

Mat spd_transport(const Mat& sigma, const Mat& lambda, const Mat& t) {
  auto [sql, sqli] = spd_sqrt_pair(lambda);
  auto [sqs, sqsi] = spd_sqrt_pair(sigma);
  Mat a = sql * sqsi;
  return symmetrize(a * t * a.transpose());
}

Mat spd_riemannian_grad(const Mat& sigma, const Mat& g) {
  Mat gs = 0.5 * (g + g.transpose());
  return symmetrize(sigma * gs * sigma);
}

// ---------------------------------------------------------------------------

double bio_residual(const BiorthPair& p) {
  Mat r = p.psi.transpose() * p.phi - Mat::Identity(p.d(), p.d());
  return r.cwiseAbs().maxCoeff();
}

double bio_tangent_residual(const BiorthPair& p, const BiorthTangent& t) {
  Mat r = t.w.transpose() * p.phi + p.psi.transpose() * t.v;
  return r.cwiseAbs().maxCoeff();
}

BiorthTangent bio_project(const BiorthPair& p, const Mat& x, const Mat& y) {
  if (x.rows() != p.n() || x.cols() != p.d() || y.rows() != p.n() || y.cols() != p.d())
    throw num::DomainError("bio_project: dimension mismatch");
  Mat a = num::solve_sylvester(p.phi.transpose() * p.phi, p.psi.transpose() * p.psi,
                               y.transpose() * p.phi + p.psi.transpose() * x);
  return {x - p.psi * a, y - p.phi * a.transpose()};
}

BiorthPair bio_retract(const BiorthPair& p, const BiorthTangent& t) {
  Mat inner = (p.psi + t.w).transpose() * (p.phi + t.v);
  Eigen::JacobiSVD<Mat> svd(inner);
  double smin = svd.singularValues().minCoeff();
  double smax = svd.singularValues().maxCoeff();
  if (smin <= 0.0 || smax / smin > 1e12)
    throw StepTooLarge("bio_retract: inner matrix near singular, shrink the step");
  Eigen::PartialPivLU<Mat> lu(inner);
  return {(p.phi + t.v) * lu.inverse(), p.psi + t.w};
}

BiorthTangent bio_transport(const BiorthPair& p1, const BiorthPair& p2, const BiorthTangent& t) {
  (void)p1;  // projective transport depends only on the target point
  return bio_project(p2, t.v, t.w);
}

// ---------------------------------------------------------------------------

ProductTangent zero_tangent(const ProductPoint& p) {
  ProductTangent t;
  t.comps.reserve(p.comps.size());
  for (const auto& c : p.comps) {
    Component z;
    z.kind = c.kind;
    z.a = Mat::Zero(c.a.rows(), c.a.cols());
    if (c.kind == Kind::Biorth) z.b = Mat::Zero(c.b.rows(), c.b.cols());
    t.comps.push_back(std::move(z));
  }
  return t;
}

ProductPoint product_exp(const ProductPoint& p, const ProductTangent& t, double scale) {
  if (p.comps.size() != t.comps.size())
    throw num::DomainError("product_exp: component count mismatch");
  ProductPoint out = p;
  for (size_t i = 0; i < p.comps.size(); ++i) {
    const Component& c = p.comps[i];
    const Component& d = t.comps[i];
    if (c.kind != d.kind) throw num::DomainError("product_exp: component kind mismatch");
    switch (c.kind) {
      case Kind::Euclidean:
        out.comps[i].a = c.a + scale * d.a;
        break;
      case Kind::SPD:
        out.comps[i].a = spd_exp(c.a, scale * d.a);
        break;
      case Kind::Biorth: {
        BiorthPair np = bio_retract({c.a, c.b}, {scale * d.a, scale * d.b});
        out.comps[i].a = np.phi;
        out.comps[i].b = np.psi;
        break;
      }
    }
  }
  return out;
}

ProductTangent product_transport(const ProductPoint& p1, const ProductPoint& p2,
                                 const ProductTangent& t) {
  ProductTangent out = t;
  for (size_t i = 0; i < t.comps.size(); ++i) {
    switch (t.comps[i].kind) {
      case Kind::Euclidean:
        break;  // identity transport
      case Kind::SPD:
        out.comps[i].a = spd_transport(p1.comps[i].a, p2.comps[i].a, t.comps[i].a);
        break;
      case Kind::Biorth: {
        BiorthTangent nt = bio_transport({p1.comps[i].a, p1.comps[i].b},
                                         {p2.comps[i].a, p2.comps[i].b},
                                         {t.comps[i].a, t.comps[i].b});
        out.comps[i].a = nt.v;
        out.comps[i].b = nt.w;
        break;
      }
    }
  }
  return out;
}

double product_inner(const ProductPoint& p, const ProductTangent& t1, const ProductTangent& t2) {
  double acc = 0.0;
  for (size_t i = 0; i < p.comps.size(); ++i) {
    switch (p.comps[i].kind) {
      case Kind::Euclidean:
        acc += (t1.comps[i].a.array() * t2.comps[i].a.array()).sum();
        break;
      case Kind::SPD:
        acc += spd_inner(p.comps[i].a, t1.comps[i].a, t2.comps[i].a);
        break;
      case Kind::Biorth:
        acc += (t1.comps[i].a.array() * t2.comps[i].a.array()).sum() +
               (t1.comps[i].b.array() * t2.comps[i].b.array()).sum();
        break;
    }
  }
  return acc;
}

ProductTangent to_riemannian(const ProductPoint& p, const ProductTangent& ambient) {
  ProductTangent out = ambient;
  for (size_t i = 0; i < p.comps.size(); ++i) {
    switch (p.comps[i].kind) {
      case Kind::Euclidean:
        break;
      case Kind::SPD:
        out.comps[i].a = spd_riemannian_grad(p.comps[i].a, ambient.comps[i].a);
        break;
      case Kind::Biorth: {
        BiorthTangent t = bio_project({p.comps[i].a, p.comps[i].b}, ambient.comps[i].a,
                                      ambient.comps[i].b);
        out.comps[i].a = t.v;
        out.comps[i].b = t.w;
        break;
      }
    }
  }
  return out;
}

double manifold_residual(const ProductPoint& p) {
  double worst = 0.0;
  for (const auto& c : p.comps) {
    switch (c.kind) {
      case Kind::Euclidean:
        break;
      case Kind::SPD: {
        double asym = (c.a - c.a.transpose()).cwiseAbs().maxCoeff();
        double lam = num::min_eigenvalue(c.a);
        worst = std::max(worst, asym);
        if (lam <= 0.0) worst = std::max(worst, 1.0 - lam);
        break;
      }
      case Kind::Biorth:
        worst = std::max(worst, bio_residual({c.a, c.b}));
        break;
    }
  }
  return worst;
}

}  // namespace rolnn::geo
