#include "rolnn/numerics.hpp"

#include <cmath>

namespace rolnn::num {

Mat symmetrize(const Mat& a) {
  Mat s(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    s(i, i) = a(i, i);
    for (Eigen::Index j = i + 1; j < a.cols(); ++j) {
      s(i, j) = a(i, j);
      s(j, i) = a(i, j);
    }
  }
  return s;
}

EigH sym_eig(const Mat& s) {
  if (!is_square(s)) throw DomainError("sym_eig: matrix not square");
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  if (es.info() != Eigen::Success) {
    // residual of the partial factorization is not available; report the
    // off-diagonal mass that failed to converge
    double res = (s - s.transpose()).norm();
    throw NumericalError("sym_eig: iteration did not converge", res);
  }
  return {es.eigenvalues(), es.eigenvectors()};
}

namespace {

// f applied to the spectrum of a symmetric matrix
template <typename F>
Mat sym_matfunc(const Mat& s, F f) {
  EigH e = sym_eig(symmetrize(s));
  Vec fw(e.values.size());
  for (Eigen::Index i = 0; i < fw.size(); ++i) fw(i) = f(e.values(i));
  return e.vectors * fw.asDiagonal() * e.vectors.transpose();
}

void require_pd(const Vec& w, const char* op) {
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w(i) <= 0.0) {
      throw DomainError(std::string(op) + ": input not positive definite, eigenvalue " +
                        std::to_string(i) + " = " + std::to_string(w(i)));
    }
  }
}

}  // namespace

Mat spd_expm(const Mat& u) {
  return sym_matfunc(u, [](double x) { return std::exp(x); });
}

Mat spd_logm(const Mat& s) {
  EigH e = sym_eig(symmetrize(s));
  require_pd(e.values, "spd_logm");
  Vec fw = e.values.array().log();
  return e.vectors * fw.asDiagonal() * e.vectors.transpose();
}

Mat spd_sqrt(const Mat& s) {
  EigH e = sym_eig(symmetrize(s));
  require_pd(e.values, "spd_sqrt");
  Vec fw = e.values.array().sqrt();
  return e.vectors * fw.asDiagonal() * e.vectors.transpose();
}

Mat spd_sqrt_inv(const Mat& s) {
  EigH e = sym_eig(symmetrize(s));
  require_pd(e.values, "spd_sqrt_inv");
  Vec fw = e.values.array().sqrt().inverse();
  return e.vectors * fw.asDiagonal() * e.vectors.transpose();
}

std::pair<Mat, Mat> spd_sqrt_pair(const Mat& s) {
  EigH e = sym_eig(symmetrize(s));
  require_pd(e.values, "spd_sqrt_pair");
  Vec r = e.values.array().sqrt();
  Vec ri = r.array().inverse();
  return {e.vectors * r.asDiagonal() * e.vectors.transpose(),
          e.vectors * ri.asDiagonal() * e.vectors.transpose()};
}

Mat solve_sylvester(const Mat& p, const Mat& q, const Mat& c) {
  if (!is_square(p) || !is_square(q) || p.rows() != c.cols() || q.rows() != c.rows())
    throw DomainError("solve_sylvester: dimension mismatch");
  // A P + Q A = C with P, Q symmetric PD. In the eigenbases of P and Q the
  // equation decouples entrywise with strictly positive denominators.
  EigH ep = sym_eig(symmetrize(p));
  EigH eq = sym_eig(symmetrize(q));
  Mat ct = eq.vectors.transpose() * c * ep.vectors;
  Mat at(ct.rows(), ct.cols());
  for (Eigen::Index i = 0; i < ct.rows(); ++i) {
    for (Eigen::Index j = 0; j < ct.cols(); ++j) {
      double den = ep.values(j) + eq.values(i);
      if (std::abs(den) < 1e-300)
        throw NumericalError("solve_sylvester: singular combined operator", std::abs(den));
      at(i, j) = ct(i, j) / den;
    }
  }
  return eq.vectors * at * ep.vectors.transpose();
}

double min_eigenvalue(const Mat& s) { return sym_eig(symmetrize(s)).values.minCoeff(); }

double sym_cond(const Mat& s) {
  Vec w = sym_eig(symmetrize(s)).values.cwiseAbs();
  double lo = w.minCoeff();
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return w.maxCoeff() / lo;
}

}  // namespace rolnn::num
