#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <utility>

namespace rolnn::num {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Numerical failure carrying a residual (non-convergence, singular operator).
struct NumericalError : std::runtime_error {
  double residual;
  NumericalError(const std::string& what, double res)
      : std::runtime_error(what), residual(res) {}
};

/// Domain violation (non-PD input, bad dimension).
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Canonical symmetrization: copies the upper triangle onto the lower.
Mat symmetrize(const Mat& a);

inline bool is_square(const Mat& a) { return a.rows() == a.cols(); }

/// Symmetric eigendecomposition, eigenvalues ascending, V orthonormal,
/// S = V diag(w) V^T. Throws NumericalError on non-convergence.
struct EigH {
  Vec values;
  Mat vectors;
};
EigH sym_eig(const Mat& s);

/// Matrix exponential of a symmetric matrix; result is SPD.
Mat spd_expm(const Mat& u);

/// Matrix logarithm of an SPD matrix; throws DomainError naming the
/// offending eigenvalue when the input is not positive definite.
Mat spd_logm(const Mat& s);

/// Principal square root of an SPD matrix, and its inverse.
Mat spd_sqrt(const Mat& s);
Mat spd_sqrt_inv(const Mat& s);
/// Both at once (shares one eigendecomposition).
std::pair<Mat, Mat> spd_sqrt_pair(const Mat& s);

/// Solves A*P + Q*A = C for A, with P and Q symmetric positive definite.
Mat solve_sylvester(const Mat& p, const Mat& q, const Mat& c);

/// Smallest eigenvalue of a symmetric matrix (PD certificate helper).
double min_eigenvalue(const Mat& s);

/// cond_2 of a symmetric matrix via its spectrum.
double sym_cond(const Mat& s);

}  // namespace rolnn::num
