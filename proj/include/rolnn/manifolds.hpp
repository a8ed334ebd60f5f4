#pragma once

#include <vector>

#include "rolnn/numerics.hpp"

namespace rolnn::geo {

using num::Mat;
using num::Vec;

// ---------------------------------------------------------------------------
// SPD manifold with the affine-invariant metric
// ---------------------------------------------------------------------------

/// <T1, T2>_Sigma = tr(Sigma^-1 T1 Sigma^-1 T2)
double spd_inner(const Mat& sigma, const Mat& t1, const Mat& t2);

/// Geodesic distance ||log(Sigma^-1/2 Lambda Sigma^-1/2)||_F
double spd_dist(const Mat& lambda, const Mat& sigma);

/// Exp_Sigma(L) = Sigma^1/2 exp(Sigma^-1/2 L Sigma^-1/2) Sigma^1/2
Mat spd_exp(const Mat& sigma, const Mat& l);

/// Log_Sigma(Lambda), inverse of spd_exp
Mat spd_log(const Mat& sigma, const Mat& lambda);

/// Parallel transport T from T_Sigma to T_Lambda: A T A^T, A = Lambda^1/2 Sigma^-1/2
Mat spd_transport(const Mat& sigma, const Mat& lambda, const Mat& t);

/// Ambient (Euclidean) gradient -> Riemannian gradient: Sigma sym(G) Sigma
Mat spd_riemannian_grad(const Mat& sigma, const Mat& g);

// ---------------------------------------------------------------------------
// Biorthogonal manifold B_{n,d} = { (Phi, Psi) : Psi^T Phi = I_d }
// ---------------------------------------------------------------------------

struct BiorthPair {
  Mat phi;
  Mat psi;
  Eigen::Index n() const { return phi.rows(); }
  Eigen::Index d() const { return phi.cols(); }
};

struct BiorthTangent {
  Mat v;  // direction paired with phi
  Mat w;  // direction paired with psi
};

/// Raised by bio_retract when the d x d inner matrix is near singular;
/// the caller should shrink the step.
struct StepTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// ||Psi^T Phi - I||_inf feasibility residual.
double bio_residual(const BiorthPair& p);

/// Tangent-space constraint residual ||W^T Phi + Psi^T V||_inf.
double bio_tangent_residual(const BiorthPair& p, const BiorthTangent& t);

/// Projection of an ambient pair (X, Y) onto the tangent space at p.
BiorthTangent bio_project(const BiorthPair& p, const Mat& x, const Mat& y);

/// First-order retraction ((Phi+V)[(Psi+W)^T(Phi+V)]^-1, Psi+W).
BiorthPair bio_retract(const BiorthPair& p, const BiorthTangent& t);

/// Moves a tangent at p1 into the tangent space at p2.
BiorthTangent bio_transport(const BiorthPair& p1, const BiorthPair& p2, const BiorthTangent& t);

// ---------------------------------------------------------------------------
// Product manifold: ordered Euclidean / SPD / biorthogonal components
// ---------------------------------------------------------------------------

enum class Kind { Euclidean, SPD, Biorth };

/// One product component. Euclidean uses `a` (any shape); SPD uses `a`
/// (square PD); Biorth uses `a` = Phi and `b` = Psi. Tangents reuse the
/// layout, with `a` = V, `b` = W on biorthogonal components.
struct Component {
  Kind kind = Kind::Euclidean;
  Mat a;
  Mat b;
};

struct ProductPoint {
  std::vector<Component> comps;
};

struct ProductTangent {
  std::vector<Component> comps;
};

ProductTangent zero_tangent(const ProductPoint& p);

/// Componentwise exponential / retraction (biorthogonal components retract).
ProductPoint product_exp(const ProductPoint& p, const ProductTangent& t, double scale = 1.0);

/// Componentwise transport of t from p1 to p2.
ProductTangent product_transport(const ProductPoint& p1, const ProductPoint& p2,
                                 const ProductTangent& t);

/// Componentwise inner product. SPD components use the affine-invariant
/// metric; Euclidean and biorthogonal components use the Frobenius pairing.
double product_inner(const ProductPoint& p, const ProductTangent& t1, const ProductTangent& t2);

/// Ambient gradient -> tangent: converts SPD components and projects
/// biorthogonal components; Euclidean components pass through.
ProductTangent to_riemannian(const ProductPoint& p, const ProductTangent& ambient);

/// Max violation of the per-component manifold invariants (0 for Euclidean).
double manifold_residual(const ProductPoint& p);

}  // namespace rolnn::geo
