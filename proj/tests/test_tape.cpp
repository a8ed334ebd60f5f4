#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rolnn/diff.hpp"
#include "test_util.hpp"

using namespace rolnn::diff;
using rolnn::num::Mat;
using rolnn::num::Vec;
using testutil::random_mat;
using testutil::random_spd;
using testutil::random_sym;
using testutil::random_vec;

namespace {

// FD gradient of a scalar tape program w.r.t. one leaf matrix
Mat fd_leaf_grad(const std::function<double(const Mat&)>& f, const Mat& x0) {
  Mat g(x0.rows(), x0.cols());
  for (Eigen::Index i = 0; i < x0.rows(); ++i)
    for (Eigen::Index j = 0; j < x0.cols(); ++j) {
      double h = 1e-6 * (1.0 + std::abs(x0(i, j)));
      Mat xp = x0, xm = x0;
      xp(i, j) += h;
      xm(i, j) -= h;
      g(i, j) = (f(xp) - f(xm)) / (2.0 * h);
    }
  return g;
}

double rel_err(const Mat& a, const Mat& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("basic op adjoints match finite differences") {
  Mat a0 = random_mat(3, 4);
  Mat b0 = random_mat(4, 2);

  auto f = [&](const Mat& a) {
    Tape t;
    int ia = t.leaf(a);
    int ib = t.leaf(b0);
    int m = t.matmul(ia, ib);
    int s = t.cwise(CwiseTag::Softplus, m);
    return t.val(t.sqnorm(s))(0, 0);
  };
  Tape t;
  int ia = t.leaf(a0);
  int ib = t.leaf(b0);
  int m = t.matmul(ia, ib);
  int s = t.cwise(CwiseTag::Softplus, m);
  int out = t.sqnorm(s);
  t.backward(out);
  CHECK(rel_err(t.adjoint(ia), fd_leaf_grad(f, a0)) < 1e-7);
}

TEST_CASE("mixed elementwise and solve adjoints") {
  Mat a0 = random_spd(3);
  Mat b0 = random_mat(3, 2);

  auto build = [&](Tape& t, int ia, int ib) {
    int x = t.solve_llt(ia, ib);
    int h = t.hadamard(x, x);
    int q = t.cdiv(h, t.add_k(t.cwise(CwiseTag::Square, x), 1.0));
    return t.sum(t.add(q, t.scale(x, 0.25)));
  };
  Tape t;
  int ia = t.leaf(a0), ib = t.leaf(b0);
  int out = build(t, ia, ib);
  t.backward(out);

  auto fa = [&](const Mat& a) {
    Tape tt;
    int ja = tt.leaf(0.5 * (a + a.transpose()));
    int jb = tt.leaf(b0);
    return tt.val(build(tt, ja, jb))(0, 0);
  };
  auto fb = [&](const Mat& b) {
    Tape tt;
    int ja = tt.leaf(a0);
    int jb = tt.leaf(b);
    return tt.val(build(tt, ja, jb))(0, 0);
  };
  // symmetrized FD for the SPD argument
  Mat ga = t.adjoint(ia);
  Mat ga_sym = 0.5 * (ga + ga.transpose());
  Mat fd = fd_leaf_grad(fa, a0);
  CHECK(rel_err(ga_sym, 0.5 * (fd + fd.transpose())) < 1e-6);
  CHECK(rel_err(t.adjoint(ib), fd_leaf_grad(fb, b0)) < 1e-6);
}

TEST_CASE("colscale transpose dot adjoints") {
  Mat v0 = random_mat(3, 1);
  Mat m0 = random_mat(3, 5);
  auto build = [&](Tape& t, int iv, int im) {
    int cs = t.colscale(iv, im);
    int tr = t.transpose(cs);
    return t.dot(tr, tr);
  };
  Tape t;
  int iv = t.leaf(v0), im = t.leaf(m0);
  t.backward(build(t, iv, im));
  auto fv = [&](const Mat& v) {
    Tape tt;
    int jv = tt.leaf(v), jm = tt.leaf(m0);
    return tt.val(build(tt, jv, jm))(0, 0);
  };
  CHECK(rel_err(t.adjoint(iv), fd_leaf_grad(fv, v0)) < 1e-7);
}

TEST_CASE("sym_from_tri adjoint") {
  Mat v0 = random_mat(6, 1);
  auto build = [&](Tape& t, int iv) {
    int s = t.sym_from_tri(iv, 3);
    int e = t.sym_matfunc(MatFuncTag::Exp, s);
    return t.sqnorm(e);
  };
  Tape t;
  int iv = t.leaf(v0);
  t.backward(build(t, iv));
  auto f = [&](const Mat& v) {
    Tape tt;
    int jv = tt.leaf(v);
    return tt.val(build(tt, jv))(0, 0);
  };
  CHECK(rel_err(t.adjoint(iv), fd_leaf_grad(f, v0)) < 1e-6);
}

TEST_CASE("sym_matfunc value agrees with the series program") {
  Mat u = random_sym(4, 0.6);
  ValueEngine e;
  Mat via_series = expm_series(e, u);
  Mat via_eig = e.sym_matfunc(MatFuncTag::Exp, u);
  CHECK((via_series - via_eig).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dsym_matfunc matches series jvp and FD, including adjoints") {
  Mat u0 = random_sym(4, 0.5);
  Mat e0 = random_sym(4, 1.0);
  ValueEngine ve;

  // value of the directional derivative against the series route
  std::vector<Mat> dirs{e0};
  auto [sv, dv] = expm_series_jvp(ve, u0, dirs);
  Mat dk = ve.dsym_matfunc(MatFuncTag::Exp, u0, e0);
  CHECK((dv[0] - dk).cwiseAbs().maxCoeff() < 1e-11);

  // FD of exp(U + h E)
  double h = 1e-6;
  Mat fd = (ve.sym_matfunc(MatFuncTag::Exp, u0 + h * e0) -
            ve.sym_matfunc(MatFuncTag::Exp, u0 - h * e0)) /
           (2.0 * h);
  CHECK((dk - fd).cwiseAbs().maxCoeff() < 1e-8);

  // adjoints of a scalar of dexp(U)[E] w.r.t. both U and E
  Mat w0 = random_mat(4, 4);
  auto build = [&](Tape& t, int iu, int ie) {
    int d = t.dsym_matfunc(MatFuncTag::Exp, iu, ie);
    int wl = t.leaf(w0);
    return t.dot(d, wl);
  };
  Tape t;
  int iu = t.leaf(u0), ie = t.leaf(e0);
  t.backward(build(t, iu, ie));

  auto fu = [&](const Mat& u) {
    Tape tt;
    int ju = tt.leaf(0.5 * (u + u.transpose())), je = tt.leaf(e0);
    return tt.val(build(tt, ju, je))(0, 0);
  };
  auto fe = [&](const Mat& em) {
    Tape tt;
    int ju = tt.leaf(u0), je = tt.leaf(0.5 * (em + em.transpose()));
    return tt.val(build(tt, ju, je))(0, 0);
  };
  Mat gu = t.adjoint(iu);
  Mat fdu = fd_leaf_grad(fu, u0);
  CHECK(rel_err(0.5 * (gu + gu.transpose()), 0.5 * (fdu + fdu.transpose())) < 1e-5);
  Mat ge = t.adjoint(ie);
  Mat fde = fd_leaf_grad(fe, e0);
  CHECK(rel_err(0.5 * (ge + ge.transpose()), 0.5 * (fde + fde.transpose())) < 1e-6);
}

TEST_CASE("dsym_matfunc handles a fully degenerate spectrum") {
  // base point zero: d exp(0)[E] should be exactly E to series accuracy
  Mat z = Mat::Zero(3, 3);
  Mat e0 = random_sym(3);
  ValueEngine ve;
  Mat d = ve.dsym_matfunc(MatFuncTag::Exp, z, e0);
  CHECK((d - e0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("clamp matfunc value and derivative") {
  Mat x = Mat::Zero(2, 2);
  x.diagonal() << 1e-6, 2.0;
  ValueEngine ve;
  Mat y = ve.sym_matfunc(MatFuncTag::ClampMin, x, 1e-4);
  CHECK(y(0, 0) == doctest::Approx(1e-4));
  CHECK(y(1, 1) == doctest::Approx(2.0));

  // derivative on a generic well-separated input
  Mat x0 = random_spd(3, 0.8);
  Mat w0 = random_mat(3, 3);
  double eps = 1.0;  // forces an active clamp on part of the spectrum
  auto build = [&](Tape& t, int ix) {
    int y2 = t.sym_matfunc(MatFuncTag::ClampMin, ix, eps);
    int wl = t.leaf(w0);
    return t.dot(y2, wl);
  };
  Tape t;
  int ix = t.leaf(x0);
  t.backward(build(t, ix));
  auto f = [&](const Mat& xm) {
    Tape tt;
    int jx = tt.leaf(0.5 * (xm + xm.transpose()));
    return tt.val(build(tt, jx))(0, 0);
  };
  Mat g = t.adjoint(ix);
  Mat fd = fd_leaf_grad(f, x0);
  CHECK(rel_err(0.5 * (g + g.transpose()), 0.5 * (fd + fd.transpose())) < 1e-5);
}

TEST_CASE("series logm and sqrtm agree with eigendecomposition routes") {
  ValueEngine ve;
  for (int rep = 0; rep < 5; ++rep) {
    Mat s = random_spd(4, 0.8);
    CHECK((logm_spd_series(ve, s) - rolnn::num::spd_logm(s)).cwiseAbs().maxCoeff() < 1e-11);
    CHECK((sqrtm_db(ve, s) - rolnn::num::spd_sqrt(s)).cwiseAbs().maxCoeff() < 1e-11);
  }
}

TEST_CASE("series logm gradient matches FD") {
  Mat s0 = random_spd(3, 0.5);
  Mat w0 = random_sym(3);
  auto build = [&](Tape& t, int is) {
    TapeEngine te{&t};
    MVar lg = logm_spd_series(te, MVar{&t, is});
    int wl = t.leaf(w0);
    return t.dot(lg.i, wl);
  };
  Tape t;
  int is = t.leaf(s0);
  t.backward(build(t, is));
  auto f = [&](const Mat& sm) {
    Tape tt;
    int js = tt.leaf(0.5 * (sm + sm.transpose()));
    return tt.val(build(tt, js))(0, 0);
  };
  Mat g = t.adjoint(is);
  Mat fd = fd_leaf_grad(f, s0);
  CHECK(rel_err(0.5 * (g + g.transpose()), 0.5 * (fd + fd.transpose())) < 1e-5);
}

TEST_CASE("value path is bit-identical across engines") {
  Mat u = random_sym(4, 0.6);
  ValueEngine ve;
  Mat direct = expm_series(ve, u);

  Tape t;
  TapeEngine te{&t};
  MVar uu = te.lift(u);
  MVar r = expm_series(te, uu);
  CHECK((t.val(r.i) - direct).cwiseAbs().maxCoeff() == 0.0);
}
