#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rolnn/ae.hpp"
#include "rolnn/spdnet.hpp"
#include "test_util.hpp"

using namespace rolnn;
using namespace rolnn::net;
using diff::ValueEngine;
using num::Mat;
using num::Vec;
using testutil::random_mat;
using testutil::random_spd;
using testutil::random_sym;
using testutil::random_vec;
using testutil::rng;

TEST_CASE("mlp basics") {
  // identity-like single layer
  MLPParams p;
  p.w = {Mat::Identity(3, 3)};
  p.b = {Vec::Zero(3)};
  MLPFunction f(p);
  Vec x = random_vec(3);
  CHECK((f.value(x) - x).norm() == 0.0);

  // softplus(0) = ln 2 per hidden unit
  MLPParams p2;
  p2.w = {Mat::Zero(4, 2), Mat::Identity(4, 4)};
  p2.b = {Vec::Zero(4), Vec::Zero(4)};
  MLPFunction f2(p2);
  Vec y = f2.value(random_vec(2));
  for (int i = 0; i < 4; ++i) CHECK(y(i) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("mlp jacobian and hessian contraction match FD") {
  MLPParams p = mlp_init({3, 16, 16, 2}, Activation::SoftPlus, rng());
  MLPFunction f(p);
  Vec x = random_vec(3);
  auto eval = [&](const Vec& v) { return f.value(v); };
  auto rep = diff::fd_check(eval, x, f.jacobian(x));
  CHECK(rep.max_rel_err < 1e-6);

  // d/dh J(x + h v) v = H[v, v]
  Vec v = random_vec(3);
  double h = 1e-6;
  Vec hv_fd = ((f.jacobian(x + h * v) - f.jacobian(x - h * v)) / (2.0 * h)) * v;
  Vec hv = f.hessian_contract(x, v);
  CHECK((hv - hv_fd).cwiseAbs().maxCoeff() < 1e-6 * std::max(1.0, hv_fd.cwiseAbs().maxCoeff()));
}

TEST_CASE("sym_assemble definitional cases") {
  CHECK(sym_assemble(Vec::Zero(6)).norm() == 0.0);
  Vec v(3);
  v << 1.0, 2.0, 3.0;
  Mat s = sym_assemble(v);
  CHECK(s(0, 0) == 1.0);
  CHECK(s(0, 1) == 2.0);
  CHECK(s(1, 0) == 2.0);
  CHECK(s(1, 1) == 3.0);
  Mat r = random_sym(4);
  CHECK((sym_assemble(sym_to_tri(r)) - r).norm() == 0.0);
}

TEST_CASE("expmap layer") {
  CHECK((expmap_layer(Mat::Zero(3, 3), Mat::Identity(3, 3)) - Mat::Identity(3, 3)).norm() <
        1e-14);
  Mat p = random_spd(3);
  CHECK((expmap_layer(Mat::Zero(3, 3), p) - p).norm() < 1e-11);

  // derivative of exp at identity basepoint vs FD
  ValueEngine e;
  Mat u = random_sym(3, 0.5);
  Mat dir = random_sym(3);
  Mat an = e.dsym_matfunc(diff::MatFuncTag::Exp, u, dir);
  double h = 1e-6;
  Mat fd = (num::spd_expm(u + h * dir) - num::spd_expm(u - h * dir)) / (2.0 * h);
  CHECK((an - fd).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("gyroai layer neutral elements and PD") {
  Mat x = random_spd(3);
  Mat ones = Mat::Ones(3, 3);
  CHECK((gyroai_forward(x, ones, Mat::Identity(3, 3)) - x).cwiseAbs().maxCoeff() < 1e-10);

  Mat a = random_spd(3);
  Mat b = random_spd(3);
  CHECK((gyroai_forward(Mat::Identity(3, 3), a, b) - b).cwiseAbs().maxCoeff() < 1e-10);

  Mat out = gyroai_forward(x, a, b);
  CHECK((out - out.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(num::min_eigenvalue(out) > 0.0);
}

TEST_CASE("gyrospdpp layer") {
  Mat a = random_spd(3);
  Mat x = random_spd(3);
  // B = X collapses the hyperplane argument to the origin
  CHECK((gyrospdpp_forward(x, a, x) - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-9);

  Mat b = random_spd(3);
  Mat out = gyrospdpp_forward(x, a, b);
  CHECK((out - out.transpose()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(num::min_eigenvalue(out) > 0.0);

  // direct-formula oracle: V = log(B^-1/2 X B^-1/2) * A, out = exp(V * Iv)
  Mat bis = num::spd_sqrt_inv(b);
  Mat v = num::spd_logm(num::symmetrize(bis * x * bis)).cwiseProduct(a);
  Mat iv = Mat::Constant(3, 3, 1.0 / std::sqrt(2.0));
  iv.diagonal().setOnes();
  Mat expect = num::spd_expm(v.cwiseProduct(iv));
  CHECK((out - expect).cwiseAbs().maxCoeff() < 1e-9);

  // O(eps) continuity probe
  Mat dir = random_sym(3, 1.0);
  double e1 = (gyrospdpp_forward(num::symmetrize(x + 1e-3 * dir), a, b) - out).norm();
  double e2 = (gyrospdpp_forward(num::symmetrize(x + 1e-4 * dir), a, b) - out).norm();
  CHECK(e1 / e2 > 5.0);
  CHECK(e1 / e2 < 20.0);
}

TEST_CASE("reeig") {
  Mat x = random_spd(3);
  double lo = num::min_eigenvalue(x);
  CHECK((reeig(x, 0.5 * lo) - x).cwiseAbs().maxCoeff() < 1e-12);

  Mat d = Mat::Zero(2, 2);
  d.diagonal() << 1e-6, 2.0;
  Mat r = reeig(d, 1e-4);
  CHECK(r(0, 0) == doctest::Approx(1e-4));
  CHECK(r(1, 1) == doctest::Approx(2.0));

  Mat once = reeig(x, 1.0);
  CHECK((reeig(once, 1.0) - once).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(num::min_eigenvalue(once) >= 1.0 - 1e-12);
}

TEST_CASE("spdnet mass matrix") {
  // zero-weight head, identity basepoint, no layers: M(q) = I
  SPDNetParams p = spdnet_init(2, 2, {8}, false, {}, rng());
  for (auto& w : p.head.w) w.setZero();
  for (auto& b : p.head.b) b.setZero();
  ValueEngine e;
  auto bp = bind_spdnet(e, p);
  Mat m = spdnet_mass(e, bp, Mat(random_vec(2)));
  CHECK((m - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);

  // PD certificate across random inputs and layer stacks
  for (auto layers : {std::vector<SpdLayerKind>{},
                      std::vector<SpdLayerKind>{SpdLayerKind::GyroAI, SpdLayerKind::ReEig},
                      std::vector<SpdLayerKind>{SpdLayerKind::GyroSpdPP, SpdLayerKind::ReEig}}) {
    SPDNetParams pr = spdnet_init(3, 3, {16}, true, layers, rng());
    auto bpr = bind_spdnet(e, pr);
    for (int rep = 0; rep < 100; ++rep) {
      Mat mm = spdnet_mass(e, bpr, Mat(random_vec(3, 2.0)));
      CHECK(num::min_eigenvalue(mm) > 0.0);
    }
  }
}

TEST_CASE("spdnet mass is PD over ten thousand random draws") {
  ValueEngine e;
  std::mt19937_64 local(31337);
  std::normal_distribution<double> nd(0.0, 2.0);
  int bad = 0;
  for (int model = 0; model < 10; ++model) {
    SPDNetParams p = spdnet_init(3, 3, {16}, model % 2 == 1, {}, local);
    auto b = bind_spdnet(e, p);
    for (int rep = 0; rep < 1000; ++rep) {
      Vec q(3);
      for (int i = 0; i < 3; ++i) q(i) = nd(local);
      if (num::min_eigenvalue(spdnet_mass(e, b, Mat(q))) <= 0.0) ++bad;
    }
  }
  CHECK(bad == 0);
}

TEST_CASE("spdnet input derivative matches FD, all layer kinds") {
  ValueEngine e;
  for (auto layers : {std::vector<SpdLayerKind>{},
                      std::vector<SpdLayerKind>{SpdLayerKind::GyroAI},
                      std::vector<SpdLayerKind>{SpdLayerKind::GyroSpdPP},
                      std::vector<SpdLayerKind>{SpdLayerKind::ReEig}}) {
    SPDNetParams p = spdnet_init(3, 3, {12}, !layers.empty(), layers, rng());
    auto b = bind_spdnet(e, p);
    Vec q = random_vec(3, 0.7);
    auto [m, dm] = spdnet_mass_with_dq(e, b, Mat(q));
    for (int k = 0; k < 3; ++k) {
      double h = 1e-6;
      Vec qp = q, qm = q;
      qp(k) += h;
      qm(k) -= h;
      Mat fd = (spdnet_mass(e, b, Mat(qp)) - spdnet_mass(e, b, Mat(qm))) / (2.0 * h);
      double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
      CHECK((dm[k] - fd).cwiseAbs().maxCoeff() / scale < 1e-5);
    }
  }
}

TEST_CASE("cholesky mass matrix") {
  ValueEngine e;
  // L = I path: bias makes softplus(diag) = 1, off-diagonals zero
  CholeskyHeadParams p = cholesky_init(2, 2, {8}, rng());
  for (auto& w : p.mlp.w) w.setZero();
  for (auto& b : p.mlp.b) b.setZero();
  const double inv_sp1 = std::log(std::exp(1.0) - 1.0);
  p.mlp.b.back()(0) = inv_sp1;  // packed lower-tri (0,0)
  p.mlp.b.back()(2) = inv_sp1;  // packed lower-tri (1,1)
  auto b = bind_cholesky(e, p);
  Mat m = cholesky_mass(e, b, Mat(random_vec(2)));
  CHECK((m - (1.0 + p.delta) * Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);

  CholeskyHeadParams pr = cholesky_init(3, 3, {16}, rng());
  auto br = bind_cholesky(e, pr);
  for (int rep = 0; rep < 100; ++rep)
    CHECK(num::min_eigenvalue(cholesky_mass(e, br, Mat(random_vec(3, 2.0)))) > 0.0);

  Vec q = random_vec(3);
  auto [mm, dm] = cholesky_mass_with_dq(e, br, Mat(q));
  CHECK((mm - cholesky_mass(e, br, Mat(q))).norm() == 0.0);
  for (int k = 0; k < 3; ++k) {
    double h = 1e-6;
    Vec qp = q, qm = q;
    qp(k) += h;
    qm(k) -= h;
    Mat fd = (cholesky_mass(e, br, Mat(qp)) - cholesky_mass(e, br, Mat(qm))) / (2.0 * h);
    CHECK((dm[k] - fd).cwiseAbs().maxCoeff() < 1e-6 * std::max(1.0, fd.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("shared trunk outputs and derivatives") {
  ValueEngine e;
  SharedTrunkParams p = shared_trunk_init(2, 2, {16, 16}, rng());
  auto b = bind_shared(e, p);
  Vec q = random_vec(2);
  auto out = shared_forward(e, b, Mat(q), true);
  CHECK(num::min_eigenvalue(out.mass) > 0.0);
  double h = 1e-6;
  for (int k = 0; k < 2; ++k) {
    Vec qp = q, qm = q;
    qp(k) += h;
    qm(k) -= h;
    auto op = shared_forward(e, b, Mat(qp), false);
    auto om = shared_forward(e, b, Mat(qm), false);
    Mat fd = (Mat(op.mass) - Mat(om.mass)) / (2.0 * h);
    CHECK((out.dmass[k] - fd).cwiseAbs().maxCoeff() < 1e-6 * std::max(1.0, fd.cwiseAbs().maxCoeff()));
    double fdv = (op.potential(0, 0) - om.potential(0, 0)) / (2.0 * h);
    CHECK(Mat(out.grad_v)(k, 0) == doctest::Approx(fdv).epsilon(1e-6));
  }
}

TEST_CASE("activation pair: inverse identity, monotone, asymptotes") {
  const double alpha = M_PI / 8.0;
  Vec grid(81);
  for (int i = 0; i < 81; ++i) grid(i) = -10.0 + 0.25 * i;
  Vec comp = ae_sigma(ae_sigma(grid, alpha, true), alpha, false);
  CHECK((comp - grid).cwiseAbs().maxCoeff() < 1e-9);
  Vec comp2 = ae_sigma(ae_sigma(grid, alpha, false), alpha, true);
  CHECK((comp2 - grid).cwiseAbs().maxCoeff() < 1e-9);

  // numeric derivative positive on the grid
  for (int i = 0; i < 80; ++i) {
    double d = (ae_sigma(Vec::Constant(1, grid(i) + 1e-5), alpha, true)(0) -
                ae_sigma(Vec::Constant(1, grid(i) - 1e-5), alpha, true)(0)) /
               2e-5;
    CHECK(d > 0.0);
  }

  // large-|x| slopes approach tan(pi/4 +- alpha)
  auto slope = [&](double x0, bool plus) {
    return ae_sigma(Vec::Constant(1, x0 + 0.5), alpha, plus)(0) -
           ae_sigma(Vec::Constant(1, x0 - 0.5), alpha, plus)(0);
  };
  CHECK(slope(500.0, true) == doctest::Approx(std::tan(M_PI / 4 + alpha)).epsilon(1e-4));
  CHECK(slope(-500.0, true) == doctest::Approx(std::tan(M_PI / 4 - alpha)).epsilon(1e-4));
  CHECK_THROWS_AS(ae_sigma(grid, 1.0, true), num::DomainError);
}

TEST_CASE("activation derivatives match FD") {
  ValueEngine e;
  SigmaConsts k(M_PI / 8.0);
  Mat x = random_mat(7, 1, 3.0);
  for (bool plus : {true, false}) {
    auto [d1, d2] = ae_sigma_d12(e, k, x, plus);
    double h = 1e-6;
    Mat d1fd = (ae_sigma_eval(e, k, Mat(x.array() + h), plus) -
                ae_sigma_eval(e, k, Mat(x.array() - h), plus)) /
               (2.0 * h);
    Mat d2fd = (ae_sigma_d1(e, k, Mat(x.array() + h), plus) -
                ae_sigma_d1(e, k, Mat(x.array() - h), plus)) /
               (2.0 * h);
    CHECK((Mat(d1) - d1fd).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((Mat(d2) - d2fd).cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("constrained AE projection properties") {
  ConstrainedAEParams p = ae_init({4, 8, 16, 16}, M_PI / 8.0, rng());
  CHECK(p.biorth_residual() < 1e-12);
  Vec z = random_vec(4, 2.0);
  Vec q = ae_decode_value(p, z);
  CHECK((ae_encode_value(p, q) - z).cwiseAbs().maxCoeff() < 1e-9);

  auto [dphi, drho] = ae_jacobians(p, z);
  Mat prod = drho * dphi;
  CHECK((prod - Mat::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("square single-layer AE reduces to the activations") {
  ConstrainedAEParams p = ae_init({3, 3}, M_PI / 8.0, rng());
  p.layers[0].phi = Mat::Identity(3, 3);
  p.layers[0].psi = Mat::Identity(3, 3);
  p.layers[0].b = Vec::Zero(3);
  Vec z = random_vec(3);
  CHECK((ae_decode_value(p, z) - ae_sigma(z, p.alpha, true)).cwiseAbs().maxCoeff() < 1e-14);
  Vec q = random_vec(3);
  CHECK((ae_encode_value(p, q) - ae_sigma(q, p.alpha, false)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("AE jacobians and second derivatives match FD") {
  ConstrainedAEParams p = ae_init({3, 6, 10}, M_PI / 8.0, rng());
  AEDecodeFunction dec(p);
  AEEncodeFunction enc(p);
  Vec z = random_vec(3);
  Vec q = random_vec(10);

  CHECK(diff::fd_check([&](const Vec& v) { return dec.value(v); }, z, dec.jacobian(z))
            .max_rel_err < 1e-6);
  CHECK(diff::fd_check([&](const Vec& v) { return enc.value(v); }, q, enc.jacobian(q))
            .max_rel_err < 1e-6);

  Vec v = random_vec(3);
  double h = 1e-5;
  Vec fd = ((dec.jacobian(z + h * v) - dec.jacobian(z - h * v)) / (2.0 * h)) * v;
  Vec an = dec.hessian_contract(z, v);
  CHECK((an - fd).cwiseAbs().maxCoeff() < 1e-4 * std::max(1.0, fd.cwiseAbs().maxCoeff()));

  Vec w = random_vec(10);
  Vec fde = ((enc.jacobian(q + h * w) - enc.jacobian(q - h * w)) / (2.0 * h)) * w;
  Vec ane = enc.hessian_contract(q, w);
  CHECK((ane - fde).cwiseAbs().maxCoeff() < 1e-4 * std::max(1.0, fde.cwiseAbs().maxCoeff()));
}

TEST_CASE("AE jvp and vjp agree with the full jacobian") {
  ValueEngine e;
  ConstrainedAEParams p = ae_init({3, 5, 9}, M_PI / 8.0, rng());
  auto b = bind_ae(e, p);
  Vec z = random_vec(3);
  Mat j = ae_decode_jacobian(e, b, Mat(z));
  Vec v = random_vec(3);
  auto [val, jv] = ae_decode_jvp(e, b, Mat(z), Mat(v));
  (void)val;
  CHECK((Mat(jv) - j * v).cwiseAbs().maxCoeff() < 1e-12);
  Vec w = random_vec(9);
  Mat vjp = ae_decode_vjp(e, b, Mat(z), Mat(w));
  CHECK((vjp - j.transpose() * w).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("overparametrized penalty") {
  ValueEngine e;
  ConstrainedAEParams p = ae_init({2, 4, 6}, M_PI / 8.0, rng(), false);
  auto b = bind_ae(e, p);
  double base = 0.0;
  for (const auto& l : p.layers) base += l.phi.squaredNorm() + l.psi.squaredNorm();
  Mat pen = ae_overparam_penalty(e, b);
  CHECK(pen(0, 0) == doctest::Approx(base).epsilon(1e-12));

  // drifting Psi^T Phi away from I grows the penalty monotonically
  double prev = pen(0, 0);
  for (double t : {0.05, 0.1, 0.2, 0.4}) {
    ConstrainedAEParams q = p;
    q.layers[0].psi += t * random_mat(4, 2, 0.0).setOnes();
    auto bq = bind_ae(e, q);
    double cur = ae_overparam_penalty(e, bq)(0, 0);
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("overparametrized penalty gradient matches FD") {
  ConstrainedAEParams p = ae_init({2, 4}, M_PI / 8.0, rng(), false);
  // perturb off the manifold so the deviation terms are active
  p.layers[0].psi += random_mat(4, 2, 0.1);
  geo::ProductPoint pt;
  pt.comps.push_back({geo::Kind::Euclidean, p.layers[0].phi, {}});
  pt.comps.push_back({geo::Kind::Euclidean, p.layers[0].psi, {}});

  auto loss = [&](diff::TapeEngine& e, const std::vector<diff::LeafPair>& lv) {
    BoundAE<diff::TapeEngine> b(p.alpha);
    b.layers.push_back({lv[0].a, lv[1].a, e.lift(Mat(p.layers[0].b))});
    return ae_overparam_penalty(e, b);
  };
  diff::GradientResult r = diff::gradient(loss, pt);

  auto value_at = [&](const geo::ProductPoint& q) {
    ValueEngine e;
    BoundAE<ValueEngine> b(p.alpha);
    b.layers.push_back({q.comps[0].a, q.comps[1].a, Mat(p.layers[0].b)});
    return ae_overparam_penalty(e, b)(0, 0);
  };
  for (int ci = 0; ci < 2; ++ci) {
    for (int probe = 0; probe < 2; ++probe) {
      Eigen::Index ii = probe, jj = (probe + 1) % 2;
      double h = 1e-6;
      geo::ProductPoint pp = pt, pm = pt;
      pp.comps[ci].a(ii, jj) += h;
      pm.comps[ci].a(ii, jj) -= h;
      double fd = (value_at(pp) - value_at(pm)) / (2.0 * h);
      CHECK(std::abs(r.ambient_grad.comps[ci].a(ii, jj) - fd) <
            1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}
