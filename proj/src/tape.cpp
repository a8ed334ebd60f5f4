#include "rolnn/tape.hpp"

#include <cmath>

namespace rolnn::diff {

namespace detail {

double cwise_eval(CwiseTag t, double x) {
  switch (t) {
    case CwiseTag::Exp: return std::exp(x);
    case CwiseTag::Log: return std::log(x);
    case CwiseTag::Log1p: return std::log1p(x);
    case CwiseTag::Sqrt: return std::sqrt(x);
    case CwiseTag::Softplus: return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    case CwiseTag::Sigmoid: return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    case CwiseTag::Square: return x * x;
    case CwiseTag::Recip: return 1.0 / x;
  }
  return 0.0;
}

double cwise_deriv(CwiseTag t, double x, double fx) {
  switch (t) {
    case CwiseTag::Exp: return fx;
    case CwiseTag::Log: return 1.0 / x;
    case CwiseTag::Log1p: return 1.0 / (1.0 + x);
    case CwiseTag::Sqrt: return 0.5 / fx;
    case CwiseTag::Softplus: return cwise_eval(CwiseTag::Sigmoid, x);
    case CwiseTag::Sigmoid: return fx * (1.0 - fx);
    case CwiseTag::Square: return 2.0 * x;
    case CwiseTag::Recip: return -fx * fx;
  }
  return 0.0;
}

double mf_eval(MatFuncTag t, double eps, double x) {
  switch (t) {
    case MatFuncTag::Exp: return std::exp(x);
    case MatFuncTag::Log: return std::log(x);
    case MatFuncTag::Sqrt: return std::sqrt(x);
    case MatFuncTag::ClampMin: return x > eps ? x : eps;
  }
  return 0.0;
}

double mf_d1(MatFuncTag t, double eps, double x) {
  switch (t) {
    case MatFuncTag::Exp: return std::exp(x);
    case MatFuncTag::Log: return 1.0 / x;
    case MatFuncTag::Sqrt: return 0.5 / std::sqrt(x);
    case MatFuncTag::ClampMin: return x > eps ? 1.0 : 0.0;
  }
  return 0.0;
}

double mf_d2(MatFuncTag t, double eps, double x) {
  switch (t) {
    case MatFuncTag::Exp: return std::exp(x);
    case MatFuncTag::Log: return -1.0 / (x * x);
    case MatFuncTag::Sqrt: return -0.25 / (x * std::sqrt(x));
    case MatFuncTag::ClampMin: (void)eps; return 0.0;
  }
  return 0.0;
}

double divdiff1(MatFuncTag t, double eps, double x, double y) {
  double scale = std::max({1.0, std::abs(x), std::abs(y)});
  if (std::abs(x - y) < 1e-7 * scale) {
    // clamp has a kink; for the smooth tags the midpoint derivative is
    // accurate to O(dx^2)
    return mf_d1(t, eps, 0.5 * (x + y));
  }
  return (mf_eval(t, eps, x) - mf_eval(t, eps, y)) / (x - y);
}

double divdiff2(MatFuncTag t, double eps, double x, double y, double z) {
  // symmetric in all three arguments
  double scale = std::max({1.0, std::abs(x), std::abs(y), std::abs(z)});
  double tol = 1e-5 * scale;
  bool xy = std::abs(x - y) < tol, yz = std::abs(y - z) < tol, xz = std::abs(x - z) < tol;
  if (xy && yz && xz) return 0.5 * mf_d2(t, eps, (x + y + z) / 3.0);
  if (xz) {
    // f[x,y,z] -> d/dm f[m,y] at m = (x+z)/2
    double m = 0.5 * (x + z);
    double d = m - y;
    return (mf_d1(t, eps, m) * d - (mf_eval(t, eps, m) - mf_eval(t, eps, y))) / (d * d);
  }
  return (divdiff1(t, eps, x, y) - divdiff1(t, eps, y, z)) / (x - z);
}

}  // namespace detail

namespace {

Mat sym_half(const Mat& a) { return 0.5 * (a + a.transpose()); }

void check_finite(const Mat& m, const char* where) {
  if (!m.allFinite()) throw TrainingDivergence(std::string(where) + ": non-finite value");
}

}  // namespace

int Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::leaf(const Mat& v) {
  Node n;
  n.op = Op::Leaf;
  n.val = v;
  return push(std::move(n));
}

#define ROLNN_BINARY(namefn, opk, expr)                              \
  int Tape::namefn(int a, int b) {                                   \
    Node n;                                                          \
    n.op = opk;                                                      \
    n.a = a;                                                         \
    n.b = b;                                                         \
    n.val = (expr);                                                  \
    return push(std::move(n));                                       \
  }

ROLNN_BINARY(add, Op::Add, nodes_[a].val + nodes_[b].val)
ROLNN_BINARY(sub, Op::Sub, nodes_[a].val - nodes_[b].val)
ROLNN_BINARY(matmul, Op::MatMul, nodes_[a].val * nodes_[b].val)
ROLNN_BINARY(hadamard, Op::Hadamard, nodes_[a].val.cwiseProduct(nodes_[b].val))
ROLNN_BINARY(cdiv, Op::CDiv, nodes_[a].val.cwiseQuotient(nodes_[b].val))
#undef ROLNN_BINARY

int Tape::neg(int a) {
  Node n;
  n.op = Op::Neg;
  n.a = a;
  n.val = -nodes_[a].val;
  return push(std::move(n));
}

int Tape::scale(int a, double c) {
  Node n;
  n.op = Op::Scale;
  n.a = a;
  n.c = c;
  n.val = c * nodes_[a].val;
  return push(std::move(n));
}

int Tape::add_k(int a, double c) {
  Node n;
  n.op = Op::AddK;
  n.a = a;
  n.c = c;
  n.val = nodes_[a].val.array() + c;
  return push(std::move(n));
}

int Tape::colscale(int v, int m) {
  Node n;
  n.op = Op::ColScale;
  n.a = v;
  n.b = m;
  n.val = nodes_[v].val.col(0).asDiagonal() * nodes_[m].val;
  return push(std::move(n));
}

int Tape::transpose(int a) {
  Node n;
  n.op = Op::Transpose;
  n.a = a;
  n.val = nodes_[a].val.transpose();
  return push(std::move(n));
}

int Tape::cwise(CwiseTag t, int a) {
  Node n;
  n.op = Op::Cwise;
  n.tag = static_cast<uint8_t>(t);
  n.a = a;
  n.val = nodes_[a].val.unaryExpr([t](double x) { return detail::cwise_eval(t, x); });
  return push(std::move(n));
}

int Tape::dot(int a, int b) {
  Node n;
  n.op = Op::Dot;
  n.a = a;
  n.b = b;
  n.val = Mat::Constant(1, 1, nodes_[a].val.cwiseProduct(nodes_[b].val).sum());
  return push(std::move(n));
}

int Tape::sqnorm(int a) {
  Node n;
  n.op = Op::SqNorm;
  n.a = a;
  n.val = Mat::Constant(1, 1, nodes_[a].val.squaredNorm());
  return push(std::move(n));
}

int Tape::sum(int a) {
  Node n;
  n.op = Op::Sum;
  n.a = a;
  n.val = Mat::Constant(1, 1, nodes_[a].val.sum());
  return push(std::move(n));
}

int Tape::solve_llt(int a, int b) {
  Node n;
  n.op = Op::SolveLLT;
  n.a = a;
  n.b = b;
  Eigen::LLT<Mat> llt(nodes_[a].val);
  if (llt.info() != Eigen::Success)
    throw num::NumericalError("solve_llt: matrix not positive definite", 0.0);
  n.val = llt.solve(nodes_[b].val);
  return push(std::move(n));
}

int Tape::solve_lu(int a, int b) {
  Node n;
  n.op = Op::SolveLU;
  n.a = a;
  n.b = b;
  n.val = Eigen::PartialPivLU<Mat>(nodes_[a].val).solve(nodes_[b].val);
  check_finite(n.val, "solve_lu");
  return push(std::move(n));
}

int Tape::sym_from_tri(int v, int dim) {
  Node n;
  n.op = Op::SymFromTri;
  n.a = v;
  n.c = dim;
  const Mat& src = nodes_[v].val;
  if (src.rows() != dim * (dim + 1) / 2 || src.cols() != 1)
    throw num::DomainError("sym_from_tri: bad packed length");
  Mat s(dim, dim);
  int k = 0;
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) {
      s(i, j) = src(k, 0);
      s(j, i) = src(k, 0);
      ++k;
    }
  n.val = s;
  return push(std::move(n));
}

int Tape::lower_from_tri(int v, int dim) {
  Node n;
  n.op = Op::LowerFromTri;
  n.a = v;
  n.c = dim;
  const Mat& src = nodes_[v].val;
  if (src.rows() != dim * (dim + 1) / 2 || src.cols() != 1)
    throw num::DomainError("lower_from_tri: bad packed length");
  Mat l = Mat::Zero(dim, dim);
  int k = 0;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j <= i; ++j) l(i, j) = src(k++, 0);
  n.val = l;
  return push(std::move(n));
}

int Tape::sym_matfunc(MatFuncTag t, int a, double eps) {
  Node n;
  n.op = Op::SymMatFunc;
  n.tag = static_cast<uint8_t>(t);
  n.a = a;
  n.c = eps;
  num::EigH e = num::sym_eig(sym_half(nodes_[a].val));
  Vec fw(e.values.size());
  for (Eigen::Index i = 0; i < fw.size(); ++i) fw(i) = detail::mf_eval(t, eps, e.values(i));
  n.val = e.vectors * fw.asDiagonal() * e.vectors.transpose();
  n.eig = std::make_unique<EigCache>(EigCache{e.values, e.vectors});
  return push(std::move(n));
}

int Tape::dsym_matfunc(MatFuncTag t, int a, int e, double eps) {
  Node n;
  n.op = Op::DSymMatFunc;
  n.tag = static_cast<uint8_t>(t);
  n.a = a;
  n.b = e;
  n.c = eps;
  num::EigH eg = num::sym_eig(sym_half(nodes_[a].val));
  const Eigen::Index d = eg.values.size();
  Mat et = eg.vectors.transpose() * sym_half(nodes_[e].val) * eg.vectors;
  Mat dd(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      dd(i, j) = detail::divdiff1(t, eps, eg.values(i), eg.values(j));
  n.val = eg.vectors * dd.cwiseProduct(et) * eg.vectors.transpose();
  n.eig = std::make_unique<EigCache>(EigCache{eg.values, eg.vectors});
  return push(std::move(n));
}

void Tape::backward(int root) {
  if (nodes_[root].val.size() != 1)
    throw num::DomainError("backward: root must be scalar");
  for (auto& n : nodes_) n.adj = Mat::Zero(n.val.rows(), n.val.cols());
  nodes_[root].adj(0, 0) = 1.0;
  for (int i = root; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.adj.size() == 0) continue;
    const Mat& g = n.adj;
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::Add:
        nodes_[n.a].adj += g;
        nodes_[n.b].adj += g;
        break;
      case Op::Sub:
        nodes_[n.a].adj += g;
        nodes_[n.b].adj -= g;
        break;
      case Op::Neg:
        nodes_[n.a].adj -= g;
        break;
      case Op::Scale:
        nodes_[n.a].adj += n.c * g;
        break;
      case Op::AddK:
        nodes_[n.a].adj += g;
        break;
      case Op::MatMul:
        nodes_[n.a].adj += g * nodes_[n.b].val.transpose();
        nodes_[n.b].adj += nodes_[n.a].val.transpose() * g;
        break;
      case Op::Hadamard:
        nodes_[n.a].adj += g.cwiseProduct(nodes_[n.b].val);
        nodes_[n.b].adj += g.cwiseProduct(nodes_[n.a].val);
        break;
      case Op::CDiv:
        nodes_[n.a].adj += g.cwiseQuotient(nodes_[n.b].val);
        nodes_[n.b].adj -= g.cwiseProduct(n.val).cwiseQuotient(nodes_[n.b].val);
        break;
      case Op::ColScale:
        nodes_[n.a].adj.col(0) += g.cwiseProduct(nodes_[n.b].val).rowwise().sum();
        nodes_[n.b].adj += nodes_[n.a].val.col(0).asDiagonal() * g;
        break;
      case Op::Transpose:
        nodes_[n.a].adj += g.transpose();
        break;
      case Op::Cwise: {
        CwiseTag t = static_cast<CwiseTag>(n.tag);
        const Mat& x = nodes_[n.a].val;
        Mat d(x.rows(), x.cols());
        for (Eigen::Index r = 0; r < x.rows(); ++r)
          for (Eigen::Index c = 0; c < x.cols(); ++c)
            d(r, c) = detail::cwise_deriv(t, x(r, c), n.val(r, c));
        nodes_[n.a].adj += g.cwiseProduct(d);
        break;
      }
      case Op::Dot:
        nodes_[n.a].adj += g(0, 0) * nodes_[n.b].val;
        nodes_[n.b].adj += g(0, 0) * nodes_[n.a].val;
        break;
      case Op::SqNorm:
        nodes_[n.a].adj += 2.0 * g(0, 0) * nodes_[n.a].val;
        break;
      case Op::Sum:
        nodes_[n.a].adj.array() += g(0, 0);
        break;
      case Op::SolveLLT: {
        Eigen::LLT<Mat> llt(nodes_[n.a].val);
        Mat gb = llt.solve(g);
        nodes_[n.b].adj += gb;
        nodes_[n.a].adj -= gb * n.val.transpose();
        break;
      }
      case Op::SolveLU: {
        Mat gb = Eigen::PartialPivLU<Mat>(nodes_[n.a].val.transpose()).solve(g);
        nodes_[n.b].adj += gb;
        nodes_[n.a].adj -= gb * n.val.transpose();
        break;
      }
      case Op::SymFromTri: {
        int dim = static_cast<int>(n.c);
        int k = 0;
        for (int r = 0; r < dim; ++r)
          for (int c = r; c < dim; ++c) {
            nodes_[n.a].adj(k, 0) += (r == c) ? g(r, c) : g(r, c) + g(c, r);
            ++k;
          }
        break;
      }
      case Op::LowerFromTri: {
        int dim = static_cast<int>(n.c);
        int k = 0;
        for (int r = 0; r < dim; ++r)
          for (int c = 0; c <= r; ++c) nodes_[n.a].adj(k++, 0) += g(r, c);
        break;
      }
      case Op::SymMatFunc: {
        MatFuncTag t = static_cast<MatFuncTag>(n.tag);
        const EigCache& e = *n.eig;
        const Eigen::Index d = e.w.size();
        Mat gt = e.v.transpose() * sym_half(g) * e.v;
        Mat dd(d, d);
        for (Eigen::Index r = 0; r < d; ++r)
          for (Eigen::Index c = 0; c < d; ++c)
            dd(r, c) = detail::divdiff1(t, n.c, e.w(r), e.w(c));
        nodes_[n.a].adj += e.v * dd.cwiseProduct(gt) * e.v.transpose();
        break;
      }
      case Op::DSymMatFunc: {
        MatFuncTag t = static_cast<MatFuncTag>(n.tag);
        const EigCache& e = *n.eig;
        const Eigen::Index d = e.w.size();
        Mat gt = e.v.transpose() * sym_half(g) * e.v;
        Mat et = e.v.transpose() * sym_half(nodes_[n.b].val) * e.v;
        // adjoint into the direction: first-order operator is self-adjoint
        Mat dd(d, d);
        for (Eigen::Index r = 0; r < d; ++r)
          for (Eigen::Index c = 0; c < d; ++c)
            dd(r, c) = detail::divdiff1(t, n.c, e.w(r), e.w(c));
        nodes_[n.b].adj += e.v * dd.cwiseProduct(gt) * e.v.transpose();
        // adjoint into the base point: second divided differences
        Mat xb = Mat::Zero(d, d);
        for (Eigen::Index r = 0; r < d; ++r)
          for (Eigen::Index c = 0; c < d; ++c) {
            double acc = 0.0;
            for (Eigen::Index k = 0; k < d; ++k)
              acc += detail::divdiff2(t, n.c, e.w(r), e.w(c), e.w(k)) *
                     (et(r, k) * gt(k, c) + gt(r, k) * et(k, c));
            xb(r, c) = acc;
          }
        nodes_[n.a].adj += e.v * xb * e.v.transpose();
        break;
      }
    }
  }
}

void Tape::reset() { nodes_.clear(); }

}  // namespace rolnn::diff
