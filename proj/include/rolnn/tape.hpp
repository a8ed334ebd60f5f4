#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "rolnn/numerics.hpp"

namespace rolnn::diff {

using num::Mat;
using num::Vec;

/// Raised when a loss or gradient evaluation produces NaN/Inf.
struct TrainingDivergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Op : uint8_t {
  Leaf,
  Add, Sub, Neg, Scale, AddK,
  MatMul, Hadamard, CDiv, ColScale, Transpose,
  Cwise,
  Dot, SqNorm, Sum,
  SolveLLT, SolveLU,
  SymFromTri, LowerFromTri,
  SymMatFunc, DSymMatFunc,
};

enum class CwiseTag : uint8_t { Exp, Log, Log1p, Sqrt, Softplus, Sigmoid, Square, Recip };

enum class MatFuncTag : uint8_t { Exp, Log, Sqrt, ClampMin };

namespace detail {
double cwise_eval(CwiseTag t, double x);
double cwise_deriv(CwiseTag t, double x, double fx);
// divided differences f[x], f[x,y], f[x,y,z] for the matrix-function tags
double mf_eval(MatFuncTag t, double eps, double x);
double mf_d1(MatFuncTag t, double eps, double x);
double mf_d2(MatFuncTag t, double eps, double x);
double divdiff1(MatFuncTag t, double eps, double x, double y);
double divdiff2(MatFuncTag t, double eps, double x, double y, double z);
}  // namespace detail

/// Reverse-mode tape over dense matrix operations. Forward values are
/// computed eagerly at node creation; backward() accumulates adjoints.
/// Scalars are represented as 1x1 matrices.
class Tape {
 public:
  int leaf(const Mat& v);

  int add(int a, int b);
  int sub(int a, int b);
  int neg(int a);
  int scale(int a, double c);
  int add_k(int a, double c);
  int matmul(int a, int b);
  int hadamard(int a, int b);
  int cdiv(int a, int b);
  /// out_ij = v_i * m_ij with v a column vector
  int colscale(int v, int m);
  int transpose(int a);
  int cwise(CwiseTag t, int a);
  int dot(int a, int b);
  int sqnorm(int a);
  int sum(int a);
  /// x = A^-1 b with A symmetric positive definite (values)
  int solve_llt(int a, int b);
  /// x = A^-1 b with A general square
  int solve_lu(int a, int b);
  /// packed upper triangle (row-major within the triangle) -> symmetric
  int sym_from_tri(int v, int n);
  /// packed lower triangle (row-major, j <= i) -> lower triangular
  int lower_from_tri(int v, int n);
  /// f applied to the spectrum of sym(a); exact first-order adjoint
  int sym_matfunc(MatFuncTag t, int a, double eps = 0.0);
  /// directional derivative df(sym(a))[sym(e)]; adjoint uses second
  /// divided differences
  int dsym_matfunc(MatFuncTag t, int a, int e, double eps = 0.0);

  const Mat& val(int i) const { return nodes_[i].val; }
  /// Runs the reverse sweep from a 1x1 root.
  void backward(int root);
  const Mat& adjoint(int i) const { return nodes_[i].adj; }

  void reset();
  size_t size() const { return nodes_.size(); }

 private:
  struct EigCache {
    Vec w;
    Mat v;
  };
  struct Node {
    Op op;
    uint8_t tag = 0;
    int a = -1, b = -1;
    double c = 0.0;
    Mat val;
    Mat adj;
    std::unique_ptr<EigCache> eig;
  };
  int push(Node n);
  std::vector<Node> nodes_;
};

/// Handle with operator sugar for composing tape programs.
struct MVar {
  Tape* t = nullptr;
  int i = -1;
  const Mat& val() const { return t->val(i); }
};

inline MVar operator+(MVar a, MVar b) { return {a.t, a.t->add(a.i, b.i)}; }
inline MVar operator-(MVar a, MVar b) { return {a.t, a.t->sub(a.i, b.i)}; }
inline MVar operator-(MVar a) { return {a.t, a.t->neg(a.i)}; }
inline MVar operator*(MVar a, MVar b) { return {a.t, a.t->matmul(a.i, b.i)}; }
inline MVar operator*(double c, MVar a) { return {a.t, a.t->scale(a.i, c)}; }

}  // namespace rolnn::diff
