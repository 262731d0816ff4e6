#pragma once

#include "solvrigid/spectral.hpp"

#include <json.hpp>

#include <memory>
#include <vector>

namespace solvrigid {

/// out_dim x in_dim structural dependency pattern (row k: inputs output k may read).
using DepMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Immutable expression tree for a map R^in -> R^out.
///
/// Every node carries a Lipschitz certificate and a sup-norm certificate
/// (both w.r.t. the Euclidean norm; +inf when no finite bound is known) and a
/// structural dependency matrix. Copies share nodes.
class FuncExpr {
 public:
  enum class Kind {
    Constant,
    Affine,
    Project,
    Sum,
    Scale,
    Power,
    Min,
    Max,
    Clamp,
    Table1D,
    Table2D,
    Oscillation,
    Compose,
    Stack,
    Mul,
  };
  struct Node;

  FuncExpr() = default;

  // Leaves.
  static FuncExpr constant(int in_dim, const Vec& value);
  static FuncExpr zero(int in_dim, int out_dim);
  static FuncExpr affine(const Mat& A, const Vec& b);
  static FuncExpr linear(const Mat& A);
  static FuncExpr identity(int n);
  static FuncExpr project(int in_dim, std::vector<int> indices);
  static FuncExpr project_range(int in_dim, int first, int count);

  // Combinators.
  static FuncExpr sum(const FuncExpr& a, const FuncExpr& b);
  static FuncExpr scale(double c, const FuncExpr& a);
  static FuncExpr power(const FuncExpr& a, double c);  // componentwise |u|^c, c > 0
  static FuncExpr min(const FuncExpr& a, const FuncExpr& b);
  static FuncExpr max(const FuncExpr& a, const FuncExpr& b);
  static FuncExpr clamp(const FuncExpr& a, double lo, double hi);
  /// Scalar piecewise-linear table of a scalar argument, linear extrapolation
  /// beyond the end knots. With period > 0 the argument is first reduced into
  /// [x_0, x_0 + period) and the table must close up (y_front == y_back, x_back = x_0 + period).
  static FuncExpr table1d(const FuncExpr& u, std::vector<double> xs, std::vector<double> ys, double period = 0.0);
  /// Scalar bilinear table of a 2-vector argument; values(i, j) sits at (xs[i], ys[j]).
  /// Linear extrapolation in the first argument, clamping in the second.
  static FuncExpr table2d(const FuncExpr& uv, std::vector<double> xs, std::vector<double> ys, const Mat& values);
  /// amp * sin(freq*u + phase) (or cos) for a scalar argument u.
  static FuncExpr oscillation(const FuncExpr& u, double amp, double freq, double phase, bool cosine = false);
  static FuncExpr compose(const FuncExpr& outer, const FuncExpr& inner);
  static FuncExpr stack(const std::vector<FuncExpr>& parts);
  /// Scalar expression s times vector expression v.
  static FuncExpr mul(const FuncExpr& s, const FuncExpr& v);

  bool valid() const { return node_ != nullptr; }
  Kind kind() const;
  int in_dim() const;
  int out_dim() const;
  double lipschitz() const;
  double sup() const;
  const DepMatrix& deps() const;
  bool reads(int input) const;  // any output depends on input
  bool is_constant() const;     // no structural dependence at all

  Vec eval(const Vec& x) const;
  double eval_scalar(const Vec& x) const;

  /// Central-difference Jacobian with step rel_step * (1 + |x_k|).
  Mat jacobian(const Vec& x, double rel_step = 1e-5) const;

  /// Children, for traversal. Leaves return an empty list.
  std::vector<FuncExpr> children() const;

  nlohmann::json to_json() const;
  static FuncExpr from_json(const nlohmann::json& j);

  friend FuncExpr operator+(const FuncExpr& a, const FuncExpr& b) { return sum(a, b); }
  friend FuncExpr operator*(double c, const FuncExpr& a) { return scale(c, a); }

 private:
  explicit FuncExpr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

/// Largest observed finite-difference slope |f(x)-f(x')|/|x-x'| over random
/// probe pairs in [-box, box]^in (pairs at distance up to `spread`).
double sampled_lipschitz(const FuncExpr& f, int probes, double box, double spread, unsigned seed);

}  // namespace solvrigid
