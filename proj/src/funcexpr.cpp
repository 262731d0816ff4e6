#include "solvrigid/funcexpr.hpp"

#include "solvrigid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace solvrigid {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// Product of certificates where 0 * inf means "identically zero".
double cert_mul(double a, double b) {
  if (a == 0.0 || b == 0.0) return 0.0;
  return a * b;
}

double hypot_all(std::initializer_list<double> xs) {
  double s = 0.0;
  for (double x : xs) {
    if (std::isinf(x)) return kInf;
    s += x * x;
  }
  return std::sqrt(s);
}
}  // namespace

struct FuncExpr::Node {
  Kind kind{};
  int in = 0;
  int out = 0;
  double lip = kInf;
  double sup = kInf;
  DepMatrix deps;

  Mat A;
  Vec b;
  std::vector<int> idx;
  double c = 0.0, lo = 0.0, hi = 0.0;
  double amp = 0.0, freq = 0.0, phase = 0.0, period = 0.0;
  bool cosine = false;
  std::vector<double> xs, ys;
  Mat values;
  std::vector<std::shared_ptr<const Node>> kids;
};

using NodePtr = std::shared_ptr<const FuncExpr::Node>;

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw InputError("FuncExpr: " + msg);
}

void require_valid(const FuncExpr& f, const char* what) {
  require(f.valid(), std::string(what) + ": empty expression");
}

DepMatrix dep_product(const DepMatrix& outer, const DepMatrix& inner) {
  DepMatrix d = DepMatrix::Constant(outer.rows(), inner.cols(), false);
  for (Eigen::Index r = 0; r < outer.rows(); ++r) {
    for (Eigen::Index k = 0; k < outer.cols(); ++k) {
      if (!outer(r, k)) continue;
      for (Eigen::Index c = 0; c < inner.cols(); ++c) d(r, c) = d(r, c) || inner(k, c);
    }
  }
  return d;
}

DepMatrix broadcast_row(const DepMatrix& d, int rows) {
  DepMatrix row = DepMatrix::Constant(1, d.cols(), false);
  for (Eigen::Index r = 0; r < d.rows(); ++r) row = row.array() || d.row(r).array();
  DepMatrix out(rows, d.cols());
  for (int r = 0; r < rows; ++r) out.row(r) = row;
  return out;
}

// Interpolate a sorted table at u; returns value and the slope used.
double interp(const std::vector<double>& xs, const std::vector<double>& ys, double u) {
  const std::size_t n = xs.size();
  if (n == 1) return ys[0];
  std::size_t k;
  if (u <= xs.front()) {
    k = 0;
  } else if (u >= xs.back()) {
    k = n - 2;
  } else {
    k = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), u) - xs.begin()) - 1;
    if (k > n - 2) k = n - 2;
  }
  const double w = (u - xs[k]) / (xs[k + 1] - xs[k]);
  return ys[k] + w * (ys[k + 1] - ys[k]);
}

std::size_t cell_of(const std::vector<double>& xs, double u) {
  if (u <= xs.front()) return 0;
  if (u >= xs.back()) return xs.size() - 2;
  const auto k = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), u) - xs.begin()) - 1;
  return std::min(k, xs.size() - 2);
}

Vec eval_node(const FuncExpr::Node& n, const Vec& x) {
  using K = FuncExpr::Kind;
  switch (n.kind) {
    case K::Constant:
      return n.b;
    case K::Affine:
      return n.A * x + n.b;
    case K::Project: {
      Vec out(n.out);
      for (int k = 0; k < n.out; ++k) out[k] = x[n.idx[k]];
      return out;
    }
    case K::Sum:
      return eval_node(*n.kids[0], x) + eval_node(*n.kids[1], x);
    case K::Scale:
      return n.c * eval_node(*n.kids[0], x);
    case K::Power:
      return eval_node(*n.kids[0], x).array().abs().pow(n.c).matrix();
    case K::Min:
      return eval_node(*n.kids[0], x).cwiseMin(eval_node(*n.kids[1], x));
    case K::Max:
      return eval_node(*n.kids[0], x).cwiseMax(eval_node(*n.kids[1], x));
    case K::Clamp:
      return eval_node(*n.kids[0], x).cwiseMax(n.lo).cwiseMin(n.hi);
    case K::Table1D: {
      double u = eval_node(*n.kids[0], x)[0];
      if (n.period > 0.0) {
        u = n.xs.front() + std::fmod(u - n.xs.front(), n.period);
        if (u < n.xs.front()) u += n.period;
      }
      Vec out(1);
      out[0] = interp(n.xs, n.ys, u);
      return out;
    }
    case K::Table2D: {
      const Vec uv = eval_node(*n.kids[0], x);
      const double u = uv[0];
      const double v = std::clamp(uv[1], n.ys.front(), n.ys.back());
      const std::size_t i = cell_of(n.xs, u);
      Vec out(1);
      if (n.ys.size() == 1) {
        const double w = (u - n.xs[i]) / (n.xs[i + 1] - n.xs[i]);
        out[0] = n.values(i, 0) + w * (n.values(i + 1, 0) - n.values(i, 0));
        return out;
      }
      const std::size_t j = cell_of(n.ys, v);
      const double wu = (u - n.xs[i]) / (n.xs[i + 1] - n.xs[i]);
      const double wv = (v - n.ys[j]) / (n.ys[j + 1] - n.ys[j]);
      const auto ii = static_cast<Eigen::Index>(i);
      const auto jj = static_cast<Eigen::Index>(j);
      const double f0 = n.values(ii, jj) + wu * (n.values(ii + 1, jj) - n.values(ii, jj));
      const double f1 = n.values(ii, jj + 1) + wu * (n.values(ii + 1, jj + 1) - n.values(ii, jj + 1));
      out[0] = f0 + wv * (f1 - f0);
      return out;
    }
    case K::Oscillation: {
      const double u = eval_node(*n.kids[0], x)[0];
      Vec out(1);
      const double arg = n.freq * u + n.phase;
      out[0] = n.amp * (n.cosine ? std::cos(arg) : std::sin(arg));
      return out;
    }
    case K::Compose:
      return eval_node(*n.kids[0], eval_node(*n.kids[1], x));
    case K::Stack: {
      Vec out(n.out);
      Eigen::Index at = 0;
      for (const auto& k : n.kids) {
        const Vec part = eval_node(*k, x);
        out.segment(at, part.size()) = part;
        at += part.size();
      }
      return out;
    }
    case K::Mul:
      return eval_node(*n.kids[0], x)[0] * eval_node(*n.kids[1], x);
  }
  return {};
}

const char* kind_name(FuncExpr::Kind k) {
  using K = FuncExpr::Kind;
  switch (k) {
    case K::Constant: return "constant";
    case K::Affine: return "affine";
    case K::Project: return "project";
    case K::Sum: return "sum";
    case K::Scale: return "scale";
    case K::Power: return "power";
    case K::Min: return "min";
    case K::Max: return "max";
    case K::Clamp: return "clamp";
    case K::Table1D: return "table1d";
    case K::Table2D: return "table2d";
    case K::Oscillation: return "osc";
    case K::Compose: return "compose";
    case K::Stack: return "stack";
    case K::Mul: return "mul";
  }
  return "?";
}

void check_table(const std::vector<double>& xs, const char* what) {
  require(xs.size() >= 2, std::string(what) + ": at least two knots required");
  for (std::size_t k = 0; k < xs.size(); ++k) {
    require(std::isfinite(xs[k]), std::string(what) + ": non-finite knot");
    if (k > 0) require(xs[k - 1] < xs[k], std::string(what) + ": knots must be strictly increasing");
  }
}

double max_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) s = std::max(s, std::abs((ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k])));
  return s;
}

std::vector<double> read_reals(const nlohmann::json& j, const char* what) {
  require(j.is_array(), std::string(what) + ": expected array");
  std::vector<double> v;
  for (const auto& e : j) v.push_back(read_finite(e, what));
  return v;
}

}  // namespace

FuncExpr::Kind FuncExpr::kind() const { return node_->kind; }
int FuncExpr::in_dim() const { return node_->in; }
int FuncExpr::out_dim() const { return node_->out; }
double FuncExpr::lipschitz() const { return node_->lip; }
double FuncExpr::sup() const { return node_->sup; }
const DepMatrix& FuncExpr::deps() const { return node_->deps; }

bool FuncExpr::reads(int input) const { return node_->deps.col(input).any(); }
bool FuncExpr::is_constant() const { return !node_->deps.any(); }

std::vector<FuncExpr> FuncExpr::children() const {
  std::vector<FuncExpr> out;
  for (const auto& k : node_->kids) out.push_back(FuncExpr(k));
  return out;
}

Vec FuncExpr::eval(const Vec& x) const {
  require_valid(*this, "eval");
  if (x.size() != node_->in) {
    throw InputError("FuncExpr::eval: expected input dimension " + std::to_string(node_->in) + ", got " +
                     std::to_string(x.size()));
  }
  return eval_node(*node_, x);
}

double FuncExpr::eval_scalar(const Vec& x) const {
  require(out_dim() == 1, "eval_scalar on a vector-valued expression");
  return eval(x)[0];
}

Mat FuncExpr::jacobian(const Vec& x, double rel_step) const {
  Mat J(out_dim(), in_dim());
  Vec xp = x;
  for (int k = 0; k < in_dim(); ++k) {
    if (!reads(k)) {
      J.col(k).setZero();
      continue;
    }
    const double h = rel_step * (1.0 + std::abs(x[k]));
    xp[k] = x[k] + h;
    const Vec fp = eval(xp);
    xp[k] = x[k] - h;
    const Vec fm = eval(xp);
    xp[k] = x[k];
    J.col(k) = (fp - fm) / (2.0 * h);
  }
  return J;
}

FuncExpr FuncExpr::constant(int in_dim, const Vec& value) {
  require(in_dim >= 0, "constant: negative input dimension");
  require(value.size() >= 1, "constant: empty value");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Constant;
  n->in = in_dim;
  n->out = static_cast<int>(value.size());
  n->b = value;
  n->lip = 0.0;
  n->sup = value.norm();
  n->deps = DepMatrix::Constant(n->out, in_dim, false);
  return FuncExpr(n);
}

FuncExpr FuncExpr::zero(int in_dim, int out_dim) { return constant(in_dim, Vec::Zero(out_dim)); }

FuncExpr FuncExpr::affine(const Mat& A, const Vec& b) {
  require(A.rows() == b.size(), "affine: row count differs from offset length");
  require(A.allFinite() && b.allFinite(), "affine: non-finite entries");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Affine;
  n->in = static_cast<int>(A.cols());
  n->out = static_cast<int>(A.rows());
  n->A = A;
  n->b = b;
  const bool zeroA = A.isZero(0.0);
  n->lip = zeroA ? 0.0 : Eigen::JacobiSVD<Mat>(A).singularValues()(0);
  n->sup = zeroA ? b.norm() : kInf;
  n->deps = (A.array() != 0.0).matrix();
  return FuncExpr(n);
}

FuncExpr FuncExpr::linear(const Mat& A) { return affine(A, Vec::Zero(A.rows())); }

FuncExpr FuncExpr::identity(int n) {
  std::vector<int> idx(n);
  for (int k = 0; k < n; ++k) idx[k] = k;
  return project(n, std::move(idx));
}

FuncExpr FuncExpr::project(int in_dim, std::vector<int> indices) {
  require(!indices.empty(), "project: no indices");
  for (int k : indices) require(k >= 0 && k < in_dim, "project: index out of range");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Project;
  n->in = in_dim;
  n->out = static_cast<int>(indices.size());
  n->deps = DepMatrix::Constant(n->out, in_dim, false);
  for (int r = 0; r < n->out; ++r) n->deps(r, indices[r]) = true;
  // A repeated index scales the Euclidean norm by sqrt(multiplicity).
  std::vector<int> count(in_dim, 0);
  int worst = 0;
  for (int k : indices) worst = std::max(worst, ++count[k]);
  n->lip = std::sqrt(static_cast<double>(worst));
  n->sup = kInf;
  n->idx = std::move(indices);
  return FuncExpr(n);
}

FuncExpr FuncExpr::project_range(int in_dim, int first, int count) {
  std::vector<int> idx(count);
  for (int k = 0; k < count; ++k) idx[k] = first + k;
  return project(in_dim, std::move(idx));
}

FuncExpr FuncExpr::sum(const FuncExpr& a, const FuncExpr& b) {
  require_valid(a, "sum");
  require_valid(b, "sum");
  require(a.in_dim() == b.in_dim() && a.out_dim() == b.out_dim(), "sum: shape mismatch");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Sum;
  n->in = a.in_dim();
  n->out = a.out_dim();
  n->lip = a.lipschitz() + b.lipschitz();
  n->sup = a.sup() + b.sup();
  n->deps = a.deps().array() || b.deps().array();
  n->kids = {a.node_, b.node_};
  return FuncExpr(n);
}

FuncExpr FuncExpr::scale(double c, const FuncExpr& a) {
  require_valid(a, "scale");
  require(std::isfinite(c), "scale: non-finite factor");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Scale;
  n->in = a.in_dim();
  n->out = a.out_dim();
  n->c = c;
  n->lip = cert_mul(std::abs(c), a.lipschitz());
  n->sup = cert_mul(std::abs(c), a.sup());
  n->deps = c == 0.0 ? DepMatrix(DepMatrix::Constant(n->out, n->in, false)) : a.deps();
  n->kids = {a.node_};
  return FuncExpr(n);
}

FuncExpr FuncExpr::power(const FuncExpr& a, double c) {
  require_valid(a, "power");
  require(c > 0.0 && std::isfinite(c), "power: exponent must be positive");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Power;
  n->in = a.in_dim();
  n->out = a.out_dim();
  n->c = c;
  const double s = a.sup();
  const double root_m = std::sqrt(static_cast<double>(n->out));
  n->sup = std::isinf(s) ? kInf : root_m * std::pow(s, c);
  if (c == 1.0) {
    n->lip = a.lipschitz();
  } else if (c > 1.0 && std::isfinite(s)) {
    n->lip = cert_mul(c * std::pow(s, c - 1.0), a.lipschitz());
  } else {
    n->lip = a.lipschitz() == 0.0 ? 0.0 : kInf;
  }
  n->deps = a.deps();
  n->kids = {a.node_};
  return FuncExpr(n);
}

namespace {
NodePtr minmax(FuncExpr::Kind kind, const FuncExpr& a, const FuncExpr& b, const NodePtr& na, const NodePtr& nb) {
  require(a.in_dim() == b.in_dim() && a.out_dim() == b.out_dim(), "min/max: shape mismatch");
  auto n = std::make_shared<FuncExpr::Node>();
  n->kind = kind;
  n->in = a.in_dim();
  n->out = a.out_dim();
  if (n->out == 1) {
    n->lip = std::max(a.lipschitz(), b.lipschitz());
    n->sup = std::max(a.sup(), b.sup());
  } else {
    n->lip = hypot_all({a.lipschitz(), b.lipschitz()});
    n->sup = hypot_all({a.sup(), b.sup()});
  }
  n->deps = a.deps().array() || b.deps().array();
  n->kids = {na, nb};
  return n;
}
}  // namespace

FuncExpr FuncExpr::min(const FuncExpr& a, const FuncExpr& b) {
  require_valid(a, "min");
  require_valid(b, "min");
  return FuncExpr(minmax(Kind::Min, a, b, a.node_, b.node_));
}

FuncExpr FuncExpr::max(const FuncExpr& a, const FuncExpr& b) {
  require_valid(a, "max");
  require_valid(b, "max");
  return FuncExpr(minmax(Kind::Max, a, b, a.node_, b.node_));
}

FuncExpr FuncExpr::clamp(const FuncExpr& a, double lo, double hi) {
  require_valid(a, "clamp");
  require(std::isfinite(lo) && std::isfinite(hi) && lo <= hi, "clamp: need finite lo <= hi");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Clamp;
  n->in = a.in_dim();
  n->out = a.out_dim();
  n->lo = lo;
  n->hi = hi;
  n->lip = a.lipschitz();
  n->sup = std::min(a.sup(), std::sqrt(static_cast<double>(n->out)) * std::max(std::abs(lo), std::abs(hi)));
  n->deps = a.deps();
  n->kids = {a.node_};
  return FuncExpr(n);
}

FuncExpr FuncExpr::table1d(const FuncExpr& u, std::vector<double> xs, std::vector<double> ys, double period) {
  require_valid(u, "table1d");
  require(u.out_dim() == 1, "table1d: argument must be scalar");
  check_table(xs, "table1d");
  require(xs.size() == ys.size(), "table1d: knot/value count mismatch");
  for (double y : ys) require(std::isfinite(y), "table1d: non-finite value");
  require(period >= 0.0 && std::isfinite(period), "table1d: period must be >= 0");
  if (period > 0.0) {
    require(std::abs(xs.back() - xs.front() - period) <= 1e-12 * std::max(1.0, period),
            "table1d: periodic table must span exactly one period");
    require(ys.front() == ys.back(), "table1d: periodic table must close up");
  }
  auto n = std::make_shared<Node>();
  n->kind = Kind::Table1D;
  n->in = u.in_dim();
  n->out = 1;
  n->period = period;
  const double slope = max_slope(xs, ys);
  n->lip = cert_mul(slope, u.lipschitz());
  const double s0 = (ys[1] - ys[0]) / (xs[1] - xs[0]);
  const double s1 = (ys[ys.size() - 1] - ys[ys.size() - 2]) / (xs[xs.size() - 1] - xs[xs.size() - 2]);
  double ymax = 0.0;
  for (double y : ys) ymax = std::max(ymax, std::abs(y));
  n->sup = (period > 0.0 || (s0 == 0.0 && s1 == 0.0)) ? ymax : kInf;
  n->deps = slope == 0.0 ? DepMatrix(DepMatrix::Constant(1, n->in, false)) : broadcast_row(u.deps(), 1);
  n->xs = std::move(xs);
  n->ys = std::move(ys);
  n->kids = {u.node_};
  return FuncExpr(n);
}

FuncExpr FuncExpr::table2d(const FuncExpr& uv, std::vector<double> xs, std::vector<double> ys, const Mat& values) {
  require_valid(uv, "table2d");
  require(uv.out_dim() == 2, "table2d: argument must be a 2-vector");
  check_table(xs, "table2d x");
  require(!ys.empty(), "table2d: empty y knots");
  if (ys.size() > 1) check_table(ys, "table2d y");
  require(values.rows() == static_cast<Eigen::Index>(xs.size()) && values.cols() == static_cast<Eigen::Index>(ys.size()),
          "table2d: value grid shape mismatch");
  require(values.allFinite(), "table2d: non-finite value");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Table2D;
  n->in = uv.in_dim();
  n->out = 1;
  double gu = 0.0, gv = 0.0;
  for (Eigen::Index i = 0; i + 1 < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      gu = std::max(gu, std::abs((values(i + 1, j) - values(i, j)) / (xs[i + 1] - xs[i])));
    }
  }
  for (Eigen::Index j = 0; j + 1 < values.cols(); ++j) {
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      gv = std::max(gv, std::abs((values(i, j + 1) - values(i, j)) / (ys[j + 1] - ys[j])));
    }
  }
  // Outside [x_0, x_back] the extrapolated cell can amplify the v-slope; bound it crudely.
  n->lip = cert_mul(hypot_all({gu, gv}), uv.lipschitz());
  if (gv > 0.0) n->lip = kInf;
  n->sup = gu == 0.0 ? values.cwiseAbs().maxCoeff() : kInf;
  n->deps = broadcast_row(uv.deps(), 1);
  n->xs = std::move(xs);
  n->ys = std::move(ys);
  n->values = values;
  n->kids = {uv.node_};
  return FuncExpr(n);
}

FuncExpr FuncExpr::oscillation(const FuncExpr& u, double amp, double freq, double phase, bool cosine) {
  require_valid(u, "oscillation");
  require(u.out_dim() == 1, "oscillation: argument must be scalar");
  require(std::isfinite(amp) && std::isfinite(freq) && std::isfinite(phase), "oscillation: non-finite parameter");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Oscillation;
  n->in = u.in_dim();
  n->out = 1;
  n->amp = amp;
  n->freq = freq;
  n->phase = phase;
  n->cosine = cosine;
  n->lip = cert_mul(std::abs(amp * freq), u.lipschitz());
  n->sup = std::abs(amp);
  n->deps = (amp == 0.0 || freq == 0.0) ? DepMatrix(DepMatrix::Constant(1, n->in, false)) : broadcast_row(u.deps(), 1);
  n->kids = {u.node_};
  return FuncExpr(n);
}

FuncExpr FuncExpr::compose(const FuncExpr& outer, const FuncExpr& inner) {
  require_valid(outer, "compose");
  require_valid(inner, "compose");
  require(outer.in_dim() == inner.out_dim(), "compose: outer input dimension " + std::to_string(outer.in_dim()) +
                                                 " differs from inner output dimension " +
                                                 std::to_string(inner.out_dim()));
  auto n = std::make_shared<Node>();
  n->kind = Kind::Compose;
  n->in = inner.in_dim();
  n->out = outer.out_dim();
  n->lip = cert_mul(outer.lipschitz(), inner.lipschitz());
  n->sup = outer.sup();
  n->deps = dep_product(outer.deps(), inner.deps());
  n->kids = {outer.node_, inner.node_};
  return FuncExpr(n);
}

FuncExpr FuncExpr::stack(const std::vector<FuncExpr>& parts) {
  require(!parts.empty(), "stack: no parts");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Stack;
  n->in = parts.front().in_dim();
  double l2 = 0.0, s2 = 0.0;
  for (const auto& p : parts) {
    require_valid(p, "stack");
    require(p.in_dim() == n->in, "stack: parts disagree on input dimension");
    n->out += p.out_dim();
    l2 = std::isinf(p.lipschitz()) ? kInf : l2 + p.lipschitz() * p.lipschitz();
    s2 = std::isinf(p.sup()) ? kInf : s2 + p.sup() * p.sup();
  }
  n->lip = std::sqrt(l2);
  n->sup = std::sqrt(s2);
  n->deps = DepMatrix(n->out, n->in);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    n->deps.middleRows(at, p.out_dim()) = p.deps();
    at += p.out_dim();
    n->kids.push_back(p.node_);
  }
  return FuncExpr(n);
}

FuncExpr FuncExpr::mul(const FuncExpr& s, const FuncExpr& v) {
  require_valid(s, "mul");
  require_valid(v, "mul");
  require(s.out_dim() == 1, "mul: first factor must be scalar");
  require(s.in_dim() == v.in_dim(), "mul: input dimension mismatch");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Mul;
  n->in = v.in_dim();
  n->out = v.out_dim();
  n->lip = cert_mul(s.sup(), v.lipschitz()) + cert_mul(v.sup(), s.lipschitz());
  n->sup = cert_mul(s.sup(), v.sup());
  DepMatrix d = v.deps();
  for (Eigen::Index r = 0; r < d.rows(); ++r) d.row(r) = d.row(r).array() || s.deps().row(0).array();
  n->deps = d;
  n->kids = {s.node_, v.node_};
  return FuncExpr(n);
}

nlohmann::json FuncExpr::to_json() const {
  require_valid(*this, "to_json");
  const Node& n = *node_;
  nlohmann::json j;
  j["op"] = kind_name(n.kind);
  auto kid = [&](std::size_t k) { return FuncExpr(n.kids[k]).to_json(); };
  switch (n.kind) {
    case Kind::Constant:
      j["in"] = n.in;
      j["value"] = vec_to_json(n.b);
      break;
    case Kind::Affine:
      j["A"] = mat_to_json(n.A);
      j["b"] = vec_to_json(n.b);
      break;
    case Kind::Project:
      j["in"] = n.in;
      j["indices"] = n.idx;
      break;
    case Kind::Sum:
    case Kind::Min:
    case Kind::Max:
      j["args"] = {kid(0), kid(1)};
      break;
    case Kind::Scale:
    case Kind::Power:
      j["c"] = n.c;
      j["arg"] = kid(0);
      break;
    case Kind::Clamp:
      j["lo"] = n.lo;
      j["hi"] = n.hi;
      j["arg"] = kid(0);
      break;
    case Kind::Table1D:
      j["x"] = n.xs;
      j["y"] = n.ys;
      if (n.period > 0.0) j["period"] = n.period;
      j["arg"] = kid(0);
      break;
    case Kind::Table2D:
      j["x"] = n.xs;
      j["y"] = n.ys;
      j["values"] = mat_to_json(n.values);
      j["arg"] = kid(0);
      break;
    case Kind::Oscillation:
      j["amp"] = n.amp;
      j["freq"] = n.freq;
      j["phase"] = n.phase;
      j["wave"] = n.cosine ? "cos" : "sin";
      j["arg"] = kid(0);
      break;
    case Kind::Compose:
      j["outer"] = kid(0);
      j["inner"] = kid(1);
      break;
    case Kind::Stack: {
      nlohmann::json args = nlohmann::json::array();
      for (std::size_t k = 0; k < n.kids.size(); ++k) args.push_back(kid(k));
      j["args"] = std::move(args);
      break;
    }
    case Kind::Mul:
      j["scalar"] = kid(0);
      j["arg"] = kid(1);
      break;
  }
  return j;
}

FuncExpr FuncExpr::from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("op") && j.at("op").is_string(), "node must be an object with a string \"op\"");
  const std::string op = j.at("op").get<std::string>();
  auto field = [&](const char* key) -> const nlohmann::json& {
    require(j.contains(key), "\"" + op + "\" node is missing \"" + key + "\"");
    return j.at(key);
  };
  auto integer = [&](const char* key) {
    const auto& v = field(key);
    require(v.is_number_integer(), "\"" + op + "\"." + key + " must be an integer");
    return v.get<int>();
  };
  auto args = [&]() {
    const auto& a = field("args");
    require(a.is_array() && !a.empty(), "\"" + op + "\".args must be a nonempty array");
    std::vector<FuncExpr> out;
    for (const auto& e : a) out.push_back(from_json(e));
    return out;
  };
  auto pair = [&]() {
    auto a = args();
    require(a.size() == 2, "\"" + op + "\" takes exactly two args");
    return a;
  };

  if (op == "constant") return constant(integer("in"), vec_from_json(field("value")));
  if (op == "affine") return affine(mat_from_json(field("A")), vec_from_json(field("b")));
  if (op == "project") {
    const auto& idx = field("indices");
    require(idx.is_array(), "project.indices must be an array");
    std::vector<int> v;
    for (const auto& e : idx) {
      require(e.is_number_integer(), "project.indices must be integers");
      v.push_back(e.get<int>());
    }
    return project(integer("in"), std::move(v));
  }
  if (op == "sum") {
    auto a = pair();
    return sum(a[0], a[1]);
  }
  if (op == "min") {
    auto a = pair();
    return min(a[0], a[1]);
  }
  if (op == "max") {
    auto a = pair();
    return max(a[0], a[1]);
  }
  if (op == "scale") return scale(read_finite(field("c"), "scale.c"), from_json(field("arg")));
  if (op == "power") return power(from_json(field("arg")), read_finite(field("c"), "power.c"));
  if (op == "clamp") {
    return clamp(from_json(field("arg")), read_finite(field("lo"), "clamp.lo"), read_finite(field("hi"), "clamp.hi"));
  }
  if (op == "table1d") {
    const double period = j.contains("period") ? read_finite(j.at("period"), "table1d.period") : 0.0;
    return table1d(from_json(field("arg")), read_reals(field("x"), "table1d.x"), read_reals(field("y"), "table1d.y"),
                   period);
  }
  if (op == "table2d") {
    return table2d(from_json(field("arg")), read_reals(field("x"), "table2d.x"), read_reals(field("y"), "table2d.y"),
                   mat_from_json(field("values")));
  }
  if (op == "osc") {
    const std::string wave = j.value("wave", std::string("sin"));
    require(wave == "sin" || wave == "cos", "osc.wave must be \"sin\" or \"cos\"");
    return oscillation(from_json(field("arg")), read_finite(field("amp"), "osc.amp"),
                       read_finite(field("freq"), "osc.freq"), read_finite(j.value("phase", nlohmann::json(0.0)), "osc.phase"),
                       wave == "cos");
  }
  if (op == "compose") return compose(from_json(field("outer")), from_json(field("inner")));
  if (op == "stack") return stack(args());
  if (op == "mul") return mul(from_json(field("scalar")), from_json(field("arg")));
  throw InputError("FuncExpr: unknown op \"" + op + "\"");
}

double sampled_lipschitz(const FuncExpr& f, int probes, double box, double spread, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(-box, box);
  std::uniform_real_distribution<double> off(-spread, spread);
  double worst = 0.0;
  Vec x(f.in_dim()), y(f.in_dim());
  for (int k = 0; k < probes; ++k) {
    for (int c = 0; c < f.in_dim(); ++c) {
      x[c] = pos(rng);
      y[c] = x[c] + off(rng);
    }
    const double dx = (x - y).norm();
    if (dx == 0.0) continue;
    worst = std::max(worst, (f.eval(x) - f.eval(y)).norm() / dx);
  }
  return worst;
}

}  // namespace solvrigid
