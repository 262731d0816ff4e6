#include "solvrigid/conformal.hpp"

#include "solvrigid/errors.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <string>

namespace solvrigid {

namespace {

template <typename Fn>
Mat spd_apply(const Mat& A, Fn f) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (A + A.transpose()));
  Vec l = es.eigenvalues();
  for (Eigen::Index k = 0; k < l.size(); ++k) l[k] = f(l[k]);
  Mat out = es.eigenvectors() * l.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

Mat sym_exp(const Mat& A) { return spd_apply(A, [](double v) { return std::exp(v); }); }
Mat spd_log(const Mat& A) { return spd_apply(A, [](double v) { return std::log(v); }); }
Mat spd_sqrt(const Mat& A) { return spd_apply(A, [](double v) { return std::sqrt(v); }); }
Mat spd_isqrt(const Mat& A) { return spd_apply(A, [](double v) { return 1.0 / std::sqrt(v); }); }

// Isometric coordinates for symmetric matrices under the Frobenius norm.
Vec sym_to_vec(const Mat& M) {
  const auto n = M.rows();
  Vec v(n * (n + 1) / 2);
  Eigen::Index at = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) v[at++] = (i == j) ? M(i, i) : std::sqrt(2.0) * M(i, j);
  }
  return v;
}

Mat vec_to_sym(const Vec& v, Eigen::Index n) {
  Mat M(n, n);
  Eigen::Index at = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      if (i == j) {
        M(i, i) = v[at++];
      } else {
        M(i, j) = M(j, i) = v[at++] / std::sqrt(2.0);
      }
    }
  }
  return M;
}

struct Ball {
  Vec c;
  double r = -1.0;  // empty ball
};

Ball ball_through(const std::vector<Vec>& R) {
  if (R.empty()) return {};
  if (R.size() == 1) return Ball{R[0], 0.0};
  const auto k = static_cast<Eigen::Index>(R.size()) - 1;
  Mat D(R[0].size(), k);
  for (Eigen::Index i = 0; i < k; ++i) D.col(i) = R[static_cast<std::size_t>(i) + 1] - R[0];
  const Mat G = D.transpose() * D;
  const Vec b = 0.5 * G.diagonal();
  const Vec mu = G.completeOrthogonalDecomposition().solve(b);
  Ball out{R[0] + D * mu, 0.0};
  for (const auto& p : R) out.r = std::max(out.r, (p - out.c).norm());
  return out;
}

bool inside(const Ball& B, const Vec& p) {
  if (B.r < 0.0) return false;
  return (p - B.c).norm() <= B.r * (1.0 + 1e-12) + 1e-15;
}

Ball welzl(const std::vector<Vec>& P, std::size_t n, std::vector<Vec>& R, std::size_t dim) {
  if (n == 0 || R.size() == dim + 1) return ball_through(R);
  const Vec& p = P[n - 1];
  Ball B = welzl(P, n - 1, R, dim);
  if (inside(B, p)) return B;
  R.push_back(p);
  B = welzl(P, n - 1, R, dim);
  R.pop_back();
  return B;
}

double max_rdist(const ConfClass& P, const std::vector<ConfClass>& X, std::size_t* arg = nullptr) {
  double best = -1.0;
  for (std::size_t j = 0; j < X.size(); ++j) {
    const double d = rdist(P, X[j]);
    if (d > best) {
      best = d;
      if (arg) *arg = j;
    }
  }
  return best;
}

using Key = std::vector<long long>;

Key round_key(const Vec& q, const Mat& J, double scale) {
  Key k;
  k.reserve(static_cast<std::size_t>(q.size() + J.size()));
  for (Eigen::Index i = 0; i < q.size(); ++i) k.push_back(std::llround(q[i] * scale));
  for (Eigen::Index i = 0; i < J.size(); ++i) k.push_back(std::llround(J.data()[i] * scale));
  return k;
}

}  // namespace

ConfClass ConfClass::from_matrix(const Mat& A) {
  if (A.rows() != A.cols() || A.rows() == 0) throw InputError("ConfClass: matrix must be square and nonempty");
  if (!A.allFinite()) throw InputError("ConfClass: non-finite entry");
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw InputError("ConfClass: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(A);
  if (!(es.eigenvalues().minCoeff() > 0.0)) throw InputError("ConfClass: matrix is not positive definite");
  const double det = es.eigenvalues().prod();
  if (std::abs(det - 1.0) > 1e-10) throw InputError("ConfClass: determinant must be one");
  return ConfClass(0.5 * (A + A.transpose()));
}

ConfClass ConfClass::normalized(const Mat& A) {
  if (A.rows() != A.cols() || A.rows() == 0) throw InputError("ConfClass: matrix must be square and nonempty");
  Mat S = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(S);
  const Vec l = es.eigenvalues();
  if (!(l.minCoeff() > 0.0) || !l.allFinite()) throw DomainError("ConfClass: matrix is not positive definite");
  const double logdet = l.array().log().sum();
  S *= std::exp(-logdet / static_cast<double>(S.rows()));
  return ConfClass(std::move(S));
}

ConfClass ConfClass::identity(int n) { return ConfClass(Mat::Identity(n, n)); }

ConfClass act(const Mat& X, const ConfClass& A) {
  if (X.rows() != A.dim() || X.cols() != A.dim()) throw InputError("act: dimension mismatch");
  const double det = X.determinant();
  if (!std::isfinite(det) || std::abs(det) <= 1e-300) throw DomainError("act: X is singular");
  return ConfClass::normalized(X.transpose() * A.matrix() * X);
}

Vec relative_eigenvalues(const ConfClass& A, const ConfClass& B) {
  if (A.dim() != B.dim()) throw InputError("relative_eigenvalues: dimension mismatch");
  const Mat L = spd_isqrt(A.matrix());
  const Mat E = L * B.matrix() * L;
  return Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (E + E.transpose()), Eigen::EigenvaluesOnly).eigenvalues();
}

double kdist(const ConfClass& A, const ConfClass& B) {
  const Vec l = relative_eigenvalues(A, B);
  return std::max({0.0, std::log(l.maxCoeff()), -std::log(l.minCoeff())});
}

double rdist(const ConfClass& A, const ConfClass& B) {
  return relative_eigenvalues(A, B).array().log().matrix().norm();
}

double dilatation(const ConfClass& A) { return std::exp(kdist(ConfClass::identity(A.dim()), A)); }

ConfClass geodesic_point(const ConfClass& P, const ConfClass& A, double s) {
  const Mat S = spd_sqrt(P.matrix());
  const Mat Si = spd_isqrt(P.matrix());
  const Mat E = spd_apply(Si * A.matrix() * Si, [s](double v) { return std::pow(v, s); });
  return ConfClass::normalized(S * E * S);
}

Vec min_enclosing_ball(const std::vector<Vec>& pts, double* radius) {
  if (pts.empty()) throw InputError("min_enclosing_ball: empty point set");
  // Fixed-seed shuffle keeps the expected linear running time and stays deterministic.
  std::vector<Vec> P = pts;
  std::mt19937_64 rng(0x5eedULL);
  std::shuffle(P.begin(), P.end(), rng);
  std::vector<Vec> R;
  const Ball B = welzl(P, P.size(), R, static_cast<std::size_t>(P[0].size()));
  if (radius) *radius = B.r;
  return B.c;
}

CircumcenterResult circumcenter(const std::vector<ConfClass>& X, const CircumcenterOptions& opt) {
  if (X.empty()) throw InputError("circumcenter: empty set");
  for (const auto& A : X) {
    if (A.dim() != X[0].dim()) throw InputError("circumcenter: classes of different dimension");
  }
  CircumcenterResult res;
  res.center = X[0];
  std::size_t far = 0;
  res.radius = max_rdist(res.center, X, &far);
  if (X.size() == 1 || res.radius == 0.0) return res;

  // Harmonic minimax descent.
  double prev = res.radius;
  for (int it = 0; it < opt.max_iters; ++it) {
    res.center = geodesic_point(res.center, X[far], 1.0 / (it + 2.0));
    const double r = max_rdist(res.center, X, &far);
    ++res.iterations;
    if (std::abs(prev - r) < opt.tol) break;
    prev = r;
  }

  // Tangent-space refinement with a line search on the radius.
  const Eigen::Index n = X[0].dim();
  double radius = max_rdist(res.center, X);
  bool converged = false;
  for (int it = 0; it < opt.refine_iters; ++it) {
    const Mat S = spd_sqrt(res.center.matrix());
    const Mat Si = spd_isqrt(res.center.matrix());
    std::vector<Vec> W;
    W.reserve(X.size());
    for (const auto& A : X) W.push_back(sym_to_vec(spd_log(Si * A.matrix() * Si)));
    const Vec c = min_enclosing_ball(W);
    ++res.iterations;
    if (c.norm() <= std::max(opt.tol, 1e-14)) {
      converged = true;
      break;
    }
    const Mat C = vec_to_sym(c, n);
    // r(s) is convex along the geodesic, so bracket by doubling and then golden-section.
    const auto at = [&](double s) { return ConfClass::normalized(S * sym_exp(s * C) * S); };
    const auto r_at = [&](double s) { return max_rdist(at(s), X); };
    double lo = 0.0, hi = 1.0, r_hi = r_at(hi);
    while (r_hi < radius && hi < 1024.0) {
      lo = hi;
      hi *= 2.0;
      r_hi = r_at(hi);
    }
    if (lo > 0.0) lo *= 0.5;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = hi - g * (hi - lo), b = lo + g * (hi - lo), ra = r_at(a), rb = r_at(b);
    for (int k = 0; k < 80 && hi - lo > 1e-9 * hi; ++k) {
      if (ra <= rb) {
        hi = b;
        b = a;
        rb = ra;
        a = hi - g * (hi - lo);
        ra = r_at(a);
      } else {
        lo = a;
        a = b;
        ra = rb;
        b = lo + g * (hi - lo);
        rb = r_at(b);
      }
    }
    const double s_best = ra <= rb ? a : b;
    const double r_best = std::min(ra, rb);
    bool moved = false;
    if (r_best < radius) {
      res.center = at(s_best);
      radius = r_best;
      moved = true;
    }
    if (!moved) {
      // No step along the enclosing-ball direction lowers the radius: optimal to rounding.
      converged = c.norm() <= 1e-6 * std::max(1.0, radius);
      break;
    }
  }
  res.radius = radius;
  if (!converged) throw ConvergenceError("circumcenter: refinement did not converge", radius);
  return res;
}

const ConfSample& ConfField::nearest(const Vec& p, double radius) const {
  const ConfSample* best = nullptr;
  double bd = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    if (s.point.size() != p.size()) continue;
    const double d = (s.point - p).norm();
    if (d < bd) {
      bd = d;
      best = &s;
    }
  }
  if (!best || bd > radius) throw CoverageError("ConfField: no sample within the coverage radius");
  return *best;
}

nlohmann::json ConfField::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : samples) {
    arr.push_back({{"point", vec_to_json(s.point)},
                   {"matrix", mat_to_json(s.value.matrix())},
                   {"defect", s.defect},
                   {"flagged", s.flagged}});
  }
  return arr;
}

Mat first_block_derivative(const BlockMap& F, const Vec& p, double rel_step) {
  const int n1 = F.spec().mult(0);
  Mat D(n1, n1);
  Vec xp = p;
  for (int c = 0; c < n1; ++c) {
    const double h = rel_step * (1.0 + std::abs(p[c]));
    xp[c] = p[c] + h;
    const Vec fp = F.apply(xp);
    xp[c] = p[c] - h;
    const Vec fm = F.apply(xp);
    xp[c] = p[c];
    D.col(c) = (fp.head(n1) - fm.head(n1)) / (2.0 * h);
  }
  return D;
}

std::vector<ConfClass> orbit_structures(const std::vector<BlockMap>& generators, const Vec& p,
                                        const InvariantStructureOptions& opt) {
  if (generators.empty()) throw InputError("orbit_structures: no generators");
  const int n1 = generators[0].spec().mult(0);
  struct State {
    Vec q;
    Mat J;
  };
  std::vector<State> frontier{{p, Mat::Identity(n1, n1)}};
  std::map<Key, bool> seen;
  seen[round_key(p, frontier[0].J, opt.dedup_scale)] = true;
  std::map<Key, ConfClass> values;
  const ConfClass I = ConfClass::identity(n1);
  values.emplace(round_key(Vec(), I.matrix(), opt.dedup_scale), I);
  for (int depth = 1; depth <= opt.word_len && !frontier.empty(); ++depth) {
    std::vector<State> next;
    for (const auto& s : frontier) {
      for (const auto& G : generators) {
        const Mat D = first_block_derivative(G, s.q);
        if (!(std::abs(D.determinant()) > opt.singular_tol)) throw DomainError("orbit_structures: singular derivative");
        State t{G.apply(s.q), D * s.J};
        const Key k = round_key(t.q, t.J, opt.dedup_scale);
        if (seen.count(k)) continue;
        seen[k] = true;
        const ConfClass mu = act(t.J, I);
        values.emplace(round_key(Vec(), mu.matrix(), opt.dedup_scale), mu);
        next.push_back(std::move(t));
      }
    }
    frontier = std::move(next);
  }
  std::vector<ConfClass> out;
  out.reserve(values.size());
  for (auto& [k, v] : values) out.push_back(v);
  return out;
}

ConfField invariant_structure(const std::vector<BlockMap>& generators, const std::vector<Vec>& grid,
                              const InvariantStructureOptions& opt) {
  if (generators.empty()) throw InputError("invariant_structure: no generators");
  if (opt.word_len < 0) throw InputError("invariant_structure: negative word length");
  const int n1 = generators[0].spec().mult(0);
  ConfField field;
  field.samples.resize(grid.size());
  const auto count = static_cast<long long>(grid.size());
#pragma omp parallel for schedule(dynamic)
  for (long long k = 0; k < count; ++k) {
    ConfSample s{grid[k], ConfClass::identity(n1), 0.0, false};
    try {
      s.value = circumcenter(orbit_structures(generators, grid[k], opt), opt.circ).center;
      for (const auto& G : generators) {
        const Vec q = G.apply(grid[k]);
        const ConfClass mu_q = circumcenter(orbit_structures(generators, q, opt), opt.circ).center;
        const Mat D = first_block_derivative(G, grid[k]);
        s.defect = std::max(s.defect, kdist(s.value, act(D, mu_q)));
      }
    } catch (const std::exception&) {
      s.value = ConfClass::identity(n1);
      s.defect = 0.0;
      s.flagged = true;
    }
    field.samples[k] = std::move(s);
  }
  return field;
}

double conformality_defect(const BlockMap& F, const ConfField& mu, const ConfField& nu, const Vec& p, double radius) {
  const ConfClass& mp = mu.nearest(p, radius).value;
  const ConfClass& nq = nu.nearest(F.apply(p), radius).value;
  return std::exp(kdist(mp, act(first_block_derivative(F, p), nq)));
}

MeasureDistortion measure_distortion_check(const BlockMap& F, const std::vector<AxisBox>& boxes, int samples,
                                           unsigned seed) {
  if (samples < 1) throw InputError("measure_distortion_check: need at least one sample per box");
  const int n = F.spec().n();
  MeasureDistortion out;
  out.b_lower = std::numeric_limits<double>::infinity();
  out.b_upper = 0.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (const auto& box : boxes) {
    if (box.lo.size() != n || box.hi.size() != n || !((box.hi - box.lo).minCoeff() > 0.0)) {
      out.ratios.push_back(std::numeric_limits<double>::quiet_NaN());
      ++out.skipped;
      continue;
    }
    double acc = 0.0;
    Vec x(n);
    for (int k = 0; k < samples; ++k) {
      for (int c = 0; c < n; ++c) x[c] = box.lo[c] + U(rng) * (box.hi[c] - box.lo[c]);
      acc += std::abs(F.expr().jacobian(x, 1e-6).determinant());
    }
    const double r = acc / samples;
    out.ratios.push_back(r);
    out.b_lower = std::min(out.b_lower, r);
    out.b_upper = std::max(out.b_upper, r);
  }
  if (out.ratios.size() == static_cast<std::size_t>(out.skipped)) out.b_lower = out.b_upper = 0.0;
  return out;
}

}  // namespace solvrigid
