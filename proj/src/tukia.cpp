#include "solvrigid/tukia.hpp"

#include "solvrigid/conformal.hpp"
#include "solvrigid/errors.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace solvrigid {

namespace {

constexpr std::size_t kMaxWords = 200000;

// Power-of-two step near rel * max(1, |x|) so that x + h is as clean as it gets.
double dyadic_step(double rel, double x) {
  const double target = rel * std::max(1.0, std::abs(x));
  return std::ldexp(1.0, std::ilogb(target));
}

double geomean_abs(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += std::log(std::abs(x));
  return std::exp(s / static_cast<double>(v.size()));
}

double spread_defect(const std::vector<double>& scales) {
  if (scales.empty()) return 0.0;
  const double g = geomean_abs(scales);
  double worst = 0.0;
  for (double s : scales) worst = std::max(worst, std::abs(std::abs(s) / g - 1.0));
  return worst;
}

// blockdiag(a, I) on R^n.
BlockMap first_block_linear(const SpectralData& spec, const Mat& a) {
  const int n1 = spec.mult(0);
  if (a.rows() != n1 || a.cols() != n1) throw InputError("first_block_linear: matrix does not fit the first block");
  Mat M = Mat::Identity(spec.n(), spec.n());
  M.topLeftCorner(n1, n1) = a;
  return BlockMap(spec, FuncExpr::linear(M));
}

BlockMap word_map(const GroupSample& G, const std::vector<int>& letters, bool inverse, double* t) {
  BlockMap out = BlockMap::identity(G.spec);
  double s = 1.0;
  if (!inverse) {
    for (auto it = letters.rbegin(); it != letters.rend(); ++it) {
      out = G.generators.at(*it).compose(out);
      s *= G.quotient_stretch.at(*it);
    }
  } else {
    for (int g : letters) {
      const int inv = G.inverse_index.at(g);
      if (inv < 0) throw InputError("radial_conjugator: escape word uses a generator without a listed inverse");
      out = G.generators[inv].compose(out);
      s *= G.quotient_stretch[inv];
    }
  }
  if (t) *t = s;
  return out;
}

void require_1d_first_block(const SpectralData& spec, const char* what) {
  if (spec.mult(0) != 1) throw InputError(std::string(what) + ": first block must be one-dimensional");
}

}  // namespace

void GroupSample::validate() const {
  if (generators.empty()) throw InputError("GroupSample: no generators");
  if (inverse_index.size() != generators.size() || quotient_stretch.size() != generators.size()) {
    throw InputError("GroupSample: inverse_index / quotient_stretch length mismatch");
  }
  if (word_len < 0) throw InputError("GroupSample: negative word_len");
  if (!(uniform_K >= 1.0)) throw InputError("GroupSample: uniform_K must be >= 1");
  const int m = static_cast<int>(generators.size());
  for (int g = 0; g < m; ++g) {
    if (!(generators[g].spec() == spec)) throw InputError("GroupSample: generator spec mismatch");
    if (!(quotient_stretch[g] > 0.0) || !std::isfinite(quotient_stretch[g])) {
      throw InputError("GroupSample: quotient stretch must be positive");
    }
    const int inv = inverse_index[g];
    if (inv < -1 || inv >= m) throw InputError("GroupSample: inverse index out of range");
    if (inv >= 0 && inverse_index[inv] != g) throw InputError("GroupSample: inverse indices are not symmetric");
    if (inv >= 0 && std::abs(quotient_stretch[g] * quotient_stretch[inv] - 1.0) > 1e-12) {
      throw InputError("GroupSample: inverse stretches do not multiply to 1");
    }
  }
}

std::vector<Word> enumerate_words(const GroupSample& G, int max_len) {
  G.validate();
  std::vector<Word> out;
  out.push_back(Word{{}, BlockMap::identity(G.spec), 1.0});
  std::size_t level_begin = 0;
  const int m = static_cast<int>(G.generators.size());
  for (int len = 1; len <= max_len; ++len) {
    const std::size_t level_end = out.size();
    for (std::size_t w = level_begin; w < level_end; ++w) {
      for (int g = 0; g < m; ++g) {
        // out[w] may be invalidated by push_back, so read through the index each time
        if (!out[w].letters.empty() && G.inverse_index[g] == out[w].letters.front()) continue;
        Word next;
        next.letters.reserve(out[w].letters.size() + 1);
        next.letters.push_back(g);
        next.letters.insert(next.letters.end(), out[w].letters.begin(), out[w].letters.end());
        next.map = G.generators[g].compose(out[w].map);
        next.t = G.quotient_stretch[g] * out[w].t;
        out.push_back(std::move(next));
        if (out.size() > kMaxWords) throw InputError("enumerate_words: word count exceeds the cap; lower word_len");
      }
    }
    level_begin = level_end;
  }
  return out;
}

std::vector<double> uniform_nodes(double lo, double hi, int count) {
  if (count < 2 || !(hi > lo)) throw InputError("uniform_nodes: need count >= 2 and hi > lo");
  std::vector<double> xs(count);
  for (int k = 0; k < count; ++k) xs[k] = lo + ((hi - lo) * k) / (count - 1);
  xs.back() = hi;
  return xs;
}

double sup_measure_at(const std::vector<Word>& words, const SpectralData& spec, const Vec& p,
                      const SupMeasureOptions& opt) {
  require_1d_first_block(spec, "sup_measure_at");
  const double a1 = spec.alpha(0);
  const double h = dyadic_step(opt.fd_step, p[0]);
  Vec pe = p;
  pe[0] += h;
  const double dx = pe[0] - p[0];
  double best = 0.0;
  for (const Word& w : words) {
    const double d = (w.map.apply(pe)[0] - w.map.apply(p)[0]) / dx;
    best = std::max(best, std::abs(d) / std::pow(w.t, a1));
  }
  return best;
}

ScalarField sup_measure_1d(const GroupSample& G, const std::vector<double>& xs, const std::vector<Vec>& ys,
                           const SupMeasureOptions& opt) {
  require_1d_first_block(G.spec, "sup_measure_1d");
  if (xs.size() < 2 || ys.empty()) throw InputError("sup_measure_1d: empty grid");
  for (const Vec& y : ys) {
    if (y.size() != G.spec.n() - 1) throw InputError("sup_measure_1d: quotient point has the wrong dimension");
  }
  const auto words = enumerate_words(G, G.word_len);
  ScalarField out{xs, ys, Mat::Zero(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(ys.size())), {}};
  const int nx = static_cast<int>(xs.size());
  const int ny = static_cast<int>(ys.size());
#pragma omp parallel for collapse(2) schedule(static)
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      Vec p(G.spec.n());
      p[0] = xs[i];
      p.tail(G.spec.n() - 1) = ys[j];
      out.values(i, j) = sup_measure_at(words, G.spec, p, opt);
    }
  }
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      if (!(out.values(i, j) > opt.vanish_tol)) out.flagged.emplace_back(i, j);
    }
  }
  return out;
}

double transformation_law_defect(const GroupSample& G, const std::vector<Word>& words, const std::vector<Vec>& probes,
                                 const SupMeasureOptions& opt) {
  require_1d_first_block(G.spec, "transformation_law_defect");
  const double a1 = G.spec.alpha(0);
  double worst = 0.0;
  for (std::size_t g = 0; g < G.generators.size(); ++g) {
    const BlockMap& H = G.generators[g];
    for (const Vec& p : probes) {
      const double h = dyadic_step(opt.fd_step, p[0]);
      Vec pe = p;
      pe[0] += h;
      const double hbar = std::abs(H.apply(pe)[0] - H.apply(p)[0]) / (pe[0] - p[0]) /
                          std::pow(G.quotient_stretch[g], a1);
      const double mu_p = sup_measure_at(words, G.spec, p, opt);
      const double mu_hp = sup_measure_at(words, G.spec, H.apply(p), opt);
      worst = std::max(worst, std::abs(mu_hp * hbar - mu_p) / mu_p);
    }
  }
  return worst;
}

Conjugator1D conjugator_1d(const SpectralData& spec, const ScalarField& mu, const ConjugatorOptions& opt) {
  require_1d_first_block(spec, "conjugator_1d");
  const auto& xs = mu.xs;
  const int nx = static_cast<int>(xs.size());
  const int ny = static_cast<int>(mu.ys.size());
  if (nx < 2 || ny < 1 || mu.values.rows() != nx || mu.values.cols() != ny) {
    throw InputError("conjugator_1d: field shape mismatch");
  }
  for (int i = 1; i < nx; ++i) {
    if (!(xs[i] > xs[i - 1])) throw InputError("conjugator_1d: x nodes must increase");
  }
  if (!(xs.front() <= 0.0 && 0.0 <= xs.back())) throw InputError("conjugator_1d: grid must contain 0");
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      if (!(mu.values(i, j) > 0.0) || !std::isfinite(mu.values(i, j))) {
        throw InputError("conjugator_1d: mu must be positive and finite on the grid");
      }
    }
  }
  // cell containing 0
  int k0 = 0;
  while (k0 + 1 < nx - 1 && xs[k0 + 1] <= 0.0) ++k0;

  Conjugator1D out;
  out.nu = ScalarField{xs, mu.ys, Mat::Zero(nx, ny), {}};
  for (int j = 0; j < ny; ++j) {
    std::vector<double> left(nx, 0.0), trap(nx, 0.0);
    for (int i = 0; i + 1 < nx; ++i) {
      const double dx = xs[i + 1] - xs[i];
      left[i + 1] = left[i] + mu.values(i, j) * dx;
      trap[i + 1] = trap[i] + 0.5 * (mu.values(i, j) + mu.values(i + 1, j)) * dx;
    }
    const double w = (0.0 - xs[k0]) / (xs[k0 + 1] - xs[k0]);
    const double left0 = left[k0] + w * (left[k0 + 1] - left[k0]);
    const double trap0 = trap[k0] + w * (trap[k0 + 1] - trap[k0]);
    for (int i = 0; i < nx; ++i) {
      const double a = left[i] - left0;
      const double b = trap[i] - trap0;
      out.nu.values(i, j) = opt.left_endpoint ? a : b;
      out.trapezoid_gap = std::max(out.trapezoid_gap, std::abs(a - b));
    }
  }

  const int n = spec.n();
  std::vector<FuncExpr> parts;
  if (ny == 1) {
    std::vector<double> col(nx);
    for (int i = 0; i < nx; ++i) col[i] = out.nu.values(i, 0);
    parts.push_back(FuncExpr::table1d(FuncExpr::project(n, {0}), xs, col));
  } else {
    if (n - 1 != 1) throw InputError("conjugator_1d: several quotient rows need a one-dimensional quotient");
    std::vector<double> yv(ny);
    for (int j = 0; j < ny; ++j) {
      yv[j] = mu.ys[j][0];
      if (j > 0 && !(yv[j] > yv[j - 1])) throw InputError("conjugator_1d: quotient rows must increase");
    }
    parts.push_back(FuncExpr::table2d(FuncExpr::project(n, {0, 1}), xs, yv, out.nu.values));
  }
  if (n > 1) parts.push_back(FuncExpr::project_range(n, 1, n - 1));
  out.F = BlockMap(spec, FuncExpr::stack(parts));
  return out;
}

nlohmann::json ConjugationReport::to_json() const {
  nlohmann::json j;
  j["max_before"] = max_before;
  j["max_after"] = max_after;
  j["tolerance"] = tolerance;
  j["pass"] = pass;
  auto arr = nlohmann::json::array();
  for (const auto& w : words) arr.push_back({{"word", w.letters}, {"before", w.before}, {"after", w.after}});
  j["words"] = arr;
  return j;
}

double similarity_defect(const BlockMap& H, const std::vector<Vec>& probes) {
  std::vector<double> scales;
  double aniso = 0.0;
  for (const Vec& p : probes) {
    const Mat D = first_block_derivative(H, p);
    Eigen::JacobiSVD<Mat> svd(D);
    const Vec s = svd.singularValues();
    if (!(s[s.size() - 1] > 0.0)) throw DomainError("similarity_defect: singular first-block derivative");
    aniso = std::max(aniso, s[0] / s[s.size() - 1] - 1.0);
    scales.push_back(std::exp(s.array().log().mean()));
  }
  return std::max(aniso, spread_defect(scales));
}

ConjugationReport verify_conjugation(const GroupSample& G, const BlockMap& F, const std::vector<Vec>& probes,
                                     double tolerance, double step) {
  if (!(F.spec() == G.spec)) throw InputError("verify_conjugation: conjugator spec mismatch");
  if (probes.empty()) throw InputError("verify_conjugation: no probes");
  const int n1 = G.spec.mult(0);
  const auto words = enumerate_words(G, G.word_len);
  ConjugationReport rep;
  rep.tolerance = tolerance;
  rep.words.resize(words.size() - 1);

  // invertibility of F on the probes, computed once
  std::vector<double> den(probes.size());
  std::vector<Mat> DFinv(probes.size());
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const Vec& p = probes[k];
    if (n1 == 1) {
      const double h = dyadic_step(step, p[0]);
      Vec pe = p;
      pe[0] += h;
      den[k] = F.apply(pe)[0] - F.apply(p)[0];
      if (!(den[k] > 0.0)) throw InputError("verify_conjugation: F is not strictly increasing on the probe box");
    } else {
      const Mat D = first_block_derivative(F, p);
      Eigen::FullPivLU<Mat> lu(D);
      if (!lu.isInvertible()) throw InputError("verify_conjugation: F has a singular first-block derivative on the probes");
      DFinv[k] = lu.inverse();
    }
  }

#pragma omp parallel for schedule(dynamic)
  for (int w = 1; w < static_cast<int>(words.size()); ++w) {
    const BlockMap& W = words[w].map;
    std::vector<double> before, after;
    double aniso_b = 0.0, aniso_a = 0.0;
    for (std::size_t k = 0; k < probes.size(); ++k) {
      const Vec& p = probes[k];
      if (n1 == 1) {
        const double h = dyadic_step(step, p[0]);
        Vec pe = p;
        pe[0] += h;
        const Vec wp = W.apply(p), wpe = W.apply(pe);
        before.push_back((wpe[0] - wp[0]) / (pe[0] - p[0]));
        after.push_back((F.apply(wpe)[0] - F.apply(wp)[0]) / den[k]);
      } else {
        const Mat DW = first_block_derivative(W, p);
        const Mat C = first_block_derivative(F, W.apply(p)) * DW * DFinv[k];
        Eigen::JacobiSVD<Mat> sb(DW), sa(C);
        const Vec b = sb.singularValues(), a = sa.singularValues();
        aniso_b = std::max(aniso_b, b[0] / b[b.size() - 1] - 1.0);
        aniso_a = std::max(aniso_a, a[0] / a[a.size() - 1] - 1.0);
        before.push_back(std::exp(b.array().log().mean()));
        after.push_back(std::exp(a.array().log().mean()));
      }
    }
    rep.words[w - 1] = WordDefect{words[w].letters, std::max(aniso_b, spread_defect(before)),
                                  std::max(aniso_a, spread_defect(after))};
  }
  for (const auto& wd : rep.words) {
    rep.max_before = std::max(rep.max_before, wd.before);
    rep.max_after = std::max(rep.max_after, wd.after);
  }
  rep.pass = rep.max_after <= tolerance;
  return rep;
}

double first_block_factor(const BlockMap& g, const Vec& p) {
  const int n1 = g.spec().mult(0);
  const Mat D = first_block_derivative(g, p);
  const double lam = std::pow(std::abs(D.determinant()), 1.0 / n1);
  return lam;
}

StretchNormalization normalize_stretch(const GroupSample& G, const std::vector<double>& y_nodes,
                                       double x_probe_radius) {
  const int n = G.spec.n();
  const int n1 = G.spec.mult(0);
  if (n - n1 != 1) throw InputError("normalize_stretch: the quotient must be one-dimensional");
  if (y_nodes.size() < 2) throw InputError("normalize_stretch: need at least two y nodes");
  for (std::size_t j = 1; j < y_nodes.size(); ++j) {
    if (!(y_nodes[j] > y_nodes[j - 1])) throw InputError("normalize_stretch: y nodes must increase");
  }
  const auto words = enumerate_words(G, G.word_len);
  const double a1 = G.spec.alpha(0);

  // affinity of each generator's first block in x, probed at the ends and middle of the y range
  for (const BlockMap& g : G.generators) {
    for (double y : {y_nodes.front(), y_nodes[y_nodes.size() / 2], y_nodes.back()}) {
      Vec p = Vec::Zero(n);
      p[n1] = y;
      const Mat D0 = first_block_derivative(g, p);
      for (int c = 0; c < n1; ++c) {
        Vec q = p;
        q[c] = x_probe_radius;
        const Mat D1 = first_block_derivative(g, q);
        if ((D1 - D0).norm() > 1e-6 * std::max(1.0, D0.norm())) {
          throw InputError("normalize_stretch: first block is not affine in x; run the 1-D or higher-dimensional pipeline first");
        }
      }
    }
  }

  StretchNormalization out;
  out.y_nodes = y_nodes;
  out.mu.assign(y_nodes.size(), 0.0);
  const int ny = static_cast<int>(y_nodes.size());
#pragma omp parallel for schedule(static)
  for (int j = 0; j < ny; ++j) {
    Vec p = Vec::Zero(n);
    p[n1] = y_nodes[j];
    double best = 0.0;
    for (const Word& w : words) best = std::max(best, first_block_factor(w.map, p) / std::pow(w.t, a1));
    out.mu[j] = best;
  }
  std::vector<double> inv(out.mu.size());
  for (std::size_t j = 0; j < inv.size(); ++j) {
    if (!(out.mu[j] > 0.0)) throw InputError("normalize_stretch: vanishing stretch on the y grid");
    inv[j] = 1.0 / out.mu[j];
  }

  const FuncExpr y = FuncExpr::project(n, {n1});
  const FuncExpr x = FuncExpr::project_range(n, 0, n1);
  out.F = BlockMap(G.spec, FuncExpr::stack({FuncExpr::mul(FuncExpr::table1d(y, y_nodes, out.mu), x), y}));
  out.F_inv = BlockMap(G.spec, FuncExpr::stack({FuncExpr::mul(FuncExpr::table1d(y, y_nodes, inv), x), y}));
  for (const BlockMap& g : G.generators) out.normalized.push_back(out.F.compose(g.compose(out.F_inv)));

  // cocycle mu(f(y)) eta_{f,y} = mu(y), read off the table inside its range
  const FuncExpr mu_table = FuncExpr::table1d(FuncExpr::identity(1), y_nodes, out.mu);
  for (std::size_t g = 0; g < G.generators.size(); ++g) {
    for (int j = 0; j < ny; ++j) {
      Vec p = Vec::Zero(n);
      p[n1] = y_nodes[j];
      const double fy = G.generators[g].apply(p)[n1];
      if (fy < y_nodes.front() || fy > y_nodes.back()) continue;
      const double eta = first_block_factor(G.generators[g], p) / std::pow(G.quotient_stretch[g], a1);
      const double lhs = mu_table.eval_scalar(Vec::Constant(1, fy)) * eta;
      out.cocycle_defect = std::max(out.cocycle_defect, std::abs(lhs - out.mu[j]) / out.mu[j]);
    }
  }
  return out;
}

double normalized_stretch_defect(const StretchNormalization& N, const GroupSample& G, const std::vector<Vec>& probes) {
  const int n1 = G.spec.mult(0);
  const double lo = N.y_nodes.front(), hi = N.y_nodes.back();
  const auto in_range = [&](double y) { return y >= lo && y <= hi; };
  double worst = 0.0;
  for (std::size_t g = 0; g < G.generators.size(); ++g) {
    const double target = std::pow(G.quotient_stretch[g], G.spec.alpha(0));
    for (const Vec& p : probes) {
      if (!in_range(p[n1]) || !in_range(G.generators[g].apply(p)[n1])) continue;
      worst = std::max(worst, std::abs(first_block_factor(N.normalized[g], p) / target - 1.0));
    }
  }
  return worst;
}

std::vector<RadialStep> radial_conjugator(const GroupSample& G, const std::vector<std::vector<int>>& escape,
                                          const Mat& a, int steps, const std::vector<Vec>& probes) {
  G.validate();
  if (steps < 1 || steps > static_cast<int>(escape.size())) throw InputError("radial_conjugator: steps out of range");
  if (probes.empty()) throw InputError("radial_conjugator: no probes");
  Eigen::FullPivLU<Mat> lu(a);
  if (!lu.isInvertible()) throw InputError("radial_conjugator: a is singular");
  const BlockMap A = first_block_linear(G.spec, a);
  const BlockMap Ainv = first_block_linear(G.spec, lu.inverse());

  std::vector<RadialStep> out;
  double prev_t = 0.0;
  for (int i = 0; i < steps; ++i) {
    double s = 1.0;
    const BlockMap Gi = word_map(G, escape[i], false, &s);
    const double t = 1.0 / s;
    if (!(t > prev_t)) throw ConvergenceError("radial_conjugator: escape stretches are not increasing", t);
    prev_t = t;
    const BlockMap Gi_inv = word_map(G, escape[i], true, nullptr);
    RadialStep st;
    st.t = t;
    st.F = SimMap::dilation(G.spec, t).to_blockmap().compose(A.compose(Gi));
    const BlockMap Finv = Gi_inv.compose(Ainv.compose(SimMap::dilation(G.spec, 1.0 / t).to_blockmap()));
    if (!out.empty()) {
      for (const Vec& p : probes) st.cauchy = std::max(st.cauchy, (st.F.apply(p) - out.back().F.apply(p)).norm());
    }
    for (const BlockMap& H : G.generators) {
      st.defect = std::max(st.defect, similarity_defect(st.F.compose(H.compose(Finv)), probes));
    }
    out.push_back(std::move(st));
  }
  return out;
}

}  // namespace solvrigid
