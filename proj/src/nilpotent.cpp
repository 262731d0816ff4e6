#include "solvrigid/nilpotent.hpp"

#include "solvrigid/errors.hpp"
#include "solvrigid/quasimetric.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace solvrigid {

namespace {

bool block_zero(const ExactBlock& b) {
  if (!b.terms.empty()) return false;
  for (const Q& q : b.constant) {
    if (sgn(q) != 0) return false;
  }
  return true;
}

// Exact solve of sum_k a_k cols[k] = rhs; free variables are set to zero.
// Returns false when inconsistent.
bool solve_rational(const std::vector<QVec>& cols, const QVec& rhs, std::vector<Q>& a) {
  const std::size_t rows = rhs.size(), m = cols.size();
  std::vector<std::vector<Q>> M(rows, std::vector<Q>(m + 1));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t k = 0; k < m; ++k) M[i][k] = cols[k][i];
    M[i][m] = rhs[i];
  }
  std::vector<int> pivot_col;
  std::size_t row = 0;
  for (std::size_t col = 0; col < m && row < rows; ++col) {
    std::size_t p = row;
    while (p < rows && sgn(M[p][col]) == 0) ++p;
    if (p == rows) continue;
    std::swap(M[p], M[row]);
    const Q inv = 1 / M[row][col];
    for (auto& x : M[row]) x *= inv;
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == row || sgn(M[i][col]) == 0) continue;
      const Q f = M[i][col];
      for (std::size_t k = 0; k <= m; ++k) M[i][k] -= f * M[row][k];
    }
    pivot_col.push_back(static_cast<int>(col));
    ++row;
  }
  for (std::size_t i = row; i < rows; ++i) {
    if (sgn(M[i][m]) != 0) return false;
  }
  a.assign(m, Q(0));
  for (std::size_t i = 0; i < pivot_col.size(); ++i) a[pivot_col[i]] = M[i][m];
  return true;
}

long floor_div(const Q& a, long l) {
  const Q q = a / l;
  mpz_class f;
  mpz_fdiv_q(f.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  if (!f.fits_slong_p()) throw InputError("approx_lth_root: exponent does not fit in a long");
  return f.get_si();
}

ExactTranslation word_product(const std::vector<ExactTranslation>& gens, const std::vector<int>& idx,
                              const std::vector<long>& exps, const ExactTranslation& id) {
  ExactTranslation out = id;
  for (std::size_t k = 0; k < idx.size(); ++k) out = out.compose(gens[idx[k]].power(exps[k]));
  return out;
}

}  // namespace

double epsilon_from(const SpectralData& spec, double K, const std::vector<double>& bmax, int i) {
  if (i < 0 || i >= spec.r()) throw InputError("epsilon_bound: block index out of range");
  double eps = 0.0;
  for (int j = i + 1; j < spec.r(); ++j) {
    if (!std::isfinite(bmax[j])) throw InputError("epsilon_bound: missing sup certificate for block " + std::to_string(j));
    eps = std::max(eps, 2.0 * std::pow(K, spec.alpha(i)) * std::pow(bmax[j], spec.alpha(i) / spec.alpha(j)));
  }
  return eps;
}

double epsilon_bound(const AlmostTranslation& g, int i) {
  std::vector<double> b;
  for (int j = 0; j < g.spec.r(); ++j) b.push_back(g.bmax(j));
  return epsilon_from(g.spec, g.K, b, i);
}

double epsilon_bound(const ExactTranslation& g, int i) {
  std::vector<double> b;
  for (int j = 0; j < g.spec().r(); ++j) b.push_back(g.bmax(j));
  return epsilon_from(g.spec(), g.K(), b, i);
}

double sampled_oscillation(const AlmostTranslation& g, int i, int pairs, double box, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-box, box);
  const int n = g.spec.n();
  double worst = 0.0;
  Vec y(n), z(n);
  for (int k = 0; k < pairs; ++k) {
    for (int c = 0; c < n; ++c) {
      y[c] = U(rng);
      z[c] = U(rng);
    }
    worst = std::max(worst, (g.B[i].eval(y) - g.B[i].eval(z)).norm());
  }
  return worst;
}

QVec tau_project(const ExactTranslation& g, int j) {
  const int r = g.spec().r();
  if (j < 0 || j >= r) throw InputError("tau_project: block index out of range");
  for (int m = j + 1; m < r; ++m) {
    if (!block_zero(g.block(m))) throw NotInKernel("tau_project: nonzero perturbation above the requested level", m);
  }
  if (!g.block(j).is_constant()) throw NotInKernel("tau_project: B_j is not constant", j);
  return g.block(j).constant;
}

Vec tau_project(const AlmostTranslation& g, int j) {
  const int r = g.spec.r();
  if (j < 0 || j >= r) throw InputError("tau_project: block index out of range");
  const Vec origin = Vec::Zero(g.spec.n());
  for (int m = j + 1; m < r; ++m) {
    if (!g.B[m].is_constant() || g.B[m].eval(origin).norm() != 0.0) {
      throw NotInKernel("tau_project: nonzero perturbation above the requested level", m);
    }
  }
  if (!g.B[j].is_constant()) throw NotInKernel("tau_project: B_j is not constant", j);
  return g.B[j].eval(origin);
}

ExactTranslation commutator(const ExactTranslation& a, const ExactTranslation& b) {
  return a.compose(b).compose(a.inverse()).compose(b.inverse());
}

ShuffleCheck check_shuffle(const ExactTranslation& k, const ExactTranslation& g, const ExactTranslation& h, int j) {
  const int r = k.spec().r();
  if (j < 0 || j >= r) throw InputError("check_shuffle: block index out of range");
  for (int m = j + 1; m < r; ++m) {
    if (!block_zero(k.block(m))) throw InputError("check_shuffle: k is not in K_j");
  }
  ShuffleCheck out;
  const ExactTranslation gk = g.compose(k), kg = k.compose(g);
  out.upper = true;
  for (int i = j + 1; i < r; ++i) out.upper = out.upper && gk.block(i) == kg.block(i) && gk.block(i) == g.block(i);
  out.level = gk.block(j) == kg.block(j);
  out.premise = k.block(j) == g.compose(h).block(j);
  if (out.premise) out.implication = k.compose(h.inverse()).block(j) == g.block(j);
  return out;
}

nlohmann::json RootCertificate::to_json() const {
  nlohmann::json j;
  j["l"] = l;
  j["gamma_p"] = gamma_p.to_json();
  j["gamma_prime"] = gamma_prime.to_json();
  j["eta"] = word_json(eta);
  j["c"] = c;
  auto lv = nlohmann::json::array();
  for (const auto& s : levels) {
    auto a = nlohmann::json::array();
    for (const Q& q : s.a) a.push_back(rational_json(q));
    lv.push_back({{"level", s.level}, {"generators", s.generators}, {"a", a}, {"floor", s.floor}, {"c", s.c}});
  }
  j["levels"] = lv;
  j["property1"] = property1;
  j["property2"] = property2;
  j["property3_identity"] = property3_identity;
  j["property3"] = property3;
  j["property3_lhs"] = property3_lhs;
  j["property3_rhs"] = property3_rhs;
  return j;
}

RootCertificate approx_lth_root(const ExactTranslation& gamma_p, const std::vector<ExactTranslation>& generators,
                                long l) {
  if (l < 1) throw InputError("approx_lth_root: l must be positive");
  const SpectralData& spec = gamma_p.spec();
  const int r = spec.r();
  double K = gamma_p.K();
  std::vector<int> level(generators.size());
  for (std::size_t i = 0; i < generators.size(); ++i) {
    if (!(generators[i].spec() == spec)) throw InputError("approx_lth_root: generator spec mismatch");
    K = std::max(K, generators[i].K());
    level[i] = generators[i].level();
    if (level[i] >= 0 && !generators[i].block(level[i]).is_constant()) {
      throw NotInKernel("approx_lth_root: generator has a non-constant top perturbation", level[i]);
    }
  }
  const ExactTranslation id = ExactTranslation::identity(spec, K);

  RootCertificate cert;
  cert.gamma_p = gamma_p;
  cert.l = l;
  cert.c.assign(generators.size(), 0);
  ExactTranslation gp = gamma_p;
  ExactTranslation errs = id;  // err_{j+1} ... err_r
  std::vector<ExactWord> hats(r);

  for (int j = r - 1; j >= 0; --j) {
    const ExactTranslation E = gp.power(l).compose(errs.inverse());
    for (int m = j + 1; m < r; ++m) {
      if (!block_zero(E.block(m))) throw NotInKernel("approx_lth_root: descent left the kernel", m);
    }
    if (!E.block(j).is_constant()) throw NotInKernel("approx_lth_root: level perturbation is not constant", j);
    LevelStep step;
    step.level = j;
    std::vector<QVec> cols;
    for (std::size_t i = 0; i < generators.size(); ++i) {
      if (level[i] == j) {
        step.generators.push_back(static_cast<int>(i));
        cols.push_back(generators[i].block(j).constant);
      }
    }
    if (!solve_rational(cols, E.block(j).constant, step.a)) {
      throw InfiniteIndexSuspected("approx_lth_root: level " + std::to_string(j) + " target is outside the span of the generators");
    }
    for (std::size_t k = 0; k < step.a.size(); ++k) {
      if (step.a[k].get_den() != 1) {
        throw InfiniteIndexSuspected("approx_lth_root: level " + std::to_string(j) + " has no integral coefficients");
      }
      const long f = floor_div(step.a[k], l);
      const Q rem = step.a[k] - Q(f) * l;
      step.floor.push_back(f);
      step.c.push_back(rem.get_num().get_si());
      cert.c[step.generators[k]] = step.c.back();
    }
    const ExactTranslation hat = word_product(generators, step.generators, step.floor, id);
    const ExactTranslation err = word_product(generators, step.generators, step.c, id);
    for (std::size_t k = 0; k < step.generators.size(); ++k) {
      if (step.floor[k] != 0) hats[j].emplace_back(step.generators[k], step.floor[k]);
    }
    gp = gp.compose(hat.inverse());
    errs = err.compose(errs);
    cert.levels.push_back(std::move(step));
  }

  cert.gamma_prime = gp;
  for (int j = 0; j < r; ++j) cert.eta.insert(cert.eta.end(), hats[j].begin(), hats[j].end());

  cert.property1 = gp.compose(evaluate_word(generators, cert.eta, spec)) == gamma_p;
  ExactWord cw;
  for (int j = 0; j < r; ++j) {
    for (std::size_t i = 0; i < generators.size(); ++i) {
      if (level[i] == j && cert.c[i] != 0) cw.emplace_back(static_cast<int>(i), cert.c[i]);
    }
  }
  cert.property2 = gp.power(l) == evaluate_word(generators, cw, spec);

  const int top = r - 1;
  QVec lhs = gp.block(top).constant;
  for (auto& q : lhs) q *= l;
  QVec rhs(lhs.size(), Q(0));
  cert.property3_rhs = 0.0;
  for (std::size_t i = 0; i < generators.size(); ++i) {
    const QVec& b = generators[i].block(top).constant;
    for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] += b[k] * cert.c[i];
    cert.property3_rhs += norm(b);
  }
  cert.property3_identity = lhs == rhs;
  cert.property3_lhs = norm(gp.block(top).constant);
  cert.property3 = cert.property3_lhs <= cert.property3_rhs;
  return cert;
}

double displacement_bound(const ExactTranslation& gamma_prime, const std::vector<ExactTranslation>& generators) {
  const SpectralData& spec = gamma_prime.spec();
  double R = 0.0;
  for (int i = 0; i < spec.r(); ++i) {
    double Ri = epsilon_bound(gamma_prime, i);
    for (const auto& g : generators) Ri += g.bmax(i);
    R += Ri;
  }
  return R;
}

double sampled_displacement(const ExactTranslation& g, int probes, double box, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-box, box);
  const AlmostTranslation a = g.to_almost();
  const int n = g.spec().n();
  Vec x(n);
  double worst = 0.0;
  for (int k = 0; k < probes; ++k) {
    for (int c = 0; c < n; ++c) x[c] = U(rng);
    worst = std::max(worst, (a.apply(x) - x).norm());
  }
  return worst;
}

OrbitGrowth orbit_growth(const std::vector<ExactTranslation>& generators, const SpectralData& spec,
                         const Vec& basepoint, double k, int word_cap) {
  if (basepoint.size() != spec.n()) throw InputError("orbit_growth: basepoint has the wrong size");
  std::vector<ExactTranslation> moves;
  double K = 1.0;
  for (const auto& g : generators) {
    if (!(g.spec() == spec)) throw InputError("orbit_growth: generator spec mismatch");
    moves.push_back(g);
    moves.push_back(g.inverse());
    K = std::max(K, g.K());
  }
  const auto inside = [&](const ExactTranslation& g) {
    return distance_flat(spec, g.to_almost().apply(basepoint), basepoint) <= k;
  };
  OrbitGrowth out;
  const ExactTranslation id = ExactTranslation::identity(spec, K);
  std::set<std::string> seen{id.key()};
  std::vector<ExactTranslation> frontier{id};
  out.count = inside(id) ? 1 : 0;
  for (int len = 1; len <= word_cap && !frontier.empty(); ++len) {
    std::vector<ExactTranslation> next;
    long added_inside = 0;
    for (const auto& e : frontier) {
      for (const auto& m : moves) {
        ExactTranslation g = m.compose(e);
        if (!seen.insert(g.key()).second) continue;
        if (inside(g)) ++added_inside;
        next.push_back(std::move(g));
      }
    }
    out.count += added_inside;
    out.saturated = len == word_cap && added_inside > 0;
    frontier = std::move(next);
  }
  out.explored = static_cast<long>(seen.size());
  return out;
}

}  // namespace solvrigid
