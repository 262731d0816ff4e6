#include "solvrigid/exact.hpp"

#include "solvrigid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace solvrigid {

namespace {

Q floor_q(const Q& q) {
  mpz_class f;
  mpz_fdiv_q(f.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return Q(f);
}

Q frac(const Q& q) { return q - floor_q(q); }

QVec zeros(int n) { return QVec(static_cast<std::size_t>(n), Q(0)); }

QVec add(const QVec& a, const QVec& b) {
  QVec out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] + b[k];
  return out;
}

QVec sub(const QVec& a, const QVec& b) {
  QVec out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] - b[k];
  return out;
}

QVec mul(const Q& c, const QVec& a) {
  QVec out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = c * a[k];
  return out;
}

bool all_zero(const QVec& v) {
  return std::all_of(v.begin(), v.end(), [](const Q& q) { return sgn(q) == 0; });
}

Q dot(const QVec& a, const QVec& b) {
  Q s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

bool lex_less(const QVec& a, const QVec& b) { return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end()); }

nlohmann::json qvec_json(const QVec& v) {
  auto arr = nlohmann::json::array();
  for (const Q& q : v) arr.push_back(rational_json(q));
  return arr;
}

QVec qvec_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw InputError("expected an array of rationals");
  QVec out;
  for (const auto& e : j) out.push_back(parse_rational(e));
  return out;
}

}  // namespace

Q parse_rational(const nlohmann::json& j) {
  if (j.is_number_integer()) return Q(std::to_string(j.get<long long>()));
  if (!j.is_string()) throw InputError("rational: expected an integer or a \"p/q\" string");
  Q q;
  if (q.set_str(j.get<std::string>(), 10) != 0) throw InputError("rational: cannot parse \"" + j.get<std::string>() + "\"");
  if (sgn(q.get_den()) == 0) throw InputError("rational: zero denominator");
  q.canonicalize();
  return q;
}

nlohmann::json rational_json(const Q& q) { return q.get_str(); }

Vec to_double(const QVec& v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) out[static_cast<Eigen::Index>(k)] = v[k].get_d();
  return out;
}

double norm(const QVec& v) { return to_double(v).norm(); }

// ---------------------------------------------------------------- PeriodicPL

PeriodicPL::PeriodicPL(std::vector<Q> knots, std::vector<QVec> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
  if (knots_.empty() || knots_.size() != values_.size()) throw InputError("PeriodicPL: knots/values mismatch");
  dim_ = static_cast<int>(values_[0].size());
  for (std::size_t k = 0; k < knots_.size(); ++k) {
    if (sgn(knots_[k]) < 0 || knots_[k] >= 1) throw InputError("PeriodicPL: knots must lie in [0, 1)");
    if (k > 0 && !(knots_[k] > knots_[k - 1])) throw InputError("PeriodicPL: knots must increase");
    if (static_cast<int>(values_[k].size()) != dim_) throw InputError("PeriodicPL: inconsistent value dimension");
  }
  simplify();
}

PeriodicPL PeriodicPL::zero(int dim) { return PeriodicPL({Q(0)}, {zeros(dim)}); }

QVec PeriodicPL::eval(const Q& s) const {
  const std::size_t m = knots_.size();
  if (m == 1) return values_[0];
  const Q u = frac(s);
  // last knot <= u
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), u);
  Q lx, rx;
  const QVec* lv;
  const QVec* rv;
  if (it == knots_.begin()) {
    lx = knots_[m - 1] - 1;
    lv = &values_[m - 1];
    rx = knots_[0];
    rv = &values_[0];
  } else {
    const std::size_t i = static_cast<std::size_t>(it - knots_.begin()) - 1;
    lx = knots_[i];
    lv = &values_[i];
    if (i + 1 == m) {
      rx = knots_[0] + 1;
      rv = &values_[0];
    } else {
      rx = knots_[i + 1];
      rv = &values_[i + 1];
    }
  }
  const Q w = (u - lx) / (rx - lx);
  return add(*lv, mul(w, sub(*rv, *lv)));
}

namespace {

PeriodicPL rebuild(std::vector<std::pair<Q, QVec>> kv) {
  std::sort(kv.begin(), kv.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Q> k;
  std::vector<QVec> v;
  for (auto& [x, y] : kv) {
    k.push_back(x);
    v.push_back(std::move(y));
  }
  return PeriodicPL(std::move(k), std::move(v));
}

}  // namespace

PeriodicPL PeriodicPL::shifted(const Q& c) const {
  std::vector<std::pair<Q, QVec>> kv;
  for (std::size_t k = 0; k < knots_.size(); ++k) kv.emplace_back(frac(knots_[k] - c), values_[k]);
  return rebuild(std::move(kv));
}

PeriodicPL PeriodicPL::reflected() const {
  std::vector<std::pair<Q, QVec>> kv;
  for (std::size_t k = 0; k < knots_.size(); ++k) kv.emplace_back(frac(-knots_[k]), values_[k]);
  return rebuild(std::move(kv));
}

PeriodicPL PeriodicPL::plus(const PeriodicPL& o) const {
  if (o.dim_ != dim_) throw InputError("PeriodicPL::plus: dimension mismatch");
  std::vector<Q> k;
  std::set_union(knots_.begin(), knots_.end(), o.knots_.begin(), o.knots_.end(), std::back_inserter(k));
  std::vector<QVec> v;
  for (const Q& x : k) v.push_back(add(eval(x), o.eval(x)));
  return PeriodicPL(std::move(k), std::move(v));
}

PeriodicPL PeriodicPL::scaled(const Q& c) const {
  std::vector<QVec> v;
  for (const auto& y : values_) v.push_back(mul(c, y));
  return PeriodicPL(knots_, std::move(v));
}

QVec PeriodicPL::mean() const {
  const std::size_t m = knots_.size();
  if (m == 1) return values_[0];
  QVec s = zeros(dim_);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = (i + 1) % m;
    const Q len = (j == 0 ? knots_[0] + 1 : knots_[j]) - knots_[i];
    s = add(s, mul(len / 2, add(values_[i], values_[j])));
  }
  return s;
}

bool PeriodicPL::is_zero() const {
  return std::all_of(values_.begin(), values_.end(), [](const QVec& v) { return all_zero(v); });
}

double PeriodicPL::max_norm(const QVec& c) const {
  double best = 0.0;
  for (const auto& v : values_) best = std::max(best, norm(add(c, v)));
  return best;
}

void PeriodicPL::simplify() {
  if (std::all_of(values_.begin(), values_.end(), [&](const QVec& v) { return v == values_[0]; })) {
    values_.resize(1);
    knots_.assign(1, Q(0));
    return;
  }
  bool changed = true;
  while (changed && knots_.size() > 2) {
    changed = false;
    const std::size_t m = knots_.size();
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t p = (i + m - 1) % m, n = (i + 1) % m;
      const Q xp = p < i ? knots_[p] : knots_[p] - 1;
      const Q xn = n > i ? knots_[n] : knots_[n] + 1;
      const QVec s1 = mul(1 / (knots_[i] - xp), sub(values_[i], values_[p]));
      const QVec s2 = mul(1 / (xn - knots_[i]), sub(values_[n], values_[i]));
      if (s1 == s2) {
        knots_.erase(knots_.begin() + static_cast<long>(i));
        values_.erase(values_.begin() + static_cast<long>(i));
        changed = true;
        break;
      }
    }
  }
}

// ---------------------------------------------------------- ExactTranslation

ExactTranslation::ExactTranslation(SpectralData spec, std::vector<ExactBlock> blocks, double K)
    : spec_(std::move(spec)), blocks_(std::move(blocks)), K_(K) {
  if (static_cast<int>(blocks_.size()) != spec_.r()) throw InputError("ExactTranslation: one block per spectral block");
  if (!(K_ >= 1.0) || !std::isfinite(K_)) throw InputError("ExactTranslation: K must be a finite value >= 1");
  canonicalize();
}

ExactTranslation ExactTranslation::identity(const SpectralData& spec, double K) {
  std::vector<ExactBlock> b;
  for (int i = 0; i < spec.r(); ++i) b.push_back(ExactBlock{zeros(spec.mult(i)), {}});
  return ExactTranslation(spec, std::move(b), K);
}

ExactTranslation ExactTranslation::translation(const SpectralData& spec, const std::vector<QVec>& b, double K) {
  if (static_cast<int>(b.size()) != spec.r()) throw InputError("ExactTranslation::translation: one vector per block");
  std::vector<ExactBlock> blocks;
  for (int i = 0; i < spec.r(); ++i) blocks.push_back(ExactBlock{b[i], {}});
  return ExactTranslation(spec, std::move(blocks), K);
}

void ExactTranslation::canonicalize() {
  const int n = spec_.n();
  for (int i = 0; i < spec_.r(); ++i) {
    ExactBlock& B = blocks_[i];
    const int ni = spec_.mult(i);
    if (static_cast<int>(B.constant.size()) != ni) throw InputError("ExactTranslation: constant has the wrong size");
    std::vector<PLTerm> terms;
    for (PLTerm t : B.terms) {
      if (static_cast<int>(t.w.size()) != n) throw InputError("ExactTranslation: term direction has the wrong size");
      if (t.profile.dim() != ni) throw InputError("ExactTranslation: term profile has the wrong dimension");
      for (int k = 0; k < spec_.offset(i) + ni; ++k) {
        if (sgn(t.w[k]) != 0) throw InputError("ExactTranslation: B_i may only read blocks above i");
      }
      if (all_zero(t.w)) {
        B.constant = add(B.constant, t.profile.eval(Q(0)));
        continue;
      }
      const auto first = std::find_if(t.w.begin(), t.w.end(), [](const Q& q) { return sgn(q) != 0; });
      if (sgn(*first) < 0) {
        t.w = mul(Q(-1), t.w);
        t.profile = t.profile.reflected();
      }
      terms.push_back(std::move(t));
    }
    std::sort(terms.begin(), terms.end(), [](const PLTerm& a, const PLTerm& b) { return lex_less(a.w, b.w); });
    std::vector<PLTerm> merged;
    for (auto& t : terms) {
      if (!merged.empty() && merged.back().w == t.w) {
        merged.back().profile = merged.back().profile.plus(t.profile);
      } else {
        merged.push_back(std::move(t));
      }
    }
    B.terms.clear();
    for (auto& t : merged) {
      const QVec m = t.profile.mean();
      B.constant = add(B.constant, m);
      t.profile = t.profile.plus(PeriodicPL({Q(0)}, {mul(Q(-1), m)}));
      if (!t.profile.is_zero()) B.terms.push_back(std::move(t));
    }
  }
}

int ExactTranslation::level() const {
  for (int i = spec_.r() - 1; i >= 0; --i) {
    if (!blocks_[i].terms.empty() || !all_zero(blocks_[i].constant)) return i;
  }
  return -1;
}

QVec ExactTranslation::perturbation(int i, const QVec& x) const {
  if (static_cast<int>(x.size()) != spec_.n()) throw InputError("ExactTranslation: point has the wrong size");
  QVec out = blocks_[i].constant;
  for (const auto& t : blocks_[i].terms) out = add(out, t.profile.eval(dot(t.w, x)));
  return out;
}

QVec ExactTranslation::apply(const QVec& x) const {
  QVec out = x;
  for (int i = 0; i < spec_.r(); ++i) {
    const QVec b = perturbation(i, x);
    for (int k = 0; k < spec_.mult(i); ++k) out[spec_.offset(i) + k] += b[k];
  }
  return out;
}

Vec ExactTranslation::apply(const Vec& x) const { return to_almost().apply(x); }

ExactTranslation ExactTranslation::compose(const ExactTranslation& inner) const {
  if (!(inner.spec_ == spec_)) throw InputError("ExactTranslation::compose: spec mismatch");
  std::vector<ExactBlock> out;
  for (int i = 0; i < spec_.r(); ++i) {
    ExactBlock B{add(inner.blocks_[i].constant, blocks_[i].constant), inner.blocks_[i].terms};
    for (const auto& t : blocks_[i].terms) {
      Q shift = 0;
      for (int m = i + 1; m < spec_.r(); ++m) {
        bool reads = false;
        for (int k = 0; k < spec_.mult(m); ++k) reads = reads || sgn(t.w[spec_.offset(m) + k]) != 0;
        if (!reads) continue;
        if (!inner.blocks_[m].is_constant()) {
          throw NotExactlyRepresentable("compose: a term reads a block that the inner map does not translate rigidly");
        }
        for (int k = 0; k < spec_.mult(m); ++k) shift += t.w[spec_.offset(m) + k] * inner.blocks_[m].constant[k];
      }
      B.terms.push_back(PLTerm{t.w, t.profile.shifted(shift)});
    }
    out.push_back(std::move(B));
  }
  return ExactTranslation(spec_, std::move(out), std::max(K_, inner.K_));
}

ExactTranslation ExactTranslation::inverse() const {
  const int r = spec_.r();
  std::vector<ExactBlock> inv(r);
  for (int i = r - 1; i >= 0; --i) {
    inv[i].constant = mul(Q(-1), blocks_[i].constant);
    for (const auto& t : blocks_[i].terms) {
      Q shift = 0;
      for (int m = i + 1; m < r; ++m) {
        bool reads = false;
        for (int k = 0; k < spec_.mult(m); ++k) reads = reads || sgn(t.w[spec_.offset(m) + k]) != 0;
        if (!reads) continue;
        if (!inv[m].terms.empty()) throw NotExactlyRepresentable("inverse: leaves the periodic piecewise-linear class");
        for (int k = 0; k < spec_.mult(m); ++k) shift += t.w[spec_.offset(m) + k] * inv[m].constant[k];
      }
      inv[i].terms.push_back(PLTerm{t.w, t.profile.shifted(shift).scaled(Q(-1))});
    }
    // canonical form of the block is needed before lower blocks test is_constant on it
    ExactTranslation tmp(spec_, [&] {
      std::vector<ExactBlock> b(r);
      for (int m = 0; m < r; ++m) b[m] = m >= i ? inv[m] : ExactBlock{zeros(spec_.mult(m)), {}};
      return b;
    }(), K_);
    inv[i] = tmp.blocks_[i];
  }
  return ExactTranslation(spec_, std::move(inv), K_);
}

ExactTranslation ExactTranslation::power(long k) const {
  if (k < 0) return inverse().power(-k);
  ExactTranslation result = identity(spec_, K_);
  ExactTranslation base = *this;
  while (k > 0) {
    if (k & 1) result = result.compose(base);
    k >>= 1;
    if (k > 0) base = base.compose(base);
  }
  return result;
}

double ExactTranslation::bmax(int i) const {
  const ExactBlock& B = blocks_[i];
  if (B.terms.empty()) return norm(B.constant);
  if (B.terms.size() == 1) return B.terms[0].profile.max_norm(B.constant);
  double s = norm(B.constant);
  for (const auto& t : B.terms) s += t.profile.max_norm(zeros(spec_.mult(i)));
  return s;
}

AlmostTranslation ExactTranslation::to_almost() const {
  const int n = spec_.n();
  std::vector<FuncExpr> B;
  for (int i = 0; i < spec_.r(); ++i) {
    FuncExpr e = FuncExpr::constant(n, to_double(blocks_[i].constant));
    for (const auto& t : blocks_[i].terms) {
      Mat wrow(1, n);
      for (int k = 0; k < n; ++k) wrow(0, k) = t.w[k].get_d();
      const FuncExpr u = FuncExpr::affine(wrow, Vec::Zero(1));
      std::vector<double> xs;
      for (const Q& k : t.profile.knots()) xs.push_back(k.get_d());
      xs.push_back(xs.front() + 1.0);
      std::vector<FuncExpr> comps;
      for (int c = 0; c < spec_.mult(i); ++c) {
        std::vector<double> ys;
        for (const auto& v : t.profile.values()) ys.push_back(v[c].get_d());
        ys.push_back(ys.front());
        comps.push_back(FuncExpr::table1d(u, xs, ys, 1.0));
      }
      e = e + FuncExpr::stack(comps);
    }
    B.push_back(e);
  }
  return AlmostTranslation(spec_, std::move(B), K_);
}

nlohmann::json ExactTranslation::to_json() const {
  nlohmann::json j;
  j["spec"] = spec_;
  j["K"] = K_;
  auto blocks = nlohmann::json::array();
  for (const auto& B : blocks_) {
    nlohmann::json b;
    b["constant"] = qvec_json(B.constant);
    auto terms = nlohmann::json::array();
    for (const auto& t : B.terms) {
      nlohmann::json tj;
      tj["w"] = qvec_json(t.w);
      tj["knots"] = qvec_json(t.profile.knots());
      auto vals = nlohmann::json::array();
      for (const auto& v : t.profile.values()) vals.push_back(qvec_json(v));
      tj["values"] = vals;
      terms.push_back(tj);
    }
    b["terms"] = terms;
    blocks.push_back(b);
  }
  j["blocks"] = blocks;
  return j;
}

ExactTranslation ExactTranslation::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("spec") || !j.contains("blocks")) {
    throw InputError("ExactTranslation: expected {spec, blocks[, K]}");
  }
  const SpectralData spec = j.at("spec").get<SpectralData>();
  const double K = j.contains("K") ? read_finite(j.at("K"), "K") : 1.0;
  std::vector<ExactBlock> blocks;
  for (const auto& b : j.at("blocks")) {
    ExactBlock B;
    B.constant = qvec_from_json(b.at("constant"));
    if (b.contains("terms")) {
      for (const auto& t : b.at("terms")) {
        std::vector<QVec> vals;
        for (const auto& v : t.at("values")) vals.push_back(qvec_from_json(v));
        B.terms.push_back(PLTerm{qvec_from_json(t.at("w")), PeriodicPL(qvec_from_json(t.at("knots")), std::move(vals))});
      }
    }
    blocks.push_back(std::move(B));
  }
  return ExactTranslation(spec, std::move(blocks), K);
}

std::string ExactTranslation::key() const {
  nlohmann::json j = to_json();
  j.erase("K");
  return j.dump();
}

ExactTranslation evaluate_word(const std::vector<ExactTranslation>& generators, const ExactWord& w,
                               const SpectralData& spec) {
  double K = 1.0;
  for (const auto& g : generators) K = std::max(K, g.K());
  ExactTranslation out = ExactTranslation::identity(spec, K);
  for (const auto& [g, e] : w) {
    if (g < 0 || g >= static_cast<int>(generators.size())) throw InputError("evaluate_word: generator index out of range");
    out = out.compose(generators[g].power(e));
  }
  return out;
}

nlohmann::json word_json(const ExactWord& w) {
  auto arr = nlohmann::json::array();
  for (const auto& [g, e] : w) arr.push_back({g, e});
  return arr;
}

}  // namespace solvrigid
