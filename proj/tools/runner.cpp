#include "runner.hpp"

#include "solvrigid/conformal.hpp"
#include "solvrigid/errors.hpp"
#include "solvrigid/fixtures.hpp"
#include "solvrigid/kernels.hpp"
#include "solvrigid/mapalg.hpp"
#include "solvrigid/nilpotent.hpp"
#include "solvrigid/quasimetric.hpp"
#include "solvrigid/solvgroup.hpp"
#include "solvrigid/tukia.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

namespace solvrigid::cli {

using nlohmann::json;

namespace {

// Reads a config object field by field, recording the effective value and the
// JSON pointer of anything malformed.
class Cfg {
 public:
  Cfg(const json& j, std::string ptr, json& eff) : j_(j), ptr_(std::move(ptr)), eff_(eff) {
    if (!j_.is_null() && !j_.is_object()) throw ConfigError(ptr_.empty() ? "/" : ptr_, "expected an object");
    if (!eff_.is_object()) eff_ = json::object();
  }

  double real(const std::string& key, double def, double lo = -INFINITY, double hi = INFINITY) {
    double v = def;
    if (has(key)) {
      const json& x = j_.at(key);
      if (!x.is_number()) throw ConfigError(at(key), "expected a number");
      v = x.get<double>();
    }
    if (!std::isfinite(v) || v < lo || v > hi) throw ConfigError(at(key), "value out of range");
    eff_[key] = v;
    return v;
  }

  long integer(const std::string& key, long def, long lo, long hi) {
    long v = def;
    if (has(key)) {
      const json& x = j_.at(key);
      if (!x.is_number_integer()) throw ConfigError(at(key), "expected an integer");
      v = x.get<long>();
    }
    if (v < lo || v > hi) throw ConfigError(at(key), "value out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    eff_[key] = v;
    return v;
  }

  std::vector<double> reals(const std::string& key, std::vector<double> def) {
    if (has(key)) {
      const json& x = j_.at(key);
      if (!x.is_array()) throw ConfigError(at(key), "expected an array of numbers");
      def.clear();
      for (std::size_t k = 0; k < x.size(); ++k) {
        if (!x[k].is_number()) throw ConfigError(at(key) + "/" + std::to_string(k), "expected a number");
        def.push_back(x[k].get<double>());
      }
    }
    eff_[key] = def;
    return def;
  }

  // Raw JSON with a default; the caller converts and reports errors through at().
  json raw(const std::string& key, const json& def) {
    const json v = has(key) ? j_.at(key) : def;
    eff_[key] = v;
    return v;
  }

  Cfg object(const std::string& key) {
    static const json null_json;
    eff_[key] = json::object();
    return Cfg(has(key) ? j_.at(key) : null_json, at(key), eff_[key]);
  }

  std::string at(const std::string& key) const { return ptr_ + "/" + key; }

  void reject_unknown() const {
    if (!j_.is_object()) return;
    for (const auto& [k, v] : j_.items()) {
      if (!eff_.contains(k)) throw ConfigError(at(k), "unknown field");
    }
  }

 private:
  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }
  const json& j_;
  std::string ptr_;
  json& eff_;
};

template <class F>
auto converting(const std::string& ptr, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(ptr, e.what());
  }
}

Vec random_vec(std::mt19937_64& rng, int n, double box) {
  std::uniform_real_distribution<double> U(-box, box);
  Vec v(n);
  for (int k = 0; k < n; ++k) v[k] = U(rng);
  return v;
}

Mat rot2(double a) {
  Mat R(2, 2);
  R << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return R;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string spec_label(const SpectralData& s) {
  std::ostringstream os;
  os << "a";
  for (int i = 0; i < s.r(); ++i) os << (i ? "_" : "") << s.alpha(i) << "x" << s.mult(i);
  return os.str();
}

// ------------------------------------------------------------------ metric

void run_metric(Report& rep, const json& config) {
  Cfg c(config, "", rep.config);
  const json default_specs = json::array({json{{"alphas", {1.0}}, {"mults", {2}}},
                                          json{{"alphas", {2.0, 3.0}}, {"mults", {1, 1}}},
                                          json{{"alphas", {1.0, 1.5, 2.5}}, {"mults", {2, 1, 3}}}});
  const json specs_j = c.raw("specs", default_specs);
  if (!specs_j.is_array() || specs_j.empty()) throw ConfigError(c.at("specs"), "expected a non-empty array");
  const long triples = c.integer("triples", 10000, 1, 10000000);
  const double box = c.real("box", 10.0, 1e-9);
  const auto dilations = c.reals("dilations", {0.37, 2.5});
  const double tol = c.real("tolerance", 1e-12, 0.0);
  Cfg ch = c.object("chain");
  const auto chain_alphas = ch.reals("alphas", {2.0, 3.0});
  const long resolution = ch.integer("resolution", 1024, 1, 1L << 40);
  const long depth = ch.integer("max_depth", 12, 1, 40);
  const double beta2_tol = ch.real("beta2_tolerance", 1e-6, 0.0);
  ch.reject_unknown();
  c.reject_unknown();

  std::mt19937_64 rng(rep.seed);
  json per = json::array();
  for (std::size_t s = 0; s < specs_j.size(); ++s) {
    const SpectralData spec =
        converting(c.at("specs") + "/" + std::to_string(s), [&] { return specs_j[s].get<SpectralData>(); });
    const std::string label = spec_label(spec);
    std::vector<Vec> pts;
    for (long k = 0; k < 3 * triples; ++k) pts.push_back(random_vec(rng, spec.n(), box));
    const double v_omp = kernels::power_triangle_violation_omp(spec, pts, spec.alpha(0));
    const double v_ser = kernels::power_triangle_violation_serial(spec, pts, spec.alpha(0));
    rep.check("metric/" + label + "/triangle_power_alpha1", v_omp <= tol, v_omp, tol);
    rep.check("metric/" + label + "/omp_matches_serial", v_omp == v_ser, std::abs(v_omp - v_ser), 0.0);
    double worst_dil = 0.0;
    for (double t : dilations) {
      if (!(t > 0.0)) throw ConfigError(c.at("dilations"), "dilation factors must be positive");
      worst_dil = std::max(worst_dil, kernels::dilation_error_omp(spec, pts, t));
    }
    rep.check("metric/" + label + "/dilation_similarity", worst_dil <= tol, worst_dil, tol);
    per.push_back({{"spec", spec}, {"triangle_violation", v_omp}, {"dilation_error", worst_dil}});
  }
  rep.details["specs"] = per;

  // chain functional between points differing in the first coordinate only
  std::vector<int> mults(chain_alphas.size(), 1);
  const SpectralData cs = converting(ch.at("alphas"), [&] { return SpectralData(chain_alphas, mults); });
  BlockPoint p = BlockPoint::zero(cs), q = BlockPoint::zero(cs);
  q.block(0)[0] = 1.0;
  ChainGrid grid;
  grid.resolution = resolution;
  grid.max_depth = static_cast<int>(depth);
  grid.stop_decrement = 0.0;
  const ChainEstimate e2 = chain_energy(cs, cs.alpha(0), p, q, grid);
  rep.check("chain/beta_alpha1_equals_length", std::abs(e2.value - 1.0) <= beta2_tol, std::abs(e2.value - 1.0), beta2_tol);
  const ChainEstimate e3 = chain_energy(cs, cs.alpha(0) + 1.0, p, q, grid);
  bool monotone = true;
  for (std::size_t k = 1; k < e3.history.size(); ++k) monotone = monotone && e3.history[k] <= e3.history[k - 1];
  rep.check("chain/beta_above_alpha1_history_nonincreasing", monotone, e3.value, 1.0);
  rep.check("chain/beta_above_alpha1_below_direct", e3.value < 1.0, e3.value, 1.0);
  rep.details["chain"] = {{"beta_alpha1", e2.value}, {"beta_above", e3.value}, {"history", e3.history}};
}

// ---------------------------------------------------------------- geodesic

void run_geodesic(Report& rep, const json& config) {
  Cfg c(config, "", rep.config);
  const json lower_j = c.raw("lower", json{{"alphas", {1.0, 2.0}}, {"mults", {1, 1}}});
  const long pairs = c.integer("pairs", 10000, 1, 10000000);
  const double box = c.real("box", 5.0, 1e-9);
  const auto heights = c.reals("heights", {-1.3, 0.4, 2.0});
  Cfg csv = c.object("csv");
  const double s0 = csv.real("s0", 0.0), s1 = csv.real("s1", 5.0);
  const long count = csv.integer("count", 11, 2, 100000);
  csv.reject_unknown();
  c.reject_unknown();

  const SpectralData lower = converting(c.at("lower"), [&] { return lower_j.get<SpectralData>(); });
  const SolvSpec spec(lower, SpectralData());
  std::mt19937_64 rng(rep.seed);
  double rel = 0.0, level = 0.0, bis = 0.0;
  for (long k = 0; k < pairs; ++k) {
    const Vec p = random_vec(rng, lower.n(), box), q = random_vec(rng, lower.n(), box);
    const double D = distance_flat(lower, p, q);
    if (D == 0.0) continue;
    const SolvPoint o = pair_to_point(spec, p, q);
    rel = std::max(rel, std::abs(std::exp(o.height) - D) / D);
    level = std::max(level, std::abs(level_distance(spec, o.height, p, q) - 1.0));
    if (k < 1000) bis = std::max(bis, std::abs(pair_to_point_bisect(spec, p, q) - o.height));
  }
  rep.check("pair_to_point/exp_height_matches_D", rel <= 1e-12, rel, 1e-12);
  rep.check("pair_to_point/unit_level_distance", level <= 1e-12, level, 1e-12);
  rep.check("pair_to_point/bisection_agrees", bis <= 1e-9, bis, 1e-9);

  double exact = 0.0, comp = 0.0, distort = 0.0;
  for (double a : heights) {
    const SimMap b = boundary_of_height_isometry(spec, a);
    for (int k = 0; k < 100; ++k) {
      const Vec x = random_vec(rng, lower.n(), box);
      exact = std::max(exact, (b.apply(x) - dilate_flat(lower, std::exp(a), x)).norm());
    }
    for (double a2 : heights) {
      const SimMap lhs = b.compose(boundary_of_height_isometry(spec, a2));
      const SimMap rhs = boundary_of_height_isometry(spec, a + a2);
      comp = std::max(comp, std::abs(lhs.t - rhs.t) / rhs.t);
    }
    const SuspendedMap phi = suspend_boundary_map(spec, b.to_blockmap(), a);
    const LevelDistortion ld = level_distortion(phi, 200, -3.0, 3.0, box, static_cast<unsigned>(rep.seed));
    distort = std::max({distort, std::abs(ld.max_ratio - 1.0), std::abs(ld.min_ratio - 1.0)});
  }
  rep.check("height_isometry/boundary_is_dilation", exact == 0.0, exact, 0.0);
  rep.check("height_isometry/composition_law", comp <= 1e-12, comp, 1e-12);
  rep.check("height_isometry/suspension_preserves_levels", distort <= 1e-12, distort, 1e-12);

  VerticalGeodesic g{Vec::Zero(lower.n()), Vec(), Orientation::Downward};
  std::ostringstream os;
  write_geodesic_csv(os, g, s0, s1, static_cast<int>(count));
  rep.artifacts.emplace_back("geodesic.csv", os.str());
  rep.details["pairs"] = pairs;
}

// ---------------------------------------------------------------- classify

ASimMap random_asim(std::mt19937_64& rng, const SpectralData& spec) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  SimMap s = SimMap::dilation(spec, 0.5 + 1.5 * U(rng));
  s.A[0] = rot2(2.0 * std::numbers::pi * U(rng));
  s.A[1] = Mat::Constant(1, 1, U(rng) < 0.5 ? -1.0 : 1.0);
  const FuncExpr x3 = FuncExpr::project(3, {2});
  const double amp = U(rng), ph = 6.0 * U(rng);
  const FuncExpr B1 = FuncExpr::stack({FuncExpr::oscillation(x3, amp, 1.0, ph), FuncExpr::oscillation(x3, amp, 1.0, ph, true)});
  const FuncExpr B2 = FuncExpr::constant(3, Vec::Constant(1, 2.0 * U(rng) - 1.0));
  return ASimMap(s, AlmostTranslation(spec, {B1, B2}, 1.0 + 2.0 * amp));
}

void run_classify(Report& rep, const json& config) {
  Cfg c(config, "", rep.config);
  const long pairs = c.integer("pairs", 200, 2, 1000000);
  const double box = c.real("box", 3.0, 1e-9);
  const long composites = c.integer("composites", 1000, 1, 1000000);
  const auto match = c.reals("reciprocity_match", {2.0, 0.5});
  const auto mismatch = c.reals("reciprocity_mismatch", {2.0, 1.0 / 3.0});
  const double hom_tol = c.real("homomorphism_tolerance", 1e-9, 0.0);
  c.reject_unknown();
  if (match.size() != 2 || mismatch.size() != 2) throw ConfigError(c.at("reciprocity_match"), "expected two stretches");

  const SpectralData spec({1.0, 2.0}, {2, 1});
  const FuncExpr x1 = FuncExpr::project(3, {0}), x2 = FuncExpr::project(3, {1}), x3 = FuncExpr::project(3, {2});
  struct Entry {
    std::string name;
    BlockMap map;
    MapClass expected;
  };
  std::vector<Entry> bundle;
  {
    SimMap s = SimMap::dilation(spec, 1.5);
    s.A[0] = rot2(1.1);
    s.B = {(Vec(2) << 0.3, -0.2).finished(), Vec::Constant(1, 1.0)};
    bundle.push_back({"similarity", s.to_blockmap(), MapClass::Sim});
  }
  {
    SimMap s = SimMap::dilation(spec, 0.8);
    s.A[0] = rot2(0.4);
    s.A[1] = Mat::Constant(1, 1, -1.0);
    const AlmostTranslation a(spec,
                              {FuncExpr::stack({FuncExpr::oscillation(x3, 0.5, 1.0, 0.0), FuncExpr::oscillation(x3, 0.5, 1.0, 0.0, true)}),
                               FuncExpr::constant(3, Vec::Constant(1, 0.7))},
                              2.0);
    bundle.push_back({"almost_similarity", ASimMap(s, a).to_blockmap(), MapClass::ASim});
  }
  const BlockMap shear(spec, FuncExpr::stack({x1 + FuncExpr::oscillation(x2, 0.3, 1.0, 0.0),
                                              x2 + FuncExpr::oscillation(x1, 0.3, 1.0, 0.0), x3}));
  bundle.push_back({"bilipschitz", shear, MapClass::Bilip});
  bundle.push_back({"quasisimilarity", SimMap::dilation(spec, 3.0).to_blockmap().compose(shear), MapClass::QSim});

  std::mt19937_64 rng(rep.seed);
  std::vector<std::pair<Vec, Vec>> samples;
  for (long k = 0; k < pairs; ++k) samples.emplace_back(random_vec(rng, 3, box), random_vec(rng, 3, box));
  json cls = json::array();
  for (const auto& e : bundle) {
    const Classification r = classify(e.map, samples);
    rep.check("classify/" + e.name, r.kind == e.expected, r.K, 0.0);
    cls.push_back({{"name", e.name}, {"label", r.label()}, {"expected", to_string(e.expected)}, {"K", r.K}, {"t", r.t},
                   {"N", r.N}, {"structure_defect", r.structure_defect}});
  }
  rep.details["classifications"] = cls;

  // reciprocity on suspended isometries of G_M with both boundaries
  const SpectralData up({1.0, 3.0}, {1, 2});
  double worst_susp = 0.0;
  bool susp_pass = true;
  for (double a : {-1.7, 0.3, 2.2}) {
    const BoundaryPair P{ASimMap::from_sim(SimMap::dilation(spec, std::exp(a))), ASimMap::from_sim(SimMap::dilation(up, std::exp(-a)))};
    const auto v = check_reciprocity(P);
    susp_pass = susp_pass && v.pass;
    worst_susp = std::max(worst_susp, std::abs(v.log_sum));
  }
  rep.check("reciprocity/suspended_isometries_pass", susp_pass, worst_susp, 1e-9);
  {
    const BoundaryPair P{ASimMap::from_sim(SimMap::dilation(spec, match[0])), ASimMap::from_sim(SimMap::dilation(up, match[1]))};
    const auto v = check_reciprocity(P);
    rep.check("reciprocity/matched_pair_pass", v.pass, v.log_sum, 1e-9);
  }
  {
    const BoundaryPair P{ASimMap::from_sim(SimMap::dilation(spec, mismatch[0])),
                         ASimMap::from_sim(SimMap::dilation(up, mismatch[1]))};
    const auto v = check_reciprocity(P);
    const double expect = std::pow(mismatch[0] * mismatch[1], 10);
    const double drift_err = std::abs(v.drift.back() - expect) / expect;
    rep.check("reciprocity/mismatch_fails", !v.pass, v.log_sum, 1e-9);
    rep.check("reciprocity/mismatch_geometric_drift", drift_err <= 1e-12, drift_err, 1e-12);
    rep.details["mismatch_drift"] = v.drift;
  }

  // homomorphism laws on random composites; stretches and rotations read off
  // finite-difference Jacobians of the composed maps
  double st = 0.0, ro = 0.0, ht = 0.0;
  for (long k = 0; k < composites; ++k) {
    const ASimMap G = random_asim(rng, spec), H = random_asim(rng, spec);
    const ASimMap GH = G.compose(H);
    const BlockMap m = GH.to_blockmap();
    const Vec p = random_vec(rng, 3, box);
    const double s = first_block_stretch(m, p);
    st = std::max(st, std::abs(s - std::pow(G.stretch() * H.stretch(), spec.alpha(0))) / s);
    const Mat D = first_block_derivative(m, p) / s;
    ro = std::max(ro, (D - rotation_hom(G)[0] * rotation_hom(H)[0]).norm());
    const BoundaryPair P{G, ASimMap::from_sim(SimMap::dilation(up, 1.0 / G.stretch()))};
    const BoundaryPair Q{H, ASimMap::from_sim(SimMap::dilation(up, 1.0 / H.stretch()))};
    const BoundaryPair PQ{GH, P.upper.compose(Q.upper)};
    ht = std::max(ht, std::abs(height_hom(PQ) - height_hom(P) - height_hom(Q)));
  }
  rep.check("homomorphism/stretch", st <= hom_tol, st, hom_tol);
  rep.check("homomorphism/rotation", ro <= hom_tol, ro, hom_tol);
  rep.check("homomorphism/height", ht <= hom_tol, ht, hom_tol);
}

// --------------------------------------------------------------- conformal

ConfClass random_class(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> N(0.0, 1.0);
  Mat X(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) X(i, j) = N(rng);
  return ConfClass::normalized(X * X.transpose() + 0.1 * Mat::Identity(n, n));
}

Mat random_gl(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> N(0.0, 1.0);
  Mat X(n, n);
  do {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) X(i, j) = N(rng);
  } while (std::abs(X.determinant()) < 0.1);
  return X;
}

void run_conformal(Report& rep, const json& config) {
  Cfg c(config, "", rep.config);
  const long triples = c.integer("triples", 1000, 1, 1000000);
  const long dim = c.integer("dim", 3, 2, 8);
  const long sets = c.integer("equivariance_sets", 100, 1, 100000);
  const long set_size = c.integer("set_size", 5, 2, 100);
  const long grid_n = c.integer("grid", 5, 1, 50);
  const double eps = c.real("shear", 0.3, -0.9, 0.9);
  c.reject_unknown();

  const int n = static_cast<int>(dim);
  std::mt19937_64 rng(rep.seed);
  double sym = 0.0, tri = 0.0, inv = 0.0, ident = 0.0;
  for (long k = 0; k < triples; ++k) {
    const ConfClass A = random_class(rng, n), B = random_class(rng, n), C = random_class(rng, n);
    const double ab = kdist(A, B), ba = kdist(B, A), bc = kdist(B, C), ac = kdist(A, C);
    sym = std::max(sym, std::abs(ab - ba));
    tri = std::max(tri, ac - ab - bc);
    ident = std::max(ident, kdist(A, A));
    const Mat X = random_gl(rng, n);
    inv = std::max(inv, std::abs(kdist(act(X, A), act(X, B)) - ab) / std::max(1.0, ab));
  }
  rep.check("kdist/symmetry", sym <= 1e-10, sym, 1e-10);
  rep.check("kdist/triangle", tri <= 1e-10, std::max(tri, 0.0), 1e-10);
  rep.check("kdist/identity", ident <= 1e-10, ident, 1e-10);
  rep.check("kdist/gl_invariance", inv <= 1e-10, inv, 1e-10);

  double eq = 0.0;
  for (long k = 0; k < sets; ++k) {
    std::vector<ConfClass> S, XS;
    const Mat X = random_gl(rng, n);
    for (long m = 0; m < set_size; ++m) {
      S.push_back(random_class(rng, n));
      XS.push_back(act(X, S.back()));
    }
    const auto c1 = circumcenter(S), c2 = circumcenter(XS);
    eq = std::max(eq, kdist(act(X, c1.center), c2.center));
  }
  rep.check("circumcenter/equivariance", eq <= 1e-6, eq, 1e-6);
  double two = 0.0;
  for (int k = 0; k < 20; ++k) {
    const ConfClass A = random_class(rng, n);
    const ConfClass Ainv = ConfClass::normalized(A.matrix().inverse());
    two = std::max(two, kdist(circumcenter({A, Ainv}).center, ConfClass::identity(n)));
  }
  rep.check("circumcenter/two_point_symmetric", two <= 1e-9, two, 1e-9);

  // order-5 rotation conjugated by a shear: finite group, so truncated orbits are exact
  const SpectralData spec({1.0}, {2});
  const FuncExpr x1 = FuncExpr::project(2, {0}), x2 = FuncExpr::project(2, {1});
  const BlockMap phi(spec, FuncExpr::stack({x1 + FuncExpr::oscillation(x2, eps, 1.0, 0.0), x2}));
  const BlockMap phi_inv(spec, FuncExpr::stack({x1 + FuncExpr::oscillation(x2, -eps, 1.0, 0.0), x2}));
  const double ang = 2.0 * std::numbers::pi / 5.0;
  const BlockMap R(spec, FuncExpr::linear(rot2(ang)));
  const BlockMap Rinv(spec, FuncExpr::linear(rot2(-ang)));
  const std::vector<BlockMap> gens{phi.compose(R.compose(phi_inv)), phi.compose(Rinv.compose(phi_inv))};
  std::vector<Vec> grid;
  for (long i = 0; i < grid_n; ++i)
    for (long j = 0; j < grid_n; ++j) {
      Vec p(2);
      p << -1.0 + 2.0 * (i + 0.5) / grid_n, -1.0 + 2.0 * (j + 0.5) / grid_n;
      grid.push_back(p);
    }
  InvariantStructureOptions opt;
  opt.word_len = 5;
  const ConfField mu = invariant_structure(gens, grid, opt);
  double defect = 0.0;
  int flagged = 0;
  for (const auto& s : mu.samples) {
    defect = std::max(defect, s.defect);
    flagged += s.flagged ? 1 : 0;
  }
  rep.check("invariant_structure/defect", defect <= 1e-6 && flagged == 0, defect, 1e-6);

  // linear conjugate P R P^{-1}: its structure is P^{-1}[I], and P^{-1} is conformal onto the standard one
  Mat P(2, 2);
  P << 1.0, 0.6, 0.2, 1.0;
  const BlockMap Pm(spec, FuncExpr::linear(P)), Pinv(spec, FuncExpr::linear(P.inverse()));
  const ConfField mu_lin = invariant_structure({Pm.compose(R.compose(Pinv)), Pm.compose(Rinv.compose(Pinv))}, grid, opt);
  std::vector<Vec> image;
  for (const Vec& p : grid) image.push_back(Pinv.apply(p));
  const ConfField nu = invariant_structure({R, Rinv}, image, opt);
  double conf = 0.0;
  for (const Vec& p : grid) conf = std::max(conf, conformality_defect(Pinv, mu_lin, nu, p, 1e-9) - 1.0);
  rep.check("conformality/linear_conjugator", conf <= 1e-6, conf, 1e-6);

  std::vector<AxisBox> boxes;
  for (int k = 0; k < 4; ++k) boxes.push_back(AxisBox{Vec::Constant(2, -1.0 + 0.5 * k), Vec::Constant(2, -0.5 + 0.5 * k)});
  const MeasureDistortion md = measure_distortion_check(phi, boxes, 2000, static_cast<unsigned>(rep.seed));
  const double mdev = std::max(std::abs(md.b_upper - 1.0), std::abs(md.b_lower - 1.0));
  rep.check("measure_distortion/area_preserving_shear", mdev <= 1e-6, mdev, 1e-6);
  rep.details["invariant_structure"] = mu.to_json();
}

// ---------------------------------------------------------------- conjugate

void run_conjugate(Report& rep, const json& config) {
  Cfg c(config, "", rep.config);
  Cfg g = c.object("grid");
  const double lo = g.real("lo", -4.0), hi = g.real("hi", 4.0);
  const double res = g.real("resolution", 1e-3, 1e-6, 1.0);
  const auto rows = g.reals("rows", {-1.0, 0.0, 1.0});
  g.reject_unknown();
  const long word_len = c.integer("word_len", 12, 0, 40);
  const long nprobes = c.integer("probes", 400, 1, 1000000);
  const double probe_box = c.real("probe_box", 3.0, 1e-9);
  const double tol = c.real("tolerance", 1e-3, 0.0);
  Cfg s = c.object("stretch");
  const double ylo = s.real("y_lo", -3.0), yhi = s.real("y_hi", 3.0);
  const long ynodes = s.integer("nodes", 6001, 2, 10000000);
  const double stol = s.real("tolerance", 1e-6, 0.0);
  s.reject_unknown();
  Cfg r = c.object("radial");
  const long steps = r.integer("steps", 10, 1, 40);
  const double rbox = r.real("box", 1.0, 1e-9);
  const double cauchy_tol = r.real("cauchy_tolerance", 1e-6, 0.0);
  r.reject_unknown();
  Cfg w = c.object("witness");
  const double K = w.real("K", 2.0, 1.0);
  const double wradius = w.real("radius", 2.0, 1e-9);
  const long wprobes = w.integer("probes", 64, 1, 100000);
  w.reject_unknown();
  c.reject_unknown();
  if (!(hi > lo) || rows.empty()) throw ConfigError(c.at("grid"), "need hi > lo and at least one row");

  std::mt19937_64 rng(rep.seed);
  std::uniform_real_distribution<double> U(-probe_box, probe_box);

  // 1-D pipeline
  const GroupSample G = fixtures::piecewise_1d_sample(static_cast<int>(word_len));
  const int count = static_cast<int>(std::llround((hi - lo) / res)) + 1;
  const auto xs = uniform_nodes(lo, hi, count);
  std::vector<Vec> ys;
  for (double y : rows) ys.push_back(Vec::Constant(1, y));
  const ScalarField mu = sup_measure_1d(G, xs, ys);
  const double mu_bound = std::pow(G.uniform_K, G.spec.alpha(0));
  rep.check("sup_measure/bounded_by_uniform_K", mu.values.maxCoeff() <= mu_bound * (1 + 1e-9) && mu.flagged.empty(),
            mu.values.maxCoeff(), mu_bound);
  const Conjugator1D conj = conjugator_1d(G.spec, mu);
  std::vector<Vec> probes;
  for (long k = 0; k < nprobes; ++k) {
    Vec p(2);
    p << U(rng), rows[static_cast<std::size_t>(k) % rows.size()];
    probes.push_back(p);
  }
  const auto words = enumerate_words(G, static_cast<int>(word_len));
  const std::vector<Vec> law_probes(probes.begin(), probes.begin() + std::min<long>(nprobes, 50));
  const double law = transformation_law_defect(G, words, law_probes);
  rep.check("sup_measure/transformation_law", law <= 1e-6, law, 1e-6);
  const ConjugationReport after = verify_conjugation(G, conj.F, probes, tol);
  rep.check("conjugation/piecewise_sample", after.pass, after.max_after, tol);
  const ConjugationReport wrong = verify_conjugation(G, BlockMap::identity(G.spec), probes, tol);
  rep.check("conjugation/identity_rejected", !wrong.pass, wrong.max_after, tol);
  rep.details["conjugation"] = {{"max_before", after.max_before}, {"max_after", after.max_after},
                                {"trapezoid_gap", conj.trapezoid_gap}, {"words", after.words.size()}};
  {
    std::ostringstream os;
    os << "x,y,mu,nu\n";
    for (std::size_t j = 0; j < ys.size(); ++j)
      for (std::size_t i = 0; i < xs.size(); i += 10)
        os << fmt(xs[i]) << ',' << fmt(rows[j]) << ',' << fmt(mu.values(i, j)) << ',' << fmt(conj.nu.values(i, j)) << '\n';
    rep.artifacts.emplace_back("conjugate-field.csv", os.str());
  }

  // stretch normalization
  const GroupSample S = fixtures::stretch_sample(static_cast<int>(word_len));
  const StretchNormalization N = normalize_stretch(S, uniform_nodes(ylo, yhi, static_cast<int>(ynodes)));
  std::vector<Vec> sp;
  std::uniform_real_distribution<double> Y(ylo, yhi);
  for (int k = 0; k < 1000; ++k) sp.push_back((Vec(2) << U(rng), Y(rng)).finished());
  const double sdef = normalized_stretch_defect(N, S, sp);
  rep.check("normalize_stretch/stretch_equals_t_alpha1", sdef <= stol, sdef, stol);
  rep.check("normalize_stretch/cocycle", N.cocycle_defect <= stol, N.cocycle_defect, stol);

  // rotation rigidity
  const RigidityWitness bad = rotation_rigidity_witness(fixtures::rotating_family(), K, wradius, static_cast<int>(wprobes),
                                                        static_cast<unsigned>(rep.seed));
  rep.check("rotation/witness_found_for_varying_rotation", bad.found, bad.ratio, bad.threshold);
  bool none = true;
  for (double a : {0.0, 0.9, 2.5}) {
    const RigidityWitness ok = rotation_rigidity_witness(fixtures::constant_rotation_family(a), K, wradius,
                                                         static_cast<int>(wprobes), static_cast<unsigned>(rep.seed));
    none = none && !ok.found;
  }
  rep.check("rotation/no_witness_for_constant_rotation", none, 0.0, 0.0);

  // radial conjugator
  std::vector<Vec> rp;
  std::uniform_real_distribution<double> RB(-rbox, rbox);
  for (int k = 0; k < 50; ++k) rp.push_back((Vec(2) << RB(rng), RB(rng)).finished());
  const auto af = fixtures::affine_radial(static_cast<int>(steps));
  const auto as = radial_conjugator(af.sample, af.escape, af.a, static_cast<int>(steps), rp);
  double cauchy = 0.0;
  for (std::size_t k = 1; k < as.size(); ++k) cauchy = std::max(cauchy, as[k].cauchy);
  rep.check("radial/affine_stabilizes", cauchy <= cauchy_tol, cauchy, cauchy_tol);
  rep.check("radial/affine_conjugates_to_similarities", as.back().defect <= 1e-6, as.back().defect, 1e-6);
  const auto nf = fixtures::nonlinear_radial(0.3, static_cast<int>(steps));
  const auto ns = radial_conjugator(nf.sample, nf.escape, nf.a, static_cast<int>(steps), rp);
  bool nonincreasing = true;
  json series = json::array();
  for (std::size_t k = 0; k < ns.size(); ++k) {
    if (k > 0) nonincreasing = nonincreasing && ns[k].defect <= ns[k - 1].defect * (1 + 1e-9) + 1e-12;
    series.push_back({{"t", ns[k].t}, {"cauchy", ns[k].cauchy}, {"defect", ns[k].defect}});
  }
  rep.check("radial/nonlinear_defect_nonincreasing", nonincreasing, ns.back().defect, ns.front().defect);
  rep.details["radial_nonlinear"] = series;
}

// -------------------------------------------------------------------- roots

void run_roots(Report& rep, const json& config) {
  Cfg c(config, "", rep.config);
  const long pairs = c.integer("pairs", 10000, 1, 10000000);
  const double box = c.real("box", 10.0, 1e-9);
  const long random_elements = c.integer("random_elements", 50, 1, 100000);
  const long orbit_cap = c.integer("orbit_word_cap", 8, 1, 20);
  c.reject_unknown();

  std::mt19937_64 rng(rep.seed);
  const unsigned seed = static_cast<unsigned>(rep.seed);

  json certs = json::array();
  std::vector<fixtures::RootFixture> roots{fixtures::root_r1(), fixtures::root_r2(), fixtures::root_r2(3, 2),
                                           fixtures::root_r2(-2, 5)};
  for (std::size_t k = 0; k < roots.size(); ++k) {
    const auto& f = roots[k];
    const RootCertificate cert = approx_lth_root(f.gamma_p, f.generators, f.l);
    const std::string tag = "root/" + std::to_string(k);
    rep.check(tag + "/property1_exact", cert.property1, 0.0, 0.0);
    rep.check(tag + "/property2_exact", cert.property2, 0.0, 0.0);
    rep.check(tag + "/property3", cert.property3_identity && cert.property3, cert.property3_lhs, cert.property3_rhs);
    const double R = displacement_bound(cert.gamma_prime, f.generators);
    const double disp = sampled_displacement(cert.gamma_prime, 1000, box, seed);
    rep.check(tag + "/displacement_bound", disp <= R, disp, R);
    certs.push_back(cert.to_json());
  }
  rep.details["certificates"] = certs;

  // epsilon bound against sampled oscillation
  double worst_gap = -INFINITY;
  bool eps_ok = true;
  for (double cc : {0.5, 1.0, 2.0}) {
    const AlmostTranslation a = fixtures::sine_translation(cc);
    const double eps = epsilon_bound(a, 0), osc = sampled_oscillation(a, 0, static_cast<int>(pairs), box, seed);
    eps_ok = eps_ok && osc <= eps;
    worst_gap = std::max(worst_gap, osc - eps);
  }
  const auto r2 = fixtures::root_r2();
  std::vector<ExactTranslation> elems{r2.generators[0], r2.generators[1], r2.gamma_p};
  std::uniform_int_distribution<int> pick(0, 2);
  std::uniform_int_distribution<long> ex(-3, 3);
  const std::vector<ExactTranslation> base{r2.generators[0], r2.generators[1], r2.gamma_p};
  for (long k = 0; k < random_elements; ++k) {
    ExactWord w;
    for (int m = 0; m < 4; ++m) w.emplace_back(pick(rng), ex(rng));
    elems.push_back(evaluate_word(base, w, r2.gamma_p.spec()));
  }
  for (const auto& e : elems) {
    const AlmostTranslation a = e.to_almost();
    const double eps = epsilon_bound(e, 0), osc = sampled_oscillation(a, 0, static_cast<int>(pairs / 10 + 1), 4.0, seed);
    eps_ok = eps_ok && osc <= eps;
    worst_gap = std::max(worst_gap, osc - eps);
  }
  rep.check("epsilon_bound/dominates_oscillation", eps_ok, worst_gap, 0.0);

  // estimation inequalities with certified sups
  bool est_ok = true;
  double est_gap = -INFINITY;
  for (std::size_t k = 0; k + 1 < elems.size(); ++k) {
    const auto& g = elems[k];
    const auto& h = elems[k + 1];
    const auto gh = g.compose(h);
    for (int i = 0; i < 2; ++i) {
      const double gap1 = gh.bmax(i) - g.bmax(i) - h.bmax(i);
      est_ok = est_ok && gap1 <= 1e-12;
      est_gap = std::max(est_gap, gap1);
      for (long l : {2L, 3L, 5L}) {
        const double gap2 = l * g.bmax(i) - g.power(l).bmax(i) - l * epsilon_bound(g, i);
        est_ok = est_ok && gap2 <= 1e-12;
        est_gap = std::max(est_gap, gap2);
      }
    }
  }
  rep.check("estimation/certified_inequalities", est_ok, est_gap, 1e-12);

  // shuffle identities and abelian tau images
  const auto& g1 = r2.generators[0];
  const auto& g2 = r2.generators[1];
  const auto& gp = r2.gamma_p;
  std::vector<ShuffleCheck> sh{check_shuffle(gp.power(2), gp, gp, 1), check_shuffle(g1.power(2), g1.power(2).compose(g2), g2.inverse(), 0),
                               check_shuffle(g1.power(3), gp, g2, 0), check_shuffle(g1, g2.compose(gp), gp.inverse(), 1)};
  bool sh_ok = true;
  int premises = 0;
  for (const auto& s : sh) {
    sh_ok = sh_ok && s.pass();
    premises += s.premise ? 1 : 0;
  }
  rep.check("shuffle/identities_exact", sh_ok && premises >= 2, premises, 2.0);
  bool abel = true;
  for (std::size_t k = 0; k + 1 < elems.size(); ++k) {
    const auto cm = commutator(elems[k], elems[k + 1]);
    abel = abel && tau_project(cm, 0).size() == 1;  // throws unless [a, b] lies in K_0
  }
  rep.check("tau/commutators_in_lower_kernel", abel, 0.0, 0.0);

  // orbit growth
  const SpectralData line({1.0}, {1});
  const std::vector<ExactTranslation> unit{ExactTranslation::translation(line, {{Q(1)}})};
  std::ostringstream os;
  os << "group,k,count,saturated\n";
  long prev = 0;
  bool mono = true;
  long at3 = 0;
  for (int k = 0; k <= 6; ++k) {
    const auto og = orbit_growth(unit, line, Vec::Zero(1), k, static_cast<int>(orbit_cap));
    os << "unit," << k << ',' << og.count << ',' << (og.saturated ? 1 : 0) << '\n';
    mono = mono && og.count >= prev;
    prev = og.count;
    if (k == 3) at3 = og.count;
  }
  prev = 0;
  for (int k = 0; k <= 4; ++k) {
    const auto og = orbit_growth(r2.generators, r2.gamma_p.spec(), Vec::Zero(2), k, std::min<long>(orbit_cap, 6));
    os << "root_r2," << k << ',' << og.count << ',' << (og.saturated ? 1 : 0) << '\n';
    mono = mono && og.count >= prev;
    prev = og.count;
  }
  rep.check("orbit_growth/unit_translation_k3", at3 == 7, static_cast<double>(at3), 7.0);
  rep.check("orbit_growth/nondecreasing", mono, 0.0, 0.0);
  rep.artifacts.emplace_back("orbit-growth.csv", os.str());
}

}  // namespace

void Report::check(const std::string& name, bool ok, double value, double limit) {
  checks.push_back(Check{name, ok, value, limit});
}

bool Report::pass() const {
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

json Report::to_json() const {
  json j;
  j["subcommand"] = subcommand;
  j["seed"] = seed;
  j["config"] = config;
  auto arr = json::array();
  for (const auto& c : checks) {
    arr.push_back({{"name", c.name}, {"pass", c.pass}, {"value", std::isfinite(c.value) ? json(c.value) : json(fmt(c.value))},
                   {"limit", c.limit}});
  }
  j["checks"] = arr;
  j["details"] = details;
  auto art = json::array();
  for (const auto& [name, body] : artifacts) art.push_back({{"file", name}, {"fnv1a64", fnv1a64_hex(body)}});
  j["artifacts"] = art;
  j["pass"] = pass();
  return j;
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s{"metric", "geodesic", "classify", "conformal", "conjugate", "roots"};
  return s;
}

Report run(const std::string& sub, const json& config, std::uint64_t seed) {
  Report rep;
  rep.subcommand = sub;
  rep.seed = seed;
  static const std::map<std::string, std::function<void(Report&, const json&)>> table{
      {"metric", run_metric},       {"geodesic", run_geodesic},   {"classify", run_classify},
      {"conformal", run_conformal}, {"conjugate", run_conjugate}, {"roots", run_roots}};
  const auto it = table.find(sub);
  if (it == table.end()) throw ConfigError("/", "unknown subcommand " + sub);
  it->second(rep, config);
  return rep;
}

std::string render(const Report& r) { return r.to_json().dump(2) + "\n"; }

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string fnv1a64_hex(const std::string& s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(s)));
  return buf;
}

std::string report_name(const Report& r, const std::string& text) {
  return "report-" + r.subcommand + "-" + fnv1a64_hex(text) + ".json";
}

}  // namespace solvrigid::cli
