#include "oracles.hpp"

#include "solvrigid/errors.hpp"
#include "solvrigid/fixtures.hpp"
#include "solvrigid/mapalg.hpp"
#include "solvrigid/tukia.hpp"

#include <doctest.h>

using namespace solvrigid;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

const SpectralData S12({1.0, 2.0}, {1, 1});

// h = psi^{-1}(psi + 3/2), written out directly
double psi(double x) { return x < 0 ? 1.5 * x : x; }
double psi_inv(double u) { return u < 0 ? u / 1.5 : u; }
double h_pow(double x, int k) { return psi_inv(psi(x) + 1.5 * k); }

// brute-force sup over h^k, |k| <= L, of the normalized forward difference
double mu_oracle(double x, int L) {
  double best = 0.0;
  const double d = 1e-7 * (1 + std::abs(x));
  for (int k = -L; k <= L; ++k) best = std::max(best, (h_pow(x + d, k) - h_pow(x, k)) / d);
  return best;
}

GroupSample similarity_sample() {
  GroupSample G;
  G.spec = S12;
  const FuncExpr x = FuncExpr::project(2, {0}), y = FuncExpr::project(2, {1});
  G.generators = {BlockMap(S12, FuncExpr::stack({x + FuncExpr::oscillation(y, 0.5, 1.0, 0.0), y})),
                  BlockMap(S12, FuncExpr::stack({x + FuncExpr::oscillation(y, -0.5, 1.0, 0.0), y}))};
  G.inverse_index = {1, 0};
  G.quotient_stretch = {1.0, 1.0};
  G.word_len = 4;
  G.uniform_K = 2.0;
  return G;
}

}  // namespace

TEST_CASE("group sample validation and word enumeration") {
  GroupSample G = fixtures::piecewise_1d_sample(12);
  CHECK(enumerate_words(G, 12).size() == 25);
  CHECK(enumerate_words(G, 0).size() == 1);
  const auto w = enumerate_words(G, 2);
  CHECK(w[0].letters.empty());
  for (const auto& word : w)
    for (std::size_t k = 1; k < word.letters.size(); ++k) CHECK(word.letters[k] != G.inverse_index[word.letters[k - 1]]);
  G.inverse_index = {0, 0};
  CHECK_THROWS_AS(G.validate(), InputError);
  CHECK_THROWS_AS(uniform_nodes(1, 0, 5), InputError);
  const auto nodes = uniform_nodes(-4, 4, 8001);
  CHECK(nodes[4000] == 0.0);
  CHECK(nodes.back() == 4.0);
}

TEST_CASE("sup measure: similarities give 1") {
  const GroupSample G = similarity_sample();
  const ScalarField mu = sup_measure_1d(G, uniform_nodes(-2, 2, 41), {Vec::Constant(1, 0.3), Vec::Constant(1, -1.0)});
  CHECK((mu.values.array() - 1.0).abs().maxCoeff() <= 1e-6);
}

TEST_CASE("sup measure matches the brute-force word scan") {
  const GroupSample G = fixtures::piecewise_1d_sample(12);
  const auto xs = uniform_nodes(-3, 3, 121);
  const ScalarField mu = sup_measure_1d(G, xs, {Vec::Zero(1)});
  for (std::size_t i = 0; i < xs.size(); ++i) {
    CHECK(mu.values(i, 0) == doctest::Approx(mu_oracle(xs[i], 12)).epsilon(1e-6));
    CHECK(mu.values(i, 0) == doctest::Approx(xs[i] < 0 ? 1.5 : 1.0).epsilon(1e-6));
  }
  CHECK(mu.flagged.empty());
}

TEST_CASE("sup measure is nondecreasing in word length") {
  const auto words = enumerate_words(fixtures::piecewise_1d_sample(8), 8);
  std::vector<Word> shorter(words.begin(), words.begin() + 5);  // length <= 2
  for (double x : {-2.5, -0.3, 0.0, 1.2, 4.0}) {
    const Vec p = v2(x, 0.0);
    CHECK(sup_measure_at(shorter, S12, p) <= sup_measure_at(words, S12, p) + 1e-12);
  }
}

TEST_CASE("conjugator of constant densities") {
  const auto xs = uniform_nodes(-2, 2, 9);
  ScalarField one{xs, {Vec::Zero(1)}, Mat::Ones(9, 1), {}};
  const Conjugator1D c1 = conjugator_1d(S12, one);
  CHECK(c1.F.apply(v2(1.3, 0.0))[0] == doctest::Approx(1.3).epsilon(1e-14));
  CHECK(c1.F.apply(v2(-5.0, 0.0))[0] == doctest::Approx(-5.0).epsilon(1e-14));
  ScalarField three{xs, {Vec::Zero(1)}, Mat::Constant(9, 1, 3.0), {}};
  CHECK(conjugator_1d(S12, three).F.apply(v2(0.7, 0.0))[0] == doctest::Approx(2.1).epsilon(1e-14));
  ScalarField bad{xs, {Vec::Zero(1)}, Mat::Zero(9, 1), {}};
  CHECK_THROWS_AS(conjugator_1d(S12, bad), InputError);
  ScalarField off{uniform_nodes(1, 2, 9), {Vec::Zero(1)}, Mat::Ones(9, 1), {}};
  CHECK_THROWS_AS(conjugator_1d(S12, off), InputError);
}

TEST_CASE("1-D pipeline recovers the hidden conjugator") {
  const GroupSample G = fixtures::piecewise_1d_sample(12);
  const auto xs = uniform_nodes(-4, 4, 8001);
  const std::vector<Vec> ys{Vec::Constant(1, -1.0), Vec::Constant(1, 0.0), Vec::Constant(1, 1.0)};
  const ScalarField mu = sup_measure_1d(G, xs, ys);
  const Conjugator1D c = conjugator_1d(S12, mu);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-3, 3);
  std::vector<Vec> probes;
  for (int k = 0; k < 300; ++k) {
    probes.push_back(v2(U(rng), static_cast<double>(k % 3) - 1.0));
    CHECK(c.F.apply(probes.back())[0] == doctest::Approx(psi(probes.back()[0])).epsilon(1e-9));
  }
  // nu similarity law: the conjugated generator is translation by 3/2
  for (const Vec& p : probes) {
    const Vec q = G.generators[0].apply(p);
    CHECK(c.F.apply(q)[0] - c.F.apply(p)[0] == doctest::Approx(1.5).epsilon(1e-9));
  }
  const ConjugationReport rep = verify_conjugation(G, c.F, probes, 1e-3);
  CHECK(rep.pass);
  CHECK(rep.max_after <= 1e-3);
  CHECK(rep.max_before > 0.1);
  const ConjugationReport wrong = verify_conjugation(G, BlockMap::identity(S12), probes, 1e-3);
  CHECK_FALSE(wrong.pass);
  CHECK(wrong.max_after > 0.3);
  const nlohmann::json j = rep.to_json();
  CHECK(j["pass"] == true);
  CHECK(j["words"].size() == rep.words.size());
  CHECK(transformation_law_defect(G, enumerate_words(G, 12), probes) <= 1e-6);
}

TEST_CASE("verify conjugation on similarities and on an already conjugated sample") {
  std::vector<Vec> probes{v2(0.1, 0.2), v2(-1.0, 0.5), v2(2.0, -1.0)};
  const ConjugationReport a = verify_conjugation(similarity_sample(), BlockMap::identity(S12), probes, 1e-9);
  CHECK(a.max_after <= 1e-9);
  CHECK(a.pass);
  GroupSample T;
  T.spec = S12;
  const FuncExpr x = FuncExpr::project(2, {0}), y = FuncExpr::project(2, {1});
  T.generators = {BlockMap(S12, FuncExpr::stack({FuncExpr::affine(Mat::Identity(1, 2), Vec::Constant(1, 1.5)), y})),
                  BlockMap(S12, FuncExpr::stack({FuncExpr::affine(Mat::Identity(1, 2), Vec::Constant(1, -1.5)), y}))};
  T.inverse_index = {1, 0};
  T.quotient_stretch = {1.0, 1.0};
  T.word_len = 6;
  T.uniform_K = 1.0;
  CHECK(verify_conjugation(T, BlockMap::identity(S12), probes, 1e-9).pass);
}

TEST_CASE("stretch normalization") {
  const GroupSample G = fixtures::stretch_sample(12);
  const StretchNormalization N = normalize_stretch(G, uniform_nodes(-3, 3, 6001));
  CHECK(N.cocycle_defect <= 1e-6);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> X(-3, 3);
  std::vector<Vec> probes;
  for (int k = 0; k < 500; ++k) probes.push_back(v2(X(rng), X(rng)));
  CHECK(normalized_stretch_defect(N, G, probes) <= 1e-6);
  // raw stretches do vary
  double lo = INFINITY, hi = 0;
  for (const Vec& p : probes) {
    const double s = first_block_factor(G.generators[0], p);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  CHECK(hi - lo > 0.1);
  // sample already normalized: mu is 1
  const StretchNormalization N1 = normalize_stretch(similarity_sample(), uniform_nodes(-2, 2, 101));
  for (double m : N1.mu) CHECK(m == doctest::Approx(1.0).epsilon(1e-9));
  // first block not affine in x
  GroupSample bad = similarity_sample();
  const FuncExpr x = FuncExpr::project(2, {0}), y = FuncExpr::project(2, {1});
  bad.generators = {BlockMap(S12, FuncExpr::stack({x + FuncExpr::oscillation(x, 0.1, 1.0, 0.0), y})),
                    BlockMap(S12, FuncExpr::stack({x, y}))};
  CHECK_THROWS_AS(normalize_stretch(bad, uniform_nodes(-2, 2, 11)), InputError);
}

TEST_CASE("normalized sample then rotation check: constant rotations") {
  // after normalization the first-block factors equal t^{alpha_1}, i.e. the rotation part is constant
  const GroupSample G = fixtures::stretch_sample(6);
  const StretchNormalization N = normalize_stretch(G, uniform_nodes(-3, 3, 3001));
  for (double y : {-1.4, -0.75, -0.2}) {
    const double f = first_block_factor(N.normalized[0], v2(0.5, y));
    CHECK(f == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("radial conjugator on pure dilations is the identity") {
  GroupSample G;
  G.spec = SpectralData({1.0}, {2});
  G.generators = {SimMap::dilation(G.spec, 0.5).to_blockmap(), SimMap::dilation(G.spec, 2.0).to_blockmap()};
  G.inverse_index = {1, 0};
  G.quotient_stretch = {0.5, 2.0};
  G.word_len = 3;
  std::vector<std::vector<int>> escape;
  for (int i = 0; i < 5; ++i) escape.emplace_back(i + 1, 0);
  std::vector<Vec> probes{v2(0.3, 0.1), v2(-1, 1)};
  const auto steps = radial_conjugator(G, escape, Mat::Identity(2, 2), 5, probes);
  for (const auto& s : steps) {
    for (const Vec& p : probes) CHECK((s.F.apply(p) - p).norm() <= 1e-14);
    CHECK(s.defect <= 1e-9);
  }
  std::vector<std::vector<int>> flat(3, std::vector<int>{0});
  CHECK_THROWS_AS(radial_conjugator(G, flat, Mat::Identity(2, 2), 3, probes), ConvergenceError);
}

TEST_CASE("radial conjugator: affine stabilizes, nonlinear improves") {
  std::mt19937_64 rng(3);
  std::vector<Vec> probes;
  for (int k = 0; k < 30; ++k) probes.push_back(oracle::rand_vec(rng, 2, 1));
  const auto af = fixtures::affine_radial(6);
  const auto as = radial_conjugator(af.sample, af.escape, af.a, 6, probes);
  for (std::size_t k = 1; k < as.size(); ++k) CHECK(as[k].cauchy <= 1e-6);
  CHECK(as.back().defect <= 1e-6);
  const auto nf = fixtures::nonlinear_radial(0.3, 8);
  const auto ns = radial_conjugator(nf.sample, nf.escape, nf.a, 8, probes);
  for (std::size_t k = 1; k < ns.size(); ++k) {
    CHECK(ns[k].defect <= ns[k - 1].defect * (1 + 1e-9) + 1e-12);
    CHECK(ns[k].t > ns[k - 1].t);
  }
  CHECK(ns.back().defect < 0.01 * ns.front().defect);
}
