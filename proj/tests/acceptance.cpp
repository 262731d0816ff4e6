// One PASS/FAIL line per acceptance criterion, with the runtime limit enforced.

#include "oracles.hpp"

#include "solvrigid/conformal.hpp"
#include "solvrigid/fixtures.hpp"
#include "solvrigid/kernels.hpp"
#include "solvrigid/mapalg.hpp"
#include "solvrigid/nilpotent.hpp"
#include "solvrigid/quasimetric.hpp"
#include "solvrigid/solvgroup.hpp"
#include "solvrigid/tukia.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <sstream>
#include <string>

using namespace solvrigid;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

Outcome metric_axioms() {
  const std::vector<SpectralData> specs{SpectralData({1.0}, {2}), SpectralData({2.0, 3.0}, {1, 1}),
                                        SpectralData({1.0, 1.5, 2.5}, {2, 1, 3})};
  std::mt19937_64 rng(20240601);
  double tri = 0.0, dil = 0.0;
  for (const auto& s : specs) {
    std::vector<Vec> pts;
    for (int k = 0; k < 30000; ++k) pts.push_back(oracle::rand_vec(rng, s.n(), 10));
    tri = std::max(tri, kernels::power_triangle_violation_omp(s, pts, s.alpha(0)));
    for (double t : {0.37, 2.5, 11.0}) dil = std::max(dil, kernels::dilation_error_omp(s, pts, t));
  }
  return {tri <= 1e-12 && dil <= 1e-12, "triangle " + num(tri) + ", dilation " + num(dil)};
}

Outcome chain_oracle() {
  const SpectralData s({2.0, 3.0}, {1, 1});
  ChainGrid g;
  g.resolution = 32768;
  g.max_depth = 12;
  g.stop_decrement = 0.0;
  const BlockPoint p = BlockPoint::from_flat(s, v2(0, 0)), q = BlockPoint::from_flat(s, v2(1, 0));
  const double e3 = chain_energy(s, 3.0, p, q, g).value;
  const BlockPoint a = BlockPoint::from_flat(s, v2(0, 5)), b = BlockPoint::from_flat(s, v2(7, 5));
  ChainGrid g2 = g;
  g2.resolution = 64;
  const double e2 = chain_energy(s, 2.0, a, b, g2).value;
  return {e3 < 1e-4 && std::abs(e2 - 7.0) <= 1e-6, "beta3 " + num(e3) + ", |beta2 - 7| " + num(std::abs(e2 - 7.0))};
}

Outcome boundary() {
  const SpectralData lower({1.0, 1.5, 2.5}, {2, 1, 3});
  const SolvSpec spec(lower, SpectralData());
  std::mt19937_64 rng(7);
  double rel = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const Vec p = oracle::rand_vec(rng, 6, 5), q = oracle::rand_vec(rng, 6, 5);
    const double D = oracle::dm(lower.alphas(), lower.mults(), p, q);
    rel = std::max(rel, std::abs(std::exp(pair_to_point(spec, p, q).height) - D) / D);
  }
  double exact = 0.0, comp = 0.0;
  for (double a : {-2.0, -0.3, 0.8, 1.9}) {
    const SimMap b = boundary_of_height_isometry(spec, a);
    for (int k = 0; k < 200; ++k) {
      const Vec x = oracle::rand_vec(rng, 6, 5);
      exact = std::max(exact, (b.apply(x) - dilate_flat(lower, std::exp(a), x)).cwiseAbs().maxCoeff());
    }
    for (double c : {-1.1, 0.4, 2.2}) {
      const SimMap lhs = b.compose(boundary_of_height_isometry(spec, c));
      const SimMap rhs = boundary_of_height_isometry(spec, a + c);
      comp = std::max(comp, std::abs(lhs.t - rhs.t) / rhs.t);
      if (!lhs.approx_equal(rhs, 1e-12)) comp = std::max(comp, 1.0);
    }
  }
  return {rel <= 1e-12 && exact == 0.0 && comp <= 1e-12,
          "rel " + num(rel) + ", dilation gap " + num(exact) + ", composition " + num(comp)};
}

Outcome symmetric_space() {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> N;
  const auto gl = [&](int n) {
    Mat X(n, n);
    do {
      for (int i = 0; i < n * n; ++i) X(i / n, i % n) = N(rng);
    } while (std::abs(X.determinant()) < 0.1);
    return X;
  };
  double ax = 0.0, inv = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const ConfClass A = ConfClass::normalized(oracle::rand_spd(rng, 3)), B = ConfClass::normalized(oracle::rand_spd(rng, 3)),
                    C = ConfClass::normalized(oracle::rand_spd(rng, 3));
    ax = std::max({ax, kdist(A, A), std::abs(kdist(A, B) - kdist(B, A)), kdist(A, C) - kdist(A, B) - kdist(B, C)});
    const Mat X = gl(3);
    inv = std::max(inv, std::abs(kdist(act(X, A), act(X, B)) - kdist(A, B)));
  }
  double eq = 0.0;
  for (int k = 0; k < 100; ++k) {
    std::vector<ConfClass> S, XS;
    const Mat X = gl(3);
    for (int m = 0; m < 5; ++m) {
      S.push_back(ConfClass::normalized(oracle::rand_spd(rng, 3)));
      XS.push_back(act(X, S.back()));
    }
    eq = std::max(eq, kdist(act(X, circumcenter(S).center), circumcenter(XS).center));
  }
  double two = 0.0;
  for (int k = 0; k < 20; ++k) {
    const ConfClass A = ConfClass::normalized(oracle::rand_spd(rng, 3));
    two = std::max(two, kdist(circumcenter({A, ConfClass::normalized(A.matrix().inverse())}).center, ConfClass::identity(3)));
  }
  return {ax <= 1e-10 && inv <= 1e-10 && eq <= 1e-6 && two <= 1e-9,
          "axioms " + num(ax) + ", invariance " + num(inv) + ", equivariance " + num(eq) + ", two-point " + num(two)};
}

Outcome conjugation_1d() {
  const GroupSample G = fixtures::piecewise_1d_sample(12);
  const auto xs = uniform_nodes(-4, 4, 8001);
  const std::vector<Vec> ys{Vec::Constant(1, -1.0), Vec::Constant(1, 0.0), Vec::Constant(1, 1.0)};
  const Conjugator1D c = conjugator_1d(G.spec, sup_measure_1d(G, xs, ys));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-3, 3);
  std::vector<Vec> probes;
  for (int k = 0; k < 600; ++k) probes.push_back(v2(U(rng), static_cast<double>(k % 3) - 1.0));
  const ConjugationReport r = verify_conjugation(G, c.F, probes, 1e-3);
  return {r.pass && G.uniform_K == 1.5, "defect " + num(r.max_after) + " (before " + num(r.max_before) + ")"};
}

Outcome normalization() {
  const GroupSample G = fixtures::stretch_sample(12);
  const StretchNormalization N = normalize_stretch(G, uniform_nodes(-3, 3, 6001));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-3, 3);
  std::vector<Vec> probes;
  for (int k = 0; k < 2000; ++k) probes.push_back(v2(U(rng), U(rng)));
  const double d = normalized_stretch_defect(N, G, probes);
  const RigidityWitness w = rotation_rigidity_witness(fixtures::rotating_family(), 2.0, 2.0, 64, 1);
  bool constant_ok = true;
  for (double a : {0.0, 0.5, 1.7, 3.1}) constant_ok = constant_ok && !rotation_rigidity_witness(fixtures::constant_rotation_family(a), 2.0, 2.0, 64, 1).found;
  return {d <= 1e-6 && w.found && w.ratio > w.threshold && constant_ok,
          "stretch defect " + num(d) + ", witness ratio " + num(w.ratio) + " > " + num(w.threshold)};
}

Outcome nilpotent() {
  bool ok = true;
  std::vector<fixtures::RootFixture> roots{fixtures::root_r1(), fixtures::root_r2(), fixtures::root_r2(3, 2), fixtures::root_r2(-2, 5)};
  double margin = INFINITY;
  for (const auto& f : roots) {
    const RootCertificate c = approx_lth_root(f.gamma_p, f.generators, f.l);
    ok = ok && c.holds();
    const double R = displacement_bound(c.gamma_prime, f.generators);
    const double d = sampled_displacement(c.gamma_prime, 10000, 10, 1);
    ok = ok && d <= R;
    margin = std::min(margin, R - d);
  }
  const auto f = fixtures::root_r2();
  const auto &g1 = f.generators[0], &g2 = f.generators[1], &gp = f.gamma_p;
  for (const ShuffleCheck& s : {check_shuffle(g1.power(2), g1.power(2).compose(g2), g2.inverse(), 0), check_shuffle(gp.power(2), gp, gp, 1),
                                check_shuffle(g1.power(3), gp, g2, 0)})
    ok = ok && s.pass();
  double gap = -INFINITY;
  std::vector<AlmostTranslation> kernel{fixtures::sine_translation(0.5), fixtures::sine_translation(1.0), fixtures::sine_translation(2.0)};
  for (const auto& e : {g1, g2, gp, gp.power(3), gp.compose(g2.inverse())}) kernel.push_back(e.to_almost());
  for (const auto& a : kernel) {
    const double eps = epsilon_bound(a, 0), osc = sampled_oscillation(a, 0, 10000, 10, 2);
    gap = std::max(gap, osc - eps);
    ok = ok && osc <= eps;
  }
  return {ok, "displacement margin " + num(margin) + ", worst osc - eps " + num(gap)};
}

Outcome reciprocity() {
  const SpectralData lo({1.0, 2.0}, {2, 1}), up({1.0, 3.0}, {1, 2});
  bool ok = true;
  for (double a : {-1.7, 0.3, 2.2})
    ok = ok && check_reciprocity({ASimMap::from_sim(SimMap::dilation(lo, std::exp(a))), ASimMap::from_sim(SimMap::dilation(up, std::exp(-a)))}).pass;
  const auto bad = check_reciprocity({ASimMap::from_sim(SimMap::dilation(lo, 2.0)), ASimMap::from_sim(SimMap::dilation(up, 1.0 / 3.0))});
  ok = ok && !bad.pass && bad.drift.size() == 10 && std::abs(bad.drift.back() - std::pow(2.0 / 3.0, 10)) <= 1e-15;
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> U(0, 1);
  const FuncExpr x3 = FuncExpr::project(3, {2});
  const auto rand_asim = [&] {
    SimMap s = SimMap::dilation(lo, 0.5 + 1.5 * U(rng));
    s.A[0] = oracle::rot(6.283 * U(rng));
    s.A[1] = Mat::Constant(1, 1, U(rng) < 0.5 ? -1.0 : 1.0);
    const double amp = U(rng);
    return ASimMap(s, AlmostTranslation(lo, {FuncExpr::stack({FuncExpr::oscillation(x3, amp, 1, 0), FuncExpr::oscillation(x3, amp, 1, 0, true)}),
                                             FuncExpr::constant(3, Vec::Constant(1, U(rng)))},
                                        1.0 + 2.0 * amp));
  };
  double st = 0.0, ro = 0.0, ht = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const ASimMap G = rand_asim(), H = rand_asim();
    const BlockMap m = G.compose(H).to_blockmap();
    const Vec p = oracle::rand_vec(rng, 3, 3);
    const double s = first_block_stretch(m, p);
    st = std::max(st, std::abs(s - G.stretch() * H.stretch()) / s);
    ro = std::max(ro, (first_block_derivative(m, p) / s - rotation_hom(G)[0] * rotation_hom(H)[0]).norm());
    const BoundaryPair P{G, ASimMap::from_sim(SimMap::dilation(up, 1 / G.stretch()))}, Q{H, ASimMap::from_sim(SimMap::dilation(up, 1 / H.stretch()))};
    ht = std::max(ht, std::abs(height_hom({G.compose(H), P.upper.compose(Q.upper)}) - height_hom(P) - height_hom(Q)));
  }
  ok = ok && st <= 1e-9 && ro <= 1e-9 && ht <= 1e-9;
  return {ok, "stretch " + num(st) + ", rotation " + num(ro) + ", height " + num(ht)};
}

std::map<std::string, std::string> read_dir(const fs::path& d) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(d)) {
    std::ifstream in(e.path(), std::ios::binary);
    out[e.path().filename().string()] = std::string(std::istreambuf_iterator<char>(in), {});
  }
  return out;
}

Outcome determinism() {
  const fs::path base = fs::temp_directory_path() / ("solvrigid-accept-" + std::to_string(::getpid()));
  fs::remove_all(base);
  const std::string exe = SOLVRIGID_EXE;
  int rc = 0;
  for (const char* d : {"a", "b"}) {
    const std::string cmd = "\"" + exe + "\" all --seed 42 --out \"" + (base / d).string() + "\" > /dev/null 2>&1";
    rc |= std::system(cmd.c_str());
  }
  const auto a = read_dir(base / "a"), b = read_dir(base / "b");
  fs::remove_all(base);
  const bool same = !a.empty() && a == b;
  return {rc == 0 && same, std::to_string(a.size()) + " files, exit " + std::to_string(rc) + (same ? ", identical" : ", differ")};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double limit;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all{
      {"metric-axioms", 5, metric_axioms},
      {"chain-functional", 30, chain_oracle},
      {"boundary-correspondence", 5, boundary},
      {"symmetric-space", 60, symmetric_space},
      {"conjugation-1d", 120, conjugation_1d},
      {"stretch-rotation-normalization", 30, normalization},
      {"nilpotent-algorithms", 30, nilpotent},
      {"reciprocity-homomorphisms", 10, reciprocity},
      {"determinism", 600, determinism},
  };
  int failures = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && secs < c.limit;
    failures += pass ? 0 : 1;
    std::printf("%s %s (%.2fs < %gs) %s\n", pass ? "PASS" : "FAIL", c.name, secs, c.limit, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
