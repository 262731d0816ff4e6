#include "oracles.hpp"

#include "solvrigid/errors.hpp"
#include "solvrigid/exact.hpp"
#include "solvrigid/fixtures.hpp"
#include "solvrigid/nilpotent.hpp"

#include <doctest.h>

using namespace solvrigid;

namespace {

const SpectralData S1({1.0}, {1});
const SpectralData S12({1.0, 2.0}, {1, 1});

ExactTranslation shift1(const Q& b) { return ExactTranslation::translation(S1, {{b}}); }

// evaluates the triangle wave of the fixtures directly
double tri(double s) {
  s -= std::floor(s);
  if (s < 0.25) return s;
  if (s < 0.75) return 0.5 - s;
  return s - 1.0;
}

}  // namespace

TEST_CASE("rational parsing") {
  CHECK(parse_rational(nlohmann::json("3/6")) == Q(1, 2));
  CHECK(parse_rational(nlohmann::json(-4)) == Q(-4));
  CHECK_THROWS_AS(parse_rational(nlohmann::json(0.5)), InputError);
  CHECK_THROWS_AS(parse_rational(nlohmann::json("1/0")), InputError);
  CHECK(rational_json(Q(-3, 4)) == "-3/4");
}

TEST_CASE("periodic piecewise-linear profiles") {
  const PeriodicPL q = fixtures::triangle_wave();
  for (double s : {0.0, 0.1, 0.3, 0.55, 0.8, 0.99, 2.3, -0.4}) {
    CHECK(to_double(q.eval(Q(s)))[0] == doctest::Approx(tri(s)).epsilon(1e-15));
    CHECK(to_double(q.shifted(Q(1, 4)).eval(Q(s)))[0] == doctest::Approx(tri(s + 0.25)).epsilon(1e-15));
    CHECK(to_double(q.reflected().eval(Q(s)))[0] == doctest::Approx(tri(-s)).epsilon(1e-15));
  }
  CHECK(q.mean()[0] == 0);
  CHECK(q.plus(q.scaled(Q(-1))).is_zero());
  CHECK(q.shifted(Q(1, 2)) == q.scaled(Q(-1)));
  CHECK(q.max_norm({Q(0)}) == doctest::Approx(0.25));
  CHECK_THROWS_AS(PeriodicPL({Q(1, 2), Q(0)}, {{Q(0)}, {Q(1)}}), InputError);
  CHECK_THROWS_AS(PeriodicPL({Q(0), Q(1)}, {{Q(0)}, {Q(1)}}), InputError);
}

TEST_CASE("exact translations compose like maps") {
  const auto f = fixtures::root_r2();
  const std::vector<ExactTranslation> els{f.generators[0], f.generators[1], f.gamma_p, f.gamma_p.inverse(),
                                          f.generators[1].power(-3)};
  std::mt19937_64 rng(1);
  for (const auto& a : els)
    for (const auto& b : els) {
      const ExactTranslation ab = a.compose(b);
      for (int k = 0; k < 20; ++k) {
        const Vec p = oracle::rand_vec(rng, 2, 3);
        CHECK((ab.apply(p) - a.apply(b.apply(p))).norm() <= 1e-12);
        CHECK((ab.to_almost().apply(p) - ab.apply(p)).norm() <= 1e-12);
      }
      CHECK(a.compose(a.inverse()).is_identity());
    }
  // gamma_p^2 = gamma_1 gamma_2 exactly
  CHECK(f.gamma_p.power(2) == f.generators[0].compose(f.generators[1]));
  CHECK(f.gamma_p.power(5) == f.gamma_p.power(2).compose(f.gamma_p.power(3)));
  // explicit check of the second generator against the direct formula
  const Vec p = (Vec(2) << 0.3, 0.61).finished();
  CHECK(f.generators[1].apply(p)[0] == doctest::Approx(0.3 + tri(0.61) + tri(0.86)).epsilon(1e-14));
}

TEST_CASE("exact translations json round trip") {
  const auto f = fixtures::root_r2(3, -2);
  const nlohmann::json j = f.gamma_p.to_json();
  const ExactTranslation back = ExactTranslation::from_json(j);
  CHECK(back == f.gamma_p);
  CHECK(back.to_json() == j);
  CHECK(back.key() == f.gamma_p.key());
  CHECK_THROWS_AS(ExactTranslation::from_json(nlohmann::json{{"spec", S1}}), InputError);
}

TEST_CASE("composition leaves the exact class when a read block is not translated") {
  const SpectralData s3({1.0, 2.0, 3.0}, {1, 1, 1});
  const QVec w2{Q(0), Q(1), Q(0)}, w3{Q(0), Q(0), Q(1)};
  const PeriodicPL q = fixtures::triangle_wave();
  const ExactTranslation a(s3, {ExactBlock{{Q(0)}, {PLTerm{w2, q}}}, ExactBlock{{Q(0)}, {}}, ExactBlock{{Q(1)}, {}}}, 2.0);
  const ExactTranslation b(s3, {ExactBlock{{Q(0)}, {}}, ExactBlock{{Q(0)}, {PLTerm{w3, q}}}, ExactBlock{{Q(1)}, {}}}, 2.0);
  CHECK_THROWS_AS(a.compose(b), NotExactlyRepresentable);
  CHECK_NOTHROW(b.compose(a));
}

TEST_CASE("epsilon examples") {
  CHECK(epsilon_from(S12, 1.0, {0.0, 4.0}, 0) == doctest::Approx(4.0));
  CHECK(epsilon_from(S12, 1.0, {3.0, 0.0}, 0) == 0.0);
  CHECK(epsilon_from(S12, 1.0, {3.0, 4.0}, 1) == 0.0);
  const AlmostTranslation a = fixtures::sine_translation(1.0);
  const double osc = sampled_oscillation(a, 0, 10000, 10, 1);
  CHECK(osc == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(osc <= epsilon_bound(a, 0));
  // a kernel element with B_2 = 0: B_1 constant and epsilon zero
  const ExactTranslation k = ExactTranslation::translation(S12, {{Q(3)}, {Q(0)}});
  CHECK(epsilon_bound(k, 0) == 0.0);
  CHECK(sampled_oscillation(k.to_almost(), 0, 1000, 10, 1) == 0.0);
  CHECK_THROWS_AS(epsilon_bound(AlmostTranslation(S12, {FuncExpr::zero(2, 1), FuncExpr::project(2, {1})}, 2.0), 0),
                  InputError);
}

TEST_CASE("tau projection") {
  CHECK(tau_project(ExactTranslation::identity(S12), 1) == QVec{Q(0)});
  const ExactTranslation top = ExactTranslation::translation(S12, {{Q(0)}, {Q(7, 3)}});
  CHECK(tau_project(top, 1) == QVec{Q(7, 3)});
  const auto f = fixtures::root_r2();
  CHECK_THROWS_AS(tau_project(f.generators[1], 0), NotInKernel);
  const ExactTranslation a = f.generators[0].power(3), b = f.generators[0].power(-5);
  CHECK(tau_project(a.compose(b), 0)[0] == tau_project(a, 0)[0] + tau_project(b, 0)[0]);
  const ExactTranslation c = f.generators[1].power(2), d = f.gamma_p.power(2);
  CHECK(tau_project(c.compose(d), 1)[0] == tau_project(c, 1)[0] + tau_project(d, 1)[0]);
}

TEST_CASE("shuffle identities") {
  const auto f = fixtures::root_r2();
  const auto &g1 = f.generators[0], &g2 = f.generators[1], &gp = f.gamma_p;
  const ShuffleCheck a = check_shuffle(g1.power(2), g1.power(2).compose(g2), g2.inverse(), 0);
  CHECK(a.premise);
  CHECK(a.pass());
  const ShuffleCheck b = check_shuffle(gp.power(2), gp, gp, 1);
  CHECK(b.premise);
  CHECK(b.pass());
  const ShuffleCheck c = check_shuffle(g1.power(3), gp, g2, 0);
  CHECK(c.pass());
  CHECK_THROWS_AS(check_shuffle(g2, gp, gp, 0), InputError);
}

TEST_CASE("commutators fall into the lower kernel") {
  const auto f = fixtures::root_r2();
  const ExactTranslation c = commutator(f.gamma_p, f.generators[1]);
  CHECK_NOTHROW(tau_project(c, 0));
  CHECK(commutator(f.generators[0], f.generators[1]).is_identity());
}

TEST_CASE("approximate root: exact power") {
  const ExactTranslation g = shift1(Q(1));
  const RootCertificate c = approx_lth_root(g.power(6), {g}, 3);
  CHECK(c.holds());
  CHECK(c.c == std::vector<long>{0});
  CHECK(c.gamma_prime.is_identity());
}

TEST_CASE("approximate root: r = 1 example") {
  const auto f = fixtures::root_r1();
  const RootCertificate c = approx_lth_root(f.gamma_p, f.generators, 2);
  CHECK(c.property1);
  CHECK(c.property2);
  CHECK(c.property3_identity);
  CHECK(c.property3);
  CHECK(c.c == std::vector<long>{1});
  CHECK(c.gamma_prime == shift1(Q(1, 2)));
  CHECK(c.gamma_prime.power(2) == f.generators[0]);
  CHECK(evaluate_word(f.generators, c.eta, S1) == f.generators[0].power(2));
  CHECK(displacement_bound(c.gamma_prime, f.generators) == doctest::Approx(1.0));
  CHECK(sampled_displacement(c.gamma_prime, 1000, 10, 1) == doctest::Approx(0.5));
  // linearity in the generators' top block
  CHECK(displacement_bound(c.gamma_prime, {shift1(Q(10))}) == doctest::Approx(10.0));
  const auto j = c.to_json();
  CHECK(j["property2"] == true);
}

TEST_CASE("approximate root: two levels") {
  for (auto [e1, e2] : std::vector<std::pair<long, long>>{{0, 0}, {3, 2}, {-2, 5}, {1, -7}}) {
    const auto f = fixtures::root_r2(e1, e2);
    const RootCertificate c = approx_lth_root(f.gamma_p, f.generators, f.l);
    CHECK(c.holds());
    // independent composition oracle for property (1) and (2)
    CHECK(c.gamma_prime.compose(evaluate_word(f.generators, c.eta, S12)) == f.gamma_p);
    ExactTranslation rhs = ExactTranslation::identity(S12);
    for (std::size_t i = 0; i < c.c.size(); ++i) rhs = rhs.compose(f.generators[i].power(c.c[i]));
    CHECK(c.gamma_prime.power(f.l) == rhs);
    for (long ci : c.c) CHECK((ci >= 0 && ci < f.l));
    const double R = displacement_bound(c.gamma_prime, f.generators);
    CHECK(sampled_displacement(c.gamma_prime, 2000, 10, 2) <= R);
  }
}

TEST_CASE("approximate root: identity and non-integral coefficients") {
  const auto f = fixtures::root_r1();
  const RootCertificate id = approx_lth_root(ExactTranslation::identity(S1), f.generators, 2);
  CHECK(id.holds());
  CHECK(sampled_displacement(id.gamma_prime, 100, 5, 1) == 0.0);
  CHECK_THROWS_AS(approx_lth_root(shift1(Q(1, 3)), f.generators, 2), InfiniteIndexSuspected);
}

TEST_CASE("estimation inequalities on random elements") {
  const auto f = fixtures::root_r2();
  const std::vector<ExactTranslation> base{f.generators[0], f.generators[1], f.gamma_p};
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> pick(0, 2);
  std::uniform_int_distribution<long> ex(-3, 3);
  for (int k = 0; k < 40; ++k) {
    ExactWord w1, w2;
    for (int m = 0; m < 3; ++m) {
      w1.emplace_back(pick(rng), ex(rng));
      w2.emplace_back(pick(rng), ex(rng));
    }
    const ExactTranslation g = evaluate_word(base, w1, S12), h = evaluate_word(base, w2, S12);
    for (int i = 0; i < 2; ++i) {
      CHECK(g.compose(h).bmax(i) <= g.bmax(i) + h.bmax(i) + 1e-12);
      for (long l : {2L, 3L, 4L}) CHECK(l * g.bmax(i) <= g.power(l).bmax(i) + l * epsilon_bound(g, i) + 1e-12);
    }
    // certified sup dominates sampled values
    const Vec p = oracle::rand_vec(rng, 2, 5);
    CHECK(std::abs(g.apply(p)[0] - p[0]) <= g.bmax(0) + 1e-12);
  }
}

TEST_CASE("orbit growth") {
  CHECK(orbit_growth({}, S1, Vec::Zero(1), 5, 4).count == 1);
  const std::vector<ExactTranslation> unit{shift1(Q(1))};
  CHECK(orbit_growth(unit, S1, Vec::Zero(1), 3, 8).count == 7);
  long prev = 0;
  for (double k = 0; k <= 6; k += 0.5) {
    const long c = orbit_growth(unit, S1, Vec::Zero(1), k, 8).count;
    CHECK(c >= prev);
    prev = c;
  }
  // the cap limits exploration
  const auto capped = orbit_growth(unit, S1, Vec::Zero(1), 100, 4);
  CHECK(capped.count == 9);
  CHECK(capped.saturated);
}
