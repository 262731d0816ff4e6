#include "oracles.hpp"

#include "solvrigid/errors.hpp"
#include "solvrigid/quasimetric.hpp"

#include <doctest.h>

using namespace solvrigid;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

}  // namespace

TEST_CASE("spectral data validates its input") {
  CHECK_THROWS_AS(SpectralData({2.0, 1.0}, {1, 1}), InputError);
  CHECK_THROWS_AS(SpectralData({1.0, 2.0}, {1}), InputError);
  CHECK_THROWS_AS(SpectralData({0.0}, {1}), InputError);
  CHECK_THROWS_AS(SpectralData({1.0}, {0}), InputError);
  const SpectralData s({1.0, 1.5, 2.5}, {2, 1, 3});
  CHECK(s.n() == 6);
  CHECK(s.offset(2) == 3);
  CHECK(s.block_of(4) == 2);
}

TEST_CASE("spectral data json round trip and rejection") {
  const SpectralData s({1.0, 2.5}, {2, 1});
  nlohmann::json j = s;
  CHECK(j.get<SpectralData>() == s);
  CHECK_THROWS(nlohmann::json::parse(R"({"alphas":[1,"x"],"mults":[1,1]})").get<SpectralData>());
  CHECK_THROWS(nlohmann::json::parse(R"({"alphas":[1],"mults":[1.5]})").get<SpectralData>());
}

TEST_CASE("distance examples") {
  const SpectralData s({2.0, 3.0}, {1, 1});
  CHECK(distance_flat(s, v2(0, 0), v2(4, 8)) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(distance_flat(s, v2(0, 0), v2(1, 8)) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(distance_flat(s, v2(3, -1), v2(3, -1)) == 0.0);
  CHECK_THROWS_AS(distance_flat(s, Vec::Zero(3), Vec::Zero(2)), InputError);
}

TEST_CASE("distance agrees with the brute-force formula") {
  const SpectralData s({1.0, 1.5, 2.5}, {2, 1, 3});
  std::mt19937_64 rng(11);
  for (int k = 0; k < 2000; ++k) {
    const Vec p = oracle::rand_vec(rng, 6, 5), q = oracle::rand_vec(rng, 6, 5);
    const double ref = oracle::dm(s.alphas(), s.mults(), p, q);
    CHECK(std::abs(distance_flat(s, p, q) - ref) <= 1e-14 * ref);
    CHECK(distance_flat(s, p, q) == distance_flat(s, q, p));
  }
}

TEST_CASE("dilate examples") {
  const SpectralData s({1.0, 2.0}, {1, 1});
  const Vec d = dilate_flat(s, 2.0, v2(3, 5));
  CHECK(d[0] == 6.0);
  CHECK(d[1] == 20.0);
  CHECK(dilate_flat(s, 1.0, v2(0.3, -7)) == v2(0.3, -7));
  CHECK_THROWS_AS(dilate_flat(s, 0.0, v2(1, 1)), DomainError);
  CHECK_THROWS_AS(dilate_flat(s, -1.0, v2(1, 1)), DomainError);
  const SpectralData s23({2.0, 3.0}, {1, 1});
  const double ratio = distance_flat(s23, dilate_flat(s23, 3.0, v2(1, 1)), dilate_flat(s23, 3.0, v2(0, 0))) /
                       distance_flat(s23, v2(1, 1), v2(0, 0));
  CHECK(ratio == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("power triangle inequality holds for alpha_1 and fails for larger powers") {
  const SpectralData s({2.0, 3.0}, {1, 1});
  std::mt19937_64 rng(5);
  double worst = 0.0, worst_big = 0.0;
  for (int k = 0; k < 20000; ++k) {
    const Vec a = oracle::rand_vec(rng, 2, 3), b = oracle::rand_vec(rng, 2, 3), c = oracle::rand_vec(rng, 2, 3);
    const auto D = [&](const Vec& x, const Vec& y) { return oracle::dm(s.alphas(), s.mults(), x, y); };
    worst = std::max(worst, std::pow(D(a, c), 2) - std::pow(D(a, b), 2) - std::pow(D(b, c), 2));
    worst_big = std::max(worst_big, std::pow(D(a, c), 4) - std::pow(D(a, b), 4) - std::pow(D(b, c), 4));
  }
  CHECK(worst <= 1e-12);
  CHECK(worst_big > 0.0);  // D^4 is not a metric here
  // the plain quasi-metric itself violates the triangle inequality
  CHECK(distance_flat(s, v2(0, 0), v2(2, 0)) > distance_flat(s, v2(0, 0), v2(1, 0)) + distance_flat(s, v2(1, 0), v2(2, 0)) - 1.0);
}

TEST_CASE("chain energy: separating exponent recovers the coordinate difference") {
  const SpectralData s({2.0, 3.0}, {1, 1});
  const BlockPoint p = BlockPoint::from_flat(s, v2(0, 5)), q = BlockPoint::from_flat(s, v2(7, 5));
  ChainGrid g;
  g.resolution = 16;
  g.max_depth = 6;
  const ChainEstimate e = chain_energy(s, 2.0, p, q, g);
  CHECK(e.value == doctest::Approx(7.0).epsilon(1e-6));
}

TEST_CASE("chain energy: larger exponent goes to zero like resolution^{-1/2}") {
  const SpectralData s({2.0, 3.0}, {1, 1});
  const BlockPoint p = BlockPoint::from_flat(s, v2(0, 0)), q = BlockPoint::from_flat(s, v2(1, 0));
  ChainGrid g;
  g.resolution = 4;
  g.max_depth = 8;
  g.stop_decrement = 0.0;
  const ChainEstimate e = chain_energy(s, 3.0, p, q, g);
  REQUIRE(e.history.size() == 9);
  for (std::size_t k = 1; k < e.history.size(); ++k) CHECK(e.history[k] <= e.history[k - 1]);
  // N equal steps of size 1/N cost N (1/N)^{3/2}
  const double N = 4.0 * 256.0;
  CHECK(e.value == doctest::Approx(1.0 / std::sqrt(N)).epsilon(1e-12));
}

TEST_CASE("chain energy: p = q is zero and bad input is rejected") {
  const SpectralData s({2.0, 3.0}, {1, 1});
  const BlockPoint p = BlockPoint::from_flat(s, v2(1, 2));
  CHECK(chain_energy(s, 3.0, p, p).value == 0.0);
  CHECK_THROWS_AS(chain_energy(s, -1.0, p, p), InputError);
  ChainGrid bad;
  bad.resolution = 0;
  CHECK_THROWS_AS(chain_energy(s, 3.0, p, p, bad), InputError);
}

TEST_CASE("chain energy separates blocks by exponent") {
  const SpectralData s({1.0, 2.0}, {1, 1});
  ChainGrid g;
  g.resolution = 8;
  g.max_depth = 10;
  g.stop_decrement = 0.0;
  // a lower-block difference is invisible to beta = alpha_2
  const BlockPoint p = BlockPoint::from_flat(s, v2(0, 0)), q1 = BlockPoint::from_flat(s, v2(1, 0));
  CHECK(chain_energy(s, 2.0, p, q1, g).value == doctest::Approx(1.0 / (8.0 * 1024.0)).epsilon(1e-12));
  // an upper-block difference is not: subdividing only makes it worse, the direct step stays optimal
  const BlockPoint q2 = BlockPoint::from_flat(s, v2(0, 1));
  CHECK(chain_energy(s, 1.0, p, q2, g).value == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("qsim constants examples") {
  const SpectralData s({1.0, 2.0}, {1, 1});
  std::mt19937_64 rng(3);
  std::vector<std::pair<Vec, Vec>> pairs;
  for (int k = 0; k < 10000; ++k) pairs.emplace_back(oracle::rand_vec(rng, 2, 4), oracle::rand_vec(rng, 2, 4));
  const auto d2 = estimate_qsim_constants(s, [&](const Vec& x) { return dilate_flat(s, 2.0, x); }, pairs);
  CHECK(d2.N == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(d2.K == doctest::Approx(1.0).epsilon(1e-9));
  const auto id = estimate_qsim_constants(s, [](const Vec& x) { return x; }, pairs);
  CHECK(id.N == doctest::Approx(1.0));
  CHECK(id.K == doctest::Approx(1.0));
  // first-block slope 1.5 on x < 0, then dilation by 2
  const auto F = [&](const Vec& x) {
    Vec y = x;
    if (y[0] < 0) y[0] *= 1.5;
    return dilate_flat(s, 2.0, y);
  };
  const auto c = estimate_qsim_constants(s, F, pairs);
  CHECK(c.N >= 2.0 / 1.5);
  CHECK(c.N <= 3.0);
  CHECK(c.K <= 1.5 * (1 + 1e-9));
  std::vector<std::pair<Vec, Vec>> degenerate{{v2(1, 1), v2(1, 1)}};
  CHECK_THROWS_AS(estimate_qsim_constants(s, F, degenerate), InputError);
}
