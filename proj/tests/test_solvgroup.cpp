#include "oracles.hpp"

#include "solvrigid/errors.hpp"
#include "solvrigid/mapalg.hpp"
#include "solvrigid/quasimetric.hpp"
#include "solvrigid/solvgroup.hpp"

#include <doctest.h>

#include <sstream>

using namespace solvrigid;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

SolvPoint pt(double t, Vec x, Vec z = Vec()) { return SolvPoint{t, std::move(x), std::move(z)}; }

const SolvSpec mixed(SpectralData({1.0, 2.0}, {1, 1}), SpectralData({0.5}, {2}));

}  // namespace

TEST_CASE("multiply examples") {
  const SolvPoint a = multiply(mixed, pt(0, v2(1, 2), v2(3, 4)), pt(0, v2(5, 6), v2(7, 8)));
  CHECK(a.height == 0.0);
  CHECK(a.x == v2(6, 8));
  CHECK(a.z == v2(10, 12));
  const SolvPoint id = multiply(mixed, pt(1.3, v2(0, 0), v2(0, 0)), pt(-1.3, v2(0, 0), v2(0, 0)));
  CHECK(id.height == 0.0);
  CHECK(id.x.isZero(0.0));
  const SolvSpec line(SpectralData({1.0}, {1}), SpectralData());
  const SolvPoint e = multiply(line, pt(1, v1(2)), pt(1, v1(3)));
  CHECK(e.height == 2.0);
  CHECK(e.x[0] == doctest::Approx(2.0 + std::exp(1.0) * 3.0).epsilon(1e-15));
}

TEST_CASE("group axioms on random triples") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> T(-2, 2);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    SolvPoint p[3];
    for (auto& q : p) q = pt(T(rng), oracle::rand_vec(rng, 2, 3), oracle::rand_vec(rng, 2, 3));
    const SolvPoint l = multiply(mixed, multiply(mixed, p[0], p[1]), p[2]);
    const SolvPoint r = multiply(mixed, p[0], multiply(mixed, p[1], p[2]));
    const double scale = 1.0 + l.x.norm() + l.z.norm();
    worst = std::max({worst, std::abs(l.height - r.height), (l.x - r.x).norm() / scale, (l.z - r.z).norm() / scale});
    const SolvPoint e = multiply(mixed, p[0], solv_inverse(mixed, p[0]));
    CHECK(std::abs(e.height) <= 1e-15);
    CHECK(e.x.norm() <= 1e-10 * (1 + p[0].x.norm()));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("level distance examples") {
  const SolvSpec a2(SpectralData({2.0}, {1}), SpectralData());
  CHECK(level_distance(a2, std::log(2.0), v1(0), v1(4)) == doctest::Approx(1.0).epsilon(1e-15));
  const SolvSpec s(SpectralData({1.0, 2.0}, {1, 1}), SpectralData());
  CHECK(level_distance(s, 0.0, v2(0, 0), v2(3, -4)) == 4.0);
  double prev = INFINITY;
  for (double t = -2; t <= 2; t += 0.25) {
    const double d = level_distance(s, t, v2(0, 0), v2(3, -4));
    CHECK(d < prev);
    prev = d;
  }
  // upper blocks grow with t
  CHECK(level_distance(mixed, 1.0, v2(0, 0), v2(0, 0), v2(0, 0), v2(1, 0)) == doctest::Approx(std::exp(0.5)));
}

TEST_CASE("pair to point examples") {
  const SolvSpec line(SpectralData({1.0}, {1}), SpectralData());
  CHECK(pair_to_point(line, v1(0), v1(1)).height == 0.0);
  const SolvSpec s(SpectralData({2.0, 3.0}, {1, 1}), SpectralData());
  const SolvPoint o = pair_to_point(s, v2(0, 0), v2(4, 8));
  CHECK(o.height == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(o.x == v2(0, 0));
  CHECK(pair_to_point_bisect(s, v2(0, 0), v2(4, 8)) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(pair_to_point(s, v2(1, 1), v2(1, 1)), DomainError);
  CHECK_THROWS_AS(pair_to_point(mixed, v2(0, 0), v2(1, 1)), DomainError);
}

TEST_CASE("pair to point is dilation equivariant and matches D_M") {
  const SpectralData lower({1.0, 1.5, 2.5}, {2, 1, 3});
  const SolvSpec s(lower, SpectralData());
  std::mt19937_64 rng(9);
  for (int k = 0; k < 1000; ++k) {
    const Vec p = oracle::rand_vec(rng, 6, 4), q = oracle::rand_vec(rng, 6, 4);
    const double D = oracle::dm(lower.alphas(), lower.mults(), p, q);
    const double t = pair_to_point(s, p, q).height;
    CHECK(std::abs(std::exp(t) - D) <= 1e-12 * D);
    const double a = 0.7;
    const SimMap F = boundary_of_height_isometry(s, a);
    CHECK(pair_to_point(s, F.apply(p), F.apply(q)).height == doctest::Approx(t + a).epsilon(1e-13));
  }
}

TEST_CASE("boundary of height isometry") {
  const SolvSpec s(SpectralData({1.0, 2.0}, {2, 1}), SpectralData());
  const SimMap id = boundary_of_height_isometry(s, 0.0);
  CHECK(id.approx_equal(SimMap::identity(s.lower), 0.0));
  const SimMap two = boundary_of_height_isometry(s, std::log(2.0));
  CHECK(two.t == doctest::Approx(2.0).epsilon(1e-15));
  for (const Mat& A : two.A) CHECK(A.isIdentity(0.0));
  for (const Vec& B : two.B) CHECK(B.isZero(0.0));
  const SimMap ab = boundary_of_height_isometry(s, 0.4).compose(boundary_of_height_isometry(s, -1.1));
  CHECK(ab.approx_equal(boundary_of_height_isometry(s, -0.7), 1e-12));
}

TEST_CASE("suspensions") {
  const SpectralData lower({1.0, 2.0}, {1, 1});
  const SolvSpec s(lower, SpectralData());
  const auto id = level_distortion(suspend_boundary_map(s, BlockMap::identity(lower), 0.0), 500, -2, 2, 3, 1);
  CHECK(id.min_ratio == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(id.max_ratio == doctest::Approx(1.0).epsilon(1e-15));
  const auto dil = level_distortion(suspend_boundary_map(s, SimMap::dilation(lower, 2.0).to_blockmap(), std::log(2.0)),
                                    1000, -2, 2, 3, 2);
  CHECK(std::abs(dil.min_ratio - 1.0) <= 1e-9);
  CHECK(std::abs(dil.max_ratio - 1.0) <= 1e-9);
  // first-block slope 1.5 for x < 0: 1.5-bilipschitz
  const FuncExpr x = FuncExpr::project(2, {0}), y = FuncExpr::project(2, {1});
  const BlockMap G(lower, FuncExpr::stack({FuncExpr::table1d(x, {-1.0, 0.0, 1.0}, {-1.5, 0.0, 1.0}), y}));
  const auto bl = level_distortion(suspend_boundary_map(s, G, 0.0), 1000, -2, 2, 3, 3);
  CHECK(bl.min_ratio >= 1.0 / 1.5 - 1e-12);
  CHECK(bl.max_ratio <= 1.5 + 1e-12);
  CHECK(bl.max_ratio > 1.0);
}

TEST_CASE("vertical geodesic csv") {
  const VerticalGeodesic g{v2(1, 2), Vec(), Orientation::Upward};
  CHECK(g.at(2.0).height == 2.0);
  std::ostringstream os;
  write_geodesic_csv(os, g, 0.0, 1.0, 3);
  std::istringstream in(os.str());
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);  // header plus three samples
}

TEST_CASE("solv spec json") {
  nlohmann::json j = mixed;
  const SolvSpec back = j.get<SolvSpec>();
  CHECK(back.lower == mixed.lower);
  CHECK(back.upper == mixed.upper);
}
