#include "oracles.hpp"

#include "solvrigid/kernels.hpp"

#include <doctest.h>

using namespace solvrigid;

TEST_CASE("segment energy twins agree and match the closed form") {
  Vec start(2), delta(2);
  start << 0.5, -1.0;
  delta << 3.0, 4.0;
  for (std::int64_t steps : {1LL, 7LL, 1000LL, 123457LL}) {
    const double a = kernels::segment_energy_serial(start, delta, steps, 1.5);
    const double b = kernels::segment_energy_omp(start, delta, steps, 1.5);
    CHECK(a == b);
    CHECK(a == doctest::Approx(steps * std::pow(5.0 / steps, 1.5)).epsilon(1e-12));
  }
}

TEST_CASE("triangle and dilation twins are bit-identical") {
  const SpectralData s({1.0, 1.5, 2.5}, {2, 1, 3});
  std::mt19937_64 rng(17);
  std::vector<Vec> pts;
  for (int k = 0; k < 3 * 5000; ++k) pts.push_back(oracle::rand_vec(rng, s.n(), 10));
  const double ts = kernels::power_triangle_violation_serial(s, pts, 1.0);
  const double to = kernels::power_triangle_violation_omp(s, pts, 1.0);
  CHECK(ts == to);
  CHECK(ts <= 1e-12);
  const double ds = kernels::dilation_error_serial(s, pts, 0.37);
  const double dn = kernels::dilation_error_omp(s, pts, 0.37);
  CHECK(ds == dn);
  CHECK(ds <= 1e-12);
  // a power above alpha_1 breaks the triangle inequality somewhere
  CHECK(kernels::power_triangle_violation_omp(s, pts, 3.0) > 0.0);
}

TEST_CASE("triangle kernel reports a planted violation") {
  const SpectralData s({1.0}, {1});
  std::vector<Vec> pts{Vec::Constant(1, 0.0), Vec::Constant(1, 1.0), Vec::Constant(1, 2.0)};
  CHECK(kernels::power_triangle_violation_serial(s, pts, 1.0) == 0.0);
  // power 2: 4 > 1 + 1, relative violation (4 - 2) / 4
  CHECK(kernels::power_triangle_violation_serial(s, pts, 2.0) == doctest::Approx(0.5));
  CHECK(kernels::power_triangle_violation_omp(s, pts, 2.0) == doctest::Approx(0.5));
}
