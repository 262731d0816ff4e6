#include "solvrigid/kernels.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

using namespace solvrigid;

namespace {

std::vector<Vec> cloud(const SpectralData& s, int count) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-10, 10);
  std::vector<Vec> pts(count, Vec(s.n()));
  for (auto& p : pts)
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = U(rng);
  return pts;
}

template <double (*F)(const Vec&, const Vec&, std::int64_t, double)>
void segment(benchmark::State& st) {
  const Vec a = Vec::Zero(2), d = Vec::Ones(2);
  for (auto _ : st) benchmark::DoNotOptimize(F(a, d, st.range(0), 1.5));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <double (*F)(const SpectralData&, std::span<const Vec>, double)>
void triangle(benchmark::State& st) {
  const SpectralData s({1.0, 1.5, 2.5}, {2, 1, 3});
  const auto pts = cloud(s, static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(F(s, pts, 1.0));
  st.SetItemsProcessed(st.iterations() * st.range(0) / 3);
}

template <double (*F)(const SpectralData&, std::span<const Vec>, double)>
void dilation(benchmark::State& st) {
  const SpectralData s({2.0, 3.0}, {1, 1});
  const auto pts = cloud(s, static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(F(s, pts, 2.5));
  st.SetItemsProcessed(st.iterations() * st.range(0) / 2);
}

}  // namespace

BENCHMARK(segment<kernels::segment_energy_serial>)->Name("segment_energy/serial")->Range(1 << 12, 1 << 22);
BENCHMARK(segment<kernels::segment_energy_omp>)->Name("segment_energy/omp")->Range(1 << 12, 1 << 22);
BENCHMARK(triangle<kernels::power_triangle_violation_serial>)->Name("power_triangle/serial")->Range(3 << 8, 3 << 14);
BENCHMARK(triangle<kernels::power_triangle_violation_omp>)->Name("power_triangle/omp")->Range(3 << 8, 3 << 14);
BENCHMARK(dilation<kernels::dilation_error_serial>)->Name("dilation_error/serial")->Range(1 << 10, 1 << 16);
BENCHMARK(dilation<kernels::dilation_error_omp>)->Name("dilation_error/omp")->Range(1 << 10, 1 << 16);

BENCHMARK_MAIN();
