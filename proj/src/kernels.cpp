#include "solvrigid/kernels.hpp"

#include "solvrigid/quasimetric.hpp"

#include <omp.h>

#include <algorithm>
#include <array>
#include <cmath>

namespace solvrigid::kernels {

namespace {

// Sum of |a_j - a_{j-1}|^exponent for j in [lo, hi), with a_j = start + (j/steps) delta.
double segment_chunk(const Vec& start, const Vec& delta, std::int64_t steps, double exponent, std::int64_t lo,
                     std::int64_t hi) {
  const Eigen::Index dim = start.size();
  const double inv = 1.0 / static_cast<double>(steps);
  double sum = 0.0;
  for (std::int64_t j = lo; j < hi; ++j) {
    const double s0 = static_cast<double>(j) * inv;
    const double s1 = static_cast<double>(j + 1) * inv;
    double sq = 0.0;
    for (Eigen::Index c = 0; c < dim; ++c) {
      const double a0 = start[c] + s0 * delta[c];
      const double a1 = start[c] + s1 * delta[c];
      const double d = a1 - a0;
      sq += d * d;
    }
    sum += std::pow(sq, 0.5 * exponent);
  }
  return sum;
}

std::int64_t chunk_bound(std::int64_t steps, int c) {
  return steps * c / kReductionChunks;
}

double ratio_violation(const SpectralData& spec, const Vec& a, const Vec& b, const Vec& c, double power) {
  const double ac = std::pow(distance_flat(spec, a, c), power);
  const double ab = std::pow(distance_flat(spec, a, b), power);
  const double bc = std::pow(distance_flat(spec, b, c), power);
  const double scale = std::max({ac, ab + bc, 1e-300});
  return std::max(0.0, (ac - (ab + bc)) / scale);
}

double dilation_rel_error(const SpectralData& spec, const Vec& a, const Vec& b, double t) {
  const double base = distance_flat(spec, a, b);
  if (base == 0.0) return 0.0;
  const double scaled = distance_flat(spec, dilate_flat(spec, t, a), dilate_flat(spec, t, b));
  return std::abs(scaled - t * base) / (t * base);
}

}  // namespace

double segment_energy_serial(const Vec& start, const Vec& delta, std::int64_t steps, double exponent) {
  std::array<double, kReductionChunks> partial{};
  for (int c = 0; c < kReductionChunks; ++c) {
    partial[c] = segment_chunk(start, delta, steps, exponent, chunk_bound(steps, c), chunk_bound(steps, c + 1));
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

double segment_energy_omp(const Vec& start, const Vec& delta, std::int64_t steps, double exponent) {
  std::array<double, kReductionChunks> partial{};
#pragma omp parallel for schedule(static)
  for (int c = 0; c < kReductionChunks; ++c) {
    partial[c] = segment_chunk(start, delta, steps, exponent, chunk_bound(steps, c), chunk_bound(steps, c + 1));
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

double power_triangle_violation_serial(const SpectralData& spec, std::span<const Vec> points, double power) {
  double worst = 0.0;
  for (std::size_t k = 0; k + 2 < points.size(); k += 3) {
    worst = std::max(worst, ratio_violation(spec, points[k], points[k + 1], points[k + 2], power));
  }
  return worst;
}

double power_triangle_violation_omp(const SpectralData& spec, std::span<const Vec> points, double power) {
  const auto triples = static_cast<long long>(points.size() / 3);
  double worst = 0.0;
#pragma omp parallel for schedule(static) reduction(max : worst)
  for (long long k = 0; k < triples; ++k) {
    const auto b = static_cast<std::size_t>(3 * k);
    worst = std::max(worst, ratio_violation(spec, points[b], points[b + 1], points[b + 2], power));
  }
  return worst;
}

double dilation_error_serial(const SpectralData& spec, std::span<const Vec> points, double t) {
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < points.size(); k += 2) {
    worst = std::max(worst, dilation_rel_error(spec, points[k], points[k + 1], t));
  }
  return worst;
}

double dilation_error_omp(const SpectralData& spec, std::span<const Vec> points, double t) {
  const auto pairs = static_cast<long long>(points.size() / 2);
  double worst = 0.0;
#pragma omp parallel for schedule(static) reduction(max : worst)
  for (long long k = 0; k < pairs; ++k) {
    const auto b = static_cast<std::size_t>(2 * k);
    worst = std::max(worst, dilation_rel_error(spec, points[b], points[b + 1], t));
  }
  return worst;
}

}  // namespace solvrigid::kernels
