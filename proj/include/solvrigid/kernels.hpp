#pragma once

// Data-parallel inner loops. Every OpenMP kernel has a serial twin with the
// same signature; tests compare the two and the benchmark target times them.
//
// Reductions are split into a fixed number of chunks (independent of the
// thread count) and the chunk partials are summed in index order, so results
// are bit-identical across runs and thread counts.

#include "solvrigid/spectral.hpp"

#include <cstdint>
#include <span>

namespace solvrigid::kernels {

inline constexpr int kReductionChunks = 256;

/// Energy of one axis-aligned chain segment: the block moves from `start` to
/// `start + delta` in `steps` equal steps; each step contributes
/// |step|^exponent (exponent = beta / alpha_i).
double segment_energy_serial(const Vec& start, const Vec& delta, std::int64_t steps, double exponent);
double segment_energy_omp(const Vec& start, const Vec& delta, std::int64_t steps, double exponent);

/// Largest relative violation of D^p(a,c) <= D^p(a,b) + D^p(b,c) over the
/// triples (points[3k], points[3k+1], points[3k+2]), clamped below at 0.
double power_triangle_violation_serial(const SpectralData& spec, std::span<const Vec> points, double power);
double power_triangle_violation_omp(const SpectralData& spec, std::span<const Vec> points, double power);

/// Largest relative error |D(d_t a, d_t b) - t D(a,b)| / (t D(a,b)) over pairs.
double dilation_error_serial(const SpectralData& spec, std::span<const Vec> points, double t);
double dilation_error_omp(const SpectralData& spec, std::span<const Vec> points, double t);

}  // namespace solvrigid::kernels
