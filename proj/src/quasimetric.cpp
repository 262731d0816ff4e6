#include "solvrigid/quasimetric.hpp"

#include "solvrigid/errors.hpp"
#include "solvrigid/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace solvrigid {

namespace {

void require_flat(const SpectralData& spec, const Vec& p, const char* what) {
  if (p.size() != spec.n()) {
    throw InputError(std::string(what) + ": expected dimension " + std::to_string(spec.n()) + ", got " +
                     std::to_string(p.size()));
  }
}

void require_positive(double t, const char* what) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError(std::string(what) + ": parameter must be positive");
}

}  // namespace

double distance_flat(const SpectralData& spec, const Vec& p, const Vec& q) {
  require_flat(spec, p, "distance");
  require_flat(spec, q, "distance");
  double best = 0.0;
  for (int i = 0; i < spec.r(); ++i) {
    const double norm = (p.segment(spec.offset(i), spec.mult(i)) - q.segment(spec.offset(i), spec.mult(i))).norm();
    if (norm > 0.0) best = std::max(best, std::pow(norm, 1.0 / spec.alpha(i)));
  }
  return best;
}

double distance(const SpectralData& spec, const BlockPoint& p, const BlockPoint& q) {
  require_conforming(spec, p, "distance");
  require_conforming(spec, q, "distance");
  double best = 0.0;
  for (int i = 0; i < spec.r(); ++i) {
    const double norm = (p.block(i) - q.block(i)).norm();
    if (norm > 0.0) best = std::max(best, std::pow(norm, 1.0 / spec.alpha(i)));
  }
  return best;
}

Vec dilate_flat(const SpectralData& spec, double t, const Vec& p) {
  require_positive(t, "dilate");
  require_flat(spec, p, "dilate");
  Vec out = p;
  for (int i = 0; i < spec.r(); ++i) out.segment(spec.offset(i), spec.mult(i)) *= std::pow(t, spec.alpha(i));
  return out;
}

BlockPoint dilate(const SpectralData& spec, double t, const BlockPoint& p) {
  require_positive(t, "dilate");
  require_conforming(spec, p, "dilate");
  BlockPoint out = p;
  for (int i = 0; i < spec.r(); ++i) out.block(i) *= std::pow(t, spec.alpha(i));
  return out;
}

ChainEstimate chain_energy(const SpectralData& spec, double beta, const BlockPoint& p, const BlockPoint& q,
                           const ChainGrid& grid) {
  require_conforming(spec, p, "chain_energy");
  require_conforming(spec, q, "chain_energy");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw InputError("chain_energy: beta must be positive");
  if (grid.resolution < 1) throw InputError("chain_energy: resolution must be >= 1");
  if (grid.max_depth < 1) throw InputError("chain_energy: max_depth must be >= 1");
  if (grid.max_depth > 40) throw InputError("chain_energy: max_depth too large");

  ChainEstimate est;
  const double direct = std::pow(distance(spec, p, q), beta);

  std::vector<double> best(spec.r(), std::numeric_limits<double>::infinity());
  std::vector<Vec> delta(spec.r());
  for (int i = 0; i < spec.r(); ++i) {
    delta[i] = q.block(i) - p.block(i);
    if (delta[i].isZero(0.0)) best[i] = 0.0;
  }

  for (int d = 0; d <= grid.max_depth; ++d) {
    const std::int64_t steps = static_cast<std::int64_t>(grid.resolution) << d;
    for (int i = 0; i < spec.r(); ++i) {
      if (best[i] == 0.0) continue;
      const double e = beta / spec.alpha(i);
      const double seg = grid.parallel ? kernels::segment_energy_omp(p.block(i), delta[i], steps, e)
                                       : kernels::segment_energy_serial(p.block(i), delta[i], steps, e);
      best[i] = std::min(best[i], seg);
    }
    double chained = 0.0;
    for (double b : best) chained += b;
    const double value = std::min(direct, chained);
    const double prev = est.history.empty() ? value : est.history.back();
    est.history.push_back(std::min(prev, value));
    est.rounds = d + 1;
    est.last_decrement = prev - est.history.back();
    est.value = est.history.back();
    if (d > 0 && est.last_decrement < grid.stop_decrement) {
      est.converged = true;
      break;
    }
  }
  return est;
}

QsimConstants estimate_qsim_constants(const SpectralData& spec, const PointMap& F,
                                      std::span<const std::pair<Vec, Vec>> samples) {
  if (!F) throw InputError("estimate_qsim_constants: empty map");
  std::vector<double> ratios;
  ratios.reserve(samples.size());
  for (const auto& [p, q] : samples) {
    const double base = distance_flat(spec, p, q);
    if (base == 0.0) continue;
    ratios.push_back(distance_flat(spec, F(p), F(q)) / base);
  }
  if (ratios.empty()) throw InputError("estimate_qsim_constants: no non-degenerate sample pairs");
  double log_sum = 0.0;
  QsimConstants c;
  c.min_ratio = ratios.front();
  c.max_ratio = ratios.front();
  for (double r : ratios) {
    if (!(r > 0.0)) throw DomainError("estimate_qsim_constants: map collapses a sample pair");
    log_sum += std::log(r);
    c.min_ratio = std::min(c.min_ratio, r);
    c.max_ratio = std::max(c.max_ratio, r);
  }
  c.used = ratios.size();
  c.N = std::exp(log_sum / static_cast<double>(ratios.size()));
  c.K = std::max({1.0, c.max_ratio / c.N, c.N / c.min_ratio});
  return c;
}

QsimConstants estimate_qsim_constants(const SpectralData& spec, const PointMap& F,
                                      std::span<const std::pair<BlockPoint, BlockPoint>> samples) {
  std::vector<std::pair<Vec, Vec>> flat;
  flat.reserve(samples.size());
  for (const auto& [p, q] : samples) {
    require_conforming(spec, p, "estimate_qsim_constants");
    require_conforming(spec, q, "estimate_qsim_constants");
    flat.emplace_back(p.flat(), q.flat());
  }
  return estimate_qsim_constants(spec, F, std::span<const std::pair<Vec, Vec>>(flat));
}

}  // namespace solvrigid
