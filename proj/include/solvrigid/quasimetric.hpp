#pragma once

#include "solvrigid/spectral.hpp"

#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace solvrigid {

/// D_M(p,q) = max_i |p_i - q_i|^{1/alpha_i}, Euclidean norm inside each block.
double distance(const SpectralData& spec, const BlockPoint& p, const BlockPoint& q);
double distance_flat(const SpectralData& spec, const Vec& p, const Vec& q);

/// Standard dilation: block i scaled by t^{alpha_i}. Throws DomainError for t <= 0.
BlockPoint dilate(const SpectralData& spec, double t, const BlockPoint& p);
Vec dilate_flat(const SpectralData& spec, double t, const Vec& p);

/// Discretization of the chain infimum. Each axis-aligned segment starts with
/// `resolution` steps; the step count doubles `max_depth` times.
struct ChainGrid {
  long long resolution = 1;
  int max_depth = 8;
  double stop_decrement = 1e-8;
  bool parallel = true;
};

struct ChainEstimate {
  double value = 0.0;           // best (smallest) chain energy found
  double last_decrement = 0.0;  // drop in value during the final round
  int rounds = 0;               // rounds actually evaluated (>= 1)
  bool converged = false;       // stopped on stop_decrement rather than max_depth
  std::vector<double> history;  // value after each round; nonincreasing
};

/// Upper estimate of Delta_beta(p,q), the infimum over finite chains of
/// sum D_M(p_{j-1}, p_j)^beta.
///
/// Candidate chains: the one-step chain {p, q}, and the interleaved chain that
/// moves block 1 to its target, then block 2, and so on (every intermediate
/// point differs from its neighbour in one block only). Each block segment is
/// subdivided uniformly; segments are refined independently and each keeps its
/// cheapest subdivision seen so far, so the reported value never increases.
ChainEstimate chain_energy(const SpectralData& spec, double beta, const BlockPoint& p, const BlockPoint& q,
                           const ChainGrid& grid = {});

using PointMap = std::function<Vec(const Vec&)>;

struct QsimConstants {
  double N = 1.0;  // geometric mean of distance ratios
  double K = 1.0;  // max over samples of ratio/N and N/ratio
  double min_ratio = 1.0;
  double max_ratio = 1.0;
  std::size_t used = 0;  // non-degenerate pairs
};

/// Empirical (N, K) quasisimilarity constants of F from sample pairs.
/// Degenerate pairs (p == q) are skipped; if none remain, throws InputError.
QsimConstants estimate_qsim_constants(const SpectralData& spec, const PointMap& F,
                                      std::span<const std::pair<Vec, Vec>> samples);
QsimConstants estimate_qsim_constants(const SpectralData& spec, const PointMap& F,
                                      std::span<const std::pair<BlockPoint, BlockPoint>> samples);

}  // namespace solvrigid
