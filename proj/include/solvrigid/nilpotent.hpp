#pragma once

#include "solvrigid/blockmap.hpp"
#include "solvrigid/exact.hpp"

#include <json.hpp>

#include <vector>

namespace solvrigid {

/// eps_i = max_{j > i} 2 K^{alpha_i} (B_j^max)^{alpha_i / alpha_j}; 0 for the last block.
double epsilon_from(const SpectralData& spec, double K, const std::vector<double>& bmax, int i);
/// InputError when some B_j^max (j > i) has no finite certificate.
double epsilon_bound(const AlmostTranslation& g, int i);
double epsilon_bound(const ExactTranslation& g, int i);

/// max |B_i(y) - B_i(y')| over random pairs in [-box, box]^n.
double sampled_oscillation(const AlmostTranslation& g, int i, int pairs, double box, unsigned seed);

/// tau_j(g) = B_j, defined when B_m = 0 for every m > j (and then B_j must be constant).
/// NotInKernel names the lowest offending block above j, or j itself when B_j is not constant.
QVec tau_project(const ExactTranslation& g, int j);
Vec tau_project(const AlmostTranslation& g, int j);

ExactTranslation commutator(const ExactTranslation& a, const ExactTranslation& b);  // a b a^-1 b^-1

struct ShuffleCheck {
  bool upper = false;        // B_{i, g k} = B_{i, k g} = B_{i, g} for i > j
  bool level = false;        // B_{j, g k} = B_{j, k g}
  bool premise = false;      // B_{j, k} = B_{j, g h}
  bool implication = true;   // premise => B_{j, k h^-1} = B_{j, g}
  bool pass() const { return upper && level && implication; }
};

/// Exact check of the three shuffle identities for k in K_j (InputError otherwise).
ShuffleCheck check_shuffle(const ExactTranslation& k, const ExactTranslation& g, const ExactTranslation& h, int j);

struct LevelStep {
  int level = 0;
  std::vector<int> generators;  // indices solved at this level
  std::vector<Q> a;
  std::vector<long> floor;
  std::vector<long> c;
};

struct RootCertificate {
  ExactTranslation gamma_p;
  ExactTranslation gamma_prime;
  ExactWord eta;  // eta_1 ... eta_r hats
  std::vector<long> c;  // per generator, in [0, l)
  long l = 1;
  std::vector<LevelStep> levels;

  bool property1 = false;           // gamma_p = gamma' eta
  bool property2 = false;           // gamma'^l = prod gamma_i^{c_i}
  bool property3_identity = false;  // l B_{r, gamma'} = sum c_i B_{r, gamma_i}
  bool property3 = false;           // |B_{r, gamma'}| <= sum |B_{r, gamma_i}|
  double property3_lhs = 0.0;
  double property3_rhs = 0.0;

  bool holds() const { return property1 && property2 && property3_identity && property3; }
  nlohmann::json to_json() const;
};

/// Approximate l-th root of gamma_p relative to the generators, level by level from the
/// top: solve B_{j,E} = sum a_i B_{j,gamma_i} exactly, split a_i = l floor(a_i / l) + c_i,
/// and descend. InfiniteIndexSuspected when a level has no integral solution;
/// NotInKernel when an intermediate element escapes the expected kernel.
RootCertificate approx_lth_root(const ExactTranslation& gamma_p, const std::vector<ExactTranslation>& generators,
                                long l);

/// R = sum_i (sum_g B^max_{i,g} + eps_i(gamma')).
double displacement_bound(const ExactTranslation& gamma_prime, const std::vector<ExactTranslation>& generators);

/// max |g(x) - x| over random points of [-box, box]^n.
double sampled_displacement(const ExactTranslation& g, int probes, double box, unsigned seed);

struct OrbitGrowth {
  long count = 0;
  bool saturated = false;  // the last explored word length still produced points inside the ball
  long explored = 0;       // distinct elements seen
};

/// Distinct elements of word length <= word_cap moving the basepoint at most k in D_M.
OrbitGrowth orbit_growth(const std::vector<ExactTranslation>& generators, const SpectralData& spec,
                         const Vec& basepoint, double k, int word_cap);

}  // namespace solvrigid
