#pragma once

#include "solvrigid/blockmap.hpp"
#include "solvrigid/spectral.hpp"

#include <json.hpp>

#include <ostream>

namespace solvrigid {

/// G_M = R ⋉ R^{n_l + n_u}: exponents alpha_i of M_l (lower) and beta_i of M_u (upper).
/// Height t acts on lower block i by e^{t alpha_i} and on upper block i by e^{-t beta_i}.
struct SolvSpec {
  SpectralData lower;
  SpectralData upper;

  SolvSpec() = default;
  SolvSpec(SpectralData lower, SpectralData upper);

  bool pure() const { return upper.empty(); }
  int n_lower() const { return lower.n(); }
  int n_upper() const { return upper.empty() ? 0 : upper.n(); }
};

void to_json(nlohmann::json& j, const SolvSpec& s);
void from_json(const nlohmann::json& j, SolvSpec& s);

/// (t, x, z): height, lower coordinates, upper coordinates (flat).
struct SolvPoint {
  double height = 0.0;
  Vec x;
  Vec z;
};

void require_conforming(const SolvSpec& spec, const SolvPoint& p, const char* what);

SolvPoint solv_identity(const SolvSpec& spec);
SolvPoint multiply(const SolvSpec& spec, const SolvPoint& p, const SolvPoint& q);
SolvPoint solv_inverse(const SolvSpec& spec, const SolvPoint& p);

/// d_t in max-of-blocks form: max_i e^{-t alpha_i}|x_i - y_i| over lower blocks and
/// max_i e^{t beta_i}|z_i - w_i| over upper blocks. Empty z/w skip the upper part.
double level_distance(const SolvSpec& spec, double t, const Vec& x, const Vec& y, const Vec& z = Vec(),
                      const Vec& w = Vec());

/// rho(p, q) = (t_o, p) with d_{t_o}(p, q) = 1, from the closed form e^{t_o} = D_M(p, q).
/// Pure lower case only; throws DomainError for p == q.
SolvPoint pair_to_point(const SolvSpec& spec, const Vec& p, const Vec& q);

/// Bisection for d_t(p, q) = 1 on [log D - 1, log D + 1]; cross-check for pair_to_point.
double pair_to_point_bisect(const SolvSpec& spec, const Vec& p, const Vec& q, int iterations = 200);

/// Boundary map of the height translation t -> t + a: the dilation by e^a.
SimMap boundary_of_height_isometry(const SolvSpec& spec, double a);

enum class Orientation { Upward, Downward };

struct VerticalGeodesic {
  Vec x;
  Vec z;
  Orientation orientation = Orientation::Downward;

  SolvPoint at(double s) const;
};

/// (x, z, t) -> (G(x), z, t + a) for a lower-boundary map G.
struct SuspendedMap {
  SolvSpec spec;
  BlockMap G;
  double a = 0.0;

  SolvPoint apply(const SolvPoint& p) const;
};

/// Throws InputError when G does not act on the lower boundary or fails the
/// finite-difference triangularity probe.
SuspendedMap suspend_boundary_map(const SolvSpec& spec, const BlockMap& G, double a);

/// Largest and smallest of d_{t+a}(G p, G q) / d_t(p, q) over random pairs and heights in [t_lo, t_hi].
struct LevelDistortion {
  double min_ratio = 1.0;
  double max_ratio = 1.0;
};
LevelDistortion level_distortion(const SuspendedMap& phi, int pairs, double t_lo, double t_hi, double box,
                                 unsigned seed);

/// CSV rows "s,height,x...,z..." for `count` samples of the geodesic on [s0, s1].
void write_geodesic_csv(std::ostream& os, const VerticalGeodesic& g, double s0, double s1, int count);

}  // namespace solvrigid
