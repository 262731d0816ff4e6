#include "solvrigid/solvgroup.hpp"

#include "solvrigid/errors.hpp"
#include "solvrigid/mapalg.hpp"
#include "solvrigid/quasimetric.hpp"

#include <cmath>
#include <iomanip>
#include <random>

namespace solvrigid {

namespace {

// Blockwise scale e^{sign * t * alpha_i}.
Vec scale_blocks(const SpectralData& spec, double t, double sign, const Vec& v) {
  Vec out = v;
  for (int i = 0; i < spec.r(); ++i) out.segment(spec.offset(i), spec.mult(i)) *= std::exp(sign * t * spec.alpha(i));
  return out;
}

}  // namespace

SolvSpec::SolvSpec(SpectralData lo, SpectralData up) : lower(std::move(lo)), upper(std::move(up)) {
  if (lower.empty() && upper.empty()) throw InputError("SolvSpec: lower and upper are both empty");
}

void to_json(nlohmann::json& j, const SolvSpec& s) {
  j = nlohmann::json::object();
  if (!s.lower.empty()) j["lower"] = s.lower;
  if (!s.upper.empty()) j["upper"] = s.upper;
}

void from_json(const nlohmann::json& j, SolvSpec& s) {
  if (!j.is_object()) throw InputError("SolvSpec: expected object");
  SpectralData lo, up;
  if (j.contains("lower")) lo = j.at("lower").get<SpectralData>();
  if (j.contains("upper")) up = j.at("upper").get<SpectralData>();
  s = SolvSpec(std::move(lo), std::move(up));
}

void require_conforming(const SolvSpec& spec, const SolvPoint& p, const char* what) {
  if (p.x.size() != spec.n_lower() || p.z.size() != spec.n_upper() || !std::isfinite(p.height)) {
    throw InputError(std::string(what) + ": point does not conform to the solvable group");
  }
}

SolvPoint solv_identity(const SolvSpec& spec) {
  return SolvPoint{0.0, Vec::Zero(spec.n_lower()), Vec::Zero(spec.n_upper())};
}

SolvPoint multiply(const SolvSpec& spec, const SolvPoint& p, const SolvPoint& q) {
  require_conforming(spec, p, "multiply");
  require_conforming(spec, q, "multiply");
  SolvPoint out;
  out.height = p.height + q.height;
  out.x = spec.lower.empty() ? Vec() : Vec(p.x + scale_blocks(spec.lower, p.height, 1.0, q.x));
  out.z = spec.upper.empty() ? Vec() : Vec(p.z + scale_blocks(spec.upper, p.height, -1.0, q.z));
  return out;
}

SolvPoint solv_inverse(const SolvSpec& spec, const SolvPoint& p) {
  require_conforming(spec, p, "solv_inverse");
  SolvPoint out;
  out.height = -p.height;
  out.x = spec.lower.empty() ? Vec() : Vec(-scale_blocks(spec.lower, p.height, -1.0, p.x));
  out.z = spec.upper.empty() ? Vec() : Vec(-scale_blocks(spec.upper, p.height, 1.0, p.z));
  return out;
}

double level_distance(const SolvSpec& spec, double t, const Vec& x, const Vec& y, const Vec& z, const Vec& w) {
  if (x.size() != spec.n_lower() || y.size() != spec.n_lower()) throw InputError("level_distance: lower dimension mismatch");
  double best = 0.0;
  for (int i = 0; i < spec.lower.r(); ++i) {
    const auto off = spec.lower.offset(i);
    const auto m = spec.lower.mult(i);
    best = std::max(best, std::exp(-t * spec.lower.alpha(i)) * (x.segment(off, m) - y.segment(off, m)).norm());
  }
  if (z.size() == 0 && w.size() == 0) return best;
  if (z.size() != spec.n_upper() || w.size() != spec.n_upper()) throw InputError("level_distance: upper dimension mismatch");
  for (int i = 0; i < spec.upper.r(); ++i) {
    const auto off = spec.upper.offset(i);
    const auto m = spec.upper.mult(i);
    best = std::max(best, std::exp(t * spec.upper.alpha(i)) * (z.segment(off, m) - w.segment(off, m)).norm());
  }
  return best;
}

SolvPoint pair_to_point(const SolvSpec& spec, const Vec& p, const Vec& q) {
  if (!spec.pure()) throw DomainError("pair_to_point: only defined for the negatively curved (pure lower) case");
  const double D = distance_flat(spec.lower, p, q);
  if (D == 0.0) throw DomainError("pair_to_point: p == q has no divergence height");
  return SolvPoint{std::log(D), p, Vec()};
}

double pair_to_point_bisect(const SolvSpec& spec, const Vec& p, const Vec& q, int iterations) {
  if (!spec.pure()) throw DomainError("pair_to_point_bisect: only defined for the pure lower case");
  const double D = distance_flat(spec.lower, p, q);
  if (D == 0.0) throw DomainError("pair_to_point_bisect: p == q");
  double lo = std::log(D) - 1.0, hi = std::log(D) + 1.0;
  // d_t is decreasing in t: d_lo > 1 > d_hi.
  for (int k = 0; k < iterations; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (level_distance(spec, mid, p, q) > 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

SimMap boundary_of_height_isometry(const SolvSpec& spec, double a) {
  if (!spec.pure()) throw DomainError("boundary_of_height_isometry: pure lower case only");
  if (!std::isfinite(a)) throw InputError("boundary_of_height_isometry: non-finite height shift");
  return SimMap::dilation(spec.lower, std::exp(a));
}

SolvPoint VerticalGeodesic::at(double s) const {
  return SolvPoint{orientation == Orientation::Upward ? s : -s, x, z};
}

SolvPoint SuspendedMap::apply(const SolvPoint& p) const {
  require_conforming(spec, p, "SuspendedMap");
  return SolvPoint{p.height + a, G.apply(p.x), p.z};
}

SuspendedMap suspend_boundary_map(const SolvSpec& spec, const BlockMap& G, double a) {
  if (!(G.spec() == spec.lower)) throw InputError("suspend_boundary_map: map does not act on the lower boundary");
  if (!std::isfinite(a)) throw InputError("suspend_boundary_map: non-finite height shift");
  const auto verdict = check_triangularity(spec.lower, [&](const Vec& x) { return G.apply(x); }, 32, 7u);
  if (!verdict.pass) throw InputError("suspend_boundary_map: map fails the triangularity probe");
  return SuspendedMap{spec, G, a};
}

LevelDistortion level_distortion(const SuspendedMap& phi, int pairs, double t_lo, double t_hi, double box,
                                 unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-box, box);
  std::uniform_real_distribution<double> T(t_lo, t_hi);
  LevelDistortion out{std::numeric_limits<double>::infinity(), 0.0};
  const int n = phi.spec.n_lower();
  Vec p(n), q(n);
  for (int k = 0; k < pairs; ++k) {
    for (int c = 0; c < n; ++c) {
      p[c] = U(rng);
      q[c] = U(rng);
    }
    const double t = T(rng);
    const double before = level_distance(phi.spec, t, p, q);
    if (before == 0.0) continue;
    const double after = level_distance(phi.spec, t + phi.a, phi.G.apply(p), phi.G.apply(q));
    const double r = after / before;
    out.min_ratio = std::min(out.min_ratio, r);
    out.max_ratio = std::max(out.max_ratio, r);
  }
  return out;
}

void write_geodesic_csv(std::ostream& os, const VerticalGeodesic& g, double s0, double s1, int count) {
  if (count < 2) throw InputError("write_geodesic_csv: need at least two samples");
  os << "s,height";
  for (Eigen::Index k = 0; k < g.x.size(); ++k) os << ",x" << k + 1;
  for (Eigen::Index k = 0; k < g.z.size(); ++k) os << ",z" << k + 1;
  os << '\n' << std::setprecision(17);
  for (int k = 0; k < count; ++k) {
    const double s = s0 + (s1 - s0) * k / (count - 1);
    const SolvPoint p = g.at(s);
    os << s << ',' << p.height;
    for (Eigen::Index c = 0; c < p.x.size(); ++c) os << ',' << p.x[c];
    for (Eigen::Index c = 0; c < p.z.size(); ++c) os << ',' << p.z[c];
    os << '\n';
  }
}

}  // namespace solvrigid
