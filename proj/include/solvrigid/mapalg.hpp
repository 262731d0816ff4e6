#pragma once

#include "solvrigid/blockmap.hpp"
#include "solvrigid/quasimetric.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace solvrigid {

struct TriangularityVerdict {
  bool pass = true;
  double worst_response = 0.0;  // largest |d f_i / d x_k| over blocks k earlier than i
  int out_block = -1;           // 0-based, -1 when passing
  int in_block = -1;
};

/// Finite-difference probe of an opaque map: block i of F must not respond
/// (beyond `threshold`) to any coordinate of a block j < i.
TriangularityVerdict check_triangularity(const SpectralData& spec, const PointMap& F, int probes, unsigned seed,
                                         double box = 10.0, double rel_step = 1e-5, double threshold = 1e-7);

enum class MapClass { Sim, ASim, Bilip, QSim };

struct Classification {
  MapClass kind = MapClass::QSim;
  double t = 1.0;  // stretch for Sim/ASim
  double K = 1.0;  // Bilip constant, or the K of (N, K)
  double N = 1.0;
  QsimConstants constants;
  double structure_defect = 0.0;  // worst deviation from the ASim Jacobian pattern

  std::string label() const;
};

struct ClassifyOptions {
  double rel_step = 1e-5;
  double structure_tol = 1e-6;  // relative, on finite-difference Jacobian blocks
  double sim_tol = 1e-9;        // K <= 1 + sim_tol for Sim
  int max_probes = 64;
};

/// Strongest class verified on the sample pairs.
///
/// ASim structure: every diagonal Jacobian block d f_i/d x_i is the same at all
/// probes and equals t^{alpha_i} times an orthogonal matrix, with one t for all
/// blocks. Sim additionally needs vanishing off-diagonal blocks and K = 1.
/// Otherwise Bilip(max(max_ratio, 1/min_ratio)) when ratios straddle 1, else QSim(N, K).
Classification classify(const BlockMap& F, std::span<const std::pair<Vec, Vec>> samples,
                        const ClassifyOptions& opt = {});

/// max over probes, i < l of |f_i(x) - f_i(x')| / (K^{alpha_i} |x_l - x_l'|^{alpha_i/alpha_l}),
/// where x' differs from x in block l only. <= 1 means the Hoelder bound holds.
double holder_ratio(const BlockMap& F, double K, int probes, unsigned seed, double box = 5.0);

/// Conformal factor of the first block: geometric mean of the singular values of d f_1/d x_1 at p.
double first_block_stretch(const BlockMap& F, const Vec& p, double rel_step = 1e-6);

/// sigma: solve log t_i = <S_i, v> in least squares; throws NotInUniformSubgroup when
/// the residual exceeds `tol`.
Vec stretch_hom(const std::vector<double>& stretches, const std::vector<Vec>& S, double tol = 1e-9);
Vec stretch_hom(const std::vector<ASimMap>& G, const std::vector<Vec>& S, double tol = 1e-9);

/// psi: the rotation tuple (A_1, ..., A_r) of an ASim map in normal form.
std::vector<Mat> rotation_hom(const ASimMap& G);

/// Lower/upper boundary maps of an almost isometry.
struct BoundaryPair {
  ASimMap lower;
  ASimMap upper;
};

/// h(G) = log t_l.
double height_hom(const BoundaryPair& P);

struct ReciprocityVerdict {
  bool pass = false;
  double log_sum = 0.0;       // log t_l + log t_u
  std::vector<double> drift;  // (t_l t_u)^k for k = 1..iterates
};

ReciprocityVerdict check_reciprocity(const BoundaryPair& P, int iterates = 10, double tol = 1e-9);

/// G(x, y) = (t^{alpha_1} A_y (x + B_y), g(y)) with x the first block and y the rest.
struct RotationFamily {
  SpectralData spec;
  double t = 1.0;
  std::function<Mat(const Vec&)> A;
  std::function<Vec(const Vec&)> B;
  PointMap g;

  Vec apply(const Vec& p) const;
};

struct RigidityWitness {
  bool found = false;
  Vec y, y2;       // quotient points with A_y != A_y2
  Vec z;           // common value of x + B_y and x2 + B_y2
  Vec p, p2;       // the two points of R^n
  double gap = 0.0;        // operator norm of A_y - A_y2
  double ratio = 0.0;      // D(G p, G p2) / D(p, p2)
  double threshold = 0.0;  // K^2 t
};

/// Searches quotient pairs in [-search_radius, search_radius]^{n - n_1}; on the
/// first pair with ||A_y - A_y2|| > gap_tol it scales z along the top singular
/// direction of A_y - A_y2 until the distortion ratio exceeds K^2 t.
RigidityWitness rotation_rigidity_witness(const RotationFamily& G, double K, double search_radius, int probes,
                                          unsigned seed, double gap_tol = 1e-8);

const char* to_string(MapClass c);

}  // namespace solvrigid
