#pragma once

#include "solvrigid/blockmap.hpp"

#include <json.hpp>

#include <vector>

namespace solvrigid {

/// Finite generating data for a uniform group of maps G(x, y) = (g_y(x), g(y))
/// with x the first block and g an ASim map of the quotient with stretch t_g.
struct GroupSample {
  SpectralData spec;
  std::vector<BlockMap> generators;
  std::vector<int> inverse_index;        // index of the inverse generator, -1 if absent
  std::vector<double> quotient_stretch;  // t_g per generator
  int word_len = 12;
  double uniform_K = 1.0;

  /// Throws InputError on shape mismatches or inconsistent inverse indices.
  void validate() const;
};

struct Word {
  std::vector<int> letters;  // applied right to left: letters {a, b} is G_a ∘ G_b
  BlockMap map;
  double t = 1.0;  // quotient stretch
};

/// All reduced words (no letter adjacent to its listed inverse) of length <= max_len,
/// identity first, then by length and lexicographic order.
std::vector<Word> enumerate_words(const GroupSample& G, int max_len);

/// Equally spaced nodes lo + (hi - lo) k / (count - 1); integers land exactly when representable.
std::vector<double> uniform_nodes(double lo, double hi, int count);

/// Scalar field on a tensor grid: values(i, j) at x = xs[i], quotient point ys[j].
struct ScalarField {
  std::vector<double> xs;
  std::vector<Vec> ys;
  Mat values;
  std::vector<std::pair<int, int>> flagged;  // (i, j) where a derivative vanished
};

struct SupMeasureOptions {
  double fd_step = 1e-7;  // relative forward-difference step
  double vanish_tol = 1e-12;
};

/// mu(x, y) = max over words of |right derivative of g_y at x| / t_g^{alpha_1}; needs n_1 = 1.
ScalarField sup_measure_1d(const GroupSample& G, const std::vector<double>& xs, const std::vector<Vec>& ys,
                           const SupMeasureOptions& opt = {});

/// Pointwise version of the same supremum over a precomputed word list.
double sup_measure_at(const std::vector<Word>& words, const SpectralData& spec, const Vec& p,
                      const SupMeasureOptions& opt = {});

/// max over generators and probes of |mu(H p) h'(p) / t_h^{alpha_1} - mu(p)| / mu(p).
double transformation_law_defect(const GroupSample& G, const std::vector<Word>& words, const std::vector<Vec>& probes,
                                 const SupMeasureOptions& opt = {});

struct ConjugatorOptions {
  /// Cellwise left-endpoint rule (exact for right-continuous piecewise-constant mu
  /// with jumps on nodes); the trapezoid integral is still reported.
  bool left_endpoint = true;
};

struct Conjugator1D {
  BlockMap F;
  ScalarField nu;  // nu_y(x) = integral of mu(., y) from 0 to x at the nodes
  double trapezoid_gap = 0.0;  // max |left-endpoint - trapezoid| over nodes
};

/// F(x, y) = (nu_y(x), y), piecewise-linear between nodes and extrapolated linearly.
/// Needs 0 inside [xs.front(), xs.back()]; non-positive mu throws InputError.
Conjugator1D conjugator_1d(const SpectralData& spec, const ScalarField& mu, const ConjugatorOptions& opt = {});

struct WordDefect {
  std::vector<int> letters;
  double before = 0.0;  // similarity defect of the unconjugated first block
  double after = 0.0;   // of F W F^{-1}
};

struct ConjugationReport {
  std::vector<WordDefect> words;
  double max_before = 0.0;
  double max_after = 0.0;
  double tolerance = 0.0;
  bool pass = false;

  nlohmann::json to_json() const;
};

/// First-block similarity defect of F W F^{-1} for every word: max over probes of
/// |s(p) / geometric mean of s - 1|, plus singular-value anisotropy when n_1 > 1,
/// where s(p) is the conformal factor at F(p). For n_1 = 1 the factor is the
/// difference quotient (F(W(x + h)) - F(W(x))) / (F(x + h) - F(x)), so no inverse is needed.
/// F must be strictly increasing in x on the probes (n_1 = 1) or have invertible
/// first-block derivative (n_1 > 1); InputError otherwise.
ConjugationReport verify_conjugation(const GroupSample& G, const BlockMap& F, const std::vector<Vec>& probes,
                                     double tolerance, double step = 1e-6);

/// Similarity defect of one map's first block over probes (anisotropy and scale variation).
double similarity_defect(const BlockMap& H, const std::vector<Vec>& probes);

struct StretchNormalization {
  BlockMap F;      // (x, y) -> (mu(y) x, y)
  BlockMap F_inv;  // (x, y) -> (x / mu(y), y)
  std::vector<double> y_nodes;
  std::vector<double> mu;  // at y_nodes
  std::vector<BlockMap> normalized;  // F G F^{-1} per generator
  double cocycle_defect = 0.0;  // max |mu(f(y)) eta_{f,y} - mu(y)| / mu(y) on nodes and generators
};

/// eta_{g,y} = lambda_{g,y} / t_g^{alpha_1}, mu(y) = max over words. Quotient must be
/// one-dimensional; first blocks must be affine in x (InputError otherwise).
StretchNormalization normalize_stretch(const GroupSample& G, const std::vector<double>& y_nodes,
                                       double x_probe_radius = 1.0);

/// max over generators g and probes p of |lambda of F G F^{-1} at p / t_g^{alpha_1} - 1|, skipping
/// probes where y or g(y) leaves the y-node range (the mu table extrapolates there).
double normalized_stretch_defect(const StretchNormalization& N, const GroupSample& G, const std::vector<Vec>& probes);

/// Conformal factor lambda_{g,y} of the first block at (x, y), checked to be x-independent.
double first_block_factor(const BlockMap& g, const Vec& p);

struct RadialStep {
  BlockMap F;
  double t = 1.0;
  double cauchy = 0.0;  // sup distance to the previous F on the probe box (0 for the first)
  double defect = 0.0;  // max similarity defect of F H F^{-1} over the sample generators
};

/// F_i = delta_{t_i} ∘ a ∘ G_i for the escape words G_i, t_i = 1 / (quotient stretch of G_i).
/// `a` acts on the first block only. Throws ConvergenceError unless t_i is strictly increasing.
std::vector<RadialStep> radial_conjugator(const GroupSample& G, const std::vector<std::vector<int>>& escape,
                                          const Mat& a, int steps, const std::vector<Vec>& probes);

}  // namespace solvrigid
