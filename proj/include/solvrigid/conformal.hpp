#pragma once

#include "solvrigid/blockmap.hpp"
#include "solvrigid/quasimetric.hpp"

#include <json.hpp>

#include <vector>

namespace solvrigid {

/// Symmetric positive definite matrix with determinant one.
class ConfClass {
 public:
  ConfClass() = default;

  /// Strict: symmetric to 1e-12 (relative), positive definite, |det - 1| <= 1e-10.
  static ConfClass from_matrix(const Mat& A);
  /// Symmetrizes and rescales a positive definite matrix to determinant one.
  static ConfClass normalized(const Mat& A);
  static ConfClass identity(int n);

  const Mat& matrix() const { return A_; }
  int dim() const { return static_cast<int>(A_.rows()); }

 private:
  explicit ConfClass(Mat A) : A_(std::move(A)) {}
  Mat A_;
};

/// X[A] = |det X|^{-2/n} X^T A X. This is a right action: (XY)[A] = Y[X[A]].
/// Throws DomainError for singular X.
ConfClass act(const Mat& X, const ConfClass& A);

/// Eigenvalues of A^{-1/2} B A^{-1/2}, ascending.
Vec relative_eigenvalues(const ConfClass& A, const ConfClass& B);

/// k(A, B) = max(log lambda_max, -log lambda_min) of A^{-1/2} B A^{-1/2}.
double kdist(const ConfClass& A, const ConfClass& B);
/// d(A, B) = sqrt(sum log^2 lambda_i): the Riemannian distance.
double rdist(const ConfClass& A, const ConfClass& B);
/// K(A) = exp k(I, A).
double dilatation(const ConfClass& A);

/// Point at fraction s along the geodesic from P to A: P^{1/2} (P^{-1/2} A P^{-1/2})^s P^{1/2}.
ConfClass geodesic_point(const ConfClass& P, const ConfClass& A, double s);

struct CircumcenterOptions {
  double tol = 1e-12;
  int max_iters = 400;  // harmonic descent rounds
  int refine_iters = 100;
};

struct CircumcenterResult {
  ConfClass center;
  double radius = 0.0;
  int iterations = 0;
};

/// Center of the smallest d-ball containing X. Harmonic minimax descent toward
/// the farthest point, then fixed-point refinement through the tangent space
/// (Euclidean minimum enclosing ball of the log images). Throws InputError on
/// an empty set and ConvergenceError (carrying the last radius) on failure.
CircumcenterResult circumcenter(const std::vector<ConfClass>& X, const CircumcenterOptions& opt = {});

/// Euclidean minimum enclosing ball (Welzl). Returns the center; radius via out-parameter.
Vec min_enclosing_ball(const std::vector<Vec>& pts, double* radius = nullptr);

struct ConfSample {
  Vec point;
  ConfClass value;
  double defect = 0.0;
  bool flagged = false;  // derivative probe failed; value is the identity placeholder
};

struct ConfField {
  std::vector<ConfSample> samples;

  /// Nearest sample within `radius` of p (Euclidean); throws CoverageError otherwise.
  const ConfSample& nearest(const Vec& p, double radius) const;
  nlohmann::json to_json() const;
};

/// d f_1 / d x_1 at p by central differences.
Mat first_block_derivative(const BlockMap& F, const Vec& p, double rel_step = 1e-6);

struct InvariantStructureOptions {
  int word_len = 4;
  CircumcenterOptions circ;
  double dedup_scale = 1e9;  // group elements identified after rounding to 1/dedup_scale
  double singular_tol = 1e-12;
};

/// mu_F(p) = f'(p)[I] for every word F of length <= word_len, gathered into the
/// truncated set M_p; mu(p) is its circumcenter. The per-point defect is
/// max over generators G of k(mu(p), g'(p)[mu(G p)]), with mu(G p) recomputed at G p.
ConfField invariant_structure(const std::vector<BlockMap>& generators, const std::vector<Vec>& grid,
                              const InvariantStructureOptions& opt = {});

/// The set M_p itself (deduplicated), for diagnostics and tests.
std::vector<ConfClass> orbit_structures(const std::vector<BlockMap>& generators, const Vec& p,
                                        const InvariantStructureOptions& opt);

/// exp k(mu(p), f'(p)[nu(F p)]), reading mu at p and nu at F(p) by nearest sample within `radius`.
double conformality_defect(const BlockMap& F, const ConfField& mu, const ConfField& nu, const Vec& p, double radius);

struct AxisBox {
  Vec lo;
  Vec hi;
};

struct MeasureDistortion {
  std::vector<double> ratios;  // per box; NaN for skipped degenerate boxes
  double b_lower = 0.0;        // min ratio
  double b_upper = 0.0;        // max ratio
  int skipped = 0;
};

/// Monte-Carlo m(F(E))/m(E): mean of |det DF| over `samples` uniform points per box.
MeasureDistortion measure_distortion_check(const BlockMap& F, const std::vector<AxisBox>& boxes, int samples,
                                           unsigned seed);

}  // namespace solvrigid
