#pragma once

#include "solvrigid/funcexpr.hpp"
#include "solvrigid/spectral.hpp"

#include <json.hpp>

#include <vector>

namespace solvrigid {

/// A map of R^n whose block-i output reads only blocks i..r of the input.
///
/// Stored as one FuncExpr R^n -> R^n so that long compositions evaluate in
/// time linear in their length. Triangularity is checked structurally at
/// construction (InputError otherwise).
class BlockMap {
 public:
  BlockMap() = default;
  BlockMap(SpectralData spec, FuncExpr full);

  /// Components f_i : R^n -> R^{n_i}.
  static BlockMap from_components(const SpectralData& spec, const std::vector<FuncExpr>& components);
  static BlockMap identity(const SpectralData& spec);

  const SpectralData& spec() const { return spec_; }
  const FuncExpr& expr() const { return full_; }
  FuncExpr component(int i) const;

  Vec apply(const Vec& x) const { return full_.eval(x); }
  BlockPoint operator()(const BlockPoint& p) const;

  /// this ∘ inner.
  BlockMap compose(const BlockMap& inner) const;

  /// Numerical preimage, solved block by block from the last block up
  /// (Newton with finite-difference Jacobians and backtracking; bisection
  /// fallback on one-dimensional blocks). Throws ConvergenceError on failure.
  Vec solve(const Vec& y, double tol = 1e-13, int max_iter = 200) const;

  nlohmann::json to_json() const;
  static BlockMap from_json(const nlohmann::json& j);

 private:
  SpectralData spec_;
  FuncExpr full_;
};

/// Validates the block-triangular dependency pattern of an R^n -> R^n expression.
/// Returns {-1,-1} when triangular, otherwise the first offending (output block, input block).
std::pair<int, int> triangular_violation(const SpectralData& spec, const FuncExpr& full);

/// x_i -> t^{alpha_i} A_i (x_i + B_i) blockwise, A_i orthogonal.
struct SimMap {
  SpectralData spec;
  double t = 1.0;
  std::vector<Mat> A;
  std::vector<Vec> B;

  static SimMap identity(const SpectralData& spec);
  static SimMap dilation(const SpectralData& spec, double t);

  /// Throws InputError on shape errors or non-orthogonal A_i (tolerance 1e-12 on A^T A - I).
  void validate() const;
  Vec apply(const Vec& x) const;
  SimMap compose(const SimMap& inner) const;  // this ∘ inner
  SimMap inverse() const;
  BlockMap to_blockmap() const;
  bool approx_equal(const SimMap& other, double tol) const;

  nlohmann::json to_json() const;
  static SimMap from_json(const nlohmann::json& j);
};

/// x_i -> x_i + B_i(x_{i+1}, ..., x_r) with B_r constant.
///
/// Each B_i is an R^n -> R^{n_i} expression that structurally reads only
/// blocks > i; its sup certificate is B_i^max. K is a Bilipschitz certificate
/// for the whole map with respect to D_M.
struct AlmostTranslation {
  SpectralData spec;
  std::vector<FuncExpr> B;
  double K = 1.0;

  AlmostTranslation() = default;
  AlmostTranslation(SpectralData spec, std::vector<FuncExpr> B, double K);

  static AlmostTranslation identity(const SpectralData& spec);
  static AlmostTranslation translation(const SpectralData& spec, const std::vector<Vec>& b);

  double bmax(int i) const { return B[i].sup(); }
  Vec apply(const Vec& x) const;
  /// The full map x + B(x) as one expression.
  FuncExpr expr() const;
  BlockMap to_blockmap() const { return BlockMap(spec, expr()); }
};

/// delta_t ∘ A ∘ T_B: block i maps to t^{alpha_i} A_i (x_i + B_i(x_{>i})).
/// Any translation part of `sim` is folded into the constant part of B.
struct ASimMap {
  SimMap sim;  // sim.B is all zero in normal form
  AlmostTranslation almost;

  ASimMap() = default;
  ASimMap(SimMap sim, AlmostTranslation almost);

  static ASimMap identity(const SpectralData& spec);
  static ASimMap from_sim(const SimMap& s);

  const SpectralData& spec() const { return sim.spec; }
  double stretch() const { return sim.t; }
  Vec apply(const Vec& x) const;
  FuncExpr expr() const;
  BlockMap to_blockmap() const { return BlockMap(spec(), expr()); }

  ASimMap compose(const ASimMap& inner) const;  // this ∘ inner, normal form
  ASimMap inverse() const;                      // normal form, solved bottom-up
};

}  // namespace solvrigid
