#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstddef>
#include <vector>

namespace solvrigid {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Exponents alpha_1 < ... < alpha_r with multiplicities n_1..n_r.
///
/// The diagonal matrix M = diag(e^{alpha_i} repeated n_i times) defines both
/// the quasi-metric D_M on R^n and the solvable group G_M. Blocks are stored
/// contiguously in the flat coordinate vector; offset(i) gives the first
/// coordinate of block i.
class SpectralData {
 public:
  SpectralData() = default;
  SpectralData(std::vector<double> alphas, std::vector<int> mults);

  int r() const { return static_cast<int>(alphas_.size()); }
  int n() const { return total_dim_; }
  double alpha(int i) const { return alphas_[i]; }
  int mult(int i) const { return mults_[i]; }
  int offset(int i) const { return offsets_[i]; }
  const std::vector<double>& alphas() const { return alphas_; }
  const std::vector<int>& mults() const { return mults_; }
  bool empty() const { return alphas_.empty(); }

  /// Block index owning flat coordinate k.
  int block_of(int k) const;

  /// Sub-spectrum made of blocks first..r-1 (the quotient seen by later blocks).
  SpectralData tail(int first) const;

  friend bool operator==(const SpectralData& a, const SpectralData& b) {
    return a.alphas_ == b.alphas_ && a.mults_ == b.mults_;
  }

 private:
  std::vector<double> alphas_;
  std::vector<int> mults_;
  std::vector<int> offsets_;
  int total_dim_ = 0;
};

/// A point of R^n split into the blocks of a SpectralData.
class BlockPoint {
 public:
  BlockPoint() = default;
  explicit BlockPoint(std::vector<Vec> blocks) : blocks_(std::move(blocks)) {}

  static BlockPoint from_flat(const SpectralData& spec, const Vec& flat);
  static BlockPoint zero(const SpectralData& spec);

  int block_count() const { return static_cast<int>(blocks_.size()); }
  const Vec& block(int i) const { return blocks_[i]; }
  Vec& block(int i) { return blocks_[i]; }
  const std::vector<Vec>& blocks() const { return blocks_; }

  Vec flat() const;
  bool conforms(const SpectralData& spec) const;

 private:
  std::vector<Vec> blocks_;
};

/// Throws InputError unless p has exactly the block shapes of spec.
void require_conforming(const SpectralData& spec, const BlockPoint& p, const char* what);

void to_json(nlohmann::json& j, const SpectralData& s);
void from_json(const nlohmann::json& j, SpectralData& s);

/// Reads a finite decimal number; rejects NaN/Inf and non-numbers.
double read_finite(const nlohmann::json& j, const char* field);

nlohmann::json vec_to_json(const Vec& v);
Vec vec_from_json(const nlohmann::json& j);
nlohmann::json mat_to_json(const Mat& m);  // row-major nested arrays
Mat mat_from_json(const nlohmann::json& j);

}  // namespace solvrigid
