#include "solvrigid/spectral.hpp"

#include "solvrigid/errors.hpp"

#include <cmath>
#include <string>

namespace solvrigid {

SpectralData::SpectralData(std::vector<double> alphas, std::vector<int> mults)
    : alphas_(std::move(alphas)), mults_(std::move(mults)) {
  if (alphas_.size() != mults_.size()) {
    throw InputError("SpectralData: alphas and mults differ in length");
  }
  offsets_.reserve(alphas_.size());
  for (std::size_t i = 0; i < alphas_.size(); ++i) {
    if (!std::isfinite(alphas_[i]) || alphas_[i] <= 0.0) {
      throw InputError("SpectralData: exponent " + std::to_string(i) + " must be positive");
    }
    if (i > 0 && !(alphas_[i - 1] < alphas_[i])) {
      throw InputError("SpectralData: exponents must be strictly increasing");
    }
    if (mults_[i] <= 0) {
      throw InputError("SpectralData: multiplicity " + std::to_string(i) + " must be positive");
    }
    offsets_.push_back(total_dim_);
    total_dim_ += mults_[i];
  }
}

int SpectralData::block_of(int k) const {
  for (int i = r() - 1; i >= 0; --i) {
    if (k >= offsets_[i]) return i;
  }
  return -1;
}

SpectralData SpectralData::tail(int first) const {
  std::vector<double> a(alphas_.begin() + first, alphas_.end());
  std::vector<int> m(mults_.begin() + first, mults_.end());
  return SpectralData(std::move(a), std::move(m));
}

BlockPoint BlockPoint::from_flat(const SpectralData& spec, const Vec& flat) {
  if (flat.size() != spec.n()) {
    throw InputError("BlockPoint: flat vector has dimension " + std::to_string(flat.size()) +
                     ", expected " + std::to_string(spec.n()));
  }
  std::vector<Vec> blocks;
  blocks.reserve(spec.r());
  for (int i = 0; i < spec.r(); ++i) {
    blocks.emplace_back(flat.segment(spec.offset(i), spec.mult(i)));
  }
  return BlockPoint(std::move(blocks));
}

BlockPoint BlockPoint::zero(const SpectralData& spec) {
  return from_flat(spec, Vec::Zero(spec.n()));
}

Vec BlockPoint::flat() const {
  Eigen::Index n = 0;
  for (const auto& b : blocks_) n += b.size();
  Vec out(n);
  Eigen::Index at = 0;
  for (const auto& b : blocks_) {
    out.segment(at, b.size()) = b;
    at += b.size();
  }
  return out;
}

bool BlockPoint::conforms(const SpectralData& spec) const {
  if (block_count() != spec.r()) return false;
  for (int i = 0; i < spec.r(); ++i) {
    if (blocks_[i].size() != spec.mult(i)) return false;
  }
  return true;
}

void require_conforming(const SpectralData& spec, const BlockPoint& p, const char* what) {
  if (!p.conforms(spec)) {
    throw InputError(std::string(what) + ": point does not conform to the block structure");
  }
}

double read_finite(const nlohmann::json& j, const char* field) {
  if (!j.is_number()) {
    throw InputError(std::string(field) + ": expected a number");
  }
  double v = j.get<double>();
  if (!std::isfinite(v)) throw InputError(std::string(field) + ": NaN/Inf not accepted");
  return v;
}

void to_json(nlohmann::json& j, const SpectralData& s) {
  j = nlohmann::json{{"alphas", s.alphas()}, {"mults", s.mults()}};
}

void from_json(const nlohmann::json& j, SpectralData& s) {
  if (!j.is_object() || !j.contains("alphas") || !j.contains("mults")) {
    throw InputError("SpectralData: expected object with \"alphas\" and \"mults\"");
  }
  const auto& ja = j.at("alphas");
  const auto& jm = j.at("mults");
  if (!ja.is_array() || !jm.is_array()) throw InputError("SpectralData: arrays expected");
  std::vector<double> alphas;
  std::vector<int> mults;
  for (const auto& a : ja) alphas.push_back(read_finite(a, "alphas"));
  for (const auto& m : jm) {
    if (!m.is_number_integer()) throw InputError("SpectralData: mults must be integers");
    mults.push_back(m.get<int>());
  }
  s = SpectralData(std::move(alphas), std::move(mults));
}

nlohmann::json vec_to_json(const Vec& v) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Vec vec_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw InputError("vector: expected array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = read_finite(j[i], "vector");
  return v;
}

nlohmann::json mat_to_json(const Mat& m) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(std::move(row));
  }
  return j;
}

Mat mat_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw InputError("matrix: expected nested arrays");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j[r].size()) != cols) throw InputError("matrix: ragged rows");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = read_finite(j[r][c], "matrix");
  }
  return m;
}

}  // namespace solvrigid
