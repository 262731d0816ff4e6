#pragma once

#include "solvrigid/blockmap.hpp"
#include "solvrigid/spectral.hpp"

#include <gmpxx.h>
#include <json.hpp>

#include <string>
#include <vector>

namespace solvrigid {

using Q = mpq_class;
using QVec = std::vector<Q>;

/// Parses "p/q", "p" or a JSON integer. Throws InputError otherwise.
Q parse_rational(const nlohmann::json& j);
nlohmann::json rational_json(const Q& q);
Vec to_double(const QVec& v);
double norm(const QVec& v);

/// Vector-valued 1-periodic piecewise-linear function of one rational variable.
/// Knots lie in [0, 1), strictly increasing, with the value at each knot.
class PeriodicPL {
 public:
  PeriodicPL() = default;
  PeriodicPL(std::vector<Q> knots, std::vector<QVec> values);

  static PeriodicPL zero(int dim);

  int dim() const { return dim_; }
  const std::vector<Q>& knots() const { return knots_; }
  const std::vector<QVec>& values() const { return values_; }

  QVec eval(const Q& s) const;
  PeriodicPL shifted(const Q& c) const;  // s -> P(s + c)
  PeriodicPL reflected() const;          // s -> P(-s)
  PeriodicPL plus(const PeriodicPL& o) const;
  PeriodicPL scaled(const Q& c) const;
  QVec mean() const;
  bool is_zero() const;
  /// Max Euclidean norm over one period (attained at a knot), with c added to every value.
  double max_norm(const QVec& c) const;

  bool operator==(const PeriodicPL& o) const { return knots_ == o.knots_ && values_ == o.values_; }

 private:
  void simplify();  // drop knots collinear with their neighbours
  int dim_ = 0;
  std::vector<Q> knots_;
  std::vector<QVec> values_;
};

/// One perturbation term P(<w, x>) with w reading only blocks above the owner.
struct PLTerm {
  QVec w;
  PeriodicPL profile;

  bool operator==(const PLTerm& o) const { return w == o.w && profile == o.profile; }
};

/// B_i = constant + sum of terms; canonical when profiles have zero mean, no term is
/// zero, the first nonzero entry of each w is positive, and terms are sorted by w.
struct ExactBlock {
  QVec constant;
  std::vector<PLTerm> terms;

  bool is_constant() const { return terms.empty(); }
  bool operator==(const ExactBlock& o) const { return constant == o.constant && terms == o.terms; }
};

/// Almost translation x_i -> x_i + B_i(x_{>i}) with exact rational data.
///
/// Composition shifts each term's argument by <w, b>, so it stays in the class
/// whenever every block read by the outer map is translated by a constant in the
/// inner one; otherwise NotExactlyRepresentable. With r <= 2 this never happens.
/// K is the uniform Bilip certificate of the ambient group; products keep the max.
class ExactTranslation {
 public:
  ExactTranslation() = default;
  ExactTranslation(SpectralData spec, std::vector<ExactBlock> blocks, double K = 1.0);

  static ExactTranslation identity(const SpectralData& spec, double K = 1.0);
  static ExactTranslation translation(const SpectralData& spec, const std::vector<QVec>& b, double K = 1.0);

  const SpectralData& spec() const { return spec_; }
  const std::vector<ExactBlock>& blocks() const { return blocks_; }
  const ExactBlock& block(int i) const { return blocks_[i]; }
  double K() const { return K_; }

  /// Highest block with a nonzero perturbation, -1 for the identity.
  int level() const;
  bool is_identity() const { return level() < 0; }

  QVec apply(const QVec& x) const;
  Vec apply(const Vec& x) const;
  /// B_i at x (flat), exactly.
  QVec perturbation(int i, const QVec& x) const;

  ExactTranslation compose(const ExactTranslation& inner) const;  // this ∘ inner
  ExactTranslation inverse() const;
  ExactTranslation power(long k) const;

  /// Sup of |B_i|: exact when the block has at most one term, an upper bound otherwise.
  double bmax(int i) const;

  AlmostTranslation to_almost() const;
  /// Canonical text; equal elements give equal keys.
  std::string key() const;

  nlohmann::json to_json() const;
  static ExactTranslation from_json(const nlohmann::json& j);

  bool operator==(const ExactTranslation& o) const { return spec_ == o.spec_ && blocks_ == o.blocks_; }

 private:
  void canonicalize();
  SpectralData spec_;
  std::vector<ExactBlock> blocks_;
  double K_ = 1.0;
};

/// Word as (generator index, exponent) pairs; gh means g ∘ h, so the rightmost pair acts first.
using ExactWord = std::vector<std::pair<int, long>>;

ExactTranslation evaluate_word(const std::vector<ExactTranslation>& generators, const ExactWord& w,
                               const SpectralData& spec);
nlohmann::json word_json(const ExactWord& w);

}  // namespace solvrigid
