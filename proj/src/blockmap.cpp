#include "solvrigid/blockmap.hpp"

#include "solvrigid/errors.hpp"

#include <cmath>
#include <string>

namespace solvrigid {

namespace {

Mat block_diag(const SpectralData& spec, const std::vector<Mat>& blocks, double t, double sign) {
  Mat M = Mat::Zero(spec.n(), spec.n());
  for (int i = 0; i < spec.r(); ++i) {
    M.block(spec.offset(i), spec.offset(i), spec.mult(i), spec.mult(i)) = std::pow(t, sign * spec.alpha(i)) * blocks[i];
  }
  return M;
}

// R^n -> R^n expression whose blocks <= i are zero and blocks > i come from parts[j].
FuncExpr tail_stack(const SpectralData& spec, int i, const std::vector<FuncExpr>& parts) {
  std::vector<FuncExpr> pieces;
  for (int j = 0; j < spec.r(); ++j) {
    pieces.push_back(j <= i ? FuncExpr::zero(spec.n(), spec.mult(j)) : parts[j]);
  }
  return FuncExpr::stack(pieces);
}

}  // namespace

std::pair<int, int> triangular_violation(const SpectralData& spec, const FuncExpr& full) {
  const DepMatrix& d = full.deps();
  for (int i = 0; i < spec.r(); ++i) {
    for (int j = 0; j < i; ++j) {
      if (d.block(spec.offset(i), spec.offset(j), spec.mult(i), spec.mult(j)).any()) return {i, j};
    }
  }
  return {-1, -1};
}

BlockMap::BlockMap(SpectralData spec, FuncExpr full) : spec_(std::move(spec)), full_(std::move(full)) {
  if (!full_.valid()) throw InputError("BlockMap: empty expression");
  if (full_.in_dim() != spec_.n() || full_.out_dim() != spec_.n()) {
    throw InputError("BlockMap: expression must map R^" + std::to_string(spec_.n()) + " to itself");
  }
  const auto [i, j] = triangular_violation(spec_, full_);
  if (i >= 0) {
    throw InputError("BlockMap: component " + std::to_string(i + 1) + " reads earlier block " + std::to_string(j + 1));
  }
}

BlockMap BlockMap::from_components(const SpectralData& spec, const std::vector<FuncExpr>& components) {
  if (static_cast<int>(components.size()) != spec.r()) throw InputError("BlockMap: need one component per block");
  for (int i = 0; i < spec.r(); ++i) {
    if (!components[i].valid() || components[i].out_dim() != spec.mult(i) || components[i].in_dim() != spec.n()) {
      throw InputError("BlockMap: component " + std::to_string(i + 1) + " has the wrong shape");
    }
  }
  return BlockMap(spec, FuncExpr::stack(components));
}

BlockMap BlockMap::identity(const SpectralData& spec) { return BlockMap(spec, FuncExpr::identity(spec.n())); }

FuncExpr BlockMap::component(int i) const {
  return FuncExpr::compose(FuncExpr::project_range(spec_.n(), spec_.offset(i), spec_.mult(i)), full_);
}

BlockPoint BlockMap::operator()(const BlockPoint& p) const {
  require_conforming(spec_, p, "BlockMap");
  return BlockPoint::from_flat(spec_, apply(p.flat()));
}

BlockMap BlockMap::compose(const BlockMap& inner) const {
  if (!(spec_ == inner.spec_)) throw InputError("BlockMap::compose: spectral data differ");
  return BlockMap(spec_, FuncExpr::compose(full_, inner.full_));
}

Vec BlockMap::solve(const Vec& y, double tol, int max_iter) const {
  if (y.size() != spec_.n()) throw InputError("BlockMap::solve: dimension mismatch");
  Vec x = Vec::Zero(spec_.n());
  for (int i = spec_.r() - 1; i >= 0; --i) {
    const int off = spec_.offset(i);
    const int m = spec_.mult(i);
    const Vec target = y.segment(off, m);
    const double scale_tol = tol * (1.0 + target.norm());
    auto residual = [&](const Vec& z) {
      Vec trial = x;
      trial.segment(off, m) = z;
      return Vec(full_.eval(trial).segment(off, m) - target);
    };
    Vec z = target;
    Vec res = residual(z);
    bool ok = res.norm() <= scale_tol;
    for (int it = 0; it < max_iter && !ok; ++it) {
      Mat J(m, m);
      for (int c = 0; c < m; ++c) {
        const double h = 1e-7 * (1.0 + std::abs(z[c]));
        Vec zp = z, zm = z;
        zp[c] += h;
        zm[c] -= h;
        J.col(c) = (residual(zp) - residual(zm)) / (2.0 * h);
      }
      const Vec step = J.colPivHouseholderQr().solve(-res);
      if (!step.allFinite()) break;
      double lambda = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 40; ++ls) {
        const Vec zn = z + lambda * step;
        const Vec rn = residual(zn);
        if (rn.norm() < res.norm()) {
          z = zn;
          res = rn;
          moved = true;
          break;
        }
        lambda *= 0.5;
      }
      ok = res.norm() <= scale_tol;
      if (!moved) break;
    }
    if (!ok && m == 1) {
      // Monotone one-dimensional fallback: bracket then bisect.
      auto g = [&](double s) {
        Vec v(1);
        v[0] = s;
        return residual(v)[0];
      };
      double lo = z[0] - 1.0, hi = z[0] + 1.0;
      double glo = g(lo), ghi = g(hi);
      for (int k = 0; k < 200 && glo * ghi > 0.0; ++k) {
        const double w = hi - lo;
        lo -= w;
        hi += w;
        glo = g(lo);
        ghi = g(hi);
      }
      if (glo * ghi <= 0.0) {
        for (int k = 0; k < 400 && hi - lo > 0.0; ++k) {
          const double mid = 0.5 * (lo + hi);
          if (mid == lo || mid == hi) break;
          const double gm = g(mid);
          if ((gm <= 0.0) == (glo <= 0.0)) {
            lo = mid;
            glo = gm;
          } else {
            hi = mid;
          }
        }
        z[0] = std::abs(glo) <= std::abs(g(hi)) ? lo : hi;
        res = residual(z);
        ok = res.norm() <= std::max(scale_tol, 1e-12 * (1.0 + target.norm()));
      }
    }
    if (!ok) {
      throw ConvergenceError("BlockMap::solve: block " + std::to_string(i + 1) + " did not converge", res.norm());
    }
    x.segment(off, m) = z;
  }
  return x;
}

nlohmann::json BlockMap::to_json() const {
  nlohmann::json j;
  j["spec"] = spec_;
  j["map"] = full_.to_json();
  return j;
}

BlockMap BlockMap::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("spec")) throw InputError("BlockMap: expected object with \"spec\"");
  SpectralData spec = j.at("spec").get<SpectralData>();
  if (j.contains("map")) return BlockMap(spec, FuncExpr::from_json(j.at("map")));
  if (!j.contains("components") || !j.at("components").is_array()) {
    throw InputError("BlockMap: expected \"map\" or \"components\"");
  }
  std::vector<FuncExpr> comps;
  for (const auto& c : j.at("components")) comps.push_back(FuncExpr::from_json(c));
  return from_components(spec, comps);
}

// ---------------------------------------------------------------- SimMap

SimMap SimMap::identity(const SpectralData& spec) { return dilation(spec, 1.0); }

SimMap SimMap::dilation(const SpectralData& spec, double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("SimMap: stretch must be positive");
  SimMap s;
  s.spec = spec;
  s.t = t;
  for (int i = 0; i < spec.r(); ++i) {
    s.A.push_back(Mat::Identity(spec.mult(i), spec.mult(i)));
    s.B.push_back(Vec::Zero(spec.mult(i)));
  }
  return s;
}

void SimMap::validate() const {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("SimMap: stretch must be positive");
  if (static_cast<int>(A.size()) != spec.r() || static_cast<int>(B.size()) != spec.r()) {
    throw InputError("SimMap: need one rotation and one translation per block");
  }
  for (int i = 0; i < spec.r(); ++i) {
    const int m = spec.mult(i);
    if (A[i].rows() != m || A[i].cols() != m || B[i].size() != m) {
      throw InputError("SimMap: block " + std::to_string(i + 1) + " has the wrong shape");
    }
    if ((A[i].transpose() * A[i] - Mat::Identity(m, m)).cwiseAbs().maxCoeff() > 1e-12) {
      throw InputError("SimMap: rotation " + std::to_string(i + 1) + " is not orthogonal");
    }
  }
}

Vec SimMap::apply(const Vec& x) const {
  if (x.size() != spec.n()) throw InputError("SimMap: dimension mismatch");
  Vec out(spec.n());
  for (int i = 0; i < spec.r(); ++i) {
    out.segment(spec.offset(i), spec.mult(i)) =
        std::pow(t, spec.alpha(i)) * A[i] * (x.segment(spec.offset(i), spec.mult(i)) + B[i]);
  }
  return out;
}

SimMap SimMap::compose(const SimMap& inner) const {
  if (!(spec == inner.spec)) throw InputError("SimMap::compose: spectral data differ");
  SimMap out;
  out.spec = spec;
  out.t = t * inner.t;
  for (int i = 0; i < spec.r(); ++i) {
    out.A.push_back(A[i] * inner.A[i]);
    out.B.push_back(inner.B[i] + std::pow(inner.t, -spec.alpha(i)) * inner.A[i].transpose() * B[i]);
  }
  return out;
}

SimMap SimMap::inverse() const {
  SimMap out;
  out.spec = spec;
  out.t = 1.0 / t;
  for (int i = 0; i < spec.r(); ++i) {
    out.A.push_back(A[i].transpose());
    out.B.push_back(-std::pow(t, spec.alpha(i)) * A[i] * B[i]);
  }
  return out;
}

BlockMap SimMap::to_blockmap() const {
  const Mat M = block_diag(spec, A, t, 1.0);
  Vec b(spec.n());
  for (int i = 0; i < spec.r(); ++i) {
    b.segment(spec.offset(i), spec.mult(i)) = std::pow(t, spec.alpha(i)) * A[i] * B[i];
  }
  return BlockMap(spec, FuncExpr::affine(M, b));
}

bool SimMap::approx_equal(const SimMap& o, double tol) const {
  if (!(spec == o.spec) || std::abs(t - o.t) > tol * std::max(1.0, t)) return false;
  for (int i = 0; i < spec.r(); ++i) {
    if ((A[i] - o.A[i]).cwiseAbs().maxCoeff() > tol) return false;
    if ((B[i] - o.B[i]).cwiseAbs().maxCoeff() > tol * std::max(1.0, B[i].cwiseAbs().maxCoeff())) return false;
  }
  return true;
}

nlohmann::json SimMap::to_json() const {
  nlohmann::json j;
  j["spec"] = spec;
  j["t"] = t;
  j["A"] = nlohmann::json::array();
  j["B"] = nlohmann::json::array();
  for (int i = 0; i < spec.r(); ++i) {
    j["A"].push_back(mat_to_json(A[i]));
    j["B"].push_back(vec_to_json(B[i]));
  }
  return j;
}

SimMap SimMap::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("spec") || !j.contains("t")) throw InputError("SimMap: need \"spec\" and \"t\"");
  SimMap s = dilation(j.at("spec").get<SpectralData>(), read_finite(j.at("t"), "SimMap.t"));
  if (j.contains("A")) {
    if (!j.at("A").is_array() || static_cast<int>(j.at("A").size()) != s.spec.r()) throw InputError("SimMap.A: one per block");
    for (int i = 0; i < s.spec.r(); ++i) s.A[i] = mat_from_json(j.at("A")[i]);
  }
  if (j.contains("B")) {
    if (!j.at("B").is_array() || static_cast<int>(j.at("B").size()) != s.spec.r()) throw InputError("SimMap.B: one per block");
    for (int i = 0; i < s.spec.r(); ++i) s.B[i] = vec_from_json(j.at("B")[i]);
  }
  s.validate();
  return s;
}

// ---------------------------------------------------------------- AlmostTranslation

AlmostTranslation::AlmostTranslation(SpectralData spec_in, std::vector<FuncExpr> B_in, double K_in)
    : spec(std::move(spec_in)), B(std::move(B_in)), K(K_in) {
  if (static_cast<int>(B.size()) != spec.r()) throw InputError("AlmostTranslation: need one B_i per block");
  if (!(K >= 1.0) || !std::isfinite(K)) throw InputError("AlmostTranslation: K certificate must be finite and >= 1");
  for (int i = 0; i < spec.r(); ++i) {
    const auto& b = B[i];
    if (!b.valid() || b.in_dim() != spec.n() || b.out_dim() != spec.mult(i)) {
      throw InputError("AlmostTranslation: B_" + std::to_string(i + 1) + " has the wrong shape");
    }
    for (int k = 0; k < spec.offset(i) + spec.mult(i); ++k) {
      if (b.reads(k)) {
        throw InputError("AlmostTranslation: B_" + std::to_string(i + 1) + " reads block " +
                         std::to_string(spec.block_of(k) + 1) + "; only later blocks are allowed");
      }
    }
  }
}

AlmostTranslation AlmostTranslation::identity(const SpectralData& spec) {
  std::vector<FuncExpr> B;
  for (int i = 0; i < spec.r(); ++i) B.push_back(FuncExpr::zero(spec.n(), spec.mult(i)));
  return AlmostTranslation(spec, std::move(B), 1.0);
}

AlmostTranslation AlmostTranslation::translation(const SpectralData& spec, const std::vector<Vec>& b) {
  if (static_cast<int>(b.size()) != spec.r()) throw InputError("translation: one vector per block");
  std::vector<FuncExpr> B;
  for (int i = 0; i < spec.r(); ++i) B.push_back(FuncExpr::constant(spec.n(), b[i]));
  return AlmostTranslation(spec, std::move(B), 1.0);
}

Vec AlmostTranslation::apply(const Vec& x) const {
  if (x.size() != spec.n()) throw InputError("AlmostTranslation: dimension mismatch");
  Vec out = x;
  for (int i = 0; i < spec.r(); ++i) out.segment(spec.offset(i), spec.mult(i)) += B[i].eval(x);
  return out;
}

FuncExpr AlmostTranslation::expr() const { return FuncExpr::identity(spec.n()) + FuncExpr::stack(B); }

// ---------------------------------------------------------------- ASimMap

ASimMap::ASimMap(SimMap s, AlmostTranslation a) : sim(std::move(s)), almost(std::move(a)) {
  sim.validate();
  if (!(sim.spec == almost.spec)) throw InputError("ASimMap: spectral data differ");
  for (int i = 0; i < sim.spec.r(); ++i) {
    if (!sim.B[i].isZero(0.0)) {
      almost.B[i] = almost.B[i] + FuncExpr::constant(sim.spec.n(), sim.B[i]);
      sim.B[i].setZero();
    }
  }
}

ASimMap ASimMap::identity(const SpectralData& spec) {
  return ASimMap(SimMap::identity(spec), AlmostTranslation::identity(spec));
}

ASimMap ASimMap::from_sim(const SimMap& s) { return ASimMap(s, AlmostTranslation::identity(s.spec)); }

Vec ASimMap::apply(const Vec& x) const { return sim.apply(almost.apply(x)); }

FuncExpr ASimMap::expr() const {
  return FuncExpr::compose(FuncExpr::linear(block_diag(spec(), sim.A, sim.t, 1.0)), almost.expr());
}

ASimMap ASimMap::compose(const ASimMap& inner) const {
  if (!(spec() == inner.spec())) throw InputError("ASimMap::compose: spectral data differ");
  const SpectralData& sp = spec();
  const FuncExpr inner_full = inner.expr();
  std::vector<FuncExpr> E;
  for (int i = 0; i < sp.r(); ++i) {
    const Mat Ct = std::pow(inner.sim.t, -sp.alpha(i)) * inner.sim.A[i].transpose();
    FuncExpr pulled = FuncExpr::compose(FuncExpr::linear(Ct), FuncExpr::compose(almost.B[i], inner_full));
    if (almost.B[i].is_constant()) pulled = FuncExpr::constant(sp.n(), Ct * almost.B[i].eval(Vec::Zero(sp.n())));
    E.push_back(inner.almost.B[i] + pulled);
  }
  SimMap s = SimMap::dilation(sp, sim.t * inner.sim.t);
  for (int i = 0; i < sp.r(); ++i) s.A[i] = sim.A[i] * inner.sim.A[i];
  return ASimMap(std::move(s), AlmostTranslation(sp, std::move(E), almost.K * inner.almost.K));
}

ASimMap ASimMap::inverse() const {
  const SpectralData& sp = spec();
  // X_j(y): block j of the preimage of y, built from the last block up.
  std::vector<FuncExpr> X(sp.r());
  std::vector<FuncExpr> Bp(sp.r());
  for (int i = sp.r() - 1; i >= 0; --i) {
    const FuncExpr yi = FuncExpr::project_range(sp.n(), sp.offset(i), sp.mult(i));
    const Mat Ait = std::pow(sim.t, -sp.alpha(i)) * sim.A[i].transpose();
    FuncExpr Bi_at_preimage = almost.B[i].is_constant()
                                  ? FuncExpr::constant(sp.n(), almost.B[i].eval(Vec::Zero(sp.n())))
                                  : FuncExpr::compose(almost.B[i], tail_stack(sp, i, X));
    X[i] = FuncExpr::compose(FuncExpr::linear(Ait), yi) + (-1.0) * Bi_at_preimage;
    const Mat Ai = -std::pow(sim.t, sp.alpha(i)) * sim.A[i];
    Bp[i] = FuncExpr::compose(FuncExpr::linear(Ai), Bi_at_preimage);
    if (Bi_at_preimage.is_constant()) Bp[i] = FuncExpr::constant(sp.n(), Bp[i].eval(Vec::Zero(sp.n())));
  }
  SimMap s = SimMap::dilation(sp, 1.0 / sim.t);
  for (int i = 0; i < sp.r(); ++i) s.A[i] = sim.A[i].transpose();
  return ASimMap(std::move(s), AlmostTranslation(sp, std::move(Bp), almost.K));
}

}  // namespace solvrigid
