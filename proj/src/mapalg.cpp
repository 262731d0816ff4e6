#include "solvrigid/mapalg.hpp"

#include "solvrigid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace solvrigid {

const char* to_string(MapClass c) {
  switch (c) {
    case MapClass::Sim: return "Sim";
    case MapClass::ASim: return "ASim";
    case MapClass::Bilip: return "Bilip";
    case MapClass::QSim: return "QSim";
  }
  return "?";
}

std::string Classification::label() const {
  switch (kind) {
    case MapClass::Sim:
    case MapClass::ASim:
      return std::string(to_string(kind)) + "(" + std::to_string(t) + ")";
    case MapClass::Bilip:
      return "Bilip(" + std::to_string(K) + ")";
    case MapClass::QSim:
      return "QSim(" + std::to_string(N) + ", " + std::to_string(K) + ")";
  }
  return "?";
}

TriangularityVerdict check_triangularity(const SpectralData& spec, const PointMap& F, int probes, unsigned seed,
                                         double box, double rel_step, double threshold) {
  if (!F) throw InputError("check_triangularity: map is not evaluable");
  if (probes < 1) throw InputError("check_triangularity: need at least one probe");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-box, box);
  TriangularityVerdict v;
  Vec x(spec.n());
  for (int p = 0; p < probes; ++p) {
    for (int c = 0; c < spec.n(); ++c) x[c] = U(rng);
    for (int j = 0; j + 1 < spec.r(); ++j) {
      for (int k = spec.offset(j); k < spec.offset(j) + spec.mult(j); ++k) {
        const double h = rel_step * (1.0 + std::abs(x[k]));
        Vec xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        const Vec fp = F(xp), fm = F(xm);
        if (fp.size() != spec.n() || fm.size() != spec.n()) throw InputError("check_triangularity: map changes dimension");
        for (int i = j + 1; i < spec.r(); ++i) {
          const double resp =
              (fp.segment(spec.offset(i), spec.mult(i)) - fm.segment(spec.offset(i), spec.mult(i))).norm() / (2.0 * h);
          if (resp > v.worst_response) {
            v.worst_response = resp;
            if (resp > threshold) {
              v.out_block = i;
              v.in_block = j;
            }
          }
        }
      }
    }
  }
  v.pass = v.worst_response <= threshold;
  if (v.pass) v.out_block = v.in_block = -1;
  return v;
}

Classification classify(const BlockMap& F, std::span<const std::pair<Vec, Vec>> samples, const ClassifyOptions& opt) {
  const SpectralData& spec = F.spec();
  Classification c;
  c.constants = estimate_qsim_constants(spec, [&](const Vec& x) { return F.apply(x); }, samples);
  c.N = c.constants.N;

  const int probes = static_cast<int>(std::min<std::size_t>(samples.size(), static_cast<std::size_t>(opt.max_probes)));
  std::vector<Mat> diag0(spec.r());
  double t_ref = -1.0;
  double defect = 0.0;
  double offdiag = 0.0;
  for (int p = 0; p < probes; ++p) {
    const Mat J = F.expr().jacobian(samples[p].first, opt.rel_step);
    for (int i = 0; i < spec.r(); ++i) {
      const Mat D = J.block(spec.offset(i), spec.offset(i), spec.mult(i), spec.mult(i));
      if (p == 0) {
        diag0[i] = D;
        const Vec sv = Eigen::JacobiSVD<Mat>(D).singularValues();
        if (!(sv.minCoeff() > 0.0)) {
          defect = std::max(defect, 1.0);
          continue;
        }
        defect = std::max(defect, (sv.maxCoeff() - sv.minCoeff()) / sv.maxCoeff());
        const double ti = std::pow(std::exp(sv.array().log().mean()), 1.0 / spec.alpha(i));
        if (t_ref < 0.0) t_ref = ti;
        defect = std::max(defect, std::abs(ti - t_ref) / t_ref);
      } else {
        const double scale = 1.0 + diag0[i].cwiseAbs().maxCoeff();
        defect = std::max(defect, (D - diag0[i]).cwiseAbs().maxCoeff() / scale);
      }
      for (int j = i + 1; j < spec.r(); ++j) {
        const Mat O = J.block(spec.offset(i), spec.offset(j), spec.mult(i), spec.mult(j));
        offdiag = std::max(offdiag, O.cwiseAbs().maxCoeff() / (1.0 + diag0[i].cwiseAbs().maxCoeff()));
      }
    }
  }
  c.structure_defect = defect;
  const bool structured = probes > 0 && t_ref > 0.0 && defect <= opt.structure_tol;
  if (structured && offdiag <= opt.structure_tol && c.constants.K <= 1.0 + opt.sim_tol) {
    c.kind = MapClass::Sim;
    c.t = c.constants.N;
    c.K = 1.0;
  } else if (structured) {
    c.kind = MapClass::ASim;
    c.t = t_ref;
    c.K = c.constants.K;
  } else if (c.constants.min_ratio <= 1.0 && c.constants.max_ratio >= 1.0) {
    c.kind = MapClass::Bilip;
    c.K = std::max(c.constants.max_ratio, 1.0 / c.constants.min_ratio);
  } else {
    c.kind = MapClass::QSim;
    c.K = c.constants.K;
  }
  return c;
}

double holder_ratio(const BlockMap& F, double K, int probes, unsigned seed, double box) {
  const SpectralData& spec = F.spec();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-box, box);
  double worst = 0.0;
  Vec x(spec.n());
  for (int p = 0; p < probes; ++p) {
    for (int c = 0; c < spec.n(); ++c) x[c] = U(rng);
    const Vec fx = F.apply(x);
    for (int l = 1; l < spec.r(); ++l) {
      Vec x2 = x;
      for (int c = spec.offset(l); c < spec.offset(l) + spec.mult(l); ++c) x2[c] = U(rng);
      const double dl = (x2 - x).norm();
      if (dl == 0.0) continue;
      const Vec fx2 = F.apply(x2);
      for (int i = 0; i < l; ++i) {
        const double lhs = (fx.segment(spec.offset(i), spec.mult(i)) - fx2.segment(spec.offset(i), spec.mult(i))).norm();
        const double rhs = std::pow(K, spec.alpha(i)) * std::pow(dl, spec.alpha(i) / spec.alpha(l));
        worst = std::max(worst, lhs / rhs);
      }
    }
  }
  return worst;
}

double first_block_stretch(const BlockMap& F, const Vec& p, double rel_step) {
  const SpectralData& spec = F.spec();
  const Mat J = F.component(0).jacobian(p, rel_step);
  const Mat D = J.leftCols(spec.mult(0));
  const Vec sv = Eigen::JacobiSVD<Mat>(D).singularValues();
  return std::exp(sv.array().log().mean());
}

Vec stretch_hom(const std::vector<double>& stretches, const std::vector<Vec>& S, double tol) {
  if (stretches.size() != S.size() || S.empty()) throw InputError("stretch_hom: one spanning vector per factor");
  const auto k = S.front().size();
  Mat A(static_cast<Eigen::Index>(S.size()), k);
  Vec b(static_cast<Eigen::Index>(S.size()));
  for (std::size_t i = 0; i < S.size(); ++i) {
    if (S[i].size() != k) throw InputError("stretch_hom: spanning vectors differ in dimension");
    if (!(stretches[i] > 0.0)) throw DomainError("stretch_hom: stretches must be positive");
    A.row(static_cast<Eigen::Index>(i)) = S[i].transpose();
    b[static_cast<Eigen::Index>(i)] = std::log(stretches[i]);
  }
  Eigen::ColPivHouseholderQR<Mat> qr(A);
  if (qr.rank() < k) throw InputError("stretch_hom: S does not span");
  const Vec v = qr.solve(b);
  const double residual = (A * v - b).norm();
  if (residual > tol) {
    throw NotInUniformSubgroup("stretch_hom: log-stretches are not <S_i, v> for a common v (residual " +
                               std::to_string(residual) + ")");
  }
  return v;
}

Vec stretch_hom(const std::vector<ASimMap>& G, const std::vector<Vec>& S, double tol) {
  std::vector<double> t;
  for (const auto& g : G) t.push_back(g.stretch());
  return stretch_hom(t, S, tol);
}

std::vector<Mat> rotation_hom(const ASimMap& G) { return G.sim.A; }

double height_hom(const BoundaryPair& P) { return std::log(P.lower.stretch()); }

ReciprocityVerdict check_reciprocity(const BoundaryPair& P, int iterates, double tol) {
  ReciprocityVerdict v;
  v.log_sum = std::log(P.lower.stretch()) + std::log(P.upper.stretch());
  v.pass = std::abs(v.log_sum) <= tol;
  const double base = P.lower.stretch() * P.upper.stretch();
  for (int k = 1; k <= iterates; ++k) v.drift.push_back(std::pow(base, k));
  return v;
}

Vec RotationFamily::apply(const Vec& p) const {
  const int n1 = spec.mult(0);
  const Vec x = p.head(n1);
  const Vec y = p.tail(p.size() - n1);
  Vec out(p.size());
  out.head(n1) = std::pow(t, spec.alpha(0)) * A(y) * (x + B(y));
  out.tail(p.size() - n1) = g(y);
  return out;
}

RigidityWitness rotation_rigidity_witness(const RotationFamily& G, double K, double search_radius, int probes,
                                          unsigned seed, double gap_tol) {
  if (G.spec.r() < 2) throw InputError("rotation_rigidity_witness: need a quotient (r >= 2)");
  if (!G.A || !G.B || !G.g) throw InputError("rotation_rigidity_witness: family is not evaluable");
  const int n1 = G.spec.mult(0);
  const int m = G.spec.n() - n1;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-search_radius, search_radius);
  std::vector<Vec> ys;
  for (int k = 0; k < std::max(probes, 2); ++k) {
    Vec y(m);
    for (int c = 0; c < m; ++c) y[c] = U(rng);
    ys.push_back(y);
  }
  RigidityWitness w;
  w.threshold = K * K * G.t;
  for (std::size_t k = 1; k < ys.size(); ++k) {
    for (const std::size_t a : {std::size_t{0}, k - 1}) {
      const Mat diff = G.A(ys[a]) - G.A(ys[k]);
      Eigen::JacobiSVD<Mat> svd(diff, Eigen::ComputeFullV);
      const double gap = svd.singularValues()(0);
      if (gap <= gap_tol) continue;
      const Vec dir = svd.matrixV().col(0);
      w.y = ys[a];
      w.y2 = ys[k];
      w.gap = gap;
      const Vec By = G.B(w.y), By2 = G.B(w.y2);
      double s = 1.0;
      for (int it = 0; it < 400; ++it, s *= 2.0) {
        w.z = s * dir;
        w.p = Vec(G.spec.n());
        w.p2 = Vec(G.spec.n());
        w.p << w.z - By, w.y;
        w.p2 << w.z - By2, w.y2;
        const double base = distance_flat(G.spec, w.p, w.p2);
        if (base == 0.0) break;
        w.ratio = distance_flat(G.spec, G.apply(w.p), G.apply(w.p2)) / base;
        if (w.ratio > w.threshold) {
          w.found = true;
          return w;
        }
      }
    }
  }
  return RigidityWitness{false, {}, {}, {}, {}, {}, 0.0, 0.0, w.threshold};
}

}  // namespace solvrigid
