#include "solvrigid/fixtures.hpp"

#include <cmath>

namespace solvrigid::fixtures {

namespace {

Mat rot2(double a) {
  Mat R(2, 2);
  R << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return R;
}

FuncExpr shift_row(int n, int k, double c) {
  Mat row = Mat::Zero(1, n);
  row(0, k) = 1.0;
  return FuncExpr::affine(row, Vec::Constant(1, c));
}

}  // namespace

double piecewise_psi(double x) { return x < 0.0 ? 1.5 * x : x; }

GroupSample piecewise_1d_sample(int word_len) {
  const SpectralData spec({1.0, 2.0}, {1, 1});
  const FuncExpr x = FuncExpr::project(2, {0});
  const FuncExpr y = FuncExpr::project(2, {1});
  // knots of h: x + 1 left of -1, 3x/2 + 3/2 on [-1, 0], x + 3/2 right of 0
  const std::vector<double> xs{-2.0, -1.0, 0.0, 1.0}, hs{-1.0, 0.0, 1.5, 2.5};
  GroupSample G;
  G.spec = spec;
  G.generators.emplace_back(spec, FuncExpr::stack({FuncExpr::table1d(x, xs, hs), y}));
  G.generators.emplace_back(spec, FuncExpr::stack({FuncExpr::table1d(x, hs, xs), y}));
  G.inverse_index = {1, 0};
  G.quotient_stretch = {1.0, 1.0};
  G.word_len = word_len;
  G.uniform_K = 1.5;
  G.validate();
  return G;
}

double stretch_lambda(double y) {
  if (y <= -1.0 || y >= 0.0) return 1.0;
  return y < -0.5 ? 1.0 - 0.4 * (y + 1.0) : 0.8 + 0.4 * (y + 0.5);
}

GroupSample stretch_sample(int word_len) {
  const SpectralData spec({1.0, 2.0}, {1, 1});
  const FuncExpr x = FuncExpr::project(2, {0});
  const FuncExpr y = FuncExpr::project(2, {1});
  const FuncExpr lam = FuncExpr::table1d(y, {-2.0, -1.0, -0.5, 0.0, 1.0}, {1.0, 1.0, 0.8, 1.0, 1.0});
  // 1 / lambda(y - 1) is not piecewise linear; a fine table keeps it within ~5e-9
  std::vector<double> ys{-1.0}, rho{1.0};
  for (double u : uniform_nodes(0.0, 1.0, 4001)) {
    ys.push_back(u);
    rho.push_back(1.0 / stretch_lambda(u - 1.0));
  }
  ys.push_back(2.0);
  rho.push_back(1.0);
  const FuncExpr inv = FuncExpr::table1d(y, ys, rho);
  GroupSample G;
  G.spec = spec;
  G.generators.emplace_back(spec, FuncExpr::stack({FuncExpr::mul(lam, x), shift_row(2, 1, 1.0)}));
  G.generators.emplace_back(spec, FuncExpr::stack({FuncExpr::mul(inv, x), shift_row(2, 1, -1.0)}));
  G.inverse_index = {1, 0};
  G.quotient_stretch = {1.0, 1.0};
  G.word_len = word_len;
  G.uniform_K = 1.25;
  G.validate();
  return G;
}

RadialFixture affine_radial(int steps, double angle) {
  const SpectralData spec({1.0}, {2});
  Mat P(2, 2);
  P << 1.0, 0.6, 0.2, 1.0;
  const Mat Pinv = P.inverse();
  const Mat H = P * rot2(angle) * Pinv;
  RadialFixture f;
  f.sample.spec = spec;
  f.sample.generators = {BlockMap(spec, FuncExpr::linear(H)), BlockMap(spec, FuncExpr::linear(H.inverse())),
                         SimMap::dilation(spec, 0.5).to_blockmap(), SimMap::dilation(spec, 2.0).to_blockmap()};
  f.sample.inverse_index = {1, 0, 3, 2};
  f.sample.quotient_stretch = {1.0, 1.0, 0.5, 2.0};
  f.sample.word_len = 4;
  f.sample.uniform_K = (P.norm() * Pinv.norm());
  for (int i = 0; i < steps; ++i) f.escape.emplace_back(static_cast<std::size_t>(i + 1), 2);
  f.a = Pinv;
  return f;
}

RadialFixture nonlinear_radial(double eps, int steps, double angle) {
  RadialFixture f = affine_radial(steps, angle);
  const SpectralData& spec = f.sample.spec;
  const FuncExpr x1 = FuncExpr::project(2, {0});
  const FuncExpr x2 = FuncExpr::project(2, {1});
  const BlockMap phi(spec, FuncExpr::stack({x1 + FuncExpr::oscillation(x2, eps, 1.0, 0.0), x2}));
  const BlockMap phi_inv(spec, FuncExpr::stack({x1 + FuncExpr::oscillation(x2, -eps, 1.0, 0.0), x2}));
  for (auto& g : f.sample.generators) g = phi.compose(g.compose(phi_inv));
  Mat Dphi0(2, 2);
  Dphi0 << 1.0, eps, 0.0, 1.0;
  f.a = f.a * Dphi0.inverse();
  f.sample.uniform_K *= (1.0 + eps) * (1.0 + eps);
  return f;
}

RotationFamily rotating_family() {
  RotationFamily G;
  G.spec = SpectralData({1.0, 2.0}, {2, 1});
  G.t = 1.0;
  G.A = [](const Vec& y) { return rot2(y[0]); };
  G.B = [](const Vec&) { return Vec(Vec::Zero(2)); };
  G.g = [](const Vec& y) { return y; };
  return G;
}

RotationFamily constant_rotation_family(double angle) {
  RotationFamily G = rotating_family();
  G.A = [angle](const Vec&) { return rot2(angle); };
  G.B = [](const Vec& y) {
    Vec b(2);
    b << 0.5 * y[0], -0.25;
    return b;
  };
  return G;
}

AlmostTranslation sine_translation(double c) {
  const SpectralData spec({1.0, 2.0}, {1, 1});
  const double K = 1.0 + std::sqrt(2.0) / std::abs(std::sin(0.5 * c));
  return AlmostTranslation(spec,
                           {FuncExpr::oscillation(FuncExpr::project(2, {1}), 1.0, 1.0, 0.0),
                            FuncExpr::constant(2, Vec::Constant(1, c))},
                           K);
}

RootFixture root_r1() {
  const SpectralData spec({1.0}, {1});
  RootFixture f;
  f.generators = {ExactTranslation::translation(spec, {{Q(1)}})};
  f.gamma_p = ExactTranslation::translation(spec, {{Q(5, 2)}});
  f.l = 2;
  return f;
}

PeriodicPL triangle_wave() {
  return PeriodicPL({Q(0), Q(1, 4), Q(1, 2), Q(3, 4)}, {{Q(0)}, {Q(1, 4)}, {Q(0)}, {Q(-1, 4)}});
}

RootFixture root_r2(long e1, long e2) {
  const SpectralData spec({1.0, 2.0}, {1, 1});
  const double K = 2.0;
  const QVec w{Q(0), Q(1)};
  const PeriodicPL Qw = triangle_wave();
  const PeriodicPL Pw = Qw.plus(Qw.shifted(Q(1, 4)));
  RootFixture f;
  f.generators = {
      ExactTranslation(spec, {ExactBlock{{Q(1)}, {}}, ExactBlock{{Q(0)}, {}}}, K),
      ExactTranslation(spec, {ExactBlock{{Q(0)}, {PLTerm{w, Pw}}}, ExactBlock{{Q(1, 2)}, {}}}, K),
  };
  f.gamma_p = ExactTranslation(spec, {ExactBlock{{Q(1, 2)}, {PLTerm{w, Qw}}}, ExactBlock{{Q(1, 4)}, {}}}, K)
                  .compose(f.generators[0].power(e1))
                  .compose(f.generators[1].power(e2));
  f.l = 2;
  return f;
}

}  // namespace solvrigid::fixtures
