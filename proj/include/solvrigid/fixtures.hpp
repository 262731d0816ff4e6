#pragma once

#include "solvrigid/blockmap.hpp"
#include "solvrigid/exact.hpp"
#include "solvrigid/mapalg.hpp"
#include "solvrigid/tukia.hpp"

#include <vector>

namespace solvrigid::fixtures {

/// alpha = [1, 2], n = [1, 1]. One generator h(x, y) = (psi^{-1}(psi(x) + 3/2), y) and its
/// inverse, with psi(x) = 3x/2 for x < 0 and x for x >= 0. Normalized derivatives of
/// words are psi'(x) / psi'(w(x)), so the sup is psi'(x) and the uniform constant is 3/2.
GroupSample piecewise_1d_sample(int word_len = 12);
/// psi itself, the exact conjugator for the sample above.
double piecewise_psi(double x);

/// alpha = [1, 2], n = [1, 1]. G(x, y) = (lambda(y) x, y + 1) and its inverse, where lambda
/// is 1 off (-1, 0) and dips to 4/5 at y = -1/2. Stretch 1 in the quotient.
GroupSample stretch_sample(int word_len = 12);
double stretch_lambda(double y);

/// alpha = [1], n = [2]: H = P R P^{-1}, contraction delta_{1/2}, and inverses.
/// Generators: 0 = H, 1 = H^{-1}, 2 = delta_{1/2}, 3 = delta_2.
struct RadialFixture {
  GroupSample sample;
  std::vector<std::vector<int>> escape;  // escape[i] = delta_{1/2}^{i+1}
  Mat a;                                 // normalizing first-block map
};
RadialFixture affine_radial(int steps = 12, double angle = 0.7);
/// Same generators conjugated by phi(x) = (x_1 + eps sin x_2, x_2); a = D phi(0)^{-1}.
RadialFixture nonlinear_radial(double eps = 0.3, int steps = 12, double angle = 0.7);

/// alpha = [1, 2], n = [2, 1]: A_y = rotation by y (y-dependent) or by a fixed angle.
RotationFamily rotating_family();
RotationFamily constant_rotation_family(double angle);

/// alpha = [1, 2], n = [1, 1]: B_1 = sin(x_2), B_2 = c, with the uniform certificate
/// K = 1 + sqrt(2) / |sin(c / 2)| valid for every power of the map.
AlmostTranslation sine_translation(double c);

struct RootFixture {
  std::vector<ExactTranslation> generators;
  ExactTranslation gamma_p;
  long l = 2;
};
/// alpha = [1]: gamma_1 = +1, gamma_p = +5/2, l = 2.
RootFixture root_r1();
/// alpha = [1, 2], n = [1, 1]: gamma_1 = (x_1 + 1, x_2), gamma_2 = (x_1 + P(x_2), x_2 + 1/2),
/// gamma_p = (x_1 + 1/2 + Q(x_2), x_2 + 1/4) with Q a zero-mean triangle wave,
/// Q(s + 1/2) = -Q(s), and P(s) = Q(s) + Q(s + 1/4), so gamma_p^2 = gamma_1 gamma_2.
/// Uniform certificate K = 2. Nonzero e1, e2 replace gamma_p by gamma_p gamma_1^{e1} gamma_2^{e2}.
RootFixture root_r2(long e1 = 0, long e2 = 0);
/// The triangle wave Q of root_r2 as an exact profile.
PeriodicPL triangle_wave();

}  // namespace solvrigid::fixtures
