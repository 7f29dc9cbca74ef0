#include "doctest.h"

#include <cmath>

#include "latsch/examples.hpp"
#include "latsch/quadrature.hpp"
#include "latsch/spectral.hpp"

using namespace latsch;

namespace {
// shell-max of |V(x)| |x|^2 over integer radius band [R, R+1)
double shell_max(const Potential& V, int d, int R) {
  double mx = 0.0;
  ivec x(d, -(R + 1));
  double lo2 = double(R) * R, hi2 = double(R + 1) * (R + 1);
  while (true) {
    double r2 = 0.0;
    for (int c : x) r2 += double(c) * c;
    if (r2 >= lo2 && r2 < hi2) mx = std::max(mx, std::abs(V.at(x)) * r2);
    int j = 0;
    while (j < d && ++x[j] == R + 2) x[j++] = -(R + 1);
    if (j == d) break;
  }
  return mx;
}
}  // namespace

TEST_CASE("embedded example: defining identity holds at interior sites") {
  for (int d : {1, 2}) {
    ExampleInstance inst = embedded_example(d);
    CHECK(inst.energy == doctest::Approx(1.5 * d));
    CHECK(inst.energy > 0.0);
    CHECK(inst.energy < 4.5 * d);  // inside (0, e_max)
    BoxLattice box(d, d == 1 ? 40 : 12);
    auto rep = verify_example(inst, box);
    CHECK(rep.interior_residual <= 1e-12);
    CHECK(rep.full_residual > rep.interior_residual);
  }
}

TEST_CASE("embedded example: identity is energy-independent, decay is not") {
  // the ratio construction makes (h + V) psi = E psi for any E; only the
  // choice E = e(0) = d/2 yields a potential that decays like |x|^-2
  const int d = 2;
  ExampleInstance decaying = embedded_example(d, 0.5 * d);
  BoxLattice box(d, 12);
  CHECK(verify_example(decaying, box).interior_residual <= 1e-12);

  // decaying variant: shell-max of |V| |x|^2 settles to a constant
  double lo = 1e300, hi = 0.0;
  for (int R = 10; R <= 40; R += 5) {
    double m = shell_max(decaying.potential, d, R);
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  CHECK(hi / lo < 2.0);

  // classical-energy variant: |V| tends to the constant d, so |V| |x|^2 grows,
  // but consecutive shells stay within a factor (R+1)^2/R^2 < 2
  ExampleInstance classical = embedded_example(d);
  double prev = shell_max(classical.potential, d, 5);
  for (int R = 6; R <= 40; ++R) {
    double cur = shell_max(classical.potential, d, R);
    CHECK(cur / prev < 2.0);
    prev = cur;
  }
  CHECK(shell_max(classical.potential, d, 40) > 10.0 * shell_max(classical.potential, d, 5));
}

TEST_CASE("embedded example: residual decreases with box size, nearest eigenvalue") {
  ExampleInstance inst = embedded_example(2);
  double prev = 1e300;
  for (int l : {6, 9, 12}) {
    BoxLattice box(2, l);
    auto rep = verify_example(inst, box);
    CHECK(rep.full_residual < prev);
    prev = rep.full_residual;
  }
  BoxLattice box(2, 9);
  auto rep = verify_example(inst, box, true);
  // residual bound: some boxed eigenvalue lies within the full residual of E
  CHECK(rep.nearest_eig_dist >= 0.0);
  CHECK(rep.nearest_eig_dist <= rep.full_residual + 1e-12);
}

TEST_CASE("threshold example: construction facts") {
  CHECK_THROWS_AS(threshold_example(4), PreconditionError);
  ExampleInstance inst = threshold_example(5);
  CHECK(inst.energy == 0.0);
  CHECK(inst.potential.support_size() == 1);
  CHECK(inst.potential.at(ivec(5, 0)) < 0.0);
  double psi0 = inst.psi(ivec(5, 0));
  CHECK(psi0 > 0.0);
  // V(0) = -1/psi(0)
  CHECK(inst.potential.at(ivec(5, 0)) == doctest::Approx(-1.0 / psi0).epsilon(1e-12));
}

TEST_CASE("threshold example: h psi = delta_0 through the Bessel sampler") {
  ExampleInstance inst = threshold_example(5);
  const int d = 5;
  auto hpsi = [&](const ivec& x) {
    double acc = 0.0;
    for (const auto& [m, c] : inst.dispersion.coeffs()) {
      ivec y(d);
      for (int k = 0; k < d; ++k) y[k] = x[k] - m[k];
      acc += c.real() * inst.psi(y);
    }
    return acc;
  };
  CHECK(std::abs(hpsi(ivec(d, 0)) - 1.0) < 1e-8);
  CHECK(std::abs(hpsi({1, 0, 0, 0, 0})) < 1e-8);
  CHECK(std::abs(hpsi({2, 1, 0, -1, 0})) < 1e-8);
  CHECK(std::abs(hpsi({3, 2, 2, 1, 1})) < 1e-8);
}

TEST_CASE("threshold example: psi(0) against the adaptive cubature of 1/e") {
  ExampleInstance inst = threshold_example(5);
  double psi0 = inst.psi(ivec(5, 0));
  Dispersion lapl = laplacian_dispersion(5);
  CubatureOptions opts;
  opts.abs_tol = 1e-7 * std::pow(2 * pi, 5);
  opts.rel_tol = 2e-7;
  opts.max_evals = 60000000;
  opts.singular_point = Eigen::VectorXd::Zero(5);
  auto r = integrate_nd(
      [&](const Eigen::VectorXd& p) { return cplx(1.0 / lapl.eval(p)); },
      Eigen::VectorXd::Constant(5, -pi), Eigen::VectorXd::Constant(5, pi), opts);
  double direct = r.value.real() / std::pow(2 * pi, 5);
  CHECK(std::abs(psi0 - direct) < 2e-6);
}

TEST_CASE("threshold example: boxed residual decreases") {
  ExampleInstance inst = threshold_example(5);
  double prev = 1e300;
  for (int l : {2, 3, 4}) {
    BoxLattice box(5, l);
    auto rep = verify_example(inst, box);
    CHECK(rep.full_residual < prev);
    prev = rep.full_residual;
  }
}
