#include "doctest.h"

#include <cmath>
#include <random>

#include "latsch/torus.hpp"

using namespace latsch;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd p(v.size());
  int i = 0;
  for (double x : v) p[i++] = x;
  return p;
}

Eigen::VectorXd random_point(int d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-pi, pi);
  Eigen::VectorXd p(d);
  for (int i = 0; i < d; ++i) p[i] = u(rng);
  return p;
}

// central-difference oracle for the gradient
Eigen::VectorXd fd_grad(const Dispersion& e, const Eigen::VectorXd& p, double h) {
  Eigen::VectorXd g(p.size());
  for (int k = 0; k < p.size(); ++k) {
    Eigen::VectorXd a = p, b = p;
    a[k] += h;
    b[k] -= h;
    g[k] = (e.eval(a) - e.eval(b)) / (2 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("builtin coefficient tables") {
  Dispersion lapl = laplacian_dispersion(1);
  CHECK(lapl.range() == 1);
  CHECK(lapl.coeff({0}) == cplx(2.0));
  CHECK(lapl.coeff({1}) == cplx(-1.0));
  CHECK(lapl.coeff({-1}) == cplx(-1.0));

  Dispersion emb = embedded_dispersion(1);
  CHECK(emb.range() == 2);
  CHECK(emb.coeff({0}) == cplx(1.5));
  CHECK(emb.coeff({1}) == cplx(-1.0));
  CHECK(emb.coeff({2}) == cplx(0.5));
  CHECK(emb.coeff({-2}) == cplx(0.5));
}

TEST_CASE("eval at distinguished points") {
  for (int d : {1, 2, 3}) {
    Dispersion lapl = laplacian_dispersion(d);
    CHECK(lapl.eval(Eigen::VectorXd::Zero(d)) == doctest::Approx(0.0).epsilon(1e-14));
    Eigen::VectorXd corner = Eigen::VectorXd::Constant(d, pi);
    CHECK(lapl.eval(corner) == doctest::Approx(4.0 * d));
    // substitution oracle: 3d/2 - sum(2 - 1) = d/2
    Dispersion emb = embedded_dispersion(d);
    CHECK(emb.eval(Eigen::VectorXd::Zero(d)) == doctest::Approx(0.5 * d));
  }
}

TEST_CASE("loader rejects asymmetric coefficients") {
  CHECK_THROWS_AS(Dispersion::from_coeffs(1, {{{1}, cplx(1.0)}}), PreconditionError);
  CHECK_THROWS_AS(Dispersion::from_coeffs(1, {{{1}, cplx(0, 1)}, {{-1}, cplx(0, 1)}}),
                  PreconditionError);
  // conjugate-symmetric complex pair is fine and real-valued
  Dispersion e = Dispersion::from_coeffs(1, {{{1}, cplx(0, 1)}, {{-1}, cplx(0, -1)}});
  std::mt19937_64 rng(7);
  for (int i = 0; i < 20; ++i) {
    auto p = random_point(1, rng);
    CHECK(std::abs(e.eval_complex(p).imag()) < 1e-14);
  }
}

TEST_CASE("evaluation matches the complex sum with tiny imaginary part") {
  std::mt19937_64 rng(11);
  for (int d : {1, 2, 3}) {
    Dispersion e = embedded_dispersion(d);
    for (int i = 0; i < 50; ++i) {
      auto p = random_point(d, rng);
      cplx z = e.eval_complex(p);
      CHECK(std::abs(z.imag()) < 1e-13);
      CHECK(e.eval(p) == doctest::Approx(z.real()).epsilon(1e-13));
    }
  }
}

TEST_CASE("grad and hessian match finite differences at order >= 1.9") {
  std::mt19937_64 rng(3);
  Dispersion e = embedded_dispersion(2);
  auto p = random_point(2, rng);
  double h1 = 1e-3, h2 = 5e-4;
  double err1 = (fd_grad(e, p, h1) - e.grad(p)).norm();
  double err2 = (fd_grad(e, p, h2) - e.grad(p)).norm();
  double order = std::log(err1 / err2) / std::log(h1 / h2);
  CHECK(order > 1.9);

  // hessian column vs finite differences of grad
  for (int k = 0; k < 2; ++k) {
    Eigen::VectorXd a = p, b = p;
    a[k] += h2;
    b[k] -= h2;
    Eigen::VectorXd col = (e.grad(a) - e.grad(b)) / (2 * h2);
    CHECK((col - e.hessian(p).col(k)).norm() < 1e-6);
  }
}

TEST_CASE("grad_squared closed forms and grid identity") {
  SUBCASE("d=1 laplacian: |e'|^2 = 2 - 2 cos 2p") {
    Dispersion w = grad_squared(laplacian_dispersion(1));
    CHECK(w.coeff({0}).real() == doctest::Approx(2.0));
    CHECK(w.coeff({2}).real() == doctest::Approx(-1.0));
    CHECK(w.coeff({-2}).real() == doctest::Approx(-1.0));
    CHECK(w.range() == 2);
  }
  SUBCASE("constant dispersion maps to zero") {
    Dispersion c = Dispersion::from_coeffs(2, {{{0, 0}, cplx(3.0)}});
    CHECK(grad_squared(c).coeffs().empty());
  }
  SUBCASE("pointwise match on a 64^2 grid") {
    Dispersion e = embedded_dispersion(2);
    Dispersion w = grad_squared(e);
    CHECK(w.range() <= 2 * e.range());
    for (int i = 0; i < 64; ++i)
      for (int j = 0; j < 64; ++j) {
        Eigen::VectorXd p = vec({-pi + i * 2 * pi / 64, -pi + j * 2 * pi / 64});
        CHECK(std::abs(w.eval(p) - e.grad(p).squaredNorm()) < 1e-12);
      }
  }
  SUBCASE("1000 random points") {
    std::mt19937_64 rng(17);
    Dispersion e = embedded_dispersion(3);
    Dispersion w = grad_squared(e);
    for (int i = 0; i < 1000; ++i) {
      auto p = random_point(3, rng);
      CHECK(std::abs(w.eval(p) - e.grad(p).squaredNorm()) < 1e-12);
    }
  }
}

TEST_CASE("critical report: laplacian d=2 and d=3") {
  for (int d : {2, 3}) {
    CriticalReport rep = critical_report(laplacian_dispersion(d));
    CHECK(rep.complete);
    CHECK(int(rep.points.size()) == (1 << d));
    REQUIRE(int(rep.thresholds.size()) == d + 1);
    for (int k = 0; k <= d; ++k) CHECK(rep.thresholds[k] == doctest::Approx(4.0 * k).epsilon(1e-10));
    CHECK(rep.is_morse);
    CHECK(rep.min_curvature == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
    CHECK(rep.e_min == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(rep.e_max == doctest::Approx(4.0 * d));
    CHECK(rep.euler_sum == 0);
  }
}

TEST_CASE("critical report: embedded dispersion d=1 extremes") {
  CriticalReport rep = critical_report(embedded_dispersion(1));
  CHECK(rep.e_max == doctest::Approx(4.5));
  CHECK(rep.e_min == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rep.is_morse);
  CHECK(rep.euler_sum == 0);
}

TEST_CASE("condition (M) certification for builtins") {
  for (int d : {1, 2}) {
    CHECK(certify_morse(laplacian_dispersion(d)).holds);
    CHECK(certify_morse(embedded_dispersion(d)).holds);
  }
}

TEST_CASE("Crit(e) reappears in critical report of |grad e|^2 with value 0") {
  Dispersion e = embedded_dispersion(2);
  Dispersion w = grad_squared(e);
  CriticalReport re = critical_report(e);
  CriticalReport rw = critical_report(w);
  for (const auto& cp : re.points) {
    bool matched = false;
    for (const auto& cq : rw.points)
      if (torus_dist(cp.p, cq.p) < 1e-6 && std::abs(cq.value) < 1e-10) matched = true;
    CHECK(matched);
  }
}

TEST_CASE("cm_norm closed forms") {
  Dispersion lapl = laplacian_dispersion(1);
  CHECK(cm_norm(lapl, 0) == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(cm_norm(lapl, 1) == doctest::Approx(2.0).epsilon(1e-9));
  // termwise coefficient bound sum |m|^2 |c(m)| dominates the true C^2 norm
  Dispersion emb = embedded_dispersion(1);
  double c2 = cm_norm(emb, 2);
  double bound = 0.0;
  for (const auto& [m, c] : emb.coeffs()) bound += double(m[0] * m[0]) * std::abs(c);
  CHECK(c2 <= bound + 1e-9);
  CHECK(c2 > 0.0);
  // grid-max oracle
  double mx = 0.0;
  Dispersion d2 = emb.derivative({2});
  for (int i = 0; i < 20001; ++i) {
    Eigen::VectorXd p(1);
    p[0] = -pi + i * 2 * pi / 20001;
    mx = std::max(mx, std::abs(d2.eval(p)));
  }
  CHECK(c2 == doctest::Approx(mx).epsilon(1e-6));
}

TEST_CASE("pair dispersion") {
  SUBCASE("K = 0 doubles the dispersion") {
    Dispersion e = laplacian_dispersion(2);
    auto [ek, E0] = pair_dispersion(e, Eigen::VectorXd::Zero(2));
    CHECK(E0 == doctest::Approx(0.0).epsilon(1e-10));
    std::mt19937_64 rng(5);
    for (int i = 0; i < 50; ++i) {
      auto p = random_point(2, rng);
      CHECK(ek.eval(p) == doctest::Approx(2.0 * e.eval(p)).epsilon(1e-12));
    }
  }
  SUBCASE("d=1 laplacian at K = pi collapses to the zero dispersion") {
    Dispersion e = laplacian_dispersion(1);
    auto [ek, E0] = pair_dispersion(e, vec({pi}));
    // dense-grid minimization oracle for E0
    double mn = 1e300;
    for (int i = 0; i < 4096; ++i) {
      Eigen::VectorXd p(1);
      p[0] = -pi + i * 2 * pi / 4096;
      Eigen::VectorXd q(1);
      q[0] = pi - p[0];
      mn = std::min(mn, e.eval(p) + e.eval(q));
    }
    CHECK(E0 == doctest::Approx(mn).epsilon(1e-9));
    CHECK(E0 == doctest::Approx(4.0));
    std::mt19937_64 rng(6);
    for (int i = 0; i < 20; ++i) CHECK(std::abs(ek.eval(random_point(1, rng))) < 1e-10);
  }
  SUBCASE("minimum 0 for random K") {
    Dispersion e = embedded_dispersion(2);
    std::mt19937_64 rng(23);
    for (int i = 0; i < 20; ++i) {
      Eigen::VectorXd K = random_point(2, rng);
      auto [ek, E0] = pair_dispersion(e, K);
      CriticalReport rep = critical_report(ek);
      CHECK(std::abs(rep.e_min) < 1e-8);
      // direct check that the shifted minimum is nonnegative on a grid
      double mn = 1e300;
      for (int a = 0; a < 48; ++a)
        for (int b = 0; b < 48; ++b)
          mn = std::min(mn, ek.eval(vec({-pi + a * pi / 24, -pi + b * pi / 24})));
      CHECK(mn > -1e-8);
    }
  }
}

TEST_CASE("dimension mismatch raises") {
  Dispersion e = laplacian_dispersion(2);
  CHECK_THROWS_AS(e.eval(vec({0.0})), PreconditionError);
}

TEST_CASE("euler alternating sum vanishes for certified dispersions") {
  for (int d : {1, 2}) {
    auto cert = certify_morse(embedded_dispersion(d));
    CHECK(cert.dispersion_report.euler_sum == 0);
    CHECK(cert.grad_squared_report.euler_sum == 0);
  }
}
