#include "doctest.h"

#include <cmath>
#include <random>

#include "latsch/lattice.hpp"
#include "latsch/quadrature.hpp"

using namespace latsch;

TEST_CASE("box enumeration is lexicographic, stable, and invertible") {
  BoxLattice box(3, 2);
  CHECK(box.size() == 125);
  CHECK(box.site(0) == ivec{-2, -2, -2});
  CHECK(box.site(124) == ivec{2, 2, 2});
  for (long long i = 0; i < box.size(); ++i) CHECK(box.index(box.site(i)) == i);
  CHECK(box.contains({0, 0, 0}));
  CHECK(!box.contains({0, 3, 0}));
  long long prev = box.index({0, 0, 0});
  CHECK(box.index({0, 0, 1}) == prev + 1);
}

TEST_CASE("potential basics") {
  Potential V = Potential::finite(2, {{{1, 0}, 2.0}, {{0, 0}, -1.0}, {{1, 0}, 0.5}});
  CHECK(V.support_size() == 2);
  CHECK(V.at({1, 0}) == 2.5);
  CHECK(V.at({0, 0}) == -1.0);
  CHECK(V.at({5, 5}) == 0.0);

  Potential W = V.translated({1, 0});  // W(x) = V(x + (1,0))
  CHECK(W.at({0, 0}) == 2.5);
  CHECK(W.support_size() == 2);

  Potential P = Potential::family(3, "power", {{"amplitude", 2.0}, {"beta", 3.0}}, 10.0);
  CHECK(P.at({0, 0, 0}) == 2.0);
  CHECK(P.at({3, 0, 0}) == doctest::Approx(2.0 / 64.0));
  CHECK(P.at({20, 0, 0}) == 0.0);  // truncated
  CHECK(P.scaled(3.0).at({0, 0, 0}) == doctest::Approx(6.0));
}

TEST_CASE("hopping matrix closed forms") {
  SUBCASE("d=1 laplacian tridiagonal") {
    BoxLattice box(1, 2);
    auto h = hopping_matrix(laplacian_dispersion(1), box);
    for (int i = 0; i < 5; ++i) CHECK(h.mat(i, i).real() == doctest::Approx(2.0));
    for (int i = 0; i + 1 < 5; ++i) {
      CHECK(h.mat(i, i + 1).real() == doctest::Approx(-1.0));
      CHECK(h.mat(i + 1, i).real() == doctest::Approx(-1.0));
    }
    CHECK(std::abs(h.mat(0, 2)) == 0.0);
  }
  SUBCASE("d=1 embedded pentadiagonal (1/2, -1, 3/2, -1, 1/2)") {
    BoxLattice box(1, 3);
    auto h = hopping_matrix(embedded_dispersion(1), box);
    CHECK(h.mat(3, 3).real() == doctest::Approx(1.5));
    CHECK(h.mat(3, 4).real() == doctest::Approx(-1.0));
    CHECK(h.mat(3, 5).real() == doctest::Approx(0.5));
    CHECK(h.mat(3, 2).real() == doctest::Approx(-1.0));
    CHECK(h.mat(3, 1).real() == doctest::Approx(0.5));
  }
  SUBCASE("finite range and Toeplitz property") {
    BoxLattice box(2, 3);
    Dispersion e = embedded_dispersion(2);
    auto h = hopping_matrix(e, box);
    for (long long i = 0; i < box.size(); ++i)
      for (long long j = 0; j < box.size(); ++j) {
        ivec x = box.site(i), y = box.site(j);
        ivec diff{x[0] - y[0], x[1] - y[1]};
        if (norm_inf(diff) > e.range()) CHECK(std::abs(h.mat(i, j)) == 0.0);
        // entries depend only on x - y
        CHECK(h.mat(i, j) == e.coeff(diff));
      }
  }
}

TEST_CASE("conjugate operator") {
  SUBCASE("constant dispersion gives A = 0") {
    Dispersion c = Dispersion::from_coeffs(2, {{{0, 0}, cplx(5.0)}});
    BoxLattice box(2, 2);
    auto A = conjugate_operator(c, box);
    CHECK(A.mat.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("columns match the dense matrix and are Hermitian-consistent") {
    Dispersion e = embedded_dispersion(2);
    BoxLattice box(2, 3);
    auto A = conjugate_operator(e, box);
    check_hermitian(A);
    for (const ivec& x : {ivec{0, 0}, ivec{2, -1}, ivec{-3, 3}}) {
      Eigen::VectorXcd g = conjugate_column(e, box, x);
      CHECK((g - A.mat.col(box.index(x))).cwiseAbs().maxCoeff() < 1e-14);
    }
    // apply_conjugate agrees with the dense product
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n01;
    Eigen::VectorXcd psi(box.size());
    for (long long i = 0; i < box.size(); ++i) psi[i] = cplx(n01(rng), n01(rng));
    Eigen::VectorXcd a = apply_conjugate(e, box, psi);
    Eigen::VectorXcd b = A.mat * psi;
    CHECK((a - b).norm() < 1e-12 * b.norm());
  }
  SUBCASE("matrix elements match the Fourier quadrature of g_x") {
    // A_{yx} = int e^{ipy} [ <x, grad e(p)> + (i/2) Lap e(p) ] e^{-ipx} dmu*
    Dispersion e = laplacian_dispersion(1);
    BoxLattice box(1, 2);
    auto A = conjugate_operator(e, box);
    for (int xi = -2; xi <= 2; ++xi)
      for (int yi = -2; yi <= 2; ++yi) {
        auto integrand = [&](double p) {
          Eigen::VectorXd q(1);
          q[0] = p;
          double ge = e.grad(q)[0];
          double lap = e.hessian(q)(0, 0);
          cplx gx = (cplx(xi * ge) + cplx(0.0, 0.5) * lap) * std::exp(cplx(0.0, -p * xi));
          return std::exp(cplx(0.0, p * yi)) * gx;
        };
        auto r = integrate_1d(integrand, -pi, pi, 1e-12);
        cplx expect = r.value / (2.0 * pi);
        CHECK(std::abs(A.mat(box.index({yi}), box.index({xi})) - expect) < 1e-10);
      }
  }
  SUBCASE("column norms obey a linear bound in |x|") {
    Dispersion e = laplacian_dispersion(2);
    BoxLattice box(2, 6);
    double worst = 0.0;
    for (long long i = 0; i < box.size(); ++i) {
      ivec x = box.site(i);
      double n = conjugate_column(e, box, x).norm();
      worst = std::max(worst, n / (1.0 + norm2(x)));
    }
    // coefficient bound: |A_{yx}| <= sum |e_m| |m| (|x| + |m|/2), crude C
    double C = 0.0;
    for (const auto& [m, c] : e.coeffs()) C += std::abs(c) * norm2(m) * (1.0 + norm2(m));
    CHECK(worst <= 4.0 * std::max(C, 1.0));
  }
}

TEST_CASE("commutator i[V,A]") {
  Dispersion e = embedded_dispersion(2);
  BoxLattice box(2, 5);
  SUBCASE("zero potential gives the zero operator") {
    auto C = commutator_vA(Potential::zero(2), e, box);
    CHECK(C.mat.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("matches direct i(VA - AV) on interior sites and rank bound") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_int_distribution<int> site(-2, 2);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<std::pair<ivec, double>> vals;
      for (int s = 0; s < 3; ++s) vals.push_back({{site(rng), site(rng)}, u(rng)});
      Potential V = Potential::finite(2, vals);
      auto C = commutator_vA(V, e, box);
      check_hermitian(C);
      auto A = conjugate_operator(e, box);
      // direct product with diagonal V
      Eigen::VectorXd vd(box.size());
      for (long long i = 0; i < box.size(); ++i) vd[i] = V.at(box.site(i));
      Eigen::MatrixXcd direct =
          cplx(0, 1) * (vd.asDiagonal() * A.mat - A.mat * vd.asDiagonal());
      int margin = 2 * e.range();
      double scale = direct.cwiseAbs().maxCoeff();
      for (long long i = 0; i < box.size(); ++i)
        for (long long j = 0; j < box.size(); ++j) {
          if (!box.interior(box.site(i), margin) || !box.interior(box.site(j), margin)) continue;
          CHECK(std::abs(C.mat(i, j) - direct(i, j)) <= 1e-10 * std::max(scale, 1.0));
        }
      // rank <= 2 |supp V|
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(C.mat);
      int rank = 0;
      for (int k = 0; k < svd.singularValues().size(); ++k)
        if (svd.singularValues()[k] > 1e-10 * svd.singularValues()[0]) ++rank;
      CHECK(rank <= 2 * int(V.support_size()));
    }
  }
}

TEST_CASE("commutator i[h,A] is the |grad e|^2 multiplier") {
  Dispersion e = laplacian_dispersion(1);
  BoxLattice box(1, 6);
  auto W = commutator_hA(e, box);
  SUBCASE("d=1 laplacian entries: diagonal 2, offset-2 entries -1") {
    long long c = box.index({0});
    CHECK(W.mat(c, c).real() == doctest::Approx(2.0));
    CHECK(W.mat(c, box.index({2})).real() == doctest::Approx(-1.0));
    CHECK(W.mat(c, box.index({-2})).real() == doctest::Approx(-1.0));
    CHECK(std::abs(W.mat(c, box.index({1}))) == 0.0);
  }
  SUBCASE("equals hopping_matrix(grad_squared(e)) entrywise") {
    auto H = hopping_matrix(grad_squared(e), box);
    CHECK((W.mat - H.mat).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("compression positivity") {
    Dispersion e2 = embedded_dispersion(2);
    BoxLattice box2(2, 6);
    auto W2 = commutator_hA(e2, box2);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(W2.mat);
    double lo = es.eigenvalues().minCoeff();
    double hi = es.eigenvalues().maxCoeff();
    CHECK(lo >= -1e-10 * hi);
  }
  SUBCASE("interior identity i(hA - Ah) = h(|grad e|^2)") {
    Dispersion e2 = embedded_dispersion(1);
    BoxLattice box2(1, 8);
    auto h = hopping_matrix(e2, box2);
    auto A = conjugate_operator(e2, box2);
    auto W2 = commutator_hA(e2, box2);
    Eigen::MatrixXcd direct = cplx(0, 1) * (h.mat * A.mat - A.mat * h.mat);
    int margin = 2 * e2.range();
    for (long long i = 0; i < box2.size(); ++i)
      for (long long j = 0; j < box2.size(); ++j) {
        if (!box2.interior(box2.site(i), margin) || !box2.interior(box2.site(j), margin))
          continue;
        CHECK(std::abs(direct(i, j) - W2.mat(i, j)) < 1e-12);
      }
  }
}

TEST_CASE("hamiltonian assembly and spectrum envelope") {
  SUBCASE("zero potential reduces to hopping") {
    BoxLattice box(2, 3);
    Dispersion e = laplacian_dispersion(2);
    auto H = hamiltonian(e, Potential::zero(2), box);
    auto h = hopping_matrix(e, box);
    CHECK((H.mat - h.mat).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("free spectrum within [0, 4d]") {
    BoxLattice box(2, 5);
    auto H = hamiltonian(laplacian_dispersion(2), Potential::zero(2), box);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H.mat);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
    CHECK(es.eigenvalues().maxCoeff() <= 8.0 + 1e-12);
  }
  SUBCASE("single-site deep well binds exactly one state, d=3") {
    BoxLattice box(3, 5);
    auto H = hamiltonian(laplacian_dispersion(3), Potential::delta(3, -10.0), box);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H.mat);
    int below = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
      if (es.eigenvalues()[i] < -1e-8) ++below;
    CHECK(below == 1);
  }
}

TEST_CASE("fourier_vector") {
  SUBCASE("f == 1 gives delta_0") {
    BoxLattice box(2, 2);
    auto psi = fourier_vector([](const Eigen::VectorXd&) { return cplx(1.0); }, box, 1e-10);
    for (long long i = 0; i < box.size(); ++i) {
      double expect = (box.site(i) == ivec{0, 0}) ? 1.0 : 0.0;
      CHECK(std::abs(psi[i] - expect) < 1e-9);
    }
  }
  SUBCASE("f = dispersion gives its coefficients") {
    BoxLattice box(2, 2);
    Dispersion e = embedded_dispersion(2);
    auto psi = fourier_vector([&](const Eigen::VectorXd& p) { return cplx(e.eval(p)); }, box,
                              1e-10);
    for (long long i = 0; i < box.size(); ++i) {
      // int e(p) e^{ipx} dmu = ehat(-x) = conj-symmetric = ehat(x) here
      CHECK(std::abs(psi[i] - e.coeff(negate(box.site(i)))) < 1e-9);
    }
  }
}
