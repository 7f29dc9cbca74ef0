#pragma once

#include <functional>
#include <optional>

#include "latsch/lattice.hpp"
#include "latsch/torus.hpp"

namespace latsch {

struct IntegralResult {
  cplx value = 0.0;
  double abs_error_estimate = 0.0;
  long subdivisions = 0;
  bool converged = false;
};

// Adaptive Gauss-Kronrod 7/15 on [a,b].
IntegralResult integrate_1d(const std::function<cplx(double)>& f, double a, double b,
                            double abs_tol, long max_intervals = 100000);

// Adaptive cubature over an axis-aligned box: Genz-Malik 7(5) embedded rule
// for dim >= 2, Gauss-Kronrod for dim 1; bisection of the worst region along
// the largest fourth-difference axis. A declared singular point is pushed to
// region corners before any evaluation, so nodes never hit it.
struct CubatureOptions {
  double abs_tol = 1e-9;
  double rel_tol = 0.0;
  long max_evals = 20000000;
  std::optional<Eigen::VectorXd> singular_point;
};
IntegralResult integrate_nd(const std::function<cplx(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                            const CubatureOptions& opts = {});

// Complex trigonometric polynomial (no realness constraint); chi inputs for
// the Cauchy-type torus integrals.
struct TrigPoly {
  int dim = 0;
  std::vector<std::pair<ivec, cplx>> coeffs;

  static TrigPoly one(int dim) { return {dim, {{ivec(dim, 0), cplx(1.0)}}}; }
  static TrigPoly monomial(const ivec& m, cplx c = 1.0) { return {int(m.size()), {{m, c}}}; }
  static TrigPoly from(const Dispersion& e) { return {e.dim(), e.coeffs()}; }
  cplx eval(const Eigen::VectorXd& p) const;
  // coefficient-sum bound on max_{|n|<=order} sup |d^n chi|
  double cm_envelope(int order) const;
};

// int chi(p) / (z - e(p)) dmu*(p), Im z != 0, by adaptive cubature with
// refinement concentrating where e(p) is close to Re z. Honest budget:
// converged=false when the subdivision budget is exhausted.
IntegralResult singular_torus_integral(const std::function<cplx(const Eigen::VectorXd&)>& chi,
                                       const Dispersion& e, cplx z, double tol,
                                       long max_evals = 20000000);

// Same integral for trig-polynomial chi: the innermost axis is integrated
// exactly by residues of the rational form in w = e^{iq}; remaining axes by
// adaptive cubature. Cost is uniform in Im z down to 1e-6 and below.
IntegralResult torus_cauchy_integral(const Dispersion& e, const TrigPoly& chi, cplx z,
                                     double tol, long max_evals = 20000000);

// ---- model integrals on balls/slabs ------------------------------------

// Scalar field with gradient on a ball/product-ball domain; f must vanish
// near the domain boundary for L2/L3 (the reductions assume compact support).
struct BallField {
  std::function<double(const Eigen::VectorXd&)> f;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;
};

// grid-max estimate of max(sup|f|, sup_k |d_k f|) over [-r,r]^dim
double c1_norm(const BallField& field, int dim, double r, int grid_n = 17);

// int_{B_{d-1}} d^{d-1}y int_{-r}^{r} dx f(x,y) / (ib - x)
cplx model_integral_L1(const BallField& f, int d, double b, double r = 0.5, double tol = 1e-10);

// int_{B_d(r)} f(x) / (a + ib - x^2) d^d x via spherical reduction and the
// ln/arctan integration-by-parts forms.
cplx model_integral_L2(const BallField& f, double a, double b, int d, double r = 0.5,
                       double tol = 1e-10);

// int_{B_{d-m}} int_{B_m} f(x,y) / (a + ib - x^2 + y^2) via double spherical
// reduction and the s(1+u), s(1-u) coordinate change (Jacobian 2s).
cplx model_integral_L3(const BallField& f, double a, double b, int d, int m, double r = 0.5,
                       double tol = 1e-9);

// ---- uniform-boundedness scans ------------------------------------------

struct BoundScanPoint {
  double a = 0.0;  // Re z for the torus case
  double b = 0.0;  // Im z
  double value_abs = 0.0;
  double envelope = 0.0;
  double ratio = 0.0;
};

struct BoundScan {
  std::string kind;
  std::vector<BoundScanPoint> points;
  double sup_ratio = 0.0;
  bool blowup_flag = false;  // ratios grow monotonically by >2x over the
                             // final two decades of the b-schedule at some a
};

enum class ScanKind { L1, L2, L3, torus };

BoundScan uniform_bound_scan(ScanKind kind, const BallField& f, int d, int m,
                             const std::vector<double>& a_grid,
                             const std::vector<double>& b_schedule, double r = 0.5);

BoundScan uniform_bound_scan_torus(const Dispersion& e, const TrigPoly& chi,
                                   const std::vector<double>& re_grid,
                                   const std::vector<double>& b_schedule, double tol = 1e-5);

// ---- finite-volume resolvent kernels -------------------------------------

// minimal |Im z| for which the finite box resolves the infinite-volume
// resolvent: eta(l) = 8 e_max / l
double eta_guard(double e_max, const BoxLattice& box);

struct ResolventOptions {
  double e_max = -1.0;        // pass the known band maximum to skip recomputing
  bool override_guard = false;
  double solve_tol = 1e-12;
};

// u = (z - H)^{-1} delta_y on the box (sparse iterative solve, residual
// verified to 1e-10).
Eigen::VectorXcd resolvent_column(const Dispersion& e, const Potential& V, cplx z,
                                  const ivec& y, const BoxLattice& box,
                                  const ResolventOptions& opts = {});

cplx resolvent_kernel(const Dispersion& e, const Potential& V, cplx z, const ivec& x,
                      const ivec& y, const BoxLattice& box, const ResolventOptions& opts = {});

// ---- empirical constants for the weighted resolvent bounds ----------------

struct ResolvExpressionStat {
  std::string name;
  double max_ratio = 0.0;
};

struct CResolvEstimate {
  double c_hat = 0.0;      // max measured ratio over probes, z, expressions
  double c_default = 0.0;  // 1 / (2 c_hat), the derived decay threshold
  std::vector<ResolvExpressionStat> expressions;
  std::vector<double> phi22;  // per probe
  std::vector<double> phi23;
};

// Operator norms of the weighted free-resolvent expressions
// V^{1/2} A^s (z-h)^{-1} A^t V^{1/2} and the vector/kernel bounds, each
// divided by its decay functional (Phi_2 := Phi_{2,2}, Phi_3 := Phi_{2,3}).
CResolvEstimate estimate_c_resolv(const Dispersion& e, const std::vector<Potential>& probes,
                                  const std::vector<cplx>& z_list, const BoxLattice& box);

// e^{-z} I_n(z) for integer n >= 0, z >= 0 (integral representation /
// asymptotic series). Shared by the threshold example and test oracles.
double scaled_bessel_i(int n, double z);

}  // namespace latsch
