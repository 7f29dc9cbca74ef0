#pragma once

#include <map>
#include <optional>
#include <utility>

#include "latsch/common.hpp"

namespace latsch {

// Real-valued trigonometric polynomial e(p) = sum_m c(m) exp(i<p,m>) on the
// torus [-pi,pi)^d. Coefficients satisfy c(-m) = conj(c(m)); for even
// dispersions (all builtins) they are real. Terms are kept sorted
// lexicographically by frequency so every traversal is deterministic.
class Dispersion {
 public:
  Dispersion() = default;

  // Validates conjugate symmetry, drops zero terms, computes the range.
  static Dispersion from_coeffs(int dim, std::vector<std::pair<ivec, cplx>> terms,
                                double sym_tol = 1e-12);

  int dim() const { return dim_; }
  int range() const { return range_; }  // max |m|_inf over stored frequencies
  const std::vector<std::pair<ivec, cplx>>& coeffs() const { return coeffs_; }
  cplx coeff(const ivec& m) const;

  double eval(const Eigen::VectorXd& p) const;
  cplx eval_complex(const Eigen::VectorXd& p) const;  // full complex sum
  Eigen::VectorXd grad(const Eigen::VectorXd& p) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& p) const;

  // Termwise partial derivative d^{|n|}/dp^n as a trig polynomial.
  Dispersion derivative(const std::vector<int>& multi_index) const;

  // Coefficient scale sum_m |m|_2 |c(m)|, an upper bound for |grad e|.
  double grad_coeff_bound() const;

 private:
  void check_dim(const Eigen::VectorXd& p) const;
  int dim_ = 0;
  int range_ = 0;
  std::vector<std::pair<ivec, cplx>> coeffs_;
};

// |grad e|^2 as an exact trig polynomial (coefficient convolution).
Dispersion grad_squared(const Dispersion& e);

struct CriticalPoint {
  Eigen::VectorXd p;
  double value = 0.0;
  int morse_index = 0;      // number of negative Hessian eigenvalues
  double min_abs_eig = 0.0; // smallest |eigenvalue| of the Hessian
  double curvature = 0.0;   // min |eigenvalue|^{1/2}
};

struct CriticalReport {
  std::vector<CriticalPoint> points;
  std::vector<double> thresholds;  // sorted, deduplicated critical values
  bool is_morse = false;
  double min_curvature = 0.0;  // K, 0 when degenerate
  double e_max = 0.0;
  double e_min = 0.0;
  int euler_sum = 0;  // sum (-1)^index; 0 on the torus
  bool complete = true;
  int unresolved_cells = 0;
  int grid_n = 0;
  double newton_tol = 0.0;
  double degeneracy_tol = 0.0;
};

// Newton iteration on grad e = 0 seeded from every cell of a uniform grid.
// grid_n = 0 picks max(12, 4*range+2); newton_tol = 0 picks a scale-relative
// default.
CriticalReport critical_report(const Dispersion& e, int grid_n = 0, double newton_tol = 0.0);

// max over multi-indices |n| = m of max_p |d^n e(p)| (grid seeded, Newton
// polished).
double cm_norm(const Dispersion& e, int m);

// Condition (M): e and |grad e|^2 both Morse.
struct MorseCertificate {
  CriticalReport dispersion_report;
  CriticalReport grad_squared_report;
  bool holds = false;
};
MorseCertificate certify_morse(const Dispersion& e, int grid_n = 0);

// e_K(p) = e(p) + e(K - p) - E0 with E0 = min_p of the sum; returns the
// shifted dispersion (min 0) and E0.
std::pair<Dispersion, double> pair_dispersion(const Dispersion& e, const Eigen::VectorXd& K);

// 2 sum_k (1 - cos p_k); minimum 0, range 1.
Dispersion laplacian_dispersion(int d);

// 3d/2 - sum_k [2 cos p_k - cos 2p_k] = sum_k 2(cos p_k - 1/2)^2;
// minimum 0, maximum 9d/2, range 2. Used by the embedded-eigenvalue example.
Dispersion embedded_dispersion(int d);

}  // namespace latsch
