#pragma once

#include "latsch/lattice.hpp"
#include "latsch/torus.hpp"

namespace latsch {

struct EigenSystem {
  Eigen::VectorXd values;    // ascending
  Eigen::MatrixXcd vectors;  // orthonormal columns; first significant
                             // component rotated to the positive real axis
};

// Dense Hermitian eigendecomposition with per-pair residual validation
// (throws NumericalError when ||Mv - lambda v|| > 1e-10 ||M||).
EigenSystem eigendecompose(const HermitianOperator& M);

struct EmbeddedCandidate {
  double value = 0.0;
  double dist_to_thr = 0.0;
};

struct SpectralReport {
  std::vector<double> eigenvalues;
  double e_max = 0.0;
  std::vector<double> thresholds;
  int discrete_count = 0;
  std::vector<EmbeddedCandidate> embedded;
  double margin = 0.0;  // 1e-6 * e_max
  int dim = 0;
  int half_width = 0;
};

SpectralReport classify(const std::vector<double>& eigenvalues, const CriticalReport& dispersion,
                        const BoxLattice& box);

struct NegativeCount {
  int count = 0;      // eigenvalues < -rel_tol * norm
  int ambiguous = 0;  // eigenvalues in (-rel_tol * norm, 0)
  double norm = 0.0;  // spectral norm
  double rel_tol = 0.0;
  double min_abs_margin = 0.0;  // smallest |eigenvalue| among the nonzero block
};

NegativeCount count_negative(const Eigen::VectorXd& eigenvalues, double rel_tol);
NegativeCount count_negative(const HermitianOperator& M, double rel_tol = 1e-10);
// Low-rank path: the nonzero spectrum of i[V,A] lives on span{delta_x, g_x},
// so a 2s-dimensional projected eigenproblem suffices.
NegativeCount count_negative(const CommutatorRankForm& form, double rel_tol = 1e-10);

struct TraceIdentityReport {
  long long support = 0;
  int count = 0;
  bool match = false;
  std::vector<double> lambdas;
  std::vector<int> scaled_counts;
  bool scale_invariant = false;
  double min_abs_margin = 0.0;
};

// Tr E_-(i[V,A]) == |supp V|, checked at lambda in {1/10, 1, 10}.
TraceIdentityReport verify_trace_identity(const Potential& V, const Dispersion& e,
                                          const BoxLattice& box);

struct VirialReport {
  double eigenvalue = 0.0;
  double lhs = 0.0;       // <psi, i[V2,A] psi>
  double rhs = 0.0;       // -<psi, (i[h,A] + i[V1,A]) psi>
  double residual = 0.0;  // |lhs - rhs|
  double max_imag = 0.0;  // largest imaginary part seen in either form
  double boundary_mass = 0.0;
  bool reliable = false;  // boundary mass below 1%
};

// Virial identity on the eigenvector with the given index (ascending order)
// of H(e, V1 + V2) on the box. Boxes above the dense limit use the iterative
// bottom-of-spectrum path, so eig_index must then address a low eigenvalue.
VirialReport virial_residual(const Dispersion& e, const Potential& V1, const Potential& V2,
                             const BoxLattice& box, int eig_index);

// Virial on an externally supplied eigenpair.
VirialReport virial_residual_for(const Dispersion& e, const Potential& V1, const Potential& V2,
                                 const BoxLattice& box, double eigenvalue,
                                 const Eigen::VectorXcd& psi);

struct MourreReport {
  double window_lo = 0.0, window_hi = 0.0;
  double c_floor = 0.0;  // min |grad e|^2 over the preimage band
  std::vector<double> compression_spectrum;
  int window_dim = 0;
  int below_floor = 0;  // eigenvalues below c_floor - 10 * eig tolerance
  double min_eig = 0.0;
};

// Compression of the commutator i[H,A] (multiplier form plus i[V,A]) to the
// spectral window of the boxed Hamiltonian.
MourreReport mourre_compression(const Dispersion& e, const Potential& V, double window_lo,
                                double window_hi, const BoxLattice& box);

// Lowest k eigenpairs of H(e,V) by Lanczos with full reorthogonalization;
// residuals verified to tol * ||H||. Deterministic start vector.
struct LowestPairs {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};
LowestPairs lowest_eigenpairs(const Dispersion& e, const Potential& V, const BoxLattice& box,
                              int k, double tol = 1e-10);

}  // namespace latsch
