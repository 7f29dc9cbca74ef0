#pragma once

#include "latsch/lattice.hpp"

namespace latsch {

struct PhiValue {
  int m = 1;
  int n = 0;
  double value = 0.0;
  bool finite = true;                // false: divergence detected, value meaningless
  std::vector<double> partial_sums;  // inner-sum trace over balls of growing radius
};

// Phi_{m,n}(V) = (sum_x |V(x)|^{1/m} (|x|+1)^n)^m. Finite-support potentials
// sum exactly; closed-form families sum over shells |x| in [k, k+1) up to the
// truncation radius, with divergence flagged when five consecutive shell
// contributions fail to decrease (or the family's decay exponent already
// forces divergence).
PhiValue phi(const Potential& V, int m, int n, double radius = 0.0);

// V^(z)(x) = V(z + x).
Potential translate(const Potential& V, const ivec& z);

struct BoundCertificate {
  double threshold_c = 0.0;
  ivec best_z;
  std::vector<ivec> support_set;  // S, sorted lexicographically
  double excluded_phi = 0.0;      // Phi_{2,3} of V^(z) off S, < c
  long long bound = 0;            // |S|
  int z_window = 0;
  bool valid = false;
};

// Smallest |supp V'| over translations z in the max-norm window such that
// Phi_{2,3}(V^(z) - V') < c, with V' = V^(z) restricted to the kept set.
// Greedy on the sorted weights |V^(z)(x)|^{1/2}(|x|+1)^3 is exact.
// z_window < 0 picks the default diameter(supp V) + 2.
BoundCertificate min_support_bound(const Potential& V, double c, int z_window = -1);

// Exhaustive oracle over all subsets at a fixed translation; |supp| <= 20.
long long brute_force_min_support(const Potential& V, double c, const ivec& z);

enum class AbsenceVerdict { certified, inconclusive };

struct AbsenceReport {
  AbsenceVerdict verdict = AbsenceVerdict::inconclusive;
  BoundCertificate certificate;
  long long discrete_count = 0;
};

// "discrete-only certified" when the variational bound is at most the number
// of observed discrete eigenvalues.
AbsenceReport embedded_absence_check(const Potential& V, long long discrete_count, double c);

}  // namespace latsch
