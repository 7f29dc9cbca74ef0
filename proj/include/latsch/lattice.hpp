#pragma once

#include <functional>
#include <map>
#include <string>

#include "latsch/torus.hpp"

namespace latsch {

// Centered cube {-l..l}^d with a stable lexicographic enumeration.
struct BoxLattice {
  int dim = 0;
  int half_width = 0;

  BoxLattice() = default;
  BoxLattice(int d, int l) : dim(d), half_width(l) {
    if (d < 1 || l < 0) throw PreconditionError("invalid box");
  }

  long long side() const { return 2LL * half_width + 1; }
  long long size() const {
    long long n = 1;
    for (int k = 0; k < dim; ++k) n *= side();
    return n;
  }
  bool contains(const ivec& s) const {
    for (int c : s)
      if (std::abs(c) > half_width) return false;
    return true;
  }
  // distance to the boundary strictly greater than margin
  bool interior(const ivec& s, int margin) const {
    for (int c : s)
      if (std::abs(c) > half_width - margin - 1) return false;
    return true;
  }
  long long index(const ivec& s) const {
    long long idx = 0;
    for (int k = 0; k < dim; ++k) idx = idx * side() + (s[k] + half_width);
    return idx;
  }
  ivec site(long long idx) const {
    ivec s(dim);
    for (int k = dim - 1; k >= 0; --k) {
      s[k] = int(idx % side()) - half_width;
      idx /= side();
    }
    return s;
  }
};

// Real site potential: explicit finite support or a named closed-form family
// ("power": amp*(1+|x|)^-beta; "embedded_ratio": the ratio-defined potential
// of the embedded-eigenvalue example, params dim and energy).
class Potential {
 public:
  enum class Kind { finite, family };

  Potential() = default;
  static Potential zero(int dim) { return finite(dim, {}); }
  static Potential finite(int dim, std::vector<std::pair<ivec, double>> values);
  static Potential delta(int dim, double value);  // single site at the origin
  static Potential family(int dim, std::string name, std::map<std::string, double> params,
                          double truncation_radius = 0.0);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  double at(const ivec& x) const;
  const std::vector<std::pair<ivec, double>>& values() const { return values_; }
  const std::string& family_name() const { return family_; }
  const std::map<std::string, double>& params() const { return params_; }
  double truncation_radius() const { return trunc_; }

  long long support_size() const;  // finite kind only
  // nonzero sites inside a box (families truncated at the box boundary)
  std::vector<std::pair<ivec, double>> support_in(const BoxLattice& box) const;

  Potential scaled(double lambda) const;
  Potential translated(const ivec& z) const;  // V^(z)(x) = V(z + x)

 private:
  Kind kind_ = Kind::finite;
  int dim_ = 0;
  std::vector<std::pair<ivec, double>> values_;  // sorted lexicographically
  std::string family_;
  std::map<std::string, double> params_;
  double trunc_ = 0.0;  // Euclidean cutoff; 0 = none
  ivec shift_;          // translation offset applied to family evaluation
};

// Complex Hermitian matrix indexed by box sites.
struct HermitianOperator {
  BoxLattice box;
  std::string label;
  Eigen::MatrixXcd mat;
};

// Throws NumericalError when ||M - M*||_max > tol * ||M||_max.
void check_hermitian(const HermitianOperator& op, double rel_tol = 1e-12);

// h(e)_{xy} = ehat(x - y), compression to the box (no periodic wrap).
HermitianOperator hopping_matrix(const Dispersion& e, const BoxLattice& box);

// Conjugate operator A(e): A_{yx} = i ehat(x-y) <(x+y)/2, x-y>.
HermitianOperator conjugate_operator(const Dispersion& e, const BoxLattice& box);

// Column g_x = A delta_x on the box, without materializing A.
Eigen::VectorXcd conjugate_column(const Dispersion& e, const BoxLattice& box, const ivec& x);

// y = A psi, banded application of the conjugate operator.
Eigen::VectorXcd apply_conjugate(const Dispersion& e, const BoxLattice& box,
                                 const Eigen::VectorXcd& psi);

// y = h(e) psi, stencil application (real dispersions).
Eigen::VectorXd apply_hopping(const Dispersion& e, const BoxLattice& box,
                              const Eigen::VectorXd& psi);

// i[V,A] = sum_{x in supp V} i V(x) (|d_x><g_x| - |g_x><d_x|), rank <= 2|supp|.
struct CommutatorRankForm {
  BoxLattice box;
  std::vector<std::pair<ivec, double>> sites;
  std::vector<Eigen::VectorXcd> g;  // g_x per site
};
CommutatorRankForm commutator_vA_rank(const Potential& V, const Dispersion& e,
                                      const BoxLattice& box);
HermitianOperator commutator_vA(const Potential& V, const Dispersion& e, const BoxLattice& box);

// i[h(e),A] = Fourier multiplier |grad e|^2, compressed to the box:
// exactly hopping_matrix(grad_squared(e), box).
HermitianOperator commutator_hA(const Dispersion& e, const BoxLattice& box);

HermitianOperator hamiltonian(const Dispersion& e, const Potential& V, const BoxLattice& box);

// psi(x) = int e^{i<p,x>} f(p) dmu*(p) per box site by adaptive cubature.
// Practical for small boxes; singular_point marks a known integrable
// singularity of f.
Eigen::VectorXcd fourier_vector(const std::function<cplx(const Eigen::VectorXd&)>& f,
                                const BoxLattice& box, double tol = 1e-9,
                                const Eigen::VectorXd* singular_point = nullptr);

}  // namespace latsch
