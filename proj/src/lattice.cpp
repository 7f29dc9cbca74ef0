#include "latsch/lattice.hpp"

#include <algorithm>
#include <cmath>

#include "latsch/quadrature.hpp"

namespace latsch {

// ---- potentials -------------------------------------------------------------

Potential Potential::finite(int dim, std::vector<std::pair<ivec, double>> values) {
  Potential V;
  V.kind_ = Kind::finite;
  V.dim_ = dim;
  std::sort(values.begin(), values.end(),
            [](const auto& a, const auto& b) { return lex_less(a.first, b.first); });
  for (auto& [x, v] : values) {
    if (int(x.size()) != dim) throw PreconditionError("potential site dimension mismatch");
    if (v == 0.0) continue;
    if (!V.values_.empty() && V.values_.back().first == x)
      V.values_.back().second += v;
    else
      V.values_.emplace_back(x, v);
  }
  V.values_.erase(
      std::remove_if(V.values_.begin(), V.values_.end(), [](const auto& p) { return p.second == 0.0; }),
      V.values_.end());
  return V;
}

Potential Potential::delta(int dim, double value) {
  return finite(dim, {{ivec(dim, 0), value}});
}

Potential Potential::family(int dim, std::string name, std::map<std::string, double> params,
                            double truncation_radius) {
  if (name != "power" && name != "embedded_ratio")
    throw PreconditionError("unknown potential family: " + name);
  Potential V;
  V.kind_ = Kind::family;
  V.dim_ = dim;
  V.family_ = std::move(name);
  V.params_ = std::move(params);
  V.trunc_ = truncation_radius;
  V.shift_ = ivec(dim, 0);
  return V;
}

namespace {

double power_psi(const ivec& x, double expo) { return std::pow(1.0 + norm2(x), -expo); }

// V(x) = -[(h(e) - E) psi](x) / psi(x) for the next-nearest-neighbor
// dispersion of the embedded example and psi(x) = (1+|x|)^{-(d+1)/2}
double embedded_ratio_value(const ivec& x, double energy) {
  const int d = int(x.size());
  const double expo = 0.5 * (d + 1);
  double psi = power_psi(x, expo);
  double num = (1.5 * d - energy) * psi;
  ivec y = x;
  for (int k = 0; k < d; ++k) {
    int xk = x[k];
    y[k] = xk + 1;
    num -= power_psi(y, expo);
    y[k] = xk - 1;
    num -= power_psi(y, expo);
    y[k] = xk + 2;
    num += 0.5 * power_psi(y, expo);
    y[k] = xk - 2;
    num += 0.5 * power_psi(y, expo);
    y[k] = xk;
  }
  return -num / psi;
}

}  // namespace

double Potential::at(const ivec& x) const {
  if (int(x.size()) != dim_) throw PreconditionError("potential site dimension mismatch");
  if (kind_ == Kind::finite) {
    auto it = std::lower_bound(values_.begin(), values_.end(), x,
                               [](const auto& a, const ivec& b) { return lex_less(a.first, b); });
    if (it != values_.end() && it->first == x) return it->second;
    return 0.0;
  }
  ivec q(dim_);
  for (int k = 0; k < dim_; ++k) q[k] = x[k] + (shift_.empty() ? 0 : shift_[k]);
  if (trunc_ > 0.0 && norm2(q) > trunc_) return 0.0;
  if (family_ == "power") {
    double amp = params_.count("amplitude") ? params_.at("amplitude") : 1.0;
    double beta = params_.at("beta");
    return amp * std::pow(1.0 + norm2(q), -beta);
  }
  // embedded_ratio
  double energy = params_.at("energy");
  return embedded_ratio_value(q, energy);
}

long long Potential::support_size() const {
  if (kind_ != Kind::finite)
    throw PreconditionError("support_size is defined for finite-support potentials");
  return (long long)values_.size();
}

std::vector<std::pair<ivec, double>> Potential::support_in(const BoxLattice& box) const {
  if (box.dim != dim_) throw PreconditionError("box dimension mismatch");
  std::vector<std::pair<ivec, double>> out;
  if (kind_ == Kind::finite) {
    for (const auto& [x, v] : values_)
      if (box.contains(x)) out.emplace_back(x, v);
    return out;
  }
  for (long long i = 0; i < box.size(); ++i) {
    ivec x = box.site(i);
    double v = at(x);
    if (v != 0.0) out.emplace_back(x, v);
  }
  return out;
}

Potential Potential::scaled(double lambda) const {
  Potential V = *this;
  if (kind_ == Kind::finite) {
    for (auto& [x, v] : V.values_) v *= lambda;
    return V;
  }
  if (family_ == "power") {
    double amp = V.params_.count("amplitude") ? V.params_["amplitude"] : 1.0;
    V.params_["amplitude"] = amp * lambda;
    return V;
  }
  throw PreconditionError("cannot scale family " + family_);
}

Potential Potential::translated(const ivec& z) const {
  if (int(z.size()) != dim_) throw PreconditionError("translation dimension mismatch");
  Potential V = *this;
  if (kind_ == Kind::finite) {
    // V^(z)(x) = V(z + x): a site at s moves to s - z
    for (auto& [x, v] : V.values_)
      for (int k = 0; k < dim_; ++k) x[k] -= z[k];
    std::sort(V.values_.begin(), V.values_.end(),
              [](const auto& a, const auto& b) { return lex_less(a.first, b.first); });
    return V;
  }
  if (V.shift_.empty()) V.shift_ = ivec(dim_, 0);
  for (int k = 0; k < dim_; ++k) V.shift_[k] += z[k];
  return V;
}

// ---- operators ------------------------------------------------------------------

void check_hermitian(const HermitianOperator& op, double rel_tol) {
  double scale = op.mat.cwiseAbs().maxCoeff();
  if (scale == 0.0) return;
  double dev = (op.mat - op.mat.adjoint()).cwiseAbs().maxCoeff();
  if (dev > rel_tol * scale)
    throw NumericalError("operator '" + op.label + "' fails the Hermiticity check");
}

namespace {
void require_dense_ok(const BoxLattice& box) {
  // 8000^2 complex entries ~ 1 GB
  if (box.size() > 8000)
    throw PreconditionError("box too large for a dense operator; use the matrix-free appliers");
}
}  // namespace

HermitianOperator hopping_matrix(const Dispersion& e, const BoxLattice& box) {
  if (e.dim() != box.dim) throw PreconditionError("dimension mismatch");
  require_dense_ok(box);
  const long long n = box.size();
  HermitianOperator op{box, "h(e)", Eigen::MatrixXcd::Zero(n, n)};
  for (long long i = 0; i < n; ++i) {
    ivec x = box.site(i);
    for (const auto& [m, c] : e.coeffs()) {
      ivec y(x.size());
      bool ok = true;
      for (size_t k = 0; k < x.size(); ++k) {
        y[k] = x[k] - m[k];
        ok = ok && std::abs(y[k]) <= box.half_width;
      }
      if (ok) op.mat(i, box.index(y)) += c;  // h_{xy} = ehat(x - y) = ehat(m)
    }
  }
  check_hermitian(op);
  return op;
}

namespace {
// A_{yx} = i ehat(x - y) <(x + y)/2, x - y>
inline cplx conjugate_entry(const ivec& y, const ivec& x, const ivec& m, cplx em) {
  double dot = 0.0;
  for (size_t k = 0; k < x.size(); ++k) dot += 0.5 * (x[k] + y[k]) * m[k];
  return cplx(0.0, 1.0) * em * dot;
}
}  // namespace

HermitianOperator conjugate_operator(const Dispersion& e, const BoxLattice& box) {
  if (e.dim() != box.dim) throw PreconditionError("dimension mismatch");
  require_dense_ok(box);
  const long long n = box.size();
  HermitianOperator op{box, "A(e)", Eigen::MatrixXcd::Zero(n, n)};
  for (long long j = 0; j < n; ++j) {
    ivec x = box.site(j);
    for (const auto& [m, c] : e.coeffs()) {
      ivec y(x.size());
      bool ok = true;
      for (size_t k = 0; k < x.size(); ++k) {
        y[k] = x[k] - m[k];
        ok = ok && std::abs(y[k]) <= box.half_width;
      }
      if (ok) op.mat(box.index(y), j) += conjugate_entry(y, x, m, c);
    }
  }
  check_hermitian(op);
  return op;
}

Eigen::VectorXcd conjugate_column(const Dispersion& e, const BoxLattice& box, const ivec& x) {
  if (!box.contains(x)) throw PreconditionError("site outside box");
  Eigen::VectorXcd g = Eigen::VectorXcd::Zero(box.size());
  for (const auto& [m, c] : e.coeffs()) {
    ivec y(x.size());
    bool ok = true;
    for (size_t k = 0; k < x.size(); ++k) {
      y[k] = x[k] - m[k];
      ok = ok && std::abs(y[k]) <= box.half_width;
    }
    if (ok) g[box.index(y)] += conjugate_entry(y, x, m, c);
  }
  return g;
}

Eigen::VectorXcd apply_conjugate(const Dispersion& e, const BoxLattice& box,
                                 const Eigen::VectorXcd& psi) {
  if (psi.size() != box.size()) throw PreconditionError("vector size mismatch");
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(box.size());
  // out(y) = sum_x A_{yx} psi(x); iterate over columns x and scatter
  for (long long j = 0; j < box.size(); ++j) {
    if (psi[j] == cplx(0.0)) continue;
    ivec x = box.site(j);
    for (const auto& [m, c] : e.coeffs()) {
      ivec y(x.size());
      bool ok = true;
      for (size_t k = 0; k < x.size(); ++k) {
        y[k] = x[k] - m[k];
        ok = ok && std::abs(y[k]) <= box.half_width;
      }
      if (ok) out[box.index(y)] += conjugate_entry(y, x, m, c) * psi[j];
    }
  }
  return out;
}

Eigen::VectorXd apply_hopping(const Dispersion& e, const BoxLattice& box,
                              const Eigen::VectorXd& psi) {
  if (psi.size() != box.size()) throw PreconditionError("vector size mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(box.size());
  for (long long i = 0; i < box.size(); ++i) {
    ivec x = box.site(i);
    double acc = 0.0;
    for (const auto& [m, c] : e.coeffs()) {
      ivec y(x.size());
      bool ok = true;
      for (size_t k = 0; k < x.size(); ++k) {
        y[k] = x[k] - m[k];
        ok = ok && std::abs(y[k]) <= box.half_width;
      }
      if (ok) acc += c.real() * psi[box.index(y)];
    }
    out[i] = acc;
  }
  return out;
}

CommutatorRankForm commutator_vA_rank(const Potential& V, const Dispersion& e,
                                      const BoxLattice& box) {
  CommutatorRankForm form;
  form.box = box;
  form.sites = V.support_in(box);
  for (const auto& [x, v] : form.sites) form.g.push_back(conjugate_column(e, box, x));
  return form;
}

HermitianOperator commutator_vA(const Potential& V, const Dispersion& e, const BoxLattice& box) {
  require_dense_ok(box);
  CommutatorRankForm form = commutator_vA_rank(V, e, box);
  const long long n = box.size();
  HermitianOperator op{box, "i[V,A]", Eigen::MatrixXcd::Zero(n, n)};
  const cplx iu(0.0, 1.0);
  for (size_t t = 0; t < form.sites.size(); ++t) {
    long long row = box.index(form.sites[t].first);
    double v = form.sites[t].second;
    // i v (|d_x><g_x| - |g_x><d_x|)
    op.mat.row(row) += iu * v * form.g[t].adjoint();
    op.mat.col(row) -= iu * v * form.g[t];
  }
  check_hermitian(op);
  return op;
}

HermitianOperator commutator_hA(const Dispersion& e, const BoxLattice& box) {
  HermitianOperator op = hopping_matrix(grad_squared(e), box);
  op.label = "i[h,A]";
  return op;
}

HermitianOperator hamiltonian(const Dispersion& e, const Potential& V, const BoxLattice& box) {
  HermitianOperator op = hopping_matrix(e, box);
  op.label = "H(e,V)";
  for (long long i = 0; i < box.size(); ++i) op.mat(i, i) += V.at(box.site(i));
  return op;
}

Eigen::VectorXcd fourier_vector(const std::function<cplx(const Eigen::VectorXd&)>& f,
                                const BoxLattice& box, double tol,
                                const Eigen::VectorXd* singular_point) {
  const int d = box.dim;
  Eigen::VectorXcd psi(box.size());
  CubatureOptions opts;
  opts.abs_tol = tol * std::pow(2.0 * pi, d);
  opts.max_evals = 50000000;
  if (singular_point) opts.singular_point = *singular_point;
  for (long long i = 0; i < box.size(); ++i) {
    ivec x = box.site(i);
    auto g = [&](const Eigen::VectorXd& p) {
      double th = 0.0;
      for (int k = 0; k < d; ++k) th += p[k] * x[k];
      return f(p) * std::exp(cplx(0.0, th));
    };
    IntegralResult r = integrate_nd(g, Eigen::VectorXd::Constant(d, -pi),
                                    Eigen::VectorXd::Constant(d, pi), opts);
    if (!r.converged)
      throw NumericalError("fourier_vector: quadrature did not converge, error estimate " +
                           std::to_string(r.abs_error_estimate / std::pow(2.0 * pi, d)));
    psi[i] = r.value / std::pow(2.0 * pi, d);
  }
  return psi;
}

}  // namespace latsch
