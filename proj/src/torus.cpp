#include "latsch/torus.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace latsch {

Dispersion Dispersion::from_coeffs(int dim, std::vector<std::pair<ivec, cplx>> terms,
                                   double sym_tol) {
  if (dim < 1) throw PreconditionError("dispersion dimension must be >= 1");
  std::map<ivec, cplx> acc;
  double scale = 0.0;
  for (auto& [m, c] : terms) {
    if (int(m.size()) != dim) throw PreconditionError("frequency vector dimension mismatch");
    acc[m] += c;
    scale = std::max(scale, std::abs(c));
  }
  if (scale == 0.0) scale = 1.0;
  // conjugate symmetry c(-m) = conj(c(m)), required for real-valuedness
  for (auto& [m, c] : acc) {
    auto it = acc.find(negate(m));
    cplx mirror = (it == acc.end()) ? cplx(0.0) : it->second;
    if (std::abs(c - std::conj(mirror)) > sym_tol * scale)
      throw PreconditionError("coefficient set is not conjugate symmetric");
  }
  Dispersion e;
  e.dim_ = dim;
  for (auto& [m, c] : acc) {
    if (std::abs(c) <= 1e-15 * scale) continue;
    e.coeffs_.emplace_back(m, c);
    e.range_ = std::max(e.range_, norm_inf(m));
  }
  return e;
}

cplx Dispersion::coeff(const ivec& m) const {
  auto it = std::lower_bound(coeffs_.begin(), coeffs_.end(), m,
                             [](const auto& a, const ivec& b) { return lex_less(a.first, b); });
  if (it != coeffs_.end() && it->first == m) return it->second;
  return cplx(0.0);
}

void Dispersion::check_dim(const Eigen::VectorXd& p) const {
  if (int(p.size()) != dim_) throw PreconditionError("torus point dimension mismatch");
}

double Dispersion::eval(const Eigen::VectorXd& p) const {
  check_dim(p);
  double s = 0.0;
  for (const auto& [m, c] : coeffs_) {
    double th = 0.0;
    for (int k = 0; k < dim_; ++k) th += p[k] * m[k];
    s += c.real() * std::cos(th) - c.imag() * std::sin(th);
  }
  return s;
}

cplx Dispersion::eval_complex(const Eigen::VectorXd& p) const {
  check_dim(p);
  cplx s = 0.0;
  for (const auto& [m, c] : coeffs_) {
    double th = 0.0;
    for (int k = 0; k < dim_; ++k) th += p[k] * m[k];
    s += c * std::exp(cplx(0.0, th));
  }
  return s;
}

Eigen::VectorXd Dispersion::grad(const Eigen::VectorXd& p) const {
  check_dim(p);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim_);
  for (const auto& [m, c] : coeffs_) {
    double th = 0.0;
    for (int k = 0; k < dim_; ++k) th += p[k] * m[k];
    // Re(i m_k c e^{i th}) = -m_k (re c sin th + im c cos th)
    double s = c.real() * std::sin(th) + c.imag() * std::cos(th);
    for (int k = 0; k < dim_; ++k) g[k] -= m[k] * s;
  }
  return g;
}

Eigen::MatrixXd Dispersion::hessian(const Eigen::VectorXd& p) const {
  check_dim(p);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim_, dim_);
  for (const auto& [m, c] : coeffs_) {
    double th = 0.0;
    for (int k = 0; k < dim_; ++k) th += p[k] * m[k];
    // Re((i m_j)(i m_k) c e^{i th}) = -m_j m_k (re c cos th - im c sin th)
    double s = c.real() * std::cos(th) - c.imag() * std::sin(th);
    for (int j = 0; j < dim_; ++j)
      for (int k = 0; k < dim_; ++k) h(j, k) -= m[j] * m[k] * s;
  }
  return h;
}

Dispersion Dispersion::derivative(const std::vector<int>& multi) const {
  if (int(multi.size()) != dim_) throw PreconditionError("multi-index dimension mismatch");
  std::vector<std::pair<ivec, cplx>> terms;
  for (const auto& [m, c] : coeffs_) {
    cplx f = c;
    for (int k = 0; k < dim_; ++k)
      for (int j = 0; j < multi[k]; ++j) f *= cplx(0.0, double(m[k]));
    if (std::abs(f) > 0.0) terms.emplace_back(m, f);
  }
  Dispersion d;
  d.dim_ = dim_;
  std::map<ivec, cplx> acc;
  for (auto& [m, c] : terms) acc[m] = c;
  for (auto& [m, c] : acc) {
    if (std::abs(c) <= 1e-300) continue;
    d.coeffs_.emplace_back(m, c);
    d.range_ = std::max(d.range_, norm_inf(m));
  }
  return d;
}

double Dispersion::grad_coeff_bound() const {
  double s = 0.0;
  for (const auto& [m, c] : coeffs_) s += norm2(m) * std::abs(c);
  return s;
}

Dispersion grad_squared(const Dispersion& e) {
  const int d = e.dim();
  std::map<ivec, cplx> acc;
  for (int k = 0; k < d; ++k) {
    // coefficients of d_k e
    std::vector<std::pair<ivec, cplx>> dk;
    for (const auto& [m, c] : e.coeffs())
      if (m[k] != 0) dk.emplace_back(m, cplx(0.0, double(m[k])) * c);
    for (const auto& [m1, a1] : dk)
      for (const auto& [m2, a2] : dk) {
        ivec m(d);
        for (int j = 0; j < d; ++j) m[j] = m1[j] + m2[j];
        acc[m] += a1 * a2;
      }
  }
  double scale = 0.0;
  for (auto& [m, c] : acc) scale = std::max(scale, std::abs(c));
  std::vector<std::pair<ivec, cplx>> terms;
  for (auto& [m, c] : acc) {
    if (std::abs(c) <= 1e-14 * std::max(scale, 1.0)) continue;
    terms.emplace_back(m, c);
  }
  return Dispersion::from_coeffs(d, std::move(terms));
}

namespace {

Eigen::VectorXd wrap_point(Eigen::VectorXd p) {
  for (int i = 0; i < p.size(); ++i) {
    p[i] = wrap_pi(p[i]);
    if (std::abs(p[i]) < 1e-12) p[i] = 0.0;
    if (p[i] > pi - 1e-9) p[i] = -pi;
  }
  return p;
}

// Newton on grad e = 0; returns the converged point or nullopt.
std::optional<Eigen::VectorXd> newton_critical(const Dispersion& e, Eigen::VectorXd p,
                                               double gtol, int max_iter = 60) {
  const int d = e.dim();
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd g = e.grad(p);
    if (g.norm() <= gtol) return wrap_point(p);
    Eigen::MatrixXd h = e.hessian(p);
    Eigen::VectorXd step;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(h);
    if (lu.isInvertible()) {
      step = lu.solve(-g);
    } else {
      // degenerate Hessian: damped pseudo-inverse step
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
      Eigen::VectorXd lam = es.eigenvalues();
      double mu = 1e-6 * h.cwiseAbs().maxCoeff() + 1e-300;
      Eigen::VectorXd y = es.eigenvectors().adjoint() * (-g);
      for (int i = 0; i < d; ++i) {
        double li = lam[i];
        y[i] /= (std::abs(li) > mu) ? li : (li >= 0 ? mu : -mu);
      }
      step = es.eigenvectors() * y;
    }
    double cap = 0.75;  // keep steps inside the seeding cell scale
    if (step.norm() > cap) step *= cap / step.norm();
    p += step;
  }
  Eigen::VectorXd g = e.grad(p);
  if (g.norm() <= gtol) return wrap_point(p);
  return std::nullopt;
}

int default_grid(const Dispersion& e) { return std::max(12, 4 * e.range() + 2); }

// all multi-indices of total order m in dimension d
void multi_indices(int d, int m, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (int(cur.size()) == d - 1) {
    int used = 0;
    for (int v : cur) used += v;
    if (used <= m) {
      cur.push_back(m - used);
      out.push_back(cur);
      cur.pop_back();
    }
    return;
  }
  int used = 0;
  for (int v : cur) used += v;
  for (int v = 0; v + used <= m; ++v) {
    cur.push_back(v);
    multi_indices(d, m, cur, out);
    cur.pop_back();
  }
}

// critical points by grid seeding + Newton, deduplicated; shared by
// critical_report and the norm maximizers
std::vector<Eigen::VectorXd> find_critical_points(const Dispersion& e, int grid_n, double gtol,
                                                  int* unresolved = nullptr) {
  const int d = e.dim();
  if (grid_n <= 0) grid_n = default_grid(e);
  std::vector<Eigen::VectorXd> found;
  const double dedup = default_tolerances().dedup_radius;

  std::vector<int> idx(d, 0);
  std::vector<Eigen::VectorXd> failed_seeds;
  while (true) {
    Eigen::VectorXd p(d);
    for (int k = 0; k < d; ++k) p[k] = -pi + (idx[k] + 0.5) * (2.0 * pi / grid_n);
    auto r = newton_critical(e, p, gtol);
    if (r) {
      bool dup = false;
      for (const auto& q : found)
        if (torus_dist(q, *r) < dedup) { dup = true; break; }
      if (!dup) found.push_back(*r);
    } else {
      failed_seeds.push_back(p);
    }
    int k = 0;
    while (k < d && ++idx[k] == grid_n) idx[k++] = 0;
    if (k == d) break;
  }

  if (unresolved) {
    // a failed cell counts as unresolved when every gradient component
    // changes sign over the cell corners and no converged point lies nearby
    *unresolved = 0;
    double half = pi / grid_n;
    for (const auto& p : failed_seeds) {
      bool near = false;
      for (const auto& q : found)
        if (torus_dist(q, p) < 2.0 * half * std::sqrt(double(d))) { near = true; break; }
      if (near) continue;
      bool brackets = true;
      for (int k = 0; k < d && brackets; ++k) {
        bool pos = false, neg = false;
        for (int corner = 0; corner < (1 << d); ++corner) {
          Eigen::VectorXd q = p;
          for (int j = 0; j < d; ++j) q[j] += ((corner >> j) & 1) ? half : -half;
          double gk = e.grad(q)[k];
          pos = pos || gk > 0;
          neg = neg || gk < 0;
        }
        brackets = pos && neg;
      }
      if (brackets) ++*unresolved;
    }
  }

  std::sort(found.begin(), found.end(), [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    for (int i = 0; i < a.size(); ++i)
      if (a[i] != b[i]) return a[i] < b[i];
    return false;
  });
  return found;
}

}  // namespace

double cm_norm(const Dispersion& e, int m) {
  if (m < 0) throw PreconditionError("cm_norm order must be >= 0");
  const int d = e.dim();
  std::vector<std::vector<int>> idxs;
  std::vector<int> cur;
  multi_indices(d, m, cur, idxs);
  double best = 0.0;
  for (const auto& n : idxs) {
    Dispersion de = e.derivative(n);
    if (de.coeffs().empty()) continue;
    // |f| is maximized at a critical point of f; grid max is kept as a floor
    double gtol = 1e-12 * std::max(1.0, de.grad_coeff_bound());
    auto pts = find_critical_points(de, 0, gtol);
    double mx = 0.0;
    for (const auto& p : pts) mx = std::max(mx, std::abs(de.eval(p)));
    int gn = default_grid(de);
    std::vector<int> idx(d, 0);
    while (true) {
      Eigen::VectorXd p(d);
      for (int k = 0; k < d; ++k) p[k] = -pi + idx[k] * (2.0 * pi / gn);
      mx = std::max(mx, std::abs(de.eval(p)));
      int k = 0;
      while (k < d && ++idx[k] == gn) idx[k++] = 0;
      if (k == d) break;
    }
    best = std::max(best, mx);
  }
  return best;
}

CriticalReport critical_report(const Dispersion& e, int grid_n, double newton_tol) {
  CriticalReport rep;
  const int d = e.dim();
  if (grid_n <= 0) grid_n = default_grid(e);
  double scale = std::max(1.0, e.grad_coeff_bound());
  if (newton_tol <= 0.0) newton_tol = default_tolerances().newton;
  double gtol = newton_tol * scale;

  rep.grid_n = grid_n;
  rep.newton_tol = newton_tol;
  rep.degeneracy_tol = default_tolerances().morse_degeneracy * std::max(cm_norm(e, 2), 1e-300);

  int unresolved = 0;
  auto pts = find_critical_points(e, grid_n, gtol, &unresolved);
  rep.unresolved_cells = unresolved;
  rep.complete = (unresolved == 0);

  rep.is_morse = !pts.empty();
  double min_curv = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) {
    CriticalPoint cp;
    cp.p = p;
    cp.value = e.eval(p);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e.hessian(p));
    Eigen::VectorXd lam = es.eigenvalues();
    cp.min_abs_eig = lam.cwiseAbs().minCoeff();
    cp.curvature = std::sqrt(cp.min_abs_eig);
    cp.morse_index = 0;
    for (int i = 0; i < d; ++i)
      if (lam[i] < -rep.degeneracy_tol) ++cp.morse_index;
    if (cp.min_abs_eig <= rep.degeneracy_tol) rep.is_morse = false;
    min_curv = std::min(min_curv, cp.curvature);
    rep.points.push_back(std::move(cp));
  }
  rep.min_curvature = rep.is_morse && !rep.points.empty() ? min_curv : 0.0;

  // thresholds: clustered critical values
  std::vector<double> vals;
  for (const auto& cp : rep.points) vals.push_back(cp.value);
  std::sort(vals.begin(), vals.end());
  double span = vals.empty() ? 1.0 : std::max(1.0, std::abs(vals.back() - vals.front()));
  for (double v : vals)
    if (rep.thresholds.empty() || v - rep.thresholds.back() > 1e-9 * span)
      rep.thresholds.push_back(v);

  if (!vals.empty()) {
    rep.e_min = vals.front();
    rep.e_max = vals.back();
  }
  rep.euler_sum = 0;
  for (const auto& cp : rep.points) rep.euler_sum += (cp.morse_index % 2 == 0) ? 1 : -1;
  return rep;
}

MorseCertificate certify_morse(const Dispersion& e, int grid_n) {
  MorseCertificate cert;
  cert.dispersion_report = critical_report(e, grid_n);
  cert.grad_squared_report = critical_report(grad_squared(e), grid_n);
  cert.holds = cert.dispersion_report.is_morse && cert.grad_squared_report.is_morse &&
               cert.dispersion_report.complete && cert.grad_squared_report.complete;
  return cert;
}

std::pair<Dispersion, double> pair_dispersion(const Dispersion& e, const Eigen::VectorXd& K) {
  const int d = e.dim();
  if (int(K.size()) != d) throw PreconditionError("quasi-momentum dimension mismatch");
  std::map<ivec, cplx> acc;
  for (const auto& [m, c] : e.coeffs()) acc[m] += c;
  // e(K-p): coefficient at m picks up conj(c(m)) exp(-i<K,m>)
  for (const auto& [m, c] : e.coeffs()) {
    double th = 0.0;
    for (int k = 0; k < d; ++k) th += K[k] * m[k];
    acc[m] += std::conj(c) * std::exp(cplx(0.0, -th));
  }
  double scale = 0.0;
  for (auto& [m, c] : acc) scale = std::max(scale, std::abs(c));
  // re-symmetrize and certify realness of the summed coefficients
  double worst = 0.0;
  for (auto& [m, c] : acc) {
    cplx mirror = acc.count(negate(m)) ? acc[negate(m)] : cplx(0.0);
    worst = std::max(worst, std::abs(c - std::conj(mirror)));
  }
  if (worst > 1e-10 * std::max(scale, 1.0))
    throw NumericalError("pair dispersion: complex residue above tolerance");
  std::vector<std::pair<ivec, cplx>> terms;
  for (auto& [m, c] : acc) {
    cplx sym = 0.5 * (c + std::conj(acc.count(negate(m)) ? acc[negate(m)] : cplx(0.0)));
    if (std::abs(sym) > 1e-14 * std::max(scale, 1.0)) terms.emplace_back(m, sym);
  }
  Dispersion sum = Dispersion::from_coeffs(d, std::move(terms));
  CriticalReport rep = critical_report(sum);
  double E0 = rep.e_min;
  // shift the constant term by -E0
  std::vector<std::pair<ivec, cplx>> shifted(sum.coeffs().begin(), sum.coeffs().end());
  ivec zero(d, 0);
  bool has_const = false;
  for (auto& [m, c] : shifted)
    if (m == zero) { c -= E0; has_const = true; }
  if (!has_const) shifted.emplace_back(zero, cplx(-E0));
  return {Dispersion::from_coeffs(d, std::move(shifted)), E0};
}

Dispersion laplacian_dispersion(int d) {
  if (d < 1) throw PreconditionError("dimension must be >= 1");
  std::vector<std::pair<ivec, cplx>> terms;
  terms.emplace_back(ivec(d, 0), cplx(2.0 * d));
  for (int k = 0; k < d; ++k) {
    ivec m(d, 0);
    m[k] = 1;
    terms.emplace_back(m, cplx(-1.0));
    m[k] = -1;
    terms.emplace_back(m, cplx(-1.0));
  }
  return Dispersion::from_coeffs(d, std::move(terms));
}

Dispersion embedded_dispersion(int d) {
  if (d < 1) throw PreconditionError("dimension must be >= 1");
  std::vector<std::pair<ivec, cplx>> terms;
  terms.emplace_back(ivec(d, 0), cplx(1.5 * d));
  for (int k = 0; k < d; ++k) {
    ivec m(d, 0);
    m[k] = 1;
    terms.emplace_back(m, cplx(-1.0));
    m[k] = -1;
    terms.emplace_back(m, cplx(-1.0));
    m[k] = 2;
    terms.emplace_back(m, cplx(0.5));
    m[k] = -2;
    terms.emplace_back(m, cplx(0.5));
  }
  return Dispersion::from_coeffs(d, std::move(terms));
}

}  // namespace latsch
