#include "latsch/spectral.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace latsch {

EigenSystem eigendecompose(const HermitianOperator& M) {
  check_hermitian(M);
  EigenSystem sys;
  const bool real = M.mat.imag().cwiseAbs().maxCoeff() == 0.0;
  if (real) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M.mat.real());
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    sys.values = es.eigenvalues();
    sys.vectors = es.eigenvectors().cast<cplx>();
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M.mat);
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    sys.values = es.eigenvalues();
    sys.vectors = es.eigenvectors();
  }
  const long long n = sys.values.size();
  double norm = std::max(std::abs(sys.values[0]), std::abs(sys.values[n - 1]));
  // deterministic phase: first significant component positive real
  for (long long j = 0; j < n; ++j) {
    double mx = sys.vectors.col(j).cwiseAbs().maxCoeff();
    for (long long i = 0; i < n; ++i) {
      cplx v = sys.vectors(i, j);
      if (std::abs(v) > 1e-8 * mx) {
        sys.vectors.col(j) *= std::conj(v) / std::abs(v);
        break;
      }
    }
  }
  double tol = default_tolerances().eig_residual * std::max(norm, 1e-300);
  Eigen::MatrixXcd MV = M.mat * sys.vectors;  // one product covers all pairs
  for (long long j = 0; j < n; ++j) {
    double resid = (MV.col(j) - sys.values[j] * sys.vectors.col(j)).norm();
    if (resid > tol)
      throw NumericalError("eigendecomposition rejected: residual " + std::to_string(resid));
  }
  return sys;
}

SpectralReport classify(const std::vector<double>& eigenvalues, const CriticalReport& dispersion,
                        const BoxLattice& box) {
  SpectralReport rep;
  rep.eigenvalues = eigenvalues;
  std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end());
  rep.e_max = dispersion.e_max;
  rep.thresholds = dispersion.thresholds;
  rep.margin = 1e-6 * std::abs(rep.e_max);
  rep.dim = box.dim;
  rep.half_width = box.half_width;
  for (double v : rep.eigenvalues) {
    if (v < -rep.margin || v > rep.e_max + rep.margin) {
      ++rep.discrete_count;
    } else if (v >= rep.margin && v <= rep.e_max - rep.margin) {
      EmbeddedCandidate cand;
      cand.value = v;
      cand.dist_to_thr = std::numeric_limits<double>::infinity();
      for (double t : rep.thresholds)
        cand.dist_to_thr = std::min(cand.dist_to_thr, std::abs(v - t));
      rep.embedded.push_back(cand);
    }
  }
  return rep;
}

NegativeCount count_negative(const Eigen::VectorXd& eigenvalues, double rel_tol) {
  NegativeCount c;
  c.rel_tol = rel_tol;
  for (int i = 0; i < eigenvalues.size(); ++i) c.norm = std::max(c.norm, std::abs(eigenvalues[i]));
  double cut = rel_tol * c.norm;
  c.min_abs_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < eigenvalues.size(); ++i) {
    double v = eigenvalues[i];
    if (v < -cut) ++c.count;
    if (v > -cut && v < 0.0) ++c.ambiguous;
    if (std::abs(v) > cut) c.min_abs_margin = std::min(c.min_abs_margin, std::abs(v));
  }
  if (!std::isfinite(c.min_abs_margin)) c.min_abs_margin = 0.0;
  return c;
}

NegativeCount count_negative(const HermitianOperator& M, double rel_tol) {
  return count_negative(eigendecompose(M).values, rel_tol);
}

NegativeCount count_negative(const CommutatorRankForm& form, double rel_tol) {
  const int s = int(form.sites.size());
  if (s == 0) return count_negative(Eigen::VectorXd(), rel_tol);
  const long long n = form.box.size();
  Eigen::MatrixXcd basis(n, 2 * s);
  for (int t = 0; t < s; ++t) {
    basis.col(t).setZero();
    basis(form.box.index(form.sites[t].first), t) = 1.0;
    basis.col(s + t) = form.g[t];
  }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(basis);
  Eigen::MatrixXcd Q = qr.householderQ() * Eigen::MatrixXcd::Identity(n, 2 * s);
  // projected commutator: sum_t i v_t (a_t b_t^* - b_t a_t^*) with
  // a_t = Q^* delta_t and b_t = Q^* g_t
  Eigen::MatrixXcd small = Eigen::MatrixXcd::Zero(2 * s, 2 * s);
  const cplx iu(0.0, 1.0);
  for (int t = 0; t < s; ++t) {
    Eigen::VectorXcd a = Q.row(form.box.index(form.sites[t].first)).adjoint();
    Eigen::VectorXcd b = Q.adjoint() * form.g[t];
    small += iu * form.sites[t].second * (a * b.adjoint() - b * a.adjoint());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(small);
  return count_negative(es.eigenvalues(), rel_tol);
}

TraceIdentityReport verify_trace_identity(const Potential& V, const Dispersion& e,
                                          const BoxLattice& box) {
  if (V.kind() != Potential::Kind::finite)
    throw PreconditionError("verify_trace_identity: finite-support potential required");
  const int margin = 2 * e.range();
  for (const auto& [x, v] : V.values())
    if (!box.interior(x, margin))
      throw PreconditionError("verify_trace_identity: support must sit well inside the box");

  TraceIdentityReport rep;
  rep.support = V.support_size();
  rep.lambdas = {0.1, 1.0, 10.0};
  rep.min_abs_margin = std::numeric_limits<double>::infinity();
  for (double lam : rep.lambdas) {
    auto nc = count_negative(commutator_vA_rank(V.scaled(lam), e, box));
    rep.scaled_counts.push_back(nc.count);
    if (nc.norm > 0.0)
      rep.min_abs_margin = std::min(rep.min_abs_margin, nc.min_abs_margin / nc.norm);
  }
  if (!std::isfinite(rep.min_abs_margin)) rep.min_abs_margin = 0.0;
  rep.count = rep.scaled_counts[1];
  rep.scale_invariant = rep.scaled_counts[0] == rep.count && rep.scaled_counts[2] == rep.count;
  rep.match = (rep.count == rep.support) && rep.scale_invariant;
  return rep;
}

namespace {

Eigen::VectorXcd apply_hopping_cplx(const Dispersion& e, const BoxLattice& box,
                                    const Eigen::VectorXcd& psi) {
  Eigen::VectorXd re(psi.size()), im(psi.size());
  for (long long i = 0; i < psi.size(); ++i) {
    re[i] = psi[i].real();
    im[i] = psi[i].imag();
  }
  Eigen::VectorXd hre = apply_hopping(e, box, re);
  Eigen::VectorXd him = apply_hopping(e, box, im);
  Eigen::VectorXcd out(psi.size());
  for (long long i = 0; i < psi.size(); ++i) out[i] = cplx(hre[i], him[i]);
  return out;
}

double boundary_mass_of(const Eigen::VectorXcd& psi, const BoxLattice& box, int range) {
  double total = psi.squaredNorm();
  double edge = 0.0;
  for (long long i = 0; i < box.size(); ++i)
    if (norm_inf(box.site(i)) > box.half_width - range) edge += std::norm(psi[i]);
  return total > 0 ? edge / total : 0.0;
}

constexpr long long kDenseLimit = 4500;

}  // namespace

VirialReport virial_residual_for(const Dispersion& e, const Potential& V1, const Potential& V2,
                                 const BoxLattice& box, double eigenvalue,
                                 const Eigen::VectorXcd& psi) {
  VirialReport rep;
  rep.eigenvalue = eigenvalue;
  double nrm2 = psi.squaredNorm();
  if (nrm2 == 0.0) throw PreconditionError("virial: zero eigenvector");

  auto quad_rank = [&](const Potential& V) {
    CommutatorRankForm form = commutator_vA_rank(V, e, box);
    cplx acc = 0.0;
    for (size_t t = 0; t < form.sites.size(); ++t) {
      long long row = form.box.index(form.sites[t].first);
      cplx alpha = psi[row];
      cplx beta = form.g[t].adjoint() * psi;
      acc += cplx(0.0, form.sites[t].second) * (std::conj(alpha) * beta - std::conj(beta) * alpha);
    }
    return acc;
  };

  Dispersion w = grad_squared(e);
  cplx lhs_c = quad_rank(V2) / nrm2;
  cplx hform = (psi.adjoint() * apply_hopping_cplx(w, box, psi))(0) / nrm2;
  cplx rhs_c = -(hform + quad_rank(V1) / nrm2);
  rep.lhs = lhs_c.real();
  rep.rhs = rhs_c.real();
  rep.max_imag = std::max(std::abs(lhs_c.imag()), std::abs(rhs_c.imag()));
  if (rep.max_imag > 1e-10 * (std::abs(rep.lhs) + std::abs(rep.rhs) + 1.0))
    throw NumericalError("virial forms picked up an imaginary part");
  rep.residual = std::abs(rep.lhs - rep.rhs);
  rep.boundary_mass = boundary_mass_of(psi, box, e.range());
  rep.reliable = rep.boundary_mass < 0.01;
  return rep;
}

VirialReport virial_residual(const Dispersion& e, const Potential& V1, const Potential& V2,
                             const BoxLattice& box, int eig_index) {
  if (eig_index < 0) throw PreconditionError("virial: eigenvector index out of range");
  if (box.size() <= kDenseLimit) {
    HermitianOperator H = hopping_matrix(e, box);
    H.label = "H(e,V1+V2)";
    for (long long i = 0; i < box.size(); ++i) {
      ivec x = box.site(i);
      H.mat(i, i) += V1.at(x) + V2.at(x);
    }
    EigenSystem sys = eigendecompose(H);
    if (eig_index >= sys.values.size())
      throw PreconditionError("virial: eigenvector index out of range");
    return virial_residual_for(e, V1, V2, box, sys.values[eig_index],
                               sys.vectors.col(eig_index));
  }
  Potential sum = V1;
  if (V1.kind() == Potential::Kind::finite && V2.kind() == Potential::Kind::finite) {
    std::vector<std::pair<ivec, double>> vals = V1.values();
    for (const auto& kv : V2.values()) vals.push_back(kv);
    sum = Potential::finite(box.dim, vals);
  } else {
    throw PreconditionError("virial on large boxes requires finite-support potentials");
  }
  LowestPairs pairs = lowest_eigenpairs(e, sum, box, eig_index + 2);
  if (eig_index >= pairs.values.size())
    throw PreconditionError("virial: eigenvector index beyond the computed window");
  Eigen::VectorXcd psi = pairs.vectors.col(eig_index).cast<cplx>();
  return virial_residual_for(e, V1, V2, box, pairs.values[eig_index], psi);
}

MourreReport mourre_compression(const Dispersion& e, const Potential& V, double window_lo,
                                double window_hi, const BoxLattice& box) {
  if (window_hi < window_lo) throw PreconditionError("mourre: empty window");
  CriticalReport crit = critical_report(e);
  double dist = std::numeric_limits<double>::infinity();
  for (double t : crit.thresholds) {
    if (t >= window_lo && t <= window_hi) dist = 0.0;
    dist = std::min(dist, std::min(std::abs(t - window_lo), std::abs(t - window_hi)));
  }
  if (dist <= 0.0)
    throw PreconditionError("mourre: window must keep a positive distance from the thresholds");

  MourreReport rep;
  rep.window_lo = window_lo;
  rep.window_hi = window_hi;

  // floor: grid scan of |grad e|^2 over the preimage band, polished by
  // projected descent on the band edges and by the interior critical points
  Dispersion w = grad_squared(e);
  const int d = e.dim();
  double floor = std::numeric_limits<double>::infinity();
  int gn = std::max(32, 8 * e.range() + 16);
  std::vector<Eigen::VectorXd> edge_seeds;
  for (int refine = 0; refine < 3 && !std::isfinite(floor); ++refine) {
    edge_seeds.clear();
    std::vector<int> idx(d, 0);
    double step = 2.0 * pi / gn;
    double c1 = std::max(e.grad_coeff_bound(), 1e-12);
    while (true) {
      Eigen::VectorXd p(d);
      for (int k = 0; k < d; ++k) p[k] = -pi + step * idx[k];
      double ev = e.eval(p);
      if (ev >= window_lo && ev <= window_hi) floor = std::min(floor, w.eval(p));
      if (std::abs(ev - window_lo) < step * c1 || std::abs(ev - window_hi) < step * c1)
        edge_seeds.push_back(p);
      int k = 0;
      while (k < d && ++idx[k] == gn) idx[k++] = 0;
      if (k == d) break;
    }
    if (!std::isfinite(floor)) gn *= 2;
  }
  // interior critical points of w inside the band
  for (const auto& cp : critical_report(w).points) {
    double ev = e.eval(cp.p);
    if (ev >= window_lo && ev <= window_hi) floor = std::min(floor, cp.value);
  }
  // projected descent of w along each band edge
  for (double level : {window_lo, window_hi}) {
    for (const auto& seed : edge_seeds) {
      Eigen::VectorXd p = seed;
      for (int it = 0; it < 200; ++it) {
        for (int proj = 0; proj < 3; ++proj) {
          Eigen::VectorXd ge = e.grad(p);
          double g2 = ge.squaredNorm();
          if (g2 < 1e-14) break;
          p += (level - e.eval(p)) / g2 * ge;
        }
        Eigen::VectorXd ge = e.grad(p);
        Eigen::VectorXd gw = w.grad(p);
        double g2 = ge.squaredNorm();
        if (g2 < 1e-14) break;
        Eigen::VectorXd tang = gw - (gw.dot(ge) / g2) * ge;
        if (tang.norm() < 1e-11 * std::max(1.0, w.grad_coeff_bound())) break;
        double eta = 0.2 / std::max(tang.norm(), 1e-12);
        double w0 = w.eval(p);
        Eigen::VectorXd q;
        for (int ls = 0; ls < 30; ++ls) {
          q = p - eta * tang;
          Eigen::VectorXd geq = e.grad(q);
          double gq2 = geq.squaredNorm();
          if (gq2 > 1e-14) q += (level - e.eval(q)) / gq2 * geq;
          if (w.eval(q) < w0) break;
          eta *= 0.5;
        }
        if (w.eval(q) >= w0) break;
        p = q;
      }
      if (std::abs(e.eval(p) - level) < 1e-8 * std::max(1.0, std::abs(level)))
        floor = std::min(floor, w.eval(p));
    }
  }
  rep.c_floor = std::isfinite(floor) ? floor : 0.0;

  HermitianOperator H = hamiltonian(e, V, box);
  EigenSystem sys = eigendecompose(H);
  std::vector<long long> sel;
  for (long long i = 0; i < sys.values.size(); ++i)
    if (sys.values[i] >= window_lo && sys.values[i] <= window_hi) sel.push_back(i);
  rep.window_dim = int(sel.size());
  if (sel.empty()) return rep;

  Eigen::MatrixXcd Psi(box.size(), sel.size());
  for (size_t j = 0; j < sel.size(); ++j) Psi.col(j) = sys.vectors.col(sel[j]);
  HermitianOperator W = commutator_hA(e, box);
  Eigen::MatrixXcd B = W.mat * Psi;
  CommutatorRankForm form = commutator_vA_rank(V, e, box);
  const cplx iu(0.0, 1.0);
  for (size_t t = 0; t < form.sites.size(); ++t) {
    long long row = box.index(form.sites[t].first);
    double v = form.sites[t].second;
    Eigen::RowVectorXcd gpsi = form.g[t].adjoint() * Psi;
    B.row(row) += iu * v * gpsi;
    B -= iu * v * form.g[t] * Psi.row(row);
  }
  Eigen::MatrixXcd comp = Psi.adjoint() * B;
  comp = 0.5 * (comp + comp.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(comp);
  for (long long i = 0; i < es.eigenvalues().size(); ++i)
    rep.compression_spectrum.push_back(es.eigenvalues()[i]);
  rep.min_eig = rep.compression_spectrum.front();
  double norm = std::max(std::abs(sys.values[0]), std::abs(sys.values[sys.values.size() - 1]));
  double tol = 10.0 * default_tolerances().eig_residual * norm;
  for (double v : rep.compression_spectrum)
    if (v < rep.c_floor - tol) ++rep.below_floor;
  return rep;
}

LowestPairs lowest_eigenpairs(const Dispersion& e, const Potential& V, const BoxLattice& box,
                              int k, double tol) {
  const long long n = box.size();
  if (k < 1 || k >= n) throw PreconditionError("lowest_eigenpairs: bad k");
  Eigen::VectorXd diag(n);
  for (long long i = 0; i < n; ++i) diag[i] = V.at(box.site(i));
  auto apply = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd y = apply_hopping(e, box, x);
    y += diag.cwiseProduct(x);
    return y;
  };
  double hnorm_bound = diag.cwiseAbs().maxCoeff();
  for (const auto& [m, c] : e.coeffs()) hnorm_bound += std::abs(c);

  // deterministic start vector
  Eigen::VectorXd v0(n);
  unsigned long long state = 0x9e3779b97f4a7c15ull;
  for (long long i = 0; i < n; ++i) {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    v0[i] = 0.5 + double((state >> 16) & 0xffff) / 65536.0;
  }
  v0.normalize();

  const int max_steps = int(std::min<long long>(n, 360));
  std::vector<Eigen::VectorXd> basis;
  basis.push_back(v0);
  std::vector<double> alpha, beta;
  for (int j = 0; j < max_steps; ++j) {
    Eigen::VectorXd w = apply(basis[j]);
    double a = basis[j].dot(w);
    alpha.push_back(a);
    w -= a * basis[j];
    if (j > 0) w -= beta[j - 1] * basis[j - 1];
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis) w -= q.dot(w) * q;
    double b = w.norm();
    if (b < 1e-13 * hnorm_bound) break;
    beta.push_back(b);
    basis.push_back(w / b);
  }
  const int m = int(alpha.size());
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    T(i, i) = alpha[i];
    if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  LowestPairs out;
  int kk = std::min<int>(k, m);
  out.values = es.eigenvalues().head(kk);
  out.vectors = Eigen::MatrixXd::Zero(n, kk);
  for (int j = 0; j < kk; ++j) {
    for (int i = 0; i < m; ++i) out.vectors.col(j) += es.eigenvectors()(i, j) * basis[i];
    out.vectors.col(j).normalize();
    double resid = (apply(out.vectors.col(j)) - out.values[j] * out.vectors.col(j)).norm();
    if (resid > std::max(tol, 1e-12) * std::max(hnorm_bound, 1.0))
      throw NumericalError("lowest_eigenpairs: Ritz residual " + std::to_string(resid));
  }
  return out;
}

}  // namespace latsch
