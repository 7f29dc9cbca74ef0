#include "latsch/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include <Eigen/Eigenvalues>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SVD>
#include <Eigen/Sparse>

namespace latsch {

namespace {

// ---- Gauss-Kronrod 7/15 -----------------------------------------------------

const double gk_x[8] = {0.991455371120813, 0.949107912342759, 0.864864423359769,
                        0.741531185599394, 0.586087235467691, 0.405845151377397,
                        0.207784955007898, 0.0};
const double gk_wk[8] = {0.022935322010529, 0.063092092629979, 0.104790010322250,
                         0.140653259715525, 0.169004726639267, 0.190350578064785,
                         0.204432940075298, 0.209482141084728};
const double gk_wg[4] = {0.129484966168870, 0.279705391489277, 0.381830050505119,
                         0.417959183673469};

struct GKResult {
  cplx kronrod;
  double err;
};

GKResult gk15(const std::function<cplx(double)>& f, double a, double b) {
  double c = 0.5 * (a + b), h = 0.5 * (b - a);
  cplx fc = f(c);
  cplx resk = fc * gk_wk[7];
  cplx resg = fc * gk_wg[3];
  for (int j = 0; j < 7; ++j) {
    cplx s = f(c - h * gk_x[j]) + f(c + h * gk_x[j]);
    resk += s * gk_wk[j];
    if (j % 2 == 1) resg += s * gk_wg[j / 2];
  }
  return {resk * h, std::abs(resk - resg) * h};
}

struct Interval {
  double a, b;
  cplx val;
  double err;
  long id;
};
struct IntervalLess {
  bool operator()(const Interval& x, const Interval& y) const {
    if (x.err != y.err) return x.err < y.err;
    return x.id > y.id;
  }
};

}  // namespace

IntegralResult integrate_1d(const std::function<cplx(double)>& f, double a, double b,
                            double abs_tol, long max_intervals) {
  IntegralResult res;
  if (a == b) {
    res.converged = true;
    return res;
  }
  std::vector<Interval> pool;
  IntervalLess cmp;
  long id = 0;
  auto g0 = gk15(f, a, b);
  pool.push_back({a, b, g0.kronrod, g0.err, id++});
  cplx total = g0.kronrod;
  double toterr = g0.err;
  long used = 1;
  while (toterr > abs_tol && used < max_intervals) {
    std::pop_heap(pool.begin(), pool.end(), cmp);
    Interval w = pool.back();
    pool.pop_back();
    double m = 0.5 * (w.a + w.b);
    if (m <= w.a || m >= w.b) {
      toterr -= w.err;
      w.err = 0.0;
      pool.push_back(w);
      std::push_heap(pool.begin(), pool.end(), cmp);
      continue;
    }
    auto l = gk15(f, w.a, m);
    auto r = gk15(f, m, w.b);
    total += l.kronrod + r.kronrod - w.val;
    toterr += l.err + r.err - w.err;
    pool.push_back({w.a, m, l.kronrod, l.err, id++});
    std::push_heap(pool.begin(), pool.end(), cmp);
    pool.push_back({m, w.b, r.kronrod, r.err, id++});
    std::push_heap(pool.begin(), pool.end(), cmp);
    ++used;
  }
  total = 0.0;
  toterr = 0.0;
  for (const auto& iv : pool) {
    total += iv.val;
    toterr += iv.err;
  }
  res.value = total;
  res.abs_error_estimate = toterr;
  res.subdivisions = used;
  res.converged = toterr <= abs_tol;
  return res;
}

// ---- Genz-Malik cubature ------------------------------------------------------

namespace {

struct GMRule {
  int d;
  double A1, A2, A3, A4, B5;  // degree-7 weights, relative to region volume
  double A1p, A2p, A3p, A4p;  // embedded degree-5 weights
  double l2, l3, l5;
  explicit GMRule(int dim) : d(dim) {
    A1 = (12824.0 - 9120.0 * d + 400.0 * d * d) / 19683.0;
    A2 = 980.0 / 6561.0;
    A3 = (1820.0 - 400.0 * d) / 19683.0;
    A4 = 200.0 / 19683.0;
    B5 = (6859.0 / 19683.0) / std::pow(2.0, d);
    A1p = (729.0 - 950.0 * d + 50.0 * d * d) / 729.0;
    A2p = 245.0 / 486.0;
    A3p = (265.0 - 100.0 * d) / 1458.0;
    A4p = 25.0 / 729.0;
    l2 = std::sqrt(9.0 / 70.0);
    l3 = std::sqrt(9.0 / 10.0);
    l5 = std::sqrt(9.0 / 19.0);
  }
  long points() const { return 1 + 4L * d + 2L * d * (d - 1) + (1L << d); }
};

struct Region {
  Eigen::VectorXd lo, hi;
  cplx val{0.0};
  double err = 0.0;
  int split_dim = 0;
  long id = 0;
};
struct RegionLess {
  bool operator()(const Region& x, const Region& y) const {
    if (x.err != y.err) return x.err < y.err;
    return x.id > y.id;
  }
};

void gm_evaluate(const GMRule& rule, const std::function<cplx(const Eigen::VectorXd&)>& f,
                 Region& reg) {
  const int d = rule.d;
  Eigen::VectorXd mid = 0.5 * (reg.lo + reg.hi);
  Eigen::VectorXd h = 0.5 * (reg.hi - reg.lo);
  double vol = 1.0;
  for (int k = 0; k < d; ++k) vol *= 2.0 * h[k];

  cplx f0 = f(mid);
  cplx sum2 = 0.0, sum3 = 0.0, sum4 = 0.0, sum5 = 0.0;
  double best_diff = -1.0;
  int best_dim = 0;
  const double ratio = (rule.l2 * rule.l2) / (rule.l3 * rule.l3);
  Eigen::VectorXd p = mid;
  for (int k = 0; k < d; ++k) {
    p[k] = mid[k] + rule.l2 * h[k];
    cplx fa = f(p);
    p[k] = mid[k] - rule.l2 * h[k];
    cplx fb = f(p);
    p[k] = mid[k] + rule.l3 * h[k];
    cplx fc = f(p);
    p[k] = mid[k] - rule.l3 * h[k];
    cplx fe = f(p);
    p[k] = mid[k];
    sum2 += fa + fb;
    sum3 += fc + fe;
    double diff = std::abs((fa + fb - 2.0 * f0) - ratio * (fc + fe - 2.0 * f0));
    if (diff > best_diff) {
      best_diff = diff;
      best_dim = k;
    }
  }
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) {
      for (int sj = -1; sj <= 1; sj += 2)
        for (int sk = -1; sk <= 1; sk += 2) {
          p[j] = mid[j] + sj * rule.l3 * h[j];
          p[k] = mid[k] + sk * rule.l3 * h[k];
          sum4 += f(p);
        }
      p[j] = mid[j];
      p[k] = mid[k];
    }
  for (long corner = 0; corner < (1L << d); ++corner) {
    for (int k = 0; k < d; ++k)
      p[k] = mid[k] + (((corner >> k) & 1) ? rule.l5 : -rule.l5) * h[k];
    sum5 += f(p);
  }

  reg.val = vol * (rule.A1 * f0 + rule.A2 * sum2 + rule.A3 * sum3 + rule.A4 * sum4 +
                   rule.B5 * sum5);
  cplx i5 = vol * (rule.A1p * f0 + rule.A2p * sum2 + rule.A3p * sum3 + rule.A4p * sum4);
  reg.err = std::abs(reg.val - i5);
  reg.split_dim = best_dim;
}

void gk_region(const std::function<cplx(const Eigen::VectorXd&)>& f, Region& reg) {
  auto g = gk15(
      [&](double t) {
        Eigen::VectorXd q(1);
        q[0] = t;
        return f(q);
      },
      reg.lo[0], reg.hi[0]);
  reg.val = g.kronrod;
  reg.err = g.err;
  reg.split_dim = 0;
}

}  // namespace

IntegralResult integrate_nd(const std::function<cplx(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                            const CubatureOptions& opts) {
  const int d = int(lo.size());
  if (int(hi.size()) != d || d < 1) throw PreconditionError("integrate_nd: bad domain");
  GMRule rule(d);
  const long per_region = (d == 1) ? 15 : rule.points();

  std::vector<Region> pool;
  RegionLess cmp;
  long id = 0;
  long evals = 0;
  cplx total = 0.0;
  double toterr = 0.0;

  auto evaluate_and_add = [&](Region&& reg) {
    if (d == 1)
      gk_region(f, reg);
    else
      gm_evaluate(rule, f, reg);
    evals += per_region;
    total += reg.val;
    toterr += reg.err;
    pool.push_back(std::move(reg));
    std::push_heap(pool.begin(), pool.end(), cmp);
  };

  // split so that a declared singular point lies on region corners, never at
  // a cubature node
  std::function<void(Eigen::VectorXd, Eigen::VectorXd)> seed = [&](Eigen::VectorXd rlo,
                                                                   Eigen::VectorXd rhi) {
    if (opts.singular_point) {
      const Eigen::VectorXd& s = *opts.singular_point;
      for (int k = 0; k < d; ++k) {
        double w = rhi[k] - rlo[k];
        if (s[k] > rlo[k] + 1e-13 * w && s[k] < rhi[k] - 1e-13 * w) {
          Eigen::VectorXd mhi = rhi, mlo = rlo;
          mhi[k] = s[k];
          mlo[k] = s[k];
          seed(rlo, mhi);
          seed(std::move(mlo), std::move(rhi));
          return;
        }
      }
    }
    Region reg;
    reg.lo = std::move(rlo);
    reg.hi = std::move(rhi);
    reg.id = id++;
    evaluate_and_add(std::move(reg));
  };
  seed(lo, hi);

  auto target = [&]() { return std::max(opts.abs_tol, opts.rel_tol * std::abs(total)); };

  long splits = 0;
  while (toterr > target() && evals + 2 * per_region <= opts.max_evals && !pool.empty()) {
    std::pop_heap(pool.begin(), pool.end(), cmp);
    Region w = pool.back();
    pool.pop_back();
    int k = w.split_dim;
    double m = 0.5 * (w.lo[k] + w.hi[k]);
    if (m <= w.lo[k] || m >= w.hi[k]) {
      toterr -= w.err;  // machine-resolution region: freeze it
      w.err = 0.0;
      pool.push_back(std::move(w));
      std::push_heap(pool.begin(), pool.end(), cmp);
      continue;
    }
    total -= w.val;
    toterr -= w.err;
    Region left, right;
    left.lo = w.lo;
    left.hi = w.hi;
    left.hi[k] = m;
    left.id = id++;
    right.lo = w.lo;
    right.lo[k] = m;
    right.hi = w.hi;
    right.id = id++;
    evaluate_and_add(std::move(left));
    evaluate_and_add(std::move(right));
    if (++splits % 4096 == 0) {  // control floating-point drift in the totals
      total = 0.0;
      toterr = 0.0;
      for (const auto& r : pool) {
        total += r.val;
        toterr += r.err;
      }
    }
  }
  total = 0.0;
  toterr = 0.0;
  for (const auto& r : pool) {
    total += r.val;
    toterr += r.err;
  }

  IntegralResult res;
  res.value = total;
  res.abs_error_estimate = toterr;
  res.subdivisions = splits;
  res.converged = toterr <= std::max(opts.abs_tol, opts.rel_tol * std::abs(total));
  return res;
}

// ---- trig polynomials ---------------------------------------------------------

cplx TrigPoly::eval(const Eigen::VectorXd& p) const {
  cplx s = 0.0;
  for (const auto& [m, c] : coeffs) {
    double th = 0.0;
    for (int k = 0; k < dim; ++k) th += p[k] * m[k];
    s += c * std::exp(cplx(0.0, th));
  }
  return s;
}

double TrigPoly::cm_envelope(int order) const {
  double env = 0.0;
  for (int q = 0; q <= order; ++q) {
    double s = 0.0;
    for (const auto& [m, c] : coeffs) s += std::pow(norm2(m), q) * std::abs(c);
    env = std::max(env, s);
  }
  return env;
}

// ---- torus Cauchy integrals ----------------------------------------------------

IntegralResult singular_torus_integral(const std::function<cplx(const Eigen::VectorXd&)>& chi,
                                       const Dispersion& e, cplx z, double tol,
                                       long max_evals) {
  if (z.imag() == 0.0) throw PreconditionError("singular_torus_integral: Im z must be nonzero");
  const int d = e.dim();
  double norm = std::pow(2.0 * pi, d);
  CubatureOptions opts;
  opts.abs_tol = tol * norm;
  opts.max_evals = max_evals;
  auto f = [&](const Eigen::VectorXd& p) { return chi(p) / (z - e.eval(p)); };
  IntegralResult r = integrate_nd(f, Eigen::VectorXd::Constant(d, -pi),
                                  Eigen::VectorXd::Constant(d, pi), opts);
  r.value /= norm;
  r.abs_error_estimate /= norm;
  return r;
}

namespace {

// exact inner-axis integration of (1/2pi) int chi/(z - e) dq by residues of
// the rational form in w = e^{iq}
struct InnerAxis {
  int d;
  int en_lo = 0, en_hi = 0;
  std::vector<std::vector<std::pair<ivec, cplx>>> e_terms;
  int cn_lo = 0, cn_hi = 0;
  std::vector<std::vector<std::pair<ivec, cplx>>> chi_terms;

  InnerAxis(const Dispersion& e, const TrigPoly& chi) : d(e.dim()) {
    for (const auto& [m, c] : e.coeffs()) {
      en_lo = std::min(en_lo, m[d - 1]);
      en_hi = std::max(en_hi, m[d - 1]);
    }
    for (const auto& [m, c] : chi.coeffs) {
      cn_lo = std::min(cn_lo, m[d - 1]);
      cn_hi = std::max(cn_hi, m[d - 1]);
    }
    e_terms.resize(en_hi - en_lo + 1);
    chi_terms.resize(cn_hi - cn_lo + 1);
    for (const auto& [m, c] : e.coeffs())
      e_terms[m[d - 1] - en_lo].emplace_back(ivec(m.begin(), m.end() - 1), c);
    for (const auto& [m, c] : chi.coeffs)
      chi_terms[m[d - 1] - cn_lo].emplace_back(ivec(m.begin(), m.end() - 1), c);
  }

  static cplx phase_sum(const std::vector<std::pair<ivec, cplx>>& terms,
                        const Eigen::VectorXd& pp) {
    cplx s = 0.0;
    for (const auto& [m, c] : terms) {
      double th = 0.0;
      for (size_t k = 0; k < m.size(); ++k) th += pp[k] * m[k];
      s += c * std::exp(cplx(0.0, th));
    }
    return s;
  }

  cplx eval(const Eigen::VectorXd& pp, cplx z) const;
};

cplx horner(const std::vector<cplx>& poly, cplx w) {
  cplx s = 0.0;
  for (int k = int(poly.size()) - 1; k >= 0; --k) s = s * w + poly[k];
  return s;
}

std::vector<cplx> poly_roots(std::vector<cplx> poly) {
  double mx = 0.0;
  for (auto& c : poly) mx = std::max(mx, std::abs(c));
  while (poly.size() > 1 && std::abs(poly.back()) < 1e-13 * mx) poly.pop_back();
  int deg = int(poly.size()) - 1;
  if (deg < 1) return {};
  std::vector<cplx> roots;
  if (deg == 1) {
    roots = {-poly[0] / poly[1]};
  } else if (deg == 2) {
    cplx a = poly[2], b = poly[1], c = poly[0];
    cplx disc = std::sqrt(b * b - 4.0 * a * c);
    // stable quadratic: pick the sign that avoids cancellation
    cplx q = (std::abs(b + disc) > std::abs(b - disc)) ? -0.5 * (b + disc) : -0.5 * (b - disc);
    roots = {q / a, c / q};
  } else {
    Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(deg, deg);
    for (int k = 0; k < deg; ++k) comp(k, deg - 1) = -poly[k] / poly[deg];
    for (int k = 1; k < deg; ++k) comp(k, k - 1) = 1.0;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
    roots.assign(es.eigenvalues().data(), es.eigenvalues().data() + deg);
  }
  std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return roots;
}

cplx InnerAxis::eval(const Eigen::VectorXd& pp, cplx z) const {
  std::vector<cplx> ce(e_terms.size()), cc(chi_terms.size());
  double emax = 0.0;
  for (size_t j = 0; j < e_terms.size(); ++j) {
    ce[j] = phase_sum(e_terms[j], pp);
    emax = std::max(emax, std::abs(ce[j]));
  }
  for (size_t j = 0; j < chi_terms.size(); ++j) cc[j] = phase_sum(chi_terms[j], pp);

  double trim = 1e-13 * (emax + std::abs(z));
  int lo = en_lo, hi = en_hi;
  while (lo < hi && std::abs(ce[lo - en_lo]) < trim) ++lo;
  while (hi > lo && std::abs(ce[hi - en_lo]) < trim) --hi;

  if (lo == hi && lo == 0) {
    // inner-constant dispersion: only the zero mode of chi survives
    cplx c0 = (0 >= cn_lo && 0 <= cn_hi) ? cc[-cn_lo] : cplx(0.0);
    cplx e0 = e_terms.empty() ? cplx(0.0) : ce[-en_lo];
    return c0 / (z - e0);
  }
  if (lo > 0 || hi < 0)
    throw NumericalError("torus_cauchy_integral: inner coefficient support degenerated");

  // P(w) = w^{-lo}(z - sum_n c_n w^n)
  const int D = hi - lo;
  std::vector<cplx> P(D + 1, 0.0);
  for (int n = lo; n <= hi; ++n) P[n - lo] -= ce[n - en_lo];
  P[-lo] += z;

  auto roots = poly_roots(P);
  std::vector<cplx> inside;
  for (cplx w : roots) {
    double rr = std::abs(w);
    if (std::abs(rr - 1.0) < 1e-11)
      throw NumericalError("torus_cauchy_integral: pole on the unit circle");
    if (rr < 1.0) inside.push_back(w);
  }
  if (int(inside.size()) != -lo)
    throw NumericalError("torus_cauchy_integral: unexpected pole count inside the disk");

  auto chi_eval = [&](cplx w) {
    cplx s = 0.0;
    for (int j = cn_lo; j <= cn_hi; ++j)
      if (cc[j - cn_lo] != cplx(0.0)) s += cc[j - cn_lo] * std::pow(w, j);
    return s;
  };
  auto h_eval = [&](cplx w) { return chi_eval(w) * std::pow(w, -lo - 1) / horner(P, w); };

  auto Pd = [&]() {
    std::vector<cplx> dp;
    for (size_t k = 1; k < P.size(); ++k) dp.push_back(double(k) * P[k]);
    return dp;
  }();

  cplx sum = 0.0;
  std::vector<bool> used(inside.size(), false);
  for (size_t i = 0; i < inside.size(); ++i) {
    if (used[i]) continue;
    std::vector<size_t> group{i};
    for (size_t j = i + 1; j < inside.size(); ++j)
      if (!used[j] && std::abs(inside[j] - inside[i]) < 1e-6 * (1.0 + std::abs(inside[i])))
        group.push_back(j);
    if (group.size() == 1) {
      cplx w = inside[i];
      sum += chi_eval(w) * std::pow(w, -lo - 1) / horner(Pd, w);
      used[i] = true;
      continue;
    }
    // near-multiple roots: integrate around the cluster on a small circle
    cplx center = 0.0;
    for (size_t j : group) center += inside[j];
    center /= double(group.size());
    double spread = 0.0;
    for (size_t j : group) spread = std::max(spread, std::abs(inside[j] - center));
    double rad = std::max(1e-5, 4.0 * spread);
    for (size_t j = 0; j < inside.size(); ++j) {
      bool in_group = false;
      for (size_t g : group) in_group = in_group || g == j;
      if (!in_group) rad = std::min(rad, 0.4 * std::abs(inside[j] - center));
    }
    rad = std::min(rad, 0.4 * (1.0 - std::abs(center)));
    rad = std::min(rad, 0.4 * std::abs(center));
    if (rad <= 1e-14)
      throw NumericalError("torus_cauchy_integral: cannot isolate pole cluster");
    const int N = 256;
    cplx acc = 0.0;
    for (int k = 0; k < N; ++k) {
      double th = 2.0 * pi * k / N;
      cplx w = center + rad * std::exp(cplx(0.0, th));
      acc += h_eval(w) * std::exp(cplx(0.0, th));
    }
    sum += acc * rad / double(N);
    for (size_t j : group) used[j] = true;
  }

  // residue at w = 0 when chi carries inner frequencies at or below lo
  int clo = cn_lo;
  while (clo <= cn_hi && cc[clo - cn_lo] == cplx(0.0)) ++clo;
  if (clo <= lo) {
    const int K = lo - clo;
    std::vector<cplx> t(K + 1, 0.0);
    t[0] = 1.0 / P[0];
    for (int k = 1; k <= K; ++k) {
      cplx acc = 0.0;
      for (int j = 1; j <= std::min(k, D); ++j) acc += P[j] * t[k - j];
      t[k] = -acc / P[0];
    }
    for (int s = clo; s <= std::min(lo, cn_hi); ++s)
      if (cc[s - cn_lo] != cplx(0.0)) sum += cc[s - cn_lo] * t[lo - s];
  }
  return sum;
}

}  // namespace

namespace {

// nested one-dimensional adaptive integration over the outer axes: the
// inner-integrated value has isolated point singularities along each outer
// axis, which one-dimensional bisection resolves at polylog cost in Im z
struct NestedTorus {
  const InnerAxis& inner;
  cplx z;
  bool converged = true;
  long evals = 0;

  cplx run(Eigen::VectorXd& pp, int axis, double abs_tol) {
    if (axis < 0) {
      ++evals;
      return inner.eval(pp, z);
    }
    auto f = [&](double t) {
      pp[axis] = t;
      return run(pp, axis - 1, abs_tol / (2.0 * pi * 8.0));
    };
    auto r = integrate_1d(f, -pi, pi, abs_tol, 4000);
    converged = converged && r.converged;
    return r.value;
  }
};

}  // namespace

IntegralResult torus_cauchy_integral(const Dispersion& e, const TrigPoly& chi, cplx z,
                                     double tol, long max_evals) {
  if (z.imag() == 0.0) throw PreconditionError("torus_cauchy_integral: Im z must be nonzero");
  if (chi.dim != e.dim()) throw PreconditionError("torus_cauchy_integral: dimension mismatch");
  const int d = e.dim();
  InnerAxis inner(e, chi);
  if (d == 1) {
    IntegralResult r;
    r.value = inner.eval(Eigen::VectorXd(0), z);
    r.abs_error_estimate = 1e-13 * std::abs(r.value);
    r.subdivisions = 0;
    r.converged = true;
    return r;
  }
  double norm = std::pow(2.0 * pi, d - 1);
  NestedTorus nest{inner, z};
  Eigen::VectorXd pp(d - 1);
  cplx value = nest.run(pp, d - 2, tol * norm);
  IntegralResult r;
  r.value = value / norm;
  r.abs_error_estimate = tol;
  r.subdivisions = nest.evals;
  r.converged = nest.converged && nest.evals <= max_evals;
  return r;
}

// ---- sphere rules and model integrals ------------------------------------------

namespace {

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double t = std::cos(pi * (i + 0.75) / (n + 0.5));
    double p0 = 0.0, p1 = 0.0;
    for (int it = 0; it < 100; ++it) {
      p0 = 1.0;
      p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * t * p1 - j * p2) / (j + 1.0);
      }
      double dp = n * (t * p0 - p1) / (t * t - 1.0);
      double dt = -p0 / dp;
      t += dt;
      if (std::abs(dt) < 1e-15) break;
    }
    p0 = 1.0;
    p1 = 0.0;
    for (int j = 0; j < n; ++j) {
      double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j + 1.0) * t * p1 - j * p2) / (j + 1.0);
    }
    double dp = n * (t * p0 - p1) / (t * t - 1.0);
    x[i] = -t;
    x[n - 1 - i] = t;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

struct SphereRule {
  std::vector<Eigen::VectorXd> pts;
  std::vector<double> w;  // sums to |S^dim|
};

SphereRule sphere_rule(int sphere_dim) {
  SphereRule r;
  if (sphere_dim == 0) {
    Eigen::VectorXd p(1);
    p[0] = 1.0;
    r.pts.push_back(p);
    p[0] = -1.0;
    r.pts.push_back(p);
    r.w = {1.0, 1.0};
    return r;
  }
  if (sphere_dim == 1) {
    const int N = 64;
    for (int k = 0; k < N; ++k) {
      double th = 2.0 * pi * k / N;
      Eigen::VectorXd p(2);
      p[0] = std::cos(th);
      p[1] = std::sin(th);
      r.pts.push_back(p);
      r.w.push_back(2.0 * pi / N);
    }
    return r;
  }
  SphereRule base = sphere_rule(sphere_dim - 1);
  std::vector<double> x, w;
  gauss_legendre(32, x, w);
  for (size_t i = 0; i < x.size(); ++i) {
    double u = x[i];
    double fac = std::pow(std::max(0.0, 1.0 - u * u), 0.5 * (sphere_dim - 2));
    double s = std::sqrt(std::max(0.0, 1.0 - u * u));
    for (size_t j = 0; j < base.pts.size(); ++j) {
      Eigen::VectorXd p(sphere_dim + 1);
      p.head(sphere_dim) = s * base.pts[j];
      p[sphere_dim] = u;
      r.pts.push_back(p);
      r.w.push_back(w[i] * fac * base.w[j]);
    }
  }
  return r;
}

// mu(t) = -1/2 Log(t + ib); then d/ds mu(a - s^2) = s/(a + ib - s^2), which
// carries both the ln and the arctan parts of the integration by parts
cplx mu_kernel(double t, double b) { return -0.5 * std::log(cplx(t, b)); }

IntegralResult gk_with_splits(const std::function<cplx(double)>& f, double a, double b,
                              std::vector<double> splits, double tol) {
  splits.push_back(a);
  splits.push_back(b);
  std::sort(splits.begin(), splits.end());
  cplx total = 0.0;
  double err = 0.0;
  bool conv = true;
  for (size_t i = 0; i + 1 < splits.size(); ++i) {
    double lo = std::max(a, splits[i]), hi = std::min(b, splits[i + 1]);
    if (hi <= lo) continue;
    auto r = integrate_1d(f, lo, hi, tol / double(splits.size()));
    total += r.value;
    err += r.abs_error_estimate;
    conv = conv && r.converged;
  }
  IntegralResult res;
  res.value = total;
  res.abs_error_estimate = err;
  res.converged = conv;
  return res;
}

}  // namespace

double c1_norm(const BallField& field, int dim, double r, int grid_n) {
  double mx = 0.0;
  std::vector<int> idx(dim, 0);
  while (true) {
    Eigen::VectorXd x(dim);
    for (int k = 0; k < dim; ++k) x[k] = -r + (2.0 * r * idx[k]) / (grid_n - 1);
    mx = std::max(mx, std::abs(field.f(x)));
    Eigen::VectorXd g = field.grad(x);
    for (int k = 0; k < dim; ++k) mx = std::max(mx, std::abs(g[k]));
    int k = 0;
    while (k < dim && ++idx[k] == grid_n) idx[k++] = 0;
    if (k == dim) break;
  }
  return mx;
}

cplx model_integral_L1(const BallField& field, int d, double b, double r, double tol) {
  if (b == 0.0) throw PreconditionError("model_integral_L1: b must be nonzero");
  if (d < 1) throw PreconditionError("model_integral_L1: d >= 1");
  std::function<double(double)> F;
  SphereRule sr;
  std::vector<double> gx, gw;
  if (d == 1) {
    F = [&](double x) {
      Eigen::VectorXd q(1);
      q[0] = x;
      return field.f(q);
    };
  } else {
    sr = sphere_rule(d - 2);
    gauss_legendre(32, gx, gw);
    F = [&](double x) {
      double acc = 0.0;
      for (size_t i = 0; i < gx.size(); ++i) {
        double t = 0.5 * r * (gx[i] + 1.0);
        double jac = 0.5 * r * gw[i] * std::pow(t, d - 2);
        for (size_t j = 0; j < sr.pts.size(); ++j) {
          Eigen::VectorXd q(d);
          q[0] = x;
          q.tail(d - 1) = t * sr.pts[j];
          acc += jac * sr.w[j] * field.f(q);
        }
      }
      return acc;
    };
  }
  double F0 = F(0.0);
  if (!std::isfinite(F0)) throw NumericalError("model_integral_L1: non-finite field sample");
  // int_{-r}^{r} dx/(ib - x) = -[log(ib - x)]_{-r}^{r}
  cplx c0 = -(std::log(cplx(-r, b)) - std::log(cplx(r, b)));
  auto g = gk_with_splits([&](double x) { return cplx(F(x) - F0) / cplx(-x, b); }, -r, r, {0.0},
                          tol);
  return F0 * c0 + g.value;
}

cplx model_integral_L2(const BallField& field, double a, double b, int d, double r, double tol) {
  if (b == 0.0) throw PreconditionError("model_integral_L2: b must be nonzero");
  if (d < 3) throw PreconditionError("model_integral_L2: d >= 3");
  SphereRule sr = sphere_rule(d - 1);
  auto gpair = [&](double s, double& g, double& gp) {
    g = 0.0;
    gp = 0.0;
    for (size_t j = 0; j < sr.pts.size(); ++j) {
      Eigen::VectorXd x = s * sr.pts[j];
      g += sr.w[j] * field.f(x);
      gp += sr.w[j] * sr.pts[j].dot(field.grad(x));
    }
    if (!std::isfinite(g) || !std::isfinite(gp))
      throw NumericalError("model_integral_L2: non-finite field sample");
  };
  double gr, grp;
  gpair(r, gr, grp);
  cplx boundary = gr * std::pow(r, d - 2) * mu_kernel(a - r * r, b);
  auto integrand = [&](double s) -> cplx {
    double g, gp;
    gpair(s, g, gp);
    double lead = gp * std::pow(s, d - 2) + (d - 2) * g * std::pow(s, d - 3);
    return lead * mu_kernel(a - s * s, b);
  };
  std::vector<double> splits;
  if (a > 0 && std::sqrt(a) < r) splits.push_back(std::sqrt(a));
  auto g = gk_with_splits(integrand, 0.0, r, splits, tol);
  return boundary - g.value;
}

namespace {

// Chebyshev tensor interpolant on [0,r]^2 built from Chebyshev-Lobatto samples
struct Cheb2 {
  int n = 0;
  double r = 1.0;
  Eigen::MatrixXd c;

  static Cheb2 build(int n, double r, const std::function<double(double, double)>& f) {
    Cheb2 ch;
    ch.n = n;
    ch.r = r;
    Eigen::MatrixXd M(n, n);
    std::vector<double> nodes(n);
    for (int i = 0; i < n; ++i) nodes[i] = 0.5 * r * (1.0 + std::cos(pi * i / (n - 1)));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) M(i, j) = f(nodes[i], nodes[j]);
    Eigen::MatrixXd T(n, n);
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i) {
        double fac = 2.0 / (n - 1);
        if (i == 0 || i == n - 1) fac *= 0.5;
        T(k, i) = fac * std::cos(pi * k * i / (n - 1));
      }
    ch.c = T * M * T.transpose();
    return ch;
  }

  double eval(double x, double y) const {
    if (x < 0 || y < 0 || x > r || y > r) return 0.0;
    double xi = 2.0 * x / r - 1.0, eta = 2.0 * y / r - 1.0;
    Eigen::VectorXd cy(n);
    for (int k = 0; k < n; ++k) {
      double b1 = 0.0, b2 = 0.0;
      for (int j = n - 1; j >= 1; --j) {
        double w = c(k, j) * ((j == n - 1) ? 0.5 : 1.0);
        double tmp = 2.0 * eta * b1 - b2 + w;
        b2 = b1;
        b1 = tmp;
      }
      cy[k] = eta * b1 - b2 + 0.5 * c(k, 0);
    }
    double b1 = 0.0, b2 = 0.0;
    for (int k = n - 1; k >= 1; --k) {
      double w = cy[k] * ((k == n - 1) ? 0.5 : 1.0);
      double tmp = 2.0 * xi * b1 - b2 + w;
      b2 = b1;
      b1 = tmp;
    }
    return xi * b1 - b2 + 0.5 * cy[0];
  }
};

}  // namespace

cplx model_integral_L3(const BallField& field, double a, double b, int d, int m, double r,
                       double tol) {
  if (b == 0.0) throw PreconditionError("model_integral_L3: b must be nonzero");
  if (d < 3 || m < 1 || m > d - 1) throw PreconditionError("model_integral_L3: bad (d, m)");
  const int dx = d - m;
  SphereRule sx = sphere_rule(dx - 1);
  SphereRule sy = sphere_rule(m - 1);

  auto averages = [&](double xv, double yv, double& g, double& gxr, double& gyr) {
    g = gxr = gyr = 0.0;
    for (size_t p = 0; p < sx.pts.size(); ++p)
      for (size_t q = 0; q < sy.pts.size(); ++q) {
        Eigen::VectorXd pt(d);
        pt.head(dx) = xv * sx.pts[p];
        pt.tail(m) = yv * sy.pts[q];
        double wt = sx.w[p] * sy.w[q];
        g += wt * field.f(pt);
        Eigen::VectorXd gr = field.grad(pt);
        gxr += wt * sx.pts[p].dot(gr.head(dx));
        gyr += wt * sy.pts[q].dot(gr.tail(m));
      }
    if (!std::isfinite(g) || !std::isfinite(gxr) || !std::isfinite(gyr))
      throw NumericalError("model_integral_L3: non-finite field sample");
  };
  const int N = 33;
  Eigen::MatrixXd GV(N, N), GX(N, N), GY(N, N);
  {
    std::vector<double> nodes(N);
    for (int i = 0; i < N; ++i) nodes[i] = 0.5 * r * (1.0 + std::cos(pi * i / (N - 1)));
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        double g, gx, gy;
        averages(nodes[i], nodes[j], g, gx, gy);
        GV(i, j) = g;
        GX(i, j) = gx;
        GY(i, j) = gy;
      }
  }
  auto make = [&](const Eigen::MatrixXd& M) {
    Cheb2 ch;
    ch.n = N;
    ch.r = r;
    Eigen::MatrixXd T(N, N);
    for (int k = 0; k < N; ++k)
      for (int i = 0; i < N; ++i) {
        double fac = 2.0 / (N - 1);
        if (i == 0 || i == N - 1) fac *= 0.5;
        T(k, i) = fac * std::cos(pi * k * i / (N - 1));
      }
    ch.c = T * M * T.transpose();
    return ch;
  };
  Cheb2 G = make(GV), Gx = make(GX), Gy = make(GY);

  const double alpha = dx - 1, beta = m - 1;
  auto gt = [&](double s, double u) {
    double pa = std::pow(1.0 + u, alpha), pb = std::pow(1.0 - u, beta);
    return pa * pb * G.eval(s * (1.0 + u), s * (1.0 - u));
  };
  auto dgt = [&](double s, double u) {
    double xv = s * (1.0 + u), yv = s * (1.0 - u);
    double pa = std::pow(1.0 + u, alpha), pb = std::pow(1.0 - u, beta);
    double dpref = 0.0;
    if (alpha > 0) dpref += alpha * std::pow(1.0 + u, alpha - 1) * pb;
    if (beta > 0) dpref -= beta * pa * std::pow(1.0 - u, beta - 1);
    return dpref * G.eval(xv, yv) + pa * pb * s * (Gx.eval(xv, yv) - Gy.eval(xv, yv));
  };

  auto outer = [&](double s) -> cplx {
    double q = 4.0 * s * s;
    cplx bnd = gt(s, 1.0) * mu_kernel(a - q, b) - gt(s, -1.0) * mu_kernel(a + q, b);
    std::vector<double> usplit;
    if (q > 1e-14) {
      double u0 = a / q;
      if (u0 > -1.0 && u0 < 1.0) usplit.push_back(u0);
    }
    auto in = gk_with_splits([&](double u) -> cplx { return dgt(s, u) * mu_kernel(a - q * u, b); },
                             -1.0, 1.0, usplit, tol * 0.1);
    return std::pow(s, d - 3) * (bnd - in.value);
  };
  std::vector<double> ssplit;
  if (a > 0 && std::sqrt(a) / 2.0 < r) ssplit.push_back(std::sqrt(a) / 2.0);
  return gk_with_splits(outer, 0.0, r, ssplit, tol).value;
}

// ---- scans -----------------------------------------------------------------------

namespace {

bool detect_blowup(const std::vector<double>& bs, const std::vector<double>& ratios) {
  if (bs.size() < 2) return false;
  double bmin = bs.back();
  std::vector<double> window;  // ratios over the final two decades, b decreasing
  for (size_t i = 0; i < bs.size(); ++i)
    if (bs[i] <= 100.0 * bmin * (1.0 + 1e-12)) window.push_back(ratios[i]);
  if (window.size() < 2) return false;
  bool monotone = true;
  for (size_t i = 0; i + 1 < window.size(); ++i) monotone = monotone && window[i + 1] >= window[i];
  return monotone && window.back() > 2.0 * window.front();
}

}  // namespace

BoundScan uniform_bound_scan(ScanKind kind, const BallField& field, int d, int m,
                             const std::vector<double>& a_grid,
                             const std::vector<double>& b_schedule, double r) {
  BoundScan scan;
  double env_c1 = c1_norm(field, d, r);
  for (double a : a_grid) {
    std::vector<double> bs, ratios;
    for (double b : b_schedule) {
      cplx v;
      double env = 0.0;
      switch (kind) {
        case ScanKind::L1:
          v = model_integral_L1(field, d, b, r);
          env = env_c1;
          scan.kind = "L1";
          break;
        case ScanKind::L2:
          v = model_integral_L2(field, a, b, d, r);
          env = env_c1 * (1.0 + a * a + b * b);
          scan.kind = "L2";
          break;
        case ScanKind::L3:
          v = model_integral_L3(field, a, b, d, m, r);
          env = env_c1 * (1.0 + a * a + b * b);
          scan.kind = "L3";
          break;
        case ScanKind::torus:
          throw PreconditionError("use uniform_bound_scan_torus for the torus case");
      }
      BoundScanPoint pt;
      pt.a = a;
      pt.b = b;
      pt.value_abs = std::abs(v);
      pt.envelope = env;
      pt.ratio = env > 0 ? pt.value_abs / env : 0.0;
      scan.points.push_back(pt);
      bs.push_back(b);
      ratios.push_back(pt.ratio);
      scan.sup_ratio = std::max(scan.sup_ratio, pt.ratio);
    }
    scan.blowup_flag = scan.blowup_flag || detect_blowup(bs, ratios);
  }
  return scan;
}

BoundScan uniform_bound_scan_torus(const Dispersion& e, const TrigPoly& chi,
                                   const std::vector<double>& re_grid,
                                   const std::vector<double>& b_schedule, double tol) {
  BoundScan scan;
  scan.kind = "torus";
  double env = std::max(chi.cm_envelope(2), 1e-300);
  for (double a : re_grid) {
    std::vector<double> bs, ratios;
    for (double b : b_schedule) {
      auto r = torus_cauchy_integral(e, chi, cplx(a, b), tol);
      BoundScanPoint pt;
      pt.a = a;
      pt.b = b;
      pt.value_abs = std::abs(r.value);
      pt.envelope = env;
      pt.ratio = pt.value_abs / env;
      scan.points.push_back(pt);
      bs.push_back(b);
      ratios.push_back(pt.ratio);
      scan.sup_ratio = std::max(scan.sup_ratio, pt.ratio);
    }
    scan.blowup_flag = scan.blowup_flag || detect_blowup(bs, ratios);
  }
  return scan;
}

// ---- finite-volume resolvents ----------------------------------------------------

double eta_guard(double e_max, const BoxLattice& box) {
  return 8.0 * e_max / double(std::max(1, box.half_width));
}

namespace {

Eigen::SparseMatrix<cplx> shifted_hamiltonian(const Dispersion& e, const Potential& V, cplx z,
                                              const BoxLattice& box) {
  const long long n = box.size();
  std::vector<Eigen::Triplet<cplx>> trips;
  trips.reserve(size_t(n) * (e.coeffs().size() + 1));
  for (long long i = 0; i < n; ++i) {
    ivec x = box.site(i);
    cplx diag = z - V.at(x);
    for (const auto& [m, c] : e.coeffs()) {
      ivec y(x.size());
      bool ok = true;
      for (size_t k = 0; k < x.size(); ++k) {
        y[k] = x[k] - m[k];
        ok = ok && std::abs(y[k]) <= box.half_width;
      }
      if (!ok) continue;
      long long j = box.index(y);
      if (j == i)
        diag -= c;
      else
        trips.emplace_back(int(i), int(j), -c);
    }
    trips.emplace_back(int(i), int(i), diag);
  }
  Eigen::SparseMatrix<cplx> M(n, n);
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

Eigen::VectorXcd solve_resolvent(const Eigen::SparseMatrix<cplx>& M, const Eigen::VectorXcd& rhs,
                                 double tol) {
  Eigen::BiCGSTAB<Eigen::SparseMatrix<cplx>> solver;
  solver.setTolerance(tol);
  solver.setMaxIterations(20000);
  solver.compute(M);
  Eigen::VectorXcd u = solver.solve(rhs);
  double resid = (M * u - rhs).norm();
  if (!(resid <= default_tolerances().linear_solve * std::max(1.0, rhs.norm())))
    throw NumericalError("resolvent solve residual " + std::to_string(resid));
  return u;
}

}  // namespace

Eigen::VectorXcd resolvent_column(const Dispersion& e, const Potential& V, cplx z,
                                  const ivec& y, const BoxLattice& box,
                                  const ResolventOptions& opts) {
  if (z.imag() == 0.0) throw PreconditionError("resolvent_column: Im z must be nonzero");
  if (!box.contains(y)) throw PreconditionError("resolvent_column: source site outside box");
  if (!opts.override_guard) {
    double emax = opts.e_max;
    if (emax <= 0.0) emax = critical_report(e).e_max;
    if (std::abs(z.imag()) < eta_guard(emax, box))
      throw PreconditionError("resolvent_column: |Im z| below the eta(l) guard");
  }
  Eigen::SparseMatrix<cplx> M = shifted_hamiltonian(e, V, z, box);
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(box.size());
  rhs[box.index(y)] = 1.0;
  return solve_resolvent(M, rhs, opts.solve_tol);
}

cplx resolvent_kernel(const Dispersion& e, const Potential& V, cplx z, const ivec& x,
                      const ivec& y, const BoxLattice& box, const ResolventOptions& opts) {
  if (!box.contains(x)) throw PreconditionError("resolvent_kernel: site outside box");
  Eigen::VectorXcd u = resolvent_column(e, V, z, y, box, opts);
  return u[box.index(x)];
}

// ---- empirical resolvent constants ------------------------------------------------

namespace {
double phi_of_support(const std::vector<std::pair<ivec, double>>& vals, int mm, int nn) {
  double s = 0.0;
  for (const auto& [x, v] : vals)
    s += std::pow(std::abs(v), 1.0 / mm) * std::pow(norm2(x) + 1.0, nn);
  return std::pow(s, mm);
}
}  // namespace

CResolvEstimate estimate_c_resolv(const Dispersion& e, const std::vector<Potential>& probes,
                                  const std::vector<cplx>& z_list, const BoxLattice& box) {
  CResolvEstimate out;
  out.expressions = {{"V.R.V/Phi22", 0.0},
                     {"V.R.AV/Phi23", 0.0},
                     {"VA.R.V/Phi23", 0.0},
                     {"VA.R.AV/Phi23", 0.0},
                     {"kernel/(1+|x|)^2(1+|y|)^2", 0.0},
                     {"|V.R.dx|/(1+|x|)^2 Phi22^(1/2)", 0.0},
                     {"|VA.R.dx|/(1+|x|)^2 Phi23^(1/2)", 0.0}};
  double emax = critical_report(e).e_max;
  Potential zero = Potential::zero(e.dim());
  double guard = eta_guard(emax, box);

  for (const auto& V : probes) {
    auto supp = V.support_in(box);
    if (supp.empty()) throw PreconditionError("estimate_c_resolv: empty probe support");
    double p22 = phi_of_support(supp, 2, 2);
    double p23 = phi_of_support(supp, 2, 3);
    out.phi22.push_back(p22);
    out.phi23.push_back(p23);
    const int s = int(supp.size());
    std::vector<cplx> vhalf(s);
    for (int j = 0; j < s; ++j) {
      double v = supp[j].second;
      vhalf[j] = v >= 0 ? cplx(std::sqrt(v)) : cplx(0.0, std::sqrt(-v));
    }
    for (cplx z : z_list) {
      if (std::abs(z.imag()) < guard)
        throw PreconditionError("estimate_c_resolv: z below the eta(l) guard");
      Eigen::SparseMatrix<cplx> M = shifted_hamiltonian(e, zero, z, box);
      std::vector<Eigen::VectorXcd> u(s), w(s), Au(s), Aw(s);
      for (int j = 0; j < s; ++j) {
        Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(box.size());
        rhs[box.index(supp[j].first)] = 1.0;
        u[j] = solve_resolvent(M, rhs, 1e-12);
        Eigen::VectorXcd g = conjugate_column(e, box, supp[j].first);
        w[j] = solve_resolvent(M, g, 1e-12);
        Au[j] = apply_conjugate(e, box, u[j]);
        Aw[j] = apply_conjugate(e, box, w[j]);
      }
      Eigen::MatrixXcd T1(s, s), T2(s, s), T3(s, s), T4(s, s);
      for (int i = 0; i < s; ++i) {
        long long row = box.index(supp[i].first);
        for (int j = 0; j < s; ++j) {
          T1(i, j) = vhalf[i] * u[j][row] * vhalf[j];
          T2(i, j) = vhalf[i] * w[j][row] * vhalf[j];
          T3(i, j) = vhalf[i] * Au[j][row] * vhalf[j];
          T4(i, j) = vhalf[i] * Aw[j][row] * vhalf[j];
        }
      }
      auto opnorm = [](const Eigen::MatrixXcd& T) {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(T);
        return svd.singularValues()[0];
      };
      out.expressions[0].max_ratio = std::max(out.expressions[0].max_ratio, opnorm(T1) / p22);
      out.expressions[1].max_ratio = std::max(out.expressions[1].max_ratio, opnorm(T2) / p23);
      out.expressions[2].max_ratio = std::max(out.expressions[2].max_ratio, opnorm(T3) / p23);
      out.expressions[3].max_ratio = std::max(out.expressions[3].max_ratio, opnorm(T4) / p23);
      for (int j = 0; j < s; ++j) {
        double wy = std::pow(1.0 + norm2(supp[j].first), 2);
        double kr = 0.0;
        for (long long i = 0; i < box.size(); ++i) {
          double wx = std::pow(1.0 + norm2(box.site(i)), 2);
          kr = std::max(kr, std::abs(u[j][i]) / (wx * wy));
        }
        out.expressions[4].max_ratio = std::max(out.expressions[4].max_ratio, kr);
        double n5 = 0.0, n6 = 0.0;
        for (int i = 0; i < s; ++i) {
          long long row = box.index(supp[i].first);
          n5 += std::norm(vhalf[i] * u[j][row]);
          n6 += std::norm(vhalf[i] * Au[j][row]);
        }
        out.expressions[5].max_ratio =
            std::max(out.expressions[5].max_ratio, std::sqrt(n5) / (wy * std::sqrt(p22)));
        out.expressions[6].max_ratio =
            std::max(out.expressions[6].max_ratio, std::sqrt(n6) / (wy * std::sqrt(p23)));
      }
    }
  }
  out.c_hat = 0.0;
  for (size_t i = 0; i < out.expressions.size(); ++i) {
    double r = out.expressions[i].max_ratio;
    if (i == 4) r = std::sqrt(r);  // the kernel bound carries c^2
    out.c_hat = std::max(out.c_hat, r);
  }
  out.c_default = out.c_hat > 0 ? 1.0 / (2.0 * out.c_hat) : 0.0;
  return out;
}

// ---- scaled modified Bessel ---------------------------------------------------------

double scaled_bessel_i(int n, double z) {
  n = std::abs(n);
  if (z < 0) throw PreconditionError("scaled_bessel_i: z >= 0");
  if (z == 0.0) return n == 0 ? 1.0 : 0.0;
  if (z < 2e4) {
    // e^{-z} I_n(z) = (1/pi) int_0^pi e^{z(cos t - 1)} cos(n t) dt
    int N = 64 + int(8.0 * std::sqrt(z));
    double acc = 0.0;
    for (int k = 0; k <= N; ++k) {
      double t = pi * k / N;
      double w = (k == 0 || k == N) ? 0.5 : 1.0;
      acc += w * std::exp(z * (std::cos(t) - 1.0)) * std::cos(n * t);
    }
    return acc / N;
  }
  double mu = 4.0 * double(n) * double(n);
  double i8z = 1.0 / (8.0 * z);
  double t1 = (mu - 1.0) * i8z;
  double t2 = t1 * (mu - 9.0) * i8z / 2.0;
  double t3 = t2 * (mu - 25.0) * i8z / 3.0;
  return (1.0 - t1 + t2 - t3) / std::sqrt(2.0 * pi * z);
}

}  // namespace latsch
