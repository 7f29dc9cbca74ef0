#include "latsch/functionals.hpp"

#include <algorithm>
#include <cmath>

namespace latsch {

namespace {

double phi_term(double v, const ivec& x, int m, int n) {
  return std::pow(std::abs(v), 1.0 / m) * std::pow(norm2(x) + 1.0, n);
}

// enumerate sites with |x| in [k, k+1) in dimension d
void shell_sites(int d, int k, std::vector<ivec>& out) {
  out.clear();
  ivec x(d, -(k + 1));
  double lo2 = double(k) * k, hi2 = double(k + 1) * (k + 1);
  while (true) {
    double r2 = 0.0;
    for (int c : x) r2 += double(c) * c;
    if (r2 >= lo2 && r2 < hi2) out.push_back(x);
    int j = 0;
    while (j < d && ++x[j] == k + 2) x[j++] = -(k + 1);
    if (j == d) break;
  }
}

}  // namespace

PhiValue phi(const Potential& V, int m, int n, double radius) {
  if (m < 1) throw PreconditionError("phi: m >= 1 required");
  if (n < 0) throw PreconditionError("phi: n >= 0 required");
  PhiValue out;
  out.m = m;
  out.n = n;
  if (V.kind() == Potential::Kind::finite) {
    // largest terms last for a stable ascending sum
    std::vector<double> terms;
    for (const auto& [x, v] : V.values()) terms.push_back(phi_term(v, x, m, n));
    std::sort(terms.begin(), terms.end());
    double s = 0.0;
    for (double t : terms) s += t;
    out.value = std::pow(s, m);
    out.partial_sums = {s};
    return out;
  }

  // closed-form family: exponent test first, then shell sums
  if (V.family_name() == "power") {
    double beta = V.params().at("beta");
    // per-site term ~ |x|^{n - beta/m}; the shell sum diverges when
    // (d-1) + n - beta/m >= -1
    if (n - beta / double(m) >= -double(V.dim())) {
      out.finite = false;
      out.value = std::numeric_limits<double>::infinity();
      return out;
    }
  }
  double rad = radius > 0 ? radius : V.truncation_radius();
  if (rad <= 0) throw PreconditionError("phi: closed-form potential needs a truncation radius");
  double s = 0.0;
  std::vector<double> shells;
  std::vector<ivec> sites;
  int nondecreasing = 0;
  for (int k = 0; k <= int(rad); ++k) {
    shell_sites(V.dim(), k, sites);
    double shell = 0.0;
    for (const auto& x : sites) {
      double v = V.at(x);
      if (v != 0.0) shell += phi_term(v, x, m, n);
    }
    s += shell;
    shells.push_back(shell);
    out.partial_sums.push_back(s);
    if (k >= 1 && shell >= shells[k - 1] && shell > 0.0)
      ++nondecreasing;
    else
      nondecreasing = 0;
    if (nondecreasing >= 5) {
      out.finite = false;
      out.value = std::numeric_limits<double>::infinity();
      return out;
    }
  }
  out.value = std::pow(s, m);
  return out;
}

Potential translate(const Potential& V, const ivec& z) { return V.translated(z); }

namespace {

struct Weighted {
  ivec site;
  double weight;  // |V(x)|^{1/2} (|x|+1)^3
};

std::vector<Weighted> weights_of(const Potential& V) {
  std::vector<Weighted> w;
  for (const auto& [x, v] : V.values()) w.push_back({x, phi_term(v, x, 2, 3)});
  // descending weight, lexicographic site on ties
  std::sort(w.begin(), w.end(), [](const Weighted& a, const Weighted& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return lex_less(a.site, b.site);
  });
  return w;
}

// smallest prefix size such that the squared excluded tail drops below c
std::pair<long long, double> greedy_prefix(const std::vector<Weighted>& w, double c) {
  double total = 0.0;
  for (const auto& t : w) total += t.weight;
  double excluded = total;
  long long kept = 0;
  while (excluded * excluded >= c && kept < (long long)w.size()) {
    excluded -= w[kept].weight;
    ++kept;
  }
  if (kept == (long long)w.size()) excluded = 0.0;  // keep everything: tail empty
  return {kept, excluded * excluded};
}

}  // namespace

BoundCertificate min_support_bound(const Potential& V, double c, int z_window) {
  if (c <= 0) throw PreconditionError("min_support_bound: threshold c must be positive");
  Potential W = V;
  if (V.kind() != Potential::Kind::finite) {
    PhiValue p = phi(V, 2, 3);
    if (!p.finite)
      throw PreconditionError("min_support_bound: potential has divergent Phi_{2,3}");
    // truncated closed form handled through its materialized support
    double rad = V.truncation_radius();
    BoxLattice box(V.dim(), int(rad) + 1);
    W = Potential::finite(V.dim(), V.support_in(box));
  }
  const int d = W.dim();
  if (z_window < 0) {
    // default: support diameter plus 2
    int diam = 0;
    for (const auto& [x, vx] : W.values())
      for (const auto& [y, vy] : W.values()) {
        ivec diff(d);
        for (int k = 0; k < d; ++k) diff[k] = x[k] - y[k];
        diam = std::max(diam, norm_inf(diff));
      }
    z_window = diam + 2;
  }

  BoundCertificate best;
  best.threshold_c = c;
  best.z_window = z_window;
  ivec z(d, -z_window);
  while (true) {
    Potential Vz = W.translated(z);
    auto w = weights_of(Vz);
    auto [kept, excl] = greedy_prefix(w, c);
    bool better = !best.valid || kept < best.bound;
    if (best.valid && kept == best.bound) {
      double zn = norm2(z), bn = norm2(best.best_z);
      better = zn < bn || (zn == bn && lex_less(z, best.best_z));
    }
    if (better) {
      best.valid = true;
      best.bound = kept;
      best.best_z = z;
      best.excluded_phi = excl;
      best.support_set.clear();
      for (long long t = 0; t < kept; ++t) best.support_set.push_back(w[t].site);
      std::sort(best.support_set.begin(), best.support_set.end(), lex_less);
    }
    int k = 0;
    while (k < d && ++z[k] > z_window) z[k++] = -z_window;
    if (k == d) break;
  }
  return best;
}

long long brute_force_min_support(const Potential& V, double c, const ivec& z) {
  if (V.kind() != Potential::Kind::finite)
    throw PreconditionError("brute_force_min_support: finite support required");
  Potential Vz = V.translated(z);
  auto w = weights_of(Vz);
  const int s = int(w.size());
  if (s > 20) throw PreconditionError("brute_force_min_support: support too large");
  long long best = s + 1;
  for (long long mask = 0; mask < (1LL << s); ++mask) {
    double excluded = 0.0;
    for (int t = 0; t < s; ++t)
      if (!((mask >> t) & 1)) excluded += w[t].weight;
    if (excluded * excluded < c) best = std::min<long long>(best, __builtin_popcountll(mask));
  }
  return best == s + 1 ? s : best;  // keeping everything always works
}

AbsenceReport embedded_absence_check(const Potential& V, long long discrete_count, double c) {
  AbsenceReport rep;
  rep.discrete_count = discrete_count;
  if (V.kind() == Potential::Kind::family) {
    PhiValue p = phi(V, 2, 3);
    if (!p.finite) {
      rep.verdict = AbsenceVerdict::inconclusive;
      return rep;
    }
  }
  rep.certificate = min_support_bound(V, c);
  rep.verdict = (rep.certificate.valid && rep.certificate.bound <= discrete_count)
                    ? AbsenceVerdict::certified
                    : AbsenceVerdict::inconclusive;
  return rep;
}

}  // namespace latsch
