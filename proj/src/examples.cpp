#include "latsch/examples.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <unordered_map>

#include "latsch/quadrature.hpp"
#include "latsch/spectral.hpp"

namespace latsch {

ExampleInstance embedded_example(int d, double energy) {
  if (d < 1) throw PreconditionError("embedded_example: d >= 1");
  if (energy < 0.0) energy = 1.5 * d;
  ExampleInstance inst;
  inst.family = "embedded";
  inst.dispersion = embedded_dispersion(d);
  inst.energy = energy;
  inst.potential = Potential::family(d, "embedded_ratio", {{"energy", energy}});
  const double expo = 0.5 * (d + 1);
  inst.psi = [expo](const ivec& x) { return std::pow(1.0 + norm2(x), -expo); };
  return inst;
}

namespace {

// shared quadrature grid for psi(x) = int_0^inf prod_k b_{|x_k|}(t) dt with
// b_n(t) = e^{-2t} I_n(2t); geometric Gauss-Legendre panels up to 2^27
class BesselSampler {
 public:
  explicit BesselSampler(int dim) : dim_(dim) {
    std::vector<double> gx{
        -0.9894009349916499, -0.9445750230732326, -0.8656312023878318, -0.7554044083550030,
        -0.6178762444026438, -0.4580167776572274, -0.2816035507792589, -0.0950125098376374,
        0.0950125098376374,  0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
        0.7554044083550030,  0.8656312023878318,  0.9445750230732326,  0.9894009349916499};
    std::vector<double> gw{
        0.0271524594117541, 0.0622535239386479, 0.0951585116824928, 0.1246289712555339,
        0.1495959888165767, 0.1691565193950025, 0.1826034150449236, 0.1894506104550685,
        0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
        0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};
    double lo = 0.0, hi = 1.0;
    for (int panel = 0; panel < 28; ++panel) {
      for (int j = 0; j < 16; ++j) {
        nodes_.push_back(0.5 * (hi + lo) + 0.5 * (hi - lo) * gx[j]);
        weights_.push_back(0.5 * (hi - lo) * gw[j]);
      }
      lo = hi;
      hi *= 2.0;
    }
  }

  const std::vector<double>& table(int n) const {
    while (int(btab_.size()) <= n) {
      int m = int(btab_.size());
      std::vector<double> row(nodes_.size());
      for (size_t j = 0; j < nodes_.size(); ++j) row[j] = scaled_bessel_i(m, 2.0 * nodes_[j]);
      btab_.push_back(std::move(row));
    }
    return btab_[n];
  }

  double psi(const ivec& x) const {
    ivec key(x.size());
    for (size_t k = 0; k < x.size(); ++k) key[k] = std::abs(x[k]);
    std::sort(key.begin(), key.end());
    unsigned long long packed = 0;
    for (int v : key) packed = packed * 1024ull + (v + 1);
    auto it = cache_.find(packed);
    if (it != cache_.end()) return it->second;
    for (int v : key) table(v);  // materialize rows first
    double acc = 0.0;
    for (size_t j = 0; j < nodes_.size(); ++j) {
      double prod = weights_[j];
      for (int v : key) prod *= btab_[v][j];
      acc += prod;
    }
    cache_.emplace(packed, acc);
    return acc;
  }

 private:
  int dim_;
  std::vector<double> nodes_, weights_;
  mutable std::vector<std::vector<double>> btab_;
  mutable std::unordered_map<unsigned long long, double> cache_;
};

}  // namespace

ExampleInstance threshold_example(int d) {
  if (d < 5) throw PreconditionError("threshold_example: psi is square-summable only for d >= 5");
  ExampleInstance inst;
  inst.family = "threshold";
  inst.dispersion = laplacian_dispersion(d);
  inst.energy = 0.0;
  auto sampler = std::make_shared<BesselSampler>(d);
  double gamma = sampler->psi(ivec(d, 0));  // = int dmu*/e_lapl
  inst.potential = Potential::delta(d, -1.0 / gamma);
  inst.psi = [sampler](const ivec& x) { return sampler->psi(x); };
  return inst;
}

ResidualReport verify_example(const ExampleInstance& inst, const BoxLattice& box,
                              bool with_spectrum) {
  const Dispersion& e = inst.dispersion;
  if (box.dim != e.dim()) throw PreconditionError("verify_example: dimension mismatch");
  if (box.half_width < 2 * e.range())
    throw PreconditionError("verify_example: box too small for the hopping stencil");
  const long long n = box.size();
  Eigen::VectorXd psi(n);
  for (long long i = 0; i < n; ++i) psi[i] = inst.psi(box.site(i));
  double nrm = psi.norm();

  Eigen::VectorXd r = apply_hopping(e, box, psi);
  for (long long i = 0; i < n; ++i)
    r[i] += (inst.potential.at(box.site(i)) - inst.energy) * psi[i];

  ResidualReport rep;
  rep.half_width = box.half_width;
  double full2 = 0.0, int2 = 0.0, edge = 0.0;
  const int margin = e.range();
  for (long long i = 0; i < n; ++i) {
    ivec x = box.site(i);
    full2 += r[i] * r[i];
    if (norm_inf(x) <= box.half_width - margin) int2 += r[i] * r[i];
    if (norm_inf(x) > box.half_width - margin) edge += psi[i] * psi[i];
  }
  rep.full_residual = std::sqrt(full2) / nrm;
  rep.interior_residual = std::sqrt(int2) / nrm;
  rep.boundary_mass = edge / (nrm * nrm);

  if (with_spectrum) {
    HermitianOperator H = hamiltonian(e, inst.potential, box);
    EigenSystem sys = eigendecompose(H);
    double best = std::numeric_limits<double>::infinity();
    for (long long i = 0; i < sys.values.size(); ++i)
      best = std::min(best, std::abs(sys.values[i] - inst.energy));
    rep.nearest_eig_dist = best;
  }
  return rep;
}

}  // namespace latsch
