#include "latsch/cli.hpp"

#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"

#include "latsch/io.hpp"

namespace latsch {

namespace {

json load_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw PreconditionError("cannot open " + path);
  json j;
  f >> j;
  return j;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (double v : parse_list(s)) out.push_back(int(v));
  return out;
}

struct Emitter {
  std::string format = "json";
  std::string out_path;

  void operator()(const json& config, const json& payload, const std::string& csv = "") const {
    std::string body;
    if (format == "csv" && !csv.empty()) {
      body = csv;
    } else {
      json doc{{"config", config}, {"result", payload}};
      body = doc.dump(2);
      body += "\n";
    }
    if (out_path.empty())
      std::cout << body;
    else
      write_atomic(out_path, body);
  }
};

Dispersion resolve_dispersion(const std::string& builtin, const std::string& file, int d) {
  if (!file.empty()) {
    Dispersion e = dispersion_from_json(load_json(file));
    if (d > 0 && e.dim() != d)
      throw PreconditionError("dispersion file dimension does not match -d");
    return e;
  }
  if (builtin == "lapl") return laplacian_dispersion(d);
  if (builtin == "emb") return embedded_dispersion(d);
  throw PreconditionError("unknown builtin dispersion: " + builtin);
}

// seeded random finite-support potential; generator mt19937_64, recorded in
// the output config
Potential random_potential(int d, int sites, unsigned long long seed, double amplitude,
                           int radius) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pos(-radius, radius);
  std::uniform_real_distribution<double> mag(0.5, 1.0);
  std::uniform_int_distribution<int> sign(0, 1);
  std::vector<std::pair<ivec, double>> vals;
  while (int(vals.size()) < sites) {
    ivec x(d);
    for (int k = 0; k < d; ++k) x[k] = pos(rng);
    bool dup = false;
    for (const auto& [y, v] : vals) dup = dup || y == x;
    if (dup) continue;
    double v = amplitude * mag(rng) * (sign(rng) ? 1.0 : -1.0);
    vals.emplace_back(x, v);
  }
  return Potential::finite(d, vals);
}

TrigPoly product_bump_chi(int d) {
  // prod_k (1 + cos p_k)/2 as an explicit trig polynomial
  std::vector<std::pair<ivec, cplx>> terms{{ivec(d, 0), cplx(1.0)}};
  for (int k = 0; k < d; ++k) {
    std::vector<std::pair<ivec, cplx>> next;
    for (auto& [m, c] : terms) {
      next.emplace_back(m, c * 0.5);
      ivec up = m, dn = m;
      up[k] += 1;
      dn[k] -= 1;
      next.emplace_back(up, c * 0.25);
      next.emplace_back(dn, c * 0.25);
    }
    terms = std::move(next);
  }
  return TrigPoly{d, terms};
}

void apply_tol_overrides(const std::string& overrides) {
  if (overrides.empty()) return;
  Tolerances t = default_tolerances();
  std::stringstream ss(overrides);
  std::string kv;
  while (std::getline(ss, kv, ',')) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw PreconditionError("--tol expects key=value pairs");
    std::string key = kv.substr(0, eq);
    double val = std::stod(kv.substr(eq + 1));
    if (key == "hermiticity")
      t.hermiticity = val;
    else if (key == "eig_residual")
      t.eig_residual = val;
    else if (key == "newton")
      t.newton = val;
    else if (key == "dedup_radius")
      t.dedup_radius = val;
    else if (key == "morse_degeneracy")
      t.morse_degeneracy = val;
    else if (key == "count_negative")
      t.count_negative = val;
    else if (key == "quadrature")
      t.quadrature = val;
    else if (key == "linear_solve")
      t.linear_solve = val;
    else
      throw PreconditionError("unknown tolerance key: " + key);
  }
  set_default_tolerances(t);
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"lattice Schrodinger spectral toolkit"};
  app.require_subcommand(1);

  Emitter emit;
  std::string tol_overrides;
  app.add_option("--format", emit.format, "output format: json|csv")
      ->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--out", emit.out_path, "output path (atomic write); stdout when absent");
  app.add_option("--tol", tol_overrides, "tolerance overrides, key=value[,key=value...]");

  // --- dispersion ---------------------------------------------------------
  auto* cmd_disp = app.add_subcommand(
      "dispersion", "critical structure of a dispersion: Crit, Thr, Morse property, K");
  int d_dim = 0;
  std::string d_builtin = "lapl", d_file, d_pairK;
  bool d_report = false;
  int d_grid = 0;
  double d_newton_tol = 0.0;
  cmd_disp->add_option("-d,--dim", d_dim, "lattice dimension")->required();
  cmd_disp->add_option("--builtin", d_builtin, "builtin dispersion: lapl|emb");
  cmd_disp->add_option("--dispersion", d_file, "dispersion JSON file");
  cmd_disp->add_flag("--report", d_report, "emit the critical report and the Morse certificate");
  cmd_disp->add_option("--grid-n", d_grid, "seeding grid per axis (0 = auto)");
  cmd_disp->add_option("--newton-tol", d_newton_tol, "Newton gradient tolerance (0 = auto)");
  cmd_disp->add_option("--pair-K", d_pairK,
                       "comma list: total quasi-momentum for the pair dispersion");

  // --- operators ----------------------------------------------------------
  auto* cmd_ops = app.add_subcommand("operators",
                                     "build h(e), A(e), i[V,A], i[h,A], H(e,V) on a box");
  int o_dim = 0, o_L = -1;
  std::string o_builtin = "lapl", o_file, o_pot, o_which = "h";
  cmd_ops->add_option("-d,--dim", o_dim)->required();
  cmd_ops->add_option("-L,--half-width", o_L, "box half width")->required();
  cmd_ops->add_option("--builtin", o_builtin);
  cmd_ops->add_option("--dispersion", o_file);
  cmd_ops->add_option("--potential", o_pot, "potential JSON (for vA and H)");
  cmd_ops->add_option("--which", o_which, "h|A|vA|hA|H")
      ->check(CLI::IsMember({"h", "A", "vA", "hA", "H"}));

  // --- spectrum -----------------------------------------------------------
  auto* cmd_spectrum = app.add_subcommand("spectrum", "eigenvalues of H(e,V) classified against "
                                                  "[0, e_max] and the thresholds");
  int s_dim = 0, s_L = -1;
  std::string s_builtin = "lapl", s_file, s_pot;
  cmd_spectrum->add_option("-d,--dim", s_dim)->required();
  cmd_spectrum->add_option("-L,--half-width", s_L)->required();
  cmd_spectrum->add_option("--builtin", s_builtin);
  cmd_spectrum->add_option("--dispersion", s_file);
  cmd_spectrum->add_option("--potential", s_pot);

  // --- virial -------------------------------------------------------------
  auto* cmd_vir = app.add_subcommand(
      "virial", "Virial identity <psi, i[V2,A] psi> = -<psi, i[H(e,V1),A] psi> on box "
                "eigenvectors");
  int v_dim = 0, v_L = -1, v_eig = 0;
  std::string v_builtin = "lapl", v_file, v_v1, v_v2;
  cmd_vir->add_option("-d,--dim", v_dim)->required();
  cmd_vir->add_option("-L,--half-width", v_L)->required();
  cmd_vir->add_option("--builtin", v_builtin);
  cmd_vir->add_option("--dispersion", v_file);
  cmd_vir->add_option("--v1", v_v1, "potential JSON for the commutator side (default zero)");
  cmd_vir->add_option("--v2", v_v2, "potential JSON whose commutator form is tested")
      ->required();
  cmd_vir->add_option("--eig", v_eig, "eigenvector index, ascending");

  // --- trace-identity -----------------------------------------------------
  auto* cmd_tr = app.add_subcommand(
      "trace-identity", "count of negative eigenvalues of i[V,A] against |supp V|, "
                        "lambda-invariant");
  int t_dim = 0, t_L = -1, t_sites = 1, t_radius = 3;
  unsigned long long t_seed = 1;
  double t_amp = 2.0;
  std::string t_builtin = "lapl", t_file, t_pot;
  cmd_tr->add_option("-d,--dim", t_dim)->required();
  cmd_tr->add_option("-L,--half-width", t_L)->required();
  cmd_tr->add_option("--builtin", t_builtin);
  cmd_tr->add_option("--dispersion", t_file);
  cmd_tr->add_option("--potential", t_pot, "explicit potential JSON (overrides --sites)");
  cmd_tr->add_option("--sites", t_sites, "random support size");
  cmd_tr->add_option("--seed", t_seed, "mt19937_64 seed for the random potential");
  cmd_tr->add_option("--amplitude", t_amp);
  cmd_tr->add_option("--radius", t_radius, "random support max-norm radius");

  // --- mourre -------------------------------------------------------------
  auto* cmd_mou = app.add_subcommand(
      "mourre", "compression of i[H,A] to a spectral window away from the thresholds");
  int m_dim = 0, m_L = -1;
  std::string m_builtin = "lapl", m_file, m_pot, m_window;
  cmd_mou->add_option("-d,--dim", m_dim)->required();
  cmd_mou->add_option("-L,--half-width", m_L)->required();
  cmd_mou->add_option("--builtin", m_builtin);
  cmd_mou->add_option("--dispersion", m_file);
  cmd_mou->add_option("--potential", m_pot);
  cmd_mou->add_option("--window", m_window, "a,b energy window")->required();

  // --- phi ------------------------------------------------------------------
  auto* cmd_phi = app.add_subcommand("phi", "decay functional Phi_{m,n}(V)");
  std::string p_pot;
  int p_m = 2, p_n = 3;
  double p_radius = 0.0;
  cmd_phi->add_option("--potential", p_pot)->required();
  cmd_phi->add_option("-m", p_m, "outer exponent")->required();
  cmd_phi->add_option("-n", p_n, "weight power")->required();
  cmd_phi->add_option("--radius", p_radius, "truncation radius for closed forms");

  // --- bound ----------------------------------------------------------------
  auto* cmd_bound = app.add_subcommand(
      "bound", "variational bound: smallest kept support with excluded Phi_{2,3} below c");
  std::string b_pot;
  double b_c = 0.0;
  int b_window = -1;
  bool b_audit = false;
  cmd_bound->add_option("--potential", b_pot)->required();
  cmd_bound->add_option("-c,--threshold", b_c, "decay threshold c")->required();
  cmd_bound->add_option("--z-window", b_window, "translation window (max norm)");
  cmd_bound->add_flag("--audit", b_audit, "emit the sorted weight table as CSV");

  // --- example ----------------------------------------------------------------
  auto* cmd_ex = app.add_subcommand(
      "example", "closed-form eigenpair instances and their box residual sweeps");
  std::string e_family;
  int e_dim = 0;
  double e_energy = -1.0;
  std::string e_sweep;
  bool e_spectrum = false;
  cmd_ex->add_option("--family", e_family, "embedded|threshold")
      ->required()
      ->check(CLI::IsMember({"embedded", "threshold"}));
  cmd_ex->add_option("-d,--dim", e_dim)->required();
  cmd_ex->add_option("--energy", e_energy, "embedded-instance eigenvalue (default 3d/2)");
  cmd_ex->add_option("--sweep", e_sweep, "comma list of box half widths");
  cmd_ex->add_flag("--spectrum", e_spectrum, "also report the nearest boxed eigenvalue");

  // --- integrals ----------------------------------------------------------------
  auto* cmd_int = app.add_subcommand(
      "integrals", "model integrals (slab/ball Cauchy kernels) and the torus resolvent "
                   "integral, single values or uniformity scans");
  std::string i_kind, i_builtin = "lapl", i_file, i_agrid, i_bgrid, i_chi = "one";
  int i_dim = 0, i_m = 1;
  double i_a = 0.0, i_b = 0.0, i_r = 0.5, i_tol = 1e-8;
  bool i_scan = false;
  cmd_int->add_option("--kind", i_kind, "L1|L2|L3|torus")
      ->required()
      ->check(CLI::IsMember({"L1", "L2", "L3", "torus"}));
  cmd_int->add_option("-d,--dim", i_dim)->required();
  cmd_int->add_option("-m", i_m, "signature split for L3");
  cmd_int->add_option("-a", i_a, "band parameter (Re z for torus)");
  cmd_int->add_option("-b", i_b, "imaginary part");
  cmd_int->add_option("-r", i_r, "model domain radius");
  cmd_int->add_option("--tol", i_tol, "quadrature tolerance");
  cmd_int->add_flag("--scan", i_scan, "run a uniformity scan over grids");
  cmd_int->add_option("--a-grid", i_agrid, "comma list of a values for the scan");
  cmd_int->add_option("--b-grid", i_bgrid, "comma list of b values, decreasing");
  cmd_int->add_option("--builtin", i_builtin, "torus case dispersion");
  cmd_int->add_option("--dispersion", i_file);
  cmd_int->add_option("--chi", i_chi, "torus numerator: one|bump")
      ->check(CLI::IsMember({"one", "bump"}));

  // --- estimate-c -------------------------------------------------------------
  auto* cmd_est = app.add_subcommand(
      "estimate-c", "empirical constants for the weighted free-resolvent bounds and the "
                    "derived decay threshold");
  int c_dim = 0, c_L = -1, c_probes = 3;
  unsigned long long c_seed = 1;
  std::string c_builtin = "lapl", c_file, c_re = "2", c_mult = "1,2,4";
  cmd_est->add_option("-d,--dim", c_dim)->required();
  cmd_est->add_option("-L,--half-width", c_L)->required();
  cmd_est->add_option("--builtin", c_builtin);
  cmd_est->add_option("--dispersion", c_file);
  cmd_est->add_option("--probes", c_probes, "number of random probe potentials");
  cmd_est->add_option("--seed", c_seed);
  cmd_est->add_option("--z-re", c_re, "comma list of Re z");
  cmd_est->add_option("--guard-mult", c_mult, "comma list of Im z in units of eta(l)");

  // --- resolvent-scan -----------------------------------------------------------
  auto* cmd_res = app.add_subcommand(
      "resolvent-scan", "weighted resolvent kernel ratios under the eta(l)-coupled Im z "
                        "schedule");
  int r_dim = 0;
  std::string r_builtin = "lapl", r_file, r_pot, r_llist = "7,9,11", r_re = "2";
  cmd_res->add_option("-d,--dim", r_dim)->required();
  cmd_res->add_option("--l-list", r_llist, "comma list of box half widths");
  cmd_res->add_option("--re", r_re, "comma list of Re z");
  cmd_res->add_option("--builtin", r_builtin);
  cmd_res->add_option("--dispersion", r_file);
  cmd_res->add_option("--potential", r_pot);

  // global flags (--out, --format, --tol) may appear after the subcommand
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
    set_default_tolerances(Tolerances{});  // overrides never leak across runs
    apply_tol_overrides(tol_overrides);
    json config{{"tolerances", to_json(default_tolerances())}, {"format", emit.format}};

    if (*cmd_disp) {
      config["command"] = "dispersion";
      config["dim"] = d_dim;
      config["builtin"] = d_file.empty() ? d_builtin : "";
      config["dispersion_file"] = d_file;
      Dispersion e = resolve_dispersion(d_builtin, d_file, d_dim);
      json payload{{"dispersion", to_json(e)}};
      if (d_report) {
        config["grid_n"] = d_grid;
        config["newton_tol"] = d_newton_tol;
        payload["critical_report"] = to_json(critical_report(e, d_grid, d_newton_tol));
        payload["morse_certificate"] = to_json(certify_morse(e, d_grid));
      }
      if (!d_pairK.empty()) {
        auto ks = parse_list(d_pairK);
        if (int(ks.size()) != d_dim) throw PreconditionError("--pair-K length must equal -d");
        Eigen::VectorXd K(d_dim);
        for (int k = 0; k < d_dim; ++k) K[k] = ks[k];
        auto [ek, E0] = pair_dispersion(e, K);
        payload["pair_dispersion"] = to_json(ek);
        payload["pair_E0"] = E0;
        config["pair_K"] = ks;
      }
      emit(config, payload);
      return 0;
    }

    if (*cmd_ops) {
      config["command"] = "operators";
      config["dim"] = o_dim;
      config["half_width"] = o_L;
      config["which"] = o_which;
      Dispersion e = resolve_dispersion(o_builtin, o_file, o_dim);
      BoxLattice box(o_dim, o_L);
      Potential V = o_pot.empty() ? Potential::zero(o_dim)
                                  : potential_from_json(load_json(o_pot));
      HermitianOperator op;
      if (o_which == "h") op = hopping_matrix(e, box);
      if (o_which == "A") op = conjugate_operator(e, box);
      if (o_which == "vA") op = commutator_vA(V, e, box);
      if (o_which == "hA") op = commutator_hA(e, box);
      if (o_which == "H") op = hamiltonian(e, V, box);
      double dev = (op.mat - op.mat.adjoint()).cwiseAbs().maxCoeff();
      json payload{{"label", op.label},
                   {"size", op.mat.rows()},
                   {"hermiticity_deviation", dev}};
      if (o_which == "A") {
        // columns obey ||g_x|| <= C (1 + |x|); report the fitted C and the
        // worst relative fit residual
        double num = 0.0, den = 0.0;
        for (long long i = 0; i < box.size(); ++i) {
          double w = 1.0 + norm2(box.site(i));
          num += op.mat.col(i).norm() * w;
          den += w * w;
        }
        double C = num / den;
        double resid = 0.0, sup = 0.0;
        for (long long i = 0; i < box.size(); ++i) {
          double w = 1.0 + norm2(box.site(i));
          double n = op.mat.col(i).norm();
          resid = std::max(resid, std::abs(n - C * w) / (C * w));
          sup = std::max(sup, n / w);
        }
        payload["g_norm_fit"] = json{{"C", C}, {"max_rel_residual", resid}, {"sup_ratio", sup}};
      }
      emit(config, payload, operator_csv(op));
      return 0;
    }

    if (*cmd_spectrum) {
      config["command"] = "spectrum";
      config["dim"] = s_dim;
      config["half_width"] = s_L;
      Dispersion e = resolve_dispersion(s_builtin, s_file, s_dim);
      BoxLattice box(s_dim, s_L);
      Potential V = s_pot.empty() ? Potential::zero(s_dim)
                                  : potential_from_json(load_json(s_pot));
      auto sys = eigendecompose(hamiltonian(e, V, box));
      std::vector<double> eigs(sys.values.data(), sys.values.data() + sys.values.size());
      auto rep = classify(eigs, critical_report(e), box);
      emit(config, to_json(rep));
      return 0;
    }

    if (*cmd_vir) {
      config["command"] = "virial";
      config["dim"] = v_dim;
      config["half_width"] = v_L;
      config["eig"] = v_eig;
      Dispersion e = resolve_dispersion(v_builtin, v_file, v_dim);
      BoxLattice box(v_dim, v_L);
      Potential V1 = v_v1.empty() ? Potential::zero(v_dim)
                                  : potential_from_json(load_json(v_v1));
      Potential V2 = potential_from_json(load_json(v_v2));
      emit(config, to_json(virial_residual(e, V1, V2, box, v_eig)));
      return 0;
    }

    if (*cmd_tr) {
      config["command"] = "trace-identity";
      config["dim"] = t_dim;
      config["half_width"] = t_L;
      Dispersion e = resolve_dispersion(t_builtin, t_file, t_dim);
      BoxLattice box(t_dim, t_L);
      Potential V = Potential::zero(t_dim);
      if (!t_pot.empty()) {
        V = potential_from_json(load_json(t_pot));
      } else {
        config["sites"] = t_sites;
        config["seed"] = t_seed;
        config["amplitude"] = t_amp;
        config["radius"] = t_radius;
        config["generator"] = "mt19937_64";
        V = random_potential(t_dim, t_sites, t_seed, t_amp, t_radius);
      }
      auto rep = verify_trace_identity(V, e, box);
      json payload = to_json(rep);
      payload["potential"] = to_json(V);
      emit(config, payload);
      return 0;
    }

    if (*cmd_mou) {
      config["command"] = "mourre";
      config["dim"] = m_dim;
      config["half_width"] = m_L;
      auto win = parse_list(m_window);
      if (win.size() != 2) throw PreconditionError("--window expects a,b");
      config["window"] = win;
      Dispersion e = resolve_dispersion(m_builtin, m_file, m_dim);
      BoxLattice box(m_dim, m_L);
      Potential V = m_pot.empty() ? Potential::zero(m_dim)
                                  : potential_from_json(load_json(m_pot));
      emit(config, to_json(mourre_compression(e, V, win[0], win[1], box)));
      return 0;
    }

    if (*cmd_phi) {
      config["command"] = "phi";
      config["m"] = p_m;
      config["n"] = p_n;
      config["radius"] = p_radius;
      Potential V = potential_from_json(load_json(p_pot));
      emit(config, to_json(phi(V, p_m, p_n, p_radius)));
      return 0;
    }

    if (*cmd_bound) {
      config["command"] = "bound";
      config["c"] = b_c;
      config["z_window"] = b_window;
      Potential V = potential_from_json(load_json(b_pot));
      BoundCertificate cert = min_support_bound(V, b_c, b_window);
      std::string csv = b_audit ? weight_table_csv(V, cert) : "";
      emit(config, to_json(cert), csv);
      return 0;
    }

    if (*cmd_ex) {
      config["command"] = "example";
      config["family"] = e_family;
      config["dim"] = e_dim;
      ExampleInstance inst = e_family == "embedded" ? embedded_example(e_dim, e_energy)
                                                    : threshold_example(e_dim);
      config["energy"] = inst.energy;
      json payload{{"family", inst.family},
                   {"energy", inst.energy},
                   {"dispersion", to_json(inst.dispersion)},
                   {"potential", to_json(inst.potential)}};
      std::string csv;
      if (!e_sweep.empty()) {
        config["sweep"] = e_sweep;
        std::vector<ResidualReport> reps;
        json sweeps = json::array();
        for (int l : parse_int_list(e_sweep)) {
          BoxLattice box(e_dim, l);
          reps.push_back(verify_example(inst, box, e_spectrum));
          sweeps.push_back(to_json(reps.back()));
        }
        payload["residuals"] = sweeps;
        csv = residual_sweep_csv(reps);
      }
      emit(config, payload, csv);
      return 0;
    }

    if (*cmd_int) {
      config["command"] = "integrals";
      config["kind"] = i_kind;
      config["dim"] = i_dim;
      if (i_kind == "torus") {
        Dispersion e = resolve_dispersion(i_builtin, i_file, i_dim);
        TrigPoly chi = i_chi == "one" ? TrigPoly::one(i_dim) : product_bump_chi(i_dim);
        config["chi"] = i_chi;
        if (i_scan) {
          auto scan = uniform_bound_scan_torus(e, chi, parse_list(i_agrid),
                                               parse_list(i_bgrid), i_tol);
          config["a_grid"] = i_agrid;
          config["b_grid"] = i_bgrid;
          emit(config, to_json(scan), scan_csv(scan));
        } else {
          if (i_b == 0.0) throw PreconditionError("torus integral needs -b nonzero");
          config["a"] = i_a;
          config["b"] = i_b;
          auto r = torus_cauchy_integral(e, chi, cplx(i_a, i_b), i_tol);
          if (!r.converged) throw NumericalError("torus integral: quadrature budget exhausted");
          emit(config, to_json(r));
        }
        return 0;
      }
      // model kinds share the compactly supported polynomial bump field
      double rho = 0.9 * i_r;
      BallField f{[rho](const Eigen::VectorXd& x) {
                    double s = x.squaredNorm() / (rho * rho);
                    return s >= 1.0 ? 0.0 : std::pow(1.0 - s, 8);
                  },
                  [rho](const Eigen::VectorXd& x) -> Eigen::VectorXd {
                    double s = x.squaredNorm() / (rho * rho);
                    if (s >= 1.0) return Eigen::VectorXd::Zero(x.size());
                    return x * (-16.0 / (rho * rho) * std::pow(1.0 - s, 7));
                  }};
      config["field"] = "(1-|x|^2/rho^2)^8, rho = 0.9 r";
      config["r"] = i_r;
      ScanKind kind = i_kind == "L1" ? ScanKind::L1 : i_kind == "L2" ? ScanKind::L2
                                                                     : ScanKind::L3;
      if (i_scan) {
        auto scan =
            uniform_bound_scan(kind, f, i_dim, i_m, parse_list(i_agrid), parse_list(i_bgrid),
                               i_r);
        config["a_grid"] = i_agrid;
        config["b_grid"] = i_bgrid;
        emit(config, to_json(scan), scan_csv(scan));
      } else {
        if (i_b == 0.0) throw PreconditionError("model integrals need -b nonzero");
        config["a"] = i_a;
        config["b"] = i_b;
        config["m"] = i_m;
        cplx v = i_kind == "L1"   ? model_integral_L1(f, i_dim, i_b, i_r, i_tol)
                 : i_kind == "L2" ? model_integral_L2(f, i_a, i_b, i_dim, i_r, i_tol)
                                  : model_integral_L3(f, i_a, i_b, i_dim, i_m, i_r, i_tol);
        emit(config, json{{"value", {v.real(), v.imag()}}});
      }
      return 0;
    }

    if (*cmd_est) {
      config["command"] = "estimate-c";
      config["dim"] = c_dim;
      config["half_width"] = c_L;
      config["probes"] = c_probes;
      config["seed"] = c_seed;
      config["generator"] = "mt19937_64";
      Dispersion e = resolve_dispersion(c_builtin, c_file, c_dim);
      BoxLattice box(c_dim, c_L);
      double emax = critical_report(e).e_max;
      double guard = eta_guard(emax, box);
      std::vector<Potential> probes{Potential::delta(c_dim, -1.0)};
      for (int k = 1; k < c_probes; ++k)
        probes.push_back(random_potential(c_dim, 1 + k % 4, c_seed + k, 1.5, 2));
      std::vector<cplx> zs;
      for (double re : parse_list(c_re))
        for (double mult : parse_list(c_mult)) zs.push_back(cplx(re, mult * guard));
      config["z_re"] = c_re;
      config["guard_mult"] = c_mult;
      config["eta_guard"] = guard;
      emit(config, to_json(estimate_c_resolv(e, probes, zs, box)));
      return 0;
    }

    if (*cmd_res) {
      config["command"] = "resolvent-scan";
      config["dim"] = r_dim;
      config["l_list"] = r_llist;
      config["re"] = r_re;
      Dispersion e = resolve_dispersion(r_builtin, r_file, r_dim);
      Potential V = r_pot.empty() ? Potential::zero(r_dim)
                                  : potential_from_json(load_json(r_pot));
      double emax = critical_report(e).e_max;
      json rows = json::array();
      std::ostringstream csv;
      csv << "re_z,im_z";
      for (int k = 0; k < r_dim; ++k) csv << ",x" << k;
      for (int k = 0; k < r_dim; ++k) csv << ",y" << k;
      csv << ",ratio\n";
      ivec y0(r_dim, 0);
      for (int l : parse_int_list(r_llist)) {
        BoxLattice box(r_dim, l);
        double guard = eta_guard(emax, box);
        for (double re : parse_list(r_re)) {
          cplx z(re, guard);
          ResolventOptions opts;
          opts.e_max = emax;
          Eigen::VectorXcd u = resolvent_column(e, V, z, y0, box, opts);
          double mx = 0.0;
          for (long long i = 0; i < box.size(); ++i) {
            ivec x = box.site(i);
            double wx = std::pow(1.0 + norm2(x), 2);
            double ratio = std::abs(u[i]) / wx;
            mx = std::max(mx, ratio);
            if (emit.format == "csv") {
              csv << re << "," << guard;
              for (int c : x) csv << "," << c;
              for (int c : y0) csv << "," << c;
              csv << "," << ratio << "\n";
            }
          }
          rows.push_back(json{{"re_z", re}, {"im_z", guard}, {"l", l}, {"max_ratio", mx}});
        }
      }
      emit(config, json{{"rows", rows}}, csv.str());
      return 0;
    }

    return 2;
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const PreconditionError& e) {
    std::cerr << "precondition violated: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace latsch
