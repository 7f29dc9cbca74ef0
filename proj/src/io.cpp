#include "latsch/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace latsch {

json to_json(const Dispersion& e) {
  json coeffs = json::array();
  for (const auto& [m, c] : e.coeffs()) {
    json row = json::array();
    for (int v : m) row.push_back(v);
    row.push_back(c.real());
    if (c.imag() != 0.0) row.push_back(c.imag());
    coeffs.push_back(row);
  }
  return json{{"dim", e.dim()}, {"coeffs", coeffs}};
}

Dispersion dispersion_from_json(const json& j) {
  int dim = j.at("dim").get<int>();
  std::vector<std::pair<ivec, cplx>> terms;
  for (const auto& row : j.at("coeffs")) {
    if (int(row.size()) != dim + 1 && int(row.size()) != dim + 2)
      throw PreconditionError("dispersion coefficient row has wrong length");
    ivec m(dim);
    for (int k = 0; k < dim; ++k) m[k] = row[k].get<int>();
    double re = row[dim].get<double>();
    double im = int(row.size()) == dim + 2 ? row[dim + 1].get<double>() : 0.0;
    terms.emplace_back(m, cplx(re, im));
  }
  return Dispersion::from_coeffs(dim, std::move(terms));
}

json to_json(const Potential& V) {
  if (V.kind() == Potential::Kind::finite) {
    json vals = json::array();
    for (const auto& [x, v] : V.values()) {
      json row = json::array();
      for (int c : x) row.push_back(c);
      row.push_back(v);
      vals.push_back(row);
    }
    return json{{"kind", "finite"}, {"dim", V.dim()}, {"values", vals}};
  }
  return json{{"kind", "family"},
              {"dim", V.dim()},
              {"name", V.family_name()},
              {"params", V.params()},
              {"truncation_radius", V.truncation_radius()}};
}

Potential potential_from_json(const json& j) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "finite") {
    int dim = j.contains("dim") ? j.at("dim").get<int>() : -1;
    std::vector<std::pair<ivec, double>> vals;
    for (const auto& row : j.at("values")) {
      if (dim < 0) dim = int(row.size()) - 1;
      if (int(row.size()) != dim + 1)
        throw PreconditionError("potential value row has wrong length");
      ivec x(dim);
      for (int k = 0; k < dim; ++k) x[k] = row[k].get<int>();
      vals.emplace_back(x, row[dim].get<double>());
    }
    if (dim < 0) throw PreconditionError("empty finite potential needs a dim field");
    return Potential::finite(dim, std::move(vals));
  }
  if (kind == "family") {
    std::map<std::string, double> params = j.at("params").get<std::map<std::string, double>>();
    double trunc = j.contains("truncation_radius") ? j.at("truncation_radius").get<double>() : 0.0;
    return Potential::family(j.at("dim").get<int>(), j.at("name").get<std::string>(), params,
                             trunc);
  }
  throw PreconditionError("unknown potential kind: " + kind);
}

json to_json(const Tolerances& t) {
  return json{{"hermiticity", t.hermiticity},
              {"eig_residual", t.eig_residual},
              {"newton", t.newton},
              {"dedup_radius", t.dedup_radius},
              {"morse_degeneracy", t.morse_degeneracy},
              {"count_negative", t.count_negative},
              {"quadrature", t.quadrature},
              {"linear_solve", t.linear_solve}};
}

json to_json(const CriticalReport& r) {
  json pts = json::array();
  for (const auto& cp : r.points) {
    json p = json::array();
    for (int k = 0; k < cp.p.size(); ++k) p.push_back(cp.p[k]);
    pts.push_back(json{{"p", p},
                       {"value", cp.value},
                       {"morse_index", cp.morse_index},
                       {"min_abs_eig", cp.min_abs_eig},
                       {"curvature", cp.curvature}});
  }
  return json{{"points", pts},
              {"thresholds", r.thresholds},
              {"is_morse", r.is_morse},
              {"min_curvature", r.min_curvature},
              {"e_max", r.e_max},
              {"e_min", r.e_min},
              {"euler_sum", r.euler_sum},
              {"complete", r.complete},
              {"unresolved_cells", r.unresolved_cells},
              {"grid_n", r.grid_n},
              {"newton_tol", r.newton_tol},
              {"degeneracy_tol", r.degeneracy_tol}};
}

json to_json(const MorseCertificate& c) {
  return json{{"dispersion", to_json(c.dispersion_report)},
              {"grad_squared", to_json(c.grad_squared_report)},
              {"holds", c.holds}};
}

json to_json(const SpectralReport& r) {
  json emb = json::array();
  for (const auto& c : r.embedded)
    emb.push_back(json{{"value", c.value}, {"dist_to_thr", c.dist_to_thr}});
  return json{{"eigenvalues", r.eigenvalues}, {"e_max", r.e_max},
              {"thresholds", r.thresholds},   {"discrete", r.discrete_count},
              {"embedded", emb},              {"margin", r.margin},
              {"dim", r.dim},                 {"half_width", r.half_width}};
}

json to_json(const PhiValue& p) {
  return json{{"m", p.m},
              {"n", p.n},
              {"value", p.finite ? json(p.value) : json("inf")},
              {"finite", p.finite},
              {"partial_sums", p.partial_sums}};
}

json to_json(const BoundCertificate& c) {
  json supp = json::array();
  for (const auto& x : c.support_set) {
    json row = json::array();
    for (int v : x) row.push_back(v);
    supp.push_back(row);
  }
  return json{{"threshold_c", c.threshold_c},
              {"best_z", c.best_z},
              {"support_set", supp},
              {"excluded_phi", c.excluded_phi},
              {"bound", c.bound},
              {"z_window", c.z_window},
              {"valid", c.valid}};
}

json to_json(const TraceIdentityReport& r) {
  return json{{"support", r.support},
              {"count", r.count},
              {"match", r.match},
              {"lambdas", r.lambdas},
              {"scaled_counts", r.scaled_counts},
              {"scale_invariant", r.scale_invariant},
              {"min_abs_margin", r.min_abs_margin}};
}

json to_json(const VirialReport& r) {
  return json{{"eigenvalue", r.eigenvalue},     {"lhs", r.lhs},
              {"rhs", r.rhs},                   {"residual", r.residual},
              {"max_imag", r.max_imag},         {"boundary_mass", r.boundary_mass},
              {"reliable", r.reliable}};
}

json to_json(const MourreReport& r) {
  return json{{"window", {r.window_lo, r.window_hi}},
              {"c_floor", r.c_floor},
              {"compression_spectrum", r.compression_spectrum},
              {"window_dim", r.window_dim},
              {"below_floor", r.below_floor},
              {"min_eig", r.min_eig}};
}

json to_json(const IntegralResult& r) {
  return json{{"value", {r.value.real(), r.value.imag()}},
              {"abs_error_estimate", r.abs_error_estimate},
              {"subdivisions", r.subdivisions},
              {"converged", r.converged}};
}

json to_json(const BoundScan& s) {
  json pts = json::array();
  for (const auto& p : s.points)
    pts.push_back(json{{"a", p.a},
                       {"b", p.b},
                       {"value_abs", p.value_abs},
                       {"envelope", p.envelope},
                       {"ratio", p.ratio}});
  return json{{"kind", s.kind},
              {"points", pts},
              {"sup_ratio", s.sup_ratio},
              {"blowup_flag", s.blowup_flag}};
}

json to_json(const CResolvEstimate& e) {
  json ex = json::array();
  for (const auto& s : e.expressions)
    ex.push_back(json{{"name", s.name}, {"max_ratio", s.max_ratio}});
  return json{{"c_hat", e.c_hat},
              {"c_default", e.c_default},
              {"expressions", ex},
              {"phi22", e.phi22},
              {"phi23", e.phi23}};
}

json to_json(const ResidualReport& r) {
  return json{{"half_width", r.half_width},
              {"interior_residual", r.interior_residual},
              {"full_residual", r.full_residual},
              {"boundary_mass", r.boundary_mass},
              {"nearest_eig_dist", r.nearest_eig_dist}};
}

namespace {
void append_double(std::ostringstream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}
}  // namespace

std::string operator_csv(const HermitianOperator& op) {
  std::ostringstream os;
  os << "i,j,re,im\n";
  for (long long i = 0; i < op.mat.rows(); ++i)
    for (long long j = 0; j < op.mat.cols(); ++j) {
      cplx v = op.mat(i, j);
      if (v == cplx(0.0)) continue;
      os << i << "," << j << ",";
      append_double(os, v.real());
      os << ",";
      append_double(os, v.imag());
      os << "\n";
    }
  return os.str();
}

std::string scan_csv(const BoundScan& s) {
  std::ostringstream os;
  os << "a,b,value_abs,envelope,ratio\n";
  for (const auto& p : s.points) {
    append_double(os, p.a);
    os << ",";
    append_double(os, p.b);
    os << ",";
    append_double(os, p.value_abs);
    os << ",";
    append_double(os, p.envelope);
    os << ",";
    append_double(os, p.ratio);
    os << "\n";
  }
  return os.str();
}

std::string weight_table_csv(const Potential& V, const BoundCertificate& cert) {
  Potential Vz = V.translated(cert.best_z);
  std::ostringstream os;
  os << "site,weight,kept\n";
  std::vector<std::pair<ivec, double>> rows;
  for (const auto& [x, v] : Vz.values())
    rows.emplace_back(x, std::sqrt(std::abs(v)) * std::pow(norm2(x) + 1.0, 3));
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return lex_less(a.first, b.first);
  });
  for (const auto& [x, w] : rows) {
    os << "\"(";
    for (size_t k = 0; k < x.size(); ++k) os << (k ? " " : "") << x[k];
    os << ")\",";
    append_double(os, w);
    bool kept =
        std::binary_search(cert.support_set.begin(), cert.support_set.end(), x, lex_less);
    os << "," << (kept ? 1 : 0) << "\n";
  }
  return os.str();
}

std::string residual_sweep_csv(const std::vector<ResidualReport>& reps) {
  std::ostringstream os;
  os << "l,interior_residual,full_residual,boundary_mass,nearest_eig_dist\n";
  for (const auto& r : reps) {
    os << r.half_width << ",";
    append_double(os, r.interior_residual);
    os << ",";
    append_double(os, r.full_residual);
    os << ",";
    append_double(os, r.boundary_mass);
    os << ",";
    append_double(os, r.nearest_eig_dist);
    os << "\n";
  }
  return os.str();
}

void write_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw PreconditionError("cannot open output file " + tmp);
    f << content;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw PreconditionError("cannot move output into place: " + path);
}

}  // namespace latsch
