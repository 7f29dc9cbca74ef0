#pragma once

#include <string>

#include "json.hpp"

#include "latsch/examples.hpp"
#include "latsch/functionals.hpp"
#include "latsch/quadrature.hpp"
#include "latsch/spectral.hpp"

namespace latsch {

using json = nlohmann::json;

// Dispersion: {"dim": d, "coeffs": [[m_1..m_d, re] | [m_1..m_d, re, im], ...]}
// sorted lexicographically by frequency; the loader rejects coefficient sets
// that are not conjugate symmetric.
json to_json(const Dispersion& e);
Dispersion dispersion_from_json(const json& j);

// Potential: {"kind":"finite","dim":d,"values":[[x_1..x_d, v], ...]} or
// {"kind":"family","dim":d,"name":...,"params":{...},"truncation_radius":...}
json to_json(const Potential& V);
Potential potential_from_json(const json& j);

json to_json(const Tolerances& t);
json to_json(const CriticalReport& r);
json to_json(const MorseCertificate& c);
json to_json(const SpectralReport& r);
json to_json(const PhiValue& p);
json to_json(const BoundCertificate& c);
json to_json(const TraceIdentityReport& r);
json to_json(const VirialReport& r);
json to_json(const MourreReport& r);
json to_json(const IntegralResult& r);
json to_json(const BoundScan& s);
json to_json(const CResolvEstimate& e);
json to_json(const ResidualReport& r);

// CSV: (i, j, re, im) triplets of the nonzero entries
std::string operator_csv(const HermitianOperator& op);
// CSV: a, b, |value|, envelope, ratio
std::string scan_csv(const BoundScan& s);
// CSV: site..., weight, kept -- audit table for a bound certificate
std::string weight_table_csv(const Potential& V, const BoundCertificate& cert);
// CSV: l, interior_residual, full_residual, boundary_mass, nearest_eig_dist
std::string residual_sweep_csv(const std::vector<ResidualReport>& reps);

// temp-file + rename
void write_atomic(const std::string& path, const std::string& content);

}  // namespace latsch
