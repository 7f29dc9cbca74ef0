#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "latsch/cli.hpp"
#include "latsch/functionals.hpp"
#include "latsch/io.hpp"

using namespace latsch;

namespace {

int call(std::vector<std::string> args) {
  args.insert(args.begin(), "latsch");
  std::vector<char*> argv;
  for (auto& s : args) argv.push_back(s.data());
  return run_cli(int(argv.size()), argv.data());
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/latsch_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("dispersion JSON round trip") {
  Dispersion e = embedded_dispersion(2);
  Dispersion back = dispersion_from_json(to_json(e));
  CHECK(back.dim() == 2);
  CHECK(back.coeffs().size() == e.coeffs().size());
  for (const auto& [m, c] : e.coeffs()) CHECK(back.coeff(m) == c);

  // complex conjugate-symmetric coefficients survive the trip
  Dispersion odd = Dispersion::from_coeffs(1, {{{1}, cplx(0.5, 0.25)}, {{-1}, cplx(0.5, -0.25)}});
  Dispersion odd2 = dispersion_from_json(to_json(odd));
  CHECK(odd2.coeff({1}) == cplx(0.5, 0.25));
}

TEST_CASE("dispersion loader rejects asymmetric sets") {
  json j{{"dim", 1}, {"coeffs", {{1, 1.0}}}};
  CHECK_THROWS_AS(dispersion_from_json(j), PreconditionError);
}

TEST_CASE("potential JSON round trip") {
  Potential V = Potential::finite(3, {{{1, 0, -2}, 0.5}, {{0, 0, 0}, -2.0}});
  Potential back = potential_from_json(to_json(V));
  CHECK(back.support_size() == 2);
  CHECK(back.at({1, 0, -2}) == 0.5);

  Potential F = Potential::family(3, "power", {{"amplitude", 2.0}, {"beta", 9.0}}, 12.0);
  Potential fback = potential_from_json(to_json(F));
  CHECK(fback.at({1, 0, 0}) == doctest::Approx(F.at({1, 0, 0})));
  CHECK(fback.truncation_radius() == 12.0);
}

TEST_CASE("cli: byte reproducibility under a fixed config") {
  TempFile out1("repr1.json"), out2("repr2.json");
  CHECK(call({"--out", out1.path, "trace-identity", "-d", "2", "-L", "6", "--sites", "2",
              "--seed", "42"}) == 0);
  CHECK(call({"--out", out2.path, "trace-identity", "-d", "2", "-L", "6", "--sites", "2",
              "--seed", "42"}) == 0);
  std::string a = slurp(out1.path), b = slurp(out2.path);
  CHECK(!a.empty());
  CHECK(a == b);
}

TEST_CASE("cli: exit codes") {
  TempFile out("codes.json");
  // unknown flag
  CHECK(call({"dispersion", "-d", "1", "--no-such-flag"}) == 2);
  // missing required physics parameter
  CHECK(call({"spectrum", "-L", "3"}) == 2);
  // precondition violation: mourre window touching a threshold
  CHECK(call({"--out", out.path, "mourre", "-d", "1", "-L", "8", "--window", "3.5,4.5"}) == 2);
  // a good run
  CHECK(call({"--out", out.path, "mourre", "-d", "1", "-L", "8", "--window", "1.0,2.5"}) == 0);
}

TEST_CASE("cli: bound command against the brute-force oracle") {
  TempFile pot("bound_potential.json"), out("bound_out.json");
  Potential V = Potential::finite(3, {{{0, 0, 0}, 2.0},
                                      {{1, 0, 0}, -0.5},
                                      {{0, 2, 0}, 0.25},
                                      {{-1, -1, 0}, 1.5}});
  write_atomic(pot.path, to_json(V).dump());
  CHECK(call({"--out", out.path, "bound", "--potential", pot.path, "-c", "0.25", "--z-window",
              "4"}) == 0);
  json j = json::parse(slurp(out.path));
  long long bound = j["result"]["bound"].get<long long>();
  CHECK(j["result"]["excluded_phi"].get<double>() < 0.25);
  // the certificate bound can only improve on the z = 0 oracle
  long long oracle = brute_force_min_support(V, 0.25, {0, 0, 0});
  CHECK(bound <= oracle);
  CHECK(j["result"]["valid"].get<bool>());
  CHECK(j["config"]["command"] == "bound");
}

TEST_CASE("cli: operator CSV export is parseable and Hermitian-consistent") {
  TempFile out("op.csv");
  CHECK(call({"--format", "csv", "--out", out.path, "operators", "-d", "1", "-L", "2",
              "--builtin", "emb", "--which", "A"}) == 0);
  std::string csv = slurp(out.path);
  CHECK(csv.rfind("i,j,re,im\n", 0) == 0);
  // parse entries and check antisymmetry of the imaginary part
  std::stringstream ss(csv);
  std::string line;
  std::getline(ss, line);
  std::map<std::pair<int, int>, cplx> entries;
  while (std::getline(ss, line)) {
    int i, j;
    double re, im;
    REQUIRE(std::sscanf(line.c_str(), "%d,%d,%lf,%lf", &i, &j, &re, &im) == 4);
    entries[{i, j}] = cplx(re, im);
  }
  CHECK(!entries.empty());
  for (const auto& [key, v] : entries) {
    auto it = entries.find({key.second, key.first});
    REQUIRE(it != entries.end());
    CHECK(std::abs(v - std::conj(it->second)) < 1e-12);
  }
}

TEST_CASE("cli: example sweep emits the residual CSV schema") {
  TempFile out("sweep.csv");
  CHECK(call({"--format", "csv", "--out", out.path, "example", "--family", "embedded", "-d",
              "1", "--sweep", "10,20"}) == 0);
  std::string csv = slurp(out.path);
  CHECK(csv.rfind("l,interior_residual,full_residual,boundary_mass,nearest_eig_dist\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

