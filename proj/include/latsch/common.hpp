#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace latsch {

using cplx = std::complex<double>;
using ivec = std::vector<int>;  // lattice site / frequency vector

constexpr double pi = 3.14159265358979323846;

// A stated precondition of an operation was violated by the caller.
struct PreconditionError : std::runtime_error {
  explicit PreconditionError(const std::string& what) : std::runtime_error(what) {}
};

// An internal numerical guarantee failed (rejected decomposition, exhausted
// budget where a hard result was required, certification failure).
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Central tolerance record. Reports echo the values they used.
struct Tolerances {
  double hermiticity = 1e-12;       // relative, max-norm
  double eig_residual = 1e-10;      // relative to spectral norm
  double newton = 1e-11;            // gradient norm, relative to coefficient scale
  double dedup_radius = 1e-6;       // torus metric, critical point dedup
  double morse_degeneracy = 1e-8;   // relative to |e|_{C^2}
  double count_negative = 1e-10;    // sign cutoff relative to spectral norm
  double quadrature = 1e-9;         // default absolute tolerance
  double linear_solve = 1e-10;      // resolvent solves, relative residual
};

namespace detail {
inline Tolerances& mutable_tolerances() {
  static Tolerances tols{};
  return tols;
}
}  // namespace detail

inline const Tolerances& default_tolerances() { return detail::mutable_tolerances(); }
inline void set_default_tolerances(const Tolerances& t) { detail::mutable_tolerances() = t; }

// wrap into [-pi, pi)
inline double wrap_pi(double x) {
  double y = x - 2.0 * pi * std::floor((x + pi) / (2.0 * pi));
  if (y >= pi) y -= 2.0 * pi;
  if (y < -pi) y += 2.0 * pi;
  return y;
}

inline double torus_dist(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    double d = wrap_pi(a[i] - b[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

inline bool lex_less(const ivec& a, const ivec& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

inline double norm2(const ivec& x) {
  double s = 0.0;
  for (int c : x) s += double(c) * double(c);
  return std::sqrt(s);
}

inline int norm_inf(const ivec& x) {
  int m = 0;
  for (int c : x) m = std::max(m, std::abs(c));
  return m;
}

inline ivec negate(const ivec& x) {
  ivec y(x.size());
  for (size_t i = 0; i < x.size(); ++i) y[i] = -x[i];
  return y;
}

}  // namespace latsch
