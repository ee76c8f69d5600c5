#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nls/grid.hpp"

namespace nls {

// Gauge-covariant nonlinearity g(e^{i t} s) = e^{i t} g(s) built from a real
// odd C^2 profile with g(0) = g'(0) = 0 and |g''(s)| <= C (|s|^a1 + |s|^a2),
// 1/2 < a1 <= a2. Power profiles are stored as (coupling, alpha) terms with
// g(s) = sum_i c_i |s|^(1 + a_i) s, so a single power has g'' ~ |s|^a exactly.
struct PowerTerm {
  double coupling = 1.0;
  double alpha = 1.0;  // second-derivative growth exponent of the term
};

struct NonlinearitySpec {
  std::string name;
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  std::vector<PowerTerm> terms;  // empty for custom profiles
  std::function<double(double)> g;      // profile on [0, inf), extended oddly
  std::function<double(double)> gprime;
  std::function<double(double)> gint;   // antiderivative, G(0) = 0
  double c_second = 0.0;  // calibrated |g''| bound constant
  double c1 = 0.0;        // calibrated complexified second-derivative bound
};

// g(s) = coupling |s|^(1+alpha) s
NonlinearitySpec power_nonlinearity(double alpha, double coupling = 1.0);
NonlinearitySpec sum_of_powers(const std::vector<PowerTerm>& terms,
                               const std::string& name = "");

// Built-ins: "cubic" (a = 1), "supercritical" (g = |s|^2.4 s, a = 1.4),
// "subcritical" (g = |s|^1.6 s, a = 0.6), "cubic-subcritical-mix"
// (s^3 + 0.1 |s|^1.6 s, a1 = 0.6, a2 = 1).
NonlinearitySpec builtin_nonlinearity(const std::string& name);

// g identically zero; turns the dressed-state machinery into the bare
// linear problem. Useful as an exact reference.
NonlinearitySpec zero_nonlinearity();

// Vectorized profile evaluations on amplitude arrays r >= 0.
Eigen::ArrayXXd eval_profile(const NonlinearitySpec& s, const Eigen::ArrayXXd& r);
// g(r)/r with the removable zero at r = 0.
Eigen::ArrayXXd eval_phase_rate(const NonlinearitySpec& s, const Eigen::ArrayXXd& r);
Eigen::ArrayXXd eval_profile_prime(const NonlinearitySpec& s, const Eigen::ArrayXXd& r);
// G(r), the profile antiderivative (for the conserved energy).
Eigen::ArrayXXd eval_profile_int(const NonlinearitySpec& s, const Eigen::ArrayXXd& r);

// g applied to a complex field through the modulus-phase form g(|f|) f / |f|.
ComplexField eval_g(const NonlinearitySpec& s, const ComplexField& f);

// Real-linear derivative of g at base b applied to w:
// Dg_b[w] = (g'(|b|) + g(|b|)/|b|)/2 w + (g'(|b|) - g(|b|)/|b|)/2 (b/|b|)^2 conj(w).
ComplexField eval_dg(const NonlinearitySpec& s, const ComplexField& base,
                     const ComplexField& w);

// Quadratic remainder g(psi + z) - g(psi) - Dg_psi[z].
ComplexField eval_g2(const NonlinearitySpec& s, const ComplexField& psi,
                     const ComplexField& z);

// Calibrated bound c1 (|b|^a1 + |b|^a2) for the complexified second derivative.
double d2g_bound(const NonlinearitySpec& s, double amplitude);

}  // namespace nls
