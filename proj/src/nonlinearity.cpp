#include "nls/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "nls/check.hpp"

namespace nls {
namespace {

double pow_term(double r, double e) { return std::pow(r, e); }

Eigen::ArrayXXd pow_array(const Eigen::ArrayXXd& r, double e) {
  if (e == 1.0) return r;
  if (e == 2.0) return r.square();
  if (e == 3.0) return r.cube();
  return r.pow(e);
}

std::complex<double> complexified(const NonlinearitySpec& s, std::complex<double> z) {
  double r = std::abs(z);
  if (r == 0.0) return {0.0, 0.0};
  return s.g(r) * z / r;
}

// max over directions of the mixed second difference of the complexified g
double d2_norm_sample(const NonlinearitySpec& s, double r) {
  const double h = 1e-4 * r;
  double best = 0.0;
  const int nd = 12;
  for (int iu = 0; iu < nd; ++iu)
    for (int iv = 0; iv < nd; ++iv) {
      double fu = M_PI * iu / nd, fv = M_PI * iv / nd;
      std::complex<double> u(std::cos(fu), std::sin(fu));
      std::complex<double> v(std::cos(fv), std::sin(fv));
      std::complex<double> b(r, 0.0);
      auto val = (complexified(s, b + h * u + h * v) -
                  complexified(s, b + h * u - h * v) -
                  complexified(s, b - h * u + h * v) +
                  complexified(s, b - h * u - h * v)) /
                 (4.0 * h * h);
      best = std::max(best, std::abs(val));
    }
  return best;
}

void calibrate(NonlinearitySpec& s) {
  double cs = 0.0, c1 = 0.0;
  for (int i = 0; i < 40; ++i) {
    double r = std::pow(10.0, -3.0 + 4.5 * i / 39.0);
    double denom = pow_term(r, s.alpha1) + pow_term(r, s.alpha2);
    double h = 1e-4 * r;
    double g2nd = std::abs(s.g(r + h) - 2.0 * s.g(r) + s.g(r - h)) / (h * h);
    cs = std::max(cs, g2nd / denom);
    c1 = std::max(c1, d2_norm_sample(s, r) / denom);
  }
  s.c_second = 1.02 * cs;
  s.c1 = 1.02 * c1;
}

std::string format_power_name(double alpha, double coupling) {
  char buf[64];
  if (coupling == 1.0)
    std::snprintf(buf, sizeof buf, "power-%g", alpha);
  else
    std::snprintf(buf, sizeof buf, "power-%gx%g", alpha, coupling);
  return buf;
}

}  // namespace

NonlinearitySpec sum_of_powers(const std::vector<PowerTerm>& terms,
                               const std::string& name) {
  require(!terms.empty(), "nonlinearity needs at least one power term");
  NonlinearitySpec s;
  s.terms = terms;
  double lo = terms[0].alpha, hi = terms[0].alpha;
  for (const auto& t : terms) {
    require(std::isfinite(t.coupling) && t.coupling != 0.0,
            "power term coupling must be finite and nonzero");
    require(t.alpha > 0.5 && t.alpha <= 8.0,
            "power term exponent must lie in (1/2, 8]");
    lo = std::min(lo, t.alpha);
    hi = std::max(hi, t.alpha);
  }
  s.alpha1 = lo;
  s.alpha2 = hi;
  s.name = name.empty() ? format_power_name(lo, terms[0].coupling) : name;
  auto ts = terms;
  s.g = [ts](double r) {
    double acc = 0.0;
    double a = std::abs(r);
    for (const auto& t : ts) acc += t.coupling * pow_term(a, 2.0 + t.alpha);
    return r < 0 ? -acc : acc;
  };
  s.gprime = [ts](double r) {
    double acc = 0.0;
    double a = std::abs(r);
    for (const auto& t : ts) acc += t.coupling * (2.0 + t.alpha) * pow_term(a, 1.0 + t.alpha);
    return acc;
  };
  s.gint = [ts](double r) {
    double acc = 0.0;
    double a = std::abs(r);
    for (const auto& t : ts) acc += t.coupling * pow_term(a, 3.0 + t.alpha) / (3.0 + t.alpha);
    return acc;
  };
  calibrate(s);
  return s;
}

NonlinearitySpec power_nonlinearity(double alpha, double coupling) {
  return sum_of_powers({{coupling, alpha}}, format_power_name(alpha, coupling));
}

NonlinearitySpec builtin_nonlinearity(const std::string& name) {
  if (name == "cubic") return sum_of_powers({{1.0, 1.0}}, "cubic");
  if (name == "supercritical") return sum_of_powers({{1.0, 1.4}}, "supercritical");
  if (name == "subcritical") return sum_of_powers({{1.0, 0.6}}, "subcritical");
  if (name == "cubic-subcritical-mix")
    return sum_of_powers({{0.1, 0.6}, {1.0, 1.0}}, "cubic-subcritical-mix");
  require(false, "unknown nonlinearity: " + name);
  return {};
}

NonlinearitySpec zero_nonlinearity() {
  NonlinearitySpec s;
  s.name = "zero";
  s.alpha1 = 1.0;
  s.alpha2 = 1.0;
  s.g = [](double) { return 0.0; };
  s.gprime = [](double) { return 0.0; };
  s.gint = [](double) { return 0.0; };
  s.c_second = 0.0;
  s.c1 = 0.0;
  return s;
}

Eigen::ArrayXXd eval_profile(const NonlinearitySpec& s, const Eigen::ArrayXXd& r) {
  if (!s.terms.empty()) {
    Eigen::ArrayXXd acc = Eigen::ArrayXXd::Zero(r.rows(), r.cols());
    for (const auto& t : s.terms) acc += t.coupling * pow_array(r, 2.0 + t.alpha);
    return acc;
  }
  return r.unaryExpr(s.g);
}

Eigen::ArrayXXd eval_phase_rate(const NonlinearitySpec& s, const Eigen::ArrayXXd& r) {
  if (!s.terms.empty()) {
    Eigen::ArrayXXd acc = Eigen::ArrayXXd::Zero(r.rows(), r.cols());
    for (const auto& t : s.terms) acc += t.coupling * pow_array(r, 1.0 + t.alpha);
    return acc;
  }
  auto& g = s.g;
  return r.unaryExpr([&g](double a) { return a > 0.0 ? g(a) / a : 0.0; });
}

Eigen::ArrayXXd eval_profile_prime(const NonlinearitySpec& s, const Eigen::ArrayXXd& r) {
  if (!s.terms.empty()) {
    Eigen::ArrayXXd acc = Eigen::ArrayXXd::Zero(r.rows(), r.cols());
    for (const auto& t : s.terms)
      acc += t.coupling * (2.0 + t.alpha) * pow_array(r, 1.0 + t.alpha);
    return acc;
  }
  return r.unaryExpr(s.gprime);
}

Eigen::ArrayXXd eval_profile_int(const NonlinearitySpec& s, const Eigen::ArrayXXd& r) {
  if (!s.terms.empty()) {
    Eigen::ArrayXXd acc = Eigen::ArrayXXd::Zero(r.rows(), r.cols());
    for (const auto& t : s.terms)
      acc += t.coupling / (3.0 + t.alpha) * pow_array(r, 3.0 + t.alpha);
    return acc;
  }
  return r.unaryExpr(s.gint);
}

ComplexField eval_g(const NonlinearitySpec& s, const ComplexField& f) {
  ComplexField out = f;
  Eigen::ArrayXXd rate = eval_phase_rate(s, f.v.abs());
  out.v *= rate;
  return out;
}

ComplexField eval_dg(const NonlinearitySpec& s, const ComplexField& base,
                     const ComplexField& w) {
  check_compatible(base, w);
  Eigen::ArrayXXd r = base.v.abs();
  Eigen::ArrayXXd gp = eval_profile_prime(s, r);
  Eigen::ArrayXXd gr = eval_phase_rate(s, r);
  Eigen::ArrayXXd A = 0.5 * (gp + gr);
  Eigen::ArrayXXd B = 0.5 * (gp - gr);
  // (b/|b|)^2, set to 0 where b = 0 (B also vanishes there)
  Eigen::ArrayXXd r2safe = (r > 0.0).select(r.square(), 1.0);
  Eigen::ArrayXXcd u2 = base.v.square() / r2safe;
  ComplexField out(base.grid);
  out.v = A * w.v + B * (u2 * w.v.conjugate());
  return out;
}

ComplexField eval_g2(const NonlinearitySpec& s, const ComplexField& psi,
                     const ComplexField& z) {
  check_compatible(psi, z);
  ComplexField sum(psi.grid);
  sum.v = psi.v + z.v;
  ComplexField out = eval_g(s, sum);
  out.v -= eval_g(s, psi).v;
  out.v -= eval_dg(s, psi, z).v;
  return out;
}

double d2g_bound(const NonlinearitySpec& s, double amplitude) {
  require(amplitude >= 0.0, "amplitude must be nonnegative");
  return s.c1 * (std::pow(amplitude, s.alpha1) + std::pow(amplitude, s.alpha2));
}

}  // namespace nls
