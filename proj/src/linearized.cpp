#include "nls/linearized.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>

#include "nls/check.hpp"
#include "nls/fft.hpp"

namespace nls {

namespace {

using cd = std::complex<double>;
using Eigen::ArrayXXcd;
using Eigen::ArrayXXd;

constexpr double kSubspaceTol = 1e-8;

// frozen coefficient data for one step: pointwise multipliers of the
// symmetric and conjugating parts of Dg, and the 2x2 system of the inverse
// continuous-subspace projection
struct CoefPack {
  bool zero = true;
  ArrayXXd dga;
  ArrayXXcd dgb;
  double g11 = 1.0, g12 = 0.0, g21 = 0.0, g22 = 1.0, det = 1.0;
  ComplexField d1, d2;
};

CoefPack build_pack(const BoundStateFamily& branch, cd a) {
  CoefPack p;
  if (a == cd(0.0, 0.0)) return p;
  const BoundState bs = branch.at(a);
  const Hamiltonian& h = branch.hamiltonian();

  const ArrayXXd r = bs.psi.v.abs();
  const ArrayXXd gp = eval_profile_prime(branch.nonlinearity(), r);
  const ArrayXXd gr = eval_phase_rate(branch.nonlinearity(), r);
  p.dga = 0.5 * (gp + gr);
  const ArrayXXd r2safe = (r > 0.0).select(r.square(), 1.0);
  p.dgb = (0.5 * (gp - gr)) * (bs.psi.v.square() / r2safe);

  ComplexField ipsi0(h.grid);
  ipsi0.v = cd(0.0, 1.0) * h.psi0.v;
  p.g11 = inner_real(bs.dual1, h.psi0);
  p.g12 = inner_real(bs.dual1, ipsi0);
  p.g21 = inner_real(bs.dual2, h.psi0);
  p.g22 = inner_real(bs.dual2, ipsi0);
  p.det = p.g11 * p.g22 - p.g12 * p.g21;
  ensure(std::abs(p.det) > 1e-10, "linearized flow: projection system is singular");
  p.d1 = bs.dual1;
  p.d2 = bs.dual2;
  p.zero = false;
  return p;
}

enum class Mode { Forward, Backward, Adjoint };

class OmegaStepper {
 public:
  OmegaStepper(const LinearizationFamily& fam, Mode mode)
      : fam_(fam), h_(fam.hamiltonian()), mode_(mode) {
    const double dt = fam.options().dt;
    const double sgn = mode == Mode::Forward ? 1.0 : -1.0;
    const cd mi(0.0, -1.0);
    expv_ = (mi * (0.5 * sgn * dt) * h_.pot.v.cast<cd>()).exp();
    expk_ = (mi * (sgn * dt) * h_.grid->k2.cast<cd>()).exp();
    if (fam.options().absorber.enabled) {
      damp_ = (-dt * absorber_profile(*h_.grid, fam.options().absorber)).exp();
      damped_ = true;
    }
    if (fam.autonomous()) pack0_ = build_pack(fam.branch(), fam.amplitude(0.0));
  }

  // advance across lattice cell [j dt, (j+1) dt] in the stepper's mode
  void cell(ComplexField& z, long j) {
    const CoefPack& p = pack(j);
    const double h = 0.5 * fam_.options().dt;
    switch (mode_) {
      case Mode::Forward:
        half_b(p, z, h);
        a_step(z);
        half_b(p, z, h);
        if (damped_) z.v *= damp_;
        project(z);
        break;
      case Mode::Backward:
        half_b(p, z, -h);
        a_step(z);
        half_b(p, z, -h);
        project(z);
        break;
      case Mode::Adjoint:
        project(z);
        if (damped_) z.v *= damp_;
        half_bt(p, z, h);
        a_step(z);
        half_bt(p, z, h);
        break;
    }
  }

 private:
  const CoefPack& pack(long j) {
    if (fam_.autonomous()) return pack0_;
    const double tau = (static_cast<double>(j) + 0.5) * fam_.options().dt;
    cur_ = build_pack(fam_.branch(), fam_.amplitude(tau));
    return cur_;
  }

  void a_step(ComplexField& z) const {
    z.v *= expv_;
    fft2(z.v);
    z.v *= expk_;
    ifft2(z.v);
    z.v *= expv_;
  }

  void project(ComplexField& z) const {
    z.v -= inner(h_.psi0, z) * h_.psi0.v;
  }

  // -i P_c Dg R_a
  ComplexField apply_b(const CoefPack& p, const ComplexField& z) const {
    const double q1 = inner_real(p.d1, z), q2 = inner_real(p.d2, z);
    const double b1 = (-q1 * p.g22 + q2 * p.g12) / p.det;
    const double b2 = (-p.g11 * q2 + p.g21 * q1) / p.det;
    ComplexField f(h_.grid);
    f.v = z.v + cd(b1, b2) * h_.psi0.v;
    f.v = p.dga * f.v + p.dgb * f.v.conjugate();
    f.v -= inner(h_.psi0, f) * h_.psi0.v;
    f.v *= cd(0.0, -1.0);
    return f;
  }

  // adjoint of apply_b in the real L2 pairing
  ComplexField apply_bt(const CoefPack& p, const ComplexField& v) const {
    ComplexField f(h_.grid);
    f.v = cd(0.0, 1.0) * v.v;
    f.v -= inner(h_.psi0, f) * h_.psi0.v;
    f.v = p.dga * f.v + p.dgb * f.v.conjugate();
    ComplexField ipsi0(h_.grid);
    ipsi0.v = cd(0.0, 1.0) * h_.psi0.v;
    const double p1 = inner_real(h_.psi0, f), p2 = inner_real(ipsi0, f);
    const double c1 = (p.g22 * p1 - p.g21 * p2) / p.det;
    const double c2 = (-p.g12 * p1 + p.g11 * p2) / p.det;
    f.v -= c1 * p.d1.v + c2 * p.d2.v;
    return f;
  }

  void half_b(const CoefPack& p, ComplexField& z, double h) const {
    if (p.zero) return;
    const ComplexField t1 = apply_b(p, z);
    const ComplexField t2 = apply_b(p, t1);
    z.v += h * t1.v + (0.5 * h * h) * t2.v;
  }

  void half_bt(const CoefPack& p, ComplexField& z, double h) const {
    if (p.zero) return;
    const ComplexField t1 = apply_bt(p, z);
    const ComplexField t2 = apply_bt(p, t1);
    z.v += h * t1.v + (0.5 * h * h) * t2.v;
  }

  const LinearizationFamily& fam_;
  const Hamiltonian& h_;
  Mode mode_;
  ArrayXXcd expv_, expk_;
  ArrayXXd damp_;
  bool damped_ = false;
  CoefPack pack0_, cur_;
};

long lattice_index(double tau, double dt, const char* who) {
  const long j = std::lround(tau / dt);
  char msg[96];
  std::snprintf(msg, sizeof msg, "%s: time must sit on the family step lattice", who);
  require(std::isfinite(tau) && std::abs(static_cast<double>(j) * dt - tau) <=
                                    1e-9 * std::max(1.0, std::abs(tau)),
          msg);
  return j;
}

void check_range(const LinearizationFamily& fam, double tau, const char* who) {
  char msg[96];
  std::snprintf(msg, sizeof msg, "%s: time outside the family range", who);
  require(tau >= fam.t_lo() - 1e-9 && tau <= fam.t_hi() + 1e-9, msg);
}

void check_member(const Hamiltonian& h, const ComplexField& v, const char* who) {
  char msg[96];
  require(v.grid == h.grid, std::string(who) + ": field lives on a different grid");
  require(all_finite(v), std::string(who) + ": field has non-finite entries");
  std::snprintf(msg, sizeof msg, "%s: input not in the continuous subspace", who);
  require(std::abs(inner(h.psi0, v)) <=
              kSubspaceTol * std::max(norm_lp(v, 2.0), 1e-300),
          msg);
}

ComplexField march(const LinearizationFamily& fam, const ComplexField& v,
                   long js, long jt, Mode mode) {
  OmegaStepper st(fam, mode);
  ComplexField z = v;
  if (mode == Mode::Adjoint) {
    for (long j = jt - 1; j >= js; --j) st.cell(z, j);
  } else if (jt > js) {
    for (long j = js; j < jt; ++j) st.cell(z, j);
  } else {
    for (long j = js - 1; j >= jt; --j) st.cell(z, j);
  }
  return z;
}

}  // namespace

double hypothesis_weight_norm(const ComplexField& psi, double sigma) {
  require(static_cast<bool>(psi.grid), "hypothesis_weight_norm: empty field");
  require(std::isfinite(sigma) && sigma > 0.0,
          "hypothesis_weight_norm: sigma must be positive");
  ComplexField w(psi.grid);
  w.v = (1.0 + psi.grid->r2).pow(2.0 * sigma / 3.0).cast<cd>() * psi.v;
  return norm_sobolev(w, 2);
}

namespace {

void check_options(const BoundStateFamily& branch, const LinearizedOptions& opt) {
  require(std::isfinite(opt.dt) && opt.dt > 0.0 &&
              opt.dt <= max_time_step(*branch.hamiltonian().grid),
          "linearized family: step outside the accuracy budget");
  require(std::isfinite(opt.sigma) && opt.sigma > 0.0,
          "linearized family: sigma must be positive");
  require(std::isfinite(opt.eps1) && opt.eps1 > 0.0,
          "linearized family: smallness ceiling must be positive");
}

void check_hypothesis(const BoundStateFamily& branch, cd a,
                      const LinearizedOptions& opt) {
  if (a == cd(0.0, 0.0)) return;
  const double n = hypothesis_weight_norm(branch.state(a), opt.sigma);
  char msg[128];
  std::snprintf(msg, sizeof msg,
                "linearized family: coefficient state fails the smallness "
                "ceiling (%.3e >= %.3e)",
                n, opt.eps1);
  require(n < opt.eps1, msg);
}

}  // namespace

LinearizationFamily LinearizationFamily::frozen(const BoundStateFamily& branch,
                                                cd a,
                                                const LinearizedOptions& opt) {
  check_options(branch, opt);
  require(std::isfinite(a.real()) && std::isfinite(a.imag()),
          "frozen family: amplitude not finite");
  require(std::abs(a) <= branch.options().a_max * (1.0 + 1e-12),
          "frozen family: amplitude outside the branch domain");
  check_hypothesis(branch, a, opt);

  LinearizationFamily f;
  f.branch_ = &branch;
  f.opt_ = opt;
  f.frozen_ = true;
  f.a0_ = a;
  f.t_lo_ = -std::numeric_limits<double>::infinity();
  f.t_hi_ = std::numeric_limits<double>::infinity();
  return f;
}

LinearizationFamily LinearizationFamily::along(const BoundStateFamily& branch,
                                               const Trajectory& traj,
                                               const LinearizedOptions& opt) {
  check_options(branch, opt);
  const std::size_t n = traj.times.size();
  require(n >= 2, "trajectory family: needs at least two samples");
  require(traj.a_series.size() == n && traj.theta_series.size() == n &&
              traj.e_series.size() == n,
          "trajectory family: inconsistent series");
  for (std::size_t i = 1; i < n; ++i)
    require(traj.times[i] > traj.times[i - 1],
            "trajectory family: sample times must increase");

  LinearizationFamily f;
  f.branch_ = &branch;
  f.opt_ = opt;
  f.frozen_ = false;
  f.tk_ = traj.times;
  f.theta_ = traj.theta_series;
  f.ek_ = traj.e_series;
  f.atil_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    f.atil_[i] = std::polar(1.0, traj.theta_series[i]) * traj.a_series[i];
    check_hypothesis(branch, traj.a_series[i], opt);
  }
  f.t_lo_ = traj.times.front();
  f.t_hi_ = traj.times.back();
  return f;
}

cd LinearizationFamily::amplitude(double tau) const {
  require(std::isfinite(tau), "amplitude: time not finite");
  if (frozen_) return a0_;
  check_range(*this, tau, "amplitude");
  const double clamped = std::min(std::max(tau, t_lo_), t_hi_);
  const std::size_t m = tk_.size();
  std::size_t k = static_cast<std::size_t>(
      std::upper_bound(tk_.begin(), tk_.end(), clamped) - tk_.begin());
  k = std::min(std::max<std::size_t>(k, 1), m - 1) - 1;
  const double d = tk_[k + 1] - tk_[k];
  const double s = (clamped - tk_[k]) / d;
  const cd atil = (1.0 - s) * atil_[k] + s * atil_[k + 1];
  const double theta =
      theta_[k] + d * (s * ek_[k] + 0.5 * s * s * (ek_[k + 1] - ek_[k]));
  return std::polar(1.0, -theta) * atil;
}

ComplexField propagate_omega(const LinearizationFamily& fam,
                             const ComplexField& v, double s, double t) {
  check_member(fam.hamiltonian(), v, "propagate_omega");
  check_range(fam, s, "propagate_omega");
  check_range(fam, t, "propagate_omega");
  const long js = lattice_index(s, fam.options().dt, "propagate_omega");
  const long jt = lattice_index(t, fam.options().dt, "propagate_omega");
  if (fam.options().absorber.enabled)
    require(jt >= js, "propagate_omega: radiative family propagates forward only");
  if (js == jt) return v;
  ComplexField z =
      march(fam, v, js, jt, jt > js ? Mode::Forward : Mode::Backward);
  ensure(all_finite(z), "propagate_omega: evolution lost finiteness");
  return z;
}

ComplexField propagate_omega_adjoint(const LinearizationFamily& fam,
                                     const ComplexField& v, double s, double t) {
  check_member(fam.hamiltonian(), v, "propagate_omega_adjoint");
  check_range(fam, s, "propagate_omega_adjoint");
  check_range(fam, t, "propagate_omega_adjoint");
  const long js = lattice_index(s, fam.options().dt, "propagate_omega_adjoint");
  const long jt = lattice_index(t, fam.options().dt, "propagate_omega_adjoint");
  require(jt >= js, "propagate_omega_adjoint: needs s <= t");
  if (js == jt) return v;
  ComplexField z = march(fam, v, js, jt, Mode::Adjoint);
  // the trailing coupling half-step leaves a discrete-subspace residue that
  // is invisible to the pairing against continuous-subspace inputs
  const ComplexField& psi0 = fam.hamiltonian().psi0;
  z.v -= inner(psi0, z) * psi0.v;
  ensure(all_finite(z), "propagate_omega_adjoint: evolution lost finiteness");
  return z;
}

ComplexField t_operator(const LinearizationFamily& fam, const ComplexField& v,
                        double s, double t) {
  ComplexField full = propagate_omega(fam, v, s, t);
  const LinearizationFamily zero =
      LinearizationFamily::frozen(fam.branch(), cd(0.0, 0.0), fam.options());
  const ComplexField free_part = propagate_omega(zero, v, s, t);
  full.v -= free_part.v;
  return full;
}

double omega_operator_bound(const LinearizationFamily& fam, double s, double t,
                            const std::vector<ComplexField>& ensemble,
                            int refine_iters) {
  require(!ensemble.empty(), "omega_operator_bound: empty ensemble");
  require(refine_iters >= 0, "omega_operator_bound: negative iteration count");
  require(t > s, "omega_operator_bound: needs s < t");

  double best = 0.0;
  std::size_t worst = 0;
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const double nv = norm_lp(ensemble[i], 2.0);
    require(nv > 0.0, "omega_operator_bound: zero ensemble member");
    const ComplexField z = propagate_omega(fam, ensemble[i], s, t);
    const double r = norm_lp(z, 2.0) / nv;
    if (r > best) {
      best = r;
      worst = i;
    }
  }

  ComplexField u = ensemble[worst];
  u.v /= norm_lp(u, 2.0);
  for (int it = 0; it < refine_iters; ++it) {
    const ComplexField w = propagate_omega(fam, u, s, t);
    best = std::max(best, norm_lp(w, 2.0));
    u = propagate_omega_adjoint(fam, w, s, t);
    const double nu = norm_lp(u, 2.0);
    if (nu < 1e-300) break;
    u.v /= nu;
  }
  return best;
}

double kato_smoothing_check(const LinearizationFamily& fam,
                            const ComplexField& v, double s, double T) {
  check_member(fam.hamiltonian(), v, "kato_smoothing_check");
  require(std::isfinite(T) && T > 0.0,
          "kato_smoothing_check: horizon must be positive");
  check_range(fam, s, "kato_smoothing_check");
  check_range(fam, s + T, "kato_smoothing_check");
  const double dt = fam.options().dt;
  const long js = lattice_index(s, dt, "kato_smoothing_check");
  const long jt = lattice_index(s + T, dt, "kato_smoothing_check");
  require(jt > js, "kato_smoothing_check: empty window");

  const double sigma = fam.options().sigma;
  OmegaStepper st(fam, Mode::Forward);
  ComplexField z = v;
  double acc = 0.0;
  double prev = std::pow(norm_weighted_l2(z, -sigma), 2.0);
  for (long j = js; j < jt; ++j) {
    st.cell(z, j);
    const double cur = std::pow(norm_weighted_l2(z, -sigma), 2.0);
    acc += 0.5 * dt * (prev + cur);
    prev = cur;
  }
  ensure(all_finite(z), "kato_smoothing_check: evolution lost finiteness");
  return std::sqrt(acc) / norm_lp(v, 2.0);
}

DecayRecord measure_omega_decay(const LinearizationFamily& fam,
                                const std::vector<ComplexField>& ensemble,
                                double s, const std::vector<double>& times,
                                const ProbeSpec& probe,
                                const OmegaDecayOptions& opt) {
  require(ensemble.size() >= 5, "measure_omega_decay: needs at least 5 fields");
  require(times.size() >= 4, "measure_omega_decay: need at least 4 sample times");
  require(times.front() > s, "measure_omega_decay: samples must start after s");
  for (std::size_t i = 1; i < times.size(); ++i)
    require(times[i] > times[i - 1], "measure_omega_decay: times must increase");
  if (probe.kind != ProbeSpec::Kind::Weighted)
    require(probe.p > 1.0, "measure_omega_decay: p must exceed 1");
  for (const ComplexField& v : ensemble)
    check_member(fam.hamiltonian(), v, "measure_omega_decay");

  DecayRecord rec;
  rec.probe = probe.label();
  switch (probe.kind) {
    case ProbeSpec::Kind::Weighted:
      rec.predicted_B = 1.0;
      rec.predicted_A = -2.0;
      break;
    case ProbeSpec::Kind::LpPair:
      require(opt.p0 > 2.0, "measure_omega_decay: p0 must exceed 2");
      rec.predicted_B = 1.0 - 2.0 / probe.p;
      rec.predicted_A = (1.0 - 2.0 / probe.p) / (1.0 - 2.0 / opt.p0);
      break;
    case ProbeSpec::Kind::Lp:
      rec.predicted_B = 1.0 - 2.0 / probe.p;
      rec.predicted_A = 0.0;
      break;
  }

  rec.t_valid = std::numeric_limits<double>::infinity();
  std::vector<double> base(ensemble.size());
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    rec.t_valid = std::min(
        rec.t_valid, contamination_time(ensemble[i], fam.options().absorber));
    switch (probe.kind) {
      case ProbeSpec::Kind::Weighted:
        base[i] = norm_weighted_l2(ensemble[i], probe.sigma);
        break;
      case ProbeSpec::Kind::LpPair:
        base[i] = norm_lp(ensemble[i], probe.p / (probe.p - 1.0));
        break;
      case ProbeSpec::Kind::Lp:
        base[i] = norm_lp(ensemble[i], 2.0);
        break;
    }
    ensure(base[i] > 0.0, "measure_omega_decay: degenerate ensemble member");
  }

  rec.t.assign(times.size(), 0.0);
  rec.value.assign(times.size(), 0.0);
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    ComplexField z = ensemble[i];
    double from = s;
    for (std::size_t k = 0; k < times.size(); ++k) {
      z = propagate_omega(fam, z, from, times[k]);
      from = times[k];
      const double val = probe.kind == ProbeSpec::Kind::Weighted
                             ? norm_weighted_l2(z, -probe.sigma)
                             : norm_lp(z, probe.p);
      rec.t[k] = times[k] - s;
      rec.value[k] = std::max(rec.value[k], val / base[i]);
    }
  }

  const double tmin = opt.fit_t_min;
  const double tmax = opt.fit_t_max > 0.0 ? opt.fit_t_max : rec.t.back();
  bool positive = true;
  for (std::size_t i = 0; i < rec.t.size(); ++i)
    if (rec.t[i] >= tmin && rec.t[i] <= tmax && !(rec.value[i] > 0.0))
      positive = false;
  if (!positive) {
    rec.valid = false;
    rec.note = "degenerate samples in fit window";
    return rec;
  }
  rec.fit_pure = fit_decay(rec.t, rec.value, DecayModel::PurePower, tmin, tmax);
  rec.fit_log = fit_decay(rec.t, rec.value, DecayModel::PowerWithLog, tmin, tmax);
  if (tmax > rec.t_valid + 1e-9) {
    rec.valid = false;
    rec.note = "fit window exceeds boundary contamination estimate";
  }
  return rec;
}

}  // namespace nls
