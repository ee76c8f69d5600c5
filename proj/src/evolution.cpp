#include "nls/evolution.hpp"

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

double spectral_norm(const Eigen::Matrix2d& m) {
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(m);
  return svd.singularValues()(0);
}

double probe_on(const ProbeSpec& p, const ComplexField& w) {
  if (p.kind == ProbeSpec::Kind::Weighted) return norm_weighted_l2(w, -p.sigma);
  return norm_lp(w, p.p);
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (den <= 0.0) return 0.0;
  return (n * sxy - sx * sy) / den;
}

}  // namespace

double max_time_step(const Grid&) { return 0.1; }

ComplexField step_nls(const Hamiltonian& h, const NonlinearitySpec& nl,
                      const ComplexField& u, double dt) {
  require(u.grid == h.grid, "step_nls: field grid mismatch");
  require(std::isfinite(dt) && dt > 0.0 && dt <= max_time_step(*h.grid),
          "step_nls: time step beyond the accuracy budget");
  const Grid& g = *u.grid;
  const double in_peak = u.v.abs().maxCoeff();

  ComplexField out = u;
  auto half_phase = [&](ArrayXXcd& w) {
    const ArrayXXd phase = -0.5 * dt * (h.pot.v + eval_phase_rate(nl, w.abs()));
    w *= phase.cos().cast<cd>() + cd(0.0, 1.0) * phase.sin().cast<cd>();
  };
  half_phase(out.v);
  fft2(out.v);
  const ArrayXXd kphase = -dt * g.k2;
  out.v *= kphase.cos().cast<cd>() + cd(0.0, 1.0) * kphase.sin().cast<cd>();
  ifft2(out.v);
  half_phase(out.v);

  ensure(all_finite(out), "step_nls: non-finite field after step");
  ensure(out.v.abs().maxCoeff() <= 1e3 * std::max(in_peak, 1e-300),
         "step_nls: amplitude instability");
  return out;
}

double mass(const ComplexField& u) {
  require(static_cast<bool>(u.grid), "mass: empty field");
  return u.grid->dx * u.grid->dx * u.v.abs2().sum();
}

double energy(const Hamiltonian& h, const NonlinearitySpec& nl,
              const ComplexField& u) {
  require(u.grid == h.grid, "energy: field grid mismatch");
  const Grid& g = *u.grid;
  const double cell = g.dx * g.dx;
  ArrayXXcd hat = u.v;
  fft2(hat);
  const double kinetic =
      (g.k2 * hat.abs2()).sum() * cell / (static_cast<double>(g.n) * g.n);
  const double trapped = (h.pot.v * u.v.abs2()).sum() * cell;
  const double self = 2.0 * eval_profile_int(nl, u.v.abs()).sum() * cell;
  return kinetic + trapped + self;
}

std::complex<double> modulation_rhs(const BoundState& bs,
                                    const NonlinearitySpec& nl,
                                    const ComplexField& eta,
                                    const Eigen::Matrix2d& m) {
  require(static_cast<bool>(bs.psi.grid), "modulation_rhs: empty bound state");
  require(bs.dual1.grid == bs.psi.grid && bs.dual2.grid == bs.psi.grid,
          "modulation_rhs: bound state lacks dual data");
  require(eta.grid == bs.psi.grid, "modulation_rhs: field grid mismatch");
  require(m.allFinite(), "modulation_rhs: matrix has non-finite entries");
  require(spectral_norm(m) <= 0.5 + 1e-12,
          "modulation_rhs: correction matrix outside the contraction zone");

  ComplexField forcing = eval_g2(nl, bs.psi, eta);
  forcing.v *= cd(0.0, -1.0);
  const Eigen::Vector2d proj(inner_real(bs.dual1, forcing),
                             inner_real(bs.dual2, forcing));
  const Eigen::Matrix2d jac = Eigen::Matrix2d::Identity() - m;
  ensure(std::abs(jac.determinant()) > 1e-6, "modulation_rhs: system nearly singular");
  const Eigen::Vector2d v = jac.partialPivLu().solve(proj);
  return {v(0), v(1)};
}

Trajectory run_with_tracking(const Hamiltonian& h, const BoundStateFamily& fam,
                             const NonlinearitySpec& nl, const ComplexField& u0,
                             double T, double dt,
                             const std::vector<ProbeSpec>& probes,
                             const RunOptions& opt) {
  require(h.grid == fam.hamiltonian().grid,
          "run_with_tracking: operator and branch grids differ");
  require(u0.grid == h.grid, "run_with_tracking: field grid mismatch");
  require(all_finite(u0), "run_with_tracking: initial data has non-finite entries");
  require(!probes.empty(), "run_with_tracking: probe list is empty");
  require(nl.name == fam.nonlinearity().name,
          "run_with_tracking: nonlinearity differs from the branch");
  require(std::isfinite(T) && T > 0.0, "run_with_tracking: horizon must be positive");
  require(std::isfinite(dt) && dt > 0.0 && dt <= max_time_step(*h.grid),
          "run_with_tracking: time step beyond the accuracy budget");
  require(opt.sample_dt > 0.0 && opt.snapshot_stride >= 0,
          "run_with_tracking: invalid sampling options");
  for (const ProbeSpec& p : probes)
    require(p.kind != ProbeSpec::Kind::LpPair,
            "run_with_tracking: pair probes only apply to the linear flow");

  const long nsub = std::lround(opt.sample_dt / dt);
  require(nsub >= 1 && std::abs(nsub * dt - opt.sample_dt) <= 1e-9 * opt.sample_dt,
          "run_with_tracking: sample cadence must be an integer multiple of dt");
  const long nsamp = std::lround(T / opt.sample_dt);
  require(nsamp >= 1 && std::abs(nsamp * opt.sample_dt - T) <= 1e-9 * T,
          "run_with_tracking: horizon must be an integer number of samples");

  DecomposeOptions dopt;
  dopt.phi_max = opt.phi_max;
  const double cap = opt.phi_max > 0.0 ? opt.phi_max : 0.5 * fam.options().a_max;
  require(norm_lp(u0, 2.0) <= cap * (1.0 + 1e-12),
          "run_with_tracking: initial data exceeds the decomposition ceiling");

  Trajectory tr;
  tr.dt = dt;
  tr.sample_dt = opt.sample_dt;
  tr.probe_labels.reserve(probes.size());
  for (const ProbeSpec& p : probes) tr.probe_labels.push_back(p.label());
  tr.eta_norms.assign(probes.size(), {});

  ArrayXXd damp;
  if (opt.absorber.enabled)
    damp = (-dt * absorber_profile(*h.grid, opt.absorber)).exp();

  ComplexField u = u0;
  const double peak0 = std::max(u0.v.abs().maxCoeff(), 1e-300);
  std::vector<cd> rhs_series;
  rhs_series.reserve(static_cast<std::size_t>(nsamp) + 1);
  cd prev_a{0.0, 0.0};
  double theta = 0.0, e_prev = 0.0;

  for (long k = 0; k <= nsamp; ++k) {
    if (k > 0) {
      for (long s = 0; s < nsub; ++s) {
        u = step_nls(h, nl, u, dt);
        if (opt.absorber.enabled) u.v *= damp;
      }
      ensure(u.v.abs().maxCoeff() <= 1e3 * peak0,
             "run_with_tracking: amplitude instability");
    }
    const double t_k = static_cast<double>(k) * opt.sample_dt;
    try {
      const Decomposition d =
          k == 0 ? decompose(fam, u, dopt) : decompose(fam, u, dopt, &prev_a);
      const double e_k = fam.energy(std::abs(d.a));
      if (k > 0) theta += 0.5 * opt.sample_dt * (e_prev + e_k);

      const cd phase = std::polar(1.0, theta);
      const cd atilde = phase * d.a;
      ComplexField eta_t = d.eta;
      eta_t.v *= phase;
      const MMatrix mm = m_matrix(fam, atilde, recompose(fam, atilde, eta_t));
      ensure(mm.norm <= 0.5,
             "modulation matrix left the contraction zone");
      const cd rhs = modulation_rhs(fam.at(atilde), nl, eta_t, mm.m);

      tr.times.push_back(t_k);
      tr.a_series.push_back(d.a);
      tr.theta_series.push_back(theta);
      tr.e_series.push_back(e_k);
      tr.mass_series.push_back(mass(u));
      tr.energy_series.push_back(energy(h, nl, u));
      for (std::size_t i = 0; i < probes.size(); ++i)
        tr.eta_norms[i].push_back(probe_on(probes[i], d.eta));
      rhs_series.push_back(rhs);
      if (opt.snapshot_stride > 0 && k % opt.snapshot_stride == 0) {
        tr.snapshot_samples.push_back(static_cast<int>(tr.times.size()) - 1);
        tr.snapshots.push_back(d.eta);
      }
      prev_a = d.a;
      e_prev = e_k;
    } catch (const std::exception& err) {
      tr.truncated = true;
      char msg[192];
      std::snprintf(msg, sizeof msg, "sample at t = %.6g: %s", t_k, err.what());
      tr.truncation_reason = msg;
      break;
    }
  }

  const std::size_t n = tr.times.size();
  tr.ode_residuals.assign(n, 0.0);
  if (n >= 2) {
    std::vector<cd> atil(n);
    for (std::size_t i = 0; i < n; ++i)
      atil[i] = std::polar(1.0, tr.theta_series[i]) * tr.a_series[i];
    const double dlt = opt.sample_dt;
    for (std::size_t i = 0; i < n; ++i) {
      cd deriv;
      if (i == 0)
        deriv = (atil[1] - atil[0]) / dlt;
      else if (i == n - 1)
        deriv = (atil[n - 1] - atil[n - 2]) / dlt;
      else
        deriv = (atil[i + 1] - atil[i - 1]) / (2.0 * dlt);
      tr.ode_residuals[i] = std::abs(deriv - rhs_series[i]);
    }
  }
  return tr;
}

std::vector<double> check_modulation_residual(const Trajectory& traj,
                                              const BoundStateFamily& fam,
                                              const NonlinearitySpec& nl) {
  require(traj.snapshots.size() == traj.snapshot_samples.size(),
          "check_modulation_residual: inconsistent snapshot bookkeeping");
  require(traj.snapshots.size() >= 2,
          "check_modulation_residual: needs at least two stored snapshots");
  require(traj.sample_dt > 0.0, "check_modulation_residual: missing cadence");

  const std::size_t m = traj.snapshots.size();
  std::vector<cd> atil(m), rhs(m);
  for (std::size_t i = 0; i < m; ++i) {
    const int k = traj.snapshot_samples[i];
    require(k >= 0 && static_cast<std::size_t>(k) < traj.times.size(),
            "check_modulation_residual: snapshot index out of range");
    const cd phase = std::polar(1.0, traj.theta_series[k]);
    atil[i] = phase * traj.a_series[k];
    ComplexField eta_t = traj.snapshots[i];
    eta_t.v *= phase;
    const MMatrix mm = m_matrix(fam, atil[i], recompose(fam, atil[i], eta_t));
    rhs[i] = modulation_rhs(fam.at(atil[i]), nl, eta_t, mm.m);
  }

  std::vector<double> out;
  out.reserve(m - 1);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    require(traj.snapshot_samples[i + 1] == traj.snapshot_samples[i] + 1,
            "check_modulation_residual: snapshots must sit at consecutive samples");
    const cd deriv = (atil[i + 1] - atil[i]) / traj.sample_dt;
    out.push_back(std::abs(deriv - 0.5 * (rhs[i] + rhs[i + 1])));
  }
  return out;
}

AsymptoticState asymptotic_state(const Trajectory& traj) {
  const std::size_t n = traj.times.size();
  require(n >= 16, "asymptotic_state: trajectory too short");
  require(traj.a_series.size() == n && traj.theta_series.size() == n &&
              traj.e_series.size() == n,
          "asymptotic_state: inconsistent series");

  std::vector<cd> atil(n);
  for (std::size_t i = 0; i < n; ++i)
    atil[i] = std::polar(1.0, traj.theta_series[i]) * traj.a_series[i];

  AsymptoticState out;
  const std::size_t tail = n - n / 4;
  cd acc{0.0, 0.0};
  double eacc = 0.0;
  for (std::size_t i = tail; i < n; ++i) {
    acc += atil[i];
    eacc += traj.e_series[i];
  }
  const double cnt = static_cast<double>(n - tail);
  out.a_plus = acc / cnt;
  out.e_plus = eacc / cnt;

  out.theta_tilde.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.theta_tilde[i] = traj.times[i] > 0.0
                             ? traj.theta_series[i] / traj.times[i] - out.e_plus
                             : traj.e_series[i] - out.e_plus;

  std::vector<double> xs, ys;
  bool clamped_all = true;
  for (std::size_t i = n / 4; i < tail; ++i) {
    const double gap = std::abs(atil[i] - out.a_plus);
    xs.push_back(1.0 + traj.times[i]);
    ys.push_back(std::max(gap, 1e-14));
    if (gap > 1e-14) clamped_all = false;
  }
  out.convergence_rate = -fit_loglog_slope(xs, ys);

  double lo = std::numeric_limits<double>::infinity(), hi = 0.0, mean = 0.0;
  for (std::size_t i = tail; i < n; ++i) {
    const double v = std::abs(atil[i]);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    mean += v;
  }
  mean /= cnt;
  out.settled = (hi - lo) <= std::max(0.02 * mean, 1e-9);
  if (!out.settled)
    out.note = "amplitude still drifting over the tail";
  else if (clamped_all)
    out.note = "amplitude pinned at the noise floor; rate fit degenerate";
  return out;
}

PredictedEnvelope predicted_envelope(double p, const NonlinearitySpec& nl,
                                     double p0, double q0) {
  require(std::isfinite(p) && std::isfinite(p0) && std::isfinite(q0),
          "predicted_envelope: non-finite arguments");
  const double a1 = nl.alpha1, a2 = nl.alpha2;
  require(a1 > 0.5, "predicted_envelope: needs alpha1 > 1/2");
  require(q0 > 4.0 + 2.0 * a2, "predicted_envelope: q0 must exceed 4 + 2 alpha2");
  require(p0 > 2.0 / (a1 - 0.5), "predicted_envelope: p0 below the admissible floor");
  require(p0 > (4.0 + 2.0 * a2) * (q0 - 2.0) / (q0 - (4.0 + 2.0 * a2)),
          "predicted_envelope: p0 incompatible with q0");

  PredictedEnvelope env;
  env.p2 = p0 * q0 / (p0 + q0 - 2.0);
  env.p1 = a1 < 1.0 ? 2.0 / (1.0 - a1 + 2.0 / p0)
                    : std::numeric_limits<double>::infinity();
  require(p >= 2.0 && p <= env.p2 * (1.0 + 1e-12),
          "predicted_envelope: p outside [2, p2]");

  if (a1 < 1.0 && p > env.p1) {
    env.power_exponent = a1 - 2.0 / p0;
    env.log_exponent = (a1 - 2.0 / p0) / (1.0 - 2.0 / p0);
    env.saturated = true;
  } else {
    env.power_exponent = 1.0 - 2.0 / p;
    env.log_exponent = (1.0 - 2.0 / p) / (1.0 - 2.0 / p0);
  }
  return env;
}

double PredictedEnvelope::operator()(double t) const {
  require(std::isfinite(t) && t >= 0.0, "envelope: time must be nonnegative");
  return std::pow(std::log(2.0 + t), log_exponent) /
         std::pow(1.0 + t, power_exponent);
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  const std::size_t n = traj.times.size();
  require(traj.a_series.size() == n && traj.theta_series.size() == n &&
              traj.mass_series.size() == n && traj.energy_series.size() == n &&
              traj.ode_residuals.size() == n,
          "write_trajectory_csv: inconsistent series");
  for (const auto& col : traj.eta_norms)
    require(col.size() == n, "write_trajectory_csv: inconsistent probe series");
  require(traj.eta_norms.size() == traj.probe_labels.size(),
          "write_trajectory_csv: probe labels out of step");

  std::FILE* fp = std::fopen(path.c_str(), "wb");
  ensure(fp != nullptr, "cannot open trajectory csv for writing: " + path);
  std::fprintf(fp, "t,re_a,im_a,theta,mass,energy");
  for (const std::string& label : traj.probe_labels)
    std::fprintf(fp, ",eta_%s", label.c_str());
  std::fprintf(fp, ",ode_residual\n");
  for (std::size_t i = 0; i < n; ++i) {
    std::fprintf(fp, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", traj.times[i],
                 traj.a_series[i].real(), traj.a_series[i].imag(),
                 traj.theta_series[i], traj.mass_series[i],
                 traj.energy_series[i]);
    for (const auto& col : traj.eta_norms) std::fprintf(fp, ",%.17g", col[i]);
    std::fprintf(fp, ",%.17g\n", traj.ode_residuals[i]);
  }
  std::fclose(fp);
}

}  // namespace nls
