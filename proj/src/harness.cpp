#include "nls/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "nls/check.hpp"
#include "nls/fft.hpp"
#include "nls/rng.hpp"

namespace fs = std::filesystem;

namespace nls {

namespace {

using json = nlohmann::ordered_json;
using std::complex;

void write_text(const std::string& path, const std::string& text) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  ensure(fp != nullptr, "harness: cannot open " + path + " for writing");
  const std::size_t n = std::fwrite(text.data(), 1, text.size(), fp);
  std::fclose(fp);
  ensure(n == text.size(), "harness: short write to " + path);
}

void write_json(const std::string& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

std::string join(const fs::path& dir, const std::string& name) {
  return (dir / name).string();
}

double snap_to_lattice(double t, double dt) {
  return dt * static_cast<double>(std::lround(t / dt));
}

// localized moving packet: Gaussian envelope, carrier drawn from the
// configured ring, projected and normalized
ComplexField make_packet(const Hamiltonian& h, const ExperimentConfig& cfg,
                         int member) {
  Rng base(cfg.seed);
  Rng rng = base.fork(101 + static_cast<std::uint64_t>(member));
  const double kmag =
      cfg.carrier_min + (cfg.carrier_max - cfg.carrier_min) * rng.uniform();
  const double ang = 2.0 * M_PI * rng.uniform();
  const double kx = kmag * std::cos(ang), ky = kmag * std::sin(ang);
  const double ph = 2.0 * M_PI * rng.uniform();
  const double w2 = 2.0 * cfg.packet_width * cfg.packet_width;

  const Grid& g = *h.grid;
  ComplexField f(h.grid);
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      const double x = g.x(i), y = g.x(j);
      f.v(i, j) =
          std::polar(std::exp(-(x * x + y * y) / w2), kx * x + ky * y + ph);
    }
  f = project_continuous(h, f);
  const double nrm = norm_lp(f, 2.0);
  ensure(nrm > 0.0, "make_packet: degenerate packet");
  f.v /= nrm;
  return f;
}

double relative_l2(const ComplexField& a, const ComplexField& b) {
  ComplexField d = a;
  d.v -= b.v;
  return norm_lp(d, 2.0) / std::max(norm_lp(b, 2.0), 1e-300);
}

json exponent_rows_json(const TheoremReport& rep) {
  json rows = json::array();
  for (const ExponentRow& r : rep.rows)
    rows.push_back(json{{"p", r.p},
                        {"probe", r.probe},
                        {"present", r.present},
                        {"predicted_B", r.predicted_B},
                        {"predicted_A", r.predicted_A},
                        {"fitted_B", r.fitted_B},
                        {"fitted_A", r.fitted_A},
                        {"b_halfwidth", r.b_halfwidth},
                        {"window_valid", r.window_valid},
                        {"pass", r.pass}});
  return rows;
}

}  // namespace

double derived_q0(const NonlinearitySpec& nl) {
  require(nl.alpha2 > 0.5, "derived_q0: needs alpha2 > 1/2");
  const double q0p = 0.95 * (4.0 + 2.0 * nl.alpha2) / (3.0 + 2.0 * nl.alpha2);
  return q0p / (q0p - 1.0);
}

double effective_q0(const ExperimentConfig& cfg, const NonlinearitySpec& nl) {
  return cfg.q0 == 0.0 ? derived_q0(nl) : cfg.q0;
}

TheoremReport compare_to_theorem(const std::vector<DecayRecord>& records,
                                 const NonlinearitySpec& nl, double p0,
                                 double q0, double tolerance) {
  require(tolerance > 0.0, "compare_to_theorem: tolerance must be positive");
  TheoremReport rep;
  if (records.empty()) return rep;

  const double p2 = p0 * q0 / (p0 + q0 - 2.0);
  const double p1 = nl.alpha1 < 1.0
                        ? 2.0 / (1.0 - nl.alpha1 + 2.0 / p0)
                        : std::numeric_limits<double>::infinity();
  std::vector<double> ps = {2.0, 4.0};
  if (nl.alpha1 < 1.0 && p1 < p2) ps.push_back(p1);
  ps.push_back(p2);
  std::sort(ps.begin(), ps.end());
  std::vector<double> keep;
  for (double p : ps) {
    if (p > p2 * (1.0 + 1e-12)) continue;
    if (!keep.empty() && p <= keep.back() * (1.0 + 1e-9)) continue;
    keep.push_back(p);
  }

  for (double p : keep) {
    const PredictedEnvelope env = predicted_envelope(p, nl, p0, q0);
    ExponentRow row;
    row.p = p;
    ProbeSpec spec;
    spec.kind = ProbeSpec::Kind::Lp;
    spec.p = p;
    row.probe = spec.label();
    row.predicted_B = env.power_exponent;
    row.predicted_A = env.log_exponent;
    for (const DecayRecord& rec : records) {
      if (rec.probe != row.probe) continue;
      row.present = true;
      row.fitted_B = rec.fit_pure.B;
      row.fitted_A = rec.fit_log.A;
      row.b_halfwidth = rec.fit_pure.b_halfwidth;
      row.window_valid = rec.valid;
      row.pass =
          rec.valid && std::abs(row.fitted_B - row.predicted_B) <= tolerance;
      rep.all_pass = rep.all_pass && row.pass;
      break;
    }
    rep.rows.push_back(row);
  }
  return rep;
}

ComplexField seeded_radiation(const Hamiltonian& h, std::uint64_t seed,
                              double width, double band) {
  require(width > 0.0 && std::isfinite(width),
          "seeded_radiation: width must be positive");
  require(band > 0.0 && std::isfinite(band),
          "seeded_radiation: band must be positive");
  const Grid& g = *h.grid;
  Rng rng(seed);
  ComplexField f(h.grid);
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i)
      f.v(i, j) = complex<double>(rng.gaussian(), rng.gaussian()) *
                  std::exp(-width * g.r2(i, j));

  // fourth-order spectral rolloff: outgoing waves cross desk-scale boxes
  // slowly, keeping the contamination estimate clear of fit windows
  const double kc2 = band * band;
  fft2(f.v);
  f.v *= (-(g.k2 / kc2).square()).exp();
  ifft2(f.v);

  f = project_continuous(h, f);
  const double nrm = norm_lp(f, 2.0);
  ensure(nrm > 0.0, "seeded_radiation: degenerate seed field");
  f.v /= nrm;
  return f;
}

std::vector<ComplexField> packet_ensemble(const Hamiltonian& h,
                                          const ExperimentConfig& cfg) {
  require(cfg.ensemble >= 1, "packet_ensemble: empty ensemble");
  std::vector<ComplexField> out;
  out.reserve(static_cast<std::size_t>(cfg.ensemble));
  for (int s = 0; s < cfg.ensemble; ++s) out.push_back(make_packet(h, cfg, s));
  return out;
}

RunArtifacts run_experiment(const ExperimentConfig& cfg, bool resume) {
  RunArtifacts art;
  art.dir = cfg.output_dir;
  const fs::path dir(cfg.output_dir);
  std::string stage = "config";
  try {
    fs::create_directories(dir);
    write_text(join(dir, "config.json"), serialize_config(cfg));
    require(!cfg.probes.empty(), "run_experiment: no probes configured");
    const NonlinearitySpec nl = resolve_nonlinearity(cfg);
    const double q0 = effective_q0(cfg, nl);

    stage = "hamiltonian";
    const GridPtr g = Grid::make(cfg.grid_n, cfg.grid_length);
    const Potential pot = build_potential(cfg.potential_kind, cfg.potential_depth,
                                          cfg.potential_width, g);
    const Hamiltonian h = assemble_hamiltonian(pot);

    stage = "branch";
    FamilyOptions fopt;
    fopt.a_min = cfg.a_min;
    fopt.a_max = cfg.a_max;
    fopt.ratio = cfg.ratio;
    const std::string branch_dir = join(dir, "branch");
    const BoundStateFamily fam = [&] {
      if (resume && fs::exists(fs::path(branch_dir) / "manifest.json"))
        return BoundStateFamily::load(branch_dir, h, nl);
      BoundStateFamily built = BoundStateFamily::build(h, nl, fopt);
      built.save(branch_dir);
      return built;
    }();

    stage = "initial-data";
    ComplexField rad(h.grid);
    bool have_rad = false;
    if (cfg.radiation_amplitude > 0.0) {
      rad = seeded_radiation(h, cfg.seed, cfg.radiation_width, cfg.radiation_band);
      have_rad = true;
    }
    ComplexField u0(h.grid);
    if (cfg.a0 > 0.0) {
      const BoundState bs = fam.at(complex<double>(cfg.a0, 0.0));
      u0 = bs.psi;
      if (have_rad) {
        ComplexField zeta = rad;
        zeta.v *= cfg.radiation_amplitude;
        u0.v += fam.inverse_projection(bs, zeta).v;
      }
    } else {
      require(have_rad, "run_experiment: initial data is identically zero");
      u0 = rad;
      u0.v *= cfg.radiation_amplitude;
    }

    stage = "evolution";
    RunOptions ropt;
    ropt.sample_dt = cfg.sample_dt;
    ropt.absorber = cfg.absorber;
    ropt.snapshot_stride = cfg.snapshot_stride;
    ropt.phi_max = cfg.phi_max;
    art.traj = run_with_tracking(h, fam, nl, u0, cfg.time, cfg.dt, cfg.probes, ropt);
    write_trajectory_csv(art.traj, join(dir, "trajectory.csv"));

    stage = "fits";
    const double t_valid = contamination_time(have_rad ? rad : u0, cfg.absorber);
    const double tmin = cfg.fit_t_min;
    const double tmax = cfg.fit_t_max > 0.0 ? cfg.fit_t_max : art.traj.times.back();
    const double p2 = cfg.p0 * q0 / (cfg.p0 + q0 - 2.0);
    for (std::size_t ip = 0; ip < cfg.probes.size(); ++ip) {
      const ProbeSpec& probe = cfg.probes[ip];
      DecayRecord rec;
      rec.probe = art.traj.probe_labels.at(ip);
      rec.t = art.traj.times;
      rec.value = art.traj.eta_norms.at(ip);
      switch (probe.kind) {
        case ProbeSpec::Kind::Weighted:
          rec.predicted_B = 1.0;
          rec.predicted_A = -2.0;
          break;
        case ProbeSpec::Kind::LpPair:
          rec.predicted_B = 1.0 - 2.0 / probe.p;
          rec.predicted_A = (1.0 - 2.0 / probe.p) / (1.0 - 2.0 / cfg.p0);
          break;
        case ProbeSpec::Kind::Lp:
          if (probe.p <= p2 * (1.0 + 1e-12)) {
            const PredictedEnvelope env = predicted_envelope(probe.p, nl, cfg.p0, q0);
            rec.predicted_B = env.power_exponent;
            rec.predicted_A = env.log_exponent;
          } else {
            rec.note = "p beyond the envelope validity range; no prediction";
          }
          break;
      }
      rec.t_valid = t_valid;

      bool positive = false;
      for (std::size_t i = 0; i < rec.t.size(); ++i)
        if (rec.t[i] >= tmin && rec.t[i] <= tmax) {
          positive = rec.value[i] > 0.0;
          if (!positive) break;
        }
      if (!positive) {
        rec.valid = false;
        rec.note = "degenerate samples in fit window";
      } else {
        try {
          rec.fit_pure = fit_decay(rec.t, rec.value, DecayModel::PurePower, tmin, tmax);
          rec.fit_log =
              fit_decay(rec.t, rec.value, DecayModel::PowerWithLog, tmin, tmax);
        } catch (const std::exception& e) {
          rec.valid = false;
          rec.note = e.what();
        }
        if (rec.valid && tmax > rec.t_valid + 1e-9) {
          rec.valid = false;
          rec.note = "fit window exceeds boundary contamination estimate";
        }
      }
      write_decay_csv(join(dir, "decay_" + rec.probe + ".csv"), rec);
      art.records.push_back(rec);
    }

    stage = "asymptotic";
    art.asym = asymptotic_state(art.traj);
    write_json(join(dir, "asymptotic.json"),
               json{{"a_plus", {art.asym.a_plus.real(), art.asym.a_plus.imag()}},
                    {"e_plus", art.asym.e_plus},
                    {"convergence_rate", art.asym.convergence_rate},
                    {"settled", art.asym.settled},
                    {"note", art.asym.note}});

    stage = "report";
    art.report = compare_to_theorem(art.records, nl, cfg.p0, q0, cfg.tolerance);
    write_json(join(dir, "report.json"),
               json{{"status", "ok"},
                    {"stage", stage},
                    {"message", ""},
                    {"truncated", art.traj.truncated},
                    {"truncation_reason", art.traj.truncation_reason},
                    {"all_pass", art.report.all_pass},
                    {"exponents", exponent_rows_json(art.report)}});
    art.ok = true;
    art.stage = stage;
  } catch (const std::exception& e) {
    art.ok = false;
    art.stage = stage;
    art.message = e.what();
    try {
      write_json(join(dir, "report.json"),
                 json{{"status", "error"},
                      {"stage", stage},
                      {"message", art.message},
                      {"truncated", art.traj.truncated},
                      {"truncation_reason", art.traj.truncation_reason},
                      {"all_pass", false},
                      {"exponents", exponent_rows_json(art.report)}});
    } catch (...) {
    }
  }
  return art;
}

LinearProbeArtifacts probe_linear(const ExperimentConfig& cfg) {
  LinearProbeArtifacts art;
  art.dir = cfg.output_dir;
  const fs::path dir(cfg.output_dir);
  std::string stage = "config";
  json recs = json::array();
  try {
    fs::create_directories(dir);
    write_text(join(dir, "config.json"), serialize_config(cfg));
    require(!cfg.probes.empty(), "probe_linear: no probes configured");

    stage = "hamiltonian";
    const GridPtr g = Grid::make(cfg.grid_n, cfg.grid_length);
    const Potential pot = build_potential(cfg.potential_kind, cfg.potential_depth,
                                          cfg.potential_width, g);
    const Hamiltonian h =
        cfg.potential_kind == "zero" ? free_hamiltonian(g) : assemble_hamiltonian(pot);

    stage = "measurement";
    const ComplexField pkt = make_packet(h, cfg, 0);
    std::vector<double> times;
    for (int k = 1; k * cfg.cadence <= cfg.time + 1e-9; ++k)
      times.push_back(k * cfg.cadence);
    require(times.size() >= 4, "probe_linear: too few sample times");

    LinearDecayOptions lopt;
    lopt.dt = cfg.dt;
    lopt.absorber = cfg.absorber;
    lopt.fit_t_min = cfg.fit_t_min;
    lopt.fit_t_max = cfg.fit_t_max;

    for (const ProbeSpec& probe : cfg.probes) {
      DecayRecord rec = measure_linear_decay(h, pkt, times, probe, lopt);
      write_decay_csv(join(dir, "decay_linear_" + rec.probe + ".csv"), rec);
      const double tol =
          probe.kind == ProbeSpec::Kind::Weighted ? 0.2 : cfg.tolerance;
      const bool pass =
          rec.valid && std::abs(rec.fit_pure.B - rec.predicted_B) <= tol;
      art.all_pass = art.all_pass && pass;
      recs.push_back(json{{"probe", rec.probe},
                          {"predicted_B", rec.predicted_B},
                          {"predicted_A", rec.predicted_A},
                          {"fitted_B", rec.fit_pure.B},
                          {"fitted_A", rec.fit_log.A},
                          {"b_halfwidth", rec.fit_pure.b_halfwidth},
                          {"t_valid", rec.t_valid},
                          {"valid", rec.valid},
                          {"note", rec.note},
                          {"pass", pass}});
      art.records.push_back(std::move(rec));
    }

    stage = "report";
    write_json(join(dir, "linear_report.json"), json{{"status", "ok"},
                                                     {"stage", stage},
                                                     {"message", ""},
                                                     {"all_pass", art.all_pass},
                                                     {"records", recs}});
    art.ok = true;
    art.stage = stage;
  } catch (const std::exception& e) {
    art.ok = false;
    art.all_pass = false;
    art.stage = stage;
    art.message = e.what();
    try {
      write_json(join(dir, "linear_report.json"), json{{"status", "error"},
                                                       {"stage", stage},
                                                       {"message", art.message},
                                                       {"all_pass", false},
                                                       {"records", recs}});
    } catch (...) {
    }
  }
  return art;
}

OmegaProbeArtifacts probe_omega(const ExperimentConfig& cfg) {
  OmegaProbeArtifacts art;
  art.dir = cfg.output_dir;
  const fs::path dir(cfg.output_dir);
  std::string stage = "config";
  try {
    fs::create_directories(dir);
    write_text(join(dir, "config.json"), serialize_config(cfg));
    require(cfg.a0 > 0.0, "probe_omega: needs a positive base amplitude");
    require(cfg.ensemble >= 5, "probe_omega: needs at least 5 ensemble members");
    const NonlinearitySpec nl = resolve_nonlinearity(cfg);

    stage = "hamiltonian";
    const GridPtr g = Grid::make(cfg.grid_n, cfg.grid_length);
    const Potential pot = build_potential(cfg.potential_kind, cfg.potential_depth,
                                          cfg.potential_width, g);
    const Hamiltonian h = assemble_hamiltonian(pot);

    stage = "branch";
    FamilyOptions fopt;
    fopt.a_min = cfg.a_min;
    fopt.a_max = cfg.a_max;
    fopt.ratio = cfg.ratio;
    const BoundStateFamily fam = BoundStateFamily::build(h, nl, fopt);

    stage = "battery";
    LinearizedOptions lopt;
    lopt.dt = cfg.dt;
    lopt.absorber = cfg.absorber;
    for (const ProbeSpec& probe : cfg.probes)
      if (probe.kind == ProbeSpec::Kind::Weighted) {
        lopt.sigma = probe.sigma;
        break;
      }

    const LinearizationFamily fam_a =
        LinearizationFamily::frozen(fam, complex<double>(cfg.a0, 0.0), lopt);
    LinearizedOptions lopt0 = lopt;
    lopt0.absorber.enabled = false;
    const LinearizationFamily fam0 =
        LinearizationFamily::frozen(fam, complex<double>(0.0, 0.0), lopt0);

    const std::vector<ComplexField> ens = packet_ensemble(h, cfg);

    // zero-amplitude reduction against the projected split-step linear flow
    const double t_red = snap_to_lattice(std::min(3.0, cfg.time), cfg.dt);
    {
      const ComplexField lhs = propagate_omega(fam0, ens.front(), 0.0, t_red);
      const ComplexField rhs = project_continuous(
          h, propagate_linear(h, ens.front(), t_red, cfg.dt));
      art.reduction_defect = relative_l2(lhs, rhs);
      art.pass_reduction = art.reduction_defect <= 1e-6;
    }

    // two-leg composition through an interior lattice time
    {
      const double t_mid = cfg.dt * static_cast<double>(std::lround(t_red / cfg.dt) / 2);
      const ComplexField one = propagate_omega(fam_a, ens.front(), 0.0, t_red);
      const ComplexField two = propagate_omega(
          fam_a, propagate_omega(fam_a, ens.front(), 0.0, t_mid), t_mid, t_red);
      art.composition_defect = relative_l2(two, one);
      art.pass_composition = art.composition_defect <= 1e-7;
    }

    // difference-operator ensemble bound across separation checkpoints:
    // the running sup must stabilize once the interaction epoch is past
    for (double sep : {1.0, 2.0, 5.0, 10.0, 25.0, 50.0, 100.0}) {
      if (sep > cfg.time + 1e-9) break;
      art.separations.push_back(snap_to_lattice(sep, cfg.dt));
    }
    art.t_bound_drift = 1.0;
    {
      double cum = 0.0, cum_prev = 0.0;
      for (std::size_t k = 0; k < art.separations.size(); ++k) {
        double worst = 0.0;
        for (const ComplexField& v : ens)
          worst = std::max(worst,
                           norm_lp(t_operator(fam_a, v, 0.0, art.separations[k]), 2.0));
        art.t_norms.push_back(worst);
        cum_prev = cum;
        cum = std::max(cum, worst);
        if (k > 0 && art.separations[k] >= art.separations.back() / 4.0 &&
            cum_prev > 1e-300)
          art.t_bound_drift = std::max(art.t_bound_drift, cum / cum_prev);
      }
      art.pass_bound = art.t_bound_drift <= 1.1;
    }

    // Kato smoothing saturation across window doublings
    {
      const double t_kato = std::min(cfg.time, 100.0);
      for (double f : {0.25, 0.5, 1.0})
        art.kato_windows.push_back(snap_to_lattice(f * t_kato, cfg.dt));
      for (double w : art.kato_windows) {
        double worst = 0.0;
        for (const ComplexField& v : ens)
          worst = std::max(worst, kato_smoothing_check(fam_a, v, 0.0, w));
        art.kato_values.push_back(worst);
      }
      art.kato_ratio_max = 1.0;
      for (std::size_t k = 1; k < art.kato_values.size(); ++k)
        if (art.kato_values[k - 1] > 1e-300)
          art.kato_ratio_max = std::max(
              art.kato_ratio_max, art.kato_values[k] / art.kato_values[k - 1]);
      art.pass_kato = art.kato_ratio_max <= 1.15;
    }

    // weighted decay shape of the full flow
    {
      ProbeSpec wp;
      for (const ProbeSpec& probe : cfg.probes)
        if (probe.kind == ProbeSpec::Kind::Weighted) {
          wp = probe;
          break;
        }
      std::vector<double> times;
      for (int k = 1; k * cfg.cadence <= cfg.time + 1e-9; ++k)
        times.push_back(snap_to_lattice(k * cfg.cadence, cfg.dt));
      OmegaDecayOptions oopt;
      oopt.fit_t_min = cfg.fit_t_min;
      oopt.fit_t_max = cfg.fit_t_max;
      oopt.p0 = cfg.p0;
      art.weighted = measure_omega_decay(fam_a, ens, 0.0, times, wp, oopt);
      write_decay_csv(join(dir, "decay_omega_" + art.weighted.probe + ".csv"),
                      art.weighted);
      art.pass_decay =
          art.weighted.valid && std::abs(art.weighted.fit_pure.B - 1.0) <= 0.2;
    }

    stage = "report";
    art.all_pass = art.pass_reduction && art.pass_composition && art.pass_bound &&
                   art.pass_kato && art.pass_decay;
    write_json(join(dir, "omega_report.json"),
               json{{"status", "ok"},
                    {"stage", stage},
                    {"message", ""},
                    {"reduction_defect", art.reduction_defect},
                    {"pass_reduction", art.pass_reduction},
                    {"composition_defect", art.composition_defect},
                    {"pass_composition", art.pass_composition},
                    {"separations", art.separations},
                    {"t_norms", art.t_norms},
                    {"t_bound_drift", art.t_bound_drift},
                    {"pass_bound", art.pass_bound},
                    {"kato_windows", art.kato_windows},
                    {"kato_values", art.kato_values},
                    {"kato_ratio_max", art.kato_ratio_max},
                    {"pass_kato", art.pass_kato},
                    {"weighted",
                     json{{"probe", art.weighted.probe},
                          {"predicted_B", art.weighted.predicted_B},
                          {"fitted_B", art.weighted.fit_pure.B},
                          {"fitted_A", art.weighted.fit_log.A},
                          {"b_halfwidth", art.weighted.fit_pure.b_halfwidth},
                          {"valid", art.weighted.valid},
                          {"note", art.weighted.note}}},
                    {"pass_decay", art.pass_decay},
                    {"all_pass", art.all_pass}});
    art.ok = true;
    art.stage = stage;
  } catch (const std::exception& e) {
    art.ok = false;
    art.all_pass = false;
    art.stage = stage;
    art.message = e.what();
    try {
      write_json(join(dir, "omega_report.json"), json{{"status", "error"},
                                                      {"stage", stage},
                                                      {"message", art.message},
                                                      {"all_pass", false}});
    } catch (...) {
    }
  }
  return art;
}

}  // namespace nls
