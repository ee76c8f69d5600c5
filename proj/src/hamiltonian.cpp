#include "nls/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nls/check.hpp"
#include "nls/fft.hpp"
#include "nls/rng.hpp"

namespace nls {

namespace {

using Eigen::ArrayXXcd;
using Eigen::ArrayXXd;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using std::complex;

constexpr complex<double> kI{0.0, 1.0};

void apply_real(const Grid& g, const ArrayXXd& v, const Eigen::Ref<const VectorXd>& in,
                Eigen::Ref<VectorXd> out, ArrayXXcd& buf) {
  const int n = g.n;
  Eigen::Map<const ArrayXXd> fin(in.data(), n, n);
  buf = fin.cast<complex<double>>();
  fft2(buf);
  buf *= g.k2;
  ifft2(buf);
  Eigen::Map<ArrayXXd> fout(out.data(), n, n);
  fout = buf.real() + v * fin;
}

void apply_block(const Grid& g, const ArrayXXd& v, const MatrixXd& in, MatrixXd& out,
                 ArrayXXcd& buf) {
  out.resize(in.rows(), in.cols());
  for (int j = 0; j < in.cols(); ++j) apply_real(g, v, in.col(j), out.col(j), buf);
}

// Degree-m Chebyshev polynomial in H mapped so [lo, hi] -> [-1, 1]; modes
// below lo are amplified exponentially in m.
void chebyshev_filter(const Grid& g, const ArrayXXd& v, MatrixXd& q, int degree,
                      double lo, double hi, ArrayXXcd& buf) {
  const double c = 0.5 * (hi + lo);
  const double e = 0.5 * (hi - lo);
  MatrixXd hq(q.rows(), q.cols());
  MatrixXd prev = q;
  apply_block(g, v, q, hq, buf);
  MatrixXd cur = (hq - c * q) / e;
  MatrixXd next(q.rows(), q.cols());
  for (int m = 2; m <= degree; ++m) {
    apply_block(g, v, cur, hq, buf);
    next = (2.0 / e) * (hq - c * cur) - prev;
    prev.swap(cur);
    cur.swap(next);
  }
  q.swap(cur);
}

void project_out_locked(const std::vector<VectorXd>& locked, MatrixXd& q, double cell) {
  for (const auto& l : locked) q.noalias() -= l * (cell * (l.transpose() * q));
}

void orthonormalize_l2(MatrixXd& q, double dx) {
  Eigen::HouseholderQR<MatrixXd> qr(q);
  MatrixXd thin = MatrixXd::Identity(q.rows(), q.cols());
  q.noalias() = qr.householderQ() * thin;
  q /= dx;
}

struct RitzSet {
  VectorXd values;
  VectorXd residuals;
};

// Rayleigh-Ritz with the exact operator; rotates q into Ritz vectors.
RitzSet rayleigh_ritz(const Grid& g, const ArrayXXd& v, MatrixXd& q, ArrayXXcd& buf) {
  const double cell = g.dx * g.dx;
  MatrixXd hq;
  apply_block(g, v, q, hq, buf);
  MatrixXd s = cell * (q.transpose() * hq);
  s = 0.5 * (s + s.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(s);
  ensure(es.info() == Eigen::Success, "dense Ritz eigensolve failed");
  q = (q * es.eigenvectors()).eval();
  hq = (hq * es.eigenvectors()).eval();
  RitzSet out;
  out.values = es.eigenvalues();
  out.residuals.resize(q.cols());
  for (int i = 0; i < q.cols(); ++i)
    out.residuals[i] = g.dx * (hq.col(i) - out.values[i] * q.col(i)).norm();
  return out;
}

bool locked_val_all_negative(const std::vector<double>& val, const std::vector<double>& res,
                             double gap_tol) {
  for (std::size_t i = 0; i < val.size(); ++i)
    if (val[i] + res[i] >= -gap_tol) return false;
  return true;
}

}  // namespace

SpectralPairs lowest_eigenpairs(const GridPtr& g, const ArrayXXd& v,
                                const SpectralScanOptions& opt) {
  require(static_cast<bool>(g), "lowest_eigenpairs: null grid");
  require(v.rows() == g->n && v.cols() == g->n, "lowest_eigenpairs: field size mismatch");
  require(v.isFinite().all(), "lowest_eigenpairs: potential not finite");
  require(opt.block >= 2 && opt.block <= 64, "lowest_eigenpairs: block out of range");
  require(opt.degree >= 10 && opt.max_sweeps >= 3, "lowest_eigenpairs: filter too weak");
  require(opt.gap_tol > 0 && opt.ground_tol > 0 && opt.band_tol >= opt.ground_tol,
          "lowest_eigenpairs: bad tolerances");

  const int n = g->n;
  const int n2 = n * n;
  const double dx = g->dx;
  const double cell = dx * dx;
  const double pi = std::acos(-1.0);
  double cut = std::min(0.7 * (pi / g->L) * (pi / g->L), 0.01);
  cut = std::max(cut, 4.0 * opt.gap_tol);
  const double lmax = g->k2.maxCoeff() + std::max(v.maxCoeff(), 0.0) + 1.0;

  Rng rng(opt.seed);
  MatrixXd q(n2, opt.block);
  for (int j = 0; j < opt.block; ++j)
    for (int i = 0; i < n2; ++i) q(i, j) = rng.gaussian();

  ArrayXXcd buf(n, n);
  std::vector<VectorXd> locked_vec;
  std::vector<double> locked_val, locked_res;

  SpectralPairs out;
  // First-sweep degree capped so the deepest possible mode cannot overflow
  // the filtered block before QR renormalizes.
  const double x_floor =
      1.0 + 2.0 * (cut - std::min(v.minCoeff(), 0.0)) / (lmax - cut);
  const double a_floor = std::acosh(std::max(x_floor, 1.0 + 1e-12));
  const int degree_cap =
      std::min(2000, static_cast<int>(std::max(10.0, 300.0 / a_floor)));
  int degree = std::min(opt.degree, degree_cap);
  double ritz_prev = std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    chebyshev_filter(*g, v, q, degree, cut, lmax, buf);
    project_out_locked(locked_vec, q, cell);
    orthonormalize_l2(q, dx);
    RitzSet ritz = rayleigh_ritz(*g, v, q, buf);

    // Saturation certificate: if every Ritz value plus the block residual
    // norm is below the gap, at least block eigenvalues are negative even
    // when near-degeneracies keep individual pairs from converging.
    if (locked_val.empty() || locked_val_all_negative(locked_val, locked_res, opt.gap_tol)) {
      const double theta_max = ritz.values.maxCoeff();
      const double block_res = ritz.residuals.norm();
      if (theta_max + block_res < -opt.gap_tol) {
        out.all_negative = true;
        out.converged = true;
        break;
      }
    }

    // Lock converged sub-cut pairs off the low end of the block.
    int nlock = 0;
    while (nlock < q.cols() && ritz.values[nlock] < cut) {
      const double val = ritz.values[nlock];
      const double res = ritz.residuals[nlock];
      const double tol = (val + res < -opt.gap_tol) ? opt.ground_tol : opt.band_tol;
      if (res > tol) break;
      locked_vec.emplace_back(q.col(nlock));
      locked_val.push_back(val);
      locked_res.push_back(res);
      ++nlock;
    }
    if (nlock > 0) {
      MatrixXd rest = q.rightCols(q.cols() - nlock).eval();
      q.swap(rest);
    }

    if (static_cast<int>(locked_val.size()) >= opt.block) {
      // Block exhausted below the cut.
      bool allneg = true;
      for (std::size_t i = 0; i < locked_val.size(); ++i)
        allneg = allneg && (locked_val[i] + locked_res[i] < -opt.gap_tol);
      out.all_negative = allneg;
      out.converged = allneg;  // mixed saturation leaves the band count open
      break;
    }
    if (ritz.values[nlock] >= cut) {
      // A lowest Ritz value above the cut only certifies an empty sub-cut
      // spectrum once it has stalled: on large grids the first sweeps of a
      // weak filter leave the random block far from the low end.
      const double drop = ritz_prev - ritz.values[nlock];
      if (sweep > 0 && drop <= 1e-3 * std::max(1.0, std::abs(ritz.values[nlock]))) {
        out.converged = true;
        break;
      }
      ritz_prev = ritz.values[nlock];
      degree = std::min(2 * degree, degree_cap);
      continue;
    }
    ritz_prev = ritz.values[nlock];

    // Adapt the filter degree to the slowest unconverged sub-cut mode,
    // capped so one sweep cannot overflow the block's dynamic range.
    const double slow = ritz.values[nlock];
    if (slow < cut) {
      const double x = 1.0 + 2.0 * (cut - slow) / (lmax - cut);
      const double a = std::acosh(x);
      if (a > 1e-12)
        degree = static_cast<int>(
            std::clamp(23.0 / a, 40.0, static_cast<double>(degree_cap)));
    }
  }

  const int m = static_cast<int>(locked_val.size());
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return locked_val[a] < locked_val[b]; });
  out.values.resize(m);
  out.residuals.resize(m);
  out.vectors.resize(m);
  for (int i = 0; i < m; ++i) {
    out.values[i] = locked_val[order[i]];
    out.residuals[i] = locked_res[order[i]];
    out.vectors[i] = Eigen::Map<const ArrayXXd>(locked_vec[order[i]].data(), n, n);
  }
  return out;
}

Hamiltonian assemble_hamiltonian(const Potential& pot, const SpectralScanOptions& opt) {
  SpectralPairs pairs = lowest_eigenpairs(pot.grid, pot.v, opt);
  char msg[160];
  if (pairs.all_negative) {
    std::snprintf(msg, sizeof msg,
                  "spectral certification failed: at least %d negative eigenvalues",
                  opt.block);
    ensure(false, msg);
  }
  ensure(pairs.converged, "spectral certification inconclusive: scan did not converge");

  int negatives = 0;
  for (int i = 0; i < pairs.values.size(); ++i) {
    const double lo = pairs.values[i] - pairs.residuals[i];
    const double hi = pairs.values[i] + pairs.residuals[i];
    if (lo <= opt.gap_tol && hi >= -opt.gap_tol) {
      std::snprintf(msg, sizeof msg,
                    "spectral certification failed: eigenvalue %.6g within gap "
                    "tolerance of zero (resonance or unresolved state)",
                    pairs.values[i]);
      ensure(false, msg);
    }
    if (hi < -opt.gap_tol) ++negatives;
  }
  ensure(negatives > 0,
         "spectral certification failed: no negative eigenvalue, potential binds no state");
  if (negatives > 1) {
    std::snprintf(msg, sizeof msg,
                  "spectral certification failed: %d negative eigenvalues", negatives);
    ensure(false, msg);
  }

  ensure(pairs.residuals[0] <= opt.ground_tol * 1.0001, "ground state residual too large");
  ArrayXXd q = pairs.vectors[0];
  if (q.sum() < 0.0) q = -q;
  ensure(q.minCoeff() >= -1e-8 * q.maxCoeff(), "ground state is not signed");

  Hamiltonian h;
  h.grid = pot.grid;
  h.pot = pot;
  h.has_bound_state = true;
  h.e0 = pairs.values[0];
  h.n_negative = 1;
  ComplexField psi(pot.grid);
  psi.v = q.cast<complex<double>>();
  const double nrm = norm_lp(psi, 2.0);
  ensure(nrm > 0.0, "ground state vanished");
  psi.v /= nrm;
  h.psi0 = std::move(psi);
  return h;
}

Hamiltonian free_hamiltonian(const GridPtr& g) {
  require(static_cast<bool>(g), "free_hamiltonian: null grid");
  Hamiltonian h;
  h.grid = g;
  h.pot = build_potential("zero", 0.0, g->L / 8.0, g);
  h.psi0 = ComplexField(g);
  return h;
}

ComplexField apply_h(const Hamiltonian& h, const ComplexField& f) {
  require(static_cast<bool>(h.grid), "apply_h: empty operator");
  require(f.grid == h.grid, "apply_h: field lives on a different grid");
  ComplexField out(h.grid);
  out.v = f.v;
  fft2(out.v);
  out.v *= h.grid->k2;
  ifft2(out.v);
  out.v += h.pot.v * f.v;
  return out;
}

ComplexField project_continuous(const Hamiltonian& h, const ComplexField& f) {
  require(f.grid == h.grid, "project_continuous: field lives on a different grid");
  if (!h.has_bound_state) return f;
  ComplexField out = f;
  out.v -= inner(h.psi0, f) * h.psi0.v;
  return out;
}

ComplexField propagate_linear(const Hamiltonian& h, const ComplexField& f, double t,
                              double dt_max) {
  require(f.grid == h.grid, "propagate_linear: field lives on a different grid");
  require(std::isfinite(t), "propagate_linear: time not finite");
  require(dt_max > 0.0, "propagate_linear: dt_max must be positive");
  ComplexField out = f;
  if (t == 0.0) return out;
  const int nsteps = std::max<int>(1, static_cast<int>(std::ceil(std::abs(t) / dt_max - 1e-12)));
  const double dt = t / nsteps;
  const ArrayXXcd expv = (-kI * (0.5 * dt) * h.pot.v.cast<complex<double>>()).exp();
  const ArrayXXcd expk = (-kI * dt * h.grid->k2.cast<complex<double>>()).exp();
  for (int s = 0; s < nsteps; ++s) {
    out.v *= expv;
    fft2(out.v);
    out.v *= expk;
    ifft2(out.v);
    out.v *= expv;
  }
  return out;
}

std::string ProbeSpec::label() const {
  char s[32];
  switch (kind) {
    case Kind::Weighted:
      std::snprintf(s, sizeof s, "w%g", sigma);
      break;
    case Kind::LpPair:
      std::snprintf(s, sizeof s, "l%g-dual", p);
      break;
    case Kind::Lp:
    default:
      if (std::isinf(p))
        std::snprintf(s, sizeof s, "linf");
      else
        std::snprintf(s, sizeof s, "l%g", p);
      break;
  }
  return s;
}

double contamination_time(const ComplexField& f0, const AbsorberSpec& absorber) {
  require(static_cast<bool>(f0.grid), "contamination_time: empty field");
  const Grid& g = *f0.grid;

  auto quantile_sqrt = [](const ArrayXXd& coord2, const ArrayXXd& w, double quant) {
    const double total = w.sum();
    if (!(total > 0.0)) return 0.0;
    std::vector<int> idx(static_cast<std::size_t>(coord2.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return coord2(a) < coord2(b); });
    double cum = 0.0;
    for (int i : idx) {
      cum += w(i);
      if (cum >= quant * total) return std::sqrt(coord2(i));
    }
    return std::sqrt(coord2(idx.back()));
  };

  const ArrayXXd wx = f0.v.abs2();
  const double r0 = quantile_sqrt(g.r2, wx, 0.98);
  ArrayXXcd fh = fft2_copy(f0.v);
  const ArrayXXd wk = fh.abs2();
  const double kq = quantile_sqrt(g.k2, wk, 0.98);

  const double speed = 2.0 * kq;
  if (speed < 1e-9) return 1e9;
  const double edge = absorber.enabled ? absorber.start_fraction * g.L : g.L;
  return std::max(0.0, (2.0 * edge - r0) / speed);
}

DecayRecord measure_linear_decay(const Hamiltonian& h, const ComplexField& f0,
                                 const std::vector<double>& times, const ProbeSpec& probe,
                                 const LinearDecayOptions& opt) {
  require(f0.grid == h.grid, "measure_linear_decay: field lives on a different grid");
  require(times.size() >= 4, "measure_linear_decay: need at least 4 sample times");
  require(times.front() >= 0.0, "measure_linear_decay: negative sample time");
  for (std::size_t i = 1; i < times.size(); ++i)
    require(times[i] > times[i - 1], "measure_linear_decay: times must increase");
  require(opt.dt > 0.0, "measure_linear_decay: dt must be positive");
  if (probe.kind != ProbeSpec::Kind::Weighted)
    require(probe.p > 1.0, "measure_linear_decay: p must exceed 1");

  ComplexField u = project_continuous(h, f0);
  ensure(all_finite(u), "measure_linear_decay: initial data not finite");

  DecayRecord rec;
  rec.probe = probe.label();
  switch (probe.kind) {
    case ProbeSpec::Kind::Weighted:
      rec.predicted_B = 1.0;
      rec.predicted_A = -2.0;
      break;
    case ProbeSpec::Kind::LpPair:
    case ProbeSpec::Kind::Lp:
      rec.predicted_B = 1.0 - 2.0 / probe.p;
      rec.predicted_A = 0.0;
      break;
  }
  rec.t_valid = contamination_time(u, opt.absorber);

  double dual_base = 1.0;
  if (probe.kind == ProbeSpec::Kind::LpPair) {
    const double pprime = probe.p / (probe.p - 1.0);
    dual_base = norm_lp(u, pprime);
    ensure(dual_base > 0.0, "measure_linear_decay: zero initial data");
  }
  auto probe_value = [&](const ComplexField& w) {
    if (probe.kind == ProbeSpec::Kind::Weighted) return norm_weighted_l2(w, -probe.sigma);
    return norm_lp(w, probe.p) / dual_base;
  };

  ArrayXXd damp_w;
  if (opt.absorber.enabled) damp_w = absorber_profile(*h.grid, opt.absorber);

  double cached_dt = -1.0;
  ArrayXXcd expv, expk;
  ArrayXXd damp;
  auto advance = [&](double from, double to) {
    if (to <= from) return;
    const int nsteps =
        std::max<int>(1, static_cast<int>(std::ceil((to - from) / opt.dt - 1e-12)));
    const double dt = (to - from) / nsteps;
    if (std::abs(dt - cached_dt) > 1e-15) {
      cached_dt = dt;
      expv = (-kI * (0.5 * dt) * h.pot.v.cast<complex<double>>()).exp();
      expk = (-kI * dt * h.grid->k2.cast<complex<double>>()).exp();
      if (opt.absorber.enabled) damp = (-dt * damp_w).exp();
    }
    for (int s = 0; s < nsteps; ++s) {
      u.v *= expv;
      fft2(u.v);
      u.v *= expk;
      ifft2(u.v);
      u.v *= expv;
      if (opt.absorber.enabled) u.v *= damp;
    }
  };

  double t = 0.0;
  for (double target : times) {
    advance(t, target);
    t = target;
    rec.t.push_back(t);
    rec.value.push_back(probe_value(u));
  }
  ensure(all_finite(u), "measure_linear_decay: evolution lost finiteness");

  const double tmin = opt.fit_t_min;
  const double tmax = opt.fit_t_max > 0.0 ? opt.fit_t_max : times.back();
  bool positive = true;
  for (std::size_t i = 0; i < rec.t.size(); ++i)
    if (rec.t[i] >= tmin && rec.t[i] <= tmax && !(rec.value[i] > 0.0)) positive = false;

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
