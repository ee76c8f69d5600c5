#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "nls/fft.hpp"
#include "nls/linearized.hpp"
#include "nls/rng.hpp"

using nls::BoundStateFamily;
using nls::ComplexField;
using nls::LinearizationFamily;
using nls::LinearizedOptions;
using nls::ProbeSpec;
using std::complex;

namespace {

const nls::Hamiltonian& well() {
  static nls::Hamiltonian h = nls::assemble_hamiltonian(
      nls::build_potential("gaussian-well", 2.0, 1.5, nls::Grid::make(64, 12.0)));
  return h;
}

const BoundStateFamily& cubic_family() {
  static BoundStateFamily fam = [] {
    nls::FamilyOptions opt;
    opt.a_min = 1e-3;
    opt.a_max = 0.1;
    return BoundStateFamily::build(well(), nls::builtin_nonlinearity("cubic"), opt);
  }();
  return fam;
}

double rel_l2(const ComplexField& a, const ComplexField& b) {
  ComplexField d = a;
  d.v -= b.v;
  return nls::norm_lp(d, 2.0) / std::max(nls::norm_lp(b, 2.0), 1e-300);
}

// localized wave packet, projected onto the continuous subspace and
// L2-normalized; carrier <= 0 draws from the slow band
ComplexField packet_with_carrier(std::uint64_t seed, double carrier) {
  nls::Rng rng(seed);
  const auto& g = *well().grid;
  const double draw = rng.uniform();
  const double kmag = carrier > 0.0 ? carrier : 0.3 + 0.3 * draw;
  const double ang = 2.0 * M_PI * rng.uniform();
  const double kx = kmag * std::cos(ang), ky = kmag * std::sin(ang);
  const double ph = 2.0 * M_PI * rng.uniform();
  ComplexField f(well().grid);
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      const double x = g.x(i), y = g.x(j);
      f.v(i, j) = std::polar(std::exp(-(x * x + y * y) / 12.5),
                             kx * x + ky * y + ph);
    }
  f = nls::project_continuous(well(), f);
  f.v /= nls::norm_lp(f, 2.0);
  return f;
}

ComplexField packet(std::uint64_t seed) { return packet_with_carrier(seed, 0.0); }

std::vector<ComplexField> ensemble(int count) {
  std::vector<ComplexField> out;
  for (int s = 0; s < count; ++s) out.push_back(packet(7000 + s));
  return out;
}

double re_inner(const ComplexField& a, const ComplexField& b) {
  return nls::inner_real(a, b);
}

}  // namespace

TEST_CASE("zero amplitude reduces to the projected linear propagator") {
  LinearizationFamily fam0 = LinearizationFamily::frozen(cubic_family(), 0.0);
  ComplexField v = packet(11);

  ComplexField diff = nls::t_operator(fam0, v, 0.0, 3.0);
  CHECK(nls::norm_lp(diff, 2.0) == 0.0);

  ComplexField zo = nls::propagate_omega(fam0, v, 0.0, 3.0);
  ComplexField zl = nls::project_continuous(
      well(), nls::propagate_linear(well(), v, 3.0, fam0.options().dt));
  CHECK(rel_l2(zo, zl) <= 1e-7);

  CHECK(std::abs(nls::inner(well().psi0, zo)) <= 1e-10 * nls::norm_lp(zo, 2.0));
  CHECK(nls::norm_lp(zo, 2.0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("coincident times act as the identity and inputs are validated") {
  LinearizationFamily fam =
      LinearizationFamily::frozen(cubic_family(), complex<double>(0.05, 0.0));
  ComplexField v = packet(23);

  ComplexField w = nls::propagate_omega(fam, v, 1.5, 1.5);
  CHECK((w.v == v.v).all());

  CHECK_THROWS_AS((void)nls::propagate_omega(fam, v, 0.0, 1.005), std::invalid_argument);
  CHECK_THROWS_AS((void)nls::propagate_omega(fam, v, 0.305, 1.0), std::invalid_argument);

  ComplexField raw(well().grid);
  raw.v = well().psi0.v + v.v;
  CHECK_THROWS_AS((void)nls::propagate_omega(fam, raw, 0.0, 1.0), std::invalid_argument);

  LinearizedOptions rad;
  rad.absorber.enabled = true;
  LinearizationFamily famr =
      LinearizationFamily::frozen(cubic_family(), complex<double>(0.05, 0.0), rad);
  CHECK_THROWS_AS((void)nls::propagate_omega(famr, v, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("flow composes across an intermediate lattice time") {
  LinearizationFamily fam =
      LinearizationFamily::frozen(cubic_family(), complex<double>(0.05, 0.0));
  ComplexField v = packet(37);

  ComplexField one = nls::propagate_omega(fam, v, 0.0, 3.0);
  ComplexField leg = nls::propagate_omega(fam, v, 0.0, 1.3);
  ComplexField two = nls::propagate_omega(fam, leg, 1.3, 3.0);
  CHECK(rel_l2(two, one) <= 1e-7);
}

TEST_CASE("time reversal inverts the conservative flow") {
  LinearizationFamily fam =
      LinearizationFamily::frozen(cubic_family(), complex<double>(0.06, 0.02));
  ComplexField v = packet(41);

  ComplexField fwd = nls::propagate_omega(fam, v, 0.0, 4.0);
  ComplexField back = nls::propagate_omega(fam, fwd, 4.0, 0.0);
  CHECK(rel_l2(back, v) <= 1e-6);
}

TEST_CASE("adjoint propagation matches the forward pairing") {
  LinearizationFamily fam =
      LinearizationFamily::frozen(cubic_family(), complex<double>(0.05, 0.01));
  ComplexField u = packet(51), v = packet(52);

  ComplexField fu = nls::propagate_omega(fam, u, 0.0, 2.0);
  ComplexField av = nls::propagate_omega_adjoint(fam, v, 0.0, 2.0);
  const double lhs = re_inner(fu, v), rhs = re_inner(u, av);
  CHECK(std::abs(lhs - rhs) <= 1e-11 * std::max(std::abs(lhs), 1.0));

  LinearizedOptions rad;
  rad.absorber.enabled = true;
  LinearizationFamily famr =
      LinearizationFamily::frozen(cubic_family(), complex<double>(0.05, 0.01), rad);
  ComplexField fur = nls::propagate_omega(famr, u, 0.0, 2.0);
  ComplexField avr = nls::propagate_omega_adjoint(famr, v, 0.0, 2.0);
  const double lhr = re_inner(fur, v), rhr = re_inner(u, avr);
  CHECK(std::abs(lhr - rhr) <= 1e-11 * std::max(std::abs(lhr), 1.0));
}

TEST_CASE("one picard iteration reproduces the tracked coefficient flow") {
  const nls::Hamiltonian& h = well();
  const BoundStateFamily& branch = cubic_family();
  nls::NonlinearitySpec cubic = nls::builtin_nonlinearity("cubic");

  ComplexField u0 = branch.state(complex<double>(0.05, 0.0));
  {
    nls::Rng rng(99);
    ComplexField r(h.grid);
    const auto& g = *h.grid;
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i)
        r.v(i, j) = complex<double>(rng.gaussian(), rng.gaussian()) *
                    std::exp(-0.15 * g.r2(i, j));
    r = nls::project_continuous(h, r);
    r.v *= 5e-3 / nls::norm_lp(r, 2.0);
    u0.v += branch.inverse_projection(branch.at(complex<double>(0.05, 0.0)), r).v;
  }
  nls::RunOptions ropt;
  ropt.phi_max = 0.2;
  ProbeSpec l2;
  l2.kind = ProbeSpec::Kind::Lp;
  l2.p = 2.0;
  nls::Trajectory traj =
      nls::run_with_tracking(h, branch, cubic, u0, 2.0, 0.01, {l2}, ropt);
  REQUIRE(!traj.truncated);

  LinearizationFamily fam = LinearizationFamily::along(branch, traj);
  LinearizationFamily fam0 = LinearizationFamily::frozen(branch, 0.0);
  const double dt = fam.options().dt, s = 0.0, t = 0.5;
  ComplexField v = packet(61);

  ComplexField direct = nls::propagate_omega(fam, v, s, t);
  ComplexField free_part = nls::propagate_omega(fam0, v, s, t);
  ComplexField coupling = direct;
  coupling.v -= free_part.v;
  const double coupling_size = nls::norm_lp(coupling, 2.0);
  REQUIRE(coupling_size > 1e-8);

  // Duhamel quadrature with the integrand assembled from public pieces
  const int nseg = static_cast<int>(std::lround((t - s) / dt));
  ComplexField acc(h.grid);
  ComplexField z = v;
  for (int j = 0; j <= nseg; ++j) {
    const double tau = s + j * dt;
    if (j > 0) z = nls::propagate_omega(fam, z, tau - dt, tau);
    nls::BoundState bs = branch.at(fam.amplitude(tau));
    ComplexField w = branch.inverse_projection(bs, z);
    ComplexField f = nls::eval_dg(cubic, bs.psi, w);
    f = nls::project_continuous(h, f);
    ComplexField leg = nls::propagate_omega(fam0, f, tau, t);
    const double wgt = (j == 0 || j == nseg) ? 0.5 * dt : dt;
    acc.v += wgt * leg.v;
  }
  ComplexField picard = free_part;
  picard.v += complex<double>(0.0, -1.0) * acc.v;

  ComplexField defect = picard;
  defect.v -= direct.v;
  CHECK(nls::norm_lp(defect, 2.0) <= 0.02 * coupling_size);
}

TEST_CASE("a resting trajectory carries a rotating coefficient amplitude") {
  const nls::Hamiltonian& h = well();
  const BoundStateFamily& branch = cubic_family();
  nls::NonlinearitySpec cubic = nls::builtin_nonlinearity("cubic");

  ComplexField u0 = branch.state(complex<double>(0.05, 0.0));
  nls::RunOptions ropt;
  ropt.phi_max = 0.2;
  ProbeSpec l2;
  l2.kind = ProbeSpec::Kind::Lp;
  l2.p = 2.0;
  nls::Trajectory traj =
      nls::run_with_tracking(h, branch, cubic, u0, 2.0, 0.002, {l2}, ropt);
  REQUIRE(!traj.truncated);

  LinearizationFamily fam = LinearizationFamily::along(branch, traj);
  const double e = branch.energy(0.05);
  for (double tau : {0.0, 0.37, 1.115, 2.0}) {
    const complex<double> expect = 0.05 * std::polar(1.0, -e * tau);
    CHECK(std::abs(fam.amplitude(tau) - expect) <= 1e-6);
  }
  CHECK(fam.t_lo() == 0.0);
  CHECK(fam.t_hi() == 2.0);
  CHECK_THROWS_AS((void)fam.amplitude(2.3), std::invalid_argument);
  ComplexField v = packet(71);
  CHECK_THROWS_AS((void)nls::propagate_omega(fam, v, 0.0, 2.5), std::invalid_argument);
  CHECK_THROWS_AS((void)nls::propagate_omega(fam, v, -0.5, 1.0), std::invalid_argument);
}

TEST_CASE("difference operator scales like the coefficient magnitude") {
  const BoundStateFamily& branch = cubic_family();
  nls::NonlinearitySpec cubic = nls::builtin_nonlinearity("cubic");
  const complex<double> a{0.08, 0.0}, half = 0.5 * a;
  ComplexField v = packet(83);

  // single-application oracle for the coupling magnitude ratio
  auto coupling_norm = [&](complex<double> amp) {
    nls::BoundState bs = branch.at(amp);
    ComplexField w = branch.inverse_projection(bs, v);
    ComplexField f = nls::eval_dg(cubic, bs.psi, w);
    f = nls::project_continuous(well(), f);
    return nls::norm_lp(f, 2.0);
  };
  const double predicted = coupling_norm(half) / coupling_norm(a);

  LinearizationFamily fam_a = LinearizationFamily::frozen(branch, a);
  LinearizationFamily fam_h = LinearizationFamily::frozen(branch, half);
  const double ta = nls::norm_lp(nls::t_operator(fam_a, v, 0.0, 2.0), 2.0);
  const double th = nls::norm_lp(nls::t_operator(fam_h, v, 0.0, 2.0), 2.0);
  CHECK(th / ta == doctest::Approx(predicted).epsilon(0.10));
  CHECK(predicted < 0.5);
}

TEST_CASE("operator norm estimate is near unit and stable in separation") {
  LinearizationFamily fam =
      LinearizationFamily::frozen(cubic_family(), complex<double>(0.05, 0.0));
  std::vector<ComplexField> ens = ensemble(5);

  std::vector<double> bounds;
  for (double t : {1.0, 4.0, 10.0})
    bounds.push_back(nls::omega_operator_bound(fam, 0.0, t, ens, 4));
  for (double b : bounds) {
    CHECK(b >= 0.9);
    CHECK(b <= 1.5);
  }
  const double lo = *std::min_element(bounds.begin(), bounds.end());
  const double hi = *std::max_element(bounds.begin(), bounds.end());
  CHECK(hi / lo <= 1.10);

  // the refinement can only sharpen the ensemble estimate upward
  const double raw = nls::omega_operator_bound(fam, 0.0, 4.0, ens, 0);
  CHECK(bounds[1] >= raw - 1e-12);

  CHECK_THROWS_AS((void)nls::omega_operator_bound(fam, 0.0, 4.0, {}, 2),
                  std::invalid_argument);
}

TEST_CASE("kato smoothing ratio saturates on the radiative family") {
  LinearizedOptions rad;
  rad.absorber.enabled = true;
  LinearizationFamily fam =
      LinearizationFamily::frozen(cubic_family(), complex<double>(0.05, 0.0), rad);
  // a carrier fast enough to clear the absorber well inside the first window
  ComplexField v = packet_with_carrier(91, 0.9);

  const double k25 = nls::kato_smoothing_check(fam, v, 0.0, 25.0);
  const double k50 = nls::kato_smoothing_check(fam, v, 0.0, 50.0);
  const double k100 = nls::kato_smoothing_check(fam, v, 0.0, 100.0);
  CHECK(k25 > 0.0);
  CHECK(k50 / k25 <= 1.15);
  CHECK(k100 / k50 <= 1.15);

  ComplexField v2 = v;
  v2.v *= 2.0;
  const double scaled = nls::kato_smoothing_check(fam, v2, 0.0, 25.0);
  CHECK(std::abs(scaled - k25) <= 1e-12 * k25);

  // zero-amplitude family against an independently written damped march
  LinearizationFamily fam0 =
      LinearizationFamily::frozen(cubic_family(), 0.0, rad);
  const double module_value = nls::kato_smoothing_check(fam0, v, 0.0, 25.0);

  const nls::Hamiltonian& h = well();
  const double dt = rad.dt, sigma = rad.sigma;
  const complex<double> mi(0.0, -1.0);
  Eigen::ArrayXXcd expv =
      (mi * (0.5 * dt) * h.pot.v.cast<complex<double>>()).exp();
  Eigen::ArrayXXcd expk = (mi * dt * h.grid->k2.cast<complex<double>>()).exp();
  Eigen::ArrayXXd damp = (-dt * nls::absorber_profile(*h.grid, rad.absorber)).exp();
  ComplexField z = nls::project_continuous(h, v);
  const int nsteps = static_cast<int>(std::lround(25.0 / dt));
  double acc = 0.0;
  double prev = std::pow(nls::norm_weighted_l2(z, -sigma), 2.0);
  for (int j = 0; j < nsteps; ++j) {
    z.v *= expv;
    nls::fft2(z.v);
    z.v *= expk;
    nls::ifft2(z.v);
    z.v *= expv;
    z.v *= damp;
    z = nls::project_continuous(h, z);
    const double cur = std::pow(nls::norm_weighted_l2(z, -sigma), 2.0);
    acc += 0.5 * dt * (prev + cur);
    prev = cur;
  }
  const double oracle = std::sqrt(acc) / nls::norm_lp(v, 2.0);
  CHECK(module_value == doctest::Approx(oracle).epsilon(1e-6));

  CHECK_THROWS_AS((void)nls::kato_smoothing_check(fam, v, 0.0, -1.0),
                  std::invalid_argument);
}

TEST_CASE("omega decay measurement emits a coherent worst-case record") {
  LinearizedOptions rad;
  rad.absorber.enabled = true;
  LinearizationFamily fam =
      LinearizationFamily::frozen(cubic_family(), complex<double>(0.05, 0.0), rad);
  std::vector<ComplexField> ens = ensemble(5);
  std::vector<double> times;
  for (int k = 1; k <= 24; ++k) times.push_back(0.5 * k);

  ProbeSpec w;
  w.kind = ProbeSpec::Kind::Weighted;
  w.sigma = 2.0;
  nls::OmegaDecayOptions oopt;
  oopt.fit_t_min = 0.4;
  oopt.fit_t_max = 4.0;
  nls::DecayRecord rec = nls::measure_omega_decay(fam, ens, 0.0, times, w, oopt);

  REQUIRE(rec.t.size() == times.size());
  CHECK(rec.probe == "w2");
  CHECK(rec.predicted_B == 1.0);
  CHECK(rec.predicted_A == -2.0);
  CHECK(rec.valid);
  CHECK(rec.fit_pure.B > 0.2);
  CHECK(rec.fit_pure.B < 2.5);

  // worst case dominates any single member's ratio
  ComplexField z3 = nls::propagate_omega(fam, ens[2], 0.0, 4.0);
  const double member =
      nls::norm_weighted_l2(z3, -2.0) / nls::norm_weighted_l2(ens[2], 2.0);
  const std::size_t idx = 7;  // t = 4.0
  REQUIRE(rec.t[idx] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(rec.value[idx] >= member - 1e-12);

  nls::DecayRecord again = nls::measure_omega_decay(fam, ens, 0.0, times, w, oopt);
  CHECK(again.value == rec.value);
  CHECK(again.fit_pure.B == rec.fit_pure.B);

  // pair probe carries the saturated-log prediction shape
  ProbeSpec pair;
  pair.kind = ProbeSpec::Kind::LpPair;
  pair.p = 8.0;
  nls::DecayRecord prec = nls::measure_omega_decay(fam, ens, 0.0, times, pair, oopt);
  CHECK(prec.predicted_B == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(prec.predicted_A == doctest::Approx(0.75 / 0.95).epsilon(1e-12));

  // a window past the contamination estimate is flagged
  nls::OmegaDecayOptions wide = oopt;
  wide.fit_t_min = 1.0;
  wide.fit_t_max = 12.0;
  nls::DecayRecord bad = nls::measure_omega_decay(fam, ens, 0.0, times, w, wide);
  CHECK(!bad.valid);
  CHECK(!bad.note.empty());

  std::vector<ComplexField> few(ens.begin(), ens.begin() + 4);
  CHECK_THROWS_AS((void)nls::measure_omega_decay(fam, few, 0.0, times, w, oopt),
                  std::invalid_argument);
  std::vector<ComplexField> tainted = ens;
  tainted[1].v += well().psi0.v;
  CHECK_THROWS_AS((void)nls::measure_omega_decay(fam, tainted, 0.0, times, w, oopt),
                  std::invalid_argument);
}

TEST_CASE("hypothesis ceiling is checked at construction") {
  const BoundStateFamily& branch = cubic_family();

  const double n1 = nls::hypothesis_weight_norm(branch.state(complex<double>(0.04, 0.0)), 2.0);
  const double n2 = nls::hypothesis_weight_norm(branch.state(complex<double>(0.08, 0.0)), 2.0);
  CHECK(n1 > 0.0);
  CHECK(n2 / n1 == doctest::Approx(2.0).epsilon(0.05));

  LinearizedOptions tight;
  tight.eps1 = 0.5 * n1;
  CHECK_THROWS_AS((void)LinearizationFamily::frozen(branch, complex<double>(0.04, 0.0), tight),
                  std::invalid_argument);
  CHECK_NOTHROW((void)LinearizationFamily::frozen(branch, complex<double>(0.04, 0.0)));
}
