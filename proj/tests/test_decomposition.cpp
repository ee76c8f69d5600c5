#include <doctest.h>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "nls/decomposition.hpp"
#include "nls/rng.hpp"

using nls::BoundState;
using nls::BoundStateFamily;
using nls::ComplexField;
using nls::Decomposition;
using std::complex;

namespace {

const nls::Hamiltonian& well() {
  static nls::Hamiltonian h = nls::assemble_hamiltonian(
      nls::build_potential("gaussian-well", 2.0, 1.5, nls::Grid::make(64, 12.0)));
  return h;
}

nls::FamilyOptions family_options() {
  nls::FamilyOptions opt;
  opt.a_min = 1e-3;
  opt.a_max = 0.1;
  return opt;
}

const BoundStateFamily& cubic_family() {
  static BoundStateFamily fam = BoundStateFamily::build(
      well(), nls::builtin_nonlinearity("cubic"), family_options());
  return fam;
}

const BoundStateFamily& linear_family() {
  static BoundStateFamily fam = BoundStateFamily::build(
      well(), nls::zero_nonlinearity(), family_options());
  return fam;
}

double rel_l2(const ComplexField& a, const ComplexField& b) {
  ComplexField d = a;
  d.v -= b.v;
  return nls::norm_lp(d, 2.0) / std::max(nls::norm_lp(b, 2.0), 1e-300);
}

ComplexField random_radiation(const nls::GridPtr& g, std::uint64_t seed) {
  nls::Rng rng(seed);
  ComplexField f(g);
  for (int j = 0; j < g->n; ++j)
    for (int i = 0; i < g->n; ++i)
      f.v(i, j) = complex<double>(rng.gaussian(), rng.gaussian()) *
                  std::exp(-0.1 * g->r2(i, j));
  f = nls::project_continuous(well(), f);
  f.v /= nls::norm_lp(f, 2.0);
  return f;
}

void check_accepted(const Decomposition& d, const ComplexField& phi) {
  CHECK(d.constraint_residual <= 1e-9);
  CHECK(std::abs(d.a) <= 2.0 * nls::norm_lp(phi, 2.0) + 1e-15);
  CHECK(d.m_norm <= 0.5);
  CHECK(nls::norm_lp(d.eta, 2.0) <= 2.0 * nls::norm_lp(phi, 2.0));
}

}  // namespace

TEST_CASE("constructed manifold-plus-radiation input is recovered") {
  const BoundStateFamily& fam = cubic_family();
  const complex<double> astar = 0.04 * std::polar(1.0, 0.7);
  BoundState bs = fam.at(astar);

  ComplexField zeta = random_radiation(well().grid, 2024);
  zeta.v *= 1e-3;
  ComplexField eta_star = fam.inverse_projection(bs, zeta);
  ComplexField phi = fam.state(astar);
  phi.v += eta_star.v;

  Decomposition d = nls::decompose(fam, phi);
  check_accepted(d, phi);
  CHECK(std::abs(d.a - astar) <= 1e-8);
  CHECK(rel_l2(d.eta, eta_star) <= 1e-6);
  CHECK(d.newton_iters >= 1);

  ComplexField back = nls::recompose(fam, d.a, d.eta);
  CHECK(rel_l2(back, phi) <= 1e-13);
}

TEST_CASE("manifold points decompose to zero radiation") {
  const BoundStateFamily& fam = cubic_family();
  const complex<double> astar = 0.045 * std::polar(1.0, -1.2);
  ComplexField phi = fam.state(astar);

  Decomposition d = nls::decompose(fam, phi);
  check_accepted(d, phi);
  CHECK(std::abs(d.a - astar) <= 1e-10);
  CHECK(nls::norm_lp(d.eta, 2.0) <= 1e-10);
  CHECK(d.m_norm <= 1e-8);
}

TEST_CASE("decomposition is gauge equivariant") {
  const BoundStateFamily& fam = cubic_family();
  const complex<double> astar{0.03, 0.01};
  ComplexField zeta = random_radiation(well().grid, 77);
  zeta.v *= 2e-3;
  ComplexField phi = fam.state(astar);
  phi.v += fam.inverse_projection(fam.at(astar), zeta).v;

  Decomposition d0 = nls::decompose(fam, phi);
  const complex<double> phase = std::polar(1.0, 1.1);
  ComplexField rotated = phi;
  rotated.v *= phase;
  Decomposition d1 = nls::decompose(fam, rotated);

  CHECK(std::abs(d1.a - phase * d0.a) <= 1e-9);
  ComplexField expected = d0.eta;
  expected.v *= phase;
  CHECK(rel_l2(d1.eta, expected) <= 1e-9);
}

TEST_CASE("pure radiation keeps a zero amplitude") {
  const BoundStateFamily& fam = cubic_family();
  ComplexField phi = random_radiation(well().grid, 31);
  phi.v *= 0.01;

  Decomposition d = nls::decompose(fam, phi);
  check_accepted(d, phi);
  CHECK(std::abs(d.a) <= 1e-10);
  CHECK(rel_l2(d.eta, phi) <= 1e-10);

  ComplexField untouched = nls::recompose(fam, complex<double>(0.0, 0.0), phi);
  CHECK((untouched.v == phi.v).all());
}

TEST_CASE("perturbed initial guesses land on the same amplitude") {
  const BoundStateFamily& fam = cubic_family();
  const complex<double> astar = 0.04 * std::polar(1.0, 0.4);
  ComplexField zeta = random_radiation(well().grid, 555);
  zeta.v *= 1e-3;
  ComplexField phi = fam.state(astar);
  phi.v += fam.inverse_projection(fam.at(astar), zeta).v;

  Decomposition ref = nls::decompose(fam, phi);
  nls::Rng rng(99);
  for (int s = 0; s < 10; ++s) {
    const complex<double> guess =
        astar * (1.0 + 0.3 * complex<double>(rng.uniform() - 0.5, rng.uniform() - 0.5));
    Decomposition d = nls::decompose(fam, phi, {}, &guess);
    CHECK(std::abs(d.a - ref.a) <= 1e-8);
  }
}

TEST_CASE("correction matrix vanishes on the manifold and scales linearly") {
  const BoundStateFamily& fam = cubic_family();
  const complex<double> a{0.05, 0.0};
  ComplexField phi = fam.state(a);
  nls::MMatrix onman = nls::m_matrix(fam, a, phi);
  CHECK(onman.norm <= 1e-12);

  ComplexField zeta = random_radiation(well().grid, 808);
  std::vector<double> eps{1e-4, 3e-4, 1e-3, 3e-3, 1e-2};
  std::vector<double> norms;
  for (double e : eps) {
    ComplexField p = fam.state(a);
    p.v += e * zeta.v;
    nls::MMatrix mm = nls::m_matrix(fam, a, p);
    CHECK(std::isfinite(mm.m(0, 0)));
    CHECK(std::isfinite(mm.m(1, 1)));
    norms.push_back(mm.norm);
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double lx = std::log(eps[i]), ly = std::log(std::max(norms[i], 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double n = static_cast<double>(eps.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("linear family decomposes in a single projection") {
  const BoundStateFamily& fam = linear_family();
  const complex<double> astar = 0.04 * std::polar(1.0, 0.9);
  ComplexField phi = fam.state(astar);
  ComplexField zeta = random_radiation(well().grid, 4242);
  phi.v += 0.01 * zeta.v;

  Decomposition d = nls::decompose(fam, phi);
  check_accepted(d, phi);
  CHECK(std::abs(d.a - astar) <= 1e-10);
  CHECK(d.newton_iters <= 1);
  CHECK(d.m_norm <= 1e-7);
}

TEST_CASE("amplitude responds stably to field perturbations") {
  const BoundStateFamily& fam = cubic_family();
  const complex<double> astar{0.035, -0.015};
  ComplexField zeta = random_radiation(well().grid, 13);
  zeta.v *= 1e-3;
  ComplexField phi = fam.state(astar);
  phi.v += fam.inverse_projection(fam.at(astar), zeta).v;
  Decomposition base = nls::decompose(fam, phi);

  double worst = 0.0;
  for (int s = 0; s < 5; ++s) {
    ComplexField bump = random_radiation(well().grid, 7000 + s);
    bump.v *= 1e-3;
    ComplexField p2 = phi;
    p2.v += bump.v;
    Decomposition d2 = nls::decompose(fam, p2);
    worst = std::max(worst, std::abs(d2.a - base.a) / nls::norm_lp(bump, 2.0));
  }
  CHECK(worst <= 5.0);
}

TEST_CASE("decompose validates its inputs") {
  const BoundStateFamily& fam = cubic_family();
  ComplexField big = random_radiation(well().grid, 1);
  CHECK_THROWS_AS((void)nls::decompose(fam, big), std::invalid_argument);

  ComplexField small = big;
  small.v *= 0.01;
  const complex<double> far{0.5, 0.0};
  CHECK_THROWS_AS((void)nls::decompose(fam, small, {}, &far), std::invalid_argument);

  ComplexField other(nls::Grid::make(32, 12.0));
  CHECK_THROWS_AS((void)nls::decompose(fam, other), std::invalid_argument);
  CHECK_THROWS_AS((void)nls::recompose(fam, complex<double>(0.01, 0.0), other),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)nls::m_matrix(fam, complex<double>(0.3, 0.0), small),
                  std::invalid_argument);
}
