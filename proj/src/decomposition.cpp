#include "nls/decomposition.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "nls/check.hpp"

namespace nls {

namespace {

using Eigen::Matrix2d;
using Eigen::Vector2d;

// Entries Re<dPsi_i/da_j, resid> with the dual derivatives taken along the
// branch. Central differences, falling back to a backward stencil when a
// forward step would leave the amplitude domain.
Matrix2d m_entries(const BoundStateFamily& fam, std::complex<double> a,
                   const ComplexField& resid, double fd_rel) {
  const double amax = fam.options().a_max;
  const double d = fd_rel * std::max(std::abs(a), fam.options().a_min);
  Matrix2d m;
  const std::complex<double> step[2] = {{d, 0.0}, {0.0, d}};
  for (int j = 0; j < 2; ++j) {
    ComplexField du1, du2;
    if (std::abs(a + step[j]) <= amax) {
      BoundState p = fam.at(a + step[j]);
      BoundState q = fam.at(a - step[j]);
      du1 = p.dual1;
      du1.v = (du1.v - q.dual1.v) / (2.0 * d);
      du2 = p.dual2;
      du2.v = (du2.v - q.dual2.v) / (2.0 * d);
    } else {
      BoundState c = fam.at(a);
      BoundState q = fam.at(a - step[j]);
      du1 = c.dual1;
      du1.v = (du1.v - q.dual1.v) / d;
      du2 = c.dual2;
      du2.v = (du2.v - q.dual2.v) / d;
    }
    m(0, j) = inner_real(du1, resid);
    m(1, j) = inner_real(du2, resid);
  }
  return m;
}

double spectral_norm(const Matrix2d& m) {
  Eigen::JacobiSVD<Matrix2d> svd(m);
  return svd.singularValues()(0);
}

}  // namespace

MMatrix m_matrix(const BoundStateFamily& fam, std::complex<double> a,
                 const ComplexField& phi, double fd_rel) {
  require(phi.grid == fam.hamiltonian().grid, "m_matrix: field grid mismatch");
  require(std::isfinite(fd_rel) && fd_rel > 0.0, "m_matrix: step must be positive");
  require(std::abs(a) <= fam.options().a_max * (1.0 + 1e-9),
          "m_matrix: amplitude outside the branch");

  ComplexField resid = phi;
  if (std::abs(a) > 0.0) resid.v -= fam.state(a).v;
  MMatrix out;
  out.m = m_entries(fam, a, resid, fd_rel);
  out.norm = spectral_norm(out.m);
  return out;
}

Decomposition decompose(const BoundStateFamily& fam, const ComplexField& phi,
                        const DecomposeOptions& opt,
                        const std::complex<double>* guess) {
  const Hamiltonian& h = fam.hamiltonian();
  require(phi.grid == h.grid, "decompose: field grid mismatch");
  require(all_finite(phi), "decompose: field has non-finite entries");
  require(opt.newton_tol > 0.0 && opt.max_newton >= 1 && opt.fd_rel > 0.0,
          "decompose: invalid options");

  const double amax = fam.options().a_max;
  const double cap = opt.phi_max > 0.0 ? opt.phi_max : 0.5 * amax;
  const double nphi = norm_lp(phi, 2.0);
  if (nphi > cap * (1.0 + 1e-12)) {
    char msg[128];
    std::snprintf(msg, sizeof msg,
                  "decompose: ||phi|| = %.3g exceeds the admissible %.3g", nphi, cap);
    require(false, msg);
  }

  std::complex<double> a = guess ? *guess : inner(h.psi0, phi);
  require(std::abs(a) <= amax, "decompose: initial guess outside the branch");

  BoundState bs;
  Vector2d f = Vector2d::Zero();
  int iter = 0;
  std::string trace;
  char buf[32];
  for (;; ++iter) {
    bs = fam.at(a);
    ComplexField diff = bs.psi;
    diff.v -= phi.v;
    f(0) = inner_real(bs.dual1, diff);
    f(1) = inner_real(bs.dual2, diff);
    std::snprintf(buf, sizeof buf, " %.3e", f.norm());
    trace += buf;
    if (f.norm() <= opt.newton_tol) break;
    ensure(iter < opt.max_newton, "decompose: Newton stagnated; |F| trace:" + trace);

    ComplexField resid = phi;
    resid.v -= bs.psi.v;
    Matrix2d jac = Matrix2d::Identity() - m_entries(fam, a, resid, opt.fd_rel);
    ensure(std::abs(jac.determinant()) > 1e-6, "decompose: Jacobian nearly singular");
    const Vector2d step = jac.partialPivLu().solve(f);
    a -= std::complex<double>(step(0), step(1));
    ensure(std::abs(a) <= amax,
           "decompose: iterate left the amplitude domain; |F| trace:" + trace);
  }

  Decomposition out;
  out.a = a;
  out.eta = phi;
  out.eta.v -= bs.psi.v;
  out.m_norm = spectral_norm(m_entries(fam, a, out.eta, opt.fd_rel));
  out.newton_iters = iter;
  out.constraint_residual = f.cwiseAbs().maxCoeff();
  ensure(out.constraint_residual <= 1e-9, "decompose: constraint residual above 1e-9");
  ensure(std::abs(a) <= 2.0 * nphi * (1.0 + 1e-12) + 1e-15,
         "decompose: amplitude violates the smallness bound");
  return out;
}

ComplexField recompose(const BoundStateFamily& fam, std::complex<double> a,
                       const ComplexField& eta) {
  require(eta.grid == fam.hamiltonian().grid, "recompose: field grid mismatch");
  ComplexField out = fam.state(a);
  out.v += eta.v;
  return out;
}

}  // namespace nls
