#pragma once

#include <Eigen/Dense>
#include <complex>

#include "nls/bound_state.hpp"

namespace nls {

// Splitting of a small field phi into a manifold point psi_E(a) plus a
// radiation remainder eta lying in the constrained subspace
// H_a = { f : Re<Psi_j(a), f> = 0 }.
struct Decomposition {
  std::complex<double> a{0.0, 0.0};
  ComplexField eta;
  double m_norm = 0.0;               // operator norm of M at the solution
  int newton_iters = 0;              // Newton updates performed
  double constraint_residual = 0.0;  // max_j |Re<Psi_j(a), eta>|
};

struct DecomposeOptions {
  double newton_tol = 1e-12;  // stop when |F| falls below this
  int max_newton = 50;
  double fd_rel = 1e-5;  // relative amplitude step for dual derivatives
  double phi_max = 0.0;  // admissible ||phi||_L2; 0 selects a_max / 2
};

struct MMatrix {
  Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
  double norm = 0.0;  // operator (spectral) norm
};

// M_ij = Re<dPsi_i/da_j, phi - psi_E(a)>, the correction that turns the
// identity into the Jacobian of the projection system. Dual derivatives are
// centered differences along the branch (one-sided at the amplitude rim).
MMatrix m_matrix(const BoundStateFamily& fam, std::complex<double> a,
                 const ComplexField& phi, double fd_rel = 1e-5);

// Newton iteration on F_j(a) = Re<Psi_j(a), psi_E(a) - phi> with Jacobian
// I - M, started from a0 = <psi0, phi> unless an explicit guess is given.
Decomposition decompose(const BoundStateFamily& fam, const ComplexField& phi,
                        const DecomposeOptions& opt = {},
                        const std::complex<double>* guess = nullptr);

// psi_E(a) + eta; the left inverse of decompose.
ComplexField recompose(const BoundStateFamily& fam, std::complex<double> a,
                       const ComplexField& eta);

}  // namespace nls
