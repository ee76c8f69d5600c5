#pragma once

#include <complex>
#include <string>
#include <vector>

#include "nls/hamiltonian.hpp"
#include "nls/nonlinearity.hpp"

namespace nls {

// One dressed bound state at complex amplitude a: psi solves
// (-Lap + V) psi + g(psi) = e psi with <psi0, psi> = a, and correction
// = psi - a psi0 stays orthogonal to psi0. Tangents are the derivatives
// in Re a and Im a; the duals are their biorthogonal partners,
// Re<dual_i, tangent_j> = delta_ij.
struct BoundState {
  std::complex<double> a{0.0, 0.0};
  double e = 0.0;
  ComplexField psi;
  ComplexField correction;
  ComplexField tangent1;
  ComplexField tangent2;
  ComplexField dual1;
  ComplexField dual2;
  double pairing = 0.0;   // Re<i tangent1, tangent2>
  double residual = 0.0;  // L2 defect of the stationary equation
};

struct FamilyOptions {
  double a_min = 1e-4;
  double a_max = 0.1;
  double ratio = 1.2;  // geometric node spacing
  double newton_tol = 1e-11;
  int max_newton = 40;
  int gmres_restart = 60;
  int max_gmres = 600;
  double pairing_floor = 0.5;
};

// Newton solve of the stationary problem at one real amplitude, warm-started
// when a nearby state is given. Tangents and duals are left empty; they are
// branch-level quantities.
BoundState solve_bound_state(const Hamiltonian& h, const NonlinearitySpec& nl,
                             double a_real, const BoundState* warm = nullptr,
                             const FamilyOptions& opt = {});

// The continuation family psi(a) for a_min <= a <= a_max, built by marching
// real a upward and evaluated anywhere in the disc |a| <= a_max by gauge
// rotation. Between nodes the radial profile is Hermite-interpolated in a;
// below a_min it is extended by the small-a power law. Immutable once built.
class BoundStateFamily {
 public:
  static BoundStateFamily build(const Hamiltonian& h, const NonlinearitySpec& nl,
                                const FamilyOptions& opt = {});

  // Persistence: a directory holding one snapshot per node plus a manifest
  // with the a-grid, energies, and residuals. load() revalidates the
  // stationary defect of every node against the given operator.
  void save(const std::string& dir) const;
  static BoundStateFamily load(const std::string& dir, const Hamiltonian& h,
                               const NonlinearitySpec& nl);

  const Hamiltonian& hamiltonian() const { return ham_; }
  const NonlinearitySpec& nonlinearity() const { return nl_; }
  const FamilyOptions& options() const { return opt_; }
  double e_limit() const { return ham_.e0; }

  int nodes() const { return static_cast<int>(a_.size()); }
  double node_a(int i) const { return a_.at(i); }
  double node_e(int i) const { return e_.at(i); }
  double node_residual(int i) const { return resid_.at(i); }
  const ComplexField& node_state(int i) const { return psi_.at(i); }

  double energy(double amod) const;

  // psi(a) alone; the cheap path for iteration loops.
  ComplexField state(std::complex<double> a) const;

  // Fully populated state with tangents, duals, pairing, and a freshly
  // recomputed stationary defect. Rejects |a| > a_max and pairings below
  // the floor.
  BoundState at(std::complex<double> a) const;

  // eta = zeta + (b1 + i b2) psi0 with Re<dual_j, eta> = 0: inverts the
  // continuous projection from the constrained subspace at bs.a.
  ComplexField inverse_projection(const BoundState& bs, const ComplexField& zeta) const;

 private:
  BoundStateFamily() = default;
  void finalize();
  // Radial profile, its a-derivative, energy, and energy slope at 0 < r.
  void eval_radial(double r, Eigen::ArrayXXd& psi, Eigen::ArrayXXd& dpsi,
                   double& e) const;

  Hamiltonian ham_;
  NonlinearitySpec nl_;
  FamilyOptions opt_;
  std::vector<double> a_, e_, resid_, de_;
  std::vector<ComplexField> psi_;
  std::vector<Eigen::ArrayXXd> dpsi_;
};

// || <x>^sigma psi ||_H2 / || psi ||_H2 for the state in bs.
double verify_decay(const BoundState& bs, double sigma);

}  // namespace nls
