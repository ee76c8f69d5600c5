#pragma once

#include <complex>
#include <vector>

#include "nls/evolution.hpp"

namespace nls {

struct LinearizedOptions {
  double dt = 0.01;       // step lattice, anchored at time zero
  double sigma = 2.0;     // weight for the smallness surrogate and Kato weight
  double eps1 = 1.0;      // ceiling on the weighted-H2 size of the coefficients
  AbsorberSpec absorber;  // disabled => conservative mode, both directions
};

// Coefficient source for the linearized flow around the manifold: either a
// single frozen bound state (autonomous) or the sampled path of a tracked
// run. The branch must outlive the family.
class LinearizationFamily {
 public:
  static LinearizationFamily frozen(const BoundStateFamily& branch,
                                    std::complex<double> a,
                                    const LinearizedOptions& opt = {});
  static LinearizationFamily along(const BoundStateFamily& branch,
                                   const Trajectory& traj,
                                   const LinearizedOptions& opt = {});

  const BoundStateFamily& branch() const { return *branch_; }
  const Hamiltonian& hamiltonian() const { return branch_->hamiltonian(); }
  const LinearizedOptions& options() const { return opt_; }
  bool autonomous() const { return frozen_; }

  // admissible time range (unbounded for frozen families)
  double t_lo() const { return t_lo_; }
  double t_hi() const { return t_hi_; }

  // coefficient amplitude at time tau; constant when frozen, otherwise the
  // sampled rotating-frame amplitude interpolated and re-phased
  std::complex<double> amplitude(double tau) const;

 private:
  LinearizationFamily() = default;

  const BoundStateFamily* branch_ = nullptr;
  LinearizedOptions opt_;
  bool frozen_ = true;
  std::complex<double> a0_{0.0, 0.0};
  std::vector<double> tk_, theta_, ek_;
  std::vector<std::complex<double>> atil_;
  double t_lo_ = 0.0, t_hi_ = 0.0;
};

// ||<x>^{4 sigma / 3} psi||_{H^2}, the smallness surrogate checked on every
// coefficient state at family construction.
double hypothesis_weight_norm(const ComplexField& psi, double sigma);

// Solves dz/dt = -i(-Lap + V) z - i P_c Dg R_a z from s to t on the family
// step lattice: half coupling step, exact split kinetic-potential step, half
// coupling step, reprojection onto the continuous subspace. Two-leg
// integration through an intermediate lattice time replays the identical
// step sequence, so composition is structural. Radiative families propagate
// forward only; conservative families run in both directions.
ComplexField propagate_omega(const LinearizationFamily& fam,
                             const ComplexField& v, double s, double t);

// Adjoint of the realized forward map (real L2 pairing); requires s <= t.
ComplexField propagate_omega_adjoint(const LinearizationFamily& fam,
                                     const ComplexField& v, double s, double t);

// Difference against the zero-amplitude flow on the same lattice.
ComplexField t_operator(const LinearizationFamily& fam, const ComplexField& v,
                        double s, double t);

// Worst case of ||Omega(t,s) v|| / ||v|| over the ensemble, sharpened by
// power iteration on the adjoint-composed map starting from the worst member.
double omega_operator_bound(const LinearizationFamily& fam, double s, double t,
                            const std::vector<ComplexField>& ensemble,
                            int refine_iters = 5);

// (integral_s^{s+T} ||<x>^{-sigma} Omega(tau,s) v||^2 dtau)^{1/2} / ||v||,
// trapezoid quadrature on the step lattice.
double kato_smoothing_check(const LinearizationFamily& fam,
                            const ComplexField& v, double s, double T);

struct OmegaDecayOptions {
  double fit_t_min = 5.0;
  double fit_t_max = 0.0;  // 0 means the last sample offset
  double p0 = 40.0;        // reference exponent for the pair-probe log shape
};

// Worst-case-over-ensemble probe ratios of Omega(t,s) at the given absolute
// times, fitted against the probe's predicted envelope in t - s.
DecayRecord measure_omega_decay(const LinearizationFamily& fam,
                                const std::vector<ComplexField>& ensemble,
                                double s, const std::vector<double>& times,
                                const ProbeSpec& probe,
                                const OmegaDecayOptions& opt = {});

}  // namespace nls
