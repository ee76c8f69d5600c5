#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nls/absorber.hpp"
#include "nls/decay_fit.hpp"
#include "nls/potential.hpp"

namespace nls {

// Schroedinger operator -Lap + V on the periodic grid. The certified
// variant carries exactly one negative eigenvalue with its positive,
// L2-normalized ground state; the free variant binds nothing and its
// continuous projection is the identity.
struct Hamiltonian {
  GridPtr grid;
  Potential pot;
  bool has_bound_state = false;
  double e0 = 0.0;
  ComplexField psi0;
  int n_negative = 0;
};

struct SpectralScanOptions {
  int block = 8;
  int degree = 80;
  int max_sweeps = 60;
  double gap_tol = 1e-3;     // spectral gap around zero that must stay clean
  double ground_tol = 1e-10; // residual target for certified negative pairs
  double band_tol = 1e-4;    // residual target for near-zero band modes
  std::uint64_t seed = 0x5eed5eedULL;
};

struct SpectralPairs {
  Eigen::VectorXd values;     // Ritz values, ascending
  Eigen::VectorXd residuals;  // L2 residuals
  std::vector<Eigen::ArrayXXd> vectors;  // L2-normalized real fields
  bool all_negative = false;  // whole block certified negative (count >= block)
  bool converged = false;
};

// Block Chebyshev-filtered subspace iteration for the low end of the
// spectrum, matrix-free through the FFT.
SpectralPairs lowest_eigenpairs(const GridPtr& g, const Eigen::ArrayXXd& v,
                                const SpectralScanOptions& opt);

// Certifies the one-bound-state hypothesis: exactly one negative eigenvalue,
// nothing within gap_tol of zero, positive ground state. Throws otherwise.
Hamiltonian assemble_hamiltonian(const Potential& pot,
                                 const SpectralScanOptions& opt = {});

Hamiltonian free_hamiltonian(const GridPtr& g);

ComplexField apply_h(const Hamiltonian& h, const ComplexField& f);

// Projection onto the orthogonal complement of the ground state.
ComplexField project_continuous(const Hamiltonian& h, const ComplexField& f);

// exp(-i H t) by symmetric splitting with step at most dt_max; exactly
// norm-preserving step by step.
ComplexField propagate_linear(const Hamiltonian& h, const ComplexField& f, double t,
                              double dt_max = 0.01);

struct ProbeSpec {
  enum class Kind { Weighted, LpPair, Lp };
  Kind kind = Kind::Weighted;
  double sigma = 2.0;  // weighted kind
  double p = 8.0;      // lp kinds
  std::string label() const;
};

struct LinearDecayOptions {
  double dt = 0.01;
  AbsorberSpec absorber;
  double fit_t_min = 5.0;
  double fit_t_max = 0.0;  // 0 means the last sample time
};

// Evolves P_c f0 and samples the probe norm at the given times, fitting both
// envelope models. The record carries the estimated contamination time and is
// flagged invalid if the fit window runs past it.
DecayRecord measure_linear_decay(const Hamiltonian& h, const ComplexField& f0,
                                 const std::vector<double>& times,
                                 const ProbeSpec& probe,
                                 const LinearDecayOptions& opt = {});

// Estimated time at which box-boundary effects reach back into the
// observation region, from spectral and spatial quantiles of f0.
double contamination_time(const ComplexField& f0, const AbsorberSpec& absorber);

}  // namespace nls
