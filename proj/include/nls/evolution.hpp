#pragma once

#include <complex>
#include <string>
#include <vector>

#include "nls/absorber.hpp"
#include "nls/decomposition.hpp"

namespace nls {

// Sampled history of a tracked nonlinear run. Amplitudes and radiation
// snapshots are stored in the lab frame; the rotating-frame amplitude is
// exp(i theta) a. Norm series are indexed [probe][sample].
struct Trajectory {
  std::vector<double> times;
  std::vector<std::complex<double>> a_series;
  std::vector<double> theta_series;  // trapezoid quadrature of E(|a|)
  std::vector<double> e_series;      // E(|a|) per sample
  std::vector<std::string> probe_labels;
  std::vector<std::vector<double>> eta_norms;
  std::vector<double> mass_series;
  std::vector<double> energy_series;
  std::vector<double> ode_residuals;  // defect of the modulation system
  std::vector<int> snapshot_samples;
  std::vector<ComplexField> snapshots;  // lab-frame eta at those samples
  double dt = 0.0;
  double sample_dt = 0.0;
  bool truncated = false;
  std::string truncation_reason;
};

struct RunOptions {
  double sample_dt = 0.1;
  AbsorberSpec absorber;   // disabled => conservative mode
  int snapshot_stride = 0; // store eta every this many samples; 0 disables
  double phi_max = 0.0;    // decomposition ceiling; 0 selects a_max / 2
};

// Tail summary of the rotating-frame amplitude. theta_tilde is
// theta(t)/t - e_plus per sample (its t -> 0 limit at the first sample).
struct AsymptoticState {
  std::complex<double> a_plus{0.0, 0.0};
  double e_plus = 0.0;
  std::vector<double> theta_tilde;
  double convergence_rate = 0.0;  // fitted decay exponent of |a(t) - a_plus|
  bool settled = false;
  std::string note;
};

// Decay envelope log^A(2 + t) / (1 + t)^B for the radiation L^p norm.
// The exponent pair switches branch at p1; above it the rate saturates.
struct PredictedEnvelope {
  double log_exponent = 0.0;    // A
  double power_exponent = 0.0;  // B
  double p1 = 0.0;
  double p2 = 0.0;
  bool saturated = false;       // true on the saturated branch
  double operator()(double t) const;
};

// Accuracy budget for one Strang step; both split factors are exact, so the
// budget reflects the splitting error, not a stability limit.
double max_time_step(const Grid& g);

// One Strang step of i u_t = (-Lap + V) u + g(u): exact half phase step in
// the diagonal factor V + g(|u|)/|u|, exact spectral kinetic step, half
// phase step again. Throws on amplitude blowup.
ComplexField step_nls(const Hamiltonian& h, const NonlinearitySpec& nl,
                      const ComplexField& u, double dt);

// Conserved quantities of the flow without an absorber.
double mass(const ComplexField& u);
double energy(const Hamiltonian& h, const NonlinearitySpec& nl,
              const ComplexField& u);

// Integrate to time T, decomposing against the branch at every sample time
// and accumulating phase, conserved quantities, probe norms of eta, and the
// modulation-system defect. Decomposition failure truncates the trajectory
// and flags it; integrator blowup propagates as an error.
Trajectory run_with_tracking(const Hamiltonian& h, const BoundStateFamily& fam,
                             const NonlinearitySpec& nl, const ComplexField& u0,
                             double T, double dt,
                             const std::vector<ProbeSpec>& probes,
                             const RunOptions& opt = {});

// Rotating-frame amplitude velocity (da1/dt) + i (da2/dt) obtained by
// solving (I - m) da/dt = [Re<Psi_j, -i g2(psi_E, eta)>].
std::complex<double> modulation_rhs(const BoundState& bs,
                                    const NonlinearitySpec& nl,
                                    const ComplexField& eta,
                                    const Eigen::Matrix2d& m);

// |da/dt - rhs| at the midpoints of consecutive stored snapshots, with the
// derivative from the sampled series and the rhs trapezoid-averaged.
std::vector<double> check_modulation_residual(const Trajectory& traj,
                                              const BoundStateFamily& fam,
                                              const NonlinearitySpec& nl);

AsymptoticState asymptotic_state(const Trajectory& traj);

// Envelope for ||eta(t)||_{L^p}, valid for 2 <= p <= p2 given the exponent
// pair (p0, q0) of the decay framework.
PredictedEnvelope predicted_envelope(double p, const NonlinearitySpec& nl,
                                     double p0, double q0);

// Columns: t, re_a, im_a, theta, mass, energy, eta_<label>..., ode_residual.
void write_trajectory_csv(const Trajectory& traj, const std::string& path);

}  // namespace nls
