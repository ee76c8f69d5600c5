#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nls/absorber.hpp"
#include "nls/hamiltonian.hpp"
#include "nls/nonlinearity.hpp"

namespace nls {

// One experiment, fully determined: grid, operator, branch, initial data,
// integration, probes, fit window, output location, seed. Parsed from JSON
// with a strict schema (unknown keys and out-of-range values are rejected
// before any compute) and serialized losslessly, so parse(serialize(c)) == c.
struct ExperimentConfig {
  int grid_n = 256;
  double grid_length = 24.0;

  std::string potential_kind = "gaussian-well";
  double potential_depth = 2.0;
  double potential_width = 1.5;

  // built-in name, or a custom power sum when terms is non-empty
  std::string nonlinearity_name = "cubic";
  std::vector<PowerTerm> nonlinearity_terms;

  double a_min = 1e-3;
  double a_max = 0.1;
  double ratio = 1.2;

  double a0 = 0.05;
  double radiation_amplitude = 0.0;
  double radiation_width = 0.15;  // envelope exp(-width r^2) on the seed field
  double radiation_band = 0.5;    // spectral rolloff scale of the seed field
  double time = 100.0;
  double dt = 0.01;
  double sample_dt = 0.1;
  double phi_max = 0.0;
  int snapshot_stride = 0;
  std::vector<ProbeSpec> probes;

  AbsorberSpec absorber;

  // packet ensembles for the linear and linearized probe verbs
  int ensemble = 5;
  double cadence = 0.5;
  double carrier_min = 0.3;
  double carrier_max = 0.9;
  double packet_width = 2.5;  // envelope exp(-r^2 / (2 width^2))

  double fit_t_min = 5.0;
  double fit_t_max = 0.0;  // 0 means the last sample
  double tolerance = 0.15;
  double p0 = 40.0;
  double q0 = 12.0;

  std::string output_dir = "out";
  std::uint64_t seed = 1;
};

inline bool operator==(const PowerTerm& a, const PowerTerm& b) {
  return a.coupling == b.coupling && a.alpha == b.alpha;
}

inline bool operator==(const ProbeSpec& a, const ProbeSpec& b) {
  if (a.kind != b.kind) return false;
  return a.kind == ProbeSpec::Kind::Weighted ? a.sigma == b.sigma : a.p == b.p;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);
inline bool operator!=(const ExperimentConfig& a, const ExperimentConfig& b) {
  return !(a == b);
}

// Strict JSON: every section and key checked by name, every value by type
// and range. Throws std::invalid_argument with the offending key path.
ExperimentConfig parse_config(const std::string& text);
std::string serialize_config(const ExperimentConfig& cfg);
ExperimentConfig load_config_file(const std::string& path);

// The spec the config names: a built-in lookup, or sum_of_powers over the
// custom terms.
NonlinearitySpec resolve_nonlinearity(const ExperimentConfig& cfg);

}  // namespace nls
