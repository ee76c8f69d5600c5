#pragma once

#include <cmath>
#include <string>
#include <vector>

namespace nls {

// Least-squares fit of a decaying positive series against
//   value(t) = C * log(2+t)^A / (1+t)^B
// on log-transformed data. The pure-power model drops the log regressor.
enum class DecayModel { PurePower, PowerWithLog };

struct FitResult {
  double B = 0.0;            // algebraic decay exponent
  double A = 0.0;            // log-power exponent (0 for pure-power fits)
  double logC = 0.0;
  double b_halfwidth = 0.0;  // ~95% confidence half-width on B
  double rms_residual = 0.0; // of log values
  double t_min = 0.0;
  double t_max = 0.0;
  int n_points = 0;
  bool with_log = false;
};

// Fits on samples with t in [t_min, t_max]. The window must span at least a
// decade (t_max >= 10 t_min > 0) and the series must be positive there.
FitResult fit_decay(const std::vector<double>& t, const std::vector<double>& value,
                    DecayModel model, double t_min, double t_max);

// One measured decay probe: sampled norms, both fits, and the prediction
// the measurement is compared against.
struct DecayRecord {
  std::string probe;
  std::vector<double> t;
  std::vector<double> value;
  FitResult fit_pure;
  FitResult fit_log;
  double predicted_B = std::nan("");
  double predicted_A = std::nan("");
  double t_valid = std::nan("");  // estimated start of boundary contamination
  bool valid = true;
  std::string note;
};

void write_decay_csv(const std::string& path, const DecayRecord& rec);

}  // namespace nls
