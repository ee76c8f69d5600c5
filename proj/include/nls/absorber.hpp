#pragma once

#include "nls/grid.hpp"

namespace nls {

// Complex absorbing layer: a nonnegative damping profile W supported on the
// outer margin of the box, ramped polynomially per axis. Time stepping
// multiplies by exp(-W dt) once per step.
struct AbsorberSpec {
  bool enabled = false;
  double strength = 8.0;
  double start_fraction = 0.85;  // layer begins at start_fraction * L
  double power = 3.0;            // ramp exponent
};

Eigen::ArrayXXd absorber_profile(const Grid& g, const AbsorberSpec& a);

}  // namespace nls
