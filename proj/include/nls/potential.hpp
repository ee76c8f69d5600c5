#pragma once

#include <string>

#include "nls/grid.hpp"

namespace nls {

// External potential with a numerically certified polynomial decay bound
// |V(x)| <= c_decay <x>^(-rho), rho > 3.
struct Potential {
  GridPtr grid;
  Eigen::ArrayXXd v;
  std::string kind;
  double depth = 0.0;
  double width = 0.0;
  double rho = 0.0;
  double c_decay = 0.0;
};

// Kinds: "gaussian-well" V = -depth exp(-|x|^2 / width^2),
// "compact-bump" V = -depth cos^2(pi |x| / (2 width)) on |x| < width,
// "zero" V = 0 (free flow experiments only; binds nothing).
Potential build_potential(const std::string& kind, double depth, double width,
                          const GridPtr& g);

}  // namespace nls
