#include "nls/potential.hpp"

#include <cmath>

#include "nls/absorber.hpp"
#include "nls/check.hpp"

namespace nls {

Potential build_potential(const std::string& kind, double depth, double width,
                          const GridPtr& g) {
  require(g != nullptr, "potential needs a grid");
  Potential p;
  p.grid = g;
  p.kind = kind;
  p.depth = depth;
  p.width = width;
  p.rho = 4.0;

  if (kind == "zero") {
    p.v = Eigen::ArrayXXd::Zero(g->n, g->n);
    p.c_decay = 0.0;
    return p;
  }
  require(std::isfinite(depth) && depth >= 0.0, "well depth must be nonnegative");
  require(std::isfinite(width) && width > 0.0 && width <= g->L / 3.0,
          "well width must lie in (0, L/3]");

  if (kind == "gaussian-well") {
    p.v = -depth * (-g->r2 / (width * width)).exp();
  } else if (kind == "compact-bump") {
    p.v = Eigen::ArrayXXd::Zero(g->n, g->n);
    for (int j = 0; j < g->n; ++j)
      for (int i = 0; i < g->n; ++i) {
        double r = std::sqrt(g->r2(i, j));
        if (r < width) {
          double c = std::cos(M_PI * r / (2.0 * width));
          p.v(i, j) = -depth * c * c;
        }
      }
  } else {
    require(false, "unknown potential kind: " + kind);
  }

  p.c_decay = ((1.0 + g->r2).pow(p.rho / 2.0) * p.v.abs()).maxCoeff();
  ensure(std::isfinite(p.c_decay), "potential decay certificate is not finite");
  return p;
}

Eigen::ArrayXXd absorber_profile(const Grid& g, const AbsorberSpec& a) {
  Eigen::ArrayXXd w = Eigen::ArrayXXd::Zero(g.n, g.n);
  if (!a.enabled) return w;
  require(a.strength > 0.0 && a.start_fraction > 0.0 && a.start_fraction < 1.0 &&
              a.power >= 1.0,
          "bad absorber parameters");
  const double x0 = a.start_fraction * g.L;
  auto ramp = [&](double c) {
    double s = (std::abs(c) - x0) / (g.L - x0);
    return s > 0.0 ? std::pow(s, a.power) : 0.0;
  };
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i)
      w(i, j) = a.strength * (ramp(g.x[i]) + ramp(g.x[j]));
  return w;
}

}  // namespace nls
