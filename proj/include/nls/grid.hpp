#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <memory>
#include <string>

namespace nls {

// Uniform periodic grid on [-L, L)^2. Wavenumbers per axis are the
// integer multiples (pi/L) * {-n/2, ..., n/2 - 1} in FFT storage order,
// with the Nyquist mode appearing once.
struct Grid {
  int n = 0;
  double L = 0.0;
  double dx = 0.0;
  Eigen::ArrayXd x;    // node coordinates, x[i] = -L + i dx
  Eigen::ArrayXd k;    // axis wavenumbers in FFT order
  Eigen::ArrayXXd k2;  // |k|^2 at mode (i, j)
  Eigen::ArrayXXd r2;  // |x|^2 at node (i, j)

  static std::shared_ptr<const Grid> make(int n, double L);
};

using GridPtr = std::shared_ptr<const Grid>;

// Complex scalar field sampled on a grid; v(i, j) = f(x[i], x[j]).
struct ComplexField {
  GridPtr grid;
  Eigen::ArrayXXcd v;

  ComplexField() = default;
  explicit ComplexField(GridPtr g)
      : grid(std::move(g)), v(Eigen::ArrayXXcd::Zero(grid->n, grid->n)) {}
  ComplexField(GridPtr g, Eigen::ArrayXXcd values)
      : grid(std::move(g)), v(std::move(values)) {}
};

ComplexField make_field(const GridPtr& g,
                        const std::function<std::complex<double>(double, double)>& f);

void check_compatible(const ComplexField& a, const ComplexField& b);
bool all_finite(const ComplexField& f);

// Spectral Laplacian.
ComplexField laplacian(const ComplexField& f);

// L^p norm with the dx^2 cell measure; p in [1, inf], p = inf is the max
// of |f| over nodes.
double norm_lp(const ComplexField& f, double p);

// || <x>^sigma f ||_L2 with <x> = sqrt(1 + |x|^2) at the raw (untranslated)
// node coordinates. sigma may be negative.
double norm_weighted_l2(const ComplexField& f, double sigma);

// Spectral Sobolev norm || (1 + |k|^2)^(s/2) f^ ||, s in {0, 1, 2}.
double norm_sobolev(const ComplexField& f, int s);

// Real L2 pairing Re sum conj(f) g dx^2.
double inner_real(const ComplexField& f, const ComplexField& g);

// Complex L2 inner product sum conj(f) g dx^2.
std::complex<double> inner(const ComplexField& f, const ComplexField& g);

// Flat binary snapshot: n, L, then n^2 complex samples as interleaved
// re/im pairs, all little-endian 64-bit floats, column index i fastest.
void write_snapshot(const std::string& path, const ComplexField& f);
ComplexField read_snapshot(const std::string& path);

}  // namespace nls
