#include "nls/grid.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <vector>

#include "nls/check.hpp"
#include "nls/fft.hpp"

static_assert(std::endian::native == std::endian::little,
              "snapshot format assumes a little-endian host");

namespace nls {

std::shared_ptr<const Grid> Grid::make(int n, double L) {
  require(n >= 8, "grid size must be at least 8");
  require(n % 2 == 0, "grid size must be even");
  require(std::isfinite(L) && L > 0.0, "grid half-length must be positive and finite");

  auto g = std::make_shared<Grid>();
  g->n = n;
  g->L = L;
  g->dx = 2.0 * L / n;
  g->x = Eigen::ArrayXd(n);
  g->k = Eigen::ArrayXd(n);
  const double dk = M_PI / L;
  for (int i = 0; i < n; ++i) {
    g->x[i] = -L + i * g->dx;
    int m = (i < n / 2) ? i : i - n;
    g->k[i] = dk * m;
  }
  g->k2 = Eigen::ArrayXXd(n, n);
  g->r2 = Eigen::ArrayXXd(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      g->k2(i, j) = g->k[i] * g->k[i] + g->k[j] * g->k[j];
      g->r2(i, j) = g->x[i] * g->x[i] + g->x[j] * g->x[j];
    }
  return g;
}

ComplexField make_field(const GridPtr& g,
                        const std::function<std::complex<double>(double, double)>& f) {
  ComplexField out(g);
  for (int j = 0; j < g->n; ++j)
    for (int i = 0; i < g->n; ++i) out.v(i, j) = f(g->x[i], g->x[j]);
  return out;
}

void check_compatible(const ComplexField& a, const ComplexField& b) {
  require(a.grid && b.grid, "field without grid");
  require(a.grid->n == b.grid->n && a.grid->L == b.grid->L,
          "fields live on different grids");
}

bool all_finite(const ComplexField& f) {
  return f.v.real().isFinite().all() && f.v.imag().isFinite().all();
}

ComplexField laplacian(const ComplexField& f) {
  require(f.grid != nullptr, "field without grid");
  ComplexField out = f;
  fft2(out.v);
  out.v *= -f.grid->k2;
  ifft2(out.v);
  return out;
}

double norm_lp(const ComplexField& f, double p) {
  require(f.grid != nullptr, "field without grid");
  require(p >= 1.0, "lp norm needs p >= 1");
  if (std::isinf(p)) return f.v.abs().maxCoeff();
  const double cell = f.grid->dx * f.grid->dx;
  if (p == 2.0) return std::sqrt(f.v.abs2().sum() * cell);
  return std::pow((f.v.abs().pow(p)).sum() * cell, 1.0 / p);
}

double norm_weighted_l2(const ComplexField& f, double sigma) {
  require(f.grid != nullptr, "field without grid");
  const double cell = f.grid->dx * f.grid->dx;
  Eigen::ArrayXXd w = (1.0 + f.grid->r2).pow(sigma);  // <x>^(2 sigma)
  return std::sqrt((w * f.v.abs2()).sum() * cell);
}

double norm_sobolev(const ComplexField& f, int s) {
  require(f.grid != nullptr, "field without grid");
  require(s == 0 || s == 1 || s == 2, "sobolev order must be 0, 1, or 2");
  Eigen::ArrayXXcd fh = fft2_copy(f.v);
  const int n = f.grid->n;
  const double scale = (f.grid->dx * f.grid->dx) / (static_cast<double>(n) * n);
  Eigen::ArrayXXd sym = (1.0 + f.grid->k2);
  if (s == 0) sym.setOnes();
  if (s == 2) sym *= (1.0 + f.grid->k2);
  return std::sqrt((sym * fh.abs2()).sum() * scale);
}

double inner_real(const ComplexField& f, const ComplexField& g) {
  check_compatible(f, g);
  const double cell = f.grid->dx * f.grid->dx;
  return ((f.v.real() * g.v.real() + f.v.imag() * g.v.imag()).sum()) * cell;
}

std::complex<double> inner(const ComplexField& f, const ComplexField& g) {
  check_compatible(f, g);
  const double cell = f.grid->dx * f.grid->dx;
  return (f.v.conjugate() * g.v).sum() * cell;
}

void write_snapshot(const std::string& path, const ComplexField& f) {
  require(f.grid != nullptr, "field without grid");
  ensure(all_finite(f), "refusing to write non-finite field");
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  ensure(fp != nullptr, "cannot open snapshot for writing: " + path);
  double header[2] = {static_cast<double>(f.grid->n), f.grid->L};
  std::size_t nw = std::fwrite(header, sizeof(double), 2, fp);
  const auto* data = reinterpret_cast<const double*>(f.v.data());
  nw += std::fwrite(data, sizeof(double), 2u * f.v.size(), fp);
  std::fclose(fp);
  ensure(nw == 2u + 2u * f.v.size(), "short write on snapshot: " + path);
}

ComplexField read_snapshot(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  ensure(fp != nullptr, "cannot open snapshot: " + path);
  double header[2];
  if (std::fread(header, sizeof(double), 2, fp) != 2) {
    std::fclose(fp);
    ensure(false, "truncated snapshot header: " + path);
  }
  const double nd = header[0];
  if (!(nd >= 8 && nd == std::floor(nd) && nd <= (1 << 24))) {
    std::fclose(fp);
    ensure(false, "snapshot header carries an invalid grid size: " + path);
  }
  const int n = static_cast<int>(nd);
  if (n % 2 != 0 || !std::isfinite(header[1]) || header[1] <= 0) {
    std::fclose(fp);
    ensure(false, "snapshot header fails grid validation: " + path);
  }
  GridPtr g;
  try {
    g = Grid::make(n, header[1]);
  } catch (const std::exception&) {
    std::fclose(fp);
    throw std::runtime_error("snapshot header fails grid validation: " + path);
  }
  ComplexField f(g);
  auto* data = reinterpret_cast<double*>(f.v.data());
  std::size_t want = 2u * f.v.size();
  std::size_t got = std::fread(data, sizeof(double), want, fp);
  std::fclose(fp);
  ensure(got == want, "truncated snapshot payload: " + path);
  ensure(all_finite(f), "snapshot payload is not finite: " + path);
  return f;
}

}  // namespace nls
