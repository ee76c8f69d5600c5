#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <vector>

#include "nls/fft.hpp"
#include "nls/grid.hpp"
#include "nls/rng.hpp"

using namespace nls;
using cd = std::complex<double>;

namespace {

// Independent oracle: 1D radial Simpson quadrature of a radial integrand
// over [0, R], with the 2 pi r area factor.
double radial_quadrature(const std::function<double(double)>& f, double R, int m) {
  double h = R / m;
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    double a = i * h, b = a + h, c = 0.5 * (a + b);
    acc += (h / 6.0) * (f(a) * a + 4.0 * f(c) * c + f(b) * b);
  }
  return 2.0 * M_PI * acc;
}

ComplexField unit_gaussian(const GridPtr& g) {
  return make_field(g, [](double x, double y) {
    return cd(std::exp(-0.5 * (x * x + y * y)), 0.0);
  });
}

}  // namespace

TEST_CASE("grid construction validates") {
  CHECK_THROWS_AS((void)Grid::make(99, 12.0), std::invalid_argument);
  CHECK_THROWS_AS((void)Grid::make(4, 12.0), std::invalid_argument);
  CHECK_THROWS_AS((void)Grid::make(128, 0.0), std::invalid_argument);
  CHECK_THROWS_AS((void)Grid::make(128, -3.0), std::invalid_argument);
  CHECK_NOTHROW((void)Grid::make(8, 1.0));
  CHECK_NOTHROW((void)Grid::make(48, 12.0));
}

TEST_CASE("wavenumber layout is symmetric with one nyquist mode") {
  auto g = Grid::make(16, 4.0);
  const double dk = M_PI / 4.0;
  CHECK(g->k[0] == 0.0);
  CHECK(g->k[1] == doctest::Approx(dk).epsilon(1e-15));
  CHECK(g->k[8] == doctest::Approx(-8 * dk).epsilon(1e-15));
  CHECK(g->k[15] == doctest::Approx(-dk).epsilon(1e-15));
  double kmin = g->k.minCoeff(), kmax = g->k.maxCoeff();
  CHECK(kmin == doctest::Approx(-8 * dk));
  CHECK(kmax == doctest::Approx(7 * dk));
  CHECK(g->dx * g->n == doctest::Approx(2 * g->L));
}

TEST_CASE("fft roundtrip and parseval") {
  auto g = Grid::make(64, 8.0);
  Rng rng(11);
  ComplexField f(g);
  for (int j = 0; j < g->n; ++j)
    for (int i = 0; i < g->n; ++i) f.v(i, j) = cd(rng.gaussian(), rng.gaussian());

  Eigen::ArrayXXcd a = f.v;
  fft2(a);
  double sum_phys = f.v.abs2().sum();
  double sum_spec = a.abs2().sum() / (g->n * g->n);
  CHECK(sum_spec == doctest::Approx(sum_phys).epsilon(1e-13));
  ifft2(a);
  CHECK((a - f.v).abs().maxCoeff() < 1e-13);
}

TEST_CASE("gaussian norms match closed forms") {
  auto g = Grid::make(128, 12.0);
  auto f = unit_gaussian(g);
  CHECK(norm_lp(f, 2.0) == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-12));
  CHECK(norm_lp(f, 1.0) == doctest::Approx(2.0 * M_PI).epsilon(1e-12));
  CHECK(norm_lp(f, 4.0) ==
        doctest::Approx(std::pow(M_PI / 2.0, 0.25)).epsilon(1e-12));
  CHECK(norm_lp(f, std::numeric_limits<double>::infinity()) ==
        doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS((void)norm_lp(f, 0.5), std::invalid_argument);
}

TEST_CASE("weighted norms match radial quadrature oracle") {
  auto g = Grid::make(128, 12.0);
  auto f = unit_gaussian(g);

  // sigma = 2: closed form sqrt(5 pi)
  double oracle2 = radial_quadrature(
      [](double r) { return std::pow(1.0 + r * r, 2.0) * std::exp(-r * r); }, 40.0,
      40000);
  CHECK(std::sqrt(oracle2) == doctest::Approx(std::sqrt(5.0 * M_PI)).epsilon(1e-12));
  CHECK(norm_weighted_l2(f, 2.0) == doctest::Approx(std::sqrt(oracle2)).epsilon(1e-10));

  // sigma = -2 (decay side): quadrature only
  double oracle_m2 = radial_quadrature(
      [](double r) { return std::pow(1.0 + r * r, -2.0) * std::exp(-r * r); }, 40.0,
      40000);
  CHECK(norm_weighted_l2(f, -2.0) ==
        doctest::Approx(std::sqrt(oracle_m2)).epsilon(1e-10));

  // sigma = 0 reduces to L2
  CHECK(norm_weighted_l2(f, 0.0) == doctest::Approx(norm_lp(f, 2.0)).epsilon(1e-14));
}

TEST_CASE("weight uses raw untranslated coordinates") {
  auto g = Grid::make(64, 8.0);
  ComplexField delta_origin(g), delta_off(g);
  delta_origin.v(0, 0) = 1.0;  // node at (-L, -L)
  int i0 = g->n / 2;           // node at (0, 0)
  delta_off.v(i0, i0) = 1.0;
  double w_origin = norm_weighted_l2(delta_origin, 1.0);
  double w_center = norm_weighted_l2(delta_off, 1.0);
  CHECK(w_origin / w_center == doctest::Approx(std::sqrt(1.0 + 2.0 * g->L * g->L)));
}

TEST_CASE("sobolev norms of the gaussian") {
  auto g = Grid::make(128, 12.0);
  auto f = unit_gaussian(g);
  CHECK(norm_sobolev(f, 0) == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-12));
  CHECK(norm_sobolev(f, 1) == doctest::Approx(std::sqrt(2.0 * M_PI)).epsilon(1e-12));
  CHECK(norm_sobolev(f, 2) == doctest::Approx(std::sqrt(5.0 * M_PI)).epsilon(1e-12));
  CHECK_THROWS_AS((void)norm_sobolev(f, 3), std::invalid_argument);
}

TEST_CASE("laplacian matches closed form on gaussian and plane wave") {
  auto g = Grid::make(128, 12.0);
  auto f = unit_gaussian(g);
  auto lap = laplacian(f);
  auto exact = make_field(g, [](double x, double y) {
    double r2 = x * x + y * y;
    return cd((r2 - 2.0) * std::exp(-0.5 * r2), 0.0);
  });
  CHECK((lap.v - exact.v).abs().maxCoeff() < 1e-10);

  const double k1 = 3.0 * M_PI / g->L;
  auto wave = make_field(g, [&](double x, double) { return std::exp(cd(0, k1 * x)); });
  auto lw = laplacian(wave);
  CHECK((lw.v + k1 * k1 * wave.v).abs().maxCoeff() < 1e-9);
}

TEST_CASE("inner products match a naive sum oracle") {
  auto g = Grid::make(32, 5.0);
  Rng rng(42);
  ComplexField f(g), h(g);
  for (int j = 0; j < g->n; ++j)
    for (int i = 0; i < g->n; ++i) {
      f.v(i, j) = cd(rng.gaussian(), rng.gaussian());
      h.v(i, j) = cd(rng.gaussian(), rng.gaussian());
    }
  cd naive = 0.0;
  for (int j = 0; j < g->n; ++j)
    for (int i = 0; i < g->n; ++i) naive += std::conj(f.v(i, j)) * h.v(i, j);
  naive *= g->dx * g->dx;

  CHECK(std::abs(inner(f, h) - naive) < 1e-12 * std::abs(naive));
  CHECK(inner_real(f, h) == doctest::Approx(naive.real()).epsilon(1e-12));
  CHECK(inner_real(f, h) == doctest::Approx(inner_real(h, f)).epsilon(1e-13));

  // real-bilinearity: <f, g + c h> with real c
  ComplexField sum(g);
  sum.v = h.v + 2.5 * f.v;
  CHECK(inner_real(f, sum) ==
        doctest::Approx(inner_real(f, h) + 2.5 * inner_real(f, f)).epsilon(1e-12));

  // Re<f, i f> = 0
  ComplexField rot(g);
  rot.v = cd(0, 1) * f.v;
  CHECK(std::abs(inner_real(f, rot)) < 1e-12 * inner_real(f, f));
}

TEST_CASE("snapshot io roundtrips and validates") {
  auto g = Grid::make(32, 6.0);
  Rng rng(3);
  ComplexField f(g);
  for (int j = 0; j < g->n; ++j)
    for (int i = 0; i < g->n; ++i) f.v(i, j) = cd(rng.gaussian(), rng.gaussian());

  std::string path = "snapshot_test.fld";
  write_snapshot(path, f);
  auto f2 = read_snapshot(path);
  CHECK(f2.grid->n == g->n);
  CHECK(f2.grid->L == g->L);
  CHECK((f2.v - f.v).abs().maxCoeff() == 0.0);

  // byte-identical on rewrite
  write_snapshot("snapshot_test2.fld", f);
  std::ifstream a(path, std::ios::binary), b("snapshot_test2.fld", std::ios::binary);
  std::vector<char> ba((std::istreambuf_iterator<char>(a)), {});
  std::vector<char> bb((std::istreambuf_iterator<char>(b)), {});
  CHECK(ba == bb);

  // corrupted header rejected
  {
    std::FILE* fp = std::fopen("snapshot_bad.fld", "wb");
    double hdr[2] = {17.0, 6.0};  // odd size is invalid
    std::fwrite(hdr, sizeof(double), 2, fp);
    std::fclose(fp);
  }
  CHECK_THROWS_AS((void)read_snapshot("snapshot_bad.fld"), std::runtime_error);

  // truncated payload rejected
  {
    std::FILE* fp = std::fopen("snapshot_short.fld", "wb");
    double hdr[2] = {32.0, 6.0};
    std::fwrite(hdr, sizeof(double), 2, fp);
    double x = 1.0;
    std::fwrite(&x, sizeof(double), 1, fp);
    std::fclose(fp);
  }
  CHECK_THROWS_AS((void)read_snapshot("snapshot_short.fld"), std::runtime_error);
  std::remove(path.c_str());
  std::remove("snapshot_test2.fld");
  std::remove("snapshot_bad.fld");
  std::remove("snapshot_short.fld");
}

TEST_CASE("rng stream is stable") {
  Rng rng(123);
  // frozen first draws of the deterministic stream
  CHECK(rng.next_u64() == 0xb4dc9bd462de412bULL);
  Rng r2(123);
  double u = r2.uniform();
  CHECK(u == doctest::Approx(0.7064912217637067).epsilon(1e-15));
  double s = 0.0;
  Rng r3(7);
  for (int i = 0; i < 20000; ++i) s += r3.gaussian();
  CHECK(std::abs(s) / 20000.0 < 0.02);
}
