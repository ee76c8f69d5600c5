#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "nls/decay_fit.hpp"

using namespace nls;

namespace {

std::vector<double> log_spaced(double a, double b, int m) {
  std::vector<double> t(m);
  for (int i = 0; i < m; ++i) t[i] = a * std::pow(b / a, double(i) / (m - 1));
  return t;
}

}  // namespace

TEST_CASE("pure power data recovered exactly") {
  auto t = log_spaced(1.0, 1e3, 60);
  std::vector<double> v(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) v[i] = 3.7 * std::pow(1.0 + t[i], -0.5);
  auto fit = fit_decay(t, v, DecayModel::PurePower, 1.0, 1e3);
  CHECK(std::abs(fit.B - 0.5) < 1e-6);
  CHECK(std::abs(std::exp(fit.logC) - 3.7) < 1e-6);
  CHECK(fit.A == 0.0);
  CHECK(fit.rms_residual < 1e-12);
  CHECK(fit.b_halfwidth < 1e-9);
}

TEST_CASE("log-power data recovered with the log model") {
  auto t = log_spaced(10.0, 1e4, 200);
  std::vector<double> v(t.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    v[i] = std::log(2.0 + t[i]) * std::pow(1.0 + t[i], -0.75);
  auto fit = fit_decay(t, v, DecayModel::PowerWithLog, 10.0, 1e4);
  CHECK(std::abs(fit.B - 0.75) < 0.02);
  CHECK(std::abs(fit.A - 1.0) < 0.02);

  // the growing log factor drags the pure-power exponent down
  auto pure = fit_decay(t, v, DecayModel::PurePower, 10.0, 1e4);
  CHECK(pure.B < 0.75);
  CHECK(pure.rms_residual > fit.rms_residual);
}

TEST_CASE("fit window must span a decade and hold positive values") {
  auto t = log_spaced(1.0, 100.0, 30);
  std::vector<double> v(t.size(), 1.0);
  CHECK_THROWS_AS((void)fit_decay(t, v, DecayModel::PurePower, 5.0, 40.0),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)fit_decay(t, v, DecayModel::PurePower, 0.0, 100.0),
                  std::invalid_argument);
  v[10] = -1.0;
  CHECK_THROWS_AS((void)fit_decay(t, v, DecayModel::PurePower, 1.0, 100.0),
                  std::invalid_argument);
}

TEST_CASE("noise widens the reported confidence interval") {
  auto t = log_spaced(1.0, 1e3, 120);
  std::vector<double> clean(t.size()), noisy(t.size());
  unsigned state = 12345;
  auto unif = [&state]() {
    state = state * 1664525u + 1013904223u;
    return (state >> 8) * (1.0 / (1 << 24));
  };
  for (std::size_t i = 0; i < t.size(); ++i) {
    clean[i] = std::pow(1.0 + t[i], -1.0);
    noisy[i] = clean[i] * std::exp(0.05 * (unif() - 0.5));
  }
  auto f_clean = fit_decay(t, clean, DecayModel::PurePower, 1.0, 1e3);
  auto f_noisy = fit_decay(t, noisy, DecayModel::PurePower, 1.0, 1e3);
  CHECK(f_noisy.b_halfwidth > f_clean.b_halfwidth);
  CHECK(std::abs(f_noisy.B - 1.0) < 0.05);
}
