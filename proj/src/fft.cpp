#include "nls/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

#include "nls/check.hpp"

namespace nls {
namespace {

struct PlanPair {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

std::mutex plan_mutex;
std::map<int, PlanPair>& plan_cache() {
  static std::map<int, PlanPair> cache;
  return cache;
}

PlanPair get_plans(int n) {
  std::lock_guard<std::mutex> lock(plan_mutex);
  auto& cache = plan_cache();
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  Eigen::ArrayXXcd probe(n, n);
  auto* p = reinterpret_cast<fftw_complex*>(probe.data());
  PlanPair plans;
  unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  plans.fwd = fftw_plan_dft_2d(n, n, p, p, FFTW_FORWARD, flags);
  plans.bwd = fftw_plan_dft_2d(n, n, p, p, FFTW_BACKWARD, flags);
  ensure(plans.fwd && plans.bwd, "fftw plan creation failed");
  cache[n] = plans;
  return plans;
}

}  // namespace

void fft2(Eigen::ArrayXXcd& a) {
  require(a.rows() == a.cols() && a.rows() > 0, "fft2 expects square array");
  auto plans = get_plans(static_cast<int>(a.rows()));
  auto* p = reinterpret_cast<fftw_complex*>(a.data());
  fftw_execute_dft(plans.fwd, p, p);
}

void ifft2(Eigen::ArrayXXcd& a) {
  require(a.rows() == a.cols() && a.rows() > 0, "ifft2 expects square array");
  auto plans = get_plans(static_cast<int>(a.rows()));
  auto* p = reinterpret_cast<fftw_complex*>(a.data());
  fftw_execute_dft(plans.bwd, p, p);
  a /= static_cast<double>(a.rows() * a.cols());
}

Eigen::ArrayXXcd fft2_copy(const Eigen::ArrayXXcd& a) {
  Eigen::ArrayXXcd out = a;
  fft2(out);
  return out;
}

Eigen::ArrayXXcd ifft2_copy(const Eigen::ArrayXXcd& a) {
  Eigen::ArrayXXcd out = a;
  ifft2(out);
  return out;
}

}  // namespace nls
