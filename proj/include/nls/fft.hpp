#pragma once

#include <Eigen/Dense>
#include <complex>

namespace nls {

// 2D complex FFT on n x n arrays backed by FFTW. Forward is unnormalized,
// inverse carries the 1/n^2 factor. Plans are cached per size and created
// with FFTW_ESTIMATE so results are identical from run to run.
void fft2(Eigen::ArrayXXcd& a);
void ifft2(Eigen::ArrayXXcd& a);

Eigen::ArrayXXcd fft2_copy(const Eigen::ArrayXXcd& a);
Eigen::ArrayXXcd ifft2_copy(const Eigen::ArrayXXcd& a);

}  // namespace nls
