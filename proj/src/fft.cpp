#include "avdoa/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <mutex>
#include <utility>

#include "avdoa/error.hpp"

namespace avdoa {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  require(n >= 2 && n % 2 == 0, ErrorCode::InvalidArgument, "FFT length must be even and >= 2");
  real_ = fftw_alloc_real(n_);
  auto* spec = fftw_alloc_complex(bins());
  spec_ = spec;
  std::lock_guard lock(planner_mutex());
  forward_plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n_), real_, spec, FFTW_ESTIMATE);
  // c2r destroys its input, which is our scratch copy.
  inverse_plan_ = fftw_plan_dft_c2r_1d(static_cast<int>(n_), spec, real_, FFTW_ESTIMATE);
}

RealFft::~RealFft() { release(); }

RealFft::RealFft(RealFft&& other) noexcept
    : n_(std::exchange(other.n_, 0)),
      real_(std::exchange(other.real_, nullptr)),
      spec_(std::exchange(other.spec_, nullptr)),
      forward_plan_(std::exchange(other.forward_plan_, nullptr)),
      inverse_plan_(std::exchange(other.inverse_plan_, nullptr)) {}

RealFft& RealFft::operator=(RealFft&& other) noexcept {
  if (this != &other) {
    release();
    n_ = std::exchange(other.n_, 0);
    real_ = std::exchange(other.real_, nullptr);
    spec_ = std::exchange(other.spec_, nullptr);
    forward_plan_ = std::exchange(other.forward_plan_, nullptr);
    inverse_plan_ = std::exchange(other.inverse_plan_, nullptr);
  }
  return *this;
}

void RealFft::release() {
  std::lock_guard lock(planner_mutex());
  if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (inverse_plan_) fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
  if (real_) fftw_free(real_);
  if (spec_) fftw_free(spec_);
  forward_plan_ = inverse_plan_ = nullptr;
  real_ = nullptr;
  spec_ = nullptr;
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  require(in.size() <= n_, ErrorCode::InvalidArgument, "FFT input longer than FFT length");
  require(out.size() == bins(), ErrorCode::ShapeMismatch, "FFT output size");
  std::copy(in.begin(), in.end(), real_);
  std::fill(real_ + in.size(), real_ + n_, 0.0);
  fftw_execute(static_cast<fftw_plan>(forward_plan_));
  std::memcpy(out.data(), spec_, bins() * sizeof(fftw_complex));
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  require(in.size() == bins(), ErrorCode::ShapeMismatch, "inverse FFT input size");
  require(out.size() == n_, ErrorCode::ShapeMismatch, "inverse FFT output size");
  std::memcpy(spec_, in.data(), bins() * sizeof(fftw_complex));
  fftw_execute(static_cast<fftw_plan>(inverse_plan_));
  std::copy(real_, real_ + n_, out.begin());
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace avdoa
