#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace avdoa {

// Real-input FFT of fixed length backed by FFTW. Owns its plans and aligned
// buffers, so one instance must not be shared between threads; create one
// per worker instead (plan creation is serialized internally).
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();

  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  RealFft(RealFft&& other) noexcept;
  RealFft& operator=(RealFft&& other) noexcept;

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  // `in` may be shorter than size(); it is zero-padded. `out` has bins() entries.
  void forward(std::span<const double> in, std::span<std::complex<double>> out);

  // Unnormalized inverse: out[n] = sum_k X[k] e^{+j 2 pi k n / N} over the
  // Hermitian-extended spectrum. `in` has bins() entries, `out` size().
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  void release();

  std::size_t n_ = 0;
  double* real_ = nullptr;
  void* spec_ = nullptr;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

std::size_t next_pow2(std::size_t n);

}  // namespace avdoa
