#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace oracle {

std::vector<std::complex<double>> fft(std::vector<std::complex<double>> x) {
  const std::size_t n = x.size();
  if (n == 1) return x;
  std::vector<std::complex<double>> even(n / 2), odd(n / 2);
  for (std::size_t i = 0; i < n / 2; ++i) {
    even[i] = x[2 * i];
    odd[i] = x[2 * i + 1];
  }
  even = fft(std::move(even));
  odd = fft(std::move(odd));
  for (std::size_t k = 0; k < n / 2; ++k) {
    const auto t = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n)) * odd[k];
    x[k] = even[k] + t;
    x[k + n / 2] = even[k] - t;
  }
  return x;
}

namespace {

std::vector<std::complex<double>> spectrum(std::span<const double> s, std::size_t n) {
  std::vector<std::complex<double>> x(n);
  for (std::size_t i = 0; i < s.size(); ++i) x[i] = s[i];
  return fft(std::move(x));
}

}  // namespace

std::vector<double> gcc_phat(std::span<const double> l, std::span<const double> p, int lag_min, int lag_max,
                             std::size_t fft_len) {
  const auto sl = spectrum(l, fft_len);
  const auto sp = spectrum(p, fft_len);
  std::vector<std::complex<double>> phat(fft_len);
  std::size_t used = 0;
  for (std::size_t k = 0; k < fft_len; ++k) {
    const auto c = sl[k] * std::conj(sp[k]);
    if (std::abs(c) < 1e-12) continue;
    phat[k] = c / std::abs(c);
    ++used;
  }
  std::vector<double> out;
  for (int tau = lag_min; tau <= lag_max; ++tau) {
    double acc = 0.0;
    for (std::size_t k = 0; k < fft_len; ++k) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) * tau / static_cast<double>(fft_len);
      acc += (phat[k] * std::polar(1.0, angle)).real();
    }
    out.push_back(used ? acc / static_cast<double>(used) : 0.0);
  }
  return out;
}

std::vector<double> phat_xcorr_time_domain(std::span<const double> l, std::span<const double> p, int lag_min,
                                           int lag_max, std::size_t fft_len) {
  // Whiten each channel (unit magnitude spectrum), go back to the time domain
  // with the conjugate trick, then correlate sample by sample.
  auto whiten = [&](std::span<const double> s) {
    auto x = spectrum(s, fft_len);
    for (auto& c : x) c = std::abs(c) < 1e-300 ? 0.0 : c / std::abs(c);
    for (auto& c : x) c = std::conj(c);
    x = fft(std::move(x));
    std::vector<double> t(fft_len);
    for (std::size_t i = 0; i < fft_len; ++i) t[i] = x[i].real() / static_cast<double>(fft_len);
    return t;
  };
  const auto wl = whiten(l);
  const auto wp = whiten(p);
  const auto n = static_cast<long>(fft_len);
  std::vector<double> out;
  for (int tau = lag_min; tau <= lag_max; ++tau) {
    // r[tau] = sum_n wl[n + tau] wp[n]: peaks where l leads p's copy by tau.
    double acc = 0.0;
    for (long i = 0; i < n; ++i) acc += wl[static_cast<std::size_t>(((i + tau) % n + n) % n)] * wp[static_cast<std::size_t>(i)];
    out.push_back(acc);
  }
  return out;
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

double circular_distance(double a, double b) {
  const double d = std::fmod(std::fabs(a - b), 360.0);
  return std::min(d, 360.0 - d);
}

std::vector<double> numeric_gradient(const std::function<double()>& f, std::span<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    auto at = [&](double offset) {
      x[i] = keep + offset;
      return f();
    };
    // Fourth-order central stencil.
    const double f1 = at(h), f_1 = at(-h), f2 = at(2 * h), f_2 = at(-2 * h);
    x[i] = keep;
    g[i] = (8.0 * (f1 - f_1) - (f2 - f_2)) / (12.0 * h);
  }
  return g;
}

double max_relative_error(std::span<const double> analytic, std::span<const double> numeric, double floor) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::fabs(analytic[i]), std::fabs(numeric[i]), floor});
    worst = std::max(worst, std::fabs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

double best_pair_error(double p0, double p1, double g0, double g1) {
  const double straight = circular_distance(p0, g0) + circular_distance(p1, g1);
  const double crossed = circular_distance(p0, g1) + circular_distance(p1, g0);
  return std::min(straight, crossed);
}

}  // namespace oracle
