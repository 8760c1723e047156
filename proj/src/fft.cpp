#include "ssvep/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <unordered_map>

#include "ssvep/errors.hpp"

namespace ssvep::fft {
namespace {

// FFTW plan creation is not thread-safe; execution via the new-array
// interface is. Plans are cached per size and reused on caller-owned
// fftw_malloc'd buffers (same alignment class as the planning buffers).
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

fftw_plan forward_plan(std::size_t n) {
  static std::unordered_map<std::size_t, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(plan_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  double* in = fftw_alloc_real(n);
  fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
  fftw_plan p = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
  fftw_free(in);
  fftw_free(out);
  cache.emplace(n, p);
  return p;
}

fftw_plan inverse_plan(std::size_t n) {
  static std::unordered_map<std::size_t, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(plan_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  fftw_complex* in = fftw_alloc_complex(n / 2 + 1);
  double* out = fftw_alloc_real(n);
  fftw_plan p = fftw_plan_dft_c2r_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
  fftw_free(in);
  fftw_free(out);
  cache.emplace(n, p);
  return p;
}

}  // namespace

std::vector<std::complex<double>> rfft(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) throw LengthError("rfft: empty input");
  fftw_plan plan = forward_plan(n);

  double* in = fftw_alloc_real(n);
  fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
  for (std::size_t i = 0; i < n; ++i) in[i] = x[i];
  fftw_execute_dft_r2c(plan, in, out);

  std::vector<std::complex<double>> result(n / 2 + 1);
  for (std::size_t i = 0; i < result.size(); ++i) {
    result[i] = {out[i][0], out[i][1]};
  }
  fftw_free(in);
  fftw_free(out);
  return result;
}

std::vector<double> irfft(std::span<const std::complex<double>> spec, std::size_t n) {
  if (n == 0) throw LengthError("irfft: empty output requested");
  if (spec.size() != n / 2 + 1) {
    throw ShapeError("irfft: spectrum size must be n/2+1");
  }
  fftw_plan plan = inverse_plan(n);

  fftw_complex* in = fftw_alloc_complex(n / 2 + 1);
  double* out = fftw_alloc_real(n);
  for (std::size_t i = 0; i < spec.size(); ++i) {
    in[i][0] = spec[i].real();
    in[i][1] = spec[i].imag();
  }
  fftw_execute_dft_c2r(plan, in, out);

  std::vector<double> result(n);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) result[i] = out[i] * scale;
  fftw_free(in);
  fftw_free(out);
  return result;
}

}  // namespace ssvep::fft
