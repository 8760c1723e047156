#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace ssvep::fft {

// One-sided real FFT: n real samples -> n/2+1 complex bins. Thread-safe.
std::vector<std::complex<double>> rfft(std::span<const double> x);

// Inverse of rfft for an n-sample real signal (output scaled by 1/n).
std::vector<double> irfft(std::span<const std::complex<double>> spec, std::size_t n);

}  // namespace ssvep::fft
