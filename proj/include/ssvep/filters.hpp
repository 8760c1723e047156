#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ssvep/types.hpp"

namespace ssvep {

// One normalized biquad stage (a0 == 1).
struct SosSection {
  double b0, b1, b2;
  double a1, a2;
};

// Butterworth band-pass as a cascade of second-order sections, applied
// forward-backward (zero phase) with odd-reflection padding of one
// filter-settling length at each end.
class ButterworthBandpass {
 public:
  // `order` is the analog prototype order (order 4 yields 8 poles).
  ButterworthBandpass(int order, double low_hz, double high_hz, double fs_hz);

  std::vector<double> filtfilt(std::span<const double> x) const;
  // Single forward pass from zero state (no padding); mostly for tests.
  std::vector<double> forward(std::span<const double> x) const;

  const std::vector<SosSection>& sections() const { return sections_; }
  std::size_t settle_samples() const { return settle_; }

 private:
  std::vector<SosSection> sections_;
  std::size_t settle_ = 0;
};

// Zero-phase band-pass of every trial/channel; defaults are the
// preprocessing band. Returns a filtered copy.
EpochSet bandpass_filter(const EpochSet& epochs, double low_hz = 4.0,
                         double high_hz = 25.0);

}  // namespace ssvep
