#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ssvep/types.hpp"

namespace ssvep {

// The ten per-channel features, in their fixed serialization order.
constexpr std::array<const char*, 10> kFeatureNames = {
    "peak_freq", "total_psd", "theta_psd", "alpha_psd", "beta_psd",
    "mean",      "std",       "skew",      "max",       "min"};
constexpr std::size_t kFeaturesPerChannel = 10;

struct FeatureSpec {
  double theta_lo_hz = 4.0, theta_hi_hz = 8.0;
  double alpha_lo_hz = 8.0, alpha_hi_hz = 12.0;
  double beta_lo_hz = 12.0, beta_hi_hz = 30.0;
  // peak_freq search and total_psd integration are both bounded to this
  // range (the union of the defined bands).
  double search_lo_hz = 4.0, search_hi_hz = 30.0;
  double psd_segment_s = 1.0;   // Welch segment (or the full signal if shorter)
  double psd_overlap = 0.5;     // fraction
  std::string taper = "hann";

  void validate() const;
};

// channel-major index mapping: feature j of channel c lives at 10*c + j.
struct FeatureLayout {
  std::vector<std::string> channels;

  std::size_t size() const { return channels.size() * kFeaturesPerChannel; }
  std::size_t index(std::size_t channel, std::size_t feature) const {
    return channel * kFeaturesPerChannel + feature;
  }
  std::pair<std::size_t, std::size_t> split(std::size_t index) const {
    return {index / kFeaturesPerChannel, index % kFeaturesPerChannel};
  }
  // e.g. "PO6_alpha_psd"
  std::string name(std::size_t index) const;
};

struct FeatureVector {
  std::vector<double> values;            // n_channels * 10, channel-major
  std::vector<std::uint8_t> degenerate;  // per-channel zero-variance flag
  int label = -1;                        // -1 when unlabeled
};

// Rows are feature vectors of consecutive, equal-length sub-segments.
struct FeatureSequence {
  std::vector<FeatureVector> rows;
  double segment_s = 0.0;
  int label = -1;
};

struct Psd {
  std::vector<double> freqs_hz;
  std::vector<double> power;  // one-sided density, units^2 / Hz
};

// Welch estimate: Hann-tapered, mean-removed segments with 50% overlap.
Psd welch_psd(std::span<const double> signal, double sampling_rate_hz,
              const FeatureSpec& spec = {});

// Integrated density over [lo, hi] (rectangle rule over bins in range).
double band_power(const Psd& psd, double lo_hz, double hi_hz);

// Ten features per channel of an N_channels x T window.
FeatureVector extract_features(const Eigen::MatrixXd& window, double sampling_rate_hz,
                               const FeatureSpec& spec = {});

// Splits the window into n_segments contiguous sub-segments and extracts
// features per segment; gives the sequence models a time axis.
FeatureSequence feature_sequence(const Eigen::MatrixXd& window, int n_segments,
                                 double sampling_rate_hz, const FeatureSpec& spec = {});

// CSV with `label` plus one channel_feature column per dimension.
void write_features_csv(const std::string& path, const std::vector<FeatureVector>& rows,
                        const FeatureLayout& layout);

}  // namespace ssvep
