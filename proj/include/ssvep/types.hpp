#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ssvep/errors.hpp"

namespace ssvep {

// One of the four flicker commands. label <-> frequency is a fixed bijection:
// 0<->6 Hz, 1<->8 Hz, 2<->10 Hz, 3<->12 Hz.
struct StimulusClass {
  int label;
  const char* name;
  double frequency_hz;

  static const std::array<StimulusClass, 4>& all();
  static StimulusClass from_label(int label);           // ParamError if not 0..3
  static StimulusClass from_frequency(double hz);       // ParamError if unknown
  static std::array<double, 4> frequencies();

  bool operator==(const StimulusClass& o) const { return label == o.label; }
};

struct ChannelLayout {
  std::vector<std::string> names;
  std::string reference = "Cz";
  std::string ground = "Fpz";

  static ChannelLayout standard();  // Oz O1 O2 POz PO3 PO4 PO5 PO6
  std::size_t size() const { return names.size(); }
  // Index of a channel name, or -1 if absent.
  int index_of(const std::string& name) const;
  void validate() const;  // unique, non-empty
};

struct SessionMeta {
  double sampling_rate_hz = 1000.0;
  double cue_s = 1.5;
  double flicker_s = 7.0;
  double rest_s = 3.0;
  int trials_per_class = 10;
  ChannelLayout layout = ChannelLayout::standard();

  std::size_t samples_per_trial() const {
    return static_cast<std::size_t>(flicker_s * sampling_rate_hz + 0.5);
  }
  void validate() const;
};

enum class Provenance : std::uint8_t { synthetic, file };

// Labeled trial container, data[trial][channel][sample] in microvolts.
struct EpochSet {
  std::size_t n_trials = 0;
  std::size_t n_channels = 0;
  std::size_t n_samples = 0;
  std::vector<double> data;    // trial-major, channel-major, sample-minor
  std::vector<int> labels;     // class label per trial
  SessionMeta meta;
  Provenance provenance = Provenance::synthetic;

  EpochSet() = default;
  EpochSet(std::size_t trials, std::size_t channels, std::size_t samples,
           SessionMeta m, Provenance p)
      : n_trials(trials),
        n_channels(channels),
        n_samples(samples),
        data(trials * channels * samples, 0.0),
        labels(trials, 0),
        meta(std::move(m)),
        provenance(p) {}

  double& at(std::size_t t, std::size_t c, std::size_t s) {
    return data[(t * n_channels + c) * n_samples + s];
  }
  double at(std::size_t t, std::size_t c, std::size_t s) const {
    return data[(t * n_channels + c) * n_samples + s];
  }
  std::span<double> trial_channel(std::size_t t, std::size_t c) {
    return {data.data() + (t * n_channels + c) * n_samples, n_samples};
  }
  std::span<const double> trial_channel(std::size_t t, std::size_t c) const {
    return {data.data() + (t * n_channels + c) * n_samples, n_samples};
  }

  // Checks label count, channel count vs layout, and that data is finite.
  void validate() const;
};

}  // namespace ssvep
