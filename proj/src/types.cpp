#include "ssvep/types.hpp"

#include <cmath>
#include <unordered_set>

namespace ssvep {

const std::array<StimulusClass, 4>& StimulusClass::all() {
  static const std::array<StimulusClass, 4> table = {{
      {0, "Start", 6.0},
      {1, "Stop", 8.0},
      {2, "Active", 10.0},
      {3, "Passive", 12.0},
  }};
  return table;
}

StimulusClass StimulusClass::from_label(int label) {
  if (label < 0 || label > 3) {
    throw ParamError("stimulus label must be in 0..3, got " + std::to_string(label));
  }
  return all()[static_cast<std::size_t>(label)];
}

StimulusClass StimulusClass::from_frequency(double hz) {
  for (const auto& c : all()) {
    if (c.frequency_hz == hz) return c;
  }
  throw ParamError("no stimulus class at " + std::to_string(hz) + " Hz");
}

std::array<double, 4> StimulusClass::frequencies() {
  return {6.0, 8.0, 10.0, 12.0};
}

ChannelLayout ChannelLayout::standard() {
  ChannelLayout layout;
  layout.names = {"Oz", "O1", "O2", "POz", "PO3", "PO4", "PO5", "PO6"};
  return layout;
}

int ChannelLayout::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

void ChannelLayout::validate() const {
  if (names.empty()) throw ConfigError("channel layout is empty");
  std::unordered_set<std::string> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second) throw ConfigError("duplicate channel name: " + n);
  }
}

void SessionMeta::validate() const {
  if (sampling_rate_hz <= 0.0) throw ConfigError("sampling_rate_hz must be > 0");
  if (cue_s < 0.0) throw ConfigError("cue_s must be >= 0");
  if (flicker_s < 0.0) throw ConfigError("flicker_s must be >= 0");
  if (rest_s < 0.0) throw ConfigError("rest_s must be >= 0");
  if (trials_per_class < 1) throw ConfigError("trials_per_class must be >= 1");
  layout.validate();
}

void EpochSet::validate() const {
  if (labels.size() != n_trials) {
    throw ShapeError("label count " + std::to_string(labels.size()) +
                     " does not match trial count " + std::to_string(n_trials));
  }
  if (n_channels != meta.layout.size()) {
    throw ShapeError("channel count " + std::to_string(n_channels) +
                     " does not match layout size " + std::to_string(meta.layout.size()));
  }
  if (data.size() != n_trials * n_channels * n_samples) {
    throw ShapeError("data buffer size does not match dimensions");
  }
  for (double v : data) {
    if (!std::isfinite(v)) throw NumericError("epoch data contains non-finite values");
  }
}

}  // namespace ssvep
