#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ssvep/types.hpp"

namespace ssvep {

enum class NoiseModel : std::uint8_t { white, pink, mixture };

// Optional planted component: a narrowband sinusoid whose amplitude depends
// on the class, injected on selected channels only. With the per-class
// flicker amplitudes zeroed, this makes band power on those channels the
// only class-discriminative signal (used by attribution-recovery tests).
struct PlantedMarker {
  bool enabled = false;
  double freq_hz = 10.0;
  std::array<double, 4> class_amplitudes_uv = {0.0, 0.0, 0.0, 0.0};
  std::vector<std::size_t> channels;  // indices into the layout
};

struct SynthConfig {
  std::array<double, 4> class_amplitudes_uv = {1.0, 1.0, 1.0, 1.0};
  double harmonic_rolloff = 0.5;  // amplitude factor per harmonic order
  int n_harmonics = 3;
  NoiseModel noise = NoiseModel::mixture;
  double snr_db = 0.0;
  std::vector<double> channel_gains;  // empty = all ones; else one per channel
  std::uint64_t seed = 0;
  PlantedMarker marker;

  void validate(const SessionMeta& meta) const;  // ConfigError naming the field
};

// Synthesizes one labeled session: trials_per_class trials per class, each
// flicker_s long, class-frequency harmonics plus scaled noise so the
// whole-trial clean/noise power ratio equals snr_db. Deterministic per seed.
EpochSet generate_synthetic_session(const SynthConfig& cfg, const SessionMeta& meta);

// Clean/noise decomposition of one generated trial, for SNR verification.
// Same streams as generate_synthetic_session: clean + scaled noise == data.
struct TrialComponents {
  std::vector<double> clean;  // channel-major, sample-minor
  std::vector<double> noise;  // already scaled to the target SNR
};
TrialComponents synth_trial_components(const SynthConfig& cfg, const SessionMeta& meta,
                                       std::size_t trial_index, int label);

}  // namespace ssvep
