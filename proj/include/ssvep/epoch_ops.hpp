#pragma once

#include <cstdint>
#include <utility>

#include "ssvep/types.hpp"

namespace ssvep {

// Crops every trial to the centered `segment_s` seconds (default: the middle
// 4 s, so a 7 s trial at 1000 Hz keeps samples 1500..5500).
EpochSet extract_analysis_segment(const EpochSet& epochs, double segment_s = 4.0);

// Slides a window of `window_s` over each trial with stride `step_s`; every
// window becomes one row of the result and inherits the trial's label.
// Window count per trial is floor((L - W)/S) + 1 in samples.
EpochSet slice_windows(const EpochSet& epochs, double window_s, double step_s);

// Stratified trial-level split: per class, round(train_fraction * count)
// trials go to the train side (clamped so both sides stay non-empty).
// Deterministic per seed.
std::pair<EpochSet, EpochSet> train_test_split(const EpochSet& epochs,
                                               double train_fraction,
                                               std::uint64_t seed);

}  // namespace ssvep
