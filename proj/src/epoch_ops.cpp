#include "ssvep/epoch_ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "ssvep/errors.hpp"
#include "ssvep/rng.hpp"

namespace ssvep {

EpochSet extract_analysis_segment(const EpochSet& epochs, double segment_s) {
  const auto target =
      static_cast<std::size_t>(std::llround(segment_s * epochs.meta.sampling_rate_hz));
  if (target == 0) throw ParamError("segment_s yields zero samples");
  if (epochs.n_samples < target) {
    throw LengthError("trial has " + std::to_string(epochs.n_samples) +
                      " samples, need " + std::to_string(target));
  }
  if (epochs.n_samples == target) return epochs;

  const std::size_t start = (epochs.n_samples - target) / 2;
  SessionMeta meta = epochs.meta;
  meta.flicker_s = segment_s;
  EpochSet out(epochs.n_trials, epochs.n_channels, target, meta, epochs.provenance);
  out.labels = epochs.labels;
  for (std::size_t t = 0; t < epochs.n_trials; ++t) {
    for (std::size_t c = 0; c < epochs.n_channels; ++c) {
      auto src = epochs.trial_channel(t, c);
      auto dst = out.trial_channel(t, c);
      std::copy(src.begin() + static_cast<std::ptrdiff_t>(start),
                src.begin() + static_cast<std::ptrdiff_t>(start + target), dst.begin());
    }
  }
  return out;
}

EpochSet slice_windows(const EpochSet& epochs, double window_s, double step_s) {
  const double fs = epochs.meta.sampling_rate_hz;
  const auto w = static_cast<std::size_t>(std::llround(window_s * fs));
  const auto s = static_cast<std::size_t>(std::llround(step_s * fs));
  if (w == 0) throw ParamError("window_s yields zero samples");
  if (s == 0) throw ParamError("step_s yields zero samples");
  if (w > epochs.n_samples) {
    throw LengthError("window of " + std::to_string(w) + " samples exceeds trial length " +
                      std::to_string(epochs.n_samples));
  }

  const std::size_t per_trial = (epochs.n_samples - w) / s + 1;
  SessionMeta meta = epochs.meta;
  meta.flicker_s = window_s;
  EpochSet out(epochs.n_trials * per_trial, epochs.n_channels, w, meta, epochs.provenance);
  std::size_t row = 0;
  for (std::size_t t = 0; t < epochs.n_trials; ++t) {
    for (std::size_t k = 0; k < per_trial; ++k, ++row) {
      out.labels[row] = epochs.labels[t];
      const std::size_t offset = k * s;
      for (std::size_t c = 0; c < epochs.n_channels; ++c) {
        auto src = epochs.trial_channel(t, c);
        auto dst = out.trial_channel(row, c);
        std::copy(src.begin() + static_cast<std::ptrdiff_t>(offset),
                  src.begin() + static_cast<std::ptrdiff_t>(offset + w), dst.begin());
      }
    }
  }
  return out;
}

namespace {

EpochSet take_trials(const EpochSet& epochs, const std::vector<std::size_t>& indices) {
  EpochSet out(indices.size(), epochs.n_channels, epochs.n_samples, epochs.meta,
               epochs.provenance);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t t = indices[i];
    out.labels[i] = epochs.labels[t];
    std::copy_n(epochs.data.begin() +
                    static_cast<std::ptrdiff_t>(t * epochs.n_channels * epochs.n_samples),
                epochs.n_channels * epochs.n_samples,
                out.data.begin() +
                    static_cast<std::ptrdiff_t>(i * epochs.n_channels * epochs.n_samples));
  }
  return out;
}

}  // namespace

std::pair<EpochSet, EpochSet> train_test_split(const EpochSet& epochs,
                                               double train_fraction,
                                               std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ParamError("train_fraction must be in (0, 1)");
  }
  std::array<std::vector<std::size_t>, 4> by_class;
  for (std::size_t t = 0; t < epochs.n_trials; ++t) {
    const int label = epochs.labels[t];
    if (label < 0 || label > 3) throw ParamError("label out of range in epoch set");
    by_class[static_cast<std::size_t>(label)].push_back(t);
  }

  Rng rng(seed);
  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t cls = 0; cls < 4; ++cls) {
    auto& trials = by_class[cls];
    if (trials.empty()) continue;
    if (trials.size() < 2) {
      throw StratificationError("class " + std::to_string(cls) +
                                " has fewer than 2 trials");
    }
    Rng stream = rng.derive(cls);
    stream.shuffle(trials);
    auto n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(trials.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, trials.size() - 1);
    train_idx.insert(train_idx.end(), trials.begin(),
                     trials.begin() + static_cast<std::ptrdiff_t>(n_train));
    test_idx.insert(test_idx.end(), trials.begin() + static_cast<std::ptrdiff_t>(n_train),
                    trials.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {take_trials(epochs, train_idx), take_trials(epochs, test_idx)};
}

}  // namespace ssvep
