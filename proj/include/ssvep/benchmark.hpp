#pragma once

#include <string>
#include <vector>

#include "ssvep/config.hpp"
#include "ssvep/train.hpp"

namespace ssvep {

struct BenchmarkCell {
  std::string method;
  double window_s = 0.0;
  int subject = 0;
  double accuracy = 0.0;
  Confusion confusion;
  std::string error;  // non-empty = cell failed, run continued
};

struct BenchmarkTable {
  std::vector<std::string> methods;
  std::vector<double> windows_s;
  int n_subjects = 0;
  // method-major, then window, then subject
  std::vector<BenchmarkCell> cells;

  const BenchmarkCell& cell(std::size_t method, std::size_t window, int subject) const;
  double mean_accuracy(const std::string& method, double window_s) const;
  double std_accuracy(const std::string& method, double window_s) const;
  std::vector<double> subject_accuracies(const std::string& method, double window_s) const;
  // Pooled confusion over subjects for one (method, window).
  Confusion pooled_confusion(const std::string& method, double window_s) const;
};

// Per synthetic subject / window length / method: preprocess, split at
// trial level, train where applicable, evaluate on held-out windows.
// (subject x window) pairs run on a worker pool; every seed is derived from
// cfg.seed and the cell indices, so results do not depend on scheduling.
BenchmarkTable run_benchmark(const ExperimentConfig& cfg);

// Per-subject synth parameters: derived seed, and (unless the config pins
// gains) a per-subject channel gain profile.
SynthConfig subject_synth_config(const ExperimentConfig& cfg, int subject);

}  // namespace ssvep
