#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssvep/fbcca.hpp"
#include "ssvep/features.hpp"
#include "ssvep/model.hpp"
#include "ssvep/synth.hpp"
#include "ssvep/train.hpp"
#include "ssvep/types.hpp"

namespace ssvep {

struct ShapRunConfig {
  std::size_t n_samples = 2048;
  std::size_t max_instances = 16;
  std::size_t background_size = 50;
};

// Everything one benchmark/explain run needs, loadable from a versioned
// JSON file ("--config default" uses the built-in values).
struct ExperimentConfig {
  std::uint64_t seed = 42;
  int n_subjects = 7;
  std::string output_dir = ".";

  SessionMeta session;
  SynthConfig synth;
  double preprocess_low_hz = 4.0;
  double preprocess_high_hz = 25.0;
  double analysis_segment_s = 4.0;

  std::vector<double> windows_s = {0.5, 0.75, 1.0, 1.25, 1.5};
  double step_s = 0.2;
  std::vector<std::string> methods = {"cca", "fbcca", "cnn_bilstm", "macnn_bilstm"};
  double train_fraction = 0.7;

  int reference_harmonics = 2;
  FilterBankSpec filter_bank = FilterBankSpec::standard();

  ModelConfig model;
  TrainConfig train;
  int feature_segments = 6;
  FeatureSpec features;
  ShapRunConfig shap;

  void validate() const;
};

ExperimentConfig default_config();

// Built-in defaults for the attribution-recovery setup: flicker amplitudes
// zeroed, class separation planted in alpha-band power of PO4..PO6.
ExperimentConfig planted_alpha_config();

ExperimentConfig parse_config_json(const std::string& text);
// "default" / "planted-alpha" name the built-ins; anything else is a path.
ExperimentConfig load_config(const std::string& name_or_path);

// Canonical serialization (stable key order) and its FNV-1a hash; the hash
// goes into report.json so runs can be tied back to their configuration.
std::string config_to_json(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);

}  // namespace ssvep
