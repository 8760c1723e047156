#pragma once

#include <cstdint>
#include <vector>

#include "ssvep/config.hpp"
#include "ssvep/shap.hpp"
#include "ssvep/train.hpp"

namespace ssvep {

struct ExplainResult {
  ImportanceTable importance;
  std::vector<Attribution> attributions;  // instance-major, then class
  FeatureLayout layout;
  std::size_t n_instances = 0;
};

// Wraps the sequence model as a function of one flat feature vector: the
// vector is standardized, tiled across the model's time axis, and the
// class probabilities come back. The surrogate owns a copy of the model,
// so instances can be explained concurrently.
ModelFn make_sequence_surrogate(const MacnnBilstm& model, const FeatureStandardizer& st);

// Round-robin per-class subsample of at most max_count indices.
std::vector<std::size_t> stratified_subsample(const std::vector<int>& labels,
                                              std::size_t max_count, std::uint64_t seed);

// KernelSHAP over the flat feature space for up to shap.max_instances test
// instances, one attribution per class per instance, aggregated into
// per-class and overall rankings. Instances run on the worker pool with
// per-instance derived seeds.
ExplainResult run_explain(const ExperimentConfig& cfg, const MacnnBilstm& model,
                          const FeatureStandardizer& standardizer,
                          const std::vector<FeatureVector>& train_features,
                          const std::vector<FeatureVector>& test_features);

// Windowed, feature-extracted train/test data for one subject session:
// sequences are standardized (train-fitted); flat vectors stay raw for the
// attribution path.
struct SubjectWindowData {
  std::vector<FeatureSequence> train_seqs, test_seqs;
  std::vector<FeatureVector> train_flat, test_flat;
  FeatureStandardizer standardizer;
  double window_s = 0.0;
};

// Trial-level split of an already-preprocessed session, then windowing and
// feature extraction.
SubjectWindowData prepare_windows(const ExperimentConfig& cfg, const EpochSet& session,
                                  double window_s, std::uint64_t split_seed);

// Synthesizes the subject's session, preprocesses, and windows it.
SubjectWindowData prepare_subject_data(const ExperimentConfig& cfg, int subject,
                                       double window_s);

struct ExplainPipelineResult {
  ExplainResult explain;
  TrainReport train_report;
  double window_s = 0.0;
  double test_accuracy = 0.0;
};

// Full pipeline: synthesize subject 0, preprocess, split, train the
// attention model at the longest window, then explain the test windows.
ExplainPipelineResult run_explain_pipeline(const ExperimentConfig& cfg);

}  // namespace ssvep
