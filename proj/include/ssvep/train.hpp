#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ssvep/features.hpp"
#include "ssvep/model.hpp"

namespace ssvep {

struct TrainConfig {
  double learning_rate = 0.01;
  double weight_decay = 1e-5;   // decoupled (applied to parameters directly)
  double lr_decay = 0.9;
  int lr_step_epochs = 100;
  int epochs = 300;
  int batch_size = 16;
  std::uint64_t seed = 0;

  void validate() const;
};

// Step schedule: learning_rate * lr_decay^floor(epoch / lr_step_epochs),
// epoch 0-based, computed by repeated multiplication.
double effective_lr(const TrainConfig& cfg, int epoch);

struct Confusion {
  std::array<std::array<std::int64_t, 4>, 4> counts{};  // [true][predicted]

  std::int64_t total() const;
  std::int64_t correct() const;
  double accuracy() const;  // trace / total
};

struct TrainReport {
  std::vector<double> train_loss;      // per epoch
  std::vector<double> train_accuracy;  // per epoch
  std::vector<double> test_accuracy;   // per epoch
  Confusion confusion;                 // final, on the test set
  double wall_seconds = 0.0;
};

// Per-dimension z-scoring fitted on training sequences; required because the
// ten features live on very different scales.
struct FeatureStandardizer {
  std::vector<double> mean;
  std::vector<double> std_dev;  // floored at 1e-12

  static FeatureStandardizer fit(const std::vector<FeatureSequence>& items);
  void apply(FeatureSequence& seq) const;
  void apply(std::vector<FeatureSequence>& items) const;
  void apply(std::vector<double>& values) const;
};

// Adam with decoupled weight decay, cross-entropy loss, step LR schedule.
// Deterministic per cfg.seed. Throws TrainingError on divergence.
TrainReport train(MacnnBilstm& model, const std::vector<FeatureSequence>& train_set,
                  const std::vector<FeatureSequence>& test_set, const TrainConfig& cfg);

std::pair<double, Confusion> evaluate(MacnnBilstm& model,
                                      const std::vector<FeatureSequence>& set);

// MACB0001 checkpoint: model config block plus named f32 parameter blobs.
void save_checkpoint(const std::string& path, MacnnBilstm& model,
                     const FeatureStandardizer* standardizer = nullptr);

struct Checkpoint {
  ModelConfig config;
  std::unique_ptr<MacnnBilstm> model;
  FeatureStandardizer standardizer;  // empty vectors when absent from file
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ssvep
