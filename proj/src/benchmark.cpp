#include "ssvep/benchmark.hpp"

#include <algorithm>
#include <cmath>

#include "ssvep/cca.hpp"
#include "ssvep/epoch_ops.hpp"
#include "ssvep/errors.hpp"
#include "ssvep/fbcca.hpp"
#include "ssvep/filters.hpp"
#include "ssvep/parallel.hpp"
#include "ssvep/rng.hpp"
#include "ssvep/synth.hpp"

namespace ssvep {

namespace {

// Seed stream tags for the independent stages of a run.
enum SeedTag : std::uint64_t {
  kSeedSubjectSynth = 1,
  kSeedSubjectGains = 2,
  kSeedSubjectSplit = 3,
  kSeedModel = 4,
  kSeedTrain = 5,
};

std::uint64_t cell_seed(std::uint64_t base, std::uint64_t tag, std::uint64_t subject,
                        std::uint64_t window_idx, std::uint64_t method_idx) {
  std::uint64_t s = derive_seed(base, tag);
  s = derive_seed(s, subject);
  s = derive_seed(s, window_idx);
  return derive_seed(s, method_idx);
}

bool is_neural(const std::string& method) {
  return method == "cnn_bilstm" || method == "macnn_bilstm";
}

Confusion classify_windows(const EpochSet& windows, const ReferenceBank& bank,
                           const FilterBankSpec* fb) {
  Confusion confusion;
  for (std::size_t w = 0; w < windows.n_trials; ++w) {
    const Eigen::MatrixXd x = trial_matrix(windows, w);
    const StimulusClass predicted =
        fb ? fbcca_classify(x, bank, *fb).first : cca_classify(x, bank).first;
    confusion.counts[static_cast<std::size_t>(windows.labels[w])]
                    [static_cast<std::size_t>(predicted.label)] += 1;
  }
  return confusion;
}

std::vector<FeatureSequence> window_sequences(const EpochSet& windows, int n_segments,
                                              const FeatureSpec& spec) {
  std::vector<FeatureSequence> out;
  out.reserve(windows.n_trials);
  for (std::size_t w = 0; w < windows.n_trials; ++w) {
    FeatureSequence seq = feature_sequence(trial_matrix(windows, w), n_segments,
                                           windows.meta.sampling_rate_hz, spec);
    seq.label = windows.labels[w];
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace

SynthConfig subject_synth_config(const ExperimentConfig& cfg, int subject) {
  SynthConfig synth = cfg.synth;
  synth.seed = cell_seed(cfg.seed, kSeedSubjectSynth, static_cast<std::uint64_t>(subject), 0, 0);
  if (synth.channel_gains.empty()) {
    Rng rng(cell_seed(cfg.seed, kSeedSubjectGains, static_cast<std::uint64_t>(subject), 0, 0));
    synth.channel_gains.resize(cfg.session.layout.size());
    for (double& g : synth.channel_gains) g = rng.uniform(0.75, 1.25);
  }
  return synth;
}

const BenchmarkCell& BenchmarkTable::cell(std::size_t method, std::size_t window,
                                          int subject) const {
  return cells[(method * windows_s.size() + window) * static_cast<std::size_t>(n_subjects) +
               static_cast<std::size_t>(subject)];
}

std::vector<double> BenchmarkTable::subject_accuracies(const std::string& method,
                                                       double window_s) const {
  std::vector<double> out;
  for (const auto& c : cells) {
    if (c.method == method && c.window_s == window_s && c.error.empty()) {
      out.push_back(c.accuracy);
    }
  }
  return out;
}

double BenchmarkTable::mean_accuracy(const std::string& method, double window_s) const {
  const std::vector<double> acc = subject_accuracies(method, window_s);
  if (acc.empty()) return 0.0;
  double sum = 0.0;
  for (double a : acc) sum += a;
  return sum / static_cast<double>(acc.size());
}

double BenchmarkTable::std_accuracy(const std::string& method, double window_s) const {
  const std::vector<double> acc = subject_accuracies(method, window_s);
  if (acc.size() < 2) return 0.0;
  const double mean = mean_accuracy(method, window_s);
  double ss = 0.0;
  for (double a : acc) ss += (a - mean) * (a - mean);
  return std::sqrt(ss / static_cast<double>(acc.size() - 1));
}

Confusion BenchmarkTable::pooled_confusion(const std::string& method, double window_s) const {
  Confusion pooled;
  for (const auto& c : cells) {
    if (c.method != method || c.window_s != window_s || !c.error.empty()) continue;
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) pooled.counts[i][j] += c.confusion.counts[i][j];
    }
  }
  return pooled;
}

BenchmarkTable run_benchmark(const ExperimentConfig& cfg) {
  cfg.validate();

  BenchmarkTable table;
  table.methods = cfg.methods;
  table.windows_s = cfg.windows_s;
  table.n_subjects = cfg.n_subjects;
  table.cells.resize(cfg.methods.size() * cfg.windows_s.size() *
                     static_cast<std::size_t>(cfg.n_subjects));

  auto cell_index = [&](std::size_t method, std::size_t window, std::size_t subject) {
    return (method * cfg.windows_s.size() + window) *
               static_cast<std::size_t>(cfg.n_subjects) +
           subject;
  };

  const std::size_t n_tasks =
      static_cast<std::size_t>(cfg.n_subjects) * cfg.windows_s.size();

  parallel_for(n_tasks, [&](std::size_t task) {
    const auto subject = static_cast<int>(task / cfg.windows_s.size());
    const std::size_t window_idx = task % cfg.windows_s.size();
    const double window_s = cfg.windows_s[window_idx];

    auto fail_all = [&](const std::string& message) {
      for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        BenchmarkCell& cell = table.cells[cell_index(mi, window_idx,
                                                     static_cast<std::size_t>(subject))];
        cell.method = cfg.methods[mi];
        cell.window_s = window_s;
        cell.subject = subject;
        cell.error = message;
      }
    };

    EpochSet train_windows, test_windows;
    try {
      const SynthConfig synth = subject_synth_config(cfg, subject);
      EpochSet session = generate_synthetic_session(synth, cfg.session);
      session = bandpass_filter(session, cfg.preprocess_low_hz, cfg.preprocess_high_hz);
      session = extract_analysis_segment(session, cfg.analysis_segment_s);
      auto [train_trials, test_trials] = train_test_split(
          session, cfg.train_fraction,
          cell_seed(cfg.seed, kSeedSubjectSplit, static_cast<std::uint64_t>(subject), 0, 0));
      train_windows = slice_windows(train_trials, window_s, cfg.step_s);
      test_windows = slice_windows(test_trials, window_s, cfg.step_s);
    } catch (const Error& e) {
      fail_all(e.what());
      return;
    }

    const double fs = cfg.session.sampling_rate_hz;
    const auto freqs = StimulusClass::frequencies();

    // CCA / FBCCA share the reference bank; the neural methods share the
    // feature sequences and the train-fitted standardizer.
    ReferenceBank bank;
    bool bank_ready = false;
    std::vector<FeatureSequence> train_seqs, test_seqs;
    FeatureStandardizer standardizer;
    bool features_ready = false;

    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
      const std::string& method = cfg.methods[mi];
      BenchmarkCell& cell =
          table.cells[cell_index(mi, window_idx, static_cast<std::size_t>(subject))];
      cell.method = method;
      cell.window_s = window_s;
      cell.subject = subject;
      try {
        if (!is_neural(method)) {
          if (!bank_ready) {
            bank = build_references(freqs, cfg.reference_harmonics, fs,
                                    test_windows.n_samples);
            bank_ready = true;
          }
          const FilterBankSpec* fb = method == "fbcca" ? &cfg.filter_bank : nullptr;
          cell.confusion = classify_windows(test_windows, bank, fb);
          cell.accuracy = cell.confusion.accuracy();
        } else {
          if (!features_ready) {
            train_seqs = window_sequences(train_windows, cfg.feature_segments, cfg.features);
            test_seqs = window_sequences(test_windows, cfg.feature_segments, cfg.features);
            standardizer = FeatureStandardizer::fit(train_seqs);
            standardizer.apply(train_seqs);
            standardizer.apply(test_seqs);
            features_ready = true;
          }
          ModelConfig mc = cfg.model;
          mc.use_attention = method == "macnn_bilstm";
          MacnnBilstm model(mc, cell_seed(cfg.seed, kSeedModel,
                                          static_cast<std::uint64_t>(subject), window_idx, mi));
          TrainConfig tc = cfg.train;
          tc.seed = cell_seed(cfg.seed, kSeedTrain, static_cast<std::uint64_t>(subject),
                              window_idx, mi);
          const TrainReport report = train(model, train_seqs, test_seqs, tc);
          cell.confusion = report.confusion;
          cell.accuracy = report.confusion.accuracy();
        }
      } catch (const Error& e) {
        cell.error = e.what();
      }
    }
  });

  return table;
}

}  // namespace ssvep
