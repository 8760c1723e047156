#include "ssvep/explain_runner.hpp"

#include <algorithm>
#include <array>
#include <memory>

#include "ssvep/benchmark.hpp"
#include "ssvep/cca.hpp"
#include "ssvep/epoch_ops.hpp"
#include "ssvep/errors.hpp"
#include "ssvep/filters.hpp"
#include "ssvep/parallel.hpp"
#include "ssvep/rng.hpp"
#include "ssvep/synth.hpp"

namespace ssvep {

ModelFn make_sequence_surrogate(const MacnnBilstm& model, const FeatureStandardizer& st) {
  auto owned = std::make_shared<MacnnBilstm>(model);
  const auto seq_len = static_cast<std::size_t>(model.config().seq_len);
  const auto dim = static_cast<std::size_t>(model.config().input_dim);
  FeatureStandardizer standardizer = st;

  return [owned, standardizer, seq_len, dim](const Eigen::MatrixXd& rows) {
    if (static_cast<std::size_t>(rows.cols()) != dim) {
      throw ShapeError("surrogate input has wrong feature dimension");
    }
    const auto n = static_cast<std::size_t>(rows.rows());
    Tensor batch({n, seq_len, dim});
    std::vector<double> values(dim);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < dim; ++j) values[j] = rows(static_cast<Eigen::Index>(i),
                                                            static_cast<Eigen::Index>(j));
      standardizer.apply(values);
      for (std::size_t t = 0; t < seq_len; ++t) {
        for (std::size_t j = 0; j < dim; ++j) batch.at(i, t, j) = values[j];
      }
    }
    const Tensor logits = owned->forward(batch, false);
    const Tensor probs = softmax_rows(logits);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n),
                        static_cast<Eigen::Index>(logits.shape[1]));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < logits.shape[1]; ++c) {
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = probs.at(i, c);
      }
    }
    return out;
  };
}

std::vector<std::size_t> stratified_subsample(const std::vector<int>& labels,
                                              std::size_t max_count, std::uint64_t seed) {
  std::array<std::vector<std::size_t>, 4> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int label = labels[i];
    if (label < 0 || label > 3) throw ParamError("label out of range");
    by_class[static_cast<std::size_t>(label)].push_back(i);
  }
  Rng rng(seed);
  for (std::size_t cls = 0; cls < 4; ++cls) {
    Rng stream = rng.derive(cls);
    stream.shuffle(by_class[cls]);
  }
  std::vector<std::size_t> picked;
  for (std::size_t round = 0; picked.size() < std::min(max_count, labels.size()); ++round) {
    bool any = false;
    for (auto& group : by_class) {
      if (round < group.size()) {
        picked.push_back(group[round]);
        any = true;
        if (picked.size() >= max_count) break;
      }
    }
    if (!any) break;
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

ExplainResult run_explain(const ExperimentConfig& cfg, const MacnnBilstm& model,
                          const FeatureStandardizer& standardizer,
                          const std::vector<FeatureVector>& train_features,
                          const std::vector<FeatureVector>& test_features) {
  if (train_features.empty() || test_features.empty()) {
    throw ParamError("explain needs non-empty train and test feature sets");
  }
  const std::size_t dim = train_features[0].values.size();
  const std::uint64_t base = derive_seed(cfg.seed, 0x73686170);

  std::vector<int> train_labels, test_labels;
  for (const auto& fv : train_features) train_labels.push_back(fv.label);
  for (const auto& fv : test_features) test_labels.push_back(fv.label);

  const std::vector<std::size_t> bg_idx =
      stratified_subsample(train_labels, cfg.shap.background_size, derive_seed(base, 1));
  Eigen::MatrixXd background(static_cast<Eigen::Index>(bg_idx.size()),
                             static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < bg_idx.size(); ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      background(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          train_features[bg_idx[i]].values[j];
    }
  }

  const std::vector<std::size_t> inst_idx =
      stratified_subsample(test_labels, cfg.shap.max_instances, derive_seed(base, 2));

  ExplainResult result;
  result.layout.channels = cfg.session.layout.names;
  result.n_instances = inst_idx.size();
  result.attributions.resize(inst_idx.size() * 4);

  parallel_for(inst_idx.size(), [&](std::size_t i) {
    // Each task owns a model copy; forward passes cache internal state and
    // are not shareable across threads.
    const ModelFn surrogate = make_sequence_surrogate(model, standardizer);
    Eigen::VectorXd instance(static_cast<Eigen::Index>(dim));
    for (std::size_t j = 0; j < dim; ++j) {
      instance(static_cast<Eigen::Index>(j)) = test_features[inst_idx[i]].values[j];
    }
    std::vector<Attribution> per_class = kernel_shap_all_classes(
        surrogate, background, instance, cfg.shap.n_samples, derive_seed(base, 100 + i));
    if (per_class.size() != 4) throw ShapeError("model must emit 4 classes");
    for (std::size_t cls = 0; cls < 4; ++cls) {
      result.attributions[i * 4 + cls] = std::move(per_class[cls]);
    }
  });

  result.importance = aggregate_importance(result.attributions, result.layout);
  return result;
}

SubjectWindowData prepare_windows(const ExperimentConfig& cfg, const EpochSet& session,
                                  double window_s, std::uint64_t split_seed) {
  auto [train_trials, test_trials] =
      train_test_split(session, cfg.train_fraction, split_seed);
  const EpochSet train_windows = slice_windows(train_trials, window_s, cfg.step_s);
  const EpochSet test_windows = slice_windows(test_trials, window_s, cfg.step_s);
  const double fs = session.meta.sampling_rate_hz;

  SubjectWindowData data;
  data.window_s = window_s;
  auto extract = [&](const EpochSet& windows, std::vector<FeatureSequence>& seqs,
                     std::vector<FeatureVector>& flat) {
    for (std::size_t w = 0; w < windows.n_trials; ++w) {
      const Eigen::MatrixXd x = trial_matrix(windows, w);
      FeatureSequence seq = feature_sequence(x, cfg.feature_segments, fs, cfg.features);
      seq.label = windows.labels[w];
      seqs.push_back(std::move(seq));
      FeatureVector fv = extract_features(x, fs, cfg.features);
      fv.label = windows.labels[w];
      flat.push_back(std::move(fv));
    }
  };
  extract(train_windows, data.train_seqs, data.train_flat);
  extract(test_windows, data.test_seqs, data.test_flat);

  data.standardizer = FeatureStandardizer::fit(data.train_seqs);
  data.standardizer.apply(data.train_seqs);
  data.standardizer.apply(data.test_seqs);
  return data;
}

SubjectWindowData prepare_subject_data(const ExperimentConfig& cfg, int subject,
                                       double window_s) {
  const SynthConfig synth = subject_synth_config(cfg, subject);
  EpochSet session = generate_synthetic_session(synth, cfg.session);
  session = bandpass_filter(session, cfg.preprocess_low_hz, cfg.preprocess_high_hz);
  session = extract_analysis_segment(session, cfg.analysis_segment_s);
  return prepare_windows(cfg, session, window_s, derive_seed(cfg.seed, 0x73706c6974));
}

ExplainPipelineResult run_explain_pipeline(const ExperimentConfig& cfg) {
  cfg.validate();

  // Subject 0 of the benchmark population, longest configured window.
  const double window_s = *std::max_element(cfg.windows_s.begin(), cfg.windows_s.end());
  SubjectWindowData data = prepare_subject_data(cfg, 0, window_s);

  ModelConfig mc = cfg.model;
  mc.use_attention = true;
  MacnnBilstm model(mc, derive_seed(cfg.seed, 0x6d616342));
  TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.seed, 0x747261696e);

  ExplainPipelineResult out;
  out.train_report = train(model, data.train_seqs, data.test_seqs, tc);
  out.window_s = window_s;
  out.test_accuracy = out.train_report.confusion.accuracy();
  out.explain = run_explain(cfg, model, data.standardizer, data.train_flat, data.test_flat);
  return out;
}

}  // namespace ssvep
