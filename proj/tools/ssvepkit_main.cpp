#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ssvep/benchmark.hpp"
#include "ssvep/config.hpp"
#include "ssvep/epoch_io.hpp"
#include "ssvep/epoch_ops.hpp"
#include "ssvep/errors.hpp"
#include "ssvep/explain_runner.hpp"
#include "ssvep/filters.hpp"
#include "ssvep/report.hpp"
#include "ssvep/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOpts {
  std::string config = "default";
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string format = "csv";
};

ssvep::ExperimentConfig resolve_config(const GlobalOpts& opts) {
  ssvep::ExperimentConfig cfg = ssvep::load_config(opts.config);
  if (opts.seed) cfg.seed = *opts.seed;
  cfg.output_dir = opts.out;
  return cfg;
}

void print_table_summary(const ssvep::BenchmarkTable& table, const std::string& format) {
  if (format == "json") {
    json j = json::array();
    for (const auto& method : table.methods) {
      for (double w : table.windows_s) {
        j.push_back({{"method", method},
                     {"window_s", w},
                     {"mean_accuracy", table.mean_accuracy(method, w)},
                     {"std_accuracy", table.std_accuracy(method, w)}});
      }
    }
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::cout << "method,window_s,mean_accuracy,std_accuracy\n";
  for (const auto& method : table.methods) {
    for (double w : table.windows_s) {
      std::cout << method << "," << ssvep::format_fixed(w, 2) << ","
                << ssvep::format_fixed(table.mean_accuracy(method, w), 4) << ","
                << ssvep::format_fixed(table.std_accuracy(method, w), 4) << "\n";
    }
  }
}

int cmd_generate(const GlobalOpts& opts) {
  const ssvep::ExperimentConfig cfg = resolve_config(opts);
  ssvep::ensure_dir(cfg.output_dir);
  for (int s = 0; s < cfg.n_subjects; ++s) {
    const ssvep::SynthConfig synth = ssvep::subject_synth_config(cfg, s);
    const ssvep::EpochSet session = ssvep::generate_synthetic_session(synth, cfg.session);
    const std::string path = cfg.output_dir + "/subject_" + std::to_string(s) + ".ssvp";
    ssvep::write_ssvp(path, session);
    std::cout << "wrote " << path << " (" << session.n_trials << " trials x "
              << session.n_channels << " ch x " << session.n_samples << " samples)\n";
  }
  return 0;
}

int cmd_preprocess(const GlobalOpts& opts, const std::string& input) {
  const ssvep::ExperimentConfig cfg = resolve_config(opts);
  ssvep::ensure_dir(cfg.output_dir);

  std::vector<std::string> inputs;
  if (fs::is_directory(input)) {
    for (const auto& entry : fs::directory_iterator(input)) {
      if (entry.path().extension() == ".ssvp" &&
          entry.path().stem().string().find("_preprocessed") == std::string::npos) {
        inputs.push_back(entry.path().string());
      }
    }
    std::sort(inputs.begin(), inputs.end());
    if (inputs.empty()) throw ssvep::DataError("no .ssvp files in " + input);
  } else {
    inputs.push_back(input);
  }

  for (const auto& in_path : inputs) {
    ssvep::EpochSet epochs = ssvep::read_ssvp(in_path);
    epochs = ssvep::bandpass_filter(epochs, cfg.preprocess_low_hz, cfg.preprocess_high_hz);
    epochs = ssvep::extract_analysis_segment(epochs, cfg.analysis_segment_s);
    const std::string out_path =
        cfg.output_dir + "/" + fs::path(in_path).stem().string() + "_preprocessed.ssvp";
    ssvep::write_ssvp(out_path, epochs);
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

int cmd_benchmark(const GlobalOpts& opts) {
  const ssvep::ExperimentConfig cfg = resolve_config(opts);
  const ssvep::BenchmarkTable table = ssvep::run_benchmark(cfg);
  ssvep::write_benchmark_outputs(cfg.output_dir, cfg, table);
  print_table_summary(table, opts.format);
  std::size_t failed = 0;
  for (const auto& cell : table.cells) {
    if (!cell.error.empty()) ++failed;
  }
  if (failed > 0) {
    std::cerr << failed << " cell(s) failed; see report.json\n";
  }
  return 0;
}

int cmd_train(const GlobalOpts& opts, double window_s, const std::string& method,
              const std::string& data_path) {
  ssvep::ExperimentConfig cfg = resolve_config(opts);
  ssvep::ensure_dir(cfg.output_dir);
  if (window_s <= 0.0) {
    window_s = *std::max_element(cfg.windows_s.begin(), cfg.windows_s.end());
  }

  ssvep::SubjectWindowData data;
  if (data_path.empty()) {
    data = ssvep::prepare_subject_data(cfg, 0, window_s);
  } else {
    ssvep::EpochSet session = ssvep::read_ssvp(data_path);
    session = ssvep::bandpass_filter(session, cfg.preprocess_low_hz, cfg.preprocess_high_hz);
    session = ssvep::extract_analysis_segment(session, cfg.analysis_segment_s);
    data = ssvep::prepare_windows(cfg, session, window_s,
                                  ssvep::derive_seed(cfg.seed, 0x73706c6974));
  }

  ssvep::ModelConfig mc = cfg.model;
  mc.use_attention = method == "macnn_bilstm";
  ssvep::MacnnBilstm model(mc, ssvep::derive_seed(cfg.seed, 0x6d616342));
  ssvep::TrainConfig tc = cfg.train;
  tc.seed = ssvep::derive_seed(cfg.seed, 0x747261696e);
  const ssvep::TrainReport report = ssvep::train(model, data.train_seqs, data.test_seqs, tc);

  const std::string model_path = cfg.output_dir + "/model.macb";
  ssvep::save_checkpoint(model_path, model, &data.standardizer);
  ssvep::write_confusion_csv(cfg.output_dir + "/confusion_train_run.csv", report.confusion);

  json j;
  j["method"] = method;
  j["window_s"] = window_s;
  j["epochs"] = report.train_loss.size();
  j["final_train_loss"] = report.train_loss.back();
  j["final_train_accuracy"] = report.train_accuracy.back();
  j["test_accuracy"] = report.confusion.accuracy();
  j["wall_seconds"] = report.wall_seconds;
  j["train_loss"] = report.train_loss;
  j["train_accuracy"] = report.train_accuracy;
  j["test_accuracy_per_epoch"] = report.test_accuracy;
  std::ofstream f(cfg.output_dir + "/train_report.json", std::ios::trunc);
  f << j.dump(2) << "\n";

  std::cout << "wrote " << model_path << "; test accuracy "
            << ssvep::format_fixed(report.confusion.accuracy(), 4) << "\n";
  return 0;
}

int cmd_evaluate(const GlobalOpts& opts, const std::string& model_path,
                 const std::string& data_path, double window_s) {
  ssvep::ExperimentConfig cfg = resolve_config(opts);
  ssvep::ensure_dir(cfg.output_dir);
  ssvep::Checkpoint ckpt = ssvep::load_checkpoint(model_path);
  if (ckpt.standardizer.mean.empty()) {
    throw ssvep::DataError("checkpoint has no standardizer; cannot evaluate raw signals");
  }
  if (window_s <= 0.0) {
    window_s = *std::max_element(cfg.windows_s.begin(), cfg.windows_s.end());
  }

  std::vector<ssvep::FeatureSequence> eval_seqs;
  if (data_path.empty()) {
    ssvep::SubjectWindowData data = ssvep::prepare_subject_data(cfg, 0, window_s);
    // Re-standardize with the checkpoint's statistics, not the fresh fit.
    eval_seqs = std::move(data.test_seqs);
    for (auto& seq : eval_seqs) {
      for (auto& row : seq.rows) {
        for (std::size_t j = 0; j < row.values.size(); ++j) {
          row.values[j] = row.values[j] * data.standardizer.std_dev[j] +
                          data.standardizer.mean[j];
        }
      }
    }
    ckpt.standardizer.apply(eval_seqs);
  } else {
    ssvep::EpochSet session = ssvep::read_ssvp(data_path);
    session = ssvep::bandpass_filter(session, cfg.preprocess_low_hz, cfg.preprocess_high_hz);
    session = ssvep::extract_analysis_segment(session, cfg.analysis_segment_s);
    const ssvep::EpochSet windows = ssvep::slice_windows(session, window_s, cfg.step_s);
    for (std::size_t w = 0; w < windows.n_trials; ++w) {
      ssvep::FeatureSequence seq = ssvep::feature_sequence(
          ssvep::trial_matrix(windows, w), cfg.feature_segments,
          session.meta.sampling_rate_hz, cfg.features);
      seq.label = windows.labels[w];
      eval_seqs.push_back(std::move(seq));
    }
    ckpt.standardizer.apply(eval_seqs);
  }

  const auto [accuracy, confusion] = ssvep::evaluate(*ckpt.model, eval_seqs);
  ssvep::write_confusion_csv(cfg.output_dir + "/confusion_evaluate.csv", confusion);
  if (opts.format == "json") {
    json j;
    j["accuracy"] = accuracy;
    j["n_windows"] = confusion.total();
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "accuracy," << ssvep::format_double(accuracy) << "\n";
  }
  return 0;
}

int cmd_explain(const GlobalOpts& opts) {
  const ssvep::ExperimentConfig cfg = resolve_config(opts);
  const ssvep::ExplainPipelineResult result = ssvep::run_explain_pipeline(cfg);
  ssvep::write_explain_outputs(cfg.output_dir, cfg, result.explain);

  std::cout << "model test accuracy at " << ssvep::format_fixed(result.window_s, 2)
            << " s: " << ssvep::format_fixed(result.test_accuracy, 4) << "\n";
  std::cout << "top features (mean |SHAP| over all classes):\n";
  const auto& overall = result.explain.importance.overall;
  for (std::size_t i = 0; i < std::min<std::size_t>(10, overall.size()); ++i) {
    std::cout << "  " << overall[i].rank << ". " << overall[i].feature << "  "
              << ssvep::format_double(overall[i].mean_abs_shap) << "\n";
  }
  return 0;
}

int cmd_plot(const GlobalOpts& opts, const std::string& in_dir) {
  const std::string dir = in_dir.empty() ? opts.out : in_dir;
  const std::string table_path = dir + "/table.csv";
  if (!fs::exists(table_path)) throw ssvep::DataError("no table.csv in " + dir);
  const ssvep::BenchmarkTable table =
      ssvep::table_from_rows(ssvep::read_benchmark_csv(table_path));
  ssvep::ensure_dir(opts.out);
  ssvep::write_accuracy_line_svg(opts.out + "/accuracy_vs_window.svg", table);
  ssvep::write_accuracy_bars_svg(opts.out + "/accuracy_bars.svg", table);
  std::cout << "wrote " << opts.out << "/accuracy_vs_window.svg and accuracy_bars.svg\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SSVEP motor-intention decoding toolkit"};
  app.require_subcommand(1);

  GlobalOpts opts;
  app.add_option("--config", opts.config, "Config JSON path, or 'default' / 'planted-alpha'")
      ->capture_default_str();
  app.add_option("--seed", opts.seed, "Override the config seed");
  app.add_option("--out", opts.out, "Output directory")->capture_default_str();
  app.add_option("--format", opts.format, "Summary format on stdout")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  auto* generate = app.add_subcommand("generate", "Write synthetic SSVP1 datasets")->fallthrough();

  std::string preprocess_in;
  auto* preprocess =
      app.add_subcommand("preprocess", "Band-pass and crop an SSVP1 dataset")->fallthrough();
  preprocess->add_option("--in", preprocess_in, "SSVP1 file or directory")->required();

  auto* benchmark =
      app.add_subcommand("benchmark", "Run the four-method window-length benchmark")->fallthrough();

  double train_window = 0.0;
  std::string train_method = "macnn_bilstm";
  std::string train_data;
  auto* train_cmd = app.add_subcommand("train", "Train a classifier and save a checkpoint")->fallthrough();
  train_cmd->add_option("--window", train_window, "Window length in seconds");
  train_cmd->add_option("--method", train_method, "cnn_bilstm or macnn_bilstm")
      ->check(CLI::IsMember({"cnn_bilstm", "macnn_bilstm"}));
  train_cmd->add_option("--data", train_data, "SSVP1 session to train on");

  std::string eval_model = "model.macb";
  std::string eval_data;
  double eval_window = 0.0;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Evaluate a saved checkpoint")->fallthrough();
  evaluate_cmd->add_option("--model", eval_model, "Checkpoint path")->capture_default_str();
  evaluate_cmd->add_option("--data", eval_data, "SSVP1 session to evaluate on");
  evaluate_cmd->add_option("--window", eval_window, "Window length in seconds");

  auto* explain = app.add_subcommand("explain", "Train and attribute with KernelSHAP")->fallthrough();

  std::string plot_in;
  auto* plot = app.add_subcommand("plot", "Re-render SVG figures from table.csv")->fallthrough();
  plot->add_option("--in", plot_in, "Directory containing table.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints usage/help
    return code == 0 ? 0 : 1;     // usage errors exit 1
  }

  try {
    if (generate->parsed()) return cmd_generate(opts);
    if (preprocess->parsed()) return cmd_preprocess(opts, preprocess_in);
    if (benchmark->parsed()) return cmd_benchmark(opts);
    if (train_cmd->parsed()) return cmd_train(opts, train_window, train_method, train_data);
    if (evaluate_cmd->parsed()) return cmd_evaluate(opts, eval_model, eval_data, eval_window);
    if (explain->parsed()) return cmd_explain(opts);
    if (plot->parsed()) return cmd_plot(opts, plot_in);
  } catch (const ssvep::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const ssvep::TrainingError& e) {
    std::cerr << "training error: " << e.what() << "\n";
    return 3;
  } catch (const ssvep::EstimationError& e) {
    std::cerr << "estimation error: " << e.what() << "\n";
    return 3;
  } catch (const ssvep::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
