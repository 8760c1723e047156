#pragma once

#include <string>
#include <vector>

#include "ssvep/benchmark.hpp"
#include "ssvep/explain_runner.hpp"

namespace ssvep {

// Shortest round-trip decimal form; every emitted accuracy can be parsed
// back to the exact double.
std::string format_double(double v);
std::string format_fixed(double v, int digits);

void ensure_dir(const std::string& path);

// "cca_w0.50_s3" for confusion_<cell>.csv names.
std::string cell_tag(const std::string& method, double window_s, int subject);

// table.csv: header method,window_s,subject,accuracy (one row per cell).
void write_benchmark_csv(const std::string& path, const BenchmarkTable& table);
void write_confusion_csv(const std::string& path, const Confusion& confusion);

// table.csv + confusion_*.csv + SVG figures + report.json.
void write_benchmark_outputs(const std::string& dir, const ExperimentConfig& cfg,
                             const BenchmarkTable& table);

// shap_<class>.csv / shap_overall.csv (feature,class,mean_abs_shap,rank)
// and one horizontal-bar SVG per class.
void write_explain_outputs(const std::string& dir, const ExperimentConfig& cfg,
                           const ExplainResult& result);

// Accuracy-vs-window line chart and grouped bars at the longest window.
void write_accuracy_line_svg(const std::string& path, const BenchmarkTable& table);
void write_accuracy_bars_svg(const std::string& path, const BenchmarkTable& table);
void write_shap_bars_svg(const std::string& path, const std::string& title,
                         const std::vector<ImportanceEntry>& entries, std::size_t top_n);

// Minimal table.csv reader for the `plot` subcommand.
struct CsvBenchmarkRow {
  std::string method;
  double window_s;
  int subject;
  double accuracy;
};
std::vector<CsvBenchmarkRow> read_benchmark_csv(const std::string& path);
BenchmarkTable table_from_rows(const std::vector<CsvBenchmarkRow>& rows);

}  // namespace ssvep
