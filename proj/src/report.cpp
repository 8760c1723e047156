#include "ssvep/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ssvep/errors.hpp"

namespace ssvep {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "0";
  return std::string(buf, ptr);
}

std::string format_fixed(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw DataError("cannot create directory " + path + ": " + ec.message());
}

std::string cell_tag(const std::string& method, double window_s, int subject) {
  return method + "_w" + format_fixed(window_s, 2) + "_s" + std::to_string(subject);
}

void write_benchmark_csv(const std::string& path, const BenchmarkTable& table) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot open for writing: " + path);
  f << "method,window_s,subject,accuracy\n";
  for (std::size_t mi = 0; mi < table.methods.size(); ++mi) {
    for (std::size_t wi = 0; wi < table.windows_s.size(); ++wi) {
      for (int s = 0; s < table.n_subjects; ++s) {
        const BenchmarkCell& cell = table.cell(mi, wi, s);
        f << cell.method << "," << format_fixed(cell.window_s, 2) << "," << cell.subject
          << "," << (cell.error.empty() ? format_double(cell.accuracy) : "error") << "\n";
      }
    }
  }
}

void write_confusion_csv(const std::string& path, const Confusion& confusion) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot open for writing: " + path);
  f << "true_label";
  for (const auto& cls : StimulusClass::all()) f << ",pred_" << cls.name;
  f << "\n";
  for (std::size_t i = 0; i < 4; ++i) {
    f << StimulusClass::from_label(static_cast<int>(i)).name;
    for (std::size_t j = 0; j < 4; ++j) f << "," << confusion.counts[i][j];
    f << "\n";
  }
}

namespace {

// Minimal SVG plumbing: fixed canvas, no external dependencies.
constexpr int kWidth = 640;
constexpr int kHeight = 420;
constexpr int kMarginLeft = 64;
constexpr int kMarginRight = 24;
constexpr int kMarginTop = 36;
constexpr int kMarginBottom = 56;

const char* method_color(const std::string& method) {
  if (method == "cca") return "#1f77b4";
  if (method == "fbcca") return "#ff7f0e";
  if (method == "cnn_bilstm") return "#2ca02c";
  if (method == "macnn_bilstm") return "#d62728";
  return "#7f7f7f";
}

struct SvgDoc {
  std::ostringstream out;

  SvgDoc(int width, int height, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";
  }
  void line(double x1, double y1, double x2, double y2, const char* stroke,
            double width = 1.0) {
    out << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\"" << y2
        << "\" stroke=\"" << stroke << "\" stroke-width=\"" << width << "\"/>\n";
  }
  void text(double x, double y, const std::string& s, const char* anchor = "middle",
            int size = 11) {
    out << "<text x=\"" << x << "\" y=\"" << y << "\" text-anchor=\"" << anchor
        << "\" font-family=\"sans-serif\" font-size=\"" << size << "\">" << s
        << "</text>\n";
  }
  void rect(double x, double y, double w, double h, const char* fill) {
    out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << h
        << "\" fill=\"" << fill << "\"/>\n";
  }
  void circle(double x, double y, double r, const char* fill) {
    out << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"" << r << "\" fill=\"" << fill
        << "\"/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const char* stroke) {
    out << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, y] : pts) out << x << "," << y << " ";
    out << "\"/>\n";
  }
  void save(const std::string& path) {
    out << "</svg>\n";
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot open for writing: " + path);
    f << out.str();
  }
};

double x_for(double w, double w_min, double w_max) {
  const double span = w_max > w_min ? w_max - w_min : 1.0;
  return kMarginLeft + (w - w_min) / span * (kWidth - kMarginLeft - kMarginRight);
}

double y_for(double acc) {  // accuracy axis 0..1
  return kMarginTop + (1.0 - acc) * (kHeight - kMarginTop - kMarginBottom);
}

}  // namespace

void write_accuracy_line_svg(const std::string& path, const BenchmarkTable& table) {
  SvgDoc svg(kWidth, kHeight, "Mean accuracy vs window length");
  const double w_min = *std::min_element(table.windows_s.begin(), table.windows_s.end());
  const double w_max = *std::max_element(table.windows_s.begin(), table.windows_s.end());

  svg.line(kMarginLeft, y_for(0.0), kWidth - kMarginRight, y_for(0.0), "#000");
  svg.line(kMarginLeft, y_for(0.0), kMarginLeft, kMarginTop, "#000");
  for (double tick = 0.0; tick <= 1.0001; tick += 0.25) {
    svg.line(kMarginLeft - 4, y_for(tick), kMarginLeft, y_for(tick), "#000");
    svg.text(kMarginLeft - 8, y_for(tick) + 4, format_fixed(tick, 2), "end");
    svg.line(kMarginLeft, y_for(tick), kWidth - kMarginRight, y_for(tick), "#ddd", 0.5);
  }
  for (double w : table.windows_s) {
    svg.line(x_for(w, w_min, w_max), y_for(0.0), x_for(w, w_min, w_max), y_for(0.0) + 4,
             "#000");
    svg.text(x_for(w, w_min, w_max), y_for(0.0) + 18, format_fixed(w, 2) + " s");
  }
  // chance level
  svg.line(kMarginLeft, y_for(0.25), kWidth - kMarginRight, y_for(0.25), "#999", 1.0);
  svg.text(kWidth - kMarginRight, y_for(0.25) - 4, "chance", "end", 10);

  double legend_x = kMarginLeft + 8;
  for (const auto& method : table.methods) {
    std::vector<std::pair<double, double>> pts;
    for (double w : table.windows_s) {
      pts.emplace_back(x_for(w, w_min, w_max), y_for(table.mean_accuracy(method, w)));
    }
    svg.polyline(pts, method_color(method));
    for (const auto& [x, y] : pts) svg.circle(x, y, 3, method_color(method));
    svg.rect(legend_x, kHeight - 20, 12, 12, method_color(method));
    svg.text(legend_x + 16, kHeight - 10, method, "start");
    legend_x += 30 + 8.0 * static_cast<double>(method.size());
  }
  svg.save(path);
}

void write_accuracy_bars_svg(const std::string& path, const BenchmarkTable& table) {
  const double w_max = *std::max_element(table.windows_s.begin(), table.windows_s.end());
  SvgDoc svg(kWidth, kHeight,
             "Accuracy at the " + format_fixed(w_max, 2) + " s window");

  svg.line(kMarginLeft, y_for(0.0), kWidth - kMarginRight, y_for(0.0), "#000");
  svg.line(kMarginLeft, y_for(0.0), kMarginLeft, kMarginTop, "#000");
  for (double tick = 0.0; tick <= 1.0001; tick += 0.25) {
    svg.text(kMarginLeft - 8, y_for(tick) + 4, format_fixed(tick, 2), "end");
    svg.line(kMarginLeft, y_for(tick), kWidth - kMarginRight, y_for(tick), "#ddd", 0.5);
  }

  const double span = kWidth - kMarginLeft - kMarginRight;
  const double slot = span / static_cast<double>(table.methods.size());
  for (std::size_t mi = 0; mi < table.methods.size(); ++mi) {
    const std::string& method = table.methods[mi];
    const double mean = table.mean_accuracy(method, w_max);
    const double sd = table.std_accuracy(method, w_max);
    const double cx = kMarginLeft + slot * (static_cast<double>(mi) + 0.5);
    const double bar_w = slot * 0.55;
    svg.rect(cx - bar_w / 2, y_for(mean), bar_w, y_for(0.0) - y_for(mean),
             method_color(method));
    svg.line(cx, y_for(std::min(1.0, mean + sd)), cx, y_for(std::max(0.0, mean - sd)),
             "#333", 1.5);
    svg.text(cx, y_for(0.0) + 18, method);
    svg.text(cx, y_for(mean) - 6, format_fixed(mean, 3));
  }
  svg.save(path);
}

void write_shap_bars_svg(const std::string& path, const std::string& title,
                         const std::vector<ImportanceEntry>& entries, std::size_t top_n) {
  const std::size_t n = std::min(top_n, entries.size());
  SvgDoc svg(kWidth, kHeight, title);
  double vmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) vmax = std::max(vmax, entries[i].mean_abs_shap);
  if (vmax <= 0.0) vmax = 1.0;

  const double left = 170.0;
  const double track = kWidth - left - kMarginRight;
  const double row_h = (kHeight - kMarginTop - 20.0) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = kMarginTop + row_h * static_cast<double>(i);
    const double w = entries[i].mean_abs_shap / vmax * track;
    svg.rect(left, y + row_h * 0.15, w, row_h * 0.7, "#4c72b0");
    svg.text(left - 6, y + row_h * 0.62, entries[i].feature, "end");
    svg.text(left + w + 4, y + row_h * 0.62, format_double(entries[i].mean_abs_shap),
             "start", 10);
  }
  svg.save(path);
}

void write_benchmark_outputs(const std::string& dir, const ExperimentConfig& cfg,
                             const BenchmarkTable& table) {
  ensure_dir(dir);
  write_benchmark_csv(dir + "/table.csv", table);
  for (std::size_t mi = 0; mi < table.methods.size(); ++mi) {
    for (std::size_t wi = 0; wi < table.windows_s.size(); ++wi) {
      for (int s = 0; s < table.n_subjects; ++s) {
        const BenchmarkCell& cell = table.cell(mi, wi, s);
        if (!cell.error.empty()) continue;
        write_confusion_csv(
            dir + "/confusion_" + cell_tag(cell.method, cell.window_s, s) + ".csv",
            cell.confusion);
      }
    }
  }
  write_accuracy_line_svg(dir + "/accuracy_vs_window.svg", table);
  write_accuracy_bars_svg(dir + "/accuracy_bars.svg", table);

  json j;
  j["schema"] = 1;
  char hash_hex[24];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(config_hash(cfg)));
  j["config_hash"] = hash_hex;
  j["seed"] = cfg.seed;
  j["n_subjects"] = cfg.n_subjects;
  j["methods"] = table.methods;
  j["windows_s"] = table.windows_s;
  json rows = json::array();
  for (const auto& method : table.methods) {
    for (double w : table.windows_s) {
      json row;
      row["method"] = method;
      row["window_s"] = w;
      row["mean_accuracy"] = table.mean_accuracy(method, w);
      row["std_accuracy"] = table.std_accuracy(method, w);
      row["subject_accuracies"] = table.subject_accuracies(method, w);
      rows.push_back(row);
    }
  }
  j["results"] = rows;
  json errors = json::array();
  for (const auto& cell : table.cells) {
    if (!cell.error.empty()) {
      errors.push_back({{"cell", cell_tag(cell.method, cell.window_s, cell.subject)},
                        {"error", cell.error}});
    }
  }
  j["cell_errors"] = errors;
  std::ofstream f(dir + "/report.json", std::ios::trunc);
  if (!f) throw DataError("cannot open for writing: " + dir + "/report.json");
  f << j.dump(2) << "\n";
}

void write_explain_outputs(const std::string& dir, const ExperimentConfig& cfg,
                           const ExplainResult& result) {
  (void)cfg;
  ensure_dir(dir);
  auto write_table = [&](const std::string& path, const std::string& class_name,
                         const std::vector<ImportanceEntry>& entries) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot open for writing: " + path);
    f << "feature,class,mean_abs_shap,rank\n";
    for (const auto& e : entries) {
      f << e.feature << "," << class_name << "," << format_double(e.mean_abs_shap) << ","
        << e.rank << "\n";
    }
  };
  for (const auto& [cls, entries] : result.importance.per_class) {
    const std::string name = StimulusClass::from_label(cls).name;
    write_table(dir + "/shap_" + name + ".csv", name, entries);
    write_shap_bars_svg(dir + "/shap_" + name + ".svg",
                        "Mean |SHAP| - class " + name, entries, 15);
  }
  write_table(dir + "/shap_overall.csv", "overall", result.importance.overall);
  write_shap_bars_svg(dir + "/shap_overall.svg", "Mean |SHAP| - all classes",
                      result.importance.overall, 15);
}

std::vector<CsvBenchmarkRow> read_benchmark_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open: " + path);
  std::string line;
  if (!std::getline(f, line) || line != "method,window_s,subject,accuracy") {
    throw DataError("unexpected table.csv header in " + path);
  }
  std::vector<CsvBenchmarkRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string method, w, s, acc;
    if (!std::getline(ss, method, ',') || !std::getline(ss, w, ',') ||
        !std::getline(ss, s, ',') || !std::getline(ss, acc, ',')) {
      throw DataError("malformed row in " + path + ": " + line);
    }
    if (acc == "error") continue;
    rows.push_back({method, std::stod(w), std::stoi(s), std::stod(acc)});
  }
  return rows;
}

BenchmarkTable table_from_rows(const std::vector<CsvBenchmarkRow>& rows) {
  BenchmarkTable table;
  std::set<int> subjects;
  for (const auto& r : rows) {
    if (std::find(table.methods.begin(), table.methods.end(), r.method) ==
        table.methods.end()) {
      table.methods.push_back(r.method);
    }
    if (std::find(table.windows_s.begin(), table.windows_s.end(), r.window_s) ==
        table.windows_s.end()) {
      table.windows_s.push_back(r.window_s);
    }
    subjects.insert(r.subject);
  }
  std::sort(table.windows_s.begin(), table.windows_s.end());
  table.n_subjects = static_cast<int>(subjects.size());
  table.cells.resize(table.methods.size() * table.windows_s.size() *
                     static_cast<std::size_t>(table.n_subjects));
  for (const auto& r : rows) {
    const auto mi = static_cast<std::size_t>(
        std::find(table.methods.begin(), table.methods.end(), r.method) -
        table.methods.begin());
    const auto wi = static_cast<std::size_t>(
        std::find(table.windows_s.begin(), table.windows_s.end(), r.window_s) -
        table.windows_s.begin());
    BenchmarkCell& cell =
        table.cells[(mi * table.windows_s.size() + wi) *
                        static_cast<std::size_t>(table.n_subjects) +
                    static_cast<std::size_t>(r.subject)];
    cell.method = r.method;
    cell.window_s = r.window_s;
    cell.subject = r.subject;
    cell.accuracy = r.accuracy;
  }
  return table;
}

}  // namespace ssvep
