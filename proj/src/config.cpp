#include "ssvep/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>

#include "ssvep/errors.hpp"

namespace ssvep {

using nlohmann::json;

void ExperimentConfig::validate() const {
  session.validate();
  synth.validate(session);
  if (n_subjects < 1) throw ConfigError("n_subjects must be >= 1");
  if (!(preprocess_low_hz > 0.0 && preprocess_low_hz < preprocess_high_hz &&
        preprocess_high_hz < session.sampling_rate_hz / 2.0)) {
    throw ConfigError("preprocess band must satisfy 0 < low < high < fs/2");
  }
  if (windows_s.empty()) throw ConfigError("windows_s must be non-empty");
  for (double w : windows_s) {
    if (!(w > 0.0 && w <= analysis_segment_s)) {
      throw ConfigError("window lengths must be in (0, analysis_segment_s]");
    }
  }
  if (step_s <= 0.0) throw ConfigError("step_s must be > 0");
  if (methods.empty()) throw ConfigError("methods must be non-empty");
  const std::set<std::string> known = {"cca", "fbcca", "cnn_bilstm", "macnn_bilstm"};
  for (const auto& m : methods) {
    if (!known.count(m)) throw ConfigError("unknown method: " + m);
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train_fraction must be in (0, 1)");
  }
  if (reference_harmonics < 1) throw ConfigError("reference_harmonics must be >= 1");
  filter_bank.validate(session.sampling_rate_hz);
  if (feature_segments < 1) throw ConfigError("feature_segments must be >= 1");
  features.validate();
  if (shap.n_samples < 8) throw ConfigError("shap.n_samples too small");
  if (shap.max_instances < 1) throw ConfigError("shap.max_instances must be >= 1");
  if (shap.background_size < 1) throw ConfigError("shap.background_size must be >= 1");
}

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  cfg.synth.snr_db = -8.0;
  cfg.train.epochs = 150;
  return cfg;
}

ExperimentConfig planted_alpha_config() {
  ExperimentConfig cfg = default_config();
  cfg.synth.class_amplitudes_uv = {0.0, 0.0, 0.0, 0.0};
  cfg.synth.marker.enabled = true;
  cfg.synth.marker.freq_hz = 10.0;
  cfg.synth.marker.class_amplitudes_uv = {0.25, 0.75, 1.5, 3.0};
  cfg.synth.marker.channels = {5, 6, 7};  // PO4, PO5, PO6
  cfg.synth.snr_db = 3.0;
  return cfg;
}

namespace {

[[noreturn]] void bad_field(const std::string& field, const char* why) {
  throw ConfigError("config field '" + field + "': " + why);
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    bad_field(key, "wrong type");
  }
}

NoiseModel parse_noise(const std::string& s) {
  if (s == "white") return NoiseModel::white;
  if (s == "pink") return NoiseModel::pink;
  if (s == "mixture") return NoiseModel::mixture;
  throw ConfigError("config field 'synth.noise': must be white|pink|mixture");
}

std::string noise_name(NoiseModel m) {
  switch (m) {
    case NoiseModel::white: return "white";
    case NoiseModel::pink: return "pink";
    case NoiseModel::mixture: return "mixture";
  }
  return "mixture";
}

}  // namespace

ExperimentConfig parse_config_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be an object");
  const int schema = j.value("schema", 1);
  if (schema != 1) {
    throw ConfigError("unsupported config schema version " + std::to_string(schema));
  }

  ExperimentConfig cfg = default_config();
  read(j, "seed", cfg.seed);
  read(j, "n_subjects", cfg.n_subjects);
  read(j, "output_dir", cfg.output_dir);
  read(j, "windows_s", cfg.windows_s);
  read(j, "step_s", cfg.step_s);
  read(j, "methods", cfg.methods);
  read(j, "train_fraction", cfg.train_fraction);
  read(j, "reference_harmonics", cfg.reference_harmonics);
  read(j, "analysis_segment_s", cfg.analysis_segment_s);
  read(j, "feature_segments", cfg.feature_segments);

  if (j.contains("session")) {
    const json& s = j.at("session");
    read(s, "sampling_rate_hz", cfg.session.sampling_rate_hz);
    read(s, "cue_s", cfg.session.cue_s);
    read(s, "flicker_s", cfg.session.flicker_s);
    read(s, "rest_s", cfg.session.rest_s);
    read(s, "trials_per_class", cfg.session.trials_per_class);
    if (s.contains("channels")) {
      read(s, "channels", cfg.session.layout.names);
    }
  }
  if (j.contains("synth")) {
    const json& s = j.at("synth");
    read(s, "class_amplitudes_uv", cfg.synth.class_amplitudes_uv);
    read(s, "harmonic_rolloff", cfg.synth.harmonic_rolloff);
    read(s, "n_harmonics", cfg.synth.n_harmonics);
    read(s, "snr_db", cfg.synth.snr_db);
    read(s, "channel_gains", cfg.synth.channel_gains);
    if (s.contains("noise")) cfg.synth.noise = parse_noise(s.at("noise").get<std::string>());
    if (s.contains("marker")) {
      const json& mk = s.at("marker");
      cfg.synth.marker.enabled = true;
      read(mk, "enabled", cfg.synth.marker.enabled);
      read(mk, "freq_hz", cfg.synth.marker.freq_hz);
      read(mk, "class_amplitudes_uv", cfg.synth.marker.class_amplitudes_uv);
      read(mk, "channels", cfg.synth.marker.channels);
    }
  }
  if (j.contains("preprocess")) {
    const json& p = j.at("preprocess");
    read(p, "low_hz", cfg.preprocess_low_hz);
    read(p, "high_hz", cfg.preprocess_high_hz);
  }
  if (j.contains("filter_bank")) {
    const json& fb = j.at("filter_bank");
    if (fb.contains("passbands")) {
      cfg.filter_bank.passbands_hz.clear();
      for (const auto& band : fb.at("passbands")) {
        if (!band.is_array() || band.size() != 2) {
          bad_field("filter_bank.passbands", "each passband must be [low, high]");
        }
        cfg.filter_bank.passbands_hz.emplace_back(band[0].get<double>(),
                                                  band[1].get<double>());
      }
    }
    read(fb, "weight_a", cfg.filter_bank.weight_a);
    read(fb, "weight_b", cfg.filter_bank.weight_b);
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    read(m, "conv_channels", cfg.model.conv_channels);
    read(m, "conv_kernel", cfg.model.conv_kernel);
    read(m, "conv_stride", cfg.model.conv_stride);
    read(m, "lstm_hidden", cfg.model.lstm_hidden);
    read(m, "n_heads", cfg.model.n_heads);
    read(m, "d_k", cfg.model.d_k);
    read(m, "dropout", cfg.model.dropout);
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    read(t, "learning_rate", cfg.train.learning_rate);
    read(t, "weight_decay", cfg.train.weight_decay);
    read(t, "lr_decay", cfg.train.lr_decay);
    read(t, "lr_step_epochs", cfg.train.lr_step_epochs);
    read(t, "epochs", cfg.train.epochs);
    read(t, "batch_size", cfg.train.batch_size);
  }
  if (j.contains("features")) {
    const json& f = j.at("features");
    read(f, "psd_segment_s", cfg.features.psd_segment_s);
    read(f, "psd_overlap", cfg.features.psd_overlap);
  }
  if (j.contains("shap")) {
    const json& s = j.at("shap");
    read(s, "n_samples", cfg.shap.n_samples);
    read(s, "max_instances", cfg.shap.max_instances);
    read(s, "background_size", cfg.shap.background_size);
  }

  cfg.model.input_dim =
      static_cast<int>(cfg.session.layout.size() * kFeaturesPerChannel);
  cfg.model.seq_len = cfg.feature_segments;
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& name_or_path) {
  if (name_or_path == "default") return default_config();
  if (name_or_path == "planted-alpha") return planted_alpha_config();
  std::ifstream f(name_or_path);
  if (!f) throw DataError("config file not found: " + name_or_path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_config_json(text);
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["schema"] = 1;
  j["seed"] = cfg.seed;
  j["n_subjects"] = cfg.n_subjects;
  j["output_dir"] = cfg.output_dir;
  j["session"] = {{"sampling_rate_hz", cfg.session.sampling_rate_hz},
                  {"cue_s", cfg.session.cue_s},
                  {"flicker_s", cfg.session.flicker_s},
                  {"rest_s", cfg.session.rest_s},
                  {"trials_per_class", cfg.session.trials_per_class},
                  {"channels", cfg.session.layout.names}};
  j["synth"] = {{"class_amplitudes_uv", cfg.synth.class_amplitudes_uv},
                {"harmonic_rolloff", cfg.synth.harmonic_rolloff},
                {"n_harmonics", cfg.synth.n_harmonics},
                {"noise", noise_name(cfg.synth.noise)},
                {"snr_db", cfg.synth.snr_db},
                {"channel_gains", cfg.synth.channel_gains}};
  if (cfg.synth.marker.enabled) {
    j["synth"]["marker"] = {{"enabled", true},
                            {"freq_hz", cfg.synth.marker.freq_hz},
                            {"class_amplitudes_uv", cfg.synth.marker.class_amplitudes_uv},
                            {"channels", cfg.synth.marker.channels}};
  }
  j["preprocess"] = {{"low_hz", cfg.preprocess_low_hz}, {"high_hz", cfg.preprocess_high_hz}};
  j["analysis_segment_s"] = cfg.analysis_segment_s;
  j["windows_s"] = cfg.windows_s;
  j["step_s"] = cfg.step_s;
  j["methods"] = cfg.methods;
  j["train_fraction"] = cfg.train_fraction;
  j["reference_harmonics"] = cfg.reference_harmonics;
  json bands = json::array();
  for (const auto& [lo, hi] : cfg.filter_bank.passbands_hz) bands.push_back({lo, hi});
  j["filter_bank"] = {{"passbands", bands},
                      {"weight_a", cfg.filter_bank.weight_a},
                      {"weight_b", cfg.filter_bank.weight_b}};
  j["model"] = {{"conv_channels", cfg.model.conv_channels},
                {"conv_kernel", cfg.model.conv_kernel},
                {"conv_stride", cfg.model.conv_stride},
                {"lstm_hidden", cfg.model.lstm_hidden},
                {"n_heads", cfg.model.n_heads},
                {"d_k", cfg.model.d_k},
                {"dropout", cfg.model.dropout}};
  j["train"] = {{"learning_rate", cfg.train.learning_rate},
                {"weight_decay", cfg.train.weight_decay},
                {"lr_decay", cfg.train.lr_decay},
                {"lr_step_epochs", cfg.train.lr_step_epochs},
                {"epochs", cfg.train.epochs},
                {"batch_size", cfg.train.batch_size}};
  j["feature_segments"] = cfg.feature_segments;
  j["features"] = {{"psd_segment_s", cfg.features.psd_segment_s},
                   {"psd_overlap", cfg.features.psd_overlap}};
  j["shap"] = {{"n_samples", cfg.shap.n_samples},
               {"max_instances", cfg.shap.max_instances},
               {"background_size", cfg.shap.background_size}};
  return j.dump(2);
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  const std::string text = config_to_json(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace ssvep
