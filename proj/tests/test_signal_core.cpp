#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "ssvep/epoch_io.hpp"
#include "ssvep/epoch_ops.hpp"
#include "ssvep/errors.hpp"
#include "ssvep/fft.hpp"
#include "ssvep/filters.hpp"
#include "ssvep/rng.hpp"
#include "ssvep/synth.hpp"

using namespace ssvep;

namespace {

std::vector<double> sine(double freq_hz, double fs, std::size_t n, double amp = 1.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = amp * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / fs);
  }
  return x;
}

double central_rms(std::span<const double> x, std::size_t discard) {
  double ss = 0.0;
  std::size_t n = 0;
  for (std::size_t i = discard; i + discard < x.size(); ++i, ++n) ss += x[i] * x[i];
  return std::sqrt(ss / static_cast<double>(n));
}

SessionMeta quick_meta(int trials_per_class = 2, double flicker_s = 7.0) {
  SessionMeta meta;
  meta.trials_per_class = trials_per_class;
  meta.flicker_s = flicker_s;
  return meta;
}

double dominant_freq(std::span<const double> x, double fs) {
  const auto spec = fft::rfft(x);
  std::size_t best = 1;
  for (std::size_t k = 2; k < spec.size(); ++k) {
    if (std::abs(spec[k]) > std::abs(spec[best])) best = k;
  }
  return static_cast<double>(best) * fs / static_cast<double>(x.size());
}

}  // namespace

TEST_CASE("stimulus classes map labels to frequencies bijectively") {
  CHECK(StimulusClass::from_label(0).frequency_hz == 6.0);
  CHECK(StimulusClass::from_label(1).frequency_hz == 8.0);
  CHECK(StimulusClass::from_label(2).frequency_hz == 10.0);
  CHECK(StimulusClass::from_label(3).frequency_hz == 12.0);
  CHECK(StimulusClass::from_frequency(10.0).label == 2);
  CHECK(std::string(StimulusClass::from_label(0).name) == "Start");
  CHECK(std::string(StimulusClass::from_label(3).name) == "Passive");
  for (const auto& c : StimulusClass::all()) {
    CHECK(StimulusClass::from_frequency(c.frequency_hz).label == c.label);
  }
  CHECK_THROWS_AS(StimulusClass::from_label(4), ParamError);
  CHECK_THROWS_AS(StimulusClass::from_frequency(7.0), ParamError);
}

TEST_CASE("standard layout lists the eight parieto-occipital channels") {
  const ChannelLayout layout = ChannelLayout::standard();
  CHECK(layout.names ==
        std::vector<std::string>{"Oz", "O1", "O2", "POz", "PO3", "PO4", "PO5", "PO6"});
  CHECK(layout.reference == "Cz");
  CHECK(layout.ground == "Fpz");
  CHECK(layout.index_of("PO6") == 7);
  layout.validate();

  ChannelLayout dup = layout;
  dup.names.push_back("Oz");
  CHECK_THROWS_AS(dup.validate(), ConfigError);
}

TEST_CASE("generator is deterministic per seed") {
  SynthConfig cfg;
  cfg.seed = 1234;
  const SessionMeta meta = quick_meta();
  const EpochSet a = generate_synthetic_session(cfg, meta);
  const EpochSet b = generate_synthetic_session(cfg, meta);
  CHECK(a.data == b.data);  // bit-identical
  CHECK(a.labels == b.labels);

  cfg.seed = 1235;
  const EpochSet c = generate_synthetic_session(cfg, meta);
  CHECK(a.data != c.data);
}

TEST_CASE("near-noiseless session puts the PSD peak at the class frequency") {
  SynthConfig cfg;
  cfg.snr_db = 60.0;
  cfg.seed = 7;
  const SessionMeta meta = quick_meta();
  const EpochSet epochs = generate_synthetic_session(cfg, meta);
  const double df = meta.sampling_rate_hz / static_cast<double>(epochs.n_samples);
  for (std::size_t t = 0; t < epochs.n_trials; ++t) {
    if (epochs.labels[t] != 0) continue;  // Start = 6 Hz
    for (std::size_t c = 0; c < epochs.n_channels; ++c) {
      const double peak = dominant_freq(epochs.trial_channel(t, c), meta.sampling_rate_hz);
      CHECK(std::abs(peak - 6.0) <= df + 1e-9);
    }
  }
}

TEST_CASE("generated trials hit the requested SNR") {
  SynthConfig cfg;
  cfg.snr_db = 0.0;
  cfg.seed = 99;
  const SessionMeta meta = quick_meta(10);
  for (std::size_t t = 0; t < 8; ++t) {
    const int label = static_cast<int>(t % 4);
    const TrialComponents parts = synth_trial_components(cfg, meta, t, label);
    double clean = 0.0, noise = 0.0;
    for (double v : parts.clean) clean += v * v;
    for (double v : parts.noise) noise += v * v;
    const double snr_db = 10.0 * std::log10(clean / noise);
    CHECK(std::abs(snr_db - 0.0) < 0.5);
    // components really compose the emitted data
    const EpochSet session = generate_synthetic_session(cfg, meta);
    const auto ch0 = session.trial_channel(t, 0);
    CHECK(ch0[0] == doctest::Approx(parts.clean[0] + parts.noise[0]).epsilon(1e-12));
  }
}

TEST_CASE("invalid synth configs name the offending field") {
  const SessionMeta meta = quick_meta();
  SynthConfig cfg;
  cfg.n_harmonics = 0;
  CHECK_THROWS_WITH_AS(generate_synthetic_session(cfg, meta),
                       doctest::Contains("n_harmonics"), ConfigError);
  cfg = SynthConfig{};
  cfg.class_amplitudes_uv[2] = -1.0;
  CHECK_THROWS_WITH_AS(generate_synthetic_session(cfg, meta),
                       doctest::Contains("class_amplitudes_uv"), ConfigError);
  cfg = SynthConfig{};
  cfg.channel_gains = {1.0, 2.0};  // layout has 8 channels
  CHECK_THROWS_WITH_AS(generate_synthetic_session(cfg, meta),
                       doctest::Contains("channel_gains"), ConfigError);
  cfg = SynthConfig{};
  cfg.marker.enabled = true;
  cfg.marker.channels = {42};
  CHECK_THROWS_WITH_AS(generate_synthetic_session(cfg, meta),
                       doctest::Contains("marker.channels"), ConfigError);
}

TEST_CASE("band-pass keeps in-band tones and rejects out-of-band ones") {
  const double fs = 1000.0;
  const ButterworthBandpass filter(4, 4.0, 25.0, fs);
  const std::size_t n = 4000, edge = 500;

  SUBCASE("10 Hz passes within 5%") {
    const auto y = filter.filtfilt(sine(10.0, fs, n));
    const double rms = central_rms(y, edge);
    CHECK(rms == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.05));
  }
  SUBCASE("50 Hz attenuated by at least 20 dB") {
    const auto y = filter.filtfilt(sine(50.0, fs, n));
    const double rms = central_rms(y, edge);
    const double attenuation_db = 20.0 * std::log10((1.0 / std::sqrt(2.0)) / rms);
    CHECK(attenuation_db >= 20.0);
  }
  SUBCASE("DC offset is removed") {
    std::vector<double> x(n, 5.0);
    const auto y = filter.filtfilt(x);
    double mean = 0.0;
    std::size_t count = 0;
    for (std::size_t i = edge; i + edge < n; ++i, ++count) mean += y[i];
    mean /= static_cast<double>(count);
    CHECK(std::abs(mean) < 0.05);
  }
  SUBCASE("invalid cutoffs are rejected") {
    CHECK_THROWS_AS(ButterworthBandpass(4, 25.0, 4.0, fs), ParamError);
    CHECK_THROWS_AS(ButterworthBandpass(4, 0.0, 25.0, fs), ParamError);
    CHECK_THROWS_AS(ButterworthBandpass(4, 4.0, 600.0, fs), ParamError);
  }
}

TEST_CASE("filtering is linear") {
  const double fs = 1000.0;
  const ButterworthBandpass filter(4, 4.0, 25.0, fs);
  Rng rng(5);
  std::vector<double> x(2000), y(2000), mix(2000);
  const double a = 2.5, b = -0.75;
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.normal();
    y[i] = rng.normal();
    mix[i] = a * x[i] + b * y[i];
  }
  const auto fx = filter.filtfilt(x);
  const auto fy = filter.filtfilt(y);
  const auto fmix = filter.filtfilt(mix);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double expected = a * fx[i] + b * fy[i];
    num += (fmix[i] - expected) * (fmix[i] - expected);
    den += expected * expected;
  }
  CHECK(std::sqrt(num / den) < 1e-9);
}

TEST_CASE("bandpass_filter returns a copy and leaves the input alone") {
  SynthConfig cfg;
  cfg.seed = 3;
  const SessionMeta meta = quick_meta();
  const EpochSet epochs = generate_synthetic_session(cfg, meta);
  const std::vector<double> before = epochs.data;
  const EpochSet filtered = bandpass_filter(epochs);
  CHECK(epochs.data == before);
  CHECK(filtered.n_trials == epochs.n_trials);
  CHECK(filtered.data != epochs.data);
  CHECK_THROWS_AS(bandpass_filter(epochs, 25.0, 4.0), ParamError);
}

TEST_CASE("analysis segment is the centered middle four seconds") {
  SessionMeta meta = quick_meta(10);  // 40 trials x 8 ch x 7000
  SynthConfig cfg;
  cfg.seed = 11;
  const EpochSet epochs = generate_synthetic_session(cfg, meta);
  REQUIRE(epochs.n_trials == 40);
  REQUIRE(epochs.n_samples == 7000);

  const EpochSet cropped = extract_analysis_segment(epochs);
  CHECK(cropped.n_trials == 40);
  CHECK(cropped.n_channels == 8);
  CHECK(cropped.n_samples == 4000);
  CHECK(cropped.meta.flicker_s == 4.0);
  // samples 1500..5500 of the original
  CHECK(cropped.at(5, 3, 0) == epochs.at(5, 3, 1500));
  CHECK(cropped.at(5, 3, 3999) == epochs.at(5, 3, 5499));
  CHECK(cropped.labels == epochs.labels);

  SUBCASE("a trial of exactly 4 s is returned unchanged") {
    meta.flicker_s = 4.0;
    const EpochSet exact = generate_synthetic_session(cfg, meta);
    const EpochSet same = extract_analysis_segment(exact);
    CHECK(same.data == exact.data);
  }
  SUBCASE("trials shorter than 4 s are a length error") {
    meta.flicker_s = 3.0;
    const EpochSet three = generate_synthetic_session(cfg, meta);
    CHECK_THROWS_AS(extract_analysis_segment(three), LengthError);
  }
}

TEST_CASE("window slicing follows the closed-form count") {
  SessionMeta meta = quick_meta(2, 4.0);
  SynthConfig cfg;
  cfg.seed = 21;
  const EpochSet epochs = generate_synthetic_session(cfg, meta);
  REQUIRE(epochs.n_samples == 4000);

  SUBCASE("0.5 s windows every 0.2 s give 18 per trial") {
    const EpochSet w = slice_windows(epochs, 0.5, 0.2);
    CHECK(w.n_trials == epochs.n_trials * 18);
    CHECK(w.n_samples == 500);
  }
  SUBCASE("1.5 s windows every 0.2 s give 13 per trial") {
    const EpochSet w = slice_windows(epochs, 1.5, 0.2);
    CHECK(w.n_trials == epochs.n_trials * 13);
  }
  SUBCASE("a full-length window is the trial itself") {
    const EpochSet w = slice_windows(epochs, 4.0, 0.2);
    CHECK(w.n_trials == epochs.n_trials);
    CHECK(w.data == epochs.data);
    CHECK(w.labels == epochs.labels);
  }
  SUBCASE("windows inherit labels and slide by the step") {
    const EpochSet w = slice_windows(epochs, 0.5, 0.2);
    CHECK(w.labels[0] == epochs.labels[0]);
    CHECK(w.labels[17] == epochs.labels[0]);
    CHECK(w.labels[18] == epochs.labels[1]);
    CHECK(w.at(1, 2, 0) == epochs.at(0, 2, 200));   // second window starts at 0.2 s
    CHECK(w.at(17, 2, 499) == epochs.at(0, 2, 3899));
  }
  SUBCASE("window longer than the trial is a length error") {
    CHECK_THROWS_AS(slice_windows(epochs, 5.0, 0.2), LengthError);
  }
  SUBCASE("count formula holds over a randomized grid") {
    Rng rng(77);
    for (int rep = 0; rep < 50; ++rep) {
      const double fs = 100.0;
      const auto len_samp = 50 + rng.below(400);
      const auto win_samp = 1 + rng.below(len_samp);
      const auto step_samp = 1 + rng.below(100);
      SessionMeta m = quick_meta(1);
      m.sampling_rate_hz = fs;
      m.flicker_s = static_cast<double>(len_samp) / fs;
      SynthConfig c;
      c.seed = static_cast<std::uint64_t>(rep);
      const EpochSet e = generate_synthetic_session(c, m);
      REQUIRE(e.n_samples == len_samp);
      const EpochSet w = slice_windows(e, static_cast<double>(win_samp) / fs,
                                       static_cast<double>(step_samp) / fs);
      const std::size_t expected = (len_samp - win_samp) / step_samp + 1;
      CHECK(w.n_trials == e.n_trials * expected);
    }
  }
}

TEST_CASE("stratified split keeps the per-class ratio") {
  SessionMeta meta = quick_meta(10, 4.0);
  SynthConfig cfg;
  cfg.seed = 31;
  const EpochSet epochs = generate_synthetic_session(cfg, meta);

  auto class_counts = [](const EpochSet& e) {
    std::array<int, 4> counts{0, 0, 0, 0};
    for (int label : e.labels) counts[static_cast<std::size_t>(label)]++;
    return counts;
  };

  SUBCASE("fraction 0.7 on 10 per class gives 28/12 at 7/3 per class") {
    const auto [train, test] = train_test_split(epochs, 0.7, 5);
    CHECK(train.n_trials == 28);
    CHECK(test.n_trials == 12);
    CHECK(class_counts(train) == std::array<int, 4>{7, 7, 7, 7});
    CHECK(class_counts(test) == std::array<int, 4>{3, 3, 3, 3});
  }
  SUBCASE("fraction 0.5 gives 5/5 per class") {
    const auto [train, test] = train_test_split(epochs, 0.5, 5);
    CHECK(class_counts(train) == std::array<int, 4>{5, 5, 5, 5});
    CHECK(class_counts(test) == std::array<int, 4>{5, 5, 5, 5});
  }
  SUBCASE("split is a partition of the trials") {
    const auto [train, test] = train_test_split(epochs, 0.7, 9);
    CHECK(train.n_trials + test.n_trials == epochs.n_trials);
    // identify trials by their first sample (distinct with probability 1)
    std::set<double> seen;
    for (std::size_t t = 0; t < epochs.n_trials; ++t) seen.insert(epochs.at(t, 0, 0));
    REQUIRE(seen.size() == epochs.n_trials);
    std::set<double> got;
    for (std::size_t t = 0; t < train.n_trials; ++t) got.insert(train.at(t, 0, 0));
    for (std::size_t t = 0; t < test.n_trials; ++t) got.insert(test.at(t, 0, 0));
    CHECK(got == seen);
  }
  SUBCASE("different seeds permute but keep counts") {
    const auto [train_a, test_a] = train_test_split(epochs, 0.7, 1);
    const auto [train_b, test_b] = train_test_split(epochs, 0.7, 2);
    CHECK(class_counts(train_a) == class_counts(train_b));
    CHECK(train_a.data != train_b.data);
    const auto [train_a2, test_a2] = train_test_split(epochs, 0.7, 1);
    CHECK(train_a.data == train_a2.data);
  }
  SUBCASE("a class with fewer than 2 trials cannot be stratified") {
    EpochSet tiny(5, epochs.n_channels, 100, epochs.meta, Provenance::synthetic);
    tiny.labels = {0, 0, 1, 2, 3};  // class 1 has one trial
    CHECK_THROWS_AS(train_test_split(tiny, 0.7, 0), StratificationError);
  }
  SUBCASE("input is not mutated") {
    const std::vector<double> before = epochs.data;
    (void)train_test_split(epochs, 0.7, 5);
    CHECK(epochs.data == before);
  }
}

TEST_CASE("SSVP1 files round-trip and reject corruption") {
  SessionMeta meta = quick_meta(2, 1.0);
  SynthConfig cfg;
  cfg.seed = 41;
  EpochSet epochs = generate_synthetic_session(cfg, meta);
  // make values exactly f32-representable so the round-trip is exact
  for (double& v : epochs.data) v = static_cast<double>(static_cast<float>(v));

  const std::string path = (std::filesystem::temp_directory_path() / "roundtrip.ssvp").string();
  write_ssvp(path, epochs);
  const EpochSet back = read_ssvp(path);
  CHECK(back.n_trials == epochs.n_trials);
  CHECK(back.n_channels == epochs.n_channels);
  CHECK(back.n_samples == epochs.n_samples);
  CHECK(back.labels == epochs.labels);
  CHECK(back.data == epochs.data);
  CHECK(back.meta.layout.names == epochs.meta.layout.names);
  CHECK(back.provenance == Provenance::file);

  SUBCASE("wrong magic is rejected") {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    bytes[0] = 'X';
    const std::string bad = path + ".badmagic";
    std::ofstream(bad, std::ios::binary) << bytes;
    CHECK_THROWS_WITH_AS(read_ssvp(bad), doctest::Contains("magic"), DataError);
  }
  SUBCASE("truncated payload is rejected") {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    const std::string bad = path + ".short";
    std::ofstream(bad, std::ios::binary) << bytes.substr(0, bytes.size() - 13);
    CHECK_THROWS_WITH_AS(read_ssvp(bad), doctest::Contains("truncated"), DataError);
  }
  SUBCASE("missing file is a data error") {
    CHECK_THROWS_AS(read_ssvp("/no/such/file.ssvp"), DataError);
  }
}

TEST_CASE("epoch validation catches inconsistent containers") {
  SessionMeta meta = quick_meta(1, 0.5);
  SynthConfig cfg;
  EpochSet e = generate_synthetic_session(cfg, meta);
  e.validate();

  EpochSet bad_labels = e;
  bad_labels.labels.pop_back();
  CHECK_THROWS_AS(bad_labels.validate(), ShapeError);

  EpochSet bad_values = e;
  bad_values.data[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(bad_values.validate(), NumericError);
}
