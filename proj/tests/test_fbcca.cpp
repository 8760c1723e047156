#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ssvep/cca.hpp"
#include "ssvep/epoch_ops.hpp"
#include "ssvep/errors.hpp"
#include "ssvep/fbcca.hpp"
#include "ssvep/filters.hpp"
#include "ssvep/rng.hpp"
#include "ssvep/synth.hpp"

using namespace ssvep;

namespace {

Eigen::MatrixXd sine_window(double freq_hz, double fs, Eigen::Index channels,
                            Eigen::Index samples, double noise = 0.0,
                            std::uint64_t seed = 1) {
  Rng rng(seed);
  Eigen::MatrixXd w(channels, samples);
  for (Eigen::Index c = 0; c < channels; ++c) {
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (Eigen::Index t = 0; t < samples; ++t) {
      w(c, t) = std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(t) / fs +
                         phase) +
                noise * rng.normal();
    }
  }
  return w;
}

double central_rms(const Eigen::MatrixXd& m, Eigen::Index row, Eigen::Index discard) {
  double ss = 0.0;
  Eigen::Index n = 0;
  for (Eigen::Index t = discard; t < m.cols() - discard; ++t, ++n) {
    ss += m(row, t) * m(row, t);
  }
  return std::sqrt(ss / static_cast<double>(n));
}

}  // namespace

TEST_CASE("sub-band weights follow the decay formula") {
  const FilterBankSpec spec = FilterBankSpec::standard();
  REQUIRE(spec.n_subbands() == 3);
  CHECK(spec.weight(1) == 1.25);  // 1^(-1.25) + 0.25, exact
  CHECK(std::abs(spec.weight(2) - (std::pow(2.0, -1.25) + 0.25)) < 1e-12);
  CHECK(std::abs(spec.weight(3) - (std::pow(3.0, -1.25) + 0.25)) < 1e-12);
  CHECK(spec.weight(2) == doctest::Approx(0.6704).epsilon(1e-3));
  CHECK(spec.weight(3) == doctest::Approx(0.5033).epsilon(1e-3));
  // monotone decreasing, all positive
  for (std::size_t k = 1; k < 8; ++k) {
    CHECK(spec.weight(k) > spec.weight(k + 1));
    CHECK(spec.weight(k + 1) > 0.0);
  }
}

TEST_CASE("a single-band bank degenerates to plain band-pass filtering") {
  FilterBankSpec spec;
  spec.passbands_hz = {{4.0, 25.0}};
  const Eigen::MatrixXd window = sine_window(10.0, 1000.0, 2, 1000, 0.3);
  const auto bands = subband_decompose(window, spec, 1000.0);
  REQUIRE(bands.size() == 1);

  const ButterworthBandpass filter(4, 4.0, 25.0, 1000.0);
  for (Eigen::Index c = 0; c < window.rows(); ++c) {
    std::vector<double> row(static_cast<std::size_t>(window.cols()));
    for (Eigen::Index t = 0; t < window.cols(); ++t) row[static_cast<std::size_t>(t)] = window(c, t);
    const auto filtered = filter.filtfilt(row);
    for (Eigen::Index t = 0; t < window.cols(); ++t) {
      CHECK(std::abs(bands[0](c, t) - filtered[static_cast<std::size_t>(t)]) < 1e-9);
    }
  }
}

TEST_CASE("band responses separate a 6 Hz tone") {
  const FilterBankSpec spec = FilterBankSpec::standard();
  const Eigen::MatrixXd window = sine_window(6.0, 1000.0, 1, 3000);
  const auto bands = subband_decompose(window, spec, 1000.0);
  REQUIRE(bands.size() == 3);
  const double input_rms = central_rms(window, 0, 500);
  const double band1 = central_rms(bands[0], 0, 500);
  const double band3 = central_rms(bands[2], 0, 500);
  CHECK(band1 >= 0.95 * input_rms);
  CHECK(20.0 * std::log10(input_rms / band3) >= 20.0);
}

TEST_CASE("a 20 Hz tone lies inside every band of the standard bank") {
  const FilterBankSpec spec = FilterBankSpec::standard();
  const Eigen::MatrixXd window = sine_window(20.0, 1000.0, 1, 3000);
  const auto bands = subband_decompose(window, spec, 1000.0);
  const double input_rms = central_rms(window, 0, 500);
  for (const auto& band : bands) {
    CHECK(central_rms(band, 0, 500) >= 0.90 * input_rms);
  }
}

TEST_CASE("invalid passbands and short windows are rejected") {
  FilterBankSpec bad;
  bad.passbands_hz = {{25.0, 4.0}};
  const Eigen::MatrixXd window = sine_window(10.0, 1000.0, 2, 1000);
  CHECK_THROWS_AS(subband_decompose(window, bad, 1000.0), ParamError);

  const FilterBankSpec spec = FilterBankSpec::standard();
  const Eigen::MatrixXd tiny = sine_window(10.0, 1000.0, 2, 200);  // < 0.3 s
  CHECK_THROWS_AS(subband_decompose(tiny, spec, 1000.0), LengthError);
}

TEST_CASE("noiseless windows score highest at their own frequency") {
  const auto freqs = StimulusClass::frequencies();
  const ReferenceBank bank = build_references(freqs, 2, 1000.0, 1000);
  const FilterBankSpec spec = FilterBankSpec::standard();
  const Eigen::MatrixXd window = sine_window(8.0, 1000.0, 4, 1000, 1e-6);

  const auto scores = fbcca_score(window, bank, spec);
  REQUIRE(scores.size() == 4);
  for (const auto& [f, score] : scores) {
    if (f != 8.0) CHECK(scores.at(8.0) > score);
  }
  const auto [winner, classify_scores] = fbcca_classify(window, bank, spec);
  CHECK(winner.label == 1);  // Stop, 8 Hz
  CHECK(classify_scores == scores);
}

TEST_CASE("scores stay below the weight budget") {
  const auto freqs = StimulusClass::frequencies();
  const ReferenceBank bank = build_references(freqs, 2, 1000.0, 800);
  const FilterBankSpec spec = FilterBankSpec::standard();
  double budget = 0.0;
  for (std::size_t k = 1; k <= spec.n_subbands(); ++k) budget += spec.weight(k);

  for (int rep = 0; rep < 5; ++rep) {
    const Eigen::MatrixXd window = sine_window(6.0 + 2.0 * rep, 1000.0, 3, 800, 0.5,
                                               static_cast<std::uint64_t>(rep + 1));
    for (const auto& [f, score] : fbcca_score(window, bank, spec)) {
      CHECK(score <= budget + 1e-9);
      CHECK(score >= 0.0);
    }
  }
}

TEST_CASE("all-zero windows are degenerate input") {
  const auto freqs = StimulusClass::frequencies();
  const ReferenceBank bank = build_references(freqs, 2, 1000.0, 1000);
  const FilterBankSpec spec = FilterBankSpec::standard();
  const Eigen::MatrixXd window = Eigen::MatrixXd::Zero(4, 1000);
  CHECK_THROWS_AS(fbcca_classify(window, bank, spec), DegenerateInputError);
}

TEST_CASE("with one full-width band the decision matches plain cca") {
  FilterBankSpec single;
  single.passbands_hz = {{4.0, 25.0}};
  const auto freqs = StimulusClass::frequencies();

  SynthConfig cfg;
  cfg.snr_db = -4.0;
  cfg.seed = 99;
  SessionMeta meta;
  meta.trials_per_class = 3;
  const EpochSet session = generate_synthetic_session(cfg, meta);
  const EpochSet windows =
      slice_windows(extract_analysis_segment(bandpass_filter(session)), 1.0, 0.5);
  const ReferenceBank bank =
      build_references(freqs, 2, meta.sampling_rate_hz, windows.n_samples);

  for (std::size_t w = 0; w < windows.n_trials; ++w) {
    const Eigen::MatrixXd x = trial_matrix(windows, w);
    const auto [fb_class, fb_scores] = fbcca_classify(x, bank, single);
    // The one-band score map is w_1 times the CCA score map of the
    // band-filtered window, so the argmax is identical.
    const auto bands = subband_decompose(x, single, 1000.0);
    const auto [cca_class, cca_scores] = cca_classify(bands[0], bank);
    CHECK(fb_class.label == cca_class.label);
    for (const auto& [f, rho] : cca_scores) {
      CHECK(std::abs(fb_scores.at(f) - single.weight(1) * rho) < 1e-9);
    }
  }
}
