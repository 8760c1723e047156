#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "ssvep/cca.hpp"
#include "ssvep/epoch_ops.hpp"
#include "ssvep/errors.hpp"
#include "ssvep/fft.hpp"
#include "ssvep/filters.hpp"
#include "ssvep/rng.hpp"
#include "ssvep/synth.hpp"

using namespace ssvep;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

double recomputed_corr(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                       const CcaResult& r) {
  Eigen::RowVectorXd px = r.wx.transpose() * x;
  Eigen::RowVectorXd py = r.wy.transpose() * y;
  px.array() -= px.mean();
  py.array() -= py.mean();
  return px.dot(py) / std::sqrt(px.squaredNorm() * py.squaredNorm());
}

}  // namespace

TEST_CASE("reference bank rows interleave sine and cosine per harmonic") {
  const std::array<double, 1> freqs = {6.0};
  const ReferenceBank bank = build_references(freqs, 2, 1000.0, 1000);
  const Eigen::MatrixXd& y = bank.references[0];
  REQUIRE(y.rows() == 4);
  REQUIRE(y.cols() == 1000);
  for (int t = 0; t < 20; ++t) {
    const double arg6 = 2.0 * std::numbers::pi * 6.0 * t / 1000.0;
    const double arg12 = 2.0 * std::numbers::pi * 12.0 * t / 1000.0;
    CHECK(y(0, t) == doctest::Approx(std::sin(arg6)).epsilon(1e-12));
    CHECK(y(1, t) == doctest::Approx(std::cos(arg6)).epsilon(1e-12));
    CHECK(y(2, t) == doctest::Approx(std::sin(arg12)).epsilon(1e-12));
    CHECK(y(3, t) == doctest::Approx(std::cos(arg12)).epsilon(1e-12));
  }

  SUBCASE("every row is a single spectral line") {
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      std::vector<double> row(1000);
      for (int t = 0; t < 1000; ++t) row[static_cast<std::size_t>(t)] = y(r, t);
      const auto spec = fft::rfft(row);
      std::size_t peak = 0;
      double total = 0.0;
      for (std::size_t k = 0; k < spec.size(); ++k) {
        total += std::norm(spec[k]);
        if (std::norm(spec[k]) > std::norm(spec[peak])) peak = k;
      }
      CHECK(std::norm(spec[peak]) / total > 0.999);  // unit frequency purity
      const double expected = r < 2 ? 6.0 : 12.0;
      CHECK(static_cast<double>(peak) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("highest default reference line stays inside the processing band") {
  // 12 Hz with 2 harmonics -> 24 Hz, just under the 25 Hz low-pass
  const auto freqs = StimulusClass::frequencies();
  const ReferenceBank bank = build_references(freqs, 2, 1000.0, 500);
  const double top = 12.0 * 2;
  CHECK(top < 25.0);
  CHECK(top < 1000.0 / 2.0);
  CHECK(bank.references.size() == 4);
}

TEST_CASE("harmonics above Nyquist are rejected") {
  const std::array<double, 1> freqs = {12.0};
  CHECK_THROWS_AS(build_references(freqs, 50, 1000.0, 1000), ParamError);
}

TEST_CASE("linear relationship saturates the canonical correlation") {
  Rng rng(2024);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::MatrixXd x = random_matrix(3, 200, rng);
    Eigen::MatrixXd p;
    do {
      p = random_matrix(3, 3, rng);
    } while (std::abs(p.determinant()) < 1e-3);
    const Eigen::MatrixXd y = p * x;
    const CcaResult r = canonical_correlation(x, y);
    CHECK(r.rho >= 1.0 - 1e-9);
    CHECK(r.rho <= 1.0 + 1e-9);
  }
}

TEST_CASE("independent noise stays near zero correlation") {
  Rng rng(7);
  std::vector<double> rhos;
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::MatrixXd x = random_matrix(2, 5000, rng);
    const Eigen::MatrixXd y = random_matrix(2, 5000, rng);
    rhos.push_back(canonical_correlation(x, y).rho);
  }
  std::sort(rhos.begin(), rhos.end());
  CHECK(rhos[94] < 0.1);  // 95th percentile of the null distribution
}

TEST_CASE("solver matches the 2-D angle-grid oracle") {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::MatrixXd x = random_matrix(2, 50, rng);
    const Eigen::MatrixXd y = random_matrix(2, 50, rng);
    const double rho = canonical_correlation(x, y).rho;
    const double brute = oracles::cca_grid_2x2(x, y);
    CHECK(std::abs(rho - brute) < 1e-4);
  }
}

TEST_CASE("result weights reproduce rho when correlated directly") {
  Rng rng(13);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::MatrixXd x = random_matrix(4, 300, rng);
    const Eigen::MatrixXd y = random_matrix(3, 300, rng);
    const CcaResult r = canonical_correlation(x, y);
    CHECK(recomputed_corr(x, y, r) == doctest::Approx(r.rho).epsilon(1e-6));
    CHECK(r.rho >= 0.0);
    CHECK(r.rho <= 1.0 + 1e-9);
  }
}

TEST_CASE("canonical correlation is symmetric in its arguments") {
  Rng rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::MatrixXd x = random_matrix(3, 150, rng);
    const Eigen::MatrixXd y = random_matrix(2, 150, rng);
    const double a = canonical_correlation(x, y).rho;
    const double b = canonical_correlation(y, x).rho;
    CHECK(std::abs(a - b) < 1e-9);
  }
}

TEST_CASE("added independent noise does not raise rho in expectation") {
  const ReferenceBank bank =
      build_references(std::array<double, 1>{10.0}, 2, 1000.0, 1000);
  const Eigen::MatrixXd& y = bank.references[0];
  Rng base(23);
  const std::array<double, 4> noise_levels = {0.0, 0.5, 1.0, 2.0};
  std::array<double, 4> mean_rho{};
  for (int seed = 0; seed < 50; ++seed) {
    Rng rng = base.derive(static_cast<std::uint64_t>(seed));
    Eigen::MatrixXd clean(2, 1000);
    for (int t = 0; t < 1000; ++t) {
      clean(0, t) = y(0, t) + 0.3 * y(2, t);
      clean(1, t) = y(1, t) - 0.2 * y(0, t);
    }
    const Eigen::MatrixXd noise = random_matrix(2, 1000, rng);
    for (std::size_t level = 0; level < noise_levels.size(); ++level) {
      const Eigen::MatrixXd x = clean + noise_levels[level] * noise;
      mean_rho[level] += canonical_correlation(x, y).rho / 50.0;
    }
  }
  for (std::size_t level = 1; level < noise_levels.size(); ++level) {
    CHECK(mean_rho[level] <= mean_rho[level - 1] + 1e-12);
  }
}

TEST_CASE("zero-variance rows are reported with their index") {
  Rng rng(29);
  Eigen::MatrixXd x = random_matrix(3, 100, rng);
  x.row(1).setConstant(4.2);
  const Eigen::MatrixXd y = random_matrix(2, 100, rng);
  CHECK_THROWS_WITH_AS(canonical_correlation(x, y), doctest::Contains("row 1"),
                       DegenerateInputError);
}

TEST_CASE("sample axis must dominate the combined row count") {
  Rng rng(31);
  const Eigen::MatrixXd x = random_matrix(4, 8, rng);
  const Eigen::MatrixXd y = random_matrix(4, 8, rng);
  CHECK_THROWS_AS(canonical_correlation(x, y), ShapeError);
}

TEST_CASE("clean windows classify to their stimulus frequency") {
  const auto freqs = StimulusClass::frequencies();
  const ReferenceBank bank = build_references(freqs, 2, 1000.0, 1500);
  Rng rng(37);
  Eigen::MatrixXd window(8, 1500);
  for (int c = 0; c < 8; ++c) {
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double gain = rng.uniform(0.5, 1.5);
    for (int t = 0; t < 1500; ++t) {
      const double arg = 2.0 * std::numbers::pi * 10.0 * t / 1000.0 + phase;
      window(c, t) = gain * (std::sin(arg) + 0.4 * std::sin(2.0 * arg)) +
                     1e-6 * rng.normal();
    }
  }
  const auto [winner, scores] = cca_classify(window, bank);
  CHECK(winner.label == 2);  // Active, 10 Hz
  CHECK(scores.at(10.0) > 0.99);
  CHECK(scores.size() == 4);
}

TEST_CASE("exact ties break to the lowest frequency") {
  // A window spanning both the 6 Hz and 8 Hz reference subspaces saturates
  // both scores; the documented tie-break picks 6 Hz.
  const auto freqs = StimulusClass::frequencies();
  const ReferenceBank bank = build_references(freqs, 1, 1000.0, 1000);
  Eigen::MatrixXd window(4, 1000);
  for (int t = 0; t < 1000; ++t) {
    const double a6 = 2.0 * std::numbers::pi * 6.0 * t / 1000.0;
    const double a8 = 2.0 * std::numbers::pi * 8.0 * t / 1000.0;
    window(0, t) = std::sin(a6);
    window(1, t) = std::cos(a6);
    window(2, t) = std::sin(a8);
    window(3, t) = std::cos(a8);
  }
  const auto [winner, scores] = cca_classify(window, bank);
  CHECK(scores.at(6.0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(scores.at(8.0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(winner.label == 0);
}

TEST_CASE("window length must match the bank") {
  const auto freqs = StimulusClass::frequencies();
  const ReferenceBank bank = build_references(freqs, 2, 1000.0, 1000);
  Rng rng(41);
  const Eigen::MatrixXd window = random_matrix(8, 900, rng);
  CHECK_THROWS_AS(cca_classify(window, bank), ShapeError);
}

TEST_CASE("classification decisions are scale invariant") {
  const auto freqs = StimulusClass::frequencies();
  const ReferenceBank bank = build_references(freqs, 2, 1000.0, 800);
  SynthConfig cfg;
  cfg.snr_db = -2.0;
  cfg.seed = 57;
  SessionMeta meta;
  meta.trials_per_class = 2;
  const EpochSet session = generate_synthetic_session(cfg, meta);
  const EpochSet windows = slice_windows(extract_analysis_segment(session), 0.8, 0.8);

  for (std::size_t w = 0; w < std::min<std::size_t>(windows.n_trials, 12); ++w) {
    const Eigen::MatrixXd x = trial_matrix(windows, w);
    auto [cls_base, scores_base] = cca_classify(x, bank);
    auto [cls_scaled, scores_scaled] = cca_classify(Eigen::MatrixXd(3.7 * x), bank);
    Eigen::MatrixXd one_channel = x;
    one_channel.row(2) *= 2.5;
    auto [cls_channel, scores_channel] = cca_classify(one_channel, bank);
    CHECK(cls_base.label == cls_scaled.label);
    CHECK(cls_base.label == cls_channel.label);
    for (const auto& [f, rho] : scores_base) {
      CHECK(std::abs(scores_scaled.at(f) - rho) < 1e-9);
    }
  }
}

TEST_CASE("cca beats chance on noisy synthetic windows") {
  SynthConfig cfg;
  cfg.snr_db = 0.0;
  cfg.seed = 4242;
  SessionMeta meta;  // 40 trials
  const EpochSet session = generate_synthetic_session(cfg, meta);
  const EpochSet cropped = extract_analysis_segment(bandpass_filter(session));
  const EpochSet windows = slice_windows(cropped, 1.5, 0.2);
  REQUIRE(windows.n_trials >= 200);

  const auto freqs = StimulusClass::frequencies();
  const ReferenceBank bank =
      build_references(freqs, 2, meta.sampling_rate_hz, windows.n_samples);
  std::int64_t correct = 0;
  for (std::size_t w = 0; w < windows.n_trials; ++w) {
    const auto [winner, scores] = cca_classify(trial_matrix(windows, w), bank);
    if (winner.label == windows.labels[w]) ++correct;
  }
  const double p = oracles::binomial_tail(static_cast<std::int64_t>(windows.n_trials),
                                          correct, 0.25);
  CHECK(p < 0.01);
}
