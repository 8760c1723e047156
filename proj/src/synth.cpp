#include "ssvep/synth.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "ssvep/errors.hpp"
#include "ssvep/fft.hpp"
#include "ssvep/rng.hpp"

namespace ssvep {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Unit-variance 1/f noise by spectral shaping: amplitude ~ f^(-1/2), random
// phases, zero DC.
std::vector<double> pink_noise(std::size_t n, Rng& rng) {
  std::vector<std::complex<double>> spec(n / 2 + 1, {0.0, 0.0});
  for (std::size_t k = 1; k < spec.size(); ++k) {
    const double amp = 1.0 / std::sqrt(static_cast<double>(k));
    const double phase = rng.uniform(0.0, kTwoPi);
    spec[k] = std::polar(amp, phase);
  }
  if (n % 2 == 0 && !spec.empty()) spec.back() = {spec.back().real(), 0.0};
  std::vector<double> x = fft::irfft(spec, n);
  double power = 0.0;
  for (double v : x) power += v * v;
  power /= static_cast<double>(n);
  const double scale = power > 0.0 ? 1.0 / std::sqrt(power) : 1.0;
  for (double& v : x) v *= scale;
  return x;
}

std::vector<double> white_noise(std::size_t n, Rng& rng) {
  std::vector<double> x(n);
  for (double& v : x) v = rng.normal();
  return x;
}

std::vector<double> make_noise(NoiseModel model, std::size_t n, Rng& rng) {
  switch (model) {
    case NoiseModel::white:
      return white_noise(n, rng);
    case NoiseModel::pink:
      return pink_noise(n, rng);
    case NoiseModel::mixture: {
      // Equal-power white + 1/f mixture.
      std::vector<double> w = white_noise(n, rng);
      std::vector<double> p = pink_noise(n, rng);
      const double s = 1.0 / std::sqrt(2.0);
      for (std::size_t i = 0; i < n; ++i) w[i] = s * (w[i] + p[i]);
      return w;
    }
  }
  throw ConfigError("unknown noise model");
}

std::vector<double> gains_or_default(const SynthConfig& cfg, std::size_t n_channels) {
  if (cfg.channel_gains.empty()) return std::vector<double>(n_channels, 1.0);
  return cfg.channel_gains;
}

struct TrialBuffers {
  std::vector<double> clean;  // n_channels * n_samples
  std::vector<double> noise;  // unscaled
  double noise_scale = 1.0;
};

// Shared by the generator and the SNR-verification helper so both see
// bit-identical streams. Stream layout per trial: phases first, then the
// per-channel noise streams.
TrialBuffers render_trial(const SynthConfig& cfg, const SessionMeta& meta,
                          std::size_t trial_index, int label) {
  const std::size_t n_channels = meta.layout.size();
  const std::size_t n_samples = meta.samples_per_trial();
  const double fs = meta.sampling_rate_hz;
  const std::vector<double> gains = gains_or_default(cfg, n_channels);
  const double f_class = StimulusClass::from_label(label).frequency_hz;
  const double amp = cfg.class_amplitudes_uv[static_cast<std::size_t>(label)];

  Rng trial_rng = Rng(cfg.seed).derive(trial_index);
  const double base_phase = trial_rng.uniform(0.0, kTwoPi);
  std::vector<double> harmonic_phase(static_cast<std::size_t>(cfg.n_harmonics));
  for (double& ph : harmonic_phase) ph = base_phase + trial_rng.uniform(-0.1, 0.1);
  const double marker_phase = trial_rng.uniform(0.0, kTwoPi);

  TrialBuffers buf;
  buf.clean.assign(n_channels * n_samples, 0.0);
  buf.noise.assign(n_channels * n_samples, 0.0);

  for (std::size_t c = 0; c < n_channels; ++c) {
    double* clean = buf.clean.data() + c * n_samples;
    for (int h = 1; h <= cfg.n_harmonics; ++h) {
      const double a =
          amp * std::pow(cfg.harmonic_rolloff, h - 1) * gains[c];
      if (a == 0.0) continue;
      const double w = kTwoPi * h * f_class / fs;
      const double ph = harmonic_phase[static_cast<std::size_t>(h - 1)];
      for (std::size_t s = 0; s < n_samples; ++s) {
        clean[s] += a * std::sin(w * static_cast<double>(s) + ph);
      }
    }
  }
  if (cfg.marker.enabled) {
    const double a_m = cfg.marker.class_amplitudes_uv[static_cast<std::size_t>(label)];
    const double w = kTwoPi * cfg.marker.freq_hz / fs;
    for (std::size_t c : cfg.marker.channels) {
      double* clean = buf.clean.data() + c * n_samples;
      for (std::size_t s = 0; s < n_samples; ++s) {
        clean[s] += a_m * gains[c] * std::sin(w * static_cast<double>(s) + marker_phase);
      }
    }
  }

  for (std::size_t c = 0; c < n_channels; ++c) {
    Rng noise_rng = trial_rng.derive(1000 + c);
    std::vector<double> ch = make_noise(cfg.noise, n_samples, noise_rng);
    std::copy(ch.begin(), ch.end(), buf.noise.begin() + static_cast<std::ptrdiff_t>(c * n_samples));
  }

  double clean_power = 0.0, noise_power = 0.0;
  for (double v : buf.clean) clean_power += v * v;
  for (double v : buf.noise) noise_power += v * v;

  // Whole-trial SNR: clean power over scaled-noise power equals snr_db.
  // A signal-free config gets unscaled (unit-variance) noise.
  if (clean_power > 0.0 && noise_power > 0.0) {
    buf.noise_scale =
        std::sqrt(clean_power / (noise_power * std::pow(10.0, cfg.snr_db / 10.0)));
  }
  return buf;
}

}  // namespace

void SynthConfig::validate(const SessionMeta& meta) const {
  if (n_harmonics < 1) throw ConfigError("n_harmonics must be >= 1");
  for (double a : class_amplitudes_uv) {
    if (a < 0.0) throw ConfigError("class_amplitudes_uv must be >= 0");
  }
  if (harmonic_rolloff < 0.0) throw ConfigError("harmonic_rolloff must be >= 0");
  if (!channel_gains.empty() && channel_gains.size() != meta.layout.size()) {
    throw ConfigError("channel_gains length must equal channel count");
  }
  if (marker.enabled) {
    for (std::size_t c : marker.channels) {
      if (c >= meta.layout.size()) throw ConfigError("marker.channels index out of range");
    }
    if (marker.freq_hz <= 0.0 || marker.freq_hz >= meta.sampling_rate_hz / 2.0) {
      throw ConfigError("marker.freq_hz must be in (0, fs/2)");
    }
  }
}

EpochSet generate_synthetic_session(const SynthConfig& cfg, const SessionMeta& meta) {
  meta.validate();
  cfg.validate(meta);

  const std::size_t n_channels = meta.layout.size();
  const std::size_t n_samples = meta.samples_per_trial();
  const std::size_t n_trials = 4 * static_cast<std::size_t>(meta.trials_per_class);
  if (n_samples == 0) throw ConfigError("flicker_s yields zero samples");

  EpochSet out(n_trials, n_channels, n_samples, meta, Provenance::synthetic);
  for (std::size_t t = 0; t < n_trials; ++t) {
    const int label = static_cast<int>(t % 4);  // round-robin class order
    out.labels[t] = label;
    TrialBuffers buf = render_trial(cfg, meta, t, label);
    for (std::size_t i = 0; i < buf.clean.size(); ++i) {
      out.data[t * n_channels * n_samples + i] =
          buf.clean[i] + buf.noise_scale * buf.noise[i];
    }
  }
  return out;
}

TrialComponents synth_trial_components(const SynthConfig& cfg, const SessionMeta& meta,
                                       std::size_t trial_index, int label) {
  TrialBuffers buf = render_trial(cfg, meta, trial_index, label);
  TrialComponents out;
  out.clean = std::move(buf.clean);
  out.noise = std::move(buf.noise);
  for (double& v : out.noise) v *= buf.noise_scale;
  return out;
}

}  // namespace ssvep
