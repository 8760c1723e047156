#include "ssvep/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "ssvep/errors.hpp"
#include "ssvep/fft.hpp"

namespace ssvep {

namespace {
constexpr std::size_t kMinPsdSamples = 32;
}

void FeatureSpec::validate() const {
  if (psd_segment_s <= 0.0) throw ConfigError("psd_segment_s must be > 0");
  if (psd_overlap < 0.0 || psd_overlap >= 1.0) {
    throw ConfigError("psd_overlap must be in [0, 1)");
  }
  if (taper != "hann") throw ConfigError("unsupported taper: " + taper);
}

std::string FeatureLayout::name(std::size_t index) const {
  const auto [c, j] = split(index);
  return channels[c] + "_" + kFeatureNames[j];
}

Psd welch_psd(std::span<const double> signal, double sampling_rate_hz,
              const FeatureSpec& spec) {
  spec.validate();
  if (sampling_rate_hz <= 0.0) throw ParamError("sampling_rate_hz must be > 0");
  if (signal.size() < kMinPsdSamples) {
    throw LengthError("signal too short for PSD (" + std::to_string(signal.size()) +
                      " < " + std::to_string(kMinPsdSamples) + " samples)");
  }

  const std::size_t seg_len = std::min<std::size_t>(
      signal.size(),
      static_cast<std::size_t>(std::llround(spec.psd_segment_s * sampling_rate_hz)));
  const auto hop = std::max<std::size_t>(
      1, static_cast<std::size_t>(static_cast<double>(seg_len) * (1.0 - spec.psd_overlap)));

  // Periodic Hann taper.
  std::vector<double> window(seg_len);
  double win_sumsq = 0.0;
  for (std::size_t i = 0; i < seg_len; ++i) {
    window[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                      static_cast<double>(seg_len)));
    win_sumsq += window[i] * window[i];
  }

  const std::size_t n_bins = seg_len / 2 + 1;
  std::vector<double> accum(n_bins, 0.0);
  std::vector<double> seg(seg_len);
  std::size_t n_segments = 0;
  for (std::size_t off = 0; off + seg_len <= signal.size(); off += hop) {
    double mean = 0.0;
    for (std::size_t i = 0; i < seg_len; ++i) mean += signal[off + i];
    mean /= static_cast<double>(seg_len);
    for (std::size_t i = 0; i < seg_len; ++i) seg[i] = (signal[off + i] - mean) * window[i];

    const auto spec_bins = fft::rfft(seg);
    for (std::size_t k = 0; k < n_bins; ++k) accum[k] += std::norm(spec_bins[k]);
    ++n_segments;
    if (off + seg_len == signal.size()) break;
  }

  Psd out;
  out.freqs_hz.resize(n_bins);
  out.power.resize(n_bins);
  const double scale = 1.0 / (static_cast<double>(n_segments) * sampling_rate_hz * win_sumsq);
  for (std::size_t k = 0; k < n_bins; ++k) {
    out.freqs_hz[k] = static_cast<double>(k) * sampling_rate_hz / static_cast<double>(seg_len);
    double p = accum[k] * scale;
    // One-sided: double everything except DC and (for even lengths) Nyquist.
    if (k != 0 && !(seg_len % 2 == 0 && k == n_bins - 1)) p *= 2.0;
    out.power[k] = p;
  }
  return out;
}

double band_power(const Psd& psd, double lo_hz, double hi_hz) {
  if (psd.freqs_hz.size() < 2) return 0.0;
  const double df = psd.freqs_hz[1] - psd.freqs_hz[0];
  double total = 0.0;
  for (std::size_t k = 0; k < psd.freqs_hz.size(); ++k) {
    if (psd.freqs_hz[k] >= lo_hz && psd.freqs_hz[k] <= hi_hz) total += psd.power[k] * df;
  }
  return total;
}

FeatureVector extract_features(const Eigen::MatrixXd& window, double sampling_rate_hz,
                               const FeatureSpec& spec) {
  const auto n_channels = static_cast<std::size_t>(window.rows());
  const auto t = static_cast<std::size_t>(window.cols());
  if (t < 2) throw LengthError("window too short for feature extraction");

  FeatureVector fv;
  fv.values.assign(n_channels * kFeaturesPerChannel, 0.0);
  fv.degenerate.assign(n_channels, 0);

  std::vector<double> x(t);
  for (std::size_t c = 0; c < n_channels; ++c) {
    for (std::size_t s = 0; s < t; ++s) x[s] = window(static_cast<Eigen::Index>(c),
                                                      static_cast<Eigen::Index>(s));

    const Psd psd = welch_psd(x, sampling_rate_hz, spec);
    double peak_freq = 0.0, peak_power = -1.0;
    for (std::size_t k = 0; k < psd.freqs_hz.size(); ++k) {
      if (psd.freqs_hz[k] < spec.search_lo_hz || psd.freqs_hz[k] > spec.search_hi_hz) continue;
      if (psd.power[k] > peak_power) {
        peak_power = psd.power[k];
        peak_freq = psd.freqs_hz[k];
      }
    }

    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(t);
    double m2 = 0.0, m3 = 0.0;
    double vmax = -std::numeric_limits<double>::infinity();
    double vmin = std::numeric_limits<double>::infinity();
    for (double v : x) {
      const double d = v - mean;
      m2 += d * d;
      m3 += d * d * d;
      vmax = std::max(vmax, v);
      vmin = std::min(vmin, v);
    }
    const double var = m2 / static_cast<double>(t - 1);
    const double sd = std::sqrt(var);
    m3 /= static_cast<double>(t);
    const bool degenerate = !(sd > 0.0) || var <= 1e-24 * std::max(1.0, mean * mean);
    const double skew = degenerate ? 0.0 : m3 / (sd * sd * sd);
    if (degenerate) fv.degenerate[c] = 1;

    double* out = fv.values.data() + c * kFeaturesPerChannel;
    out[0] = peak_freq;
    out[1] = band_power(psd, spec.search_lo_hz, spec.search_hi_hz);
    out[2] = band_power(psd, spec.theta_lo_hz, spec.theta_hi_hz);
    out[3] = band_power(psd, spec.alpha_lo_hz, spec.alpha_hi_hz);
    out[4] = band_power(psd, spec.beta_lo_hz, spec.beta_hi_hz);
    out[5] = mean;
    out[6] = sd;
    out[7] = skew;
    out[8] = vmax;
    out[9] = vmin;
  }
  return fv;
}

FeatureSequence feature_sequence(const Eigen::MatrixXd& window, int n_segments,
                                 double sampling_rate_hz, const FeatureSpec& spec) {
  if (n_segments < 1) throw ParamError("n_segments must be >= 1");
  const auto t = static_cast<std::size_t>(window.cols());
  const std::size_t seg_len = t / static_cast<std::size_t>(n_segments);
  if (seg_len < kMinPsdSamples) {
    throw LengthError("too many segments: " + std::to_string(seg_len) +
                      " samples each, need >= " + std::to_string(kMinPsdSamples));
  }

  // Use the segment itself as the Welch window when it is shorter than the
  // configured segment length.
  FeatureSpec seg_spec = spec;
  seg_spec.psd_segment_s =
      std::min(spec.psd_segment_s, static_cast<double>(seg_len) / sampling_rate_hz);

  FeatureSequence seq;
  seq.segment_s = static_cast<double>(seg_len) / sampling_rate_hz;
  for (int i = 0; i < n_segments; ++i) {
    const auto off = static_cast<Eigen::Index>(static_cast<std::size_t>(i) * seg_len);
    Eigen::MatrixXd seg = window.middleCols(off, static_cast<Eigen::Index>(seg_len));
    seq.rows.push_back(extract_features(seg, sampling_rate_hz, seg_spec));
  }
  return seq;
}

void write_features_csv(const std::string& path, const std::vector<FeatureVector>& rows,
                        const FeatureLayout& layout) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot open for writing: " + path);
  f << "label";
  for (std::size_t i = 0; i < layout.size(); ++i) f << "," << layout.name(i);
  f << "\n";
  for (const auto& fv : rows) {
    f << fv.label;
    for (double v : fv.values) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.9g", v);
      f << "," << buf;
    }
    f << "\n";
  }
}

}  // namespace ssvep
