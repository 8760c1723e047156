#include "ssvep/filters.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "ssvep/errors.hpp"

namespace ssvep {
namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

// Evaluate the SOS cascade transfer function at z.
cplx evaluate(const std::vector<SosSection>& sections, cplx z) {
  cplx h{1.0, 0.0};
  const cplx z1 = 1.0 / z;
  const cplx z2 = z1 * z1;
  for (const auto& s : sections) {
    h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  }
  return h;
}

void run_sos(const std::vector<SosSection>& sections, std::vector<double>& x) {
  for (const auto& s : sections) {
    double s1 = 0.0, s2 = 0.0;
    for (double& v : x) {
      const double in = v;
      const double out = s.b0 * in + s1;
      s1 = s.b1 * in - s.a1 * out + s2;
      s2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
}

}  // namespace

ButterworthBandpass::ButterworthBandpass(int order, double low_hz, double high_hz,
                                         double fs_hz) {
  if (order < 1 || order > 12) throw ParamError("filter order must be in 1..12");
  if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < fs_hz / 2.0)) {
    throw ParamError("band edges must satisfy 0 < low < high < fs/2 (got " +
                     std::to_string(low_hz) + ", " + std::to_string(high_hz) +
                     " at fs " + std::to_string(fs_hz) + ")");
  }

  // Analog prototype poles on the unit Butterworth circle.
  std::vector<cplx> proto;
  for (int k = 0; k < order; ++k) {
    const double theta = kPi * (2.0 * k + order + 1.0) / (2.0 * order);
    proto.emplace_back(std::cos(theta), std::sin(theta));
  }

  // Pre-warped band edges for the bilinear transform.
  const double k_bl = 2.0 * fs_hz;
  const double w1 = k_bl * std::tan(kPi * low_hz / fs_hz);
  const double w2 = k_bl * std::tan(kPi * high_hz / fs_hz);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;

  // Low-pass -> band-pass: each prototype pole yields two analog poles.
  std::vector<cplx> analog;
  for (const cplx& p : proto) {
    const cplx bp = bw * p * 0.5;
    const cplx d = std::sqrt(bp * bp - w0sq);
    analog.push_back(bp + d);
    analog.push_back(bp - d);
  }

  // Bilinear transform; zeros land at z=+1 (n) and z=-1 (n).
  std::vector<cplx> digital;
  double max_radius = 0.0;
  for (const cplx& s : analog) {
    const cplx z = (k_bl + s) / (k_bl - s);
    digital.push_back(z);
    max_radius = std::max(max_radius, std::abs(z));
  }
  if (max_radius >= 1.0) throw NumericError("unstable filter design");

  // Group poles into conjugate (or real) pairs, one biquad each, with a
  // (z-1)(z+1) numerator per section.
  std::vector<cplx> upper;
  std::vector<double> reals;
  for (const cplx& z : digital) {
    if (z.imag() > 1e-12) {
      upper.push_back(z);
    } else if (z.imag() >= -1e-12) {
      reals.push_back(z.real());
    }
  }
  std::sort(upper.begin(), upper.end(),
            [](const cplx& a, const cplx& b) { return std::abs(a) > std::abs(b); });
  std::sort(reals.begin(), reals.end());

  for (const cplx& p : upper) {
    sections_.push_back({1.0, 0.0, -1.0, -2.0 * p.real(), std::norm(p)});
  }
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
    sections_.push_back(
        {1.0, 0.0, -1.0, -(reals[i] + reals[i + 1]), reals[i] * reals[i + 1]});
  }

  // Unity gain at the (pre-warp-consistent) center frequency.
  const double wc = 2.0 * std::atan(std::sqrt(w0sq) / k_bl);
  const cplx zc = std::polar(1.0, wc);
  const double g = std::abs(evaluate(sections_, zc));
  if (!(g > 0.0) || !std::isfinite(g)) throw NumericError("degenerate filter gain");
  sections_.front().b0 /= g;
  sections_.front().b1 /= g;
  sections_.front().b2 /= g;

  // Impulse-response settling length from the slowest pole: the time for its
  // envelope to decay to 1e-5.
  settle_ = static_cast<std::size_t>(
      std::ceil(std::log(1e-5) / std::log(std::min(max_radius, 1.0 - 1e-12))));
  settle_ = std::min<std::size_t>(settle_, 100000);
}

std::vector<double> ButterworthBandpass::forward(std::span<const double> x) const {
  std::vector<double> y(x.begin(), x.end());
  run_sos(sections_, y);
  return y;
}

std::vector<double> ButterworthBandpass::filtfilt(std::span<const double> x) const {
  const std::size_t n = x.size();
  if (n < 2) throw LengthError("filtfilt: signal too short");
  const std::size_t pad = std::min(settle_, n - 1);

  // Odd reflection keeps the extended signal continuous at the joins.
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) ext.push_back(2.0 * x[0] - x[pad - i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 0; i < pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 2 - i]);

  run_sos(sections_, ext);
  std::reverse(ext.begin(), ext.end());
  run_sos(sections_, ext);
  std::reverse(ext.begin(), ext.end());

  return std::vector<double>(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                             ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

EpochSet bandpass_filter(const EpochSet& epochs, double low_hz, double high_hz) {
  ButterworthBandpass filter(4, low_hz, high_hz, epochs.meta.sampling_rate_hz);
  EpochSet out = epochs;
  for (std::size_t t = 0; t < out.n_trials; ++t) {
    for (std::size_t c = 0; c < out.n_channels; ++c) {
      auto channel = out.trial_channel(t, c);
      const std::vector<double> filtered = filter.filtfilt(channel);
      std::copy(filtered.begin(), filtered.end(), channel.begin());
    }
  }
  return out;
}

}  // namespace ssvep
