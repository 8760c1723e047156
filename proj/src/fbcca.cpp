#include "ssvep/fbcca.hpp"

#include <cmath>

#include "ssvep/errors.hpp"
#include "ssvep/filters.hpp"

namespace ssvep {

FilterBankSpec FilterBankSpec::standard() {
  FilterBankSpec spec;
  spec.passbands_hz = {{4.0, 25.0}, {10.0, 25.0}, {16.0, 25.0}};
  return spec;
}

double FilterBankSpec::weight(std::size_t k) const {
  return std::pow(static_cast<double>(k), -weight_a) + weight_b;
}

void FilterBankSpec::validate(double sampling_rate_hz) const {
  if (passbands_hz.empty()) throw ParamError("filter bank needs at least one passband");
  for (const auto& [lo, hi] : passbands_hz) {
    if (!(lo > 0.0 && lo < hi && hi < sampling_rate_hz / 2.0)) {
      throw ParamError("invalid passband [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "] Hz");
    }
  }
  for (std::size_t k = 1; k <= n_subbands(); ++k) {
    if (weight(k) <= 0.0) throw ParamError("sub-band weight w_" + std::to_string(k) +
                                           " is not positive");
  }
}

std::vector<Eigen::MatrixXd> subband_decompose(const Eigen::MatrixXd& window,
                                               const FilterBankSpec& spec,
                                               double sampling_rate_hz) {
  spec.validate(sampling_rate_hz);
  if (static_cast<double>(window.cols()) < 0.3 * sampling_rate_hz) {
    throw LengthError("window too short for filter settling (< 0.3 s)");
  }

  std::vector<Eigen::MatrixXd> bands;
  bands.reserve(spec.n_subbands());
  std::vector<double> row(static_cast<std::size_t>(window.cols()));
  for (const auto& [lo, hi] : spec.passbands_hz) {
    ButterworthBandpass filter(4, lo, hi, sampling_rate_hz);
    Eigen::MatrixXd band(window.rows(), window.cols());
    for (Eigen::Index c = 0; c < window.rows(); ++c) {
      for (Eigen::Index s = 0; s < window.cols(); ++s) {
        row[static_cast<std::size_t>(s)] = window(c, s);
      }
      const std::vector<double> filtered = filter.filtfilt(row);
      for (Eigen::Index s = 0; s < window.cols(); ++s) {
        band(c, s) = filtered[static_cast<std::size_t>(s)];
      }
    }
    bands.push_back(std::move(band));
  }
  return bands;
}

std::map<double, double> fbcca_score(const Eigen::MatrixXd& window,
                                     const ReferenceBank& bank,
                                     const FilterBankSpec& spec) {
  const std::vector<Eigen::MatrixXd> bands =
      subband_decompose(window, spec, bank.sampling_rate_hz);

  std::map<double, double> scores;
  for (std::size_t i = 0; i < bank.frequencies_hz.size(); ++i) {
    double score = 0.0;
    for (std::size_t k = 0; k < bands.size(); ++k) {
      const double rho = canonical_correlation(bands[k], bank.references[i]).rho;
      score += spec.weight(k + 1) * rho;
    }
    scores[bank.frequencies_hz[i]] = score;
  }
  return scores;
}

std::pair<StimulusClass, std::map<double, double>> fbcca_classify(
    const Eigen::MatrixXd& window, const ReferenceBank& bank,
    const FilterBankSpec& spec) {
  std::map<double, double> scores = fbcca_score(window, bank, spec);
  double best = -1.0;
  double best_freq = bank.frequencies_hz.front();
  for (double f : bank.frequencies_hz) {  // ascending: ties keep lowest
    if (scores[f] > best) {
      best = scores[f];
      best_freq = f;
    }
  }
  return {StimulusClass::from_frequency(best_freq), scores};
}

}  // namespace ssvep
