#pragma once

#include <Eigen/Dense>
#include <map>
#include <utility>
#include <vector>

#include "ssvep/cca.hpp"
#include "ssvep/types.hpp"

namespace ssvep {

// Sub-band layout and fusion weights w_k = k^(-a) + b for the filter bank.
struct FilterBankSpec {
  std::vector<std::pair<double, double>> passbands_hz;  // ordered (low, high)
  double weight_a = 1.25;
  double weight_b = 0.25;

  // Three nested bands inside the 4-25 Hz preprocessing range.
  static FilterBankSpec standard();
  std::size_t n_subbands() const { return passbands_hz.size(); }
  double weight(std::size_t k) const;  // k is 1-based
  void validate(double sampling_rate_hz) const;
};

// Zero-phase band-pass of the window at each passband, band order preserved.
std::vector<Eigen::MatrixXd> subband_decompose(const Eigen::MatrixXd& window,
                                               const FilterBankSpec& spec,
                                               double sampling_rate_hz);

// score(f) = sum_k w_k * rho_k(f), rho_k from CCA between sub-band k and Y_f.
std::map<double, double> fbcca_score(const Eigen::MatrixXd& window,
                                     const ReferenceBank& bank,
                                     const FilterBankSpec& spec);

std::pair<StimulusClass, std::map<double, double>> fbcca_classify(
    const Eigen::MatrixXd& window, const ReferenceBank& bank,
    const FilterBankSpec& spec);

}  // namespace ssvep
