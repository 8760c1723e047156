#pragma once

#include <Eigen/Dense>
#include <map>
#include <span>
#include <vector>

#include "ssvep/types.hpp"

namespace ssvep {

struct CcaResult {
  double rho = 0.0;          // largest canonical correlation
  Eigen::VectorXd wx;        // channel weights (length N)
  Eigen::VectorXd wy;        // reference weights (length M)
};

// Per-frequency sine/cosine harmonic reference matrices. Rows are
// interleaved per harmonic: sin(h=1), cos(h=1), sin(h=2), cos(h=2), ...
struct ReferenceBank {
  std::vector<double> frequencies_hz;        // ascending
  std::vector<Eigen::MatrixXd> references;   // one (2H x T) matrix per frequency
  int n_harmonics = 0;
  double sampling_rate_hz = 0.0;
  std::size_t n_samples = 0;

  const Eigen::MatrixXd& reference_for(double freq_hz) const;
};

ReferenceBank build_references(std::span<const double> frequencies_hz, int n_harmonics,
                               double sampling_rate_hz, std::size_t n_samples);

// Largest canonical correlation between X (N x T) and Y (M x T). Rows are
// mean-centered internally; covariances are ridge-regularized with
// eps = 1e-10 * trace/dim before Cholesky whitening.
CcaResult canonical_correlation(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);

// Argmax of rho over the bank's frequencies; ties break to the lowest
// frequency. Returns the winning class and the full frequency->rho map.
std::pair<StimulusClass, std::map<double, double>> cca_classify(
    const Eigen::MatrixXd& window, const ReferenceBank& bank);

// View one trial of an EpochSet as an N_channels x T matrix.
Eigen::MatrixXd trial_matrix(const EpochSet& epochs, std::size_t trial);

}  // namespace ssvep
