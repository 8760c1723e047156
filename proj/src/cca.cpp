#include "ssvep/cca.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ssvep/errors.hpp"

namespace ssvep {

const Eigen::MatrixXd& ReferenceBank::reference_for(double freq_hz) const {
  for (std::size_t i = 0; i < frequencies_hz.size(); ++i) {
    if (frequencies_hz[i] == freq_hz) return references[i];
  }
  throw ParamError("no reference at " + std::to_string(freq_hz) + " Hz");
}

ReferenceBank build_references(std::span<const double> frequencies_hz, int n_harmonics,
                               double sampling_rate_hz, std::size_t n_samples) {
  if (n_harmonics < 1) throw ParamError("n_harmonics must be >= 1");
  if (sampling_rate_hz <= 0.0) throw ParamError("sampling_rate_hz must be > 0");
  if (n_samples == 0) throw ParamError("n_samples must be > 0");

  ReferenceBank bank;
  bank.frequencies_hz.assign(frequencies_hz.begin(), frequencies_hz.end());
  std::sort(bank.frequencies_hz.begin(), bank.frequencies_hz.end());
  bank.n_harmonics = n_harmonics;
  bank.sampling_rate_hz = sampling_rate_hz;
  bank.n_samples = n_samples;

  for (double f : bank.frequencies_hz) {
    if (f <= 0.0) throw ParamError("reference frequency must be > 0");
    if (f * n_harmonics >= sampling_rate_hz / 2.0) {
      throw ParamError("harmonic " + std::to_string(f * n_harmonics) +
                       " Hz is at or above Nyquist (" +
                       std::to_string(sampling_rate_hz / 2.0) + " Hz)");
    }
    Eigen::MatrixXd y(2 * n_harmonics, static_cast<Eigen::Index>(n_samples));
    for (int h = 1; h <= n_harmonics; ++h) {
      const double w = 2.0 * std::numbers::pi * h * f / sampling_rate_hz;
      for (Eigen::Index t = 0; t < y.cols(); ++t) {
        y(2 * (h - 1), t) = std::sin(w * static_cast<double>(t));
        y(2 * (h - 1) + 1, t) = std::cos(w * static_cast<double>(t));
      }
    }
    bank.references.push_back(std::move(y));
  }
  return bank;
}

CcaResult canonical_correlation(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  const Eigen::Index n = X.rows(), m = Y.rows(), t = X.cols();
  if (Y.cols() != t) throw ShapeError("X and Y must share the sample axis");
  if (t <= n + m) {
    throw ShapeError("need more samples than combined rows (T > N + M)");
  }

  const Eigen::VectorXd x_mean = X.rowwise().mean();
  const Eigen::VectorXd y_mean = Y.rowwise().mean();
  Eigen::MatrixXd xc = X;
  xc.colwise() -= x_mean;
  Eigen::MatrixXd yc = Y;
  yc.colwise() -= y_mean;

  // Constant rows center to rounding residue, so the test is relative.
  auto degenerate = [t](const Eigen::MatrixXd& centered, const Eigen::VectorXd& mean,
                        Eigen::Index i) {
    const double floor_sq =
        static_cast<double>(t) * 1e-24 * std::max(1.0, mean(i) * mean(i));
    return centered.row(i).squaredNorm() <= floor_sq;
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    if (degenerate(xc, x_mean, i)) {
      throw DegenerateInputError("row " + std::to_string(i) + " of X has zero variance");
    }
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (degenerate(yc, y_mean, i)) {
      throw DegenerateInputError("row " + std::to_string(i) + " of Y has zero variance");
    }
  }

  Eigen::MatrixXd cxx = xc * xc.transpose();
  Eigen::MatrixXd cyy = yc * yc.transpose();
  Eigen::MatrixXd cxy = xc * yc.transpose();
  cxx.diagonal().array() += 1e-10 * cxx.trace() / static_cast<double>(n);
  cyy.diagonal().array() += 1e-10 * cyy.trace() / static_cast<double>(m);

  Eigen::LLT<Eigen::MatrixXd> lx(cxx);
  Eigen::LLT<Eigen::MatrixXd> ly(cyy);
  if (lx.info() != Eigen::Success || ly.info() != Eigen::Success) {
    throw NumericError("covariance factorization failed");
  }

  // Whitened cross-covariance K = Lx^-1 Cxy Ly^-T; its largest singular
  // value is the canonical correlation.
  Eigen::MatrixXd k = lx.matrixL().solve(cxy);
  k = ly.matrixL().solve(k.transpose()).transpose();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(k, Eigen::ComputeThinU | Eigen::ComputeThinV);
  CcaResult result;
  result.rho = svd.singularValues()(0);
  result.wx = lx.matrixL().transpose().solve(svd.matrixU().col(0));
  result.wy = ly.matrixL().transpose().solve(svd.matrixV().col(0));
  return result;
}

std::pair<StimulusClass, std::map<double, double>> cca_classify(
    const Eigen::MatrixXd& window, const ReferenceBank& bank) {
  if (static_cast<std::size_t>(window.cols()) != bank.n_samples) {
    throw ShapeError("window has " + std::to_string(window.cols()) +
                     " samples, bank references have " + std::to_string(bank.n_samples));
  }
  std::map<double, double> scores;
  double best = -1.0;
  double best_freq = bank.frequencies_hz.front();
  for (std::size_t i = 0; i < bank.frequencies_hz.size(); ++i) {
    const double f = bank.frequencies_hz[i];
    const double rho = canonical_correlation(window, bank.references[i]).rho;
    scores[f] = rho;
    if (rho > best) {  // strict: ties keep the lowest frequency
      best = rho;
      best_freq = f;
    }
  }
  return {StimulusClass::from_frequency(best_freq), scores};
}

Eigen::MatrixXd trial_matrix(const EpochSet& epochs, std::size_t trial) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(epochs.n_channels),
                    static_cast<Eigen::Index>(epochs.n_samples));
  for (std::size_t c = 0; c < epochs.n_channels; ++c) {
    auto ch = epochs.trial_channel(trial, c);
    for (std::size_t s = 0; s < epochs.n_samples; ++s) {
      m(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(s)) = ch[s];
    }
  }
  return m;
}

}  // namespace ssvep
