// Independent test oracles. These deliberately avoid the library's solver
// paths: the CCA oracle is a plain angle-grid search, the probability
// helpers are direct log-space sums, and the gradient checker is central
// finite differences.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracles {

// Brute-force maximizer of the canonical correlation objective for 2-channel
// X and 2-row Y over unit weight vectors wx = (cos a, sin a), wy = (cos b,
// sin b) on a grid x grid half-circle lattice. Exhaustive in 2-D.
inline double cca_grid_2x2(const Eigen::MatrixXd& x_in, const Eigen::MatrixXd& y_in,
                           int grid = 2000) {
  Eigen::MatrixXd x = x_in;
  x.colwise() -= x_in.rowwise().mean();
  Eigen::MatrixXd y = y_in;
  y.colwise() -= y_in.rowwise().mean();
  const Eigen::Matrix2d cxx = x * x.transpose();
  const Eigen::Matrix2d cyy = y * y.transpose();
  const Eigen::Matrix2d cxy = x * y.transpose();

  std::vector<Eigen::Vector2d> dirs(static_cast<std::size_t>(grid));
  for (int i = 0; i < grid; ++i) {
    const double angle = std::numbers::pi * i / grid;
    dirs[static_cast<std::size_t>(i)] = {std::cos(angle), std::sin(angle)};
  }
  std::vector<double> qy(static_cast<std::size_t>(grid));
  for (int j = 0; j < grid; ++j) {
    qy[static_cast<std::size_t>(j)] = dirs[static_cast<std::size_t>(j)].dot(
        cyy * dirs[static_cast<std::size_t>(j)]);
  }

  double best = 0.0;
  for (int i = 0; i < grid; ++i) {
    const Eigen::Vector2d& wx = dirs[static_cast<std::size_t>(i)];
    const double qx = wx.dot(cxx * wx);
    const Eigen::Vector2d u = cxy.transpose() * wx;
    for (int j = 0; j < grid; ++j) {
      const double num = std::abs(u.dot(dirs[static_cast<std::size_t>(j)]));
      const double corr = num / std::sqrt(qx * qy[static_cast<std::size_t>(j)]);
      if (corr > best) best = corr;
    }
  }
  return best;
}

// log(n choose k)
inline double log_choose(std::int64_t n, std::int64_t k) {
  return std::lgamma(static_cast<double>(n + 1)) - std::lgamma(static_cast<double>(k + 1)) -
         std::lgamma(static_cast<double>(n - k + 1));
}

// One-sided binomial tail P(X >= k) for X ~ Binomial(n, p).
inline double binomial_tail(std::int64_t n, std::int64_t k, double p) {
  if (k <= 0) return 1.0;
  if (k > n) return 0.0;
  double tail = 0.0;
  for (std::int64_t i = k; i <= n; ++i) {
    tail += std::exp(log_choose(n, i) + static_cast<double>(i) * std::log(p) +
                     static_cast<double>(n - i) * std::log1p(-p));
  }
  return std::min(1.0, tail);
}

// Sign test: probability of >= wins successes among wins+losses fair coin
// flips (ties dropped by the caller).
inline double sign_test_p(std::int64_t wins, std::int64_t losses) {
  return binomial_tail(wins + losses, wins, 0.5);
}

// Max relative error between an analytic gradient and central finite
// differences of `loss` under perturbation of `values`.
inline double gradient_check(std::vector<double>& values, const std::vector<double>& grad,
                             const std::function<double()>& loss, double h = 1e-5) {
  double worst = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double keep = values[i];
    values[i] = keep + h;
    const double up = loss();
    values[i] = keep - h;
    const double down = loss();
    values[i] = keep;
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-6});
    worst = std::max(worst, std::abs(fd - grad[i]) / denom);
  }
  return worst;
}

}  // namespace oracles
