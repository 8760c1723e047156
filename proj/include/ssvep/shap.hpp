#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ssvep/features.hpp"

namespace ssvep {

// Batch model handle: rows are feature vectors, output rows are per-class
// probability vectors (each summing to 1).
using ModelFn = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

struct Explainer {
  ModelFn model;
  Eigen::MatrixXd background;  // rows are background feature vectors
  int target_class = 0;

  void validate() const;
};

struct Attribution {
  enum class Estimator : std::uint8_t { exact, kernel };

  Eigen::VectorXd phi;        // one Shapley value per feature
  double phi0 = 0.0;          // mean model output over the background
  Eigen::VectorXd instance;
  int target_class = 0;
  Estimator estimator = Estimator::exact;
  std::size_t n_samples = 0;  // evaluations used (2^M for exact)
};

// Exact Shapley values by coalition enumeration over `active_features`
// (all features when empty; at most 15). Features outside the active set
// stay fixed at their instance values. Masked features are replaced by
// background values, averaged over the background set.
Attribution exact_shapley(const Explainer& explainer, const Eigen::VectorXd& instance,
                          std::span<const int> active_features = {});

// KernelSHAP: coalitions drawn from the Shapley kernel (or fully enumerated
// when the budget covers 2^M), the all-ones/all-zeros coalitions pinned
// exactly, and the weighted least-squares solved with the additivity
// constraint eliminated. Deterministic per seed.
Attribution kernel_shap(const Explainer& explainer, const Eigen::VectorXd& instance,
                        std::size_t n_samples, std::uint64_t seed);

// Same coalition evaluations reused for every class (one regression per
// class); much cheaper than four independent kernel_shap calls.
std::vector<Attribution> kernel_shap_all_classes(const ModelFn& model,
                                                 const Eigen::MatrixXd& background,
                                                 const Eigen::VectorXd& instance,
                                                 std::size_t n_samples,
                                                 std::uint64_t seed);

// Shapley kernel weight for a coalition of size s out of m features.
double shapley_kernel_weight(std::size_t m, std::size_t s);

// Constrained weighted least squares: minimize sum_i w_i (y_i - z_i . phi)^2
// subject to sum(phi) = total. Exposed for direct testing of the singular
// path. Throws EstimationError when the reduced system is rank-deficient.
Eigen::VectorXd solve_constrained_wls(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& w, double total);

struct ImportanceEntry {
  std::size_t feature_index;
  std::string feature;
  double mean_abs_shap;
  int rank;  // 1-based, descending importance
};

struct ImportanceTable {
  std::map<int, std::vector<ImportanceEntry>> per_class;
  std::vector<ImportanceEntry> overall;
};

// Mean |phi| per feature, per class and overall, each sorted descending.
ImportanceTable aggregate_importance(const std::vector<Attribution>& attributions,
                                     const FeatureLayout& layout);

}  // namespace ssvep
