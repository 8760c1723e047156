#include "ssvep/shap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "ssvep/errors.hpp"
#include "ssvep/rng.hpp"

namespace ssvep {

namespace {

constexpr std::size_t kMaxExactFeatures = 15;
constexpr std::size_t kEvalChunkRows = 4096;

void check_probability_rows(const Eigen::MatrixXd& probs) {
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    if (std::abs(probs.row(r).sum() - 1.0) > 1e-6) {
      throw NumericError("model output row " + std::to_string(r) +
                         " is not a probability vector");
    }
  }
}

// Evaluates v(S) for a batch of coalitions: each coalition row is expanded
// against every background row (mask=1 keeps the instance value), the model
// is called in chunks, and per-class means over the background come back.
// masks: n_coalitions x M (0/1 as double). Returns n_coalitions x n_classes.
Eigen::MatrixXd coalition_values(const ModelFn& model, const Eigen::MatrixXd& background,
                                 const Eigen::VectorXd& instance,
                                 const Eigen::MatrixXd& masks) {
  const Eigen::Index n_bg = background.rows();
  const Eigen::Index m = instance.size();
  const Eigen::Index n_coal = masks.rows();
  const auto per_chunk = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(kEvalChunkRows) / std::max<Eigen::Index>(1, n_bg));

  Eigen::MatrixXd values;
  Eigen::MatrixXd rows(per_chunk * n_bg, m);
  for (Eigen::Index start = 0; start < n_coal; start += per_chunk) {
    const Eigen::Index count = std::min(per_chunk, n_coal - start);
    rows.resize(count * n_bg, m);
    for (Eigen::Index i = 0; i < count; ++i) {
      for (Eigen::Index b = 0; b < n_bg; ++b) {
        for (Eigen::Index j = 0; j < m; ++j) {
          rows(i * n_bg + b, j) =
              masks(start + i, j) != 0.0 ? instance(j) : background(b, j);
        }
      }
    }
    const Eigen::MatrixXd probs = model(rows);
    if (probs.rows() != rows.rows()) {
      throw ShapeError("model returned wrong number of rows");
    }
    check_probability_rows(probs);
    if (values.size() == 0) values.resize(n_coal, probs.cols());
    for (Eigen::Index i = 0; i < count; ++i) {
      values.row(start + i) = probs.middleRows(i * n_bg, n_bg).colwise().mean();
    }
  }
  return values;
}

double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double result = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    result *= static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return result;
}

}  // namespace

void Explainer::validate() const {
  if (!model) throw ParamError("explainer has no model function");
  if (background.rows() == 0) throw ParamError("explainer background set is empty");
  if (target_class < 0) throw ParamError("target_class must be >= 0");
}

double shapley_kernel_weight(std::size_t m, std::size_t s) {
  if (s == 0 || s == m) throw ParamError("kernel weight undefined for trivial coalitions");
  return static_cast<double>(m - 1) /
         (binomial(m, s) * static_cast<double>(s) * static_cast<double>(m - s));
}

Attribution exact_shapley(const Explainer& explainer, const Eigen::VectorXd& instance,
                          std::span<const int> active_features) {
  explainer.validate();
  if (explainer.background.cols() != instance.size()) {
    throw ShapeError("background and instance dimensions differ");
  }

  std::vector<int> active(active_features.begin(), active_features.end());
  if (active.empty()) {
    active.resize(static_cast<std::size_t>(instance.size()));
    std::iota(active.begin(), active.end(), 0);
  }
  const std::size_t m = active.size();
  if (m > kMaxExactFeatures) {
    throw SizeError("exact enumeration supports at most 15 active features (got " +
                    std::to_string(m) + "); use kernel_shap");
  }
  for (int j : active) {
    if (j < 0 || j >= instance.size()) throw ParamError("active feature index out of range");
  }

  // All 2^m coalition values in one pass. Inactive features stay at the
  // instance value (mask 1).
  const std::size_t n_coal = std::size_t{1} << m;
  Eigen::MatrixXd masks = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n_coal),
                                                instance.size());
  for (std::size_t mask = 0; mask < n_coal; ++mask) {
    for (std::size_t j = 0; j < m; ++j) {
      if (!(mask & (std::size_t{1} << j))) {
        masks(static_cast<Eigen::Index>(mask), active[j]) = 0.0;
      }
    }
  }
  const Eigen::MatrixXd values =
      coalition_values(explainer.model, explainer.background, instance, masks);
  if (explainer.target_class >= values.cols()) {
    throw ParamError("target_class out of range for model output");
  }
  const Eigen::VectorXd v = values.col(explainer.target_class);

  // w[s] = s! (m-s-1)! / m!
  std::vector<double> weight(m);
  for (std::size_t s = 0; s < m; ++s) {
    double w = 1.0 / static_cast<double>(m);
    // 1 / (m * C(m-1, s))
    w /= binomial(m - 1, s);
    weight[s] = w;
  }

  Attribution attr;
  attr.phi = Eigen::VectorXd::Zero(instance.size());
  attr.instance = instance;
  attr.target_class = explainer.target_class;
  attr.estimator = Attribution::Estimator::exact;
  attr.n_samples = n_coal;
  attr.phi0 = v(0);  // empty coalition

  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t bit = std::size_t{1} << j;
    double phi = 0.0;
    for (std::size_t mask = 0; mask < n_coal; ++mask) {
      if (mask & bit) continue;
      const auto s = static_cast<std::size_t>(std::popcount(mask));
      phi += weight[s] * (v(static_cast<Eigen::Index>(mask | bit)) -
                          v(static_cast<Eigen::Index>(mask)));
    }
    attr.phi(active[j]) = phi;
  }
  return attr;
}

Eigen::VectorXd solve_constrained_wls(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& w, double total) {
  const Eigen::Index n = z.rows(), m = z.cols();
  if (y.size() != n || w.size() != n) throw ShapeError("wls: row count mismatch");
  if (m < 1) throw ShapeError("wls: no unknowns");
  if (m == 1) {
    Eigen::VectorXd phi(1);
    phi(0) = total;
    return phi;
  }

  // Eliminate the last unknown via sum(phi) = total.
  Eigen::MatrixXd a(n, m - 1);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double zl = z(i, m - 1);
    for (Eigen::Index j = 0; j < m - 1; ++j) a(i, j) = z(i, j) - zl;
    rhs(i) = y(i) - zl * total;
  }
  const Eigen::ArrayXd sw = w.array().max(0.0).sqrt();
  a.array().colwise() *= sw;
  rhs.array() *= sw;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < m - 1) {
    throw EstimationError("singular regression system; increase n_samples");
  }
  const Eigen::VectorXd head = qr.solve(rhs);

  Eigen::VectorXd phi(m);
  phi.head(m - 1) = head;
  phi(m - 1) = total - head.sum();
  return phi;
}

namespace {

struct KernelDesign {
  Eigen::MatrixXd masks;   // n x M, without the two trivial coalitions
  Eigen::VectorXd weights;
};

KernelDesign build_kernel_design(std::size_t m, std::size_t budget, Rng& rng) {
  KernelDesign design;
  // Full enumeration whenever the budget covers every non-trivial coalition;
  // kernel_shap then reproduces exact Shapley values.
  if (m < 26 && (std::size_t{1} << m) - 2 <= budget) {
    const std::size_t n = (std::size_t{1} << m) - 2;
    design.masks.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    design.weights.resize(static_cast<Eigen::Index>(n));
    std::size_t row = 0;
    for (std::size_t mask = 1; mask < (std::size_t{1} << m) - 1; ++mask, ++row) {
      std::size_t s = 0;
      for (std::size_t j = 0; j < m; ++j) {
        const bool on = (mask & (std::size_t{1} << j)) != 0;
        design.masks(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) =
            on ? 1.0 : 0.0;
        s += on;
      }
      design.weights(static_cast<Eigen::Index>(row)) = shapley_kernel_weight(m, s);
    }
    return design;
  }

  // Sample sizes from the kernel-induced distribution p(s) ~ (m-1)/(s(m-s))
  // and subsets uniformly within a size; rows then enter the regression with
  // unit weight (the kernel is already encoded in the sampling density).
  std::vector<double> cdf(m - 1);
  double total = 0.0;
  for (std::size_t s = 1; s < m; ++s) {
    total += 1.0 / (static_cast<double>(s) * static_cast<double>(m - s));
    cdf[s - 1] = total;
  }
  for (double& c : cdf) c /= total;

  design.masks = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(budget),
                                       static_cast<Eigen::Index>(m));
  design.weights = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(budget));
  std::vector<std::size_t> pool(m);
  for (std::size_t i = 0; i < budget; ++i) {
    const double u = rng.uniform();
    std::size_t s = 1;
    while (s < m - 1 && u > cdf[s - 1]) ++s;
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t k = 0; k < s; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng.below(m - k));
      std::swap(pool[k], pool[j]);
      design.masks(static_cast<Eigen::Index>(i),
                   static_cast<Eigen::Index>(pool[k])) = 1.0;
    }
  }
  return design;
}

}  // namespace

std::vector<Attribution> kernel_shap_all_classes(const ModelFn& model,
                                                 const Eigen::MatrixXd& background,
                                                 const Eigen::VectorXd& instance,
                                                 std::size_t n_samples,
                                                 std::uint64_t seed) {
  if (background.rows() == 0) throw ParamError("background set is empty");
  if (background.cols() != instance.size()) {
    throw ShapeError("background and instance dimensions differ");
  }
  const auto m = static_cast<std::size_t>(instance.size());
  if (n_samples < 2 * m + 2) {
    throw ParamError("n_samples must be at least 2*M + 2 = " + std::to_string(2 * m + 2));
  }

  Rng rng(seed);
  KernelDesign design = build_kernel_design(m, n_samples - 2, rng);

  // Anchors evaluated exactly: v(empty) from the background alone, v(full)
  // from the instance.
  Eigen::MatrixXd empty_probs = model(background);
  check_probability_rows(empty_probs);
  const Eigen::RowVectorXd v_empty = empty_probs.colwise().mean();
  Eigen::MatrixXd full_probs = model(instance.transpose());
  check_probability_rows(full_probs);
  const Eigen::RowVectorXd v_full = full_probs.row(0);

  const Eigen::MatrixXd values = coalition_values(model, background, instance, design.masks);

  std::vector<Attribution> out;
  for (Eigen::Index cls = 0; cls < values.cols(); ++cls) {
    Attribution attr;
    attr.instance = instance;
    attr.target_class = static_cast<int>(cls);
    attr.estimator = Attribution::Estimator::kernel;
    attr.n_samples = n_samples;
    attr.phi0 = v_empty(cls);
    attr.phi = solve_constrained_wls(design.masks,
                                     values.col(cls).array() - v_empty(cls),
                                     design.weights, v_full(cls) - v_empty(cls));
    out.push_back(std::move(attr));
  }
  return out;
}

Attribution kernel_shap(const Explainer& explainer, const Eigen::VectorXd& instance,
                        std::size_t n_samples, std::uint64_t seed) {
  explainer.validate();
  std::vector<Attribution> all = kernel_shap_all_classes(
      explainer.model, explainer.background, instance, n_samples, seed);
  if (explainer.target_class >= static_cast<int>(all.size())) {
    throw ParamError("target_class out of range for model output");
  }
  return all[static_cast<std::size_t>(explainer.target_class)];
}

ImportanceTable aggregate_importance(const std::vector<Attribution>& attributions,
                                     const FeatureLayout& layout) {
  if (attributions.empty()) throw ParamError("no attributions to aggregate");
  const auto m = static_cast<std::size_t>(attributions[0].phi.size());

  auto build = [&](const std::vector<const Attribution*>& group) {
    std::vector<double> mean_abs(m, 0.0);
    for (const Attribution* a : group) {
      for (std::size_t j = 0; j < m; ++j) mean_abs[j] += std::abs(a->phi(static_cast<Eigen::Index>(j)));
    }
    for (double& v : mean_abs) v /= static_cast<double>(group.size());

    std::vector<ImportanceEntry> entries;
    for (std::size_t j = 0; j < m; ++j) {
      entries.push_back({j, layout.name(j), mean_abs[j], 0});
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const ImportanceEntry& a, const ImportanceEntry& b) {
                       return a.mean_abs_shap > b.mean_abs_shap;
                     });
    for (std::size_t i = 0; i < entries.size(); ++i) entries[i].rank = static_cast<int>(i + 1);
    return entries;
  };

  ImportanceTable table;
  std::map<int, std::vector<const Attribution*>> groups;
  std::vector<const Attribution*> everything;
  for (const Attribution& a : attributions) {
    if (static_cast<std::size_t>(a.phi.size()) != m) {
      throw ShapeError("attribution dimensions differ");
    }
    groups[a.target_class].push_back(&a);
    everything.push_back(&a);
  }
  for (auto& [cls, group] : groups) table.per_class[cls] = build(group);
  table.overall = build(everything);
  return table;
}

}  // namespace ssvep
