#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "har/dataset.hpp"

namespace har {

struct SmoConfig {
    double c = 0.5;                       // box constraint
    double kkt_tolerance = 1e-3;
    double alpha_change_epsilon = 1e-12;  // minimum accepted multiplier change
    int max_passes_without_progress = 5;
    long max_iterations = 2000;           // full index sweeps
    std::uint64_t seed = 42;
    std::size_t cache_budget_bytes = 128u << 20;

    /// Test hook: called after every accepted pair update with the full
    /// multiplier vector and current bias.
    std::function<void(std::span<const double> alphas, double bias)> on_step;

    void validate() const;  // throws ConfigError
};

/// Soft-margin binary SVM in dual form:
///   f(x) = sum_i alpha_i * y_i * kernel(sv_i, x) + bias
/// Only multipliers above alpha_change_epsilon are stored.
struct BinarySvm {
    Kernel kernel;
    double c = 0.5;
    std::vector<FeatureVector> support_vectors;
    std::vector<int> support_labels;  // -1 / +1
    std::vector<double> alphas;       // in (0, C]
    double bias = 0.0;

    // diagnostics
    bool converged = false;
    double kkt_max = 0.0;
    long sweeps = 0;
    std::vector<std::size_t> support_indices;  // into the training set (not serialized)
};

/// Sequential Minimal Optimization (Platt-style): repeatedly picks a pair of
/// multipliers, solves the two-variable subproblem analytically, and keeps a
/// full error cache. Second choice maximizes |E1 - E2| over non-bound points,
/// with randomized fallback scans; the outer loop alternates full passes and
/// non-bound passes until a full sweep finds no KKT violation above
/// kkt_tolerance (or the sweep/progress caps hit, which flags the result
/// non-converged rather than failing).
BinarySvm smo_train(const std::vector<FeatureVector>& xs, const std::vector<int>& ys,
                    const Kernel& kernel, const SmoConfig& config);

double svm_decision(const BinarySvm& model, const FeatureVector& x);
std::vector<double> svm_decision_batch(const BinarySvm& model,
                                       const std::vector<FeatureVector>& queries);

/// Dual objective W(alpha) = sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij,
/// computed directly from the definition.
double dual_objective(const std::vector<FeatureVector>& xs, const std::vector<int>& ys,
                      const Kernel& kernel, const std::vector<double>& alphas);

/// Maximum KKT violation of the model over its training set:
///   alpha=0:      max(0, 1 - y f)
///   0<alpha<C:    |y f - 1|
///   alpha=C:      max(0, y f - 1)
double kkt_report(const BinarySvm& model, const std::vector<FeatureVector>& xs,
                  const std::vector<int>& ys);

struct PairMachine {
    Activity class_a;  // smaller code, mapped to -1
    Activity class_b;  // larger code, mapped to +1
    BinarySvm model;
};

struct MulticlassSvm {
    Kernel kernel;
    double c = 0.5;
    std::vector<PairMachine> machines;  // one per trainable unordered pair
};

struct OvoTrainResult {
    MulticlassSvm model;
    std::vector<std::pair<Activity, Activity>> skipped_pairs;  // a class had no samples
};

/// One-vs-one decomposition: one binary machine per unordered class pair,
/// trained on the restriction of train to those classes. Machines train
/// concurrently (OpenMP); each is single-threaded deterministic with a seed
/// derived from config.seed and the pair index.
OvoTrainResult ovo_train(const std::vector<Sample>& train, const Kernel& kernel,
                         const SmoConfig& config);

/// Majority vote of the pairwise machines; sign(0) votes for the -1-side
/// class. Vote ties go to the larger sum of |decision value| over the tied
/// classes' machines, then to the smaller label code.
Activity ovo_predict(const MulticlassSvm& model, const FeatureVector& x);
std::vector<Activity> ovo_predict_batch(const MulticlassSvm& model,
                                        const std::vector<FeatureVector>& queries);

nlohmann::json binary_svm_to_json(const BinarySvm& model);
BinarySvm binary_svm_from_json(const nlohmann::json& j);
nlohmann::json multiclass_svm_to_json(const MulticlassSvm& model);
MulticlassSvm multiclass_svm_from_json(const nlohmann::json& j);

}  // namespace har
