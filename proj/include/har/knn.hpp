#pragma once

#include <memory>
#include <vector>

#include "har/dataset.hpp"

namespace har {

/// Instance-based classifier: fit stores the training set, predict takes a
/// majority vote among the k nearest samples under Euclidean distance.
///
/// Deterministic tie handling, independent of storage order:
///  - neighbor selection orders by (distance, label code, canonical sample
///    ordinal), where the ordinal comes from sorting the training set by
///    feature values at fit time;
///  - vote ties go to the class whose nearest member is closest, then to the
///    smaller label code.
struct KnnModel {
    int k = 1;
    std::shared_ptr<const std::vector<Sample>> training_samples;
    std::vector<std::uint32_t> canonical_ordinal;  // per training index
};

KnnModel knn_fit(std::shared_ptr<const std::vector<Sample>> train, int k);
KnnModel knn_fit(std::vector<Sample> train, int k);

Activity knn_predict(const KnnModel& model, const FeatureVector& x);

/// One prediction per query; OpenMP-parallel across queries, per-query result
/// identical to knn_predict.
std::vector<Activity> knn_predict_batch(const KnnModel& model,
                                        const std::vector<FeatureVector>& queries);

struct KnnSweepResult {
    std::vector<std::pair<int, double>> accuracy_by_k;    // in the requested order
    std::vector<std::vector<Activity>> predictions_by_k;  // parallel to accuracy_by_k
    int best_k = 1;                                       // argmax accuracy; ties -> smaller k
};

/// Validation accuracy for each requested k; distances per validation point
/// are computed once and reused across all k.
KnnSweepResult knn_sweep(std::shared_ptr<const std::vector<Sample>> train,
                         const std::vector<Sample>& validation,
                         const std::vector<int>& k_values);

}  // namespace har
