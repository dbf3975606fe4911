#pragma once

// Serial reference implementations of the parallel kernels, written
// independently of the primary code paths. Tests compare the two and
// har_bench times them against each other.

#include "har/core_math.hpp"
#include "har/knn.hpp"
#include "har/mlp.hpp"
#include "har/svm.hpp"

namespace har::ref {

Matrix gram_matrix(const Kernel& k, const std::vector<FeatureVector>& xs);

/// Exhaustive scan with a full stable sort and an explicit vote recount.
std::vector<Activity> knn_predict_batch(const std::vector<Sample>& train, int k,
                                        const std::vector<FeatureVector>& queries);

Matrix mlp_forward_batch(const MlpModel& model, const std::vector<FeatureVector>& queries);

std::pair<double, Gradients> mlp_loss_and_gradients(const MlpModel& model,
                                                    const LabeledBatch& batch);

std::vector<double> svm_decision_batch(const BinarySvm& model,
                                       const std::vector<FeatureVector>& queries);

}  // namespace har::ref
