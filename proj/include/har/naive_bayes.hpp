#pragma once

#include <optional>
#include <vector>

#include "har/dataset.hpp"

namespace har {

/// Gaussian Naive Bayes: per-class per-feature sample mean and biased
/// (maximum-likelihood) variance, priors from class frequencies. Variances
/// are smoothed by epsilon = smoothing_epsilon_fraction * max over features
/// of the whole-training-set variance. All likelihood math runs in log space.
struct GnbModel {
    std::vector<Activity> classes;     // in label-code order
    std::vector<double> log_priors;    // one per class
    Matrix means;                      // classes x features
    Matrix variances;                  // classes x features, smoothed, > 0
    double smoothing_epsilon = 0.0;
};

/// Classes default to the distinct labels observed in train; passing
/// expected_classes makes a class with no samples a CoverageError.
GnbModel gnb_fit(const std::vector<Sample>& train, double smoothing_epsilon_fraction = 1e-9,
                 const std::optional<std::vector<Activity>>& expected_classes = std::nullopt);

struct GnbPosterior {
    std::vector<Activity> classes;
    std::vector<double> log_unnormalized;  // log prior + log likelihood
    std::vector<double> normalized;        // via log-sum-exp; sums to 1
};

GnbPosterior gnb_log_posterior(const GnbModel& model, const FeatureVector& x);

/// argmax of the log posterior; ties -> smaller label code.
Activity gnb_predict(const GnbModel& model, const FeatureVector& x);

std::vector<Activity> gnb_predict_batch(const GnbModel& model,
                                        const std::vector<FeatureVector>& queries);

}  // namespace har
