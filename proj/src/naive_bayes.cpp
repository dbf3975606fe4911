#include "har/naive_bayes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "har/errors.hpp"

namespace har {

GnbModel gnb_fit(const std::vector<Sample>& train, double smoothing_epsilon_fraction,
                 const std::optional<std::vector<Activity>>& expected_classes) {
    if (train.empty()) throw CoverageError("gnb_fit: empty training set");
    if (smoothing_epsilon_fraction < 0.0)
        throw ConfigError("gnb_fit: smoothing fraction must be >= 0");
    const std::size_t dim = train[0].features.size();
    for (const auto& s : train)
        if (s.features.size() != dim) throw DimensionError("gnb_fit: inconsistent feature counts");

    auto hist = class_histogram(train);
    std::vector<Activity> classes;
    if (expected_classes) {
        classes = *expected_classes;
        std::sort(classes.begin(), classes.end(),
                  [](Activity a, Activity b) { return activity_code(a) < activity_code(b); });
        for (Activity a : classes)
            if (hist[static_cast<std::size_t>(activity_code(a) - 1)] == 0)
                throw CoverageError("gnb_fit: class " + std::string(activity_name(a)) +
                                    " absent from training data");
    } else {
        for (Activity a : all_activities())
            if (hist[static_cast<std::size_t>(activity_code(a) - 1)] > 0) classes.push_back(a);
    }

    const std::size_t nc = classes.size();
    GnbModel model;
    model.classes = classes;
    model.log_priors.assign(nc, 0.0);
    model.means = Matrix(nc, dim);
    model.variances = Matrix(nc, dim);

    std::vector<std::size_t> class_index(kNumActivities, nc);  // code-1 -> row
    for (std::size_t c = 0; c < nc; ++c)
        class_index[static_cast<std::size_t>(activity_code(classes[c]) - 1)] = c;

    std::vector<std::size_t> counts(nc, 0);
    for (const auto& s : train) {
        std::size_t c = class_index[static_cast<std::size_t>(activity_code(s.label) - 1)];
        if (c == nc) continue;  // label outside the expected class set
        counts[c]++;
        double* mu = model.means.row(c);
        for (std::size_t f = 0; f < dim; ++f) mu[f] += s.features[f];
    }
    std::size_t used = 0;
    for (std::size_t c = 0; c < nc; ++c) used += counts[c];
    for (std::size_t c = 0; c < nc; ++c) {
        double* mu = model.means.row(c);
        for (std::size_t f = 0; f < dim; ++f) mu[f] /= static_cast<double>(counts[c]);
        model.log_priors[c] =
            std::log(static_cast<double>(counts[c]) / static_cast<double>(used));
    }
    for (const auto& s : train) {
        std::size_t c = class_index[static_cast<std::size_t>(activity_code(s.label) - 1)];
        if (c == nc) continue;
        const double* mu = model.means.row(c);
        double* var = model.variances.row(c);
        for (std::size_t f = 0; f < dim; ++f) {
            double d = s.features[f] - mu[f];
            var[f] += d * d;
        }
    }
    for (std::size_t c = 0; c < nc; ++c) {
        double* var = model.variances.row(c);
        for (std::size_t f = 0; f < dim; ++f) var[f] /= static_cast<double>(counts[c]);
    }

    // epsilon scales with the largest per-feature variance of the whole set
    double max_total_var = 0.0;
    if (smoothing_epsilon_fraction > 0.0) {
        std::vector<double> total_mean(dim, 0.0);
        for (const auto& s : train)
            for (std::size_t f = 0; f < dim; ++f) total_mean[f] += s.features[f];
        for (std::size_t f = 0; f < dim; ++f) total_mean[f] /= static_cast<double>(train.size());
        std::vector<double> total_var(dim, 0.0);
        for (const auto& s : train)
            for (std::size_t f = 0; f < dim; ++f) {
                double d = s.features[f] - total_mean[f];
                total_var[f] += d * d;
            }
        for (std::size_t f = 0; f < dim; ++f)
            max_total_var = std::max(max_total_var, total_var[f] / static_cast<double>(train.size()));
    }
    model.smoothing_epsilon = smoothing_epsilon_fraction * max_total_var;
    for (std::size_t c = 0; c < nc; ++c) {
        double* var = model.variances.row(c);
        for (std::size_t f = 0; f < dim; ++f) {
            var[f] += model.smoothing_epsilon;
            if (!(var[f] > 0.0))
                throw ConfigError("gnb_fit: zero variance for class " +
                                  std::string(activity_name(classes[c])) + " feature " +
                                  std::to_string(f) + "; increase smoothing");
        }
    }
    return model;
}

GnbPosterior gnb_log_posterior(const GnbModel& model, const FeatureVector& x) {
    const std::size_t dim = model.means.cols;
    if (x.size() != dim)
        throw DimensionError("gnb: query has " + std::to_string(x.size()) +
                             " features, model has " + std::to_string(dim));

    GnbPosterior post;
    post.classes = model.classes;
    post.log_unnormalized.resize(model.classes.size());
    constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)
    for (std::size_t c = 0; c < model.classes.size(); ++c) {
        const double* mu = model.means.row(c);
        const double* var = model.variances.row(c);
        double acc = model.log_priors[c];
        for (std::size_t f = 0; f < dim; ++f) {
            double d = x[f] - mu[f];
            acc -= 0.5 * (kLog2Pi + std::log(var[f]) + d * d / var[f]);
        }
        post.log_unnormalized[c] = acc;
    }

    double m = *std::max_element(post.log_unnormalized.begin(), post.log_unnormalized.end());
    double z = 0.0;
    for (double lp : post.log_unnormalized) z += std::exp(lp - m);
    post.normalized.resize(post.log_unnormalized.size());
    for (std::size_t c = 0; c < post.normalized.size(); ++c)
        post.normalized[c] = std::exp(post.log_unnormalized[c] - m) / z;
    return post;
}

Activity gnb_predict(const GnbModel& model, const FeatureVector& x) {
    auto post = gnb_log_posterior(model, x);
    std::size_t best = 0;
    for (std::size_t c = 1; c < post.classes.size(); ++c)
        if (post.log_unnormalized[c] > post.log_unnormalized[best]) best = c;
    // classes are stored in code order, so the first maximum is the smaller code
    return post.classes[best];
}

std::vector<Activity> gnb_predict_batch(const GnbModel& model,
                                        const std::vector<FeatureVector>& queries) {
    std::vector<Activity> out(queries.size(), Activity::Walking);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(queries.size()); ++i)
        out[static_cast<std::size_t>(i)] = gnb_predict(model, queries[static_cast<std::size_t>(i)]);
    return out;
}

}  // namespace har
