#include "har/knn.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>

#include "har/errors.hpp"

namespace har {

namespace {

struct Neighbor {
    double d2;
    int label_code;
    std::uint32_t ordinal;

    bool operator<(const Neighbor& o) const {
        if (d2 != o.d2) return d2 < o.d2;
        if (label_code != o.label_code) return label_code < o.label_code;
        return ordinal < o.ordinal;
    }
};

void check_model(const KnnModel& model) {
    if (!model.training_samples || model.training_samples->empty())
        throw ConfigError("knn: model has no training samples");
    const auto n = static_cast<int>(model.training_samples->size());
    if (model.k < 1 || model.k > n)
        throw ConfigError("knn: k=" + std::to_string(model.k) + " out of range 1.." +
                          std::to_string(n));
}

std::vector<Neighbor> neighbor_list(const KnnModel& model, const FeatureVector& x) {
    const auto& train = *model.training_samples;
    if (x.size() != train[0].features.size())
        throw DimensionError("knn: query has " + std::to_string(x.size()) +
                             " features, training data has " +
                             std::to_string(train[0].features.size()));
    std::vector<Neighbor> nbrs(train.size());
    for (std::size_t i = 0; i < train.size(); ++i)
        nbrs[i] = Neighbor{squared_distance(train[i].features, x),
                           activity_code(train[i].label), model.canonical_ordinal[i]};
    return nbrs;
}

// Majority vote over the first k entries of a sorted neighbor list.
Activity vote(const Neighbor* nbrs, int k) {
    int votes[kNumActivities] = {};
    double nearest[kNumActivities];
    std::fill(nearest, nearest + kNumActivities, std::numeric_limits<double>::infinity());
    for (int i = 0; i < k; ++i) {
        int c = nbrs[i].label_code - 1;
        votes[c]++;
        nearest[c] = std::min(nearest[c], nbrs[i].d2);
    }
    int best = 0;
    for (int c = 1; c < kNumActivities; ++c) {
        if (votes[c] > votes[best] || (votes[c] == votes[best] && nearest[c] < nearest[best]))
            best = c;
        // equal votes and equal nearest distance: keep the smaller code
    }
    return activity_from_code(best + 1);
}

}  // namespace

KnnModel knn_fit(std::shared_ptr<const std::vector<Sample>> train, int k) {
    if (!train || train->empty()) throw ConfigError("knn_fit: empty training set");
    if (k < 1 || k > static_cast<int>(train->size()))
        throw ConfigError("knn_fit: k=" + std::to_string(k) + " out of range 1.." +
                          std::to_string(train->size()));

    // canonical ordinal = rank under (features lexicographic, label code);
    // value-identical duplicates are interchangeable, so any rank among them works
    std::vector<std::uint32_t> order(train->size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        const Sample& sa = (*train)[a];
        const Sample& sb = (*train)[b];
        if (sa.features != sb.features)
            return std::lexicographical_compare(sa.features.begin(), sa.features.end(),
                                                sb.features.begin(), sb.features.end());
        return activity_code(sa.label) < activity_code(sb.label);
    });
    std::vector<std::uint32_t> ordinal(train->size());
    for (std::uint32_t rank = 0; rank < order.size(); ++rank) ordinal[order[rank]] = rank;

    return KnnModel{k, std::move(train), std::move(ordinal)};
}

KnnModel knn_fit(std::vector<Sample> train, int k) {
    return knn_fit(std::make_shared<const std::vector<Sample>>(std::move(train)), k);
}

Activity knn_predict(const KnnModel& model, const FeatureVector& x) {
    check_model(model);
    auto nbrs = neighbor_list(model, x);
    const auto k = static_cast<std::size_t>(model.k);
    std::partial_sort(nbrs.begin(), nbrs.begin() + static_cast<std::ptrdiff_t>(k), nbrs.end());
    return vote(nbrs.data(), model.k);
}

std::vector<Activity> knn_predict_batch(const KnnModel& model,
                                        const std::vector<FeatureVector>& queries) {
    check_model(model);
    std::vector<Activity> out(queries.size(), Activity::Walking);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t q = 0; q < static_cast<std::ptrdiff_t>(queries.size()); ++q) {
        auto nbrs = neighbor_list(model, queries[static_cast<std::size_t>(q)]);
        std::partial_sort(nbrs.begin(), nbrs.begin() + model.k, nbrs.end());
        out[static_cast<std::size_t>(q)] = vote(nbrs.data(), model.k);
    }
    return out;
}

KnnSweepResult knn_sweep(std::shared_ptr<const std::vector<Sample>> train,
                         const std::vector<Sample>& validation,
                         const std::vector<int>& k_values) {
    if (validation.empty()) throw ConfigError("knn_sweep: empty validation set");
    if (k_values.empty()) throw ConfigError("knn_sweep: no k values requested");
    int max_k = *std::max_element(k_values.begin(), k_values.end());
    KnnModel model = knn_fit(std::move(train), max_k);  // validates bounds for every k

    std::vector<std::vector<Activity>> predictions(
        k_values.size(), std::vector<Activity>(validation.size(), Activity::Walking));
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t q = 0; q < static_cast<std::ptrdiff_t>(validation.size()); ++q) {
        const Sample& s = validation[static_cast<std::size_t>(q)];
        auto nbrs = neighbor_list(model, s.features);
        std::partial_sort(nbrs.begin(), nbrs.begin() + max_k, nbrs.end());
        for (std::size_t ki = 0; ki < k_values.size(); ++ki)
            predictions[ki][static_cast<std::size_t>(q)] = vote(nbrs.data(), k_values[ki]);
    }

    KnnSweepResult result;
    result.predictions_by_k = std::move(predictions);
    for (std::size_t ki = 0; ki < k_values.size(); ++ki) {
        std::size_t correct = 0;
        for (std::size_t q = 0; q < validation.size(); ++q)
            if (result.predictions_by_k[ki][q] == validation[q].label) ++correct;
        result.accuracy_by_k.emplace_back(
            k_values[ki], static_cast<double>(correct) / static_cast<double>(validation.size()));
    }
    result.best_k = result.accuracy_by_k[0].first;
    double best_acc = result.accuracy_by_k[0].second;
    for (const auto& [k, acc] : result.accuracy_by_k) {
        if (acc > best_acc || (acc == best_acc && k < result.best_k)) {
            best_acc = acc;
            result.best_k = k;
        }
    }
    return result;
}

}  // namespace har
