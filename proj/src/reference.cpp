#include "har/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace har::ref {

Matrix gram_matrix(const Kernel& k, const std::vector<FeatureVector>& xs) {
    Matrix g(xs.size(), xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = 0; j < xs.size(); ++j) g(i, j) = kernel_eval(k, xs[i], xs[j]);
    return g;
}

namespace {

struct Candidate {
    double d2;
    int label_code;
    std::size_t canonical_rank;
};

}  // namespace

std::vector<Activity> knn_predict_batch(const std::vector<Sample>& train, int k,
                                        const std::vector<FeatureVector>& queries) {
    // canonical rank by an independent argsort over (features, label)
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (train[a].features < train[b].features) return true;
        if (train[b].features < train[a].features) return false;
        return train[a].label < train[b].label;
    });
    std::vector<std::size_t> rank(train.size());
    for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;

    std::vector<Activity> out;
    out.reserve(queries.size());
    for (const auto& q : queries) {
        std::vector<Candidate> all(train.size());
        for (std::size_t i = 0; i < train.size(); ++i) {
            double d2 = 0.0;
            for (std::size_t f = 0; f < q.size(); ++f) {
                double d = train[i].features[f] - q[f];
                d2 += d * d;
            }
            all[i] = Candidate{d2, activity_code(train[i].label), rank[i]};
        }
        std::stable_sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
            if (a.d2 != b.d2) return a.d2 < b.d2;
            if (a.label_code != b.label_code) return a.label_code < b.label_code;
            return a.canonical_rank < b.canonical_rank;
        });

        struct Tally {
            int votes = 0;
            double nearest = std::numeric_limits<double>::infinity();
        };
        Tally tally[kNumActivities];
        for (int i = 0; i < k; ++i) {
            Tally& t = tally[all[static_cast<std::size_t>(i)].label_code - 1];
            t.votes++;
            t.nearest = std::min(t.nearest, all[static_cast<std::size_t>(i)].d2);
        }
        int winner = 0;
        for (int c = 1; c < kNumActivities; ++c) {
            if (tally[c].votes > tally[winner].votes ||
                (tally[c].votes == tally[winner].votes && tally[c].nearest < tally[winner].nearest))
                winner = c;
        }
        out.push_back(activity_from_code(winner + 1));
    }
    return out;
}

namespace {

// textbook per-sample evaluation, kept deliberately plain
std::vector<std::vector<double>> forward_layers(const MlpModel& model, const FeatureVector& x) {
    std::vector<std::vector<double>> acts;
    acts.push_back(x);
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        const Matrix& w = model.weights[l];
        std::vector<double> z(w.rows, 0.0);
        for (std::size_t o = 0; o < w.rows; ++o) {
            double acc = model.biases[l][o];
            for (std::size_t i = 0; i < w.cols; ++i) acc += w(o, i) * acts.back()[i];
            z[o] = acc;
        }
        if (l + 1 < model.weights.size())
            for (double& v : z) v = std::max(0.0, v);
        acts.push_back(std::move(z));
    }
    auto& logits = acts.back();
    double m = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double v : logits) total += std::exp(v - m);
    for (double& v : logits) v = std::exp(v - m) / total;
    return acts;
}

}  // namespace

Matrix mlp_forward_batch(const MlpModel& model, const std::vector<FeatureVector>& queries) {
    Matrix probs(queries.size(), static_cast<std::size_t>(model.output_size()));
    for (std::size_t q = 0; q < queries.size(); ++q) {
        auto acts = forward_layers(model, queries[q]);
        std::copy(acts.back().begin(), acts.back().end(), probs.row(q));
    }
    return probs;
}

std::pair<double, Gradients> mlp_loss_and_gradients(const MlpModel& model,
                                                    const LabeledBatch& batch) {
    const std::size_t n_layers = model.weights.size();
    Gradients grads;
    for (std::size_t l = 0; l < n_layers; ++l) {
        grads.weights.emplace_back(model.weights[l].rows, model.weights[l].cols);
        grads.biases.emplace_back(model.biases[l].size(), 0.0);
    }

    double loss = 0.0;
    for (const auto& [x, label] : batch) {
        auto acts = forward_layers(model, x);  // acts.back() = probabilities
        const auto truth = static_cast<std::size_t>(activity_code(label) - 1);
        loss += -std::log(acts.back()[truth]);

        std::vector<double> delta = acts.back();
        delta[truth] -= 1.0;

        for (std::size_t l = n_layers; l-- > 0;) {
            for (std::size_t o = 0; o < model.weights[l].rows; ++o) {
                grads.biases[l][o] += delta[o];
                for (std::size_t i = 0; i < model.weights[l].cols; ++i)
                    grads.weights[l](o, i) += delta[o] * acts[l][i];
            }
            if (l == 0) break;
            std::vector<double> prev(model.weights[l].cols, 0.0);
            for (std::size_t i = 0; i < model.weights[l].cols; ++i) {
                double acc = 0.0;
                for (std::size_t o = 0; o < model.weights[l].rows; ++o)
                    acc += delta[o] * model.weights[l](o, i);
                prev[i] = acts[l][i] > 0.0 ? acc : 0.0;
            }
            delta = std::move(prev);
        }
    }

    const double inv = 1.0 / static_cast<double>(batch.size());
    loss *= inv;
    for (std::size_t l = 0; l < n_layers; ++l) {
        for (double& v : grads.weights[l].data) v *= inv;
        for (double& v : grads.biases[l]) v *= inv;
    }
    return {loss, std::move(grads)};
}

std::vector<double> svm_decision_batch(const BinarySvm& model,
                                       const std::vector<FeatureVector>& queries) {
    std::vector<double> out(queries.size(), 0.0);
    for (std::size_t q = 0; q < queries.size(); ++q) {
        double f = model.bias;
        for (std::size_t i = 0; i < model.support_vectors.size(); ++i)
            f += model.alphas[i] * model.support_labels[i] *
                 kernel_eval(model.kernel, model.support_vectors[i], queries[q]);
        out[q] = f;
    }
    return out;
}

}  // namespace har::ref
