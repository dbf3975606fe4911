#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "har/dataset.hpp"

namespace har {

/// Feed-forward network with ReLU hidden layers and a softmax output.
/// weights[l] has shape layer_sizes[l+1] x layer_sizes[l] (row-major, out x in).
struct MlpModel {
    std::vector<int> layer_sizes;
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;

    int input_size() const { return layer_sizes.front(); }
    int output_size() const { return layer_sizes.back(); }
    void validate() const;  // shapes chain, parameters finite (CorruptionError)

    bool operator==(const MlpModel&) const = default;
};

enum class Optimizer { Sgd, Adam };

struct TrainConfig {
    double learning_rate = 0.001;
    int epochs = 1000;
    int batch_size = 200;
    Optimizer optimizer = Optimizer::Adam;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint64_t seed = 42;
    std::vector<int> hidden = {100, 65};

    void validate() const;
};

/// Scaled-uniform fan-based init: each weight uniform in
/// +-sqrt(6 / (fan_in + fan_out)), biases zero, drawn from the seeded PRNG in
/// a fixed (layer, row, column) order.
MlpModel mlp_init(const std::vector<int>& layer_sizes, std::uint64_t seed);

/// Class probabilities for one input; softmax is computed with
/// max-subtraction so arbitrary finite logits stay stable.
std::vector<double> mlp_forward(const MlpModel& model, const FeatureVector& x);

/// One row of probabilities per query; OpenMP-parallel across queries with
/// per-query results identical to mlp_forward.
Matrix mlp_forward_batch(const MlpModel& model, const std::vector<FeatureVector>& queries);

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
};

using LabeledBatch = std::vector<std::pair<FeatureVector, Activity>>;

/// Mean cross-entropy over the batch and its parameter gradients by
/// backpropagation (softmax and cross-entropy fused at the output layer).
std::pair<double, Gradients> mlp_loss_and_gradients(const MlpModel& model,
                                                    const LabeledBatch& batch);

struct EpochStats {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_accuracy = 0.0;
};

struct MlpTrainResult {
    MlpModel model;
    std::vector<EpochStats> history;
};

/// Mini-batch training: parameters initialized from config.seed, data
/// shuffled per epoch by the same PRNG stream, loss and validation accuracy
/// recorded per epoch. Validation is never used to stop early. A NaN/inf
/// loss aborts with TrainingDivergedError carrying the epoch.
MlpTrainResult mlp_train(const std::vector<Sample>& train, const std::vector<Sample>& validation,
                         const TrainConfig& config);

Activity mlp_predict(const MlpModel& model, const FeatureVector& x);
std::vector<Activity> mlp_predict_batch(const MlpModel& model,
                                        const std::vector<FeatureVector>& queries);

nlohmann::json mlp_to_json(const MlpModel& model, const nlohmann::json& config_echo = {});
MlpModel mlp_from_json(const nlohmann::json& j);

/// "epoch,train_loss,val_accuracy" rows; byte-deterministic.
std::string history_csv(const std::vector<EpochStats>& history);

}  // namespace har
