#include "har/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "har/errors.hpp"

namespace har {

void MlpModel::validate() const {
    if (layer_sizes.size() < 2) throw ConfigError("mlp: need at least input and output layers");
    for (int s : layer_sizes)
        if (s < 1) throw ConfigError("mlp: layer sizes must be positive");
    if (weights.size() != layer_sizes.size() - 1 || biases.size() != weights.size())
        throw ConfigError("mlp: parameter count does not match layer_sizes");
    for (std::size_t l = 0; l < weights.size(); ++l) {
        const auto out = static_cast<std::size_t>(layer_sizes[l + 1]);
        const auto in = static_cast<std::size_t>(layer_sizes[l]);
        if (weights[l].rows != out || weights[l].cols != in || biases[l].size() != out)
            throw ConfigError("mlp: weight shapes do not chain at layer " + std::to_string(l));
        for (double w : weights[l].data)
            if (!std::isfinite(w)) throw CorruptionError("mlp: non-finite weight in layer " +
                                                         std::to_string(l));
        for (double b : biases[l])
            if (!std::isfinite(b)) throw CorruptionError("mlp: non-finite bias in layer " +
                                                         std::to_string(l));
    }
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("mlp: learning_rate must be > 0");
    if (epochs < 1) throw ConfigError("mlp: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("mlp: batch_size must be >= 1");
    for (int h : hidden)
        if (h < 1) throw ConfigError("mlp: hidden sizes must be positive");
}

MlpModel mlp_init(const std::vector<int>& layer_sizes, std::uint64_t seed) {
    MlpModel model;
    model.layer_sizes = layer_sizes;
    SeededRng rng(seed);
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const auto out = static_cast<std::size_t>(layer_sizes[l + 1]);
        const auto in = static_cast<std::size_t>(layer_sizes[l]);
        Matrix w(out, in);
        double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        for (double& v : w.data) v = rng.next_uniform(-limit, limit);
        model.weights.push_back(std::move(w));
        model.biases.emplace_back(out, 0.0);
    }
    model.validate();
    return model;
}

namespace {

// z = W a + b for one sample; inner dot over the contiguous input row.
void affine_one(const Matrix& w, const std::vector<double>& b, const double* a, double* z) {
    for (std::size_t o = 0; o < w.rows; ++o) {
        const double* wrow = w.row(o);
        double acc = b[o];
        for (std::size_t i = 0; i < w.cols; ++i) acc += wrow[i] * a[i];
        z[o] = acc;
    }
}

// Runs the network for one sample; `acts[l]` receives the activation of
// layer l (acts[0] = input copy, hidden = ReLU(z), last = softmax probs).
// Returns the log-sum-exp-stable log-probability pieces via out params.
void forward_one(const MlpModel& model, const double* x, std::vector<std::vector<double>>& acts) {
    const std::size_t n_layers = model.weights.size();
    acts[0].assign(x, x + model.layer_sizes[0]);
    for (std::size_t l = 0; l < n_layers; ++l) {
        acts[l + 1].resize(static_cast<std::size_t>(model.layer_sizes[l + 1]));
        affine_one(model.weights[l], model.biases[l], acts[l].data(), acts[l + 1].data());
        if (l + 1 < n_layers) {
            for (double& v : acts[l + 1]) v = v > 0.0 ? v : 0.0;  // ReLU; derivative at 0 is 0
        }
    }
    // stable softmax on the final pre-activations
    auto& logits = acts[n_layers];
    double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double v : logits) z += std::exp(v - m);
    for (double& v : logits) v = std::exp(v - m) / z;
}

void check_query(const MlpModel& model, const FeatureVector& x) {
    if (x.size() != static_cast<std::size_t>(model.input_size()))
        throw DimensionError("mlp: input has " + std::to_string(x.size()) +
                             " features, model expects " + std::to_string(model.input_size()));
}

}  // namespace

std::vector<double> mlp_forward(const MlpModel& model, const FeatureVector& x) {
    model.validate();
    check_query(model, x);
    std::vector<std::vector<double>> acts(model.weights.size() + 1);
    forward_one(model, x.data(), acts);
    return acts.back();
}

Matrix mlp_forward_batch(const MlpModel& model, const std::vector<FeatureVector>& queries) {
    model.validate();
    for (const auto& q : queries) check_query(model, q);
    Matrix probs(queries.size(), static_cast<std::size_t>(model.output_size()));
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(queries.size()); ++b) {
        std::vector<std::vector<double>> acts(model.weights.size() + 1);
        forward_one(model, queries[static_cast<std::size_t>(b)].data(), acts);
        std::copy(acts.back().begin(), acts.back().end(), probs.row(static_cast<std::size_t>(b)));
    }
    return probs;
}

namespace {

struct BatchWorkspace {
    // per-layer activations and deltas for the whole batch, row per sample
    std::vector<Matrix> acts;    // n_layers+1 entries
    std::vector<Matrix> deltas;  // n_layers entries
};

// Forward + fused softmax/cross-entropy backward for a batch. Gradient
// accumulation loops run in a fixed sample order so results do not depend on
// the thread count.
double batch_loss_and_gradients(const MlpModel& model, const Matrix& x,
                                const std::vector<int>& class_idx, Gradients& grads,
                                BatchWorkspace& ws) {
    const std::size_t batch = x.rows;
    const std::size_t n_layers = model.weights.size();

    ws.acts.assign(n_layers + 1, Matrix());
    ws.deltas.assign(n_layers, Matrix());
    ws.acts[0] = x;
    for (std::size_t l = 0; l < n_layers; ++l) {
        ws.acts[l + 1] = Matrix(batch, static_cast<std::size_t>(model.layer_sizes[l + 1]));
        ws.deltas[l] = Matrix(batch, static_cast<std::size_t>(model.layer_sizes[l + 1]));
    }

    std::vector<double> sample_loss(batch, 0.0);

    // forward all samples; the output delta (p - onehot)/batch is fused here
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(batch); ++bi) {
        const auto b = static_cast<std::size_t>(bi);
        for (std::size_t l = 0; l < n_layers; ++l) {
            affine_one(model.weights[l], model.biases[l], ws.acts[l].row(b), ws.acts[l + 1].row(b));
            if (l + 1 < n_layers) {
                double* z = ws.acts[l + 1].row(b);
                for (std::size_t o = 0; o < ws.acts[l + 1].cols; ++o) z[o] = z[o] > 0.0 ? z[o] : 0.0;
            }
        }
        double* logits = ws.acts[n_layers].row(b);
        const std::size_t n_out = ws.acts[n_layers].cols;
        double m = logits[0];
        for (std::size_t o = 1; o < n_out; ++o) m = std::max(m, logits[o]);
        double z = 0.0;
        for (std::size_t o = 0; o < n_out; ++o) z += std::exp(logits[o] - m);
        const double log_z = std::log(z);
        const auto truth = static_cast<std::size_t>(class_idx[b]);
        sample_loss[b] = -(logits[truth] - m - log_z);
        double* dl = ws.deltas[n_layers - 1].row(b);
        for (std::size_t o = 0; o < n_out; ++o) {
            double p = std::exp(logits[o] - m) / z;
            logits[o] = p;  // acts now hold probabilities
            dl[o] = (p - (o == truth ? 1.0 : 0.0)) / static_cast<double>(batch);
        }
    }

    double loss = 0.0;
    for (std::size_t b = 0; b < batch; ++b) loss += sample_loss[b];
    loss /= static_cast<double>(batch);

    // hidden deltas: delta_l = (delta_{l+1} W_{l+1}) ⊙ relu'(z_l)
    for (std::size_t l = n_layers - 1; l > 0; --l) {
        const Matrix& w = model.weights[l];
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(batch); ++bi) {
            const auto b = static_cast<std::size_t>(bi);
            const double* up = ws.deltas[l].row(b);
            double* down = ws.deltas[l - 1].row(b);
            std::fill(down, down + w.cols, 0.0);
            for (std::size_t o = 0; o < w.rows; ++o) {
                const double* wrow = w.row(o);
                const double d = up[o];
                if (d == 0.0) continue;
                for (std::size_t i = 0; i < w.cols; ++i) down[i] += d * wrow[i];
            }
            const double* a = ws.acts[l].row(b);
            for (std::size_t i = 0; i < w.cols; ++i)
                if (a[i] <= 0.0) down[i] = 0.0;
        }
    }

    // parameter gradients; parallel across output rows, samples accumulated
    // in ascending order inside each row
    grads.weights.assign(n_layers, Matrix());
    grads.biases.assign(n_layers, {});
    for (std::size_t l = 0; l < n_layers; ++l) {
        const Matrix& a_prev = ws.acts[l];
        const Matrix& delta = ws.deltas[l];
        Matrix dw(model.weights[l].rows, model.weights[l].cols);
        std::vector<double> db(model.weights[l].rows, 0.0);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t oi = 0; oi < static_cast<std::ptrdiff_t>(dw.rows); ++oi) {
            const auto o = static_cast<std::size_t>(oi);
            double* dwrow = dw.row(o);
            double acc_b = 0.0;
            for (std::size_t b = 0; b < batch; ++b) {
                const double d = delta(b, o);
                acc_b += d;
                if (d == 0.0) continue;
                const double* arow = a_prev.row(b);
                for (std::size_t i = 0; i < dw.cols; ++i) dwrow[i] += d * arow[i];
            }
            db[o] = acc_b;
        }
        grads.weights[l] = std::move(dw);
        grads.biases[l] = std::move(db);
    }
    return loss;
}

}  // namespace

std::pair<double, Gradients> mlp_loss_and_gradients(const MlpModel& model,
                                                    const LabeledBatch& batch) {
    model.validate();
    if (batch.empty()) throw ConfigError("mlp_loss_and_gradients: empty batch");
    const auto in = static_cast<std::size_t>(model.input_size());
    Matrix x(batch.size(), in);
    std::vector<int> class_idx(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) {
        if (batch[b].first.size() != in)
            throw DimensionError("mlp: batch sample has " + std::to_string(batch[b].first.size()) +
                                 " features, model expects " + std::to_string(in));
        std::copy(batch[b].first.begin(), batch[b].first.end(), x.row(b));
        int idx = activity_code(batch[b].second) - 1;
        if (idx >= model.output_size())
            throw DimensionError("mlp: label code " + std::to_string(idx + 1) +
                                 " exceeds output size " + std::to_string(model.output_size()));
        class_idx[b] = idx;
    }
    Gradients grads;
    BatchWorkspace ws;
    double loss = batch_loss_and_gradients(model, x, class_idx, grads, ws);
    return {loss, std::move(grads)};
}

namespace {

struct AdamState {
    std::vector<Matrix> mw, vw;
    std::vector<std::vector<double>> mb, vb;
    long t = 0;
};

void apply_update(MlpModel& model, const Gradients& g, const TrainConfig& cfg, AdamState& adam) {
    if (cfg.optimizer == Optimizer::Sgd) {
        for (std::size_t l = 0; l < model.weights.size(); ++l) {
            double* w = model.weights[l].data.data();
            const double* dw = g.weights[l].data.data();
            for (std::size_t k = 0; k < model.weights[l].data.size(); ++k)
                w[k] -= cfg.learning_rate * dw[k];
            for (std::size_t o = 0; o < model.biases[l].size(); ++o)
                model.biases[l][o] -= cfg.learning_rate * g.biases[l][o];
        }
        return;
    }
    adam.t += 1;
    const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(adam.t));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(adam.t));
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        double* w = model.weights[l].data.data();
        const double* dw = g.weights[l].data.data();
        double* m = adam.mw[l].data.data();
        double* v = adam.vw[l].data.data();
        for (std::size_t k = 0; k < model.weights[l].data.size(); ++k) {
            m[k] = b1 * m[k] + (1.0 - b1) * dw[k];
            v[k] = b2 * v[k] + (1.0 - b2) * dw[k] * dw[k];
            w[k] -= cfg.learning_rate * (m[k] / corr1) / (std::sqrt(v[k] / corr2) + cfg.adam_epsilon);
        }
        for (std::size_t o = 0; o < model.biases[l].size(); ++o) {
            double gb = g.biases[l][o];
            adam.mb[l][o] = b1 * adam.mb[l][o] + (1.0 - b1) * gb;
            adam.vb[l][o] = b2 * adam.vb[l][o] + (1.0 - b2) * gb * gb;
            model.biases[l][o] -= cfg.learning_rate * (adam.mb[l][o] / corr1) /
                                  (std::sqrt(adam.vb[l][o] / corr2) + cfg.adam_epsilon);
        }
    }
}

}  // namespace

MlpTrainResult mlp_train(const std::vector<Sample>& train, const std::vector<Sample>& validation,
                         const TrainConfig& config) {
    config.validate();
    if (train.empty()) throw ConfigError("mlp_train: empty training set");
    if (validation.empty()) throw ConfigError("mlp_train: empty validation set");

    const auto dim = static_cast<int>(train[0].features.size());
    std::vector<int> layer_sizes;
    layer_sizes.push_back(dim);
    for (int h : config.hidden) layer_sizes.push_back(h);
    layer_sizes.push_back(kNumActivities);

    SeededRng rng(config.seed);
    MlpModel model;
    {
        // draw init from the same stream that later shuffles epochs
        model.layer_sizes = layer_sizes;
        for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
            const auto out = static_cast<std::size_t>(layer_sizes[l + 1]);
            const auto in = static_cast<std::size_t>(layer_sizes[l]);
            Matrix w(out, in);
            double limit = std::sqrt(6.0 / static_cast<double>(in + out));
            for (double& v : w.data) v = rng.next_uniform(-limit, limit);
            model.weights.push_back(std::move(w));
            model.biases.emplace_back(out, 0.0);
        }
        model.validate();
    }

    AdamState adam;
    if (config.optimizer == Optimizer::Adam) {
        for (std::size_t l = 0; l < model.weights.size(); ++l) {
            adam.mw.emplace_back(model.weights[l].rows, model.weights[l].cols);
            adam.vw.emplace_back(model.weights[l].rows, model.weights[l].cols);
            adam.mb.emplace_back(model.biases[l].size(), 0.0);
            adam.vb.emplace_back(model.biases[l].size(), 0.0);
        }
    }

    std::vector<FeatureVector> val_features;
    val_features.reserve(validation.size());
    for (const auto& s : validation) val_features.push_back(s.features);

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<EpochStats> history;
    history.reserve(static_cast<std::size_t>(config.epochs));
    BatchWorkspace ws;
    Gradients grads;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle_in_place(rng, order);
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            const std::size_t bsz = stop - start;
            Matrix x(bsz, static_cast<std::size_t>(dim));
            std::vector<int> class_idx(bsz);
            for (std::size_t b = 0; b < bsz; ++b) {
                const Sample& s = train[order[start + b]];
                std::copy(s.features.begin(), s.features.end(), x.row(b));
                class_idx[b] = activity_code(s.label) - 1;
            }
            double loss = batch_loss_and_gradients(model, x, class_idx, grads, ws);
            if (!std::isfinite(loss))
                throw TrainingDivergedError(
                    "mlp_train: non-finite loss at epoch " + std::to_string(epoch), epoch);
            epoch_loss += loss * static_cast<double>(bsz);
            seen += bsz;
            apply_update(model, grads, config, adam);
        }

        auto predictions = mlp_predict_batch(model, val_features);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < validation.size(); ++i)
            if (predictions[i] == validation[i].label) ++correct;
        history.push_back(EpochStats{epoch, epoch_loss / static_cast<double>(seen),
                                     static_cast<double>(correct) /
                                         static_cast<double>(validation.size())});
    }

    return MlpTrainResult{std::move(model), std::move(history)};
}

Activity mlp_predict(const MlpModel& model, const FeatureVector& x) {
    auto probs = mlp_forward(model, x);
    std::size_t best = 0;
    for (std::size_t c = 1; c < probs.size(); ++c)
        if (probs[c] > probs[best]) best = c;  // first max = smaller label code
    return activity_from_code(static_cast<int>(best) + 1);
}

std::vector<Activity> mlp_predict_batch(const MlpModel& model,
                                        const std::vector<FeatureVector>& queries) {
    Matrix probs = mlp_forward_batch(model, queries);
    std::vector<Activity> out(queries.size(), Activity::Walking);
    for (std::size_t q = 0; q < queries.size(); ++q) {
        const double* row = probs.row(q);
        std::size_t best = 0;
        for (std::size_t c = 1; c < probs.cols; ++c)
            if (row[c] > row[best]) best = c;
        out[q] = activity_from_code(static_cast<int>(best) + 1);
    }
    return out;
}

nlohmann::json mlp_to_json(const MlpModel& model, const nlohmann::json& config_echo) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["layer_sizes"] = model.layer_sizes;
    nlohmann::json ws = nlohmann::json::array();
    for (const auto& w : model.weights)
        ws.push_back({{"rows", w.rows}, {"cols", w.cols}, {"data", w.data}});
    j["weights"] = std::move(ws);
    j["biases"] = model.biases;
    if (!config_echo.is_null()) j["config_echo"] = config_echo;
    return j;
}

MlpModel mlp_from_json(const nlohmann::json& j) {
    if (j.at("format_version").get<int>() != 1)
        throw ConfigError("mlp_from_json: unsupported format_version");
    MlpModel m;
    m.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    for (const auto& wj : j.at("weights")) {
        Matrix w(wj.at("rows").get<std::size_t>(), wj.at("cols").get<std::size_t>());
        w.data = wj.at("data").get<std::vector<double>>();
        if (w.data.size() != w.rows * w.cols)
            throw ConfigError("mlp_from_json: weight payload size mismatch");
        m.weights.push_back(std::move(w));
    }
    m.biases = j.at("biases").get<std::vector<std::vector<double>>>();
    m.validate();
    return m;
}

std::string history_csv(const std::vector<EpochStats>& history) {
    std::ostringstream out;
    out << "epoch,train_loss,val_accuracy\n";
    char buf[64];
    for (const auto& e : history) {
        std::snprintf(buf, sizeof buf, "%d,%.12g,%.6f\n", e.epoch, e.train_loss, e.val_accuracy);
        out << buf;
    }
    return std::move(out).str();
}

}  // namespace har
