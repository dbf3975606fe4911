#include "har/svm.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

#include "har/errors.hpp"
#include "har/kernel_cache.hpp"

namespace har {

void SmoConfig::validate() const {
    if (!(c > 0.0)) throw ConfigError("smo: C must be > 0");
    if (!(kkt_tolerance > 0.0)) throw ConfigError("smo: kkt_tolerance must be > 0");
    if (!(alpha_change_epsilon > 0.0)) throw ConfigError("smo: alpha_change_epsilon must be > 0");
    if (max_passes_without_progress < 1)
        throw ConfigError("smo: max_passes_without_progress must be >= 1");
    if (max_iterations < 1) throw ConfigError("smo: max_iterations must be >= 1");
}

namespace {

struct SmoState {
    const std::vector<FeatureVector>& xs;
    const std::vector<int>& ys;
    const SmoConfig& cfg;
    KernelCache cache;
    std::vector<double> alpha;
    std::vector<double> error;  // E_i = f(x_i) - y_i, maintained for all i
    double bias = 0.0;
    SeededRng rng;
    double snap_eps;  // multipliers this close to a bound are snapped onto it

    SmoState(const std::vector<FeatureVector>& xs_, const std::vector<int>& ys_,
             const Kernel& kernel, const SmoConfig& cfg_)
        : xs(xs_),
          ys(ys_),
          cfg(cfg_),
          cache(kernel, xs_, cfg_.cache_budget_bytes),
          alpha(xs_.size(), 0.0),
          error(xs_.size()),
          rng(cfg_.seed),
          snap_eps(1e-10 * cfg_.c) {
        for (std::size_t i = 0; i < xs.size(); ++i) error[i] = -static_cast<double>(ys[i]);
    }

    bool interior(std::size_t i) const { return alpha[i] > 0.0 && alpha[i] < cfg.c; }

    // violation measure used both for examination and the final report
    double violation(std::size_t i) const {
        double ye = ys[i] * error[i];  // y*f - 1
        if (alpha[i] <= 0.0) return std::max(0.0, -ye);
        if (alpha[i] >= cfg.c) return std::max(0.0, ye);
        return std::abs(ye);
    }

    double max_violation() const {
        double m = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) m = std::max(m, violation(i));
        return m;
    }

#ifndef NDEBUG
    void assert_feasible() const {
        double sum_ay = 0.0, sum_a = 0.0;
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            assert(alpha[i] >= 0.0 && alpha[i] <= cfg.c);
            sum_ay += alpha[i] * ys[i];
            sum_a += alpha[i];
        }
        assert(std::abs(sum_ay) <= 1e-8 * (sum_a + 1.0));
    }
#endif

    bool take_step(std::size_t i1, std::size_t i2) {
        if (i1 == i2) return false;
        const double a1 = alpha[i1], a2 = alpha[i2];
        const double y1 = ys[i1], y2 = ys[i2];
        const double e1 = error[i1], e2 = error[i2];
        const double s = y1 * y2;
        const double c = cfg.c;

        double lo, hi;
        if (s < 0.0) {
            lo = std::max(0.0, a2 - a1);
            hi = std::min(c, c + a2 - a1);
        } else {
            lo = std::max(0.0, a1 + a2 - c);
            hi = std::min(c, a1 + a2);
        }
        if (lo >= hi) return false;

        const double* krow1 = cache.row(i1);
        const double* krow2 = cache.row(i2);  // capacity >= 2 keeps krow1 valid
        const double k11 = cache.diag(i1), k22 = cache.diag(i2), k12 = krow1[i2];
        const double eta = k11 + k22 - 2.0 * k12;

        double a2_new;
        if (eta > 0.0) {
            a2_new = std::clamp(a2 + y2 * (e1 - e2) / eta, lo, hi);
        } else {
            // restricted objective along the constraint segment, evaluated at
            // both endpoints (constant terms dropped); a1 = gamma - s*a2
            const double gamma = a1 + s * a2;
            const double v1 = e1 + y1 - bias - y1 * a1 * k11 - y2 * a2 * k12;
            const double v2 = e2 + y2 - bias - y1 * a1 * k12 - y2 * a2 * k22;
            auto w_at = [&](double t) {
                double u = gamma - s * t;  // candidate a1
                return u + t - 0.5 * k11 * u * u - 0.5 * k22 * t * t - s * k12 * u * t -
                       y1 * u * v1 - y2 * t * v2;
            };
            const double w_lo = w_at(lo), w_hi = w_at(hi);
            const double flat = 1e-12 * (1.0 + std::abs(w_lo) + std::abs(w_hi));
            if (w_lo > w_hi + flat)
                a2_new = lo;
            else if (w_hi > w_lo + flat)
                a2_new = hi;
            else
                return false;
        }

        if (a2_new < snap_eps) a2_new = 0.0;
        else if (a2_new > c - snap_eps) a2_new = c;
        if (std::abs(a2_new - a2) <= cfg.alpha_change_epsilon) return false;

        double a1_new = a1 + s * (a2 - a2_new);
        if (a1_new < snap_eps) a1_new = 0.0;
        else if (a1_new > c - snap_eps) a1_new = c;

        const double d1 = y1 * (a1_new - a1);
        const double d2 = y2 * (a2_new - a2);
        const double b1 = bias - e1 - d1 * k11 - d2 * k12;
        const double b2 = bias - e2 - d1 * k12 - d2 * k22;
        double bias_new;
        if (a1_new > 0.0 && a1_new < c)
            bias_new = b1;
        else if (a2_new > 0.0 && a2_new < c)
            bias_new = b2;
        else
            bias_new = 0.5 * (b1 + b2);
        const double db = bias_new - bias;

        alpha[i1] = a1_new;
        alpha[i2] = a2_new;
        bias = bias_new;

        const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(xs.size());
#pragma omp parallel for schedule(static) if (n >= 2048)
        for (std::ptrdiff_t j = 0; j < n; ++j)
            error[static_cast<std::size_t>(j)] +=
                d1 * krow1[j] + d2 * krow2[j] + db;

#ifndef NDEBUG
        assert_feasible();
#endif
        if (cfg.on_step) cfg.on_step(std::span<const double>(alpha), bias);
        return true;
    }

    bool examine(std::size_t i2) {
        const double r2 = error[i2] * ys[i2];
        const bool violated = (r2 < -cfg.kkt_tolerance && alpha[i2] < cfg.c) ||
                              (r2 > cfg.kkt_tolerance && alpha[i2] > 0.0);
        if (!violated) return false;

        const std::size_t n = xs.size();

        // second-choice heuristic: maximize |E1 - E2| over non-bound points
        std::size_t best = n;
        double best_gap = -1.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (!interior(j)) continue;
            double gap = std::abs(error[j] - error[i2]);
            if (gap > best_gap) {
                best_gap = gap;
                best = j;
            }
        }
        if (best < n && take_step(best, i2)) return true;

        // fall back to sweeps from random start positions
        std::size_t start = static_cast<std::size_t>(rng.next_below(n));
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t j = (start + k) % n;
            if (interior(j) && take_step(j, i2)) return true;
        }
        start = static_cast<std::size_t>(rng.next_below(n));
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t j = (start + k) % n;
            if (take_step(j, i2)) return true;
        }
        return false;
    }
};

}  // namespace

BinarySvm smo_train(const std::vector<FeatureVector>& xs, const std::vector<int>& ys,
                    const Kernel& kernel, const SmoConfig& config) {
    config.validate();
    kernel.validate();
    if (xs.size() != ys.size())
        throw DimensionError("smo_train: " + std::to_string(xs.size()) + " vectors vs " +
                             std::to_string(ys.size()) + " labels");
    if (xs.size() < 2) throw DegenerateProblemError("smo_train: need at least 2 samples");
    bool has_pos = false, has_neg = false;
    for (int y : ys) {
        if (y == +1) has_pos = true;
        else if (y == -1) has_neg = true;
        else throw ValidationError("smo_train: labels must be -1 or +1");
    }
    if (!has_pos || !has_neg)
        throw DegenerateProblemError("smo_train: both labels must be present");
    const std::size_t dim = xs[0].size();
    for (const auto& x : xs)
        if (x.size() != dim) throw DimensionError("smo_train: inconsistent vector lengths");

    SmoState st(xs, ys, kernel, config);

    long sweeps = 0;
    int no_progress = 0;
    bool examine_all = true;
    bool hit_cap = false;
    std::size_t num_changed = 1;

    while (num_changed > 0 || examine_all) {
        if (++sweeps > config.max_iterations) {
            hit_cap = true;
            --sweeps;
            break;
        }
        num_changed = 0;
        if (examine_all) {
            for (std::size_t i = 0; i < xs.size(); ++i) num_changed += st.examine(i) ? 1 : 0;
        } else {
            for (std::size_t i = 0; i < xs.size(); ++i)
                if (st.interior(i)) num_changed += st.examine(i) ? 1 : 0;
        }
        if (examine_all)
            examine_all = false;
        else if (num_changed == 0)
            examine_all = true;

        no_progress = num_changed == 0 ? no_progress + 1 : 0;
        if (no_progress > config.max_passes_without_progress) {
            hit_cap = true;
            break;
        }
    }

    BinarySvm model;
    model.kernel = kernel;
    model.c = config.c;
    model.bias = st.bias;
    model.sweeps = sweeps;
    model.kkt_max = st.max_violation();
    model.converged = !hit_cap && model.kkt_max <= config.kkt_tolerance;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (st.alpha[i] > config.alpha_change_epsilon) {
            model.support_vectors.push_back(xs[i]);
            model.support_labels.push_back(ys[i]);
            model.alphas.push_back(st.alpha[i]);
            model.support_indices.push_back(i);
        }
    }
    return model;
}

double svm_decision(const BinarySvm& model, const FeatureVector& x) {
    double f = model.bias;
    for (std::size_t i = 0; i < model.support_vectors.size(); ++i) {
        if (model.support_vectors[i].size() != x.size())
            throw DimensionError("svm_decision: query has " + std::to_string(x.size()) +
                                 " features, support vectors have " +
                                 std::to_string(model.support_vectors[i].size()));
        f += model.alphas[i] * model.support_labels[i] *
             kernel_eval(model.kernel, model.support_vectors[i], x);
    }
    return f;
}

std::vector<double> svm_decision_batch(const BinarySvm& model,
                                       const std::vector<FeatureVector>& queries) {
    std::vector<double> out(queries.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t q = 0; q < static_cast<std::ptrdiff_t>(queries.size()); ++q)
        out[static_cast<std::size_t>(q)] = svm_decision(model, queries[static_cast<std::size_t>(q)]);
    return out;
}

double dual_objective(const std::vector<FeatureVector>& xs, const std::vector<int>& ys,
                      const Kernel& kernel, const std::vector<double>& alphas) {
    double w = 0.0;
    for (double a : alphas) w += a;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (alphas[i] == 0.0) continue;
        for (std::size_t j = 0; j < xs.size(); ++j) {
            if (alphas[j] == 0.0) continue;
            w -= 0.5 * alphas[i] * alphas[j] * ys[i] * ys[j] * kernel_eval(kernel, xs[i], xs[j]);
        }
    }
    return w;
}

double kkt_report(const BinarySvm& model, const std::vector<FeatureVector>& xs,
                  const std::vector<int>& ys) {
    std::vector<double> alpha(xs.size(), 0.0);
    for (std::size_t k = 0; k < model.support_indices.size(); ++k)
        alpha[model.support_indices[k]] = model.alphas[k];

    double worst = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double yf = ys[i] * svm_decision(model, xs[i]);
        double v;
        if (alpha[i] <= 0.0)
            v = std::max(0.0, 1.0 - yf);
        else if (alpha[i] >= model.c)
            v = std::max(0.0, yf - 1.0);
        else
            v = std::abs(yf - 1.0);
        worst = std::max(worst, v);
    }
    return worst;
}

OvoTrainResult ovo_train(const std::vector<Sample>& train, const Kernel& kernel,
                         const SmoConfig& config) {
    config.validate();
    auto hist = class_histogram(train);
    int present = 0;
    for (std::size_t c = 0; c < kNumActivities; ++c) present += hist[c] > 0 ? 1 : 0;
    if (present < 2)
        throw CoverageError("ovo_train: need samples from at least 2 classes, found " +
                            std::to_string(present));

    struct PairSpec {
        Activity a, b;
        bool trainable;
    };
    std::vector<PairSpec> pairs;
    for (std::size_t i = 0; i < kNumActivities; ++i)
        for (std::size_t j = i + 1; j < kNumActivities; ++j)
            pairs.push_back({all_activities()[i], all_activities()[j],
                             hist[i] > 0 && hist[j] > 0});

    OvoTrainResult result;
    result.model.kernel = kernel;
    result.model.c = config.c;
    std::vector<PairMachine> machines(pairs.size());
    std::vector<char> trained(pairs.size(), 0);

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(pairs.size()); ++p) {
        const PairSpec& spec = pairs[static_cast<std::size_t>(p)];
        if (!spec.trainable) continue;
        std::vector<FeatureVector> xs;
        std::vector<int> ys;
        for (const Sample& s : train) {
            if (s.label == spec.a) {
                xs.push_back(s.features);
                ys.push_back(-1);  // smaller class code maps to -1
            } else if (s.label == spec.b) {
                xs.push_back(s.features);
                ys.push_back(+1);
            }
        }
        SmoConfig pair_cfg = config;
        pair_cfg.seed = SeededRng(config.seed + 1000003ull * (static_cast<std::uint64_t>(p) + 1))
                            .next_u64();
        machines[static_cast<std::size_t>(p)] =
            PairMachine{spec.a, spec.b, smo_train(xs, ys, kernel, pair_cfg)};
        trained[static_cast<std::size_t>(p)] = 1;
    }

    for (std::size_t p = 0; p < pairs.size(); ++p) {
        if (trained[p])
            result.model.machines.push_back(std::move(machines[p]));
        else
            result.skipped_pairs.emplace_back(pairs[p].a, pairs[p].b);
    }
    return result;
}

namespace {

Activity ovo_vote(const MulticlassSvm& model, const std::vector<double>& decisions) {
    int votes[kNumActivities] = {};
    for (std::size_t m = 0; m < model.machines.size(); ++m) {
        const PairMachine& pm = model.machines[m];
        // sign(0) votes for the -1-side class (class_a)
        Activity winner = decisions[m] > 0.0 ? pm.class_b : pm.class_a;
        votes[activity_code(winner) - 1]++;
    }
    int top = *std::max_element(votes, votes + kNumActivities);

    // evidence for tie-breaking: sum of |decision| over each class's machines
    double evidence[kNumActivities] = {};
    for (std::size_t m = 0; m < model.machines.size(); ++m) {
        const PairMachine& pm = model.machines[m];
        evidence[activity_code(pm.class_a) - 1] += std::abs(decisions[m]);
        evidence[activity_code(pm.class_b) - 1] += std::abs(decisions[m]);
    }
    int best = -1;
    for (int c = 0; c < kNumActivities; ++c) {
        if (votes[c] != top) continue;
        if (best < 0 || evidence[c] > evidence[best]) best = c;
        // equal evidence keeps the smaller code
    }
    return activity_from_code(best + 1);
}

}  // namespace

Activity ovo_predict(const MulticlassSvm& model, const FeatureVector& x) {
    if (model.machines.empty()) throw CoverageError("ovo_predict: model has no machines");
    std::vector<double> decisions(model.machines.size());
    for (std::size_t m = 0; m < model.machines.size(); ++m)
        decisions[m] = svm_decision(model.machines[m].model, x);
    return ovo_vote(model, decisions);
}

std::vector<Activity> ovo_predict_batch(const MulticlassSvm& model,
                                        const std::vector<FeatureVector>& queries) {
    if (model.machines.empty()) throw CoverageError("ovo_predict: model has no machines");
    std::vector<Activity> out(queries.size(), Activity::Walking);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t q = 0; q < static_cast<std::ptrdiff_t>(queries.size()); ++q) {
        std::vector<double> decisions(model.machines.size());
        for (std::size_t m = 0; m < model.machines.size(); ++m)
            decisions[m] = svm_decision(model.machines[m].model, queries[static_cast<std::size_t>(q)]);
        out[static_cast<std::size_t>(q)] = ovo_vote(model, decisions);
    }
    return out;
}

namespace {

nlohmann::json kernel_to_json(const Kernel& k) {
    nlohmann::json j;
    j["type"] = k.name();
    j["gamma"] = k.gamma;
    j["coef0"] = k.coef0;
    j["degree"] = k.degree;
    return j;
}

Kernel kernel_from_json(const nlohmann::json& j) {
    const std::string type = j.at("type").get<std::string>();
    Kernel k;
    if (type == "linear") k = Kernel::linear();
    else if (type == "polynomial")
        k = Kernel::polynomial(j.at("gamma").get<double>(), j.at("coef0").get<double>(),
                               j.at("degree").get<int>());
    else if (type == "sigmoid")
        k = Kernel::sigmoid(j.at("gamma").get<double>(), j.at("coef0").get<double>());
    else
        throw ConfigError("unknown kernel type '" + type + "'");
    return k;
}

}  // namespace

nlohmann::json binary_svm_to_json(const BinarySvm& model) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["kernel"] = kernel_to_json(model.kernel);
    j["c"] = model.c;
    j["alphas"] = model.alphas;
    j["support_labels"] = model.support_labels;
    j["support_vectors"] = model.support_vectors;
    j["bias"] = model.bias;
    j["converged"] = model.converged;
    j["kkt_max"] = model.kkt_max;
    return j;
}

BinarySvm binary_svm_from_json(const nlohmann::json& j) {
    if (j.at("format_version").get<int>() != 1)
        throw ConfigError("binary_svm_from_json: unsupported format_version");
    BinarySvm m;
    m.kernel = kernel_from_json(j.at("kernel"));
    m.c = j.at("c").get<double>();
    m.alphas = j.at("alphas").get<std::vector<double>>();
    m.support_labels = j.at("support_labels").get<std::vector<int>>();
    m.support_vectors = j.at("support_vectors").get<std::vector<FeatureVector>>();
    m.bias = j.at("bias").get<double>();
    m.converged = j.value("converged", true);
    m.kkt_max = j.value("kkt_max", 0.0);
    return m;
}

nlohmann::json multiclass_svm_to_json(const MulticlassSvm& model) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["kernel"] = kernel_to_json(model.kernel);
    j["c"] = model.c;
    nlohmann::json machines = nlohmann::json::array();
    for (const auto& pm : model.machines) {
        nlohmann::json e;
        e["class_pair"] = {std::string(activity_name(pm.class_a)),
                           std::string(activity_name(pm.class_b))};
        e["model"] = binary_svm_to_json(pm.model);
        machines.push_back(std::move(e));
    }
    j["machines"] = std::move(machines);
    return j;
}

MulticlassSvm multiclass_svm_from_json(const nlohmann::json& j) {
    if (j.at("format_version").get<int>() != 1)
        throw ConfigError("multiclass_svm_from_json: unsupported format_version");
    MulticlassSvm m;
    m.kernel = kernel_from_json(j.at("kernel"));
    m.c = j.at("c").get<double>();
    for (const auto& e : j.at("machines")) {
        auto names = e.at("class_pair").get<std::vector<std::string>>();
        auto find_activity = [](const std::string& name) {
            for (Activity a : all_activities())
                if (activity_name(a) == name) return a;
            throw ConfigError("unknown activity name '" + name + "'");
        };
        m.machines.push_back(PairMachine{find_activity(names.at(0)), find_activity(names.at(1)),
                                         binary_svm_from_json(e.at("model"))});
    }
    return m;
}

}  // namespace har
