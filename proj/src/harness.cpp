#include "har/harness.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "har/errors.hpp"
#include "har/knn.hpp"
#include "har/mlp.hpp"
#include "har/naive_bayes.hpp"
#include "har/svm.hpp"

#ifdef _WIN32
#include <process.h>
#else
#include <unistd.h>
#endif

namespace fs = std::filesystem;

namespace har {

namespace {

const std::vector<std::string> kKnownExperiments = {"knn_sweep", "svm_kernels", "naive_bayes",
                                                    "mlp", "all"};

std::string fmt_acc(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::vector<std::string> split_csv_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: " + key + " expects a number, got '" + value + "'");
    }
}

long parse_long(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        long v = std::stol(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: " + key + " expects an integer, got '" + value + "'");
    }
}

}  // namespace

void ExperimentConfig::apply_key_value(const std::string& key, const std::string& value) {
    if (key == "dataset_root") dataset_root = value;
    else if (key == "output_dir" || key == "out") output_dir = value;
    else if (key == "seed") seed = static_cast<std::uint64_t>(parse_long(key, value));
    else if (key == "experiments") experiments = split_csv_list(value);
    else if (key == "threads") threads = static_cast<int>(parse_long(key, value));
    else if (key == "svm.c") svm_c = parse_double(key, value);
    else if (key == "svm.gamma") {
        if (value == "auto") svm_gamma.reset();
        else svm_gamma = parse_double(key, value);
    } else if (key == "svm.coef0") svm_coef0 = parse_double(key, value);
    else if (key == "svm.degree") svm_degree = static_cast<int>(parse_long(key, value));
    else if (key == "svm.cache_mb") svm_cache_mb = static_cast<std::size_t>(parse_long(key, value));
    else if (key == "svm.max_iterations") svm_max_iterations = parse_long(key, value);
    else if (key == "gnb.var_smoothing") gnb_var_smoothing = parse_double(key, value);
    else if (key == "mlp.learning_rate") mlp_learning_rate = parse_double(key, value);
    else if (key == "mlp.epochs") mlp_epochs = static_cast<int>(parse_long(key, value));
    else if (key == "mlp.batch_size") mlp_batch_size = static_cast<int>(parse_long(key, value));
    else if (key == "mlp.optimizer") {
        if (value != "adam" && value != "sgd")
            throw ConfigError("config: mlp.optimizer must be adam or sgd");
        mlp_optimizer = value;
    } else if (key == "mlp.hidden") {
        mlp_hidden.clear();
        for (const auto& tok : split_csv_list(value))
            mlp_hidden.push_back(static_cast<int>(parse_long(key, tok)));
        if (mlp_hidden.empty()) throw ConfigError("config: mlp.hidden needs at least one size");
    } else if (key == "knn.k_max") knn_k_max = static_cast<int>(parse_long(key, value));
    else if (key == "knn.final_k") knn_final_k = static_cast<int>(parse_long(key, value));
    else throw ConfigError("config: unknown key '" + key + "'");
}

std::vector<std::string> ExperimentConfig::expanded_experiments() const {
    if (experiments.empty()) throw ConfigError("config: experiment set is empty");
    for (const auto& e : experiments) {
        if (std::find(kKnownExperiments.begin(), kKnownExperiments.end(), e) ==
            kKnownExperiments.end())
            throw ConfigError("config: unknown experiment '" + e + "'");
    }
    if (std::find(experiments.begin(), experiments.end(), "all") != experiments.end())
        return {"knn_sweep", "svm_kernels", "naive_bayes", "mlp"};
    return experiments;
}

nlohmann::json ExperimentConfig::snapshot() const {
    nlohmann::json j;
    j["format_version"] = 1;
    j["dataset_root"] = dataset_root.string();
    j["output_dir"] = output_dir.string();
    j["seed"] = seed;
    j["experiments"] = experiments;
    j["threads"] = threads;
    j["svm"] = {{"c", svm_c},
                {"gamma", svm_gamma ? nlohmann::json(*svm_gamma) : nlohmann::json("auto")},
                {"coef0", svm_coef0},
                {"degree", svm_degree},
                {"cache_mb", svm_cache_mb},
                {"max_iterations", svm_max_iterations}};
    j["gnb"] = {{"var_smoothing", gnb_var_smoothing}};
    j["mlp"] = {{"learning_rate", mlp_learning_rate},
                {"epochs", mlp_epochs},
                {"batch_size", mlp_batch_size},
                {"optimizer", mlp_optimizer},
                {"hidden", mlp_hidden}};
    j["knn"] = {{"k_max", knn_k_max}, {"final_k", knn_final_k}};
    j["reconstructed_defaults"] = {
        "knn.metric=euclidean",
        "svm.gamma=1/feature_count, svm.coef0=0, svm.degree=3",
        "gnb: maximum-likelihood variances, var_smoothing=1e-9 * max feature variance",
        "mlp: softmax cross-entropy, adam(0.9, 0.999, 1e-8), batch_size=200, "
        "glorot-uniform init",
        "heldout split: stratified random halves, seed recorded",
    };
    return j;
}

ExperimentConfig ExperimentConfig::from_snapshot(const nlohmann::json& j) {
    ExperimentConfig c;
    c.dataset_root = j.at("dataset_root").get<std::string>();
    c.output_dir = j.at("output_dir").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.experiments = j.at("experiments").get<std::vector<std::string>>();
    c.threads = j.at("threads").get<int>();
    const auto& svm = j.at("svm");
    c.svm_c = svm.at("c").get<double>();
    if (svm.at("gamma").is_string()) c.svm_gamma.reset();
    else c.svm_gamma = svm.at("gamma").get<double>();
    c.svm_coef0 = svm.at("coef0").get<double>();
    c.svm_degree = svm.at("degree").get<int>();
    c.svm_cache_mb = svm.at("cache_mb").get<std::size_t>();
    c.svm_max_iterations = svm.at("max_iterations").get<long>();
    c.gnb_var_smoothing = j.at("gnb").at("var_smoothing").get<double>();
    const auto& mlp = j.at("mlp");
    c.mlp_learning_rate = mlp.at("learning_rate").get<double>();
    c.mlp_epochs = mlp.at("epochs").get<int>();
    c.mlp_batch_size = mlp.at("batch_size").get<int>();
    c.mlp_optimizer = mlp.at("optimizer").get<std::string>();
    c.mlp_hidden = mlp.at("hidden").get<std::vector<int>>();
    c.knn_k_max = j.at("knn").at("k_max").get<int>();
    c.knn_final_k = j.at("knn").at("final_k").get<int>();
    return c;
}

void apply_config_file(ExperimentConfig& config, const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto strip = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string stripped = strip(line);
        if (stripped.empty()) continue;
        auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path.string() + ": line " + std::to_string(line_no) +
                              ": expected key=value");
        config.apply_key_value(strip(stripped.substr(0, eq)), strip(stripped.substr(eq + 1)));
    }
}

const EvalReport* RunArtifact::find_report(const std::string& model_tag) const {
    for (const auto& r : reports)
        if (r.model_tag == model_tag) return &r;
    return nullptr;
}

nlohmann::json artifact_to_json(const RunArtifact& artifact) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["config"] = artifact.config;
    j["dataset_summary"] = artifact.dataset_summary;
    nlohmann::json reports = nlohmann::json::array();
    for (const auto& r : artifact.reports) reports.push_back(eval_report_to_json(r));
    j["reports"] = std::move(reports);
    j["extras"] = artifact.extras;
    nlohmann::json timings;
    for (const auto& [tag, t] : artifact.timings)
        timings[tag] = {{"train_seconds", t.train_seconds}, {"eval_seconds", t.eval_seconds}};
    j["timings"] = std::move(timings);
    j["errors"] = artifact.errors;
    return j;
}

RunArtifact artifact_from_json(const nlohmann::json& j) {
    if (j.at("format_version").get<int>() != 1)
        throw ConfigError("artifact_from_json: unsupported format_version");
    RunArtifact a;
    a.config = j.at("config");
    a.dataset_summary = j.at("dataset_summary");
    for (const auto& rj : j.at("reports")) a.reports.push_back(eval_report_from_json(rj));
    a.extras = j.value("extras", nlohmann::json::object());
    if (j.contains("timings")) {
        for (const auto& [tag, t] : j.at("timings").items())
            a.timings[tag] = ModelTiming{t.at("train_seconds").get<double>(),
                                         t.at("eval_seconds").get<double>()};
    }
    a.errors = j.value("errors", std::vector<std::string>());
    return a;
}

namespace {

struct LoadedData {
    std::shared_ptr<DataSplit> split;
    std::shared_ptr<const std::vector<Sample>> train;  // aliases split->train
    std::vector<FeatureVector> test_features;
    std::vector<Activity> test_labels;
};

LoadedData load_data(const ExperimentConfig& config) {
    if (config.dataset_root.empty())
        throw ConfigError("no dataset root configured (flag --dataset-root, config file, or " +
                          std::string(kDatasetRootEnv) + ")");
    auto [train, heldout] = load_uci_har(config.dataset_root);
    LoadedData data;
    data.split = std::make_shared<DataSplit>(make_split(std::move(train), heldout, config.seed));
    data.train = std::shared_ptr<const std::vector<Sample>>(data.split, &data.split->train);
    data.test_features.reserve(data.split->test.size());
    for (const auto& s : data.split->test) {
        data.test_features.push_back(s.features);
        data.test_labels.push_back(s.label);
    }
    return data;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Kernel resolve_kernel(const ExperimentConfig& config, const std::string& name,
                      std::size_t feature_count) {
    double gamma = config.svm_gamma ? *config.svm_gamma
                                    : 1.0 / static_cast<double>(feature_count);
    if (name == "linear") return Kernel::linear();
    if (name == "polynomial") return Kernel::polynomial(gamma, config.svm_coef0, config.svm_degree);
    if (name == "sigmoid") return Kernel::sigmoid(gamma, config.svm_coef0);
    throw ConfigError("unknown kernel '" + name + "'");
}

void run_knn_section(const ExperimentConfig& config, const LoadedData& data,
                     RunArtifact& artifact) {
    auto start = Clock::now();
    std::vector<int> ks;
    for (int k = 1; k <= config.knn_k_max; ++k) ks.push_back(k);
    KnnSweepResult sweep = knn_sweep(data.train, data.split->validation, ks);
    double train_seconds = seconds_since(start);  // sweep = fit + validation scoring

    nlohmann::json knn_echo = {{"metric", "euclidean"},
                               {"k_values", ks},
                               {"final_k", config.knn_final_k},
                               {"best_k", sweep.best_k},
                               {"seed", config.seed}};

    std::vector<Activity> val_truths;
    val_truths.reserve(data.split->validation.size());
    for (const auto& s : data.split->validation) val_truths.push_back(s.label);

    nlohmann::json table = nlohmann::json::array();
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
        EvalReport r = evaluate(sweep.predictions_by_k[ki], val_truths);
        r.model_tag = "knn_k" + std::to_string(ks[ki]);
        r.split_tag = "validation";
        r.config_echo = knn_echo;
        r.config_echo["k"] = ks[ki];
        r.seed = config.seed;
        table.push_back({{"k", ks[ki]}, {"validation_accuracy", r.accuracy}});
        artifact.reports.push_back(std::move(r));
    }
    artifact.extras["knn_sweep"] = {{"accuracy_by_k", table},
                                    {"best_k", sweep.best_k},
                                    {"final_k", config.knn_final_k}};

    auto eval_start = Clock::now();
    auto eval_at_k = [&](int k, const std::string& tag) {
        KnnModel model = knn_fit(data.train, k);
        auto predictions = knn_predict_batch(model, data.test_features);
        EvalReport r = evaluate(predictions, data.test_labels);
        r.model_tag = tag;
        r.split_tag = "test";
        r.config_echo = knn_echo;
        r.config_echo["k"] = k;
        r.seed = config.seed;
        artifact.reports.push_back(std::move(r));
    };
    eval_at_k(config.knn_final_k, "knn");
    if (sweep.best_k != config.knn_final_k) eval_at_k(sweep.best_k, "knn_best_k");

    artifact.timings["knn"] = ModelTiming{train_seconds, seconds_since(eval_start)};
}

void run_svm_section(const ExperimentConfig& config, const LoadedData& data,
                     RunArtifact& artifact) {
    const std::size_t feature_count = data.split->train.at(0).features.size();
    nlohmann::json machines_extra;
    for (const std::string& name : {"linear", "sigmoid", "polynomial"}) {
        Kernel kernel = resolve_kernel(config, name, feature_count);
        SmoConfig smo;
        smo.c = config.svm_c;
        smo.seed = config.seed;
        smo.cache_budget_bytes = config.svm_cache_mb << 20;
        smo.max_iterations = config.svm_max_iterations;

        auto start = Clock::now();
        OvoTrainResult trained = ovo_train(data.split->train, kernel, smo);
        double train_seconds = seconds_since(start);

        auto eval_start = Clock::now();
        auto predictions = ovo_predict_batch(trained.model, data.test_features);
        EvalReport r = evaluate(predictions, data.test_labels);
        r.model_tag = "svm_" + name;
        r.split_tag = "test";
        r.seed = config.seed;
        r.config_echo = {{"kernel", kernel.name()},
                         {"gamma", kernel.gamma},
                         {"coef0", kernel.coef0},
                         {"degree", kernel.degree},
                         {"c", smo.c},
                         {"kkt_tolerance", smo.kkt_tolerance},
                         {"max_iterations", smo.max_iterations},
                         {"seed", config.seed}};

        nlohmann::json machine_list = nlohmann::json::array();
        for (const auto& pm : trained.model.machines) {
            machine_list.push_back({{"pair", {std::string(activity_name(pm.class_a)),
                                              std::string(activity_name(pm.class_b))}},
                                    {"converged", pm.model.converged},
                                    {"kkt_max", pm.model.kkt_max},
                                    {"sweeps", pm.model.sweeps},
                                    {"support_count", pm.model.alphas.size()}});
        }
        nlohmann::json skipped = nlohmann::json::array();
        for (const auto& [a, b] : trained.skipped_pairs)
            skipped.push_back({std::string(activity_name(a)), std::string(activity_name(b))});
        machines_extra[name] = {{"machines", machine_list}, {"skipped_pairs", skipped}};

        artifact.reports.push_back(std::move(r));
        artifact.timings["svm_" + name] = ModelTiming{train_seconds, seconds_since(eval_start)};
    }
    artifact.extras["svm"] = std::move(machines_extra);
}

void run_gnb_section(const ExperimentConfig& config, const LoadedData& data,
                     RunArtifact& artifact) {
    auto start = Clock::now();
    std::vector<Activity> expected(all_activities().begin(), all_activities().end());
    GnbModel model = gnb_fit(data.split->train, config.gnb_var_smoothing, expected);
    double train_seconds = seconds_since(start);

    auto eval_start = Clock::now();
    auto predictions = gnb_predict_batch(model, data.test_features);
    EvalReport r = evaluate(predictions, data.test_labels);
    r.model_tag = "naive_bayes";
    r.split_tag = "test";
    r.seed = config.seed;
    r.config_echo = {{"variance", "maximum-likelihood"},
                     {"var_smoothing", config.gnb_var_smoothing},
                     {"smoothing_epsilon", model.smoothing_epsilon},
                     {"seed", config.seed}};
    artifact.reports.push_back(std::move(r));
    artifact.timings["naive_bayes"] = ModelTiming{train_seconds, seconds_since(eval_start)};
}

void run_mlp_section(const ExperimentConfig& config, const LoadedData& data,
                     RunArtifact& artifact) {
    TrainConfig tc;
    tc.learning_rate = config.mlp_learning_rate;
    tc.epochs = config.mlp_epochs;
    tc.batch_size = config.mlp_batch_size;
    tc.optimizer = config.mlp_optimizer == "sgd" ? Optimizer::Sgd : Optimizer::Adam;
    tc.seed = config.seed;
    tc.hidden = config.mlp_hidden;

    auto start = Clock::now();
    MlpTrainResult trained = mlp_train(data.split->train, data.split->validation, tc);
    double train_seconds = seconds_since(start);

    auto eval_start = Clock::now();
    auto predictions = mlp_predict_batch(trained.model, data.test_features);
    EvalReport r = evaluate(predictions, data.test_labels);
    r.model_tag = "mlp";
    r.split_tag = "test";
    r.seed = config.seed;
    r.config_echo = {{"layer_sizes", trained.model.layer_sizes},
                     {"learning_rate", tc.learning_rate},
                     {"epochs", tc.epochs},
                     {"batch_size", tc.batch_size},
                     {"optimizer", config.mlp_optimizer},
                     {"activation", "relu"},
                     {"loss", "softmax cross-entropy"},
                     {"seed", config.seed}};
    artifact.reports.push_back(std::move(r));

    artifact.extras["mlp"] = {
        {"history_csv", history_csv(trained.history)},
        {"final_val_accuracy", trained.history.back().val_accuracy},
        {"final_train_loss", trained.history.back().train_loss}};
    artifact.timings["mlp"] = ModelTiming{train_seconds, seconds_since(eval_start)};
}

}  // namespace

RunArtifact run_experiments(const ExperimentConfig& config) {
    if (config.threads > 0) set_max_threads(config.threads);

    RunArtifact artifact;
    artifact.config = config.snapshot();

    auto total_start = Clock::now();
    LoadedData data = load_data(config);
    {
        std::vector<Sample> heldout;
        heldout.reserve(data.split->validation.size() + data.split->test.size());
        heldout.insert(heldout.end(), data.split->validation.begin(), data.split->validation.end());
        heldout.insert(heldout.end(), data.split->test.begin(), data.split->test.end());
        artifact.dataset_summary = dataset_summary_json(data.split->train, heldout, *data.split);
    }

    for (const std::string& experiment : config.expanded_experiments()) {
        try {
            if (experiment == "knn_sweep") run_knn_section(config, data, artifact);
            else if (experiment == "svm_kernels") run_svm_section(config, data, artifact);
            else if (experiment == "naive_bayes") run_gnb_section(config, data, artifact);
            else if (experiment == "mlp") run_mlp_section(config, data, artifact);
        } catch (const Error& e) {
            artifact.errors.push_back(experiment + ": " + e.what());
        }
    }

    artifact.timings["total"] = ModelTiming{seconds_since(total_start), 0.0};
    return artifact;
}

const std::vector<std::pair<std::string, std::string>>& comparison_rows() {
    static const std::vector<std::pair<std::string, std::string>> rows = {
        {"knn", "K Nearest Neighbors Classifiers"},
        {"mlp", "Multi-layer Perceptron"},
        {"naive_bayes", "Naive Bayesian Classifier"},
        {"svm_linear", "SVM with Linear Kernel"},
        {"svm_polynomial", "SVM with Polynomial Kernel"},
        {"svm_sigmoid", "SVM with Sigmoid Kernel"},
    };
    return rows;
}

std::string knn_table_csv(const RunArtifact& artifact) {
    std::ostringstream out;
    out << "# har-table-knn v1\n";
    out << "k,validation_accuracy\n";
    for (const auto& row : artifact.extras.at("knn_sweep").at("accuracy_by_k"))
        out << row.at("k").get<int>() << ',' << fmt_acc(row.at("validation_accuracy").get<double>())
            << '\n';
    return std::move(out).str();
}

std::string svm_table_csv(const RunArtifact& artifact) {
    std::ostringstream out;
    out << "# har-table-svm v1\n";
    out << "kernel,test_accuracy,machines,converged_machines,max_kkt_violation\n";
    for (const std::string name : {"linear", "sigmoid", "polynomial"}) {
        const EvalReport* r = artifact.find_report("svm_" + name);
        if (!r) continue;
        const auto& machines = artifact.extras.at("svm").at(name).at("machines");
        int converged = 0;
        double worst = 0.0;
        for (const auto& m : machines) {
            if (m.at("converged").get<bool>()) ++converged;
            worst = std::max(worst, m.at("kkt_max").get<double>());
        }
        char worst_buf[32];
        std::snprintf(worst_buf, sizeof worst_buf, "%.3e", worst);
        out << name << ',' << fmt_acc(r->accuracy) << ',' << machines.size() << ',' << converged
            << ',' << worst_buf << '\n';
    }
    return std::move(out).str();
}

std::string comparison_table_csv(const RunArtifact& artifact) {
    std::ostringstream out;
    out << "# har-table-comparison v1\n";
    out << "model,test_accuracy\n";
    for (const auto& [tag, label] : comparison_rows()) {
        const EvalReport* r = artifact.find_report(tag);
        if (!r) continue;
        out << label << ',' << fmt_acc(r->accuracy) << '\n';
    }
    return std::move(out).str();
}

void atomic_write(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp-" + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

void write_artifact_files(const RunArtifact& artifact, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    atomic_write(out_dir / "artifact.json", artifact_to_json(artifact).dump(2) + "\n");

    if (artifact.extras.contains("knn_sweep"))
        atomic_write(out_dir / "table_knn.csv", knn_table_csv(artifact));
    if (artifact.extras.contains("svm"))
        atomic_write(out_dir / "table_svm.csv", svm_table_csv(artifact));
    atomic_write(out_dir / "table_comparison.csv", comparison_table_csv(artifact));

    for (const auto& [tag, label] : comparison_rows()) {
        const EvalReport* r = artifact.find_report(tag);
        if (!r) continue;
        atomic_write(out_dir / ("confusion_" + tag + ".csv"), render_report(*r, ReportFormat::Csv));
        atomic_write(out_dir / ("confusion_" + tag + ".svg"),
                     render_report(*r, ReportFormat::SvgHeatmap));
    }

    if (artifact.extras.contains("mlp"))
        atomic_write(out_dir / "history_mlp.csv",
                     artifact.extras.at("mlp").at("history_csv").get<std::string>());
}

void render_artifact(const fs::path& artifact_json, const fs::path& out_dir) {
    std::ifstream in(artifact_json);
    if (!in) throw AcquisitionError("missing artifact: " + artifact_json.string());
    nlohmann::json j;
    in >> j;
    write_artifact_files(artifact_from_json(j), out_dir);
}

}  // namespace har
