#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "har/dataset.hpp"
#include "har/metrics.hpp"

namespace har {

/// Lowest-precedence source for the dataset root (below config file and flags).
inline constexpr const char* kDatasetRootEnv = "HAR_DATASET_ROOT";

struct ExperimentConfig {
    std::filesystem::path dataset_root;
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 42;
    std::vector<std::string> experiments = {"all"};
    int threads = 0;  // 0 = library default

    double svm_c = 0.5;
    std::optional<double> svm_gamma;  // empty -> 1 / feature count
    double svm_coef0 = 0.0;
    int svm_degree = 3;
    std::size_t svm_cache_mb = 128;
    long svm_max_iterations = 2000;

    double gnb_var_smoothing = 1e-9;

    double mlp_learning_rate = 0.001;
    int mlp_epochs = 1000;
    int mlp_batch_size = 200;
    std::string mlp_optimizer = "adam";  // adam | sgd
    std::vector<int> mlp_hidden = {100, 65};

    int knn_k_max = 9;
    int knn_final_k = 5;

    /// Applies one "key=value" setting (the config-file and --set syntax).
    void apply_key_value(const std::string& key, const std::string& value);

    /// Expands "all" and validates the experiment names.
    std::vector<std::string> expanded_experiments() const;

    nlohmann::json snapshot() const;
    static ExperimentConfig from_snapshot(const nlohmann::json& j);
};

/// Parses a plain-text key=value file ('#' starts a comment).
void apply_config_file(ExperimentConfig& config, const std::filesystem::path& path);

struct ModelTiming {
    double train_seconds = 0.0;
    double eval_seconds = 0.0;
};

struct RunArtifact {
    nlohmann::json config;  // full snapshot; re-running it reproduces the numbers
    nlohmann::json dataset_summary;
    std::vector<EvalReport> reports;
    nlohmann::json extras;  // knn sweep table, svm machine diagnostics, mlp history
    std::map<std::string, ModelTiming> timings;
    std::vector<std::string> errors;  // failed models; the run continues past them

    const EvalReport* find_report(const std::string& model_tag) const;
};

nlohmann::json artifact_to_json(const RunArtifact& artifact);
RunArtifact artifact_from_json(const nlohmann::json& j);

/// Loads the dataset, runs the requested experiments and returns the artifact
/// (no files written).
RunArtifact run_experiments(const ExperimentConfig& config);

/// Emits artifact.json, the CSV tables, per-model confusion CSV/SVG pairs and
/// the MLP history under out_dir. Every file is written atomically
/// (temp file + rename) and CSV bytes depend only on the artifact contents.
void write_artifact_files(const RunArtifact& artifact, const std::filesystem::path& out_dir);

/// write_artifact_files for a previously saved artifact.json (no retraining).
void render_artifact(const std::filesystem::path& artifact_json,
                     const std::filesystem::path& out_dir);

std::string knn_table_csv(const RunArtifact& artifact);
std::string svm_table_csv(const RunArtifact& artifact);
std::string comparison_table_csv(const RunArtifact& artifact);

/// Canonical comparison row order and display labels.
const std::vector<std::pair<std::string, std::string>>& comparison_rows();

void atomic_write(const std::filesystem::path& path, const std::string& content);

}  // namespace har
