// Command-line experiment runner: summarize-data, run, render, fetch.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "har/errors.hpp"
#include "har/harness.hpp"

namespace {

struct CommonOpts {
    std::string config_file;
    std::string dataset_root;
    std::string out_dir;
    std::vector<std::string> sets;  // raw key=value overrides
    std::vector<std::string> experiments;
    long seed = -1;
    int threads = 0;
};

// precedence: built-in defaults < HAR_DATASET_ROOT < config file < flags
har::ExperimentConfig resolve_config(const CommonOpts& opts) {
    har::ExperimentConfig config;
    if (const char* env = std::getenv(har::kDatasetRootEnv); env && *env)
        config.dataset_root = env;
    if (!opts.config_file.empty()) har::apply_config_file(config, opts.config_file);
    for (const auto& kv : opts.sets) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw har::ConfigError("--set expects key=value, got '" + kv + "'");
        config.apply_key_value(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!opts.dataset_root.empty()) config.dataset_root = opts.dataset_root;
    if (!opts.out_dir.empty()) config.output_dir = opts.out_dir;
    if (!opts.experiments.empty()) config.experiments = opts.experiments;
    if (opts.seed >= 0) config.seed = static_cast<std::uint64_t>(opts.seed);
    if (opts.threads > 0) config.threads = opts.threads;
    return config;
}

void add_common_flags(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_file, "key=value configuration file");
    cmd->add_option("--set", opts.sets, "override one config key (key=value, repeatable)");
    cmd->add_option("--dataset-root", opts.dataset_root, "dataset directory");
    cmd->add_option("--seed", opts.seed, "PRNG seed (default 42)");
    cmd->add_option("--threads", opts.threads, "OpenMP thread cap (0 = default)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"human-activity-recognition benchmark harness"};
    app.require_subcommand(1);

    CommonOpts opts;

    auto* summarize = app.add_subcommand("summarize-data",
                                         "print the dataset summary (sizes, class histogram)");
    add_common_flags(summarize, opts);
    std::string summary_out;
    summarize->add_option("--out", summary_out, "write the JSON here instead of stdout");

    auto* run = app.add_subcommand("run", "train the requested models and emit result artifacts");
    add_common_flags(run, opts);
    run->add_option("--experiments", opts.experiments,
                    "subset of knn_sweep,svm_kernels,naive_bayes,mlp,all")
        ->delimiter(',');
    run->add_option("--out", opts.out_dir, "output directory (default out)");

    auto* render = app.add_subcommand("render", "regenerate tables and SVGs from artifact.json");
    std::string render_artifact_path, render_out = "out";
    render->add_option("--artifact", render_artifact_path, "path to artifact.json")->required();
    render->add_option("--out", render_out, "output directory");

    auto* fetch = app.add_subcommand("fetch", "download and unzip a dataset archive");
    std::string fetch_url, fetch_dest = "data";
    fetch->add_option("--url", fetch_url, "archive URL (.zip)")->required();
    fetch->add_option("--dest", fetch_dest, "destination directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (summarize->parsed()) {
            har::ExperimentConfig config = resolve_config(opts);
            if (config.dataset_root.empty())
                throw har::ConfigError("no dataset root configured (flag --dataset-root, config "
                                       "file, or " + std::string(har::kDatasetRootEnv) + ")");
            auto [train, heldout] = har::load_uci_har(config.dataset_root);
            har::DataSplit split = har::make_split(train, heldout, config.seed);
            std::string text = har::dataset_summary_json(train, heldout, split).dump(2) + "\n";
            if (summary_out.empty()) std::cout << text;
            else har::atomic_write(summary_out, text);
        } else if (run->parsed()) {
            har::ExperimentConfig config = resolve_config(opts);
            har::RunArtifact artifact = har::run_experiments(config);
            har::write_artifact_files(artifact, config.output_dir);
            for (const auto& e : artifact.errors) std::cerr << "model failed: " << e << "\n";
            std::cout << har::comparison_table_csv(artifact);
            std::cout << "artifacts written to " << config.output_dir.string() << "\n";
            if (!artifact.errors.empty()) return 2;
        } else if (render->parsed()) {
            har::render_artifact(render_artifact_path, render_out);
            std::cout << "rendered to " << render_out << "\n";
        } else if (fetch->parsed()) {
            har::fetch_dataset(fetch_url, fetch_dest);
            std::cout << "fetched and unpacked into " << fetch_dest << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
