// Times the OpenMP kernels against their serial reference implementations
// on synthetic data and reports the largest result difference for each.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "har/reference.hpp"

using har::Activity;
using har::FeatureVector;
using har::Kernel;
using har::Matrix;
using har::Sample;
using har::SeededRng;

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::vector<FeatureVector> random_vectors(SeededRng& rng, std::size_t n, std::size_t dim) {
    std::vector<FeatureVector> xs(n, FeatureVector(dim));
    for (auto& x : xs)
        for (double& v : x) v = rng.next_uniform(-1.0, 1.0);
    return xs;
}

std::vector<Sample> random_samples(SeededRng& rng, std::size_t n, std::size_t dim) {
    std::vector<Sample> samples(n);
    for (auto& s : samples) {
        s.features.resize(dim);
        for (double& v : s.features) v = rng.next_uniform(-1.0, 1.0);
        s.label = har::activity_from_code(1 + static_cast<int>(rng.next_below(6)));
        s.subject = 1 + static_cast<int>(rng.next_below(30));
    }
    return samples;
}

template <typename Fn>
double time_best_of(int repeats, Fn&& fn) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        double t0 = now_seconds();
        fn();
        best = std::min(best, now_seconds() - t0);
    }
    return best;
}

void report(const std::string& name, double serial_s, double parallel_s, double max_diff) {
    std::printf("%-28s serial %9.4fs   openmp %9.4fs   speedup %5.2fx   max|diff| %.3g\n",
                name.c_str(), serial_s, parallel_s, serial_s / parallel_s, max_diff);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"serial-vs-OpenMP kernel benchmark"};
    int threads = 0;
    int repeats = 3;
    std::size_t n = 1500;
    std::size_t dim = 561;
    app.add_option("--threads", threads, "OpenMP thread cap (0 = default)");
    app.add_option("--repeats", repeats, "repetitions per kernel (best time wins)");
    app.add_option("--n", n, "sample count for the gram/knn benchmarks");
    app.add_option("--dim", dim, "feature dimensionality");
    CLI11_PARSE(app, argc, argv);

    if (threads > 0) har::set_max_threads(threads);
    std::printf("threads: %d, n: %zu, dim: %zu, repeats: %d\n", har::max_threads(), n, dim,
                repeats);

    SeededRng rng(7);

    {  // gram matrix, linear kernel
        auto xs = random_vectors(rng, n, dim);
        Kernel k = Kernel::linear();
        Matrix serial, parallel;
        double ts = time_best_of(repeats, [&] { serial = har::ref::gram_matrix(k, xs); });
        double tp = time_best_of(repeats, [&] { parallel = har::gram_matrix(k, xs); });
        double diff = 0.0;
        for (std::size_t i = 0; i < serial.data.size(); ++i)
            diff = std::max(diff, std::abs(serial.data[i] - parallel.data[i]));
        report("gram_matrix(linear)", ts, tp, diff);
    }

    {  // knn batch prediction
        auto train = random_samples(rng, n, dim);
        auto queries = random_vectors(rng, std::max<std::size_t>(n / 4, 1), dim);
        const int k = 5;
        std::vector<Activity> serial, parallel;
        double ts =
            time_best_of(repeats, [&] { serial = har::ref::knn_predict_batch(train, k, queries); });
        har::KnnModel model = har::knn_fit(train, k);
        double tp = time_best_of(repeats, [&] { parallel = har::knn_predict_batch(model, queries); });
        std::size_t diff = 0;
        for (std::size_t i = 0; i < serial.size(); ++i) diff += serial[i] != parallel[i] ? 1 : 0;
        report("knn_predict_batch(k=5)", ts, tp, static_cast<double>(diff));
    }

    {  // mlp loss+gradients on one batch of 200 (561-100-65-6)
        har::MlpModel model = har::mlp_init({static_cast<int>(dim), 100, 65, 6}, 11);
        auto samples = random_samples(rng, 200, dim);
        har::LabeledBatch batch;
        for (const auto& s : samples) batch.emplace_back(s.features, s.label);
        std::pair<double, har::Gradients> serial, parallel;
        double ts =
            time_best_of(repeats, [&] { serial = har::ref::mlp_loss_and_gradients(model, batch); });
        double tp =
            time_best_of(repeats, [&] { parallel = har::mlp_loss_and_gradients(model, batch); });
        double diff = std::abs(serial.first - parallel.first);
        for (std::size_t l = 0; l < serial.second.weights.size(); ++l)
            for (std::size_t i = 0; i < serial.second.weights[l].data.size(); ++i)
                diff = std::max(diff, std::abs(serial.second.weights[l].data[i] -
                                               parallel.second.weights[l].data[i]));
        report("mlp_loss_and_gradients", ts, tp, diff);
    }

    {  // svm decision over a batch
        auto train = random_samples(rng, std::min<std::size_t>(n, 400), dim);
        std::vector<FeatureVector> xs;
        std::vector<int> ys;
        for (const auto& s : train) {
            xs.push_back(s.features);
            ys.push_back(har::activity_code(s.label) <= 3 ? -1 : +1);
        }
        har::SmoConfig cfg;
        cfg.c = 1.0;
        cfg.max_iterations = 50;  // a partial model is fine for timing decisions
        har::BinarySvm model = har::smo_train(xs, ys, Kernel::linear(), cfg);
        auto queries = random_vectors(rng, 2000, dim);
        std::vector<double> serial, parallel;
        double ts =
            time_best_of(repeats, [&] { serial = har::ref::svm_decision_batch(model, queries); });
        double tp = time_best_of(repeats, [&] { parallel = har::svm_decision_batch(model, queries); });
        double diff = 0.0;
        for (std::size_t i = 0; i < serial.size(); ++i)
            diff = std::max(diff, std::abs(serial[i] - parallel[i]));
        report("svm_decision_batch", ts, tp, diff);
    }

    return 0;
}
