#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "har/errors.hpp"
#include "har/kernel_cache.hpp"
#include "har/reference.hpp"
#include "har/svm.hpp"
#include "support/oracles.hpp"

using namespace har;
using har::testing::qp_oracle;

namespace {

// labeled 2-D points, linearly separated by w.x + b with a clear margin
void separable_points(SeededRng& rng, std::size_t n, std::vector<FeatureVector>& xs,
                      std::vector<int>& ys) {
    const double w0 = 1.0, w1 = -0.5, b = 0.2;
    xs.clear();
    ys.clear();
    while (xs.size() < n) {
        FeatureVector x = {rng.next_uniform(-1, 1), rng.next_uniform(-1, 1)};
        double margin = w0 * x[0] + w1 * x[1] + b;
        if (std::abs(margin) < 0.3) continue;
        xs.push_back(x);
        ys.push_back(margin > 0 ? +1 : -1);
    }
    // force both labels
    ys[0] = +1;
    xs[0] = {1.0, -1.0};
    ys[1] = -1;
    xs[1] = {-1.0, 1.0};
}

SmoConfig checked_config(const std::vector<FeatureVector>& xs, const std::vector<int>& ys,
                         const Kernel& kernel) {
    // verifies dual feasibility and monotone objective after every step
    SmoConfig cfg;
    auto last = std::make_shared<double>(-1e300);
    auto xs_copy = std::make_shared<std::vector<FeatureVector>>(xs);
    auto ys_copy = std::make_shared<std::vector<int>>(ys);
    auto k = std::make_shared<Kernel>(kernel);
    cfg.on_step = [last, xs_copy, ys_copy, k](std::span<const double> alphas, double) {
        double sum_ay = 0.0, sum_a = 0.0;
        for (std::size_t i = 0; i < alphas.size(); ++i) {
            REQUIRE(alphas[i] >= 0.0);
            REQUIRE(alphas[i] <= 0.5 + 1e-12);  // fixtures use C <= 0.5 when checking
            sum_ay += alphas[i] * (*ys_copy)[i];
            sum_a += alphas[i];
        }
        REQUIRE(std::abs(sum_ay) <= 1e-8 * (sum_a + 1.0));
        double w = dual_objective(*xs_copy, *ys_copy,
                                  *k, std::vector<double>(alphas.begin(), alphas.end()));
        REQUIRE(w >= *last - 1e-9 * (std::abs(*last) + 1.0));
        *last = w;
    };
    return cfg;
}

}  // namespace

TEST_CASE("smo_train: analytic two-point maximum margin") {
    std::vector<FeatureVector> xs = {{0, 0}, {2, 2}};
    std::vector<int> ys = {-1, +1};
    SmoConfig cfg = checked_config(xs, ys, Kernel::linear());
    cfg.c = 0.5;
    BinarySvm m = smo_train(xs, ys, Kernel::linear(), cfg);

    REQUIRE(m.alphas.size() == 2);
    CHECK(m.alphas[0] == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(m.alphas[1] == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(m.bias == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(m.converged);

    // f(x) = 0.5 x1 + 0.5 x2 - 1
    CHECK(svm_decision(m, {2, 2}) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(svm_decision(m, {1, 1}) == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
    CHECK(svm_decision(m, {3, 1}) == doctest::Approx(1.0).epsilon(1e-9));

    CHECK(kkt_report(m, xs, ys) <= 1e-9);
}

TEST_CASE("smo_train: XOR drives every multiplier to the box bound") {
    std::vector<FeatureVector> xs = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
    std::vector<int> ys = {-1, -1, +1, +1};
    SmoConfig cfg = checked_config(xs, ys, Kernel::linear());
    cfg.c = 0.5;
    BinarySvm m = smo_train(xs, ys, Kernel::linear(), cfg);

    std::vector<double> alphas(4, 0.0);
    for (std::size_t k = 0; k < m.support_indices.size(); ++k)
        alphas[m.support_indices[k]] = m.alphas[k];
    for (double a : alphas) CHECK(a == doctest::Approx(0.5).epsilon(1e-6));

    auto oracle = qp_oracle(xs, ys, Kernel::linear(), 0.5);
    double got = dual_objective(xs, ys, Kernel::linear(), alphas);
    CHECK(std::abs(got - oracle.objective) <= 1e-3 * std::max(1.0, std::abs(oracle.objective)));
}

TEST_CASE("smo_train: separable points classified perfectly, objective matches QP oracle") {
    SeededRng rng(51);
    std::vector<FeatureVector> xs;
    std::vector<int> ys;
    separable_points(rng, 40, xs, ys);
    SmoConfig cfg;
    cfg.c = 100.0;
    BinarySvm m = smo_train(xs, ys, Kernel::linear(), cfg);

    for (std::size_t i = 0; i < xs.size(); ++i)
        CHECK(svm_decision(m, xs[i]) * ys[i] > 0.0);

    std::vector<double> alphas(xs.size(), 0.0);
    for (std::size_t k = 0; k < m.support_indices.size(); ++k)
        alphas[m.support_indices[k]] = m.alphas[k];
    auto oracle = qp_oracle(xs, ys, Kernel::linear(), 100.0, 300000);
    double got = dual_objective(xs, ys, Kernel::linear(), alphas);
    CHECK(std::abs(got - oracle.objective) <= 1e-3 * std::max(1.0, std::abs(oracle.objective)));
}

TEST_CASE("smo_train: random small fixtures match the QP oracle for linear and polynomial") {
    SeededRng rng(52);
    for (std::size_t n : {6, 8, 10, 12}) {
        for (const Kernel& k : {Kernel::linear(), Kernel::polynomial(0.5, 1.0, 2)}) {
            auto xs = har::testing::random_vectors(rng, n, 3);
            std::vector<int> ys(n);
            for (std::size_t i = 0; i < n; ++i) ys[i] = i % 2 == 0 ? +1 : -1;

            SmoConfig cfg;
            cfg.c = 0.5;
            BinarySvm m = smo_train(xs, ys, k, cfg);
            std::vector<double> alphas(n, 0.0);
            for (std::size_t s = 0; s < m.support_indices.size(); ++s)
                alphas[m.support_indices[s]] = m.alphas[s];

            auto oracle = qp_oracle(xs, ys, k, 0.5);
            double got = dual_objective(xs, ys, k, alphas);
            CHECK(std::abs(got - oracle.objective) <=
                  1e-3 * std::max(1.0, std::abs(oracle.objective)));
            if (m.converged) CHECK(kkt_report(m, xs, ys) <= cfg.kkt_tolerance + 1e-12);
        }
    }
}

TEST_CASE("smo_train: degenerate problems are rejected") {
    std::vector<FeatureVector> xs = {{0, 0}, {1, 1}};
    CHECK_THROWS_AS((void)smo_train(xs, {1, 1}, Kernel::linear(), SmoConfig{}),
                    DegenerateProblemError);
    CHECK_THROWS_AS((void)smo_train({{0, 0}}, {1}, Kernel::linear(), SmoConfig{}),
                    DegenerateProblemError);
    CHECK_THROWS_AS((void)smo_train(xs, {1, 2}, Kernel::linear(), SmoConfig{}), ValidationError);
}

TEST_CASE("smo_train: truncated run reports non-convergence with a real violation") {
    SeededRng rng(53);
    std::vector<FeatureVector> xs;
    std::vector<int> ys;
    separable_points(rng, 30, xs, ys);
    SmoConfig cfg;
    cfg.c = 1.0;
    cfg.max_iterations = 1;
    BinarySvm m = smo_train(xs, ys, Kernel::linear(), cfg);
    CHECK_FALSE(m.converged);
    CHECK(m.kkt_max > cfg.kkt_tolerance);
    CHECK(kkt_report(m, xs, ys) == doctest::Approx(m.kkt_max).epsilon(1e-9));
}

TEST_CASE("smo_train: negating all labels negates the decision function") {
    SeededRng rng(54);
    auto xs = har::testing::random_vectors(rng, 14, 3);
    std::vector<int> ys(14), neg(14);
    for (std::size_t i = 0; i < 14; ++i) {
        ys[i] = i % 3 == 0 ? +1 : -1;
        neg[i] = -ys[i];
    }
    SmoConfig cfg;
    cfg.c = 0.5;
    BinarySvm m1 = smo_train(xs, ys, Kernel::linear(), cfg);
    BinarySvm m2 = smo_train(xs, neg, Kernel::linear(), cfg);
    auto queries = har::testing::random_vectors(rng, 10, 3);
    for (const auto& q : queries)
        CHECK(svm_decision(m1, q) == doctest::Approx(-svm_decision(m2, q)).epsilon(1e-6).scale(1.0));
}

TEST_CASE("svm_decision: random model matches the direct summation oracle") {
    SeededRng rng(55);
    BinarySvm m;
    m.kernel = Kernel::polynomial(0.3, 0.7, 3);
    m.c = 1.0;
    m.bias = 0.37;
    auto svs = har::testing::random_vectors(rng, 25, 6);
    for (std::size_t i = 0; i < svs.size(); ++i) {
        m.support_vectors.push_back(svs[i]);
        m.support_labels.push_back(i % 2 == 0 ? +1 : -1);
        m.alphas.push_back(rng.next_uniform(0.0, 1.0));
    }
    auto queries = har::testing::random_vectors(rng, 30, 6);
    auto got = svm_decision_batch(m, queries);
    auto want = ref::svm_decision_batch(m, queries);
    for (std::size_t i = 0; i < queries.size(); ++i)
        CHECK(std::abs(got[i] - want[i]) <= 1e-10 * std::max(1.0, std::abs(want[i])));
    CHECK_THROWS_AS((void)svm_decision(m, {1.0}), DimensionError);
}

TEST_CASE("ovo_train: machine count and restriction property") {
    SeededRng rng(56);
    auto three = har::testing::random_blobs(rng, 36, 3, 3, 1.0, 0.3);
    SmoConfig cfg;
    cfg.c = 0.5;
    auto r3 = ovo_train(three, Kernel::linear(), cfg);
    CHECK(r3.model.machines.size() == 3);
    CHECK(r3.skipped_pairs.size() == 12);  // pairs touching the three absent classes

    auto six = har::testing::random_blobs(rng, 60, 4, 6, 1.0, 0.3);
    auto r6 = ovo_train(six, Kernel::linear(), cfg);
    CHECK(r6.model.machines.size() == 15);
    CHECK(r6.skipped_pairs.empty());

    for (const auto& pm : r6.model.machines) {
        CHECK(activity_code(pm.class_a) < activity_code(pm.class_b));
        // support vectors all come from the pair's own classes
        for (const auto& sv : pm.model.support_vectors) {
            bool found = false;
            for (const auto& s : six)
                if ((s.label == pm.class_a || s.label == pm.class_b) && s.features == sv)
                    found = true;
            CHECK(found);
        }
    }

    auto one_class = har::testing::random_blobs(rng, 10, 3, 1, 1.0, 0.3);
    CHECK_THROWS_AS((void)ovo_train(one_class, Kernel::linear(), cfg), CoverageError);
}

TEST_CASE("ovo_predict: strict majority wins") {
    MulticlassSvm m;
    m.kernel = Kernel::linear();
    auto constant_machine = [](Activity a, Activity b, double bias) {
        BinarySvm svm;
        svm.kernel = Kernel::linear();
        svm.c = 0.5;
        svm.bias = bias;  // no support vectors: constant decision value
        return PairMachine{a, b, svm};
    };
    m.machines.push_back(constant_machine(Activity::Walking, Activity::WalkingUpstairs, -1.0));
    m.machines.push_back(constant_machine(Activity::Walking, Activity::WalkingDownstairs, -1.0));
    m.machines.push_back(constant_machine(Activity::WalkingUpstairs, Activity::WalkingDownstairs,
                                          -1.0));
    // votes: Walking 2, WalkingUpstairs 1
    CHECK(ovo_predict(m, {0.0}) == Activity::Walking);

    // sign(0) votes for the -1-side (smaller) class
    m.machines[0].model.bias = 0.0;
    CHECK(ovo_predict(m, {0.0}) == Activity::Walking);
}

TEST_CASE("ovo_predict: three-way cycle resolved by the evidence rule") {
    MulticlassSvm m;
    m.kernel = Kernel::linear();
    auto constant_machine = [](Activity a, Activity b, double bias) {
        BinarySvm svm;
        svm.kernel = Kernel::linear();
        svm.c = 0.5;
        svm.bias = bias;
        return PairMachine{a, b, svm};
    };
    // (A,B) -> A with |f| 0.5; (B,C) -> B with 0.2; (A,C) -> C with 0.9
    m.machines.push_back(constant_machine(Activity::Walking, Activity::WalkingUpstairs, -0.5));
    m.machines.push_back(constant_machine(Activity::WalkingUpstairs, Activity::WalkingDownstairs,
                                          -0.2));
    m.machines.push_back(constant_machine(Activity::Walking, Activity::WalkingDownstairs, 0.9));
    // one vote each; evidence A = 0.5 + 0.9 = 1.4, B = 0.7, C = 1.1 -> A
    CHECK(ovo_predict(m, {0.0}) == Activity::Walking);

    // machine order is irrelevant
    std::swap(m.machines[0], m.machines[2]);
    CHECK(ovo_predict(m, {0.0}) == Activity::Walking);
    std::swap(m.machines[1], m.machines[2]);
    CHECK(ovo_predict(m, {0.0}) == Activity::Walking);
}

TEST_CASE("ovo_predict_batch: order independence on a trained model") {
    SeededRng rng(57);
    auto train = har::testing::random_blobs(rng, 48, 4, 4, 1.0, 0.4);
    SmoConfig cfg;
    cfg.c = 0.5;
    auto trained = ovo_train(train, Kernel::linear(), cfg);
    auto queries = har::testing::random_vectors(rng, 20, 4);
    auto base = ovo_predict_batch(trained.model, queries);
    MulticlassSvm shuffledm = trained.model;
    shuffle_in_place(rng, shuffledm.machines);
    CHECK(ovo_predict_batch(shuffledm, queries) == base);
    for (std::size_t i = 0; i < queries.size(); ++i)
        CHECK(base[i] == ovo_predict(trained.model, queries[i]));
}

TEST_CASE("svm serialization: json round trip") {
    SeededRng rng(58);
    auto train = har::testing::random_blobs(rng, 30, 3, 3, 1.0, 0.4);
    SmoConfig cfg;
    cfg.c = 0.5;
    auto trained = ovo_train(train, Kernel::polynomial(0.25, 0.0, 3), cfg);

    auto j = multiclass_svm_to_json(trained.model);
    MulticlassSvm back = multiclass_svm_from_json(j);
    REQUIRE(back.machines.size() == trained.model.machines.size());
    auto queries = har::testing::random_vectors(rng, 10, 3);
    CHECK(ovo_predict_batch(back, queries) == ovo_predict_batch(trained.model, queries));

    BinarySvm single = binary_svm_from_json(binary_svm_to_json(trained.model.machines[0].model));
    for (const auto& q : queries)
        CHECK(svm_decision(single, q) == svm_decision(trained.model.machines[0].model, q));
}

TEST_CASE("KernelCache: rows match the gram matrix and LRU eviction respects the budget") {
    SeededRng rng(59);
    auto xs = har::testing::random_vectors(rng, 12, 4);
    Kernel k = Kernel::polynomial(0.5, 1.0, 2);
    Matrix g = gram_matrix(k, xs);

    // budget for exactly 3 rows
    KernelCache cache(k, xs, 3 * 12 * sizeof(double));
    CHECK(cache.capacity_rows() == 3);
    for (std::size_t i = 0; i < 12; ++i) {
        const double* row = cache.row(i);
        for (std::size_t j = 0; j < 12; ++j) CHECK(row[j] == g(i, j));
        CHECK(cache.diag(i) == g(i, i));
    }
    CHECK(cache.rows_cached() == 3);
    std::uint64_t evals_after_scan = cache.evaluations();
    (void)cache.row(11);  // still cached: no new evaluations
    CHECK(cache.evaluations() == evals_after_scan);
    (void)cache.row(0);  // evicted long ago: recompute
    CHECK(cache.evaluations() == evals_after_scan + 12);

    // tiny budgets clamp to two rows so pair pointers stay valid
    KernelCache tiny(k, xs, 1);
    CHECK(tiny.capacity_rows() == 2);
    const double* r0 = tiny.row(0);
    const double* r1 = tiny.row(1);
    CHECK(r0[1] == g(0, 1));
    CHECK(r1[0] == g(1, 0));
}
