#include "har/core_math.hpp"

#include <cmath>

#include "har/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace har {

std::string Kernel::name() const {
    switch (type) {
        case Type::Linear: return "linear";
        case Type::Polynomial: return "polynomial";
        case Type::Sigmoid: return "sigmoid";
    }
    return "unknown";
}

void Kernel::validate() const {
    if (type == Type::Linear) return;
    if (!(gamma > 0.0)) throw ConfigError("kernel gamma must be > 0, got " + std::to_string(gamma));
    if (!std::isfinite(coef0)) throw ConfigError("kernel coef0 must be finite");
    if (type == Type::Polynomial && degree < 1)
        throw ConfigError("polynomial degree must be >= 1, got " + std::to_string(degree));
}

std::uint64_t SeededRng::next_below(std::uint64_t bound) {
    // Lemire's multiply-shift rejection; unbiased for any bound > 0.
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < bound) {
        std::uint64_t threshold = -bound % bound;
        while (lo < threshold) {
            x = next_u64();
            m = static_cast<__uint128_t>(x) * bound;
            lo = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

namespace {

void require_same_length(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw DimensionError("vector length mismatch: " + std::to_string(x.size()) + " vs " +
                             std::to_string(y.size()));
}

}  // namespace

double dot(std::span<const double> x, std::span<const double> y) {
    require_same_length(x, y);
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}

double squared_distance(std::span<const double> x, std::span<const double> y) {
    require_same_length(x, y);
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double d = x[i] - y[i];
        acc += d * d;
    }
    return acc;
}

double euclidean_distance(std::span<const double> x, std::span<const double> y) {
    return std::sqrt(squared_distance(x, y));
}

double kernel_eval(const Kernel& k, std::span<const double> x, std::span<const double> y) {
    double d = dot(x, y);
    switch (k.type) {
        case Kernel::Type::Linear:
            return d;
        case Kernel::Type::Polynomial: {
            double base = k.gamma * d + k.coef0;
            double p = 1.0;
            for (int i = 0; i < k.degree; ++i) p *= base;
            return p;
        }
        case Kernel::Type::Sigmoid:
            return std::tanh(k.gamma * d + k.coef0);
    }
    return 0.0;
}

Matrix gram_matrix(const Kernel& k, const std::vector<FeatureVector>& xs) {
    const std::size_t n = xs.size();
    Matrix g(n, n);
    if (n == 0) return g;
    const std::size_t dim = xs[0].size();
    for (const auto& x : xs)
        if (x.size() != dim) throw DimensionError("gram_matrix: inconsistent vector lengths");

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        for (std::size_t j = static_cast<std::size_t>(i); j < n; ++j)
            g(static_cast<std::size_t>(i), j) = kernel_eval(k, xs[static_cast<std::size_t>(i)], xs[j]);
    }
    // mirror the upper triangle for exact symmetry
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
    return g;
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_max_threads(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

}  // namespace har
