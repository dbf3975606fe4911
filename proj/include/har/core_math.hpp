#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace har {

using FeatureVector = std::vector<double>;

// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }

    bool operator==(const Matrix&) const = default;
};

/// Closed-form similarity function used by the SVM.
///   linear(x,y)     = <x,y>
///   polynomial(x,y) = (gamma * <x,y> + coef0) ^ degree
///   sigmoid(x,y)    = tanh(gamma * <x,y> + coef0)
struct Kernel {
    enum class Type { Linear, Polynomial, Sigmoid };

    Type type = Type::Linear;
    double gamma = 0.0;
    double coef0 = 0.0;
    int degree = 1;

    static Kernel linear() { return Kernel{Type::Linear, 0.0, 0.0, 1}; }
    static Kernel polynomial(double gamma, double coef0, int degree) {
        return Kernel{Type::Polynomial, gamma, coef0, degree};
    }
    static Kernel sigmoid(double gamma, double coef0) {
        return Kernel{Type::Sigmoid, gamma, coef0, 1};
    }

    std::string name() const;
    void validate() const;  // throws ConfigError on bad hyperparameters

    bool operator==(const Kernel&) const = default;
};

/// Deterministic 64-bit PRNG: splitmix64.
/// The state advances by 0x9E3779B97F4A7C15 per draw and the output mix is
///   z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9;
///   z ^= z >> 27;  z *= 0x94D049BB133111EB;
///   z ^= z >> 31;
/// Identical seeds produce identical streams on every platform and build.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : seed0_(seed), state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53 usable bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Unbiased integer in [0, bound); bound must be > 0. Lemire's method.
    std::uint64_t next_below(std::uint64_t bound);

    std::uint64_t seed() const { return seed0_; }

private:
    std::uint64_t seed0_;
    std::uint64_t state_;
};

double dot(std::span<const double> x, std::span<const double> y);
double squared_distance(std::span<const double> x, std::span<const double> y);
double euclidean_distance(std::span<const double> x, std::span<const double> y);
double kernel_eval(const Kernel& k, std::span<const double> x, std::span<const double> y);

/// Pairwise kernel evaluations, exactly symmetric (upper triangle mirrored).
/// OpenMP-parallel over rows; see har::ref::gram_matrix for the serial reference.
Matrix gram_matrix(const Kernel& k, const std::vector<FeatureVector>& xs);

/// Fisher-Yates permutation; bit-identical for identical (seed, input).
template <typename T>
void shuffle_in_place(SeededRng& rng, std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(items[i - 1], items[j]);
    }
}

template <typename T>
std::vector<T> shuffled(SeededRng& rng, std::vector<T> items) {
    shuffle_in_place(rng, items);
    return items;
}

/// Number of OpenMP threads the parallel kernels will use (1 when built
/// without OpenMP).
int max_threads();
void set_max_threads(int n);

}  // namespace har
