#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace har::testing {

double dot_oracle(const FeatureVector& x, const FeatureVector& y) {
    long double acc = 0.0L;
    for (std::size_t i = x.size(); i-- > 0;)
        acc += static_cast<long double>(x[i]) * static_cast<long double>(y[i]);
    return static_cast<double>(acc);
}

std::vector<double> jacobi_eigenvalues(Matrix a, int sweeps) {
    const std::size_t n = a.rows;
    if (a.cols != n) throw std::invalid_argument("jacobi: matrix not square");
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-26) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (a(p, q) == 0.0) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

namespace {

// Euclidean projection of `a` onto {0 <= x <= c, y'x = 0}: x = clip(a + t*y)
// where t solves the monotone equation y' clip(a + t*y) = 0.
std::vector<double> project_feasible(std::vector<double> a, const std::vector<int>& ys, double c) {
    auto value = [&](double t) {
        double v = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
            v += ys[i] * std::clamp(a[i] + t * ys[i], 0.0, c);
        return v;
    };
    double lo = -1.0, hi = 1.0;
    const double span = c * static_cast<double>(a.size()) + 1.0;
    for (double& x : a) {
        lo = std::min(lo, -std::abs(x) - span);
        hi = std::max(hi, std::abs(x) + span);
    }
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (value(mid) > 0.0) hi = mid;
        else lo = mid;
    }
    double t = 0.5 * (lo + hi);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::clamp(a[i] + t * ys[i], 0.0, c);
    return a;
}

}  // namespace

QpSolution qp_oracle(const std::vector<FeatureVector>& xs, const std::vector<int>& ys,
                     const Kernel& kernel, double c, long max_iterations, double stop_tolerance) {
    const std::size_t n = xs.size();
    Matrix q(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            q(i, j) = ys[i] * ys[j] * kernel_eval(kernel, xs[i], xs[j]);

    // step size from a row-sum bound on the largest eigenvalue of Q
    double lipschitz = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += std::abs(q(i, j));
        lipschitz = std::max(lipschitz, row);
    }
    const double step = 1.0 / (lipschitz + 1.0);

    auto objective = [&](const std::vector<double>& a) {
        double w = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            w += a[i];
            for (std::size_t j = 0; j < n; ++j) w -= 0.5 * a[i] * a[j] * q(i, j);
        }
        return w;
    };

    std::vector<double> a(n, 0.0), grad(n);
    QpSolution sol;
    double prev = objective(a);
    for (long it = 0; it < max_iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double g = 1.0;
            for (std::size_t j = 0; j < n; ++j) g -= q(i, j) * a[j];
            grad[i] = g;
        }
        std::vector<double> next(n);
        for (std::size_t i = 0; i < n; ++i) next[i] = a[i] + step * grad[i];
        next = project_feasible(std::move(next), ys, c);
        double move = 0.0;
        for (std::size_t i = 0; i < n; ++i) move = std::max(move, std::abs(next[i] - a[i]));
        a = std::move(next);
        sol.iterations = it + 1;
        if (move < stop_tolerance) break;
        if ((it & 1023) == 1023) {
            double cur = objective(a);
            if (std::abs(cur - prev) < stop_tolerance * (std::abs(cur) + 1.0)) break;
            prev = cur;
        }
    }
    sol.alphas = a;
    sol.objective = objective(a);
    return sol;
}

double normal(SeededRng& rng) {
    while (true) {
        double u = 2.0 * rng.next_double() - 1.0;
        double v = 2.0 * rng.next_double() - 1.0;
        double s = u * u + v * v;
        if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
    }
}

std::vector<FeatureVector> random_vectors(SeededRng& rng, std::size_t n, std::size_t dim,
                                          double lo, double hi) {
    std::vector<FeatureVector> xs(n, FeatureVector(dim));
    for (auto& x : xs)
        for (double& v : x) v = rng.next_uniform(lo, hi);
    return xs;
}

std::vector<Sample> random_blobs(SeededRng& rng, std::size_t n, std::size_t dim, int classes,
                                 double spread, double sigma) {
    std::vector<FeatureVector> centers = random_vectors(rng, static_cast<std::size_t>(classes),
                                                        dim, -spread, spread);
    std::vector<Sample> samples(n);
    for (std::size_t i = 0; i < n; ++i) {
        int c = static_cast<int>(i % static_cast<std::size_t>(classes));
        samples[i].features.resize(dim);
        for (std::size_t f = 0; f < dim; ++f)
            samples[i].features[f] = centers[static_cast<std::size_t>(c)][f] + sigma * normal(rng);
        samples[i].label = activity_from_code(c + 1);
        samples[i].subject = 1 + static_cast<int>(i % 30);
    }
    return samples;
}

}  // namespace har::testing
