#pragma once

#include <cstddef>
#include <list>
#include <unordered_map>
#include <vector>

#include "har/core_math.hpp"

namespace har {

/// LRU cache of full Gram-matrix rows for a fixed sample set. SMO is
/// kernel-evaluation bound; touching a row refreshes it, and rows are evicted
/// least-recently-used once the byte budget is exceeded. The capacity never
/// drops below two rows so that the pointers for the active pair stay valid.
class KernelCache {
public:
    KernelCache(const Kernel& kernel, const std::vector<FeatureVector>& xs,
                std::size_t budget_bytes);

    /// Row i of the Gram matrix (kernel(x_i, x_j) for all j); valid until two
    /// further row() calls.
    const double* row(std::size_t i);

    double diag(std::size_t i) const { return diag_[i]; }
    std::size_t size() const { return n_; }
    std::size_t rows_cached() const { return lru_.size(); }
    std::size_t capacity_rows() const { return capacity_rows_; }
    std::uint64_t evaluations() const { return evaluations_; }

private:
    const Kernel kernel_;
    const std::vector<FeatureVector>& xs_;
    std::size_t n_;
    std::size_t capacity_rows_;
    std::vector<double> diag_;

    using LruList = std::list<std::pair<std::size_t, std::vector<double>>>;
    LruList lru_;  // front = most recent
    std::unordered_map<std::size_t, LruList::iterator> index_;
    std::uint64_t evaluations_ = 0;
};

}  // namespace har
