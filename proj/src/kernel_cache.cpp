#include "har/kernel_cache.hpp"

#include <algorithm>

namespace har {

KernelCache::KernelCache(const Kernel& kernel, const std::vector<FeatureVector>& xs,
                         std::size_t budget_bytes)
    : kernel_(kernel), xs_(xs), n_(xs.size()) {
    std::size_t row_bytes = std::max<std::size_t>(n_ * sizeof(double), 1);
    capacity_rows_ = std::clamp<std::size_t>(budget_bytes / row_bytes, 2, std::max<std::size_t>(n_, 2));
    diag_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) diag_[i] = kernel_eval(kernel_, xs_[i], xs_[i]);
    evaluations_ += n_;
}

const double* KernelCache::row(std::size_t i) {
    if (auto it = index_.find(i); it != index_.end()) {
        lru_.splice(lru_.begin(), lru_, it->second);  // refresh
        return it->second->second.data();
    }
    while (lru_.size() >= capacity_rows_) {
        index_.erase(lru_.back().first);
        lru_.pop_back();
    }
    std::vector<double> values(n_);
    const FeatureVector& xi = xs_[i];
#pragma omp parallel for schedule(static) if (n_ >= 512)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(n_); ++j)
        values[static_cast<std::size_t>(j)] =
            kernel_eval(kernel_, xi, xs_[static_cast<std::size_t>(j)]);
    evaluations_ += n_;
    lru_.emplace_front(i, std::move(values));
    index_[i] = lru_.begin();
    return lru_.front().second.data();
}

}  // namespace har
