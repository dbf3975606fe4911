#pragma once

// Synthetic dataset in the published archive layout, used by integration
// tests when no real dataset directory is available.

#include <filesystem>
#include <vector>

#include "har/dataset.hpp"

namespace har::testing {

struct SynthDataset {
    std::vector<Sample> train;
    std::vector<Sample> heldout;
};

/// Six well-separated classes over the full 561-feature layout (a handful of
/// informative features per class, small noise elsewhere), values clipped to
/// [-1, 1]. Both partitions contain every class.
SynthDataset make_synthetic_samples(std::size_t n_train, std::size_t n_heldout,
                                    std::uint64_t seed);

/// Writes make_synthetic_samples() under root in the archive layout and
/// returns the samples.
SynthDataset write_synthetic_dataset(const std::filesystem::path& root, std::size_t n_train,
                                     std::size_t n_heldout, std::uint64_t seed);

}  // namespace har::testing
