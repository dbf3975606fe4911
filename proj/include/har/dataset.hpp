#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "har/core_math.hpp"

namespace har {

inline constexpr int kFeatureCount = 561;
inline constexpr int kNumActivities = 6;
inline constexpr int kNumSubjects = 30;

/// The six activity classes, integer codes 1..6 as in the dataset files.
enum class Activity : int {
    Walking = 1,
    WalkingUpstairs = 2,
    WalkingDownstairs = 3,
    Sitting = 4,
    Standing = 5,
    Laying = 6,
};

std::string_view activity_name(Activity a);
Activity activity_from_code(int code);  // throws ValidationError outside 1..6
inline int activity_code(Activity a) { return static_cast<int>(a); }

/// All six activities in code order.
const std::array<Activity, kNumActivities>& all_activities();

struct Sample {
    FeatureVector features;
    Activity label = Activity::Walking;
    int subject = 1;

    bool operator==(const Sample&) const = default;
};

struct DataSplit {
    std::vector<Sample> train;
    std::vector<Sample> validation;
    std::vector<Sample> test;
    std::uint64_t seed = 0;
    std::string protocol_tag;
};

/// Loads the published archive layout: train/ and test/ subdirectories with
/// X_*, y_* and subject_* text files plus the features and activity_labels
/// listings at the root. Returns (train partition, held-out partition).
std::pair<std::vector<Sample>, std::vector<Sample>> load_uci_har(
    const std::filesystem::path& root);

/// Stratified-by-class split of the held-out partition into halves
/// (per-class counts differ by at most 1); deterministic for a fixed seed.
std::pair<std::vector<Sample>, std::vector<Sample>> split_heldout(
    const std::vector<Sample>& heldout, std::uint64_t seed);

/// Convenience: load + split under one protocol tag.
DataSplit make_split(std::vector<Sample> train, const std::vector<Sample>& heldout,
                     std::uint64_t seed);

/// Per-class sample counts, indexed by code-1. Counts sum to samples.size().
std::array<std::size_t, kNumActivities> class_histogram(const std::vector<Sample>& samples);

/// Writes one partition back in the dataset's own text format
/// (X_<tag>.txt / y_<tag>.txt / subject_<tag>.txt under dir). Feature values
/// are printed with enough digits to re-parse bit-identically.
void write_uci_partition(const std::filesystem::path& dir, const std::string& tag,
                         const std::vector<Sample>& samples);

/// Writes a complete archive layout (root listings plus train/ and test/).
void write_uci_root(const std::filesystem::path& root, const std::vector<Sample>& train,
                    const std::vector<Sample>& heldout);

/// JSON dataset-summary record: partition sizes, per-class histograms, split seed.
nlohmann::json dataset_summary_json(const std::vector<Sample>& train,
                                    const std::vector<Sample>& heldout,
                                    const DataSplit& split);

/// Optional acquisition step: downloads a .zip archive from `url` and unpacks
/// it (including one level of nested .zip) under dest_dir. Requires the
/// library to be built with libcurl and zlib; throws AcquisitionError
/// otherwise or on any download/unpack failure.
void fetch_dataset(const std::string& url, const std::filesystem::path& dest_dir);

/// Extracts a .zip file (stored and deflate entries) under dest_dir.
void unzip_archive(const std::filesystem::path& zip_path, const std::filesystem::path& dest_dir);

}  // namespace har
