#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "har/dataset.hpp"

namespace har {

/// 6x6 count matrix; rows = true class, columns = predicted class,
/// both in label-code order 1..6.
struct ConfusionMatrix {
    std::array<std::array<std::int64_t, kNumActivities>, kNumActivities> counts{};

    std::int64_t& at(Activity truth, Activity predicted) {
        return counts[static_cast<std::size_t>(activity_code(truth) - 1)]
                     [static_cast<std::size_t>(activity_code(predicted) - 1)];
    }
    std::int64_t at(Activity truth, Activity predicted) const {
        return counts[static_cast<std::size_t>(activity_code(truth) - 1)]
                     [static_cast<std::size_t>(activity_code(predicted) - 1)];
    }
    std::int64_t total() const;
    std::int64_t trace() const;
    std::int64_t row_sum(std::size_t r) const;
    std::int64_t col_sum(std::size_t c) const;

    bool operator==(const ConfusionMatrix&) const = default;
};

struct PerClassStats {
    Activity label = Activity::Walking;
    std::optional<double> precision;  // empty when no predictions of this class
    std::optional<double> recall;     // empty when the class has no support
    std::int64_t support = 0;

    bool operator==(const PerClassStats&) const = default;
};

struct EvalReport {
    std::string model_tag;
    std::string split_tag;
    double accuracy = 0.0;
    ConfusionMatrix confusion;
    std::array<PerClassStats, kNumActivities> per_class{};
    nlohmann::json config_echo;
    std::uint64_t seed = 0;

    bool operator==(const EvalReport&) const = default;
};

/// Accuracy, confusion matrix and per-class precision (column-wise) /
/// recall (row-wise). Zero-denominator classes keep precision/recall unset.
EvalReport evaluate(const std::vector<Activity>& predictions,
                    const std::vector<Activity>& truths);

enum class ReportFormat { Csv, Json, SvgHeatmap };

/// Parses "csv" / "json" / "svg"; anything else is a ConfigError.
ReportFormat report_format_from_string(const std::string& s);

/// Byte-deterministic rendering of a report. CSV carries the confusion grid
/// (with the row=true / column=predicted orientation stated in a header
/// comment), the accuracy and the per-class table; JSON round-trips through
/// eval_report_from_json; the SVG heat-map colors cells by row-normalized
/// frequency with numeric annotations and is self-contained.
std::string render_report(const EvalReport& report, ReportFormat format);

nlohmann::json eval_report_to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& j);

}  // namespace har
