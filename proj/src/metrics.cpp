#include "har/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "har/errors.hpp"

namespace har {

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string stat_or_na(const std::optional<double>& v) {
    return v ? fmt("%.6f", *v) : std::string("n/a");
}

}  // namespace

std::int64_t ConfusionMatrix::total() const {
    std::int64_t t = 0;
    for (const auto& row : counts)
        for (std::int64_t c : row) t += c;
    return t;
}

std::int64_t ConfusionMatrix::trace() const {
    std::int64_t t = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) t += counts[i][i];
    return t;
}

std::int64_t ConfusionMatrix::row_sum(std::size_t r) const {
    std::int64_t t = 0;
    for (std::int64_t c : counts[r]) t += c;
    return t;
}

std::int64_t ConfusionMatrix::col_sum(std::size_t c) const {
    std::int64_t t = 0;
    for (const auto& row : counts) t += row[c];
    return t;
}

EvalReport evaluate(const std::vector<Activity>& predictions,
                    const std::vector<Activity>& truths) {
    if (predictions.size() != truths.size())
        throw DimensionError("evaluate: " + std::to_string(predictions.size()) +
                             " predictions vs " + std::to_string(truths.size()) + " truths");
    if (predictions.empty()) throw EmptyEvaluationError("evaluate: no samples");

    EvalReport report;
    for (std::size_t i = 0; i < truths.size(); ++i) report.confusion.at(truths[i], predictions[i])++;

    // integer counts throughout; the single division happens here
    report.accuracy = static_cast<double>(report.confusion.trace()) /
                      static_cast<double>(report.confusion.total());

    for (std::size_t c = 0; c < kNumActivities; ++c) {
        PerClassStats stats;
        stats.label = all_activities()[c];
        std::int64_t row = report.confusion.row_sum(c);
        std::int64_t col = report.confusion.col_sum(c);
        std::int64_t diag = report.confusion.counts[c][c];
        stats.support = row;
        if (col > 0) stats.precision = static_cast<double>(diag) / static_cast<double>(col);
        if (row > 0) stats.recall = static_cast<double>(diag) / static_cast<double>(row);
        report.per_class[c] = stats;
    }
    return report;
}

ReportFormat report_format_from_string(const std::string& s) {
    if (s == "csv") return ReportFormat::Csv;
    if (s == "json") return ReportFormat::Json;
    if (s == "svg") return ReportFormat::SvgHeatmap;
    throw ConfigError("unsupported report format '" + s + "' (expected csv|json|svg)");
}

namespace {

std::string render_csv(const EvalReport& r) {
    std::ostringstream out;
    out << "# har-eval-csv v1 | rows: true class | columns: predicted class\n";
    out << "model," << r.model_tag << "\n";
    out << "split," << r.split_tag << "\n";
    out << "true\\predicted";
    for (Activity a : all_activities()) out << ',' << activity_name(a);
    out << '\n';
    for (std::size_t i = 0; i < kNumActivities; ++i) {
        out << activity_name(all_activities()[i]);
        for (std::size_t j = 0; j < kNumActivities; ++j) out << ',' << r.confusion.counts[i][j];
        out << '\n';
    }
    out << "accuracy," << fmt("%.6f", r.accuracy) << '\n';
    out << "class,precision,recall,support\n";
    for (const auto& s : r.per_class)
        out << activity_name(s.label) << ',' << stat_or_na(s.precision) << ','
            << stat_or_na(s.recall) << ',' << s.support << '\n';
    return std::move(out).str();
}

std::string render_svg(const EvalReport& r) {
    constexpr int cell = 64, left = 150, top = 70, legend = 24;
    const int width = left + cell * kNumActivities + 20;
    const int height = top + cell * kNumActivities + legend + 30;

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" font-family=\"monospace\" font-size=\"11\">\n";
    out << "<text x=\"10\" y=\"18\" font-size=\"14\">" << r.model_tag << " (" << r.split_tag
        << ") accuracy=" << fmt("%.4f", r.accuracy) << "</text>\n";
    out << "<text x=\"10\" y=\"36\">rows: true class, columns: predicted class"
           " (cells shaded by row-normalized frequency)</text>\n";

    for (std::size_t j = 0; j < kNumActivities; ++j) {
        int x = left + static_cast<int>(j) * cell + cell / 2;
        out << "<text x=\"" << x << "\" y=\"" << top - 8
            << "\" text-anchor=\"middle\" font-size=\"9\">"
            << activity_name(all_activities()[j]) << "</text>\n";
    }
    for (std::size_t i = 0; i < kNumActivities; ++i) {
        std::int64_t row_total = r.confusion.row_sum(i);
        int y0 = top + static_cast<int>(i) * cell;
        out << "<text x=\"" << left - 6 << "\" y=\"" << y0 + cell / 2 + 4
            << "\" text-anchor=\"end\" font-size=\"9\">" << activity_name(all_activities()[i])
            << "</text>\n";
        for (std::size_t j = 0; j < kNumActivities; ++j) {
            double frac = row_total > 0 ? static_cast<double>(r.confusion.counts[i][j]) /
                                              static_cast<double>(row_total)
                                        : 0.0;
            // white (0) -> saturated blue (1)
            int rch = static_cast<int>(std::lround(255.0 * (1.0 - frac)));
            int gch = static_cast<int>(std::lround(255.0 - 180.0 * frac));
            int x0 = left + static_cast<int>(j) * cell;
            out << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << cell
                << "\" height=\"" << cell << "\" fill=\"rgb(" << rch << ',' << gch
                << ",255)\" stroke=\"#444\"/>\n";
            const char* text_fill = frac > 0.55 ? "#ffffff" : "#000000";
            out << "<text x=\"" << x0 + cell / 2 << "\" y=\"" << y0 + cell / 2 + 4
                << "\" text-anchor=\"middle\" fill=\"" << text_fill << "\">"
                << r.confusion.counts[i][j] << "</text>\n";
        }
    }
    int ly = top + cell * kNumActivities + legend;
    out << "<text x=\"10\" y=\"" << ly << "\" font-size=\"9\">seed=" << r.seed << "</text>\n";
    out << "</svg>\n";
    return std::move(out).str();
}

}  // namespace

std::string render_report(const EvalReport& report, ReportFormat format) {
    switch (format) {
        case ReportFormat::Csv: return render_csv(report);
        case ReportFormat::Json: return eval_report_to_json(report).dump(2) + "\n";
        case ReportFormat::SvgHeatmap: return render_svg(report);
    }
    throw ConfigError("unsupported report format");
}

nlohmann::json eval_report_to_json(const EvalReport& r) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["model_tag"] = r.model_tag;
    j["split_tag"] = r.split_tag;
    j["accuracy"] = r.accuracy;
    j["orientation"] = "rows: true class, columns: predicted class";
    j["confusion"] = r.confusion.counts;
    nlohmann::json pc = nlohmann::json::array();
    for (const auto& s : r.per_class) {
        nlohmann::json e;
        e["label"] = std::string(activity_name(s.label));
        e["precision"] = s.precision ? nlohmann::json(*s.precision) : nlohmann::json(nullptr);
        e["recall"] = s.recall ? nlohmann::json(*s.recall) : nlohmann::json(nullptr);
        e["support"] = s.support;
        pc.push_back(std::move(e));
    }
    j["per_class"] = std::move(pc);
    j["config_echo"] = r.config_echo;
    j["seed"] = r.seed;
    return j;
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
    EvalReport r;
    r.model_tag = j.at("model_tag").get<std::string>();
    r.split_tag = j.at("split_tag").get<std::string>();
    r.accuracy = j.at("accuracy").get<double>();
    r.confusion.counts = j.at("confusion")
                             .get<std::array<std::array<std::int64_t, kNumActivities>,
                                             kNumActivities>>();
    const auto& pc = j.at("per_class");
    for (std::size_t c = 0; c < kNumActivities; ++c) {
        const auto& e = pc.at(c);
        PerClassStats s;
        s.label = all_activities()[c];
        if (!e.at("precision").is_null()) s.precision = e.at("precision").get<double>();
        if (!e.at("recall").is_null()) s.recall = e.at("recall").get<double>();
        s.support = e.at("support").get<std::int64_t>();
        r.per_class[c] = s;
    }
    r.config_echo = j.value("config_echo", nlohmann::json());
    r.seed = j.at("seed").get<std::uint64_t>();
    return r;
}

}  // namespace har
