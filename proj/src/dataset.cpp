#include "har/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "har/errors.hpp"

namespace fs = std::filesystem;

namespace har {

namespace {

constexpr std::array<std::string_view, kNumActivities> kActivityNames = {
    "WALKING",  "WALKING_UPSTAIRS", "WALKING_DOWNSTAIRS",
    "SITTING",  "STANDING",         "LAYING",
};

constexpr double kFeatureRangeEps = 1e-6;

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw AcquisitionError("missing dataset file: " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

// Calls fn(line, line_number) for every non-empty line; numbering starts at 1.
template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        ++line_no;
        std::string_view line(text.data() + pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") != std::string_view::npos) fn(line, line_no);
        pos = end + 1;
    }
}

std::vector<FeatureVector> parse_feature_matrix(const fs::path& p) {
    const std::string text = read_file(p);
    std::vector<FeatureVector> rows;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        FeatureVector row;
        row.reserve(kFeatureCount);
        const char* cur = line.data();
        const char* end = line.data() + line.size();
        while (cur != end) {
            while (cur != end && (*cur == ' ' || *cur == '\t')) ++cur;
            if (cur == end) break;
            double v = 0.0;
            auto [next, ec] = std::from_chars(cur, end, v, std::chars_format::general);
            if (ec != std::errc()) {
                throw ValidationError(p.string() + ": line " + std::to_string(line_no) +
                                      ": not a number: '" +
                                      std::string(cur, std::min<std::size_t>(end - cur, 24)) + "'");
            }
            if (!std::isfinite(v))
                throw ValidationError(p.string() + ": line " + std::to_string(line_no) +
                                      ": non-finite feature value");
            if (v < -1.0 - kFeatureRangeEps || v > 1.0 + kFeatureRangeEps)
                throw ValidationError(p.string() + ": line " + std::to_string(line_no) +
                                      ": feature value out of range [-1,1] (got " +
                                      std::to_string(v) + ")");
            row.push_back(v);
            cur = next;
        }
        if (row.size() != static_cast<std::size_t>(kFeatureCount))
            throw ValidationError(p.string() + ": line " + std::to_string(line_no) +
                                  ": expected " + std::to_string(kFeatureCount) +
                                  " features, got " + std::to_string(row.size()));
        rows.push_back(std::move(row));
    });
    return rows;
}

std::vector<int> parse_int_column(const fs::path& p, int lo, int hi, const std::string& what) {
    const std::string text = read_file(p);
    std::vector<int> values;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        std::size_t first = line.find_first_not_of(" \t");
        std::size_t last = line.find_last_not_of(" \t");
        std::string_view tok = line.substr(first, last - first + 1);
        int v = 0;
        auto [next, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || next != tok.data() + tok.size())
            throw ValidationError(p.string() + ": line " + std::to_string(line_no) +
                                  ": not an integer: '" + std::string(tok) + "'");
        if (v < lo || v > hi)
            throw ValidationError(p.string() + ": line " + std::to_string(line_no) + ": " + what +
                                  " out of range " + std::to_string(lo) + ".." +
                                  std::to_string(hi) + " (got " + std::to_string(v) + ")");
        values.push_back(v);
    });
    return values;
}

void check_activity_labels_file(const fs::path& p) {
    const std::string text = read_file(p);
    std::size_t seen = 0;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        std::istringstream ls{std::string(line)};
        int code = 0;
        std::string name;
        if (!(ls >> code >> name))
            throw ValidationError(p.string() + ": line " + std::to_string(line_no) +
                                  ": expected '<code> <NAME>'");
        if (code < 1 || code > kNumActivities)
            throw ValidationError(p.string() + ": line " + std::to_string(line_no) +
                                  ": label out of range 1..6 (got " + std::to_string(code) + ")");
        if (name != kActivityNames[static_cast<std::size_t>(code - 1)])
            throw ValidationError(p.string() + ": line " + std::to_string(line_no) +
                                  ": activity name '" + name + "' does not match expected '" +
                                  std::string(kActivityNames[static_cast<std::size_t>(code - 1)]) +
                                  "'");
        ++seen;
    });
    if (seen != static_cast<std::size_t>(kNumActivities))
        throw IntegrityError(p.string() + " lists " + std::to_string(seen) +
                             " activities, expected " + std::to_string(kNumActivities));
}

void check_features_file(const fs::path& p) {
    const std::string text = read_file(p);
    std::size_t seen = 0;
    for_each_line(text, [&](std::string_view, std::size_t) { ++seen; });
    if (seen != static_cast<std::size_t>(kFeatureCount))
        throw IntegrityError(p.string() + " lists " + std::to_string(seen) +
                             " features, expected " + std::to_string(kFeatureCount));
}

std::vector<Sample> load_partition(const fs::path& root, const std::string& tag) {
    const fs::path dir = root / tag;
    auto features = parse_feature_matrix(dir / ("X_" + tag + ".txt"));
    auto labels = parse_int_column(dir / ("y_" + tag + ".txt"), 1, kNumActivities, "label");
    auto subjects = parse_int_column(dir / ("subject_" + tag + ".txt"), 1, kNumSubjects, "subject");

    if (features.size() != labels.size() || features.size() != subjects.size())
        throw IntegrityError("row count mismatch in partition '" + tag +
                             "': X=" + std::to_string(features.size()) +
                             " y=" + std::to_string(labels.size()) +
                             " subject=" + std::to_string(subjects.size()));
    if (features.empty()) throw IntegrityError("partition '" + tag + "' is empty");

    std::vector<Sample> samples;
    samples.reserve(features.size());
    for (std::size_t i = 0; i < features.size(); ++i)
        samples.push_back(Sample{std::move(features[i]), activity_from_code(labels[i]), subjects[i]});
    return samples;
}

}  // namespace

std::string_view activity_name(Activity a) {
    return kActivityNames[static_cast<std::size_t>(activity_code(a) - 1)];
}

Activity activity_from_code(int code) {
    if (code < 1 || code > kNumActivities)
        throw ValidationError("label out of range 1..6 (got " + std::to_string(code) + ")");
    return static_cast<Activity>(code);
}

const std::array<Activity, kNumActivities>& all_activities() {
    static const std::array<Activity, kNumActivities> acts = {
        Activity::Walking,  Activity::WalkingUpstairs, Activity::WalkingDownstairs,
        Activity::Sitting,  Activity::Standing,        Activity::Laying,
    };
    return acts;
}

std::pair<std::vector<Sample>, std::vector<Sample>> load_uci_har(const fs::path& root) {
    if (!fs::exists(root)) throw AcquisitionError("dataset root does not exist: " + root.string());
    check_activity_labels_file(root / "activity_labels.txt");
    check_features_file(root / "features.txt");
    auto train = load_partition(root, "train");
    auto heldout = load_partition(root, "test");
    return {std::move(train), std::move(heldout)};
}

std::pair<std::vector<Sample>, std::vector<Sample>> split_heldout(
    const std::vector<Sample>& heldout, std::uint64_t seed) {
    if (heldout.empty()) throw ValidationError("split_heldout: empty input");

    SeededRng rng(seed);
    std::vector<std::size_t> to_validation, to_test;
    for (Activity a : all_activities()) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < heldout.size(); ++i)
            if (heldout[i].label == a) idx.push_back(i);
        shuffle_in_place(rng, idx);
        std::size_t half = (idx.size() + 1) / 2;  // validation gets the odd sample
        to_validation.insert(to_validation.end(), idx.begin(), idx.begin() + half);
        to_test.insert(to_test.end(), idx.begin() + half, idx.end());
    }
    std::sort(to_validation.begin(), to_validation.end());
    std::sort(to_test.begin(), to_test.end());

    std::vector<Sample> validation, test;
    validation.reserve(to_validation.size());
    test.reserve(to_test.size());
    for (std::size_t i : to_validation) validation.push_back(heldout[i]);
    for (std::size_t i : to_test) test.push_back(heldout[i]);
    return {std::move(validation), std::move(test)};
}

DataSplit make_split(std::vector<Sample> train, const std::vector<Sample>& heldout,
                     std::uint64_t seed) {
    auto [validation, test] = split_heldout(heldout, seed);
    DataSplit split;
    split.train = std::move(train);
    split.validation = std::move(validation);
    split.test = std::move(test);
    split.seed = seed;
    split.protocol_tag = "uci-har-70/15/15-stratified-v1";
    return split;
}

std::array<std::size_t, kNumActivities> class_histogram(const std::vector<Sample>& samples) {
    std::array<std::size_t, kNumActivities> counts{};
    for (const auto& s : samples) counts[static_cast<std::size_t>(activity_code(s.label) - 1)]++;
    return counts;
}

void write_uci_partition(const fs::path& dir, const std::string& tag,
                         const std::vector<Sample>& samples) {
    fs::create_directories(dir);
    std::ofstream xf(dir / ("X_" + tag + ".txt"));
    std::ofstream yf(dir / ("y_" + tag + ".txt"));
    std::ofstream sf(dir / ("subject_" + tag + ".txt"));
    if (!xf || !yf || !sf)
        throw AcquisitionError("cannot write partition files under " + dir.string());

    char buf[32];
    for (const auto& s : samples) {
        for (std::size_t j = 0; j < s.features.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%.16e", s.features[j]);
            if (j) xf << ' ';
            xf << buf;
        }
        xf << '\n';
        yf << activity_code(s.label) << '\n';
        sf << s.subject << '\n';
    }
}

void write_uci_root(const fs::path& root, const std::vector<Sample>& train,
                    const std::vector<Sample>& heldout) {
    fs::create_directories(root);
    {
        std::ofstream af(root / "activity_labels.txt");
        for (Activity a : all_activities())
            af << activity_code(a) << ' ' << activity_name(a) << '\n';
    }
    {
        std::ofstream ff(root / "features.txt");
        for (int i = 1; i <= kFeatureCount; ++i) ff << i << " f" << i << '\n';
    }
    write_uci_partition(root / "train", "train", train);
    write_uci_partition(root / "test", "test", heldout);
}

nlohmann::json dataset_summary_json(const std::vector<Sample>& train,
                                    const std::vector<Sample>& heldout, const DataSplit& split) {
    auto histogram_json = [](const std::vector<Sample>& samples) {
        nlohmann::json h;
        auto counts = class_histogram(samples);
        for (Activity a : all_activities())
            h[std::string(activity_name(a))] = counts[static_cast<std::size_t>(activity_code(a) - 1)];
        return h;
    };
    nlohmann::json j;
    j["format_version"] = 1;
    j["feature_count"] = kFeatureCount;
    j["train"] = {{"size", train.size()}, {"histogram", histogram_json(train)}};
    j["heldout"] = {{"size", heldout.size()}, {"histogram", histogram_json(heldout)}};
    j["split"] = {{"seed", split.seed},
                  {"protocol", split.protocol_tag},
                  {"validation", {{"size", split.validation.size()},
                                  {"histogram", histogram_json(split.validation)}}},
                  {"test", {{"size", split.test.size()},
                            {"histogram", histogram_json(split.test)}}}};
    return j;
}

}  // namespace har
