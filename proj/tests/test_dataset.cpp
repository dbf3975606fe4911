#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "har/dataset.hpp"
#include "har/errors.hpp"
#include "support/synth.hpp"

using namespace har;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("har_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// minimal fixture with full control over the file contents
void write_fixture(const fs::path& root, const std::vector<std::string>& x_rows_train,
                   const std::vector<std::string>& y_rows_train,
                   const std::vector<std::string>& subject_rows_train) {
    fs::create_directories(root / "train");
    fs::create_directories(root / "test");
    std::ofstream act(root / "activity_labels.txt");
    act << "1 WALKING\n2 WALKING_UPSTAIRS\n3 WALKING_DOWNSTAIRS\n4 SITTING\n5 STANDING\n6 LAYING\n";
    std::ofstream feat(root / "features.txt");
    for (int i = 1; i <= kFeatureCount; ++i) feat << i << " f" << i << "\n";

    auto write_lines = [](const fs::path& p, const std::vector<std::string>& lines) {
        std::ofstream out(p);
        for (const auto& l : lines) out << l << "\n";
    };
    write_lines(root / "train" / "X_train.txt", x_rows_train);
    write_lines(root / "train" / "y_train.txt", y_rows_train);
    write_lines(root / "train" / "subject_train.txt", subject_rows_train);
    write_lines(root / "test" / "X_test.txt", x_rows_train);
    write_lines(root / "test" / "y_test.txt", y_rows_train);
    write_lines(root / "test" / "subject_test.txt", subject_rows_train);
}

std::string feature_row(int n_cols, double value = 0.25) {
    std::string row;
    for (int i = 0; i < n_cols; ++i) {
        if (i) row += ' ';
        row += std::to_string(value);
    }
    return row;
}

}  // namespace

TEST_CASE("load_uci_har: synthetic dataset round-trips value-identically") {
    fs::path root = fresh_dir("roundtrip");
    auto ds = har::testing::write_synthetic_dataset(root, 60, 36, 7);
    auto [train, heldout] = load_uci_har(root);
    REQUIRE(train.size() == ds.train.size());
    REQUIRE(heldout.size() == ds.heldout.size());
    CHECK(train == ds.train);  // exact feature/label/subject equality after reparse
    CHECK(heldout == ds.heldout);

    // second serialize-parse cycle is also value-identical
    fs::path root2 = fresh_dir("roundtrip2");
    write_uci_root(root2, train, heldout);
    auto [train2, heldout2] = load_uci_har(root2);
    CHECK(train2 == train);
    CHECK(heldout2 == heldout);
}

TEST_CASE("load_uci_har: missing file names the file") {
    fs::path root = fresh_dir("missing");
    write_fixture(root, {feature_row(kFeatureCount)}, {"1"}, {"1"});
    fs::remove(root / "train" / "y_train.txt");
    try {
        (void)load_uci_har(root);
        FAIL("expected AcquisitionError");
    } catch (const AcquisitionError& e) {
        CHECK(std::string(e.what()).find("y_train.txt") != std::string::npos);
    }
}

TEST_CASE("load_uci_har: a 560-column row fails with its line number") {
    fs::path root = fresh_dir("badcols");
    write_fixture(root,
                  {feature_row(kFeatureCount), feature_row(kFeatureCount - 1),
                   feature_row(kFeatureCount)},
                  {"1", "2", "3"}, {"1", "2", "3"});
    try {
        (void)load_uci_har(root);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        std::string msg = e.what();
        CHECK(msg.find("line 2") != std::string::npos);
        CHECK(msg.find("560") != std::string::npos);
    }
}

TEST_CASE("load_uci_har: label 7 is out of range") {
    fs::path root = fresh_dir("badlabel");
    write_fixture(root, {feature_row(kFeatureCount), feature_row(kFeatureCount)}, {"1", "7"},
                  {"1", "2"});
    try {
        (void)load_uci_har(root);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("label out of range 1..6") != std::string::npos);
    }
}

TEST_CASE("load_uci_har: subject out of range and row-count mismatch") {
    fs::path root = fresh_dir("badsubject");
    write_fixture(root, {feature_row(kFeatureCount)}, {"1"}, {"31"});
    CHECK_THROWS_AS((void)load_uci_har(root), ValidationError);

    fs::path root2 = fresh_dir("mismatch");
    write_fixture(root2, {feature_row(kFeatureCount), feature_row(kFeatureCount)}, {"1"},
                  {"1", "2"});
    CHECK_THROWS_AS((void)load_uci_har(root2), IntegrityError);
}

TEST_CASE("load_uci_har: feature value outside [-1,1] is rejected") {
    fs::path root = fresh_dir("badrange");
    std::string row = feature_row(kFeatureCount - 1) + " 1.5";
    write_fixture(root, {row}, {"1"}, {"1"});
    CHECK_THROWS_AS((void)load_uci_har(root), ValidationError);
}

TEST_CASE("split_heldout: stratified halves, deterministic, disjoint") {
    auto ds = har::testing::make_synthetic_samples(0, 101, 3);

    auto [val1, test1] = split_heldout(ds.heldout, 42);
    auto [val2, test2] = split_heldout(ds.heldout, 42);
    CHECK(val1 == val2);
    CHECK(test1 == test2);
    CHECK(val1.size() + test1.size() == ds.heldout.size());

    // brute-force per-class counting oracle
    std::array<int, kNumActivities> want{};
    for (const auto& s : ds.heldout) want[static_cast<std::size_t>(activity_code(s.label) - 1)]++;
    auto hv = class_histogram(val1);
    auto ht = class_histogram(test1);
    for (std::size_t c = 0; c < kNumActivities; ++c) {
        CHECK(hv[c] + ht[c] == static_cast<std::size_t>(want[c]));
        CHECK(hv[c] == static_cast<std::size_t>(want[c] + 1) / 2);  // validation gets the odd one
        CHECK(std::llabs(static_cast<long long>(hv[c]) - static_cast<long long>(ht[c])) <= 1);
    }

    // different seed reshuffles but keeps the invariants
    auto [val3, test3] = split_heldout(ds.heldout, 43);
    CHECK(val3.size() == val1.size());
    CHECK_FALSE(val3 == val1);

    CHECK_THROWS_AS((void)split_heldout({}, 42), ValidationError);
}

TEST_CASE("split_heldout: 10 samples of two classes split 2..3 per half") {
    std::vector<Sample> heldout;
    for (int i = 0; i < 10; ++i) {
        Sample s;
        s.features = {static_cast<double>(i) / 10.0};
        s.label = i < 5 ? Activity::Walking : Activity::Sitting;
        s.subject = 1;
        heldout.push_back(s);
    }
    auto [val, test] = split_heldout(heldout, 1);
    auto hv = class_histogram(val);
    auto ht = class_histogram(test);
    for (std::size_t c : {0UL, 3UL}) {
        CHECK(hv[c] >= 2);
        CHECK(hv[c] <= 3);
        CHECK(hv[c] + ht[c] == 5);
    }
}

TEST_CASE("class_histogram: fixed cases and recount oracle") {
    CHECK(class_histogram({}) == std::array<std::size_t, 6>{0, 0, 0, 0, 0, 0});

    std::vector<Sample> samples(3);
    samples[0].label = Activity::Walking;
    samples[1].label = Activity::Walking;
    samples[2].label = Activity::Sitting;
    for (auto& s : samples) s.features = {0.0};
    auto h = class_histogram(samples);
    CHECK(h[0] == 2);
    CHECK(h[3] == 1);

    auto ds = har::testing::make_synthetic_samples(120, 0, 9);
    auto hist = class_histogram(ds.train);
    std::size_t total = 0;
    for (std::size_t c = 0; c < kNumActivities; ++c) {
        CHECK(hist[c] > 0);
        total += hist[c];
    }
    CHECK(total == ds.train.size());
}

TEST_CASE("dataset_summary_json fields") {
    auto ds = har::testing::make_synthetic_samples(24, 12, 5);
    DataSplit split = make_split(ds.train, ds.heldout, 42);
    auto j = dataset_summary_json(ds.train, ds.heldout, split);
    CHECK(j.at("format_version") == 1);
    CHECK(j.at("feature_count") == kFeatureCount);
    CHECK(j.at("train").at("size") == 24);
    CHECK(j.at("heldout").at("size") == 12);
    CHECK(j.at("split").at("seed") == 42);
    std::size_t val = j.at("split").at("validation").at("size").get<std::size_t>();
    std::size_t test = j.at("split").at("test").at("size").get<std::size_t>();
    CHECK(val + test == 12);
}

TEST_CASE("unzip_archive: stored and deflated entries, nested zip, zip-slip rejection") {
    // hand-built archive: one stored entry, one deflated entry
    const std::string stored_payload = "plain stored bytes";
    const unsigned char deflated_bytes[] = {
        0x2b, 0xae, 0xcc, 0x2b, 0xc9, 0x48, 0x2d, 0xc9, 0x4c, 0x56, 0xa8, 0xca, 0x2c, 0x50,
        0x28, 0x48, 0xac, 0xcc, 0xc9, 0x4f, 0x4c, 0x51, 0x48, 0xcb, 0x2f, 0x52, 0x00, 0x0a,
        0x2b, 0xa4, 0xa4, 0xa6, 0xe5, 0x24, 0x96, 0xa4, 0x02, 0xc5, 0x4b, 0x32, 0xb8, 0x00};
    const std::string deflated_payload = "synthetic zip payload for the deflate path\n";

    auto u16 = [](std::string& s, std::uint16_t v) {
        s.push_back(static_cast<char>(v & 0xff));
        s.push_back(static_cast<char>(v >> 8));
    };
    auto u32 = [](std::string& s, std::uint32_t v) {
        for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    };

    struct Entry {
        std::string name;
        std::string data;
        std::uint16_t method;
        std::uint32_t uncompressed;
    };
    std::vector<Entry> entries = {
        {"dir/stored.txt", stored_payload, 0, static_cast<std::uint32_t>(stored_payload.size())},
        {"deflated.txt",
         std::string(reinterpret_cast<const char*>(deflated_bytes), sizeof deflated_bytes), 8,
         static_cast<std::uint32_t>(deflated_payload.size())},
    };

    std::string zip;
    std::vector<std::uint32_t> offsets;
    for (const auto& e : entries) {
        offsets.push_back(static_cast<std::uint32_t>(zip.size()));
        u32(zip, 0x04034b50);
        u16(zip, 20);  // version needed
        u16(zip, 0);   // flags
        u16(zip, e.method);
        u16(zip, 0);  // time
        u16(zip, 0);  // date
        u32(zip, 0);  // crc (extractor does not verify)
        u32(zip, static_cast<std::uint32_t>(e.data.size()));
        u32(zip, e.uncompressed);
        u16(zip, static_cast<std::uint16_t>(e.name.size()));
        u16(zip, 0);  // extra len
        zip += e.name;
        zip += e.data;
    }
    std::uint32_t cd_start = static_cast<std::uint32_t>(zip.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        u32(zip, 0x02014b50);
        u16(zip, 20);
        u16(zip, 20);
        u16(zip, 0);
        u16(zip, e.method);
        u16(zip, 0);
        u16(zip, 0);
        u32(zip, 0);
        u32(zip, static_cast<std::uint32_t>(e.data.size()));
        u32(zip, e.uncompressed);
        u16(zip, static_cast<std::uint16_t>(e.name.size()));
        u16(zip, 0);
        u16(zip, 0);
        u16(zip, 0);
        u16(zip, 0);
        u32(zip, 0);
        u32(zip, offsets[i]);
        zip += e.name;
    }
    std::uint32_t cd_size = static_cast<std::uint32_t>(zip.size()) - cd_start;
    u32(zip, 0x06054b50);
    u16(zip, 0);
    u16(zip, 0);
    u16(zip, static_cast<std::uint16_t>(entries.size()));
    u16(zip, static_cast<std::uint16_t>(entries.size()));
    u32(zip, cd_size);
    u32(zip, cd_start);
    u16(zip, 0);  // comment len

    fs::path dir = fresh_dir("zip");
    fs::path zip_path = dir / "test.zip";
    {
        std::ofstream out(zip_path, std::ios::binary);
        out.write(zip.data(), static_cast<std::streamsize>(zip.size()));
    }
    fs::path dest = dir / "extracted";
    unzip_archive(zip_path, dest);

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    };
    CHECK(slurp(dest / "dir" / "stored.txt") == stored_payload);
    CHECK(slurp(dest / "deflated.txt") == deflated_payload);

    // zip-slip entries are refused outright
    std::string evil = zip;
    auto pos = evil.find("dir/stored.txt");
    evil.replace(pos, 14, "../escaped.txt");
    pos = evil.find("dir/stored.txt", pos + 1);
    evil.replace(pos, 14, "../escaped.txt");
    fs::path evil_path = dir / "evil.zip";
    {
        std::ofstream out(evil_path, std::ios::binary);
        out.write(evil.data(), static_cast<std::streamsize>(evil.size()));
    }
    CHECK_THROWS_AS(unzip_archive(evil_path, dest), AcquisitionError);
}
