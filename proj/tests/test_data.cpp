#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fuzzvad/data.hpp"
#include "fuzzvad/dsp.hpp"
#include "fuzzvad/error.hpp"

using namespace fuzzvad;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("fuzzvad_data_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string write_text(const fs::path& path, const std::string& text) {
    std::ofstream(path) << text;
    return path.string();
}

const char* kHeader = "sample_id,participant_id,emotion_label,valence,arousal,dominance,eeg_path\n";

ManifestOptions no_files() {
    ManifestOptions o;
    o.check_files = false;
    return o;
}

std::string error_text(const std::string& path) {
    try {
        load_manifest(path, no_files());
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Dataset grid(std::size_t classes, std::size_t per_class) {
    std::vector<SampleRecord> recs;
    const auto& vocab = default_vocabulary();
    for (std::size_t c = 0; c < classes; ++c)
        for (std::size_t i = 0; i < per_class; ++i) {
            SampleRecord r;
            r.sample_id = "s" + std::to_string(c) + "_" + std::to_string(i);
            r.participant_id = "P" + std::to_string(i);
            r.emotion_label = vocab[c];
            r.rating = VadRating(5, 5, 5);
            recs.push_back(r);
        }
    return Dataset(recs, vocab);
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("vocabulary") {
    const auto& v = default_vocabulary();
    CHECK(v.size() == 24);
    CHECK(std::set<std::string>(v.begin(), v.end()).size() == 24);
    Dataset ds({}, v);
    CHECK(ds.label_index(v[5]) == 5);
    CHECK_THROWS_AS(ds.label_index("Bored"), DomainError);
}

TEST_CASE("manifest parses and rejects bad rows") {
    auto dir = scratch("manifest");
    const auto& v = default_vocabulary();
    auto good = write_text(dir / "good.csv", std::string(kHeader) + "a1,P1," + v[0] + ",1,5,9,eeg/a1.eegs\n" +
                                                 "a2,P2," + v[3] + ",2.5,3.5,7,eeg/a2.eegs\n");
    auto ds = load_manifest(good, no_files());
    REQUIRE(ds.size() == 2);
    CHECK(ds[1].rating == VadRating(2.5, 3.5, 7));
    CHECK(ds[0].resolved_eeg_path == (dir / "eeg/a1.eegs").string());
    CHECK(ds.stats().per_label.at(v[3]) == 1);

    auto bad_header = write_text(dir / "h.csv", "id,participant_id\n");
    CHECK_THROWS_AS(load_manifest(bad_header, no_files()), IoError);

    auto dup = write_text(dir / "dup.csv", std::string(kHeader) + "a1,P1," + v[0] + ",1,5,9,x\n" + "a1,P1," + v[0] +
                                               ",1,5,9,x\n");
    CHECK_THROWS_AS(load_manifest(dup, no_files()), DomainError);
    CHECK(error_text(dup).find("dup.csv:3") != std::string::npos);

    auto range = write_text(dir / "range.csv", std::string(kHeader) + "a1,P1," + v[0] + ",0.5,5,9,x\n");
    CHECK_THROWS_AS(load_manifest(range, no_files()), DomainError);
    CHECK(error_text(range).find("range.csv:2") != std::string::npos);

    auto label = write_text(dir / "label.csv", std::string(kHeader) + "a1,P1,Bored,1,5,9,x\n");
    CHECK_THROWS_AS(load_manifest(label, no_files()), DomainError);

    auto cols = write_text(dir / "cols.csv", std::string(kHeader) + "a1,P1," + v[0] + ",1,5\n");
    CHECK_THROWS_AS(load_manifest(cols, no_files()), IoError);

    auto num = write_text(dir / "num.csv", std::string(kHeader) + "a1,P1," + v[0] + ",abc,5,9,x\n");
    CHECK_THROWS(load_manifest(num, no_files()));

    CHECK_THROWS_AS(load_manifest(good), IoError);  // segment files missing
    CHECK_THROWS_AS(load_manifest((dir / "missing.csv").string()), IoError);
}

TEST_CASE("manifest write and reload") {
    auto dir = scratch("roundtrip");
    auto ds = grid(3, 2);
    write_manifest((dir / "m.csv").string(), ds);
    auto back = load_manifest((dir / "m.csv").string(), no_files());
    REQUIRE(back.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(back[i].sample_id == ds[i].sample_id);
        CHECK(back[i].rating == ds[i].rating);
    }
}

TEST_CASE("stratified split") {
    auto ds = grid(24, 10);
    auto s = split_stratified(ds, 0.8, 3);
    CHECK(s.train.size() == 192);
    CHECK(s.validation.size() == 48);
    for (const auto& [label, n] : s.train.stats().per_label) CHECK(n == 8);
    for (const auto& [label, n] : s.validation.stats().per_label) CHECK(n == 2);
    auto again = split_stratified(ds, 0.8, 3);
    for (std::size_t i = 0; i < again.train.size(); ++i) CHECK(again.train[i].sample_id == s.train[i].sample_id);
    std::set<std::string> ids;
    for (const auto& r : s.train.records()) ids.insert(r.sample_id);
    for (const auto& r : s.validation.records()) CHECK(ids.count(r.sample_id) == 0);
    CHECK_THROWS_AS(split_stratified(ds, 1.0, 3), DomainError);
    CHECK_THROWS_AS(split_stratified(ds, 0.0, 3), DomainError);
}

TEST_CASE("participant split is disjoint") {
    auto ds = grid(3, 40);
    auto s = split_by_participant(ds, 0.8, 5);
    auto tp = s.train.participants();
    auto vp = s.validation.participants();
    CHECK(tp.size() == 32);
    CHECK(vp.size() == 8);
    for (const auto& p : vp) CHECK(std::find(tp.begin(), tp.end(), p) == tp.end());
    CHECK(s.train.size() + s.validation.size() == ds.size());
    CHECK_THROWS_AS(split_by_participant(grid(3, 1), 0.8, 5), DomainError);
}

TEST_CASE("synth config validation and json") {
    SynthConfig c;
    c.validate();
    nlohmann::json j = c;
    auto back = j.get<SynthConfig>();
    CHECK(back.signature_hz == c.signature_hz);
    CHECK(back.seed == c.seed);
    j["bogus"] = 1;
    CHECK_THROWS(j.get<SynthConfig>());
    SynthConfig bad;
    bad.class_count = 30;
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = {};
    bad.signature_hz = {200.0};
    CHECK_THROWS_AS(bad.validate(), DomainError);
    CHECK(default_class_vad_means().size() == 24);
}

TEST_CASE("synth writes a loadable, reproducible corpus") {
    auto dir = scratch("synth");
    SynthConfig c;
    c.class_count = 2;
    c.participants = 2;
    c.events_per_participant = 1;
    c.channel_count = 4;
    auto out = synth_generate(c, (dir / "a").string());
    CHECK(out.dataset.size() == 2);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir / "a" / "eeg")) files += e.is_regular_file();
    CHECK(files == 2);
    auto ds = load_manifest(out.manifest_path);
    CHECK(ds.size() == 2);
    auto rec = read_segment(ds[0].resolved_eeg_path);
    CHECK(rec.channel_count() == 4);
    CHECK(rec.sample_count() == 1750);

    synth_generate(c, (dir / "b").string());
    CHECK(slurp(dir / "a" / "manifest.csv") == slurp(dir / "b" / "manifest.csv"));
    CHECK(slurp(dir / "a" / "ground_truth.json") == slurp(dir / "b" / "ground_truth.json"));
    for (const auto& r : ds.records())
        CHECK(slurp(dir / "a" / r.eeg_path) == slurp(dir / "b" / r.eeg_path));

    auto truth = nlohmann::json::parse(slurp(out.ground_truth_path));
    CHECK(truth.contains(ds[0].sample_id));
    CHECK(truth[ds[0].sample_id].at("emotion_label") == ds[0].emotion_label);
}

TEST_CASE("synth signature shows up at its frequency") {
    auto dir = scratch("peak");
    SynthConfig c;
    c.class_count = 1;
    c.participants = 1;
    c.events_per_participant = 1;
    c.channel_count = 1;
    c.signature_hz = {9.765625};
    c.noise_sigma = 0.5;
    c.signature_contrast = 0.0;
    c.participant_offset_sigma = 0.0;
    auto out = synth_generate(c, dir.string());
    auto rec = read_segment(out.dataset[0].resolved_eeg_path);
    auto st = spectrogram_stack(rec);
    std::size_t best = 0;
    double best_power = -1;
    for (std::size_t m = 0; m < st.bins; ++m) {
        double p = 0;
        for (std::size_t n = 0; n < st.frames; ++n) p += st.at(0, m, n);
        if (p > best_power) {
            best_power = p;
            best = m;
        }
    }
    CHECK(best == 5);  // 250 / 128 * 5
}

}
