#include "fuzzvad/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "fuzzvad/csv.hpp"
#include "fuzzvad/dsp.hpp"
#include "fuzzvad/error.hpp"

namespace fuzzvad {

namespace fs = std::filesystem;

namespace {

struct VocabEntry {
    const char* label;
    const char* cell;  // V, A, D levels as L/M/H
};

constexpr std::array<VocabEntry, 24> kVocabulary{{
    {"Delighted", "HHH"},  {"Excited", "HHM"},    {"Joyous", "HMH"},     {"Adventurous", "HHL"},
    {"Amused", "HMM"},     {"Happy", "HML"},      {"Sad", "LLM"},        {"Depressed", "LLL"},
    {"Melancholic", "MLM"}, {"Despondent", "MLL"}, {"Miserable", "LML"},  {"Dissatisfied", "LMM"},
    {"Afraid", "LHL"},     {"Alarmed", "LHM"},    {"Startled", "MHM"},   {"Distress", "MHL"},
    {"Taken Aback", "MHH"}, {"Calm", "HLM"},      {"Love", "HLH"},       {"Hopeful", "MMH"},
    {"Angry", "LHH"},      {"Disgusted", "LMH"},  {"Ashamed", "MML"},    {"Curious", "MMM"},
}};

double level_value(char c) {
    switch (c) {
        case 'L': return 1.5;
        case 'M': return 5.0;
        default: return 8.5;
    }
}

std::mt19937_64 stream(std::uint64_t seed, std::uint32_t tag, std::uint32_t a = 0, std::uint32_t b = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag, a, b};
    return std::mt19937_64(seq);
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) throw DomainError("synth config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
            throw DomainError(fmt::format("synth config: unknown key '{}'", it.key()));
        }
    }
}

void check_segment_header(const fs::path& path, const std::string& where) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("{}: missing segment file '{}'", where, path.string()));
    char magic[4] = {};
    std::uint8_t raw[12] = {};
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(raw), 12);
    if (!in || std::string(magic, 4) != "EEGS") {
        throw IoError(fmt::format("{}: '{}' is not an EEGS segment", where, path.string()));
    }
    auto u32 = [&](int k) {
        return std::uint32_t(raw[k]) | std::uint32_t(raw[k + 1]) << 8 | std::uint32_t(raw[k + 2]) << 16 |
               std::uint32_t(raw[k + 3]) << 24;
    };
    const auto expected = 16 + 4 * std::uintmax_t(u32(0)) * u32(4);
    if (fs::file_size(path) != expected) {
        throw IoError(fmt::format("{}: '{}' has the wrong payload size", where, path.string()));
    }
}

std::vector<SampleRecord> sorted_records(const Dataset& d) {
    auto recs = d.records();
    std::sort(recs.begin(), recs.end(),
              [](const SampleRecord& a, const SampleRecord& b) { return a.sample_id < b.sample_id; });
    return recs;
}

void check_fraction(double f) {
    if (!(f > 0.0 && f < 1.0)) throw DomainError(fmt::format("split fraction {} must lie in (0, 1)", f));
}

}  // namespace

const std::vector<std::string>& default_vocabulary() {
    static const std::vector<std::string> vocab = [] {
        std::vector<std::string> v;
        for (const auto& e : kVocabulary) v.emplace_back(e.label);
        return v;
    }();
    return vocab;
}

std::vector<std::array<double, 3>> default_class_vad_means() {
    std::vector<std::array<double, 3>> out;
    for (const auto& e : kVocabulary) {
        out.push_back({level_value(e.cell[0]), level_value(e.cell[1]), level_value(e.cell[2])});
    }
    return out;
}

Dataset::Dataset(std::vector<SampleRecord> records, std::vector<std::string> vocabulary)
    : records_(std::move(records)), vocabulary_(std::move(vocabulary)) {
    for (const auto& r : records_) (void)label_index(r.emotion_label);
}

std::size_t Dataset::label_index(const std::string& label) const {
    const auto it = std::find(vocabulary_.begin(), vocabulary_.end(), label);
    if (it == vocabulary_.end()) throw DomainError(fmt::format("label '{}' is not in the vocabulary", label));
    return static_cast<std::size_t>(it - vocabulary_.begin());
}

DatasetStats Dataset::stats() const {
    DatasetStats s;
    for (const auto& r : records_) {
        ++s.per_label[r.emotion_label];
        ++s.per_participant[r.participant_id];
    }
    return s;
}

std::vector<std::string> Dataset::participants() const {
    std::set<std::string> ids;
    for (const auto& r : records_) ids.insert(r.participant_id);
    return {ids.begin(), ids.end()};
}

Dataset load_manifest(const std::string& path, const ManifestOptions& options) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open manifest '{}'", path));
    const auto base = fs::path(path).parent_path();
    const auto vocab = options.vocabulary.empty() ? default_vocabulary() : options.vocabulary;

    std::string line;
    if (!std::getline(in, line)) throw IoError(fmt::format("{}: empty manifest", path));
    const auto header = csv::split_line(line);
    if (header.size() != kManifestColumns.size() ||
        !std::equal(header.begin(), header.end(), kManifestColumns.begin())) {
        throw IoError(fmt::format("{}:1: header must be '{}'", path, fmt::join(kManifestColumns, ",")));
    }

    std::vector<SampleRecord> records;
    std::set<std::string> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto where = fmt::format("{}:{}", path, line_no);
        csv::Row row;
        try {
            row = csv::split_line(line);
        } catch (const IoError& e) {
            throw IoError(fmt::format("{}: {}", where, e.what()));
        }
        if (row.size() != kManifestColumns.size()) {
            throw IoError(fmt::format("{}: expected {} fields, found {}", where, kManifestColumns.size(), row.size()));
        }
        SampleRecord r;
        r.sample_id = row[0];
        r.participant_id = row[1];
        r.emotion_label = row[2];
        if (r.sample_id.empty()) throw IoError(fmt::format("{}: empty sample_id", where));
        if (r.participant_id.empty()) throw IoError(fmt::format("{}: empty participant_id", where));
        if (!seen.insert(r.sample_id).second) {
            throw DomainError(fmt::format("{}: duplicate sample_id '{}'", where, r.sample_id));
        }
        if (std::find(vocab.begin(), vocab.end(), r.emotion_label) == vocab.end()) {
            throw DomainError(fmt::format("{}: label '{}' is not in the vocabulary", where, r.emotion_label));
        }
        const double v = csv::parse_double(row[3], where + " valence");
        const double a = csv::parse_double(row[4], where + " arousal");
        const double d = csv::parse_double(row[5], where + " dominance");
        try {
            r.rating = VadRating(v, a, d);
        } catch (const DomainError& e) {
            throw DomainError(fmt::format("{}: {}", where, e.what()));
        }
        r.eeg_path = row[6];
        const fs::path p(r.eeg_path);
        r.resolved_eeg_path = (p.is_absolute() ? p : base / p).lexically_normal().string();
        if (options.check_files) check_segment_header(r.resolved_eeg_path, where);
        records.push_back(std::move(r));
    }
    return Dataset(std::move(records), vocab);
}

void write_manifest(const std::string& path, const Dataset& dataset) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write manifest '{}'", path));
    csv::write_row(out, csv::Row(kManifestColumns.begin(), kManifestColumns.end()));
    for (const auto& r : dataset.records()) {
        csv::write_row(out, {r.sample_id, r.participant_id, r.emotion_label, csv::format_double(r.rating.valence()),
                             csv::format_double(r.rating.arousal()), csv::format_double(r.rating.dominance()),
                             r.eeg_path});
    }
    if (!out) throw IoError(fmt::format("failed writing manifest '{}'", path));
}

Split split_stratified(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
    check_fraction(train_fraction);
    if (dataset.empty()) throw DomainError("cannot split an empty dataset");
    const auto recs = sorted_records(dataset);
    std::map<std::string, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < recs.size(); ++i) by_label[recs[i].emotion_label].push_back(i);

    std::vector<bool> to_train(recs.size(), false);
    std::uint32_t k = 0;
    for (auto& [label, idx] : by_label) {
        auto rng = stream(seed, 0x5712a7u, k++);
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(idx.size())));
        for (std::size_t i = 0; i < n_train; ++i) to_train[idx[i]] = true;
    }
    std::vector<SampleRecord> train, val;
    for (std::size_t i = 0; i < recs.size(); ++i) (to_train[i] ? train : val).push_back(recs[i]);
    if (train.empty() || val.empty()) {
        throw DomainError(fmt::format("stratified split of {} samples at fraction {} leaves an empty side",
                                      recs.size(), train_fraction));
    }
    return {Dataset(std::move(train), dataset.vocabulary()), Dataset(std::move(val), dataset.vocabulary())};
}

Split split_by_participant(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
    check_fraction(train_fraction);
    auto ids = dataset.participants();
    const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(ids.size())));
    if (n_train == 0 || n_train >= ids.size()) {
        throw DomainError(
            fmt::format("{} participants cannot be split disjointly at fraction {}", ids.size(), train_fraction));
    }
    auto rng = stream(seed, 0x9a27u);
    std::shuffle(ids.begin(), ids.end(), rng);
    const std::set<std::string> train_ids(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<SampleRecord> train, val;
    for (auto& r : sorted_records(dataset)) (train_ids.count(r.participant_id) ? train : val).push_back(r);
    return {Dataset(std::move(train), dataset.vocabulary()), Dataset(std::move(val), dataset.vocabulary())};
}

void SynthConfig::validate() const {
    if (class_count == 0) throw DomainError("synth: class_count must be positive");
    if (participants == 0) throw DomainError("synth: participants must be positive");
    if (events_per_participant == 0) throw DomainError("synth: events_per_participant must be positive");
    if (channel_count == 0) throw DomainError("synth: channel_count must be positive");
    if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) throw DomainError("synth: sample_rate must be positive");
    if (!(duration > 0.0) || !std::isfinite(duration)) throw DomainError("synth: duration must be positive");
    const auto& names = labels.empty() ? default_vocabulary() : labels;
    if (names.size() < class_count) {
        throw DomainError(fmt::format("synth: {} labels for {} classes", names.size(), class_count));
    }
    const auto means = class_vad_means.empty() ? default_class_vad_means() : class_vad_means;
    if (means.size() < class_count) {
        throw DomainError(fmt::format("synth: {} class VAD means for {} classes", means.size(), class_count));
    }
    for (const auto& m : means) {
        for (double x : m) {
            if (!(x >= kScaleMin && x <= kScaleMax)) throw DomainError(fmt::format("synth: class VAD mean {} outside [1, 9]", x));
        }
    }
    if (!(vad_sigma >= 0.0)) throw DomainError("synth: vad_sigma must be non-negative");
    if (signature_hz.empty()) throw DomainError("synth: signature_hz is empty");
    for (double f : signature_hz) {
        if (!(f > 0.0 && f < sample_rate / 2)) throw DomainError(fmt::format("synth: signature {} Hz outside (0, Nyquist)", f));
    }
    if (!(signal_amplitude >= 0.0)) throw DomainError("synth: signal_amplitude must be non-negative");
    if (!(signature_contrast >= 0.0 && signature_contrast <= 1.0)) {
        throw DomainError("synth: signature_contrast must lie in [0, 1]");
    }
    if (!(noise_sigma >= 0.0)) throw DomainError("synth: noise_sigma must be non-negative");
    if (!(participant_offset_sigma >= 0.0)) throw DomainError("synth: participant_offset_sigma must be non-negative");
}

void to_json(nlohmann::json& j, const SynthConfig& c) {
    j = {{"class_count", c.class_count},
         {"participants", c.participants},
         {"events_per_participant", c.events_per_participant},
         {"channel_count", c.channel_count},
         {"sample_rate", c.sample_rate},
         {"duration", c.duration},
         {"class_vad_means", c.class_vad_means.empty() ? default_class_vad_means() : c.class_vad_means},
         {"vad_sigma", c.vad_sigma},
         {"signature_hz", c.signature_hz},
         {"signal_amplitude", c.signal_amplitude},
         {"signature_contrast", c.signature_contrast},
         {"noise_sigma", c.noise_sigma},
         {"participant_offset_sigma", c.participant_offset_sigma},
         {"labels", c.labels.empty() ? default_vocabulary() : c.labels},
         {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, SynthConfig& c) {
    reject_unknown(j, {"class_count", "participants", "events_per_participant", "channel_count", "sample_rate",
                       "duration", "class_vad_means", "vad_sigma", "signature_hz", "signal_amplitude",
                       "signature_contrast", "noise_sigma", "participant_offset_sigma", "labels", "seed"});
    try {
        c.class_count = j.value("class_count", c.class_count);
        c.participants = j.value("participants", c.participants);
        c.events_per_participant = j.value("events_per_participant", c.events_per_participant);
        c.channel_count = j.value("channel_count", c.channel_count);
        c.sample_rate = j.value("sample_rate", c.sample_rate);
        c.duration = j.value("duration", c.duration);
        c.class_vad_means = j.value("class_vad_means", c.class_vad_means);
        c.vad_sigma = j.value("vad_sigma", c.vad_sigma);
        c.signature_hz = j.value("signature_hz", c.signature_hz);
        c.signal_amplitude = j.value("signal_amplitude", c.signal_amplitude);
        c.signature_contrast = j.value("signature_contrast", c.signature_contrast);
        c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
        c.participant_offset_sigma = j.value("participant_offset_sigma", c.participant_offset_sigma);
        c.labels = j.value("labels", c.labels);
        c.seed = j.value("seed", c.seed);
    } catch (const nlohmann::json::type_error& e) {
        throw DomainError(fmt::format("synth config: {}", e.what()));
    }
    c.validate();
}

SynthOutput synth_generate(const SynthConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    const auto& names = cfg.labels.empty() ? default_vocabulary() : cfg.labels;
    const auto means = cfg.class_vad_means.empty() ? default_class_vad_means() : cfg.class_vad_means;
    const std::vector<std::string> vocab(names.begin(), names.begin() + static_cast<std::ptrdiff_t>(cfg.class_count));
    const std::size_t n_freq = cfg.signature_hz.size();
    const std::size_t n_ch = cfg.channel_count;
    const auto n_samples = static_cast<std::size_t>(std::lround(cfg.duration * cfg.sample_rate));

    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "eeg", ec);
    if (ec) throw IoError(fmt::format("cannot create '{}': {}", out_dir, ec.message()));

    // class signatures
    std::vector<std::vector<double>> class_amp(cfg.class_count, std::vector<double>(n_freq));
    for (std::size_t k = 0; k < cfg.class_count; ++k) {
        auto rng = stream(cfg.seed, 0xc1a55u, static_cast<std::uint32_t>(k));
        std::uniform_real_distribution<double> u(1.0 - cfg.signature_contrast, 1.0 + cfg.signature_contrast);
        for (auto& a : class_amp[k]) a = cfg.signal_amplitude * u(rng);
    }
    // spatial patterns per signature frequency
    std::vector<std::vector<double>> spatial(n_freq, std::vector<double>(n_ch));
    {
        auto rng = stream(cfg.seed, 0x5ba7u);
        std::uniform_real_distribution<double> u(0.5, 1.5);
        for (auto& row : spatial)
            for (auto& w : row) w = u(rng);
    }
    // participant gain profiles
    std::vector<std::vector<double>> gain(cfg.participants, std::vector<double>(n_freq));
    for (std::size_t p = 0; p < cfg.participants; ++p) {
        auto rng = stream(cfg.seed, 0x9a1du, static_cast<std::uint32_t>(p));
        std::normal_distribution<double> g(0.0, 1.0);
        for (auto& x : gain[p]) x = std::exp(cfg.participant_offset_sigma * g(rng));
    }

    std::vector<SampleRecord> records;
    nlohmann::json truth = nlohmann::json::object();
    for (std::size_t p = 0; p < cfg.participants; ++p) {
        for (std::size_t e = 0; e < cfg.events_per_participant; ++e) {
            const std::size_t k = (p * cfg.events_per_participant + e) % cfg.class_count;
            auto rng = stream(cfg.seed, 0xe7e7u, static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(e));
            std::normal_distribution<double> g(0.0, 1.0);
            std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

            std::array<double, 3> vad{};
            for (std::size_t d = 0; d < 3; ++d) {
                vad[d] = std::clamp(means[k][d] + cfg.vad_sigma * g(rng), kScaleMin, kScaleMax);
            }

            EegRecording rec(n_ch, n_samples, cfg.sample_rate);
            for (std::size_t c = 0; c < n_ch; ++c) {
                auto ch = rec.channel(c);
                for (auto& x : ch) x = cfg.noise_sigma * g(rng);
            }
            for (std::size_t f = 0; f < n_freq; ++f) {
                const double amp = class_amp[k][f] * gain[p][f];
                const double w = 2.0 * std::numbers::pi * cfg.signature_hz[f] / cfg.sample_rate;
                const double ph = phase(rng);
                for (std::size_t t = 0; t < n_samples; ++t) {
                    const double s = amp * std::sin(w * static_cast<double>(t) + ph);
                    for (std::size_t c = 0; c < n_ch; ++c) rec.at(c, t) += spatial[f][c] * s;
                }
            }
            for (auto& x : vad) x = static_cast<double>(static_cast<float>(x));

            SampleRecord r;
            r.sample_id = fmt::format("p{:03d}_e{:03d}", p + 1, e + 1);
            r.participant_id = fmt::format("P{:03d}", p + 1);
            r.emotion_label = vocab[k];
            r.rating = VadRating(vad[0], vad[1], vad[2]);
            r.eeg_path = fmt::format("eeg/{}.eegs", r.sample_id);
            r.resolved_eeg_path = (fs::path(out_dir) / r.eeg_path).lexically_normal().string();
            write_segment(r.resolved_eeg_path, rec);

            truth[r.sample_id] = {{"class_index", k},
                                  {"emotion_label", r.emotion_label},
                                  {"participant_id", r.participant_id},
                                  {"vad_mean", means[k]},
                                  {"vad", vad},
                                  {"signature_hz", cfg.signature_hz},
                                  {"signature_amplitudes", class_amp[k]},
                                  {"participant_gain", gain[p]}};
            records.push_back(std::move(r));
        }
    }

    SynthOutput out;
    out.manifest_path = (fs::path(out_dir) / "manifest.csv").string();
    out.ground_truth_path = (fs::path(out_dir) / "ground_truth.json").string();
    out.dataset = Dataset(std::move(records), vocab);
    write_manifest(out.manifest_path, out.dataset);
    std::ofstream gt(out.ground_truth_path, std::ios::trunc);
    gt << truth.dump(2) << '\n';
    if (!gt) throw IoError(fmt::format("failed writing '{}'", out.ground_truth_path));
    return out;
}

}  // namespace fuzzvad
