#pragma once

// Dataset manifests, splits and the seeded synthetic benchmark generator.

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "fuzzvad/fuzzy.hpp"

namespace fuzzvad {

/// Exact manifest header.
inline constexpr std::array<const char*, 7> kManifestColumns{"sample_id", "participant_id", "emotion_label", "valence",
                                                              "arousal",   "dominance",      "eeg_path"};

/// Default 24-label vocabulary. Index order is the class index.
const std::vector<std::string>& default_vocabulary();

struct SampleRecord {
    std::string sample_id;
    std::string participant_id;
    std::string emotion_label;
    VadRating rating;
    /// Absolute or manifest-relative path as written in the manifest.
    std::string eeg_path;
    /// eeg_path resolved against the manifest directory.
    std::string resolved_eeg_path;
};

struct DatasetStats {
    std::map<std::string, std::size_t> per_label;
    std::map<std::string, std::size_t> per_participant;
};

class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<SampleRecord> records, std::vector<std::string> vocabulary);

    const std::vector<SampleRecord>& records() const noexcept { return records_; }
    const std::vector<std::string>& vocabulary() const noexcept { return vocabulary_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    const SampleRecord& operator[](std::size_t i) const { return records_.at(i); }

    /// Class index of a label; throws DomainError for labels outside the vocabulary.
    std::size_t label_index(const std::string& label) const;
    DatasetStats stats() const;
    std::vector<std::string> participants() const;

    /// Records whose label passes the predicate, same vocabulary.
    template <class Pred>
    Dataset filter(Pred&& keep) const {
        std::vector<SampleRecord> out;
        for (const auto& r : records_) {
            if (keep(r)) out.push_back(r);
        }
        return Dataset(std::move(out), vocabulary_);
    }

private:
    std::vector<SampleRecord> records_;
    std::vector<std::string> vocabulary_;
};

struct ManifestOptions {
    /// Empty means default_vocabulary().
    std::vector<std::string> vocabulary;
    /// Open every referenced segment file and check its header.
    bool check_files = true;
};

/// Parses and validates a manifest CSV. Errors name the offending line:
/// IoError for parse or missing-file problems, DomainError for bad values.
Dataset load_manifest(const std::string& path, const ManifestOptions& options = {});

void write_manifest(const std::string& path, const Dataset& dataset);

struct Split {
    Dataset train;
    Dataset validation;
};

/// Per-class split after sorting by sample_id: round(fraction * n_class)
/// records of each class go to training.
Split split_stratified(const Dataset& dataset, double train_fraction, std::uint64_t seed);

/// Participant-disjoint split: round(fraction * n_participants) participants train.
Split split_by_participant(const Dataset& dataset, double train_fraction, std::uint64_t seed);

struct SynthConfig {
    std::size_t class_count = 24;
    std::size_t participants = 40;
    std::size_t events_per_participant = 12;
    std::size_t channel_count = 32;
    double sample_rate = 250.0;
    double duration = 7.0;
    /// Class VAD means; empty means the default cuboid arrangement.
    std::vector<std::array<double, 3>> class_vad_means;
    double vad_sigma = 0.4;
    /// Frequencies carrying the class band-power signatures.
    std::vector<double> signature_hz{5.859375, 9.765625, 13.671875, 17.578125, 21.484375, 25.390625, 31.25, 37.109375};
    double signal_amplitude = 4.0;
    /// Per-class amplitudes drawn from [1 - contrast, 1 + contrast].
    double signature_contrast = 0.8;
    double noise_sigma = 8.0;
    /// Per-participant log-gain spread across the signature frequencies.
    double participant_offset_sigma = 0.3;
    std::vector<std::string> labels;  // empty means default_vocabulary()
    std::uint64_t seed = 7;

    void validate() const;
};

void to_json(nlohmann::json& j, const SynthConfig& c);
/// Missing keys keep defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, SynthConfig& c);

/// Default class means: level values {1.5, 5.0, 8.5} per axis, each class on
/// its own Low/Med/High cell.
std::vector<std::array<double, 3>> default_class_vad_means();

struct SynthOutput {
    std::string manifest_path;
    std::string ground_truth_path;
    Dataset dataset;
};

/// Writes out_dir/manifest.csv, out_dir/eeg/<sample_id>.eegs and
/// out_dir/ground_truth.json. Output is byte-identical for a fixed config.
SynthOutput synth_generate(const SynthConfig& cfg, const std::string& out_dir);

}  // namespace fuzzvad
