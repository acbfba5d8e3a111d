// fuzzvad command-line tool.

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fuzzvad/clustering.hpp"
#include "fuzzvad/csv.hpp"
#include "fuzzvad/data.hpp"
#include "fuzzvad/dsp.hpp"
#include "fuzzvad/error.hpp"
#include "fuzzvad/fuzzy.hpp"
#include "fuzzvad/models.hpp"

using namespace fuzzvad;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c, const std::string& default_out) {
    c.out = default_out;
    cmd->add_option("--config", c.config, "JSON overrides merged over the defaults");
    cmd->add_option("--seed", c.seed, "Seed for every random stream of the run");
    cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
}

json config_overrides(const Common& c) { return c.config.empty() ? json::object() : read_json(c.config); }

template <class T>
T parse_config(const json& j, const std::string& what) {
    try {
        return j.get<T>();
    } catch (const json::exception& e) {
        throw DomainError(what + " config: " + e.what());
    }
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string fmt_num(double v) { return csv::format_double(v); }

std::vector<csv::Row> read_csv(const std::string& path, csv::Row& header) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty file, expected a header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    header = csv::split_line(line);
    std::vector<csv::Row> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto row = csv::split_line(line);
        if (row.size() != header.size()) {
            throw IoError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                          " fields, got " + std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::array<std::size_t, 3> vad_columns(const csv::Row& header, const std::string& path) {
    std::array<std::size_t, 3> idx{};
    const std::array<const char*, 3> names{"valence", "arousal", "dominance"};
    for (std::size_t d = 0; d < 3; ++d) {
        auto it = std::find(header.begin(), header.end(), names[d]);
        if (it == header.end()) throw IoError(path + ": missing column '" + names[d] + "'");
        idx[d] = static_cast<std::size_t>(it - header.begin());
    }
    return idx;
}

VadRating rating_of(const csv::Row& row, const std::array<std::size_t, 3>& idx, const std::string& where) {
    double v[3];
    for (std::size_t d = 0; d < 3; ++d) {
        char* end = nullptr;
        const auto& f = row[idx[d]];
        v[d] = std::strtod(f.c_str(), &end);
        if (f.empty() || *end != '\0') throw DomainError(where + ": malformed rating '" + f + "'");
    }
    try {
        return VadRating(v[0], v[1], v[2]);
    } catch (const DomainError& e) {
        throw DomainError(where + ": " + e.what());
    }
}

// ---------------------------------------------------------------- fuzzify

struct FuzzifyArgs {
    Common common;
    std::string input;
    std::string params;
    std::string mode = "type2";
    bool dump_defaults = false;
};

int cmd_fuzzify(const FuzzifyArgs& a) {
    ensure_dir(a.common.out);
    if (a.dump_defaults) {
        write_json(fs::path(a.common.out) / "membership_defaults.json", json(MembershipParams::defaults()));
        spdlog::info("wrote membership defaults");
        if (a.input.empty()) return 0;
    }
    if (a.input.empty()) throw UsageError("fuzzify needs --input");
    MembershipParams params = MembershipParams::defaults();
    json overrides = config_overrides(a.common);
    if (!a.params.empty()) overrides = read_json(a.params);
    if (!overrides.empty()) params = parse_config<MembershipParams>(overrides, "membership");
    params.validate();
    const Fuzzifier fz(params);

    csv::Row header;
    const auto rows = read_csv(a.input, header);
    const auto idx = vad_columns(header, a.input);

    std::vector<std::string> names;
    std::optional<Family> family;
    if (a.mode == "type2") {
        const auto n = Type2FuzzyVector::names();
        names.assign(n.begin(), n.end());
    } else if (a.mode == "type1-umf" || a.mode == "type1-lmf") {
        family = a.mode == "type1-umf" ? Family::Umf : Family::Lmf;
        const auto n = Fuzzifier::type1_names(*family);
        names.assign(n.begin(), n.end());
    } else {
        throw UsageError("unknown mode '" + a.mode + "' (expected type2, type1-umf or type1-lmf)");
    }

    std::ostringstream out;
    csv::Row h = header;
    h.insert(h.end(), names.begin(), names.end());
    csv::write_row(out, h);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto r = rating_of(rows[i], idx, a.input + ":" + std::to_string(i + 2));
        csv::Row row = rows[i];
        if (family) {
            for (double v : fz.type1(r, *family)) row.push_back(fmt_num(v));
        } else {
            for (double v : fz.type2(r).entries) row.push_back(fmt_num(v));
        }
        csv::write_row(out, row);
    }
    write_text(fs::path(a.common.out) / "fuzzified.csv", out.str());
    spdlog::info("fuzzified {} rows ({})", rows.size(), a.mode);
    return 0;
}

// ---------------------------------------------------------------- cluster

struct ClusterArgs {
    Common common;
    std::string input;
    int c_min = 2;
    int c_max = 10;
    double fuzzifier = 2.0;
    bool plot = false;
};

int cmd_cluster(const ClusterArgs& a) {
    if (a.c_min > a.c_max) throw UsageError("--c-min must not exceed --c-max");
    if (a.c_min < 2) throw UsageError("--c-min must be at least 2");
    FcmConfig fc;
    fc.fuzzifier = a.fuzzifier;
    double alpha = 1.0;
    const json over = config_overrides(a.common);
    for (const auto& [k, v] : over.items()) {
        if (k == "fuzzifier") fc.fuzzifier = v.get<double>();
        else if (k == "tolerance") fc.tolerance = v.get<double>();
        else if (k == "max_iterations") fc.max_iterations = v.get<int>();
        else if (k == "alpha") alpha = v.get<double>();
        else throw DomainError("cluster config: unknown key '" + k + "'");
    }
    fc.seed = a.common.seed.value_or(0);
    fc.validate();

    csv::Row header;
    const auto rows = read_csv(a.input, header);
    const auto idx = vad_columns(header, a.input);
    const auto label_col = std::find(header.begin(), header.end(), "emotion_label");
    std::vector<Point3> pts;
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto r = rating_of(rows[i], idx, a.input + ":" + std::to_string(i + 2));
        pts.push_back(r.values());
        labels.push_back(label_col == header.end() ? "" : rows[i][static_cast<std::size_t>(label_col - header.begin())]);
    }

    const auto sweep = sweep_clusters(pts, a.c_min, a.c_max, fc, alpha);
    const auto best = std::max_element(sweep.begin(), sweep.end(),
                                       [](const SweepRow& x, const SweepRow& y) { return x.silhouette < y.silhouette; });

    ensure_dir(a.common.out);
    const fs::path out(a.common.out);
    std::ostringstream s;
    csv::write_row(s, {"clusters", "fuzzy_silhouette", "iterations", "objective"});
    for (const auto& r : sweep) {
        csv::write_row(s, {std::to_string(r.clusters), fmt_num(r.silhouette), std::to_string(r.result.iterations_run),
                           fmt_num(r.result.objective_trace.back())});
    }
    write_text(out / "sweep.csv", s.str());

    std::ostringstream c;
    csv::write_row(c, {"cluster", "valence", "arousal", "dominance"});
    for (std::size_t j = 0; j < best->result.centroids.size(); ++j) {
        const auto& v = best->result.centroids[j];
        csv::write_row(c, {std::to_string(j), fmt_num(v[0]), fmt_num(v[1]), fmt_num(v[2])});
    }
    write_text(out / "centroids.csv", c.str());

    std::ostringstream m;
    csv::Row mh{"row", "emotion_label", "cluster"};
    for (int j = 0; j < best->clusters; ++j) mh.push_back("u" + std::to_string(j));
    csv::write_row(m, mh);
    const auto hard = best->result.hard_assignments();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        csv::Row row{std::to_string(i + 1), labels[i], std::to_string(hard[i])};
        for (double u : best->result.memberships.row(i)) row.push_back(fmt_num(u));
        csv::write_row(m, row);
    }
    write_text(out / "memberships.csv", m.str());

    const auto rep = cluster_report(best->result, labels);
    json dist = json::object();
    for (const auto& [label, counts] : rep.label_distribution) dist[label] = counts;
    json sweep_json = json::array();
    for (const auto& r : sweep) sweep_json.push_back({{"clusters", r.clusters}, {"fuzzy_silhouette", r.silhouette}});
    write_json(out / "report.json", {{"command", "cluster"},
                                     {"input", a.input},
                                     {"seed", fc.seed},
                                     {"config",
                                      {{"c_min", a.c_min},
                                       {"c_max", a.c_max},
                                       {"fuzzifier", fc.fuzzifier},
                                       {"tolerance", fc.tolerance},
                                       {"max_iterations", fc.max_iterations},
                                       {"alpha", alpha}}},
                                     {"points", pts.size()},
                                     {"sweep", sweep_json},
                                     {"best_clusters", best->clusters},
                                     {"centroids", best->result.centroids},
                                     {"cluster_counts", rep.cluster_counts},
                                     {"label_distribution", dist}});
    if (a.plot) {
        write_text(out / "sweep.gp",
                   "set datafile separator ','\nset xlabel 'clusters'\nset ylabel 'fuzzy silhouette'\n"
                   "set terminal pngcairo\nset output 'sweep.png'\n"
                   "plot 'sweep.csv' using 1:2 skip 1 with linespoints title 'FS'\n");
    }
    spdlog::info("best cluster count {} (FS {:.4f})", best->clusters, best->silhouette);
    return 0;
}

// ---------------------------------------------------------------- preprocess

struct PreprocessArgs {
    Common common;
    std::string input;
    std::vector<double> clicks;
    bool spectrograms = false;
};

int cmd_preprocess(const PreprocessArgs& a) {
    BandpassConfig bp;
    SegmentConfig sc;
    StftConfig st;
    double qc_threshold = 100.0;
    double max_hz = 40.0;
    for (const auto& [k, v] : config_overrides(a.common).items()) {
        if (k == "low_hz") bp.low_hz = v.get<double>();
        else if (k == "high_hz") bp.high_hz = v.get<double>();
        else if (k == "order") bp.order = v.get<int>();
        else if (k == "zero_phase") bp.zero_phase = v.get<bool>();
        else if (k == "baseline_start") sc.baseline_start = v.get<double>();
        else if (k == "baseline_end") sc.baseline_end = v.get<double>();
        else if (k == "event_start_offset") sc.event_start_offset = v.get<double>();
        else if (k == "event_end_offset") sc.event_end_offset = v.get<double>();
        else if (k == "qc_threshold") qc_threshold = v.get<double>();
        else if (k == "max_hz") max_hz = v.get<double>();
        else if (k == "window_length") st.window_length = v.get<std::size_t>();
        else if (k == "hop") st.hop = v.get<std::size_t>();
        else if (k == "fft_length") st.fft_length = v.get<std::size_t>();
        else throw DomainError("preprocess config: unknown key '" + k + "'");
    }
    const auto raw = read_segment(a.input);
    if (raw.sample_count() == 0 || raw.channel_count() == 0) throw IoError(a.input + ": recording has no samples");

    const auto filtered = butterworth_bandpass(average_rereference(raw), bp);
    ensure_dir(a.common.out);
    const fs::path out(a.common.out);

    bool truncated = false;
    const auto baseline = extract_baseline(filtered, sc, &truncated);
    write_segment((out / "baseline.eegs").string(), baseline);

    json events = json::array();
    json skipped = json::array();
    std::size_t k = 0;
    for (double click : a.clicks) {
        try {
            const auto ev = extract_event(filtered, click, sc);
            ++k;
            char name[32];
            std::snprintf(name, sizeof name, "event_%03zu", k);
            write_segment((out / (std::string(name) + ".eegs")).string(), ev);
            json e{{"click", click}, {"file", std::string(name) + ".eegs"}};
            if (a.spectrograms) {
                write_spectrogram((out / (std::string(name) + ".spgs")).string(), spectrogram_stack(ev, st, max_hz),
                                  ev.sample_rate());
                e["spectrogram"] = std::string(name) + ".spgs";
            }
            events.push_back(e);
        } catch (const DomainError& e) {
            spdlog::warn("click at {} s skipped: {}", click, e.what());
            skipped.push_back({{"click", click}, {"reason", e.what()}});
        }
    }

    json channels = json::array();
    for (const auto& q : amplitude_qc(filtered, qc_threshold))
        channels.push_back({{"channel", q.channel}, {"peak_abs", q.peak_abs}, {"flagged", q.flagged}});
    write_json(out / "qc.json", {{"command", "preprocess"},
                                 {"input", a.input},
                                 {"config",
                                  {{"low_hz", bp.low_hz},
                                   {"high_hz", bp.high_hz},
                                   {"order", bp.order},
                                   {"zero_phase", bp.zero_phase},
                                   {"baseline_start", sc.baseline_start},
                                   {"baseline_end", sc.baseline_end},
                                   {"event_start_offset", sc.event_start_offset},
                                   {"event_end_offset", sc.event_end_offset},
                                   {"qc_threshold", qc_threshold},
                                   {"max_hz", max_hz},
                                   {"window_length", st.window_length},
                                   {"hop", st.hop},
                                   {"fft_length", st.fft_length}}},
                                 {"channels", channels},
                                 {"baseline", {{"file", "baseline.eegs"}, {"truncated", truncated}}},
                                 {"events", events},
                                 {"skipped", skipped}});
    spdlog::info("{} events written, {} skipped", events.size(), skipped.size());
    return 0;
}

// ---------------------------------------------------------------- synth

int cmd_synth(const Common& c) {
    auto cfg = parse_config<SynthConfig>(config_overrides(c), "synth");
    if (c.seed) cfg.seed = *c.seed;
    cfg.validate();
    const auto out = synth_generate(cfg, c.out);
    write_json(fs::path(c.out) / "synth_config.json", json(cfg));
    spdlog::info("wrote {} samples to {}", out.dataset.size(), out.manifest_path);
    return 0;
}

// ---------------------------------------------------------------- models

struct ModelArgs {
    Common common;
    std::string manifest = "manifest.csv";
    std::string variant;
    std::optional<std::size_t> epochs;
    bool plot = false;
};

ModelConfig model_config(const ModelArgs& a) {
    auto cfg = parse_config<ModelConfig>(config_overrides(a.common), "model");
    if (!a.variant.empty()) cfg.variant = variant_from_string(a.variant);
    if (a.epochs) cfg.training.epochs = *a.epochs;
    if (a.common.seed) cfg.training.seed = *a.common.seed;
    cfg.validate();
    return cfg;
}

void loss_plot(const fs::path& dir) {
    write_text(dir / "loss.gp",
               "set xlabel 'epoch'\nset ylabel 'loss'\nset terminal pngcairo\nset output 'loss.png'\n"
               "plot '< jq -r \".epoch_losses[]\" report.json' using ($0+1):1 with lines title 'training loss'\n");
}

int cmd_train(const ModelArgs& a) {
    const auto cfg = model_config(a);
    const auto ds = load_manifest(a.manifest);
    spdlog::info("training {} on {} samples", to_string(cfg.variant), ds.size());
    auto res = run_experiment(ds, cfg);
    res.report.extra["manifest"] = a.manifest;
    write_report(a.common.out, res.report);
    res.model.save((fs::path(a.common.out) / "model").string(), {{"manifest", a.manifest}});
    if (a.plot) loss_plot(a.common.out);
    spdlog::info("validation accuracy {:.4f}", res.report.accuracy);
    return 0;
}

struct EvalArgs {
    Common common;
    std::string manifest = "manifest.csv";
    std::string model;
};

int cmd_eval(const EvalArgs& a) {
    const auto model = EmotionModel::load(a.model);
    const auto& cfg = model.config();
    const auto ds = load_manifest(a.manifest);
    const auto samples = prepare_samples(ds, cfg.stft, cfg.max_hz);
    for (const auto& s : samples) {
        if (s.label >= cfg.class_count) throw DomainError("label index outside the model's class count");
    }
    const auto ev = evaluate(model, samples);
    TrainReport rep;
    rep.variant = to_string(cfg.variant);
    rep.seed = cfg.training.seed;
    rep.accuracy = ev.accuracy;
    rep.confusion = ev.confusion;
    rep.class_names = ds.vocabulary();
    rep.class_names.resize(cfg.class_count);
    rep.validation_count = samples.size();
    rep.config = cfg;
    rep.extra = {{"manifest", a.manifest}, {"model", a.model}, {"predictions", ev.predictions}};
    write_report(a.common.out, rep);
    spdlog::info("accuracy {:.4f} on {} samples", ev.accuracy, samples.size());
    return 0;
}

struct CrossArgs {
    ModelArgs model;
    std::string pair = "all";
    std::string arm = "both";
    std::size_t seeds = 1;
};

int cmd_crosssub(const CrossArgs& a) {
    const auto base = model_config(a.model);
    if (a.seeds == 0) throw UsageError("--seeds must be at least 1");
    std::vector<GroupPair> pairs;
    if (a.pair == "all") pairs = {GroupPair::G1vG2, GroupPair::G1vG3, GroupPair::G2vG3};
    else pairs = {group_pair_from_string(a.pair)};
    std::vector<bool> arms;
    if (a.arm == "both") arms = {true, false};
    else if (a.arm == "with") arms = {true};
    else if (a.arm == "without") arms = {false};
    else throw UsageError("--arm must be both, with or without");

    const auto ds = load_manifest(a.model.manifest);
    const auto prepared = prepare_samples(ds, base.stft, base.max_hz);
    const fs::path out(a.model.common.out);
    ensure_dir(out.string());
    std::ostringstream summary;
    csv::write_row(summary, {"pair", "with_fuzzy", "seed", "accuracy", "train_participants", "validation_participants",
                             "participants_disjoint"});
    for (auto pair : pairs) {
        for (bool with : arms) {
            for (std::size_t k = 0; k < a.seeds; ++k) {
                auto cfg = base;
                cfg.training.seed = base.training.seed + k;
                const auto res = cross_subject_experiment(ds, prepared, pair, with, cfg);
                auto dir = out / to_string(pair) / (with ? "with_fuzzy" : "without_fuzzy");
                if (a.seeds > 1) dir /= "seed_" + std::to_string(cfg.training.seed);
                write_report(dir.string(), res.report);
                csv::write_row(summary, {to_string(pair), with ? "true" : "false", std::to_string(cfg.training.seed),
                                         fmt_num(res.report.accuracy),
                                         std::to_string(res.split.train_participants.size()),
                                         std::to_string(res.split.validation_participants.size()),
                                         res.split.disjoint() ? "true" : "false"});
                spdlog::info("{} {} seed {}: {:.4f}", to_string(pair), with ? "with fuzzy" : "without fuzzy",
                             cfg.training.seed, res.report.accuracy);
            }
        }
    }
    write_text(out / "summary.csv", summary.str());
    return 0;
}

struct AblateArgs {
    ModelArgs model;
    std::size_t seeds = 1;
};

int cmd_ablate(const AblateArgs& a) {
    const auto base = model_config(a.model);
    if (a.seeds == 0) throw UsageError("--seeds must be at least 1");
    const auto ds = load_manifest(a.model.manifest);
    const auto prepared = prepare_samples(ds, base.stft, base.max_hz);
    const fs::path out(a.model.common.out);
    ensure_dir(out.string());
    const std::vector<Variant> modes{Variant::Model1Type2, Variant::CrispVad, Variant::NoVad, Variant::Type1Umf,
                                     Variant::Type1Lmf};
    std::ostringstream table;
    csv::Row header{"variant", "mean_accuracy"};
    for (std::size_t k = 0; k < a.seeds; ++k) header.push_back("seed_" + std::to_string(base.training.seed + k));
    csv::write_row(table, header);
    for (auto v : modes) {
        csv::Row row{to_string(v)};
        double sum = 0.0;
        for (std::size_t k = 0; k < a.seeds; ++k) {
            auto cfg = base;
            cfg.variant = v;
            cfg.training.seed = base.training.seed + k;
            const auto res = run_experiment(ds, prepared, cfg);
            auto dir = out / to_string(v);
            if (a.seeds > 1) dir /= "seed_" + std::to_string(cfg.training.seed);
            write_report(dir.string(), res.report);
            sum += res.report.accuracy;
            row.push_back(fmt_num(res.report.accuracy));
            spdlog::info("{} seed {}: {:.4f}", to_string(v), cfg.training.seed, res.report.accuracy);
        }
        row.insert(row.begin() + 1, fmt_num(sum / static_cast<double>(a.seeds)));
        csv::write_row(table, row);
    }
    write_text(out / "ablation.csv", table.str());
    return 0;
}

void add_model_flags(CLI::App* cmd, ModelArgs& m, const std::string& out) {
    add_common(cmd, m.common, out);
    cmd->add_option("--manifest", m.manifest, "Dataset manifest CSV")->capture_default_str();
    cmd->add_option("--variant", m.variant, "model1, model2, model3, crisp_vad, no_vad, type1_umf or type1_lmf");
    cmd->add_option("--epochs", m.epochs, "Override training.epochs");
}

const char* kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::Usage: return "usage";
        case ErrorKind::Io: return "io";
        case ErrorKind::Domain: return "domain";
        case ErrorKind::Numeric: return "numeric";
    }
    return "unknown";
}

int fail(ErrorKind kind, const std::string& message) {
    json err{{"error", {{"kind", kind_name(kind)}, {"code", static_cast<int>(kind)}, {"message", message}}}};
    std::cerr << err.dump() << std::endl;
    return static_cast<int>(kind);
}

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("fuzzvad");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("FUZZVAD_LOG")) {
        const std::string lvl = env;
        if (lvl == "error") spdlog::set_level(spdlog::level::err);
        else if (lvl == "warn") spdlog::set_level(spdlog::level::warn);
        else if (lvl == "info") spdlog::set_level(spdlog::level::info);
        else if (lvl == "debug") spdlog::set_level(spdlog::level::debug);
        else spdlog::warn("ignoring FUZZVAD_LOG='{}'", lvl);
    }
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"Fuzzy VAD emotion recognition toolkit"};
    app.require_subcommand(1);

    FuzzifyArgs fz;
    auto* c_fz = app.add_subcommand("fuzzify", "Append membership degrees to a ratings CSV");
    add_common(c_fz, fz.common, "fuzzify_out");
    c_fz->add_option("--input", fz.input, "CSV with valence, arousal and dominance columns");
    c_fz->add_option("--params", fz.params, "Membership parameter JSON");
    c_fz->add_option("--mode", fz.mode, "type2, type1-umf or type1-lmf")->capture_default_str();
    c_fz->add_flag("--dump-defaults", fz.dump_defaults, "Write the default membership parameters");

    ClusterArgs cl;
    auto* c_cl = app.add_subcommand("cluster", "Fuzzy C-means sweep over the ratings");
    add_common(c_cl, cl.common, "cluster_out");
    c_cl->add_option("--input", cl.input, "CSV with valence, arousal and dominance columns")->required();
    c_cl->add_option("--c-min", cl.c_min)->capture_default_str();
    c_cl->add_option("--c-max", cl.c_max)->capture_default_str();
    c_cl->add_option("-m,--fuzzifier", cl.fuzzifier)->capture_default_str();
    c_cl->add_flag("--plot", cl.plot, "Also write a gnuplot script");

    PreprocessArgs pp;
    auto* c_pp = app.add_subcommand("preprocess", "Re-reference, filter and segment a raw recording");
    add_common(c_pp, pp.common, "preprocess_out");
    c_pp->add_option("--input", pp.input, "Raw recording in EEGS format")->required();
    c_pp->add_option("--clicks", pp.clicks, "Event click times in seconds")->delimiter(',');
    c_pp->add_flag("--spectrograms", pp.spectrograms, "Also write SPGS spectrogram stacks");

    Common sy;
    auto* c_sy = app.add_subcommand("synth", "Generate the synthetic benchmark");
    add_common(c_sy, sy, "synth_out");

    ModelArgs tr;
    auto* c_tr = app.add_subcommand("train", "Train and validate one model variant");
    add_model_flags(c_tr, tr, "train_out");
    c_tr->add_flag("--plot", tr.plot, "Also write a gnuplot script");

    EvalArgs ev;
    auto* c_ev = app.add_subcommand("eval", "Evaluate a saved model on a manifest");
    add_common(c_ev, ev.common, "eval_out");
    c_ev->add_option("--manifest", ev.manifest)->capture_default_str();
    c_ev->add_option("--model", ev.model, "Model directory written by train")->required();

    CrossArgs cs;
    auto* c_cs = app.add_subcommand("crosssub", "Participant-disjoint two-group experiments");
    add_model_flags(c_cs, cs.model, "crosssub_out");
    c_cs->add_option("--pair", cs.pair, "g1_vs_g2, g1_vs_g3, g2_vs_g3 or all")->capture_default_str();
    c_cs->add_option("--arm", cs.arm, "both, with or without")->capture_default_str();
    c_cs->add_option("--seeds", cs.seeds, "Consecutive seeds per arm")->capture_default_str();

    AblateArgs ab;
    auto* c_ab = app.add_subcommand("ablate", "Model-1 against the four ablation modes");
    add_model_flags(c_ab, ab.model, "ablate_out");
    c_ab->add_option("--seeds", ab.seeds, "Consecutive seeds per mode")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(ErrorKind::Usage, e.what());
    }

    try {
        if (*c_fz) return cmd_fuzzify(fz);
        if (*c_cl) return cmd_cluster(cl);
        if (*c_pp) return cmd_preprocess(pp);
        if (*c_sy) return cmd_synth(sy);
        if (*c_tr) return cmd_train(tr);
        if (*c_ev) return cmd_eval(ev);
        if (*c_cs) return cmd_crosssub(cs);
        if (*c_ab) return cmd_ablate(ab);
    } catch (const Error& e) {
        return fail(e.kind(), e.what());
    } catch (const json::exception& e) {
        return fail(ErrorKind::Domain, e.what());
    } catch (const std::exception& e) {
        return fail(ErrorKind::Io, e.what());
    }
    return 0;
}
