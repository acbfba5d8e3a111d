#include "fuzzvad/models.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "fuzzvad/csv.hpp"
#include "fuzzvad/error.hpp"
#include "fuzzvad/lattice.hpp"
#include "fuzzvad/nn/checkpoint.hpp"

namespace fuzzvad {

namespace fs = std::filesystem;
using nn::Graph;
using nn::Tensor;

namespace {

constexpr std::array<std::pair<Variant, const char*>, 7> kVariantNames{{
    {Variant::Model1Type2, "model1"},
    {Variant::Model2FcmClusters, "model2"},
    {Variant::Model3CuboidDual, "model3"},
    {Variant::CrispVad, "crisp_vad"},
    {Variant::NoVad, "no_vad"},
    {Variant::Type1Umf, "type1_umf"},
    {Variant::Type1Lmf, "type1_lmf"},
}};

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return splitmix(splitmix(splitmix(seed) ^ a) ^ b);
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
    if (!j.is_object()) throw DomainError(fmt::format("{} must be a JSON object", where));
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
            throw DomainError(fmt::format("{}: unknown key '{}'", where, it.key()));
        }
    }
}

std::string window_name(WindowKind k) {
    switch (k) {
        case WindowKind::Hann: return "hann";
        case WindowKind::Hamming: return "hamming";
        case WindowKind::Rectangular: return "rectangular";
    }
    return "hann";
}

WindowKind window_from_name(const std::string& s) {
    if (s == "hann") return WindowKind::Hann;
    if (s == "hamming") return WindowKind::Hamming;
    if (s == "rectangular") return WindowKind::Rectangular;
    throw DomainError(fmt::format("unknown window '{}'", s));
}

bool has_fuzzy_branch(Variant v) { return v != Variant::NoVad; }

std::size_t dense_count(std::size_t in, std::size_t out) { return in * out + out; }

std::size_t argmax(std::span<const double> v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

Point3 to_point(const VadRating& r) { return {r.valence(), r.arousal(), r.dominance()}; }

}  // namespace

std::string to_string(Variant v) {
    for (const auto& [k, name] : kVariantNames)
        if (k == v) return name;
    return "model1";
}

Variant variant_from_string(const std::string& name) {
    for (const auto& [k, n] : kVariantNames)
        if (name == n) return k;
    throw DomainError(fmt::format("unknown variant '{}'", name));
}

void Architecture::validate() const {
    if (conv1_filters == 0 || conv2_filters == 0) throw DomainError("architecture: filter counts must be positive");
    if (kernel == 0 || pool == 0) throw DomainError("architecture: kernel and pool must be positive");
    if (lstm1_hidden == 0 || lstm2_hidden == 0) throw DomainError("architecture: LSTM sizes must be positive");
    for (auto h : fuzzy_hidden)
        if (h == 0) throw DomainError("architecture: fuzzy hidden widths must be positive");
    if (fuzzy_out == 0) throw DomainError("architecture: fuzzy_out must be positive");
}

void TrainingConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw DomainError("training: learning_rate must be >= 0");
    if (batch_size == 0) throw DomainError("training: batch_size must be positive");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw DomainError("training: dropout_rate must lie in [0, 1)");
    if (repeat_count == 0) throw DomainError("training: repeat_count must be >= 1");
}

void ModelConfig::validate() const {
    if (class_count < 2) throw DomainError("model: class_count must be >= 2");
    if (variant == Variant::Model2FcmClusters && fcm_clusters < 2) throw DomainError("model: fcm_clusters must be >= 2");
    if (!(fcm_fuzzifier > 1.0)) throw DomainError("model: fcm_fuzzifier must exceed 1");
    if (!(dual_loss_weight >= 0.0) || !std::isfinite(dual_loss_weight)) {
        throw DomainError("model: dual_loss_weight must be >= 0");
    }
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw DomainError("model: train_fraction must lie in (0, 1)");
    if (!(max_hz > 0.0)) throw DomainError("model: max_hz must be positive");
    architecture.validate();
    training.validate();
    membership.validate();
    stft.validate();
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
    nlohmann::json membership;
    to_json(membership, c.membership);
    j = {{"variant", to_string(c.variant)},
         {"class_count", c.class_count},
         {"fcm_clusters", c.fcm_clusters},
         {"fcm_fuzzifier", c.fcm_fuzzifier},
         {"dual_loss_weight", c.dual_loss_weight},
         {"train_fraction", c.train_fraction},
         {"architecture",
          {{"conv1_filters", c.architecture.conv1_filters},
           {"conv2_filters", c.architecture.conv2_filters},
           {"kernel", c.architecture.kernel},
           {"pool", c.architecture.pool},
           {"lstm1_hidden", c.architecture.lstm1_hidden},
           {"lstm2_hidden", c.architecture.lstm2_hidden},
           {"fuzzy_hidden", c.architecture.fuzzy_hidden},
           {"fuzzy_out", c.architecture.fuzzy_out}}},
         {"training",
          {{"learning_rate", c.training.learning_rate},
           {"batch_size", c.training.batch_size},
           {"epochs", c.training.epochs},
           {"dropout_rate", c.training.dropout_rate},
           {"repeat_count", c.training.repeat_count},
           {"seed", c.training.seed},
           {"optimizer",
            {{"kind", nn::to_string(c.training.optimizer.kind)},
             {"beta1", c.training.optimizer.beta1},
             {"beta2", c.training.optimizer.beta2},
             {"epsilon", c.training.optimizer.epsilon}}}}},
         {"membership", membership},
         {"stft",
          {{"window_length", c.stft.window_length},
           {"hop", c.stft.hop},
           {"window", window_name(c.stft.window)},
           {"fft_length", c.stft.fft_length}}},
         {"max_hz", c.max_hz}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
    reject_unknown(j, {"variant", "class_count", "fcm_clusters", "fcm_fuzzifier", "dual_loss_weight", "train_fraction",
                       "architecture", "training", "membership", "stft", "max_hz"},
                   "model config");
    try {
        if (j.contains("variant")) c.variant = variant_from_string(j.at("variant").get<std::string>());
        c.class_count = j.value("class_count", c.class_count);
        c.fcm_clusters = j.value("fcm_clusters", c.fcm_clusters);
        c.fcm_fuzzifier = j.value("fcm_fuzzifier", c.fcm_fuzzifier);
        c.dual_loss_weight = j.value("dual_loss_weight", c.dual_loss_weight);
        c.train_fraction = j.value("train_fraction", c.train_fraction);
        c.max_hz = j.value("max_hz", c.max_hz);
        if (j.contains("architecture")) {
            const auto& a = j.at("architecture");
            reject_unknown(a, {"conv1_filters", "conv2_filters", "kernel", "pool", "lstm1_hidden", "lstm2_hidden",
                               "fuzzy_hidden", "fuzzy_out"},
                           "architecture");
            auto& A = c.architecture;
            A.conv1_filters = a.value("conv1_filters", A.conv1_filters);
            A.conv2_filters = a.value("conv2_filters", A.conv2_filters);
            A.kernel = a.value("kernel", A.kernel);
            A.pool = a.value("pool", A.pool);
            A.lstm1_hidden = a.value("lstm1_hidden", A.lstm1_hidden);
            A.lstm2_hidden = a.value("lstm2_hidden", A.lstm2_hidden);
            A.fuzzy_hidden = a.value("fuzzy_hidden", A.fuzzy_hidden);
            A.fuzzy_out = a.value("fuzzy_out", A.fuzzy_out);
        }
        if (j.contains("training")) {
            const auto& t = j.at("training");
            reject_unknown(t, {"learning_rate", "batch_size", "epochs", "dropout_rate", "repeat_count", "seed", "optimizer"},
                           "training");
            auto& T = c.training;
            T.learning_rate = t.value("learning_rate", T.learning_rate);
            T.batch_size = t.value("batch_size", T.batch_size);
            T.epochs = t.value("epochs", T.epochs);
            T.dropout_rate = t.value("dropout_rate", T.dropout_rate);
            T.repeat_count = t.value("repeat_count", T.repeat_count);
            T.seed = t.value("seed", T.seed);
            if (t.contains("optimizer")) {
                const auto& o = t.at("optimizer");
                reject_unknown(o, {"kind", "beta1", "beta2", "epsilon"}, "optimizer");
                if (o.contains("kind")) T.optimizer.kind = nn::optimizer_from_string(o.at("kind").get<std::string>());
                T.optimizer.beta1 = o.value("beta1", T.optimizer.beta1);
                T.optimizer.beta2 = o.value("beta2", T.optimizer.beta2);
                T.optimizer.epsilon = o.value("epsilon", T.optimizer.epsilon);
            }
        }
        if (j.contains("membership")) from_json(j.at("membership"), c.membership);
        if (j.contains("stft")) {
            const auto& s = j.at("stft");
            reject_unknown(s, {"window_length", "hop", "window", "fft_length"}, "stft");
            c.stft.window_length = s.value("window_length", c.stft.window_length);
            c.stft.hop = s.value("hop", c.stft.hop);
            if (s.contains("window")) c.stft.window = window_from_name(s.at("window").get<std::string>());
            c.stft.fft_length = s.value("fft_length", c.stft.fft_length);
        }
    } catch (const nlohmann::json::exception& e) {
        throw DomainError(fmt::format("model config: {}", e.what()));
    }
    c.validate();
}

std::vector<PreparedSample> prepare_samples(const Dataset& dataset, const StftConfig& stft, double max_hz,
                                            const std::vector<std::size_t>* labels) {
    if (labels && labels->size() != dataset.size()) throw DomainError("prepare_samples: label count mismatch");
    std::vector<PreparedSample> out;
    out.reserve(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto& r = dataset[i];
        const auto seg = read_segment(r.resolved_eeg_path);
        const auto spec = spectrogram_stack(seg, stft, max_hz);
        Tensor t({spec.bins, spec.frames, spec.channels});
        for (std::size_t c = 0; c < spec.channels; ++c)
            for (std::size_t m = 0; m < spec.bins; ++m)
                for (std::size_t n = 0; n < spec.frames; ++n)
                    t[(m * spec.frames + n) * spec.channels + c] = std::log1p(spec.at(c, m, n));
        PreparedSample s;
        s.input = std::move(t);
        s.rating = r.rating;
        s.label = labels ? (*labels)[i] : dataset.label_index(r.emotion_label);
        out.push_back(std::move(s));
    }
    return out;
}

EmotionModel::EmotionModel(ModelConfig config, InputShape input)
    : config_(std::move(config)), input_(input), fuzzifier_(config_.membership) {
    config_.validate();
    build();
}

std::array<std::array<std::size_t, 3>, 4> EmotionModel::spatial_shapes(const Architecture& a, const InputShape& in) {
    auto conv = [&](std::size_t x, const char* stage) {
        if (x < a.kernel) {
            throw DomainError(fmt::format("spatial module: {} input extent {} smaller than kernel {}", stage, x, a.kernel));
        }
        return x - a.kernel + 1;
    };
    auto pool = [&](std::size_t x, const char* stage) {
        if (x < a.pool) throw DomainError(fmt::format("spatial module: {} input extent {} smaller than pool {}", stage, x, a.pool));
        return x / a.pool;
    };
    std::array<std::array<std::size_t, 3>, 4> s{};
    s[0] = {conv(in.bins, "conv1"), conv(in.frames, "conv1"), a.conv1_filters};
    s[1] = {pool(s[0][0], "pool1"), pool(s[0][1], "pool1"), a.conv1_filters};
    s[2] = {conv(s[1][0], "conv2"), conv(s[1][1], "conv2"), a.conv2_filters};
    s[3] = {pool(s[2][0], "pool2"), pool(s[2][1], "pool2"), a.conv2_filters};
    return s;
}

std::size_t EmotionModel::fuzzy_input_width(const ModelConfig& c) {
    switch (c.variant) {
        case Variant::Model1Type2:
        case Variant::Model3CuboidDual: return Type2FuzzyVector::kSize;
        case Variant::Model2FcmClusters: return static_cast<std::size_t>(c.fcm_clusters);
        case Variant::CrispVad: return 3;
        case Variant::NoVad: return 0;
        case Variant::Type1Umf:
        case Variant::Type1Lmf: return 9;
    }
    return 0;
}

std::size_t EmotionModel::fuzzy_input_width() const { return fuzzy_input_width(config_); }

std::size_t EmotionModel::fuzzy_branch_parameter_count(const ModelConfig& c) {
    if (!has_fuzzy_branch(c.variant)) return 0;
    std::size_t n = 0;
    std::size_t width = fuzzy_input_width(c);
    for (auto h : c.architecture.fuzzy_hidden) {
        n += dense_count(width, h);
        width = h;
    }
    const std::size_t out = c.variant == Variant::Model3CuboidDual ? kCuboidCount : c.architecture.fuzzy_out;
    n += dense_count(width, out);
    // head weights fed by the fuzzy feature
    return n + out * c.class_count;
}

std::size_t EmotionModel::expected_parameter_count(const ModelConfig& c, const InputShape& in) {
    const auto& a = c.architecture;
    const auto s = spatial_shapes(a, in);
    const std::size_t flat = s[3][0] * s[3][1] * s[3][2];
    std::size_t n = 0;
    n += a.kernel * a.kernel * in.channels * a.conv1_filters + a.conv1_filters;
    n += a.kernel * a.kernel * a.conv1_filters * a.conv2_filters + a.conv2_filters;
    n += (flat + a.lstm1_hidden + 1) * 4 * a.lstm1_hidden;
    n += (a.lstm1_hidden + a.lstm2_hidden + 1) * 4 * a.lstm2_hidden;
    n += dense_count(a.lstm2_hidden, c.class_count);
    return n + fuzzy_branch_parameter_count(c);
}

void EmotionModel::build() {
    const auto& a = config_.architecture;
    const auto s = spatial_shapes(a, input_);
    const std::size_t flat = s[3][0] * s[3][1] * s[3][2];
    std::mt19937_64 rng(mix(config_.training.seed, 0x1417));
    auto dense = [&](const std::string& name, std::size_t in, std::size_t out) {
        params_.add(name + ".w", nn::fan_in_uniform({in, out}, in, rng));
        params_.add(name + ".b", nn::fan_in_uniform({out}, in, rng));
    };
    const std::size_t k = a.kernel;
    params_.add("conv1.w", nn::fan_in_uniform({k, k, input_.channels, a.conv1_filters}, k * k * input_.channels, rng));
    params_.add("conv1.b", Tensor({a.conv1_filters}));
    params_.add("conv2.w", nn::fan_in_uniform({k, k, a.conv1_filters, a.conv2_filters}, k * k * a.conv1_filters, rng));
    params_.add("conv2.b", Tensor({a.conv2_filters}));
    auto lstm = [&](const std::string& name, std::size_t in, std::size_t h) {
        params_.add(name + ".wx", nn::fan_in_uniform({in, 4 * h}, in, rng));
        params_.add(name + ".wh", nn::fan_in_uniform({h, 4 * h}, h, rng));
        Tensor b({4 * h});
        for (std::size_t i = h; i < 2 * h; ++i) b[i] = 1.0;
        params_.add(name + ".b", std::move(b));
    };
    lstm("lstm1", flat, a.lstm1_hidden);
    lstm("lstm2", a.lstm1_hidden, a.lstm2_hidden);

    std::size_t joined = a.lstm2_hidden;
    if (has_fuzzy_branch(config_.variant)) {
        std::size_t width = fuzzy_input_width();
        for (std::size_t i = 0; i < a.fuzzy_hidden.size(); ++i) {
            dense(fmt::format("fuzzy.dense{}", i + 1), width, a.fuzzy_hidden[i]);
            width = a.fuzzy_hidden[i];
        }
        const std::size_t out = config_.variant == Variant::Model3CuboidDual ? kCuboidCount : a.fuzzy_out;
        dense(config_.variant == Variant::Model3CuboidDual ? "fuzzy.lattice" : "fuzzy.out", width, out);
        joined += out;
    }
    dense("head", joined, config_.class_count);
}

std::vector<double> EmotionModel::fuzzy_features(const VadRating& rating) const {
    switch (config_.variant) {
        case Variant::Model1Type2:
        case Variant::Model3CuboidDual: {
            const auto v = fuzzifier_.type2(rating);
            return {v.entries.begin(), v.entries.end()};
        }
        case Variant::Type1Umf:
        case Variant::Type1Lmf: {
            const auto v = fuzzifier_.type1(rating, config_.variant == Variant::Type1Umf ? Family::Umf : Family::Lmf);
            return {v.begin(), v.end()};
        }
        case Variant::CrispVad: return {rating.valence(), rating.arousal(), rating.dominance()};
        case Variant::Model2FcmClusters:
            if (centroids_.empty()) throw DomainError("model2: cluster centroids have not been fitted");
            return cluster_membership_features(to_point(rating), centroids_, config_.fcm_fuzzifier);
        case Variant::NoVad: return {};
    }
    return {};
}

void EmotionModel::set_centroids(std::vector<Point3> centroids) {
    if (config_.variant != Variant::Model2FcmClusters) throw DomainError("centroids apply to model2 only");
    if (centroids.size() != static_cast<std::size_t>(config_.fcm_clusters)) {
        throw DomainError(fmt::format("expected {} centroids, got {}", config_.fcm_clusters, centroids.size()));
    }
    centroids_ = std::move(centroids);
}

FcmResult EmotionModel::fit_clusters(const std::vector<VadRating>& ratings, std::uint64_t seed) {
    std::vector<Point3> pts;
    pts.reserve(ratings.size());
    for (const auto& r : ratings) pts.push_back(to_point(r));
    FcmConfig fc;
    fc.clusters = config_.fcm_clusters;
    fc.fuzzifier = config_.fcm_fuzzifier;
    fc.seed = seed;
    auto res = fcm_fit(pts, fc);
    set_centroids(res.centroids);
    return res;
}

void EmotionModel::set_input_normalization(double mean, double stddev) {
    if (!std::isfinite(mean) || !(stddev > 0.0) || !std::isfinite(stddev)) {
        throw NumericError(fmt::format("invalid input normalisation mean {} std {}", mean, stddev));
    }
    input_mean_ = mean;
    input_std_ = stddev;
}

ForwardOutput EmotionModel::forward(Graph& g, const PreparedSample& sample) const {
    const nn::Shape expected{input_.bins, input_.frames, input_.channels};
    if (sample.input.shape() != expected) {
        throw DomainError(fmt::format("model input shape {} does not match {}", nn::shape_string(sample.input.shape()),
                                      nn::shape_string(expected)));
    }
    const auto& a = config_.architecture;
    const double rate = config_.training.dropout_rate;
    Tensor x = sample.input;
    for (double& v : x.values()) v = (v - input_mean_) / input_std_;

    auto h = g.input(std::move(x));
    h = g.conv2d(h, g.param("conv1.w"), g.param("conv1.b"));
    h = g.dropout(g.maxpool2d(g.relu(h), a.pool, a.pool), rate);
    h = g.conv2d(h, g.param("conv2.w"), g.param("conv2.b"));
    h = g.dropout(g.maxpool2d(g.relu(h), a.pool, a.pool), rate);
    h = g.flatten(h);
    auto seq = g.repeat_sequence(h, config_.training.repeat_count);
    seq = g.lstm(seq, g.param("lstm1.wx"), g.param("lstm1.wh"), g.param("lstm1.b"));
    seq = g.lstm(seq, g.param("lstm2.wx"), g.param("lstm2.wh"), g.param("lstm2.b"));
    auto joined = g.last_step(seq);

    ForwardOutput out;
    if (has_fuzzy_branch(config_.variant)) {
        const auto feats = fuzzy_features(sample.rating);
        auto f = g.input(Tensor({feats.size()}, feats));
        for (std::size_t i = 0; i < a.fuzzy_hidden.size(); ++i) {
            const auto name = fmt::format("fuzzy.dense{}", i + 1);
            f = g.dropout(g.relu(g.dense(f, g.param(name + ".w"), g.param(name + ".b"))), rate);
        }
        if (config_.variant == Variant::Model3CuboidDual) {
            out.lattice_logits = g.dense(f, g.param("fuzzy.lattice.w"), g.param("fuzzy.lattice.b"));
            out.lattice_probabilities = g.softmax(out.lattice_logits);
            f = out.lattice_probabilities;
        } else {
            f = g.relu(g.dense(f, g.param("fuzzy.out.w"), g.param("fuzzy.out.b")));
        }
        joined = g.concat(joined, f);
    }
    out.logits = g.dense(joined, g.param("head.w"), g.param("head.b"));
    out.probabilities = g.softmax(out.logits);
    return out;
}

LossParts EmotionModel::loss(Graph& g, const ForwardOutput& out, const PreparedSample& sample) const {
    if (sample.label >= config_.class_count) {
        throw DomainError(fmt::format("label {} outside [0, {})", sample.label, config_.class_count));
    }
    LossParts parts;
    parts.class_loss = g.cross_entropy(out.logits, sample.label);
    parts.total = parts.class_loss;
    if (config_.variant == Variant::Model3CuboidDual) {
        const auto cell = vad_to_cuboid(sample.rating, fuzzifier_);
        parts.lattice_loss = g.cross_entropy(out.lattice_logits, static_cast<std::size_t>(cell.index));
        parts.total = g.weighted_sum(parts.class_loss, parts.lattice_loss, 1.0, config_.dual_loss_weight);
    }
    return parts;
}

std::vector<double> EmotionModel::predict_proba(const PreparedSample& sample) const {
    Graph g(const_cast<nn::ParameterSet&>(params_), nn::Mode::Eval);
    const auto out = forward(g, sample);
    const auto v = g.value(out.probabilities).values();
    return {v.begin(), v.end()};
}

std::size_t EmotionModel::predict(const PreparedSample& sample) const {
    Graph g(const_cast<nn::ParameterSet&>(params_), nn::Mode::Eval);
    const auto out = forward(g, sample);
    return argmax(g.value(out.logits).values());
}

void EmotionModel::save(const std::string& dir, const nlohmann::json& extra) const {
    nlohmann::json meta;
    meta["config"] = config_;
    meta["input_shape"] = {input_.bins, input_.frames, input_.channels};
    meta["input_mean"] = input_mean_;
    meta["input_std"] = input_std_;
    meta["centroids"] = centroids_;
    meta["extra"] = extra;
    nn::save_checkpoint(dir, params_, meta);
}

EmotionModel EmotionModel::load(const std::string& dir) {
    const auto meta = nn::read_checkpoint_metadata(dir);
    ModelConfig cfg;
    std::array<std::size_t, 3> shape{};
    try {
        from_json(meta.at("config"), cfg);
        shape = meta.at("input_shape").get<std::array<std::size_t, 3>>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError(fmt::format("{}: bad checkpoint metadata: {}", dir, e.what()));
    }
    EmotionModel m(cfg, InputShape{shape[0], shape[1], shape[2]});
    nn::load_checkpoint(dir, m.params_);
    m.set_input_normalization(meta.value("input_mean", 0.0), meta.value("input_std", 1.0));
    const auto cents = meta.value("centroids", std::vector<Point3>{});
    if (!cents.empty()) m.set_centroids(cents);
    return m;
}

Evaluation evaluate(const EmotionModel& model, const std::vector<PreparedSample>& samples) {
    const std::size_t k = model.config().class_count;
    Evaluation ev;
    ev.confusion.assign(k, std::vector<std::size_t>(k, 0));
    std::size_t correct = 0;
    for (const auto& s : samples) {
        if (s.label >= k) throw DomainError(fmt::format("label {} outside [0, {})", s.label, k));
        const auto p = model.predict(s);
        ev.predictions.push_back(p);
        ++ev.confusion[s.label][p];
        if (p == s.label) ++correct;
    }
    ev.accuracy = samples.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(samples.size());
    return ev;
}

std::vector<double> train(EmotionModel& model, const std::vector<PreparedSample>& samples) {
    if (samples.empty()) throw DomainError("cannot train on an empty dataset");
    const auto& cfg = model.config();
    for (const auto& s : samples) {
        if (s.label >= cfg.class_count) throw DomainError(fmt::format("label {} outside [0, {})", s.label, cfg.class_count));
    }
    const auto& tc = cfg.training;

    if (cfg.variant == Variant::Model2FcmClusters && model.centroids().empty()) {
        std::vector<VadRating> ratings;
        for (const auto& s : samples) ratings.push_back(s.rating);
        model.fit_clusters(ratings, tc.seed);
    }
    double sum = 0.0, sq = 0.0;
    std::size_t count = 0;
    for (const auto& s : samples) {
        for (double v : s.input.values()) {
            sum += v;
            sq += v * v;
        }
        count += s.input.size();
    }
    const double mean = sum / static_cast<double>(count);
    const double var = std::max(sq / static_cast<double>(count) - mean * mean, 0.0);
    model.set_input_normalization(mean, var > 0.0 ? std::sqrt(var) : 1.0);

    auto opt_cfg = tc.optimizer;
    opt_cfg.learning_rate = tc.learning_rate;
    nn::Optimizer opt(opt_cfg);
    auto& params = model.parameters();

    std::vector<std::size_t> order(samples.size());
    std::vector<double> losses;
    for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng(mix(tc.seed, 0xe90c, epoch));
        std::shuffle(order.begin(), order.end(), rng);
        double total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
            const std::size_t end = std::min(order.size(), start + tc.batch_size);
            const double scale = 1.0 / static_cast<double>(end - start);
            params.zero_grad();
            for (std::size_t i = start; i < end; ++i) {
                Graph g(params, nn::Mode::Train, mix(tc.seed, epoch + 1, order[i] + 1));
                const auto out = model.forward(g, samples[order[i]]);
                const auto parts = model.loss(g, out, samples[order[i]]);
                const double l = g.value(parts.total)[0];
                if (!std::isfinite(l)) throw NumericError(fmt::format("non-finite loss at epoch {}", epoch + 1));
                total += l;
                g.backward(parts.total, scale);
            }
            opt.step(params);
        }
        losses.push_back(total / static_cast<double>(samples.size()));
    }
    return losses;
}

void to_json(nlohmann::json& j, const TrainReport& r) {
    j = {{"variant", r.variant},
         {"seed", r.seed},
         {"epoch_losses", r.epoch_losses},
         {"train_accuracy", r.train_accuracy},
         {"accuracy", r.accuracy},
         {"confusion", r.confusion},
         {"class_names", r.class_names},
         {"train_count", r.train_count},
         {"validation_count", r.validation_count},
         {"config", r.config},
         {"extra", r.extra}};
}

std::string confusion_csv(const TrainReport& r) {
    std::ostringstream out;
    csv::Row header{"truth"};
    for (const auto& n : r.class_names) header.push_back(n);
    csv::write_row(out, header);
    for (std::size_t i = 0; i < r.confusion.size(); ++i) {
        csv::Row row{i < r.class_names.size() ? r.class_names[i] : std::to_string(i)};
        for (auto c : r.confusion[i]) row.push_back(std::to_string(c));
        csv::write_row(out, row);
    }
    return out.str();
}

void write_report(const std::string& dir, const TrainReport& r) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(fmt::format("cannot create '{}': {}", dir, ec.message()));
    std::ofstream js(fs::path(dir) / "report.json", std::ios::trunc);
    js << nlohmann::json(r).dump(2) << '\n';
    std::ofstream cs(fs::path(dir) / "confusion.csv", std::ios::trunc);
    cs << confusion_csv(r);
    if (!js || !cs) throw IoError(fmt::format("failed writing report to '{}'", dir));
}

namespace {

std::vector<PreparedSample> pick(const Dataset& subset, const std::map<std::string, std::size_t>& index,
                                 const std::vector<PreparedSample>& prepared) {
    std::vector<PreparedSample> out;
    out.reserve(subset.size());
    for (const auto& r : subset.records()) out.push_back(prepared.at(index.at(r.sample_id)));
    return out;
}

std::map<std::string, std::size_t> id_index(const Dataset& d) {
    std::map<std::string, std::size_t> m;
    for (std::size_t i = 0; i < d.size(); ++i) m[d[i].sample_id] = i;
    return m;
}

InputShape shape_of(const std::vector<PreparedSample>& samples) {
    if (samples.empty()) throw DomainError("no samples");
    const auto& s = samples.front().input.shape();
    if (s.size() != 3) throw DomainError("prepared inputs must be rank 3");
    return {s[0], s[1], s[2]};
}

TrainReport fit_and_report(EmotionModel& model, const std::vector<PreparedSample>& train_set,
                           const std::vector<PreparedSample>& val_set, std::vector<std::string> class_names) {
    TrainReport rep;
    rep.variant = to_string(model.config().variant);
    rep.seed = model.config().training.seed;
    rep.epoch_losses = train(model, train_set);
    rep.train_accuracy = evaluate(model, train_set).accuracy;
    const auto ev = evaluate(model, val_set);
    rep.accuracy = ev.accuracy;
    rep.confusion = ev.confusion;
    rep.class_names = std::move(class_names);
    rep.train_count = train_set.size();
    rep.validation_count = val_set.size();
    rep.config = model.config();
    if (!model.centroids().empty()) rep.extra["centroids"] = model.centroids();
    return rep;
}

}  // namespace

ExperimentResult run_experiment(const Dataset& dataset, const ModelConfig& config) {
    const auto prepared = prepare_samples(dataset, config.stft, config.max_hz);
    return run_experiment(dataset, prepared, config);
}

ExperimentResult run_experiment(const Dataset& dataset, const std::vector<PreparedSample>& prepared,
                                const ModelConfig& config) {
    config.validate();
    if (dataset.empty()) throw DomainError("cannot run an experiment on an empty dataset");
    if (prepared.size() != dataset.size()) throw DomainError("prepared samples do not match the dataset");
    if (dataset.vocabulary().size() > config.class_count) {
        throw DomainError(fmt::format("vocabulary has {} labels but class_count is {}", dataset.vocabulary().size(),
                                      config.class_count));
    }
    const auto split = split_stratified(dataset, config.train_fraction, config.training.seed);
    const auto index = id_index(dataset);
    const auto tr = pick(split.train, index, prepared);
    const auto va = pick(split.validation, index, prepared);
    EmotionModel model(config, shape_of(prepared));
    auto names = dataset.vocabulary();
    names.resize(config.class_count);
    auto rep = fit_and_report(model, tr, va, names);
    return {std::move(rep), std::move(model)};
}

std::size_t EmotionGroup::member_sum() const {
    std::size_t n = 0;
    for (const auto& m : members) n += m.events;
    return n;
}

bool EmotionGroup::contains(const std::string& emotion) const {
    return std::any_of(members.begin(), members.end(), [&](const GroupMember& m) { return emotion == m.emotion; });
}

const std::array<EmotionGroup, 3>& cross_subject_groups() {
    static const std::array<EmotionGroup, 3> groups{{
        {"Group 1",
         {{"Delighted", 11}, {"Amused", 14}, {"Happy", 5}, {"Adventurous", 20}, {"Joyous", 20}, {"Excited", 26}},
         108},
        {"Group 2",
         {{"Melancholic", 5}, {"Depressed", 6}, {"Despondent", 10}, {"Dissatisfied", 10}, {"Miserable", 19}, {"Sad", 45}},
         95},
        {"Group 3", {{"Taken Aback", 11}, {"Startled", 20}, {"Distress", 22}, {"Alarmed", 27}, {"Afraid", 46}}, 126},
    }};
    return groups;
}

std::string to_string(GroupPair p) {
    switch (p) {
        case GroupPair::G1vG2: return "g1_vs_g2";
        case GroupPair::G1vG3: return "g1_vs_g3";
        case GroupPair::G2vG3: return "g2_vs_g3";
    }
    return "g1_vs_g2";
}

GroupPair group_pair_from_string(const std::string& name) {
    if (name == "g1_vs_g2") return GroupPair::G1vG2;
    if (name == "g1_vs_g3") return GroupPair::G1vG3;
    if (name == "g2_vs_g3") return GroupPair::G2vG3;
    throw DomainError(fmt::format("unknown group pair '{}' (expected g1_vs_g2, g1_vs_g3 or g2_vs_g3)", name));
}

bool CrossSubjectSplit::disjoint() const {
    const std::set<std::string> tr(train_participants.begin(), train_participants.end());
    return std::none_of(validation_participants.begin(), validation_participants.end(),
                        [&](const std::string& p) { return tr.count(p) > 0; });
}

CrossSubjectResult cross_subject_experiment(const Dataset& dataset, GroupPair pair, bool with_fuzzy,
                                            const ModelConfig& config) {
    const auto prepared = prepare_samples(dataset, config.stft, config.max_hz);
    return cross_subject_experiment(dataset, prepared, pair, with_fuzzy, config);
}

CrossSubjectResult cross_subject_experiment(const Dataset& dataset, const std::vector<PreparedSample>& prepared,
                                            GroupPair pair, bool with_fuzzy, const ModelConfig& config) {
    if (prepared.size() != dataset.size()) throw DomainError("prepared samples do not match the dataset");
    const auto& groups = cross_subject_groups();
    const auto [ga, gb] = [&]() -> std::pair<std::size_t, std::size_t> {
        switch (pair) {
            case GroupPair::G1vG2: return {0, 1};
            case GroupPair::G1vG3: return {0, 2};
            case GroupPair::G2vG3: return {1, 2};
        }
        return {0, 1};
    }();
    const auto subset = dataset.filter([&](const SampleRecord& r) {
        return groups[ga].contains(r.emotion_label) || groups[gb].contains(r.emotion_label);
    });
    if (subset.empty()) throw DomainError(fmt::format("no samples carry {} labels", to_string(pair)));

    ModelConfig cfg = config;
    cfg.class_count = 2;
    if (!with_fuzzy) cfg.variant = Variant::NoVad;
    else if (cfg.variant == Variant::NoVad) cfg.variant = Variant::Model1Type2;

    const auto split = split_by_participant(subset, cfg.train_fraction, cfg.training.seed);
    CrossSubjectResult res;
    res.split.pair = pair;
    res.split.train_participants = split.train.participants();
    res.split.validation_participants = split.validation.participants();
    if (!res.split.disjoint()) throw DomainError("cross-subject split shares participants");

    const auto index = id_index(dataset);
    auto relabel = [&](const Dataset& part) {
        auto out = pick(part, index, prepared);
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i].label = groups[ga].contains(part[i].emotion_label) ? 0 : 1;
        }
        return out;
    };
    const auto tr = relabel(split.train);
    const auto va = relabel(split.validation);
    EmotionModel model(cfg, shape_of(prepared));
    res.report = fit_and_report(model, tr, va, {groups[ga].name, groups[gb].name});
    res.report.extra["pair"] = to_string(pair);
    res.report.extra["with_fuzzy"] = with_fuzzy;
    res.report.extra["train_participants"] = res.split.train_participants;
    res.report.extra["validation_participants"] = res.split.validation_participants;
    res.report.extra["participants_disjoint"] = res.split.disjoint();
    return res;
}

std::vector<ClusterSweepRow> cluster_sweep_experiment(const Dataset& dataset,
                                                      const std::vector<PreparedSample>& prepared,
                                                      const ModelConfig& config, int c_min, int c_max) {
    if (prepared.size() != dataset.size()) throw DomainError("prepared samples do not match the dataset");
    ModelConfig cfg = config;
    cfg.variant = Variant::Model2FcmClusters;
    cfg.validate();
    const auto split = split_stratified(dataset, cfg.train_fraction, cfg.training.seed);
    const auto index = id_index(dataset);
    const auto tr = pick(split.train, index, prepared);
    const auto va = pick(split.validation, index, prepared);
    std::vector<Point3> pts;
    for (const auto& s : tr) pts.push_back(to_point(s.rating));

    FcmConfig fc;
    fc.fuzzifier = cfg.fcm_fuzzifier;
    fc.seed = cfg.training.seed;
    const auto sweep = sweep_clusters(pts, c_min, c_max, fc);
    std::vector<ClusterSweepRow> rows;
    for (const auto& row : sweep) {
        cfg.fcm_clusters = row.clusters;
        EmotionModel model(cfg, shape_of(prepared));
        model.set_centroids(row.result.centroids);
        train(model, tr);
        rows.push_back({row.clusters, row.silhouette, evaluate(model, va).accuracy});
    }
    return rows;
}

}  // namespace fuzzvad
