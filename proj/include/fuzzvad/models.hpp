#pragma once

// CNN-LSTM-fuzzy fusion models, training, evaluation and experiments.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fuzzvad/clustering.hpp"
#include "fuzzvad/data.hpp"
#include "fuzzvad/dsp.hpp"
#include "fuzzvad/fuzzy.hpp"
#include "fuzzvad/nn/graph.hpp"
#include "fuzzvad/nn/optim.hpp"

namespace fuzzvad {

enum class Variant {
    Model1Type2,
    Model2FcmClusters,
    Model3CuboidDual,
    CrispVad,
    NoVad,
    Type1Umf,
    Type1Lmf,
};

/// "model1", "model2", "model3", "crisp_vad", "no_vad", "type1_umf", "type1_lmf".
std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);

struct Architecture {
    std::size_t conv1_filters = 32;
    std::size_t conv2_filters = 64;
    std::size_t kernel = 3;
    std::size_t pool = 2;
    std::size_t lstm1_hidden = 128;
    std::size_t lstm2_hidden = 64;
    std::vector<std::size_t> fuzzy_hidden{64, 32};
    /// Width of the fuzzy feature joined to the temporal feature
    /// (Model-3 always uses the 27-way lattice instead).
    std::size_t fuzzy_out = 16;

    void validate() const;
};

struct TrainingConfig {
    double learning_rate = 1e-3;
    std::size_t batch_size = 16;
    std::size_t epochs = 30;
    double dropout_rate = 0.2;
    std::size_t repeat_count = 4;
    std::uint64_t seed = 0;
    nn::OptimizerConfig optimizer;

    void validate() const;
};

struct ModelConfig {
    Variant variant = Variant::Model1Type2;
    std::size_t class_count = 24;
    int fcm_clusters = 4;
    double fcm_fuzzifier = 2.0;
    /// Weight of the 27-way lattice loss in Model-3.
    double dual_loss_weight = 1.0;
    /// Fraction of samples used for training in run_experiment.
    double train_fraction = 0.8;
    Architecture architecture;
    TrainingConfig training;
    MembershipParams membership = MembershipParams::defaults();
    StftConfig stft;
    double max_hz = 40.0;

    void validate() const;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
/// Missing keys keep defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, ModelConfig& c);

/// Spatial input geometry: frequency bins x frames x channels.
struct InputShape {
    std::size_t bins = 21;
    std::size_t frames = 26;
    std::size_t channels = 32;

    bool operator==(const InputShape&) const = default;
};

/// One model-ready example.
struct PreparedSample {
    nn::Tensor input;  // [bins, frames, channels], log1p power
    VadRating rating;
    std::size_t label = 0;
};

/// Reads every segment of the dataset and converts it to a log1p power
/// spectrogram tensor. Labels are the dataset's class indices unless given.
std::vector<PreparedSample> prepare_samples(const Dataset& dataset, const StftConfig& stft, double max_hz,
                                            const std::vector<std::size_t>* labels = nullptr);

struct ForwardOutput {
    nn::Graph::Node logits = -1;
    nn::Graph::Node probabilities = -1;
    /// Model-3 only.
    nn::Graph::Node lattice_logits = -1;
    nn::Graph::Node lattice_probabilities = -1;
};

struct LossParts {
    nn::Graph::Node total = -1;
    nn::Graph::Node class_loss = -1;
    nn::Graph::Node lattice_loss = -1;
};

class EmotionModel {
public:
    EmotionModel(ModelConfig config, InputShape input);

    const ModelConfig& config() const noexcept { return config_; }
    const InputShape& input_shape() const noexcept { return input_; }
    nn::ParameterSet& parameters() noexcept { return params_; }
    const nn::ParameterSet& parameters() const noexcept { return params_; }

    /// Width of the fuzzy feature vector for this variant (0 for NoVad).
    std::size_t fuzzy_input_width() const;
    /// Fuzzy representation of a rating.
    std::vector<double> fuzzy_features(const VadRating& rating) const;

    /// Model-2 cluster centroids (empty until fitted).
    const std::vector<Point3>& centroids() const noexcept { return centroids_; }
    void set_centroids(std::vector<Point3> centroids);
    /// Fits FCM on the ratings and stores the centroids. Model-2 only.
    FcmResult fit_clusters(const std::vector<VadRating>& ratings, std::uint64_t seed);

    /// Input standardisation applied after log1p.
    double input_mean() const noexcept { return input_mean_; }
    double input_std() const noexcept { return input_std_; }
    void set_input_normalization(double mean, double stddev);

    ForwardOutput forward(nn::Graph& g, const PreparedSample& sample) const;
    LossParts loss(nn::Graph& g, const ForwardOutput& out, const PreparedSample& sample) const;

    /// Argmax of the class softmax in evaluation mode.
    std::size_t predict(const PreparedSample& sample) const;
    std::vector<double> predict_proba(const PreparedSample& sample) const;

    /// Parameter count from the layer sizes alone.
    static std::size_t expected_parameter_count(const ModelConfig& config, const InputShape& input);
    /// Parameter count of the fuzzy branch alone.
    static std::size_t fuzzy_branch_parameter_count(const ModelConfig& config);
    static std::size_t fuzzy_input_width(const ModelConfig& config);

    /// Spatial module output shapes after each stage: conv1, pool1, conv2, pool2.
    static std::array<std::array<std::size_t, 3>, 4> spatial_shapes(const Architecture& arch, const InputShape& input);

    void save(const std::string& dir, const nlohmann::json& extra = {}) const;
    static EmotionModel load(const std::string& dir);

private:
    void build();

    ModelConfig config_;
    InputShape input_;
    nn::ParameterSet params_;
    Fuzzifier fuzzifier_;
    std::vector<Point3> centroids_;
    double input_mean_ = 0.0;
    double input_std_ = 1.0;
};

struct Evaluation {
    double accuracy = 0.0;
    /// class_count x class_count, rows = truth, columns = prediction.
    std::vector<std::vector<std::size_t>> confusion;
    std::vector<std::size_t> predictions;
};

/// accuracy = trace(confusion) / n. Side-effect free.
Evaluation evaluate(const EmotionModel& model, const std::vector<PreparedSample>& samples);

struct TrainReport {
    std::string variant;
    std::uint64_t seed = 0;
    std::vector<double> epoch_losses;
    double train_accuracy = 0.0;
    double accuracy = 0.0;
    std::vector<std::vector<std::size_t>> confusion;
    std::vector<std::string> class_names;
    std::size_t train_count = 0;
    std::size_t validation_count = 0;
    nlohmann::json config;
    nlohmann::json extra = nlohmann::json::object();
};

void to_json(nlohmann::json& j, const TrainReport& r);
std::string confusion_csv(const TrainReport& r);
/// Writes <dir>/report.json and <dir>/confusion.csv.
void write_report(const std::string& dir, const TrainReport& r);

/// Seeded mini-batch training. Fits clusters and input normalisation from
/// the training samples first. Returns per-epoch mean losses.
std::vector<double> train(EmotionModel& model, const std::vector<PreparedSample>& samples);

struct ExperimentResult {
    TrainReport report;
    EmotionModel model;
};

/// Stratified split, train, evaluate on the held-out part.
ExperimentResult run_experiment(const Dataset& dataset, const ModelConfig& config);
/// Same, reusing already prepared samples (aligned with dataset records).
ExperimentResult run_experiment(const Dataset& dataset, const std::vector<PreparedSample>& prepared,
                                const ModelConfig& config);

// Cross-subject groups. Per-emotion event counts are the published ones.
struct GroupMember {
    const char* emotion;
    std::size_t events;
};
struct EmotionGroup {
    const char* name;
    std::vector<GroupMember> members;
    std::size_t published_total;

    std::size_t member_sum() const;
    bool contains(const std::string& emotion) const;
};
const std::array<EmotionGroup, 3>& cross_subject_groups();

enum class GroupPair { G1vG2, G1vG3, G2vG3 };
std::string to_string(GroupPair p);
GroupPair group_pair_from_string(const std::string& name);

struct CrossSubjectSplit {
    GroupPair pair = GroupPair::G1vG2;
    std::vector<std::string> train_participants;
    std::vector<std::string> validation_participants;

    bool disjoint() const;
};

struct CrossSubjectResult {
    TrainReport report;
    CrossSubjectSplit split;
};

/// Two-way classification between the pair's groups on a participant-disjoint
/// split. with_fuzzy = false drops the fuzzy branch.
CrossSubjectResult cross_subject_experiment(const Dataset& dataset, GroupPair pair, bool with_fuzzy,
                                            const ModelConfig& config);
CrossSubjectResult cross_subject_experiment(const Dataset& dataset, const std::vector<PreparedSample>& prepared,
                                            GroupPair pair, bool with_fuzzy, const ModelConfig& config);

struct ClusterSweepRow {
    int clusters = 0;
    double silhouette = 0.0;
    double accuracy = 0.0;
};

/// Model-2 trained for every c in [c_min, c_max]; FS from sweep_clusters on
/// the training ratings.
std::vector<ClusterSweepRow> cluster_sweep_experiment(const Dataset& dataset,
                                                      const std::vector<PreparedSample>& prepared,
                                                      const ModelConfig& config, int c_min = 4, int c_max = 10);

}  // namespace fuzzvad
