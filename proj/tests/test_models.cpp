#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>

#include "gradcheck.hpp"
#include "fuzzvad/error.hpp"
#include "fuzzvad/lattice.hpp"
#include "fuzzvad/models.hpp"

using namespace fuzzvad;
using testutil::grad_check;
using testutil::random_tensor;

namespace {

ModelConfig tiny(Variant v) {
    ModelConfig c;
    c.variant = v;
    c.class_count = 4;
    c.architecture.conv1_filters = 2;
    c.architecture.conv2_filters = 3;
    c.architecture.lstm1_hidden = 4;
    c.architecture.lstm2_hidden = 3;
    c.architecture.fuzzy_hidden = {5};
    c.architecture.fuzzy_out = 3;
    c.training.repeat_count = 2;
    c.training.batch_size = 4;
    c.fcm_clusters = 2;
    return c;
}

const InputShape kTinyInput{10, 10, 2};

std::vector<PreparedSample> tiny_samples(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(1.0, 9.0);
    std::vector<PreparedSample> out;
    for (std::size_t i = 0; i < n; ++i) {
        PreparedSample s;
        s.label = i % 4;
        s.input = random_tensor({10, 10, 2}, rng);
        for (std::size_t k = 0; k < s.input.size(); k += 7) s.input[k] += static_cast<double>(s.label);
        s.rating = VadRating(u(rng), u(rng), u(rng));
        out.push_back(s);
    }
    return out;
}

std::size_t dense_params(std::size_t in, std::size_t out) { return in * out + out; }

}  // namespace

TEST_SUITE("models") {

TEST_CASE("variant names round trip") {
    for (auto v : {Variant::Model1Type2, Variant::Model2FcmClusters, Variant::Model3CuboidDual, Variant::CrispVad,
                   Variant::NoVad, Variant::Type1Umf, Variant::Type1Lmf})
        CHECK(variant_from_string(to_string(v)) == v);
    CHECK_THROWS_AS(variant_from_string("model9"), DomainError);
}

TEST_CASE("spatial shapes and parameter counts") {
    ModelConfig c;
    const auto s = EmotionModel::spatial_shapes(c.architecture, {19, 24, 32});
    CHECK(s[0] == std::array<std::size_t, 3>{17, 22, 32});
    CHECK(s[1] == std::array<std::size_t, 3>{8, 11, 32});
    CHECK(s[3][0] * s[3][1] * s[3][2] == s[3][0] * s[3][1] * 64);
    const auto d = EmotionModel::spatial_shapes(c.architecture, {21, 26, 32});
    CHECK(d[3] == std::array<std::size_t, 3>{3, 5, 64});

    // independent count from the layer list
    const std::size_t conv = (3 * 3 * 32 * 32 + 32) + (3 * 3 * 32 * 64 + 64);
    const std::size_t lstm = 4 * 128 * (960 + 128 + 1) + 4 * 64 * (128 + 64 + 1);
    const std::size_t fuzzy = dense_params(18, 64) + dense_params(64, 32) + dense_params(32, 16);
    const std::size_t head = dense_params(64 + 16, 24);
    CHECK(EmotionModel::expected_parameter_count(c, {}) == conv + lstm + fuzzy + head);
    CHECK(conv + lstm + fuzzy + head == 640488);
    EmotionModel m(c, {});
    CHECK(m.parameters().scalar_count() == 640488);

    ModelConfig nov = c;
    nov.variant = Variant::NoVad;
    CHECK(EmotionModel::expected_parameter_count(nov, {}) == 640488 - 4208);
    CHECK(EmotionModel::fuzzy_branch_parameter_count(c) == 4208);
    CHECK(EmotionModel::fuzzy_branch_parameter_count(nov) == 0);

    ModelConfig m3 = c;
    m3.variant = Variant::Model3CuboidDual;
    CHECK(EmotionModel(m3, {}).parameters().scalar_count() == EmotionModel::expected_parameter_count(m3, {}));
    CHECK(EmotionModel::fuzzy_input_width(m3) == 18);
    ModelConfig m2 = c;
    m2.variant = Variant::Model2FcmClusters;
    CHECK(EmotionModel::fuzzy_input_width(m2) == 4);
}

TEST_CASE("config json round trip and validation") {
    ModelConfig c = tiny(Variant::Model3CuboidDual);
    c.dual_loss_weight = 0.5;
    nlohmann::json j = c;
    auto back = j.get<ModelConfig>();
    CHECK(back.variant == Variant::Model3CuboidDual);
    CHECK(back.dual_loss_weight == 0.5);
    CHECK(back.architecture.fuzzy_hidden == c.architecture.fuzzy_hidden);
    j["unknown_key"] = true;
    CHECK_THROWS(j.get<ModelConfig>());
    ModelConfig bad;
    bad.training.dropout_rate = 1.0;
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = {};
    bad.training.repeat_count = 0;
    CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("fuzzy features per variant") {
    const VadRating r(6.5, 2, 8);
    EmotionModel crisp(tiny(Variant::CrispVad), kTinyInput);
    CHECK(crisp.fuzzy_features(r) == std::vector<double>{6.5, 2, 8});
    EmotionModel m1(tiny(Variant::Model1Type2), kTinyInput);
    auto f = m1.fuzzy_features(r);
    REQUIRE(f.size() == 18);
    for (std::size_t i = 0; i < 18; i += 2) CHECK(f[i] <= f[i + 1]);
    EmotionModel m2(tiny(Variant::Model2FcmClusters), kTinyInput);
    CHECK_THROWS_AS(m2.fuzzy_features(r), DomainError);
    m2.set_centroids({{2, 2, 2}, {8, 8, 8}});
    auto u = m2.fuzzy_features(r);
    CHECK(std::accumulate(u.begin(), u.end(), 0.0) == doctest::Approx(1.0));
    EmotionModel umf(tiny(Variant::Type1Umf), kTinyInput);
    CHECK(umf.fuzzy_features(r).size() == 9);
}

TEST_CASE("model3 outputs and dual loss") {
    auto cfg = tiny(Variant::Model3CuboidDual);
    cfg.dual_loss_weight = 0.7;
    EmotionModel m(cfg, kTinyInput);
    const auto s = tiny_samples(1, 4)[0];
    nn::Graph g(m.parameters(), nn::Mode::Eval);
    const auto out = m.forward(g, s);
    const auto& p = g.value(out.probabilities);
    const auto& lp = g.value(out.lattice_probabilities);
    CHECK(p.size() == 4);
    CHECK(lp.size() == 27);
    CHECK(std::accumulate(p.values().begin(), p.values().end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::accumulate(lp.values().begin(), lp.values().end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    const auto parts = m.loss(g, out, s);
    const double total = g.value(parts.total)[0];
    const double cls = g.value(parts.class_loss)[0];
    const double lat = g.value(parts.lattice_loss)[0];
    CHECK(total == doctest::Approx(cls + 0.7 * lat).epsilon(1e-12));
    // lattice target is the cuboid of the rating
    const auto target = vad_to_cuboid(s.rating, Fuzzifier(cfg.membership));
    const auto& ll = g.value(out.lattice_logits).values();
    const double mx = *std::max_element(ll.begin(), ll.end());
    double z = 0;
    for (double v : ll) z += std::exp(v - mx);
    CHECK(lat == doctest::Approx(mx + std::log(z) - ll[static_cast<std::size_t>(target.index)]).epsilon(1e-10));

    EmotionModel m1(tiny(Variant::Model1Type2), kTinyInput);
    nn::Graph g1(m1.parameters(), nn::Mode::Eval);
    const auto o1 = m1.forward(g1, s);
    CHECK(o1.lattice_logits == -1);
    const auto p1 = m1.loss(g1, o1, s);
    CHECK(p1.lattice_loss == -1);
    CHECK(g1.value(p1.total)[0] == g1.value(p1.class_loss)[0]);
}

TEST_CASE("end-to-end gradients on small instances") {
    const auto s = tiny_samples(1, 5)[0];
    for (auto v : {Variant::Model1Type2, Variant::Model3CuboidDual, Variant::NoVad}) {
        CAPTURE(to_string(v));
        EmotionModel m(tiny(v), kTinyInput);
        m.set_input_normalization(0.1, 1.3);
        const auto gc = grad_check(
            m.parameters(), [&](nn::Graph& g) { return m.loss(g, m.forward(g, s), s).total; }, nn::Mode::Train, 3, 6);
        CHECK(gc.probes > 0);
        CHECK(gc.max_rel_error < 1e-5);
    }
}

TEST_CASE("training and evaluation contracts") {
    auto cfg = tiny(Variant::Model1Type2);
    cfg.training.epochs = 12;
    cfg.training.learning_rate = 0.01;
    const auto samples = tiny_samples(24, 6);
    EmotionModel m(cfg, kTinyInput);
    const auto losses = train(m, samples);
    REQUIRE(losses.size() == 12);
    CHECK(losses.back() < losses.front());
    CHECK(m.input_std() > 0);

    const auto before = m.parameters()[0].value;
    const auto ev = evaluate(m, samples);
    CHECK(m.parameters()[0].value == before);
    std::size_t trace = 0, total = 0;
    for (std::size_t i = 0; i < ev.confusion.size(); ++i)
        for (std::size_t j = 0; j < ev.confusion.size(); ++j) {
            total += ev.confusion[i][j];
            if (i == j) trace += ev.confusion[i][j];
        }
    CHECK(total == samples.size());
    CHECK(ev.accuracy == doctest::Approx(static_cast<double>(trace) / total));
    CHECK(evaluate(m, samples).predictions == ev.predictions);

    EmotionModel again(cfg, kTinyInput);
    CHECK(train(again, samples) == losses);

    const auto dir = (std::filesystem::temp_directory_path() / "fuzzvad_model_ckpt").string();
    m.save(dir);
    const auto loaded = EmotionModel::load(dir);
    CHECK(loaded.config().variant == Variant::Model1Type2);
    CHECK(loaded.input_mean() == m.input_mean());
    const auto pa = m.predict_proba(samples[0]);
    const auto pb = loaded.predict_proba(samples[0]);
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(std::abs(pa[i] - pb[i]) < 1e-4);
}

TEST_CASE("model2 fits clusters during training") {
    auto cfg = tiny(Variant::Model2FcmClusters);
    cfg.training.epochs = 1;
    EmotionModel m(cfg, kTinyInput);
    train(m, tiny_samples(8, 7));
    CHECK(m.centroids().size() == 2);
}

TEST_CASE("cross-subject groups") {
    const auto& g = cross_subject_groups();
    CHECK(g[0].member_sum() == 96);
    CHECK(g[0].published_total == 108);
    CHECK(g[1].member_sum() == 95);
    CHECK(g[1].published_total == 95);
    CHECK(g[2].member_sum() == 126);
    CHECK(g[2].published_total == 126);
    std::set<std::string> seen;
    std::size_t members = 0;
    for (const auto& grp : g)
        for (const auto& m : grp.members) {
            seen.insert(m.emotion);
            ++members;
        }
    CHECK(seen.size() == members);
    const auto& vocab = default_vocabulary();
    for (const auto& e : seen) CHECK(std::find(vocab.begin(), vocab.end(), e) != vocab.end());
    for (auto p : {GroupPair::G1vG2, GroupPair::G1vG3, GroupPair::G2vG3})
        CHECK(group_pair_from_string(to_string(p)) == p);
    CHECK_THROWS_AS(group_pair_from_string("g1_vs_g4"), DomainError);
}

TEST_CASE("report serialisation") {
    TrainReport r;
    r.variant = "model1";
    r.class_names = {"a", "b"};
    r.confusion = {{3, 1}, {0, 4}};
    r.accuracy = 0.875;
    const auto csv = confusion_csv(r);
    CHECK(csv == "truth,a,b\na,3,1\nb,0,4\n");
    nlohmann::json j = r;
    CHECK(j.at("accuracy") == 0.875);
    CHECK(j.at("confusion")[1][1] == 4);
}

}
