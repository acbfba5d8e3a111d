#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "gradcheck.hpp"
#include "fuzzvad/error.hpp"
#include "fuzzvad/nn/checkpoint.hpp"
#include "fuzzvad/nn/graph.hpp"
#include "fuzzvad/nn/optim.hpp"

using namespace fuzzvad;
using namespace fuzzvad::nn;
using testutil::grad_check;
using testutil::random_tensor;

namespace {

// scalar readout: random dense projection of a flattened node
Graph::Node readout(Graph& g, Graph::Node x) {
    return g.dense(g.flatten(x), g.param("probe.w"), g.param("probe.b"));
}

void add_probe(ParameterSet& ps, std::size_t in, std::mt19937_64& rng) {
    ps.add("probe.w", random_tensor({in, 1}, rng));
    ps.add("probe.b", random_tensor({1}, rng));
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("tensor basics") {
    Tensor t({2, 3}, 1.5);
    CHECK(t.size() == 6);
    CHECK(t.reshaped({3, 2}).shape() == Shape{3, 2});
    CHECK_THROWS_AS(t.reshaped({4, 2}), DomainError);
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), DomainError);
    CHECK(shape_string({2, 3}) == "[2x3]");
}

TEST_CASE("conv2d fixtures") {
    ParameterSet ps;
    Graph g(ps, Mode::Eval);
    auto x = g.input(Tensor({2, 2, 1}, {1, 2, 3, 4}));
    auto y = g.conv2d(x, g.input(Tensor({1, 1, 1, 1}, std::vector<double>{1.0})), g.input(Tensor({1})));
    CHECK(g.value(y).values()[3] == 4.0);
    CHECK(g.value(y).shape() == Shape{2, 2, 1});
    auto s = g.conv2d(x, g.input(Tensor({2, 2, 1, 1}, 1.0)), g.input(Tensor({1})));
    CHECK(g.value(s).size() == 1);
    CHECK(g.value(s)[0] == 10.0);
    CHECK_THROWS_AS(g.conv2d(x, g.input(Tensor({3, 3, 1, 1})), g.input(Tensor({1}))), DomainError);
    CHECK_THROWS_AS(g.conv2d(x, g.input(Tensor({1, 1, 2, 1})), g.input(Tensor({1}))), DomainError);
}

TEST_CASE("conv2d matches a direct loop") {
    std::mt19937_64 rng(1);
    const auto x = random_tensor({5, 5, 2}, rng);
    const auto w = random_tensor({3, 3, 2, 4}, rng);
    const auto b = random_tensor({4}, rng);
    ParameterSet ps;
    Graph g(ps, Mode::Eval);
    const auto& y = g.value(g.conv2d(g.input(x), g.input(w), g.input(b)));
    REQUIRE(y.shape() == Shape{3, 3, 4});
    double worst = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 4; ++k) {
                double s = b[k];
                for (int a = 0; a < 3; ++a)
                    for (int bb = 0; bb < 3; ++bb)
                        for (int c = 0; c < 2; ++c) s += x[((i + a) * 5 + (j + bb)) * 2 + c] * w[((a * 3 + bb) * 2 + c) * 4 + k];
                worst = std::max(worst, std::abs(s - y[(i * 3 + j) * 4 + k]));
            }
    CHECK(worst < 1e-10);
}

TEST_CASE("pooling, repeat and flatten shapes") {
    ParameterSet ps;
    Graph g(ps, Mode::Eval);
    auto x = g.input(Tensor({5, 4, 2}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20,
                                        21, 22, 23, 24, 25, 26, 27, 28, 29, 30, 31, 32, 33, 34, 35, 36, 37, 38, 39, 40}));
    auto p = g.maxpool2d(x, 2, 2);
    CHECK(g.value(p).shape() == Shape{2, 2, 2});
    CHECK(g.value(p)[0] == 11.0);
    CHECK(g.value(p)[7] == 32.0);
    auto v = g.input(Tensor({3}, {1, 2, 3}));
    auto r = g.repeat_sequence(v, 4);
    CHECK(g.value(r).shape() == Shape{4, 3});
    CHECK(g.value(r)[10] == 2.0);
    CHECK(g.value(g.repeat_sequence(v, 1)).shape() == Shape{1, 3});
    CHECK_THROWS_AS(g.repeat_sequence(v, 0), DomainError);
    CHECK(g.value(g.flatten(x)).shape() == Shape{40});
}

TEST_CASE("relu, dense and softmax fixtures") {
    ParameterSet ps;
    Graph g(ps, Mode::Eval);
    auto x = g.input(Tensor({3}, {-1, 0.5, 2}));
    CHECK(g.value(g.relu(x)).values()[0] == 0.0);
    Tensor eye({3, 3});
    for (int i = 0; i < 3; ++i) eye[i * 3 + i] = 1.0;
    const auto& d = g.value(g.dense(x, g.input(eye), g.input(Tensor({3}))));
    CHECK(d[0] == -1.0);
    CHECK(d[2] == 2.0);
    std::mt19937_64 rng(2);
    auto z = g.input(random_tensor({24}, rng, 30.0));
    double s = 0;
    for (double v : g.value(g.softmax(z)).values()) s += v;
    CHECK(std::abs(s - 1) < 1e-6);
    auto u = g.input(Tensor({24}, 0.3));
    CHECK(g.value(g.cross_entropy(u, 5))[0] == doctest::Approx(std::log(24.0)).epsilon(1e-12));
    CHECK_THROWS_AS(g.cross_entropy(u, 24), DomainError);
}

TEST_CASE("cross-entropy gradient is softmax minus one-hot") {
    std::mt19937_64 rng(3);
    ParameterSet ps;
    ps.add("z", random_tensor({6}, rng));
    Graph g(ps, Mode::Train);
    auto z = g.param("z");
    auto p = g.softmax(z);
    auto loss = g.cross_entropy(z, 2);
    const Tensor probs = g.value(p);
    g.backward(loss);
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(ps[0].grad[i] - (probs[i] - (i == 2 ? 1.0 : 0.0))) < 1e-12);
    const auto gc = grad_check(ps, [](Graph& h) { return h.cross_entropy(h.param("z"), 2); });
    CHECK(gc.max_rel_error < 1e-6);
}

TEST_CASE("single dense layer gradient has the closed form") {
    std::mt19937_64 rng(4);
    ParameterSet ps;
    ps.add("w", random_tensor({4, 3}, rng));
    ps.add("b", random_tensor({3}, rng));
    const auto xin = random_tensor({4}, rng);
    Graph g(ps, Mode::Train);
    auto logits = g.dense(g.input(xin), g.param("w"), g.param("b"));
    const Tensor p = g.value(g.softmax(logits));
    g.backward(g.cross_entropy(logits, 1));
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t k = 0; k < 3; ++k)
            CHECK(std::abs(ps[0].grad[i * 3 + k] - xin[i] * (p[k] - (k == 1 ? 1.0 : 0.0))) < 1e-12);
}

TEST_CASE("finite-difference checks per op") {
    std::mt19937_64 rng(5);
    SUBCASE("conv2d") {
        ParameterSet ps;
        ps.add("x", random_tensor({5, 6, 2}, rng));
        ps.add("w", random_tensor({3, 3, 2, 3}, rng));
        ps.add("b", random_tensor({3}, rng));
        add_probe(ps, 3 * 4 * 3, rng);
        auto gc = grad_check(ps, [](Graph& g) { return readout(g, g.conv2d(g.param("x"), g.param("w"), g.param("b"))); });
        CHECK(gc.max_rel_error < 1e-5);
    }
    SUBCASE("relu") {
        ParameterSet ps;
        ps.add("x", random_tensor({10}, rng));
        add_probe(ps, 10, rng);
        auto gc = grad_check(ps, [](Graph& g) { return readout(g, g.relu(g.param("x"))); });
        CHECK(gc.max_rel_error < 1e-5);
    }
    SUBCASE("maxpool2d") {
        ParameterSet ps;
        ps.add("x", random_tensor({5, 4, 3}, rng));
        add_probe(ps, 2 * 2 * 3, rng);
        auto gc = grad_check(ps, [](Graph& g) { return readout(g, g.maxpool2d(g.param("x"), 2, 2)); });
        CHECK(gc.max_rel_error < 1e-5);
    }
    SUBCASE("dropout") {
        ParameterSet ps;
        ps.add("x", random_tensor({20}, rng));
        add_probe(ps, 20, rng);
        auto gc = grad_check(ps, [](Graph& g) { return readout(g, g.dropout(g.param("x"), 0.3)); }, Mode::Train, 7);
        CHECK(gc.max_rel_error < 1e-5);
    }
    SUBCASE("repeat, lstm and last step") {
        ParameterSet ps;
        ps.add("x", random_tensor({3}, rng));
        ps.add("wx", random_tensor({3, 16}, rng, 0.5));
        ps.add("wh", random_tensor({4, 16}, rng, 0.5));
        ps.add("b", random_tensor({16}, rng, 0.5));
        add_probe(ps, 4, rng);
        auto gc = grad_check(ps, [](Graph& g) {
            auto seq = g.repeat_sequence(g.param("x"), 4);
            return readout(g, g.last_step(g.lstm(seq, g.param("wx"), g.param("wh"), g.param("b"))));
        });
        CHECK(gc.max_rel_error < 1e-5);
    }
    SUBCASE("lstm over a full sequence") {
        ParameterSet ps;
        ps.add("x", random_tensor({5, 3}, rng));
        ps.add("wx", random_tensor({3, 8}, rng, 0.5));
        ps.add("wh", random_tensor({2, 8}, rng, 0.5));
        ps.add("b", random_tensor({8}, rng, 0.5));
        add_probe(ps, 10, rng);
        auto gc = grad_check(ps, [](Graph& g) { return readout(g, g.lstm(g.param("x"), g.param("wx"), g.param("wh"), g.param("b"))); });
        CHECK(gc.max_rel_error < 1e-5);
    }
    SUBCASE("dense, concat, softmax and weighted sum") {
        ParameterSet ps;
        ps.add("a", random_tensor({3}, rng));
        ps.add("c", random_tensor({2}, rng));
        ps.add("w", random_tensor({5, 4}, rng));
        ps.add("b", random_tensor({4}, rng));
        add_probe(ps, 4, rng);
        auto gc = grad_check(ps, [](Graph& g) {
            auto h = g.dense(g.concat(g.param("a"), g.param("c")), g.param("w"), g.param("b"));
            auto p = g.softmax(h);
            auto ce = g.cross_entropy(h, 3);
            return g.weighted_sum(readout(g, p), ce, 0.7, 1.3);
        });
        CHECK(gc.max_rel_error < 1e-5);
    }
}

TEST_CASE("backward runs once per graph") {
    ParameterSet ps;
    ps.add("z", Tensor({3}, 0.1));
    Graph g(ps, Mode::Train);
    auto loss = g.cross_entropy(g.param("z"), 0);
    g.backward(loss);
    CHECK_THROWS_AS(g.backward(loss), DomainError);
}

TEST_CASE("lstm identities") {
    const Tensor seq({3, 2}, {0.5, -1, 2, 0.1, -0.3, 0.7});
    auto states = lstm_forward(Tensor({3, 2}), Tensor({2, 12}), Tensor({3, 12}), Tensor({12}));
    for (const auto& s : states)
        for (double h : s.hidden) CHECK(h == 0.0);
    Tensor b({12});
    for (int i = 0; i < 3; ++i) {
        b[i] = -60.0;     // input gate closed
        b[3 + i] = 60.0;  // forget gate open
    }
    LstmState init{{0, 0, 0}, {0.4, -0.2, 0.9}};
    states = lstm_forward(seq, Tensor({2, 12}), Tensor({3, 12}), b, init);
    for (const auto& s : states) {
        CHECK(s.cell[0] == doctest::Approx(0.4).epsilon(1e-12));
        CHECK(s.cell[2] == doctest::Approx(0.9).epsilon(1e-12));
    }
}

TEST_CASE("dropout keeps the expectation") {
    ParameterSet ps;
    double total = 0;
    const std::size_t trials = 100000;
    Graph g(ps, Mode::Train, 11);
    const auto x = g.input(Tensor({trials}, 1.0));
    for (double v : g.value(g.dropout(x, 0.2)).values()) total += v;
    CHECK(std::abs(total / trials - 1.0) < 0.01);
    Graph e(ps, Mode::Eval, 11);
    const auto y = e.input(Tensor({50}, 2.0));
    const auto kept = e.dropout(y, 0.2);
    CHECK(e.value(kept) == e.value(y));
    CHECK_THROWS_AS(e.dropout(y, 1.0), DomainError);
}

TEST_CASE("optimizers") {
    ParameterSet ps;
    ps.add("w", Tensor({2}, {1.0, 1.0}));
    OptimizerConfig sgd{OptimizerKind::Sgd, 0.1};
    Optimizer opt(sgd);
    ps[0].grad = Tensor({2}, {0.5, -2.0});
    opt.step(ps);
    CHECK(ps[0].value[0] == 1.0 - 0.1 * 0.5);
    CHECK(ps[0].value[1] == 1.0 + 0.1 * 2.0);

    ParameterSet zero;
    zero.add("w", Tensor({3}, {0.3, -0.7, 1.1}));
    const auto before = zero[0].value;
    Optimizer adam;
    adam.step(zero);
    CHECK(zero[0].value == before);
    zero[0].grad = Tensor({3}, {1, 2, 3});
    Optimizer still({OptimizerKind::Adam, 0.0});
    still.step(zero);
    CHECK(zero[0].value == before);

    ParameterSet bowl;
    bowl.add("w", Tensor({2}, {1.0, 1.0}));
    Optimizer a({OptimizerKind::Adam, 0.01});
    int steps = 0;
    auto norm = [&] { return std::hypot(bowl[0].value[0], bowl[0].value[1]); };
    while (norm() >= 1e-3 && steps < 500) {
        for (int i = 0; i < 2; ++i) bowl[0].grad[i] = 2 * bowl[0].value[i];
        a.step(bowl);
        ++steps;
    }
    CHECK(norm() < 1e-3);
    CHECK(steps <= 500);

    bowl[0].grad = Tensor({3});
    CHECK_THROWS_AS(a.step(bowl), DomainError);
    CHECK(optimizer_from_string("sgd") == OptimizerKind::Sgd);
    CHECK_THROWS(optimizer_from_string("rmsprop"));
}

TEST_CASE("checkpoint round trip") {
    std::mt19937_64 rng(8);
    ParameterSet ps;
    ps.add("a", random_tensor({3, 4}, rng));
    ps.add("b", random_tensor({5}, rng));
    const auto dir = (std::filesystem::temp_directory_path() / "fuzzvad_ckpt_test").string();
    save_checkpoint(dir, ps, {{"seed", 8}});
    ParameterSet other;
    other.add("a", Tensor({3, 4}));
    other.add("b", Tensor({5}));
    const auto ck = load_checkpoint(dir, other);
    CHECK(ck.metadata.at("seed") == 8);
    for (std::size_t i = 0; i < 12; ++i) CHECK(other[0].value[i] == static_cast<double>(static_cast<float>(ps[0].value[i])));
    ParameterSet wrong;
    wrong.add("a", Tensor({4, 3}));
    wrong.add("b", Tensor({5}));
    CHECK_THROWS_AS(load_checkpoint(dir, wrong), DomainError);
    CHECK(read_checkpoint_metadata(dir).at("seed") == 8);
    CHECK_THROWS_AS(read_checkpoint_metadata("/nonexistent/ckpt"), IoError);
}

TEST_CASE("evaluation forward is seed independent") {
    std::mt19937_64 rng(9);
    ParameterSet ps;
    ps.add("x", random_tensor({8}, rng));
    Graph a(ps, Mode::Eval, 1), b(ps, Mode::Eval, 2);
    CHECK(a.value(a.dropout(a.param("x"), 0.5)) == b.value(b.dropout(b.param("x"), 0.5)));
}

}
