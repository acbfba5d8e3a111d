#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "fuzzvad/nn/graph.hpp"

namespace testutil {

struct GradCheck {
    double max_rel_error = 0.0;
    std::size_t probes = 0;
};

/// Central differences against backward() for every parameter entry (or at
/// most max_per_param random entries of each). build(g) returns a scalar node.
template <class Build>
GradCheck grad_check(fuzzvad::nn::ParameterSet& ps, Build build, fuzzvad::nn::Mode mode = fuzzvad::nn::Mode::Train,
                     std::uint64_t seed = 1, std::size_t max_per_param = 0, double h = 1e-5, double floor = 1e-4) {
    using namespace fuzzvad::nn;
    ps.zero_grad();
    {
        Graph g(ps, mode, seed);
        const auto loss = build(g);
        g.backward(loss);
    }
    auto eval = [&]() {
        Graph g(ps, mode, seed);
        return g.value(build(g))[0];
    };
    GradCheck out;
    std::mt19937_64 rng(seed + 99);
    for (std::size_t p = 0; p < ps.size(); ++p) {
        auto& prm = ps[p];
        std::vector<std::size_t> idx(prm.value.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        if (max_per_param && idx.size() > max_per_param) {
            std::shuffle(idx.begin(), idx.end(), rng);
            idx.resize(max_per_param);
        }
        for (auto i : idx) {
            const double keep = prm.value[i];
            prm.value[i] = keep + h;
            const double up = eval();
            prm.value[i] = keep - h;
            const double down = eval();
            prm.value[i] = keep;
            const double numeric = (up - down) / (2 * h);
            const double analytic = prm.grad[i];
            const double rel = std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), floor});
            out.max_rel_error = std::max(out.max_rel_error, rel);
            ++out.probes;
        }
    }
    return out;
}

inline fuzzvad::nn::Tensor random_tensor(fuzzvad::nn::Shape shape, std::mt19937_64& rng, double scale = 1.0) {
    fuzzvad::nn::Tensor t(std::move(shape));
    std::normal_distribution<double> g(0.0, scale);
    for (double& v : t.values()) v = g(rng);
    return t;
}

}  // namespace testutil
