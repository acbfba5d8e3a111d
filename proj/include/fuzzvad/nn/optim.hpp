#pragma once

#include <string>
#include <vector>

#include "fuzzvad/nn/graph.hpp"

namespace fuzzvad::nn {

enum class OptimizerKind { Adam, Sgd };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Applies the configured update rule to every parameter using its
/// accumulated gradient. Moment buffers are created on the first step.
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig config = {}) : config_(config) {}

    void step(ParameterSet& params);
    const OptimizerConfig& config() const noexcept { return config_; }
    long steps_taken() const noexcept { return step_; }

private:
    OptimizerConfig config_;
    long step_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(const std::string& name);

}  // namespace fuzzvad::nn
