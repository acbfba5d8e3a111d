#include "fuzzvad/nn/optim.hpp"

#include <cmath>

#include <fmt/format.h>

#include "fuzzvad/error.hpp"

namespace fuzzvad::nn {

void Optimizer::step(ParameterSet& params) {
    if (m_.empty() && config_.kind == OptimizerKind::Adam) {
        for (const auto& p : params) {
            m_.emplace_back(p.value.size(), 0.0);
            v_.emplace_back(p.value.size(), 0.0);
        }
    }
    if (config_.kind == OptimizerKind::Adam && m_.size() != params.size()) {
        throw DomainError("optimizer: parameter set changed between steps");
    }
    ++step_;
    const double lr = config_.learning_rate;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& p = params[k];
        if (p.grad.shape() != p.value.shape()) {
            throw DomainError(fmt::format("optimizer: gradient {} does not match parameter '{}' {}",
                                          shape_string(p.grad.shape()), p.name, shape_string(p.value.shape())));
        }
        if (config_.kind == OptimizerKind::Sgd) {
            for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] -= lr * p.grad[i];
            continue;
        }
        auto& m = m_[k];
        auto& v = v_[k];
        if (m.size() != p.value.size()) throw DomainError("optimizer: parameter resized between steps");
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            p.value[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
        }
    }
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::Adam ? "adam" : "sgd"; }

OptimizerKind optimizer_from_string(const std::string& name) {
    if (name == "adam") return OptimizerKind::Adam;
    if (name == "sgd") return OptimizerKind::Sgd;
    throw DomainError(fmt::format("unknown optimizer '{}'", name));
}

}  // namespace fuzzvad::nn
