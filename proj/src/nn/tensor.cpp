#include "fuzzvad/nn/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "fuzzvad/error.hpp"

namespace fuzzvad::nn {

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) { return fmt::format("[{}]", fmt::join(shape, "x")); }

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), values_(shape_size(shape_), fill) {
    for (auto d : shape_) {
        if (d == 0) throw DomainError(fmt::format("tensor shape {} has a zero extent", shape_string(shape_)));
    }
}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), values_(std::move(values)) {
    if (values_.size() != shape_size(shape_)) {
        throw DomainError(fmt::format("tensor shape {} needs {} values, got {}", shape_string(shape_),
                                      shape_size(shape_), values_.size()));
    }
}

Tensor Tensor::reshaped(Shape shape) const {
    if (shape_size(shape) != values_.size()) {
        throw DomainError(fmt::format("cannot reshape {} to {}", shape_string(shape_), shape_string(shape)));
    }
    return Tensor(std::move(shape), values_);
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

}  // namespace fuzzvad::nn
