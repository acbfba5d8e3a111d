#pragma once

// Tape-based reverse-mode differentiation over a small fixed op set.
//
// A Graph records one forward pass. Parameters live in a ParameterSet that
// outlives the graph; backward() adds the gradient of a scalar node into
// the set's gradient buffers. A graph can be differentiated once.

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fuzzvad/nn/tensor.hpp"

namespace fuzzvad::nn {

struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
};

class ParameterSet {
public:
    /// Registers a parameter; returns its index. Names must be unique.
    std::size_t add(std::string name, Tensor init);

    std::size_t size() const noexcept { return params_.size(); }
    Parameter& operator[](std::size_t i) { return params_.at(i); }
    const Parameter& operator[](std::size_t i) const { return params_.at(i); }
    std::size_t index_of(const std::string& name) const;
    bool contains(const std::string& name) const;

    /// Total scalar count across all parameters.
    std::size_t scalar_count() const;
    void zero_grad();
    /// Multiplies every gradient by s.
    void scale_grad(double s);

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

private:
    std::vector<Parameter> params_;
};

enum class Mode { Train, Eval };

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation.
Tensor fan_in_uniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng);

class Graph {
public:
    using Node = int;

    Graph(ParameterSet& params, Mode mode, std::uint64_t seed = 0);
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Mode mode() const noexcept { return mode_; }

    Node input(Tensor value);
    Node param(std::size_t index);
    Node param(const std::string& name);

    /// Valid cross-correlation, stride 1: x [H, W, C], w [KH, KW, C, K], b [K]
    /// -> [H-KH+1, W-KW+1, K].
    Node conv2d(Node x, Node w, Node b);
    Node relu(Node x);
    /// Non-overlapping max pooling over [H, W, C], partial windows dropped.
    Node maxpool2d(Node x, std::size_t pool_h, std::size_t pool_w);
    /// Inverted dropout; identity in eval mode.
    Node dropout(Node x, double rate);
    Node flatten(Node x);
    /// [N] -> [R, N].
    Node repeat_sequence(Node x, std::size_t repeats);
    /// Single LSTM layer over seq [T, In] with wx [In, 4H], wh [H, 4H], b [4H]
    /// (gate blocks i, f, g, o) from zero state. Returns hidden states [T, H].
    Node lstm(Node seq, Node wx, Node wh, Node b);
    /// Last row of a [T, H] sequence.
    Node last_step(Node seq);
    /// x [In] * w [In, Out] + b [Out].
    Node dense(Node x, Node w, Node b);
    Node concat(Node a, Node b);
    Node softmax(Node logits);
    /// -log softmax(logits)[label], scalar.
    Node cross_entropy(Node logits, std::size_t label);
    /// wa * a + wb * b for same-shaped nodes.
    Node weighted_sum(Node a, Node b, double wa, double wb);

    const Tensor& value(Node n) const;
    /// Gradient accumulated at a node by backward() (empty when none reached
    /// it). Parameter nodes report the ParameterSet's accumulated gradient.
    const Tensor& grad(Node n) const;
    std::size_t node_count() const noexcept { return nodes_.size(); }

    /// Propagates d(scale * loss) to every node and adds parameter gradients
    /// into the ParameterSet. Throws DomainError when called a second time.
    void backward(Node loss, double scale = 1.0);

private:
    struct NodeData {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        int param_index = -1;
        std::function<void()> backward;
    };

    Node push(Tensor value, bool requires_grad, std::function<void()> backward = {});
    NodeData& node(Node n);
    const NodeData& node(Node n) const;
    /// Node value; parameter nodes read the ParameterSet directly.
    const Tensor& val(Node n) const;
    /// Gradient buffer of a node, allocated on first use.
    Tensor& grad_buffer(Node n);

    ParameterSet& params_;
    Mode mode_;
    std::mt19937_64 rng_;
    std::vector<NodeData> nodes_;
    bool differentiated_ = false;
};

/// Hidden and cell state of one LSTM step.
struct LstmState {
    std::vector<double> hidden;
    std::vector<double> cell;
};

/// Plain LSTM recurrence without a tape; returns the state after every step.
std::vector<LstmState> lstm_forward(const Tensor& seq, const Tensor& wx, const Tensor& wh, const Tensor& b,
                                    const LstmState& initial = {});

}  // namespace fuzzvad::nn
