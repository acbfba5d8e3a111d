#include "fuzzvad/nn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include <Eigen/Core>
#include <fmt/format.h>

#include "fuzzvad/error.hpp"

namespace fuzzvad::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::RowVectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::RowVectorXd>;

ConstMatMap as_matrix(const Tensor& t, std::size_t rows, std::size_t cols) {
    return ConstMatMap(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
MatMap as_matrix(Tensor& t, std::size_t rows, std::size_t cols) {
    return MatMap(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void expect_rank(const Tensor& t, std::size_t rank, const char* op, const char* what) {
    if (t.rank() != rank) {
        throw DomainError(fmt::format("{}: {} must have rank {}, got shape {}", op, what, rank, shape_string(t.shape())));
    }
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Gate activations and states of one LSTM pass, kept for backprop.
struct LstmCache {
    std::size_t steps = 0;
    std::size_t hidden = 0;
    RowMat gates;  // [T, 4H] post-activation i, f, g, o
    RowMat cells;  // [T, H]
    RowMat hiddens;
};

LstmCache run_lstm(const Tensor& seq, const Tensor& wx, const Tensor& wh, const Tensor& b,
                   const std::vector<double>* h0 = nullptr, const std::vector<double>* c0 = nullptr) {
    expect_rank(seq, 2, "lstm", "sequence");
    expect_rank(wx, 2, "lstm", "input weights");
    expect_rank(wh, 2, "lstm", "recurrent weights");
    expect_rank(b, 1, "lstm", "bias");
    const std::size_t steps = seq.dim(0);
    const std::size_t in = seq.dim(1);
    const std::size_t h = wh.dim(0);
    if (wx.dim(0) != in || wx.dim(1) != 4 * h || wh.dim(1) != 4 * h || b.dim(0) != 4 * h) {
        throw DomainError(fmt::format("lstm: inconsistent shapes seq {} wx {} wh {} b {}", shape_string(seq.shape()),
                                      shape_string(wx.shape()), shape_string(wh.shape()), shape_string(b.shape())));
    }
    LstmCache cache;
    cache.steps = steps;
    cache.hidden = h;
    const auto H = static_cast<Eigen::Index>(h);
    cache.gates = as_matrix(seq, steps, in) * as_matrix(wx, in, 4 * h);
    cache.gates.rowwise() += ConstVecMap(b.data(), 4 * H);
    cache.cells.resize(static_cast<Eigen::Index>(steps), H);
    cache.hiddens.resize(static_cast<Eigen::Index>(steps), H);

    Eigen::RowVectorXd h_prev = Eigen::RowVectorXd::Zero(H);
    Eigen::RowVectorXd c_prev = Eigen::RowVectorXd::Zero(H);
    if (h0 && !h0->empty()) {
        if (h0->size() != h) throw DomainError("lstm: initial hidden state has the wrong size");
        h_prev = Eigen::Map<const Eigen::RowVectorXd>(h0->data(), H);
    }
    if (c0 && !c0->empty()) {
        if (c0->size() != h) throw DomainError("lstm: initial cell state has the wrong size");
        c_prev = Eigen::Map<const Eigen::RowVectorXd>(c0->data(), H);
    }
    const auto whm = as_matrix(wh, h, 4 * h);
    for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(steps); ++t) {
        auto z = cache.gates.row(t);
        z += h_prev * whm;
        for (Eigen::Index k = 0; k < H; ++k) {
            z(k) = sigmoid(z(k));
            z(H + k) = sigmoid(z(H + k));
            z(2 * H + k) = std::tanh(z(2 * H + k));
            z(3 * H + k) = sigmoid(z(3 * H + k));
            const double c = z(H + k) * c_prev(k) + z(k) * z(2 * H + k);
            cache.cells(t, k) = c;
            cache.hiddens(t, k) = z(3 * H + k) * std::tanh(c);
        }
        h_prev = cache.hiddens.row(t);
        c_prev = cache.cells.row(t);
    }
    return cache;
}

}  // namespace

std::size_t ParameterSet::add(std::string name, Tensor init) {
    if (contains(name)) throw DomainError(fmt::format("duplicate parameter '{}'", name));
    Tensor grad(init.shape());
    params_.push_back({std::move(name), std::move(init), std::move(grad)});
    return params_.size() - 1;
}

std::size_t ParameterSet::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name == name) return i;
    }
    throw DomainError(fmt::format("unknown parameter '{}'", name));
}

bool ParameterSet::contains(const std::string& name) const {
    return std::any_of(params_.begin(), params_.end(), [&](const Parameter& p) { return p.name == name; });
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

void ParameterSet::zero_grad() {
    for (auto& p : params_) p.grad.fill(0.0);
}

void ParameterSet::scale_grad(double s) {
    for (auto& p : params_) {
        for (double& g : p.grad.values()) g *= s;
    }
}

Tensor fan_in_uniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
    Tensor t(std::move(shape));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : t.values()) v = dist(rng);
    return t;
}

Graph::Graph(ParameterSet& params, Mode mode, std::uint64_t seed) : params_(params), mode_(mode), rng_(seed) {}

Graph::NodeData& Graph::node(Node n) {
    if (n < 0 || static_cast<std::size_t>(n) >= nodes_.size()) throw DomainError("graph: invalid node id");
    return nodes_[static_cast<std::size_t>(n)];
}

const Graph::NodeData& Graph::node(Node n) const {
    if (n < 0 || static_cast<std::size_t>(n) >= nodes_.size()) throw DomainError("graph: invalid node id");
    return nodes_[static_cast<std::size_t>(n)];
}

Tensor& Graph::grad_buffer(Node n) {
    auto& nd = node(n);
    if (nd.param_index >= 0) return params_[static_cast<std::size_t>(nd.param_index)].grad;
    if (nd.grad.size() != nd.value.size()) nd.grad = Tensor(nd.value.shape());
    return nd.grad;
}

Graph::Node Graph::push(Tensor value, bool requires_grad, std::function<void()> backward) {
    if (differentiated_) throw DomainError("graph: cannot extend a graph after backward()");
    nodes_.push_back({std::move(value), Tensor{}, requires_grad, -1, std::move(backward)});
    return static_cast<Node>(nodes_.size() - 1);
}

const Tensor& Graph::val(Node n) const {
    const auto& nd = node(n);
    if (nd.param_index >= 0) return params_[static_cast<std::size_t>(nd.param_index)].value;
    return nd.value;
}

const Tensor& Graph::value(Node n) const { return val(n); }

const Tensor& Graph::grad(Node n) const {
    static const Tensor empty;
    const auto& nd = node(n);
    if (nd.param_index >= 0) return params_[static_cast<std::size_t>(nd.param_index)].grad;
    return nd.grad.size() == nd.value.size() ? nd.grad : empty;
}

Graph::Node Graph::input(Tensor value) { return push(std::move(value), false); }

Graph::Node Graph::param(std::size_t index) {
    if (index >= params_.size()) throw DomainError(fmt::format("unknown parameter index {}", index));
    const Node n = push(Tensor{}, true);
    nodes_.back().param_index = static_cast<int>(index);
    return n;
}

Graph::Node Graph::param(const std::string& name) { return param(params_.index_of(name)); }

Graph::Node Graph::conv2d(Node x, Node w, Node b) {
    const Tensor& xv = val(x);
    const Tensor& wv = val(w);
    const Tensor& bv = val(b);
    expect_rank(xv, 3, "conv2d", "input");
    expect_rank(wv, 4, "conv2d", "kernel");
    expect_rank(bv, 1, "conv2d", "bias");
    const std::size_t H = xv.dim(0), W = xv.dim(1), C = xv.dim(2);
    const std::size_t KH = wv.dim(0), KW = wv.dim(1), K = wv.dim(3);
    if (wv.dim(2) != C || bv.dim(0) != K) {
        throw DomainError(fmt::format("conv2d: input {} does not match kernel {} / bias {}", shape_string(xv.shape()),
                                      shape_string(wv.shape()), shape_string(bv.shape())));
    }
    if (H < KH || W < KW) {
        throw DomainError(fmt::format("conv2d: input {} smaller than kernel {}x{}", shape_string(xv.shape()), KH, KW));
    }
    const std::size_t OH = H - KH + 1, OW = W - KW + 1;
    const std::size_t patch = KH * KW * C;
    const std::size_t positions = OH * OW;

    auto cols = std::make_shared<RowMat>(static_cast<Eigen::Index>(positions), static_cast<Eigen::Index>(patch));
    for (std::size_t i = 0; i < OH; ++i) {
        for (std::size_t j = 0; j < OW; ++j) {
            double* dst = cols->data() + (i * OW + j) * patch;
            for (std::size_t a = 0; a < KH; ++a) {
                const double* src = xv.data() + ((i + a) * W + j) * C;
                std::copy_n(src, KW * C, dst + a * KW * C);
            }
        }
    }
    Tensor out({OH, OW, K});
    auto om = as_matrix(out, positions, K);
    om.noalias() = *cols * as_matrix(wv, patch, K);
    om.rowwise() += ConstVecMap(bv.data(), static_cast<Eigen::Index>(K));

    const bool rg = node(x).requires_grad || node(w).requires_grad || node(b).requires_grad;
    const Node self = static_cast<Node>(nodes_.size());
    return push(std::move(out), rg, [this, self, x, w, b, cols, W, C, KH, KW, K, OH, OW, patch, positions]() {
        const auto dy = as_matrix(node(self).grad, positions, K);
        if (node(w).requires_grad) as_matrix(grad_buffer(w), patch, K).noalias() += cols->transpose() * dy;
        if (node(b).requires_grad) {
            VecMap(grad_buffer(b).data(), static_cast<Eigen::Index>(K)) += dy.colwise().sum();
        }
        if (node(x).requires_grad) {
            const RowMat dcols = dy * as_matrix(val(w), patch, K).transpose();
            Tensor& dx = grad_buffer(x);
            for (std::size_t i = 0; i < OH; ++i) {
                for (std::size_t j = 0; j < OW; ++j) {
                    const double* src = dcols.data() + (i * OW + j) * patch;
                    for (std::size_t a = 0; a < KH; ++a) {
                        double* dst = dx.data() + ((i + a) * W + j) * C;
                        for (std::size_t q = 0; q < KW * C; ++q) dst[q] += src[a * KW * C + q];
                    }
                }
            }
        }
    });
}

Graph::Node Graph::relu(Node x) {
    Tensor out = val(x);
    for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
    const Node self = static_cast<Node>(nodes_.size());
    return push(std::move(out), node(x).requires_grad, [this, self, x]() {
        const auto& xv = val(x);
        const auto& dy = node(self).grad;
        Tensor& dx = grad_buffer(x);
        for (std::size_t i = 0; i < dx.size(); ++i) {
            if (xv[i] > 0.0) dx[i] += dy[i];
        }
    });
}

Graph::Node Graph::maxpool2d(Node x, std::size_t ph, std::size_t pw) {
    const Tensor& xv = val(x);
    expect_rank(xv, 3, "maxpool2d", "input");
    if (ph == 0 || pw == 0) throw DomainError("maxpool2d: pool extent must be positive");
    const std::size_t H = xv.dim(0), W = xv.dim(1), C = xv.dim(2);
    if (H < ph || W < pw) {
        throw DomainError(fmt::format("maxpool2d: input {} smaller than pool {}x{}", shape_string(xv.shape()), ph, pw));
    }
    const std::size_t OH = H / ph, OW = W / pw;
    Tensor out({OH, OW, C});
    auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
    for (std::size_t i = 0; i < OH; ++i) {
        for (std::size_t j = 0; j < OW; ++j) {
            for (std::size_t c = 0; c < C; ++c) {
                std::size_t best = ((i * ph) * W + j * pw) * C + c;
                for (std::size_t a = 0; a < ph; ++a) {
                    for (std::size_t q = 0; q < pw; ++q) {
                        const std::size_t idx = ((i * ph + a) * W + (j * pw + q)) * C + c;
                        if (xv[idx] > xv[best]) best = idx;
                    }
                }
                const std::size_t o = (i * OW + j) * C + c;
                out[o] = xv[best];
                (*argmax)[o] = best;
            }
        }
    }
    const Node self = static_cast<Node>(nodes_.size());
    return push(std::move(out), node(x).requires_grad, [this, self, x, argmax]() {
        const auto& dy = node(self).grad;
        Tensor& dx = grad_buffer(x);
        for (std::size_t o = 0; o < dy.size(); ++o) dx[(*argmax)[o]] += dy[o];
    });
}

Graph::Node Graph::dropout(Node x, double rate) {
    if (!(rate >= 0.0 && rate < 1.0)) throw DomainError(fmt::format("dropout rate {} outside [0, 1)", rate));
    if (mode_ == Mode::Eval || rate == 0.0) {
        const Node self = static_cast<Node>(nodes_.size());
        return push(val(x), node(x).requires_grad, [this, self, x]() {
            const auto& dy = node(self).grad;
            Tensor& dx = grad_buffer(x);
            for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i];
        });
    }
    Tensor out = val(x);
    auto mask = std::make_shared<std::vector<double>>(out.size());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double keep_scale = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < out.size(); ++i) {
        (*mask)[i] = unit(rng_) < rate ? 0.0 : keep_scale;
        out[i] *= (*mask)[i];
    }
    const Node self = static_cast<Node>(nodes_.size());
    return push(std::move(out), node(x).requires_grad, [this, self, x, mask]() {
        const auto& dy = node(self).grad;
        Tensor& dx = grad_buffer(x);
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * (*mask)[i];
    });
}

Graph::Node Graph::flatten(Node x) {
    Tensor out = val(x).reshaped({val(x).size()});
    const Node self = static_cast<Node>(nodes_.size());
    return push(std::move(out), node(x).requires_grad, [this, self, x]() {
        const auto& dy = node(self).grad;
        Tensor& dx = grad_buffer(x);
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i];
    });
}

Graph::Node Graph::repeat_sequence(Node x, std::size_t repeats) {
    if (repeats < 1) throw DomainError("repeat_sequence: repeat count must be >= 1");
    const Tensor& xv = val(x);
    expect_rank(xv, 1, "repeat_sequence", "input");
    const std::size_t n = xv.size();
    Tensor out({repeats, n});
    for (std::size_t r = 0; r < repeats; ++r) std::copy_n(xv.data(), n, out.data() + r * n);
    const Node self = static_cast<Node>(nodes_.size());
    return push(std::move(out), node(x).requires_grad, [this, self, x, repeats, n]() {
        const auto& dy = node(self).grad;
        Tensor& dx = grad_buffer(x);
        for (std::size_t r = 0; r < repeats; ++r) {
            for (std::size_t i = 0; i < n; ++i) dx[i] += dy[r * n + i];
        }
    });
}

Graph::Node Graph::lstm(Node seq, Node wx, Node wh, Node b) {
    auto cache = std::make_shared<LstmCache>(run_lstm(val(seq), val(wx), val(wh), val(b)));
    const std::size_t T = cache->steps, H = cache->hidden;
    Tensor out({T, H});
    as_matrix(out, T, H) = cache->hiddens;
    const bool rg = node(seq).requires_grad || node(wx).requires_grad || node(wh).requires_grad || node(b).requires_grad;
    const Node self = static_cast<Node>(nodes_.size());
    return push(std::move(out), rg, [this, self, seq, wx, wh, b, cache]() {
        const std::size_t T = cache->steps, H = cache->hidden;
        const auto Hi = static_cast<Eigen::Index>(H);
        const std::size_t in = val(seq).dim(1);
        const auto dH = as_matrix(node(self).grad, T, H);
        const auto whm = as_matrix(val(wh), H, 4 * H);
        RowMat dz(static_cast<Eigen::Index>(T), 4 * Hi);
        Eigen::RowVectorXd dh_next = Eigen::RowVectorXd::Zero(Hi);
        Eigen::RowVectorXd dc_next = Eigen::RowVectorXd::Zero(Hi);
        for (auto t = static_cast<Eigen::Index>(T) - 1; t >= 0; --t) {
            const auto g = cache->gates.row(t);
            for (Eigen::Index k = 0; k < Hi; ++k) {
                const double ig = g(k), fg = g(Hi + k), cg = g(2 * Hi + k), og = g(3 * Hi + k);
                const double c = cache->cells(t, k);
                const double c_prev = t > 0 ? cache->cells(t - 1, k) : 0.0;
                const double tc = std::tanh(c);
                const double dh = dH(t, k) + dh_next(k);
                const double dc = dh * og * (1.0 - tc * tc) + dc_next(k);
                dz(t, k) = dc * cg * ig * (1.0 - ig);
                dz(t, Hi + k) = dc * c_prev * fg * (1.0 - fg);
                dz(t, 2 * Hi + k) = dc * ig * (1.0 - cg * cg);
                dz(t, 3 * Hi + k) = dh * tc * og * (1.0 - og);
                dc_next(k) = dc * fg;
            }
            dh_next = dz.row(t) * whm.transpose();
        }
        if (node(wh).requires_grad && T > 1) {
            as_matrix(grad_buffer(wh), H, 4 * H).noalias() +=
                cache->hiddens.topRows(static_cast<Eigen::Index>(T) - 1).transpose() *
                dz.bottomRows(static_cast<Eigen::Index>(T) - 1);
        }
        if (node(b).requires_grad) VecMap(grad_buffer(b).data(), 4 * Hi) += dz.colwise().sum();
        if (node(wx).requires_grad) {
            as_matrix(grad_buffer(wx), in, 4 * H).noalias() += as_matrix(val(seq), T, in).transpose() * dz;
        }
        if (node(seq).requires_grad) {
            as_matrix(grad_buffer(seq), T, in).noalias() += dz * as_matrix(val(wx), in, 4 * H).transpose();
        }
    });
}

Graph::Node Graph::last_step(Node seq) {
    const Tensor& sv = val(seq);
    expect_rank(sv, 2, "last_step", "sequence");
    const std::size_t T = sv.dim(0), H = sv.dim(1);
    Tensor out({H});
    std::copy_n(sv.data() + (T - 1) * H, H, out.data());
    const Node self = static_cast<Node>(nodes_.size());
    return push(std::move(out), node(seq).requires_grad, [this, self, seq, T, H]() {
        const auto& dy = node(self).grad;
        Tensor& ds = grad_buffer(seq);
        for (std::size_t i = 0; i < H; ++i) ds[(T - 1) * H + i] += dy[i];
    });
}

Graph::Node Graph::dense(Node x, Node w, Node b) {
    const Tensor& xv = val(x);
    const Tensor& wv = val(w);
    const Tensor& bv = val(b);
    expect_rank(xv, 1, "dense", "input");
    expect_rank(wv, 2, "dense", "weights");
    expect_rank(bv, 1, "dense", "bias");
    const std::size_t in = xv.dim(0), out_n = wv.dim(1);
    if (wv.dim(0) != in || bv.dim(0) != out_n) {
        throw DomainError(fmt::format("dense: input {} does not match weights {} / bias {}", shape_string(xv.shape()),
                                      shape_string(wv.shape()), shape_string(bv.shape())));
    }
    Tensor out({out_n});
    VecMap(out.data(), static_cast<Eigen::Index>(out_n)).noalias() =
        ConstVecMap(xv.data(), static_cast<Eigen::Index>(in)) * as_matrix(wv, in, out_n) +
        ConstVecMap(bv.data(), static_cast<Eigen::Index>(out_n));
    const bool rg = node(x).requires_grad || node(w).requires_grad || node(b).requires_grad;
    const Node self = static_cast<Node>(nodes_.size());
    return push(std::move(out), rg, [this, self, x, w, b, in, out_n]() {
        const ConstVecMap dy(node(self).grad.data(), static_cast<Eigen::Index>(out_n));
        if (node(w).requires_grad) {
            as_matrix(grad_buffer(w), in, out_n).noalias() +=
                ConstVecMap(val(x).data(), static_cast<Eigen::Index>(in)).transpose() * dy;
        }
        if (node(b).requires_grad) VecMap(grad_buffer(b).data(), static_cast<Eigen::Index>(out_n)) += dy;
        if (node(x).requires_grad) {
            VecMap(grad_buffer(x).data(), static_cast<Eigen::Index>(in)).noalias() +=
                dy * as_matrix(val(w), in, out_n).transpose();
        }
    });
}

Graph::Node Graph::concat(Node a, Node b) {
    const Tensor& av = val(a);
    const Tensor& bv = val(b);
    expect_rank(av, 1, "concat", "first input");
    expect_rank(bv, 1, "concat", "second input");
    const std::size_t na = av.size(), nb = bv.size();
    Tensor out({na + nb});
    std::copy_n(av.data(), na, out.data());
    std::copy_n(bv.data(), nb, out.data() + na);
    const Node self = static_cast<Node>(nodes_.size());
    return push(std::move(out), node(a).requires_grad || node(b).requires_grad, [this, self, a, b, na, nb]() {
        const auto& dy = node(self).grad;
        if (node(a).requires_grad) {
            Tensor& da = grad_buffer(a);
            for (std::size_t i = 0; i < na; ++i) da[i] += dy[i];
        }
        if (node(b).requires_grad) {
            Tensor& db = grad_buffer(b);
            for (std::size_t i = 0; i < nb; ++i) db[i] += dy[na + i];
        }
    });
}

namespace {

std::vector<double> stable_softmax(std::span<const double> z) {
    for (double v : z) {
        if (!std::isfinite(v)) throw NumericError("softmax: non-finite logit");
    }
    const double peak = *std::max_element(z.begin(), z.end());
    std::vector<double> p(z.size());
    double total = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) total += (p[i] = std::exp(z[i] - peak));
    for (double& v : p) v /= total;
    return p;
}

}  // namespace

Graph::Node Graph::softmax(Node logits) {
    const Tensor& zv = val(logits);
    expect_rank(zv, 1, "softmax", "logits");
    Tensor out(zv.shape(), stable_softmax(zv.values()));
    const Node self = static_cast<Node>(nodes_.size());
    return push(std::move(out), node(logits).requires_grad, [this, self, logits]() {
        const auto& p = val(self);
        const auto& dp = node(self).grad;
        double dot = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) dot += dp[i] * p[i];
        Tensor& dz = grad_buffer(logits);
        for (std::size_t i = 0; i < p.size(); ++i) dz[i] += p[i] * (dp[i] - dot);
    });
}

Graph::Node Graph::cross_entropy(Node logits, std::size_t label) {
    const Tensor& zv = val(logits);
    expect_rank(zv, 1, "cross_entropy", "logits");
    if (label >= zv.size()) {
        throw DomainError(fmt::format("cross_entropy: label {} out of range for {} classes", label, zv.size()));
    }
    auto probs = std::make_shared<std::vector<double>>(stable_softmax(zv.values()));
    const double peak = *std::max_element(zv.values().begin(), zv.values().end());
    double total = 0.0;
    for (double z : zv.values()) total += std::exp(z - peak);
    Tensor out({1}, {peak + std::log(total) - zv[label]});
    const Node self = static_cast<Node>(nodes_.size());
    return push(std::move(out), node(logits).requires_grad, [this, self, logits, label, probs]() {
        const double g = node(self).grad[0];
        Tensor& dz = grad_buffer(logits);
        for (std::size_t i = 0; i < probs->size(); ++i) dz[i] += g * ((*probs)[i] - (i == label ? 1.0 : 0.0));
    });
}

Graph::Node Graph::weighted_sum(Node a, Node b, double wa, double wb) {
    const Tensor& av = val(a);
    const Tensor& bv = val(b);
    if (av.shape() != bv.shape()) throw DomainError("weighted_sum: shape mismatch");
    Tensor out(av.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = wa * av[i] + wb * bv[i];
    const Node self = static_cast<Node>(nodes_.size());
    return push(std::move(out), node(a).requires_grad || node(b).requires_grad, [this, self, a, b, wa, wb]() {
        const auto& dy = node(self).grad;
        if (node(a).requires_grad) {
            Tensor& da = grad_buffer(a);
            for (std::size_t i = 0; i < dy.size(); ++i) da[i] += wa * dy[i];
        }
        if (node(b).requires_grad) {
            Tensor& db = grad_buffer(b);
            for (std::size_t i = 0; i < dy.size(); ++i) db[i] += wb * dy[i];
        }
    });
}

void Graph::backward(Node loss, double scale) {
    if (differentiated_) throw DomainError("graph: backward() already ran on this graph; run a new forward pass");
    if (val(loss).size() != 1) throw DomainError("graph: backward() needs a scalar loss");
    differentiated_ = true;
    grad_buffer(loss)[0] = scale;
    for (auto n = loss; n >= 0; --n) {
        auto& nd = nodes_[static_cast<std::size_t>(n)];
        if (nd.param_index >= 0 || !nd.requires_grad || nd.grad.size() != nd.value.size()) continue;
        if (nd.backward) nd.backward();
    }
}

std::vector<LstmState> lstm_forward(const Tensor& seq, const Tensor& wx, const Tensor& wh, const Tensor& b,
                                    const LstmState& initial) {
    const auto cache = run_lstm(seq, wx, wh, b, &initial.hidden, &initial.cell);
    std::vector<LstmState> states(cache.steps);
    for (std::size_t t = 0; t < cache.steps; ++t) {
        const auto ti = static_cast<Eigen::Index>(t);
        states[t].hidden.assign(cache.hiddens.row(ti).begin(), cache.hiddens.row(ti).end());
        states[t].cell.assign(cache.cells.row(ti).begin(), cache.cells.row(ti).end());
    }
    return states;
}

}  // namespace fuzzvad::nn
