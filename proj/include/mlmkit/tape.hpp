// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mlmkit/common.hpp"
#include "mlmkit/tensor.hpp"

namespace mlmkit {

/// Named trainable tensor. Gradients are accumulated in float64 so that
/// split-batch accumulation matches the monolithic batch to rounding error.
struct Parameter {
    std::string name;
    Tensor value;
    std::vector<double> grad;  // empty until first backward touches it

    Parameter() = default;
    Parameter(std::string name_, Tensor value_) : name(std::move(name_)), value(std::move(value_)) {}

    int64_t numel() const { return value.numel(); }
    void ensure_grad();
    void zero_grad();
};

enum class Reduction { sum, mean };

/// One recorded operation. `value` is the float32 forward result; `value64`
/// is a float64 shadow of the same computation, filled on demand by
/// Tape::forward64_all (used for finite-difference checks). `grad` holds
/// d(loss)/d(value) in float64 during backward.
struct Node {
    Tensor value;
    std::vector<double> value64;
    std::vector<double> grad;
    std::vector<Node*> inputs;
    std::function<void(Node&)> backward_fn;
    std::function<void(Node&)> forward64_fn;
    Parameter* param = nullptr;
    bool requires_grad = false;
    const char* op = "leaf";

    int64_t numel() const { return value.numel(); }
};

/// Records a forward computation as a topologically ordered list of nodes and
/// replays it backward. Forward kernels accumulate in float64 internally and
/// store float32. A tape is single-use per forward pass; call clear() or
/// build a fresh one for the next step.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Untrainable input tensor.
    Node* constant(Tensor t);
    /// Trainable parameter; repeated calls with the same Parameter return the
    /// same node, so fan-out (e.g. tied embeddings) accumulates into one slot.
    Node* param(Parameter& p);

    /// Elementwise a + b. b may have a shape that is a suffix of a's shape
    /// (bias broadcast over leading dimensions).
    Node* add(Node* a, Node* b);
    /// Elementwise product, same shapes.
    Node* mul(Node* a, Node* b);
    Node* scale(Node* a, double c);

    /// [m,k] x [k,n] -> [m,n]
    Node* matmul(Node* a, Node* b);
    /// [m,k] x [n,k]^T -> [m,n]
    Node* matmul_nt(Node* a, Node* b);
    /// [B,m,k] x [B,k,n] -> [B,m,n]
    Node* bmm(Node* a, Node* b);
    /// [B,m,k] x [B,n,k]^T -> [B,m,n]
    Node* bmm_nt(Node* a, Node* b);

    /// Softmax over the last dimension.
    Node* softmax_lastdim(Node* a);
    /// Normalization over the last dimension: gain * (x - mu) / sqrt(var + eps) + bias.
    /// Variance is the biased estimate. gain and bias have shape [last_dim].
    Node* layer_norm(Node* x, Node* gain, Node* bias, double eps = 1e-5);
    /// 0.5 * x * (1 + erf(x / sqrt(2)))
    Node* gelu(Node* x);
    Node* tanh_act(Node* x);

    /// Row gather from a [V,H] table; output [ids.size(), H].
    Node* embedding(Node* table, std::vector<int64_t> ids);
    /// Row gather from any [N,H] matrix (e.g. the first token of each sequence).
    Node* take_rows(Node* x, std::vector<int64_t> rows);

    /// Softmax cross entropy of [N,C] logits against integer targets.
    /// Target -1 means "ignore this row". Throws if every row is ignored.
    Node* cross_entropy(Node* logits, std::vector<int64_t> targets, Reduction reduction);

    Node* reshape(Node* a, std::vector<int64_t> shape);
    /// [B*T, H] -> [B*heads, T, H/heads]
    Node* split_heads(Node* x, int64_t batch, int64_t seq, int64_t heads);
    /// [B*heads, T, H/heads] -> [B*T, H]
    Node* merge_heads(Node* x, int64_t batch, int64_t seq, int64_t heads);

    /// Inverted-scaling dropout: keeps with probability 1-p and multiplies
    /// kept values by 1/(1-p). Identity (no node added) when !training or p==0.
    Node* dropout(Node* x, double p, Rng& rng, bool training);

    /// Scalar sum of all elements.
    Node* sum_all(Node* a);

    /// Reverse sweep from a scalar loss. Seeds d(loss)/d(loss) = seed and
    /// flushes gradients of parameter nodes into Parameter::grad (additive,
    /// so repeated calls accumulate across micro batches).
    void backward(Node* loss, double seed = 1.0);

    /// Recomputes every node's float64 shadow value from current parameter
    /// contents. Random draws (dropout masks) are reused, not re-sampled.
    void forward64_all();
    double scalar64(const Node* n) const;

    void clear();
    size_t size() const { return nodes_.size(); }

private:
    Node* make(const char* op, Tensor value, std::vector<Node*> inputs);
    std::vector<std::unique_ptr<Node>> nodes_;
    std::unordered_map<Parameter*, Node*> param_nodes_;
};

struct GradCheckReport {
    double max_rel_err = 0.0;
    int64_t coords_checked = 0;
    std::string worst_param;
    int64_t worst_index = -1;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

/// Central-difference check of d(loss)/d(param[i]) for the listed coordinates.
/// The numeric side evaluates the float64 shadow forward at parameter values
/// snapped to the float32 grid (x+h and x-h each rounded to float32, and the
/// difference quotient uses the exact snapped step). Relative error per
/// coordinate is |a - n| / max(|a|, |n|, 1e-8). Zeroes and re-runs backward;
/// parameters are restored bit-exactly afterwards.
GradCheckReport grad_check(Tape& tape, Node* loss,
                           const std::vector<std::pair<Parameter*, std::vector<int64_t>>>& coords,
                           double h = 1e-3);

}  // namespace mlmkit
