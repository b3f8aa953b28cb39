// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mlmkit/common.hpp"
#include "mlmkit/tape.hpp"
#include "mlmkit/tensor.hpp"

namespace mlmkit {

struct ModelConfig {
    int64_t layers = 12;
    int64_t hidden = 768;
    int64_t heads = 12;
    int64_t ffn_hidden = 3072;
    int64_t vocab_size = 40000;
    int64_t max_positions = 514;  // usable length + 2 reserved offset slots
    double dropout = 0.1;
    double attention_dropout = 0.1;
    bool tie_lm_head = true;

    int64_t head_dim() const { return hidden / heads; }
    int64_t usable_positions() const { return max_positions - kPositionOffset; }
    void validate() const;

    static constexpr int64_t kPositionOffset = 2;
};

/// Rectangular right-padded batch of token id sequences.
struct Batch {
    std::vector<int64_t> ids;  // row-major, batch*seq
    int64_t batch = 0;
    int64_t seq = 0;

    static Batch pad_to_rect(const std::vector<std::vector<int64_t>>& seqs, int64_t pad_id);
    int64_t at(int64_t b, int64_t t) const { return ids[static_cast<size_t>(b * seq + t)]; }
};

/// Per-layer attention probabilities captured during a forward pass.
struct ForwardTrace {
    std::vector<Tensor> attention;  // each [batch*heads, seq, seq]
};

/// Transformer encoder (post-norm residual blocks, learned positions with a
/// fixed offset of 2, gelu feed-forward) plus three heads: a
/// masked-token head (always present, output weights tied to the token
/// embeddings by default), and optional sequence / per-token classifiers.
class EncoderModel {
public:
    static EncoderModel init(const ModelConfig& config, uint64_t seed);

    /// Closed-form trainable-parameter count of the trunk plus masked-token
    /// head for this config (classifier heads not included).
    static int64_t count_parameters(const ModelConfig& config);

    const ModelConfig& config() const { return config_; }
    /// Sum of element counts over every registered parameter.
    int64_t parameter_total() const;
    std::vector<Parameter*> parameters();
    std::vector<const Parameter*> parameters() const;
    Parameter* find(const std::string& name);
    void zero_grad();

    /// Adds a pooled-sequence classifier (dense+tanh on the first position,
    /// then a zero-initialized linear layer with `classes` outputs).
    void attach_seq_head(int64_t classes, uint64_t seed);
    /// Adds a zero-initialized per-token classifier with `labels` outputs.
    void attach_tok_head(int64_t labels, uint64_t seed);
    /// Overrides both dropout rates, e.g. when fine-tuning a loaded model.
    void set_dropout(double hidden_dropout, double attention_dropout);
    bool has_seq_head() const { return seq_classes_ > 0; }
    bool has_tok_head() const { return tok_labels_ > 0; }
    int64_t seq_classes() const { return seq_classes_; }
    int64_t tok_labels() const { return tok_labels_; }

    /// Final hidden states, shape [batch*seq, hidden]. Keys at pad-token
    /// positions are excluded from every attention row. `rng` may be null
    /// when not training or when both dropout rates are zero.
    Node* encode(Tape& tape, const Batch& batch, bool training, Rng* rng,
                 ForwardTrace* trace = nullptr);

    /// Vocabulary logits at every position: [batch*seq, vocab].
    Node* mlm_logits(Tape& tape, const Batch& batch, bool training, Rng* rng,
                     ForwardTrace* trace = nullptr);
    /// Vocabulary logits at selected flat positions only (row = b*seq + t);
    /// identical to the corresponding rows of mlm_logits.
    Node* mlm_logits_at(Tape& tape, const Batch& batch, const std::vector<int64_t>& flat_positions,
                        bool training, Rng* rng);
    /// Sequence-classifier logits, [batch, classes].
    Node* seq_logits(Tape& tape, const Batch& batch, bool training, Rng* rng);
    /// Per-token classifier logits, [batch*seq, labels].
    Node* tok_logits(Tape& tape, const Batch& batch, bool training, Rng* rng);

private:
    EncoderModel() = default;
    Parameter* add_param(const std::string& name, Tensor value);
    Node* mlm_from_hidden(Tape& tape, Node* hidden);

    ModelConfig config_;
    std::vector<std::unique_ptr<Parameter>> registry_;
    int64_t seq_classes_ = 0;
    int64_t tok_labels_ = 0;

    // Convenience pointers into the registry.
    Parameter* tok_emb_ = nullptr;
    Parameter* pos_emb_ = nullptr;
    Parameter* emb_ln_gain_ = nullptr;
    Parameter* emb_ln_bias_ = nullptr;
    struct Layer {
        Parameter *wq, *bq, *wk, *bk, *wv, *bv, *wo, *bo;
        Parameter *ln1_gain, *ln1_bias;
        Parameter *w1, *b1, *w2, *b2;
        Parameter *ln2_gain, *ln2_bias;
    };
    std::vector<Layer> layers_;
    Parameter* lm_dense_w_ = nullptr;
    Parameter* lm_dense_b_ = nullptr;
    Parameter* lm_ln_gain_ = nullptr;
    Parameter* lm_ln_bias_ = nullptr;
    Parameter* lm_out_w_ = nullptr;  // only when untied
    Parameter* lm_out_bias_ = nullptr;
    Parameter* pooler_w_ = nullptr;
    Parameter* pooler_b_ = nullptr;
    Parameter* seq_cls_w_ = nullptr;
    Parameter* seq_cls_b_ = nullptr;
    Parameter* tok_cls_w_ = nullptr;
    Parameter* tok_cls_b_ = nullptr;
};

}  // namespace mlmkit
