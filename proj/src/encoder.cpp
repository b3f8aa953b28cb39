// SPDX-License-Identifier: Apache-2.0
#include "mlmkit/encoder.hpp"

#include <cmath>

#include "mlmkit/bpe.hpp"

namespace mlmkit {

namespace {
constexpr double kMaskedScore = -1e9;
}

void ModelConfig::validate() const {
    if (layers < 1 || hidden < 1 || heads < 1 || ffn_hidden < 1 || vocab_size < 1)
        throw ConfigError("model dimensions must be positive");
    if (hidden % heads != 0)
        throw ConfigError("hidden size " + std::to_string(hidden) + " not divisible by " +
                          std::to_string(heads) + " heads");
    if (max_positions <= kPositionOffset)
        throw ConfigError("max_positions must exceed the position offset of " +
                          std::to_string(kPositionOffset));
    if (dropout < 0.0 || dropout >= 1.0 || attention_dropout < 0.0 || attention_dropout >= 1.0)
        throw ConfigError("dropout rates must lie in [0,1)");
}

Batch Batch::pad_to_rect(const std::vector<std::vector<int64_t>>& seqs, int64_t pad_id) {
    Batch b;
    b.batch = static_cast<int64_t>(seqs.size());
    for (const auto& s : seqs) b.seq = std::max(b.seq, static_cast<int64_t>(s.size()));
    b.ids.assign(static_cast<size_t>(b.batch * b.seq), pad_id);
    for (int64_t r = 0; r < b.batch; ++r)
        std::copy(seqs[static_cast<size_t>(r)].begin(), seqs[static_cast<size_t>(r)].end(),
                  b.ids.begin() + r * b.seq);
    return b;
}

int64_t EncoderModel::count_parameters(const ModelConfig& c) {
    const int64_t H = c.hidden, F = c.ffn_hidden, V = c.vocab_size, P = c.max_positions;
    const int64_t embeddings = V * H + P * H + 2 * H;
    const int64_t per_layer = 4 * (H * H + H) + (H * F + F) + (F * H + H) + 4 * H;
    const int64_t lm_head = (H * H + H) + 2 * H + V + (c.tie_lm_head ? 0 : V * H);
    return embeddings + c.layers * per_layer + lm_head;
}

Parameter* EncoderModel::add_param(const std::string& name, Tensor value) {
    registry_.push_back(std::make_unique<Parameter>(name, std::move(value)));
    return registry_.back().get();
}

EncoderModel EncoderModel::init(const ModelConfig& config, uint64_t seed) {
    config.validate();
    EncoderModel m;
    m.config_ = config;
    Rng rng(seed);
    const int64_t H = config.hidden, F = config.ffn_hidden, V = config.vocab_size,
                  P = config.max_positions;
    const float std_dev = 0.02f;
    auto tn = [&](std::vector<int64_t> shape) {
        return Tensor::randn_truncated(std::move(shape), rng, 0.0f, std_dev);
    };
    auto zeros = [](std::vector<int64_t> shape) { return Tensor::zeros(std::move(shape)); };
    auto ones = [](std::vector<int64_t> shape) { return Tensor::full(std::move(shape), 1.0f); };

    m.tok_emb_ = m.add_param("tok_emb", tn({V, H}));
    m.pos_emb_ = m.add_param("pos_emb", tn({P, H}));
    m.emb_ln_gain_ = m.add_param("emb_ln.gain", ones({H}));
    m.emb_ln_bias_ = m.add_param("emb_ln.bias", zeros({H}));
    for (int64_t l = 0; l < config.layers; ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        Layer lay;
        lay.wq = m.add_param(p + "attn.wq", tn({H, H}));
        lay.bq = m.add_param(p + "attn.bq", zeros({H}));
        lay.wk = m.add_param(p + "attn.wk", tn({H, H}));
        lay.bk = m.add_param(p + "attn.bk", zeros({H}));
        lay.wv = m.add_param(p + "attn.wv", tn({H, H}));
        lay.bv = m.add_param(p + "attn.bv", zeros({H}));
        lay.wo = m.add_param(p + "attn.wo", tn({H, H}));
        lay.bo = m.add_param(p + "attn.bo", zeros({H}));
        lay.ln1_gain = m.add_param(p + "ln1.gain", ones({H}));
        lay.ln1_bias = m.add_param(p + "ln1.bias", zeros({H}));
        lay.w1 = m.add_param(p + "ffn.w1", tn({F, H}));
        lay.b1 = m.add_param(p + "ffn.b1", zeros({F}));
        lay.w2 = m.add_param(p + "ffn.w2", tn({H, F}));
        lay.b2 = m.add_param(p + "ffn.b2", zeros({H}));
        lay.ln2_gain = m.add_param(p + "ln2.gain", ones({H}));
        lay.ln2_bias = m.add_param(p + "ln2.bias", zeros({H}));
        m.layers_.push_back(lay);
    }
    m.lm_dense_w_ = m.add_param("lm_head.dense.w", tn({H, H}));
    m.lm_dense_b_ = m.add_param("lm_head.dense.b", zeros({H}));
    m.lm_ln_gain_ = m.add_param("lm_head.ln.gain", ones({H}));
    m.lm_ln_bias_ = m.add_param("lm_head.ln.bias", zeros({H}));
    if (!config.tie_lm_head) m.lm_out_w_ = m.add_param("lm_head.out_w", tn({V, H}));
    m.lm_out_bias_ = m.add_param("lm_head.out_bias", zeros({V}));
    return m;
}

void EncoderModel::attach_seq_head(int64_t classes, uint64_t seed) {
    if (classes < 2) throw ConfigError("sequence head needs at least 2 classes");
    if (seq_classes_ > 0) throw ContractError("sequence head already attached");
    Rng rng(seed);
    const int64_t H = config_.hidden;
    pooler_w_ = add_param("pooler.w", Tensor::randn_truncated({H, H}, rng, 0.0f, 0.02f));
    pooler_b_ = add_param("pooler.b", Tensor::zeros({H}));
    seq_cls_w_ = add_param("seq_cls.w", Tensor::zeros({classes, H}));
    seq_cls_b_ = add_param("seq_cls.b", Tensor::zeros({classes}));
    seq_classes_ = classes;
}

void EncoderModel::attach_tok_head(int64_t labels, uint64_t seed) {
    if (labels < 2) throw ConfigError("token head needs at least 2 labels");
    if (tok_labels_ > 0) throw ContractError("token head already attached");
    (void)seed;  // zero-initialized; seed kept for interface symmetry
    const int64_t H = config_.hidden;
    tok_cls_w_ = add_param("tok_cls.w", Tensor::zeros({labels, H}));
    tok_cls_b_ = add_param("tok_cls.b", Tensor::zeros({labels}));
    tok_labels_ = labels;
}

void EncoderModel::set_dropout(double hidden_dropout, double attention_dropout) {
    if (hidden_dropout < 0.0 || hidden_dropout >= 1.0 || attention_dropout < 0.0 ||
        attention_dropout >= 1.0)
        throw ConfigError("dropout rates must lie in [0,1)");
    config_.dropout = hidden_dropout;
    config_.attention_dropout = attention_dropout;
}

int64_t EncoderModel::parameter_total() const {
    int64_t total = 0;
    for (const auto& p : registry_) total += p->numel();
    return total;
}

std::vector<Parameter*> EncoderModel::parameters() {
    std::vector<Parameter*> out;
    out.reserve(registry_.size());
    for (auto& p : registry_) out.push_back(p.get());
    return out;
}

std::vector<const Parameter*> EncoderModel::parameters() const {
    std::vector<const Parameter*> out;
    out.reserve(registry_.size());
    for (const auto& p : registry_) out.push_back(p.get());
    return out;
}

Parameter* EncoderModel::find(const std::string& name) {
    for (auto& p : registry_)
        if (p->name == name) return p.get();
    return nullptr;
}

void EncoderModel::zero_grad() {
    for (auto& p : registry_) p->zero_grad();
}

Node* EncoderModel::encode(Tape& tape, const Batch& batch, bool training, Rng* rng,
                           ForwardTrace* trace) {
    const int64_t B = batch.batch, T = batch.seq, heads = config_.heads;
    if (B < 1 || T < 1) throw ContractError("encode: empty batch");
    if (T > config_.usable_positions())
        throw DataError("sequence length " + std::to_string(T) + " exceeds the usable maximum of " +
                        std::to_string(config_.usable_positions()));
    for (int64_t id : batch.ids)
        if (id < 0 || id >= config_.vocab_size)
            throw DataError("token id " + std::to_string(id) + " outside vocabulary of " +
                            std::to_string(config_.vocab_size));
    const bool wants_dropout = training && (config_.dropout > 0.0 || config_.attention_dropout > 0.0);
    if (wants_dropout && rng == nullptr)
        throw ContractError("encode: training with dropout requires an RNG");
    Rng unused(0);
    Rng& r = rng ? *rng : unused;

    std::vector<int64_t> pos_ids(static_cast<size_t>(B * T));
    for (int64_t b = 0; b < B; ++b)
        for (int64_t t = 0; t < T; ++t)
            pos_ids[static_cast<size_t>(b * T + t)] = ModelConfig::kPositionOffset + t;

    Node* tok = tape.embedding(tape.param(*tok_emb_), batch.ids);
    Node* pos = tape.embedding(tape.param(*pos_emb_), pos_ids);
    Node* x = tape.add(tok, pos);
    x = tape.layer_norm(x, tape.param(*emb_ln_gain_), tape.param(*emb_ln_bias_));
    x = tape.dropout(x, config_.dropout, r, training);

    // Additive key mask, shared by all layers: 0 for real keys, a large
    // negative score for pad keys (their softmax weight underflows to zero,
    // which keeps outputs at real positions independent of right-padding).
    Tensor mask = Tensor::zeros({B * heads, T, T});
    for (int64_t b = 0; b < B; ++b)
        for (int64_t j = 0; j < T; ++j)
            if (batch.at(b, j) == Tokenizer::kPad)
                for (int64_t h = 0; h < heads; ++h)
                    for (int64_t i = 0; i < T; ++i)
                        mask.at(((b * heads + h) * T + i) * T + j) = static_cast<float>(kMaskedScore);
    Node* key_mask = tape.constant(std::move(mask));

    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(config_.head_dim()));
    for (const Layer& lay : layers_) {
        Node* q = tape.add(tape.matmul_nt(x, tape.param(*lay.wq)), tape.param(*lay.bq));
        Node* k = tape.add(tape.matmul_nt(x, tape.param(*lay.wk)), tape.param(*lay.bk));
        Node* v = tape.add(tape.matmul_nt(x, tape.param(*lay.wv)), tape.param(*lay.bv));
        q = tape.split_heads(q, B, T, heads);
        k = tape.split_heads(k, B, T, heads);
        v = tape.split_heads(v, B, T, heads);
        Node* scores = tape.add(tape.scale(tape.bmm_nt(q, k), inv_sqrt_dh), key_mask);
        Node* probs = tape.softmax_lastdim(scores);
        if (trace) trace->attention.push_back(probs->value);
        probs = tape.dropout(probs, config_.attention_dropout, r, training);
        Node* ctx = tape.merge_heads(tape.bmm(probs, v), B, T, heads);
        Node* attn_out = tape.add(tape.matmul_nt(ctx, tape.param(*lay.wo)), tape.param(*lay.bo));
        attn_out = tape.dropout(attn_out, config_.dropout, r, training);
        x = tape.layer_norm(tape.add(x, attn_out), tape.param(*lay.ln1_gain), tape.param(*lay.ln1_bias));
        Node* h = tape.gelu(tape.add(tape.matmul_nt(x, tape.param(*lay.w1)), tape.param(*lay.b1)));
        Node* y = tape.add(tape.matmul_nt(h, tape.param(*lay.w2)), tape.param(*lay.b2));
        y = tape.dropout(y, config_.dropout, r, training);
        x = tape.layer_norm(tape.add(x, y), tape.param(*lay.ln2_gain), tape.param(*lay.ln2_bias));
    }
    return x;
}

Node* EncoderModel::mlm_from_hidden(Tape& tape, Node* hidden) {
    Node* h = tape.gelu(tape.add(tape.matmul_nt(hidden, tape.param(*lm_dense_w_)), tape.param(*lm_dense_b_)));
    h = tape.layer_norm(h, tape.param(*lm_ln_gain_), tape.param(*lm_ln_bias_));
    Parameter* out_w = config_.tie_lm_head ? tok_emb_ : lm_out_w_;
    return tape.add(tape.matmul_nt(h, tape.param(*out_w)), tape.param(*lm_out_bias_));
}

Node* EncoderModel::mlm_logits(Tape& tape, const Batch& batch, bool training, Rng* rng,
                               ForwardTrace* trace) {
    return mlm_from_hidden(tape, encode(tape, batch, training, rng, trace));
}

Node* EncoderModel::mlm_logits_at(Tape& tape, const Batch& batch,
                                  const std::vector<int64_t>& flat_positions, bool training,
                                  Rng* rng) {
    Node* x = encode(tape, batch, training, rng, nullptr);
    return mlm_from_hidden(tape, tape.take_rows(x, flat_positions));
}

Node* EncoderModel::seq_logits(Tape& tape, const Batch& batch, bool training, Rng* rng) {
    if (seq_classes_ == 0) throw ContractError("no sequence head attached");
    Node* x = encode(tape, batch, training, rng, nullptr);
    std::vector<int64_t> first(static_cast<size_t>(batch.batch));
    for (int64_t b = 0; b < batch.batch; ++b) first[static_cast<size_t>(b)] = b * batch.seq;
    Node* pooled = tape.tanh_act(
        tape.add(tape.matmul_nt(tape.take_rows(x, first), tape.param(*pooler_w_)), tape.param(*pooler_b_)));
    Rng unused(0);
    pooled = tape.dropout(pooled, config_.dropout, rng ? *rng : unused, training);
    return tape.add(tape.matmul_nt(pooled, tape.param(*seq_cls_w_)), tape.param(*seq_cls_b_));
}

Node* EncoderModel::tok_logits(Tape& tape, const Batch& batch, bool training, Rng* rng) {
    if (tok_labels_ == 0) throw ContractError("no token head attached");
    Node* x = encode(tape, batch, training, rng, nullptr);
    Rng unused(0);
    x = tape.dropout(x, config_.dropout, rng ? *rng : unused, training);
    return tape.add(tape.matmul_nt(x, tape.param(*tok_cls_w_)), tape.param(*tok_cls_b_));
}

}  // namespace mlmkit
