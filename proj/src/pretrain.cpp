// SPDX-License-Identifier: Apache-2.0
#include "mlmkit/pretrain.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "mlmkit/checkpoint.hpp"

namespace mlmkit {

namespace {

struct MicroView {
    std::vector<std::vector<int64_t>> inputs;
    std::vector<std::vector<int64_t>> labels;
};

MicroView slice(const MaskedBatch& mb, size_t begin, size_t end) {
    MicroView v;
    v.inputs.assign(mb.inputs.begin() + static_cast<int64_t>(begin),
                    mb.inputs.begin() + static_cast<int64_t>(end));
    v.labels.assign(mb.labels.begin() + static_cast<int64_t>(begin),
                    mb.labels.begin() + static_cast<int64_t>(end));
    return v;
}

// Forward at masked positions only; returns (sum loss node, masked count,
// argmax hits). Rows of the flat CE target correspond to masked positions.
struct MicroForward {
    Node* sum_loss = nullptr;
    int64_t masked = 0;
    int64_t hits = 0;
};

MicroForward forward_micro(EncoderModel& model, Tape& tape, const MicroView& view, bool training,
                           Rng* rng) {
    Batch batch = Batch::pad_to_rect(view.inputs, Tokenizer::kPad);
    std::vector<int64_t> positions;
    std::vector<int64_t> targets;
    for (int64_t b = 0; b < batch.batch; ++b) {
        const auto& lab = view.labels[static_cast<size_t>(b)];
        for (int64_t t = 0; t < static_cast<int64_t>(lab.size()); ++t) {
            if (lab[static_cast<size_t>(t)] < 0) continue;
            positions.push_back(b * batch.seq + t);
            targets.push_back(lab[static_cast<size_t>(t)]);
        }
    }
    MicroForward out;
    out.masked = static_cast<int64_t>(positions.size());
    if (out.masked == 0) return out;
    Node* logits = model.mlm_logits_at(tape, batch, positions, training, rng);
    const int64_t V = model.config().vocab_size;
    for (int64_t r = 0; r < out.masked; ++r) {
        const float* row = logits->value.data.data() + r * V;
        int64_t arg = 0;
        for (int64_t j = 1; j < V; ++j)
            if (row[j] > row[arg]) arg = j;
        out.hits += arg == targets[static_cast<size_t>(r)];
    }
    out.sum_loss = tape.cross_entropy(logits, targets, Reduction::sum);
    return out;
}

}  // namespace

std::vector<std::vector<int64_t>> pack_windows(const Tokenizer& tokenizer,
                                               const std::vector<std::string>& lines,
                                               int64_t max_len) {
    if (max_len < 4) throw ConfigError("window length must be at least 4 tokens");
    const int64_t budget = max_len - 1;  // room after the leading [bos]
    std::vector<std::vector<int64_t>> windows;
    std::vector<int64_t> cur{Tokenizer::kBos};
    auto flush = [&] {
        if (cur.size() > 1) windows.push_back(cur);
        cur.assign(1, Tokenizer::kBos);
    };
    for (const std::string& line : lines) {
        std::vector<int64_t> ids = tokenizer.encode(line, false).ids;
        if (ids.empty()) continue;
        // Chunks of at most max_len-2 tokens so every piece fits in a window.
        for (size_t off = 0; off < ids.size(); off += static_cast<size_t>(max_len - 2)) {
            const size_t len = std::min(ids.size() - off, static_cast<size_t>(max_len - 2));
            if (static_cast<int64_t>(cur.size() + len + 1) > budget + 1) flush();
            cur.insert(cur.end(), ids.begin() + static_cast<int64_t>(off),
                       ids.begin() + static_cast<int64_t>(off + len));
            cur.push_back(Tokenizer::kEos);
        }
    }
    flush();
    return windows;
}

void PretrainConfig::validate() const {
    optimizer.validate();
    masking.validate();
    if (logical_batch < 1 || micro_batch < 1)
        throw ConfigError("batch sizes must be positive");
    if (logical_batch % micro_batch != 0)
        throw ConfigError("micro_batch " + std::to_string(micro_batch) +
                          " must divide logical_batch " + std::to_string(logical_batch));
    if (max_len < 4) throw ConfigError("max_len must be at least 4");
    if (stop_accuracy < 0.0 || stop_accuracy > 1.0)
        throw ConfigError("stop_accuracy must lie in [0,1]");
    if (stop_accuracy > 0.0 && eval_interval <= 0)
        throw ConfigError("stop_accuracy needs a positive eval_interval");
}

MlmEval eval_masked(EncoderModel& model, const MaskedBatch& masked, int64_t micro_batch) {
    if (micro_batch < 1) throw ContractError("micro_batch must be positive");
    MlmEval ev;
    double loss_sum = 0.0;
    int64_t hits = 0;
    for (size_t begin = 0; begin < masked.inputs.size(); begin += static_cast<size_t>(micro_batch)) {
        const size_t end = std::min(masked.inputs.size(), begin + static_cast<size_t>(micro_batch));
        Tape tape;
        MicroForward mf = forward_micro(model, tape, slice(masked, begin, end), false, nullptr);
        if (mf.masked == 0) continue;
        loss_sum += static_cast<double>(mf.sum_loss->value.at(0));
        hits += mf.hits;
        ev.masked += mf.masked;
    }
    if (ev.masked == 0) throw DataError("undefined metric: no masked positions to evaluate");
    ev.loss = loss_sum / static_cast<double>(ev.masked);
    ev.top1_accuracy = static_cast<double>(hits) / static_cast<double>(ev.masked);
    return ev;
}

PretrainResult pretrain(EncoderModel& model, const Tokenizer& tokenizer,
                        const std::vector<std::string>& corpus_lines, const PretrainConfig& cfg,
                        const std::filesystem::path& run_dir) {
    cfg.validate();
    std::vector<std::vector<int64_t>> windows = pack_windows(tokenizer, corpus_lines, cfg.max_len);
    if (static_cast<int64_t>(windows.size()) < cfg.micro_batch)
        throw DataError("corpus packs into " + std::to_string(windows.size()) +
                        " windows, fewer than one micro batch of " + std::to_string(cfg.micro_batch));

    Rng order_rng(Rng(cfg.seed).fork(1));
    Rng mask_rng(Rng(cfg.seed).fork(2));
    Rng dropout_rng(Rng(cfg.seed).fork(3));
    Rng eval_rng_seed(Rng(cfg.seed).fork(4));

    std::ofstream loss_csv;
    if (!run_dir.empty()) {
        std::filesystem::create_directories(run_dir);
        loss_csv.open(run_dir / "loss.csv", std::ios::binary);
        if (!loss_csv) throw IoError("cannot write loss log in " + run_dir.string());
        loss_csv << "step,lr,loss,tokens_seen\n";
    }

    AdamOptimizer opt(cfg.optimizer, model.parameters());
    std::vector<size_t> order(windows.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    size_t cursor = order.size();  // triggers a shuffle on first use

    PretrainResult result;
    int64_t tokens_seen = 0;
    const int64_t micro_per_step = cfg.logical_batch / cfg.micro_batch;

    auto self_eval = [&]() {
        Rng r(eval_rng_seed.fork(static_cast<uint64_t>(opt.steps_done())));
        MaskedBatch mb = mask_batch(windows, cfg.masking, r, model.config().vocab_size);
        return eval_masked(model, mb, cfg.micro_batch);
    };

    for (int64_t step = 1; step <= cfg.optimizer.total_steps; ++step) {
        // Assemble the logical batch, reshuffling at each epoch boundary.
        std::vector<std::vector<int64_t>> logical;
        logical.reserve(static_cast<size_t>(cfg.logical_batch));
        for (int64_t i = 0; i < cfg.logical_batch; ++i) {
            if (cursor >= order.size()) {
                order_rng.shuffle(order);
                cursor = 0;
            }
            logical.push_back(windows[order[cursor++]]);
        }
        MaskedBatch mb = mask_batch(logical, cfg.masking, mask_rng, model.config().vocab_size);
        const int64_t total_masked = mb.selected();
        if (total_masked == 0) continue;  // vanishingly unlikely; skip the step

        model.zero_grad();
        double loss_sum = 0.0;
        for (int64_t micro = 0; micro < micro_per_step; ++micro) {
            const size_t begin = static_cast<size_t>(micro * cfg.micro_batch);
            const size_t end = begin + static_cast<size_t>(cfg.micro_batch);
            Tape tape;
            MicroForward mf = forward_micro(model, tape, slice(mb, begin, end), true, &dropout_rng);
            if (mf.masked == 0) continue;
            loss_sum += static_cast<double>(mf.sum_loss->value.at(0));
            tape.backward(mf.sum_loss, 1.0 / static_cast<double>(total_masked));
        }
        opt.step();

        for (const auto& seq : logical) tokens_seen += static_cast<int64_t>(seq.size());
        LossLogRow row;
        row.step = opt.steps_done();
        row.lr = opt.last_lr();
        row.loss = loss_sum / static_cast<double>(total_masked);
        row.tokens_seen = tokens_seen;
        result.log.push_back(row);
        result.final_loss = row.loss;
        if (loss_csv) {
            char buf[160];
            std::snprintf(buf, sizeof(buf), "%lld,%.10g,%.10g,%lld\n",
                          static_cast<long long>(row.step), row.lr, row.loss,
                          static_cast<long long>(row.tokens_seen));
            loss_csv << buf;
        }

        if (!run_dir.empty() && cfg.checkpoint_interval > 0 && step % cfg.checkpoint_interval == 0)
            save_checkpoint(run_dir / ("step_" + std::to_string(step)), model);

        if (cfg.eval_interval > 0 && step % cfg.eval_interval == 0) {
            MlmEval ev = self_eval();
            result.final_train_accuracy = ev.top1_accuracy;
            if (cfg.stop_accuracy > 0.0 && ev.top1_accuracy >= cfg.stop_accuracy) {
                result.steps_done = opt.steps_done();
                if (!run_dir.empty()) save_checkpoint(run_dir / "final", model);
                return result;
            }
        }
    }
    result.steps_done = opt.steps_done();
    if (cfg.eval_interval > 0) result.final_train_accuracy = self_eval().top1_accuracy;
    if (!run_dir.empty()) save_checkpoint(run_dir / "final", model);
    return result;
}

}  // namespace mlmkit
