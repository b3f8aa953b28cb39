// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mlmkit/bpe.hpp"
#include "mlmkit/encoder.hpp"
#include "mlmkit/optim.hpp"

namespace mlmkit {

/// Greedy line packing: each window starts with [bos]; every line's tokens
/// are appended followed by [eos]; a line that would overflow max_len starts
/// the next window. Lines longer than max_len-2 are split into chunks. No
/// line fragment ever crosses a window boundary otherwise.
std::vector<std::vector<int64_t>> pack_windows(const Tokenizer& tokenizer,
                                               const std::vector<std::string>& lines,
                                               int64_t max_len);

struct PretrainConfig {
    OptimizerConfig optimizer;
    MaskingPolicy masking;
    int64_t logical_batch = 32;
    int64_t micro_batch = 8;
    int64_t max_len = 128;            // window length in tokens, specials included
    int64_t checkpoint_interval = 0;  // extra checkpoints every N steps (0 = final only)
    int64_t eval_interval = 0;        // masked top-1 self-evaluation every N steps (0 = never)
    double stop_accuracy = 0.0;       // stop early once self-eval reaches this (0 = run all steps)
    uint64_t seed = 1;

    void validate() const;
};

struct LossLogRow {
    int64_t step = 0;
    double lr = 0.0;
    double loss = 0.0;          // per-masked-token mean over the logical batch
    int64_t tokens_seen = 0;    // cumulative non-pad input tokens
};

struct PretrainResult {
    int64_t steps_done = 0;
    double final_loss = 0.0;
    double final_train_accuracy = -1.0;  // masked top-1 on the training windows; -1 if never evaluated
    std::vector<LossLogRow> log;
};

struct MlmEval {
    double loss = 0.0;  // per-masked-token mean
    double top1_accuracy = 0.0;
    int64_t masked = 0;
};

/// Loss and argmax accuracy of a frozen model on an already-masked batch,
/// evaluated micro_batch windows at a time (partitioning does not change the
/// result beyond floating-point rounding).
MlmEval eval_masked(EncoderModel& model, const MaskedBatch& masked, int64_t micro_batch);

/// Dynamic-masking MLM training. Gradients accumulate over
/// logical_batch/micro_batch micro steps scaled by the logical batch's total
/// masked-token count, making the update equal to one monolithic batch. The
/// whole logical batch is masked up front with one RNG stream per step, so the
/// partitioning cannot change which positions are masked. When run_dir is
/// non-empty, writes loss.csv plus checkpoints (step_*/ and final/).
PretrainResult pretrain(EncoderModel& model, const Tokenizer& tokenizer,
                        const std::vector<std::string>& corpus_lines, const PretrainConfig& cfg,
                        const std::filesystem::path& run_dir = {});

}  // namespace mlmkit
