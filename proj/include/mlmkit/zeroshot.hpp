// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mlmkit/bpe.hpp"
#include "mlmkit/encoder.hpp"
#include "mlmkit/metrics.hpp"
#include "mlmkit/task_data.hpp"

namespace mlmkit {

/// Per-candidate log-probability scores for one cloze example, in candidate
/// order. predicted is the argmax index; ties go to the earlier candidate.
struct ChoiceScores {
    std::vector<double> scores;
    int64_t predicted = 0;
};

/// Scores each candidate by filling it into the mask slot and masking the
/// tokens it produced. A candidate covered by a single token is scored by
/// that token's log-probability at the mask position; a multi-token
/// candidate is scored by the mean per-token log-probability with each of
/// its tokens masked in turn (the rest visible). An empty candidate or a
/// slot count other than one is a data error.
ChoiceScores score_candidates(EncoderModel& model, const Tokenizer& tokenizer,
                              const MaskedChoiceExample& example);

struct ZeroshotRow {
    int64_t example_index = 0;
    std::vector<double> scores;
    int64_t predicted = 0;
    int64_t gold = 0;
};

struct ZeroshotResult {
    std::vector<ZeroshotRow> rows;
    double accuracy = 0.0;
    AccuracyCi ci;
};

ZeroshotResult eval_zeroshot(EncoderModel& model, const Tokenizer& tokenizer,
                             const std::vector<MaskedChoiceExample>& examples,
                             double confidence = 0.95);

/// CSV with one row per example: index, one score column per candidate,
/// predicted index, gold index.
void write_zeroshot_csv(const std::filesystem::path& path, const ZeroshotResult& result,
                        int64_t num_candidates);

}  // namespace mlmkit
