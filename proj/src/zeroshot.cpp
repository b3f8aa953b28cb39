// SPDX-License-Identifier: Apache-2.0
#include "mlmkit/zeroshot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace mlmkit {

namespace {

size_t find_single_slot(const std::string& masked_text) {
    size_t slot = masked_text.find(kMaskSlot);
    if (slot == std::string::npos)
        throw DataError("example has no mask slot: " + masked_text);
    if (masked_text.find(kMaskSlot, slot + 1) != std::string::npos)
        throw DataError("example has more than one mask slot: " + masked_text);
    return slot;
}

// Indices of non-special tokens whose byte span intersects [lo, hi).
std::vector<int64_t> covering_positions(const Encoding& enc, int64_t lo, int64_t hi) {
    std::vector<int64_t> out;
    for (size_t i = 0; i < enc.ids.size(); ++i) {
        auto [tlo, thi] = enc.offsets[i];
        if (tlo == thi) continue;  // special token
        if (tlo < hi && thi > lo) out.push_back(static_cast<int64_t>(i));
    }
    return out;
}

double log_prob_row(const float* row, int64_t vocab, int64_t id) {
    double max_logit = -std::numeric_limits<double>::infinity();
    for (int64_t v = 0; v < vocab; ++v) max_logit = std::max(max_logit, double(row[v]));
    double denom = 0.0;
    for (int64_t v = 0; v < vocab; ++v) denom += std::exp(double(row[v]) - max_logit);
    return double(row[id]) - max_logit - std::log(denom);
}

}  // namespace

ChoiceScores score_candidates(EncoderModel& model, const Tokenizer& tokenizer,
                              const MaskedChoiceExample& example) {
    if (example.candidates.empty()) throw DataError("example has no candidates");
    size_t slot = find_single_slot(example.masked_text);
    std::string prefix = example.masked_text.substr(0, slot);
    std::string suffix = example.masked_text.substr(slot + std::string(kMaskSlot).size());

    ChoiceScores out;
    out.scores.reserve(example.candidates.size());
    for (const auto& cand : example.candidates) {
        if (cand.empty())
            throw DataError("empty candidate in example: " + example.masked_text);
        std::string filled = prefix + cand + suffix;
        Encoding enc = tokenizer.encode(filled, /*add_specials=*/true);
        auto positions = covering_positions(enc, static_cast<int64_t>(prefix.size()),
                                            static_cast<int64_t>(prefix.size() + cand.size()));
        if (positions.empty())
            throw DataError("candidate '" + cand + "' produced no tokens");

        // One batch row per candidate token, with just that token masked;
        // the candidate's score is the mean of the masked log-probabilities.
        int64_t k = static_cast<int64_t>(positions.size());
        int64_t seq = static_cast<int64_t>(enc.ids.size());
        Batch batch;
        batch.batch = k;
        batch.seq = seq;
        batch.ids.reserve(static_cast<size_t>(k * seq));
        std::vector<int64_t> flat;
        flat.reserve(positions.size());
        for (int64_t r = 0; r < k; ++r) {
            for (int64_t t = 0; t < seq; ++t)
                batch.ids.push_back(t == positions[static_cast<size_t>(r)] ? Tokenizer::kMask
                                                                           : enc.ids[static_cast<size_t>(t)]);
            flat.push_back(r * seq + positions[static_cast<size_t>(r)]);
        }

        Tape tape;
        Node* logits = model.mlm_logits_at(tape, batch, flat, /*training=*/false, nullptr);
        int64_t vocab = model.config().vocab_size;
        double total = 0.0;
        for (int64_t r = 0; r < k; ++r) {
            const float* row = logits->value.data.data() + r * vocab;
            int64_t target = enc.ids[static_cast<size_t>(positions[static_cast<size_t>(r)])];
            total += log_prob_row(row, vocab, target);
        }
        out.scores.push_back(total / static_cast<double>(k));
    }

    out.predicted = 0;
    for (size_t i = 1; i < out.scores.size(); ++i)
        if (out.scores[i] > out.scores[static_cast<size_t>(out.predicted)])
            out.predicted = static_cast<int64_t>(i);
    return out;
}

ZeroshotResult eval_zeroshot(EncoderModel& model, const Tokenizer& tokenizer,
                             const std::vector<MaskedChoiceExample>& examples, double confidence) {
    if (examples.empty()) throw DataError("zero-shot evaluation needs at least one example");
    ZeroshotResult result;
    int64_t hits = 0;
    for (size_t i = 0; i < examples.size(); ++i) {
        ChoiceScores scored = score_candidates(model, tokenizer, examples[i]);
        ZeroshotRow row;
        row.example_index = static_cast<int64_t>(i);
        row.scores = std::move(scored.scores);
        row.predicted = scored.predicted;
        row.gold = examples[i].gold;
        if (row.predicted == row.gold) ++hits;
        result.rows.push_back(std::move(row));
    }
    result.accuracy = static_cast<double>(hits) / static_cast<double>(examples.size());
    result.ci = accuracy_ci(hits, static_cast<int64_t>(examples.size()), confidence);
    return result;
}

void write_zeroshot_csv(const std::filesystem::path& path, const ZeroshotResult& result,
                        int64_t num_candidates) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "example";
    for (int64_t c = 0; c < num_candidates; ++c) out << ",score_" << c;
    out << ",predicted,gold\n";
    char buf[64];
    for (const auto& row : result.rows) {
        if (static_cast<int64_t>(row.scores.size()) != num_candidates)
            throw ContractError("row has " + std::to_string(row.scores.size()) +
                                " scores, expected " + std::to_string(num_candidates));
        out << row.example_index;
        for (double s : row.scores) {
            std::snprintf(buf, sizeof(buf), "%.10g", s);
            out << ',' << buf;
        }
        out << ',' << row.predicted << ',' << row.gold << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace mlmkit
