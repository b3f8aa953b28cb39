// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mlmkit/bpe.hpp"
#include "mlmkit/encoder.hpp"
#include "mlmkit/metrics.hpp"
#include "mlmkit/task_data.hpp"

namespace mlmkit {

struct SeqExample {
    std::vector<int64_t> ids;  // wrapped in begin/end markers
    int64_t label = 0;
};

struct TokExample {
    std::vector<int64_t> ids;
    std::vector<int64_t> labels;  // label id at each first subtoken, -1 elsewhere
};

enum class SelectionMetric { accuracy, cross_entropy, span_f1 };

struct FinetuneSpec {
    double lr = 1e-5;
    int64_t batch_size = 32;
    double dropout = 0.1;  // applied to both dropout sites for the run
    double adam_eps = 1e-8;
    double weight_decay = 0.0;
    int64_t warmup_steps = -1;      // used when >= 0, otherwise warmup_fraction
    double warmup_fraction = 0.06;  // of the total step count
    int64_t epochs = 3;
    int64_t max_steps = 0;          // > 0 caps the optimizer step count
    SelectionMetric selection = SelectionMetric::accuracy;
    uint64_t seed = 1;

    void validate() const;
};

struct EpochLog {
    int64_t epoch = 0;
    int64_t steps = 0;        // cumulative optimizer steps
    double train_loss = 0.0;  // mean over the epoch's batches
    double dev_metric = 0.0;
};

struct FinetuneResult {
    std::vector<EpochLog> log;
    int64_t best_epoch = 0;  // 1-based epoch whose weights were kept
    double best_metric = 0.0;
    int64_t total_steps = 0;
};

/// Fresh model with the same config, heads, and parameter values.
EncoderModel clone_model(const EncoderModel& src);

/// Linear warmup + linear decay to zero over the run, per-epoch reshuffle,
/// dev evaluation after every epoch, best-epoch weights restored at return.
FinetuneResult finetune_sequence(EncoderModel& model, const std::vector<SeqExample>& train,
                                 const std::vector<SeqExample>& dev, const FinetuneSpec& spec);
FinetuneResult finetune_token(EncoderModel& model, const std::vector<TokExample>& train,
                              const std::vector<TokExample>& dev, const FinetuneSpec& spec,
                              const std::vector<std::string>& label_names);

// Frozen-model evaluation helpers.
std::vector<int64_t> sequence_predictions(EncoderModel& model, const std::vector<SeqExample>& data,
                                          std::vector<double>* scores = nullptr);
double sequence_accuracy(EncoderModel& model, const std::vector<SeqExample>& data);
double sequence_cross_entropy(EncoderModel& model, const std::vector<SeqExample>& data);
std::vector<std::vector<int64_t>> token_predictions(EncoderModel& model,
                                                    const std::vector<TokExample>& data);
double token_accuracy(EncoderModel& model, const std::vector<TokExample>& data);
double token_cross_entropy(EncoderModel& model, const std::vector<TokExample>& data);
/// Predicted tag sequences are chunk-repaired before span matching.
SpanF1Report token_span_f1(EncoderModel& model, const std::vector<TokExample>& data,
                           const std::vector<std::string>& label_names);

struct GridCell {
    double lr = 0.0;
    int64_t batch_size = 0;
    double dev_metric = 0.0;
};

struct GridResult {
    std::vector<GridCell> cells;  // lr-major, both axes ascending
    size_t best_index = 0;
    FinetuneSpec best_spec;
};

/// One fine-tune per (lr, batch) cell, each from a fresh factory model.
/// Best cell by dev metric; ties go to the lowest lr, then smallest batch.
GridResult grid_search_sequence(const std::function<EncoderModel()>& factory,
                                const std::vector<SeqExample>& train,
                                const std::vector<SeqExample>& dev, const FinetuneSpec& base,
                                std::vector<double> lrs, std::vector<int64_t> batch_sizes);
GridResult grid_search_token(const std::function<EncoderModel()>& factory,
                             const std::vector<TokExample>& train,
                             const std::vector<TokExample>& dev, const FinetuneSpec& base,
                             std::vector<double> lrs, std::vector<int64_t> batch_sizes,
                             const std::vector<std::string>& label_names);

struct CurvePoint {
    int64_t size = 0;
    double accuracy = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

/// Shuffles the training set once with `seed`, returns the first `size`.
template <class T>
std::vector<T> shuffled_prefix(const std::vector<T>& items, int64_t size, uint64_t seed) {
    if (size < 1 || size > static_cast<int64_t>(items.size()))
        throw ConfigError("subset size " + std::to_string(size) + " out of range [1, " +
                          std::to_string(items.size()) + "]");
    std::vector<size_t> order(items.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<T> out;
    out.reserve(static_cast<size_t>(size));
    for (int64_t i = 0; i < size; ++i) out.push_back(items[order[static_cast<size_t>(i)]]);
    return out;
}

/// One fine-tune per size on a shuffled-once prefix (fresh factory model,
/// fixed hyperparams, shared dev set), each evaluated on the full test set.
std::vector<CurvePoint> learning_curve_sequence(const std::function<EncoderModel()>& factory,
                                                const std::vector<SeqExample>& train,
                                                const std::vector<SeqExample>& dev,
                                                const std::vector<SeqExample>& test,
                                                const std::vector<int64_t>& sizes,
                                                const FinetuneSpec& spec);
std::vector<CurvePoint> learning_curve_token(const std::function<EncoderModel()>& factory,
                                             const std::vector<TokExample>& train,
                                             const std::vector<TokExample>& dev,
                                             const std::vector<TokExample>& test,
                                             const std::vector<int64_t>& sizes,
                                             const FinetuneSpec& spec,
                                             const std::vector<std::string>& label_names);

/// Keeps the final (max_len - 2) content tokens and re-wraps them with the
/// begin/end markers. Idempotent; inputs already within the limit come back
/// unchanged.
std::vector<int64_t> truncate_tail(const std::vector<int64_t>& ids, int64_t max_len);

/// [begin] sentence-filled-with-first-candidate [separator]
/// sentence-filled-with-second-candidate [end]; label = gold index.
SeqExample make_pair_example(const Tokenizer& tokenizer, const MaskedChoiceExample& example);

/// Encode + tail-truncate one review text.
SeqExample encode_review(const Tokenizer& tokenizer, const LabeledReview& review, int64_t max_len);

/// Sorted unique tag strings over the corpus.
std::vector<std::string> build_label_vocab(const std::vector<TaggedSentence>& sentences);

/// First-subtoken labeling: each word's first token carries the tag's label
/// id, its continuation tokens carry -1. Sentences longer than max_len - 2
/// tokens keep only their head. Words are joined with single spaces.
TokExample make_token_example(const Tokenizer& tokenizer, const TaggedSentence& sentence,
                              const std::vector<std::string>& label_names, int64_t max_len);

/// Deterministic dev carve: shuffle indices with `seed`, move the first
/// max(1, round(fraction*n)) examples to dev, keep the rest as train in the
/// original order.
template <class T>
std::pair<std::vector<T>, std::vector<T>> carve_dev(const std::vector<T>& examples,
                                                    double fraction, uint64_t seed) {
    if (!(fraction > 0.0) || !(fraction < 1.0))
        throw ConfigError("dev fraction must lie in (0,1)");
    if (examples.size() < 2) throw DataError("need at least 2 examples to carve a dev split");
    std::vector<size_t> order(examples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    size_t dev_n = static_cast<size_t>(std::llround(fraction * double(examples.size())));
    dev_n = std::max<size_t>(1, std::min(dev_n, examples.size() - 1));
    std::vector<bool> is_dev(examples.size(), false);
    std::vector<T> dev;
    dev.reserve(dev_n);
    for (size_t i = 0; i < dev_n; ++i) {
        is_dev[order[i]] = true;
        dev.push_back(examples[order[i]]);
    }
    std::vector<T> train;
    train.reserve(examples.size() - dev_n);
    for (size_t i = 0; i < examples.size(); ++i)
        if (!is_dev[i]) train.push_back(examples[i]);
    return {std::move(train), std::move(dev)};
}

}  // namespace mlmkit
