// SPDX-License-Identifier: Apache-2.0
#include "mlmkit/finetune.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mlmkit/optim.hpp"

namespace mlmkit {

namespace {

constexpr int64_t kEvalChunk = 64;

int64_t ceil_div(int64_t a, int64_t b) { return (a + b - 1) / b; }

size_t find_single_slot(const std::string& masked_text) {
    size_t slot = masked_text.find(kMaskSlot);
    if (slot == std::string::npos)
        throw DataError("example has no mask slot: " + masked_text);
    if (masked_text.find(kMaskSlot, slot + 1) != std::string::npos)
        throw DataError("example has more than one mask slot: " + masked_text);
    return slot;
}

OptimizerConfig make_opt_config(const FinetuneSpec& spec, int64_t total_steps) {
    OptimizerConfig cfg;
    cfg.peak_lr = spec.lr;
    cfg.beta1 = 0.9;
    cfg.beta2 = 0.98;
    cfg.eps = spec.adam_eps;
    cfg.weight_decay = spec.weight_decay;
    cfg.total_steps = total_steps;
    cfg.warmup_steps = spec.warmup_steps >= 0
                           ? spec.warmup_steps
                           : std::llround(spec.warmup_fraction * double(total_steps));
    cfg.warmup_steps = std::min(cfg.warmup_steps, total_steps);
    cfg.decay_power = 1.0;
    cfg.end_lr = 0.0;
    cfg.validate();
    return cfg;
}

bool metric_improves(SelectionMetric sel, double candidate, double incumbent) {
    if (sel == SelectionMetric::cross_entropy) return candidate < incumbent;
    return candidate > incumbent;
}

double worst_metric(SelectionMetric sel) {
    return sel == SelectionMetric::cross_entropy ? std::numeric_limits<double>::infinity()
                                                 : -std::numeric_limits<double>::infinity();
}

std::vector<std::vector<float>> snapshot_params(EncoderModel& model) {
    std::vector<std::vector<float>> snap;
    for (Parameter* p : model.parameters()) snap.push_back(p->value.data);
    return snap;
}

void restore_params(EncoderModel& model, const std::vector<std::vector<float>>& snap) {
    auto params = model.parameters();
    if (params.size() != snap.size()) throw ContractError("parameter snapshot size mismatch");
    for (size_t i = 0; i < params.size(); ++i) params[i]->value.data = snap[i];
}

int64_t argmax_row(const float* row, int64_t n) {
    int64_t best = 0;
    for (int64_t i = 1; i < n; ++i)
        if (row[i] > row[best]) best = i;
    return best;
}

// The generic epoch loop, shared by the sequence and token drivers. The
// callbacks hide the task-specific batch assembly and dev metric.
struct TaskHooks {
    int64_t train_size = 0;
    // Forward + loss for the given example indices; returns the batch loss.
    std::function<double(EncoderModel&, const std::vector<size_t>&, Rng&)> train_batch;
    std::function<double(EncoderModel&)> dev_metric;
};

FinetuneResult run_finetune(EncoderModel& model, const FinetuneSpec& spec, const TaskHooks& hooks) {
    spec.validate();
    if (hooks.train_size == 0) throw DataError("empty training split");

    int64_t steps_per_epoch = ceil_div(hooks.train_size, spec.batch_size);
    int64_t total_steps =
        spec.max_steps > 0 ? spec.max_steps : spec.epochs * steps_per_epoch;
    int64_t epochs = ceil_div(total_steps, steps_per_epoch);

    AdamOptimizer opt(make_opt_config(spec, total_steps), model.parameters());
    Rng root(spec.seed);
    Rng dropout_rng = root.fork(1);

    FinetuneResult result;
    result.total_steps = total_steps;
    double best = worst_metric(spec.selection);
    std::vector<std::vector<float>> best_snap;

    std::vector<size_t> order(static_cast<size_t>(hooks.train_size));
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    int64_t steps_done = 0;
    for (int64_t epoch = 1; epoch <= epochs && steps_done < total_steps; ++epoch) {
        Rng shuffle_rng = root.fork(100 + static_cast<uint64_t>(epoch));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        int64_t batches = 0;
        for (int64_t start = 0; start < hooks.train_size && steps_done < total_steps;
             start += spec.batch_size) {
            int64_t stop = std::min(start + spec.batch_size, hooks.train_size);
            std::vector<size_t> batch_idx(order.begin() + start, order.begin() + stop);
            loss_sum += hooks.train_batch(model, batch_idx, dropout_rng);
            opt.step();
            model.zero_grad();
            ++steps_done;
            ++batches;
        }

        EpochLog row;
        row.epoch = epoch;
        row.steps = steps_done;
        row.train_loss = batches > 0 ? loss_sum / double(batches) : 0.0;
        row.dev_metric = hooks.dev_metric(model);
        result.log.push_back(row);

        if (metric_improves(spec.selection, row.dev_metric, best)) {
            best = row.dev_metric;
            result.best_epoch = epoch;
            best_snap = snapshot_params(model);
        }
    }

    result.best_metric = best;
    if (!best_snap.empty()) restore_params(model, best_snap);
    return result;
}

Batch batch_of_sequences(const std::vector<SeqExample>& data, const std::vector<size_t>& idx,
                         std::vector<int64_t>* labels) {
    std::vector<std::vector<int64_t>> rows;
    rows.reserve(idx.size());
    for (size_t i : idx) {
        rows.push_back(data[i].ids);
        if (labels) labels->push_back(data[i].label);
    }
    return Batch::pad_to_rect(rows, Tokenizer::kPad);
}

// Token batches carry a flat label per position (-1 at pads).
Batch batch_of_tokens(const std::vector<TokExample>& data, const std::vector<size_t>& idx,
                      std::vector<int64_t>* labels) {
    std::vector<std::vector<int64_t>> rows;
    rows.reserve(idx.size());
    int64_t maxlen = 0;
    for (size_t i : idx) {
        rows.push_back(data[i].ids);
        maxlen = std::max(maxlen, static_cast<int64_t>(data[i].ids.size()));
    }
    if (labels) {
        for (size_t i : idx) {
            const auto& l = data[i].labels;
            labels->insert(labels->end(), l.begin(), l.end());
            labels->insert(labels->end(), static_cast<size_t>(maxlen) - l.size(), -1);
        }
    }
    return Batch::pad_to_rect(rows, Tokenizer::kPad);
}

template <class Fn>
void for_chunks(size_t n, Fn&& fn) {
    for (size_t start = 0; start < n; start += kEvalChunk) {
        size_t stop = std::min(n, start + static_cast<size_t>(kEvalChunk));
        std::vector<size_t> idx;
        idx.reserve(stop - start);
        for (size_t i = start; i < stop; ++i) idx.push_back(i);
        fn(idx);
    }
}

}  // namespace

void FinetuneSpec::validate() const {
    if (!(lr > 0)) throw ConfigError("learning rate must be positive");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0,1)");
    if (batch_size < 1) throw ConfigError("batch size must be at least 1");
    if (!(adam_eps > 0)) throw ConfigError("adam epsilon must be positive");
    if (weight_decay < 0) throw ConfigError("weight decay must be non-negative");
    if (warmup_steps < 0 && !(warmup_fraction >= 0.0 && warmup_fraction <= 1.0))
        throw ConfigError("warmup fraction must lie in [0,1]");
    if (max_steps <= 0 && epochs < 1) throw ConfigError("need epochs >= 1 or max_steps >= 1");
}

EncoderModel clone_model(const EncoderModel& src) {
    EncoderModel dst = EncoderModel::init(src.config(), 0);
    if (src.seq_classes() > 0) dst.attach_seq_head(src.seq_classes(), 0);
    if (src.tok_labels() > 0) dst.attach_tok_head(src.tok_labels(), 0);
    auto sp = src.parameters();
    auto dp = dst.parameters();
    if (sp.size() != dp.size()) throw ContractError("clone registry mismatch");
    for (size_t i = 0; i < sp.size(); ++i) dp[i]->value.data = sp[i]->value.data;
    return dst;
}

FinetuneResult finetune_sequence(EncoderModel& model, const std::vector<SeqExample>& train,
                                 const std::vector<SeqExample>& dev, const FinetuneSpec& spec) {
    if (train.empty() || dev.empty()) throw DataError("empty training or dev split");
    if (!model.has_seq_head()) throw ContractError("model has no sequence classifier head");
    if (spec.selection == SelectionMetric::span_f1)
        throw ConfigError("span-F1 selection only applies to token tasks");
    model.set_dropout(spec.dropout, spec.dropout);

    TaskHooks hooks;
    hooks.train_size = static_cast<int64_t>(train.size());
    hooks.train_batch = [&train](EncoderModel& m, const std::vector<size_t>& idx, Rng& rng) {
        std::vector<int64_t> labels;
        Batch b = batch_of_sequences(train, idx, &labels);
        Tape tape;
        Node* logits = m.seq_logits(tape, b, /*training=*/true, &rng);
        Node* loss = tape.cross_entropy(logits, labels, Reduction::mean);
        tape.backward(loss);
        return double(loss->value.data[0]);
    };
    hooks.dev_metric = [&dev, &spec](EncoderModel& m) {
        return spec.selection == SelectionMetric::cross_entropy ? sequence_cross_entropy(m, dev)
                                                                : sequence_accuracy(m, dev);
    };
    return run_finetune(model, spec, hooks);
}

FinetuneResult finetune_token(EncoderModel& model, const std::vector<TokExample>& train,
                              const std::vector<TokExample>& dev, const FinetuneSpec& spec,
                              const std::vector<std::string>& label_names) {
    if (train.empty() || dev.empty()) throw DataError("empty training or dev split");
    if (!model.has_tok_head()) throw ContractError("model has no token classifier head");
    if (spec.selection == SelectionMetric::span_f1 && label_names.empty())
        throw ConfigError("span-F1 selection needs the label vocabulary");
    model.set_dropout(spec.dropout, spec.dropout);

    TaskHooks hooks;
    hooks.train_size = static_cast<int64_t>(train.size());
    hooks.train_batch = [&train](EncoderModel& m, const std::vector<size_t>& idx, Rng& rng) {
        std::vector<int64_t> labels;
        Batch b = batch_of_tokens(train, idx, &labels);
        Tape tape;
        Node* logits = m.tok_logits(tape, b, /*training=*/true, &rng);
        Node* loss = tape.cross_entropy(logits, labels, Reduction::mean);
        tape.backward(loss);
        return double(loss->value.data[0]);
    };
    hooks.dev_metric = [&dev, &spec, &label_names](EncoderModel& m) {
        switch (spec.selection) {
            case SelectionMetric::cross_entropy:
                return token_cross_entropy(m, dev);
            case SelectionMetric::span_f1:
                return token_span_f1(m, dev, label_names).overall.f1;
            case SelectionMetric::accuracy:
            default:
                return token_accuracy(m, dev);
        }
    };
    return run_finetune(model, spec, hooks);
}

std::vector<int64_t> sequence_predictions(EncoderModel& model, const std::vector<SeqExample>& data,
                                          std::vector<double>* scores) {
    if (!model.has_seq_head()) throw ContractError("model has no sequence classifier head");
    std::vector<int64_t> preds;
    preds.reserve(data.size());
    int64_t classes = model.seq_classes();
    for_chunks(data.size(), [&](const std::vector<size_t>& idx) {
        Batch b = batch_of_sequences(data, idx, nullptr);
        Tape tape;
        Node* logits = model.seq_logits(tape, b, /*training=*/false, nullptr);
        for (size_t r = 0; r < idx.size(); ++r) {
            const float* row = logits->value.data.data() + static_cast<int64_t>(r) * classes;
            preds.push_back(argmax_row(row, classes));
            // Binary score: positive-class logit margin.
            if (scores) scores->push_back(double(row[classes - 1]) - double(row[0]));
        }
    });
    return preds;
}

double sequence_accuracy(EncoderModel& model, const std::vector<SeqExample>& data) {
    if (data.empty()) throw DataError("empty evaluation split");
    auto preds = sequence_predictions(model, data);
    int64_t hits = 0;
    for (size_t i = 0; i < data.size(); ++i)
        if (preds[i] == data[i].label) ++hits;
    return double(hits) / double(data.size());
}

double sequence_cross_entropy(EncoderModel& model, const std::vector<SeqExample>& data) {
    if (data.empty()) throw DataError("empty evaluation split");
    double total = 0.0;
    for_chunks(data.size(), [&](const std::vector<size_t>& idx) {
        std::vector<int64_t> labels;
        Batch b = batch_of_sequences(data, idx, &labels);
        Tape tape;
        Node* logits = model.seq_logits(tape, b, /*training=*/false, nullptr);
        Node* loss = tape.cross_entropy(logits, labels, Reduction::sum);
        total += double(loss->value.data[0]);
    });
    return total / double(data.size());
}

std::vector<std::vector<int64_t>> token_predictions(EncoderModel& model,
                                                    const std::vector<TokExample>& data) {
    if (!model.has_tok_head()) throw ContractError("model has no token classifier head");
    std::vector<std::vector<int64_t>> preds(data.size());
    int64_t labels = model.tok_labels();
    for_chunks(data.size(), [&](const std::vector<size_t>& idx) {
        Batch b = batch_of_tokens(data, idx, nullptr);
        Tape tape;
        Node* logits = model.tok_logits(tape, b, /*training=*/false, nullptr);
        for (size_t r = 0; r < idx.size(); ++r) {
            const TokExample& ex = data[idx[r]];
            std::vector<int64_t>& out = preds[idx[r]];
            for (size_t t = 0; t < ex.labels.size(); ++t) {
                if (ex.labels[t] < 0) continue;
                const float* row = logits->value.data.data() +
                                   (static_cast<int64_t>(r) * b.seq + static_cast<int64_t>(t)) * labels;
                out.push_back(argmax_row(row, labels));
            }
        }
    });
    return preds;
}

double token_accuracy(EncoderModel& model, const std::vector<TokExample>& data) {
    if (data.empty()) throw DataError("empty evaluation split");
    auto preds = token_predictions(model, data);
    int64_t hits = 0, total = 0;
    for (size_t i = 0; i < data.size(); ++i) {
        size_t k = 0;
        for (int64_t l : data[i].labels) {
            if (l < 0) continue;
            if (preds[i][k] == l) ++hits;
            ++k;
            ++total;
        }
    }
    if (total == 0) throw DataError("evaluation split has no labeled positions");
    return double(hits) / double(total);
}

double token_cross_entropy(EncoderModel& model, const std::vector<TokExample>& data) {
    if (data.empty()) throw DataError("empty evaluation split");
    double total = 0.0;
    int64_t count = 0;
    for_chunks(data.size(), [&](const std::vector<size_t>& idx) {
        std::vector<int64_t> labels;
        Batch b = batch_of_tokens(data, idx, &labels);
        Tape tape;
        Node* logits = model.tok_logits(tape, b, /*training=*/false, nullptr);
        Node* loss = tape.cross_entropy(logits, labels, Reduction::sum);
        total += double(loss->value.data[0]);
        for (int64_t l : labels)
            if (l >= 0) ++count;
    });
    if (count == 0) throw DataError("evaluation split has no labeled positions");
    return total / double(count);
}

SpanF1Report token_span_f1(EncoderModel& model, const std::vector<TokExample>& data,
                           const std::vector<std::string>& label_names) {
    auto preds = token_predictions(model, data);
    std::vector<std::vector<std::string>> pred_tags(data.size()), gold_tags(data.size());
    for (size_t i = 0; i < data.size(); ++i) {
        size_t k = 0;
        for (int64_t l : data[i].labels) {
            if (l < 0) continue;
            gold_tags[i].push_back(label_names.at(static_cast<size_t>(l)));
            pred_tags[i].push_back(label_names.at(static_cast<size_t>(preds[i][k])));
            ++k;
        }
        repair_bio(pred_tags[i]);
    }
    return span_f1_conll(pred_tags, gold_tags);
}

namespace {

template <class Example, class RunCell>
GridResult grid_search_impl(const FinetuneSpec& base, std::vector<double> lrs,
                            std::vector<int64_t> batch_sizes, RunCell&& run_cell) {
    if (lrs.empty() || batch_sizes.empty()) throw ConfigError("grid axes must be non-empty");
    std::sort(lrs.begin(), lrs.end());
    std::sort(batch_sizes.begin(), batch_sizes.end());

    GridResult result;
    double best = worst_metric(base.selection);
    bool have_best = false;
    for (double lr : lrs) {
        for (int64_t bs : batch_sizes) {
            FinetuneSpec spec = base;
            spec.lr = lr;
            spec.batch_size = bs;
            double metric = run_cell(spec);
            result.cells.push_back({lr, bs, metric});
            // Iteration order (lr-major, both ascending) plus a strict
            // comparison realizes the lowest-lr-then-smallest-batch tie-break.
            if (!have_best || metric_improves(base.selection, metric, best)) {
                best = metric;
                have_best = true;
                result.best_index = result.cells.size() - 1;
                result.best_spec = spec;
            }
        }
    }
    return result;
}

}  // namespace

GridResult grid_search_sequence(const std::function<EncoderModel()>& factory,
                                const std::vector<SeqExample>& train,
                                const std::vector<SeqExample>& dev, const FinetuneSpec& base,
                                std::vector<double> lrs, std::vector<int64_t> batch_sizes) {
    return grid_search_impl<SeqExample>(
        base, std::move(lrs), std::move(batch_sizes), [&](const FinetuneSpec& spec) {
            EncoderModel model = factory();
            return finetune_sequence(model, train, dev, spec).best_metric;
        });
}

GridResult grid_search_token(const std::function<EncoderModel()>& factory,
                             const std::vector<TokExample>& train,
                             const std::vector<TokExample>& dev, const FinetuneSpec& base,
                             std::vector<double> lrs, std::vector<int64_t> batch_sizes,
                             const std::vector<std::string>& label_names) {
    return grid_search_impl<TokExample>(
        base, std::move(lrs), std::move(batch_sizes), [&](const FinetuneSpec& spec) {
            EncoderModel model = factory();
            return finetune_token(model, train, dev, spec, label_names).best_metric;
        });
}

namespace {

template <class Example, class RunPoint>
std::vector<CurvePoint> learning_curve_impl(const std::vector<Example>& train,
                                            const std::vector<int64_t>& sizes, uint64_t seed,
                                            RunPoint&& run_point) {
    if (sizes.empty()) throw ConfigError("learning curve needs at least one subset size");
    std::vector<CurvePoint> out;
    for (int64_t size : sizes) {
        auto subset = shuffled_prefix(train, size, seed);
        auto [hits, total] = run_point(subset);
        AccuracyCi ci = accuracy_ci(hits, total);
        out.push_back({size, ci.accuracy, ci.lower, ci.upper});
    }
    return out;
}

}  // namespace

std::vector<CurvePoint> learning_curve_sequence(const std::function<EncoderModel()>& factory,
                                                const std::vector<SeqExample>& train,
                                                const std::vector<SeqExample>& dev,
                                                const std::vector<SeqExample>& test,
                                                const std::vector<int64_t>& sizes,
                                                const FinetuneSpec& spec) {
    if (test.empty()) throw DataError("empty test split");
    return learning_curve_impl<SeqExample>(
        train, sizes, spec.seed, [&](const std::vector<SeqExample>& subset) {
            EncoderModel model = factory();
            finetune_sequence(model, subset, dev, spec);
            auto preds = sequence_predictions(model, test);
            int64_t hits = 0;
            for (size_t i = 0; i < test.size(); ++i)
                if (preds[i] == test[i].label) ++hits;
            return std::pair<int64_t, int64_t>(hits, static_cast<int64_t>(test.size()));
        });
}

std::vector<CurvePoint> learning_curve_token(const std::function<EncoderModel()>& factory,
                                             const std::vector<TokExample>& train,
                                             const std::vector<TokExample>& dev,
                                             const std::vector<TokExample>& test,
                                             const std::vector<int64_t>& sizes,
                                             const FinetuneSpec& spec,
                                             const std::vector<std::string>& label_names) {
    if (test.empty()) throw DataError("empty test split");
    return learning_curve_impl<TokExample>(
        train, sizes, spec.seed, [&](const std::vector<TokExample>& subset) {
            EncoderModel model = factory();
            finetune_token(model, subset, dev, spec, label_names);
            auto preds = token_predictions(model, test);
            int64_t hits = 0, total = 0;
            for (size_t i = 0; i < test.size(); ++i) {
                size_t k = 0;
                for (int64_t l : test[i].labels) {
                    if (l < 0) continue;
                    if (preds[i][k] == l) ++hits;
                    ++k;
                    ++total;
                }
            }
            if (total == 0) throw DataError("test split has no labeled positions");
            return std::pair<int64_t, int64_t>(hits, total);
        });
}

std::vector<int64_t> truncate_tail(const std::vector<int64_t>& ids, int64_t max_len) {
    if (max_len < 2) throw ConfigError("truncation limit must leave room for the markers");
    std::vector<int64_t> content = ids;
    if (!content.empty() && content.front() == Tokenizer::kBos) content.erase(content.begin());
    if (!content.empty() && content.back() == Tokenizer::kEos) content.pop_back();
    int64_t keep = max_len - 2;
    if (static_cast<int64_t>(content.size()) > keep)
        content.erase(content.begin(), content.end() - keep);
    std::vector<int64_t> out;
    out.reserve(content.size() + 2);
    out.push_back(Tokenizer::kBos);
    out.insert(out.end(), content.begin(), content.end());
    out.push_back(Tokenizer::kEos);
    return out;
}

SeqExample make_pair_example(const Tokenizer& tokenizer, const MaskedChoiceExample& example) {
    if (example.candidates.size() != 2)
        throw DataError("paired-sequence example needs exactly two candidates");
    if (example.gold != 0 && example.gold != 1)
        throw DataError("gold index out of range for a two-candidate example");
    size_t slot = find_single_slot(example.masked_text);
    std::string prefix = example.masked_text.substr(0, slot);
    std::string suffix = example.masked_text.substr(slot + std::string(kMaskSlot).size());

    SeqExample out;
    out.ids.push_back(Tokenizer::kBos);
    for (size_t c = 0; c < 2; ++c) {
        Encoding enc = tokenizer.encode(prefix + example.candidates[c] + suffix, false);
        out.ids.insert(out.ids.end(), enc.ids.begin(), enc.ids.end());
        if (c == 0) out.ids.push_back(Tokenizer::kSep);
    }
    out.ids.push_back(Tokenizer::kEos);
    out.label = example.gold;
    return out;
}

SeqExample encode_review(const Tokenizer& tokenizer, const LabeledReview& review,
                         int64_t max_len) {
    SeqExample out;
    out.ids = truncate_tail(tokenizer.encode(review.text, /*add_specials=*/true).ids, max_len);
    out.label = review.label;
    return out;
}

std::vector<std::string> build_label_vocab(const std::vector<TaggedSentence>& sentences) {
    std::vector<std::string> vocab;
    for (const auto& s : sentences)
        for (const auto& t : s.tags) vocab.push_back(t);
    std::sort(vocab.begin(), vocab.end());
    vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
    if (vocab.empty()) throw DataError("no tags found in the corpus");
    return vocab;
}

TokExample make_token_example(const Tokenizer& tokenizer, const TaggedSentence& sentence,
                              const std::vector<std::string>& label_names, int64_t max_len) {
    if (sentence.words.size() != sentence.tags.size())
        throw ContractError("sentence has " + std::to_string(sentence.words.size()) +
                            " words but " + std::to_string(sentence.tags.size()) + " tags");
    if (max_len < 3) throw ConfigError("max_len leaves no room for content tokens");

    TokExample ex;
    ex.ids.push_back(Tokenizer::kBos);
    ex.labels.push_back(-1);
    int64_t budget = max_len - 2;
    for (size_t w = 0; w < sentence.words.size(); ++w) {
        auto it = std::find(label_names.begin(), label_names.end(), sentence.tags[w]);
        if (it == label_names.end())
            throw DataError("tag '" + sentence.tags[w] + "' missing from the label vocabulary");
        int64_t label = static_cast<int64_t>(it - label_names.begin());

        std::string text = w == 0 ? sentence.words[w] : " " + sentence.words[w];
        Encoding enc = tokenizer.encode(text, /*add_specials=*/false);
        if (enc.ids.empty()) throw DataError("word '" + sentence.words[w] + "' produced no tokens");
        if (static_cast<int64_t>(ex.ids.size()) - 1 + static_cast<int64_t>(enc.ids.size()) > budget)
            break;  // keep the sentence head when over-long
        for (size_t t = 0; t < enc.ids.size(); ++t) {
            ex.ids.push_back(enc.ids[t]);
            ex.labels.push_back(t == 0 ? label : -1);
        }
    }
    ex.ids.push_back(Tokenizer::kEos);
    ex.labels.push_back(-1);
    return ex;
}

}  // namespace mlmkit
