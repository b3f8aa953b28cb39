// SPDX-License-Identifier: Apache-2.0
#include "mlmkit/runner.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>

#include "mlmkit/checkpoint.hpp"
#include "mlmkit/fairness.hpp"
#include "mlmkit/finetune.hpp"
#include "mlmkit/pretrain.hpp"
#include "mlmkit/zeroshot.hpp"

namespace mlmkit {

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- presets

const std::map<std::string, const char*>& preset_map() {
    static const std::map<std::string, const char*> presets = {
        {"pretrain-paper", R"(# Full-scale pre-training regime (configuration only at desk scale).
[tokenizer]
vocab_size = 40000
[model]
layers = 12
hidden = 768
heads = 12
ffn_hidden = 3072
max_positions = 514
dropout = 0.1
attention_dropout = 0.1
tie_lm_head = true
[optimizer]
peak_lr = 1e-6
beta1 = 0.9
beta2 = 0.98
eps = 1e-6
weight_decay = 0.1
warmup_steps = 1000
total_steps = 16000
[pretrain]
logical_batch = 8192
micro_batch = 32
max_len = 512
)"},
        {"tiny-pretrain", R"(# Desk-scale pre-training used by the overfit sanity run.
[tokenizer]
vocab_size = 1000
[model]
layers = 2
hidden = 64
heads = 2
ffn_hidden = 256
max_positions = 130
dropout = 0
attention_dropout = 0
tie_lm_head = true
[optimizer]
peak_lr = 3e-4
beta1 = 0.9
beta2 = 0.98
eps = 1e-6
weight_decay = 0.01
warmup_steps = 50
total_steps = 2000
[pretrain]
logical_batch = 32
micro_batch = 32
max_len = 32
eval_interval = 25
stop_accuracy = 0.97
)"},
        {"sentiment-paper", R"([task]
kind = sentiment
max_len = 512
[finetune]
lr = 1e-5
batch = 128
dropout = 0.1
eps = 1e-8
warmup_steps = 500
max_steps = 2000
selection = accuracy
)"},
        {"diedat-10k", R"([task]
kind = diedat
[finetune]
lr = 1e-5
batch = 32
dropout = 0.1
eps = 1e-9
warmup_steps = 250
epochs = 13
selection = accuracy
)"},
        {"diedat-full", R"([task]
kind = diedat
[finetune]
lr = 1e-5
batch = 128
dropout = 0.1
eps = 1e-9
warmup_steps = 250
epochs = 3
selection = accuracy
)"},
        {"pos-paper", R"([task]
kind = pos
[finetune]
lr = 1e-4
batch = 16
dropout = 0.1
eps = 1e-8
warmup_fraction = 0.06
epochs = 10
selection = cross_entropy
)"},
        {"ner-paper", R"([task]
kind = ner
[finetune]
lr = 3e-5
batch = 32
dropout = 0.1
eps = 1e-8
warmup_fraction = 0.06
epochs = 10
selection = span_f1
)"},
        {"tiny-sentiment", R"([task]
kind = sentiment
max_len = 64
[finetune]
lr = 3e-4
batch = 8
dropout = 0
eps = 1e-8
warmup_fraction = 0.06
epochs = 2
selection = accuracy
)"},
        {"tiny-diedat", R"([task]
kind = diedat
[finetune]
lr = 3e-4
batch = 8
dropout = 0
eps = 1e-8
warmup_steps = 10
epochs = 2
selection = accuracy
)"},
        {"tiny-pos", R"([task]
kind = pos
max_len = 64
[finetune]
lr = 3e-4
batch = 8
dropout = 0
eps = 1e-8
warmup_fraction = 0.06
epochs = 3
selection = cross_entropy
)"},
        {"tiny-ner", R"([task]
kind = ner
max_len = 64
[finetune]
lr = 3e-4
batch = 8
dropout = 0
eps = 1e-8
warmup_fraction = 0.06
epochs = 3
selection = span_f1
)"},
    };
    return presets;
}

// ------------------------------------------------------------- utilities

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

class RunLog {
public:
    explicit RunLog(const fs::path& dir) : out_(dir / "log.txt", std::ios::binary) {
        if (!out_) throw IoError("cannot write " + (dir / "log.txt").string());
    }
    void line(const std::string& s) {
        out_ << s << '\n';
        out_.flush();
    }

private:
    std::ofstream out_;
};

std::ofstream open_csv(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> parts;
    size_t start = 0;
    while (start <= text.size()) {
        size_t comma = text.find(',', start);
        if (comma == std::string::npos) {
            parts.push_back(text.substr(start));
            break;
        }
        parts.push_back(text.substr(start, comma - start));
        start = comma + 1;
    }
    return parts;
}

SelectionMetric parse_selection(const std::string& name) {
    if (name == "accuracy") return SelectionMetric::accuracy;
    if (name == "cross_entropy") return SelectionMetric::cross_entropy;
    if (name == "span_f1") return SelectionMetric::span_f1;
    throw ConfigError("unknown selection metric '" + name +
                      "' (want accuracy, cross_entropy or span_f1)");
}

// ------------------------------------------------------- schema readers

uint64_t read_seed(Config& c) {
    c.default_to("run", "seed", "1");
    return static_cast<uint64_t>(c.require_int("run", "seed"));
}

ModelConfig read_model(Config& c, int64_t tokenizer_vocab) {
    c.default_to("model", "layers", "2");
    c.default_to("model", "hidden", "64");
    c.default_to("model", "heads", "2");
    c.default_to("model", "ffn_hidden", "256");
    c.default_to("model", "max_positions", "130");
    c.default_to("model", "dropout", "0.1");
    c.default_to("model", "attention_dropout", "0.1");
    c.default_to("model", "tie_lm_head", "true");

    ModelConfig m;
    m.layers = c.require_int("model", "layers");
    m.hidden = c.require_int("model", "hidden");
    m.heads = c.require_int("model", "heads");
    m.ffn_hidden = c.require_int("model", "ffn_hidden");
    m.max_positions = c.require_int("model", "max_positions");
    m.dropout = c.require_double("model", "dropout");
    m.attention_dropout = c.require_double("model", "attention_dropout");
    m.tie_lm_head = c.get_bool("model", "tie_lm_head", true);
    if (c.has("model", "vocab_size") &&
        c.require_int("model", "vocab_size") != tokenizer_vocab)
        throw ConfigError("model.vocab_size " + c.require_str("model", "vocab_size") +
                          " does not match the tokenizer vocabulary (" +
                          std::to_string(tokenizer_vocab) + ")");
    m.vocab_size = tokenizer_vocab;
    c.set("model", "vocab_size", format_int(tokenizer_vocab));
    m.validate();
    return m;
}

OptimizerConfig read_optimizer(Config& c) {
    c.default_to("optimizer", "peak_lr", "1e-4");
    c.default_to("optimizer", "beta1", "0.9");
    c.default_to("optimizer", "beta2", "0.98");
    c.default_to("optimizer", "eps", "1e-6");
    c.default_to("optimizer", "weight_decay", "0.01");
    c.default_to("optimizer", "warmup_steps", "100");
    c.default_to("optimizer", "total_steps", "1000");
    c.default_to("optimizer", "decay_power", "1");
    c.default_to("optimizer", "end_lr", "0");

    OptimizerConfig o;
    o.peak_lr = c.require_double("optimizer", "peak_lr");
    o.beta1 = c.require_double("optimizer", "beta1");
    o.beta2 = c.require_double("optimizer", "beta2");
    o.eps = c.require_double("optimizer", "eps");
    o.weight_decay = c.require_double("optimizer", "weight_decay");
    o.warmup_steps = c.require_int("optimizer", "warmup_steps");
    o.total_steps = c.require_int("optimizer", "total_steps");
    o.decay_power = c.require_double("optimizer", "decay_power");
    o.end_lr = c.require_double("optimizer", "end_lr");
    o.validate();
    return o;
}

MaskingPolicy read_masking(Config& c) {
    c.default_to("masking", "select_prob", "0.15");
    c.default_to("masking", "mask_frac", "0.8");
    c.default_to("masking", "random_frac", "0.1");
    c.default_to("masking", "keep_frac", "0.1");

    MaskingPolicy p;
    p.select_prob = c.require_double("masking", "select_prob");
    p.mask_frac = c.require_double("masking", "mask_frac");
    p.random_frac = c.require_double("masking", "random_frac");
    p.keep_frac = c.require_double("masking", "keep_frac");
    p.validate();
    return p;
}

PretrainConfig read_pretrain(Config& c) {
    c.default_to("pretrain", "logical_batch", "32");
    c.default_to("pretrain", "micro_batch", "8");
    c.default_to("pretrain", "max_len", "128");
    c.default_to("pretrain", "checkpoint_interval", "0");
    c.default_to("pretrain", "eval_interval", "0");
    c.default_to("pretrain", "stop_accuracy", "0");

    PretrainConfig p;
    p.optimizer = read_optimizer(c);
    p.masking = read_masking(c);
    p.logical_batch = c.require_int("pretrain", "logical_batch");
    p.micro_batch = c.require_int("pretrain", "micro_batch");
    p.max_len = c.require_int("pretrain", "max_len");
    p.checkpoint_interval = c.require_int("pretrain", "checkpoint_interval");
    p.eval_interval = c.require_int("pretrain", "eval_interval");
    p.stop_accuracy = c.require_double("pretrain", "stop_accuracy");
    p.seed = read_seed(c);
    p.validate();
    return p;
}

FinetuneSpec read_finetune(Config& c) {
    c.default_to("finetune", "lr", "1e-5");
    c.default_to("finetune", "batch", "32");
    c.default_to("finetune", "dropout", "0.1");
    c.default_to("finetune", "eps", "1e-8");
    c.default_to("finetune", "weight_decay", "0");
    c.default_to("finetune", "warmup_steps", "-1");
    c.default_to("finetune", "warmup_fraction", "0.06");
    c.default_to("finetune", "epochs", "3");
    c.default_to("finetune", "max_steps", "0");
    c.default_to("finetune", "selection", "accuracy");

    FinetuneSpec s;
    s.lr = c.require_double("finetune", "lr");
    s.batch_size = c.require_int("finetune", "batch");
    s.dropout = c.require_double("finetune", "dropout");
    s.adam_eps = c.require_double("finetune", "eps");
    s.weight_decay = c.require_double("finetune", "weight_decay");
    s.warmup_steps = c.require_int("finetune", "warmup_steps");
    s.warmup_fraction = c.require_double("finetune", "warmup_fraction");
    s.epochs = c.require_int("finetune", "epochs");
    s.max_steps = c.require_int("finetune", "max_steps");
    s.selection = parse_selection(c.require_str("finetune", "selection"));
    s.seed = read_seed(c);
    s.validate();
    return s;
}

// --------------------------------------------------------- task loading

constexpr uint64_t kDevCarveSeed = 1009;  // fixed, independent of the run seed

struct SeqSplit {
    std::vector<SeqExample> examples;
    std::vector<std::optional<int64_t>> attribute;  // per example, sequence tasks only
};

bool is_token_kind(const std::string& kind) { return kind == "pos" || kind == "ner"; }

std::string require_task_kind(Config& c) {
    std::string kind = c.require_str("task", "kind");
    if (kind != "sentiment" && kind != "diedat" && kind != "pos" && kind != "ner")
        throw ConfigError("unknown task.kind '" + kind +
                          "' (want sentiment, diedat, pos or ner)");
    return kind;
}

int64_t effective_max_len(Config& c, const EncoderModel& model, RunLog& log) {
    c.default_to("task", "max_len", "128");
    int64_t max_len = c.require_int("task", "max_len");
    int64_t cap = model.config().usable_positions();
    if (max_len > cap) {
        log.line("task.max_len " + std::to_string(max_len) + " clamped to the model's " +
                 std::to_string(cap) + " usable positions");
        max_len = cap;
    }
    return max_len;
}

SeqSplit load_sequence_split(Config& c, const Tokenizer& tokenizer, const std::string& kind,
                             const fs::path& path, int64_t max_len) {
    SeqSplit split;
    if (kind == "sentiment") {
        c.default_to("task", "attribute_positive", "f");
        std::string a_positive = c.require_str("task", "attribute_positive");
        ReviewFile file = load_reviews(path);
        for (const auto& r : file.reviews) {
            split.examples.push_back(encode_review(tokenizer, r, max_len));
            if (r.attribute.has_value())
                split.attribute.push_back(*r.attribute == a_positive ? 1 : 0);
            else
                split.attribute.push_back(std::nullopt);
        }
    } else {  // diedat
        for (const auto& ex : load_choice_examples(path)) {
            split.examples.push_back(make_pair_example(tokenizer, ex));
            split.attribute.push_back(std::nullopt);
        }
    }
    if (split.examples.empty()) throw DataError("no examples in " + path.string());
    return split;
}

std::vector<TaggedSentence> load_tagged_split(const std::string& kind, const fs::path& path) {
    if (kind == "pos") return parse_conllu(path);
    return parse_conll2002(path).sentences;
}

std::vector<TokExample> to_token_examples(const Tokenizer& tokenizer,
                                          const std::vector<TaggedSentence>& sentences,
                                          const std::vector<std::string>& labels,
                                          int64_t max_len) {
    std::vector<TokExample> out;
    out.reserve(sentences.size());
    for (const auto& s : sentences) out.push_back(make_token_example(tokenizer, s, labels, max_len));
    return out;
}

void write_labels(const fs::path& path, const std::vector<std::string>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& l : labels) out << l << '\n';
}

std::vector<std::string> read_labels(const fs::path& path) {
    auto lines = read_text_lines(path);
    std::vector<std::string> labels;
    for (auto& l : lines)
        if (!l.empty()) labels.push_back(l);
    if (labels.empty()) throw DataError("no labels in " + path.string());
    return labels;
}

// ------------------------------------------------------ result writers

void write_epochs_csv(const fs::path& path, const FinetuneResult& result) {
    auto out = open_csv(path);
    out << "epoch,steps,train_loss,dev_metric\n";
    for (const auto& row : result.log)
        out << row.epoch << ',' << row.steps << ',' << fmt(row.train_loss) << ','
            << fmt(row.dev_metric) << '\n';
}

void write_sequence_metrics(const fs::path& path, EncoderModel& model,
                            const std::vector<SeqExample>& test) {
    auto preds = sequence_predictions(model, test);
    int64_t hits = 0;
    std::vector<int64_t> y;
    for (size_t i = 0; i < test.size(); ++i) {
        y.push_back(test[i].label);
        if (preds[i] == test[i].label) ++hits;
    }
    AccuracyCi ci = accuracy_ci(hits, static_cast<int64_t>(test.size()));
    double zeror = zeror_accuracy(zeror_majority(y), y);

    auto out = open_csv(path);
    out << "metric,value\n";
    out << "examples," << test.size() << '\n';
    out << "accuracy," << fmt(ci.accuracy) << '\n';
    out << "ci_lower," << fmt(ci.lower) << '\n';
    out << "ci_upper," << fmt(ci.upper) << '\n';
    out << "zeror," << fmt(zeror) << '\n';
}

void write_token_metrics(const fs::path& dir, EncoderModel& model,
                         const std::vector<TokExample>& test,
                         const std::vector<std::string>& labels, bool spans) {
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
    AccuracyCi ci = accuracy_ci(hits, total);

    auto out = open_csv(dir / "test_metrics.csv");
    out << "metric,value\n";
    out << "labeled_positions," << total << '\n';
    out << "accuracy," << fmt(ci.accuracy) << '\n';
    out << "ci_lower," << fmt(ci.lower) << '\n';
    out << "ci_upper," << fmt(ci.upper) << '\n';
    if (spans) {
        SpanF1Report report = token_span_f1(model, test, labels);
        out << "span_precision," << fmt(report.overall.precision) << '\n';
        out << "span_recall," << fmt(report.overall.recall) << '\n';
        out << "span_f1," << fmt(report.overall.f1) << '\n';
        auto per_type = open_csv(dir / "per_type.csv");
        per_type << "type,precision,recall,f1,matched,predicted,gold\n";
        for (const auto& [type, prf] : report.per_type)
            per_type << type << ',' << fmt(prf.precision) << ',' << fmt(prf.recall) << ','
                     << fmt(prf.f1) << ',' << prf.matched << ',' << prf.predicted << ','
                     << prf.gold << '\n';
    }
}

void write_predictions_csv(const fs::path& path, EncoderModel& model, const SeqSplit& split) {
    std::vector<double> scores;
    sequence_predictions(model, split.examples, &scores);
    auto out = open_csv(path);
    out << "id,score,y,a\n";
    for (size_t i = 0; i < split.examples.size(); ++i) {
        out << i << ',' << fmt(scores[i]) << ',' << split.examples[i].label << ',';
        if (split.attribute[i].has_value()) out << *split.attribute[i];
        out << '\n';
    }
}

// ----------------------------------------------------------- subcommands

void cmd_train_tokenizer(Config& c, const fs::path& dir, RunLog& log) {
    c.default_to("tokenizer", "vocab_size", "1000");
    c.default_to("tokenizer", "min_pair_frequency", "2");
    fs::path corpus = c.require_str("tokenizer", "corpus");
    int64_t vocab = c.require_int("tokenizer", "vocab_size");
    int64_t min_freq = c.require_int("tokenizer", "min_pair_frequency");

    auto lines = read_text_lines(corpus);
    log.line("training tokenizer on " + std::to_string(lines.size()) + " lines");
    Tokenizer tok = Tokenizer::train(lines, vocab, min_freq);
    tok.save_dir(dir / "tokenizer");

    auto out = open_csv(dir / "summary.csv");
    out << "metric,value\n";
    out << "lines," << lines.size() << '\n';
    out << "vocab_size," << tok.vocab_size() << '\n';
    out << "merges," << tok.merge_count() << '\n';
    log.line("saved tokenizer with " + std::to_string(tok.vocab_size()) + " tokens");
}

void cmd_pretrain(Config& c, const fs::path& dir, RunLog& log) {
    Tokenizer tok = Tokenizer::load_dir(c.require_str("tokenizer", "dir"));
    ModelConfig mc = read_model(c, tok.vocab_size());
    PretrainConfig pc = read_pretrain(c);
    fs::path corpus = c.require_str("pretrain", "corpus");

    auto lines = read_text_lines(corpus);
    log.line("pre-training on " + std::to_string(lines.size()) + " corpus lines");
    EncoderModel model = EncoderModel::init(mc, pc.seed);
    log.line("model has " + std::to_string(model.parameter_total()) + " parameters");

    PretrainResult result = pretrain(model, tok, lines, pc, dir);
    auto out = open_csv(dir / "summary.csv");
    out << "metric,value\n";
    out << "steps," << result.steps_done << '\n';
    out << "final_loss," << fmt(result.final_loss) << '\n';
    out << "final_train_accuracy," << fmt(result.final_train_accuracy) << '\n';
    log.line("finished after " + std::to_string(result.steps_done) + " steps, final loss " +
             fmt(result.final_loss));
}

// Shared between finetune / grid-search / learning-curve / eval.
struct TaskContext {
    std::string kind;
    Tokenizer tokenizer;
    EncoderModel model;
    int64_t max_len = 0;
    // sequence tasks
    SeqSplit seq_train, seq_dev, seq_test;
    // token tasks
    std::vector<TokExample> tok_train, tok_dev, tok_test;
    std::vector<std::string> labels;
    bool has_test = false;
};

TaskContext load_task_context(Config& c, RunLog& log, bool need_train) {
    TaskContext ctx{.kind = require_task_kind(c),
                    .tokenizer = Tokenizer::load_dir(c.require_str("tokenizer", "dir")),
                    .model = load_checkpoint(c.require_str("model", "checkpoint")),
                    .max_len = 0,
                    .seq_train = {},
                    .seq_dev = {},
                    .seq_test = {},
                    .tok_train = {},
                    .tok_dev = {},
                    .tok_test = {},
                    .labels = {},
                    .has_test = false};
    ctx.max_len = effective_max_len(c, ctx.model, log);
    c.default_to("task", "dev_fraction", "0.05");
    double dev_fraction = c.require_double("task", "dev_fraction");

    std::string train_path = c.get_str("task", "train", "");
    std::string dev_path = c.get_str("task", "dev", "");
    std::string test_path = c.get_str("task", "test", "");
    if (need_train && train_path.empty())
        throw ConfigError("missing required config key task.train");
    if (!need_train && test_path.empty())
        throw ConfigError("missing required config key task.test");

    if (is_token_kind(ctx.kind)) {
        std::vector<TaggedSentence> train, dev, test;
        if (!train_path.empty()) train = load_tagged_split(ctx.kind, train_path);
        if (!dev_path.empty()) dev = load_tagged_split(ctx.kind, dev_path);
        if (!test_path.empty()) test = load_tagged_split(ctx.kind, test_path);

        fs::path saved_labels = fs::path(c.require_str("model", "checkpoint")) / "labels.txt";
        if (ctx.kind == "pos") {
            ctx.labels = upos_inventory();
        } else if (fs::exists(saved_labels)) {
            ctx.labels = read_labels(saved_labels);
        } else {
            std::vector<TaggedSentence> all = train;
            all.insert(all.end(), dev.begin(), dev.end());
            all.insert(all.end(), test.begin(), test.end());
            ctx.labels = build_label_vocab(all);
        }

        ctx.tok_train = to_token_examples(ctx.tokenizer, train, ctx.labels, ctx.max_len);
        ctx.tok_dev = to_token_examples(ctx.tokenizer, dev, ctx.labels, ctx.max_len);
        ctx.tok_test = to_token_examples(ctx.tokenizer, test, ctx.labels, ctx.max_len);
        if (need_train && ctx.tok_dev.empty()) {
            auto [tr, dv] = carve_dev(ctx.tok_train, dev_fraction, kDevCarveSeed);
            log.line("carved " + std::to_string(dv.size()) + " dev sentences from train");
            ctx.tok_train = std::move(tr);
            ctx.tok_dev = std::move(dv);
        }
        ctx.has_test = !ctx.tok_test.empty();
    } else {
        if (!train_path.empty())
            ctx.seq_train = load_sequence_split(c, ctx.tokenizer, ctx.kind, train_path, ctx.max_len);
        if (!dev_path.empty())
            ctx.seq_dev = load_sequence_split(c, ctx.tokenizer, ctx.kind, dev_path, ctx.max_len);
        if (!test_path.empty())
            ctx.seq_test = load_sequence_split(c, ctx.tokenizer, ctx.kind, test_path, ctx.max_len);
        if (need_train && ctx.seq_dev.examples.empty()) {
            std::vector<size_t> idx(ctx.seq_train.examples.size());
            for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            auto [tr_idx, dv_idx] = carve_dev(idx, dev_fraction, kDevCarveSeed);
            SeqSplit tr, dv;
            for (size_t i : tr_idx) {
                tr.examples.push_back(ctx.seq_train.examples[i]);
                tr.attribute.push_back(ctx.seq_train.attribute[i]);
            }
            for (size_t i : dv_idx) {
                dv.examples.push_back(ctx.seq_train.examples[i]);
                dv.attribute.push_back(ctx.seq_train.attribute[i]);
            }
            log.line("carved " + std::to_string(dv.examples.size()) + " dev examples from train");
            ctx.seq_train = std::move(tr);
            ctx.seq_dev = std::move(dv);
        }
        ctx.has_test = !ctx.seq_test.examples.empty();
    }
    return ctx;
}

void attach_task_head(TaskContext& ctx, uint64_t seed) {
    if (is_token_kind(ctx.kind)) {
        int64_t labels = static_cast<int64_t>(ctx.labels.size());
        if (ctx.model.has_tok_head()) {
            if (ctx.model.tok_labels() != labels)
                throw ConfigError("checkpoint token head has " +
                                  std::to_string(ctx.model.tok_labels()) + " labels, task needs " +
                                  std::to_string(labels));
        } else {
            ctx.model.attach_tok_head(labels, seed);
        }
    } else {
        if (ctx.model.has_seq_head()) {
            if (ctx.model.seq_classes() != 2)
                throw ConfigError("checkpoint sequence head has " +
                                  std::to_string(ctx.model.seq_classes()) +
                                  " classes, task needs 2");
        } else {
            ctx.model.attach_seq_head(2, seed);
        }
    }
}

void cmd_finetune(Config& c, const fs::path& dir, RunLog& log) {
    FinetuneSpec spec = read_finetune(c);
    TaskContext ctx = load_task_context(c, log, /*need_train=*/true);
    attach_task_head(ctx, spec.seed);

    FinetuneResult result;
    if (is_token_kind(ctx.kind)) {
        log.line("fine-tuning on " + std::to_string(ctx.tok_train.size()) + " sentences");
        result = finetune_token(ctx.model, ctx.tok_train, ctx.tok_dev, spec, ctx.labels);
    } else {
        log.line("fine-tuning on " + std::to_string(ctx.seq_train.examples.size()) + " examples");
        result = finetune_sequence(ctx.model, ctx.seq_train.examples, ctx.seq_dev.examples, spec);
    }
    write_epochs_csv(dir / "epochs.csv", result);
    log.line("best epoch " + std::to_string(result.best_epoch) + " with dev metric " +
             fmt(result.best_metric));

    save_checkpoint(dir / "model", ctx.model);
    if (is_token_kind(ctx.kind)) write_labels(dir / "model" / "labels.txt", ctx.labels);

    if (ctx.has_test) {
        if (is_token_kind(ctx.kind)) {
            write_token_metrics(dir, ctx.model, ctx.tok_test, ctx.labels, ctx.kind == "ner");
        } else {
            write_sequence_metrics(dir / "test_metrics.csv", ctx.model, ctx.seq_test.examples);
            write_predictions_csv(dir / "predictions.csv", ctx.model, ctx.seq_test);
        }
        log.line("wrote test metrics");
    }
}

void cmd_eval(Config& c, const fs::path& dir, RunLog& log) {
    TaskContext ctx = load_task_context(c, log, /*need_train=*/false);
    if (is_token_kind(ctx.kind)) {
        if (!ctx.model.has_tok_head())
            throw ConfigError("checkpoint has no token classifier head");
        write_token_metrics(dir, ctx.model, ctx.tok_test, ctx.labels, ctx.kind == "ner");
    } else {
        if (!ctx.model.has_seq_head())
            throw ConfigError("checkpoint has no sequence classifier head");
        write_sequence_metrics(dir / "test_metrics.csv", ctx.model, ctx.seq_test.examples);
        write_predictions_csv(dir / "predictions.csv", ctx.model, ctx.seq_test);
    }
    log.line("wrote evaluation metrics for " + ctx.kind);
}

std::pair<std::vector<double>, std::vector<int64_t>> read_grid_axes(Config& c) {
    c.default_to("grid", "lrs", "1e-05,2e-05,3e-05,0.0001");
    c.default_to("grid", "batches", "16,32,48");
    std::vector<double> lrs;
    for (const auto& s : split_list(c.require_str("grid", "lrs"))) {
        if (s.empty()) continue;
        try {
            lrs.push_back(std::stod(s));
        } catch (const std::exception&) {
            throw ConfigError("bad learning rate '" + s + "' in grid.lrs");
        }
    }
    std::vector<int64_t> batches;
    for (const auto& s : split_list(c.require_str("grid", "batches"))) {
        if (s.empty()) continue;
        try {
            batches.push_back(std::stoll(s));
        } catch (const std::exception&) {
            throw ConfigError("bad batch size '" + s + "' in grid.batches");
        }
    }
    return {lrs, batches};
}

void cmd_grid_search(Config& c, const fs::path& dir, RunLog& log) {
    FinetuneSpec base = read_finetune(c);
    TaskContext ctx = load_task_context(c, log, /*need_train=*/true);
    attach_task_head(ctx, base.seed);
    auto [lrs, batches] = read_grid_axes(c);
    log.line("grid of " + std::to_string(lrs.size() * batches.size()) + " cells");

    auto factory = [&ctx]() { return clone_model(ctx.model); };
    GridResult result;
    if (is_token_kind(ctx.kind)) {
        result = grid_search_token(factory, ctx.tok_train, ctx.tok_dev, base, lrs, batches,
                                   ctx.labels);
    } else {
        result = grid_search_sequence(factory, ctx.seq_train.examples, ctx.seq_dev.examples, base,
                                      lrs, batches);
    }

    auto out = open_csv(dir / "grid.csv");
    out << "lr,batch,dev_metric\n";
    for (const auto& cell : result.cells)
        out << fmt(cell.lr) << ',' << cell.batch_size << ',' << fmt(cell.dev_metric) << '\n';
    auto best = open_csv(dir / "summary.csv");
    best << "metric,value\n";
    best << "best_lr," << fmt(result.best_spec.lr) << '\n';
    best << "best_batch," << result.best_spec.batch_size << '\n';
    best << "best_dev_metric," << fmt(result.cells[result.best_index].dev_metric) << '\n';
    log.line("best cell: lr " + fmt(result.best_spec.lr) + ", batch " +
             std::to_string(result.best_spec.batch_size));
}

void cmd_learning_curve(Config& c, const fs::path& dir, RunLog& log) {
    FinetuneSpec spec = read_finetune(c);
    TaskContext ctx = load_task_context(c, log, /*need_train=*/true);
    attach_task_head(ctx, spec.seed);
    if (!ctx.has_test) throw ConfigError("learning-curve needs task.test");

    int64_t train_size = is_token_kind(ctx.kind)
                             ? static_cast<int64_t>(ctx.tok_train.size())
                             : static_cast<int64_t>(ctx.seq_train.examples.size());
    std::vector<int64_t> sizes;
    for (const auto& s : split_list(c.require_str("curve", "sizes"))) {
        if (s.empty()) continue;
        if (s == "full") {
            sizes.push_back(train_size);
            continue;
        }
        try {
            sizes.push_back(std::stoll(s));
        } catch (const std::exception&) {
            throw ConfigError("bad size '" + s + "' in curve.sizes");
        }
    }
    log.line("curve over " + std::to_string(sizes.size()) + " sizes");

    auto factory = [&ctx]() { return clone_model(ctx.model); };
    std::vector<CurvePoint> points;
    if (is_token_kind(ctx.kind)) {
        points = learning_curve_token(factory, ctx.tok_train, ctx.tok_dev, ctx.tok_test, sizes,
                                      spec, ctx.labels);
    } else {
        points = learning_curve_sequence(factory, ctx.seq_train.examples, ctx.seq_dev.examples,
                                         ctx.seq_test.examples, sizes, spec);
    }

    auto out = open_csv(dir / "curve.csv");
    out << "size,accuracy,ci_lower,ci_upper\n";
    for (const auto& p : points)
        out << p.size << ',' << fmt(p.accuracy) << ',' << fmt(p.ci_low) << ',' << fmt(p.ci_high)
            << '\n';
}

void cmd_zeroshot(Config& c, const fs::path& dir, RunLog& log) {
    Tokenizer tok = Tokenizer::load_dir(c.require_str("tokenizer", "dir"));
    EncoderModel model = load_checkpoint(c.require_str("model", "checkpoint"));
    auto examples = load_choice_examples(c.require_str("task", "test"));
    if (examples.empty()) throw DataError("no examples to score");
    size_t num_candidates = examples[0].candidates.size();
    for (const auto& ex : examples)
        if (ex.candidates.size() != num_candidates)
            throw DataError("examples disagree on candidate count");

    log.line("scoring " + std::to_string(examples.size()) + " examples zero-shot");
    ZeroshotResult result = eval_zeroshot(model, tok, examples);
    write_zeroshot_csv(dir / "zeroshot.csv", result, static_cast<int64_t>(num_candidates));

    auto out = open_csv(dir / "summary.csv");
    out << "metric,value\n";
    out << "examples," << examples.size() << '\n';
    out << "accuracy," << fmt(result.accuracy) << '\n';
    out << "ci_lower," << fmt(result.ci.lower) << '\n';
    out << "ci_upper," << fmt(result.ci.upper) << '\n';
    log.line("zero-shot accuracy " + fmt(result.accuracy));
}

void cmd_build_diedat(Config& c, const fs::path& dir, RunLog& log) {
    c.default_to("diedat", "words", "die,dat");
    fs::path corpus = c.require_str("diedat", "corpus");
    int64_t head = c.require_int("diedat", "head");
    int64_t tail = c.require_int("diedat", "tail");
    std::vector<std::string> words;
    for (const auto& w : split_list(c.require_str("diedat", "words")))
        if (!w.empty()) words.push_back(w);

    auto lines = read_text_lines(corpus);
    DiedatSplit split = build_diedat(lines, head, tail, words);
    save_choice_examples(dir / "train.jsonl", split.train);
    save_choice_examples(dir / "test.jsonl", split.test);

    auto out = open_csv(dir / "summary.csv");
    out << "metric,value\n";
    out << "lines," << lines.size() << '\n';
    out << "train_examples," << split.train.size() << '\n';
    out << "test_examples," << split.test.size() << '\n';
    log.line("built " + std::to_string(split.train.size()) + " train / " +
             std::to_string(split.test.size()) + " test examples");
}

void cmd_fairness_audit(Config& c, const fs::path& dir, RunLog& log) {
    c.default_to("fairness", "threshold", "0");
    c.default_to("fairness", "a_value", "1");
    c.default_to("fairness", "y_value", "1");
    fs::path records_path = c.require_str("fairness", "records");
    double threshold = c.require_double("fairness", "threshold");
    int64_t a_value = c.require_int("fairness", "a_value");
    int64_t y_value = c.require_int("fairness", "y_value");

    auto records = load_fairness_records(records_path);
    int64_t dropped = count_missing_attribute(records);
    log.line("loaded " + std::to_string(records.size()) + " records, " + std::to_string(dropped) +
             " without the attribute");

    double dpr_value = dpr(records, threshold, a_value);
    double eo_value = eo_diff(records, threshold, y_value, a_value);
    auto groups = roc_by_group(records, threshold);

    auto out = open_csv(dir / "report.csv");
    out << "metric,value\n";
    out << "records," << records.size() << '\n';
    out << "dropped_missing_attribute," << dropped << '\n';
    out << "threshold," << fmt(threshold) << '\n';
    out << "a_value," << a_value << '\n';
    out << "dpr," << fmt(dpr_value) << '\n';
    out << "eo_diff," << fmt(eo_value) << '\n';
    for (const auto& g : groups) {
        std::string suffix = "_group_" + std::to_string(g.group);
        out << "n" << suffix << ',' << g.count << '\n';
        out << "auc" << suffix << ',' << fmt(g.curve.auc) << '\n';
        out << "op_fpr" << suffix << ',' << fmt(g.op_fpr) << '\n';
        out << "op_tpr" << suffix << ',' << fmt(g.op_tpr) << '\n';
        auto roc_csv = open_csv(dir / ("roc_group_" + std::to_string(g.group) + ".csv"));
        roc_csv << "threshold,fpr,tpr\n";
        for (const auto& p : g.curve.points)
            roc_csv << fmt(p.threshold) << ',' << fmt(p.fpr) << ',' << fmt(p.tpr) << '\n';
    }
    log.line("dpr " + fmt(dpr_value) + ", eo_diff " + fmt(eo_value));
}

void cmd_association_test(Config& c, const fs::path& dir, RunLog& log) {
    c.default_to("fairness", "pronouns", "hij,zij");
    Tokenizer tok = Tokenizer::load_dir(c.require_str("tokenizer", "dir"));
    EncoderModel model = load_checkpoint(c.require_str("model", "checkpoint"));
    auto templates = load_templates(c.require_str("fairness", "templates"));
    auto professions = load_professions(c.require_str("fairness", "professions"));
    auto pronoun_list = split_list(c.require_str("fairness", "pronouns"));
    if (pronoun_list.size() != 2 || pronoun_list[0].empty() || pronoun_list[1].empty())
        throw ConfigError("fairness.pronouns must name exactly two words");

    log.line("ranking " + std::to_string(templates.size()) + " templates x " +
             std::to_string(professions.size()) + " professions");
    auto rows = association_test(model, tok, templates, professions,
                                 {pronoun_list[0], pronoun_list[1]});
    write_association_csv(dir / "association.csv", rows);
    log.line("wrote " + std::to_string(rows.size()) + " association rows");
}

using Handler = std::function<void(Config&, const fs::path&, RunLog&)>;

const std::map<std::string, Handler>& handler_map() {
    static const std::map<std::string, Handler> handlers = {
        {"train-tokenizer", cmd_train_tokenizer},
        {"pretrain", cmd_pretrain},
        {"finetune", cmd_finetune},
        {"grid-search", cmd_grid_search},
        {"learning-curve", cmd_learning_curve},
        {"eval", cmd_eval},
        {"zeroshot", cmd_zeroshot},
        {"build-diedat", cmd_build_diedat},
        {"fairness-audit", cmd_fairness_audit},
        {"association-test", cmd_association_test},
    };
    return handlers;
}

}  // namespace

const std::vector<std::string>& subcommand_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& [name, handler] : handler_map()) out.push_back(name);
        return out;
    }();
    return names;
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& [name, text] : preset_map()) out.push_back(name);
        return out;
    }();
    return names;
}

std::string preset_text(const std::string& name) {
    auto it = preset_map().find(name);
    if (it == preset_map().end()) {
        std::string known;
        for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
        throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
    }
    return it->second;
}

void run_command(const RunRequest& request) {
    auto it = handler_map().find(request.subcommand);
    if (it == handler_map().end()) {
        std::string known;
        for (const auto& n : subcommand_names()) known += (known.empty() ? "" : ", ") + n;
        throw UsageError("unknown subcommand '" + request.subcommand + "' (known: " + known + ")");
    }
    if (request.run_dir.empty()) throw UsageError("a run directory is required");

    Config cfg;
    if (!request.preset.empty())
        cfg = Config::parse_string(preset_text(request.preset), "preset:" + request.preset);
    if (!request.config_path.empty()) {
        Config file = Config::parse_file(request.config_path);
        for (const auto& [section, entries] : file.sections())
            for (const auto& [key, value] : entries) cfg.set(section, key, value);
    }
    for (const auto& o : request.overrides) cfg.apply_override(o);

    fs::path dir(request.run_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create run directory " + dir.string() + ": " + ec.message());

    RunLog log(dir);
    log.line("subcommand: " + request.subcommand);
    if (!request.preset.empty()) log.line("preset: " + request.preset);
    it->second(cfg, dir, log);
    cfg.write_resolved(dir / "config.txt");
    log.line("done");
}

}  // namespace mlmkit
