// SPDX-License-Identifier: Apache-2.0
//
// Acceptance gate: twelve end-to-end checks, each printed as one PASS/FAIL
// line. Every check verifies library output against an independent oracle,
// a hand-counted fixture, or a frozen numeric expectation. The binary exits
// nonzero when any check fails, so it can sit in the test suite as a single
// go/no-go signal.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "helpers.hpp"
#include "mlmkit/bpe.hpp"
#include "mlmkit/common.hpp"
#include "mlmkit/encoder.hpp"
#include "mlmkit/fairness.hpp"
#include "mlmkit/finetune.hpp"
#include "mlmkit/metrics.hpp"
#include "mlmkit/optim.hpp"
#include "mlmkit/pretrain.hpp"
#include "mlmkit/tape.hpp"
#include "mlmkit/task_data.hpp"
#include "mlmkit/zeroshot.hpp"

namespace {

struct Outcome {
    bool ok = false;
    std::string detail;
};

int g_failures = 0;

void run_check(const char* name, const std::function<Outcome()>& body) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out.ok = false;
        out.detail = std::string("unexpected exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s  %-34s %s(%.1fs)\n", out.ok ? "PASS" : "FAIL", name,
                out.detail.empty() ? "" : (out.detail + " ").c_str(), secs);
    std::fflush(stdout);
    if (!out.ok) ++g_failures;
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, pattern, a, b, c);
    return buf;
}

// ---------------------------------------------------------------- check 1

// The binomial confidence interval for 2116 correct out of 2224 must come out
// at (0.9425, 0.9604) to within one unit in the fourth decimal, with the point
// accuracy formatting as 95.144 percent.
Outcome check_interval_values() {
    auto ci = mlmkit::accuracy_ci(2116, 2224);
    bool ok = std::fabs(ci.lower - 0.9425) <= 1e-4 && std::fabs(ci.upper - 0.9604) <= 1e-4 &&
              mlmkit::percent3(ci.accuracy) == "95.144";
    return {ok, fmt("interval (%.5f, %.5f)", ci.lower, ci.upper)};
}

// ---------------------------------------------------------------- check 2

// The closed-form trainable-parameter count of the full-size configuration
// (12 layers, hidden 768, 12 heads, ffn 3072, vocab 40000, 514 positions,
// tied output) must land in [115.5M, 118.5M] and agree exactly with the
// registered parameters of an instantiated model.
Outcome check_parameter_count() {
    mlmkit::ModelConfig base;  // defaults are the full-size configuration
    int64_t closed = mlmkit::EncoderModel::count_parameters(base);
    bool in_range = closed >= 115'500'000 && closed <= 118'500'000;
    bool exact = false;
    {
        auto model = mlmkit::EncoderModel::init(base, 1);
        exact = model.parameter_total() == closed;
    }
    return {in_range && exact, "count " + std::to_string(closed)};
}

// ---------------------------------------------------------------- check 3

// Analytic gradients of the masked-token loss on a small two-layer model must
// match central finite differences (step 1e-3, float32-snapped evaluation
// grid) within a relative error of 1e-3, across five random initializations.
Outcome check_gradients() {
    mlmkit::ModelConfig cfg = testutil::tiny_config(300);
    double worst = 0.0;
    int64_t coords_total = 0;
    for (uint64_t seed = 1; seed <= 5; ++seed) {
        auto model = mlmkit::EncoderModel::init(cfg, seed);
        mlmkit::Rng rng(seed * 7 + 1);

        std::vector<std::vector<int64_t>> rows(2);
        rows[0] = {mlmkit::Tokenizer::kBos, 0, 0, 0, 0, mlmkit::Tokenizer::kEos};
        rows[1] = {mlmkit::Tokenizer::kBos, 0, 0, mlmkit::Tokenizer::kEos};
        for (auto& row : rows)
            for (auto& id : row)
                if (id == 0 && &id != &row[0]) id = 6 + rng.below(cfg.vocab_size - 6);

        // Mask three positions; their true ids become the only live targets.
        std::vector<int64_t> flat = {1, 3, 7};  // row 0 tokens 1 and 3, row 1 token 1
        std::vector<int64_t> targets(2 * 6, -1);
        targets[1] = rows[0][1];
        targets[3] = rows[0][3];
        targets[7] = rows[1][1];
        rows[0][1] = mlmkit::Tokenizer::kMask;
        rows[0][3] = mlmkit::Tokenizer::kMask;
        rows[1][1] = mlmkit::Tokenizer::kMask;
        auto batch = mlmkit::Batch::pad_to_rect(rows, mlmkit::Tokenizer::kPad);

        mlmkit::Tape tape;
        mlmkit::Node* logits = model.mlm_logits(tape, batch, true, &rng);
        mlmkit::Node* loss = tape.cross_entropy(logits, targets, mlmkit::Reduction::mean);

        std::vector<std::pair<mlmkit::Parameter*, std::vector<int64_t>>> coords;
        for (mlmkit::Parameter* p : model.parameters()) {
            std::vector<int64_t> idx = {0};
            if (p->numel() > 2) idx.push_back(p->numel() / 2);
            if (p->numel() > 1) idx.push_back(p->numel() - 1);
            coords.emplace_back(p, std::move(idx));
        }
        auto report = mlmkit::grad_check(tape, loss, coords, 1e-3);
        coords_total += report.coords_checked;
        worst = std::max(worst, report.max_rel_err);
    }
    return {worst < 1e-3,
            fmt("max rel err %.2e over ", worst) + std::to_string(coords_total) + " coords"};
}

// ---------------------------------------------------------------- check 4

// One optimizer step on a logical batch of 32 windows must produce the same
// parameters whether the batch runs as a single slice of 32 or as four
// accumulated slices of 8 (dropout off, same seed), within 1e-6 relative.
Outcome check_accumulation() {
    auto lines = testutil::overfit_corpus(10);  // 200 lines -> 40 windows of 32 tokens
    auto tok = mlmkit::Tokenizer::train(lines, 400, 1);
    mlmkit::ModelConfig cfg = testutil::tiny_config(tok.vocab_size());

    mlmkit::PretrainConfig pc;
    pc.optimizer.peak_lr = 1e-3;
    pc.optimizer.warmup_steps = 0;
    pc.optimizer.total_steps = 1;
    pc.logical_batch = 32;
    pc.max_len = 32;
    pc.seed = 11;

    auto run_once = [&](int64_t micro) {
        auto model = mlmkit::EncoderModel::init(cfg, 5);
        pc.micro_batch = micro;
        mlmkit::pretrain(model, tok, lines, pc);
        std::vector<float> flat;
        for (const mlmkit::Parameter* p : std::as_const(model).parameters())
            flat.insert(flat.end(), p->value.data.begin(), p->value.data.end());
        return flat;
    };
    auto whole = run_once(32);
    auto sliced = run_once(8);

    double max_rel = 0.0;
    for (size_t i = 0; i < whole.size(); ++i) {
        double a = whole[i], b = sliced[i];
        double denom = std::max({std::fabs(a), std::fabs(b), 1e-8});
        max_rel = std::max(max_rel, std::fabs(a - b) / denom);
    }
    return {max_rel <= 1e-6, fmt("max rel diff %.2e", max_rel)};
}

// ---------------------------------------------------------------- check 5

// Over more than a million maskable positions, the selected fraction must be
// 0.15 within 0.005, and the mask/random/keep split of the selected positions
// must be 0.80/0.10/0.10 within 0.01 each.
Outcome check_masking_statistics() {
    const int64_t n_rows = 1100, payload = 1000, vocab = 506;
    mlmkit::Rng content(3);
    std::vector<std::vector<int64_t>> rows(n_rows);
    for (auto& row : rows) {
        row.reserve(payload + 2);
        row.push_back(mlmkit::Tokenizer::kBos);
        for (int64_t i = 0; i < payload; ++i) row.push_back(6 + content.below(vocab - 6));
        row.push_back(mlmkit::Tokenizer::kEos);
    }
    mlmkit::MaskingPolicy policy;
    mlmkit::Rng rng(99);
    auto masked = mlmkit::mask_batch(rows, policy, rng, vocab);

    double eligible = static_cast<double>(masked.eligible);
    double selected = static_cast<double>(masked.selected());
    double sel_frac = selected / eligible;
    double mask_frac = masked.chose_mask / selected;
    double random_frac = masked.chose_random / selected;
    double keep_frac = masked.chose_keep / selected;
    bool ok = masked.eligible >= 1'000'000 && std::fabs(sel_frac - 0.15) <= 0.005 &&
              std::fabs(mask_frac - 0.80) <= 0.01 && std::fabs(random_frac - 0.10) <= 0.01 &&
              std::fabs(keep_frac - 0.10) <= 0.01;
    return {ok, fmt("select %.4f, split %.3f/%.3f", sel_frac, mask_frac, random_frac) +
                    fmt("/%.3f", keep_frac)};
}

// ---------------------------------------------------------------- check 6

// A small model trained on the 100-line synthetic corpus must reach 95%
// masked-token top-1 accuracy on its own training windows within 2000 steps,
// after which zero-shot choice scoring on the corpus pattern (last word of a
// family sentence vs. a wrong family's word) must be perfect.
Outcome check_overfit_and_choices() {
    auto lines = testutil::overfit_corpus(10);  // 200 lines -> 40 windows of 32 tokens
    auto tok = mlmkit::Tokenizer::train(lines, 400, 1);

    mlmkit::ModelConfig cfg;
    cfg.layers = 2;
    cfg.hidden = 64;
    cfg.heads = 2;
    cfg.ffn_hidden = 256;
    cfg.vocab_size = tok.vocab_size();
    cfg.max_positions = 130;
    cfg.dropout = 0.0;
    cfg.attention_dropout = 0.0;
    auto model = mlmkit::EncoderModel::init(cfg, 1);

    mlmkit::PretrainConfig pc;
    pc.optimizer.peak_lr = 1e-3;
    pc.optimizer.warmup_steps = 50;
    pc.optimizer.total_steps = 2000;
    pc.optimizer.weight_decay = 0.01;
    pc.logical_batch = 32;
    pc.micro_batch = 32;
    pc.max_len = 8;  // one sentence per window, the same shape the scorer builds
    pc.eval_interval = 25;
    pc.stop_accuracy = 0.97;
    pc.seed = 1;
    auto result = mlmkit::pretrain(model, tok, lines, pc);

    bool trained = result.final_train_accuracy >= 0.95 && result.steps_done <= 2000;

    std::vector<mlmkit::MaskedChoiceExample> examples;
    for (int64_t i = 0; i < 10; ++i) {
        char good = static_cast<char>('a' + i);
        char bad = static_cast<char>('a' + (i + 7) % 20);
        mlmkit::MaskedChoiceExample ex;
        ex.masked_text = std::string("fa") + good + " ga" + good + " ha" + good + " " +
                         mlmkit::kMaskSlot + " .";
        ex.candidates = {std::string("ja") + good, std::string("ja") + bad};
        ex.gold = 0;
        examples.push_back(std::move(ex));
    }
    auto zs = mlmkit::eval_zeroshot(model, tok, examples);
    bool ok = trained && zs.accuracy == 1.0;
    return {ok, fmt("train acc %.3f @ ", result.final_train_accuracy) +
                    std::to_string(result.steps_done) + " steps, choice acc " +
                    mlmkit::percent3(zs.accuracy)};
}

// ---------------------------------------------------------------- check 7

// Masked-choice extraction from a 1000-line fixture must agree with an
// independent whole-word enumerator: same example count and identical
// (masked text, gold, removed surface, source line) on both splits.
Outcome check_choice_extraction() {
    const std::vector<std::string> vocab = {
        "die",   "dat",   "Die",    "Dat",   "DAT",     "dIe",    "dieet", "datum",
        "dag",   "fiets", "man",    "zei",   "was",     "(die)",  "dat,",  "die.",
        "'dat'", "x1dat", "datx",   "zij",   "die\xc3\xab", "\xc3\xa9"
                                                            "die",         "niet",  "erg",
        "dat?",  "die!",  "diedat", "dat2",  "2die",    "kapot"};
    mlmkit::Rng rng(7);
    std::vector<std::string> lines;
    for (int64_t i = 0; i < 1000; ++i) {
        int64_t n = 1 + rng.below(10);
        std::string line;
        for (int64_t k = 0; k < n; ++k) {
            if (k) line += ' ';
            line += vocab[static_cast<size_t>(rng.below(static_cast<int64_t>(vocab.size())))];
        }
        lines.push_back(std::move(line));
    }

    auto split = mlmkit::build_diedat(lines, 600, 400);

    std::vector<mlmkit::MaskedChoiceExample> ref_train, ref_test;
    for (int64_t i = 0; i < 600; ++i)  // source lines are numbered from 1
        for (auto& ex :
             testutil::ref_diedat_line(lines[static_cast<size_t>(i)], i + 1, {"die", "dat"}))
            ref_train.push_back(std::move(ex));
    for (int64_t i = 600; i < 1000; ++i)
        for (auto& ex :
             testutil::ref_diedat_line(lines[static_cast<size_t>(i)], i + 1, {"die", "dat"}))
            ref_test.push_back(std::move(ex));

    auto same = [](const std::vector<mlmkit::MaskedChoiceExample>& got,
                   const std::vector<mlmkit::MaskedChoiceExample>& want) {
        if (got.size() != want.size()) return false;
        for (size_t i = 0; i < got.size(); ++i) {
            if (got[i].masked_text != want[i].masked_text || got[i].gold != want[i].gold ||
                got[i].removed_surface != want[i].removed_surface ||
                got[i].source_line != want[i].source_line || got[i].candidates != want[i].candidates)
                return false;
        }
        return true;
    };
    bool ok = same(split.train, ref_train) && same(split.test, ref_test);
    return {ok, std::to_string(split.train.size()) + "+" + std::to_string(split.test.size()) +
                    " examples vs oracle " + std::to_string(ref_train.size()) + "+" +
                    std::to_string(ref_test.size())};
}

// ---------------------------------------------------------------- check 8

// Span precision/recall/F1 on 200 random well-formed BIO sentences must match
// a brute-force span-set comparison, and a hand fixture must come out at
// exactly P=0.5, R=1/3, F1=0.4.
Outcome check_span_f1() {
    mlmkit::Rng rng(21);
    const std::vector<std::string> types = {"PER", "LOC", "ORG"};
    std::vector<std::vector<std::string>> preds, golds;
    for (int64_t i = 0; i < 200; ++i) {
        int64_t len = 1 + rng.below(12);
        golds.push_back(testutil::random_bio(rng, types, len));
        preds.push_back(testutil::random_bio(rng, types, len));
    }
    auto report = mlmkit::span_f1_conll(preds, golds);

    int64_t matched = 0, predicted = 0, gold = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
        auto ps = testutil::ref_bio_spans(preds[i]);
        auto gs = testutil::ref_bio_spans(golds[i]);
        predicted += static_cast<int64_t>(ps.size());
        gold += static_cast<int64_t>(gs.size());
        for (const auto& span : ps)
            if (gs.count(span)) ++matched;
    }
    double p = predicted ? static_cast<double>(matched) / static_cast<double>(predicted) : 0.0;
    double r = gold ? static_cast<double>(matched) / static_cast<double>(gold) : 0.0;
    double f1 = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    bool random_ok = report.overall.matched == matched && report.overall.predicted == predicted &&
                     report.overall.gold == gold && std::fabs(report.overall.precision - p) <= 1e-12 &&
                     std::fabs(report.overall.recall - r) <= 1e-12 &&
                     std::fabs(report.overall.f1 - f1) <= 1e-12;

    std::vector<std::vector<std::string>> hp = {{"B-PER", "O", "O", "B-LOC", "O"}};
    std::vector<std::vector<std::string>> hg = {{"B-PER", "O", "B-LOC", "O", "B-ORG"}};
    auto hand = mlmkit::span_f1_conll(hp, hg);
    bool hand_ok = hand.overall.precision == 0.5 &&
                   std::fabs(hand.overall.recall - 1.0 / 3.0) <= 1e-15 &&
                   std::fabs(hand.overall.f1 - 0.4) <= 1e-12;

    return {random_ok && hand_ok,
            fmt("random corpus m/p/g %.0f/%.0f/%.0f", static_cast<double>(matched),
                static_cast<double>(predicted), static_cast<double>(gold))};
}

// ---------------------------------------------------------------- check 9

// Group fairness metrics: the parity ratio and opportunity difference must
// reproduce hand-counted fixtures exactly, a perfect predictor must score an
// opportunity difference of zero, predictions independent of the attribute
// must stay below 0.02 at n=100000, and the ranking AUC must match a
// pair-counting oracle on 100 random score sets.
Outcome check_fairness_metrics() {
    using mlmkit::FairnessRecord;
    std::vector<FairnessRecord> recs = {
        {1, 1.0, 1},  {0, 0.5, 1},   {0, -0.5, 1}, {1, -1.0, 1},  {1, 2.0, 0},
        {1, 0.25, 0}, {0, 0.75, 0},  {0, 1.5, 0},  {0, -2.0, 0},
    };
    // Group a=1 predicts positive 2/4, group a=0 predicts positive 4/5.
    bool parity_ok = mlmkit::dpr(recs) == (4.0 / 5.0) / (2.0 / 4.0);
    // Positive-class rows: group a=0 at 2/2, group a=1 at 1/2.
    bool eo_ok = mlmkit::eo_diff(recs) == 1.0 - 0.5;

    std::vector<FairnessRecord> perfect;
    mlmkit::Rng prng(5);
    for (int64_t i = 0; i < 64; ++i) {
        int64_t y = prng.below(2);
        perfect.push_back({y, y ? 1.0 : -1.0, prng.below(2)});
    }
    bool perfect_ok = mlmkit::eo_diff(perfect) == 0.0;

    std::vector<FairnessRecord> indep;
    mlmkit::Rng rng(31);
    for (int64_t i = 0; i < 100'000; ++i) {
        int64_t y = rng.uniform() < 0.4 ? 1 : 0;
        int64_t a = rng.uniform() < 0.5 ? 1 : 0;
        double score = (y ? 0.3 : -0.3) + rng.normal() * 0.5;
        indep.push_back({y, score, a});
    }
    double drift = mlmkit::eo_diff(indep);
    bool indep_ok = std::fabs(drift) < 0.02;

    mlmkit::Rng arng(43);
    double max_auc_diff = 0.0;
    for (int64_t t = 0; t < 100; ++t) {
        int64_t n = 2 + arng.below(49);
        std::vector<double> scores;
        std::vector<int64_t> labels;
        for (int64_t i = 0; i < n; ++i) {
            scores.push_back(static_cast<double>(arng.below(7)) * 0.25);  // coarse: forces ties
            labels.push_back(arng.below(2));
        }
        labels[0] = 1;  // guarantee both classes
        labels[static_cast<size_t>(n - 1)] = 0;
        double got = mlmkit::roc(scores, labels).auc;
        double want = testutil::ref_auc(scores, labels);
        max_auc_diff = std::max(max_auc_diff, std::fabs(got - want));
    }
    bool auc_ok = max_auc_diff <= 1e-12;

    return {parity_ok && eo_ok && perfect_ok && indep_ok && auc_ok,
            fmt("independence drift %.4f, auc gap %.1e", drift, max_auc_diff)};
}

// ---------------------------------------------------------------- check 10

// The majority-class baseline must score exactly the majority label's
// frequency on the evaluation set, across random label distributions.
Outcome check_majority_baseline() {
    mlmkit::Rng rng(17);
    for (int64_t trial = 0; trial < 20; ++trial) {
        int64_t n = 5 + rng.below(200);
        std::vector<int64_t> train, eval;
        for (int64_t i = 0; i < n; ++i) train.push_back(rng.below(4));
        int64_t m = 5 + rng.below(200);
        for (int64_t i = 0; i < m; ++i) eval.push_back(rng.below(4));

        int64_t majority = mlmkit::zeror_majority(train);
        // Majority must be maximal on the training labels.
        std::map<int64_t, int64_t> freq;
        for (int64_t v : train) ++freq[v];
        for (const auto& [v, c] : freq)
            if (c > freq[majority]) return {false, "non-maximal majority label"};

        int64_t hits = static_cast<int64_t>(std::count(eval.begin(), eval.end(), majority));
        double want = static_cast<double>(hits) / static_cast<double>(m);
        if (mlmkit::zeror_accuracy(majority, eval) != want)
            return {false, "rate mismatch on trial " + std::to_string(trial)};

        // Self-evaluation: exactly the majority class rate of the same set.
        int64_t self_hits = static_cast<int64_t>(std::count(train.begin(), train.end(), majority));
        double self_want = static_cast<double>(self_hits) / static_cast<double>(n);
        if (mlmkit::zeror_accuracy(majority, train) != self_want)
            return {false, "self rate mismatch on trial " + std::to_string(trial)};
    }
    return {true, "20 random label sets exact"};
}

// ---------------------------------------------------------------- check 11

// On a synthetic tagging language whose word prefixes determine the tag, the
// learning curve over training sizes {4, 100} must rise by at least ten
// accuracy points from the smallest size to the largest.
Outcome check_learning_curve() {
    testutil::TagLang lang;
    auto train_sents = lang.sentences(100, 41);
    auto dev_sents = lang.sentences(10, 42);
    auto test_sents = lang.sentences(30, 43);

    std::vector<mlmkit::TaggedSentence> all = train_sents;
    auto tok = mlmkit::Tokenizer::train(lang.corpus_lines(all), 300, 1);
    auto labels = mlmkit::build_label_vocab(train_sents);

    auto to_examples = [&](const std::vector<mlmkit::TaggedSentence>& sents) {
        std::vector<mlmkit::TokExample> out;
        for (const auto& s : sents) out.push_back(mlmkit::make_token_example(tok, s, labels, 40));
        return out;
    };
    auto train = to_examples(train_sents);
    auto dev = to_examples(dev_sents);
    auto test = to_examples(test_sents);

    mlmkit::ModelConfig cfg = testutil::tiny_config(tok.vocab_size());
    auto factory = [&]() {
        auto model = mlmkit::EncoderModel::init(cfg, 2);
        model.attach_tok_head(static_cast<int64_t>(labels.size()), 3);
        return model;
    };

    mlmkit::FinetuneSpec spec;
    spec.lr = 3e-3;
    spec.batch_size = 8;
    spec.dropout = 0.0;
    spec.epochs = 6;
    spec.seed = 5;

    auto curve = mlmkit::learning_curve_token(factory, train, dev, test, {4, 100}, spec, labels);
    double gap = curve[1].accuracy - curve[0].accuracy;
    return {gap >= 0.10, fmt("accuracy %.3f @ 4 -> %.3f @ 100", curve[0].accuracy,
                             curve[1].accuracy)};
}

// ---------------------------------------------------------------- check 12

// Tokenizer: byte-fallback round-trip on 1000 random UTF-8 strings, merge
// order equal to a byte-string reference trainer on three corpora, and
// bit-identical results when training twice on the same corpus.
Outcome check_tokenizer_properties() {
    std::vector<std::string> small = {"the cat sat on the mat .", "the rat sat .",
                                      "a cat and a rat ."};
    auto tok_small = mlmkit::Tokenizer::train(small, mlmkit::Tokenizer::kBaseVocab + 20, 1);

    mlmkit::Rng rng(13);
    for (int64_t i = 0; i < 1000; ++i) {
        std::string s = testutil::random_utf8(rng);
        auto enc = tok_small.encode(s, false);
        if (tok_small.decode(enc.ids) != s)
            return {false, "round-trip failure on string " + std::to_string(i)};
    }

    testutil::TagLang lang;
    auto tag_lines = lang.corpus_lines(lang.sentences(30, 9));
    auto overfit = testutil::overfit_corpus();
    struct Case {
        std::vector<std::string> lines;
        int64_t target;
        int64_t min_freq;
    };
    std::vector<Case> cases = {{small, mlmkit::Tokenizer::kBaseVocab + 20, 1},
                               {tag_lines, mlmkit::Tokenizer::kBaseVocab + 40, 1},
                               {overfit, mlmkit::Tokenizer::kBaseVocab + 30, 2}};
    for (size_t c = 0; c < cases.size(); ++c) {
        auto tok = mlmkit::Tokenizer::train(cases[c].lines, cases[c].target, cases[c].min_freq);
        auto got = testutil::merge_strings(tok);
        auto want = testutil::ref_bpe_merges(cases[c].lines, cases[c].target, cases[c].min_freq);
        if (got != want) return {false, "merge order mismatch on corpus " + std::to_string(c)};
    }

    auto once = mlmkit::Tokenizer::train(tag_lines, mlmkit::Tokenizer::kBaseVocab + 40, 1);
    auto twice = mlmkit::Tokenizer::train(tag_lines, mlmkit::Tokenizer::kBaseVocab + 40, 1);
    if (once.vocab_size() != twice.vocab_size() ||
        testutil::merge_strings(once) != testutil::merge_strings(twice))
        return {false, "training is not deterministic"};
    for (int64_t id = 0; id < once.vocab_size(); ++id)
        if (once.token_text(id) != twice.token_text(id))
            return {false, "token table differs between runs"};

    return {true, "1000 round-trips, 3 merge oracles, deterministic"};
}

}  // namespace

int main() {
    run_check("interval-values", check_interval_values);
    run_check("parameter-count", check_parameter_count);
    run_check("gradient-check", check_gradients);
    run_check("accumulation-equivalence", check_accumulation);
    run_check("masking-statistics", check_masking_statistics);
    run_check("overfit-and-choices", check_overfit_and_choices);
    run_check("choice-extraction-oracle", check_choice_extraction);
    run_check("span-f1-oracle", check_span_f1);
    run_check("fairness-metrics", check_fairness_metrics);
    run_check("majority-baseline", check_majority_baseline);
    run_check("learning-curve", check_learning_curve);
    run_check("tokenizer-properties", check_tokenizer_properties);

    std::printf("%d of 12 checks passed\n", 12 - g_failures);
    return g_failures == 0 ? 0 : 1;
}
