// SPDX-License-Identifier: Apache-2.0
// Drives the shared-library C interface the way an embedding application
// would: a full pipeline from tokenizer training to the fairness reports,
// all through mlmkit_run, plus the direct handle-based calls.
#include <cmath>
#include <cstring>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "mlmkit.h"
#include "mlmkit/metrics.hpp"

namespace fs = std::filesystem;

namespace {

mlmkit_status run_cmd(const char* subcommand, const char* preset,
                      const std::vector<std::string>& overrides, const fs::path& dir) {
    std::vector<const char*> ptrs;
    ptrs.reserve(overrides.size());
    for (const auto& o : overrides) ptrs.push_back(o.c_str());
    return mlmkit_run(subcommand, preset, nullptr, ptrs.empty() ? nullptr : ptrs.data(),
                      ptrs.size(), dir.string().c_str());
}

std::string joined(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) out += l + "\n";
    return out;
}

std::vector<std::string> split_lines(const char* buffer) {
    std::vector<std::string> out;
    std::istringstream in(buffer);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) out.push_back(line);
    return out;
}

bool contains(const std::vector<std::string>& haystack, const std::string& needle) {
    for (const auto& h : haystack)
        if (h == needle) return true;
    return false;
}

}  // namespace

TEST_CASE("version and error channel basics") {
    REQUIRE(mlmkit_version() != nullptr);
    CHECK(std::string(mlmkit_version()) == "0.1.0");
    mlmkit_buffer_free(nullptr);  // must be a no-op
}

TEST_CASE("full pipeline through the C runner") {
    testutil::TempDir tmp("capi");
    fs::path corpus = tmp.file("corpus.txt");
    testutil::write_file(corpus, joined(testutil::overfit_corpus()));

    // ---- tokenizer training run
    fs::path run_tok = tmp.file("run-tok");
    mlmkit_status rc = run_cmd("train-tokenizer", nullptr,
                               {"tokenizer.corpus=" + corpus.string(),
                                "tokenizer.vocab_size=400", "tokenizer.min_pair_frequency=1"},
                               run_tok);
    REQUIRE_MESSAGE(rc == MLMKIT_OK, mlmkit_last_error());
    REQUIRE(fs::exists(run_tok / "tokenizer" / "vocab.txt"));
    CHECK(fs::exists(run_tok / "summary.csv"));
    CHECK(fs::exists(run_tok / "log.txt"));
    std::string resolved = testutil::read_file(run_tok / "config.txt");
    CHECK(resolved.find("vocab_size") != std::string::npos);
    CHECK(resolved.find("min_pair_frequency") != std::string::npos);

    // ---- handle-based tokenizer use
    mlmkit_tokenizer* tok = nullptr;
    REQUIRE(mlmkit_tokenizer_load((run_tok / "tokenizer").string().c_str(), &tok) == MLMKIT_OK);
    int64_t vocab = 0;
    REQUIRE(mlmkit_tokenizer_vocab_size(tok, &vocab) == MLMKIT_OK);
    // the corpus runs out of mergeable pairs before the requested 400
    CHECK(vocab == 350);

    int64_t* ids = nullptr;
    size_t count = 0;
    REQUIRE(mlmkit_tokenizer_encode(tok, "faa gaa .", 1, &ids, &count) == MLMKIT_OK);
    REQUIRE(count >= 4);
    CHECK(ids[0] == 0);          // begin marker
    CHECK(ids[count - 1] == 2);  // end marker
    char* text = nullptr;
    REQUIRE(mlmkit_tokenizer_decode(tok, ids, count, &text) == MLMKIT_OK);
    CHECK(std::string(text) == "faa gaa .");  // specials dropped on decode
    mlmkit_buffer_free(text);
    mlmkit_buffer_free(ids);

    // ---- short pre-training run, preset layered under overrides
    fs::path run_pre = tmp.file("run-pre");
    rc = run_cmd("pretrain", "tiny-pretrain",
                 {"tokenizer.dir=" + (run_tok / "tokenizer").string(),
                  "pretrain.corpus=" + corpus.string(), "model.layers=1", "model.hidden=16",
                  "model.heads=2", "model.ffn_hidden=32", "model.max_positions=40",
                  "optimizer.total_steps=4", "optimizer.warmup_steps=1",
                  "optimizer.peak_lr=1e-3", "pretrain.logical_batch=8",
                  "pretrain.micro_batch=4", "pretrain.max_len=16", "pretrain.eval_interval=0",
                  "pretrain.stop_accuracy=0", "run.seed=7"},
                 run_pre);
    REQUIRE_MESSAGE(rc == MLMKIT_OK, mlmkit_last_error());
    REQUIRE(fs::exists(run_pre / "final" / "params.bin"));
    std::string loss_csv = testutil::read_file(run_pre / "loss.csv");
    CHECK(loss_csv.rfind("step,lr,loss,tokens_seen\n", 0) == 0);
    CHECK(std::count(loss_csv.begin(), loss_csv.end(), '\n') == 5);  // header + 4 steps
    // the override beat the preset's 2000 steps
    std::string pre_cfg = testutil::read_file(run_pre / "config.txt");
    CHECK(pre_cfg.find("total_steps = 4") != std::string::npos);

    // ---- model handle + zero-shot scoring
    mlmkit_model* model = nullptr;
    REQUIRE_MESSAGE(mlmkit_model_load((run_pre / "final").string().c_str(), &model) == MLMKIT_OK,
                    mlmkit_last_error());
    int64_t params = 0;
    REQUIRE(mlmkit_model_parameter_count(model, &params) == MLMKIT_OK);
    CHECK(params > 0);

    const char* candidates[2] = {"haa", "hab"};
    double scores[2] = {0, 0};
    size_t predicted = 99;
    REQUIRE_MESSAGE(mlmkit_score_choices(model, tok, "faa gaa <mask> jaa .", candidates, 2,
                                         scores, &predicted) == MLMKIT_OK,
                    mlmkit_last_error());
    CHECK(predicted < 2);
    for (double s : scores) {
        CHECK(std::isfinite(s));
        CHECK(s < 0.0);
    }
    // a slot-less text is rejected through the same path as the C++ core
    CHECK(mlmkit_score_choices(model, tok, "geen slot", candidates, 2, scores, &predicted) ==
          MLMKIT_DATA);
    CHECK(std::string(mlmkit_last_error()).find("mask") != std::string::npos);

    // ---- cloze task construction from a raw corpus
    std::vector<std::string> diedat_lines;
    for (int i = 0; i < 12; ++i) {
        const char* first = (i % 2 == 0) ? "die" : "dat";
        diedat_lines.push_back(std::string(first) + " faa ga" +
                               std::string(1, static_cast<char>('a' + i % 4)) + " haa .");
    }
    fs::path dd_corpus = tmp.file("diedat.txt");
    testutil::write_file(dd_corpus, joined(diedat_lines));
    fs::path run_dd = tmp.file("run-dd");
    rc = run_cmd("build-diedat", nullptr,
                 {"diedat.corpus=" + dd_corpus.string(), "diedat.head=8", "diedat.tail=4"},
                 run_dd);
    REQUIRE_MESSAGE(rc == MLMKIT_OK, mlmkit_last_error());
    REQUIRE(fs::exists(run_dd / "train.jsonl"));
    REQUIRE(fs::exists(run_dd / "test.jsonl"));

    // ---- fine-tune on the cloze pairs, preset + overrides
    fs::path run_ft = tmp.file("run-ft");
    rc = run_cmd("finetune", "tiny-diedat",
                 {"tokenizer.dir=" + (run_tok / "tokenizer").string(),
                  "model.checkpoint=" + (run_pre / "final").string(),
                  "task.train=" + (run_dd / "train.jsonl").string(),
                  "task.test=" + (run_dd / "test.jsonl").string(), "finetune.batch=4",
                  "finetune.epochs=1", "task.max_len=38"},
                 run_ft);
    REQUIRE_MESSAGE(rc == MLMKIT_OK, mlmkit_last_error());
    std::string epochs_csv = testutil::read_file(run_ft / "epochs.csv");
    CHECK(epochs_csv.rfind("epoch,steps,train_loss,dev_metric\n", 0) == 0);
    REQUIRE(fs::exists(run_ft / "model" / "params.bin"));
    CHECK(fs::exists(run_ft / "test_metrics.csv"));
    std::string preds_csv = testutil::read_file(run_ft / "predictions.csv");
    CHECK(preds_csv.rfind("id,score,y,a\n", 0) == 0);
    std::string metrics_csv = testutil::read_file(run_ft / "test_metrics.csv");
    CHECK(metrics_csv.find("zeror,") != std::string::npos);

    // ---- standalone evaluation of the saved fine-tuned model
    fs::path run_ev = tmp.file("run-ev");
    rc = run_cmd("eval", nullptr,
                 {"tokenizer.dir=" + (run_tok / "tokenizer").string(),
                  "model.checkpoint=" + (run_ft / "model").string(), "task.kind=diedat",
                  "task.test=" + (run_dd / "test.jsonl").string(), "task.max_len=38"},
                 run_ev);
    REQUIRE_MESSAGE(rc == MLMKIT_OK, mlmkit_last_error());
    CHECK(fs::exists(run_ev / "test_metrics.csv"));
    CHECK(fs::exists(run_ev / "predictions.csv"));

    // ---- zero-shot evaluation of the pre-trained checkpoint
    fs::path run_zs = tmp.file("run-zs");
    rc = run_cmd("zeroshot", nullptr,
                 {"tokenizer.dir=" + (run_tok / "tokenizer").string(),
                  "model.checkpoint=" + (run_pre / "final").string(),
                  "task.test=" + (run_dd / "test.jsonl").string()},
                 run_zs);
    REQUIRE_MESSAGE(rc == MLMKIT_OK, mlmkit_last_error());
    std::string zs_csv = testutil::read_file(run_zs / "zeroshot.csv");
    CHECK(zs_csv.rfind("example,score_0,score_1,predicted,gold\n", 0) == 0);
    CHECK(testutil::read_file(run_zs / "summary.csv").find("accuracy,") != std::string::npos);

    // ---- fairness audit over a hand-written score table
    fs::path records = tmp.file("records.csv");
    testutil::write_file(records,
                         "id,score,y,a\n"
                         "0,1.5,1,1\n1,-0.5,0,1\n2,0.5,1,1\n3,-1.5,0,1\n"
                         "4,2.0,1,0\n5,1.0,0,0\n6,-1.0,1,0\n7,-2.0,0,0\n"
                         "8,0.25,1,\n");
    fs::path run_fa = tmp.file("run-fa");
    rc = run_cmd("fairness-audit", nullptr, {"fairness.records=" + records.string()}, run_fa);
    REQUIRE_MESSAGE(rc == MLMKIT_OK, mlmkit_last_error());
    std::string report = testutil::read_file(run_fa / "report.csv");
    CHECK(report.find("dpr,") != std::string::npos);
    CHECK(report.find("eo_diff,") != std::string::npos);
    CHECK(report.find("dropped_missing_attribute,1") != std::string::npos);
    CHECK(fs::exists(run_fa / "roc_group_0.csv"));
    CHECK(fs::exists(run_fa / "roc_group_1.csv"));

    // ---- pronoun-rank association probe
    fs::path templates = tmp.file("templates.tsv");
    // keep the pronoun slot mid-sentence: the training corpus only teaches
    // space-prefixed merges for these words
    testutil::write_file(templates,
                         "text\tco_referent\n"
                         "faa waekt <mask> bij <T> .\t0\n");
    fs::path professions = tmp.file("professions.tsv");
    testutil::write_file(professions,
                         "profession\tgender_score\n"
                         "haa\t0.5\n"
                         "jab\t-0.5\n");
    fs::path run_as = tmp.file("run-as");
    rc = run_cmd("association-test", nullptr,
                 {"tokenizer.dir=" + (run_tok / "tokenizer").string(),
                  "model.checkpoint=" + (run_pre / "final").string(),
                  "fairness.templates=" + templates.string(),
                  "fairness.professions=" + professions.string(),
                  "fairness.pronouns=gaa,jaa"},
                 run_as);
    REQUIRE_MESSAGE(rc == MLMKIT_OK, mlmkit_last_error());
    std::string assoc = testutil::read_file(run_as / "association.csv");
    CHECK(assoc.rfind("template,co_referent,profession,gender_score,rank_male,rank_female,"
                      "rank_diff\n",
                      0) == 0);
    CHECK(std::count(assoc.begin(), assoc.end(), '\n') == 3);  // header + 1 template x 2 profs

    mlmkit_model_free(model);
    mlmkit_tokenizer_free(tok);
}

TEST_CASE("runner failure taxonomy maps onto exit statuses") {
    testutil::TempDir tmp("capifail");

    CHECK(run_cmd("no-such-command", nullptr, {}, tmp.file("r1")) == MLMKIT_USAGE);
    CHECK(std::string(mlmkit_last_error()).find("unknown subcommand") != std::string::npos);

    CHECK(run_cmd("pretrain", "no-such-preset", {}, tmp.file("r2")) == MLMKIT_CONFIG);
    CHECK(std::string(mlmkit_last_error()).find("unknown preset") != std::string::npos);

    CHECK(run_cmd("pretrain", nullptr, {"malformed override"}, tmp.file("r3")) == MLMKIT_USAGE);

    // finetune without a tokenizer directory: missing required key
    CHECK(run_cmd("finetune", "tiny-diedat", {}, tmp.file("r4")) == MLMKIT_CONFIG);

    // tokenizer directory that does not exist: an io failure
    CHECK(run_cmd("pretrain", nullptr,
                  {"tokenizer.dir=" + tmp.file("nonexistent").string(),
                   "pretrain.corpus=" + tmp.file("also-missing.txt").string()},
                  tmp.file("r5")) == MLMKIT_IO);

    // undefined metric: fairness audit with a single attribute group
    testutil::write_file(tmp.file("one-group.csv"), "id,score,y,a\n0,1.0,1,1\n1,-1.0,0,1\n");
    CHECK(run_cmd("fairness-audit", nullptr,
                  {"fairness.records=" + tmp.file("one-group.csv").string()},
                  tmp.file("r6")) == MLMKIT_DATA);

    CHECK(mlmkit_run(nullptr, nullptr, nullptr, nullptr, 0, "x") == MLMKIT_INVALID);
    CHECK(mlmkit_run("pretrain", nullptr, nullptr, nullptr, 0, nullptr) == MLMKIT_INVALID);
    CHECK(std::string(mlmkit_last_error()).size() > 0);
    // empty run directory is a usage error, distinct from the NULL contract
    CHECK(mlmkit_run("pretrain", nullptr, nullptr, nullptr, 0, "") == MLMKIT_USAGE);
}

TEST_CASE("NULL handles are rejected, not dereferenced") {
    int64_t* ids = nullptr;
    size_t count = 0;
    CHECK(mlmkit_tokenizer_encode(nullptr, "x", 0, &ids, &count) == MLMKIT_INVALID);
    mlmkit_tokenizer* tok = nullptr;
    CHECK(mlmkit_tokenizer_train(nullptr, 300, 1, &tok) == MLMKIT_INVALID);
    CHECK(mlmkit_tokenizer_load("/nonexistent-path", nullptr) == MLMKIT_INVALID);
    CHECK(mlmkit_tokenizer_load("/nonexistent-path", &tok) == MLMKIT_IO);
    CHECK(tok == nullptr);
    CHECK(mlmkit_model_load(nullptr, nullptr) == MLMKIT_INVALID);
    mlmkit_model* model = nullptr;
    CHECK(mlmkit_model_parameter_count(nullptr, nullptr) == MLMKIT_INVALID);
    CHECK(mlmkit_model_load("/nonexistent-path", &model) == MLMKIT_IO);
    double score = 0;
    size_t predicted = 0;
    CHECK(mlmkit_score_choices(nullptr, nullptr, "a <mask> b", nullptr, 0, &score, &predicted) ==
          MLMKIT_INVALID);
    // free functions tolerate NULL
    mlmkit_tokenizer_free(nullptr);
    mlmkit_model_free(nullptr);
}

TEST_CASE("direct tokenizer training via the C API") {
    testutil::TempDir tmp("capitok");
    fs::path corpus = tmp.file("c.txt");
    testutil::write_file(corpus, joined(testutil::overfit_corpus(2)));
    mlmkit_tokenizer* tok = nullptr;
    REQUIRE(mlmkit_tokenizer_train(corpus.string().c_str(), 300, 1, &tok) == MLMKIT_OK);
    REQUIRE(tok != nullptr);
    int64_t vocab = 0;
    CHECK(mlmkit_tokenizer_vocab_size(tok, &vocab) == MLMKIT_OK);
    CHECK(vocab == 300);
    CHECK(mlmkit_tokenizer_save(tok, tmp.file("saved").string().c_str()) == MLMKIT_OK);
    mlmkit_tokenizer* again = nullptr;
    REQUIRE(mlmkit_tokenizer_load(tmp.file("saved").string().c_str(), &again) == MLMKIT_OK);
    int64_t vocab2 = 0;
    CHECK(mlmkit_tokenizer_vocab_size(again, &vocab2) == MLMKIT_OK);
    CHECK(vocab2 == vocab);
    mlmkit_tokenizer_free(again);
    mlmkit_tokenizer_free(tok);

    // a floor below the byte alphabet is a config error
    CHECK(mlmkit_tokenizer_train(corpus.string().c_str(), 100, 1, &tok) == MLMKIT_CONFIG);
}

TEST_CASE("C metric wrappers agree with the core") {
    double acc = 0, lo = 0, hi = 0;
    REQUIRE(mlmkit_accuracy_ci(2116, 2224, 0.95, &acc, &lo, &hi) == MLMKIT_OK);
    mlmkit::AccuracyCi want = mlmkit::accuracy_ci(2116, 2224, 0.95);
    CHECK(acc == want.accuracy);
    CHECK(lo == want.lower);
    CHECK(hi == want.upper);
    CHECK(mlmkit_accuracy_ci(0, 0, 0.95, &acc, &lo, &hi) == MLMKIT_DATA);
    CHECK(mlmkit_accuracy_ci(5, 4, 0.95, &acc, &lo, &hi) == MLMKIT_INVALID);

    double scores_sep[4] = {0.9, 0.8, 0.2, 0.1};
    int64_t labels_sep[4] = {1, 1, 0, 0};
    double auc = 0;
    REQUIRE(mlmkit_auc(scores_sep, labels_sep, 4, &auc) == MLMKIT_OK);
    CHECK(auc == 1.0);
    double scores_mix[4] = {0.9, 0.7, 0.6, 0.1};
    int64_t labels_mix[4] = {1, 0, 1, 0};
    REQUIRE(mlmkit_auc(scores_mix, labels_mix, 4, &auc) == MLMKIT_OK);
    CHECK(auc == testutil::ref_auc({0.9, 0.7, 0.6, 0.1}, {1, 0, 1, 0}));
    int64_t one_class[2] = {1, 1};
    CHECK(mlmkit_auc(scores_sep, one_class, 2, &auc) == MLMKIT_DATA);
    CHECK(mlmkit_auc(nullptr, labels_sep, 4, &auc) == MLMKIT_INVALID);
}

TEST_CASE("subcommand and preset listings") {
    char* buffer = nullptr;
    REQUIRE(mlmkit_subcommands(&buffer) == MLMKIT_OK);
    auto subs = split_lines(buffer);
    mlmkit_buffer_free(buffer);
    CHECK(subs.size() == 10);
    CHECK(contains(subs, "pretrain"));
    CHECK(contains(subs, "train-tokenizer"));
    CHECK(contains(subs, "fairness-audit"));
    CHECK(contains(subs, "association-test"));

    buffer = nullptr;
    REQUIRE(mlmkit_presets(&buffer) == MLMKIT_OK);
    auto presets = split_lines(buffer);
    mlmkit_buffer_free(buffer);
    CHECK(presets.size() == 11);
    CHECK(contains(presets, "pretrain-paper"));
    CHECK(contains(presets, "tiny-pretrain"));
    CHECK(contains(presets, "sentiment-paper"));
    CHECK(contains(presets, "diedat-10k"));

    buffer = nullptr;
    REQUIRE(mlmkit_preset_text("tiny-pretrain", &buffer) == MLMKIT_OK);
    std::string text(buffer);
    mlmkit_buffer_free(buffer);
    CHECK(text.find("[model]") != std::string::npos);
    CHECK(text.find("hidden = 64") != std::string::npos);
    CHECK(mlmkit_preset_text("no-such-preset", &buffer) == MLMKIT_CONFIG);
}
