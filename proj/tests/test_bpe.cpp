// SPDX-License-Identifier: Apache-2.0
#include <string>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "mlmkit/bpe.hpp"

using mlmkit::Encoding;
using mlmkit::Tokenizer;

namespace {

const std::vector<std::string> kSmallCorpus = {
    "the cat sat on the mat",
    "the cat ate the rat",
    "a cat and a rat sat",
};

}  // namespace

TEST_CASE("bpe: special and byte ids are fixed") {
    CHECK(Tokenizer::kBos == 0);
    CHECK(Tokenizer::kPad == 1);
    CHECK(Tokenizer::kEos == 2);
    CHECK(Tokenizer::kUnk == 3);
    CHECK(Tokenizer::kSep == 4);
    CHECK(Tokenizer::kMask == 5);
    CHECK(Tokenizer::kNumSpecials == 6);
    CHECK(Tokenizer::kBaseVocab == 262);
    Tokenizer tok = Tokenizer::train(kSmallCorpus, 262);
    CHECK(tok.vocab_size() == 262);
    CHECK(tok.merge_count() == 0);
    // byte b lives at id 6+b
    CHECK(tok.token_text(6 + 'a') == "a");
    CHECK(tok.token_id("a") == 6 + 'a');
    CHECK(Tokenizer::is_special(5));
    CHECK_FALSE(Tokenizer::is_special(6));
}

TEST_CASE("bpe: pretoken spans partition the input and glue whitespace forward") {
    auto spans = Tokenizer::pretoken_spans("the cat  sat");
    std::string rebuilt;
    std::string text = "the cat  sat";
    size_t prev_end = 0;
    for (auto [s, e] : spans) {
        CHECK(s == prev_end);
        CHECK(e > s);
        prev_end = e;
        rebuilt += text.substr(s, e - s);
    }
    CHECK(prev_end == text.size());
    CHECK(rebuilt == text);
    // "the", " cat", "  sat": whitespace belongs to the following run
    REQUIRE(spans.size() == 3);
    CHECK(text.substr(spans[1].first, spans[1].second - spans[1].first) == " cat");
    CHECK(text.substr(spans[2].first, spans[2].second - spans[2].first) == "  sat");

    // digits, punctuation and multibyte letters split into their own runs
    auto mixed = Tokenizer::pretoken_spans("ab12!\xc3\xa9x");
    std::vector<std::string> parts;
    for (auto [s, e] : mixed) parts.push_back(std::string("ab12!\xc3\xa9x").substr(s, e - s));
    CHECK(parts == std::vector<std::string>{"ab", "12", "!", "\xc3\xa9x"});

    CHECK(Tokenizer::pretoken_spans("").empty());
}

TEST_CASE("bpe: trained merges match the reference trainer") {
    for (int64_t target : {262 + 5, 262 + 20, 262 + 60}) {
        Tokenizer tok = Tokenizer::train(kSmallCorpus, target);
        auto got = testutil::merge_strings(tok);
        auto want = testutil::ref_bpe_merges(kSmallCorpus, target, 2);
        CHECK(got == want);
    }
}

TEST_CASE("bpe: training stops when no pair reaches the frequency floor") {
    std::vector<std::string> corpus = {"abc"};
    Tokenizer tok = Tokenizer::train(corpus, 10000, 2);
    CHECK(tok.merge_count() == 0);  // every pair occurs once
    Tokenizer tok1 = Tokenizer::train(corpus, 10000, 1);
    CHECK(tok1.merge_count() == 2);  // "ab" then "abc" (or equivalent order)
}

TEST_CASE("bpe: training rejects bad arguments") {
    CHECK_THROWS_AS(Tokenizer::train(kSmallCorpus, 261), mlmkit::ConfigError);
    CHECK_THROWS_AS(Tokenizer::train(kSmallCorpus, 300, 0), mlmkit::ConfigError);
    CHECK_THROWS_AS(Tokenizer::train({}, 300), mlmkit::TrainingError);
    CHECK_THROWS_AS(Tokenizer::train({"", ""}, 300), mlmkit::TrainingError);
}

TEST_CASE("bpe: encode round-trips bytes exactly") {
    Tokenizer tok = Tokenizer::train(kSmallCorpus, 300);
    for (const std::string& text :
         {std::string("the cat sat"), std::string("unseen words!"), std::string("  spaces  "),
          std::string("\xc3\xa9\xe2\x82\xac mixed \xf0\x9f\x98\x80"), std::string("")}) {
        Encoding enc = tok.encode(text, false);
        CHECK(tok.decode(enc.ids) == text);
    }
}

TEST_CASE("bpe: random utf-8 round-trip, with and without specials") {
    Tokenizer tok = Tokenizer::train(kSmallCorpus, 310);
    mlmkit::Rng rng(2024);
    for (int i = 0; i < 200; ++i) {
        std::string text = testutil::random_utf8(rng);
        CHECK(tok.decode(tok.encode(text, false).ids) == text);
        Encoding wrapped = tok.encode(text, true);
        REQUIRE(wrapped.ids.size() >= 2);
        CHECK(wrapped.ids.front() == Tokenizer::kBos);
        CHECK(wrapped.ids.back() == Tokenizer::kEos);
        CHECK(tok.decode(wrapped.ids) == text);  // specials dropped in decode
    }
}

TEST_CASE("bpe: offsets cover the input; specials are zero-width") {
    Tokenizer tok = Tokenizer::train(kSmallCorpus, 300);
    std::string text = "the cat sat on a mat";
    Encoding enc = tok.encode(text, true);
    REQUIRE(enc.ids.size() == enc.offsets.size());
    CHECK(enc.offsets.front().first == enc.offsets.front().second);  // [bos]
    CHECK(enc.offsets.back().first == enc.offsets.back().second);    // [eos]
    int64_t pos = 0;
    for (size_t i = 0; i < enc.ids.size(); ++i) {
        auto [s, e] = enc.offsets[i];
        if (s == e) continue;  // special
        CHECK(s == pos);
        CHECK(tok.token_text(enc.ids[i]) ==
              text.substr(static_cast<size_t>(s), static_cast<size_t>(e - s)));
        pos = e;
    }
    CHECK(pos == static_cast<int64_t>(text.size()));
}

TEST_CASE("bpe: merges apply in learned order inside a pretoken") {
    // Train on a corpus where "aaab" forces ordered merges, then verify the
    // encoding equals a left-to-right replay of the merge list.
    std::vector<std::string> corpus = {"aaab aaab aaab ab ab"};
    Tokenizer tok = Tokenizer::train(corpus, 262 + 4, 2);
    Encoding enc = tok.encode("aaab", false);
    std::string glued;
    for (int64_t id : enc.ids) glued += tok.token_text(id);
    CHECK(glued == "aaab");
    // replaying the merges by hand over raw bytes gives the same ids
    std::vector<int64_t> syms;
    for (unsigned char c : std::string("aaab")) syms.push_back(6 + c);
    for (size_t m = 0; m < tok.merges().size(); ++m) {
        auto [l, r] = tok.merges()[m];
        std::vector<int64_t> out;
        std::string joined = tok.token_text(l) + tok.token_text(r);
        int64_t joined_id = tok.token_id(joined);
        for (size_t i = 0; i < syms.size();) {
            if (i + 1 < syms.size() && syms[i] == l && syms[i + 1] == r) {
                out.push_back(joined_id);
                i += 2;
            } else {
                out.push_back(syms[i]);
                i += 1;
            }
        }
        syms = out;
    }
    CHECK(enc.ids == syms);
}

TEST_CASE("bpe: save/load reproduces the tokenizer exactly") {
    testutil::TempDir tmp("bpe");
    Tokenizer tok = Tokenizer::train(kSmallCorpus, 320);
    tok.save_dir(tmp.file("tok"));
    Tokenizer back = Tokenizer::load_dir(tmp.file("tok"));
    CHECK(back.vocab_size() == tok.vocab_size());
    CHECK(back.merges() == tok.merges());
    mlmkit::Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        std::string text = testutil::random_utf8(rng);
        CHECK(back.encode(text, true).ids == tok.encode(text, true).ids);
    }
    CHECK_THROWS_AS(Tokenizer::load_dir(tmp.file("nope")), mlmkit::IoError);
}

TEST_CASE("bpe: training twice is deterministic") {
    Tokenizer a = Tokenizer::train(kSmallCorpus, 330);
    Tokenizer b = Tokenizer::train(kSmallCorpus, 330);
    CHECK(a.merges() == b.merges());
    CHECK(a.vocab_size() == b.vocab_size());
    for (int64_t id = 0; id < a.vocab_size(); ++id) CHECK(a.token_text(id) == b.token_text(id));
}

TEST_CASE("bpe: escape/unescape round-trip") {
    for (std::string raw : {std::string("plain"), std::string("with space"),
                            std::string("\x00\x01\xff", 3), std::string("back\\slash")}) {
        CHECK(Tokenizer::unescape_token(Tokenizer::escape_token(raw)) == raw);
    }
}
