// SPDX-License-Identifier: Apache-2.0
// Shared fixtures for the unit and acceptance binaries: scratch directories,
// synthetic corpora, and independent reference implementations that the
// library results are compared against.
#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "mlmkit/bpe.hpp"
#include "mlmkit/common.hpp"
#include "mlmkit/encoder.hpp"
#include "mlmkit/task_data.hpp"

namespace testutil {

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<uint64_t> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("mlmkit-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline mlmkit::ModelConfig tiny_config(int64_t vocab_size, int64_t max_positions = 40) {
    mlmkit::ModelConfig c;
    c.layers = 2;
    c.hidden = 16;
    c.heads = 2;
    c.ffn_hidden = 32;
    c.vocab_size = vocab_size;
    c.max_positions = max_positions;
    c.dropout = 0.0;
    c.attention_dropout = 0.0;
    c.tie_lm_head = true;
    return c;
}

// ------------------------------------------------------ synthetic corpora

/// 20 sentence types, each a chain of 4 family-linked words plus a period,
/// repeated `copies` times. Any single visible word identifies the sentence,
/// so every masked token is recoverable from context. Letters only, so BPE
/// merges each word into one token once the vocabulary is large enough.
inline std::vector<std::string> overfit_corpus(int64_t copies = 5) {
    std::vector<std::string> lines;
    for (int64_t rep = 0; rep < copies; ++rep)
        for (int64_t i = 0; i < 20; ++i) {
            char suffix = static_cast<char>('a' + i);
            std::string line;
            line += std::string("fa") + suffix;
            line += " ga" + std::string(1, suffix);
            line += " ha" + std::string(1, suffix);
            line += " ja" + std::string(1, suffix);
            line += " .";
            lines.push_back(line);
        }
    return lines;
}

/// Deterministic word -> tag toy language for tagging-task tests. Each word
/// "na3", "vb7", ... carries its tag in the prefix.
struct TagLang {
    std::vector<std::string> tags = {"NOUN", "VERB", "ADJ", "DET"};
    std::vector<std::string> prefixes = {"na", "vb", "aj", "dt"};
    int64_t per_tag = 15;

    std::string word(int64_t tag_idx, int64_t k) const {
        return prefixes[static_cast<size_t>(tag_idx)] + std::to_string(k);
    }

    mlmkit::TaggedSentence sentence(mlmkit::Rng& rng) const {
        mlmkit::TaggedSentence s;
        int64_t len = 4 + rng.below(5);
        for (int64_t i = 0; i < len; ++i) {
            int64_t t = rng.below(static_cast<int64_t>(tags.size()));
            s.words.push_back(word(t, rng.below(per_tag)));
            s.tags.push_back(tags[static_cast<size_t>(t)]);
        }
        return s;
    }

    std::vector<mlmkit::TaggedSentence> sentences(int64_t n, uint64_t seed) const {
        mlmkit::Rng rng(seed);
        std::vector<mlmkit::TaggedSentence> out;
        for (int64_t i = 0; i < n; ++i) out.push_back(sentence(rng));
        return out;
    }

    std::vector<std::string> corpus_lines(const std::vector<mlmkit::TaggedSentence>& sents) const {
        std::vector<std::string> lines;
        for (const auto& s : sents) {
            std::string line;
            for (size_t i = 0; i < s.words.size(); ++i) {
                if (i) line += ' ';
                line += s.words[i];
            }
            lines.push_back(line);
        }
        return lines;
    }
};

/// Random UTF-8 string mixing ASCII, Latin-1 supplement, Greek, CJK and an
/// astral-plane block, for tokenizer round-trip testing.
inline std::string random_utf8(mlmkit::Rng& rng, int64_t max_chars = 40) {
    static const std::vector<std::pair<uint32_t, uint32_t>> blocks = {
        {0x20, 0x7e},       // printable ASCII
        {0xa1, 0xff},       // Latin-1 supplement
        {0x391, 0x3c9},     // Greek
        {0x4e00, 0x4e80},   // CJK ideographs (small slice)
        {0x1f600, 0x1f64f}  // emoticons
    };
    int64_t n = 1 + rng.below(max_chars);
    std::string out;
    for (int64_t i = 0; i < n; ++i) {
        auto [lo, hi] = blocks[static_cast<size_t>(rng.below(static_cast<int64_t>(blocks.size())))];
        uint32_t cp = lo + static_cast<uint32_t>(rng.below(hi - lo + 1));
        if (cp < 0x80) {
            out += static_cast<char>(cp);
        } else if (cp < 0x800) {
            out += static_cast<char>(0xc0 | (cp >> 6));
            out += static_cast<char>(0x80 | (cp & 0x3f));
        } else if (cp < 0x10000) {
            out += static_cast<char>(0xe0 | (cp >> 12));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
            out += static_cast<char>(0x80 | (cp & 0x3f));
        } else {
            out += static_cast<char>(0xf0 | (cp >> 18));
            out += static_cast<char>(0x80 | ((cp >> 12) & 0x3f));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
            out += static_cast<char>(0x80 | (cp & 0x3f));
        }
    }
    return out;
}

// -------------------------------------------------- reference algorithms

/// Reference BPE trainer working on byte strings instead of ids: counts
/// adjacent pairs with a sorted map, picks (count desc, pair asc), replaces
/// left to right. Returns merges as (left bytes, right bytes).
inline std::vector<std::pair<std::string, std::string>> ref_bpe_merges(
    const std::vector<std::string>& lines, int64_t target_vocab, int64_t min_pair_frequency) {
    std::map<std::string, int64_t> pretoken_freq;
    for (const auto& line : lines)
        for (auto [s, e] : mlmkit::Tokenizer::pretoken_spans(line))
            pretoken_freq[line.substr(s, e - s)] += 1;

    struct Word {
        std::vector<std::string> syms;
        int64_t freq;
    };
    std::vector<Word> words;
    for (const auto& [text, freq] : pretoken_freq) {
        Word w;
        w.freq = freq;
        for (char c : text) w.syms.emplace_back(1, c);
        words.push_back(std::move(w));
    }
    // All 256 byte tokens plus 6 specials exist up front regardless of use.
    int64_t vocab_size = mlmkit::Tokenizer::kBaseVocab;

    std::vector<std::pair<std::string, std::string>> merges;
    std::set<std::string> merged_strings;
    while (vocab_size < target_vocab) {
        std::map<std::pair<std::string, std::string>, int64_t> counts;
        for (const auto& w : words)
            for (size_t i = 0; i + 1 < w.syms.size(); ++i)
                counts[{w.syms[i], w.syms[i + 1]}] += w.freq;
        bool found = false;
        std::pair<std::string, std::string> best;
        int64_t best_count = 0;
        for (const auto& [pair, count] : counts) {
            if (count < min_pair_frequency) continue;
            if (!found || count > best_count) {  // map order = pair asc, so first max wins ties
                found = true;
                best = pair;
                best_count = count;
            }
        }
        if (!found) break;
        merges.push_back(best);
        std::string joined = best.first + best.second;
        if (merged_strings.insert(joined).second) ++vocab_size;
        for (auto& w : words) {
            std::vector<std::string> out;
            for (size_t i = 0; i < w.syms.size();) {
                if (i + 1 < w.syms.size() && w.syms[i] == best.first && w.syms[i + 1] == best.second) {
                    out.push_back(joined);
                    i += 2;
                } else {
                    out.push_back(w.syms[i]);
                    i += 1;
                }
            }
            w.syms = std::move(out);
        }
    }
    return merges;
}

/// The trained tokenizer's merge table as byte-string pairs, for comparison
/// with ref_bpe_merges.
inline std::vector<std::pair<std::string, std::string>> merge_strings(const mlmkit::Tokenizer& tok) {
    std::vector<std::pair<std::string, std::string>> out;
    for (auto [l, r] : tok.merges()) out.emplace_back(tok.token_text(l), tok.token_text(r));
    return out;
}

/// Reference die/dat enumerator: lowercases a copy, finds whole-word matches
/// with substring search plus boundary checks.
inline std::vector<mlmkit::MaskedChoiceExample> ref_diedat_line(
    const std::string& line, int64_t line_no, const std::vector<std::string>& words) {
    auto is_letter = [](unsigned char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
    };
    std::string lower = line;
    for (auto& c : lower)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);

    std::vector<mlmkit::MaskedChoiceExample> out;
    size_t pos = 0;
    while (pos < line.size()) {
        bool matched = false;
        for (size_t wi = 0; wi < words.size() && !matched; ++wi) {
            const std::string& w = words[wi];
            if (w.empty() || pos + w.size() > line.size()) continue;
            if (lower.compare(pos, w.size(), w) != 0) continue;
            if (pos > 0 && is_letter(static_cast<unsigned char>(line[pos - 1]))) continue;
            if (pos + w.size() < line.size() &&
                is_letter(static_cast<unsigned char>(line[pos + w.size()])))
                continue;
            mlmkit::MaskedChoiceExample ex;
            ex.masked_text =
                line.substr(0, pos) + mlmkit::kMaskSlot + line.substr(pos + w.size());
            ex.candidates = words;
            ex.gold = static_cast<int64_t>(wi);
            ex.removed_surface = line.substr(pos, w.size());
            ex.source_line = line_no;
            out.push_back(std::move(ex));
            pos += w.size();
            matched = true;
        }
        if (!matched) ++pos;
    }
    return out;
}

/// Reference BIO span extraction for well-formed tag sequences.
inline std::set<std::tuple<std::string, int64_t, int64_t>> ref_bio_spans(
    const std::vector<std::string>& tags) {
    std::set<std::tuple<std::string, int64_t, int64_t>> spans;
    int64_t n = static_cast<int64_t>(tags.size());
    for (int64_t i = 0; i < n; ++i) {
        if (tags[static_cast<size_t>(i)].rfind("B-", 0) != 0) continue;
        std::string type = tags[static_cast<size_t>(i)].substr(2);
        int64_t j = i + 1;
        while (j < n && tags[static_cast<size_t>(j)] == "I-" + type) ++j;
        spans.insert({type, i, j});
    }
    return spans;
}

/// AUC by pair counting: concordant + half of ties over all pos/neg pairs.
inline double ref_auc(const std::vector<double>& scores, const std::vector<int64_t>& labels) {
    double num = 0.0;
    int64_t pairs = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j])
                num += 1.0;
            else if (scores[i] == scores[j])
                num += 0.5;
        }
    }
    return num / static_cast<double>(pairs);
}

/// Random well-formed BIO tag sequence over the given entity types.
inline std::vector<std::string> random_bio(mlmkit::Rng& rng, const std::vector<std::string>& types,
                                           int64_t len) {
    std::vector<std::string> tags;
    int64_t i = 0;
    while (i < len) {
        if (rng.uniform() < 0.55) {
            tags.push_back("O");
            ++i;
        } else {
            const std::string& t = types[static_cast<size_t>(
                rng.below(static_cast<int64_t>(types.size())))];
            int64_t span = 1 + rng.below(3);
            tags.push_back("B-" + t);
            ++i;
            for (int64_t k = 1; k < span && i < len; ++k, ++i) tags.push_back("I-" + t);
        }
    }
    return tags;
}

}  // namespace testutil
