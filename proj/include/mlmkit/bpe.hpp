// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mlmkit/common.hpp"

namespace mlmkit {

/// Token ids plus per-token (start, end) byte spans into the source text.
/// Special tokens get zero-width spans; the non-special spans are ordered,
/// non-overlapping, and cover the input exactly.
struct Encoding {
    std::vector<int64_t> ids;
    std::vector<std::pair<int64_t, int64_t>> offsets;
};

/// Byte-level byte-pair tokenizer. The id space is dense:
///   0..5    special tokens (see constants below),
///   6..261  the 256 single bytes in byte order,
///   262..   learned merge outputs in learned order (deduplicated: a merge
///           whose concatenated string already names a token reuses its id).
/// Byte fallback makes encoding total; the unknown token is never produced.
class Tokenizer {
public:
    static constexpr int64_t kBos = 0;
    static constexpr int64_t kPad = 1;
    static constexpr int64_t kEos = 2;
    static constexpr int64_t kUnk = 3;
    static constexpr int64_t kSep = 4;
    static constexpr int64_t kMask = 5;
    static constexpr int64_t kNumSpecials = 6;
    static constexpr int64_t kFirstByte = kNumSpecials;
    static constexpr int64_t kBaseVocab = kNumSpecials + 256;

    /// Greedy pair merging: repeatedly merge the most frequent adjacent pair
    /// (ties broken lexicographically on the pair's byte strings), re-counting
    /// after every merge, until the vocabulary reaches target_vocab_size or no
    /// pair occurs at least min_pair_frequency times.
    static Tokenizer train(const std::vector<std::string>& corpus_lines, int64_t target_vocab_size,
                           int64_t min_pair_frequency = 2);

    static Tokenizer load_dir(const std::filesystem::path& dir);
    void save_dir(const std::filesystem::path& dir) const;

    /// Applies merges in learned order within each pre-token. With
    /// add_specials, wraps the result as [bos] ... [eos].
    Encoding encode(std::string_view text, bool add_specials) const;
    /// Concatenates token bytes, dropping special tokens.
    std::string decode(const std::vector<int64_t>& ids) const;

    int64_t vocab_size() const { return static_cast<int64_t>(token_bytes_.size()); }
    int64_t merge_count() const { return static_cast<int64_t>(merges_.size()); }
    /// Learned merges as (left id, right id) pairs in learned order.
    const std::vector<std::pair<int64_t, int64_t>>& merges() const { return merges_; }
    /// Byte content of a non-special token; the display name for specials.
    const std::string& token_text(int64_t id) const;
    /// Exact byte-string lookup over non-special tokens; -1 when absent.
    int64_t token_id(std::string_view bytes) const;
    static const char* special_name(int64_t id);
    static bool is_special(int64_t id) { return id >= 0 && id < kNumSpecials; }

    /// Pre-token byte spans: runs of one character class (whitespace, letter,
    /// digit, other; bytes >= 0x80 count as letters), with each whitespace run
    /// glued to the run that follows it. Concatenation reproduces the input.
    static std::vector<std::pair<size_t, size_t>> pretoken_spans(std::string_view text);

    /// Bytes outside printable ASCII, plus backslash, become \xHH.
    static std::string escape_token(std::string_view raw);
    static std::string unescape_token(std::string_view escaped);

private:
    Tokenizer() = default;
    void init_base();
    void index_merges();
    std::vector<int64_t> merge_pretoken(std::string_view pretoken,
                                        std::vector<std::pair<int64_t, int64_t>>* spans) const;

    std::vector<std::string> token_bytes_;                     // id -> bytes (name for specials)
    std::unordered_map<std::string, int64_t> token_ids_;       // bytes -> id, non-specials only
    std::vector<std::pair<int64_t, int64_t>> merges_;          // (left id, right id)
    struct MergeRule {
        int32_t rank;
        int64_t output;
    };
    std::unordered_map<uint64_t, MergeRule> merge_rules_;      // key = left<<32 | right
};

}  // namespace mlmkit
