// SPDX-License-Identifier: Apache-2.0
#include "mlmkit/bpe.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace mlmkit {

namespace {

enum class ByteClass { whitespace, letter, digit, other };

ByteClass classify(unsigned char c) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f')
        return ByteClass::whitespace;
    if (c >= 0x80 || std::isalpha(c)) return ByteClass::letter;
    if (std::isdigit(c)) return ByteClass::digit;
    return ByteClass::other;
}

uint64_t pair_key(int64_t left, int64_t right) {
    return (static_cast<uint64_t>(left) << 32) | static_cast<uint64_t>(right);
}

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

const char* const kSpecialNames[6] = {"<s>", "<pad>", "</s>", "<unk>", "<sep>", "<mask>"};

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read " + p.string());
    return in;
}

}  // namespace

std::vector<std::pair<size_t, size_t>> Tokenizer::pretoken_spans(std::string_view text) {
    std::vector<std::pair<size_t, size_t>> runs;
    size_t i = 0;
    while (i < text.size()) {
        ByteClass cls = classify(static_cast<unsigned char>(text[i]));
        size_t j = i + 1;
        while (j < text.size() && classify(static_cast<unsigned char>(text[j])) == cls) ++j;
        runs.emplace_back(i, j);
        i = j;
    }
    // Glue each whitespace run to the run after it.
    std::vector<std::pair<size_t, size_t>> spans;
    for (size_t r = 0; r < runs.size(); ++r) {
        auto [s, e] = runs[r];
        if (classify(static_cast<unsigned char>(text[s])) == ByteClass::whitespace &&
            r + 1 < runs.size()) {
            spans.emplace_back(s, runs[r + 1].second);
            ++r;
        } else {
            spans.emplace_back(s, e);
        }
    }
    return spans;
}

std::string Tokenizer::escape_token(std::string_view raw) {
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(raw.size());
    for (unsigned char c : raw) {
        if (c >= 0x21 && c <= 0x7e && c != '\\') {
            out.push_back(static_cast<char>(c));
        } else {
            out += "\\x";
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0xf]);
        }
    }
    return out;
}

std::string Tokenizer::unescape_token(std::string_view escaped) {
    std::string out;
    out.reserve(escaped.size());
    for (size_t i = 0; i < escaped.size();) {
        if (escaped[i] == '\\') {
            if (i + 4 > escaped.size() || escaped[i + 1] != 'x')
                throw DataError("bad byte escape in token: " + std::string(escaped));
            int hi = hex_value(escaped[i + 2]);
            int lo = hex_value(escaped[i + 3]);
            if (hi < 0 || lo < 0) throw DataError("bad hex escape in token: " + std::string(escaped));
            out.push_back(static_cast<char>((hi << 4) | lo));
            i += 4;
        } else {
            out.push_back(escaped[i]);
            ++i;
        }
    }
    return out;
}

void Tokenizer::init_base() {
    token_bytes_.clear();
    token_ids_.clear();
    for (const char* name : kSpecialNames) token_bytes_.emplace_back(name);
    for (int b = 0; b < 256; ++b) {
        std::string s(1, static_cast<char>(b));
        token_ids_.emplace(s, static_cast<int64_t>(token_bytes_.size()));
        token_bytes_.push_back(std::move(s));
    }
}

void Tokenizer::index_merges() {
    merge_rules_.clear();
    for (size_t r = 0; r < merges_.size(); ++r) {
        auto [l, rgt] = merges_[r];
        const std::string out = token_bytes_[static_cast<size_t>(l)] + token_bytes_[static_cast<size_t>(rgt)];
        auto it = token_ids_.find(out);
        if (it == token_ids_.end())
            throw DataError("merge output token missing from vocabulary: " + escape_token(out));
        merge_rules_[pair_key(l, rgt)] = MergeRule{static_cast<int32_t>(r), it->second};
    }
}

Tokenizer Tokenizer::train(const std::vector<std::string>& corpus_lines, int64_t target_vocab_size,
                           int64_t min_pair_frequency) {
    if (target_vocab_size < kBaseVocab)
        throw ConfigError("target vocabulary size " + std::to_string(target_vocab_size) +
                          " is below the byte-plus-specials floor of " + std::to_string(kBaseVocab));
    if (min_pair_frequency < 1) throw ConfigError("min_pair_frequency must be >= 1");

    Tokenizer tok;
    tok.init_base();

    // Distinct pre-tokens with corpus frequencies, in deterministic order.
    std::map<std::string, int64_t> pretoken_freq;
    for (const std::string& line : corpus_lines)
        for (auto [s, e] : pretoken_spans(line)) pretoken_freq[line.substr(s, e - s)] += 1;
    if (pretoken_freq.empty()) throw TrainingError("tokenizer training corpus is empty");

    struct Word {
        std::vector<int64_t> syms;
        int64_t freq;
    };
    std::vector<Word> words;
    words.reserve(pretoken_freq.size());
    for (const auto& [text, freq] : pretoken_freq) {
        Word w;
        w.freq = freq;
        w.syms.reserve(text.size());
        for (unsigned char c : text) w.syms.push_back(kFirstByte + c);
        words.push_back(std::move(w));
    }

    while (tok.vocab_size() < target_vocab_size) {
        // Count every adjacent position, then pick by (count desc, strings asc).
        std::unordered_map<uint64_t, int64_t> counts;
        for (const Word& w : words)
            for (size_t i = 0; i + 1 < w.syms.size(); ++i)
                counts[pair_key(w.syms[i], w.syms[i + 1])] += w.freq;

        bool found = false;
        int64_t best_l = 0, best_r = 0, best_count = 0;
        for (const auto& [key, count] : counts) {
            if (count < min_pair_frequency) continue;
            const int64_t l = static_cast<int64_t>(key >> 32);
            const int64_t r = static_cast<int64_t>(key & 0xffffffffULL);
            if (!found || count > best_count ||
                (count == best_count &&
                 std::tie(tok.token_bytes_[static_cast<size_t>(l)], tok.token_bytes_[static_cast<size_t>(r)]) <
                     std::tie(tok.token_bytes_[static_cast<size_t>(best_l)],
                              tok.token_bytes_[static_cast<size_t>(best_r)]))) {
                found = true;
                best_l = l;
                best_r = r;
                best_count = count;
            }
        }
        if (!found) break;

        const std::string merged = tok.token_bytes_[static_cast<size_t>(best_l)] +
                                   tok.token_bytes_[static_cast<size_t>(best_r)];
        int64_t out_id;
        auto it = tok.token_ids_.find(merged);
        if (it != tok.token_ids_.end()) {
            out_id = it->second;  // same byte string reached via different parents
        } else {
            out_id = tok.vocab_size();
            tok.token_ids_.emplace(merged, out_id);
            tok.token_bytes_.push_back(merged);
        }
        tok.merges_.emplace_back(best_l, best_r);

        // Replace occurrences left to right, non-overlapping.
        for (Word& w : words) {
            std::vector<int64_t>& s = w.syms;
            size_t write = 0;
            for (size_t read = 0; read < s.size();) {
                if (read + 1 < s.size() && s[read] == best_l && s[read + 1] == best_r) {
                    s[write++] = out_id;
                    read += 2;
                } else {
                    s[write++] = s[read++];
                }
            }
            s.resize(write);
        }
    }

    tok.index_merges();
    return tok;
}

std::vector<int64_t> Tokenizer::merge_pretoken(std::string_view pretoken,
                                               std::vector<std::pair<int64_t, int64_t>>* spans) const {
    std::vector<int64_t> syms;
    syms.reserve(pretoken.size());
    std::vector<std::pair<int64_t, int64_t>> local;
    for (size_t i = 0; i < pretoken.size(); ++i) {
        syms.push_back(kFirstByte + static_cast<unsigned char>(pretoken[i]));
        if (spans) local.emplace_back(static_cast<int64_t>(i), static_cast<int64_t>(i) + 1);
    }
    while (syms.size() > 1) {
        int32_t best_rank = -1;
        int64_t out_id = -1;
        int64_t best_l = 0, best_r = 0;
        for (size_t i = 0; i + 1 < syms.size(); ++i) {
            auto it = merge_rules_.find(pair_key(syms[i], syms[i + 1]));
            if (it == merge_rules_.end()) continue;
            if (best_rank < 0 || it->second.rank < best_rank) {
                best_rank = it->second.rank;
                out_id = it->second.output;
                best_l = syms[i];
                best_r = syms[i + 1];
            }
        }
        if (best_rank < 0) break;
        size_t write = 0;
        for (size_t read = 0; read < syms.size();) {
            if (read + 1 < syms.size() && syms[read] == best_l && syms[read + 1] == best_r) {
                syms[write] = out_id;
                if (spans) local[write] = {local[read].first, local[read + 1].second};
                ++write;
                read += 2;
            } else {
                syms[write] = syms[read];
                if (spans) local[write] = local[read];
                ++write;
                ++read;
            }
        }
        syms.resize(write);
        if (spans) local.resize(write);
    }
    if (spans) *spans = std::move(local);
    return syms;
}

Encoding Tokenizer::encode(std::string_view text, bool add_specials) const {
    Encoding enc;
    if (add_specials) {
        enc.ids.push_back(kBos);
        enc.offsets.emplace_back(0, 0);
    }
    for (auto [s, e] : pretoken_spans(text)) {
        std::vector<std::pair<int64_t, int64_t>> spans;
        std::vector<int64_t> syms = merge_pretoken(text.substr(s, e - s), &spans);
        for (size_t i = 0; i < syms.size(); ++i) {
            enc.ids.push_back(syms[i]);
            enc.offsets.emplace_back(spans[i].first + static_cast<int64_t>(s),
                                     spans[i].second + static_cast<int64_t>(s));
        }
    }
    if (add_specials) {
        enc.ids.push_back(kEos);
        enc.offsets.emplace_back(static_cast<int64_t>(text.size()), static_cast<int64_t>(text.size()));
    }
    return enc;
}

std::string Tokenizer::decode(const std::vector<int64_t>& ids) const {
    std::string out;
    for (int64_t id : ids) {
        if (id < 0 || id >= vocab_size())
            throw DataError("token id " + std::to_string(id) + " out of range for vocabulary of " +
                            std::to_string(vocab_size()));
        if (is_special(id)) continue;
        out += token_bytes_[static_cast<size_t>(id)];
    }
    return out;
}

const std::string& Tokenizer::token_text(int64_t id) const {
    if (id < 0 || id >= vocab_size())
        throw DataError("token id " + std::to_string(id) + " out of range");
    return token_bytes_[static_cast<size_t>(id)];
}

int64_t Tokenizer::token_id(std::string_view bytes) const {
    auto it = token_ids_.find(std::string(bytes));
    return it == token_ids_.end() ? -1 : it->second;
}

const char* Tokenizer::special_name(int64_t id) {
    if (id < 0 || id >= kNumSpecials) throw ContractError("not a special token id");
    return kSpecialNames[id];
}

void Tokenizer::save_dir(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    {
        auto out = open_out(dir / "vocab.txt");
        for (int64_t id = kNumSpecials; id < vocab_size(); ++id)
            out << escape_token(token_bytes_[static_cast<size_t>(id)]) << '\t' << id << '\n';
    }
    {
        auto out = open_out(dir / "merges.txt");
        for (auto [l, r] : merges_)
            out << escape_token(token_bytes_[static_cast<size_t>(l)]) << ' '
                << escape_token(token_bytes_[static_cast<size_t>(r)]) << '\n';
    }
    {
        auto out = open_out(dir / "specials.txt");
        for (int64_t id = 0; id < kNumSpecials; ++id) out << kSpecialNames[id] << '\t' << id << '\n';
    }
}

Tokenizer Tokenizer::load_dir(const std::filesystem::path& dir) {
    Tokenizer tok;
    tok.init_base();
    {
        auto in = open_in(dir / "vocab.txt");
        std::string line;
        int64_t expect = kNumSpecials;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const size_t tab = line.find('\t');
            if (tab == std::string::npos) throw DataError("malformed vocab line: " + line);
            const std::string bytes = unescape_token(line.substr(0, tab));
            const int64_t id = std::stoll(line.substr(tab + 1));
            if (id != expect)
                throw DataError("vocab ids not dense: expected " + std::to_string(expect) + ", got " +
                                std::to_string(id));
            if (id < kBaseVocab) {
                if (bytes.size() != 1 || static_cast<unsigned char>(bytes[0]) != id - kFirstByte)
                    throw DataError("byte token mismatch at id " + std::to_string(id));
            } else {
                if (tok.token_ids_.count(bytes))
                    throw DataError("duplicate token string in vocab: " + line.substr(0, tab));
                tok.token_ids_.emplace(bytes, id);
                tok.token_bytes_.push_back(bytes);
            }
            ++expect;
        }
        if (expect < kBaseVocab) throw DataError("vocab file is missing byte tokens");
    }
    {
        auto in = open_in(dir / "merges.txt");
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const size_t sp = line.find(' ');
            if (sp == std::string::npos) throw DataError("malformed merge line: " + line);
            const std::string lbytes = unescape_token(line.substr(0, sp));
            const std::string rbytes = unescape_token(line.substr(sp + 1));
            auto li = tok.token_ids_.find(lbytes);
            auto ri = tok.token_ids_.find(rbytes);
            if (li == tok.token_ids_.end() || ri == tok.token_ids_.end())
                throw DataError("merge refers to unknown token: " + line);
            tok.merges_.emplace_back(li->second, ri->second);
        }
    }
    {
        auto in = open_in(dir / "specials.txt");
        std::string line;
        int64_t id = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const size_t tab = line.find('\t');
            if (tab == std::string::npos || id >= kNumSpecials ||
                line.substr(0, tab) != kSpecialNames[id] || std::stoll(line.substr(tab + 1)) != id)
                throw DataError("unexpected specials manifest line: " + line);
            ++id;
        }
        if (id != kNumSpecials) throw DataError("specials manifest is incomplete");
    }
    tok.index_merges();
    return tok;
}

}  // namespace mlmkit
