// SPDX-License-Identifier: Apache-2.0
#include "mlmkit/task_data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace mlmkit {

namespace {

using nlohmann::json;

// Word boundaries for whole-word matching. Any byte >= 0x80 is part of a
// UTF-8 letter sequence for this purpose.
bool letter_byte(unsigned char c) {
    return std::isalpha(c) != 0 || c >= 0x80;
}

char ascii_lower(char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

std::string lowercase_ascii(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(), ascii_lower);
    return out;
}

bool matches_at(const std::string& line, size_t pos, const std::string& word) {
    if (pos + word.size() > line.size()) return false;
    for (size_t i = 0; i < word.size(); ++i) {
        if (ascii_lower(line[pos + i]) != ascii_lower(word[i])) return false;
    }
    bool left_ok = pos == 0 || !letter_byte(static_cast<unsigned char>(line[pos - 1]));
    size_t end = pos + word.size();
    bool right_ok = end == line.size() || !letter_byte(static_cast<unsigned char>(line[end]));
    return left_ok && right_ok;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> fields;
    std::istringstream in(line);
    std::string f;
    while (in >> f) fields.push_back(f);
    return fields;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
        size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

void validate_bio_shape(const std::string& tag, const std::string& where) {
    if (tag == "O") return;
    if (tag.size() >= 3 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-') return;
    throw DataError("malformed chunk tag '" + tag + "' at " + where);
}

}  // namespace

std::vector<MaskedChoiceExample> diedat_line_examples(const std::string& line, int64_t line_no,
                                                      const std::vector<std::string>& words) {
    if (words.empty()) throw ConfigError("candidate word list is empty");
    std::vector<std::string> lower_words;
    lower_words.reserve(words.size());
    for (const auto& w : words) {
        if (w.empty()) throw ConfigError("candidate word list contains an empty word");
        lower_words.push_back(lowercase_ascii(w));
    }

    std::vector<MaskedChoiceExample> out;
    size_t pos = 0;
    while (pos < line.size()) {
        bool matched = false;
        for (size_t wi = 0; wi < lower_words.size(); ++wi) {
            const std::string& w = lower_words[wi];
            if (!matches_at(line, pos, w)) continue;
            MaskedChoiceExample ex;
            ex.masked_text = line.substr(0, pos) + kMaskSlot + line.substr(pos + w.size());
            ex.candidates = lower_words;
            ex.gold = static_cast<int64_t>(wi);
            ex.removed_surface = line.substr(pos, w.size());
            ex.source_line = line_no;
            out.push_back(std::move(ex));
            pos += w.size();
            matched = true;
            break;
        }
        if (!matched) ++pos;
    }
    return out;
}

DiedatSplit build_diedat(const std::vector<std::string>& lines, int64_t head_count,
                         int64_t tail_count, const std::vector<std::string>& words) {
    if (head_count < 0 || tail_count < 0)
        throw ConfigError("head/tail line counts must be non-negative");
    int64_t n = static_cast<int64_t>(lines.size());
    if (head_count + tail_count > n)
        throw DataError("corpus has " + std::to_string(n) + " lines, need " +
                        std::to_string(head_count + tail_count));

    DiedatSplit split;
    for (int64_t i = 0; i < head_count; ++i) {
        auto exs = diedat_line_examples(lines[i], i + 1, words);
        split.train.insert(split.train.end(), exs.begin(), exs.end());
    }
    for (int64_t i = n - tail_count; i < n; ++i) {
        auto exs = diedat_line_examples(lines[i], i + 1, words);
        split.test.insert(split.test.end(), exs.begin(), exs.end());
    }
    return split;
}

void save_choice_examples(const std::filesystem::path& path,
                          const std::vector<MaskedChoiceExample>& examples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& ex : examples) {
        json row;
        row["masked_text"] = ex.masked_text;
        row["candidates"] = ex.candidates;
        row["gold"] = ex.gold;
        row["removed"] = ex.removed_surface;
        row["source_line_no"] = ex.source_line;
        out << row.dump() << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<MaskedChoiceExample> load_choice_examples(const std::filesystem::path& path) {
    auto lines = read_text_lines(path);
    std::vector<MaskedChoiceExample> out;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        std::string where = path.filename().string() + ":" + std::to_string(i + 1);
        json row = json::parse(lines[i], nullptr, false);
        if (row.is_discarded() || !row.is_object())
            throw DataError("invalid JSON record at " + where);
        for (const char* key : {"masked_text", "candidates", "gold", "removed", "source_line_no"}) {
            if (!row.contains(key))
                throw DataError(std::string("missing field '") + key + "' at " + where);
        }
        MaskedChoiceExample ex;
        ex.masked_text = row["masked_text"].get<std::string>();
        ex.candidates = row["candidates"].get<std::vector<std::string>>();
        ex.gold = row["gold"].get<int64_t>();
        ex.removed_surface = row["removed"].get<std::string>();
        ex.source_line = row["source_line_no"].get<int64_t>();
        if (ex.candidates.empty() || ex.gold < 0 ||
            ex.gold >= static_cast<int64_t>(ex.candidates.size()))
            throw DataError("gold index out of range at " + where);
        size_t slot = ex.masked_text.find(kMaskSlot);
        if (slot == std::string::npos ||
            ex.masked_text.find(kMaskSlot, slot + 1) != std::string::npos)
            throw DataError("expected exactly one mask slot at " + where);
        out.push_back(std::move(ex));
    }
    return out;
}

int64_t repair_bio(std::vector<std::string>& tags) {
    int64_t repairs = 0;
    for (size_t i = 0; i < tags.size(); ++i) {
        if (tags[i].size() < 3 || tags[i][0] != 'I' || tags[i][1] != '-') continue;
        std::string type = tags[i].substr(2);
        bool continues = i > 0 && tags[i - 1].size() >= 3 &&
                         (tags[i - 1][0] == 'B' || tags[i - 1][0] == 'I') &&
                         tags[i - 1].compare(2, std::string::npos, type) == 0;
        if (!continues) {
            tags[i][0] = 'B';
            ++repairs;
        }
    }
    return repairs;
}

Conll2002File parse_conll2002(const std::filesystem::path& path) {
    auto lines = read_text_lines(path);
    Conll2002File out;
    TaggedSentence cur;
    auto flush = [&] {
        if (cur.words.empty()) return;
        out.bio_repairs += repair_bio(cur.tags);
        out.sentences.push_back(std::move(cur));
        cur = TaggedSentence{};
    };
    for (size_t i = 0; i < lines.size(); ++i) {
        std::string where = path.filename().string() + ":" + std::to_string(i + 1);
        auto fields = split_ws(lines[i]);
        if (fields.empty()) {
            flush();
            continue;
        }
        if (fields.size() != 3)
            throw DataError("expected 3 columns, got " + std::to_string(fields.size()) + " at " +
                            where);
        validate_bio_shape(fields[2], where);
        cur.words.push_back(fields[0]);
        cur.tags.push_back(fields[2]);
    }
    flush();
    return out;
}

void write_conll2002(const std::filesystem::path& path,
                     const std::vector<TaggedSentence>& sentences) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& s : sentences) {
        if (s.words.size() != s.tags.size())
            throw ContractError("sentence has " + std::to_string(s.words.size()) + " words but " +
                                std::to_string(s.tags.size()) + " tags");
        for (size_t i = 0; i < s.words.size(); ++i)
            out << s.words[i] << " _ " << s.tags[i] << '\n';
        out << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

const std::vector<std::string>& upos_inventory() {
    static const std::vector<std::string> tags = {
        "ADJ", "ADP",  "ADV",  "AUX",   "CCONJ", "DET",  "INTJ", "NOUN", "NUM",
        "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X"};
    return tags;
}

std::vector<TaggedSentence> parse_conllu(const std::filesystem::path& path) {
    auto lines = read_text_lines(path);
    const auto& inventory = upos_inventory();
    std::vector<TaggedSentence> out;
    TaggedSentence cur;
    auto flush = [&] {
        if (!cur.words.empty()) out.push_back(std::move(cur));
        cur = TaggedSentence{};
    };
    for (size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        std::string where = path.filename().string() + ":" + std::to_string(i + 1);
        if (line.empty()) {
            flush();
            continue;
        }
        if (line[0] == '#') continue;
        auto fields = split_tabs(line);
        if (fields.size() != 10)
            throw DataError("expected 10 columns, got " + std::to_string(fields.size()) + " at " +
                            where);
        const std::string& id = fields[0];
        if (id.find('-') != std::string::npos || id.find('.') != std::string::npos)
            continue;  // multiword token range or empty node
        if (id.empty() || !std::all_of(id.begin(), id.end(),
                                       [](unsigned char c) { return std::isdigit(c) != 0; }))
            throw DataError("bad token id '" + id + "' at " + where);
        const std::string& upos = fields[3];
        if (std::find(inventory.begin(), inventory.end(), upos) == inventory.end())
            throw DataError("unknown POS tag '" + upos + "' at " + where);
        cur.words.push_back(fields[1]);
        cur.tags.push_back(upos);
    }
    flush();
    return out;
}

void write_conllu(const std::filesystem::path& path,
                  const std::vector<TaggedSentence>& sentences) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& s : sentences) {
        if (s.words.size() != s.tags.size())
            throw ContractError("sentence has " + std::to_string(s.words.size()) + " words but " +
                                std::to_string(s.tags.size()) + " tags");
        for (size_t i = 0; i < s.words.size(); ++i) {
            out << (i + 1) << '\t' << s.words[i] << "\t_\t" << s.tags[i]
                << "\t_\t_\t_\t_\t_\t_\n";
        }
        out << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

ReviewFile load_reviews(const std::filesystem::path& path) {
    auto lines = read_text_lines(path);
    if (lines.empty()) throw DataError("empty review file " + path.string());
    auto header = split_tabs(lines[0]);
    bool has_attribute;
    if (header.size() == 2 && header[0] == "label" && header[1] == "text") {
        has_attribute = false;
    } else if (header.size() == 3 && header[0] == "label" && header[1] == "text" &&
               header[2] == "gender") {
        has_attribute = true;
    } else {
        throw DataError("bad header in " + path.string() +
                        ": expected 'label\\ttext' or 'label\\ttext\\tgender'");
    }

    ReviewFile out;
    size_t want = has_attribute ? 3 : 2;
    for (size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        std::string where = path.filename().string() + ":" + std::to_string(i + 1);
        auto fields = split_tabs(lines[i]);
        if (fields.size() != want)
            throw DataError("expected " + std::to_string(want) + " columns, got " +
                            std::to_string(fields.size()) + " at " + where);
        if (fields[0].empty()) {
            ++out.rejected;
            continue;
        }
        LabeledReview r;
        if (fields[0] == "positive") {
            r.label = 1;
        } else if (fields[0] == "negative") {
            r.label = 0;
        } else {
            throw DataError("unknown label '" + fields[0] + "' at " + where);
        }
        r.text = fields[1];
        if (has_attribute && !fields[2].empty()) r.attribute = fields[2];
        out.reviews.push_back(std::move(r));
    }
    return out;
}

void write_reviews(const std::filesystem::path& path, const std::vector<LabeledReview>& reviews) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    bool any_attribute =
        std::any_of(reviews.begin(), reviews.end(), [](const auto& r) { return r.attribute.has_value(); });
    out << (any_attribute ? "label\ttext\tgender" : "label\ttext") << '\n';
    for (const auto& r : reviews) {
        out << (r.label == 1 ? "positive" : "negative") << '\t' << r.text;
        if (any_attribute) out << '\t' << (r.attribute ? *r.attribute : "");
        out << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<std::string> read_text_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(strip_cr(std::move(line)));
    return lines;
}

int64_t zeror_majority(const std::vector<int64_t>& labels) {
    if (labels.empty()) throw DataError("cannot take a majority over zero labels");
    std::map<int64_t, int64_t> counts;
    for (int64_t l : labels) ++counts[l];
    int64_t best_label = counts.begin()->first;
    int64_t best_count = counts.begin()->second;
    for (const auto& [label, count] : counts) {
        if (count > best_count) {  // ties keep the smallest label
            best_label = label;
            best_count = count;
        }
    }
    return best_label;
}

double zeror_accuracy(int64_t majority, const std::vector<int64_t>& eval_labels) {
    if (eval_labels.empty()) throw DataError("cannot score ZeroR on zero labels");
    int64_t hits = static_cast<int64_t>(
        std::count(eval_labels.begin(), eval_labels.end(), majority));
    return static_cast<double>(hits) / static_cast<double>(eval_labels.size());
}

}  // namespace mlmkit
