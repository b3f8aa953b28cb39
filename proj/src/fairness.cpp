// SPDX-License-Identifier: Apache-2.0
#include "mlmkit/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mlmkit/task_data.hpp"

namespace mlmkit {

namespace {

size_t find_one(const std::string& text, const std::string& slot, const std::string& what) {
    size_t pos = text.find(slot);
    if (pos == std::string::npos)
        throw DataError("template lacks a " + what + " slot: " + text);
    if (text.find(slot, pos + 1) != std::string::npos)
        throw DataError("template has more than one " + what + " slot: " + text);
    return pos;
}

std::string replace_one(const std::string& text, size_t pos, size_t slot_len,
                        const std::string& with) {
    return text.substr(0, pos) + with + text.substr(pos + slot_len);
}

// Token id of `word` when substituted at [pos, pos+len) of the filled text;
// errors unless the word is covered by exactly one token.
int64_t single_token_id(const Tokenizer& tokenizer, const std::string& text, size_t pos,
                        const std::string& word) {
    std::string filled = replace_one(text, pos, std::string(kMaskSlot).size(), word);
    Encoding enc = tokenizer.encode(filled, /*add_specials=*/false);
    int64_t lo = static_cast<int64_t>(pos), hi = lo + static_cast<int64_t>(word.size());
    std::vector<int64_t> covering;
    for (size_t i = 0; i < enc.ids.size(); ++i) {
        auto [tlo, thi] = enc.offsets[i];
        if (tlo < hi && thi > lo) covering.push_back(enc.ids[i]);
    }
    if (covering.size() != 1)
        throw ConfigError("pronoun '" + word + "' does not encode to a single token (got " +
                          std::to_string(covering.size()) + ") in: " + filled);
    return covering[0];
}

// Competition ranking: 1 + number of strictly larger logits.
int64_t rank_of(const std::vector<float>& logits, int64_t id) {
    float target = logits[static_cast<size_t>(id)];
    int64_t above = 0;
    for (float v : logits)
        if (v > target) ++above;
    return 1 + above;
}

struct GroupTally {
    int64_t n = 0;
    int64_t positive = 0;
    double rate() const { return double(positive) / double(n); }
};

// Tallies yhat = [score > threshold] for the a and not-a groups, optionally
// restricted to records with y == y_filter.
std::pair<GroupTally, GroupTally> tally_groups(const std::vector<FairnessRecord>& records,
                                               double threshold, int64_t a_value,
                                               std::optional<int64_t> y_filter) {
    GroupTally a, not_a;
    for (const auto& r : records) {
        if (!r.a.has_value()) continue;
        if (y_filter.has_value() && r.y != *y_filter) continue;
        GroupTally& g = (*r.a == a_value) ? a : not_a;
        ++g.n;
        if (r.score > threshold) ++g.positive;
    }
    return {a, not_a};
}

std::vector<std::string> split_on(const std::string& line, char sep) {
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
        size_t at = line.find(sep, start);
        if (at == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, at - start));
        start = at + 1;
    }
    return fields;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

double parse_double(const std::string& s, const std::string& where) {
    try {
        size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("bad number '" + s + "' at " + where);
    }
}

int64_t parse_binary(const std::string& s, const std::string& where) {
    if (s == "0") return 0;
    if (s == "1") return 1;
    throw DataError("expected 0 or 1, got '" + s + "' at " + where);
}

}  // namespace

std::vector<AssociationRow> association_test(EncoderModel& model, const Tokenizer& tokenizer,
                                             const std::vector<ClozeTemplate>& templates,
                                             const std::vector<Profession>& professions,
                                             const std::pair<std::string, std::string>& pronouns) {
    if (templates.empty()) throw DataError("association test needs at least one template");
    if (professions.empty()) throw DataError("association test needs at least one profession");

    std::vector<AssociationRow> rows;
    for (const auto& tmpl : templates) {
        find_one(tmpl.text, kMaskSlot, "mask");
        size_t t_pos = find_one(tmpl.text, kProfessionSlot, "profession");

        for (const auto& prof : professions) {
            std::string text =
                replace_one(tmpl.text, t_pos, std::string(kProfessionSlot).size(), prof.surface);
            size_t mask_pos = find_one(text, kMaskSlot, "mask");

            int64_t male_id = single_token_id(tokenizer, text, mask_pos, pronouns.first);
            int64_t female_id = single_token_id(tokenizer, text, mask_pos, pronouns.second);

            // Spliced input: prefix tokens, the mask token, suffix tokens.
            std::string prefix = text.substr(0, mask_pos);
            std::string suffix = text.substr(mask_pos + std::string(kMaskSlot).size());
            Encoding pre = tokenizer.encode(prefix, false);
            Encoding suf = tokenizer.encode(suffix, false);
            Batch batch;
            batch.batch = 1;
            batch.ids.push_back(Tokenizer::kBos);
            batch.ids.insert(batch.ids.end(), pre.ids.begin(), pre.ids.end());
            int64_t mask_index = static_cast<int64_t>(batch.ids.size());
            batch.ids.push_back(Tokenizer::kMask);
            batch.ids.insert(batch.ids.end(), suf.ids.begin(), suf.ids.end());
            batch.ids.push_back(Tokenizer::kEos);
            batch.seq = static_cast<int64_t>(batch.ids.size());

            Tape tape;
            Node* logits =
                model.mlm_logits_at(tape, batch, {mask_index}, /*training=*/false, nullptr);

            AssociationRow row;
            row.template_text = tmpl.text;
            row.co_referent = tmpl.co_referent;
            row.profession = prof.surface;
            row.gender_score = prof.gender_score;
            row.rank_male = rank_of(logits->value.data, male_id);
            row.rank_female = rank_of(logits->value.data, female_id);
            row.rank_diff = row.rank_male - row.rank_female;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

double dpr(const std::vector<FairnessRecord>& records, double threshold, int64_t a_value) {
    auto [a, not_a] = tally_groups(records, threshold, a_value, std::nullopt);
    if (a.n == 0 || not_a.n == 0)
        throw DataError("demographic parity needs both attribute groups non-empty (a: " +
                        std::to_string(a.n) + ", not-a: " + std::to_string(not_a.n) + ")");
    if (a.positive == 0)
        throw DataError("demographic parity undefined: denominator group (a=" +
                        std::to_string(a_value) + ", n=" + std::to_string(a.n) +
                        ") has zero positive rate");
    return not_a.rate() / a.rate();
}

double eo_diff(const std::vector<FairnessRecord>& records, double threshold, int64_t y_value,
               int64_t a_value) {
    auto [a, not_a] = tally_groups(records, threshold, a_value, y_value);
    if (a.n == 0 || not_a.n == 0)
        throw DataError("equal opportunity undefined: a conditional cell is empty (y=" +
                        std::to_string(y_value) + "; a: " + std::to_string(a.n) + " records, " +
                        "not-a: " + std::to_string(not_a.n) + " records)");
    return not_a.rate() - a.rate();
}

std::vector<GroupRoc> roc_by_group(const std::vector<FairnessRecord>& records, double threshold) {
    std::vector<int64_t> groups;
    for (const auto& r : records)
        if (r.a.has_value()) groups.push_back(*r.a);
    std::sort(groups.begin(), groups.end());
    groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
    if (groups.empty()) throw DataError("no records carry the sensitive attribute");

    std::vector<GroupRoc> out;
    for (int64_t g : groups) {
        std::vector<double> scores;
        std::vector<int64_t> labels;
        int64_t tp = 0, fp = 0, fn = 0, tn = 0;
        for (const auto& r : records) {
            if (!r.a.has_value() || *r.a != g) continue;
            scores.push_back(r.score);
            labels.push_back(r.y);
            bool yhat = r.score > threshold;
            if (r.y == 1)
                (yhat ? tp : fn)++;
            else
                (yhat ? fp : tn)++;
        }
        GroupRoc gr;
        gr.group = g;
        gr.count = static_cast<int64_t>(scores.size());
        gr.curve = roc(scores, labels);
        gr.op_tpr = (tp + fn) > 0 ? double(tp) / double(tp + fn) : 0.0;
        gr.op_fpr = (fp + tn) > 0 ? double(fp) / double(fp + tn) : 0.0;
        out.push_back(std::move(gr));
    }
    return out;
}

int64_t count_missing_attribute(const std::vector<FairnessRecord>& records) {
    return static_cast<int64_t>(
        std::count_if(records.begin(), records.end(), [](const auto& r) { return !r.a.has_value(); }));
}

std::vector<ClozeTemplate> load_templates(const std::filesystem::path& path) {
    auto lines = read_lines(path);
    if (lines.empty() || split_on(lines[0], '\t') != std::vector<std::string>{"text", "co_referent"})
        throw DataError("bad header in " + path.string() + ": expected 'text\\tco_referent'");
    std::vector<ClozeTemplate> out;
    for (size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        std::string where = path.filename().string() + ":" + std::to_string(i + 1);
        auto fields = split_on(lines[i], '\t');
        if (fields.size() != 2) throw DataError("expected 2 columns at " + where);
        ClozeTemplate t;
        t.text = fields[0];
        t.co_referent = parse_binary(fields[1], where) == 1;
        find_one(t.text, kMaskSlot, "mask");
        find_one(t.text, kProfessionSlot, "profession");
        out.push_back(std::move(t));
    }
    if (out.empty()) throw DataError("no templates in " + path.string());
    return out;
}

std::vector<Profession> load_professions(const std::filesystem::path& path) {
    auto lines = read_lines(path);
    if (lines.empty() ||
        split_on(lines[0], '\t') != std::vector<std::string>{"profession", "gender_score"})
        throw DataError("bad header in " + path.string() +
                        ": expected 'profession\\tgender_score'");
    std::vector<Profession> out;
    for (size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        std::string where = path.filename().string() + ":" + std::to_string(i + 1);
        auto fields = split_on(lines[i], '\t');
        if (fields.size() != 2) throw DataError("expected 2 columns at " + where);
        Profession p;
        p.surface = fields[0];
        p.gender_score = parse_double(fields[1], where);
        if (p.surface.empty()) throw DataError("empty profession at " + where);
        if (p.gender_score < -1.0 || p.gender_score > 1.0)
            throw DataError("gender score outside [-1,1] at " + where);
        out.push_back(std::move(p));
    }
    if (out.empty()) throw DataError("no professions in " + path.string());
    return out;
}

std::vector<FairnessRecord> load_fairness_records(const std::filesystem::path& path) {
    auto lines = read_lines(path);
    if (lines.empty()) throw DataError("empty records file " + path.string());
    auto header = split_on(lines[0], ',');
    bool has_a;
    if (header == std::vector<std::string>{"id", "score", "y", "a"}) {
        has_a = true;
    } else if (header == std::vector<std::string>{"id", "score", "y"}) {
        has_a = false;
    } else {
        throw DataError("bad header in " + path.string() + ": expected 'id,score,y[,a]'");
    }
    std::vector<FairnessRecord> out;
    size_t want = has_a ? 4 : 3;
    for (size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        std::string where = path.filename().string() + ":" + std::to_string(i + 1);
        auto fields = split_on(lines[i], ',');
        if (fields.size() != want)
            throw DataError("expected " + std::to_string(want) + " columns at " + where);
        FairnessRecord r;
        r.score = parse_double(fields[1], where);
        r.y = parse_binary(fields[2], where);
        if (has_a && !fields[3].empty()) r.a = parse_binary(fields[3], where);
        out.push_back(r);
    }
    return out;
}

void write_fairness_records(const std::filesystem::path& path,
                            const std::vector<FairnessRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "id,score,y,a\n";
    char buf[64];
    for (size_t i = 0; i < records.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.10g", records[i].score);
        out << i << ',' << buf << ',' << records[i].y << ',';
        if (records[i].a.has_value()) out << *records[i].a;
        out << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

void write_association_csv(const std::filesystem::path& path,
                           const std::vector<AssociationRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "template,co_referent,profession,gender_score,rank_male,rank_female,rank_diff\n";
    char buf[64];
    for (const auto& row : rows) {
        std::string text = row.template_text;
        std::replace(text.begin(), text.end(), ',', ';');  // keep the CSV single-field
        std::snprintf(buf, sizeof(buf), "%.10g", row.gender_score);
        out << text << ',' << (row.co_referent ? 1 : 0) << ',' << row.profession << ',' << buf
            << ',' << row.rank_male << ',' << row.rank_female << ',' << row.rank_diff << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace mlmkit
