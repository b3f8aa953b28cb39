// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mlmkit/common.hpp"

namespace mlmkit {

/// Cloze example: a sentence with exactly one "<mask>" slot, an ordered
/// candidate list, and the index of the correct filler. removed_surface is
/// the exact original occurrence (case preserved), so splicing it back into
/// masked_text reproduces the source line verbatim.
struct MaskedChoiceExample {
    std::string masked_text;
    std::vector<std::string> candidates;
    int64_t gold = 0;
    std::string removed_surface;
    int64_t source_line = 0;
};

inline constexpr const char* kMaskSlot = "<mask>";

struct TaggedSentence {
    std::vector<std::string> words;
    std::vector<std::string> tags;
};

struct LabeledReview {
    std::string text;
    int64_t label = 0;  // 1 = positive, 0 = negative
    std::optional<std::string> attribute;
};

struct DiedatSplit {
    std::vector<MaskedChoiceExample> train;
    std::vector<MaskedChoiceExample> test;
};

/// One example per case-insensitive whole-word occurrence (bounded by
/// non-letter bytes) of any candidate word: that occurrence becomes the mask
/// slot, all others stay intact, gold = the removed word lowercased. The
/// first head_count lines feed train, the last tail_count lines feed test.
DiedatSplit build_diedat(const std::vector<std::string>& lines, int64_t head_count,
                         int64_t tail_count,
                         const std::vector<std::string>& words = {"die", "dat"});

/// All examples of a single line (line_no recorded in the output), in
/// occurrence order. Exposed for oracle tests.
std::vector<MaskedChoiceExample> diedat_line_examples(const std::string& line, int64_t line_no,
                                                      const std::vector<std::string>& words);

void save_choice_examples(const std::filesystem::path& path,
                          const std::vector<MaskedChoiceExample>& examples);
std::vector<MaskedChoiceExample> load_choice_examples(const std::filesystem::path& path);

/// Promotes every orphan I-X (no same-type B-X/I-X directly before it) to
/// B-X. Returns the number of promotions.
int64_t repair_bio(std::vector<std::string>& tags);

struct Conll2002File {
    std::vector<TaggedSentence> sentences;
    int64_t bio_repairs = 0;
};

/// Three whitespace-separated columns (token, POS, NER tag), blank line
/// between sentences; the NER column is kept and repaired.
Conll2002File parse_conll2002(const std::filesystem::path& path);
void write_conll2002(const std::filesystem::path& path, const std::vector<TaggedSentence>& sentences);

/// CoNLL-U: tab-separated 10-column rows; comments, multiword ranges, and
/// empty nodes are skipped; the UPOS column is validated against the
/// 17-tag universal inventory.
std::vector<TaggedSentence> parse_conllu(const std::filesystem::path& path);
void write_conllu(const std::filesystem::path& path, const std::vector<TaggedSentence>& sentences);
const std::vector<std::string>& upos_inventory();

struct ReviewFile {
    std::vector<LabeledReview> reviews;
    int64_t rejected = 0;  // rows with an empty label
};

/// TSV with header "label<TAB>text" or "label<TAB>text<TAB>gender"; labels
/// are "positive"/"negative"; an empty gender cell means attribute absent.
ReviewFile load_reviews(const std::filesystem::path& path);
void write_reviews(const std::filesystem::path& path, const std::vector<LabeledReview>& reviews);

/// Whole file as lines (CR-LF tolerated); IoError when unreadable.
std::vector<std::string> read_text_lines(const std::filesystem::path& path);

/// Majority label; ties go to the smallest label value.
int64_t zeror_majority(const std::vector<int64_t>& labels);
/// Fraction of eval labels equal to the majority prediction.
double zeror_accuracy(int64_t majority, const std::vector<int64_t>& eval_labels);

}  // namespace mlmkit
