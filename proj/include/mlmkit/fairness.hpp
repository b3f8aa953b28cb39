// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mlmkit/bpe.hpp"
#include "mlmkit/encoder.hpp"
#include "mlmkit/metrics.hpp"

namespace mlmkit {

/// Probe sentence with one "<mask>" slot (where pronouns are ranked) and one
/// "<T>" slot (where a profession is substituted). co_referent says whether
/// the two slots refer to the same entity.
struct ClozeTemplate {
    std::string text;
    bool co_referent = false;
};

inline constexpr const char* kProfessionSlot = "<T>";

struct Profession {
    std::string surface;
    double gender_score = 0.0;  // he-she axis projection, negative = male-associated
};

/// One classifier output with its true label and optional binary sensitive
/// attribute. Records without the attribute are excluded from group metrics.
struct FairnessRecord {
    int64_t y = 0;
    double score = 0.0;
    std::optional<int64_t> a;
};

struct AssociationRow {
    std::string template_text;
    bool co_referent = false;
    std::string profession;
    double gender_score = 0.0;
    int64_t rank_male = 0;
    int64_t rank_female = 0;
    int64_t rank_diff = 0;  // rank_male - rank_female; negative = male ranked more likely
};

/// For each (template, profession): substitute the profession, rank the full
/// vocabulary at the mask position by logit (competition ranking, ties share
/// a rank), and report the male-minus-female pronoun rank difference. Each
/// pronoun must encode to a single token in context.
std::vector<AssociationRow> association_test(
    EncoderModel& model, const Tokenizer& tokenizer, const std::vector<ClozeTemplate>& templates,
    const std::vector<Profession>& professions,
    const std::pair<std::string, std::string>& pronouns = {"hij", "zij"});

/// Demographic parity ratio P(yhat=1 | not a) / P(yhat=1 | a) with
/// yhat = [score > threshold]; `a_value` selects which attribute value plays
/// the role of a (the denominator group).
double dpr(const std::vector<FairnessRecord>& records, double threshold = 0.0,
           int64_t a_value = 1);

/// Equal-opportunity difference P(yhat=1 | not a, y=y_value) -
/// P(yhat=1 | a, y=y_value).
double eo_diff(const std::vector<FairnessRecord>& records, double threshold = 0.0,
               int64_t y_value = 1, int64_t a_value = 1);

struct GroupRoc {
    int64_t group = 0;  // attribute value
    int64_t count = 0;
    RocCurve curve;
    double op_fpr = 0.0;  // operating point of yhat = [score > threshold]
    double op_tpr = 0.0;
};

/// One ROC per attribute group (ascending by attribute value), each with the
/// operating point induced by the binarization threshold.
std::vector<GroupRoc> roc_by_group(const std::vector<FairnessRecord>& records,
                                   double threshold = 0.0);

int64_t count_missing_attribute(const std::vector<FairnessRecord>& records);

/// TSV "text<TAB>co_referent" with header; each text carries exactly one
/// mask slot and one profession slot.
std::vector<ClozeTemplate> load_templates(const std::filesystem::path& path);
/// TSV "profession<TAB>gender_score" with header; scores within [-1, 1].
std::vector<Profession> load_professions(const std::filesystem::path& path);
/// CSV "id,score,y,a" (or "id,score,y") with header; empty a = absent.
std::vector<FairnessRecord> load_fairness_records(const std::filesystem::path& path);
void write_fairness_records(const std::filesystem::path& path,
                            const std::vector<FairnessRecord>& records);

void write_association_csv(const std::filesystem::path& path,
                           const std::vector<AssociationRow>& rows);

}  // namespace mlmkit
