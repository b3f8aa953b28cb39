// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "mlmkit/common.hpp"

namespace mlmkit {

struct AccuracyCi {
    double accuracy = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

/// Wald interval acc +/- z*sqrt(acc*(1-acc)/total), clipped to [0,1].
/// z = 1.959964 at the default 95% confidence; other levels are solved from
/// the normal CDF. total == 0 is an undefined metric (DataError).
AccuracyCi accuracy_ci(int64_t correct, int64_t total, double confidence = 0.95);

struct PrecisionRecallF1 {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    int64_t matched = 0;    // true positives
    int64_t predicted = 0;  // predicted positives
    int64_t gold = 0;       // gold positives
};

/// Standard binary precision/recall/F1 against one positive class.
/// F1 = 0 when precision + recall = 0.
PrecisionRecallF1 binary_f1(const std::vector<int64_t>& preds, const std::vector<int64_t>& golds,
                            int64_t positive);

/// (type, start, end-exclusive) spans of a BIO tag sequence. Tags must be "O",
/// "B-<type>" or "I-<type>", and every I must continue a same-type span;
/// malformed input throws ContractError (repair upstream first).
std::vector<std::tuple<std::string, int64_t, int64_t>> bio_spans(const std::vector<std::string>& tags);

struct SpanF1Report {
    PrecisionRecallF1 overall;  // micro-averaged over all spans
    std::map<std::string, PrecisionRecallF1> per_type;
};

/// CoNLL-style span F1: a predicted span counts only on exact type and
/// boundary match. Sentences are aligned by index and must have equal lengths.
SpanF1Report span_f1_conll(const std::vector<std::vector<std::string>>& pred_tags,
                           const std::vector<std::vector<std::string>>& gold_tags);

struct RocPoint {
    double threshold = 0.0;  // classify positive when score >= threshold
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;  // ascending fpr, starting at (0,0)
    double auc = 0.0;
};

/// ROC from sorted unique score thresholds (equal scores grouped) plus
/// trapezoidal AUC. Requires both classes present (else DataError).
RocCurve roc(const std::vector<double>& scores, const std::vector<int64_t>& labels);

/// "95.144"-style fixed three-decimal percent formatting for reports.
std::string percent3(double fraction);

}  // namespace mlmkit
