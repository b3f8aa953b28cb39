// SPDX-License-Identifier: Apache-2.0
#include "mlmkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>

namespace mlmkit {

namespace {

// Two-sided normal quantile via bisection on erfc; the 95% value is pinned.
double z_for_confidence(double confidence) {
    if (confidence == 0.95) return 1.959964;
    if (!(confidence > 0.0 && confidence < 1.0))
        throw ContractError("confidence must lie in (0,1)");
    const double tail = 1.0 - confidence;  // erfc(z/sqrt(2)) == tail
    double lo = 0.0, hi = 40.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (std::erfc(mid / std::sqrt(2.0)) > tail)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

PrecisionRecallF1 prf(int64_t matched, int64_t predicted, int64_t gold) {
    PrecisionRecallF1 r;
    r.matched = matched;
    r.predicted = predicted;
    r.gold = gold;
    r.precision = predicted > 0 ? static_cast<double>(matched) / static_cast<double>(predicted) : 0.0;
    r.recall = gold > 0 ? static_cast<double>(matched) / static_cast<double>(gold) : 0.0;
    r.f1 = (r.precision + r.recall) > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
                                          : 0.0;
    return r;
}

}  // namespace

AccuracyCi accuracy_ci(int64_t correct, int64_t total, double confidence) {
    if (total == 0) throw DataError("undefined metric: accuracy over zero examples");
    if (correct < 0 || total < 0 || correct > total)
        throw ContractError("accuracy_ci: need 0 <= correct <= total");
    const double acc = static_cast<double>(correct) / static_cast<double>(total);
    const double z = z_for_confidence(confidence);
    const double half = z * std::sqrt(acc * (1.0 - acc) / static_cast<double>(total));
    AccuracyCi ci;
    ci.accuracy = acc;
    ci.lower = std::max(0.0, acc - half);
    ci.upper = std::min(1.0, acc + half);
    return ci;
}

PrecisionRecallF1 binary_f1(const std::vector<int64_t>& preds, const std::vector<int64_t>& golds,
                            int64_t positive) {
    if (preds.size() != golds.size())
        throw ContractError("binary_f1: " + std::to_string(preds.size()) + " predictions vs " +
                            std::to_string(golds.size()) + " golds");
    int64_t matched = 0, predicted = 0, gold = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
        const bool p = preds[i] == positive;
        const bool g = golds[i] == positive;
        predicted += p;
        gold += g;
        matched += (p && g);
    }
    return prf(matched, predicted, gold);
}

std::vector<std::tuple<std::string, int64_t, int64_t>> bio_spans(
    const std::vector<std::string>& tags) {
    std::vector<std::tuple<std::string, int64_t, int64_t>> spans;
    std::string open_type;
    int64_t open_start = -1;
    auto close = [&](int64_t end) {
        if (!open_type.empty()) {
            spans.emplace_back(open_type, open_start, end);
            open_type.clear();
        }
    };
    for (int64_t i = 0; i < static_cast<int64_t>(tags.size()); ++i) {
        const std::string& t = tags[static_cast<size_t>(i)];
        if (t == "O") {
            close(i);
        } else if (t.size() > 2 && t[1] == '-' && (t[0] == 'B' || t[0] == 'I')) {
            const std::string type = t.substr(2);
            if (t[0] == 'B') {
                close(i);
                open_type = type;
                open_start = i;
            } else {
                if (open_type != type)
                    throw ContractError("malformed BIO: '" + t + "' at position " + std::to_string(i) +
                                        " continues no open span");
            }
        } else {
            throw ContractError("malformed BIO tag: '" + t + "'");
        }
    }
    close(static_cast<int64_t>(tags.size()));
    return spans;
}

SpanF1Report span_f1_conll(const std::vector<std::vector<std::string>>& pred_tags,
                           const std::vector<std::vector<std::string>>& gold_tags) {
    if (pred_tags.size() != gold_tags.size())
        throw ContractError("span_f1: sentence count mismatch");

    // Keyed by (sentence, type, start, end) for exact matching.
    using Span = std::tuple<int64_t, std::string, int64_t, int64_t>;
    std::set<Span> pred_set, gold_set;
    std::set<std::string> types;
    for (size_t s = 0; s < pred_tags.size(); ++s) {
        if (pred_tags[s].size() != gold_tags[s].size())
            throw ContractError("span_f1: length mismatch in sentence " + std::to_string(s));
        for (const auto& [type, b, e] : bio_spans(pred_tags[s])) {
            pred_set.emplace(static_cast<int64_t>(s), type, b, e);
            types.insert(type);
        }
        for (const auto& [type, b, e] : bio_spans(gold_tags[s])) {
            gold_set.emplace(static_cast<int64_t>(s), type, b, e);
            types.insert(type);
        }
    }

    SpanF1Report rep;
    int64_t matched_all = 0;
    for (const Span& sp : pred_set) matched_all += gold_set.count(sp);
    rep.overall = prf(matched_all, static_cast<int64_t>(pred_set.size()),
                      static_cast<int64_t>(gold_set.size()));
    for (const std::string& type : types) {
        int64_t m = 0, p = 0, g = 0;
        for (const Span& sp : pred_set)
            if (std::get<1>(sp) == type) {
                ++p;
                m += gold_set.count(sp);
            }
        for (const Span& sp : gold_set) g += std::get<1>(sp) == type;
        rep.per_type[type] = prf(m, p, g);
    }
    return rep;
}

RocCurve roc(const std::vector<double>& scores, const std::vector<int64_t>& labels) {
    if (scores.size() != labels.size()) throw ContractError("roc: scores/labels length mismatch");
    int64_t pos = 0, neg = 0;
    for (int64_t l : labels) {
        if (l != 0 && l != 1) throw ContractError("roc: labels must be 0 or 1");
        (l == 1 ? pos : neg) += 1;
    }
    if (pos == 0 || neg == 0)
        throw DataError("undefined metric: ROC needs both classes present");

    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    int64_t tp = 0, fp = 0;
    size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        // Group all examples sharing this score into one threshold step.
        while (i < order.size() && scores[order[i]] == s) {
            (labels[order[i]] == 1 ? tp : fp) += 1;
            ++i;
        }
        curve.points.push_back({s, static_cast<double>(fp) / static_cast<double>(neg),
                                static_cast<double>(tp) / static_cast<double>(pos)});
    }
    double auc = 0.0;
    for (size_t k = 1; k < curve.points.size(); ++k) {
        const auto& a = curve.points[k - 1];
        const auto& b = curve.points[k];
        auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
    }
    curve.auc = auc;
    return curve;
}

std::string percent3(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", fraction * 100.0);
    return buf;
}

}  // namespace mlmkit
