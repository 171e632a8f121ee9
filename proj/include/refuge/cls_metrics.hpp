// Copyright 2026 The refuge-eval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Glaucoma-likelihood scoring: ROC construction, AUC (two independent
// routes), reference sensitivity at fixed specificity, and binary operating
// points for expert comparison. Only the order of likelihoods matters; they
// are not required to live in [0,1].

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "refuge/errors.hpp"

namespace refuge {

struct ScoreEntry {
    std::string image_id;
    double likelihood = 0.0;
    bool glaucoma = false;
};

/// One team's submission: a likelihood per image plus the reference label.
struct ScoreTable {
    std::vector<ScoreEntry> entries;

    std::size_t positives() const {
        std::size_t n = 0;
        for (const auto& e : entries) n += e.glaucoma;
        return n;
    }
    std::size_t negatives() const { return entries.size() - positives(); }
};

namespace detail {

inline void check_roc_input(const ScoreTable& t) {
    for (const auto& e : t.entries)
        if (!std::isfinite(e.likelihood))
            throw NonFiniteValue("non-finite likelihood for image " + e.image_id);
    const std::size_t pos = t.positives();
    if (pos == 0 || pos == t.entries.size())
        throw DegenerateLabels("ROC needs at least one positive and one negative");
}

}  // namespace detail

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;  // starts at (0,0), ends at (1,1); monotone
    double auc = 0.0;              // trapezoidal area under the points
};

/// Threshold sweep over distinct likelihoods, descending. A tie group emits a
/// single vertex, so tied scores trace one diagonal step. AUC is the
/// trapezoidal area of the resulting polyline.
inline RocCurve roc_curve(const ScoreTable& t) {
    detail::check_roc_input(t);
    const double n_pos = double(t.positives());
    const double n_neg = double(t.negatives());

    std::vector<const ScoreEntry*> sorted;
    sorted.reserve(t.entries.size());
    for (const auto& e : t.entries) sorted.push_back(&e);
    std::sort(sorted.begin(), sorted.end(),
              [](const ScoreEntry* a, const ScoreEntry* b) { return a->likelihood > b->likelihood; });

    RocCurve curve;
    curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        const double v = sorted[i]->likelihood;
        while (i < sorted.size() && sorted[i]->likelihood == v) {
            if (sorted[i]->glaucoma) ++tp; else ++fp;
            ++i;
        }
        curve.points.push_back({double(fp) / n_neg, double(tp) / n_pos, v});
    }

    double area = 0.0;
    for (std::size_t k = 1; k < curve.points.size(); ++k) {
        const RocPoint& a = curve.points[k - 1];
        const RocPoint& b = curve.points[k];
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    }
    curve.auc = area;
    return curve;
}

/// Mann-Whitney AUC: fraction of positive-negative pairs ranked correctly,
/// ties half-credited. Computed from joint average ranks, a route independent
/// of the ROC polyline; the two must agree to 1e-12.
inline double auc_mann_whitney(const ScoreTable& t) {
    detail::check_roc_input(t);
    const std::size_t n = t.entries.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return t.entries[a].likelihood < t.entries[b].likelihood;
    });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n &&
               t.entries[order[j]].likelihood == t.entries[order[i]].likelihood)
            ++j;
        const double avg_rank = double(i + 1 + j) / 2.0;  // mean of positions i+1..j
        for (std::size_t k = i; k < j; ++k)
            if (t.entries[order[k]].glaucoma) rank_sum_pos += avg_rank;
        i = j;
    }
    const double n_pos = double(t.positives());
    const double n_neg = double(t.negatives());
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg);
}

/// Sensitivity read off the curve at the requested specificity (default 0.85).
/// A vertex exactly at the target FPR wins (the highest TPR among tied-FPR
/// vertices); otherwise TPR is linearly interpolated between the bracketing
/// vertices.
inline double sensitivity_at_specificity(const RocCurve& c, double specificity = 0.85) {
    if (!(specificity > 0.0 && specificity < 1.0))
        throw Error("specificity must lie strictly between 0 and 1");
    const double target_fpr = 1.0 - specificity;

    double best_at_vertex = -1.0;
    for (const RocPoint& p : c.points)
        if (p.fpr == target_fpr) best_at_vertex = std::max(best_at_vertex, p.tpr);
    if (best_at_vertex >= 0.0) return best_at_vertex;

    for (std::size_t k = 1; k < c.points.size(); ++k) {
        const RocPoint& a = c.points[k - 1];
        const RocPoint& b = c.points[k];
        if (a.fpr < target_fpr && target_fpr < b.fpr) {
            const double w = (target_fpr - a.fpr) / (b.fpr - a.fpr);
            return a.tpr + w * (b.tpr - a.tpr);
        }
    }
    // target outside [0,1] cannot happen for a valid curve
    return c.points.back().tpr;
}

struct OperatingPoint {
    double sensitivity = 0.0;
    double specificity = 0.0;
    double accuracy = 0.0;
};

namespace detail {

inline void check_same_ids(const std::map<std::string, int>& a,
                           const std::map<std::string, int>& b, const char* what) {
    if (a.size() == b.size() &&
        std::equal(a.begin(), a.end(), b.begin(),
                   [](const auto& x, const auto& y) { return x.first == y.first; }))
        return;
    std::string diff;
    for (const auto& [id, v] : a)
        if (!b.count(id)) diff += diff.empty() ? id : ", " + id;
    for (const auto& [id, v] : b)
        if (!a.count(id)) diff += diff.empty() ? id : ", " + id;
    throw IdMismatch(std::string(what) + ": image id sets differ (" + diff + ")");
}

}  // namespace detail

/// Confusion-matrix rates for one binary grading against the reference.
inline OperatingPoint operating_point(const std::map<std::string, int>& binary_preds,
                                      const std::map<std::string, int>& labels) {
    detail::check_same_ids(binary_preds, labels, "operating_point");
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (const auto& [id, label] : labels) {
        const int pred = binary_preds.at(id);
        if (label != 0) {
            if (pred != 0) ++tp; else ++fn;
        } else {
            if (pred != 0) ++fp; else ++tn;
        }
    }
    if (tp + fn == 0 || tn + fp == 0)
        throw DegenerateLabels("operating_point: need at least one case of each true label");
    OperatingPoint op;
    op.sensitivity = double(tp) / double(tp + fn);
    op.specificity = double(tn) / double(tn + fp);
    op.accuracy = double(tp + tn) / double(labels.size());
    return op;
}

/// Fraction of images on which two binary gradings agree.
inline double agreement(const std::map<std::string, int>& a,
                        const std::map<std::string, int>& b) {
    detail::check_same_ids(a, b, "agreement");
    if (a.empty()) return 1.0;
    std::size_t same = 0;
    for (const auto& [id, v] : a) same += (v != 0) == (b.at(id) != 0);
    return double(same) / double(a.size());
}

}  // namespace refuge
