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
// Test-only brute-force oracles. Each recomputes a quantity by direct
// enumeration from first principles and must stay independent of the library
// code paths it is used to check.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "refuge/cls_metrics.hpp"
#include "refuge/mask.hpp"
#include "refuge/rng.hpp"
#include "refuge/stats.hpp"
#include "refuge/synth.hpp"

namespace oracle {

using refuge::LabelMask;
using refuge::PixelLabel;
using refuge::RegionMask;
using refuge::ScoreTable;

// ---------------------------------------------------------------------------
// pixel enumeration

inline std::size_t region_size(const RegionMask& r) {
    std::size_t n = 0;
    for (int y = 0; y < r.height; ++y)
        for (int x = 0; x < r.width; ++x)
            if (r.at(x, y)) ++n;
    return n;
}

inline double dice(const RegionMask& a, const RegionMask& b) {
    std::size_t na = 0, nb = 0, ni = 0;
    for (int y = 0; y < a.height; ++y) {
        for (int x = 0; x < a.width; ++x) {
            const bool ma = a.at(x, y), mb = b.at(x, y);
            if (ma) ++na;
            if (mb) ++nb;
            if (ma && mb) ++ni;
        }
    }
    if (na == 0 && nb == 0) return 1.0;
    return 2.0 * double(ni) / double(na + nb);
}

inline int vertical_diameter(const RegionMask& r) {
    std::set<int> rows;
    for (int y = 0; y < r.height; ++y)
        for (int x = 0; x < r.width; ++x)
            if (r.at(x, y)) rows.insert(y);
    if (rows.empty()) return 0;
    return *rows.rbegin() - *rows.begin() + 1;
}

inline RegionMask label_region(const LabelMask& m, bool cup_only) {
    RegionMask r(m.width, m.height);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            const PixelLabel l = m.at(x, y);
            const bool member = cup_only ? l == PixelLabel::Cup : l != PixelLabel::Background;
            r.set(x, y, member);
        }
    return r;
}

inline double vcdr(const LabelMask& m) {
    const int d_od = oracle::vertical_diameter(label_region(m, false));
    if (d_od == 0) return 0.0;
    return double(oracle::vertical_diameter(label_region(m, true))) / double(d_od);
}

// ---------------------------------------------------------------------------
// pair counting

inline double auc_pairs(const ScoreTable& t) {
    double wins = 0.0;
    std::size_t n_pos = 0, n_neg = 0;
    for (const auto& p : t.entries) {
        if (!p.glaucoma) continue;
        ++n_pos;
        for (const auto& q : t.entries) {
            if (q.glaucoma) continue;
            if (p.likelihood > q.likelihood) wins += 1.0;
            else if (p.likelihood == q.likelihood) wins += 0.5;
        }
    }
    for (const auto& q : t.entries)
        if (!q.glaucoma) ++n_neg;
    return wins / (double(n_pos) * double(n_neg));
}

/// Sensitivity at specificity from the raw table: enumerate achievable
/// operating points per distinct threshold by direct counting, then
/// interpolate between the bracketing polyline vertices by hand.
inline double se_at_sp(const ScoreTable& t, double specificity) {
    const double target_fpr = 1.0 - specificity;
    std::size_t n_pos = 0, n_neg = 0;
    for (const auto& e : t.entries) (e.glaucoma ? n_pos : n_neg)++;

    std::set<double> thresholds;
    for (const auto& e : t.entries) thresholds.insert(e.likelihood);

    // operating points in increasing-fpr order (thresholds descending)
    std::vector<std::pair<double, double>> points{{0.0, 0.0}};
    for (auto it = thresholds.rbegin(); it != thresholds.rend(); ++it) {
        std::size_t tp = 0, fp = 0;
        for (const auto& e : t.entries) {
            if (e.likelihood >= *it) (e.glaucoma ? tp : fp)++;
        }
        points.emplace_back(double(fp) / double(n_neg), double(tp) / double(n_pos));
    }

    double max_at_target = -1.0;
    for (const auto& [fpr, tpr] : points)
        if (fpr == target_fpr) max_at_target = std::max(max_at_target, tpr);
    if (max_at_target >= 0.0) return max_at_target;

    // bracket: highest vertex below, lowest vertex above
    double x1 = 0.0, y1 = 0.0, x2 = 1.0, y2 = 1.0;
    for (const auto& [fpr, tpr] : points) {
        if (fpr < target_fpr && (fpr > x1 || (fpr == x1 && tpr > y1))) { x1 = fpr; y1 = tpr; }
    }
    bool found_right = false;
    for (const auto& [fpr, tpr] : points) {
        if (fpr > target_fpr && (!found_right || fpr < x2 || (fpr == x2 && tpr < y2))) {
            x2 = fpr;
            y2 = tpr;
            found_right = true;
        }
    }
    for (const auto& [fpr, tpr] : points)
        if (fpr == x1 && tpr > y1) y1 = tpr;
    for (const auto& [fpr, tpr] : points)
        if (found_right && fpr == x2 && tpr < y2) y2 = tpr;
    return y1 + (target_fpr - x1) / (x2 - x1) * (y2 - y1);
}

// ---------------------------------------------------------------------------
// exact test enumeration

inline std::vector<double> midranks(std::vector<double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < v.size()) {
        std::size_t j = i;
        while (j < v.size() && v[order[j]] == v[order[i]]) ++j;
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = double(i + 1 + j) / 2.0;
        i = j;
    }
    return ranks;
}

inline double tail_p(const std::vector<double>& null_stats, double observed,
                     refuge::Alternative alt) {
    double le = 0, ge = 0;
    for (double s : null_stats) {
        if (s <= observed + 1e-9) le += 1;
        if (s >= observed - 1e-9) ge += 1;
    }
    const double total = double(null_stats.size());
    switch (alt) {
        case refuge::Alternative::Greater: return ge / total;
        case refuge::Alternative::Less: return le / total;
        default: return std::min(1.0, 2.0 * std::min(le, ge) / total);
    }
}

/// All 2^n sign assignments of the nonzero paired differences.
inline double signed_rank_exact_p(const std::vector<double>& x, const std::vector<double>& y,
                                  refuge::Alternative alt) {
    std::vector<double> abs_diff;
    std::vector<int> sign;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        if (d != 0.0) {
            abs_diff.push_back(std::abs(d));
            sign.push_back(d > 0 ? 1 : -1);
        }
    }
    const std::vector<double> ranks = midranks(abs_diff);
    const std::size_t n = ranks.size();
    double observed = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (sign[i] > 0) observed += ranks[i];
    std::vector<double> null_stats;
    null_stats.reserve(std::size_t(1) << n);
    for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
        double w = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (bits & (1u << i)) w += ranks[i];
        null_stats.push_back(w);
    }
    return tail_p(null_stats, observed, alt);
}

/// All C(n, |a|) assignments of the pooled sample to the first group.
inline double rank_sum_exact_p(const std::vector<double>& a, const std::vector<double>& b,
                               refuge::Alternative alt) {
    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    const std::vector<double> ranks = midranks(pooled);
    const std::size_t n = pooled.size(), na = a.size();
    const double offset = double(na) * double(na + 1) / 2.0;
    double observed = -offset;
    for (std::size_t i = 0; i < na; ++i) observed += ranks[i];
    std::vector<double> null_stats;
    for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
        if (std::size_t(std::popcount(bits)) != na) continue;
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (bits & (1u << i)) s += ranks[i];
        null_stats.push_back(s - offset);
    }
    return tail_p(null_stats, observed, alt);
}

/// Label-permutation null for the difference of two paired AUCs. Labels are
/// shuffled jointly (score pairs stay together); p is the add-one estimate.
inline double delong_permutation_p(const std::vector<double>& scores_a,
                                   const std::vector<double>& scores_b,
                                   std::vector<int> labels, std::size_t replicates,
                                   std::uint64_t seed) {
    const auto auc_of = [](const std::vector<double>& s, const std::vector<int>& l) {
        double wins = 0.0;
        std::size_t np = 0, nn = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!l[i]) continue;
            ++np;
            for (std::size_t j = 0; j < s.size(); ++j) {
                if (l[j]) continue;
                if (s[i] > s[j]) wins += 1.0;
                else if (s[i] == s[j]) wins += 0.5;
            }
        }
        for (int v : l)
            if (!v) ++nn;
        return wins / (double(np) * double(nn));
    };
    const double observed = std::abs(auc_of(scores_a, labels) - auc_of(scores_b, labels));
    refuge::SplitMix64 rng(seed);
    std::size_t at_least = 0;
    for (std::size_t r = 0; r < replicates; ++r) {
        for (std::size_t i = labels.size(); i > 1; --i)
            std::swap(labels[i - 1], labels[rng.next() % i]);
        const double diff = std::abs(auc_of(scores_a, labels) - auc_of(scores_b, labels));
        if (diff >= observed - 1e-12) ++at_least;
    }
    return double(at_least + 1) / double(replicates + 1);
}

// ---------------------------------------------------------------------------
// geometry and voting

inline bool ellipse_contains(const refuge::EllipseParams& e, int x, int y) {
    const double dx = double(x) - e.cx, dy = double(y) - e.cy;
    const double u = (dx * std::cos(e.theta) + dy * std::sin(e.theta)) / e.semi_h;
    const double v = (-dx * std::sin(e.theta) + dy * std::cos(e.theta)) / e.semi_v;
    return u * u + v * v <= 1.0;
}

inline std::size_t ellipse_member_count(const refuge::EllipseParams& e, int w, int h) {
    std::size_t n = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (ellipse_contains(e, x, y)) ++n;
    return n;
}

inline int ellipse_vertical_diameter(const refuge::EllipseParams& e, int w, int h) {
    std::set<int> rows;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (ellipse_contains(e, x, y)) rows.insert(y);
    if (rows.empty()) return 0;
    return *rows.rbegin() - *rows.begin() + 1;
}

/// Expected fused label for one pixel given the votes, straight from the
/// region-vote definition.
inline PixelLabel vote_label(const std::vector<PixelLabel>& votes, double threshold) {
    int od = 0, oc = 0;
    for (PixelLabel v : votes) {
        if (v != PixelLabel::Background) ++od;
        if (v == PixelLabel::Cup) ++oc;
    }
    const double bar = threshold * double(votes.size());
    if (double(oc) > bar) return PixelLabel::Cup;
    if (double(od) > bar) return PixelLabel::Disc;
    return PixelLabel::Background;
}

// ---------------------------------------------------------------------------
// random instance generators (deterministic, seeded)

inline LabelMask random_mask(refuge::SplitMix64& rng, int max_side = 64) {
    const int w = 1 + int(rng.next() % std::uint64_t(max_side));
    const int h = 1 + int(rng.next() % std::uint64_t(max_side));
    LabelMask m(w, h);
    for (auto& l : m.labels) {
        const std::uint64_t r = rng.next() % 4;
        l = r == 0 ? PixelLabel::Cup : (r == 1 ? PixelLabel::Disc : PixelLabel::Background);
    }
    return m;
}

inline RegionMask random_region(refuge::SplitMix64& rng, int w, int h, double density) {
    RegionMask r(w, h);
    for (auto& m : r.member) m = rng.uniform() < density ? 1 : 0;
    return r;
}

inline ScoreTable random_table(refuge::SplitMix64& rng, std::size_t max_entries = 50,
                               bool allow_ties = true) {
    const std::size_t n = 2 + rng.next() % (max_entries - 1);
    ScoreTable t;
    std::size_t n_pos = 1 + rng.next() % (n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        double v = rng.uniform();
        if (allow_ties && rng.uniform() < 0.3) v = std::round(v * 8.0) / 8.0;
        t.entries.push_back({"img_" + std::to_string(i), v, i < n_pos});
    }
    return t;
}

}  // namespace oracle
