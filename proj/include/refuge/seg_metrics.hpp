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
// Per-image and cohort segmentation scoring: Dice for optic disc and cup,
// vertical diameters, vertical cup-to-disc ratio and its absolute error.

#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "refuge/errors.hpp"
#include "refuge/mask.hpp"

namespace refuge {

/// Dice overlap 2|a∩b| / (|a|+|b|). Two empty regions agree perfectly (1);
/// one empty region against a nonempty one scores 0.
inline double dice(const RegionMask& a, const RegionMask& b) {
    if (!a.same_shape(b))
        throw DimensionMismatch("dice: region shapes differ (" + std::to_string(a.width) +
                                "x" + std::to_string(a.height) + " vs " +
                                std::to_string(b.width) + "x" + std::to_string(b.height) + ")");
    std::size_t na = 0, nb = 0, ni = 0;
    for (std::size_t i = 0; i < a.member.size(); ++i) {
        na += a.member[i];
        nb += b.member[i];
        ni += a.member[i] & b.member[i];
    }
    if (na + nb == 0) return 1.0;
    return 2.0 * double(ni) / double(na + nb);
}

/// Inclusive row extent of the region: max occupied row - min occupied row + 1.
/// Holes inside the extent do not shrink the diameter. Empty region → 0.
inline int vertical_diameter(const RegionMask& r) {
    int min_row = -1, max_row = -1;
    for (int y = 0; y < r.height; ++y) {
        const std::uint8_t* row = &r.member[std::size_t(y) * r.width];
        bool occupied = false;
        for (int x = 0; x < r.width; ++x) {
            if (row[x]) { occupied = true; break; }
        }
        if (occupied) {
            if (min_row < 0) min_row = y;
            max_row = y;
        }
    }
    return min_row < 0 ? 0 : max_row - min_row + 1;
}

struct VcdrResult {
    double value = 0.0;
    bool od_empty = false;  // degenerate mask, value forced to 0
};

/// d(OC)/d(OD) on the derived regions. An empty OD region yields 0 with the
/// od_empty flag set so callers can warn instead of crash.
inline VcdrResult vcdr(const LabelMask& mask,
                       DiscRegionRule rule = DiscRegionRule::CupAndDiscLabels) {
    const int d_od = vertical_diameter(region_of(mask, RegionKind::OpticDisc, rule));
    if (d_od == 0) return {0.0, true};
    const int d_oc = vertical_diameter(region_of(mask, RegionKind::OpticCup, rule));
    return {double(d_oc) / double(d_od), false};
}

struct SegScore {
    std::string image_id;
    double dice_od = 0.0;
    double dice_oc = 0.0;
    double vcdr_pred = 0.0;
    double vcdr_true = 0.0;
    double abs_error = 0.0;
};

struct SegSummary {
    std::string team_id;
    double mean_dice_od = 0.0;
    double mean_dice_oc = 0.0;
    double mean_abs_error = 0.0;
    std::vector<SegScore> per_image;
    std::vector<std::string> warnings;
};

namespace detail {

// Single-pass pair scoring: region cardinalities, intersections and row
// extents for both masks, without materializing RegionMasks. Used on large
// cohorts where per-image allocations dominate.
struct PairCounts {
    std::size_t od_p = 0, od_t = 0, od_i = 0;
    std::size_t oc_p = 0, oc_t = 0, oc_i = 0;
    int od_p_min = -1, od_p_max = -1, od_t_min = -1, od_t_max = -1;
    int oc_p_min = -1, oc_p_max = -1, oc_t_min = -1, oc_t_max = -1;
};

inline void extend(int y, int& mn, int& mx) {
    if (mn < 0) mn = y;
    mx = y;
}

inline PairCounts count_pair(const LabelMask& pred, const LabelMask& truth,
                             DiscRegionRule rule) {
    PairCounts c;
    for (int y = 0; y < pred.height; ++y) {
        const PixelLabel* rp = &pred.labels[std::size_t(y) * pred.width];
        const PixelLabel* rt = &truth.labels[std::size_t(y) * truth.width];
        bool odp_row = false, odt_row = false, ocp_row = false, oct_row = false;
        for (int x = 0; x < pred.width; ++x) {
            const bool ocp = rp[x] == PixelLabel::Cup;
            const bool oct = rt[x] == PixelLabel::Cup;
            const bool odp = rule == DiscRegionRule::CupAndDiscLabels
                                 ? rp[x] != PixelLabel::Background
                                 : rp[x] == PixelLabel::Disc;
            const bool odt = rule == DiscRegionRule::CupAndDiscLabels
                                 ? rt[x] != PixelLabel::Background
                                 : rt[x] == PixelLabel::Disc;
            c.od_p += odp;
            c.od_t += odt;
            c.od_i += odp && odt;
            c.oc_p += ocp;
            c.oc_t += oct;
            c.oc_i += ocp && oct;
            odp_row |= odp;
            odt_row |= odt;
            ocp_row |= ocp;
            oct_row |= oct;
        }
        if (odp_row) extend(y, c.od_p_min, c.od_p_max);
        if (odt_row) extend(y, c.od_t_min, c.od_t_max);
        if (ocp_row) extend(y, c.oc_p_min, c.oc_p_max);
        if (oct_row) extend(y, c.oc_t_min, c.oc_t_max);
    }
    return c;
}

inline int extent(int mn, int mx) { return mn < 0 ? 0 : mx - mn + 1; }

inline double dice_from_counts(std::size_t na, std::size_t nb, std::size_t ni) {
    if (na + nb == 0) return 1.0;
    return 2.0 * double(ni) / double(na + nb);
}

}  // namespace detail

/// Scores one prediction against one ground truth. Throws DimensionMismatch
/// on shape disagreement and InvalidGroundTruth when the truth OD region is
/// empty. An empty predicted OD region scores vcdr_pred = 0; when `warnings`
/// is given, a note is appended instead of failing the run.
inline SegScore score_pair(const std::string& image_id, const LabelMask& pred,
                           const LabelMask& truth,
                           DiscRegionRule rule = DiscRegionRule::CupAndDiscLabels,
                           std::vector<std::string>* warnings = nullptr) {
    if (!pred.same_shape(truth))
        throw DimensionMismatch("image " + image_id + ": prediction is " +
                                std::to_string(pred.width) + "x" + std::to_string(pred.height) +
                                ", ground truth is " + std::to_string(truth.width) + "x" +
                                std::to_string(truth.height));
    const detail::PairCounts c = detail::count_pair(pred, truth, rule);
    if (c.od_t == 0)
        throw InvalidGroundTruth("image " + image_id + ": ground truth OD region is empty");

    SegScore s;
    s.image_id = image_id;
    s.dice_od = detail::dice_from_counts(c.od_p, c.od_t, c.od_i);
    s.dice_oc = detail::dice_from_counts(c.oc_p, c.oc_t, c.oc_i);
    const int d_od_p = detail::extent(c.od_p_min, c.od_p_max);
    if (d_od_p == 0) {
        s.vcdr_pred = 0.0;
        if (warnings)
            warnings->push_back("image " + image_id +
                                ": predicted OD region is empty, vCDR forced to 0");
    } else {
        s.vcdr_pred = double(detail::extent(c.oc_p_min, c.oc_p_max)) / double(d_od_p);
    }
    s.vcdr_true = double(detail::extent(c.oc_t_min, c.oc_t_max)) /
                  double(detail::extent(c.od_t_min, c.od_t_max));
    s.abs_error = std::abs(s.vcdr_pred - s.vcdr_true);
    return s;
}

/// Scores a full cohort. Every ground-truth id must have a prediction;
/// results are ordered by image_id.
inline SegSummary evaluate_segmentation(const std::map<std::string, LabelMask>& predictions,
                                        const std::map<std::string, LabelMask>& truths,
                                        DiscRegionRule rule = DiscRegionRule::CupAndDiscLabels) {
    std::string missing;
    for (const auto& [id, truth] : truths) {
        if (!predictions.count(id)) missing += missing.empty() ? id : ", " + id;
    }
    if (!missing.empty()) throw MissingPrediction("missing predictions for: " + missing);

    SegSummary summary;
    for (const auto& [id, truth] : truths) {
        summary.per_image.push_back(
            score_pair(id, predictions.at(id), truth, rule, &summary.warnings));
    }
    const double n = double(summary.per_image.size());
    if (n > 0) {
        for (const SegScore& s : summary.per_image) {
            summary.mean_dice_od += s.dice_od;
            summary.mean_dice_oc += s.dice_oc;
            summary.mean_abs_error += s.abs_error;
        }
        summary.mean_dice_od /= n;
        summary.mean_dice_oc /= n;
        summary.mean_abs_error /= n;
    }
    return summary;
}

}  // namespace refuge
