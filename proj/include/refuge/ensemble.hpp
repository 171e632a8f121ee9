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
// Multi-team fusion: pixel-wise majority voting of label masks and
// min-max-normalized averaging of likelihood tables.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "refuge/cls_metrics.hpp"
#include "refuge/errors.hpp"
#include "refuge/mask.hpp"

namespace refuge {

/// A pixel joins a fused region when its vote count strictly exceeds
/// threshold_fraction times the number of masks. 0.5 is a strict majority;
/// 0.8 reproduces the published 80%-of-networks internal rule.
struct VoteConfig {
    double threshold_fraction = 0.5;
};

/// Votes are counted on the derived regions (OD = cup-or-disc labels,
/// OC = cup labels), not on raw labels, so a {Cup, Cup, Disc} pixel fuses to
/// Cup without a plurality rule. OC votes imply OD votes, hence the fused
/// mask always satisfies OC ⊆ OD.
inline LabelMask majority_vote(const std::vector<LabelMask>& masks,
                               const VoteConfig& cfg = {}) {
    if (masks.size() < 2)
        throw TooFewMasks("majority_vote needs at least 2 masks, got " +
                          std::to_string(masks.size()));
    if (!(cfg.threshold_fraction > 0.0 && cfg.threshold_fraction <= 1.0))
        throw Error("vote threshold_fraction must lie in (0, 1]");
    for (const LabelMask& m : masks)
        if (!m.same_shape(masks.front()))
            throw DimensionMismatch("majority_vote: mask dimensions differ");

    const double needed = cfg.threshold_fraction * double(masks.size());
    const std::size_t n = masks.front().size();
    LabelMask out(masks.front().width, masks.front().height);
    for (std::size_t i = 0; i < n; ++i) {
        int od_votes = 0, oc_votes = 0;
        for (const LabelMask& m : masks) {
            od_votes += m.labels[i] != PixelLabel::Background;
            oc_votes += m.labels[i] == PixelLabel::Cup;
        }
        if (double(oc_votes) > needed)
            out.labels[i] = PixelLabel::Cup;
        else if (double(od_votes) > needed)
            out.labels[i] = PixelLabel::Disc;
        else
            out.labels[i] = PixelLabel::Background;
    }
    return out;
}

struct NormalizedScores {
    ScoreTable table;
    bool constant_input = false;  // all likelihoods equal; values forced to 0.5
};

/// Min-max rescale into [0,1]. A constant table has no spread to rescale, so
/// every value becomes 0.5 and the result is flagged.
inline NormalizedScores normalize_scores(const ScoreTable& t) {
    if (t.entries.empty()) throw EmptySample("normalize_scores: empty table");
    double lo = t.entries.front().likelihood, hi = lo;
    for (const auto& e : t.entries) {
        if (!std::isfinite(e.likelihood))
            throw NonFiniteValue("non-finite likelihood for image " + e.image_id);
        lo = std::min(lo, e.likelihood);
        hi = std::max(hi, e.likelihood);
    }
    NormalizedScores out;
    out.table = t;
    if (lo == hi) {
        out.constant_input = true;
        for (auto& e : out.table.entries) e.likelihood = 0.5;
    } else {
        for (auto& e : out.table.entries) e.likelihood = (e.likelihood - lo) / (hi - lo);
    }
    return out;
}

/// Per-image arithmetic mean of likelihoods across tables. Tables must cover
/// the same image ids with agreeing labels; output keeps the first table's
/// order.
inline ScoreTable average_scores(const std::vector<ScoreTable>& tables) {
    if (tables.empty()) throw EmptySample("average_scores: no tables");
    ScoreTable out = tables.front();

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < out.entries.size(); ++i) {
        if (!index.emplace(out.entries[i].image_id, i).second)
            throw DuplicateId("duplicate image id: " + out.entries[i].image_id);
    }
    for (std::size_t t = 1; t < tables.size(); ++t) {
        if (tables[t].entries.size() != out.entries.size())
            throw IdMismatch("score tables cover different image id sets");
        std::vector<bool> hit(out.entries.size(), false);
        for (const auto& e : tables[t].entries) {
            auto it = index.find(e.image_id);
            if (it == index.end())
                throw IdMismatch("image " + e.image_id + " is missing from the first table");
            if (hit[it->second])
                throw DuplicateId("duplicate image id: " + e.image_id);
            hit[it->second] = true;
            if (e.glaucoma != out.entries[it->second].glaucoma)
                throw LabelConflict("label disagreement for image " + e.image_id);
            out.entries[it->second].likelihood += e.likelihood;
        }
    }
    for (auto& e : out.entries) e.likelihood /= double(tables.size());
    return out;
}

}  // namespace refuge
