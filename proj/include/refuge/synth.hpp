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
// Seeded synthetic cohorts: tilted-ellipse ground-truth masks with
// class-conditional vCDR, jittered team predictions and noisy likelihood
// tables. Everything is a pure function of (config, seed).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "refuge/cls_metrics.hpp"
#include "refuge/errors.hpp"
#include "refuge/mask.hpp"
#include "refuge/rng.hpp"
#include "refuge/seg_metrics.hpp"

namespace refuge {

/// Tilted ellipse; semi_h/semi_v are the semi-axes before rotating by theta.
struct EllipseParams {
    double cx = 0.0;
    double cy = 0.0;
    double semi_h = 1.0;
    double semi_v = 1.0;
    double theta = 0.0;
};

namespace detail {

/// Membership test at a pixel center. Shared by the rasterizer and the
/// measurement helpers so that they can never disagree.
inline bool ellipse_contains(const EllipseParams& e, int x, int y) {
    const double dx = double(x) - e.cx;
    const double dy = double(y) - e.cy;
    const double c = std::cos(e.theta), s = std::sin(e.theta);
    const double u = (dx * c + dy * s) / e.semi_h;
    const double v = (-dx * s + dy * c) / e.semi_v;
    return u * u + v * v <= 1.0;
}

/// Axis-aligned half-extents of the rotated ellipse.
inline void bounding_half_extents(const EllipseParams& e, double* ex, double* ey) {
    const double c = std::cos(e.theta), s = std::sin(e.theta);
    *ex = std::sqrt(e.semi_h * e.semi_h * c * c + e.semi_v * e.semi_v * s * s);
    *ey = std::sqrt(e.semi_h * e.semi_h * s * s + e.semi_v * e.semi_v * c * c);
}

struct PixelBox {
    int x0, x1, y0, y1;  // inclusive
};

inline PixelBox pixel_bounding_box(const EllipseParams& e, int width, int height) {
    double ex, ey;
    bounding_half_extents(e, &ex, &ey);
    PixelBox b;
    b.x0 = std::max(0, int(std::floor(e.cx - ex)));
    b.x1 = std::min(width - 1, int(std::ceil(e.cx + ex)));
    b.y0 = std::max(0, int(std::floor(e.cy - ey)));
    b.y1 = std::min(height - 1, int(std::ceil(e.cy + ey)));
    return b;
}

/// Vertical diameter the ellipse would have after rasterization, without
/// materializing the mask (per-row early exit).
inline int rasterized_vertical_diameter(const EllipseParams& e, int width, int height) {
    const PixelBox b = pixel_bounding_box(e, width, height);
    int min_row = -1, max_row = -1;
    for (int y = b.y0; y <= b.y1; ++y) {
        for (int x = b.x0; x <= b.x1; ++x) {
            if (ellipse_contains(e, x, y)) {
                if (min_row < 0) min_row = y;
                max_row = y;
                break;
            }
        }
    }
    return min_row < 0 ? 0 : max_row - min_row + 1;
}

}  // namespace detail

/// Rasterizes with pixel-center inclusion: pixel (x, y) is a member iff its
/// center satisfies the rotated-ellipse inequality. The ellipse bounding box
/// must lie inside [0, width-1] × [0, height-1].
inline RegionMask rasterize_ellipse(const EllipseParams& e, int width, int height) {
    if (!(e.semi_h > 0.0 && e.semi_v > 0.0))
        throw Error("rasterize_ellipse: semi-axes must be positive");
    double ex, ey;
    detail::bounding_half_extents(e, &ex, &ey);
    if (e.cx - ex < 0.0 || e.cx + ex > double(width - 1) || e.cy - ey < 0.0 ||
        e.cy + ey > double(height - 1))
        throw OutOfBounds("ellipse bounding box exceeds the image");

    RegionMask r(width, height);
    const detail::PixelBox b = detail::pixel_bounding_box(e, width, height);
    for (int y = b.y0; y <= b.y1; ++y)
        for (int x = b.x0; x <= b.x1; ++x)
            if (detail::ellipse_contains(e, x, y)) r.set(x, y, true);
    return r;
}

/// Assembles a tri-level mask from a disc/cup ellipse pair. Cup labels are
/// restricted to disc pixels, which keeps OC ⊆ OD even for jittered pairs.
inline LabelMask render_mask(const EllipseParams& disc, const EllipseParams& cup, int width,
                             int height) {
    LabelMask m(width, height, PixelLabel::Background);
    const detail::PixelBox bd = detail::pixel_bounding_box(disc, width, height);
    for (int y = bd.y0; y <= bd.y1; ++y)
        for (int x = bd.x0; x <= bd.x1; ++x)
            if (detail::ellipse_contains(disc, x, y)) m.set(x, y, PixelLabel::Disc);
    const detail::PixelBox bc = detail::pixel_bounding_box(cup, width, height);
    for (int y = bc.y0; y <= bc.y1; ++y)
        for (int x = bc.x0; x <= bc.x1; ++x)
            if (m.at(x, y) == PixelLabel::Disc && detail::ellipse_contains(cup, x, y))
                m.set(x, y, PixelLabel::Cup);
    return m;
}

/// Zero-mean jitter applied to a predicted ellipse pair, in pixels/radians.
struct PredictionNoise {
    double center_sigma = 0.0;
    double axis_sigma = 0.0;
    double tilt_sigma = 0.0;
};

struct TeamSpec {
    std::string name;
    PredictionNoise noise;
    double score_separation = 4.0;  // classifier quality in the logistic latent
};

struct SynthConfig {
    int n_images = 400;
    int width = 256;
    int height = 256;
    double prevalence = 0.10;
    bool exact_stratification = true;  // exactly round(prevalence * n) positives
    double disc_semi_min = 28.0;
    double disc_semi_max = 46.0;
    double tilt_min = -0.5;
    double tilt_max = 0.5;
    double vcdr_glaucoma_lo = 0.72;
    double vcdr_glaucoma_hi = 0.90;
    double vcdr_normal_lo = 0.30;
    double vcdr_normal_hi = 0.60;
    double score_noise = 1.0;  // scale of the logistic latent
    std::uint64_t seed = 20180908;
    std::vector<TeamSpec> teams = {
        {"team_exact", {0.0, 0.0, 0.0}, 8.0},
        {"team_close", {1.0, 2.0, 0.02}, 5.0},
        {"team_mid", {2.0, 4.0, 0.05}, 3.0},
        {"team_far", {4.0, 8.0, 0.10}, 1.5},
    };
};

struct SynthImage {
    std::string id;
    bool glaucoma = false;
    EllipseParams disc;
    EllipseParams cup;
    double vcdr_true = 0.0;  // measured on the rasterized mask, not the parameters
};

struct SynthCohort {
    SynthConfig config;
    std::vector<SynthImage> images;
};

namespace detail {

// fork() stream ids; part of the reproducibility contract (v1)
constexpr std::uint64_t kStreamStratify = 0x100000000000000ull;
constexpr std::uint64_t kStreamGroundTruth = 0x200000000000000ull;   // + image index
constexpr std::uint64_t kStreamPrediction = 0x300000000000000ull;    // + team<<32 + image
constexpr std::uint64_t kStreamScores = 0x400000000000000ull;        // + team index

inline std::string image_id_for(std::size_t index, std::size_t total) {
    std::size_t digits = 4;
    for (std::size_t t = total; t > 9999; t /= 10) ++digits;
    std::string num = std::to_string(index);
    return "img_" + std::string(digits - std::min(digits, num.size()), '0') + num;
}

inline void validate_config(const SynthConfig& cfg) {
    if (cfg.n_images < 1) throw InfeasibleConfig("n_images must be at least 1");
    if (cfg.width < 16 || cfg.height < 16)
        throw InfeasibleConfig("image dimensions must be at least 16 pixels");
    if (!(cfg.prevalence > 0.0 && cfg.prevalence < 1.0))
        throw InfeasibleConfig("prevalence must lie strictly between 0 and 1");
    if (!(cfg.disc_semi_min > 2.0) || cfg.disc_semi_min > cfg.disc_semi_max)
        throw InfeasibleConfig("disc semi-axis range is empty or too small");
    if (cfg.tilt_min > cfg.tilt_max) throw InfeasibleConfig("tilt range is empty");
    for (auto [lo, hi] : {std::pair{cfg.vcdr_glaucoma_lo, cfg.vcdr_glaucoma_hi},
                          std::pair{cfg.vcdr_normal_lo, cfg.vcdr_normal_hi}}) {
        if (!(lo > 0.0 && lo <= hi && hi <= 0.95))
            throw InfeasibleConfig("vCDR interval must satisfy 0 < lo <= hi <= 0.95");
        const double d_min = 2.0 * std::floor(cfg.disc_semi_min) + 1.0;
        if ((hi - lo) * d_min < 1.5)
            throw InfeasibleConfig(
                "vCDR interval too narrow for the smallest disc: no reachable "
                "integer cup diameter");
    }
    if (2.0 * cfg.disc_semi_max + 4.0 > double(std::min(cfg.width, cfg.height) - 1))
        throw InfeasibleConfig("largest disc does not fit inside the image");
    if (cfg.score_noise <= 0.0) throw InfeasibleConfig("score_noise must be positive");
    for (const TeamSpec& t : cfg.teams) {
        if (t.name.empty()) throw InfeasibleConfig("team name must not be empty");
        if (t.score_separation < 0.0)
            throw InfeasibleConfig("score_separation must be nonnegative");
    }
}

// The cup is a scaled copy of the disc (same tilt, slightly narrowed), so
// growing the scale grows the rasterized vertical diameter monotonically and
// never degenerates into a sliver whose extent comes from the tilted long
// axis alone.
constexpr double kCupScaleMin = 0.12;
constexpr double kCupScaleMax = 0.96;

inline EllipseParams cup_at_scale(const EllipseParams& cup_center, const EllipseParams& disc,
                                  double aspect, double scale) {
    EllipseParams e = cup_center;
    e.semi_h = scale * aspect * disc.semi_h;
    e.semi_v = scale * disc.semi_v;
    return e;
}

/// Smallest similar-shape scale whose rasterized vertical diameter reaches
/// `target`; returns a scale achieving exactly `target`, or a negative value
/// when the step function skips it.
inline double solve_cup_scale(const EllipseParams& cup_center, const EllipseParams& disc,
                              double aspect, int width, int height, int target) {
    const auto diameter_at = [&](double scale) {
        return rasterized_vertical_diameter(cup_at_scale(cup_center, disc, aspect, scale),
                                            width, height);
    };
    if (diameter_at(kCupScaleMax) < target) return -1.0;
    if (diameter_at(kCupScaleMin) >= target) return -1.0;
    double lo = kCupScaleMin, hi = kCupScaleMax;
    for (int it = 0; it < 60; ++it) {
        const double mid = (lo + hi) / 2.0;
        if (diameter_at(mid) >= target)
            hi = mid;
        else
            lo = mid;
    }
    return diameter_at(hi) == target ? hi : -1.0;
}

}  // namespace detail

/// Deterministic ground-truth cohort: per image a tilted disc ellipse, a
/// concentric-ish cup whose measured vCDR falls inside the class interval,
/// and a diagnosis label at the configured prevalence.
inline SynthCohort generate_ground_truth(const SynthConfig& cfg) {
    detail::validate_config(cfg);
    SplitMix64 master(cfg.seed);

    std::vector<bool> labels(std::size_t(cfg.n_images), false);
    if (cfg.exact_stratification) {
        const std::size_t n_pos =
            std::size_t(std::llround(cfg.prevalence * double(cfg.n_images)));
        for (std::size_t i = 0; i < n_pos && i < labels.size(); ++i) labels[i] = true;
        SplitMix64 shuffle_rng = master.fork(detail::kStreamStratify);
        for (std::size_t i = labels.size(); i > 1; --i) {
            const std::size_t j = std::size_t(shuffle_rng.next() % i);
            std::swap(labels[i - 1], labels[j]);
        }
    } else {
        SplitMix64 label_rng = master.fork(detail::kStreamStratify);
        for (std::size_t i = 0; i < labels.size(); ++i)
            labels[i] = label_rng.uniform() < cfg.prevalence;
    }

    SynthCohort cohort;
    cohort.config = cfg;
    cohort.images.resize(std::size_t(cfg.n_images));
    for (std::size_t i = 0; i < cohort.images.size(); ++i) {
        SynthImage& img = cohort.images[i];
        img.id = detail::image_id_for(i, cohort.images.size());
        img.glaucoma = labels[i];
        const double lo = img.glaucoma ? cfg.vcdr_glaucoma_lo : cfg.vcdr_normal_lo;
        const double hi = img.glaucoma ? cfg.vcdr_glaucoma_hi : cfg.vcdr_normal_hi;

        SplitMix64 rng = master.fork(detail::kStreamGroundTruth + i);
        bool placed = false;
        for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
            EllipseParams disc;
            disc.semi_h = rng.uniform(cfg.disc_semi_min, cfg.disc_semi_max);
            disc.semi_v = rng.uniform(cfg.disc_semi_min, cfg.disc_semi_max);
            disc.theta = rng.uniform(cfg.tilt_min, cfg.tilt_max);
            double ex, ey;
            detail::bounding_half_extents(disc, &ex, &ey);
            disc.cx = rng.uniform(ex + 1.0, double(cfg.width - 2) - ex);
            disc.cy = rng.uniform(ey + 1.0, double(cfg.height - 2) - ey);

            const int d_od = detail::rasterized_vertical_diameter(disc, cfg.width, cfg.height);
            const int cand_lo = int(std::ceil(lo * double(d_od)));
            const int cand_hi = int(std::floor(hi * double(d_od)));
            if (cand_lo > cand_hi || cand_lo < 1) continue;

            EllipseParams cup_center;
            cup_center.theta = disc.theta;
            const double aspect = rng.uniform(0.85, 1.0);
            // jitter in the disc frame; small enough to keep the cup inside
            const double du = rng.uniform(-0.02, 0.02) * disc.semi_h;
            const double dv = rng.uniform(-0.02, 0.02) * disc.semi_v;
            const double c = std::cos(disc.theta), s = std::sin(disc.theta);
            cup_center.cx = disc.cx + du * c - dv * s;
            cup_center.cy = disc.cy + du * s + dv * c;

            const int first = std::clamp(
                int(std::lround(rng.uniform(lo, hi) * double(d_od))), cand_lo, cand_hi);
            for (int step = 0; step <= cand_hi - cand_lo && !placed; ++step) {
                // fan out around the sampled target: first, first-1, first+1, ...
                const int delta = (step + 1) / 2 * (step % 2 == 1 ? -1 : 1);
                const int target = first + delta;
                if (target < cand_lo || target > cand_hi) continue;
                const double scale = detail::solve_cup_scale(cup_center, disc, aspect,
                                                             cfg.width, cfg.height, target);
                if (scale <= 0.0) continue;
                const EllipseParams cup = detail::cup_at_scale(cup_center, disc, aspect, scale);
                const LabelMask mask = render_mask(disc, cup, cfg.width, cfg.height);
                const VcdrResult measured = vcdr(mask);
                if (!measured.od_empty && measured.value >= lo && measured.value <= hi) {
                    img.disc = disc;
                    img.cup = cup;
                    img.vcdr_true = measured.value;
                    placed = true;
                }
            }
        }
        if (!placed)
            throw InfeasibleConfig("could not realize a ground-truth ellipse pair for " +
                                   img.id + " within the configured ranges");
    }
    return cohort;
}

inline LabelMask render_truth_mask(const SynthImage& img, const SynthConfig& cfg) {
    return render_mask(img.disc, img.cup, cfg.width, cfg.height);
}

namespace detail {

inline EllipseParams jitter_ellipse(const EllipseParams& e, const PredictionNoise& noise,
                                    SplitMix64& rng) {
    EllipseParams out = e;
    out.cx += rng.normal() * noise.center_sigma;
    out.cy += rng.normal() * noise.center_sigma;
    out.semi_h = std::max(1.0, e.semi_h + rng.normal() * noise.axis_sigma);
    out.semi_v = std::max(1.0, e.semi_v + rng.normal() * noise.axis_sigma);
    out.theta += rng.normal() * noise.tilt_sigma;
    return out;
}

inline void clamp_to_bounds(EllipseParams& e, int width, int height) {
    double ex, ey;
    bounding_half_extents(e, &ex, &ey);
    const double max_ex = (double(width - 1)) / 2.0;
    const double max_ey = (double(height - 1)) / 2.0;
    const double scale = std::min({1.0, max_ex / ex, max_ey / ey});
    if (scale < 1.0) {
        e.semi_h *= scale * 0.999;
        e.semi_v *= scale * 0.999;
        bounding_half_extents(e, &ex, &ey);
    }
    e.cx = std::clamp(e.cx, ex, double(width - 1) - ex);
    e.cy = std::clamp(e.cy, ey, double(height - 1) - ey);
}

}  // namespace detail

/// Simulated team submission: the ground-truth ellipse pair jittered by
/// zero-mean noise, clamped inside the image; cup labels stay inside disc
/// labels by mask assembly. Zero noise reproduces the truth mask exactly.
inline LabelMask perturb_prediction(const EllipseParams& disc, const EllipseParams& cup,
                                    const PredictionNoise& noise, SplitMix64& rng, int width,
                                    int height) {
    EllipseParams pd = detail::jitter_ellipse(disc, noise, rng);
    EllipseParams pc = detail::jitter_ellipse(cup, noise, rng);
    pc.semi_h = std::min(pc.semi_h, 0.99 * pd.semi_h);
    pc.semi_v = std::min(pc.semi_v, 0.99 * pd.semi_v);
    detail::clamp_to_bounds(pd, width, height);
    detail::clamp_to_bounds(pc, width, height);
    return render_mask(pd, pc, width, height);
}

/// Simulated glaucoma likelihoods: a logistic latent shifted upward by
/// `separation` for positive cases, squashed to (0,1). separation 0 is a
/// coin-flip classifier; large separations approach AUC 1.
inline ScoreTable generate_classifier_scores(
    const std::vector<std::pair<std::string, bool>>& labels, double separation,
    SplitMix64& rng, double noise_scale = 1.0) {
    if (separation < 0.0) throw Error("generate_classifier_scores: separation must be >= 0");
    ScoreTable t;
    t.entries.reserve(labels.size());
    for (const auto& [id, glaucoma] : labels) {
        const double latent =
            noise_scale * rng.logistic() + (glaucoma ? separation : 0.0);
        t.entries.push_back({id, 1.0 / (1.0 + std::exp(-latent)), glaucoma});
    }
    return t;
}

}  // namespace refuge
