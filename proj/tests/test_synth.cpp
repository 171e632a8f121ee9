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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "refuge/bmp.hpp"
#include "refuge/cls_metrics.hpp"
#include "refuge/seg_metrics.hpp"
#include "refuge/synth.hpp"
#include "oracles.hpp"

using namespace refuge;

namespace {

SynthConfig small_config() {
    SynthConfig cfg;
    cfg.n_images = 40;
    cfg.width = 128;
    cfg.height = 128;
    cfg.disc_semi_min = 14;
    cfg.disc_semi_max = 24;
    cfg.seed = 4242;
    return cfg;
}

}  // namespace

TEST_CASE("sub-pixel ellipse covers exactly its center pixel") {
    const RegionMask r = rasterize_ellipse({10, 12, 0.4, 0.4, 0.0}, 32, 32);
    CHECK(r.count() == 1);
    CHECK(r.at(10, 12));
}

TEST_CASE("axis-aligned vertical diameter is 2*floor(semi_v)+1 at centered placement") {
    for (double semi_v : {1.0, 2.5, 3.9, 7.0, 10.2}) {
        const EllipseParams e{40, 40, 12, semi_v, 0.0};
        const RegionMask r = rasterize_ellipse(e, 96, 96);
        CHECK(vertical_diameter(r) == 2 * int(std::floor(semi_v)) + 1);
        CHECK(vertical_diameter(r) == oracle::ellipse_vertical_diameter(e, 96, 96));
    }
}

TEST_CASE("quarter-turn rotation swaps the effective axes") {
    const EllipseParams flat{40, 40, 14, 6, 0.0};
    const EllipseParams tall{40, 40, 6, 14, 1.5707963267948966};
    CHECK(rasterize_ellipse(flat, 96, 96).count() ==
          rasterize_ellipse(tall, 96, 96).count());
    CHECK(oracle::ellipse_member_count(flat, 96, 96) ==
          oracle::ellipse_member_count(tall, 96, 96));
}

TEST_CASE("rasterization matches the inequality oracle on random ellipses") {
    SplitMix64 rng(9);
    for (int trial = 0; trial < 40; ++trial) {
        EllipseParams e;
        e.semi_h = rng.uniform(0.5, 12.0);
        e.semi_v = rng.uniform(0.5, 12.0);
        e.theta = rng.uniform(-1.5, 1.5);
        e.cx = rng.uniform(14.0, 40.0);
        e.cy = rng.uniform(14.0, 40.0);
        const RegionMask r = rasterize_ellipse(e, 56, 56);
        for (int y = 0; y < 56; ++y)
            for (int x = 0; x < 56; ++x)
                REQUIRE(r.at(x, y) == oracle::ellipse_contains(e, x, y));
    }
}

TEST_CASE("out-of-bounds ellipses are rejected") {
    CHECK_THROWS_AS(rasterize_ellipse({2, 10, 5, 5, 0}, 32, 32), OutOfBounds);
    CHECK_THROWS_AS(rasterize_ellipse({30, 10, 5, 5, 0}, 32, 32), OutOfBounds);
    CHECK_THROWS_AS(rasterize_ellipse({10, 10, 0.0, 5, 0}, 32, 32), Error);
}

TEST_CASE("ground truth generation is deterministic in the seed") {
    const SynthConfig cfg = small_config();
    const SynthCohort a = generate_ground_truth(cfg);
    const SynthCohort b = generate_ground_truth(cfg);
    REQUIRE(a.images.size() == b.images.size());
    for (std::size_t i = 0; i < a.images.size(); ++i) {
        CHECK(a.images[i].id == b.images[i].id);
        CHECK(a.images[i].glaucoma == b.images[i].glaucoma);
        CHECK(a.images[i].vcdr_true == b.images[i].vcdr_true);
        CHECK(encode_mask(render_truth_mask(a.images[i], cfg)) ==
              encode_mask(render_truth_mask(b.images[i], cfg)));
    }

    SynthConfig other = cfg;
    other.seed = cfg.seed + 1;
    const SynthCohort c = generate_ground_truth(other);
    bool any_difference = false;
    for (std::size_t i = 0; i < a.images.size(); ++i)
        any_difference |= a.images[i].vcdr_true != c.images[i].vcdr_true;
    CHECK(any_difference);
}

TEST_CASE("exact stratification yields the configured positive count") {
    SynthConfig cfg = small_config();
    cfg.n_images = 400;
    cfg.width = 96;
    cfg.height = 96;
    cfg.disc_semi_min = 10;
    cfg.disc_semi_max = 16;
    const SynthCohort cohort = generate_ground_truth(cfg);
    std::size_t positives = 0;
    for (const SynthImage& img : cohort.images) positives += img.glaucoma;
    CHECK(positives == 40);
}

TEST_CASE("measured vcdr lands inside the class interval on every image") {
    const SynthConfig cfg = small_config();
    const SynthCohort cohort = generate_ground_truth(cfg);
    for (const SynthImage& img : cohort.images) {
        const LabelMask mask = render_truth_mask(img, cfg);
        const double measured = oracle::vcdr(mask);
        const double lo = img.glaucoma ? cfg.vcdr_glaucoma_lo : cfg.vcdr_normal_lo;
        const double hi = img.glaucoma ? cfg.vcdr_glaucoma_hi : cfg.vcdr_normal_hi;
        REQUIRE(measured >= lo);
        REQUIRE(measured <= hi);
        REQUIRE(img.vcdr_true == measured);

        const RegionMask od = region_of(mask, RegionKind::OpticDisc);
        const RegionMask oc = region_of(mask, RegionKind::OpticCup);
        for (std::size_t i = 0; i < oc.member.size(); ++i)
            REQUIRE(oc.member[i] <= od.member[i]);
        REQUIRE(decode_mask(encode_mask(mask)) == mask);
    }
}

TEST_CASE("zero-noise predictions reproduce the truth mask") {
    const SynthConfig cfg = small_config();
    const SynthCohort cohort = generate_ground_truth(cfg);
    SplitMix64 rng(1);
    for (std::size_t i = 0; i < 5; ++i) {
        const SynthImage& img = cohort.images[i];
        const LabelMask pred = perturb_prediction(img.disc, img.cup, PredictionNoise{}, rng,
                                                  cfg.width, cfg.height);
        CHECK(pred == render_truth_mask(img, cfg));
    }
}

TEST_CASE("perturbed predictions stay well-formed") {
    const SynthConfig cfg = small_config();
    const SynthCohort cohort = generate_ground_truth(cfg);
    SplitMix64 rng(77);
    const PredictionNoise heavy{6.0, 10.0, 0.4};
    for (std::size_t i = 0; i < 10; ++i) {
        const SynthImage& img = cohort.images[i];
        const LabelMask pred =
            perturb_prediction(img.disc, img.cup, heavy, rng, cfg.width, cfg.height);
        const RegionMask od = region_of(pred, RegionKind::OpticDisc);
        const RegionMask oc = region_of(pred, RegionKind::OpticCup);
        for (std::size_t k = 0; k < oc.member.size(); ++k)
            REQUIRE(oc.member[k] <= od.member[k]);
    }
}

TEST_CASE("axis noise degrades mean dice monotonically") {
    const SynthConfig cfg = small_config();
    const SynthCohort cohort = generate_ground_truth(cfg);
    double previous = 2.0;
    for (double sigma : {0.0, 2.0, 8.0}) {
        SplitMix64 rng(500 + std::uint64_t(sigma));
        double total = 0.0;
        int count = 0;
        for (const SynthImage& img : cohort.images) {
            for (int rep = 0; rep < 3 && count < 100; ++rep, ++count) {
                const LabelMask pred = perturb_prediction(
                    img.disc, img.cup, PredictionNoise{0.0, sigma, 0.0}, rng, cfg.width,
                    cfg.height);
                total += score_pair(img.id, pred, render_truth_mask(img, cfg)).dice_od;
            }
        }
        const double mean = total / double(count);
        REQUIRE(mean < previous);
        previous = mean;
    }
}

TEST_CASE("classifier score tables behave like their separation") {
    std::vector<std::pair<std::string, bool>> labels;
    SplitMix64 assign(3);
    for (int i = 0; i < 10000; ++i)
        labels.emplace_back("img_" + std::to_string(i), assign.uniform() < 0.1);

    SplitMix64 rng_a(91);
    const ScoreTable coin = generate_classifier_scores(labels, 0.0, rng_a);
    const double auc_coin = auc_mann_whitney(coin);
    CHECK(auc_coin > 0.48);
    CHECK(auc_coin < 0.52);

    std::vector<std::pair<std::string, bool>> labels400(labels.begin(), labels.begin() + 400);
    SplitMix64 rng_b(92);
    const ScoreTable sharp = generate_classifier_scores(labels400, 10.0, rng_b);
    CHECK(auc_mann_whitney(sharp) > 0.99);

    SplitMix64 rng_c1(93), rng_c2(93);
    const ScoreTable t1 = generate_classifier_scores(labels400, 3.0, rng_c1);
    const ScoreTable t2 = generate_classifier_scores(labels400, 3.0, rng_c2);
    for (std::size_t i = 0; i < t1.entries.size(); ++i)
        REQUIRE(t1.entries[i].likelihood == t2.entries[i].likelihood);
}

TEST_CASE("infeasible configurations are rejected up front") {
    SynthConfig bad = small_config();
    bad.disc_semi_max = 200.0;  // cannot fit a 128-pixel image
    CHECK_THROWS_AS(generate_ground_truth(bad), InfeasibleConfig);

    SynthConfig narrow = small_config();
    narrow.disc_semi_min = 3.0;
    narrow.disc_semi_max = 3.0;  // vCDR interval unreachable at diameter 7
    CHECK_THROWS_AS(generate_ground_truth(narrow), InfeasibleConfig);

    SynthConfig prevalence = small_config();
    prevalence.prevalence = 0.0;
    CHECK_THROWS_AS(generate_ground_truth(prevalence), InfeasibleConfig);

    SynthConfig vcdr_hi = small_config();
    vcdr_hi.vcdr_glaucoma_hi = 0.99;
    CHECK_THROWS_AS(generate_ground_truth(vcdr_hi), InfeasibleConfig);
}
