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

#include <map>
#include <string>

#include "refuge/seg_metrics.hpp"
#include "refuge/synth.hpp"
#include "oracles.hpp"

using namespace refuge;

namespace {

RegionMask region_from_rows(int w, int h, std::initializer_list<int> rows) {
    RegionMask r(w, h);
    for (int y : rows) r.set(1 % w, y, true);
    return r;
}

// disc spanning [disc_top, disc_top+d_od), cup nested with extent d_oc
LabelMask bar_mask(int w, int h, int top, int d_od, int d_oc) {
    LabelMask m(w, h, PixelLabel::Background);
    for (int y = top; y < top + d_od; ++y)
        for (int x = 1; x < w - 1; ++x) m.set(x, y, PixelLabel::Disc);
    for (int y = top; y < top + d_oc; ++y)
        for (int x = 2; x < w - 2; ++x) m.set(x, y, PixelLabel::Cup);
    return m;
}

}  // namespace

TEST_CASE("dice handles the declared conventions") {
    RegionMask a(4, 4), b(4, 4);
    a.set(0, 0, true);
    a.set(1, 1, true);
    CHECK(dice(a, a) == 1.0);

    b.set(2, 2, true);
    CHECK(dice(a, b) == 0.0);  // disjoint

    RegionMask e1(4, 4), e2(4, 4);
    CHECK(dice(e1, e2) == 1.0);  // both empty
    CHECK(dice(a, e1) == 0.0);   // one empty

    RegionMask c(4, 4), d(4, 4);
    for (int i = 0; i < 4; ++i) c.set(i, 0, true);
    d.set(2, 0, true);
    d.set(3, 0, true);
    d.set(0, 1, true);
    d.set(1, 1, true);
    CHECK(dice(c, d) == 0.5);  // |a|=4, |b|=4, overlap 2
    CHECK(dice(c, d) == oracle::dice(c, d));

    RegionMask wrong(5, 4);
    CHECK_THROWS_AS(dice(a, wrong), DimensionMismatch);
}

TEST_CASE("dice is symmetric, bounded, and 1 only on equal regions") {
    SplitMix64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const int w = 1 + int(rng.next() % 24), h = 1 + int(rng.next() % 24);
        const RegionMask a = oracle::random_region(rng, w, h, 0.4);
        const RegionMask b = oracle::random_region(rng, w, h, 0.4);
        const double d = dice(a, b);
        REQUIRE(d == dice(b, a));
        REQUIRE(d >= 0.0);
        REQUIRE(d <= 1.0);
        REQUIRE(d == oracle::dice(a, b));
        if (d == 1.0) REQUIRE(a == b);
        if (a == b) REQUIRE(d == 1.0);
    }
}

TEST_CASE("vertical diameter is the inclusive row extent") {
    CHECK(vertical_diameter(RegionMask(6, 6)) == 0);

    RegionMask single(6, 6);
    single.set(3, 2, true);
    CHECK(vertical_diameter(single) == 1);

    const RegionMask sparse = region_from_rows(6, 9, {3, 5, 7});
    CHECK(vertical_diameter(sparse) == 5);
    CHECK(vertical_diameter(sparse) == oracle::vertical_diameter(sparse));
}

TEST_CASE("vcdr follows the diameter ratio and degenerate conventions") {
    const LabelMask m = bar_mask(8, 24, 4, 10, 5);
    CHECK(vcdr(m).value == 0.5);

    const VcdrResult empty = vcdr(LabelMask(5, 5, PixelLabel::Background));
    CHECK(empty.value == 0.0);
    CHECK(empty.od_empty);
}

TEST_CASE("vcdr of nested concentric ellipses matches the enumeration oracle") {
    // semi-minor (vertical) axes 20 and 50, centered on a pixel center
    EllipseParams disc{60, 60, 55, 50, 0.0};
    EllipseParams cup{60, 60, 25, 20, 0.0};
    const LabelMask m = render_mask(disc, cup, 121, 121);
    const VcdrResult v = vcdr(m);
    CHECK(v.value == Catch::Approx(41.0 / 101.0).epsilon(1e-12));
    CHECK(oracle::ellipse_vertical_diameter(disc, 121, 121) == 101);
    CHECK(oracle::ellipse_vertical_diameter(cup, 121, 121) == 41);
    CHECK(v.value == oracle::vcdr(m));
}

TEST_CASE("vcdr lies in [0,1] whenever the disc region is occupied") {
    SplitMix64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const LabelMask m = oracle::random_mask(rng, 24);
        const VcdrResult v = vcdr(m);
        if (!v.od_empty) {
            REQUIRE(v.value >= 0.0);
            REQUIRE(v.value <= 1.0);
        }
    }
}

TEST_CASE("evaluate_segmentation scores a cohort deterministically") {
    std::map<std::string, LabelMask> truths;
    truths["a"] = bar_mask(10, 30, 5, 20, 9);   // vcdr 0.45
    truths["b"] = bar_mask(10, 30, 2, 16, 8);
    std::map<std::string, LabelMask> perfect = truths;
    const SegSummary same = evaluate_segmentation(perfect, truths);
    CHECK(same.mean_dice_od == 1.0);
    CHECK(same.mean_dice_oc == 1.0);
    CHECK(same.mean_abs_error == 0.0);

    std::map<std::string, LabelMask> preds = truths;
    preds["a"] = bar_mask(10, 30, 5, 20, 12);  // vcdr 0.60
    const SegSummary off = evaluate_segmentation(preds, truths);
    CHECK(off.per_image.front().vcdr_pred == 0.60);
    CHECK(off.per_image.front().vcdr_true == 0.45);
    CHECK(off.per_image.front().abs_error == Catch::Approx(0.15).margin(1e-15));
}

TEST_CASE("evaluate_segmentation reports the declared failures") {
    std::map<std::string, LabelMask> truths{{"a", bar_mask(8, 20, 3, 10, 4)},
                                            {"b", bar_mask(8, 20, 3, 10, 4)}};
    std::map<std::string, LabelMask> missing{{"a", truths.at("a")}};
    try {
        evaluate_segmentation(missing, truths);
        FAIL("expected MissingPrediction");
    } catch (const MissingPrediction& e) {
        CHECK(std::string(e.what()).find("b") != std::string::npos);
    }

    std::map<std::string, LabelMask> wrong_dims = truths;
    wrong_dims["b"] = bar_mask(9, 20, 3, 10, 4);
    CHECK_THROWS_AS(evaluate_segmentation(wrong_dims, truths), DimensionMismatch);

    std::map<std::string, LabelMask> empty_gt = truths;
    empty_gt["c"] = bar_mask(8, 20, 3, 10, 4);
    std::map<std::string, LabelMask> preds = empty_gt;
    empty_gt["c"] = LabelMask(8, 20, PixelLabel::Background);
    CHECK_THROWS_AS(evaluate_segmentation(preds, empty_gt), InvalidGroundTruth);
}

TEST_CASE("empty predicted disc scores vcdr 0 with a warning") {
    std::map<std::string, LabelMask> truths{{"a", bar_mask(8, 20, 3, 10, 4)}};
    std::map<std::string, LabelMask> preds{{"a", LabelMask(8, 20, PixelLabel::Background)}};
    const SegSummary s = evaluate_segmentation(preds, truths);
    CHECK(s.per_image.front().vcdr_pred == 0.0);
    CHECK(s.per_image.front().dice_od == 0.0);
    CHECK(s.warnings.size() == 1);
}

TEST_CASE("cohort means equal independent per-image recomputation") {
    SplitMix64 rng(42);
    std::map<std::string, LabelMask> truths, preds;
    for (int i = 0; i < 20; ++i) {
        const std::string id = "img_" + std::to_string(i);
        const int d_od = 8 + int(rng.next() % 10);
        const int d_oc = 2 + int(rng.next() % (d_od - 2));
        const int d_oc_pred = 2 + int(rng.next() % (d_od - 2));
        truths[id] = bar_mask(12, 32, 3, d_od, d_oc);
        preds[id] = bar_mask(12, 32, 3 + int(rng.next() % 3), d_od, d_oc_pred);
    }
    const SegSummary summary = evaluate_segmentation(preds, truths);

    double od = 0, oc = 0, err = 0;
    for (const auto& [id, truth] : truths) {
        const LabelMask& pred = preds.at(id);
        od += oracle::dice(oracle::label_region(pred, false), oracle::label_region(truth, false));
        oc += oracle::dice(oracle::label_region(pred, true), oracle::label_region(truth, true));
        err += std::abs(oracle::vcdr(pred) - oracle::vcdr(truth));
    }
    const double n = double(truths.size());
    CHECK(summary.mean_dice_od == Catch::Approx(od / n).epsilon(1e-12));
    CHECK(summary.mean_dice_oc == Catch::Approx(oc / n).epsilon(1e-12));
    CHECK(summary.mean_abs_error == Catch::Approx(err / n).epsilon(1e-12));
}

TEST_CASE("scores are invariant under swapping and joint translation") {
    SplitMix64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const int d_od = 6 + int(rng.next() % 8);
        const LabelMask t = bar_mask(12, 40, 4, d_od, 2 + int(rng.next() % (d_od - 2)));
        const LabelMask p = bar_mask(12, 40, 6, d_od, 2 + int(rng.next() % (d_od - 2)));

        const SegScore fwd = score_pair("x", p, t);
        const SegScore rev = score_pair("x", t, p);
        REQUIRE(fwd.abs_error == rev.abs_error);
        REQUIRE(fwd.dice_od == rev.dice_od);
        REQUIRE(fwd.dice_oc == rev.dice_oc);

        // translate both masks down by 3 rows
        const auto translate = [](const LabelMask& m, int dy) {
            LabelMask out(m.width, m.height, PixelLabel::Background);
            for (int y = 0; y + dy < m.height; ++y)
                for (int x = 0; x < m.width; ++x) out.set(x, y + dy, m.at(x, y));
            return out;
        };
        const SegScore moved = score_pair("x", translate(p, 3), translate(t, 3));
        REQUIRE(moved.dice_od == fwd.dice_od);
        REQUIRE(moved.dice_oc == fwd.dice_oc);
        REQUIRE(moved.vcdr_pred == fwd.vcdr_pred);
        REQUIRE(moved.vcdr_true == fwd.vcdr_true);
        REQUIRE(moved.abs_error == fwd.abs_error);
    }
}
