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

#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "refuge/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Benchmark evaluation toolkit for optic disc/cup segmentation "
                 "and glaucoma classification submissions"};
    app.require_subcommand(1);

    // eval-seg
    std::string seg_pred, seg_gt, seg_out, seg_manifest;
    bool strict_masks = false;
    auto* eval_seg = app.add_subcommand(
        "eval-seg", "Score prediction masks against ground-truth masks");
    eval_seg->add_option("pred_dir", seg_pred, "Directory of predicted BMP masks")->required();
    eval_seg->add_option("gt_dir", seg_gt, "Directory of ground-truth BMP masks")->required();
    eval_seg->add_option("out", seg_out, "Output CSV path")->required();
    eval_seg->add_option("--manifest", seg_manifest, "Manifest JSON overriding the pairing");
    eval_seg->add_flag("--strict-masks", strict_masks,
                       "Reject masks with gray values outside {0,128,255}");

    // eval-class
    std::string cls_scores, cls_labels, cls_out, cls_svg;
    double cls_sp = 0.85;
    auto* eval_class = app.add_subcommand(
        "eval-class", "Score a glaucoma likelihood table against reference labels");
    eval_class->add_option("scores_csv", cls_scores, "CSV: image_id,likelihood")->required();
    eval_class->add_option("labels_csv", cls_labels, "CSV: image_id,label")->required();
    eval_class->add_option("out", cls_out, "Output CSV path")->required();
    eval_class->add_option("--svg", cls_svg, "Also plot the ROC curve to this SVG file");
    eval_class->add_option("--specificity", cls_sp,
                           "Specificity at which sensitivity is reported");

    // rank
    std::string rank_metrics, rank_out, rank_weights = "table5";
    auto* rank = app.add_subcommand("rank", "Build a leaderboard from per-team metric means");
    rank->add_option("metrics_csv", rank_metrics,
                     "CSV: team_id,mean_dice_od,mean_dice_oc,mean_abs_error[,auc]")
        ->required();
    rank->add_option("out", rank_out, "Output CSV path (a .json twin is written too)")
        ->required();
    rank->add_option("--weights", rank_weights, "eq3, table5 or w_od,w_oc,w_mae");

    // ensemble
    std::vector<std::string> ens_inputs;
    std::string ens_mode, ens_out;
    double ens_threshold = 0.5;
    auto* ensemble = app.add_subcommand(
        "ensemble", "Fuse team submissions by mask voting or score averaging");
    ensemble->add_option("--mode", ens_mode, "masks or scores")->required();
    ensemble->add_option("--out", ens_out, "Output directory (masks) or CSV (scores)")
        ->required();
    ensemble->add_option("inputs", ens_inputs, "Mask directories or score CSVs")->required();
    ensemble->add_option("--threshold", ens_threshold,
                         "Vote fraction a region must strictly exceed");
    ensemble->add_flag("--strict-masks", strict_masks,
                       "Reject masks with gray values outside {0,128,255}");

    // stats
    std::string stats_request, stats_out;
    auto* stats = app.add_subcommand("stats", "Run hypothesis tests from a request file");
    stats->add_option("request", stats_request, "JSON test-request file")->required();
    stats->add_option("--out", stats_out, "Output CSV (overrides the request's 'out')");

    // synth
    std::string synth_config, synth_out;
    std::optional<std::uint64_t> synth_seed;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic evaluation cohort");
    synth->add_option("--config", synth_config, "JSON config (defaults used when omitted)");
    synth->add_option("out_dir", synth_out, "Output cohort directory")->required();
    synth->add_option("--seed", synth_seed, "Override the config seed");

    CLI11_PARSE(app, argc, argv);

    if (eval_seg->parsed())
        return refuge::cmd_eval_seg(seg_pred, seg_gt, seg_out, strict_masks, seg_manifest);
    if (eval_class->parsed())
        return refuge::cmd_eval_class(cls_scores, cls_labels, cls_out, cls_svg, cls_sp);
    if (rank->parsed()) return refuge::cmd_rank(rank_metrics, rank_weights, rank_out);
    if (ensemble->parsed())
        return refuge::cmd_ensemble(ens_inputs, ens_mode, ens_out, ens_threshold, strict_masks);
    if (stats->parsed()) return refuge::cmd_stats(stats_request, stats_out);
    if (synth->parsed()) return refuge::cmd_synth(synth_config, synth_out, synth_seed);
    return 1;
}
