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
// Batch front end. Every command is a plain function returning the process
// exit code (0 success, 2 validation failure, 1 internal error) so the test
// suites can drive them without spawning processes. All outputs are
// schema-versioned and byte-deterministic for fixed inputs.

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "refuge/bmp.hpp"
#include "refuge/cls_metrics.hpp"
#include "refuge/csv.hpp"
#include "refuge/ensemble.hpp"
#include "refuge/errors.hpp"
#include "refuge/mask.hpp"
#include "refuge/ranking.hpp"
#include "refuge/seg_metrics.hpp"
#include "refuge/stats.hpp"
#include "refuge/synth.hpp"

namespace refuge {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// shared plumbing

namespace detail {

template <typename Fn>
int run_command(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 1;
    }
}

inline std::vector<std::string> bmp_stems(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
    std::vector<std::string> stems;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        if (entry.path().extension() == ".bmp" || entry.path().extension() == ".BMP")
            stems.push_back(entry.path().stem().string());
    }
    std::sort(stems.begin(), stems.end());
    return stems;
}

inline int report_problems(const std::vector<std::string>& problems, std::ostream& err) {
    for (const std::string& p : problems) err << "error: " << p << "\n";
    return problems.empty() ? 0 : 2;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// cohort manifest

struct ManifestImage {
    std::string image_id;
    std::string mask;  // path relative to the manifest's directory
    int label = 0;
};

struct CohortManifest {
    std::string format_version = "1";
    std::vector<ManifestImage> images;
};

inline CohortManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw SchemaError("manifest " + path + ": " + e.what());
    }
    CohortManifest m;
    m.format_version = j.value("format_version", "1");
    if (!j.contains("images") || !j["images"].is_array())
        throw SchemaError("manifest " + path + ": missing 'images' array");
    std::set<std::string> seen;
    for (const auto& entry : j["images"]) {
        ManifestImage img;
        img.image_id = entry.at("image_id").get<std::string>();
        img.mask = entry.at("mask").get<std::string>();
        img.label = entry.value("label", 0);
        if (img.label != 0 && img.label != 1)
            throw SchemaError("manifest " + path + ": label must be 0 or 1 for " + img.image_id);
        if (!seen.insert(img.image_id).second)
            throw DuplicateId("manifest " + path + ": duplicate image id " + img.image_id);
        m.images.push_back(std::move(img));
    }
    return m;
}

// ---------------------------------------------------------------------------
// eval-seg

inline int cmd_eval_seg(const std::string& pred_dir, const std::string& gt_dir,
                        const std::string& out_path, bool strict_masks = false,
                        const std::string& manifest_path = "",
                        std::ostream& err = std::cerr) {
    return detail::run_command(err, [&] {
        const DecodeMode mode = strict_masks ? DecodeMode::Strict : DecodeMode::Lenient;

        // (image_id, filename) pairs; same filename looked up in both dirs
        std::vector<std::pair<std::string, std::string>> items;
        if (!manifest_path.empty()) {
            for (const ManifestImage& m : load_manifest(manifest_path).images)
                items.emplace_back(m.image_id, m.mask);
        } else {
            for (const std::string& stem : detail::bmp_stems(gt_dir))
                items.emplace_back(stem, stem + ".bmp");
        }
        if (items.empty()) throw IoError("no ground-truth masks found in " + gt_dir);
        std::sort(items.begin(), items.end());

        std::vector<std::string> problems;
        std::vector<std::string> warnings;
        std::vector<SegScore> scores;
        for (const auto& [id, file] : items) {
            const fs::path gt_path = fs::path(gt_dir) / file;
            const fs::path pred_path = fs::path(pred_dir) / file;
            if (!fs::exists(pred_path)) {
                problems.push_back("missing prediction for image " + id + " (" +
                                   pred_path.string() + ")");
                continue;
            }
            try {
                const LabelMask truth = load_mask(gt_path.string(), mode);
                const LabelMask pred = load_mask(pred_path.string(), mode);
                scores.push_back(score_pair(id, pred, truth,
                                            DiscRegionRule::CupAndDiscLabels, &warnings));
            } catch (const Error& e) {
                problems.push_back("image " + id + ": " + e.what());
            }
        }
        if (!problems.empty()) return detail::report_problems(problems, err);
        for (const std::string& w : warnings) err << "warning: " << w << "\n";

        double sum_od = 0, sum_oc = 0, sum_pred = 0, sum_true = 0, sum_err = 0;
        for (const SegScore& s : scores) {
            sum_od += s.dice_od;
            sum_oc += s.dice_oc;
            sum_pred += s.vcdr_pred;
            sum_true += s.vcdr_true;
            sum_err += s.abs_error;
        }
        const double n = double(scores.size());

        CsvWriter out(out_path);
        out.comment("schema: eval-seg/1");
        out.row({"image_id", "dice_od", "dice_oc", "vcdr_pred", "vcdr_true", "abs_error"});
        for (const SegScore& s : scores)
            out.row({s.image_id, format_double(s.dice_od), format_double(s.dice_oc),
                     format_double(s.vcdr_pred), format_double(s.vcdr_true),
                     format_double(s.abs_error)});
        out.row({"mean", format_double(sum_od / n), format_double(sum_oc / n),
                 format_double(sum_pred / n), format_double(sum_true / n),
                 format_double(sum_err / n)});
        out.close();
        return 0;
    });
}

// ---------------------------------------------------------------------------
// eval-class

namespace detail {

inline std::map<std::string, double> load_scores_csv(const std::string& path) {
    const CsvTable t = read_csv_file(path);
    expect_header(t, {"image_id", "likelihood"}, path);
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const std::string context = path + " line " + std::to_string(t.row_numbers[i]);
        const double v = parse_double(t.rows[i][1], context);
        if (!out.emplace(t.rows[i][0], v).second)
            throw SchemaError(context + ": duplicate image id " + t.rows[i][0]);
    }
    if (out.empty()) throw SchemaError(path + ": no score rows");
    return out;
}

inline std::map<std::string, int> load_labels_csv(const std::string& path) {
    const CsvTable t = read_csv_file(path);
    expect_header(t, {"image_id", "label"}, path);
    std::map<std::string, int> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const std::string context = path + " line " + std::to_string(t.row_numbers[i]);
        const long v = parse_long(t.rows[i][1], context);
        if (v != 0 && v != 1) throw SchemaError(context + ": label must be 0 or 1");
        if (!out.emplace(t.rows[i][0], int(v)).second)
            throw SchemaError(context + ": duplicate image id " + t.rows[i][0]);
    }
    if (out.empty()) throw SchemaError(path + ": no label rows");
    return out;
}

inline ScoreTable join_scores_labels(const std::map<std::string, double>& scores,
                                     const std::map<std::string, int>& labels) {
    std::string diff;
    for (const auto& [id, v] : scores)
        if (!labels.count(id)) diff += diff.empty() ? id : ", " + id;
    for (const auto& [id, v] : labels)
        if (!scores.count(id)) diff += diff.empty() ? id : ", " + id;
    if (!diff.empty()) throw IdMismatch("score/label image id sets differ: " + diff);
    ScoreTable t;
    for (const auto& [id, v] : scores) t.entries.push_back({id, v, labels.at(id) != 0});
    return t;
}

inline void write_roc_svg(const RocCurve& curve, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path);
    const double margin = 56.0, span = 384.0;
    const auto X = [&](double fpr) { return margin + fpr * span; };
    const auto Y = [&](double tpr) { return margin + (1.0 - tpr) * span; };
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"496\" height=\"496\" "
           "viewBox=\"0 0 496 496\">\n";
    out << "  <rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << span
        << "\" height=\"" << span << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = 0.25 * i;
        out << "  <line x1=\"" << X(v) << "\" y1=\"" << Y(0) << "\" x2=\"" << X(v)
            << "\" y2=\"" << Y(0) + 6 << "\" stroke=\"black\"/>\n";
        out << "  <text x=\"" << X(v) << "\" y=\"" << Y(0) + 22
            << "\" font-size=\"12\" text-anchor=\"middle\">" << format_double(v)
            << "</text>\n";
        out << "  <line x1=\"" << X(0) - 6 << "\" y1=\"" << Y(v) << "\" x2=\"" << X(0)
            << "\" y2=\"" << Y(v) << "\" stroke=\"black\"/>\n";
        out << "  <text x=\"" << X(0) - 10 << "\" y=\"" << Y(v) + 4
            << "\" font-size=\"12\" text-anchor=\"end\">" << format_double(v) << "</text>\n";
    }
    out << "  <line x1=\"" << X(0) << "\" y1=\"" << Y(0) << "\" x2=\"" << X(1) << "\" y2=\""
        << Y(1) << "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
    out << "  <polyline fill=\"none\" stroke=\"crimson\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        if (i) out << ' ';
        out << format_double(X(curve.points[i].fpr)) << ','
            << format_double(Y(curve.points[i].tpr));
    }
    out << "\"/>\n";
    out << "  <text x=\"" << X(0.5) << "\" y=\"" << Y(0) + 40
        << "\" font-size=\"14\" text-anchor=\"middle\">false positive rate</text>\n";
    out << "  <text x=\"16\" y=\"" << Y(0.5)
        << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << format_double(Y(0.5)) << ")\">true positive rate</text>\n";
    out << "</svg>\n";
    if (!out) throw IoError("short write on file: " + path);
}

}  // namespace detail

inline int cmd_eval_class(const std::string& scores_csv, const std::string& labels_csv,
                          const std::string& out_path, const std::string& svg_path = "",
                          double specificity = 0.85, std::ostream& err = std::cerr) {
    return detail::run_command(err, [&] {
        const ScoreTable table = detail::join_scores_labels(
            detail::load_scores_csv(scores_csv), detail::load_labels_csv(labels_csv));
        const RocCurve curve = roc_curve(table);
        const double se = sensitivity_at_specificity(curve, specificity);

        CsvWriter out(out_path);
        out.comment("schema: eval-class/1");
        out.row({"metric", "value"});
        out.row({"auc", format_double(curve.auc)});
        out.row({"se_at_sp", format_double(se)});
        out.row({"specificity_target", format_double(specificity)});
        out.row({"n_images", std::to_string(table.entries.size())});
        out.close();

        fs::path roc_path(out_path);
        roc_path.replace_extension();
        roc_path += "_roc.csv";
        CsvWriter roc(roc_path.string());
        roc.comment("schema: roc-points/1");
        roc.row({"fpr", "tpr", "threshold"});
        for (const RocPoint& p : curve.points)
            roc.row({format_double(p.fpr), format_double(p.tpr), format_double(p.threshold)});
        roc.close();

        if (!svg_path.empty()) detail::write_roc_svg(curve, svg_path);
        return 0;
    });
}

// ---------------------------------------------------------------------------
// rank

inline SegRankWeights parse_weights(const std::string& spec, std::string* preset_name) {
    if (spec.empty() || spec == "table5") {
        *preset_name = "table5";
        return kTable5Weights;
    }
    if (spec == "eq3") {
        *preset_name = "eq3";
        return kEq3Weights;
    }
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string part;
    while (std::getline(ss, part, ',')) parts.push_back(part);
    if (parts.size() != 3)
        throw BadWeights("--weights must be eq3, table5 or w_od,w_oc,w_mae");
    SegRankWeights w;
    w.od = parse_double(parts[0], "--weights");
    w.oc = parse_double(parts[1], "--weights");
    w.mae = parse_double(parts[2], "--weights");
    check_weights(w);
    *preset_name = "custom";
    return w;
}

namespace detail {

inline MetricTable load_metrics_csv(const std::string& path) {
    const CsvTable t = read_csv_file(path);
    expect_header(t, {"team_id", "mean_dice_od", "mean_dice_oc", "mean_abs_error", "auc"},
                  path, 4);
    const bool has_auc = t.header.size() == 5;
    MetricTable table;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const std::string context = path + " line " + std::to_string(t.row_numbers[i]);
        MetricRow row;
        row.team_id = t.rows[i][0];
        const auto cell = [&](std::size_t col) -> std::optional<double> {
            if (t.rows[i][col].empty()) return std::nullopt;
            return parse_double(t.rows[i][col], context);
        };
        row.mean_dice_od = cell(1);
        row.mean_dice_oc = cell(2);
        row.mean_abs_error = cell(3);
        if (has_auc) row.auc = cell(4);
        table.rows.push_back(std::move(row));
    }
    return table;
}

inline std::string opt_field(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

}  // namespace detail

inline const char* kEq3DiscrepancyNote =
    "weights follow the printed scoring formula; the published leaderboard "
    "scores correspond to preset table5 (od/oc weights swapped)";

inline int cmd_rank(const std::string& metrics_csv, const std::string& weights_spec,
                    const std::string& out_path, std::ostream& err = std::cerr) {
    return detail::run_command(err, [&] {
        std::string preset;
        const SegRankWeights weights = parse_weights(weights_spec, &preset);
        const MetricTable table = detail::load_metrics_csv(metrics_csv);
        const Leaderboard board = build_leaderboard(table, weights, preset);

        CsvWriter out(out_path);
        out.comment("schema: leaderboard/1");
        out.comment("preset: " + preset);
        if (preset == "eq3") out.comment(std::string("note: ") + kEq3DiscrepancyNote);
        out.row({"position", "team_id", "mean_dice_od", "mean_dice_oc", "mean_abs_error",
                 "rank_dice_od", "rank_dice_oc", "rank_mae", "s_segm", "auc", "rank_class",
                 "rank_segm", "s_val"});
        for (const LeaderboardRow& r : board.rows)
            out.row({std::to_string(r.position), r.team_id, format_double(r.mean_dice_od),
                     format_double(r.mean_dice_oc), format_double(r.mean_abs_error),
                     format_double(r.rank_dice_od), format_double(r.rank_dice_oc),
                     format_double(r.rank_mae), format_double(r.s_segm),
                     detail::opt_field(r.auc), detail::opt_field(r.rank_class),
                     detail::opt_field(r.rank_segm), detail::opt_field(r.s_val)});
        out.close();

        json j;
        j["format_version"] = "1";
        j["preset"] = preset;
        j["weights"] = {{"od", board.weights.od}, {"oc", board.weights.oc},
                        {"mae", board.weights.mae}};
        j["tie_break"] = kLeaderboardTieBreak;
        if (preset == "eq3") {
            j["weights_discrepancy"] = true;
            j["note"] = kEq3DiscrepancyNote;
        }
        j["teams"] = json::array();
        for (const LeaderboardRow& r : board.rows) {
            json row;
            row["position"] = r.position;
            row["team_id"] = r.team_id;
            row["mean_dice_od"] = r.mean_dice_od;
            row["mean_dice_oc"] = r.mean_dice_oc;
            row["mean_abs_error"] = r.mean_abs_error;
            row["rank_dice_od"] = r.rank_dice_od;
            row["rank_dice_oc"] = r.rank_dice_oc;
            row["rank_mae"] = r.rank_mae;
            row["s_segm"] = r.s_segm;
            if (r.auc) row["auc"] = *r.auc;
            if (r.rank_class) row["rank_class"] = *r.rank_class;
            if (r.rank_segm) row["rank_segm"] = *r.rank_segm;
            if (r.s_val) row["s_val"] = *r.s_val;
            j["teams"].push_back(row);
        }
        fs::path json_path(out_path);
        json_path.replace_extension(".json");
        std::ofstream jout(json_path, std::ios::trunc);
        if (!jout) throw IoError("cannot write file: " + json_path.string());
        jout << j.dump(2) << "\n";
        return 0;
    });
}

// ---------------------------------------------------------------------------
// ensemble

inline int cmd_ensemble(const std::vector<std::string>& inputs, const std::string& mode,
                        const std::string& out_path, double threshold_fraction = 0.5,
                        bool strict_masks = false, std::ostream& err = std::cerr) {
    return detail::run_command(err, [&] {
        if (inputs.size() < 2)
            throw TooFewMasks("ensemble needs at least 2 inputs, got " +
                              std::to_string(inputs.size()));
        if (mode == "masks") {
            const DecodeMode decode = strict_masks ? DecodeMode::Strict : DecodeMode::Lenient;
            const std::vector<std::string> stems = detail::bmp_stems(inputs.front());
            if (stems.empty()) throw IoError("no masks found in " + inputs.front());
            std::vector<std::string> problems;
            for (std::size_t k = 1; k < inputs.size(); ++k) {
                const std::vector<std::string> other = detail::bmp_stems(inputs[k]);
                if (other != stems)
                    problems.push_back("mask sets differ between " + inputs.front() +
                                       " and " + inputs[k]);
            }
            if (!problems.empty()) return detail::report_problems(problems, err);

            fs::create_directories(out_path);
            const VoteConfig cfg{threshold_fraction};
            for (const std::string& stem : stems) {
                std::vector<LabelMask> masks;
                masks.reserve(inputs.size());
                for (const std::string& dir : inputs)
                    masks.push_back(load_mask((fs::path(dir) / (stem + ".bmp")).string(), decode));
                save_mask(majority_vote(masks, cfg),
                          (fs::path(out_path) / (stem + ".bmp")).string());
            }
            return 0;
        }
        if (mode == "scores") {
            std::vector<ScoreTable> normalized;
            for (const std::string& path : inputs) {
                ScoreTable t;
                const CsvTable raw = read_csv_file(path);
                expect_header(raw, {"image_id", "likelihood"}, path);
                std::set<std::string> seen;
                for (std::size_t i = 0; i < raw.rows.size(); ++i) {
                    const std::string context =
                        path + " line " + std::to_string(raw.row_numbers[i]);
                    if (!seen.insert(raw.rows[i][0]).second)
                        throw SchemaError(context + ": duplicate image id " + raw.rows[i][0]);
                    t.entries.push_back(
                        {raw.rows[i][0], parse_double(raw.rows[i][1], context), false});
                }
                const NormalizedScores norm = normalize_scores(t);
                if (norm.constant_input)
                    err << "warning: " << path
                        << ": constant likelihoods, normalized to 0.5\n";
                normalized.push_back(norm.table);
            }
            const ScoreTable fused = average_scores(normalized);
            CsvWriter out(out_path);
            out.comment("schema: scores/1");
            out.row({"image_id", "likelihood"});
            for (const ScoreEntry& e : fused.entries)
                out.row({e.image_id, format_double(e.likelihood)});
            out.close();
            return 0;
        }
        throw Error("ensemble mode must be 'masks' or 'scores'");
    });
}

// ---------------------------------------------------------------------------
// stats

namespace detail {

inline std::vector<double> csv_column(const CsvTable& t, const std::string& column,
                                      const std::string& path) {
    const auto it = std::find(t.header.begin(), t.header.end(), column);
    if (it == t.header.end())
        throw SchemaError(path + ": no column named '" + column + "'");
    const std::size_t idx = std::size_t(it - t.header.begin());
    std::vector<double> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const std::string& cell = t.rows[i][idx];
        if (cell.empty()) continue;  // ragged columns carry empty tails
        out.push_back(
            parse_double(cell, path + " line " + std::to_string(t.row_numbers[i])));
    }
    return out;
}

inline Alternative parse_alternative(const std::string& s) {
    if (s == "two_sided" || s.empty()) return Alternative::TwoSided;
    if (s == "greater") return Alternative::Greater;
    if (s == "less") return Alternative::Less;
    throw SchemaError("unknown alternative '" + s + "'");
}

}  // namespace detail

inline int cmd_stats(const std::string& request_path, const std::string& out_override = "",
                     std::ostream& err = std::cerr) {
    return detail::run_command(err, [&] {
        std::ifstream in(request_path);
        if (!in) throw IoError("cannot open stats request: " + request_path);
        json req;
        try {
            req = json::parse(in);
        } catch (const json::exception& e) {
            throw SchemaError("stats request " + request_path + ": " + e.what());
        }
        const std::string out_path =
            !out_override.empty() ? out_override : req.value("out", "");
        if (out_path.empty())
            throw SchemaError("stats request: no output path ('out' field or --out)");
        if (!req.contains("tests") || !req["tests"].is_array() || req["tests"].empty())
            throw SchemaError("stats request: 'tests' must be a non-empty array");

        const fs::path base = fs::path(request_path).parent_path();
        const auto resolve = [&](const std::string& p) {
            return fs::path(p).is_absolute() ? p : (base / p).string();
        };

        CsvWriter out(out_path);
        out.comment("schema: stats/1");
        out.row({"test", "statistic", "z_or_chi2", "p_value", "method", "n_effective",
                 "degenerate", "alpha", "bonferroni_m", "adjusted_alpha", "significant",
                 "auc_a", "auc_b"});
        for (const json& spec : req["tests"]) {
            const std::string name = spec.value("test", "");
            const std::string data_path = resolve(spec.value("data", ""));
            const CsvTable data = read_csv_file(data_path);
            const Alternative alt =
                detail::parse_alternative(spec.value("alternative", "two_sided"));
            const double alpha = spec.value("alpha", 0.05);
            const std::size_t m = spec.value("bonferroni_m", std::size_t{1});
            const double adjusted = bonferroni(alpha, m);

            TestResult r;
            std::string auc_a_field, auc_b_field;
            if (name == "wilcoxon_signed_rank") {
                r = wilcoxon_signed_rank(
                    detail::csv_column(data, spec.at("x").get<std::string>(), data_path),
                    detail::csv_column(data, spec.at("y").get<std::string>(), data_path), alt);
            } else if (name == "rank_sum") {
                r = rank_sum(
                    detail::csv_column(data, spec.at("a").get<std::string>(), data_path),
                    detail::csv_column(data, spec.at("b").get<std::string>(), data_path), alt);
            } else if (name == "kruskal_wallis") {
                std::vector<std::vector<double>> groups;
                for (const json& col : spec.at("groups"))
                    groups.push_back(
                        detail::csv_column(data, col.get<std::string>(), data_path));
                r = kruskal_wallis(groups);
            } else if (name == "delong") {
                const auto ids = [&](const std::string& col) {
                    const auto it = std::find(data.header.begin(), data.header.end(), col);
                    if (it == data.header.end())
                        throw SchemaError(data_path + ": no column named '" + col + "'");
                    return std::size_t(it - data.header.begin());
                };
                const std::size_t id_col = ids(spec.value("id", "image_id"));
                const std::size_t label_col = ids(spec.value("label", "label"));
                const std::size_t a_col = ids(spec.at("scores_a").get<std::string>());
                const std::size_t b_col = ids(spec.at("scores_b").get<std::string>());
                ScoreTable ta, tb;
                for (std::size_t i = 0; i < data.rows.size(); ++i) {
                    const std::string context =
                        data_path + " line " + std::to_string(data.row_numbers[i]);
                    const long label = parse_long(data.rows[i][label_col], context);
                    if (label != 0 && label != 1)
                        throw SchemaError(context + ": label must be 0 or 1");
                    ta.entries.push_back({data.rows[i][id_col],
                                          parse_double(data.rows[i][a_col], context),
                                          label != 0});
                    tb.entries.push_back({data.rows[i][id_col],
                                          parse_double(data.rows[i][b_col], context),
                                          label != 0});
                }
                const DelongResult d = delong_test(ta, tb);
                r = d.test;
                auc_a_field = format_double(d.auc_a);
                auc_b_field = format_double(d.auc_b);
            } else {
                throw SchemaError("unknown test name '" + name + "'");
            }

            out.row({name, format_double(r.statistic), format_double(r.z_or_chi2),
                     format_double(r.p_value), to_string(r.method),
                     std::to_string(r.n_effective), r.degenerate ? "1" : "0",
                     format_double(alpha), std::to_string(m), format_double(adjusted),
                     r.p_value < adjusted ? "1" : "0", auc_a_field, auc_b_field});
        }
        out.close();
        return 0;
    });
}

// ---------------------------------------------------------------------------
// synth

inline SynthConfig parse_synth_config(const json& j) {
    SynthConfig cfg;
    cfg.n_images = j.value("n_images", cfg.n_images);
    cfg.width = j.value("width", cfg.width);
    cfg.height = j.value("height", cfg.height);
    cfg.prevalence = j.value("prevalence", cfg.prevalence);
    cfg.exact_stratification = j.value("exact_stratification", cfg.exact_stratification);
    if (j.contains("disc_semi_axis_range")) {
        cfg.disc_semi_min = j["disc_semi_axis_range"].at(0).get<double>();
        cfg.disc_semi_max = j["disc_semi_axis_range"].at(1).get<double>();
    }
    if (j.contains("tilt_range")) {
        cfg.tilt_min = j["tilt_range"].at(0).get<double>();
        cfg.tilt_max = j["tilt_range"].at(1).get<double>();
    }
    if (j.contains("vcdr_range_glaucoma")) {
        cfg.vcdr_glaucoma_lo = j["vcdr_range_glaucoma"].at(0).get<double>();
        cfg.vcdr_glaucoma_hi = j["vcdr_range_glaucoma"].at(1).get<double>();
    }
    if (j.contains("vcdr_range_normal")) {
        cfg.vcdr_normal_lo = j["vcdr_range_normal"].at(0).get<double>();
        cfg.vcdr_normal_hi = j["vcdr_range_normal"].at(1).get<double>();
    }
    cfg.score_noise = j.value("score_noise", cfg.score_noise);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("teams")) {
        cfg.teams.clear();
        for (const json& t : j["teams"]) {
            TeamSpec team;
            team.name = t.at("name").get<std::string>();
            team.noise.center_sigma = t.value("center_sigma", 0.0);
            team.noise.axis_sigma = t.value("axis_sigma", 0.0);
            team.noise.tilt_sigma = t.value("tilt_sigma", 0.0);
            team.score_separation = t.value("score_separation", 4.0);
            cfg.teams.push_back(std::move(team));
        }
    }
    return cfg;
}

inline int cmd_synth(const std::string& config_path, const std::string& out_dir,
                     std::optional<std::uint64_t> seed_override = std::nullopt,
                     std::ostream& err = std::cerr) {
    return detail::run_command(err, [&] {
        json j = json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw IoError("cannot open synth config: " + config_path);
            try {
                j = json::parse(in);
            } catch (const json::exception& e) {
                throw SchemaError("synth config " + config_path + ": " + e.what());
            }
        }
        SynthConfig cfg = parse_synth_config(j);
        if (seed_override) cfg.seed = *seed_override;

        const SynthCohort cohort = generate_ground_truth(cfg);
        SplitMix64 master(cfg.seed);

        fs::create_directories(fs::path(out_dir) / "gt");
        fs::create_directories(fs::path(out_dir) / "scores");
        for (const TeamSpec& team : cfg.teams)
            fs::create_directories(fs::path(out_dir) / "teams" / team.name);

        // one image at a time keeps memory flat for large cohorts
        std::vector<std::pair<std::string, bool>> labels;
        for (std::size_t i = 0; i < cohort.images.size(); ++i) {
            const SynthImage& img = cohort.images[i];
            labels.emplace_back(img.id, img.glaucoma);
            save_mask(render_truth_mask(img, cfg),
                      (fs::path(out_dir) / "gt" / (img.id + ".bmp")).string());
            for (std::size_t t = 0; t < cfg.teams.size(); ++t) {
                SplitMix64 rng =
                    master.fork(detail::kStreamPrediction + (std::uint64_t(t) << 32) + i);
                save_mask(perturb_prediction(img.disc, img.cup, cfg.teams[t].noise, rng,
                                             cfg.width, cfg.height),
                          (fs::path(out_dir) / "teams" / cfg.teams[t].name /
                           (img.id + ".bmp"))
                              .string());
            }
        }

        CsvWriter labels_out((fs::path(out_dir) / "labels.csv").string());
        labels_out.comment("schema: labels/1");
        labels_out.row({"image_id", "label"});
        for (const auto& [id, glaucoma] : labels)
            labels_out.row({id, glaucoma ? "1" : "0"});
        labels_out.close();

        for (std::size_t t = 0; t < cfg.teams.size(); ++t) {
            SplitMix64 rng = master.fork(detail::kStreamScores + t);
            const ScoreTable scores = generate_classifier_scores(
                labels, cfg.teams[t].score_separation, rng, cfg.score_noise);
            CsvWriter sout(
                (fs::path(out_dir) / "scores" / (cfg.teams[t].name + ".csv")).string());
            sout.comment("schema: scores/1");
            sout.row({"image_id", "likelihood"});
            for (const ScoreEntry& e : scores.entries)
                sout.row({e.image_id, format_double(e.likelihood)});
            sout.close();
        }

        CsvWriter vout((fs::path(out_dir) / "scores" / "true_vcdr.csv").string());
        vout.comment("schema: scores/1");
        vout.row({"image_id", "likelihood"});
        for (const SynthImage& img : cohort.images)
            vout.row({img.id, format_double(img.vcdr_true)});
        vout.close();

        json manifest;
        manifest["format_version"] = "1";
        manifest["width"] = cfg.width;
        manifest["height"] = cfg.height;
        manifest["seed"] = cfg.seed;
        manifest["images"] = json::array();
        for (const SynthImage& img : cohort.images)
            manifest["images"].push_back({{"image_id", img.id},
                                          {"mask", "gt/" + img.id + ".bmp"},
                                          {"label", img.glaucoma ? 1 : 0}});
        std::ofstream mout(fs::path(out_dir) / "manifest.json", std::ios::trunc);
        if (!mout) throw IoError("cannot write manifest");
        mout << manifest.dump(2) << "\n";
        return 0;
    });
}

}  // namespace refuge
