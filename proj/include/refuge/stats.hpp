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
// Nonparametric tests used by the benchmark analysis: Wilcoxon signed-rank,
// Wilcoxon rank-sum (Mann-Whitney), Kruskal-Wallis, paired DeLong AUC
// comparison and Bonferroni adjustment. Small samples switch to exact null
// distributions; approximations carry tie and continuity corrections.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "refuge/cls_metrics.hpp"
#include "refuge/errors.hpp"

namespace refuge {

enum class Alternative { TwoSided, Greater, Less };
enum class PValueMethod { Exact, NormalApprox, Chi2Approx };

inline const char* to_string(PValueMethod m) {
    switch (m) {
        case PValueMethod::Exact: return "exact";
        case PValueMethod::NormalApprox: return "normal_approx";
        default: return "chi2_approx";
    }
}

struct TestResult {
    double statistic = 0.0;
    double z_or_chi2 = 0.0;
    double p_value = 1.0;
    PValueMethod method = PValueMethod::Exact;
    std::size_t n_effective = 0;
    bool degenerate = false;  // vacuous input (all-zero diffs, zero variance, ...)
};

// Largest sample size for which exact null enumeration is used; 2^12 sign
// assignments / C(12,k) splits stay well under a millisecond.
constexpr std::size_t kExactLimit = 12;

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double clamp_p(double p) {
    return std::min(1.0, std::max(p, std::numeric_limits<double>::min()));
}

inline double chi2_survival(double x, double df) {
    if (x <= 0.0) return 1.0;
    return clamp_p(boost::math::gamma_q(df / 2.0, x / 2.0));
}

/// Midranks (1-based average ranks) of a sample, plus the tie-group sizes.
inline std::vector<double> midranks(const std::vector<double>& values,
                                    std::vector<std::size_t>* tie_sizes = nullptr) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && values[order[j]] == values[order[i]]) ++j;
        const double rank = double(i + 1 + j) / 2.0;
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
        if (tie_sizes && j - i > 1) tie_sizes->push_back(j - i);
        i = j;
    }
    return ranks;
}

inline double tie_sum_cubes(const std::vector<std::size_t>& tie_sizes) {
    double s = 0.0;
    for (std::size_t t : tie_sizes) s += double(t) * double(t) * double(t) - double(t);
    return s;
}

/// Picks p from a normal approximation of `stat` around `mean` with the
/// usual 0.5 continuity correction, writing the corrected z.
inline double normal_tail_p(double stat, double mean, double sigma, Alternative alt,
                            double* z_out) {
    const double d = stat - mean;
    double z = 0.0, p = 1.0;
    switch (alt) {
        case Alternative::Greater:
            z = (d - 0.5) / sigma;
            p = 1.0 - normal_cdf(z);
            break;
        case Alternative::Less:
            z = (d + 0.5) / sigma;
            p = normal_cdf(z);
            break;
        case Alternative::TwoSided: {
            const double shrunk = d == 0.0 ? 0.0 : d - (d > 0 ? 0.5 : -0.5);
            z = shrunk / sigma;
            p = 2.0 * std::min(normal_cdf(z), 1.0 - normal_cdf(z));
            break;
        }
    }
    *z_out = z;
    return clamp_p(p);
}

/// Exact tail p over a discrete null distribution given as (value, count)
/// support with total mass `total`.
inline double discrete_tail_p(const std::vector<std::pair<double, double>>& support,
                              double total, double observed, Alternative alt) {
    double le = 0.0, ge = 0.0;
    for (const auto& [v, c] : support) {
        if (v <= observed + 1e-9) le += c;
        if (v >= observed - 1e-9) ge += c;
    }
    switch (alt) {
        case Alternative::Greater: return clamp_p(ge / total);
        case Alternative::Less: return clamp_p(le / total);
        default: return clamp_p(std::min(1.0, 2.0 * std::min(le, ge) / total));
    }
}

}  // namespace detail

/// Paired Wilcoxon signed-rank test. Zero differences are dropped (recorded
/// in n_effective); |differences| are ranked with average-rank ties. Exact
/// sign-flip null when n_effective ≤ 12 and the |differences| are tie-free,
/// else a normal approximation with tie and continuity corrections. The
/// reported statistic is W = min(W+, W-).
inline TestResult wilcoxon_signed_rank(const std::vector<double>& x,
                                       const std::vector<double>& y,
                                       Alternative alt = Alternative::TwoSided) {
    if (x.size() != y.size())
        throw LengthMismatch("signed-rank test needs paired samples of equal length");
    if (x.empty()) throw EmptySample("signed-rank test: empty samples");

    std::vector<double> abs_diff;
    std::vector<int> sign;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        if (!std::isfinite(d)) throw NonFiniteValue("signed-rank test: non-finite difference");
        if (d != 0.0) {
            abs_diff.push_back(std::abs(d));
            sign.push_back(d > 0 ? 1 : -1);
        }
    }
    const std::size_t n = abs_diff.size();
    if (n == 0) {
        TestResult r;
        r.p_value = 1.0;
        r.method = PValueMethod::Exact;
        r.n_effective = 0;
        r.degenerate = true;
        return r;
    }

    std::vector<std::size_t> tie_sizes;
    const std::vector<double> ranks = detail::midranks(abs_diff, &tie_sizes);
    double w_plus = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (sign[i] > 0) w_plus += ranks[i];
    const double w_minus = double(n) * double(n + 1) / 2.0 - w_plus;

    TestResult r;
    r.statistic = std::min(w_plus, w_minus);
    r.n_effective = n;

    if (n <= kExactLimit && tie_sizes.empty()) {
        // subset-sum counts over integer ranks 1..n
        const std::size_t max_sum = n * (n + 1) / 2;
        std::vector<double> counts(max_sum + 1, 0.0);
        counts[0] = 1.0;
        for (std::size_t rank = 1; rank <= n; ++rank)
            for (std::size_t s = max_sum; s >= rank; --s) counts[s] += counts[s - rank];
        std::vector<std::pair<double, double>> support;
        support.reserve(counts.size());
        for (std::size_t s = 0; s < counts.size(); ++s)
            support.emplace_back(double(s), counts[s]);
        r.method = PValueMethod::Exact;
        r.p_value = detail::discrete_tail_p(support, std::pow(2.0, double(n)), w_plus, alt);
        const double mu = double(n) * double(n + 1) / 4.0;
        const double sigma = std::sqrt(double(n) * double(n + 1) * double(2 * n + 1) / 24.0);
        r.z_or_chi2 = (w_plus - mu) / sigma;
        return r;
    }

    const double mu = double(n) * double(n + 1) / 4.0;
    const double var = double(n) * double(n + 1) * double(2 * n + 1) / 24.0 -
                       detail::tie_sum_cubes(tie_sizes) / 48.0;
    r.method = PValueMethod::NormalApprox;
    if (var <= 0.0) {  // every |difference| tied into a single group of n
        r.z_or_chi2 = 0.0;
        r.p_value = 1.0;
        r.degenerate = true;
        return r;
    }
    r.p_value = detail::normal_tail_p(w_plus, mu, std::sqrt(var), alt, &r.z_or_chi2);
    return r;
}

/// Unpaired Wilcoxon rank-sum test. The statistic is the Mann-Whitney U of
/// the first sample, from joint average ranks. Exact permutation null when
/// |a| + |b| ≤ 12, else normal approximation with tie and continuity
/// corrections.
inline TestResult rank_sum(const std::vector<double>& a, const std::vector<double>& b,
                           Alternative alt = Alternative::TwoSided) {
    if (a.empty() || b.empty()) throw EmptySample("rank-sum test: empty sample");
    const std::size_t na = a.size(), nb = b.size(), n = na + nb;

    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    for (double v : pooled)
        if (!std::isfinite(v)) throw NonFiniteValue("rank-sum test: non-finite value");
    std::vector<std::size_t> tie_sizes;
    const std::vector<double> ranks = detail::midranks(pooled, &tie_sizes);

    double rank_sum_a = 0.0;
    for (std::size_t i = 0; i < na; ++i) rank_sum_a += ranks[i];
    const double u = rank_sum_a - double(na) * double(na + 1) / 2.0;

    TestResult r;
    r.statistic = u;
    r.n_effective = n;

    if (n <= kExactLimit) {
        // all C(n, na) group assignments of the pooled ranks
        std::vector<std::pair<double, double>> support;
        for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
            if (std::popcount(bits) != int(na)) continue;
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (bits & (1u << i)) s += ranks[i];
            support.emplace_back(s - double(na) * double(na + 1) / 2.0, 1.0);
        }
        r.method = PValueMethod::Exact;
        r.p_value = detail::discrete_tail_p(support, double(support.size()), u, alt);
        const double mu = double(na) * double(nb) / 2.0;
        const double sigma0 =
            std::sqrt(double(na) * double(nb) * double(n + 1) / 12.0);
        r.z_or_chi2 = sigma0 > 0.0 ? (u - mu) / sigma0 : 0.0;
        return r;
    }

    const double mu = double(na) * double(nb) / 2.0;
    const double var = double(na) * double(nb) / 12.0 *
                       (double(n + 1) - detail::tie_sum_cubes(tie_sizes) /
                                            (double(n) * double(n - 1)));
    r.method = PValueMethod::NormalApprox;
    if (var <= 0.0) {  // all pooled values identical
        r.z_or_chi2 = 0.0;
        r.p_value = 1.0;
        r.degenerate = true;
        return r;
    }
    r.p_value = detail::normal_tail_p(u, mu, std::sqrt(var), alt, &r.z_or_chi2);
    return r;
}

/// Kruskal-Wallis H over joint average ranks with tie correction; p from the
/// chi-squared distribution with k-1 degrees of freedom. All values tied
/// degenerates to H = 0, p = 1.
inline TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw TooFewGroups("kruskal_wallis needs at least 2 groups");
    for (const auto& g : groups)
        if (g.empty()) throw EmptyGroup("kruskal_wallis: empty group");

    std::vector<double> pooled;
    for (const auto& g : groups) pooled.insert(pooled.end(), g.begin(), g.end());
    for (double v : pooled)
        if (!std::isfinite(v)) throw NonFiniteValue("kruskal_wallis: non-finite value");
    const std::size_t n = pooled.size();
    std::vector<std::size_t> tie_sizes;
    const std::vector<double> ranks = detail::midranks(pooled, &tie_sizes);

    double h = 0.0;
    std::size_t offset = 0;
    for (const auto& g : groups) {
        double rank_sum_g = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) rank_sum_g += ranks[offset + i];
        offset += g.size();
        h += rank_sum_g * rank_sum_g / double(g.size());
    }
    h = 12.0 / (double(n) * double(n + 1)) * h - 3.0 * double(n + 1);

    const double correction =
        1.0 - detail::tie_sum_cubes(tie_sizes) /
                  (double(n) * double(n) * double(n) - double(n));

    TestResult r;
    r.n_effective = n;
    r.method = PValueMethod::Chi2Approx;
    if (correction <= 0.0) {  // every pooled value equal
        r.statistic = 0.0;
        r.z_or_chi2 = 0.0;
        r.p_value = 1.0;
        r.degenerate = true;
        return r;
    }
    h /= correction;
    if (h < 0.0 && h > -1e-12) h = 0.0;  // round-off guard
    r.statistic = h;
    r.z_or_chi2 = h;
    r.p_value = detail::chi2_survival(h, double(groups.size() - 1));
    return r;
}

struct DelongResult {
    TestResult test;
    double auc_a = 0.0;
    double auc_b = 0.0;
};

/// Paired DeLong comparison of two AUCs measured on the same cases. AUCs come
/// from the Mann-Whitney kernel; the variance of their difference from the
/// positive- and negative-class structural components. statistic = AUC_a -
/// AUC_b; two-sided p from the normal distribution. Zero estimated variance
/// (identical or both-perfect classifiers) flags the result with z = 0, p = 1.
inline DelongResult delong_test(const ScoreTable& scores_a, const ScoreTable& scores_b) {
    std::map<std::string, std::pair<double, bool>> a_by_id;
    for (const auto& e : scores_a.entries) {
        if (!a_by_id.emplace(e.image_id, std::make_pair(e.likelihood, e.glaucoma)).second)
            throw DuplicateId("duplicate image id: " + e.image_id);
    }
    if (scores_b.entries.size() != a_by_id.size())
        throw IdMismatch("delong_test: score tables cover different image id sets");

    // paired case lists, positives then negatives, keyed by the b-table order
    std::vector<std::pair<double, double>> pos, neg;
    std::map<std::string, bool> seen;
    for (const auto& e : scores_b.entries) {
        auto it = a_by_id.find(e.image_id);
        if (it == a_by_id.end())
            throw IdMismatch("delong_test: image " + e.image_id + " missing from first table");
        if (!seen.emplace(e.image_id, true).second)
            throw DuplicateId("duplicate image id: " + e.image_id);
        if (it->second.second != e.glaucoma)
            throw LabelConflict("label disagreement for image " + e.image_id);
        if (!std::isfinite(it->second.first) || !std::isfinite(e.likelihood))
            throw NonFiniteValue("delong_test: non-finite likelihood for image " + e.image_id);
        (e.glaucoma ? pos : neg).emplace_back(it->second.first, e.likelihood);
    }
    const std::size_t m = pos.size(), n = neg.size();
    if (m == 0 || n == 0)
        throw DegenerateLabels("delong_test needs at least one positive and one negative");

    const auto kernel = [](double x, double y) {
        return x > y ? 1.0 : (x < y ? 0.0 : 0.5);
    };

    // structural components per case, one per classifier
    std::vector<double> v10_a(m, 0.0), v10_b(m, 0.0), v01_a(n, 0.0), v01_b(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double ka = kernel(pos[i].first, neg[j].first);
            const double kb = kernel(pos[i].second, neg[j].second);
            v10_a[i] += ka;
            v10_b[i] += kb;
            v01_a[j] += ka;
            v01_b[j] += kb;
        }
    }
    for (std::size_t i = 0; i < m; ++i) { v10_a[i] /= double(n); v10_b[i] /= double(n); }
    for (std::size_t j = 0; j < n; ++j) { v01_a[j] /= double(m); v01_b[j] /= double(m); }

    DelongResult out;
    out.auc_a = std::accumulate(v10_a.begin(), v10_a.end(), 0.0) / double(m);
    out.auc_b = std::accumulate(v10_b.begin(), v10_b.end(), 0.0) / double(m);

    const auto covariance = [](const std::vector<double>& u, const std::vector<double>& v,
                               double mu_u, double mu_v) {
        if (u.size() < 2) return 0.0;
        double s = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) s += (u[i] - mu_u) * (v[i] - mu_v);
        return s / double(u.size() - 1);
    };
    const double s10_aa = covariance(v10_a, v10_a, out.auc_a, out.auc_a);
    const double s10_bb = covariance(v10_b, v10_b, out.auc_b, out.auc_b);
    const double s10_ab = covariance(v10_a, v10_b, out.auc_a, out.auc_b);
    const double s01_aa = covariance(v01_a, v01_a, out.auc_a, out.auc_a);
    const double s01_bb = covariance(v01_b, v01_b, out.auc_b, out.auc_b);
    const double s01_ab = covariance(v01_a, v01_b, out.auc_a, out.auc_b);

    const double var_a = s10_aa / double(m) + s01_aa / double(n);
    const double var_b = s10_bb / double(m) + s01_bb / double(n);
    const double cov_ab = s10_ab / double(m) + s01_ab / double(n);
    const double var_diff = var_a + var_b - 2.0 * cov_ab;

    out.test.statistic = out.auc_a - out.auc_b;
    out.test.method = PValueMethod::NormalApprox;
    out.test.n_effective = m + n;
    if (var_diff <= 0.0) {
        out.test.z_or_chi2 = 0.0;
        out.test.p_value = 1.0;
        out.test.degenerate = true;
        return out;
    }
    const double z = (out.auc_a - out.auc_b) / std::sqrt(var_diff);
    out.test.z_or_chi2 = z;
    out.test.p_value = detail::clamp_p(2.0 * (1.0 - detail::normal_cdf(std::abs(z))));
    return out;
}

/// Bonferroni-adjusted significance level for m comparisons.
inline double bonferroni(double alpha, std::size_t m) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("bonferroni: alpha must lie in (0, 1)");
    if (m < 1) throw Error("bonferroni: m must be at least 1");
    return alpha / double(m);
}

}  // namespace refuge
