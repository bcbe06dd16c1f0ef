#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "selm/core_types.hpp"

namespace selm {

struct ScoredPairs {
    std::vector<double> scores;
    std::vector<PairLabel> labels;

    std::size_t size() const noexcept { return scores.size(); }

    void push_back(double score, PairLabel label) {
        scores.push_back(score);
        labels.push_back(label);
    }
};

namespace detail {

struct ClassTotals {
    std::int64_t genuine = 0;
    std::int64_t impostor = 0;
};

inline ClassTotals check_scored(const ScoredPairs& sp, const char* what, bool need_both = true) {
    if (sp.scores.size() != sp.labels.size())
        throw DimensionError(std::string(what) + ": scores and labels differ in length");
    ClassTotals t;
    for (std::size_t i = 0; i < sp.size(); ++i) {
        if (std::isnan(sp.scores[i]))
            throw InvalidArgument(std::string(what) + ": NaN score");
        (sp.labels[i] == PairLabel::Genuine ? t.genuine : t.impostor) += 1;
    }
    if (need_both && (t.genuine == 0 || t.impostor == 0))
        throw InvalidArgument(std::string(what) + ": both genuine and impostor pairs are required");
    return t;
}

inline std::vector<std::size_t> sorted_order(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    return idx;
}

}  // namespace detail

/// P(genuine score > impostor score) with ties credited 1/2, via one sort
/// and a sweep over tie groups. Counts stay in integers until the final division.
inline double roc_auc(const ScoredPairs& sp) {
    const auto totals = detail::check_scored(sp, "roc_auc");
    const auto order = detail::sorted_order(sp.scores);
    std::int64_t twice_u = 0;
    std::int64_t impostors_below = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        std::int64_t g = 0;
        std::int64_t n = 0;
        while (j < order.size() && sp.scores[order[j]] == sp.scores[order[i]]) {
            (sp.labels[order[j]] == PairLabel::Genuine ? g : n) += 1;
            ++j;
        }
        twice_u += 2 * g * impostors_below + g * n;
        impostors_below += n;
        i = j;
    }
    return static_cast<double>(twice_u) / (2.0 * static_cast<double>(totals.genuine) * static_cast<double>(totals.impostor));
}

struct ErrorRates {
    double far;  // impostor scores >= theta
    double frr;  // genuine scores < theta
};

inline ErrorRates far_frr(const ScoredPairs& sp, double theta) {
    const auto totals = detail::check_scored(sp, "far_frr");
    std::int64_t fa = 0;
    std::int64_t fr = 0;
    for (std::size_t i = 0; i < sp.size(); ++i) {
        if (sp.labels[i] == PairLabel::Impostor && sp.scores[i] >= theta) ++fa;
        if (sp.labels[i] == PairLabel::Genuine && sp.scores[i] < theta) ++fr;
    }
    return {static_cast<double>(fa) / static_cast<double>(totals.impostor),
            static_cast<double>(fr) / static_cast<double>(totals.genuine)};
}

struct EerPoint {
    double theta;
    double eer;
    double far;
    double frr;
};

/// All thresholds the EER sweep considers: -inf, midpoints between adjacent
/// distinct scores, +inf. Each candidate splits the sorted scores differently.
inline std::vector<double> eer_candidates(const ScoredPairs& sp) {
    std::vector<double> s = sp.scores;
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    std::vector<double> c{-std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        double mid = s[i] + (s[i + 1] - s[i]) / 2.0;
        if (!(mid > s[i]) || !std::isfinite(mid)) mid = s[i + 1];
        c.push_back(mid);
    }
    c.push_back(std::numeric_limits<double>::infinity());
    return c;
}

/// Discrete EER calibration: the candidate minimizing |FAR - FRR|, ties broken
/// by smaller FAR + FRR and then by smaller theta. Comparisons use exact integer
/// cross-multiplication so the chosen threshold is reproducible bit-for-bit.
inline EerPoint eer_threshold(const ScoredPairs& sp) {
    const auto totals = detail::check_scored(sp, "eer_threshold");
    const auto candidates = eer_candidates(sp);
    const auto order = detail::sorted_order(sp.scores);

    // Start at -inf: everything accepted.
    std::int64_t fa = totals.impostor;
    std::int64_t fr = 0;
    std::size_t cursor = 0;
    const std::int64_t np = totals.genuine;
    const std::int64_t nn = totals.impostor;

    bool have = false;
    std::int64_t best_gap = 0;
    std::int64_t best_sum = 0;
    double best_theta = 0.0;
    std::int64_t best_fa = 0;
    std::int64_t best_fr = 0;
    for (double theta : candidates) {
        while (cursor < order.size() && sp.scores[order[cursor]] < theta) {
            if (sp.labels[order[cursor]] == PairLabel::Genuine) ++fr;  // now rejected
            else --fa;
            ++cursor;
        }
        // FAR = fa/nn, FRR = fr/np; scale both by nn*np.
        const std::int64_t gap = std::llabs(fa * np - fr * nn);
        const std::int64_t sum = fa * np + fr * nn;
        if (!have || gap < best_gap || (gap == best_gap && sum < best_sum)) {
            have = true;
            best_gap = gap;
            best_sum = sum;
            best_theta = theta;
            best_fa = fa;
            best_fr = fr;
        }
    }
    const double far = static_cast<double>(best_fa) / static_cast<double>(nn);
    const double frr = static_cast<double>(best_fr) / static_cast<double>(np);
    return {best_theta, (far + frr) / 2.0, far, frr};
}

/// Fraction of pairs where (score >= theta) agrees with the genuine label.
inline double accuracy(const ScoredPairs& sp, double theta) {
    detail::check_scored(sp, "accuracy", false);
    if (sp.size() == 0) throw InvalidArgument("accuracy: no pairs");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < sp.size(); ++i)
        if ((sp.scores[i] >= theta) == (sp.labels[i] == PairLabel::Genuine)) ++correct;
    return static_cast<double>(correct) / static_cast<double>(sp.size());
}

/// k judges (rows) ranking N candidates (columns); ties carry averaged ranks.
struct RankMatrix {
    Matrix ranks;

    Eigen::Index judges() const noexcept { return ranks.rows(); }
    Eigen::Index candidates() const noexcept { return ranks.cols(); }
};

/// Ranks 1..N with 1 for the largest value; tied values share their mean rank.
inline Vector rank_descending(std::span<const double> values) {
    const auto n = values.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    Vector r(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && values[idx[j]] == values[idx[i]]) ++j;
        const double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) r[static_cast<Eigen::Index>(idx[k])] = mean_rank;
        i = j;
    }
    return r;
}

/// Kendall's coefficient of concordance from column-average ranks:
/// W = (12 sum(Rbar_i^2) - 3 N (N+1)^2) / (N (N^2 - 1)), clamped to [0, 1]
/// against rounding at the ends of the range.
inline double kendalls_w(const RankMatrix& rm) {
    const double N = static_cast<double>(rm.candidates());
    if (rm.candidates() < 2) throw InvalidArgument("kendalls_w: need N >= 2 candidates");
    if (rm.judges() < 1) throw InvalidArgument("kendalls_w: need k >= 1 judges");
    const Vector mean_ranks = rm.ranks.colwise().mean().transpose();
    const double w = (12.0 * mean_ranks.squaredNorm() - 3.0 * N * (N + 1.0) * (N + 1.0)) / (N * (N * N - 1.0));
    return std::clamp(w, 0.0, 1.0);
}

/// Chi-square statistic for concordance: k (N - 1) W.
inline double chi_square_from_w(double w, std::size_t k, std::size_t n) {
    return static_cast<double>(k) * (static_cast<double>(n) - 1.0) * w;
}

/// One-way ANOVA F = (SS_between / (g - 1)) / (SS_within / (n - g)).
inline double anova_f(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw InvalidArgument("anova_f: need at least two groups");
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& g : groups) {
        if (g.size() < 2) throw InvalidArgument("anova_f: every group needs at least two observations");
        total += std::accumulate(g.begin(), g.end(), 0.0);
        n += g.size();
    }
    const double grand = total / static_cast<double>(n);
    double ss_between = 0.0;
    double ss_within = 0.0;
    for (const auto& g : groups) {
        const double m = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
        ss_between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
        for (double x : g) ss_within += (x - m) * (x - m);
    }
    if (!(ss_within > 0.0)) throw InvalidArgument("anova_f: zero within-group variance, F undefined");
    const double df_between = static_cast<double>(groups.size() - 1);
    const double df_within = static_cast<double>(n - groups.size());
    return (ss_between / df_between) / (ss_within / df_within);
}

/// Pooled-variance two-sample t statistic, positive when mean(a) > mean(b).
inline double two_sample_t(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw InvalidArgument("two_sample_t: both samples need at least two values");
    auto mean = [](std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); };
    auto ss = [](std::span<const double> v, double m) {
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return s;
    };
    const double ma = mean(a);
    const double mb = mean(b);
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double pooled = (ss(a, ma) + ss(b, mb)) / (na + nb - 2.0);
    if (!(pooled > 0.0)) throw InvalidArgument("two_sample_t: zero pooled variance");
    return (ma - mb) / std::sqrt(pooled * (1.0 / na + 1.0 / nb));
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation (n - 1); 0 for a single value
};

inline MeanStd mean_std(std::span<const double> v) {
    if (v.empty()) return {};
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() < 2) return {m, 0.0};
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return {m, std::sqrt(s / static_cast<double>(v.size() - 1))};
}

/// Shortest decimal that round-trips; "inf"/"-inf" for infinities.
inline std::string format_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

struct MetricRow {
    std::string label;
    double accuracy = 0.0;
    double auc = 0.0;
    double far = 0.0;
    double frr = 0.0;
    double eer = 0.0;
    double theta = 0.0;
    std::size_t pairs = 0;
};

/// Accuracy/FAR/FRR at the model's threshold; AUC and EER are threshold-free.
inline MetricRow metric_row(std::string label, const ScoredPairs& sp, double theta) {
    const auto rates = far_frr(sp, theta);
    return {std::move(label), accuracy(sp, theta), roc_auc(sp), rates.far, rates.frr, eer_threshold(sp).eer, theta,
            sp.size()};
}

struct EvalReport {
    std::vector<MetricRow> cohorts;  // one row per cohort present in the test set
    MetricRow average;               // mean of the cohort rows
    MetricRow pooled;                // all pairs together, mixed-cohort pairs included
    std::vector<std::string> warnings;
};

/// Buckets pairs by cohort (both members in the same cohort) and scores each bucket.
inline EvalReport evaluate_by_cohort(std::span<const PairSample> pairs, std::span<const double> scores, double theta) {
    if (pairs.size() != scores.size()) throw DimensionError("evaluate_by_cohort: pairs and scores differ in length");
    std::array<ScoredPairs, 6> buckets;
    ScoredPairs all;
    std::size_t mixed = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        all.push_back(scores[i], pairs[i].label);
        if (!pairs[i].source) continue;
        const auto& src = *pairs[i].source;
        if (src.a.cohort == src.b.cohort) buckets[src.a.cohort.index()].push_back(scores[i], pairs[i].label);
        else ++mixed;
    }
    EvalReport rep;
    for (const auto& c : kAllCohorts) {
        const auto& b = buckets[c.index()];
        const bool has_g = std::find(b.labels.begin(), b.labels.end(), PairLabel::Genuine) != b.labels.end();
        const bool has_i = std::find(b.labels.begin(), b.labels.end(), PairLabel::Impostor) != b.labels.end();
        if (!has_g || !has_i) {
            rep.warnings.push_back("cohort " + to_string(c) + " absent or single-class in test set; omitted");
            continue;
        }
        rep.cohorts.push_back(metric_row(to_string(c), b, theta));
    }
    if (mixed > 0) rep.warnings.push_back(std::to_string(mixed) + " mixed-cohort pairs counted only in the pooled row");
    rep.average.label = "average";
    rep.average.theta = theta;
    if (!rep.cohorts.empty()) {
        const double k = static_cast<double>(rep.cohorts.size());
        for (const auto& r : rep.cohorts) {
            rep.average.accuracy += r.accuracy;
            rep.average.auc += r.auc;
            rep.average.far += r.far;
            rep.average.frr += r.frr;
            rep.average.eer += r.eer;
            rep.average.pairs += r.pairs;
        }
        rep.average.accuracy /= k;
        rep.average.auc /= k;
        rep.average.far /= k;
        rep.average.frr /= k;
        rep.average.eer /= k;
    }
    rep.pooled = metric_row("pooled", all, theta);
    return rep;
}

inline constexpr const char* kReportCsvHeader = "cohort,accuracy,auc,far,frr,eer,theta,pairs";

inline std::string csv_row(const MetricRow& r) {
    return r.label + "," + format_number(r.accuracy) + "," + format_number(r.auc) + "," + format_number(r.far) + "," +
           format_number(r.frr) + "," + format_number(r.eer) + "," + format_number(r.theta) + "," +
           std::to_string(r.pairs);
}

inline std::string to_csv(const EvalReport& rep) {
    std::ostringstream os;
    os << kReportCsvHeader << '\n';
    for (const auto& r : rep.cohorts) os << csv_row(r) << '\n';
    os << csv_row(rep.average) << '\n' << csv_row(rep.pooled) << '\n';
    return os.str();
}

/// Flat `key=value` block, one metric per line, keyed `<row>.<metric>`.
inline std::string to_key_value(const EvalReport& rep) {
    std::ostringstream os;
    os << "report_version=1\n";
    auto emit = [&](const MetricRow& r) {
        os << r.label << ".accuracy=" << format_number(r.accuracy) << '\n'
           << r.label << ".auc=" << format_number(r.auc) << '\n'
           << r.label << ".far=" << format_number(r.far) << '\n'
           << r.label << ".frr=" << format_number(r.frr) << '\n'
           << r.label << ".eer=" << format_number(r.eer) << '\n'
           << r.label << ".theta=" << format_number(r.theta) << '\n'
           << r.label << ".pairs=" << r.pairs << '\n';
    };
    for (const auto& r : rep.cohorts) emit(r);
    emit(rep.average);
    emit(rep.pooled);
    for (const auto& w : rep.warnings) os << "warning=" << w << '\n';
    return os.str();
}

}  // namespace selm
