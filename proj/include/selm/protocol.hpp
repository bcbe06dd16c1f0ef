#pragma once

#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "selm/pipeline.hpp"

namespace selm {

/// Synthetic corpus used by the desk-scale benchmark.
inline SyntheticConfig benchmark_data_config() {
    SyntheticConfig c;
    c.identities_per_cohort = 60;
    c.poses_per_identity = 3;
    c.dim = 32;
    c.cohort_separation = 10.0;
    c.identity_spread = 3.0;
    c.pose_noise = 0.2;
    c.identity_rank = 4;
    c.nuisance = 2.0;
    return c;
}

inline std::vector<MethodSpec> benchmark_methods() {
    return {MethodSpec::distance(), MethodSpec::elm(), MethodSpec::selm(SiameseCondition::Sum),
            MethodSpec::selm(SiameseCondition::Dist), MethodSpec::selm(SiameseCondition::Mult),
            MethodSpec::selm(SiameseCondition::Mean)};
}

struct BenchConfig {
    SyntheticConfig data = benchmark_data_config();
    SplitSpec split;
    TripletConfig triplet = sphere_triplet_config();
    HyperGrid grid = HyperGrid::standard();
    std::vector<MethodSpec> methods = benchmark_methods();
    std::vector<double> sweep_pct{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
    std::vector<SiameseCondition> sweep_conditions{SiameseCondition::Sum, SiameseCondition::Dist};
    std::size_t runs = 10;
    std::uint64_t seed = 0;
};

/// Test-set accuracy and AUC for each cohort, in kAllCohorts order.
struct CohortMetrics {
    std::array<double, 6> accuracy{};
    std::array<double, 6> auc{};

    double mean_accuracy() const { return std::accumulate(accuracy.begin(), accuracy.end(), 0.0) / 6.0; }
    double mean_auc() const { return std::accumulate(auc.begin(), auc.end(), 0.0) / 6.0; }
};

struct BenchRun {
    std::uint64_t seed = 0;
    std::array<CohortMetrics, 3> scopes;  // distance baseline on SI, GD, GED features
    std::vector<CohortMetrics> methods;   // one per configured method, on GED features
    std::vector<std::vector<double>> sweep_selm;  // [condition][point]: SELM mean accuracy
    std::vector<double> sweep_welm;               // concatenated-input WELM mean accuracy per sweep point
};

/// Within-cohort pairs from one cohort's identities, embedded by that cohort's routed net.
struct CohortPairs {
    std::vector<PairSample> train;
    std::vector<PairSample> validation;
    std::vector<PairSample> test;
};

inline std::array<CohortPairs, 6> embedded_cohort_pairs(const DatasetSplit& split, const EmbedderRegistry& reg,
                                                        std::uint64_t seed) {
    std::array<CohortPairs, 6> out;
    for (const auto& c : kAllCohorts) {
        const auto in_cohort = [c](const Cohort& x) { return x == c; };
        const auto& net = reg.route(c);
        const auto ci = static_cast<std::uint64_t>(c.index());
        auto& cp = out[c.index()];
        cp.train = make_pairs(embed_dataset(net, filter_dataset(split.train, in_cohort)), {derive_seed(seed, "pairs:train", ci)});
        cp.validation =
            make_pairs(embed_dataset(net, filter_dataset(split.validation, in_cohort)), {derive_seed(seed, "pairs:validation", ci)});
        cp.test = make_pairs(embed_dataset(net, filter_dataset(split.test, in_cohort)), {derive_seed(seed, "pairs:test", ci)});
    }
    return out;
}

/// Tunes on validation pairs, then reports test accuracy at the calibrated threshold and test AUC.
inline std::pair<double, double> tuned_test_metrics(const MethodSpec& spec, const CohortPairs& cp, const HyperGrid& grid,
                                                    std::uint64_t seed) {
    const auto tuned = tune_verifier(spec, cp.train, cp.validation, grid, seed);
    const auto sp = score_pairs(tuned.model, cp.test);
    return {accuracy(sp, verifier_threshold(tuned.model)), roc_auc(sp)};
}

inline CohortMetrics evaluate_method(const MethodSpec& spec, const std::array<CohortPairs, 6>& pairs, const HyperGrid& grid,
                                     std::uint64_t seed) {
    CohortMetrics m;
    for (std::size_t c = 0; c < 6; ++c) {
        const auto [acc, auc] = tuned_test_metrics(spec, pairs[c], grid, derive_seed(seed, "verifier", c));
        m.accuracy[c] = acc;
        m.auc[c] = auc;
    }
    return m;
}

/// One seeded repetition: fresh corpus, split, embedders for all three scopes,
/// the method comparison on GED features and the hidden-node sweep.
inline BenchRun run_benchmark_once(const BenchConfig& cfg, std::size_t run) {
    BenchRun out;
    out.seed = derive_seed(cfg.seed, "run", run);
    SyntheticConfig data_cfg = cfg.data;
    data_cfg.seed = derive_seed(out.seed, "data");
    SplitSpec split_spec = cfg.split;
    split_spec.seed = derive_seed(out.seed, "split");
    const auto split = split_by_identity(generate_synthetic_cohorts(data_cfg), split_spec);

    TripletConfig tcfg = cfg.triplet;
    tcfg.seed = derive_seed(out.seed, "triplet");
    const std::array<FeatureScope, 3> scopes{FeatureScope::SI, FeatureScope::GD, FeatureScope::GED};
    std::array<CohortPairs, 6> ged_pairs;
    for (std::size_t s = 0; s < 3; ++s) {
        const auto reg = build_registry(split.train, scopes[s], tcfg);
        auto pairs = embedded_cohort_pairs(split, reg, derive_seed(out.seed, "pairs"));
        out.scopes[s] = evaluate_method(MethodSpec::distance(), pairs, cfg.grid, out.seed);
        if (scopes[s] == FeatureScope::GED) ged_pairs = std::move(pairs);
    }

    for (const auto& spec : cfg.methods) out.methods.push_back(evaluate_method(spec, ged_pairs, cfg.grid, out.seed));

    out.sweep_selm.resize(cfg.sweep_conditions.size());
    for (double pct : cfg.sweep_pct) {
        HyperGrid g = cfg.grid;
        g.hidden_pct = {pct};
        for (std::size_t k = 0; k < cfg.sweep_conditions.size(); ++k)
            out.sweep_selm[k].push_back(
                evaluate_method(MethodSpec::selm(cfg.sweep_conditions[k]), ged_pairs, g, out.seed).mean_accuracy());
        out.sweep_welm.push_back(evaluate_method(MethodSpec::welm_concat(), ged_pairs, g, out.seed).mean_accuracy());
    }
    return out;
}

struct BenchReport {
    std::vector<std::string> method_labels;
    std::vector<double> sweep_pct;
    std::vector<SiameseCondition> sweep_conditions;
    std::vector<BenchRun> runs;
    RankMatrix ranks;              // judges = runs x cohorts, candidates = methods, ranked by AUC
    std::vector<double> rank_sums;
    double kendall_w = 0.0;
    double chi_square = 0.0;
    double anova_f = std::numeric_limits<double>::quiet_NaN();  // across scopes on per-run mean AUC
    std::vector<std::vector<double>> sweep_t;  // [condition][point]: SELM vs WELM t, NaN when undefined
};

inline double nan_on_error(const auto& f) {
    try {
        return f();
    } catch (const InvalidArgument&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

inline BenchReport summarize_benchmark(std::vector<std::string> labels, std::vector<double> sweep_pct,
                                       std::vector<SiameseCondition> sweep_conditions, std::vector<BenchRun> runs) {
    BenchReport rep;
    rep.method_labels = std::move(labels);
    rep.sweep_pct = std::move(sweep_pct);
    rep.sweep_conditions = std::move(sweep_conditions);
    rep.runs = std::move(runs);
    const auto n_methods = static_cast<Eigen::Index>(rep.method_labels.size());
    rep.ranks.ranks.resize(static_cast<Eigen::Index>(rep.runs.size() * 6), n_methods);
    Eigen::Index row = 0;
    for (const auto& run : rep.runs)
        for (std::size_t c = 0; c < 6; ++c) {
            std::vector<double> aucs;
            for (const auto& m : run.methods) aucs.push_back(m.auc[c]);
            rep.ranks.ranks.row(row++) = rank_descending(aucs).transpose();
        }
    const Vector sums = rep.ranks.ranks.colwise().sum().transpose();
    rep.rank_sums.assign(sums.begin(), sums.end());
    if (n_methods >= 2 && row > 0) {
        rep.kendall_w = kendalls_w(rep.ranks);
        rep.chi_square = chi_square_from_w(rep.kendall_w, static_cast<std::size_t>(row), static_cast<std::size_t>(n_methods));
    }

    std::vector<std::vector<double>> groups(3);
    for (const auto& run : rep.runs)
        for (std::size_t s = 0; s < 3; ++s) groups[s].push_back(run.scopes[s].mean_auc());
    rep.anova_f = nan_on_error([&] { return selm::anova_f(groups); });

    rep.sweep_t.resize(rep.sweep_conditions.size());
    for (std::size_t k = 0; k < rep.sweep_conditions.size(); ++k)
        for (std::size_t p = 0; p < rep.sweep_pct.size(); ++p) {
            std::vector<double> a;
            std::vector<double> b;
            for (const auto& run : rep.runs) {
                a.push_back(run.sweep_selm[k][p]);
                b.push_back(run.sweep_welm[p]);
            }
            rep.sweep_t[k].push_back(nan_on_error([&] { return two_sample_t(a, b); }));
        }
    return rep;
}

inline BenchReport run_benchmark(const BenchConfig& cfg) {
    std::vector<std::string> labels;
    for (const auto& m : cfg.methods) labels.push_back(m.label());
    std::vector<BenchRun> runs;
    for (std::size_t r = 0; r < cfg.runs; ++r) runs.push_back(run_benchmark_once(cfg, r));
    return summarize_benchmark(std::move(labels), cfg.sweep_pct, cfg.sweep_conditions, std::move(runs));
}

namespace detail {

inline std::string mean_pm_std(std::span<const double> v) {
    const auto ms = mean_std(v);
    return format_number(ms.mean) + " +- " + format_number(ms.std);
}

inline void cohort_table(std::ostream& os, const std::string& title, const std::vector<std::string>& labels,
                         const std::vector<std::vector<CohortMetrics>>& per_run, bool use_auc) {
    os << "# " << title << "\nmodel";
    for (const auto& c : kAllCohorts) os << ',' << to_string(c);
    os << ",average\n";
    for (std::size_t m = 0; m < labels.size(); ++m) {
        os << labels[m];
        for (std::size_t c = 0; c <= 6; ++c) {
            std::vector<double> v;
            for (const auto& run : per_run) {
                const auto& cm = run[m];
                if (c == 6)
                    v.push_back(use_auc ? cm.mean_auc() : cm.mean_accuracy());
                else
                    v.push_back(use_auc ? cm.auc[c] : cm.accuracy[c]);
            }
            os << ',' << mean_pm_std(v);
        }
        os << '\n';
    }
    os << '\n';
}

}  // namespace detail

/// Plain-text report: comma-separated tables under "# " section titles.
inline std::string format_bench_report(const BenchReport& rep) {
    std::ostringstream os;
    os << "bench_version=1\nruns=" << rep.runs.size() << "\n\n";

    std::vector<std::vector<CohortMetrics>> scope_runs;
    std::vector<std::vector<CohortMetrics>> method_runs;
    for (const auto& run : rep.runs) {
        scope_runs.emplace_back(run.scopes.begin(), run.scopes.end());
        method_runs.push_back(run.methods);
    }
    const std::vector<std::string> scope_labels{"SI", "GD", "GED"};
    detail::cohort_table(os, "feature scopes: distance accuracy", scope_labels, scope_runs, false);
    detail::cohort_table(os, "feature scopes: distance auc", scope_labels, scope_runs, true);
    os << "anova_f=" << format_number(rep.anova_f) << "\n\n";

    detail::cohort_table(os, "methods on GED features: accuracy", rep.method_labels, method_runs, false);
    detail::cohort_table(os, "methods on GED features: auc", rep.method_labels, method_runs, true);

    os << "# auc rank sums\nmodel,rank_sum\n";
    for (std::size_t m = 0; m < rep.method_labels.size(); ++m)
        os << rep.method_labels[m] << ',' << format_number(rep.rank_sums[m]) << '\n';
    os << "\nkendall_w=" << format_number(rep.kendall_w) << "\njudges=" << rep.ranks.judges()
       << "\ncandidates=" << rep.ranks.candidates() << "\nchi_square=" << format_number(rep.chi_square) << "\n\n";

    os << "# hidden-node sweep: mean accuracy\nhidden_pct,welm";
    for (auto c : rep.sweep_conditions) os << ",selm-" << to_string(c) << ",t-" << to_string(c);
    os << '\n';
    for (std::size_t p = 0; p < rep.sweep_pct.size(); ++p) {
        std::vector<double> b;
        for (const auto& run : rep.runs) b.push_back(run.sweep_welm[p]);
        os << format_number(rep.sweep_pct[p]) << ',' << detail::mean_pm_std(b);
        for (std::size_t k = 0; k < rep.sweep_conditions.size(); ++k) {
            std::vector<double> a;
            for (const auto& run : rep.runs) a.push_back(run.sweep_selm[k][p]);
            os << ',' << detail::mean_pm_std(a) << ',' << format_number(rep.sweep_t[k][p]);
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace selm
