#pragma once

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "selm/selm.hpp"

namespace selm::cli {

/// Exit codes: 0 success (or genuine), 1 impostor, 2 usage or data error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitImpostor = 1;
inline constexpr int kExitError = 2;

struct GridFlags {
    int c_min = -6;
    int c_max = 6;
    std::vector<double> pct{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
    int gamma_min = -6;
    int gamma_max = 6;

    HyperGrid grid() const {
        HyperGrid g;
        g.C = HyperGrid::decades(c_min, c_max);
        g.hidden_pct = pct;
        g.rbf_gamma = HyperGrid::decades(gamma_min, gamma_max);
        return g;
    }

    void add(CLI::App* app, bool with_gamma) {
        app->add_option("--c-min", c_min, "smallest C exponent (C = 10^e)");
        app->add_option("--c-max", c_max, "largest C exponent");
        app->add_option("--pct", pct, "hidden-node percentages")->delimiter(',');
        if (with_gamma) {
            app->add_option("--gamma-min", gamma_min, "smallest rbf gamma exponent");
            app->add_option("--gamma-max", gamma_max, "largest rbf gamma exponent");
        }
    }
};

struct MethodFlags {
    std::string method = "selm";
    std::string condition = "sum";
    std::string kernel;

    MethodSpec spec() const {
        const auto m = parse_method(method);
        if (!m) throw InvalidArgument("unknown method '" + method + "' (selm, elm, welm, distance)");
        const auto c = parse_condition(condition);
        if (!c) throw InvalidArgument("unknown condition '" + condition + "' (sum, dist, mult, mean)");
        MethodSpec s{*m, *c, *m == Method::Elm ? KernelSpec::sigmoid() : KernelSpec::euclidean()};
        if (!kernel.empty()) {
            const auto k = parse_kernel_kind(kernel);
            if (!k) throw InvalidArgument("unknown kernel '" + kernel + "'");
            s.kernel.kind = *k;
        }
        if (*m == Method::Elm && s.kernel.is_similarity())
            throw InvalidArgument("elm needs the sigmoid or rbf kernel");
        if ((*m == Method::Selm || *m == Method::WelmConcat) && !s.kernel.is_similarity())
            throw InvalidArgument(method + " needs the cosine or euclidean kernel");
        return s;
    }

    void add(CLI::App* app) {
        app->add_option("--method", method, "selm, elm, welm (concatenated input) or distance");
        app->add_option("--condition", condition, "siamese condition: sum, dist, mult, mean");
        app->add_option("--kernel", kernel, "sigmoid, rbf, cosine or euclidean");
    }
};

inline void write_text(const std::string& path, const std::string& text, std::ostream& fallback) {
    if (path.empty() || path == "-") {
        fallback << text;
        return;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open '" + path + "' for writing");
    os << text;
    if (!os) throw Error("cannot write '" + path + "'");
}

inline SavedModel to_saved(const PairVerifier& v) {
    return std::visit([](const auto& m) -> SavedModel { return m; }, v);
}

inline PairVerifier load_verifier(const std::string& path) {
    const auto m = load_model(path);
    auto v = as_verifier(m);
    if (!v) throw InvalidArgument("'" + path + "' does not hold a pair verifier");
    return *v;
}

/// Locates `id` or `id:pose` in a dataset.
inline const Vector& find_row(const Dataset& data, const std::string& ref, Cohort* cohort) {
    std::string id = ref;
    std::size_t pose = 0;
    if (const auto colon = ref.rfind(':'); colon != std::string::npos) {
        id = ref.substr(0, colon);
        pose = static_cast<std::size_t>(std::stoul(ref.substr(colon + 1)));
    }
    for (const auto& rec : data)
        if (rec.identity_id == id) {
            if (pose >= rec.poses.size()) throw InvalidArgument("identity '" + id + "' has no pose " + std::to_string(pose));
            *cohort = rec.cohort;
            return rec.poses[pose];
        }
    throw InvalidArgument("identity '" + id + "' not found");
}

/// One metric row per run (the cohort average), then mean and std rows.
inline std::string repeat_csv(const std::vector<std::uint64_t>& seeds, const std::vector<MetricRow>& rows) {
    std::ostringstream os;
    os << "run,seed,accuracy,auc,far,frr,eer,theta\n";
    for (std::size_t r = 0; r < rows.size(); ++r)
        os << r << ',' << seeds[r] << ',' << format_number(rows[r].accuracy) << ',' << format_number(rows[r].auc) << ','
           << format_number(rows[r].far) << ',' << format_number(rows[r].frr) << ',' << format_number(rows[r].eer) << ','
           << format_number(rows[r].theta) << '\n';
    auto column = [&](double MetricRow::*field) {
        std::vector<double> v;
        for (const auto& r : rows) v.push_back(r.*field);
        return mean_std(v);
    };
    const std::array<double MetricRow::*, 6> fields{&MetricRow::accuracy, &MetricRow::auc, &MetricRow::far,
                                                    &MetricRow::frr,      &MetricRow::eer, &MetricRow::theta};
    os << "mean,";
    for (auto f : fields) os << ',' << format_number(column(f).mean);
    os << "\nstd,";
    for (auto f : fields) os << ',' << format_number(column(f).std);
    os << '\n';
    return os.str();
}

/// Parses and runs one command line. Errors are reported on `err` with exit code 2.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Siamese extreme learning machine verification toolkit", "selm"};
    app.require_subcommand(1);
    app.fallthrough();
    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "master seed for every random substream")->capture_default_str();

    // generate
    auto* gen = app.add_subcommand("generate", "write a synthetic six-cohort embeddings file");
    SyntheticConfig syn;
    std::string gen_out;
    gen->add_option("--identities", syn.identities_per_cohort, "identities per cohort")->capture_default_str();
    gen->add_option("--poses", syn.poses_per_identity, "poses per identity")->capture_default_str();
    gen->add_option("--dim", syn.dim, "embedding dimension")->capture_default_str();
    gen->add_option("--separation", syn.cohort_separation, "cohort centre scale")->capture_default_str();
    gen->add_option("--spread", syn.identity_spread, "identity spread")->capture_default_str();
    gen->add_option("--noise", syn.pose_noise, "pose noise")->capture_default_str();
    gen->add_option("--rank", syn.identity_rank, "identity subspace rank (0 = full)")->capture_default_str();
    gen->add_option("--nuisance", syn.nuisance, "pose variation along other cohorts' identity directions");
    gen->add_option("-o,--out", gen_out, "output embeddings file")->required();

    // split
    auto* split = app.add_subcommand("split", "split an embeddings file by identity into train/validation/test");
    std::string split_in;
    std::string split_prefix;
    SplitSpec split_spec;
    split->add_option("-i,--in", split_in, "embeddings file")->required();
    split->add_option("--prefix", split_prefix, "writes <prefix>.train.txt, .validation.txt, .test.txt")->required();
    split->add_option("--train", split_spec.train)->capture_default_str();
    split->add_option("--validation", split_spec.validation)->capture_default_str();
    split->add_option("--test", split_spec.test)->capture_default_str();

    // pairs
    auto* pairs = app.add_subcommand("pairs", "build genuine/impostor pairs from an embeddings file");
    std::string pairs_in;
    std::string pairs_out;
    double negative_ratio = 1.0;
    bool any_cohort = false;
    pairs->add_option("-i,--in", pairs_in, "embeddings file")->required();
    pairs->add_option("-o,--out", pairs_out, "output pairs file")->required();
    pairs->add_option("--negative-ratio", negative_ratio, "impostor pairs per genuine pair")->capture_default_str();
    pairs->add_flag("--any-cohort", any_cohort, "draw impostor partners from any cohort instead of the same one");

    // train
    auto* train = app.add_subcommand("train", "grid-search a pair verifier and write the best model");
    std::string train_pairs;
    std::string val_pairs;
    std::string model_out;
    std::string log_out;
    MethodFlags train_method;
    GridFlags train_grid;
    train->add_option("--train", train_pairs, "training pairs file")->required();
    train->add_option("--validation", val_pairs, "validation pairs file")->required();
    train->add_option("--model", model_out, "output model file")->required();
    train->add_option("--log", log_out, "tuning log CSV (default: stdout)");
    train_method.add(train);
    train_grid.add(train, true);

    // eval
    auto* eval = app.add_subcommand("eval", "per-cohort report for a model on test pairs");
    std::string eval_model;
    std::string eval_test;
    std::string eval_out;
    std::string eval_format = "txt";
    std::size_t eval_runs = 0;
    bool eval_fixed_seed = false;
    std::string eval_train;
    std::string eval_val;
    MethodFlags eval_method;
    GridFlags eval_grid;
    eval->add_option("--model", eval_model, "model file (single-run mode)");
    eval->add_option("--test", eval_test, "test pairs file")->required();
    eval->add_option("-o,--out", eval_out, "report file (default: stdout)");
    eval->add_option("--format", eval_format, "txt (key=value) or csv")->check(CLI::IsMember({"txt", "csv"}));
    eval->add_option("--runs", eval_runs, "repeat mode: retrain N times from --train/--validation and report mean/std");
    eval->add_flag("--fixed-seed", eval_fixed_seed, "repeat mode: reuse --seed for every run");
    eval->add_option("--train", eval_train, "repeat mode: training pairs file");
    eval->add_option("--validation", eval_val, "repeat mode: validation pairs file");
    eval_method.add(eval);
    eval_grid.add(eval, true);

    // bench
    auto* bench = app.add_subcommand("bench", "desk-scale benchmark protocol on synthetic cohorts");
    BenchConfig bench_cfg;
    std::string bench_out;
    bench->add_option("--runs", bench_cfg.runs, "repetitions")->capture_default_str();
    bench->add_option("--identities", bench_cfg.data.identities_per_cohort, "identities per cohort")->capture_default_str();
    bench->add_option("--epochs", bench_cfg.triplet.epochs, "triplet epochs")->capture_default_str();
    bench->add_option("-o,--out", bench_out, "report file (default: stdout)");

    // framework
    auto* fwcmd = app.add_subcommand("framework", "train the cohort-routed verification framework from embeddings files");
    std::string fw_train;
    std::string fw_val;
    std::string fw_out;
    std::string fw_scope = "GED";
    std::string fw_condition = "dist";
    FrameworkConfig fw_cfg;
    fwcmd->add_option("--train", fw_train, "training embeddings file")->required();
    fwcmd->add_option("--validation", fw_val, "validation embeddings file")->required();
    fwcmd->add_option("--model", fw_out, "output framework file")->required();
    fwcmd->add_option("--scope", fw_scope, "SI, GD or GED")->capture_default_str();
    fwcmd->add_option("--condition", fw_condition, "siamese condition of the verifiers")->capture_default_str();
    fwcmd->add_option("--epochs", fw_cfg.triplet.epochs, "triplet epochs")->capture_default_str();

    // verify
    auto* ver = app.add_subcommand("verify", "verify two embedding rows with a framework or pair-verifier model");
    std::string ver_model;
    std::string ver_input;
    std::string ver_a;
    std::string ver_b;
    ver->add_option("--model", ver_model, "framework or verifier model file")->required();
    ver->add_option("-i,--input", ver_input, "embeddings file holding the two rows")->required();
    ver->add_option("--a", ver_a, "first row as id or id:pose")->required();
    ver->add_option("--b", ver_b, "second row as id or id:pose")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }

    try {
        if (gen->parsed()) {
            syn.seed = derive_seed(seed, "data");
            save_embeddings(generate_synthetic_cohorts(syn), gen_out);
            return kExitOk;
        }
        if (split->parsed()) {
            split_spec.seed = derive_seed(seed, "split");
            const auto parts = split_by_identity(load_embeddings(split_in), split_spec);
            save_embeddings(parts.train, split_prefix + ".train.txt");
            save_embeddings(parts.validation, split_prefix + ".validation.txt");
            save_embeddings(parts.test, split_prefix + ".test.txt");
            return kExitOk;
        }
        if (pairs->parsed()) {
            const PairOptions opts{derive_seed(seed, "pairs"), negative_ratio, !any_cohort};
            save_pairs(make_pairs(load_embeddings(pairs_in), opts), pairs_out);
            return kExitOk;
        }
        if (train->parsed()) {
            Diagnostics diag;
            const auto tr = load_pairs(train_pairs);
            const auto va = load_pairs(val_pairs);
            const auto result =
                tune_verifier(train_method.spec(), tr, va, train_grid.grid(), derive_seed(seed, "verifier"), &diag);
            save_model(to_saved(result.model), model_out);
            write_text(log_out, tuning_csv(result), out);
            for (const auto& m : diag.messages) err << "note: " << m << '\n';
            return kExitOk;
        }
        if (eval->parsed()) {
            const auto test = load_pairs(eval_test);
            if (eval_runs == 0) {
                if (eval_model.empty()) throw InvalidArgument("eval needs --model, or --runs with --train/--validation");
                const auto model = load_verifier(eval_model);
                const auto sp = score_pairs(model, test);
                const auto rep = evaluate_by_cohort(test, sp.scores, verifier_threshold(model));
                for (const auto& w : rep.warnings) err << "warning: " << w << '\n';
                write_text(eval_out, eval_format == "csv" ? to_csv(rep) : to_key_value(rep), out);
                return kExitOk;
            }
            if (eval_train.empty() || eval_val.empty())
                throw InvalidArgument("eval --runs needs --train and --validation pairs files");
            const auto tr = load_pairs(eval_train);
            const auto va = load_pairs(eval_val);
            std::vector<std::uint64_t> seeds;
            std::vector<MetricRow> rows;
            for (std::size_t r = 0; r < eval_runs; ++r) {
                const std::uint64_t run_seed = eval_fixed_seed ? seed : derive_seed(seed, "run", r);
                const auto result =
                    tune_verifier(eval_method.spec(), tr, va, eval_grid.grid(), derive_seed(run_seed, "verifier"));
                const auto sp = score_pairs(result.model, test);
                const auto rep = evaluate_by_cohort(test, sp.scores, verifier_threshold(result.model));
                seeds.push_back(run_seed);
                rows.push_back(rep.cohorts.empty() ? rep.pooled : rep.average);
            }
            write_text(eval_out, repeat_csv(seeds, rows), out);
            return kExitOk;
        }
        if (bench->parsed()) {
            bench_cfg.seed = seed;
            write_text(bench_out, format_bench_report(run_benchmark(bench_cfg)), out);
            return kExitOk;
        }
        if (fwcmd->parsed()) {
            const auto scope = parse_scope(fw_scope);
            if (!scope) throw InvalidArgument("unknown scope '" + fw_scope + "' (SI, GD, GED)");
            const auto cond = parse_condition(fw_condition);
            if (!cond) throw InvalidArgument("unknown condition '" + fw_condition + "'");
            fw_cfg.scope = *scope;
            fw_cfg.verifier = MethodSpec::selm(*cond);
            fw_cfg.seed = seed;
            Diagnostics diag;
            const auto fw = train_framework(load_embeddings(fw_train), load_embeddings(fw_val), fw_cfg, &diag);
            save_model(fw, fw_out);
            for (const auto& m : diag.messages) err << "note: " << m << '\n';
            return kExitOk;
        }
        if (ver->parsed()) {
            const auto model = load_model(ver_model);
            const auto data = load_embeddings(ver_input);
            Cohort ca{};
            Cohort cb{};
            const Vector& a = find_row(data, ver_a, &ca);
            const Vector& b = find_row(data, ver_b, &cb);
            VerificationResult r;
            if (const auto* fw = std::get_if<VerificationFramework>(&model)) {
                r = verify(*fw, a, b);
            } else if (const auto v = as_verifier(model)) {
                r.score = pair_score(*v, a, b);
                r.decision = r.score >= verifier_threshold(*v) ? Decision::Genuine : Decision::Impostor;
                r.cohort_a = ca;
                r.cohort_b = cb;
            } else {
                throw InvalidArgument("'" + ver_model + "' holds neither a framework nor a pair verifier");
            }
            out << (r.decision == Decision::Genuine ? "GENUINE" : "IMPOSTOR") << " score=" << format_number(r.score)
                << " shortcut=" << (r.shortcut ? "true" : "false") << " cohortA=" << to_string(*r.cohort_a)
                << " cohortB=" << to_string(*r.cohort_b) << '\n';
            return r.decision == Decision::Genuine ? kExitOk : kExitImpostor;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}

}  // namespace selm::cli
