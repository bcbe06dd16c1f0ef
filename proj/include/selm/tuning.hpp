#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "selm/elm.hpp"
#include "selm/eval.hpp"
#include "selm/siamese.hpp"
#include "selm/welm.hpp"

namespace selm {

struct HyperGrid {
    std::vector<double> C;
    std::vector<double> hidden_pct;
    std::vector<double> rbf_gamma;  // only searched for the rbf ELM kernel

    /// 10^lo, 10^(lo+1), ..., 10^hi.
    static std::vector<double> decades(int lo, int hi) {
        std::vector<double> v;
        for (int e = lo; e <= hi; ++e) v.push_back(std::pow(10.0, e));
        return v;
    }

    /// C in 10^-6..10^6, hidden nodes 10..100 %, rbf gamma 10^-6..10^6.
    static HyperGrid standard() {
        HyperGrid g;
        g.C = decades(-6, 6);
        for (int p = 10; p <= 100; p += 10) g.hidden_pct.push_back(p);
        g.rbf_gamma = decades(-6, 6);
        return g;
    }

    void validate() const {
        if (C.empty() || hidden_pct.empty()) throw InvalidArgument("hyperparameter grid is empty");
        for (double c : C)
            if (!(c > 0.0)) throw InvalidArgument("grid C values must be > 0");
        for (double p : hidden_pct)
            if (!(p > 0.0)) throw InvalidArgument("grid hidden_pct values must be > 0");
    }
};

/// Euclidean-distance baseline: score = -|a - b|.
struct DistanceModel {
    double threshold = 0.0;
};

/// WELM fed with the concatenated pair (the non-Siamese architecture).
struct ConcatWelmModel {
    WelmModel welm;
};

using PairVerifier = std::variant<SelmModel, ElmModel, ConcatWelmModel, DistanceModel>;

enum class Method : std::uint8_t { Selm, Elm, WelmConcat, Distance };

inline std::string_view to_string(Method m) noexcept {
    switch (m) {
        case Method::Selm: return "selm";
        case Method::Elm: return "elm";
        case Method::WelmConcat: return "welm";
        case Method::Distance: return "distance";
    }
    return "?";
}

inline std::optional<Method> parse_method(std::string_view s) noexcept {
    for (auto m : {Method::Selm, Method::Elm, Method::WelmConcat, Method::Distance})
        if (s == to_string(m)) return m;
    return std::nullopt;
}

struct MethodSpec {
    Method method = Method::Selm;
    SiameseCondition condition = SiameseCondition::Sum;
    KernelSpec kernel = KernelSpec::euclidean();

    static MethodSpec selm(SiameseCondition c, KernelSpec k = KernelSpec::euclidean()) { return {Method::Selm, c, k}; }
    static MethodSpec elm(KernelSpec k = KernelSpec::sigmoid()) { return {Method::Elm, SiameseCondition::Sum, k}; }
    static MethodSpec welm_concat(KernelSpec k = KernelSpec::euclidean()) {
        return {Method::WelmConcat, SiameseCondition::Sum, k};
    }
    static MethodSpec distance() { return {Method::Distance, SiameseCondition::Sum, KernelSpec::euclidean()}; }

    std::string label() const {
        return method == Method::Selm ? "selm-" + std::string(to_string(condition)) : std::string(to_string(method));
    }
};

inline Method method_of(const PairVerifier& v) noexcept { return static_cast<Method>(v.index()); }

inline double pair_score(const PairVerifier& v, const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
    struct Visitor {
        const Eigen::Ref<const Vector>& a;
        const Eigen::Ref<const Vector>& b;
        double operator()(const SelmModel& m) const { return selm_predict(m, a, b); }
        double operator()(const ElmModel& m) const { return elm_predict(m, concat_pair(a, b)); }
        double operator()(const ConcatWelmModel& m) const { return welm_predict(m.welm, concat_pair(a, b)); }
        double operator()(const DistanceModel&) const {
            if (a.size() != b.size()) throw DimensionError("distance: dimension mismatch");
            return -(a - b).norm();
        }
    };
    return std::visit(Visitor{a, b}, v);
}

inline double verifier_threshold(const PairVerifier& v) {
    struct Visitor {
        double operator()(const SelmModel& m) const { return m.backbone.threshold; }
        double operator()(const ElmModel& m) const { return m.threshold; }
        double operator()(const ConcatWelmModel& m) const { return m.welm.threshold; }
        double operator()(const DistanceModel& m) const { return m.threshold; }
    };
    return std::visit(Visitor{}, v);
}

inline void set_verifier_threshold(PairVerifier& v, double theta) {
    struct Visitor {
        double theta;
        void operator()(SelmModel& m) const { m.backbone.threshold = theta; }
        void operator()(ElmModel& m) const { m.threshold = theta; }
        void operator()(ConcatWelmModel& m) const { m.welm.threshold = theta; }
        void operator()(DistanceModel& m) const { m.threshold = theta; }
    };
    std::visit(Visitor{theta}, v);
}

inline std::string verifier_label(const PairVerifier& v) {
    if (const auto* s = std::get_if<SelmModel>(&v)) return "selm-" + std::string(to_string(s->condition));
    return std::string(to_string(method_of(v)));
}

inline ScoredPairs score_pairs(const PairVerifier& v, std::span<const PairSample> pairs) {
    ScoredPairs sp;
    sp.scores.reserve(pairs.size());
    sp.labels.reserve(pairs.size());
    for (const auto& p : pairs) sp.push_back(pair_score(v, p.a, p.b), p.label);
    return sp;
}

struct TuningRow {
    double C = 0.0;
    double hidden_pct = 0.0;
    double rbf_gamma = 0.0;
    double accuracy = 0.0;  // validation accuracy at the validation EER threshold
    double auc = 0.0;
    double eer = 0.0;
    double theta = 0.0;
};

struct TuningResult {
    PairVerifier model;
    std::vector<TuningRow> log;  // grid order: gamma, then hidden_pct, then C
    std::size_t best = 0;
};

inline constexpr const char* kTuningCsvHeader = "C,hidden_pct,rbf_gamma,val_accuracy,val_auc,val_eer,theta";

inline std::string tuning_csv(const TuningResult& r) {
    std::string out = std::string(kTuningCsvHeader) + "\n";
    for (const auto& row : r.log)
        out += format_number(row.C) + "," + format_number(row.hidden_pct) + "," + format_number(row.rbf_gamma) + "," +
               format_number(row.accuracy) + "," + format_number(row.auc) + "," + format_number(row.eer) + "," +
               format_number(row.theta) + "\n";
    return out;
}

/// Grid search: every grid point is trained on `train`, calibrated at the
/// validation EER threshold and scored by validation accuracy there. The best
/// point maximizes accuracy, then AUC; remaining ties keep the earliest grid point.
inline TuningResult tune_verifier(const MethodSpec& spec, std::span<const PairSample> train,
                                  std::span<const PairSample> validation, const HyperGrid& grid, std::uint64_t seed,
                                  Diagnostics* diag = nullptr) {
    if (validation.empty()) throw InvalidArgument("tune_verifier: validation pairs are required");
    TuningResult result{DistanceModel{}, {}, 0};
    bool have = false;
    auto consider = [&](PairVerifier candidate, TuningRow row) {
        const ScoredPairs sp = score_pairs(candidate, validation);
        const auto eer = eer_threshold(sp);
        row.theta = eer.theta;
        row.eer = eer.eer;
        row.accuracy = accuracy(sp, eer.theta);
        row.auc = roc_auc(sp);
        set_verifier_threshold(candidate, eer.theta);
        result.log.push_back(row);
        const auto& best = result.log[result.best];
        if (!have || row.accuracy > best.accuracy || (row.accuracy == best.accuracy && row.auc > best.auc)) {
            have = true;
            result.best = result.log.size() - 1;
            result.model = std::move(candidate);
        }
    };

    if (spec.method == Method::Distance) {
        consider(DistanceModel{}, TuningRow{});
        return result;
    }
    grid.validate();
    if (train.empty()) throw InvalidArgument("tune_verifier: training pairs are required");

    const bool rbf = spec.method == Method::Elm && spec.kernel.kind == KernelKind::Rbf;
    const std::vector<double> gammas = rbf ? grid.rbf_gamma : std::vector<double>{spec.kernel.rbf_gamma};
    if (gammas.empty()) throw InvalidArgument("hyperparameter grid has no rbf gamma values");

    for (double gamma : gammas) {
        KernelSpec kernel = spec.kernel;
        if (rbf) kernel.rbf_gamma = gamma;
        for (double pct : grid.hidden_pct) {
            switch (spec.method) {
                case Method::Selm: {
                    auto models = selm_train_path(train, pct, grid.C, spec.condition, kernel, seed, diag);
                    for (auto& m : models) {
                        const double c = m.backbone.C;
                        consider(std::move(m), {c, pct, 0.0});
                    }
                    break;
                }
                case Method::Elm: {
                    if (pct > 100.0) throw InvalidArgument("elm hidden_pct must be <= 100");
                    const Matrix X = concat_pairs(train);
                    auto models = elm_train_path(X, pair_targets(train), pct, grid.C, kernel, seed);
                    for (auto& m : models) {
                        const double c = m.C;
                        consider(std::move(m), {c, pct, rbf ? gamma : 0.0});
                    }
                    break;
                }
                case Method::WelmConcat: {
                    const Matrix X = concat_pairs(train);
                    WelmOptions opts;
                    opts.diagnostics = diag;
                    auto models = welm_train_path(X, pair_targets(train), pct, grid.C, kernel, seed, opts);
                    for (auto& m : models) {
                        const double c = m.C;
                        consider(ConcatWelmModel{std::move(m)}, {c, pct, 0.0});
                    }
                    break;
                }
                case Method::Distance: break;
            }
        }
    }
    return result;
}

}  // namespace selm
