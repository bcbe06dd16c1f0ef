#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>

#include "selm/data.hpp"
#include "selm/triplet.hpp"
#include "selm/tuning.hpp"
#include "selm/welm.hpp"

namespace selm {

/// Cohort classifier: a gender machine (+1 = female) and three one-vs-rest ethnicity machines.
struct CohortClassifier {
    WelmModel gender;
    std::array<WelmModel, 3> ethnicity;

    Eigen::Index input_dim() const noexcept { return gender.input_dim(); }

    Gender predict_gender(const Eigen::Ref<const Vector>& x) const {
        return welm_predict(gender, x) >= gender.threshold ? Gender::Female : Gender::Male;
    }

    /// Argmax of the one-vs-rest scores; ties go to the earlier ethnicity.
    Ethnicity predict_ethnicity(const Eigen::Ref<const Vector>& x) const {
        std::size_t best = 0;
        double best_score = welm_predict(ethnicity[0], x);
        for (std::size_t e = 1; e < 3; ++e) {
            const double s = welm_predict(ethnicity[e], x);
            if (s > best_score) {
                best = e;
                best_score = s;
            }
        }
        return kAllEthnicities[best];
    }

    Cohort predict(const Eigen::Ref<const Vector>& x) const { return {predict_gender(x), predict_ethnicity(x)}; }
};

inline Matrix stack_poses(const Dataset& data) {
    std::size_t n = 0;
    for (const auto& rec : data) n += rec.poses.size();
    Matrix X(static_cast<Eigen::Index>(n), dataset_dim(data));
    Eigen::Index r = 0;
    for (const auto& rec : data)
        for (const auto& p : rec.poses) X.row(r++) = p.transpose();
    return X;
}

inline std::vector<Cohort> pose_cohorts(const Dataset& data) {
    std::vector<Cohort> out;
    for (const auto& rec : data) out.insert(out.end(), rec.poses.size(), rec.cohort);
    return out;
}

inline void require_all_cohorts(const Dataset& data, std::string_view what) {
    std::array<bool, 6> seen{};
    for (const auto& rec : data) seen[rec.cohort.index()] = true;
    for (const auto& c : kAllCohorts)
        if (!seen[c.index()]) throw InvalidArgument(std::string(what) + ": missing cohort " + to_string(c));
}

/// Fraction of validation poses whose predicted cohort is correct.
inline double cohort_accuracy(const CohortClassifier& clf, const Dataset& data) {
    std::size_t ok = 0;
    std::size_t n = 0;
    for (const auto& rec : data)
        for (const auto& p : rec.poses) {
            ok += clf.predict(p) == rec.cohort ? 1 : 0;
            ++n;
        }
    return n == 0 ? 0.0 : static_cast<double>(ok) / static_cast<double>(n);
}

/// Grid search on validation accuracy: the gender machine at threshold 0, the
/// three ethnicity machines jointly (shared hyperparameters) by argmax accuracy.
/// The first grid point wins ties.
inline CohortClassifier train_cohort_classifier(const Dataset& train, const Dataset& validation, const HyperGrid& grid,
                                                std::uint64_t seed, const KernelSpec& kernel = KernelSpec::euclidean(),
                                                Diagnostics* diag = nullptr) {
    require_all_cohorts(train, "train_cohort_classifier");
    if (validation.empty()) throw InvalidArgument("train_cohort_classifier: validation split is empty");
    grid.validate();

    const Matrix X = stack_poses(train);
    const auto cohorts = pose_cohorts(train);
    const Matrix V = stack_poses(validation);
    const auto val_cohorts = pose_cohorts(validation);
    const auto n = static_cast<Eigen::Index>(cohorts.size());

    WelmOptions opts;
    opts.diagnostics = diag;

    Vector y_gender(n);
    for (Eigen::Index i = 0; i < n; ++i) y_gender[i] = cohorts[static_cast<std::size_t>(i)].gender == Gender::Female ? 1.0 : -1.0;
    std::array<Vector, 3> y_eth;
    for (std::size_t e = 0; e < 3; ++e) {
        y_eth[e].resize(n);
        for (Eigen::Index i = 0; i < n; ++i)
            y_eth[e][i] = cohorts[static_cast<std::size_t>(i)].ethnicity == kAllEthnicities[e] ? 1.0 : -1.0;
    }
    const auto gender_seed = derive_seed(seed, "cohort-gender");

    CohortClassifier clf;
    double best_gender = -1.0;
    double best_eth = -1.0;
    for (double pct : grid.hidden_pct) {
        auto gender_models = welm_train_path(X, y_gender, pct, grid.C, kernel, gender_seed, opts);
        for (auto& m : gender_models) {
            std::size_t ok = 0;
            for (Eigen::Index i = 0; i < V.rows(); ++i)
                ok += ((welm_predict(m, V.row(i).transpose()) >= 0.0) ==
                       (val_cohorts[static_cast<std::size_t>(i)].gender == Gender::Female))
                          ? 1
                          : 0;
            const double acc = static_cast<double>(ok) / static_cast<double>(V.rows());
            if (acc > best_gender) {
                best_gender = acc;
                clf.gender = std::move(m);
            }
        }

        std::array<std::vector<WelmModel>, 3> eth_models;
        for (std::size_t e = 0; e < 3; ++e)
            eth_models[e] = welm_train_path(X, y_eth[e], pct, grid.C, kernel, derive_seed(seed, "cohort-ethnicity", e), opts);
        for (std::size_t k = 0; k < grid.C.size(); ++k) {
            CohortClassifier probe;
            for (std::size_t e = 0; e < 3; ++e) probe.ethnicity[e] = eth_models[e][k];
            std::size_t ok = 0;
            for (Eigen::Index i = 0; i < V.rows(); ++i)
                ok += probe.predict_ethnicity(V.row(i).transpose()) == val_cohorts[static_cast<std::size_t>(i)].ethnicity ? 1 : 0;
            const double acc = static_cast<double>(ok) / static_cast<double>(V.rows());
            if (acc > best_eth) {
                best_eth = acc;
                clf.ethnicity = probe.ethnicity;
            }
        }
    }
    return clf;
}

enum class Decision : std::uint8_t { Genuine, Impostor };

/// Score recorded for pairs rejected by the cohort-mismatch rule.
inline constexpr double kShortcutScore = std::numeric_limits<double>::lowest();

struct VerificationResult {
    Decision decision = Decision::Impostor;
    double score = kShortcutScore;
    std::optional<Cohort> cohort_a;
    std::optional<Cohort> cohort_b;
    bool shortcut = false;
};

/// Instrumentation for verify(): how often the pair verifier actually ran.
struct VerifyCounters {
    std::size_t verifier_calls = 0;
    std::size_t shortcuts = 0;
};

struct VerificationFramework {
    CohortClassifier classifier;
    EmbedderRegistry registry;
    std::map<std::string, PairVerifier> verifiers;  // keyed like the registry

    FeatureScope scope() const noexcept { return registry.scope; }
    Eigen::Index input_dim() const noexcept { return classifier.input_dim(); }

    void validate() const {
        const auto keys = scope_keys(registry.scope);
        if (registry.models.size() != keys.size() || verifiers.size() != keys.size())
            throw InvalidArgument("framework: registry and verifiers must have one entry per " +
                                  std::string(to_string(registry.scope)) + " key");
        for (const auto& k : keys)
            if (!registry.models.contains(k) || !verifiers.contains(k))
                throw InvalidArgument("framework: missing entry for key '" + k + "'");
    }
};

/// Predicts both cohorts; under GD/GED a key mismatch is an
/// impostor without consulting the verifier; otherwise both inputs go through
/// the matched key's embedder and verifier.
inline VerificationResult verify(const VerificationFramework& fw, const Eigen::Ref<const Vector>& raw_a,
                                 const Eigen::Ref<const Vector>& raw_b, VerifyCounters* counters = nullptr) {
    if (raw_a.size() != fw.input_dim() || raw_b.size() != fw.input_dim())
        throw DimensionError("verify: inputs must have dimension " + std::to_string(fw.input_dim()));
    VerificationResult r;
    r.cohort_a = fw.classifier.predict(raw_a);
    r.cohort_b = fw.classifier.predict(raw_b);
    const auto key_a = scope_key(fw.scope(), *r.cohort_a);
    const auto key_b = scope_key(fw.scope(), *r.cohort_b);
    if (key_a != key_b) {
        r.shortcut = true;
        r.decision = Decision::Impostor;
        r.score = kShortcutScore;
        if (counters != nullptr) ++counters->shortcuts;
        return r;
    }
    const auto& net = fw.registry.models.at(key_a);
    const auto& verifier = fw.verifiers.at(key_a);
    r.score = pair_score(verifier, embed(net, raw_a), embed(net, raw_b));
    r.decision = r.score >= verifier_threshold(verifier) ? Decision::Genuine : Decision::Impostor;
    if (counters != nullptr) ++counters->verifier_calls;
    return r;
}

/// Euclidean-distance baseline on embeddings: score = -|a - b|, genuine iff score >= threshold.
inline VerificationResult distance_baseline(const Eigen::Ref<const Vector>& embed_a, const Eigen::Ref<const Vector>& embed_b,
                                            double threshold) {
    VerificationResult r;
    r.score = pair_score(DistanceModel{threshold}, embed_a, embed_b);
    r.decision = r.score >= threshold ? Decision::Genuine : Decision::Impostor;
    return r;
}

inline Dataset embed_dataset(const TripletNet& net, const Dataset& data) {
    Dataset out = data;
    for (auto& rec : out)
        for (auto& p : rec.poses) p = embed(net, p);
    return out;
}

inline Dataset filter_dataset(const Dataset& data, const CohortPredicate& keep) {
    Dataset out;
    for (const auto& rec : data)
        if (keep(rec.cohort)) out.push_back(rec);
    return out;
}

/// Genuine pairs plus an equal number of seeded impostors; an empty list when the
/// slice cannot form both classes.
inline std::vector<PairSample> try_make_pairs(const Dataset& data, const PairOptions& opts) {
    std::size_t usable = 0;
    for (const auto& rec : data) usable += rec.poses.size() >= 2 ? 1 : 0;
    if (usable < 2 || usable != data.size()) return {};
    return make_pairs(data, opts);
}

struct FrameworkConfig {
    FeatureScope scope = FeatureScope::GED;
    MethodSpec verifier = MethodSpec::selm(SiameseCondition::Dist);
    HyperGrid verifier_grid = HyperGrid::standard();
    HyperGrid classifier_grid = HyperGrid::standard();
    TripletConfig triplet = sphere_triplet_config();
    std::uint64_t seed = 0;
};

/// Assembles the whole pipeline from identity-level train/validation splits.
/// Verifier hyperparameters and thresholds come from validation pairs of each
/// key's slice; a slice with fewer than two validation identities falls back to
/// its training pairs (noted in `diag`).
inline VerificationFramework train_framework(const Dataset& train, const Dataset& validation, const FrameworkConfig& cfg,
                                             Diagnostics* diag = nullptr) {
    VerificationFramework fw;
    fw.classifier = train_cohort_classifier(train, validation, cfg.classifier_grid, derive_seed(cfg.seed, "classifier"),
                                            KernelSpec::euclidean(), diag);
    TripletConfig tcfg = cfg.triplet;
    tcfg.seed = derive_seed(cfg.seed, "triplet");
    fw.registry = build_registry(train, cfg.scope, tcfg);

    for (const auto& key : scope_keys(cfg.scope)) {
        const auto in_key = [&](const Cohort& c) { return scope_key(cfg.scope, c) == key; };
        const auto& net = fw.registry.models.at(key);
        const Dataset tr = embed_dataset(net, filter_dataset(train, in_key));
        const Dataset va = embed_dataset(net, filter_dataset(validation, in_key));
        const auto train_pairs = try_make_pairs(tr, {derive_seed(cfg.seed, "pairs:train:" + key), 1.0, false});
        auto val_pairs = try_make_pairs(va, {derive_seed(cfg.seed, "pairs:validation:" + key), 1.0, false});
        if (train_pairs.empty()) throw InvalidArgument("train_framework: key '" + key + "' cannot form training pairs");
        if (val_pairs.empty()) {
            note(diag, "train_framework: key '" + key + "' has too few validation identities; tuning on training pairs");
            val_pairs = train_pairs;
        }
        auto tuned = tune_verifier(cfg.verifier, train_pairs, val_pairs, cfg.verifier_grid,
                                   derive_seed(cfg.seed, "verifier:" + key), diag);
        if (auto* s = std::get_if<SelmModel>(&tuned.model); s != nullptr && cfg.scope == FeatureScope::GED)
            s->cohort_scope = parse_cohort(key);
        fw.verifiers.emplace(key, std::move(tuned.model));
    }
    fw.validate();
    return fw;
}

}  // namespace selm
