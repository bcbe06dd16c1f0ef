#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "selm/welm.hpp"

namespace selm {

/// Element-wise merge applied by the Siamese layer. All four are symmetric in (a, b).
enum class SiameseCondition : std::uint8_t { Sum, Dist, Mult, Mean };

inline constexpr std::array<SiameseCondition, 4> kAllConditions{SiameseCondition::Sum, SiameseCondition::Dist,
                                                                SiameseCondition::Mult, SiameseCondition::Mean};

inline std::string_view to_string(SiameseCondition c) noexcept {
    switch (c) {
        case SiameseCondition::Sum: return "sum";
        case SiameseCondition::Dist: return "dist";
        case SiameseCondition::Mult: return "mult";
        case SiameseCondition::Mean: return "mean";
    }
    return "?";
}

inline std::optional<SiameseCondition> parse_condition(std::string_view s) noexcept {
    for (auto c : kAllConditions)
        if (s == to_string(c)) return c;
    return std::nullopt;
}

/// sum: a + b, dist: |a - b|, mult: a (.) b, mean: (a + b) / 2.
inline Vector siamese_combine(SiameseCondition c, const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
    if (a.size() != b.size())
        throw DimensionError("siamese_combine: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()) + ")");
    switch (c) {
        case SiameseCondition::Sum: return a + b;
        case SiameseCondition::Dist: return (a - b).cwiseAbs();
        case SiameseCondition::Mult: return a.cwiseProduct(b);
        case SiameseCondition::Mean: return (a + b) / 2.0;
    }
    return a + b;
}

/// Siamese layer rows for a pair list, in input order.
inline Matrix siamese_rows(SiameseCondition c, std::span<const PairSample> pairs) {
    if (pairs.empty()) return Matrix(0, 0);
    Matrix X(static_cast<Eigen::Index>(pairs.size()), pairs.front().a.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (pairs[i].a.size() != X.cols() || pairs[i].b.size() != X.cols())
            throw DimensionError("siamese_rows: inconsistent pair dimensions");
        X.row(static_cast<Eigen::Index>(i)) = siamese_combine(c, pairs[i].a, pairs[i].b).transpose();
    }
    return X;
}

struct SelmModel {
    SiameseCondition condition = SiameseCondition::Sum;
    WelmModel backbone;  // anchors live in combined-vector space (dimension d)
    std::optional<Cohort> cohort_scope;

    double threshold() const noexcept { return backbone.threshold; }
};

/// Combines every pair with the Siamese condition, then trains a class-weighted
/// WELM on the combined rows. Anchors are drawn from the combined rows. A zero
/// combined vector under the cosine kernel gets similarity 0 to every anchor.
inline std::vector<SelmModel> selm_train_path(std::span<const PairSample> pairs, double hidden_pct,
                                              std::span<const double> Cs, SiameseCondition condition,
                                              const KernelSpec& kernel, std::uint64_t seed,
                                              Diagnostics* diag = nullptr) {
    if (pairs.size() < 2) throw InvalidArgument("selm_train: need at least one genuine and one impostor pair");
    const Matrix X = siamese_rows(condition, pairs);
    const Vector y = pair_targets(pairs);
    WelmOptions opts;
    opts.zero_norm = ZeroNormPolicy::ZeroSimilarity;
    opts.diagnostics = diag;
    std::vector<SelmModel> out;
    for (auto& backbone : welm_train_path(X, y, hidden_pct, Cs, kernel, seed, opts))
        out.push_back(SelmModel{condition, std::move(backbone), std::nullopt});
    return out;
}

inline SelmModel selm_train(std::span<const PairSample> pairs, double hidden_pct, double C, SiameseCondition condition,
                            const KernelSpec& kernel, std::uint64_t seed, Diagnostics* diag = nullptr) {
    const double Cs[] = {C};
    return std::move(selm_train_path(pairs, hidden_pct, Cs, condition, kernel, seed, diag).front());
}

/// Swap-invariant score: welm_predict(backbone, sc(a, b)).
inline double selm_predict(const SelmModel& m, const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b,
                           Diagnostics* diag = nullptr) {
    if (a.size() != m.backbone.input_dim() || b.size() != m.backbone.input_dim())
        throw DimensionError("selm_predict: input dimension does not match model dimension " +
                             std::to_string(m.backbone.input_dim()));
    return welm_predict(m.backbone, siamese_combine(m.condition, a, b), diag);
}

}  // namespace selm
