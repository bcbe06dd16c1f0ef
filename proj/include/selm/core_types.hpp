#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "selm/error.hpp"

namespace selm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// One face/sample embedding. All vectors in a dataset share one dimension.
using EmbeddingVector = Vector;

enum class Gender : std::uint8_t { Female, Male };
enum class Ethnicity : std::uint8_t { Asian, Black, Caucasian };

struct Cohort {
    Gender gender = Gender::Female;
    Ethnicity ethnicity = Ethnicity::Asian;

    friend constexpr auto operator<=>(const Cohort&, const Cohort&) = default;

    /// Dense index in [0, 6): gender-major, matching kAllCohorts.
    constexpr std::size_t index() const noexcept {
        return static_cast<std::size_t>(gender) * 3 + static_cast<std::size_t>(ethnicity);
    }
};

inline constexpr std::array<Cohort, 6> kAllCohorts{{
    {Gender::Female, Ethnicity::Asian},
    {Gender::Female, Ethnicity::Black},
    {Gender::Female, Ethnicity::Caucasian},
    {Gender::Male, Ethnicity::Asian},
    {Gender::Male, Ethnicity::Black},
    {Gender::Male, Ethnicity::Caucasian},
}};

inline constexpr std::array<Ethnicity, 3> kAllEthnicities{Ethnicity::Asian, Ethnicity::Black,
                                                          Ethnicity::Caucasian};

inline std::string_view to_string(Gender g) noexcept { return g == Gender::Female ? "female" : "male"; }

inline std::string_view to_string(Ethnicity e) noexcept {
    switch (e) {
        case Ethnicity::Asian: return "asian";
        case Ethnicity::Black: return "black";
        case Ethnicity::Caucasian: return "caucasian";
    }
    return "?";
}

inline std::string to_string(Cohort c) {
    return std::string(to_string(c.gender)) + "-" + std::string(to_string(c.ethnicity));
}

inline std::optional<Gender> parse_gender(std::string_view s) noexcept {
    if (s == "female") return Gender::Female;
    if (s == "male") return Gender::Male;
    return std::nullopt;
}

inline std::optional<Ethnicity> parse_ethnicity(std::string_view s) noexcept {
    for (Ethnicity e : kAllEthnicities)
        if (s == to_string(e)) return e;
    return std::nullopt;
}

inline std::optional<Cohort> parse_cohort(std::string_view s) noexcept {
    const auto dash = s.find('-');
    if (dash == std::string_view::npos) return std::nullopt;
    const auto g = parse_gender(s.substr(0, dash));
    const auto e = parse_ethnicity(s.substr(dash + 1));
    if (!g || !e) return std::nullopt;
    return Cohort{*g, *e};
}

struct IdentityRecord {
    std::string identity_id;
    Cohort cohort;
    std::vector<EmbeddingVector> poses;
};

using Dataset = std::vector<IdentityRecord>;

/// Numeric encoding doubles as the regression target: +1 genuine, -1 impostor.
enum class PairLabel : int { Genuine = 1, Impostor = -1 };

inline constexpr double to_target(PairLabel l) noexcept { return static_cast<double>(static_cast<int>(l)); }

/// Where a pair member came from; optional provenance used for per-cohort reporting.
struct PoseRef {
    std::string identity_id;
    Cohort cohort;
    int pose_index = 0;

    friend bool operator==(const PoseRef&, const PoseRef&) = default;
};

struct PairSource {
    PoseRef a;
    PoseRef b;

    friend bool operator==(const PairSource&, const PairSource&) = default;
};

struct PairSample {
    EmbeddingVector a;
    EmbeddingVector b;
    PairLabel label = PairLabel::Impostor;
    std::optional<PairSource> source;
};

inline Vector pair_targets(std::span<const PairSample> pairs) {
    Vector y(static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t i = 0; i < pairs.size(); ++i) y[static_cast<Eigen::Index>(i)] = to_target(pairs[i].label);
    return y;
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
    return m.allFinite();
}

inline void require_same_dim(const Vector& a, const Vector& b, std::string_view what) {
    if (a.size() != b.size())
        throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()) + ")");
}

struct ClassCounts {
    std::size_t positive = 0;
    std::size_t negative = 0;
};

/// Counts +1/-1 targets. Throws if any entry is not +-1 or if a class is absent.
inline ClassCounts count_classes(const Vector& y, std::string_view what) {
    ClassCounts c;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y[i] == 1.0) ++c.positive;
        else if (y[i] == -1.0) ++c.negative;
        else throw InvalidArgument(std::string(what) + ": targets must be +1 or -1");
    }
    if (c.positive == 0 || c.negative == 0)
        throw InvalidArgument(std::string(what) + ": both classes must be present");
    return c;
}

enum class ViolationKind { DuplicateId, DimensionMismatch, EmptyPoses, NonFinite };

struct Violation {
    ViolationKind kind;
    std::string identity_id;
    std::string message;
};

/// Report-style validation: an empty result means every downstream operation
/// can consume the dataset without dimension errors.
inline std::vector<Violation> dataset_validate(const Dataset& dataset) {
    std::vector<Violation> out;
    std::set<std::string> seen;
    std::optional<Eigen::Index> dim;
    for (const auto& rec : dataset) {
        if (!seen.insert(rec.identity_id).second)
            out.push_back({ViolationKind::DuplicateId, rec.identity_id, "duplicate id '" + rec.identity_id + "'"});
        if (rec.poses.empty()) {
            out.push_back({ViolationKind::EmptyPoses, rec.identity_id, "identity '" + rec.identity_id + "' has no poses"});
            continue;
        }
        bool mismatch = false;
        bool nonfinite = false;
        for (const auto& p : rec.poses) {
            if (!dim) dim = p.size();
            if (p.size() != *dim || p.size() == 0) mismatch = true;
            if (!p.allFinite()) nonfinite = true;
        }
        if (mismatch)
            out.push_back({ViolationKind::DimensionMismatch, rec.identity_id,
                           "identity '" + rec.identity_id + "' has a pose whose dimension differs from " +
                               std::to_string(*dim)});
        if (nonfinite)
            out.push_back({ViolationKind::NonFinite, rec.identity_id,
                           "identity '" + rec.identity_id + "' has a non-finite value"});
    }
    return out;
}

/// Embedding dimension of a validated dataset (0 when empty).
inline Eigen::Index dataset_dim(const Dataset& dataset) {
    for (const auto& rec : dataset)
        if (!rec.poses.empty()) return rec.poses.front().size();
    return 0;
}

}  // namespace selm
