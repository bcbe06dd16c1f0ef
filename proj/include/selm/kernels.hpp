#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include "selm/core_types.hpp"
#include "selm/random.hpp"

namespace selm {

enum class KernelKind : std::uint8_t { Sigmoid, Rbf, Cosine, Euclidean };

inline std::string_view to_string(KernelKind k) noexcept {
    switch (k) {
        case KernelKind::Sigmoid: return "sigmoid";
        case KernelKind::Rbf: return "rbf";
        case KernelKind::Cosine: return "cosine";
        case KernelKind::Euclidean: return "euclidean";
    }
    return "?";
}

inline std::optional<KernelKind> parse_kernel_kind(std::string_view s) noexcept {
    for (auto k : {KernelKind::Sigmoid, KernelKind::Rbf, KernelKind::Cosine, KernelKind::Euclidean})
        if (s == to_string(k)) return k;
    return std::nullopt;
}

/// Activation (ELM: sigmoid, rbf) or similarity (WELM/SELM: cosine, euclidean).
struct KernelSpec {
    KernelKind kind = KernelKind::Euclidean;
    double rbf_gamma = 1.0;  // only read by KernelKind::Rbf

    static KernelSpec sigmoid() { return {KernelKind::Sigmoid, 1.0}; }
    static KernelSpec rbf(double gamma) { return {KernelKind::Rbf, gamma}; }
    static KernelSpec cosine() { return {KernelKind::Cosine, 1.0}; }
    static KernelSpec euclidean() { return {KernelKind::Euclidean, 1.0}; }

    bool is_similarity() const noexcept { return kind == KernelKind::Cosine || kind == KernelKind::Euclidean; }

    void validate() const {
        if (kind == KernelKind::Rbf && (!(rbf_gamma > 0.0) || !std::isfinite(rbf_gamma)))
            throw InvalidArgument("rbf kernel requires gamma > 0");
    }

    friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

namespace detail {

template <typename A, typename B>
void check_dims(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b, const char* what) {
    if (a.size() != b.size())
        throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()) + ")");
}

}  // namespace detail

/// a.b / (|a| |b|), clamped to [-1, 1]. Throws on a zero-norm input.
template <typename A, typename B>
double cosine_similarity(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
    detail::check_dims(a, b, "cosine_similarity");
    const double na = a.squaredNorm();
    const double nb = b.squaredNorm();
    if (!(na > 0.0) || !(nb > 0.0)) throw InvalidArgument("cosine_similarity: zero-norm input");
    // sqrt of the product keeps a == b at exactly 1.
    return std::clamp(a.dot(b) / std::sqrt(na * nb), -1.0, 1.0);
}

/// Negated Euclidean distance, so larger means more similar.
template <typename A, typename B>
double euclidean_similarity(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
    detail::check_dims(a, b, "euclidean_similarity");
    return -(a.reshaped() - b.reshaped()).norm();
}

template <typename A, typename B>
double rbf(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b, double gamma) {
    detail::check_dims(a, b, "rbf");
    return std::exp(-gamma * (a.reshaped() - b.reshaped()).squaredNorm());
}

template <typename W, typename X>
double sigmoid_node(const Eigen::MatrixBase<W>& w, double bias, const Eigen::MatrixBase<X>& x) {
    detail::check_dims(w, x, "sigmoid_node");
    return 1.0 / (1.0 + std::exp(-(w.dot(x) + bias)));
}

/// What a similarity kernel does when the cosine of a zero vector is requested.
enum class ZeroNormPolicy : std::uint8_t {
    Throw,           // propagate the kernel error
    ZeroSimilarity,  // treat the similarity as 0 and record a diagnostic
};

/// s(x, w) for a similarity kernel.
template <typename A, typename B>
double similarity(const KernelSpec& k, const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& w,
                  ZeroNormPolicy policy = ZeroNormPolicy::Throw, bool* degenerate = nullptr) {
    switch (k.kind) {
        case KernelKind::Cosine:
            if (policy == ZeroNormPolicy::ZeroSimilarity && (x.squaredNorm() == 0.0 || w.squaredNorm() == 0.0)) {
                detail::check_dims(x, w, "cosine_similarity");
                if (degenerate != nullptr) *degenerate = true;
                return 0.0;
            }
            return cosine_similarity(x, w);
        case KernelKind::Euclidean: return euclidean_similarity(x, w);
        default: throw InvalidArgument("similarity: kernel '" + std::string(to_string(k.kind)) + "' is not a similarity");
    }
}

/// Random hidden-layer parameters of a standard ELM; rows of `weights` are the w_i.
struct RandomProjection {
    Matrix weights;  // l x d
    Vector biases;   // l
    std::uint64_t seed = 0;

    Eigen::Index hidden() const noexcept { return weights.rows(); }
    Eigen::Index input_dim() const noexcept { return weights.cols(); }
};

/// Uniform(-1, 1) entries drawn from the "projection" substream of `seed`:
/// W in row-major order first, then b.
inline RandomProjection generate_projection(Eigen::Index l, Eigen::Index d, std::uint64_t seed) {
    if (l < 1 || d < 1) throw InvalidArgument("generate_projection: l and d must be >= 1");
    auto rng = CounterRng::stream(seed, "projection");
    RandomProjection p{Matrix(l, d), Vector(l), seed};
    for (Eigen::Index i = 0; i < l; ++i)
        for (Eigen::Index j = 0; j < d; ++j) p.weights(i, j) = rng.uniform(-1.0, 1.0);
    for (Eigen::Index i = 0; i < l; ++i) p.biases[i] = rng.uniform(-1.0, 1.0);
    return p;
}

}  // namespace selm
