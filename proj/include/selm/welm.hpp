#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "selm/elm.hpp"
#include "selm/kernels.hpp"
#include "selm/random.hpp"
#include "selm/solver.hpp"

namespace selm {

/// Per-sample imbalance weights gamma_i = sqrt(max(n_pos, n_neg) / |class of y_i|).
struct ClassWeights {
    Vector gamma;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
};

inline ClassWeights class_weights(const Eigen::Ref<const Vector>& y) {
    const auto counts = count_classes(y, "class_weights");
    const double majority = static_cast<double>(std::max(counts.positive, counts.negative));
    const double w_pos = std::sqrt(majority / static_cast<double>(counts.positive));
    const double w_neg = std::sqrt(majority / static_cast<double>(counts.negative));
    ClassWeights cw{Vector(y.size()), counts.positive, counts.negative};
    for (Eigen::Index i = 0; i < y.size(); ++i) cw.gamma[i] = y[i] > 0.0 ? w_pos : w_neg;
    return cw;
}

struct WelmOptions {
    bool class_weighting = true;
    ZeroNormPolicy zero_norm = ZeroNormPolicy::Throw;
    Diagnostics* diagnostics = nullptr;
};

/// Weighted similarity ELM: hidden node j is s(x, anchor_j), anchors being training rows.
struct WelmModel {
    Matrix anchors;  // l x d, each row a copy of a training row
    KernelSpec kernel = KernelSpec::euclidean();
    Vector beta;
    double C = 1.0;
    double threshold = 0.0;
    std::uint64_t seed = 0;
    ZeroNormPolicy zero_norm = ZeroNormPolicy::Throw;

    Eigen::Index input_dim() const noexcept { return anchors.cols(); }
};

/// H(i, j) = s(X_i, anchor_j).
inline Matrix welm_hidden(const Matrix& anchors, const KernelSpec& kernel, const Eigen::Ref<const Matrix>& X,
                          ZeroNormPolicy policy = ZeroNormPolicy::Throw, Diagnostics* diag = nullptr) {
    if (X.cols() != anchors.cols())
        throw DimensionError("welm: input dimension " + std::to_string(X.cols()) + " does not match anchor dimension " +
                             std::to_string(anchors.cols()));
    Matrix H(X.rows(), anchors.rows());
    bool degenerate = false;
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = 0; j < anchors.rows(); ++j)
            H(i, j) = similarity(kernel, X.row(i), anchors.row(j), policy, &degenerate);
    if (degenerate) note(diag, "welm: zero-norm vector under cosine kernel; similarity set to 0");
    return H;
}

/// Trains one model per entry of `Cs`. Anchors and the weighted hidden matrix
/// depend only on (X, y, hidden_pct, kernel, seed), so they are built once;
/// each returned model is identical to welm_train with that C.
inline std::vector<WelmModel> welm_train_path(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y,
                                              double hidden_pct, std::span<const double> Cs, const KernelSpec& kernel,
                                              std::uint64_t seed, const WelmOptions& opts = {}) {
    if (X.rows() < 2 || X.cols() < 1) throw InvalidArgument("welm_train: need n >= 2 samples with d >= 1");
    if (X.rows() != y.size()) throw DimensionError("welm_train: X and y disagree on sample count");
    if (!kernel.is_similarity()) throw InvalidArgument("welm_train: kernel must be cosine or euclidean");
    if (!X.allFinite()) throw InvalidArgument("welm_train: non-finite input");
    const ClassWeights cw = class_weights(y);

    const Eigen::Index n = X.rows();
    Eigen::Index l = hidden_count(hidden_pct, n);
    if (l > n) {
        note(opts.diagnostics, "welm_train: hidden_pct " + std::to_string(hidden_pct) + " gives " + std::to_string(l) +
                                   " hidden nodes; clamped to n = " + std::to_string(n));
        l = n;
    }

    WelmModel base;
    base.kernel = kernel;
    base.seed = seed;
    base.zero_norm = opts.zero_norm;
    auto rng = CounterRng::stream(seed, "anchors");
    const auto rows = rng.sample_without_replacement(static_cast<std::size_t>(n), static_cast<std::size_t>(l));
    base.anchors.resize(l, X.cols());
    for (Eigen::Index j = 0; j < l; ++j)
        base.anchors.row(j) = X.row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(j)]));

    Matrix H = welm_hidden(base.anchors, kernel, X, opts.zero_norm, opts.diagnostics);
    Vector t = y;
    if (opts.class_weighting) {
        H.array().colwise() *= cw.gamma.array();
        t.array() *= cw.gamma.array();
    }
    const Matrix gram = H.transpose() * H;
    const Vector rhs = H.transpose() * t;

    std::vector<WelmModel> out;
    out.reserve(Cs.size());
    for (double C : Cs) {
        WelmModel m = base;
        m.C = C;
        m.beta = ridge_solve_normal(gram, rhs, C);
        out.push_back(std::move(m));
    }
    return out;
}

inline WelmModel welm_train(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y, double hidden_pct,
                            double C, const KernelSpec& kernel, std::uint64_t seed, const WelmOptions& opts = {}) {
    const double Cs[] = {C};
    return std::move(welm_train_path(X, y, hidden_pct, Cs, kernel, seed, opts).front());
}

inline double welm_predict(const WelmModel& m, const Eigen::Ref<const Vector>& x, Diagnostics* diag = nullptr) {
    if (x.size() != m.input_dim())
        throw DimensionError("welm_predict: input dimension " + std::to_string(x.size()) +
                             " does not match model dimension " + std::to_string(m.input_dim()));
    double score = 0.0;
    bool degenerate = false;
    for (Eigen::Index j = 0; j < m.anchors.rows(); ++j)
        score += m.beta[j] * similarity(m.kernel, x, m.anchors.row(j), m.zero_norm, &degenerate);
    if (degenerate) note(diag, "welm_predict: zero-norm vector under cosine kernel; similarity set to 0");
    return score;
}

}  // namespace selm
