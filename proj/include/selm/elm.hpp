#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "selm/kernels.hpp"
#include "selm/solver.hpp"

namespace selm {

/// Hidden-node count for a percentage of the training-set size: max(1, round(pct/100 * n)).
inline Eigen::Index hidden_count(double hidden_pct, Eigen::Index n) {
    if (!(hidden_pct > 0.0) || !std::isfinite(hidden_pct))
        throw InvalidArgument("hidden_pct must be a positive percentage");
    const auto l = static_cast<Eigen::Index>(std::llround(hidden_pct / 100.0 * static_cast<double>(n)));
    return std::max<Eigen::Index>(1, l);
}

/// Standard single-hidden-layer ELM with random input weights.
struct ElmModel {
    RandomProjection projection;
    KernelSpec kernel = KernelSpec::sigmoid();
    Vector beta;
    double C = 1.0;
    double threshold = 0.0;
};

/// h(x) for each row of X: sigmoid(w_i.x + b_i), or rbf(x, w_i, gamma) with the w_i as centres.
inline Matrix elm_hidden(const RandomProjection& p, const KernelSpec& kernel, const Eigen::Ref<const Matrix>& X) {
    if (X.cols() != p.input_dim())
        throw DimensionError("elm: input dimension " + std::to_string(X.cols()) + " does not match model dimension " +
                             std::to_string(p.input_dim()));
    Matrix H(X.rows(), p.hidden());
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        for (Eigen::Index j = 0; j < p.hidden(); ++j) {
            switch (kernel.kind) {
                case KernelKind::Sigmoid: H(r, j) = sigmoid_node(p.weights.row(j), p.biases[j], X.row(r)); break;
                case KernelKind::Rbf: H(r, j) = rbf(X.row(r), p.weights.row(j), kernel.rbf_gamma); break;
                default: throw InvalidArgument("elm: kernel must be sigmoid or rbf");
            }
        }
    }
    return H;
}

/// One model per entry of `Cs`, sharing the projection and hidden matrix.
inline std::vector<ElmModel> elm_train_path(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y,
                                            double hidden_pct, std::span<const double> Cs, const KernelSpec& kernel,
                                            std::uint64_t seed) {
    if (X.rows() < 2 || X.cols() < 1) throw InvalidArgument("elm_train: need n >= 2 samples with d >= 1");
    if (X.rows() != y.size()) throw DimensionError("elm_train: X and y disagree on sample count");
    if (hidden_pct > 100.0) throw InvalidArgument("elm_train: hidden_pct must be in (0, 100]");
    if (!X.allFinite()) throw InvalidArgument("elm_train: non-finite input");
    kernel.validate();
    count_classes(y, "elm_train");

    ElmModel base;
    base.projection = generate_projection(hidden_count(hidden_pct, X.rows()), X.cols(), seed);
    base.kernel = kernel;
    const Matrix H = elm_hidden(base.projection, kernel, X);
    const Matrix gram = H.transpose() * H;
    const Vector rhs = H.transpose() * y;
    std::vector<ElmModel> out;
    out.reserve(Cs.size());
    for (double C : Cs) {
        ElmModel m = base;
        m.C = C;
        m.beta = ridge_solve_normal(gram, rhs, C);
        out.push_back(std::move(m));
    }
    return out;
}

inline ElmModel elm_train(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y, double hidden_pct,
                          double C, const KernelSpec& kernel, std::uint64_t seed) {
    const double Cs[] = {C};
    return std::move(elm_train_path(X, y, hidden_pct, Cs, kernel, seed).front());
}

/// Score h(x)^T beta; genuine iff score >= model.threshold.
inline double elm_predict(const ElmModel& m, const Eigen::Ref<const Vector>& x) {
    if (x.size() != m.projection.input_dim())
        throw DimensionError("elm_predict: input dimension " + std::to_string(x.size()) +
                             " does not match model dimension " + std::to_string(m.projection.input_dim()));
    return (elm_hidden(m.projection, m.kernel, x.transpose()) * m.beta)(0, 0);
}

/// a followed by b. Order-sensitive on purpose: this is the non-Siamese pair input.
inline Vector concat_pair(const Vector& a, const Vector& b) {
    Vector out(a.size() + b.size());
    out << a, b;
    return out;
}

inline Vector concat_pair(const PairSample& p) { return concat_pair(p.a, p.b); }

inline Matrix concat_pairs(std::span<const PairSample> pairs) {
    if (pairs.empty()) return Matrix(0, 0);
    Matrix X(static_cast<Eigen::Index>(pairs.size()), pairs.front().a.size() + pairs.front().b.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (pairs[i].a.size() + pairs[i].b.size() != X.cols()) throw DimensionError("concat_pairs: inconsistent pair dimensions");
        X.row(static_cast<Eigen::Index>(i)) = concat_pair(pairs[i]).transpose();
    }
    return X;
}

}  // namespace selm
