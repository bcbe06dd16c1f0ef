#pragma once

// Independent oracles and fixed datasets shared by the unit tests and the acceptance runner.
// Oracles avoid the library's own numerics wherever it matters.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "selm/selm.hpp"

namespace fixtures {

using selm::Matrix;
using selm::Vector;

/// Gaussian elimination with partial pivoting on a dense copy.
inline std::vector<double> gauss_solve(std::vector<std::vector<double>> A, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(A[r][col]) > std::fabs(A[piv][col])) piv = r;
        std::swap(A[col], A[piv]);
        std::swap(b[col], b[piv]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = A[r][col] / A[col][col];
            for (std::size_t k = col; k < n; ++k) A[r][k] -= f * A[col][k];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= A[i][k] * x[k];
        x[i] = s / A[i][i];
    }
    return x;
}

/// ((1/C) I + H^T H) beta = H^T t, assembled with plain loops and solved by elimination.
inline std::vector<double> ridge_oracle(const std::vector<std::vector<double>>& H, const std::vector<double>& t, double C) {
    const std::size_t n = H.size();
    const std::size_t l = H.front().size();
    std::vector<std::vector<double>> A(l, std::vector<double>(l, 0.0));
    std::vector<double> rhs(l, 0.0);
    for (std::size_t i = 0; i < l; ++i) {
        for (std::size_t j = 0; j < l; ++j)
            for (std::size_t r = 0; r < n; ++r) A[i][j] += H[r][i] * H[r][j];
        A[i][i] += 1.0 / C;
        for (std::size_t r = 0; r < n; ++r) rhs[i] += H[r][i] * t[r];
    }
    return gauss_solve(A, rhs);
}

/// Minimizes 1/2 |H b - t|^2 + 1/(2C) |b|^2 by gradient descent with a step of
/// 1/L (L the largest eigenvalue bound), run until the gradient vanishes.
inline Vector gd_ridge(const Matrix& H, const Vector& t, double C) {
    const Matrix A = H.transpose() * H + Matrix::Identity(H.cols(), H.cols()) / C;
    const Vector rhs = H.transpose() * t;
    double L = 0.0;
    for (Eigen::Index i = 0; i < A.rows(); ++i) L = std::max(L, A.row(i).cwiseAbs().sum());
    const double step = 1.0 / L;
    Vector b = Vector::Zero(H.cols());
    for (int it = 0; it < 2'000'000; ++it) {
        const Vector g = A * b - rhs;
        b -= step * g;
        if (g.norm() < 1e-13 * (1.0 + rhs.norm())) break;
    }
    return b;
}

/// Counts genuine-over-impostor wins over every pair, ties credited 1/2.
inline double brute_auc(const std::vector<double>& scores, const std::vector<selm::PairLabel>& labels) {
    double wins = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != selm::PairLabel::Genuine) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != selm::PairLabel::Impostor) continue;
            total += 1.0;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / total;
}

/// Cohort prediction by the nearest training-pose centroid.
inline double nearest_centroid_accuracy(const selm::Dataset& train, const selm::Dataset& test) {
    std::array<Vector, 6> sum;
    std::array<double, 6> count{};
    for (const auto& rec : train)
        for (const auto& p : rec.poses) {
            auto& s = sum[rec.cohort.index()];
            if (s.size() == 0) s = Vector::Zero(p.size());
            s += p;
            count[rec.cohort.index()] += 1.0;
        }
    std::size_t ok = 0;
    std::size_t n = 0;
    for (const auto& rec : test)
        for (const auto& p : rec.poses) {
            std::size_t best = 0;
            double best_d = INFINITY;
            for (std::size_t c = 0; c < 6; ++c) {
                if (count[c] == 0.0) continue;
                const double d = (p - sum[c] / count[c]).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            ok += best == rec.cohort.index() ? 1 : 0;
            ++n;
        }
    return static_cast<double>(ok) / static_cast<double>(n);
}

struct LabeledPoints {
    Matrix X;
    Vector y;
};

/// Two Gaussian clusters in the plane, labels +1 around (2, 2) and -1 around (-2, -2).
inline LabeledPoints two_clusters(std::size_t n, std::uint64_t seed, double spread = 0.5) {
    auto rng = selm::CounterRng::stream(seed, "two-clusters");
    LabeledPoints p{Matrix(static_cast<Eigen::Index>(n), 2), Vector(static_cast<Eigen::Index>(n))};
    for (Eigen::Index i = 0; i < p.X.rows(); ++i) {
        const double s = i % 2 == 0 ? 1.0 : -1.0;
        p.X(i, 0) = 2.0 * s + spread * rng.normal();
        p.X(i, 1) = 2.0 * s + spread * rng.normal();
        p.y[i] = s;
    }
    return p;
}

/// Fraction of rows whose centroid-rule label (closer to the positive mean) matches y.
inline double centroid_rule_accuracy(const LabeledPoints& p) {
    Vector mp = Vector::Zero(p.X.cols());
    Vector mn = Vector::Zero(p.X.cols());
    double np = 0;
    double nn = 0;
    for (Eigen::Index i = 0; i < p.X.rows(); ++i) {
        if (p.y[i] > 0) {
            mp += p.X.row(i).transpose();
            np += 1;
        } else {
            mn += p.X.row(i).transpose();
            nn += 1;
        }
    }
    mp /= np;
    mn /= nn;
    std::size_t ok = 0;
    for (Eigen::Index i = 0; i < p.X.rows(); ++i) {
        const Vector x = p.X.row(i).transpose();
        const double pred = (x - mp).squaredNorm() <= (x - mn).squaredNorm() ? 1.0 : -1.0;
        ok += pred == p.y[i] ? 1 : 0;
    }
    return static_cast<double>(ok) / static_cast<double>(p.X.rows());
}

inline selm::PairSample pair(Vector a, Vector b, selm::PairLabel label) { return {std::move(a), std::move(b), label, {}}; }

/// Four tight two-dimensional identity clusters; genuine pairs stay inside one
/// cluster, impostor pairs cross clusters.
inline std::vector<selm::PairSample> eight_pairs() {
    using selm::PairLabel;
    const double c[4][2] = {{0, 0}, {4, 0}, {0, 4}, {4, 4}};
    auto pt = [&](int k, double dx, double dy) { return Vector{{c[k][0] + dx, c[k][1] + dy}}; };
    return {
        pair(pt(0, 0.10, 0.00), pt(0, 0.00, 0.10), PairLabel::Genuine),
        pair(pt(1, 0.00, 0.05), pt(1, 0.10, 0.00), PairLabel::Genuine),
        pair(pt(2, -0.05, 0.0), pt(2, 0.05, 0.05), PairLabel::Genuine),
        pair(pt(3, 0.00, -0.1), pt(3, 0.05, 0.00), PairLabel::Genuine),
        pair(pt(0, 0.05, 0.05), pt(1, 0.00, 0.00), PairLabel::Impostor),
        pair(pt(1, 0.05, 0.00), pt(3, 0.00, 0.05), PairLabel::Impostor),
        pair(pt(2, 0.00, 0.00), pt(0, 0.00, 0.05), PairLabel::Impostor),
        pair(pt(3, 0.05, 0.05), pt(0, 0.10, 0.10), PairLabel::Impostor),
    };
}

/// Order-dependent pair data: genuine pairs put a near (1, 0) and b near (0, 1);
/// impostor pairs carry the mirrored arrangement.
inline std::vector<selm::PairSample> asymmetric_pairs(std::size_t n, std::uint64_t seed) {
    auto rng = selm::CounterRng::stream(seed, "asymmetric-pairs");
    std::vector<selm::PairSample> out;
    for (std::size_t i = 0; i < n; ++i) {
        Vector u{{1.0 + 0.2 * rng.normal(), 0.2 * rng.normal()}};
        Vector v{{0.2 * rng.normal(), 1.0 + 0.2 * rng.normal()}};
        if (i % 2 == 0) out.push_back(pair(u, v, selm::PairLabel::Genuine));
        else out.push_back(pair(v, u, selm::PairLabel::Impostor));
    }
    return out;
}

/// Fixed 1:9 imbalanced pair set: 60 genuine and 540 impostor pairs on each
/// side, from disjoint halves of one synthetic corpus. Genuine pairs share an
/// identity, impostors are drawn inside one cohort.
struct ImbalancedSet {
    std::vector<selm::PairSample> train;
    std::vector<selm::PairSample> test;
};

inline ImbalancedSet imbalanced_pairs() {
    selm::SyntheticConfig cfg;
    cfg.identities_per_cohort = 20;
    cfg.poses_per_identity = 2;
    cfg.dim = 8;
    cfg.cohort_separation = 10.0;
    cfg.identity_spread = 1.0;
    cfg.pose_noise = 0.6;
    cfg.seed = 9;
    const auto data = selm::generate_synthetic_cohorts(cfg);
    selm::Dataset a;
    selm::Dataset b;
    for (std::size_t i = 0; i < data.size(); ++i) (i % 2 == 0 ? a : b).push_back(data[i]);
    ImbalancedSet s;
    s.train = selm::make_pairs(a, {91, 9.0, true});
    s.test = selm::make_pairs(b, {92, 9.0, true});
    return s;
}

/// Recall of genuine pairs at the model's decision threshold of 0.
inline double minority_recall(const selm::WelmModel& m, const std::vector<selm::PairSample>& pairs,
                              selm::SiameseCondition cond) {
    std::size_t hit = 0;
    std::size_t total = 0;
    for (const auto& p : pairs) {
        if (p.label != selm::PairLabel::Genuine) continue;
        ++total;
        if (selm::welm_predict(m, selm::siamese_combine(cond, p.a, p.b)) >= 0.0) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(total);
}

/// Relative gap between analytic and central-difference gradients of the mean
/// triplet loss over every weight and bias; triplets within 1e-6 of the kink are dropped.
struct GradientCheck {
    double max_rel_error = 0.0;
    std::size_t parameters = 0;
    std::size_t triplets_used = 0;
};

inline GradientCheck gradient_check(selm::TripletNet net, std::vector<selm::Triplet> batch, double alpha,
                                    double step = 1e-5) {
    std::erase_if(batch, [&](const selm::Triplet& t) {
        const auto d = selm::triplet_distances(net, t.anchor, t.positive, t.negative);
        return std::fabs(d.positive - d.negative + alpha) < 1e-6;
    });
    GradientCheck out;
    out.triplets_used = batch.size();
    auto grad = net.zero_gradient();
    selm::triplet_batch_loss(net, batch, alpha, &grad);
    auto probe = [&](double& param, double analytic) {
        const double saved = param;
        param = saved + step;
        const double up = selm::triplet_batch_loss(net, batch, alpha);
        param = saved - step;
        const double down = selm::triplet_batch_loss(net, batch, alpha);
        param = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double scale = std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
        out.max_rel_error = std::max(out.max_rel_error, std::fabs(analytic - numeric) / scale);
        ++out.parameters;
    };
    for (std::size_t k = 0; k < net.layers().size(); ++k) {
        auto& layer = net.layers()[k];
        for (Eigen::Index i = 0; i < layer.weights.rows(); ++i)
            for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) probe(layer.weights(i, j), grad[k].weights(i, j));
        for (Eigen::Index i = 0; i < layer.biases.size(); ++i) probe(layer.biases[i], grad[k].biases[i]);
    }
    return out;
}

/// Three seeded triplets in d_in dimensions.
inline std::vector<selm::Triplet> three_triplets(Eigen::Index d, std::uint64_t seed) {
    auto rng = selm::CounterRng::stream(seed, "gradient-triplets");
    auto draw = [&] {
        Vector v(d);
        for (Eigen::Index i = 0; i < d; ++i) v[i] = rng.normal();
        return v;
    };
    std::vector<selm::Triplet> out;
    for (int i = 0; i < 3; ++i) {
        Vector a = draw();
        Vector p = a + 0.3 * draw();
        out.push_back({a, p, draw()});
    }
    return out;
}

/// The triplet regression setup: 2 training identities per cohort, 2 held out,
/// 3 poses each in 8 dimensions, all drawn from seed 3.
struct TripletBench {
    selm::Dataset train;
    selm::Dataset heldout;
};

inline TripletBench triplet_bench() {
    selm::SyntheticConfig c;
    c.identities_per_cohort = 4;
    c.poses_per_identity = 3;
    c.dim = 8;
    c.seed = 3;
    TripletBench b;
    std::array<int, 6> seen{};
    for (auto& r : selm::generate_synthetic_cohorts(c)) (seen[r.cohort.index()]++ < 2 ? b.train : b.heldout).push_back(r);
    return b;
}

inline selm::TripletConfig triplet_bench_config() {
    selm::TripletConfig t;
    t.alpha = 0.2;
    t.epochs = 200;
    t.seed = 3;
    return t;
}

/// Held-out data for the end-to-end framework regression.
struct FrameworkBench {
    selm::DatasetSplit split;
    std::vector<selm::PairSample> test_pairs;
};

inline FrameworkBench framework_bench() {
    auto dc = selm::benchmark_data_config();
    dc.seed = 1;
    FrameworkBench b;
    b.split = selm::split_by_identity(selm::generate_synthetic_cohorts(dc), {0.6, 0.1, 0.3, 5});
    b.test_pairs = selm::make_pairs(b.split.test, {11, 1.0, false});
    return b;
}

inline selm::FrameworkConfig framework_bench_config() {
    selm::FrameworkConfig fc;
    fc.seed = 7;
    return fc;
}

}  // namespace fixtures
