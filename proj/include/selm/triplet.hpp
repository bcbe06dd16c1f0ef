#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "selm/core_types.hpp"
#include "selm/random.hpp"

namespace selm {

struct DenseLayer {
    Matrix weights;  // out x in
    Vector biases;   // out

    friend bool operator==(const DenseLayer& a, const DenseLayer& b) {
        return a.weights.rows() == b.weights.rows() && a.weights.cols() == b.weights.cols() &&
               a.weights == b.weights && a.biases == b.biases;
    }
};

/// Shared-weight feedforward backbone: tanh hidden layers, linear output layer,
/// optional projection of the output onto the unit sphere.
///
/// A net with no layers is the identity map on its input dimension.
class TripletNet {
public:
    TripletNet() = default;

    TripletNet(Eigen::Index input_dim, std::vector<DenseLayer> layers, bool normalize_output = false)
        : input_dim_(input_dim), layers_(std::move(layers)), normalize_(normalize_output) {
        Eigen::Index in = input_dim_;
        for (const auto& layer : layers_) {
            if (layer.weights.cols() != in || layer.biases.size() != layer.weights.rows())
                throw DimensionError("TripletNet: layer shapes do not chain");
            in = layer.weights.rows();
        }
    }

    static TripletNet identity(Eigen::Index dim) { return TripletNet(dim, {}, false); }

    /// sizes = {d_in, hidden..., d_out}; weights uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    static TripletNet random(const std::vector<Eigen::Index>& sizes, std::uint64_t seed, bool normalize_output = false) {
        if (sizes.size() < 2) throw InvalidArgument("TripletNet::random: need at least input and output sizes");
        auto rng = CounterRng::stream(seed, "triplet-init");
        std::vector<DenseLayer> layers;
        for (std::size_t k = 1; k < sizes.size(); ++k) {
            const Eigen::Index in = sizes[k - 1];
            const Eigen::Index out = sizes[k];
            if (in < 1 || out < 1) throw InvalidArgument("TripletNet::random: layer sizes must be >= 1");
            const double bound = 1.0 / std::sqrt(static_cast<double>(in));
            DenseLayer layer{Matrix(out, in), Vector(out)};
            for (Eigen::Index i = 0; i < out; ++i)
                for (Eigen::Index j = 0; j < in; ++j) layer.weights(i, j) = rng.uniform(-bound, bound);
            for (Eigen::Index i = 0; i < out; ++i) layer.biases[i] = rng.uniform(-bound, bound);
            layers.push_back(std::move(layer));
        }
        return TripletNet(sizes.front(), std::move(layers), normalize_output);
    }

    Eigen::Index input_dim() const noexcept { return input_dim_; }
    Eigen::Index output_dim() const noexcept { return layers_.empty() ? input_dim_ : layers_.back().weights.rows(); }
    bool normalizes_output() const noexcept { return normalize_; }

    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::vector<DenseLayer>& layers() noexcept { return layers_; }

    /// Per-layer activations of a forward pass over the columns of a batch; acts[0] is the input.
    struct Trace {
        std::vector<Matrix> acts;
        Matrix output;
        Eigen::RowVectorXd pre_norm;  // column norms of acts.back() when the output is normalized
    };

    Trace trace(const Eigen::Ref<const Matrix>& X) const {
        if (X.rows() != input_dim_)
            throw DimensionError("embed: input dimension " + std::to_string(X.rows()) + " does not match net input " +
                                 std::to_string(input_dim_));
        Trace t;
        t.acts.reserve(layers_.size() + 1);
        t.acts.emplace_back(X);
        for (std::size_t k = 0; k < layers_.size(); ++k) {
            Matrix z = layers_[k].weights * t.acts.back();
            z.colwise() += layers_[k].biases;
            if (k + 1 < layers_.size()) z = z.array().tanh();
            t.acts.push_back(std::move(z));
        }
        t.output = t.acts.back();
        if (normalize_) {
            t.pre_norm = t.output.colwise().norm();
            for (Eigen::Index j = 0; j < t.output.cols(); ++j)
                if (t.pre_norm[j] > 0.0) t.output.col(j) /= t.pre_norm[j];
        }
        return t;
    }

    Vector forward(const Eigen::Ref<const Vector>& x) const { return trace(x).output.col(0); }

    /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output), one column per sample.
    void backward(const Trace& t, const Matrix& d_output, std::vector<DenseLayer>& grad) const {
        Matrix da = d_output;
        if (normalize_)
            for (Eigen::Index j = 0; j < da.cols(); ++j)
                if (t.pre_norm[j] > 0.0)
                    da.col(j) = (da.col(j) - t.output.col(j) * t.output.col(j).dot(da.col(j))) / t.pre_norm[j];
        for (std::size_t k = layers_.size(); k-- > 0;) {
            Matrix dz = da;
            if (k + 1 < layers_.size()) dz.array() *= 1.0 - t.acts[k + 1].array().square();
            grad[k].weights.noalias() += dz * t.acts[k].transpose();
            grad[k].biases += dz.rowwise().sum();
            if (k > 0) da.noalias() = layers_[k].weights.transpose() * dz;
        }
    }

    std::vector<DenseLayer> zero_gradient() const {
        std::vector<DenseLayer> g;
        for (const auto& l : layers_)
            g.push_back({Matrix::Zero(l.weights.rows(), l.weights.cols()), Vector::Zero(l.biases.size())});
        return g;
    }

    friend bool operator==(const TripletNet&, const TripletNet&) = default;

private:
    Eigen::Index input_dim_ = 0;
    std::vector<DenseLayer> layers_;
    bool normalize_ = false;
};

inline Vector embed(const TripletNet& net, const Eigen::Ref<const Vector>& x) { return net.forward(x); }

struct TripletDistances {
    double positive;  // |Net(x) - Net(x+)|^2
    double negative;  // |Net(x) - Net(x-)|^2
};

/// Squared embedded distances; all three inputs go through the same net instance.
inline TripletDistances triplet_distances(const TripletNet& net, const Eigen::Ref<const Vector>& x,
                                          const Eigen::Ref<const Vector>& x_pos, const Eigen::Ref<const Vector>& x_neg) {
    const Vector e = net.forward(x);
    return {(e - net.forward(x_pos)).squaredNorm(), (e - net.forward(x_neg)).squaredNorm()};
}

/// [d_p - d_n + alpha]_+
inline double triplet_loss(double d_pos, double d_neg, double alpha) noexcept {
    return std::max(0.0, d_pos - d_neg + alpha);
}

struct Triplet {
    Vector anchor;
    Vector positive;
    Vector negative;
};

/// Mean hinge loss over `batch`; adds the gradient of that mean into `grad` when non-null.
/// At the hinge kink (d_p - d_n + alpha == 0) the subgradient is taken as 0.
inline double triplet_batch_loss(const TripletNet& net, std::span<const Triplet> batch, double alpha,
                                 std::vector<DenseLayer>* grad = nullptr) {
    if (batch.empty()) return 0.0;
    const auto n = static_cast<Eigen::Index>(batch.size());
    const Eigen::Index d = net.input_dim();
    Matrix A(d, n);
    Matrix P(d, n);
    Matrix N(d, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto& tr = batch[static_cast<std::size_t>(j)];
        if (tr.anchor.size() != d || tr.positive.size() != d || tr.negative.size() != d)
            throw DimensionError("triplet: input dimension does not match net input");
        A.col(j) = tr.anchor;
        P.col(j) = tr.positive;
        N.col(j) = tr.negative;
    }
    const auto ta = net.trace(A);
    const auto tp = net.trace(P);
    const auto tn = net.trace(N);
    Matrix dp = ta.output - tp.output;
    Matrix dn = ta.output - tn.output;
    const Eigen::RowVectorXd margin =
        (dp.colwise().squaredNorm() - dn.colwise().squaredNorm()).array() + alpha;
    const double scale = 1.0 / static_cast<double>(n);
    double total = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (margin[j] > 0.0) {
            total += margin[j];
        } else {
            dp.col(j).setZero();
            dn.col(j).setZero();
        }
    }
    if (grad != nullptr) {
        net.backward(ta, (2.0 * scale) * (dp - dn), *grad);
        net.backward(tp, (-2.0 * scale) * dp, *grad);
        net.backward(tn, (2.0 * scale) * dn, *grad);
    }
    return total * scale;
}

/// Fraction of triplets with d_n >= d_p + alpha.
inline double triplet_satisfaction(const TripletNet& net, std::span<const Triplet> triplets, double alpha) {
    if (triplets.empty()) return 0.0;
    std::size_t ok = 0;
    for (const auto& tr : triplets) {
        const auto d = triplet_distances(net, tr.anchor, tr.positive, tr.negative);
        if (d.negative >= d.positive + alpha) ++ok;
    }
    return static_cast<double>(ok) / static_cast<double>(triplets.size());
}

/// Every (anchor, positive, negative) combination: ordered distinct pose pairs
/// within an identity, times every pose of every other identity.
inline std::vector<Triplet> enumerate_triplets(const Dataset& data) {
    std::vector<Triplet> out;
    for (std::size_t i = 0; i < data.size(); ++i)
        for (std::size_t p = 0; p < data[i].poses.size(); ++p)
            for (std::size_t q = 0; q < data[i].poses.size(); ++q) {
                if (p == q) continue;
                for (std::size_t j = 0; j < data.size(); ++j) {
                    if (j == i) continue;
                    for (const auto& neg : data[j].poses) out.push_back({data[i].poses[p], data[i].poses[q], neg});
                }
            }
    return out;
}

struct TripletConfig {
    double alpha = 0.2;
    double learning_rate = 0.05;
    int epochs = 200;
    int batch_size = 16;
    std::uint64_t seed = 0;
    std::vector<Eigen::Index> hidden{32, 32};
    Eigen::Index output_dim = 8;
    bool normalize_output = false;

    void validate() const {
        if (!(alpha >= 0.0)) throw InvalidArgument("triplet config: alpha must be >= 0");
        if (!(learning_rate > 0.0)) throw InvalidArgument("triplet config: learning rate must be > 0");
        if (epochs < 0 || batch_size < 1) throw InvalidArgument("triplet config: epochs >= 0 and batch size >= 1");
        if (output_dim < 1) throw InvalidArgument("triplet config: output dimension must be >= 1");
    }
};

/// Unit-norm embeddings with a wide margin, as used by the framework and the benchmark.
inline TripletConfig sphere_triplet_config() {
    TripletConfig c;
    c.alpha = 1.0;
    c.normalize_output = true;
    return c;
}

/// Seeded random triplets for one epoch: for each identity and each ordered pair
/// of its distinct poses, a uniformly drawn pose of a uniformly drawn other identity.
inline std::vector<Triplet> sample_epoch_triplets(const Dataset& data, CounterRng& rng) {
    std::vector<Triplet> out;
    for (std::size_t i = 0; i < data.size(); ++i)
        for (std::size_t p = 0; p < data[i].poses.size(); ++p)
            for (std::size_t q = 0; q < data[i].poses.size(); ++q) {
                if (p == q) continue;
                auto j = static_cast<std::size_t>(rng.below(data.size() - 1));
                if (j >= i) ++j;
                const auto& neg = data[j].poses[static_cast<std::size_t>(rng.below(data[j].poses.size()))];
                out.push_back({data[i].poses[p], data[i].poses[q], neg});
            }
    rng.shuffle(out);
    return out;
}

struct TrainingTrace {
    /// Mean loss over a fixed seeded triplet sample; entry e is measured after e epochs.
    std::vector<double> loss;
};

using CohortPredicate = std::function<bool(const Cohort&)>;

/// Mini-batch gradient descent on the mean triplet loss over seeded random triplets.
inline TripletNet train_embedder(const Dataset& dataset, const CohortPredicate& scope_filter,
                                 const TripletConfig& config, TrainingTrace* trace = nullptr) {
    config.validate();
    Dataset data;
    for (const auto& rec : dataset)
        if (!scope_filter || scope_filter(rec.cohort)) data.push_back(rec);
    std::size_t usable = 0;
    for (const auto& rec : data) usable += rec.poses.size() >= 2 ? 1 : 0;
    if (data.size() < 2 || usable < 2 || usable != data.size())
        throw InvalidArgument("train_embedder: need >= 2 identities, each with >= 2 poses (got " +
                              std::to_string(data.size()) + " identities)");
    const Eigen::Index d_in = dataset_dim(data);

    std::vector<Eigen::Index> sizes{d_in};
    sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
    sizes.push_back(config.output_dim);
    TripletNet net = TripletNet::random(sizes, config.seed, config.normalize_output);

    std::vector<Triplet> probe;
    if (trace != nullptr) {
        auto probe_rng = CounterRng::stream(config.seed, "triplet-probe");
        probe = sample_epoch_triplets(data, probe_rng);
        trace->loss.assign(1, triplet_batch_loss(net, probe, config.alpha));
    }

    const auto batch = static_cast<std::size_t>(config.batch_size);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        auto rng = CounterRng::stream(config.seed, "triplets", static_cast<std::uint64_t>(epoch));
        const auto triplets = sample_epoch_triplets(data, rng);
        for (std::size_t start = 0; start < triplets.size(); start += batch) {
            const auto count = std::min(batch, triplets.size() - start);
            auto grad = net.zero_gradient();
            triplet_batch_loss(net, std::span<const Triplet>(triplets).subspan(start, count), config.alpha, &grad);
            for (std::size_t k = 0; k < grad.size(); ++k) {
                net.layers()[k].weights -= config.learning_rate * grad[k].weights;
                net.layers()[k].biases -= config.learning_rate * grad[k].biases;
            }
        }
        if (trace != nullptr) trace->loss.push_back(triplet_batch_loss(net, probe, config.alpha));
    }
    return net;
}

enum class FeatureScope : std::uint8_t { SI, GD, GED };

inline std::string_view to_string(FeatureScope s) noexcept {
    switch (s) {
        case FeatureScope::SI: return "SI";
        case FeatureScope::GD: return "GD";
        case FeatureScope::GED: return "GED";
    }
    return "?";
}

inline std::optional<FeatureScope> parse_scope(std::string_view s) noexcept {
    for (auto v : {FeatureScope::SI, FeatureScope::GD, FeatureScope::GED})
        if (s == to_string(v)) return v;
    return std::nullopt;
}

/// Routing key of a cohort under a scope: "all", a gender, or a gender-ethnicity pair.
inline std::string scope_key(FeatureScope scope, const Cohort& c) {
    switch (scope) {
        case FeatureScope::SI: return "all";
        case FeatureScope::GD: return std::string(to_string(c.gender));
        case FeatureScope::GED: return to_string(c);
    }
    return "all";
}

/// Keys of a scope in fixed cohort order.
inline std::vector<std::string> scope_keys(FeatureScope scope) {
    std::vector<std::string> keys;
    for (const auto& c : kAllCohorts) {
        auto k = scope_key(scope, c);
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(std::move(k));
    }
    return keys;
}

struct EmbedderRegistry {
    FeatureScope scope = FeatureScope::SI;
    std::map<std::string, TripletNet> models;

    const TripletNet& route(const Cohort& c) const {
        const auto it = models.find(scope_key(scope, c));
        if (it == models.end()) throw InvalidArgument("registry has no model for key '" + scope_key(scope, c) + "'");
        return it->second;
    }

    friend bool operator==(const EmbedderRegistry&, const EmbedderRegistry&) = default;
};

/// Per-key seed so cohort nets draw independent streams from one config seed.
inline std::uint64_t scope_seed(std::uint64_t seed, std::string_view key) {
    return CounterRng::stream(seed, std::string("registry:") + std::string(key)).next_u64();
}

/// One embedder per scope key. For GD and GED every cohort slice is first cut
/// to the smallest cohort's identity count so each model sees equal samples per cohort.
inline EmbedderRegistry build_registry(const Dataset& dataset, FeatureScope scope, const TripletConfig& config) {
    std::array<std::size_t, 6> per_cohort{};
    for (const auto& rec : dataset) ++per_cohort[rec.cohort.index()];

    Dataset train = dataset;
    if (scope != FeatureScope::SI) {
        std::size_t min_size = dataset.size();
        for (const auto& c : kAllCohorts) {
            if (per_cohort[c.index()] == 0) throw InvalidArgument("build_registry: missing cohort " + to_string(c));
            min_size = std::min(min_size, per_cohort[c.index()]);
        }
        train.clear();
        std::array<std::size_t, 6> taken{};
        for (const auto& rec : dataset)
            if (taken[rec.cohort.index()]++ < min_size) train.push_back(rec);
    }

    EmbedderRegistry reg{scope, {}};
    for (const auto& key : scope_keys(scope)) {
        TripletConfig cfg = config;
        cfg.seed = scope_seed(config.seed, key);
        reg.models.emplace(key, train_embedder(
                                    train, [scope, key](const Cohort& c) { return scope_key(scope, c) == key; }, cfg));
    }
    return reg;
}

}  // namespace selm
