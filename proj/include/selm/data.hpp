#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "selm/core_types.hpp"
#include "selm/random.hpp"

namespace selm {

/// Desk-scale stand-in for a six-cohort face-embedding corpus.
///
/// Cohort centres sit on scaled orthonormal directions (pairwise distance
/// separation * sqrt(2)). Each cohort owns a random `identity_rank`-dimensional
/// subspace; identity centres are offset inside it with RMS norm
/// `identity_spread`. Poses add isotropic noise with RMS norm `pose_noise`, plus
/// optional nuisance variation of RMS norm `nuisance` spread over the other five
/// cohorts' identity subspaces: directions that identify people in one cohort
/// only carry pose changes in the rest.
struct SyntheticConfig {
    std::size_t identities_per_cohort = 10;
    std::size_t poses_per_identity = 3;
    Eigen::Index dim = 16;
    double cohort_separation = 10.0;
    double identity_spread = 1.0;
    double pose_noise = 0.1;
    Eigen::Index identity_rank = 0;  // 0 means the full dimension
    double nuisance = 0.0;
    std::uint64_t seed = 0;

    Eigen::Index effective_rank() const noexcept { return identity_rank <= 0 ? dim : identity_rank; }

    void validate() const {
        if (identities_per_cohort < 1 || poses_per_identity < 1)
            throw InvalidArgument("synthetic: need >= 1 identity per cohort and >= 1 pose");
        if (dim < 6) throw InvalidArgument("synthetic: dim must be >= 6 to place six orthogonal cohort centres");
        if (!(pose_noise > 0.0 && pose_noise < identity_spread && identity_spread < cohort_separation))
            throw InvalidArgument("synthetic: require 0 < pose noise < identity spread < cohort separation");
        if (identity_rank < 0 || identity_rank > dim) throw InvalidArgument("synthetic: identity rank must be in [0, dim]");
        if (!(nuisance >= 0.0)) throw InvalidArgument("synthetic: nuisance must be >= 0");
    }
};

namespace detail {

/// Orthonormal columns from seeded Gaussian draws (modified Gram-Schmidt).
inline Matrix random_orthonormal(Eigen::Index dim, Eigen::Index cols, CounterRng& rng) {
    Matrix q(dim, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (;;) {
            Vector v(dim);
            for (Eigen::Index i = 0; i < dim; ++i) v[i] = rng.normal();
            for (Eigen::Index k = 0; k < j; ++k) v -= q.col(k).dot(v) * q.col(k);
            const double n = v.norm();
            if (n > 1e-6) {
                q.col(j) = v / n;
                break;
            }
        }
    }
    return q;
}

inline std::string identity_name(const Cohort& c, std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04zu", i);
    return to_string(c) + "-" + buf;
}

}  // namespace detail

inline Dataset generate_synthetic_cohorts(const SyntheticConfig& cfg) {
    cfg.validate();
    auto center_rng = CounterRng::stream(cfg.seed, "cohort-centres");
    const Matrix centres = cfg.cohort_separation * detail::random_orthonormal(cfg.dim, 6, center_rng);
    const Eigen::Index rank = cfg.effective_rank();
    const double id_scale = cfg.identity_spread / std::sqrt(static_cast<double>(rank));
    const double pose_scale = cfg.pose_noise / std::sqrt(static_cast<double>(cfg.dim));

    std::array<Matrix, 6> bases;
    for (const auto& c : kAllCohorts) {
        auto basis_rng = CounterRng::stream(cfg.seed, "identity-basis", static_cast<std::uint64_t>(c.index()));
        bases[c.index()] = detail::random_orthonormal(cfg.dim, rank, basis_rng);
    }
    const double nuisance_scale = cfg.nuisance / std::sqrt(5.0 * static_cast<double>(rank));

    Dataset out;
    for (const auto& c : kAllCohorts) {
        const auto ci = static_cast<std::uint64_t>(c.index());
        const Matrix& basis = bases[c.index()];
        auto rng = CounterRng::stream(cfg.seed, "identities", ci);
        for (std::size_t i = 0; i < cfg.identities_per_cohort; ++i) {
            Vector z(rank);
            for (Eigen::Index k = 0; k < rank; ++k) z[k] = rng.normal();
            const Vector centre = centres.col(static_cast<Eigen::Index>(c.index())) + id_scale * (basis * z);
            IdentityRecord rec{detail::identity_name(c, i), c, {}};
            for (std::size_t p = 0; p < cfg.poses_per_identity; ++p) {
                Vector pose = centre;
                for (Eigen::Index k = 0; k < cfg.dim; ++k) pose[k] += pose_scale * rng.normal();
                if (cfg.nuisance > 0.0)
                    for (const auto& other : kAllCohorts) {
                        if (other == c) continue;
                        for (Eigen::Index k = 0; k < rank; ++k) z[k] = rng.normal();
                        pose += nuisance_scale * (bases[other.index()] * z);
                    }
                rec.poses.push_back(std::move(pose));
            }
            out.push_back(std::move(rec));
        }
    }
    return out;
}

struct SplitSpec {
    double train = 0.60;
    double validation = 0.10;
    double test = 0.30;
    std::uint64_t seed = 0;
};

struct DatasetSplit {
    Dataset train;
    Dataset validation;
    Dataset test;
};

inline constexpr std::size_t kMinIdentitiesPerCohortForSplit = 10;

/// Identity-level split stratified by cohort: shuffle each cohort's identities,
/// cut validation and test by rounded fractions, give train the remainder.
/// Records keep their original relative order inside each split.
inline DatasetSplit split_by_identity(const Dataset& dataset, const SplitSpec& spec) {
    if (std::abs(spec.train + spec.validation + spec.test - 1.0) > 1e-9 || spec.train < 0 || spec.validation < 0 ||
        spec.test < 0)
        throw InvalidArgument("split: fractions must be non-negative and sum to 1");
    std::array<std::vector<std::size_t>, 6> members;
    for (std::size_t i = 0; i < dataset.size(); ++i) members[dataset[i].cohort.index()].push_back(i);

    enum class Part { Train, Validation, Test };
    std::vector<Part> part(dataset.size(), Part::Train);
    for (const auto& c : kAllCohorts) {
        auto& ids = members[c.index()];
        if (ids.empty()) continue;
        if (ids.size() < kMinIdentitiesPerCohortForSplit)
            throw InvalidArgument("split: cohort " + to_string(c) + " has " + std::to_string(ids.size()) +
                                  " identities; need at least " + std::to_string(kMinIdentitiesPerCohortForSplit));
        auto rng = CounterRng::stream(spec.seed, "split", static_cast<std::uint64_t>(c.index()));
        rng.shuffle(ids);
        const auto n = static_cast<double>(ids.size());
        const auto n_val = static_cast<std::size_t>(std::llround(spec.validation * n));
        const auto n_test = static_cast<std::size_t>(std::llround(spec.test * n));
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (k < n_val) part[ids[k]] = Part::Validation;
            else if (k < n_val + n_test) part[ids[k]] = Part::Test;
        }
    }
    DatasetSplit s;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        switch (part[i]) {
            case Part::Train: s.train.push_back(dataset[i]); break;
            case Part::Validation: s.validation.push_back(dataset[i]); break;
            case Part::Test: s.test.push_back(dataset[i]); break;
        }
    }
    return s;
}

struct PairOptions {
    std::uint64_t seed = 0;
    /// Impostor pairs per genuine pair; 1 gives n_P = n_N.
    double negative_ratio = 1.0;
    /// Draw both impostor identities from one cohort.
    bool within_cohort = false;
};

/// Genuine pairs: every unordered pose pair within each identity, in dataset order.
/// Impostor pairs: seeded random poses of two different identities.
inline std::vector<PairSample> make_pairs(const Dataset& dataset, const PairOptions& opts = {}) {
    for (const auto& rec : dataset)
        if (rec.poses.size() < 2)
            throw InvalidArgument("make_pairs: identity '" + rec.identity_id + "' has fewer than 2 poses");
    if (dataset.size() < 2) throw InvalidArgument("make_pairs: need at least two identities");
    if (!(opts.negative_ratio >= 0.0)) throw InvalidArgument("make_pairs: negative ratio must be >= 0");

    std::vector<PairSample> out;
    for (const auto& rec : dataset)
        for (std::size_t p = 0; p < rec.poses.size(); ++p)
            for (std::size_t q = p + 1; q < rec.poses.size(); ++q)
                out.push_back({rec.poses[p], rec.poses[q], PairLabel::Genuine,
                               PairSource{{rec.identity_id, rec.cohort, static_cast<int>(p)},
                                          {rec.identity_id, rec.cohort, static_cast<int>(q)}}});

    std::array<std::vector<std::size_t>, 6> by_cohort;
    for (std::size_t i = 0; i < dataset.size(); ++i) by_cohort[dataset[i].cohort.index()].push_back(i);
    if (opts.within_cohort)
        for (const auto& rec : dataset)
            if (by_cohort[rec.cohort.index()].size() < 2)
                throw InvalidArgument("make_pairs: cohort " + to_string(rec.cohort) +
                                      " needs two identities for within-cohort impostors");

    const auto n_neg = static_cast<std::size_t>(std::llround(opts.negative_ratio * static_cast<double>(out.size())));
    auto rng = CounterRng::stream(opts.seed, "pairs");
    for (std::size_t k = 0; k < n_neg; ++k) {
        const auto i = static_cast<std::size_t>(rng.below(dataset.size()));
        std::size_t j;
        if (opts.within_cohort) {
            const auto& pool = by_cohort[dataset[i].cohort.index()];
            do j = pool[static_cast<std::size_t>(rng.below(pool.size()))];
            while (j == i);
        } else {
            j = static_cast<std::size_t>(rng.below(dataset.size() - 1));
            if (j >= i) ++j;
        }
        const auto p = static_cast<std::size_t>(rng.below(dataset[i].poses.size()));
        const auto q = static_cast<std::size_t>(rng.below(dataset[j].poses.size()));
        out.push_back({dataset[i].poses[p], dataset[j].poses[q], PairLabel::Impostor,
                       PairSource{{dataset[i].identity_id, dataset[i].cohort, static_cast<int>(p)},
                                  {dataset[j].identity_id, dataset[j].cohort, static_cast<int>(q)}}});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Text formats
// ---------------------------------------------------------------------------

inline constexpr std::string_view kEmbeddingsMagic = "selm-embeddings";
inline constexpr std::string_view kPairsMagic = "selm-pairs";
inline constexpr int kTextFormatVersion = 1;

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline double parse_real(std::string_view s, std::size_t line) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ParseError("invalid number '" + std::string(s) + "'", line);
    if (!std::isfinite(v)) throw ParseError("non-finite number '" + std::string(s) + "'", line);
    return v;
}

inline long long parse_int(std::string_view s, std::size_t line) {
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ParseError("invalid integer '" + std::string(s) + "'", line);
    return v;
}

inline std::string format_real17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Parses `<magic> v<version> dim=<d>`; returns d.
inline Eigen::Index parse_header(std::string_view line, std::string_view magic) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto f = split_fields(line, ' ');
    if (f.size() != 3 || f[0] != magic || f[2].substr(0, 4) != "dim=")
        throw ParseError("malformed header, expected '" + std::string(magic) + " v1 dim=<d>'", 1);
    if (f[1] != "v" + std::to_string(kTextFormatVersion))
        throw VersionError("unsupported " + std::string(magic) + " version '" + std::string(f[1]) + "'");
    const auto d = parse_int(f[2].substr(4), 1);
    if (d < 1) throw ParseError("header dimension must be >= 1", 1);
    return static_cast<Eigen::Index>(d);
}

inline Cohort parse_cohort_fields(std::string_view g, std::string_view e, std::size_t line) {
    const auto gender = parse_gender(g);
    const auto eth = parse_ethnicity(e);
    if (!gender) throw ParseError("unknown gender tag '" + std::string(g) + "'", line);
    if (!eth) throw ParseError("unknown ethnicity tag '" + std::string(e) + "'", line);
    return {*gender, *eth};
}

inline void check_identity_id(const std::string& id) {
    if (id.empty() || id.find_first_of(",\n\r ") != std::string::npos)
        throw InvalidArgument("identity id '" + id + "' must be non-empty without commas, spaces or newlines");
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open '" + path + "' for writing");
    return os;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open '" + path + "'");
    return is;
}

}  // namespace detail

/// `selm-embeddings v1 dim=<d>` then `identity_id,gender,ethnicity,pose_index,v1,...,vd`
/// with 17 significant digits per value.
inline void write_embeddings(const Dataset& dataset, std::ostream& os) {
    if (const auto v = dataset_validate(dataset); !v.empty()) throw InvalidArgument("cannot save dataset: " + v.front().message);
    const auto d = dataset_dim(dataset);
    if (d < 1) throw InvalidArgument("cannot save an empty dataset");
    os << kEmbeddingsMagic << " v" << kTextFormatVersion << " dim=" << d << '\n';
    for (const auto& rec : dataset) {
        detail::check_identity_id(rec.identity_id);
        for (std::size_t p = 0; p < rec.poses.size(); ++p) {
            os << rec.identity_id << ',' << to_string(rec.cohort.gender) << ',' << to_string(rec.cohort.ethnicity) << ','
               << p;
            for (Eigen::Index k = 0; k < d; ++k) os << ',' << detail::format_real17(rec.poses[p][k]);
            os << '\n';
        }
    }
}

inline Dataset read_embeddings(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.empty()) throw ParseError("missing header", 1);
    const auto d = detail::parse_header(line, kEmbeddingsMagic);

    Dataset out;
    std::map<std::string, std::size_t, std::less<>> index;
    std::vector<std::map<long long, Vector>> poses;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = detail::split_fields(line);
        if (f.size() != static_cast<std::size_t>(d) + 4)
            throw ParseError("expected " + std::to_string(d) + " values but found " +
                                 std::to_string(f.size() < 4 ? 0 : f.size() - 4),
                             lineno);
        const std::string id(f[0]);
        if (id.empty()) throw ParseError("empty identity id", lineno);
        const Cohort cohort = detail::parse_cohort_fields(f[1], f[2], lineno);
        const auto pose_index = detail::parse_int(f[3], lineno);
        Vector v(d);
        for (Eigen::Index k = 0; k < d; ++k) v[k] = detail::parse_real(f[static_cast<std::size_t>(k) + 4], lineno);

        auto it = index.find(id);
        if (it == index.end()) {
            it = index.emplace(id, out.size()).first;
            out.push_back({id, cohort, {}});
            poses.emplace_back();
        } else if (out[it->second].cohort != cohort) {
            throw ParseError("identity '" + id + "' changes cohort", lineno);
        }
        if (!poses[it->second].emplace(pose_index, std::move(v)).second)
            throw ParseError("duplicate pose " + std::to_string(pose_index) + " for identity '" + id + "'", lineno);
    }
    for (std::size_t i = 0; i < out.size(); ++i)
        for (auto& [k, v] : poses[i]) out[i].poses.push_back(std::move(v));
    return out;
}

inline void save_embeddings(const Dataset& dataset, const std::string& path) {
    auto os = detail::open_out(path);
    write_embeddings(dataset, os);
}

inline Dataset load_embeddings(const std::string& path) {
    auto is = detail::open_in(path);
    return read_embeddings(is);
}

/// `selm-pairs v1 dim=<d>` then
/// `label,id_a,gender_a,ethnicity_a,pose_a,id_b,gender_b,ethnicity_b,pose_b,a1..ad,b1..bd`
/// with label +1 (genuine) or -1 (impostor).
inline void write_pairs(std::span<const PairSample> pairs, std::ostream& os) {
    if (pairs.empty()) throw InvalidArgument("cannot save an empty pair list");
    const auto d = pairs.front().a.size();
    os << kPairsMagic << " v" << kTextFormatVersion << " dim=" << d << '\n';
    for (const auto& p : pairs) {
        if (p.a.size() != d || p.b.size() != d) throw DimensionError("write_pairs: inconsistent pair dimensions");
        if (!p.source) throw InvalidArgument("write_pairs: every pair needs provenance");
        const auto& s = *p.source;
        detail::check_identity_id(s.a.identity_id);
        detail::check_identity_id(s.b.identity_id);
        os << (p.label == PairLabel::Genuine ? "+1" : "-1");
        for (const auto* r : {&s.a, &s.b})
            os << ',' << r->identity_id << ',' << to_string(r->cohort.gender) << ',' << to_string(r->cohort.ethnicity)
               << ',' << r->pose_index;
        for (Eigen::Index k = 0; k < d; ++k) os << ',' << detail::format_real17(p.a[k]);
        for (Eigen::Index k = 0; k < d; ++k) os << ',' << detail::format_real17(p.b[k]);
        os << '\n';
    }
}

inline std::vector<PairSample> read_pairs(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.empty()) throw ParseError("missing header", 1);
    const auto d = detail::parse_header(line, kPairsMagic);
    std::vector<PairSample> out;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = detail::split_fields(line);
        if (f.size() != 9 + 2 * static_cast<std::size_t>(d))
            throw ParseError("expected 9 + 2*" + std::to_string(d) + " fields but found " + std::to_string(f.size()), lineno);
        PairSample p;
        if (f[0] == "+1") p.label = PairLabel::Genuine;
        else if (f[0] == "-1") p.label = PairLabel::Impostor;
        else throw ParseError("label must be +1 or -1", lineno);
        PairSource src;
        src.a = {std::string(f[1]), detail::parse_cohort_fields(f[2], f[3], lineno), static_cast<int>(detail::parse_int(f[4], lineno))};
        src.b = {std::string(f[5]), detail::parse_cohort_fields(f[6], f[7], lineno), static_cast<int>(detail::parse_int(f[8], lineno))};
        p.source = std::move(src);
        p.a.resize(d);
        p.b.resize(d);
        for (Eigen::Index k = 0; k < d; ++k) {
            p.a[k] = detail::parse_real(f[9 + static_cast<std::size_t>(k)], lineno);
            p.b[k] = detail::parse_real(f[9 + static_cast<std::size_t>(d + k)], lineno);
        }
        out.push_back(std::move(p));
    }
    return out;
}

inline void save_pairs(std::span<const PairSample> pairs, const std::string& path) {
    auto os = detail::open_out(path);
    write_pairs(pairs, os);
}

inline std::vector<PairSample> load_pairs(const std::string& path) {
    auto is = detail::open_in(path);
    return read_pairs(is);
}

}  // namespace selm
