#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>

#include <json.hpp>

#include "selm/pipeline.hpp"

namespace selm {

inline constexpr int kModelFormatVersion = 1;

/// Anything that can be written to a model file.
using SavedModel = std::variant<SelmModel, ElmModel, WelmModel, ConcatWelmModel, DistanceModel, EmbedderRegistry,
                                VerificationFramework>;

namespace detail {

using json = nlohmann::ordered_json;

// Non-finite reals have no JSON number form; they travel as strings.
inline json real_to_json(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

inline double real_from_json(const json& j) {
    if (j.is_number()) return j.get<double>();
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw ParseError("model file: bad real '" + s + "'", 0);
}

inline json vector_to_json(const Vector& v) {
    json a = json::array();
    for (double x : v) a.push_back(real_to_json(x));
    return a;
}

inline Vector vector_from_json(const json& j) {
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = real_from_json(j[i]);
    return v;
}

// Row-major payload.
inline json matrix_to_json(const Matrix& m) {
    json data = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index k = 0; k < m.cols(); ++k) data.push_back(real_to_json(m(i, k)));
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline Matrix matrix_from_json(const json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto& data = j.at("data");
    if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols))
        throw ParseError("model file: matrix payload does not match its shape", 0);
    Matrix m(rows, cols);
    std::size_t at = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = real_from_json(data[at++]);
    return m;
}

inline json kernel_to_json(const KernelSpec& k) {
    return json{{"kind", std::string(to_string(k.kind))}, {"rbf_gamma", real_to_json(k.rbf_gamma)}};
}

inline KernelSpec kernel_from_json(const json& j) {
    const auto name = j.at("kind").get<std::string>();
    const auto kind = parse_kernel_kind(name);
    if (!kind) throw ParseError("model file: unknown kernel '" + name + "'", 0);
    return {*kind, real_from_json(j.at("rbf_gamma"))};
}

/// Appends the fields of `body` to `j` in order.
inline void append_fields(json& j, const json& body) {
    for (const auto& [k, v] : body.items()) j[k] = v;
}

inline json header(std::string_view kind) {
    return json{{"format_version", kModelFormatVersion}, {"model_kind", std::string(kind)}};
}

inline json welm_body(const WelmModel& m) {
    return json{{"kernel", kernel_to_json(m.kernel)},
                {"C", real_to_json(m.C)},
                {"anchors", matrix_to_json(m.anchors)},
                {"beta", vector_to_json(m.beta)},
                {"threshold", real_to_json(m.threshold)},
                {"zero_norm", m.zero_norm == ZeroNormPolicy::Throw ? "throw" : "zero-similarity"},
                {"seed", m.seed}};
}

inline WelmModel welm_from_body(const json& j) {
    WelmModel m;
    m.kernel = kernel_from_json(j.at("kernel"));
    m.C = real_from_json(j.at("C"));
    m.anchors = matrix_from_json(j.at("anchors"));
    m.beta = vector_from_json(j.at("beta"));
    m.threshold = real_from_json(j.at("threshold"));
    m.zero_norm = j.at("zero_norm").get<std::string>() == "throw" ? ZeroNormPolicy::Throw : ZeroNormPolicy::ZeroSimilarity;
    m.seed = j.at("seed").get<std::uint64_t>();
    if (m.beta.size() != m.anchors.rows()) throw ParseError("model file: beta length differs from anchor count", 0);
    return m;
}

inline json net_to_json(const TripletNet& net) {
    json layers = json::array();
    for (const auto& l : net.layers())
        layers.push_back(json{{"weights", matrix_to_json(l.weights)}, {"biases", vector_to_json(l.biases)}});
    return json{{"input_dim", net.input_dim()}, {"normalize_output", net.normalizes_output()}, {"layers", std::move(layers)}};
}

inline TripletNet net_from_json(const json& j) {
    std::vector<DenseLayer> layers;
    for (const auto& l : j.at("layers")) layers.push_back({matrix_from_json(l.at("weights")), vector_from_json(l.at("biases"))});
    return TripletNet(j.at("input_dim").get<Eigen::Index>(), std::move(layers), j.at("normalize_output").get<bool>());
}

inline json to_json(const SelmModel& m) {
    json j = header("selm");
    j["condition"] = std::string(to_string(m.condition));
    append_fields(j, welm_body(m.backbone));
    j["cohort_scope"] = m.cohort_scope ? json(to_string(*m.cohort_scope)) : json(nullptr);
    return j;
}

inline json to_json(const ElmModel& m) {
    json j = header("elm");
    j["kernel"] = kernel_to_json(m.kernel);
    j["C"] = real_to_json(m.C);
    j["projection"] = json{{"weights", matrix_to_json(m.projection.weights)},
                           {"biases", vector_to_json(m.projection.biases)},
                           {"seed", m.projection.seed}};
    j["beta"] = vector_to_json(m.beta);
    j["threshold"] = real_to_json(m.threshold);
    j["seed"] = m.projection.seed;
    return j;
}

inline json to_json(const WelmModel& m) {
    json j = header("welm");
    append_fields(j, welm_body(m));
    return j;
}

inline json to_json(const ConcatWelmModel& m) {
    json j = header("welm-concat");
    append_fields(j, welm_body(m.welm));
    return j;
}

inline json to_json(const DistanceModel& m) {
    json j = header("distance");
    j["threshold"] = real_to_json(m.threshold);
    return j;
}

inline json to_json(const EmbedderRegistry& r) {
    json j = header("registry");
    j["scope"] = std::string(to_string(r.scope));
    json models = json::object();
    for (const auto& [key, net] : r.models) models[key] = net_to_json(net);
    j["models"] = std::move(models);
    return j;
}

inline json to_json(const PairVerifier& v) {
    return std::visit([](const auto& m) { return to_json(m); }, v);
}

inline json to_json(const VerificationFramework& fw) {
    json j = header("framework");
    json clf = json::object();
    clf["gender"] = welm_body(fw.classifier.gender);
    json eth = json::array();
    for (const auto& m : fw.classifier.ethnicity) eth.push_back(welm_body(m));
    clf["ethnicity"] = std::move(eth);
    j["classifier"] = std::move(clf);
    j["registry"] = to_json(fw.registry);
    json ver = json::object();
    for (const auto& [key, v] : fw.verifiers) ver[key] = to_json(v);
    j["verifiers"] = std::move(ver);
    return j;
}

inline SavedModel from_json(const json& j);

inline SelmModel selm_from_json(const json& j) {
    SelmModel m;
    const auto cond = j.at("condition").get<std::string>();
    const auto c = parse_condition(cond);
    if (!c) throw ParseError("model file: unknown condition '" + cond + "'", 0);
    m.condition = *c;
    m.backbone = welm_from_body(j);
    if (!j.at("cohort_scope").is_null()) {
        const auto name = j.at("cohort_scope").get<std::string>();
        m.cohort_scope = parse_cohort(name);
        if (!m.cohort_scope) throw ParseError("model file: unknown cohort '" + name + "'", 0);
    }
    return m;
}

inline ElmModel elm_from_json(const json& j) {
    ElmModel m;
    m.kernel = kernel_from_json(j.at("kernel"));
    m.C = real_from_json(j.at("C"));
    const auto& p = j.at("projection");
    m.projection.weights = matrix_from_json(p.at("weights"));
    m.projection.biases = vector_from_json(p.at("biases"));
    m.projection.seed = p.at("seed").get<std::uint64_t>();
    m.beta = vector_from_json(j.at("beta"));
    m.threshold = real_from_json(j.at("threshold"));
    if (m.beta.size() != m.projection.hidden() || m.projection.biases.size() != m.projection.hidden())
        throw ParseError("model file: elm projection and beta disagree on hidden count", 0);
    return m;
}

inline EmbedderRegistry registry_from_json(const json& j) {
    EmbedderRegistry r;
    const auto name = j.at("scope").get<std::string>();
    const auto s = parse_scope(name);
    if (!s) throw ParseError("model file: unknown scope '" + name + "'", 0);
    r.scope = *s;
    for (const auto& [key, net] : j.at("models").items()) r.models.emplace(key, net_from_json(net));
    return r;
}

inline PairVerifier verifier_from_json(const json& j) {
    auto m = from_json(j);
    if (auto* v = std::get_if<SelmModel>(&m)) return std::move(*v);
    if (auto* v = std::get_if<ElmModel>(&m)) return std::move(*v);
    if (auto* v = std::get_if<ConcatWelmModel>(&m)) return std::move(*v);
    if (auto* v = std::get_if<DistanceModel>(&m)) return *v;
    throw ParseError("model file: framework verifier has an unsupported kind", 0);
}

inline VerificationFramework framework_from_json(const json& j) {
    VerificationFramework fw;
    const auto& clf = j.at("classifier");
    fw.classifier.gender = welm_from_body(clf.at("gender"));
    const auto& eth = clf.at("ethnicity");
    if (eth.size() != 3) throw ParseError("model file: expected 3 ethnicity machines", 0);
    for (std::size_t e = 0; e < 3; ++e) fw.classifier.ethnicity[e] = welm_from_body(eth[e]);
    fw.registry = registry_from_json(j.at("registry"));
    for (const auto& [key, v] : j.at("verifiers").items()) fw.verifiers.emplace(key, verifier_from_json(v));
    fw.validate();
    return fw;
}

inline SavedModel from_json(const json& j) {
    if (!j.is_object() || j.empty() || j.begin().key() != "format_version")
        throw ParseError("model file: format_version must be the first field", 0);
    const auto version = j.at("format_version").get<int>();
    if (version > kModelFormatVersion)
        throw VersionError("model file: format version " + std::to_string(version) + " is newer than supported version " +
                           std::to_string(kModelFormatVersion));
    if (version < 1) throw VersionError("model file: invalid format version " + std::to_string(version));
    const auto kind = j.at("model_kind").get<std::string>();
    if (kind == "selm") return selm_from_json(j);
    if (kind == "elm") return elm_from_json(j);
    if (kind == "welm") return welm_from_body(j);
    if (kind == "welm-concat") return ConcatWelmModel{welm_from_body(j)};
    if (kind == "distance") return DistanceModel{real_from_json(j.at("threshold"))};
    if (kind == "registry") return registry_from_json(j);
    if (kind == "framework") return framework_from_json(j);
    throw ParseError("model file: unknown model_kind '" + kind + "'", 0);
}

}  // namespace detail

inline std::string dump_model(const SavedModel& m) {
    return std::visit([](const auto& v) { return detail::to_json(v).dump(1) + "\n"; }, m);
}

inline SavedModel parse_model(std::string_view text) {
    detail::json j;
    try {
        j = detail::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        if (e.byte >= text.size()) throw TruncatedFileError("model file is truncated");
        throw ParseError(std::string("model file: ") + e.what(), 0);
    }
    try {
        return detail::from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model file: ") + e.what(), 0);
    }
}

inline void save_model(const SavedModel& m, const std::string& path) {
    auto os = detail::open_out(path);
    os << dump_model(m);
    if (!os) throw Error("cannot write '" + path + "'");
}

inline SavedModel load_model(const std::string& path) {
    auto is = detail::open_in(path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_model(ss.str());
}

/// The pair verifier held by a model file, if it holds one.
inline std::optional<PairVerifier> as_verifier(const SavedModel& m) {
    if (const auto* v = std::get_if<SelmModel>(&m)) return *v;
    if (const auto* v = std::get_if<ElmModel>(&m)) return *v;
    if (const auto* v = std::get_if<ConcatWelmModel>(&m)) return *v;
    if (const auto* v = std::get_if<DistanceModel>(&m)) return *v;
    return std::nullopt;
}

}  // namespace selm
