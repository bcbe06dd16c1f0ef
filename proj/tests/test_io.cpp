#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cli_app.hpp"
#include "fixtures.hpp"

using namespace selm;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
    const char* env = std::getenv("SELM_TEST_TMP");
    fs::path dir = env != nullptr && *env != '\0' ? fs::path(env) : fs::temp_directory_path() / "selm_test_io";
    fs::create_directories(dir);
    return dir;
}

std::string tmp(const std::string& name) { return (tmp_dir() / name).string(); }

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}


std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream is(text);
    for (std::string line; std::getline(is, line);) out.push_back(line);
    return out;
}

std::vector<std::string> fields(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    for (std::string f; std::getline(is, f, ',');) out.push_back(f);
    return out;
}

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "selm");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

Dataset tiny_dataset() {
    SyntheticConfig c;
    c.identities_per_cohort = 3;
    c.poses_per_identity = 2;
    c.dim = 8;
    c.seed = 17;
    return generate_synthetic_cohorts(c);
}

std::vector<Vector> probes(Eigen::Index d, std::size_t n, std::uint64_t seed) {
    auto rng = CounterRng::stream(seed, "probes");
    std::vector<Vector> out;
    for (std::size_t i = 0; i < n; ++i) {
        Vector v(d);
        for (Eigen::Index k = 0; k < d; ++k) v[k] = 3.0 * rng.normal();
        out.push_back(v);
    }
    return out;
}

// Bit-identical scores on 100 random probe pairs.
void check_same_verifier(const PairVerifier& a, const PairVerifier& b, Eigen::Index d) {
    const auto p = probes(d, 200, 3);
    for (std::size_t i = 0; i < 200; i += 2) CHECK(pair_score(a, p[i], p[i + 1]) == pair_score(b, p[i], p[i + 1]));
    CHECK(verifier_threshold(a) == verifier_threshold(b));
}

PairVerifier reload(const PairVerifier& v) {
    const auto back = parse_model(dump_model(selm::cli::to_saved(v)));
    return *as_verifier(back);
}

const DatasetSplit& corpus_split() {
    static const DatasetSplit s = [] {
        SyntheticConfig c;
        c.identities_per_cohort = 10;
        c.poses_per_identity = 3;
        c.dim = 16;
        c.seed = 21;
        return split_by_identity(generate_synthetic_cohorts(c), {0.6, 0.1, 0.3, 2});
    }();
    return s;
}

FrameworkConfig small_framework() {
    FrameworkConfig fc;
    fc.seed = 4;
    fc.triplet.epochs = 20;
    fc.triplet.hidden = {16};
    fc.verifier_grid.C = {1.0, 100.0};
    fc.verifier_grid.hidden_pct = {50.0};
    fc.classifier_grid.C = {1.0, 100.0};
    fc.classifier_grid.hidden_pct = {100.0};
    return fc;
}

}  // namespace

// ---------------------------------------------------------------- text formats

TEST_CASE("embeddings survive a save and load bit for bit", "[io]") {
    const auto data = tiny_dataset();
    const auto path = tmp("roundtrip.emb.txt");
    save_embeddings(data, path);
    const auto back = load_embeddings(path);
    REQUIRE(back.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(back[i].identity_id == data[i].identity_id);
        CHECK(back[i].cohort == data[i].cohort);
        REQUIRE(back[i].poses.size() == data[i].poses.size());
        for (std::size_t p = 0; p < data[i].poses.size(); ++p) CHECK(back[i].poses[p] == data[i].poses[p]);
    }
    CHECK(lines_of(slurp(path)).front() == "selm-embeddings v1 dim=8");
}

TEST_CASE("embeddings parser reports the offending line", "[io]") {
    std::ostringstream os;
    write_embeddings(tiny_dataset(), os);
    auto lines = lines_of(os.str());
    const auto cut = lines[3].rfind(',');
    lines[3] = lines[3].substr(0, cut);
    std::string text;
    for (const auto& l : lines) text += l + "\n";
    std::istringstream is(text);
    try {
        read_embeddings(is);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 4);
        CHECK_THAT(e.what(), ContainsSubstring("expected 8 values but found 7"));
    }

    std::istringstream empty("");
    CHECK_THROWS_WITH(read_embeddings(empty), ContainsSubstring("missing header"));
    std::istringstream newer("selm-embeddings v2 dim=8\n");
    CHECK_THROWS_AS(read_embeddings(newer), VersionError);
    std::istringstream bad_tag("selm-embeddings v1 dim=1\nx,female,martian,0,1\n");
    CHECK_THROWS_AS(read_embeddings(bad_tag), ParseError);
    std::istringstream not_finite("selm-embeddings v1 dim=1\nx,female,asian,0,nan\n");
    CHECK_THROWS_AS(read_embeddings(not_finite), ParseError);
}

TEST_CASE("pairs keep labels, provenance and values", "[io]") {
    const auto pairs = make_pairs(tiny_dataset(), {4, 2.0, true});
    const auto path = tmp("roundtrip.pairs.txt");
    save_pairs(pairs, path);
    const auto back = load_pairs(path);
    REQUIRE(back.size() == pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        CHECK(back[i].label == pairs[i].label);
        CHECK(back[i].a == pairs[i].a);
        CHECK(back[i].b == pairs[i].b);
        REQUIRE(back[i].source.has_value());
        CHECK(back[i].source->a.identity_id == pairs[i].source->a.identity_id);
        CHECK(back[i].source->b.pose_index == pairs[i].source->b.pose_index);
        CHECK(back[i].source->b.cohort == pairs[i].source->b.cohort);
    }
    std::vector<PairSample> anonymous{fixtures::pair(Vector::Zero(2), Vector::Zero(2), PairLabel::Genuine)};
    std::ostringstream os;
    CHECK_THROWS_AS(write_pairs(anonymous, os), InvalidArgument);
}

// ---------------------------------------------------------------- model files

TEST_CASE("every verifier kind round-trips with identical scores", "[io]") {
    const auto train = make_pairs(tiny_dataset(), {5, 1.0, false});
    const Eigen::Index d = 8;
    SECTION("selm") {
        for (auto cond : kAllConditions) {
            auto m = selm_train(train, 50, 10.0, cond, KernelSpec::cosine(), 2);
            m.backbone.threshold = 0.125;
            check_same_verifier(m, reload(m), d);
        }
    }
    SECTION("elm") {
        const auto m = elm_train(concat_pairs(train), pair_targets(train), 40, 3.0, KernelSpec::rbf(0.5), 6);
        check_same_verifier(m, reload(m), d);
    }
    SECTION("welm on concatenated input") {
        const ConcatWelmModel m{welm_train(concat_pairs(train), pair_targets(train), 30, 7.0, KernelSpec::euclidean(), 8)};
        check_same_verifier(m, reload(m), d);
    }
    SECTION("distance") {
        const DistanceModel m{-1.0 / 3.0};
        check_same_verifier(m, reload(m), d);
    }
}

TEST_CASE("bare welm and embedder registries round-trip", "[io]") {
    const auto pts = fixtures::two_clusters(20, 7);
    const auto m = welm_train(pts.X, pts.y, 50, 10.0, KernelSpec::euclidean(), 3);
    const auto back = std::get<WelmModel>(parse_model(dump_model(m)));
    for (const auto& p : probes(2, 100, 4)) CHECK(welm_predict(back, p) == welm_predict(m, p));

    auto cfg = fixtures::triplet_bench_config();
    cfg.epochs = 3;
    const auto reg = build_registry(fixtures::triplet_bench().train, FeatureScope::GD, cfg);
    const auto reg_back = std::get<EmbedderRegistry>(parse_model(dump_model(reg)));
    CHECK(reg_back == reg);
}

TEST_CASE("a trained framework round-trips through a file", "[io]") {
    const auto& s = corpus_split();
    const auto fw = train_framework(s.train, s.validation, small_framework());
    const auto path = tmp("framework.json");
    save_model(fw, path);
    const auto back = std::get<VerificationFramework>(load_model(path));
    CHECK(back.registry == fw.registry);
    const auto pairs = make_pairs(s.test, {9, 1.0, false});
    for (std::size_t i = 0; i < pairs.size() && i < 100; ++i) {
        const auto r1 = verify(fw, pairs[i].a, pairs[i].b);
        const auto r2 = verify(back, pairs[i].a, pairs[i].b);
        CHECK(r1.score == r2.score);
        CHECK(r1.decision == r2.decision);
        CHECK(r1.shortcut == r2.shortcut);
    }
}

TEST_CASE("model files lead with their format version", "[io]") {
    const auto text = dump_model(DistanceModel{-2.0});
    const auto j = nlohmann::ordered_json::parse(text);
    CHECK(j.begin().key() == "format_version");
    CHECK(j["format_version"] == kModelFormatVersion);
}

TEST_CASE("newer, truncated or malformed model files are refused", "[io]") {
    auto j = nlohmann::ordered_json::parse(dump_model(DistanceModel{-2.0}));
    j["format_version"] = kModelFormatVersion + 1;
    CHECK_THROWS_AS(parse_model(j.dump()), VersionError);

    const auto pts = fixtures::two_clusters(20, 7);
    const auto text = dump_model(welm_train(pts.X, pts.y, 50, 10.0, KernelSpec::euclidean(), 3));
    CHECK_THROWS_AS(parse_model(text.substr(0, text.size() / 2)), TruncatedFileError);

    auto moved = nlohmann::ordered_json::object();
    moved["model_kind"] = "distance";
    moved["format_version"] = 1;
    CHECK_THROWS_AS(parse_model(moved.dump()), ParseError);

    auto unknown = nlohmann::ordered_json::parse(dump_model(DistanceModel{-2.0}));
    unknown["model_kind"] = "forest";
    CHECK_THROWS_WITH(parse_model(unknown.dump()), ContainsSubstring("forest"));
    CHECK_THROWS_AS(load_model(tmp("no-such-model.json")), Error);
}

// ---------------------------------------------------------------- cli

TEST_CASE("cli generate is reproducible for a seed", "[cli]") {
    const auto a = tmp("gen_a.txt");
    const auto b = tmp("gen_b.txt");
    const auto c = tmp("gen_c.txt");
    REQUIRE(run_cli({"--seed", "5", "generate", "--identities", "3", "--dim", "8", "-o", a}).code == 0);
    REQUIRE(run_cli({"--seed", "5", "generate", "--identities", "3", "--dim", "8", "-o", b}).code == 0);
    REQUIRE(run_cli({"--seed", "6", "generate", "--identities", "3", "--dim", "8", "-o", c}).code == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a) != slurp(c));
    CHECK(lines_of(slurp(a)).size() == 1 + 6 * 3 * 3);
}

TEST_CASE("cli split writes three files and refuses tiny cohorts", "[cli]") {
    const auto emb = tmp("split_in.txt");
    REQUIRE(run_cli({"generate", "--identities", "10", "--dim", "8", "-o", emb}).code == 0);
    REQUIRE(run_cli({"split", "-i", emb, "--prefix", tmp("split")}).code == 0);
    CHECK(load_embeddings(tmp("split.train.txt")).size() == 36);
    CHECK(load_embeddings(tmp("split.validation.txt")).size() == 6);
    CHECK(load_embeddings(tmp("split.test.txt")).size() == 18);

    const auto small = tmp("split_small.txt");
    REQUIRE(run_cli({"generate", "--identities", "5", "--dim", "8", "-o", small}).code == 0);
    const auto r = run_cli({"split", "-i", small, "--prefix", tmp("split_small")});
    CHECK(r.code != 0);
    CHECK_THAT(r.err, ContainsSubstring("at least 10"));
}

TEST_CASE("cli pairs writes a header and twice the genuine count", "[cli]") {
    const auto emb = tmp("pairs_in.txt");
    const auto out = tmp("pairs_out.txt");
    REQUIRE(run_cli({"generate", "--identities", "4", "--poses", "3", "--dim", "8", "-o", emb}).code == 0);
    REQUIRE(run_cli({"pairs", "-i", emb, "-o", out}).code == 0);
    // 24 identities x 3 unordered pose pairs.
    CHECK(lines_of(slurp(out)).size() == 1 + 2 * 72);
    for (const auto& p : load_pairs(out))
        if (p.label == PairLabel::Impostor) CHECK(p.source->a.cohort == p.source->b.cohort);
}

TEST_CASE("cli train logs each grid point and keeps the best", "[cli]") {
    const auto emb = tmp("train_in.txt");
    REQUIRE(run_cli({"generate", "--identities", "10", "--dim", "8", "-o", emb}).code == 0);
    REQUIRE(run_cli({"split", "-i", emb, "--prefix", tmp("train")}).code == 0);
    REQUIRE(run_cli({"pairs", "-i", tmp("train.train.txt"), "-o", tmp("train.ptrain.txt")}).code == 0);
    REQUIRE(run_cli({"pairs", "-i", tmp("train.validation.txt"), "-o", tmp("train.pval.txt"), "--any-cohort"}).code == 0);

    const std::vector<std::string> base{"train", "--train", tmp("train.ptrain.txt"), "--validation", tmp("train.pval.txt"),
                                        "--condition", "dist"};
    auto one = base;
    one.insert(one.end(), {"--model", tmp("one.json"), "--c-min", "0", "--c-max", "0", "--pct", "50"});
    const auto r1 = run_cli(one);
    REQUIRE(r1.code == 0);
    const auto log1 = lines_of(r1.out);
    REQUIRE(log1.size() == 2);
    CHECK(log1[0] == kTuningCsvHeader);

    auto grid = base;
    grid.insert(grid.end(), {"--model", tmp("grid.json"), "--log", tmp("grid.csv"), "--c-min", "-2", "--c-max", "2",
                             "--pct", "20,60"});
    REQUIRE(run_cli(grid).code == 0);
    const auto log = lines_of(slurp(tmp("grid.csv")));
    REQUIRE(log.size() == 1 + 5 * 2);
    std::size_t best = 1;
    for (std::size_t i = 2; i < log.size(); ++i) {
        const auto f = fields(log[i]);
        const auto b = fields(log[best]);
        if (std::stod(f[3]) > std::stod(b[3]) || (std::stod(f[3]) == std::stod(b[3]) && std::stod(f[4]) > std::stod(b[4])))
            best = i;
    }
    const auto model = std::get<SelmModel>(load_model(tmp("grid.json")));
    const auto bf = fields(log[best]);
    CHECK(model.backbone.C == std::stod(bf[0]));
    CHECK_THAT(model.backbone.threshold, WithinAbs(std::stod(bf[6]), 1e-12));

    grid[grid.size() - 9] = tmp("grid2.json");
    grid[grid.size() - 7] = tmp("grid2.csv");
    REQUIRE(run_cli(grid).code == 0);
    CHECK(slurp(tmp("grid.json")) == slurp(tmp("grid2.json")));
    CHECK(slurp(tmp("grid.csv")) == slurp(tmp("grid2.csv")));
}

TEST_CASE("cli train validates method flags", "[cli]") {
    const auto r = run_cli({"train", "--train", "x", "--validation", "y", "--model", "z", "--method", "forest"});
    CHECK(r.code == 2);
    CHECK(run_cli({"frobnicate"}).code == 2);
    CHECK(run_cli({}).code == 2);
}

TEST_CASE("cli eval reports a perfect verifier", "[cli]") {
    // Identical poses inside each identity: distance 0 for genuine pairs only.
    Dataset data;
    for (const auto& c : kAllCohorts)
        for (int i = 0; i < 3; ++i) {
            Vector v = Vector::Zero(4);
            v[0] = 10.0 * static_cast<double>(c.index());
            v[1] = static_cast<double>(i);
            data.push_back({to_string(c) + "-" + std::to_string(i), c, {v, v}});
        }
    const auto pairs = make_pairs(data, {1, 1.0, true});
    save_pairs(pairs, tmp("perfect.pairs.txt"));
    save_model(DistanceModel{-0.5}, tmp("perfect.json"));
    const auto r = run_cli({"eval", "--model", tmp("perfect.json"), "--test", tmp("perfect.pairs.txt")});
    REQUIRE(r.code == 0);
    std::vector<std::string> rows{"average", "pooled"};
    for (const auto& c : kAllCohorts) rows.push_back(to_string(c));
    for (const auto& row : rows) {
        CHECK_THAT(r.out, ContainsSubstring(row + ".accuracy=1\n"));
        CHECK_THAT(r.out, ContainsSubstring(row + ".auc=1\n"));
        CHECK_THAT(r.out, ContainsSubstring(row + ".eer=0\n"));
    }
    const auto csv = run_cli({"eval", "--model", tmp("perfect.json"), "--test", tmp("perfect.pairs.txt"), "--format", "csv"});
    REQUIRE(csv.code == 0);
    CHECK(lines_of(csv.out).front() == "cohort,accuracy,auc,far,frr,eer,theta,pairs");
}

TEST_CASE("cli eval repeat mode prints one row per run plus mean and std", "[cli]") {
    const auto emb = tmp("rep_in.txt");
    REQUIRE(run_cli({"generate", "--identities", "20", "--dim", "8", "--noise", "0.6", "-o", emb}).code == 0);
    REQUIRE(run_cli({"split", "-i", emb, "--prefix", tmp("rep")}).code == 0);
    for (const char* part : {"train", "validation", "test"})
        REQUIRE(run_cli({"pairs", "-i", tmp(std::string("rep.") + part + ".txt"), "-o", tmp(std::string("rep.p") + part + ".txt")})
                    .code == 0);
    const std::vector<std::string> base{"eval", "--test", tmp("rep.ptest.txt"), "--train", tmp("rep.ptrain.txt"),
                                        "--validation", tmp("rep.pvalidation.txt"), "--c-min", "-1", "--c-max", "1",
                                        "--pct", "30", "--runs", "10"};
    const auto r = run_cli(base);
    REQUIRE(r.code == 0);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() == 13);
    CHECK(lines[0] == "run,seed,accuracy,auc,far,frr,eer,theta");
    CHECK(lines[11].rfind("mean,", 0) == 0);
    CHECK(lines[12].rfind("std,", 0) == 0);
    std::set<std::string> seeds;
    for (std::size_t i = 1; i <= 10; ++i) seeds.insert(fields(lines[i])[1]);
    CHECK(seeds.size() == 10);

    auto fixed = base;
    fixed.push_back("--fixed-seed");
    const auto rf = run_cli(fixed);
    REQUIRE(rf.code == 0);
    const auto fixed_lines = lines_of(rf.out);
    REQUIRE(fixed_lines.size() == 13);
    for (std::size_t i = 2; i <= 10; ++i) {
        const auto a = fields(fixed_lines[1]);
        const auto b = fields(fixed_lines[i]);
        CHECK(std::vector<std::string>(a.begin() + 1, a.end()) == std::vector<std::string>(b.begin() + 1, b.end()));
    }
    const auto std_row = fields(fixed_lines[12]);
    REQUIRE(std_row.size() == 8);
    for (std::size_t k = 2; k < std_row.size(); ++k) CHECK(std::stod(std_row[k]) <= 1e-12);
}

TEST_CASE("cli bench report carries consistent concordance numbers", "[cli]") {
    const auto r = run_cli({"bench", "--runs", "2", "--identities", "20", "--epochs", "5"});
    REQUIRE(r.code == 0);
    const auto lines = lines_of(r.out);
    CHECK(lines[0] == "bench_version=1");
    auto value = [&](const std::string& key) {
        for (const auto& l : lines)
            if (l.rfind(key + "=", 0) == 0) return std::stod(l.substr(key.size() + 1));
        FAIL("missing " << key);
        return 0.0;
    };
    const double judges = value("judges");
    const double k = value("candidates");
    CHECK(judges == 12);
    CHECK(k == 6);
    const auto start = std::find(lines.begin(), lines.end(), "model,rank_sum");
    REQUIRE(start != lines.end());
    double total = 0.0;
    for (auto it = start + 1; it != start + 1 + 6; ++it) total += std::stod(fields(*it)[1]);
    CHECK_THAT(total, WithinAbs(judges * k * (k + 1) / 2, 1e-9));
    CHECK_THAT(value("chi_square"), WithinAbs(judges * (k - 1) * value("kendall_w"), 1e-9));
    CHECK_THAT(r.out, ContainsSubstring("hidden_pct,welm,selm-sum,t-sum,selm-dist,t-dist"));
}

TEST_CASE("cli verify reports decisions through exit codes", "[cli]") {
    const auto& s = corpus_split();
    save_embeddings(s.train, tmp("fw.train.txt"));
    save_embeddings(s.validation, tmp("fw.validation.txt"));
    save_embeddings(s.test, tmp("fw.test.txt"));
    REQUIRE(run_cli({"framework", "--train", tmp("fw.train.txt"), "--validation", tmp("fw.validation.txt"), "--model",
                 tmp("fw.json"), "--epochs", "20"})
                .code == 0);
    std::string fa;
    std::string mb;
    for (const auto& rec : s.test) {
        if (fa.empty() && rec.cohort == Cohort{Gender::Female, Ethnicity::Asian}) fa = rec.identity_id;
        if (mb.empty() && rec.cohort == Cohort{Gender::Male, Ethnicity::Black}) mb = rec.identity_id;
    }
    const auto same = run_cli({"verify", "--model", tmp("fw.json"), "-i", tmp("fw.test.txt"), "--a", fa + ":0", "--b", fa + ":0"});
    CHECK(same.code == 0);
    CHECK_THAT(same.out, ContainsSubstring("GENUINE"));
    CHECK_THAT(same.out, ContainsSubstring("shortcut=false"));

    const auto cross = run_cli({"verify", "--model", tmp("fw.json"), "-i", tmp("fw.test.txt"), "--a", fa, "--b", mb});
    CHECK(cross.code == 1);
    CHECK_THAT(cross.out, ContainsSubstring("IMPOSTOR"));
    CHECK_THAT(cross.out, ContainsSubstring("shortcut=true"));
    CHECK_THAT(cross.out, ContainsSubstring("cohortA=female-asian cohortB=male-black"));

    const auto missing = run_cli({"verify", "--model", tmp("absent.json"), "-i", tmp("fw.test.txt"), "--a", fa, "--b", fa});
    CHECK(missing.code == 2);
    const auto unknown = run_cli({"verify", "--model", tmp("fw.json"), "-i", tmp("fw.test.txt"), "--a", "nobody", "--b", fa});
    CHECK(unknown.code == 2);
    CHECK_THAT(unknown.err, ContainsSubstring("nobody"));
}
