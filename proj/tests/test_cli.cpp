#include "css/cli.hpp"
#include "css/error.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace css;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int run(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
    args.insert(args.begin(), "css_sim");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out;
    std::ostringstream err;
    const int rc = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return rc;
}

class TempDir : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("css_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    fs::path dir_;
};

std::vector<std::string> tiny_args() {
    return {"--scheme", "conventional", "--num-crs", "2", "--events", "500",
            "--pfa-grid", "0.05,0.2,0.5", "--seed", "7", "--snr-db", "-10", "--no-summary"};
}

RocCurve small_curve(const std::string& label) {
    ExperimentConfig c;
    c.label = label;
    c.scenario.snr_bar_db = -10.0;
    c.pfa_grid = {0.05, 0.2, 0.5};
    c.n_events = 2000;
    return roc_sweep(c);
}

std::string strip_timestamp(std::string s) {
    const auto at = s.find("\"timestamp\"");
    if (at == std::string::npos) return s;
    const auto end = s.find('\n', at);
    return s.erase(at, end - at);
}

}  // namespace

TEST(ParseArgs, Fig3Preset) {
    const auto req = parse_args({"--preset", "fig3"});
    ASSERT_EQ(req.curves.size(), 7u);
    int proposed = 0;
    int mrc = 0;
    for (const auto& c : req.curves) {
        EXPECT_EQ(c.scenario.snr_bar_db, -15.0);
        EXPECT_EQ(c.scenario.n_samples, 1000);
        EXPECT_EQ(c.scenario.k_crs, 7);
        EXPECT_EQ(c.history_len, 15);
        EXPECT_EQ(c.scenario.uncertainty_db, 1.0);
        if (c.is_mrc()) {
            ++mrc;
            continue;
        }
        const auto& f = std::get<FusionSpec>(c.fusion);
        if (f.rule == FusionRule::Majority) EXPECT_EQ(f.majority_l, 3);
        proposed += c.detector == DetectorKind::Proposed;
    }
    EXPECT_EQ(proposed, 3);
    EXPECT_EQ(mrc, 1);
    EXPECT_EQ(req.curves.front().label, "proposed-AND");
    EXPECT_EQ(req.curves.back().label, "MRC");
}

TEST(ParseArgs, Fig1AndFig2Presets) {
    const auto f1 = parse_args({"--preset", "fig1"});
    ASSERT_EQ(f1.curves.size(), 4u);
    const int ls[] = {5, 10, 15, 20};
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& c = f1.curves[i];
        EXPECT_EQ(c.history_len, ls[i]);
        EXPECT_EQ(c.scenario.snr_bar_db, -20.0);
        EXPECT_EQ(c.scenario.k_crs, 3);
        EXPECT_EQ(c.scenario.n_samples, 1000);
        EXPECT_EQ(std::get<FusionSpec>(c.fusion).rule, FusionRule::Or);
        EXPECT_EQ(c.detector, DetectorKind::Proposed);
    }
    EXPECT_EQ(f1.curves[0].label, "proposed-OR-L5");
    const auto f2 = parse_args({"--preset", "fig2"});
    ASSERT_EQ(f2.curves.size(), 4u);
    EXPECT_EQ(f2.curves[3].scenario.k_crs, 7);
    EXPECT_EQ(f2.curves[3].history_len, 15);
}

TEST(ParseArgs, Fig4Preset) {
    const auto req = parse_args({"--preset", "fig4"});
    ASSERT_TRUE(req.crs.has_value());
    EXPECT_TRUE(req.curves.empty());
    EXPECT_EQ(req.crs->reference_k, 3);
    EXPECT_EQ(req.crs->k_max, 40);
    ASSERT_EQ(req.crs->candidates.size(), 3u);
    EXPECT_EQ(req.crs->candidates[1].label, "conventional-OR");
    EXPECT_TRUE(req.crs->candidates[2].is_mrc());
}

TEST(ParseArgs, OverridesApply) {
    const auto req = parse_args({"--preset", "fig1", "--snr-db", "-18", "--events", "1234", "--seed", "99"});
    for (const auto& c : req.curves) {
        EXPECT_EQ(c.scenario.snr_bar_db, -18.0);
        EXPECT_EQ(c.n_events, 1234u);
        EXPECT_EQ(c.scenario.seed, 99u);
    }
    const auto custom = parse_args({"--scheme", "proposed", "--rule", "MAJ", "--num-crs", "5"});
    ASSERT_EQ(custom.curves.size(), 1u);
    EXPECT_EQ(std::get<FusionSpec>(custom.curves[0].fusion).majority_l, 3);
    EXPECT_EQ(custom.curves[0].scenario.uncertainty_db, 0.0);
}

TEST(ParseArgs, UsageErrorsNameTheFlag) {
    auto expect_usage = [](std::vector<std::string> args, const std::string& flag) {
        try {
            parse_args(args);
            ADD_FAILURE() << "no error for " << flag;
        } catch (const UsageError& e) {
            EXPECT_NE(std::string(e.what()).find(flag), std::string::npos) << e.what();
        }
    };
    expect_usage({"--snr-db", "-20", "--num-crs", "0"}, "--num-crs");
    expect_usage({"--history-len", "1"}, "--history-len");
    expect_usage({"--snr-db", "abc"}, "--snr-db");
    expect_usage({"--rule", "XOR"}, "--rule");
    expect_usage({"--format", "xml"}, "--format");
    expect_usage({"--preset", "fig9"}, "--preset");
    expect_usage({"--bogus"}, "--bogus");
    expect_usage({"--preset", "fig1", "--history-len", "5"}, "--history-len");
    expect_usage({"--preset", "fig3", "--rule", "OR"}, "--rule");
    expect_usage({"--genie-variance", "--n-ref", "10"}, "--n-ref");
    expect_usage({"--scheme", "mrc", "--rule", "AND"}, "--rule");
    expect_usage({"--rule", "MAJ", "--num-crs", "3", "--majority-l", "4"}, "--majority-l");
    expect_usage({"--pfa-grid", "0.5,0.1"}, "--pfa-grid");
    expect_usage({"--duty-cycle", "1.5"}, "--duty-cycle");
}

TEST(ParsePfaGrid, Forms) {
    EXPECT_EQ(parse_pfa_grid("0.01,0.1,0.5"), (std::vector<double>{0.01, 0.1, 0.5}));
    const auto lg = parse_pfa_grid("log:0.001:0.5:4");
    ASSERT_EQ(lg.size(), 4u);
    EXPECT_NEAR(lg[0], 0.001, 1e-15);
    EXPECT_EQ(lg[3], 0.5);
    EXPECT_NEAR(lg[1] / lg[0], lg[2] / lg[1], 1e-9);
    const auto wide = parse_pfa_grid("wide");
    EXPECT_EQ(wide.size(), 51u);
    EXPECT_LT(wide.front(), 1e-20);
    EXPECT_GT(wide.back(), 0.99);
    EXPECT_FALSE(parse_pfa_grid("standard").empty());
    EXPECT_THROW(parse_pfa_grid("log:0.5:0.1:3"), UsageError);
    EXPECT_THROW(parse_pfa_grid(""), UsageError);
}

TEST(ConfigJson, RoundTripsEveryField) {
    ExperimentConfig c;
    c.label = "x";
    c.scenario.n_samples = 321;
    c.scenario.k_crs = 4;
    c.scenario.snr_bar_db = -12.25;
    c.scenario.uncertainty_db = 0.7;
    c.scenario.sigma2_nominal = 1.5;
    c.scenario.pu_dwell_events = 33.0;
    c.scenario.duty_cycle = 0.3;
    c.scenario.variance_source = VarianceSource::Genie;
    c.scenario.seed = 0xfedcba9876543210ULL;
    c.detector = DetectorKind::Proposed;
    c.fusion = FusionSpec{FusionRule::Majority, 4, 2};
    c.history_len = 9;
    c.pfa_grid = parse_pfa_grid("wide");
    c.n_events = 777;
    c.warmup_excluded = false;
    c.fidelity = Fidelity::Samples;
    c.workers = 3;
    c.theory_m_h0 = 2;
    c.theory_m_h1 = 7;
    const auto back = config_from_json(nlohmann::json::parse(config_to_json(c).dump()));
    EXPECT_EQ(config_to_json(back), config_to_json(c));
    EXPECT_EQ(back.pfa_grid, c.pfa_grid);
    EXPECT_EQ(back.scenario.seed, c.scenario.seed);
}

TEST_F(TempDir, EmitEmptyCurvesCreatesNoFile) {
    const auto path = dir_ / "none.csv";
    std::ostringstream out;
    EXPECT_THROW(emit_results({}, OutputFormat::Csv, path.string(), RunManifest{}, out), DomainError);
    EXPECT_FALSE(fs::exists(path));
    EXPECT_FALSE(fs::exists(path.string() + ".manifest.json"));
}

TEST_F(TempDir, EmitShapeAndRoundTrip) {
    const auto curve = small_curve("one");
    const auto path = dir_ / "one.csv";
    std::ostringstream out;
    emit_results({curve}, OutputFormat::Csv, path.string(), RunManifest{}, out);
    const std::string text = slurp(path);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
    EXPECT_EQ(text.substr(0, text.find('\n')), kCsvHeader);
    EXPECT_TRUE(fs::exists(path.string() + ".manifest.json"));

    const auto parsed = parse_csv(text);
    ASSERT_EQ(parsed.size(), 1u);
    ASSERT_EQ(parsed[0].points.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& a = curve.points[i];
        const auto& b = parsed[0].points[i];
        EXPECT_EQ(format_number(a.result.pfa_hat), format_number(b.result.pfa_hat));
        EXPECT_EQ(format_number(a.result.pd_hat), format_number(b.result.pd_hat));
        EXPECT_EQ(format_number(a.result.ci95_pd.lo), format_number(b.result.ci95_pd.lo));
        EXPECT_EQ(format_number(a.pd_theory), format_number(b.pd_theory));
    }
    EXPECT_EQ(format_csv(parsed), text);
}

TEST_F(TempDir, EmitUnwritableDestination) {
    std::ostringstream out;
    const auto path = dir_ / "missing" / "x.csv";
    EXPECT_THROW(emit_results({small_curve("a")}, OutputFormat::Csv, path.string(), RunManifest{}, out),
                 IoError);
}

TEST_F(TempDir, JsonOutputCarriesManifest) {
    auto args = tiny_args();
    args.insert(args.end(), {"--format", "json", "--out", (dir_ / "r.json").string()});
    ASSERT_EQ(run(args), 0);
    const auto j = nlohmann::json::parse(slurp(dir_ / "r.json"));
    EXPECT_EQ(j.at("manifest").at("version"), kToolVersion);
    EXPECT_EQ(j.at("manifest").at("seed"), 7);
    EXPECT_EQ(j.at("curves").size(), 1u);
    EXPECT_EQ(j.at("curves")[0].at("points").size(), 3u);
    EXPECT_TRUE(j.at("curves")[0].at("points")[0].at("pd_theory").is_number());
}

TEST(Golden, TinyFixedSeedRun) {
    std::string out;
    std::string err;
    ASSERT_EQ(run(tiny_args(), &out, &err), 0) << err;
    EXPECT_EQ(out, slurp(fs::path(CSS_TEST_DATA_DIR) / "golden_tiny.csv"));
}

TEST_F(TempDir, ReplayReproducesOutputs) {
    auto args = tiny_args();
    const auto out = (dir_ / "a.csv").string();
    args.insert(args.end(), {"--out", out, "--workers", "1"});
    ASSERT_EQ(run(args), 0);
    const std::string csv = slurp(out);
    const std::string manifest = slurp(out + ".manifest.json");
    ASSERT_EQ(run({"--replay", out + ".manifest.json"}), 0);
    EXPECT_EQ(slurp(out), csv);
    EXPECT_EQ(strip_timestamp(slurp(out + ".manifest.json")), strip_timestamp(manifest));

    // Replaying into a new path gives the same data.
    const auto other = (dir_ / "b.csv").string();
    ASSERT_EQ(run({"--replay", out + ".manifest.json", "--out", other}), 0);
    EXPECT_EQ(slurp(other), csv);
    EXPECT_NE(run({"--replay", out + ".manifest.json", "--seed", "3"}), 0);
}

TEST_F(TempDir, WorkerCountDoesNotChangeOutput) {
    auto a = tiny_args();
    a[1] = "proposed";
    a.insert(a.end(), {"--uncertainty-db", "1", "--workers", "1"});
    auto b = a;
    b.back() = "4";
    std::string one;
    std::string many;
    ASSERT_EQ(run(a, &one), 0);
    ASSERT_EQ(run(b, &many), 0);
    EXPECT_EQ(one, many);
}

TEST(RunCli, ExitCodes) {
    std::string err;
    EXPECT_EQ(run({"--num-crs", "0"}, nullptr, &err), 2);
    EXPECT_NE(err.find("--num-crs"), std::string::npos);
    std::string out;
    EXPECT_EQ(run({"--help"}, &out), 0);
    EXPECT_NE(out.find("--preset"), std::string::npos);
    EXPECT_EQ(run({"--events", "100", "--dwell-events", "1e12", "--no-summary"}, nullptr, &err), 1);
}

TEST(Summarize, RatiosAndNotices) {
    const auto a = small_curve("conventional-OR");
    const auto s = summarize({a, a});
    EXPECT_NE(s.find("conventional-OR / conventional-OR = 1.000"), std::string::npos) << s;

    auto p = a;
    p.label = "proposed-AND";
    const auto missing = summarize({p});
    EXPECT_NE(missing.find("no baseline 'conventional-AND'; ratio omitted"), std::string::npos) << missing;

    std::vector<RocCurve> by_l;
    for (const char* l : {"proposed-OR-L5", "proposed-OR-L10"}) {
        auto c = a;
        c.label = l;
        by_l.push_back(c);
    }
    const auto table = summarize(by_l);
    EXPECT_LT(table.find("proposed-OR-L5"), table.find("proposed-OR-L10"));
    EXPECT_NE(table.find("auc"), std::string::npos);
}
