#include "css/cli.hpp"

#include "css/error.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

namespace css {
namespace {

using nlohmann::json;

std::string printf_string(const char* fmt, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    return buf;
}

std::vector<double> standard_grid() {
    return {0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3,
            0.4,   0.5,   0.6,   0.7,  0.8,  0.9,  0.95, 0.99};
}

// Targets Q(z) on a uniform z grid, so the thresholds are evenly spaced and
// reach deep enough to pull the FC false-alarm rate down under uncertainty.
std::vector<double> wide_grid() {
    std::vector<double> g;
    constexpr int n = 51;
    for (int i = n - 1; i >= 0; --i) g.push_back(q_function(-2.5 + 12.5 * i / (n - 1)));
    return g;
}

void check_grid(const std::vector<double>& g) {
    if (g.empty()) throw UsageError("--pfa-grid: empty grid");
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(g[i] > 0.0 && g[i] < 1.0)) throw UsageError("--pfa-grid: values must lie in (0,1)");
        if (i > 0 && !(g[i] > g[i - 1]))
            throw UsageError("--pfa-grid: values must be strictly increasing");
    }
}

double parse_double(const std::string& s, const std::string& flag) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw UsageError(flag + ": not a number: '" + s + "'");
    }
    if (pos != s.size()) throw UsageError(flag + ": not a number: '" + s + "'");
    return v;
}

struct Shape {
    std::string scheme = "conventional";
    FusionRule rule = FusionRule::Or;
    int k = 1;
    std::optional<int> majority_l;
    int history_len = 15;
    std::string suffix;
};

ExperimentConfig make_config(const Shape& s, const ExperimentConfig& common) {
    ExperimentConfig c = common;
    c.scenario.k_crs = s.k;
    c.history_len = s.history_len;
    if (s.scheme == "mrc") {
        c.detector = DetectorKind::Conventional;
        c.fusion = SoftMrc{};
    } else {
        c.detector = s.scheme == "proposed" ? DetectorKind::Proposed : DetectorKind::Conventional;
        FusionSpec f{s.rule, s.k, 1};
        if (s.rule == FusionRule::Majority)
            f.majority_l = s.majority_l ? *s.majority_l : FusionSpec::majority_default(s.k).majority_l;
        c.fusion = f;
    }
    c.label = scheme_label(c) + s.suffix;
    return c;
}

void conflict(bool set, const std::string& flag, const std::string& why) {
    if (set) throw UsageError(flag + ": " + why);
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json number_json(double v) {
    if (std::isnan(v)) return nullptr;
    return std::stod(format_number(v));
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << text;
    f.flush();
    if (!f) throw IoError("write to '" + path + "' failed");
}

bool is_stdout(const std::string& dest) { return dest.empty() || dest == "-"; }

std::string sidecar_path(const std::string& dest) { return dest + ".manifest.json"; }

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

std::string usage_from_domain(const std::string& what) { return "invalid configuration: " + what; }

}  // namespace

std::vector<double> parse_pfa_grid(const std::string& text) {
    std::vector<double> g;
    if (text == "standard") {
        g = standard_grid();
    } else if (text == "wide") {
        g = wide_grid();
    } else if (text.rfind("log:", 0) == 0) {
        const auto parts = split(text.substr(4), ':');
        if (parts.size() != 3) throw UsageError("--pfa-grid: expected log:LO:HI:N");
        const double lo = parse_double(parts[0], "--pfa-grid");
        const double hi = parse_double(parts[1], "--pfa-grid");
        const double nd = parse_double(parts[2], "--pfa-grid");
        if (!(lo > 0.0 && hi < 1.0 && lo < hi)) throw UsageError("--pfa-grid: need 0 < LO < HI < 1");
        if (!(nd >= 2.0) || nd != std::floor(nd)) throw UsageError("--pfa-grid: N must be an integer >= 2");
        const int n = static_cast<int>(nd);
        for (int i = 0; i < n; ++i)
            g.push_back(std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1)));
        g.back() = hi;
    } else {
        for (const auto& part : split(text, ',')) g.push_back(parse_double(part, "--pfa-grid"));
    }
    check_grid(g);
    return g;
}

std::string scheme_label(const ExperimentConfig& config) {
    if (config.is_mrc()) return "MRC";
    const auto& f = std::get<FusionSpec>(config.fusion);
    return std::string(config.detector == DetectorKind::Proposed ? "proposed-" : "conventional-") +
           std::string(to_string(f.rule));
}

RunRequest build_request(const std::string& preset, const Overrides& ov) {
    if (!preset.empty() && preset != "fig1" && preset != "fig2" && preset != "fig3" && preset != "fig4")
        throw UsageError("--preset: unknown preset '" + preset + "' (fig1, fig2, fig3, fig4)");

    // Values checked here so the message can name the flag.
    if (ov.num_samples && *ov.num_samples < 1) throw UsageError("--num-samples: must be >= 1");
    if (ov.num_crs && *ov.num_crs < 1) throw UsageError("--num-crs: must be >= 1");
    if (ov.history_len && *ov.history_len < 2) throw UsageError("--history-len: must be >= 2");
    if (ov.majority_l && *ov.majority_l < 1) throw UsageError("--majority-l: must be >= 1");
    if (ov.snr_db && !std::isfinite(*ov.snr_db)) throw UsageError("--snr-db: must be finite");
    if (ov.uncertainty_db && !(*ov.uncertainty_db >= 0.0 && std::isfinite(*ov.uncertainty_db)))
        throw UsageError("--uncertainty-db: must be >= 0");
    if (ov.duty_cycle && !(*ov.duty_cycle > 0.0 && *ov.duty_cycle < 1.0))
        throw UsageError("--duty-cycle: must lie in (0,1)");
    if (ov.dwell_events && !(*ov.dwell_events >= 1.0)) throw UsageError("--dwell-events: must be >= 1");
    if (ov.events && *ov.events < 1) throw UsageError("--events: must be >= 1");
    if (ov.workers && *ov.workers < 0) throw UsageError("--workers: must be >= 0");
    if (ov.n_ref && *ov.n_ref < 1) throw UsageError("--n-ref: must be >= 1");
    if (ov.scheme && *ov.scheme != "conventional" && *ov.scheme != "proposed" && *ov.scheme != "mrc")
        throw UsageError("--scheme: expected conventional, proposed or mrc");
    conflict(ov.genie_variance && ov.n_ref.has_value(), "--n-ref",
             "conflicts with --genie-variance (no reference window)");
    if (ov.pfa_grid) check_grid(*ov.pfa_grid);

    const bool mrc_scheme = ov.scheme && *ov.scheme == "mrc";
    conflict(mrc_scheme && ov.rule.has_value(), "--rule", "does not apply to --scheme mrc");
    conflict(mrc_scheme && ov.majority_l.has_value(), "--majority-l", "does not apply to --scheme mrc");

    ExperimentConfig common;
    common.scenario.snr_bar_db = -15.0;
    common.pfa_grid = standard_grid();
    common.n_events = 200000;
    if (!preset.empty()) {
        // Proposed-scheme presets run at 1 dB of noise uncertainty.
        common.scenario.uncertainty_db = 1.0;
        common.pfa_grid = wide_grid();
    }
    if (preset == "fig1" || preset == "fig2") common.scenario.snr_bar_db = -20.0;
    if (preset == "fig4") common.n_events = 20000;

    if (ov.num_samples) common.scenario.n_samples = *ov.num_samples;
    if (ov.snr_db) common.scenario.snr_bar_db = *ov.snr_db;
    if (ov.uncertainty_db) common.scenario.uncertainty_db = *ov.uncertainty_db;
    if (ov.duty_cycle) common.scenario.duty_cycle = *ov.duty_cycle;
    if (ov.dwell_events) common.scenario.pu_dwell_events = *ov.dwell_events;
    if (ov.events) common.n_events = *ov.events;
    if (ov.pfa_grid) common.pfa_grid = *ov.pfa_grid;
    if (ov.seed) common.scenario.seed = *ov.seed;
    if (ov.fidelity) common.fidelity = *ov.fidelity;
    if (ov.workers) common.workers = *ov.workers;
    if (ov.n_ref) common.scenario.n_ref = *ov.n_ref;
    if (ov.genie_variance) common.scenario.variance_source = VarianceSource::Genie;

    Shape shape;
    if (!preset.empty()) {
        shape.scheme = "proposed";
        shape.rule = FusionRule::Or;
    }
    if (ov.scheme) shape.scheme = *ov.scheme;
    if (ov.rule) shape.rule = *ov.rule;
    if (ov.history_len) shape.history_len = *ov.history_len;
    shape.majority_l = ov.majority_l;

    RunRequest req;
    req.preset = preset;
    auto add = [&](Shape s) {
        if (s.majority_l && s.rule == FusionRule::Majority && *s.majority_l > s.k)
            throw UsageError("--majority-l: must not exceed the number of CRs (" + std::to_string(s.k) + ")");
        req.curves.push_back(make_config(s, common));
    };

    if (preset.empty()) {
        conflict(ov.majority_l.has_value() && shape.rule != FusionRule::Majority, "--majority-l",
                 "requires --rule MAJ");
        shape.k = ov.num_crs.value_or(1);
        add(shape);
    } else if (preset == "fig1") {
        conflict(ov.history_len.has_value(), "--history-len", "fig1 sweeps L itself");
        shape.k = ov.num_crs.value_or(3);
        for (int l : {5, 10, 15, 20}) {
            Shape s = shape;
            s.history_len = l;
            s.suffix = "-L" + std::to_string(l);
            add(s);
        }
    } else if (preset == "fig2") {
        conflict(ov.num_crs.has_value(), "--num-crs", "fig2 sweeps K itself");
        for (int k : {1, 3, 5, 7}) {
            Shape s = shape;
            s.k = k;
            s.suffix = "-K" + std::to_string(k);
            if (s.majority_l) s.majority_l = std::min(*s.majority_l, k);
            add(s);
        }
    } else if (preset == "fig3") {
        conflict(ov.scheme.has_value(), "--scheme", "fig3 sweeps schemes itself");
        conflict(ov.rule.has_value(), "--rule", "fig3 sweeps fusion rules itself");
        shape.k = ov.num_crs.value_or(7);
        if (!shape.majority_l) shape.majority_l = 3;
        for (const char* scheme : {"proposed", "conventional"}) {
            for (FusionRule rule : {FusionRule::And, FusionRule::Or, FusionRule::Majority}) {
                Shape s = shape;
                s.scheme = scheme;
                s.rule = rule;
                add(s);
            }
        }
        Shape m = shape;
        m.scheme = "mrc";
        add(m);
    } else {  // fig4
        conflict(ov.num_crs.has_value(), "--num-crs", "fig4 searches K itself");
        conflict(ov.scheme.has_value(), "--scheme", "fig4 compares fixed schemes");
        CrsStudy study;
        shape.k = study.reference_k;
        Shape ref = shape;
        ref.scheme = "proposed";
        study.reference = make_config(ref, common);
        for (const char* scheme : {"proposed", "conventional", "mrc"}) {
            Shape s = shape;
            s.scheme = scheme;
            study.candidates.push_back(make_config(s, common));
        }
        req.crs = study;
    }

    try {
        for (const auto& c : req.curves) c.validate();
        if (req.crs) {
            req.crs->reference.validate();
            for (const auto& c : req.crs->candidates) c.validate();
        }
    } catch (const DomainError& e) {
        throw UsageError(usage_from_domain(e.what()));
    }
    return req;
}

namespace {

struct CliState {
    Overrides ov;
    std::string preset;
    std::string rule;
    std::string pfa_grid;
    std::string format = "csv";
    std::string fidelity;
    std::string replay;
    std::string out;
    bool no_summary = false;
};

void configure_app(CLI::App& app, CliState& st) {
    app.add_option("--preset", st.preset, "fig1 | fig2 | fig3 | fig4");
    app.add_option("--scheme", st.ov.scheme, "conventional | proposed | mrc");
    app.add_option("--rule", st.rule, "AND | OR | MAJ");
    app.add_option("--num-samples", st.ov.num_samples, "samples per sensing event (N)");
    app.add_option("--num-crs", st.ov.num_crs, "cooperating CRs (K)");
    app.add_option("--history-len", st.ov.history_len, "stored energy records (L)");
    app.add_option("--majority-l", st.ov.majority_l, "votes needed under MAJ");
    app.add_option("--snr-db", st.ov.snr_db, "mean SNR in dB");
    app.add_option("--uncertainty-db", st.ov.uncertainty_db, "noise uncertainty half-width in dB");
    app.add_option("--duty-cycle", st.ov.duty_cycle, "fraction of time the PU is active");
    app.add_option("--dwell-events", st.ov.dwell_events, "mean PU dwell in events");
    app.add_option("--events", st.ov.events, "sensing events per grid point");
    app.add_option("--pfa-grid", st.pfa_grid, "standard | wide | log:LO:HI:N | comma list");
    app.add_option("--seed", st.ov.seed, "base seed");
    app.add_option("--format", st.format, "csv | json");
    app.add_option("--out", st.out, "output path ('-' for stdout)");
    app.add_option("--fidelity", st.fidelity, "energy | samples");
    app.add_option("--workers", st.ov.workers, "worker threads (0: all cores)");
    app.add_option("--n-ref", st.ov.n_ref, "noise-only reference samples per event");
    app.add_flag("--genie-variance", st.ov.genie_variance, "use the true noise variance");
    app.add_option("--replay", st.replay, "rerun a saved manifest");
    app.add_flag("--no-summary", st.no_summary, "skip the text summary");
}

}  // namespace

RunRequest parse_args(const std::vector<std::string>& args) {
    CliState st;
    CLI::App app{"css_sim"};
    configure_app(app, st);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        throw;
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    std::optional<OutputFormat> format;
    if (app.count("--format")) {
        if (st.format == "csv") format = OutputFormat::Csv;
        else if (st.format == "json") format = OutputFormat::Json;
        else throw UsageError("--format: expected csv or json");
    }

    if (!st.replay.empty()) {
        for (const auto* opt : app.get_options()) {
            const std::string name = opt->get_name();
            if (opt->count() > 0 && name != "--replay" && name != "--out" && name != "--format" &&
                name != "--no-summary")
                throw UsageError(name + ": conflicts with --replay");
        }
        json j;
        try {
            j = json::parse(read_file(st.replay));
        } catch (const json::exception& e) {
            throw UsageError(std::string("--replay: malformed manifest: ") + e.what());
        }
        if (j.contains("manifest")) j = j.at("manifest");
        RunRequest req;
        try {
            req = manifest_from_json(j).request;
        } catch (const json::exception& e) {
            throw UsageError(std::string("--replay: malformed manifest: ") + e.what());
        }
        if (app.count("--out")) req.output.out = st.out;
        if (format) req.output.format = *format;
        if (st.no_summary) req.output.summary = false;
        return req;
    }

    if (app.count("--rule")) {
        try {
            st.ov.rule = parse_fusion_rule(st.rule);
        } catch (const DomainError&) {
            throw UsageError("--rule: expected AND, OR or MAJ");
        }
    }
    if (app.count("--pfa-grid")) st.ov.pfa_grid = parse_pfa_grid(st.pfa_grid);
    if (app.count("--fidelity")) {
        if (st.fidelity == "energy") st.ov.fidelity = Fidelity::Energy;
        else if (st.fidelity == "samples") st.ov.fidelity = Fidelity::Samples;
        else throw UsageError("--fidelity: expected energy or samples");
    }

    RunRequest req = build_request(st.preset, st.ov);
    req.output.out = st.out;
    req.output.format = format.value_or(OutputFormat::Csv);
    req.output.summary = !st.no_summary;
    return req;
}

json config_to_json(const ExperimentConfig& c) {
    const auto& s = c.scenario;
    json fusion;
    if (c.is_mrc()) {
        fusion = {{"kind", "mrc"}};
    } else {
        const auto& f = std::get<FusionSpec>(c.fusion);
        fusion = {{"kind", "hard"},
                  {"rule", std::string(to_string(f.rule))},
                  {"k_crs", f.k_crs},
                  {"majority_l", f.majority_l}};
    }
    return {
        {"label", c.label},
        {"scenario",
         {{"n_samples", s.n_samples},
          {"k_crs", s.k_crs},
          {"snr_bar_db", s.snr_bar_db},
          {"uncertainty_db", s.uncertainty_db},
          {"sigma2_nominal", s.sigma2_nominal},
          {"pu_dwell_events", s.pu_dwell_events},
          {"duty_cycle", s.duty_cycle},
          {"variance_source", s.variance_source == VarianceSource::Genie ? "genie" : "estimated"},
          {"n_ref", s.n_ref},
          {"seed", s.seed}}},
        {"detector", c.detector == DetectorKind::Proposed ? "proposed" : "conventional"},
        {"fusion", fusion},
        {"history_len", c.history_len},
        {"pfa_grid", c.pfa_grid},
        {"n_events", c.n_events},
        {"warmup_excluded", c.warmup_excluded},
        {"fidelity", c.fidelity == Fidelity::Samples ? "samples" : "energy"},
        {"workers", c.workers},
        {"theory_m_h0", c.theory_m_h0},
        {"theory_m_h1", c.theory_m_h1},
    };
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    c.label = j.at("label").get<std::string>();
    const auto& s = j.at("scenario");
    c.scenario.n_samples = s.at("n_samples").get<int>();
    c.scenario.k_crs = s.at("k_crs").get<int>();
    c.scenario.snr_bar_db = s.at("snr_bar_db").get<double>();
    c.scenario.uncertainty_db = s.at("uncertainty_db").get<double>();
    c.scenario.sigma2_nominal = s.at("sigma2_nominal").get<double>();
    c.scenario.pu_dwell_events = s.at("pu_dwell_events").get<double>();
    c.scenario.duty_cycle = s.at("duty_cycle").get<double>();
    c.scenario.variance_source =
        s.at("variance_source").get<std::string>() == "genie" ? VarianceSource::Genie
                                                              : VarianceSource::Estimated;
    c.scenario.n_ref = s.at("n_ref").get<int>();
    c.scenario.seed = s.at("seed").get<std::uint64_t>();
    c.detector = j.at("detector").get<std::string>() == "proposed" ? DetectorKind::Proposed
                                                                   : DetectorKind::Conventional;
    const auto& f = j.at("fusion");
    if (f.at("kind").get<std::string>() == "mrc") {
        c.fusion = SoftMrc{};
    } else {
        c.fusion = FusionSpec{parse_fusion_rule(f.at("rule").get<std::string>()),
                              f.at("k_crs").get<int>(), f.at("majority_l").get<int>()};
    }
    c.history_len = j.at("history_len").get<int>();
    c.pfa_grid = j.at("pfa_grid").get<std::vector<double>>();
    c.n_events = j.at("n_events").get<std::size_t>();
    c.warmup_excluded = j.at("warmup_excluded").get<bool>();
    c.fidelity = j.at("fidelity").get<std::string>() == "samples" ? Fidelity::Samples : Fidelity::Energy;
    c.workers = j.at("workers").get<int>();
    c.theory_m_h0 = j.at("theory_m_h0").get<int>();
    c.theory_m_h1 = j.at("theory_m_h1").get<int>();
    c.validate();
    return c;
}

json manifest_to_json(const RunManifest& m) {
    json curves = json::array();
    for (const auto& c : m.request.curves) curves.push_back(config_to_json(c));
    json j = {{"version", m.version},
              {"timestamp", m.timestamp},
              {"seed", m.seed},
              {"preset", m.request.preset},
              {"curves", curves},
              {"output",
               {{"format", m.request.output.format == OutputFormat::Json ? "json" : "csv"},
                {"out", m.request.output.out},
                {"summary", m.request.output.summary}}},
              {"output_paths", m.output_paths}};
    if (m.request.crs) {
        const auto& s = *m.request.crs;
        json cands = json::array();
        for (const auto& c : s.candidates) cands.push_back(config_to_json(c));
        j["crs_study"] = {{"reference", config_to_json(s.reference)},
                          {"reference_k", s.reference_k},
                          {"at_pfa", s.at_pfa},
                          {"k_max", s.k_max},
                          {"candidates", cands}};
    }
    return j;
}

RunManifest manifest_from_json(const json& j) {
    RunManifest m;
    m.version = j.at("version").get<std::string>();
    m.timestamp = j.at("timestamp").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.request.preset = j.at("preset").get<std::string>();
    for (const auto& c : j.at("curves")) m.request.curves.push_back(config_from_json(c));
    const auto& o = j.at("output");
    m.request.output.format = o.at("format").get<std::string>() == "json" ? OutputFormat::Json
                                                                          : OutputFormat::Csv;
    m.request.output.out = o.at("out").get<std::string>();
    m.request.output.summary = o.at("summary").get<bool>();
    m.output_paths = j.at("output_paths").get<std::vector<std::string>>();
    if (j.contains("crs_study")) {
        const auto& s = j.at("crs_study");
        CrsStudy study;
        study.reference = config_from_json(s.at("reference"));
        study.reference_k = s.at("reference_k").get<int>();
        study.at_pfa = s.at("at_pfa").get<double>();
        study.k_max = s.at("k_max").get<int>();
        for (const auto& c : s.at("candidates")) study.candidates.push_back(config_from_json(c));
        m.request.crs = study;
    }
    return m;
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    return printf_string("%.10g", v);
}

std::string format_csv(const std::vector<RocCurve>& curves) {
    std::string out = std::string(kCsvHeader) + "\n";
    for (const auto& c : curves) {
        for (const auto& p : c.points) {
            const auto& r = p.result;
            out += c.label;
            for (double v : {p.pfa_target, r.pfa_hat, r.ci95_pfa.lo, r.ci95_pfa.hi, r.pd_hat,
                             r.ci95_pd.lo, r.ci95_pd.hi, p.pfa_theory, p.pd_theory})
                out += "," + format_number(v);
            out += "\n";
        }
    }
    return out;
}

std::vector<RocCurve> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw DomainError("parse_csv: bad header");
    std::vector<RocCurve> curves;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 10) throw DomainError("parse_csv: expected 10 fields: " + line);
        std::vector<double> v;
        for (std::size_t i = 1; i < f.size(); ++i) v.push_back(std::strtod(f[i].c_str(), nullptr));
        if (curves.empty() || curves.back().label != f[0]) curves.push_back({f[0], {}});
        RocPoint p;
        p.pfa_target = v[0];
        p.result.pfa_hat = v[1];
        p.result.ci95_pfa = {v[2], v[3]};
        p.result.pd_hat = v[4];
        p.result.ci95_pd = {v[5], v[6]};
        p.pfa_theory = v[7];
        p.pd_theory = v[8];
        curves.back().points.push_back(p);
    }
    return curves;
}

json curves_to_json(const std::vector<RocCurve>& curves) {
    json arr = json::array();
    for (const auto& c : curves) {
        json pts = json::array();
        for (const auto& p : c.points) {
            const auto& r = p.result;
            pts.push_back({{"pfa_target", number_json(p.pfa_target)},
                           {"pfa_hat", number_json(r.pfa_hat)},
                           {"pfa_ci_lo", number_json(r.ci95_pfa.lo)},
                           {"pfa_ci_hi", number_json(r.ci95_pfa.hi)},
                           {"pd_hat", number_json(r.pd_hat)},
                           {"pd_ci_lo", number_json(r.ci95_pd.lo)},
                           {"pd_ci_hi", number_json(r.ci95_pd.hi)},
                           {"pfa_theory", number_json(p.pfa_theory)},
                           {"pd_theory", number_json(p.pd_theory)}});
        }
        arr.push_back({{"label", c.label}, {"points", pts}});
    }
    return arr;
}

std::string format_crs_csv(const CrsStudyResult& result, double at_pfa) {
    std::string out = "label,num_crs,at_pfa,pd_hat,target_pd\n";
    for (std::size_t i = 0; i < result.labels.size(); ++i)
        for (const auto& [k, pd] : result.searches[i].pd_by_k)
            out += result.labels[i] + "," + std::to_string(k) + "," + format_number(at_pfa) + "," +
                   format_number(pd) + "," + format_number(result.target_pd) + "\n";
    return out;
}

void emit_results(const std::vector<RocCurve>& curves, OutputFormat format,
                  const std::string& destination, const RunManifest& manifest, std::ostream& out) {
    if (curves.empty()) throw DomainError("emit_results: no curves to write");
    std::string body;
    if (format == OutputFormat::Csv) {
        body = format_csv(curves);
    } else {
        body = json{{"manifest", manifest_to_json(manifest)}, {"curves", curves_to_json(curves)}}
                   .dump(2) + "\n";
    }
    if (is_stdout(destination)) {
        out << body;
        return;
    }
    write_file(destination, body);
    if (format == OutputFormat::Csv)
        write_file(sidecar_path(destination), manifest_to_json(manifest).dump(2) + "\n");
}

std::string summarize(const std::vector<RocCurve>& curves) {
    constexpr double kAt = 0.1;
    std::string s = printf_string("%-24s %10s %10s %10s %10s %8s\n", "label", "pd@pfa0.1",
                                  "grid_pfa", "grid_pd", "auc", "auc_se");
    std::map<std::string, double> pd_by_label;
    for (const auto& c : curves) {
        const double pd = pd_at_pfa(c, kAt);
        pd_by_label.emplace(c.label, pd);
        const auto& np = nearest_target(c, kAt);
        std::string a = "n/a";
        std::string ase = "n/a";
        if (c.points.size() >= 2) {
            a = printf_string("%.4f", auc(c));
            ase = printf_string("%.4f", auc_stderr(c));
        }
        s += printf_string("%-24s %10.4f %10.4f %10.4f %10s %8s\n", c.label.c_str(), pd,
                           np.result.pfa_hat, np.result.pd_hat, a.c_str(), ase.c_str());
    }
    s += "ratios of pd at FC pfa 0.1 versus conventional-hard with the same rule:\n";
    for (const auto& c : curves) {
        if (c.label == "MRC") continue;
        const auto dash = c.label.find('-');
        const std::string base =
            "conventional" + (dash == std::string::npos ? std::string() : c.label.substr(dash));
        const auto it = pd_by_label.find(base);
        if (it == pd_by_label.end()) {
            s += "  " + c.label + ": no baseline '" + base + "'; ratio omitted\n";
            continue;
        }
        const double r = it->second > 0.0 ? pd_by_label[c.label] / it->second
                                          : std::numeric_limits<double>::infinity();
        s += printf_string("  %s / %s = %.3f\n", c.label.c_str(), base.c_str(), r);
    }
    if (const auto m = pd_by_label.find("MRC"); m != pd_by_label.end() && m->second > 0.0) {
        s += "ratios versus MRC:\n";
        for (const auto& c : curves)
            if (c.label.rfind("proposed", 0) == 0)
                s += printf_string("  %s / MRC = %.3f\n", c.label.c_str(), pd_by_label[c.label] / m->second);
    }
    return s;
}

CrsStudyResult run_crs_study(const CrsStudy& study) {
    ExperimentConfig ref = study.reference;
    ref.set_num_crs(study.reference_k);
    CrsStudyResult out;
    out.target_pd = pd_at_pfa(roc_sweep(ref), study.at_pfa);
    for (const auto& c : study.candidates) {
        out.labels.push_back(c.label);
        out.searches.push_back(crs_needed_for(out.target_pd, study.at_pfa, c, study.k_max));
    }
    return out;
}

std::string summarize_crs(const CrsStudyResult& result, const CrsStudy& study) {
    std::string s = printf_string("target: pd %.4f at FC pfa %.3g (%s with K=%d)\n", result.target_pd,
                                  study.at_pfa, study.reference.label.c_str(), study.reference_k);
    std::optional<int> k_conv;
    for (std::size_t i = 0; i < result.labels.size(); ++i) {
        const auto& k = result.searches[i].k;
        s += printf_string("  %-24s K needed: %s\n", result.labels[i].c_str(),
                           k ? std::to_string(*k).c_str() : ("> " + std::to_string(study.k_max)).c_str());
        if (result.labels[i].rfind("conventional", 0) == 0) k_conv = k;
    }
    for (std::size_t i = 0; i < result.labels.size(); ++i) {
        const auto& k = result.searches[i].k;
        if (result.labels[i].rfind("proposed", 0) == 0 && k && k_conv)
            s += printf_string("  CR reduction versus conventional-hard: %.1f %%\n",
                               100.0 * (1.0 - static_cast<double>(*k) / *k_conv));
    }
    return s;
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args(argv + 1, argv + argc);
    RunRequest req;
    try {
        req = parse_args(args);
    } catch (const CLI::CallForHelp&) {
        CliState st;
        CLI::App app{"css_sim: cooperative spectrum sensing Monte Carlo"};
        configure_app(app, st);
        out << app.help();
        return 0;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    }

    try {
        RunManifest manifest;
        manifest.timestamp = utc_timestamp();
        manifest.request = req;
        manifest.seed = req.crs ? req.crs->reference.scenario.seed : req.curves.front().scenario.seed;
        const std::string& dest = req.output.out;
        if (!is_stdout(dest)) {
            manifest.output_paths.push_back(dest);
            if (req.output.format == OutputFormat::Csv) manifest.output_paths.push_back(sidecar_path(dest));
        }
        std::ostream& report = is_stdout(dest) ? err : out;

        if (req.crs) {
            const CrsStudyResult result = run_crs_study(*req.crs);
            std::string body;
            if (req.output.format == OutputFormat::Csv) {
                body = format_crs_csv(result, req.crs->at_pfa);
            } else {
                json searches = json::array();
                for (std::size_t i = 0; i < result.labels.size(); ++i) {
                    json rows = json::array();
                    for (const auto& [k, pd] : result.searches[i].pd_by_k)
                        rows.push_back({{"num_crs", k}, {"pd_hat", number_json(pd)}});
                    const auto& k = result.searches[i].k;
                    searches.push_back({{"label", result.labels[i]},
                                        {"k_needed", k ? json(*k) : json(nullptr)},
                                        {"pd_by_k", rows}});
                }
                body = json{{"manifest", manifest_to_json(manifest)},
                            {"target_pd", number_json(result.target_pd)},
                            {"at_pfa", req.crs->at_pfa},
                            {"searches", searches}}
                           .dump(2) + "\n";
            }
            if (is_stdout(dest)) {
                out << body;
            } else {
                write_file(dest, body);
                if (req.output.format == OutputFormat::Csv)
                    write_file(sidecar_path(dest), manifest_to_json(manifest).dump(2) + "\n");
            }
            if (req.output.summary) report << summarize_crs(result, *req.crs);
            return 0;
        }

        std::vector<RocCurve> curves;
        for (const auto& c : req.curves) curves.push_back(roc_sweep(c));
        emit_results(curves, req.output.format, dest, manifest, out);
        if (req.output.summary) report << summarize(curves);
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace css
