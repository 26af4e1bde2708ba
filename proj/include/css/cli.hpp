#pragma once

// Command-line front end: figure presets, custom experiments, CSV/JSON
// output with a run manifest, manifest replay and text summaries.

#include "css/montecarlo.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace css {

inline constexpr const char* kToolVersion = "0.1.0";

enum class OutputFormat { Csv, Json };

struct OutputOptions {
    OutputFormat format = OutputFormat::Csv;
    std::string out;  // empty or "-": stdout
    bool summary = true;
};

/// Minimum-K comparison: the reference scheme at reference_k fixes the
/// target pd at FC false-alarm rate at_pfa, then every candidate is searched
/// over K = 1..k_max.
struct CrsStudy {
    ExperimentConfig reference;
    int reference_k = 3;
    double at_pfa = 0.1;
    int k_max = 40;
    std::vector<ExperimentConfig> candidates;
};

struct CrsStudyResult {
    double target_pd = 0.0;
    std::vector<std::string> labels;
    std::vector<CrsSearch> searches;
};

struct RunRequest {
    std::string preset;  // empty for a custom run
    std::vector<ExperimentConfig> curves;
    std::optional<CrsStudy> crs;
    OutputOptions output;
};

/// Flag values before preset expansion. Unset fields keep preset defaults.
struct Overrides {
    std::optional<std::string> scheme;
    std::optional<FusionRule> rule;
    std::optional<int> num_samples;
    std::optional<int> num_crs;
    std::optional<int> history_len;
    std::optional<int> majority_l;
    std::optional<double> snr_db;
    std::optional<double> uncertainty_db;
    std::optional<double> duty_cycle;
    std::optional<double> dwell_events;
    std::optional<std::size_t> events;
    std::optional<std::vector<double>> pfa_grid;
    std::optional<std::uint64_t> seed;
    std::optional<Fidelity> fidelity;
    std::optional<int> workers;
    std::optional<int> n_ref;
    bool genie_variance = false;
};

/// "standard", "wide", "log:LO:HI:N" or a comma-separated list.
std::vector<double> parse_pfa_grid(const std::string& text);

/// Expands a preset (or a custom run when preset is empty) with overrides
/// applied. Throws UsageError for unknown presets or flags that conflict
/// with the preset's swept parameter.
RunRequest build_request(const std::string& preset, const Overrides& overrides);

/// Parses argv (without the program name). Throws UsageError naming the flag.
RunRequest parse_args(const std::vector<std::string>& args);

std::string scheme_label(const ExperimentConfig& config);

nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);

struct RunManifest {
    std::string version = kToolVersion;
    std::string timestamp;
    std::uint64_t seed = 0;
    RunRequest request;
    std::vector<std::string> output_paths;
};

nlohmann::json manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& j);

inline constexpr const char* kCsvHeader =
    "label,pfa_target,pfa_hat,pfa_ci_lo,pfa_ci_hi,pd_hat,pd_ci_lo,pd_ci_hi,pfa_theory,pd_theory";

std::string format_number(double v);
std::string format_csv(const std::vector<RocCurve>& curves);
std::vector<RocCurve> parse_csv(const std::string& text);
nlohmann::json curves_to_json(const std::vector<RocCurve>& curves);

std::string format_crs_csv(const CrsStudyResult& result, double at_pfa);

/// Writes curves to `destination` ("" or "-" for stdout). CSV output gets a
/// `<destination>.manifest.json` sidecar; JSON embeds the manifest. Throws
/// DomainError on an empty curve list and IoError on unwritable paths; in
/// both cases no file is created.
void emit_results(const std::vector<RocCurve>& curves, OutputFormat format,
                  const std::string& destination, const RunManifest& manifest, std::ostream& out);

/// Per-curve pd near FC pfa 0.1, ratios to the conventional-hard baseline
/// with the same rule, ratios to MRC, and AUCs.
std::string summarize(const std::vector<RocCurve>& curves);
std::string summarize_crs(const CrsStudyResult& result, const CrsStudy& study);

CrsStudyResult run_crs_study(const CrsStudy& study);

/// Entry point of the css_sim tool; returns the process exit code.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace css
