#pragma once

// Seeded Monte Carlo runs of the full chain (world -> per-CR detection ->
// fusion), ROC sweeps with closed-form theory columns, and summary metrics.

#include "css/analytic.hpp"
#include "css/detector.hpp"
#include "css/simchan.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace css {

enum class DetectorKind { Conventional, Proposed };

/// Soft MRC combining at the fusion center (local decisions are skipped).
struct SoftMrc {};

using FusionChoice = std::variant<FusionSpec, SoftMrc>;

/// World generation granularity. Energy draws the per-CR energy and variance
/// estimate from their exact distributions; Samples builds every sample.
enum class Fidelity { Energy, Samples };

struct ExperimentConfig {
    std::string label;
    ScenarioConfig scenario;
    DetectorKind detector = DetectorKind::Conventional;
    FusionChoice fusion = FusionSpec{};
    int history_len = 15;
    std::vector<double> pfa_grid;
    std::size_t n_events = 200000;
    bool warmup_excluded = true;
    Fidelity fidelity = Fidelity::Energy;
    int workers = 0;  // 0: hardware concurrency. Never affects results.
    int theory_m_h0 = 0;
    int theory_m_h1 = -1;  // -1: history_len

    void validate() const;
    bool is_mrc() const { return std::holds_alternative<SoftMrc>(fusion); }
    /// Sets K in both the scenario and the fusion spec (Majority l is clipped to K).
    void set_num_crs(int k);
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// 95% Wilson score interval.
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials);

struct EmpiricalResult {
    double pfa_hat = 0.0;
    double pd_hat = 0.0;
    std::uint64_t n_h0 = 0;
    std::uint64_t n_h1 = 0;
    std::uint64_t false_alarms = 0;
    std::uint64_t detections = 0;
    Interval ci95_pfa;
    Interval ci95_pd;
    std::uint64_t seed = 0;
    double threshold = 0.0;   // lambda used by the CRs
    double mean_rho = 1.0;    // mean rho_hat over counted proposed decisions

    double pfa_stderr() const;
    double pd_stderr() const;
};

/// Per-event record of a run, for equivalence checks.
struct DecisionTrace {
    std::vector<Hypothesis> truth;
    std::vector<Bit> fused;
    std::vector<Bit> local;  // event-major, K per event (empty for MRC)
    std::vector<bool> counted;
};

EmpiricalResult run_experiment(const ExperimentConfig& config, double p_fa_target);
DecisionTrace trace_decisions(const ExperimentConfig& config, double p_fa_target);

struct RocPoint {
    double pfa_target = 0.0;
    EmpiricalResult result;
    double pfa_theory = 0.0;
    double pd_theory = 0.0;
};

struct RocCurve {
    std::string label;
    std::vector<RocPoint> points;
};

/// Closed-form (pfa, pd) at one CFAR target for the configured scheme.
/// NaN where no closed form exists (MRC detection).
std::pair<double, double> theory_point(const ExperimentConfig& config, double p_fa_target);

/// Seed used for grid point `index` of a sweep.
std::uint64_t grid_point_seed(std::uint64_t base, std::size_t index);

RocCurve roc_sweep(const ExperimentConfig& config);

/// Trapezoidal area under (pfa_hat, pd_hat) with (0,0) and (1,1) anchors.
double auc(const RocCurve& curve);

/// Delta-method standard error of auc() from the per-point binomial errors.
double auc_stderr(const RocCurve& curve);

/// Linear interpolation of pd_hat at an empirical false-alarm rate.
double pd_at_pfa(const RocCurve& curve, double pfa);

/// Grid point whose target is nearest `pfa_target` (log distance).
const RocPoint& nearest_target(const RocCurve& curve, double pfa_target);

struct CrsSearch {
    std::optional<int> k;
    std::vector<std::pair<int, double>> pd_by_k;  // interpolated pd at at_pfa per K tried
};

/// Smallest K <= k_max whose ROC reaches target_pd (less one Monte Carlo
/// sigma) at empirical FC false-alarm rate at_pfa.
CrsSearch crs_needed_for(double target_pd, double at_pfa, const ExperimentConfig& config_template,
                         int k_max);

}  // namespace css
