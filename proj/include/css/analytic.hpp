#pragma once

// Closed-form performance of single-CR energy detection (fixed and dual
// dynamic threshold) and of hard-decision fusion under i.i.d. CRs.
//
// All functions are pure and may be called concurrently.

#include <cstdint>
#include <string_view>
#include <utility>

namespace css {

struct DetectorParams {
    int n_samples = 1000;     // N
    double sigma2 = 1.0;      // nominal noise variance
    double snr = 0.0;         // instantaneous SNR (linear), AWGN formulas
    double snr_bar = 0.0;     // mean SNR (linear), Rayleigh formulas
    // Half-width of the dB-uniform noise-variance wobble. 0 gives the textbook
    // known-variance formulas; >0 averages every tail term over the wobble.
    double uncertainty_db = 0.0;

    void validate() const;
};

struct ProposedParams {
    int history_len = 15;     // L
    int active_count = 0;     // M: PU-active events among the L in the window
    double rho = 1.0;         // noise uncertainty factor
    DetectorParams base;

    void validate() const;
};

struct AnalyticPoint {
    double p_fa = 0.0;
    double p_d = 0.0;
    double threshold = 0.0;
};

enum class FusionRule { And, Or, Majority };

std::string_view to_string(FusionRule rule);
FusionRule parse_fusion_rule(std::string_view text);

struct FusionSpec {
    FusionRule rule = FusionRule::Or;
    int k_crs = 1;
    int majority_l = 1;  // only read for Majority

    void validate() const;
    /// Majority with l = ceil(K/2).
    static FusionSpec majority_default(int k_crs);
};

/// Gaussian tail probability. Throws DomainError on NaN/inf.
double q_function(double x);

/// Inverse of q_function on (0,1).
double q_inverse(double p);

/// Clamps rounding spill into [0,1]; throws NumericalError when the excess
/// is larger than 1e-9.
double checked_probability(double p);

/// CFAR threshold on the nominal model: N*s2 + sqrt(2N)*s2*Qinv(p).
double cfar_threshold(double p_fa_target, const DetectorParams& params);

double pfa_conventional(double threshold, const DetectorParams& params);
double pd_awgn(double threshold, const DetectorParams& params);
/// pd_awgn averaged over an exponential SNR with mean params.snr_bar.
double pd_rayleigh(double threshold, const DetectorParams& params);

struct AverageEnergyMoments {
    double mean = 0.0;
    double variance = 0.0;
};

/// Mean and variance of the L-event average energy with M active events.
/// Uses base.snr for the active events.
AverageEnergyMoments avg_energy_moments(const ProposedParams& params);

/// Probability the PU-activity predictor fires, Q((lambda - mu_avg)/sigma_avg).
double predictor_weight(double threshold, const ProposedParams& params);

double pfa_proposed(double threshold, const ProposedParams& params);
double pd_proposed_awgn(double threshold, const ProposedParams& params);
double pd_proposed_rayleigh(double threshold, const ProposedParams& params);

/// FC-level probability from an i.i.d. per-CR probability.
double fuse_probability(double p_single, const FusionSpec& spec);

/// First two moments of the wobbled variance sigma2 * 10^(u/10), u ~ U[-d, d].
struct NoiseMoments {
    double m1 = 1.0;  // E[s2]
    double m2 = 1.0;  // E[s2^2]
};
NoiseMoments noise_moments(double sigma2, double uncertainty_db);

/// Expected max/mean ratio of L variance estimates under the dB-uniform
/// wobble, as E[max]/E[mean]. n_ref = 0 means exact (genie) variances,
/// otherwise each estimate averages n_ref noise samples.
double implied_rho(double uncertainty_db, int history_len, int n_ref);

}  // namespace css
