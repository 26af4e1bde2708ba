#pragma once

// Physical-layer world: PU ON/OFF activity, BPSK primary signal, Rayleigh
// block fading per CR, and AWGN whose variance wobbles per CR per event.
//
// Samples are real baseband: noise is N(0, s2) per sample, so the energy of N
// noise samples has mean N*s2 and variance 2*N*s2^2.

#include "css/rng.hpp"

#include <cstdint>
#include <vector>

namespace css {

using Sample = double;

enum class Hypothesis : std::uint8_t { H0 = 0, H1 = 1 };

/// How a CR learns its noise variance each event.
enum class VarianceSource : std::uint8_t {
    Estimated,  // mean w^2 over a noise-only reference window
    Genie,      // the true variance of the event
};

struct ScenarioConfig {
    int n_samples = 1000;
    int k_crs = 1;
    double snr_bar_db = -15.0;
    double uncertainty_db = 0.0;
    double sigma2_nominal = 1.0;
    double pu_dwell_events = 50.0;
    double duty_cycle = 0.5;
    VarianceSource variance_source = VarianceSource::Estimated;
    int n_ref = 0;  // reference window length; 0 means n_samples
    std::uint64_t seed = 1;

    void validate() const;
    double snr_bar() const;  // linear
    int reference_len() const { return n_ref > 0 ? n_ref : n_samples; }
};

struct SensingEvent {
    Hypothesis hypothesis = Hypothesis::H0;
    std::vector<std::vector<Sample>> per_cr_samples;    // K x N
    std::vector<std::vector<Sample>> per_cr_reference;  // K x N_ref noise-only (empty in genie mode)
    std::vector<double> per_cr_true_sigma2;
    std::vector<double> per_cr_gamma;  // drawn under both hypotheses; signal only under H1
};

/// Sufficient statistics of one event: what the detectors actually consume.
struct EventEnergies {
    Hypothesis hypothesis = Hypothesis::H0;
    std::vector<double> energy;        // E_j
    std::vector<double> sigma2_hat;    // variance known to CR j
    std::vector<double> true_sigma2;
    std::vector<double> gamma;
};

/// Real-axis BPSK, each sample +-sqrt(power) with equal probability.
std::vector<Sample> gen_bpsk(int n, double power, Rng& rng);

/// Exponential SNR draw with mean snr_bar (|h|^2 of a Rayleigh channel).
double draw_rayleigh_gamma(double snr_bar, Rng& rng);

/// Symmetric two-state chain, flip probability 1/dwell.
Hypothesis step_pu_activity(Hypothesis current, double pu_dwell_events, Rng& rng);

/// Asymmetric variant: mean ON dwell 2*dwell*duty, mean OFF dwell 2*dwell*(1-duty).
Hypothesis step_pu_activity(Hypothesis current, double pu_dwell_events, double duty_cycle,
                            Rng& rng);

/// sigma2 * 10^(u/10), u ~ U[-uncertainty_db, uncertainty_db].
double draw_noise_sigma2(double sigma2_nominal, double uncertainty_db, Rng& rng);

/// Zero-mean Gaussian noise sample with variance sigma2.
Sample draw_noise(double sigma2, Rng& rng);

/// Stream layout for one event. All K CRs share the PU signal stream; each CR
/// has its own stream for fading, noise variance and noise.
struct EventStreams {
    std::uint64_t seed;
    std::uint64_t event_index;

    Rng signal() const;
    Rng cr(int j) const;
};

/// Full sample-level event.
SensingEvent gen_event(const ScenarioConfig& config, Hypothesis hypothesis,
                       const EventStreams& streams);
SensingEvent gen_event(const ScenarioConfig& config, Hypothesis hypothesis, Rng& rng);

struct CrDraw {
    double energy = 0.0;
    double sigma2_hat = 0.0;
    double true_sigma2 = 0.0;
    double gamma = 0.0;
};

/// One CR's sufficient statistics for an event, drawn from its own stream.
CrDraw draw_cr_energy(const ScenarioConfig& config, Hypothesis hypothesis,
                      const EventStreams& streams, int cr);

/// Energy-level event with the same distribution as compute_energy(gen_event(...)).
EventEnergies gen_event_energies(const ScenarioConfig& config, Hypothesis hypothesis,
                                 const EventStreams& streams);

/// Initial PU state drawn from the chain's stationary law.
Hypothesis initial_pu_state(double duty_cycle, Rng& rng);

/// n_events of the PU chain from a dedicated stream of `seed`.
std::vector<Hypothesis> pu_sequence(const ScenarioConfig& config, std::size_t n_events);

}  // namespace css
