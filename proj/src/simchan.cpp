#include "css/simchan.hpp"

#include "css/error.hpp"

#include <cmath>
#include <random>

namespace css {
namespace {

// Stream tags; arbitrary but fixed, they are part of the reproducibility contract.
constexpr std::uint64_t kTagSignal = 0x5349474eULL;  // "SIGN"
constexpr std::uint64_t kTagCr = 0x43520000ULL;
constexpr std::uint64_t kTagPu = 0x50550000ULL;

double chi_square(double dof, Rng& rng) {
    if (dof <= 0.0) return 0.0;
    std::gamma_distribution<double> gamma(0.5 * dof, 2.0);
    return gamma(rng);
}

}  // namespace

void ScenarioConfig::validate() const {
    if (n_samples < 1) throw DomainError("n_samples must be >= 1");
    if (k_crs < 1) throw DomainError("k_crs must be >= 1");
    if (!std::isfinite(snr_bar_db)) throw DomainError("snr_bar_db must be finite");
    if (!(uncertainty_db >= 0.0) || !std::isfinite(uncertainty_db))
        throw DomainError("uncertainty_db must be >= 0");
    if (!(sigma2_nominal > 0.0) || !std::isfinite(sigma2_nominal))
        throw DomainError("sigma2_nominal must be positive");
    if (!(pu_dwell_events >= 1.0)) throw DomainError("pu_dwell_events must be >= 1");
    if (!(duty_cycle > 0.0 && duty_cycle < 1.0)) throw DomainError("duty_cycle must lie in (0,1)");
    if (2.0 * pu_dwell_events * duty_cycle < 1.0 || 2.0 * pu_dwell_events * (1.0 - duty_cycle) < 1.0)
        throw DomainError("duty_cycle too extreme for pu_dwell_events (a mean dwell falls below 1)");
    if (n_ref < 0) throw DomainError("n_ref must be >= 0");
}

double ScenarioConfig::snr_bar() const { return std::pow(10.0, snr_bar_db / 10.0); }

std::vector<Sample> gen_bpsk(int n, double power, Rng& rng) {
    if (n < 1) throw DomainError("gen_bpsk: n must be >= 1");
    if (!(power > 0.0)) throw DomainError("gen_bpsk: power must be positive");
    const double amp = std::sqrt(power);
    std::vector<Sample> out(static_cast<std::size_t>(n));
    std::uint64_t bits = 0;
    for (int i = 0; i < n; ++i) {
        if (i % 64 == 0) bits = rng();
        out[static_cast<std::size_t>(i)] = (bits & 1ULL) ? amp : -amp;
        bits >>= 1;
    }
    return out;
}

double draw_rayleigh_gamma(double snr_bar, Rng& rng) {
    if (!(snr_bar >= 0.0)) throw DomainError("draw_rayleigh_gamma: snr_bar must be >= 0");
    // Consume the draw even when degenerate so stream positions do not depend on snr_bar.
    const double u = rng.uniform();
    if (snr_bar == 0.0) return 0.0;
    return -snr_bar * std::log1p(-u);
}

Hypothesis step_pu_activity(Hypothesis current, double pu_dwell_events, Rng& rng) {
    return step_pu_activity(current, pu_dwell_events, 0.5, rng);
}

Hypothesis step_pu_activity(Hypothesis current, double pu_dwell_events, double duty_cycle,
                            Rng& rng) {
    if (!(pu_dwell_events >= 1.0)) throw DomainError("pu_dwell_events must be >= 1");
    const double mean_stay = current == Hypothesis::H1
                                 ? 2.0 * pu_dwell_events * duty_cycle
                                 : 2.0 * pu_dwell_events * (1.0 - duty_cycle);
    const double flip = std::isinf(mean_stay) ? 0.0 : 1.0 / mean_stay;
    if (rng.uniform() < flip) return current == Hypothesis::H1 ? Hypothesis::H0 : Hypothesis::H1;
    return current;
}

double draw_noise_sigma2(double sigma2_nominal, double uncertainty_db, Rng& rng) {
    if (!(uncertainty_db >= 0.0)) throw DomainError("uncertainty_db must be >= 0");
    const double u = rng.uniform();
    if (uncertainty_db == 0.0) return sigma2_nominal;
    const double db = uncertainty_db * (2.0 * u - 1.0);
    return sigma2_nominal * std::pow(10.0, db / 10.0);
}

Sample draw_noise(double sigma2, Rng& rng) {
    std::normal_distribution<double> normal(0.0, std::sqrt(sigma2));
    return normal(rng);
}

Rng EventStreams::signal() const { return Rng(derive_seed(seed, kTagSignal, event_index)); }

Rng EventStreams::cr(int j) const {
    return Rng(derive_seed(seed, kTagCr, event_index, static_cast<std::uint64_t>(j)));
}

SensingEvent gen_event(const ScenarioConfig& config, Hypothesis hypothesis,
                       const EventStreams& streams) {
    config.validate();
    const auto k = static_cast<std::size_t>(config.k_crs);
    const auto n = static_cast<std::size_t>(config.n_samples);
    const double snr_bar = config.snr_bar();

    SensingEvent ev;
    ev.hypothesis = hypothesis;
    ev.per_cr_samples.resize(k);
    ev.per_cr_reference.resize(k);
    ev.per_cr_true_sigma2.resize(k);
    ev.per_cr_gamma.resize(k);

    std::vector<Sample> signal;
    if (hypothesis == Hypothesis::H1) {
        Rng srng = streams.signal();
        signal = gen_bpsk(config.n_samples, 1.0, srng);
    }

    for (std::size_t j = 0; j < k; ++j) {
        Rng rng = streams.cr(static_cast<int>(j));
        const double s2 = draw_noise_sigma2(config.sigma2_nominal, config.uncertainty_db, rng);
        const double gamma = draw_rayleigh_gamma(snr_bar, rng);
        ev.per_cr_true_sigma2[j] = s2;
        ev.per_cr_gamma[j] = gamma;

        // SNR is relative to this event's actual noise variance.
        const double amplitude = std::sqrt(gamma * s2);
        std::normal_distribution<double> noise(0.0, std::sqrt(s2));
        auto& y = ev.per_cr_samples[j];
        y.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = noise(rng);
            if (hypothesis == Hypothesis::H1) y[i] += amplitude * signal[i];
        }
        if (config.variance_source == VarianceSource::Estimated) {
            auto& ref = ev.per_cr_reference[j];
            ref.resize(static_cast<std::size_t>(config.reference_len()));
            for (auto& r : ref) r = noise(rng);
        }
    }
    return ev;
}

SensingEvent gen_event(const ScenarioConfig& config, Hypothesis hypothesis, Rng& rng) {
    return gen_event(config, hypothesis, EventStreams{rng(), 0});
}

CrDraw draw_cr_energy(const ScenarioConfig& config, Hypothesis hypothesis,
                      const EventStreams& streams, int cr) {
    const double n = static_cast<double>(config.n_samples);
    Rng rng = streams.cr(cr);
    CrDraw d;
    d.true_sigma2 = draw_noise_sigma2(config.sigma2_nominal, config.uncertainty_db, rng);
    d.gamma = draw_rayleigh_gamma(config.snr_bar(), rng);
    // E / s2 is noncentral chi-square with N dof and noncentrality N*gamma:
    // one shifted normal square plus a central chi-square with N-1 dof.
    const double shift = hypothesis == Hypothesis::H1 ? std::sqrt(n * d.gamma) : 0.0;
    std::normal_distribution<double> normal;
    const double z = normal(rng) + shift;
    d.energy = d.true_sigma2 * (z * z + chi_square(n - 1.0, rng));
    if (config.variance_source == VarianceSource::Genie) {
        d.sigma2_hat = d.true_sigma2;
    } else {
        const double n_ref = static_cast<double>(config.reference_len());
        d.sigma2_hat = d.true_sigma2 * chi_square(n_ref, rng) / n_ref;
    }
    return d;
}

EventEnergies gen_event_energies(const ScenarioConfig& config, Hypothesis hypothesis,
                                 const EventStreams& streams) {
    config.validate();
    const auto k = static_cast<std::size_t>(config.k_crs);
    EventEnergies ev;
    ev.hypothesis = hypothesis;
    ev.energy.resize(k);
    ev.sigma2_hat.resize(k);
    ev.true_sigma2.resize(k);
    ev.gamma.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
        const CrDraw d = draw_cr_energy(config, hypothesis, streams, static_cast<int>(j));
        ev.energy[j] = d.energy;
        ev.sigma2_hat[j] = d.sigma2_hat;
        ev.true_sigma2[j] = d.true_sigma2;
        ev.gamma[j] = d.gamma;
    }
    return ev;
}

Hypothesis initial_pu_state(double duty_cycle, Rng& rng) {
    return rng.uniform() < duty_cycle ? Hypothesis::H1 : Hypothesis::H0;
}

std::vector<Hypothesis> pu_sequence(const ScenarioConfig& config, std::size_t n_events) {
    Rng rng(derive_seed(config.seed, kTagPu));
    std::vector<Hypothesis> seq(n_events);
    if (n_events == 0) return seq;
    Hypothesis state = initial_pu_state(config.duty_cycle, rng);
    for (std::size_t i = 0; i < n_events; ++i) {
        if (i > 0) state = step_pu_activity(state, config.pu_dwell_events, config.duty_cycle, rng);
        seq[i] = state;
    }
    return seq;
}

}  // namespace css
