#pragma once

// Per-CR sensing: energy, noise-variance history, noise uncertainty factor,
// PU-activity prediction and the dual dynamic threshold decision.

#include <complex>
#include <cstddef>
#include <deque>
#include <span>

namespace css {

enum class Bit : unsigned char { Absent = 0, Present = 1 };

inline bool is_present(Bit b) { return b == Bit::Present; }

struct LocalDecision {
    Bit bit = Bit::Absent;
    double threshold_used = 0.0;
    double rho_hat = 1.0;
    double e_avg = 0.0;
    bool predicted_present = false;
};

double compute_energy(std::span<const double> samples);
double compute_energy(std::span<const std::complex<double>> samples);

/// Mean squared magnitude of noise-only reference samples.
double estimate_noise_variance(std::span<const double> noise_samples);
double estimate_noise_variance(std::span<const std::complex<double>> noise_samples);

/// Rolling window of the last L (energy, variance estimate) pairs of one CR.
/// Single owner; not safe for concurrent mutation.
class CrState {
public:
    explicit CrState(int capacity);

    /// Appends a pair, evicting the oldest once the window holds L pairs.
    void push(double energy, double sigma2_hat);

    int capacity() const { return capacity_; }
    std::size_t size() const { return energies_.size(); }
    bool full() const { return energies_.size() == static_cast<std::size_t>(capacity_); }

    const std::deque<double>& energies() const { return energies_; }
    const std::deque<double>& sigma2_estimates() const { return sigma2_; }

private:
    int capacity_;
    std::deque<double> energies_;
    std::deque<double> sigma2_;
};

/// Functional form of CrState::push.
CrState push_history(CrState state, double energy, double sigma2_hat);

/// Mean of the L stored energies. Throws StateError before warm-up completes.
double average_energy(const CrState& state);

/// max / mean of the L stored variance estimates; exactly 1 when all equal.
double estimate_rho(const CrState& state);

/// lambda/rho when e_avg >= lambda (PU predicted present), rho*lambda otherwise.
double select_threshold(double e_avg, double lambda, double rho);

/// Decision for the current event. The current (energy, variance) pair must
/// already be the newest entry of a full window.
LocalDecision decide_local(const CrState& state, double current_energy, double lambda);

Bit decide_conventional(double current_energy, double lambda);

}  // namespace css
