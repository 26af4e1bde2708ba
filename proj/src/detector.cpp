#include "css/detector.hpp"

#include "css/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace css {

double compute_energy(std::span<const double> samples) {
    if (samples.empty()) throw DomainError("compute_energy: empty sample sequence");
    double e = 0.0;
    for (double y : samples) e += y * y;
    return e;
}

double compute_energy(std::span<const std::complex<double>> samples) {
    if (samples.empty()) throw DomainError("compute_energy: empty sample sequence");
    double e = 0.0;
    for (const auto& y : samples) e += std::norm(y);
    return e;
}

double estimate_noise_variance(std::span<const double> noise_samples) {
    if (noise_samples.empty()) throw DomainError("estimate_noise_variance: empty reference");
    return compute_energy(noise_samples) / static_cast<double>(noise_samples.size());
}

double estimate_noise_variance(std::span<const std::complex<double>> noise_samples) {
    if (noise_samples.empty()) throw DomainError("estimate_noise_variance: empty reference");
    return compute_energy(noise_samples) / static_cast<double>(noise_samples.size());
}

CrState::CrState(int capacity) : capacity_(capacity) {
    if (capacity < 2) throw DomainError("CrState: history length L must be >= 2");
}

void CrState::push(double energy, double sigma2_hat) {
    if (!(sigma2_hat > 0.0)) throw DomainError("push_history: sigma2_hat must be positive");
    energies_.push_back(energy);
    sigma2_.push_back(sigma2_hat);
    if (energies_.size() > static_cast<std::size_t>(capacity_)) {
        energies_.pop_front();
        sigma2_.pop_front();
    }
}

CrState push_history(CrState state, double energy, double sigma2_hat) {
    state.push(energy, sigma2_hat);
    return state;
}

double average_energy(const CrState& state) {
    if (!state.full()) throw StateError("average_energy: history not full (warm-up)");
    const auto& e = state.energies();
    return std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(e.size());
}

double estimate_rho(const CrState& state) {
    if (!state.full()) throw StateError("estimate_rho: history not full (warm-up)");
    const auto& s = state.sigma2_estimates();
    const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
    if (*lo == *hi) return 1.0;
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    // Rounding in the mean can push the ratio a hair below 1 for near-equal entries.
    return std::max(1.0, *hi / mean);
}

double select_threshold(double e_avg, double lambda, double rho) {
    if (!(rho >= 1.0)) throw DomainError("select_threshold: rho must be >= 1");
    if (!(lambda > 0.0)) throw DomainError("select_threshold: lambda must be positive");
    return e_avg >= lambda ? lambda / rho : rho * lambda;
}

LocalDecision decide_local(const CrState& state, double current_energy, double lambda) {
    LocalDecision d;
    d.e_avg = average_energy(state);
    d.rho_hat = estimate_rho(state);
    d.predicted_present = d.e_avg >= lambda;
    d.threshold_used = select_threshold(d.e_avg, lambda, d.rho_hat);
    d.bit = current_energy >= d.threshold_used ? Bit::Present : Bit::Absent;
    return d;
}

Bit decide_conventional(double current_energy, double lambda) {
    if (!(lambda > 0.0)) throw DomainError("decide_conventional: lambda must be positive");
    return current_energy >= lambda ? Bit::Present : Bit::Absent;
}

}  // namespace css
