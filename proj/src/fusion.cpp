#include "css/fusion.hpp"

#include "css/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace css {

Bit fuse_hard(std::span<const Bit> decisions, const FusionSpec& spec) {
    spec.validate();
    if (decisions.size() != static_cast<std::size_t>(spec.k_crs))
        throw DomainError("fuse_hard: expected " + std::to_string(spec.k_crs) + " decisions, got " +
                          std::to_string(decisions.size()));
    const auto votes = std::count(decisions.begin(), decisions.end(), Bit::Present);
    bool present = false;
    switch (spec.rule) {
        case FusionRule::And: present = votes == spec.k_crs; break;
        case FusionRule::Or: present = votes >= 1; break;
        case FusionRule::Majority: present = votes >= spec.majority_l; break;
    }
    return present ? Bit::Present : Bit::Absent;
}

std::vector<double> mrc_weights(std::span<const double> gammas) {
    if (gammas.empty()) throw DomainError("mrc_weights: no CRs");
    double total = 0.0;
    for (double g : gammas) {
        if (!(g >= 0.0)) throw DomainError("mrc_weights: gammas must be >= 0");
        total += g;
    }
    if (!(total > 0.0)) throw DomainError("mrc_weights: all gammas are zero (degenerate weights)");
    std::vector<double> w(gammas.begin(), gammas.end());
    for (double& x : w) x /= total;
    return w;
}

Bit fuse_soft_mrc(std::span<const double> energies, std::span<const double> gammas,
                  double threshold) {
    if (energies.size() != gammas.size())
        throw DomainError("fuse_soft_mrc: energies and gammas differ in length");
    const auto w = mrc_weights(gammas);
    const double t = std::inner_product(w.begin(), w.end(), energies.begin(), 0.0);
    return t >= threshold ? Bit::Present : Bit::Absent;
}

double mrc_threshold_for_pfa(double p_fa_target, std::span<const double> gammas,
                             const DetectorParams& params) {
    params.validate();
    if (!(p_fa_target > 0.0 && p_fa_target < 1.0))
        throw DomainError("mrc_threshold_for_pfa: target must lie in (0,1)");
    const auto w = mrc_weights(gammas);
    const double sum_w2 = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
    const double n = static_cast<double>(params.n_samples);
    const double s2 = params.sigma2;
    return n * s2 + std::sqrt(2.0 * n * s2 * s2 * sum_w2) * q_inverse(p_fa_target);
}

}  // namespace css
