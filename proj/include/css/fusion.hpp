#pragma once

// Fusion center: hard AND/OR/Majority combining of local bits and the
// soft MRC baseline.

#include "css/analytic.hpp"
#include "css/detector.hpp"

#include <span>
#include <vector>

namespace css {

Bit fuse_hard(std::span<const Bit> decisions, const FusionSpec& spec);

/// Normalized SNR weights w_j = gamma_j / sum(gamma). Throws DomainError when
/// every gamma is zero.
std::vector<double> mrc_weights(std::span<const double> gammas);

/// T = sum_j w_j E_j compared against threshold.
Bit fuse_soft_mrc(std::span<const double> energies, std::span<const double> gammas,
                  double threshold);

/// CFAR threshold for T under H0 with nominal variance:
/// N*s2 + sqrt(2N*s2^2*sum w^2) * Qinv(p).
double mrc_threshold_for_pfa(double p_fa_target, std::span<const double> gammas,
                             const DetectorParams& params);

}  // namespace css
