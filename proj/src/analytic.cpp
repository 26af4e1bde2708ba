#include "css/analytic.hpp"

#include "css/error.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

namespace css {
namespace {

constexpr double kClampGuard = 1e-9;
constexpr double kQuadTolerance = 1e-8;
// Rayleigh integrals are truncated at gamma = 40 * snr_bar; exp(-40) < 1e-17.
constexpr double kRayleighCutoff = 40.0;
const double kDbToLn = std::numbers::ln10 / 10.0;

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 31>;

template <typename F>
double integrate(F&& f, double a, double b, const char* what, double tol = kQuadTolerance) {
    double error = 0.0;
    const double value = Kronrod::integrate(f, a, b, 20, 1e-12, &error);
    if (!std::isfinite(value) || error > tol) {
        std::ostringstream msg;
        msg << what << ": quadrature did not converge on [" << a << ", " << b
            << "], value=" << value << " error estimate=" << error;
        throw NumericalError(msg.str());
    }
    return value;
}

// Average of f(s2 * 10^(u/10)) over u ~ U[-d, d].
template <typename F>
double average_over_noise(double sigma2, double uncertainty_db, F&& f) {
    if (uncertainty_db == 0.0) return f(sigma2);
    const double width = 2.0 * uncertainty_db;
    const double total = integrate(
        [&](double u) { return f(sigma2 * std::pow(10.0, u / 10.0)); }, -uncertainty_db,
        uncertainty_db, "noise averaging", 1e-9 * width);
    return total / width;
}

// Tail of a Gaussian energy with mean n*s2*(1+g) and sd sqrt(2n)*s2*(1+g).
double energy_tail(double threshold, int n, double s2, double gain) {
    const double scale = s2 * gain;
    const double nn = static_cast<double>(n);
    return q_function((threshold - nn * scale) / (std::sqrt(2.0 * nn) * scale));
}

double tail_h0(double threshold, const DetectorParams& p) {
    return average_over_noise(p.sigma2, p.uncertainty_db, [&](double s2) {
        return energy_tail(threshold, p.n_samples, s2, 1.0);
    });
}

double tail_h1(double threshold, const DetectorParams& p, double snr) {
    return average_over_noise(p.sigma2, p.uncertainty_db, [&](double s2) {
        return energy_tail(threshold, p.n_samples, s2, 1.0 + snr);
    });
}

void require_threshold(double threshold) {
    if (!(threshold > 0.0) || !std::isfinite(threshold))
        throw DomainError("threshold must be positive and finite");
}

template <typename F>
double rayleigh_average(double snr_bar, F&& pd_at, const char* what) {
    if (snr_bar == 0.0) return pd_at(0.0);
    const double value = integrate(
        [&](double u) { return pd_at(snr_bar * u) * std::exp(-u); }, 0.0, kRayleighCutoff, what);
    return checked_probability(value);
}

double binomial_upper_tail(double p, int k, int l) {
    // sum_{t=l}^{k} C(k,t) p^t (1-p)^(k-t)
    double total = 0.0;
    double coeff = 1.0;  // C(k, t), built incrementally
    for (int t = 0; t <= k; ++t) {
        if (t > 0) coeff = coeff * static_cast<double>(k - t + 1) / static_cast<double>(t);
        if (t >= l) total += coeff * std::pow(p, t) * std::pow(1.0 - p, k - t);
    }
    return total;
}

}  // namespace

void DetectorParams::validate() const {
    if (n_samples < 1) throw DomainError("n_samples must be >= 1");
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw DomainError("sigma2 must be positive");
    if (!(snr >= 0.0) || !std::isfinite(snr)) throw DomainError("snr must be >= 0");
    if (!(snr_bar >= 0.0) || !std::isfinite(snr_bar)) throw DomainError("snr_bar must be >= 0");
    if (!(uncertainty_db >= 0.0) || !std::isfinite(uncertainty_db))
        throw DomainError("uncertainty_db must be >= 0");
}

void ProposedParams::validate() const {
    base.validate();
    if (history_len < 2) throw DomainError("history_len must be >= 2");
    if (active_count < 0 || active_count > history_len)
        throw DomainError("active_count must lie in [0, history_len]");
    if (!(rho >= 1.0) || !std::isfinite(rho)) throw DomainError("rho must be >= 1");
}

std::string_view to_string(FusionRule rule) {
    switch (rule) {
        case FusionRule::And: return "AND";
        case FusionRule::Or: return "OR";
        case FusionRule::Majority: return "MAJ";
    }
    return "?";
}

FusionRule parse_fusion_rule(std::string_view text) {
    std::string up(text);
    std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
    if (up == "AND") return FusionRule::And;
    if (up == "OR") return FusionRule::Or;
    if (up == "MAJ" || up == "MAJORITY") return FusionRule::Majority;
    throw DomainError("unknown fusion rule '" + std::string(text) + "'");
}

void FusionSpec::validate() const {
    if (k_crs < 1) throw DomainError("k_crs must be >= 1");
    if (rule == FusionRule::Majority && (majority_l < 1 || majority_l > k_crs))
        throw DomainError("majority_l must lie in [1, k_crs]");
}

FusionSpec FusionSpec::majority_default(int k_crs) {
    return FusionSpec{FusionRule::Majority, k_crs, (k_crs + 1) / 2};
}

double q_function(double x) {
    if (!std::isfinite(x)) throw DomainError("q_function: non-finite argument");
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

double q_inverse(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("q_inverse: probability must lie in (0,1)");
    if (p == 0.5) return 0.0;
    if (p > 0.5) return -q_inverse(1.0 - p);

    // Abramowitz & Stegun 26.2.23 seed, then Newton on log Q(x) = log p with
    // a bisection fallback inside [0, 38.5].
    const double t = std::sqrt(-2.0 * std::log(p));
    double x = t - (2.515517 + t * (0.802853 + t * 0.010328)) /
                       (1.0 + t * (1.432788 + t * (0.189269 + t * 0.001308)));
    double lo = 0.0;
    double hi = 38.5;
    const double log_p = std::log(p);
    x = std::clamp(x, lo, hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double q = q_function(x);
        const double g = std::log(q) - log_p;
        if (g > 0.0)
            lo = x;
        else
            hi = x;
        const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
        double next = x + g * q / pdf;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-15 * std::max(1.0, x) || hi - lo <= 1e-15 * std::max(1.0, x)) {
            x = next;
            break;
        }
        x = next;
    }
    return x;
}

double checked_probability(double p) {
    if (std::isnan(p)) throw NumericalError("probability evaluated to NaN");
    if (p < -kClampGuard || p > 1.0 + kClampGuard) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "probability " << p << " outside [0,1] beyond rounding";
        throw NumericalError(msg.str());
    }
    return std::clamp(p, 0.0, 1.0);
}

double cfar_threshold(double p_fa_target, const DetectorParams& params) {
    params.validate();
    if (!(p_fa_target > 0.0 && p_fa_target < 1.0))
        throw DomainError("cfar_threshold: target must lie in (0,1)");
    const double n = static_cast<double>(params.n_samples);
    const double lambda =
        n * params.sigma2 + std::sqrt(2.0 * n) * params.sigma2 * q_inverse(p_fa_target);
    if (!(lambda > 0.0))
        throw DomainError("cfar_threshold: target too large for N, threshold would be <= 0");
    return lambda;
}

double pfa_conventional(double threshold, const DetectorParams& params) {
    params.validate();
    require_threshold(threshold);
    return checked_probability(tail_h0(threshold, params));
}

double pd_awgn(double threshold, const DetectorParams& params) {
    params.validate();
    require_threshold(threshold);
    return checked_probability(tail_h1(threshold, params, params.snr));
}

double pd_rayleigh(double threshold, const DetectorParams& params) {
    params.validate();
    require_threshold(threshold);
    return rayleigh_average(
        params.snr_bar, [&](double snr) { return tail_h1(threshold, params, snr); },
        "pd_rayleigh");
}

NoiseMoments noise_moments(double sigma2, double uncertainty_db) {
    if (uncertainty_db == 0.0) return {sigma2, sigma2 * sigma2};
    // E[exp(a u)] for u ~ U[-d, d] is sinh(a d) / (a d).
    const auto mgf = [&](double a) { return std::sinh(a * uncertainty_db) / (a * uncertainty_db); };
    return {sigma2 * mgf(kDbToLn), sigma2 * sigma2 * mgf(2.0 * kDbToLn)};
}

AverageEnergyMoments avg_energy_moments(const ProposedParams& params) {
    params.validate();
    const auto& b = params.base;
    const double n = static_cast<double>(b.n_samples);
    const double l = static_cast<double>(params.history_len);
    const double m = static_cast<double>(params.active_count);
    const double gain = 1.0 + b.snr;
    const NoiseMoments nm = noise_moments(b.sigma2, b.uncertainty_db);
    // Per-event energy variance: 2N E[s^4] + N^2 Var(s^2); the second term
    // vanishes for a known variance.
    const double event_var = 2.0 * n * nm.m2 + n * n * (nm.m2 - nm.m1 * nm.m1);

    AverageEnergyMoments out;
    out.mean = (m / l) * n * nm.m1 * gain + ((l - m) / l) * n * nm.m1;
    out.variance = (m / (l * l)) * event_var * gain * gain + ((l - m) / (l * l)) * event_var;
    return out;
}

double predictor_weight(double threshold, const ProposedParams& params) {
    require_threshold(threshold);
    const auto mom = avg_energy_moments(params);
    return q_function((threshold - mom.mean) / std::sqrt(mom.variance));
}

double pfa_proposed(double threshold, const ProposedParams& params) {
    params.validate();
    require_threshold(threshold);
    const double w = predictor_weight(threshold, params);
    const double lowered = tail_h0(threshold / params.rho, params.base);
    const double raised = tail_h0(params.rho * threshold, params.base);
    return checked_probability(w * (lowered - raised) + raised);
}

double pd_proposed_awgn(double threshold, const ProposedParams& params) {
    params.validate();
    require_threshold(threshold);
    const double w = predictor_weight(threshold, params);
    const double snr = params.base.snr;
    const double lowered = tail_h1(threshold / params.rho, params.base, snr);
    const double raised = tail_h1(params.rho * threshold, params.base, snr);
    return checked_probability(w * (lowered - raised) + raised);
}

double pd_proposed_rayleigh(double threshold, const ProposedParams& params) {
    params.validate();
    require_threshold(threshold);
    return rayleigh_average(
        params.base.snr_bar,
        [&](double snr) {
            ProposedParams at = params;
            at.base.snr = snr;
            return pd_proposed_awgn(threshold, at);
        },
        "pd_proposed_rayleigh");
}

double fuse_probability(double p_single, const FusionSpec& spec) {
    spec.validate();
    if (!(p_single >= 0.0 && p_single <= 1.0))
        throw DomainError("fuse_probability: probability must lie in [0,1]");
    const int k = spec.k_crs;
    const auto all = [&] { return std::pow(p_single, k); };
    const auto any = [&] { return -std::expm1(static_cast<double>(k) * std::log1p(-p_single)); };
    switch (spec.rule) {
        case FusionRule::And: return checked_probability(all());
        case FusionRule::Or: return checked_probability(any());
        case FusionRule::Majority:
            if (spec.majority_l == 1) return checked_probability(any());
            if (spec.majority_l == k) return checked_probability(all());
            return checked_probability(binomial_upper_tail(p_single, k, spec.majority_l));
    }
    return 0.0;
}

double implied_rho(double uncertainty_db, int history_len, int n_ref) {
    if (!(uncertainty_db >= 0.0)) throw DomainError("implied_rho: uncertainty_db must be >= 0");
    if (history_len < 2) throw DomainError("implied_rho: history_len must be >= 2");
    if (n_ref < 0) throw DomainError("implied_rho: n_ref must be >= 0");

    const double d = uncertainty_db;
    const double l = static_cast<double>(history_len);
    const double mean = noise_moments(1.0, d).m1;

    if (n_ref == 0) {
        if (d == 0.0) return 1.0;
        // Largest of L dB-uniform draws has density L F^(L-1) / (2d).
        const double e_max = integrate(
            [&](double u) {
                const double f = (u + d) / (2.0 * d);
                return std::pow(10.0, u / 10.0) * l * std::pow(f, l - 1.0) / (2.0 * d);
            },
            -d, d, "implied_rho");
        return std::max(1.0, e_max / mean);
    }

    // Estimates are s2 * X with n_ref * X ~ chi2(n_ref). E[max] = int (1 - F^L).
    const double shape = 0.5 * static_cast<double>(n_ref);
    const double top = std::pow(10.0, d / 10.0) * boost::math::gamma_q_inv(shape, 1e-18) / shape;
    const auto cdf = [&](double x) {
        return average_over_noise(1.0, d, [&](double s2) {
            return boost::math::gamma_p(shape, shape * x / s2);
        });
    };
    const double e_max =
        integrate([&](double x) { return 1.0 - std::pow(cdf(x), l); }, 0.0, top, "implied_rho",
                  1e-7);
    return std::max(1.0, e_max / mean);
}

}  // namespace css
