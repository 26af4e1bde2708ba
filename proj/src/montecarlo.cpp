#include "css/montecarlo.hpp"

#include "css/error.hpp"
#include "css/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <span>
#include <thread>

namespace css {
namespace {

constexpr std::size_t kBlockEvents = 4096;
constexpr std::uint64_t kTagRoc = 0x524f43ULL;
constexpr double kZ95 = 1.959963984540054;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

DetectorParams nominal_params(const ScenarioConfig& s) {
    DetectorParams p;
    p.n_samples = s.n_samples;
    p.sigma2 = s.sigma2_nominal;
    p.snr_bar = s.snr_bar();
    p.uncertainty_db = s.uncertainty_db;
    return p;
}

// Flat per-(event, CR) world statistics for one block of events.
struct WorldBlock {
    std::vector<double> energy;
    std::vector<double> sigma2_hat;
    std::vector<double> gamma;

    void resize(std::size_t n) {
        energy.resize(n);
        sigma2_hat.resize(n);
        gamma.resize(n);
    }
};

void fill_events(const ExperimentConfig& cfg, const std::vector<Hypothesis>& truth,
                 std::size_t block_begin, std::size_t from, std::size_t to, WorldBlock& blk) {
    const auto k = static_cast<std::size_t>(cfg.scenario.k_crs);
    for (std::size_t i = from; i < to; ++i) {
        const std::size_t event = block_begin + i;
        const EventStreams streams{cfg.scenario.seed, event};
        const std::size_t base = i * k;
        if (cfg.fidelity == Fidelity::Energy) {
            for (std::size_t j = 0; j < k; ++j) {
                const CrDraw d = draw_cr_energy(cfg.scenario, truth[event], streams, static_cast<int>(j));
                blk.energy[base + j] = d.energy;
                blk.sigma2_hat[base + j] = d.sigma2_hat;
                blk.gamma[base + j] = d.gamma;
            }
        } else {
            const SensingEvent ev = gen_event(cfg.scenario, truth[event], streams);
            for (std::size_t j = 0; j < k; ++j) {
                blk.energy[base + j] = compute_energy(std::span<const double>(ev.per_cr_samples[j]));
                blk.sigma2_hat[base + j] =
                    cfg.scenario.variance_source == VarianceSource::Genie
                        ? ev.per_cr_true_sigma2[j]
                        : estimate_noise_variance(std::span<const double>(ev.per_cr_reference[j]));
                blk.gamma[base + j] = ev.per_cr_gamma[j];
            }
        }
    }
}

void fill_block(const ExperimentConfig& cfg, const std::vector<Hypothesis>& truth,
                std::size_t block_begin, std::size_t count, int workers, WorldBlock& blk) {
    blk.resize(count * static_cast<std::size_t>(cfg.scenario.k_crs));
    const auto w = static_cast<std::size_t>(std::max(1, std::min<int>(workers, static_cast<int>(count))));
    if (w == 1) {
        fill_events(cfg, truth, block_begin, 0, count, blk);
        return;
    }
    std::vector<std::exception_ptr> errors(w);
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (std::size_t t = 0; t < w; ++t) {
        pool.emplace_back([&, t] {
            try {
                fill_events(cfg, truth, block_begin, t * count / w, (t + 1) * count / w, blk);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// Runs the chain and reports every event to `visit(index, truth, fused, local_bits, counted)`.
template <typename Visit>
EmpiricalResult simulate(const ExperimentConfig& cfg, double p_fa_target, Visit&& visit) {
    cfg.validate();
    const DetectorParams nominal = nominal_params(cfg.scenario);
    const double lambda = cfar_threshold(p_fa_target, nominal);
    const auto k = static_cast<std::size_t>(cfg.scenario.k_crs);
    const int workers = resolve_workers(cfg.workers);
    const bool proposed = cfg.detector == DetectorKind::Proposed;
    const auto warmup = static_cast<std::size_t>(cfg.history_len - 1);

    const std::vector<Hypothesis> truth = pu_sequence(cfg.scenario, cfg.n_events);
    std::vector<CrState> states;
    if (proposed && !cfg.is_mrc()) states.assign(k, CrState(cfg.history_len));

    EmpiricalResult res;
    res.seed = cfg.scenario.seed;
    res.threshold = lambda;
    double rho_sum = 0.0;
    std::uint64_t rho_count = 0;

    std::vector<Bit> bits(k);
    WorldBlock blk;
    for (std::size_t begin = 0; begin < cfg.n_events; begin += kBlockEvents) {
        const std::size_t count = std::min(kBlockEvents, cfg.n_events - begin);
        fill_block(cfg, truth, begin, count, workers, blk);

        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t event = begin + i;
            const std::span<const double> energy(blk.energy.data() + i * k, k);
            const std::span<const double> s2hat(blk.sigma2_hat.data() + i * k, k);
            const std::span<const double> gamma(blk.gamma.data() + i * k, k);
            const bool counted = !cfg.warmup_excluded || event >= warmup;

            Bit fused = Bit::Absent;
            if (cfg.is_mrc()) {
                const double t = mrc_threshold_for_pfa(p_fa_target, gamma, nominal);
                fused = fuse_soft_mrc(energy, gamma, t);
            } else {
                for (std::size_t j = 0; j < k; ++j) {
                    if (proposed) {
                        states[j].push(energy[j], s2hat[j]);
                        if (states[j].full()) {
                            const LocalDecision d = decide_local(states[j], energy[j], lambda);
                            bits[j] = d.bit;
                            if (counted) {
                                rho_sum += d.rho_hat;
                                ++rho_count;
                            }
                            continue;
                        }
                    }
                    // Conventional, and the proposed detector's warm-up fallback.
                    bits[j] = decide_conventional(energy[j], lambda);
                }
                fused = fuse_hard(bits, std::get<FusionSpec>(cfg.fusion));
            }

            visit(event, truth[event], fused, std::span<const Bit>(bits), counted);
            if (!counted) continue;
            if (truth[event] == Hypothesis::H0) {
                ++res.n_h0;
                if (is_present(fused)) ++res.false_alarms;
            } else {
                ++res.n_h1;
                if (is_present(fused)) ++res.detections;
            }
        }
    }

    if (res.n_h0 == 0 || res.n_h1 == 0)
        throw InsufficientDataError(
            "run observed " + std::to_string(res.n_h0) + " H0 and " + std::to_string(res.n_h1) +
            " H1 events after warm-up; raise n_events or adjust the duty cycle");
    res.pfa_hat = static_cast<double>(res.false_alarms) / static_cast<double>(res.n_h0);
    res.pd_hat = static_cast<double>(res.detections) / static_cast<double>(res.n_h1);
    res.ci95_pfa = wilson_interval(res.false_alarms, res.n_h0);
    res.ci95_pd = wilson_interval(res.detections, res.n_h1);
    if (rho_count > 0) res.mean_rho = rho_sum / static_cast<double>(rho_count);
    return res;
}

std::pair<double, double> theory_with_rho(const ExperimentConfig& cfg, double p_fa_target,
                                          double rho) {
    const DetectorParams base = nominal_params(cfg.scenario);
    const double lambda = cfar_threshold(p_fa_target, base);
    if (cfg.is_mrc()) return {cfg.scenario.uncertainty_db == 0.0 ? p_fa_target : kNaN, kNaN};

    const FusionSpec& spec = std::get<FusionSpec>(cfg.fusion);
    double p1 = 0.0;
    double d1 = 0.0;
    if (cfg.detector == DetectorKind::Conventional) {
        p1 = pfa_conventional(lambda, base);
        d1 = pd_rayleigh(lambda, base);
    } else {
        ProposedParams under_h0{cfg.history_len, cfg.theory_m_h0, rho, base};
        ProposedParams under_h1{cfg.history_len,
                                cfg.theory_m_h1 < 0 ? cfg.history_len : cfg.theory_m_h1, rho, base};
        p1 = pfa_proposed(lambda, under_h0);
        d1 = pd_proposed_rayleigh(lambda, under_h1);
    }
    return {fuse_probability(p1, spec), fuse_probability(d1, spec)};
}

double theory_rho(const ExperimentConfig& cfg) {
    if (cfg.detector != DetectorKind::Proposed || cfg.is_mrc()) return 1.0;
    const int n_ref = cfg.scenario.variance_source == VarianceSource::Genie
                          ? 0
                          : cfg.scenario.reference_len();
    return implied_rho(cfg.scenario.uncertainty_db, cfg.history_len, n_ref);
}

struct XY {
    double x;
    double y;
    double var_x;
    double var_y;
};

std::vector<XY> sorted_with_anchors(const RocCurve& curve) {
    std::vector<XY> pts;
    pts.reserve(curve.points.size() + 2);
    pts.push_back({0.0, 0.0, 0.0, 0.0});
    for (const auto& p : curve.points) {
        const auto& r = p.result;
        pts.push_back({r.pfa_hat, r.pd_hat, r.pfa_stderr() * r.pfa_stderr(),
                       r.pd_stderr() * r.pd_stderr()});
    }
    pts.push_back({1.0, 1.0, 0.0, 0.0});
    std::stable_sort(pts.begin(), pts.end(),
                     [](const XY& a, const XY& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    return pts;
}

}  // namespace

void ExperimentConfig::validate() const {
    scenario.validate();
    if (history_len < 2) throw DomainError("history_len must be >= 2");
    if (n_events < static_cast<std::size_t>(history_len))
        throw DomainError("n_events must be >= history_len");
    for (std::size_t i = 0; i < pfa_grid.size(); ++i) {
        if (!(pfa_grid[i] > 0.0 && pfa_grid[i] < 1.0))
            throw DomainError("pfa_grid entries must lie in (0,1)");
        if (i > 0 && !(pfa_grid[i] > pfa_grid[i - 1]))
            throw DomainError("pfa_grid must be strictly increasing");
    }
    if (const auto* spec = std::get_if<FusionSpec>(&fusion)) {
        spec->validate();
        if (spec->k_crs != scenario.k_crs)
            throw DomainError("fusion K does not match the scenario's number of CRs");
    }
    if (theory_m_h0 < 0 || theory_m_h0 > history_len)
        throw DomainError("theory_m_h0 must lie in [0, L]");
    if (theory_m_h1 > history_len) throw DomainError("theory_m_h1 must lie in [0, L]");
}

void ExperimentConfig::set_num_crs(int k) {
    scenario.k_crs = k;
    if (auto* spec = std::get_if<FusionSpec>(&fusion)) {
        spec->k_crs = k;
        spec->majority_l = std::clamp(spec->majority_l, 1, std::max(1, k));
    }
}

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials) {
    if (trials == 0) return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = kZ95 * kZ95;
    const double denom = 1.0 + z2 / n;
    const double centre = (p + z2 / (2.0 * n)) / denom;
    const double half = kZ95 * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, std::min(p, centre - half)), std::min(1.0, std::max(p, centre + half))};
}

double EmpiricalResult::pfa_stderr() const {
    return n_h0 == 0 ? 0.0 : std::sqrt(pfa_hat * (1.0 - pfa_hat) / static_cast<double>(n_h0));
}

double EmpiricalResult::pd_stderr() const {
    return n_h1 == 0 ? 0.0 : std::sqrt(pd_hat * (1.0 - pd_hat) / static_cast<double>(n_h1));
}

EmpiricalResult run_experiment(const ExperimentConfig& config, double p_fa_target) {
    return simulate(config, p_fa_target, [](auto&&...) {});
}

DecisionTrace trace_decisions(const ExperimentConfig& config, double p_fa_target) {
    DecisionTrace trace;
    trace.truth.reserve(config.n_events);
    trace.fused.reserve(config.n_events);
    trace.counted.reserve(config.n_events);
    const bool mrc = config.is_mrc();
    simulate(config, p_fa_target,
             [&](std::size_t, Hypothesis h, Bit fused, std::span<const Bit> local, bool counted) {
                 trace.truth.push_back(h);
                 trace.fused.push_back(fused);
                 trace.counted.push_back(counted);
                 if (!mrc) trace.local.insert(trace.local.end(), local.begin(), local.end());
             });
    return trace;
}

std::pair<double, double> theory_point(const ExperimentConfig& config, double p_fa_target) {
    config.validate();
    return theory_with_rho(config, p_fa_target, theory_rho(config));
}

std::uint64_t grid_point_seed(std::uint64_t base, std::size_t index) {
    return derive_seed(base, kTagRoc, static_cast<std::uint64_t>(index));
}

RocCurve roc_sweep(const ExperimentConfig& config) {
    config.validate();
    if (config.pfa_grid.empty()) throw DomainError("roc_sweep: empty pfa_grid");
    const double rho = theory_rho(config);
    RocCurve curve;
    curve.label = config.label;
    curve.points.reserve(config.pfa_grid.size());
    for (std::size_t i = 0; i < config.pfa_grid.size(); ++i) {
        ExperimentConfig point = config;
        point.scenario.seed = grid_point_seed(config.scenario.seed, i);
        RocPoint rp;
        rp.pfa_target = config.pfa_grid[i];
        rp.result = run_experiment(point, rp.pfa_target);
        std::tie(rp.pfa_theory, rp.pd_theory) = theory_with_rho(config, rp.pfa_target, rho);
        curve.points.push_back(rp);
    }
    return curve;
}

double auc(const RocCurve& curve) {
    if (curve.points.size() < 2) throw DomainError("auc: need at least 2 points");
    const auto pts = sorted_with_anchors(curve);
    double area = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        area += (pts[i].x - pts[i - 1].x) * (pts[i].y + pts[i - 1].y) / 2.0;
    return area;
}

double auc_stderr(const RocCurve& curve) {
    if (curve.points.size() < 2) throw DomainError("auc_stderr: need at least 2 points");
    const auto pts = sorted_with_anchors(curve);
    double var = 0.0;
    for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
        const double dx = (pts[i - 1].y - pts[i + 1].y) / 2.0;
        const double dy = (pts[i + 1].x - pts[i - 1].x) / 2.0;
        var += dx * dx * pts[i].var_x + dy * dy * pts[i].var_y;
    }
    return std::sqrt(var);
}

double pd_at_pfa(const RocCurve& curve, double pfa) {
    if (curve.points.empty()) throw DomainError("pd_at_pfa: empty curve");
    if (!(pfa >= 0.0 && pfa <= 1.0)) throw DomainError("pd_at_pfa: pfa must lie in [0,1]");
    const auto pts = sorted_with_anchors(curve);
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (pts[i].x >= pfa) {
            const XY& a = pts[i - 1];
            const XY& b = pts[i];
            if (b.x == a.x) return b.y;
            return a.y + (b.y - a.y) * (pfa - a.x) / (b.x - a.x);
        }
    }
    return 1.0;
}

const RocPoint& nearest_target(const RocCurve& curve, double pfa_target) {
    if (curve.points.empty()) throw DomainError("nearest_target: empty curve");
    const auto dist = [&](const RocPoint& p) {
        return std::abs(std::log(p.pfa_target) - std::log(pfa_target));
    };
    return *std::min_element(curve.points.begin(), curve.points.end(),
                             [&](const RocPoint& a, const RocPoint& b) { return dist(a) < dist(b); });
}

CrsSearch crs_needed_for(double target_pd, double at_pfa, const ExperimentConfig& config_template,
                         int k_max) {
    if (!(target_pd >= 0.0 && target_pd < 1.0)) throw DomainError("target_pd must lie in [0,1)");
    if (!(at_pfa > 0.0 && at_pfa < 1.0)) throw DomainError("at_pfa must lie in (0,1)");
    if (k_max < 1) throw DomainError("k_max must be >= 1");
    CrsSearch out;
    if (target_pd <= 0.0) {
        out.k = 1;
        return out;
    }
    for (int k = 1; k <= k_max; ++k) {
        ExperimentConfig cfg = config_template;
        cfg.set_num_crs(k);
        const RocCurve curve = roc_sweep(cfg);
        const double pd = pd_at_pfa(curve, at_pfa);
        double n_h1 = 0.0;
        for (const auto& p : curve.points) n_h1 += static_cast<double>(p.result.n_h1);
        n_h1 /= static_cast<double>(curve.points.size());
        const double sigma = std::sqrt(pd * (1.0 - pd) / n_h1);
        out.pd_by_k.emplace_back(k, pd);
        if (pd >= target_pd - sigma) {
            out.k = k;
            return out;
        }
    }
    return out;
}

}  // namespace css
