#include "remest/rmc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "remest/errors.hpp"

namespace remest::rmc {

namespace {

// Stream purpose tags; combined with (seed, iteration) they keep every batch on
// its own RNG stream.
constexpr std::uint64_t kTagValue = 0x76616cULL;
constexpr std::uint64_t kTagDelta = 0x64656c74ULL;
constexpr std::uint64_t kTagPlus = 0x706c7573ULL;
constexpr std::uint64_t kTagMinus = 0x6d696e75ULL;

std::vector<double> sample_delta(PerturbDist dist, std::size_t n, Rng& rng) {
    std::vector<double> d(n);
    for (auto& v : d) {
        v = dist == PerturbDist::normal ? rng.gaussian() : (rng.raw() & 1 ? 1.0 : -1.0);
    }
    return d;
}

model::ThresholdPolicy shift(const model::ThresholdPolicy& k, const std::vector<double>& delta,
                             double scale) {
    model::ThresholdPolicy out = k;
    std::size_t idx = 0;
    for (auto& row : out.k)
        for (auto& v : row) v += scale * delta[idx++];
    return out;
}

}  // namespace

SimEvaluator::SimEvaluator(const model::ModelSpec& m, const RmcConfig& cfg) : model_(m) {
    sim_cfg_.n_cycles = cfg.n_cycles_per_estimate;
    sim_cfg_.max_cycle_len = cfg.max_cycle_len;
    sim_cfg_.beta = m.cost.beta;
    sim_cfg_.discount_cutoff = cfg.discount_cutoff;
    sim_cfg_.workers = cfg.workers;
}

Evaluator::LM SimEvaluator::estimate(const model::ThresholdPolicy& k, std::uint64_t stream_seed) {
    sim::CycleEstimate est = sim::run_cycles(model_, k, sim_cfg_, stream_seed);
    return {est.l_hat, est.m_hat};
}

std::vector<double> flatten(const model::ThresholdPolicy& k) {
    std::vector<double> flat;
    for (const auto& row : k.k) flat.insert(flat.end(), row.begin(), row.end());
    return flat;
}

model::ThresholdPolicy unflatten(const std::vector<double>& flat, int n_states, int n_thresholds) {
    model::ThresholdPolicy k;
    k.k.resize(static_cast<std::size_t>(n_states));
    std::size_t idx = 0;
    for (auto& row : k.k) {
        row.assign(flat.begin() + static_cast<std::ptrdiff_t>(idx),
                   flat.begin() + static_cast<std::ptrdiff_t>(idx + n_thresholds));
        idx += static_cast<std::size_t>(n_thresholds);
    }
    return k;
}

model::ThresholdPolicy project(const model::ThresholdPolicy& k, double k_max) {
    model::ThresholdPolicy out = k;
    for (auto& row : out.k) {
        for (auto& v : row) v = std::clamp(v, 0.0, k_max);
        std::sort(row.begin(), row.end());
    }
    return out;
}

GradientEstimate spsa_gradients_with(Evaluator& eval, const model::ThresholdPolicy& k,
                                     const RmcConfig& cfg, std::uint64_t iteration_tag) {
    const std::size_t n = flatten(k).size();
    Rng delta_rng(derive_stream(cfg.seed, iteration_tag, kTagDelta));
    GradientEstimate g;
    g.delta = sample_delta(cfg.perturb_dist, n, delta_rng);

    const double c = cfg.perturb_scale;
    const model::ThresholdPolicy k_plus = project(shift(k, g.delta, c), cfg.k_max);
    const model::ThresholdPolicy k_minus = project(shift(k, g.delta, -c), cfg.k_max);
    const Evaluator::LM plus = eval.estimate(k_plus, derive_stream(cfg.seed, iteration_tag, kTagPlus));
    const Evaluator::LM minus =
        eval.estimate(k_minus, derive_stream(cfg.seed, iteration_tag, kTagMinus));

    g.grad_l.resize(n);
    g.grad_m.resize(n);
    const double dl = (plus.l - minus.l) / (2.0 * c);
    const double dm = (plus.m - minus.m) / (2.0 * c);
    for (std::size_t i = 0; i < n; ++i) {
        g.grad_l[i] = g.delta[i] * dl;
        g.grad_m[i] = g.delta[i] * dm;
    }
    return g;
}

GradientEstimate spsa_gradients(const model::ModelSpec& m, const model::ThresholdPolicy& k,
                                const RmcConfig& cfg, std::uint64_t iteration_tag) {
    SimEvaluator eval(m, cfg);
    return spsa_gradients_with(eval, k, cfg, iteration_tag);
}

std::vector<double> n_statistic(double l_hat, double m_hat, const std::vector<double>& grad_l,
                                const std::vector<double>& grad_m) {
    if (grad_l.size() != grad_m.size()) throw std::invalid_argument("gradient size mismatch");
    std::vector<double> n(grad_l.size());
    for (std::size_t i = 0; i < n.size(); ++i) n[i] = m_hat * grad_l[i] - l_hat * grad_m[i];
    return n;
}

model::ThresholdPolicy rmc_step(const model::ThresholdPolicy& k, const std::vector<double>& n_hat,
                                AdamState& adam, const AdamParams& params, double k_max) {
    std::vector<double> flat = flatten(k);
    if (adam.m.empty()) {
        adam.m.assign(flat.size(), 0.0);
        adam.v.assign(flat.size(), 0.0);
    }
    if (adam.m.size() != flat.size() || n_hat.size() != flat.size()) {
        throw std::invalid_argument("ADAM state / gradient shape mismatch");
    }
    adam.step += 1;
    const double b1t = 1.0 - std::pow(params.beta1, static_cast<double>(adam.step));
    const double b2t = 1.0 - std::pow(params.beta2, static_cast<double>(adam.step));
    for (std::size_t i = 0; i < flat.size(); ++i) {
        adam.m[i] = params.beta1 * adam.m[i] + (1.0 - params.beta1) * n_hat[i];
        adam.v[i] = params.beta2 * adam.v[i] + (1.0 - params.beta2) * n_hat[i] * n_hat[i];
        const double m_hat = adam.m[i] / b1t;
        const double v_hat = adam.v[i] / b2t;
        flat[i] -= params.alpha * m_hat / (std::sqrt(v_hat) + params.epsilon);
    }
    return project(unflatten(flat, k.num_states(), k.num_thresholds()), k_max);
}

OptimizeResult optimize_with(Evaluator& eval, const model::ThresholdPolicy& k0,
                             const RmcConfig& cfg) {
    if (cfg.iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    if (!(cfg.perturb_scale > 0.0)) throw std::invalid_argument("perturb_scale must be > 0");
    if (!(cfg.k_max > 0.0)) throw std::invalid_argument("k_max must be > 0");

    model::ThresholdPolicy k = project(k0, cfg.k_max);
    AdamState adam;
    IterateTrace trace;
    trace.rows.reserve(static_cast<std::size_t>(cfg.iterations));
    int consecutive_degenerate = 0;

    for (long long j = 0; j < cfg.iterations; ++j) {
        IterateRecord row;
        row.iteration = j;
        row.k = flatten(k);
        row.value_seed = derive_stream(cfg.seed, static_cast<std::uint64_t>(j), kTagValue);
        row.plus_seed = derive_stream(cfg.seed, static_cast<std::uint64_t>(j), kTagPlus);
        row.minus_seed = derive_stream(cfg.seed, static_cast<std::uint64_t>(j), kTagMinus);
        try {
            const Evaluator::LM value = eval.estimate(k, row.value_seed);
            const GradientEstimate g = spsa_gradients_with(eval, k, cfg, static_cast<std::uint64_t>(j));
            row.l_hat = value.l;
            row.m_hat = value.m;
            row.c_hat = value.l / value.m;
            row.n_hat = n_statistic(value.l, value.m, g.grad_l, g.grad_m);
            k = rmc_step(k, row.n_hat, adam, cfg.adam, cfg.k_max);
            consecutive_degenerate = 0;
        } catch (const DegeneratePolicyError&) {
            row.degenerate = true;
            if (++consecutive_degenerate >= 10) {
                trace.rows.push_back(std::move(row));
                throw DegeneratePolicyError(
                    "optimization aborted: 10 consecutive iterations hit degenerate-policy errors");
            }
        }
        trace.rows.push_back(std::move(row));
    }
    return {k, std::move(trace)};
}

OptimizeResult optimize(const model::ModelSpec& m, const model::ThresholdPolicy& k0,
                        const RmcConfig& cfg) {
    SimEvaluator eval(m, cfg);
    return optimize_with(eval, k0, cfg);
}

}  // namespace remest::rmc
