#pragma once

#include <cstdint>

#include "remest/model.hpp"

namespace remest::sim {

struct SimConfig {
    long long n_cycles = 1000;
    long long max_cycle_len = 1'000'000;
    std::uint64_t seed = 1;
    double beta = 0.9;
    // Stop accumulating a cycle once beta^t drops below this (0 disables; has no
    // effect at beta = 1). Truncation bias is bounded by cutoff * max stage cost
    // / (1 - beta), far below sampling noise at the default.
    double discount_cutoff = 1e-12;
    int workers = 1;
};

struct CycleEstimate {
    double l_hat = 0.0;
    double m_hat = 0.0;
    double c_hat = 0.0;
    long long n_cycles = 0;
    double se_l = 0.0;
    double se_m = 0.0;
    double se_c = 0.0;
    double mean_beta_tau = 0.0;
    long long capped_cycles = 0;
    double se_beta_tau = 0.0;
};

/// Regenerative estimator: cycles start at (E+ = 0, S = reference state) and end
/// when a delivery coincides with the channel re-entering the reference state.
/// Per-cycle RNG streams are derived from (seed, cycle index), so results do not
/// depend on the worker count.
CycleEstimate run_cycles(const model::ModelSpec& m, const model::ThresholdPolicy& policy,
                         const SimConfig& cfg);

/// Same, with the stream seed overridden (used by the optimizer to keep value and
/// gradient batches on disjoint streams).
CycleEstimate run_cycles(const model::ModelSpec& m, const model::ThresholdPolicy& policy,
                         const SimConfig& cfg, std::uint64_t seed);

/// mean(beta^tau) - (1 - (1-beta) m_hat); exactly zero per sample path up to
/// rounding, since sum_{t<tau} beta^t = (1 - beta^tau)/(1 - beta).
double check_renewal_identity(const CycleEstimate& est, double beta);

struct DirectEstimate {
    double value = 0.0;
    double se = 0.0;
};

/// Plain discounted Monte Carlo of (1-beta) E[sum beta^t cost] from the reference
/// start, truncated at `horizon`. Independent of the renewal machinery.
DirectEstimate estimate_cost_direct(const model::ModelSpec& m, const model::ThresholdPolicy& policy,
                                    long long horizon, long long reps, std::uint64_t seed);

}  // namespace remest::sim
