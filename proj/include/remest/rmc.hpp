#pragma once

#include <cstdint>
#include <vector>

#include "remest/model.hpp"
#include "remest/sim.hpp"

namespace remest::rmc {

struct AdamParams {
    double alpha = 0.1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

enum class PerturbDist { normal, rademacher };

struct RmcConfig {
    long long n_cycles_per_estimate = 1000;
    double perturb_scale = 0.1;  // c
    PerturbDist perturb_dist = PerturbDist::normal;
    long long iterations = 30000;
    AdamParams adam;
    double k_max = 50.0;  // K, projection bound
    std::uint64_t seed = 1;
    // Pass-through simulation knobs.
    long long max_cycle_len = 1'000'000;
    double discount_cutoff = 1e-12;
    int workers = 1;
};

struct AdamState {
    std::vector<double> m;  // first moment, one entry per threshold component
    std::vector<double> v;  // second moment
    long long step = 0;
};

struct IterateRecord {
    long long iteration = 0;
    std::vector<double> k;       // flattened policy before the step
    double l_hat = 0.0;
    double m_hat = 0.0;
    double c_hat = 0.0;
    std::vector<double> n_hat;
    std::uint64_t value_seed = 0;
    std::uint64_t plus_seed = 0;
    std::uint64_t minus_seed = 0;
    bool degenerate = false;
};

struct IterateTrace {
    std::vector<IterateRecord> rows;
};

struct GradientEstimate {
    std::vector<double> grad_l;
    std::vector<double> grad_m;
    std::vector<double> delta;
};

/// Estimate source for the optimizer loop: the production implementation wraps
/// run_cycles; tests substitute synthetic objectives.
class Evaluator {
  public:
    struct LM {
        double l = 0.0;
        double m = 0.0;
    };
    virtual ~Evaluator() = default;
    virtual LM estimate(const model::ThresholdPolicy& k, std::uint64_t stream_seed) = 0;
};

class SimEvaluator : public Evaluator {
  public:
    SimEvaluator(const model::ModelSpec& m, const RmcConfig& cfg);
    LM estimate(const model::ThresholdPolicy& k, std::uint64_t stream_seed) override;

  private:
    const model::ModelSpec& model_;
    sim::SimConfig sim_cfg_;
};

std::vector<double> flatten(const model::ThresholdPolicy& k);
model::ThresholdPolicy unflatten(const std::vector<double>& flat, int n_states, int n_thresholds);

/// Componentwise clamp to [0, K], then ascending sort within each state's row.
model::ThresholdPolicy project(const model::ThresholdPolicy& k, double k_max);

/// Two-sided simultaneous perturbation on fresh streams: grad = delta *
/// (est(k + c delta) - est(k - c delta)) / (2c), perturbed points projected
/// before evaluation.
GradientEstimate spsa_gradients(const model::ModelSpec& m, const model::ThresholdPolicy& k,
                                const RmcConfig& cfg, std::uint64_t iteration_tag);

GradientEstimate spsa_gradients_with(Evaluator& eval, const model::ThresholdPolicy& k,
                                     const RmcConfig& cfg, std::uint64_t iteration_tag);

/// N = M grad_L - L grad_M, the root-finding statistic for C = L/M.
std::vector<double> n_statistic(double l_hat, double m_hat, const std::vector<double>& grad_l,
                                const std::vector<double>& grad_m);

/// One ADAM-scaled descent step on n_hat followed by projection.
model::ThresholdPolicy rmc_step(const model::ThresholdPolicy& k, const std::vector<double>& n_hat,
                                AdamState& adam, const AdamParams& params, double k_max);

struct OptimizeResult {
    model::ThresholdPolicy k_final;
    IterateTrace trace;
};

OptimizeResult optimize(const model::ModelSpec& m, const model::ThresholdPolicy& k0,
                        const RmcConfig& cfg);

OptimizeResult optimize_with(Evaluator& eval, const model::ThresholdPolicy& k0, const RmcConfig& cfg);

}  // namespace remest::rmc
