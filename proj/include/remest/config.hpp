#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "remest/dp.hpp"
#include "remest/model.hpp"
#include "remest/pomdp.hpp"
#include "remest/rmc.hpp"
#include "remest/sim.hpp"

namespace remest::config {

enum class Workflow { evaluate, optimize, dp, pomdp, table1 };

std::string workflow_name(Workflow w);
Workflow workflow_from_name(const std::string& name);  // throws ConfigError

/// Extra transmission options (lambda(i), p(i)) for i = 1..m on a memoryless
/// channel. The silent level (lambda = 0, never delivered) is implicit.
struct MultiChannelConfig {
    std::vector<double> lambda;  // non-decreasing
    std::vector<double> drop;    // non-increasing, within [0, 1]
};

/// One message per ordering or range violation; empty means valid.
std::vector<std::string> validate_multichannel(const MultiChannelConfig& mc);

/// Single-state channel: Q = [[1]], power levels 0..m, the given costs and
/// drop probabilities behind the implicit silent level.
model::ChannelSpec expand_multichannel(const MultiChannelConfig& mc);

struct DpParams {
    dp::GridSpec grid;
    double tolerance = 1e-8;
    long long max_iterations = 100000;
    int horizon = -1;  // >= 0 selects the finite-horizon solver
};

struct PomdpParams {
    pomdp::FiniteSourceSpec source;
    int horizon = 1;
    std::vector<double> initial_belief;
    int initial_state = 0;
};

struct Table1Params {
    std::vector<double> lambda1 = {50.0, 100.0, 200.0};  // one output row each
    long long eval_cycles = 100000;  // final-policy evaluation length
    long long trace_stride = 100;    // iteration-trace thinning, first replication
};

struct ExperimentConfig {
    Workflow workflow = Workflow::evaluate;
    model::ModelSpec model;
    model::ThresholdPolicy policy;  // evaluate: fixed policy; optimize/table1: start
    sim::SimConfig sim;
    rmc::RmcConfig rmc;
    DpParams dp;
    PomdpParams pomdp;
    Table1Params table1;
    std::string output_dir = "runs";
    std::uint64_t seed = 1;
    int replications = 1;
    int workers = 1;
    long long trace_stride = 1;  // optimize workflow trace thinning
};

/// Parses and fully validates a config file; model invariants are checked via
/// validate_model. Summary files written by run_workflow reload through the
/// same entry point (their embedded config is used). Throws ConfigError with
/// a field path, or a parse diagnostic with position, on any problem.
ExperimentConfig load_config(const std::string& path);

/// Same, from an in-memory document; diagnostics name `origin` as the source.
ExperimentConfig load_config_text(const std::string& text, const std::string& origin);

/// Command-line overrides applied after loading; seed and workers propagate
/// into the embedded simulation and optimizer configs.
struct Overrides {
    std::optional<std::string> output_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> replications;
    std::optional<int> workers;
};

void apply_overrides(ExperimentConfig& cfg, const Overrides& ov);

/// Canonical JSON rendering of a resolved config; reloading it reproduces the
/// run bit-exactly.
std::string resolved_config_json(const ExperimentConfig& cfg);

}  // namespace remest::config
