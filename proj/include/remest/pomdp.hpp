#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "remest/model.hpp"

namespace remest::pomdp {

/// Finite-alphabet Markov source with a per-pair distortion table.
struct FiniteSourceSpec {
    int n_symbols = 0;
    std::vector<std::vector<double>> P;           // row-stochastic transitions
    std::vector<std::vector<double>> distortion;  // d(x, x_hat) >= 0
};

/// Human-readable problems; empty when the spec is well-formed.
std::vector<std::string> validate_source(const FiniteSourceSpec& src);

struct Belief {
    enum class Kind { pre, post };
    std::vector<double> p;
    Kind kind = Kind::pre;
};

/// Validates non-negativity and normalization within 1e-10, then normalizes
/// exactly. Throws std::invalid_argument otherwise.
Belief make_belief(std::vector<double> p, Belief::Kind kind);

/// Transmission decision for every source symbol.
struct Prescription {
    std::vector<int> u;  // symbol index -> power level index
};

/// Marker for the erased observation (nothing received).
inline constexpr int kBlank = -1;

/// Time update: row-vector product with the source transitions. Input must be
/// a post-transmission belief; the output is the next pre-transmission belief.
/// A normalization drift beyond 1e-10 signals a corrupted belief.
Belief pre_update(const Belief& post, const std::vector<std::vector<double>>& P);

/// Probability that nothing is received: sum_x pre(x) p(s, phi(x)).
double drop_mass(const Belief& pre, int s, const Prescription& phi,
                 const model::ChannelSpec& channel);

/// Measurement update. A received symbol collapses the belief to its Dirac
/// measure; a blank reweights by the per-symbol drop probabilities. Blank with
/// zero drop mass signals an impossible observation.
Belief post_update(const Belief& pre, int s, const Prescription& phi, int y,
                   const model::ChannelSpec& channel);

struct Estimate {
    int x_hat = 0;
    double distortion = 0.0;
};

/// Minimizer of the expected distortion under the post-transmission belief,
/// ties broken toward the smallest symbol index.
Estimate optimal_estimate(const Belief& post, const std::vector<std::vector<double>>& d);

struct StrategyNode {
    int t = 0;
    int s = 0;                   // channel state the prescription is conditioned on
    std::vector<double> belief;  // pre-transmission belief at the node
    Prescription phi;            // minimizing prescription
    double value = 0.0;          // cost-to-go from this node
};

struct SolveResult {
    double value = 0.0;
    // Unique reachable nodes, children before their parents; the root is last.
    std::vector<StrategyNode> tree;
};

/// Exact finite-horizon solve over stages t = 0..T by prescription enumeration
/// on the reachable belief tree, with duplicate (stage, belief, state) nodes
/// collapsed. The transmission cost of each power level comes from
/// channel.tx_cost. Enforced budget: n_symbols <= 4, T <= 4, and at most 3
/// power levels; beyond that a BudgetError is thrown.
SolveResult solve_common_info_dp(const FiniteSourceSpec& src, const model::ChannelSpec& channel,
                                 int T, const Belief& initial_pre, int initial_state);

/// Indented text rendering of the solved strategy tree.
void export_tree(const SolveResult& result, std::ostream& out);

}  // namespace remest::pomdp
