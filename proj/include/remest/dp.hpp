#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "remest/model.hpp"

namespace remest::dp {

/// Symmetric uniform grid over [-e_max, e_max] with an odd point count, so 0 is
/// always a grid point and every point has its mirror image.
struct GridSpec {
    double e_max = 30.0;
    int n_points = 601;
    // Noise mass beyond this magnitude is folded into the outermost cells kept
    // (never beyond the grid edge). Infinity means "fold at the grid edge".
    double noise_truncation = std::numeric_limits<double>::infinity();

    double spacing() const { return 2.0 * e_max / (n_points - 1); }
    double point(int i) const { return -e_max + spacing() * i; }
    int zero_index() const { return (n_points - 1) / 2; }
    int mirror(int i) const { return n_points - 1 - i; }
};

/// Throws std::invalid_argument on a malformed grid.
void validate_grid(const GridSpec& grid);

struct HorizonTag {
    enum class Kind { finite, infinite };
    Kind kind = Kind::infinite;
    int t = 0;  // stage index, meaningful for finite horizons only

    static HorizonTag finite(int stage) { return {Kind::finite, stage}; }
    static HorizonTag infinite() { return {Kind::infinite, 0}; }
};

struct ValueTable {
    std::vector<double> values;  // [grid index * n_states + s]
    int n_states = 0;
    double beta = 1.0;
    HorizonTag tag;

    double& at(int i, int s) { return values[static_cast<std::size_t>(i) * n_states + s]; }
    double at(int i, int s) const { return values[static_cast<std::size_t>(i) * n_states + s]; }
    int n_points() const { return n_states ? static_cast<int>(values.size()) / n_states : 0; }
};

/// Zero table on the grid with the given shape.
ValueTable zero_table(const GridSpec& grid, int n_states, double beta, HorizonTag tag);

struct GridPolicy {
    std::vector<int> levels;  // [grid index * n_states + s]
    int n_states = 0;
    int n_levels = 0;

    int& at(int i, int s) { return levels[static_cast<std::size_t>(i) * n_states + s]; }
    int at(int i, int s) const { return levels[static_cast<std::size_t>(i) * n_states + s]; }
    int n_points() const { return n_states ? static_cast<int>(levels.size()) / n_states : 0; }
};

/// Noise distribution re-expressed as weights on the grid points. Gaussian mass
/// is assigned by CDF differences over cell boundaries; discrete atoms are
/// split linearly between their bracketing points. Mass beyond the truncation
/// bound (or the grid edge) is folded into the outermost cells and reported.
struct NoiseGrid {
    std::vector<double> weights;  // aligned with grid points, sums to 1
    int lo = 0, hi = -1;          // inclusive index window of nonzero weights
    double folded_mass = 0.0;
};
NoiseGrid discretize_noise(const model::NoiseSpec& noise, const GridSpec& grid);

/// Mass-folding threshold above which backup operations set a warning flag.
inline constexpr double kFoldedMassWarning = 1e-4;

struct BackupResult {
    ValueTable J;
    GridPolicy policy;
    double folded_noise_mass = 0.0;
    long long clamped_evaluations = 0;  // off-grid reads clamped to the boundary
};

/// One sweep of the minimization over power levels. For a finite-horizon input
/// tagged as stage t+1 the stage cost enters unweighted and the result is stage
/// t; for an infinite-horizon input the normalized discounted form is used
/// (stage cost weighted by 1-beta, continuation by beta) so the fixed point is
/// directly comparable with the renewal-ratio estimate. Ties in the minimizer
/// go to the smallest power level.
BackupResult bellman_backup(const ValueTable& J, const model::ModelSpec& m, const GridSpec& grid);

struct FiniteHorizonResult {
    // Index t in [0, T]: value-to-go and greedy decision rule at stage t.
    std::vector<ValueTable> J;
    std::vector<GridPolicy> policy;
    double folded_noise_mass = 0.0;
};
FiniteHorizonResult solve_finite_horizon(const model::ModelSpec& m, const GridSpec& grid, int T);

struct ValueIterationResult {
    ValueTable J;
    GridPolicy policy;
    long long iters = 0;
    std::vector<double> residuals;  // sup-norm change per sweep
    double folded_noise_mass = 0.0;
    long long clamped_evaluations = 0;
};

/// Iterates the discounted backup from the zero table until the sup-norm change
/// drops below tol. Throws ConvergenceError if max_iters sweeps are exhausted.
ValueIterationResult value_iteration(const model::ModelSpec& m, const GridSpec& grid, double tol,
                                     long long max_iters);

/// Expected value at the regeneration start (error reset, channel in the
/// reference state, next-step noise applied): the quantity the renewal
/// estimator's cost ratio converges to.
double start_value(const ValueTable& J, const model::ModelSpec& m, const GridSpec& grid);

struct ThresholdExtraction {
    model::ThresholdPolicy policy;
    // Levels never used by the grid policy get the grid bound as a sentinel
    // threshold; each such case is described here.
    std::vector<std::string> warnings;
};

/// Converts a grid policy in threshold form to per-state thresholds, placing
/// each one at the midpoint between the bracketing grid points. Throws
/// NonThresholdPolicyError (listing offending cells) when the policy is not
/// even or its level is not non-decreasing in |e|.
ThresholdExtraction extract_thresholds(const GridPolicy& policy, const GridSpec& grid);

struct StructureReport {
    bool value_even = false;
    bool value_quasiconvex = false;
    bool value_monotone_in_state = false;
    bool policy_threshold_form = false;
    // Monotonicity in the channel state is asserted only under a stochastically
    // monotone transition matrix; otherwise the flag above is vacuously true.
    bool monotonicity_applicable = false;
    double worst_evenness = 0.0;
    double worst_quasiconvexity = 0.0;
    double worst_state_monotonicity = 0.0;
    int policy_violations = 0;
    std::vector<std::string> details;  // locations of the worst violations
};

/// Verifies the structural properties the converged table and greedy policy
/// should satisfy: evenness in e, quasi-convexity in e (non-decreasing on
/// e >= 0), monotonicity in the channel state, and threshold form of the
/// policy. Violations up to tol pass.
StructureReport check_structure(const ValueTable& J, const GridPolicy& policy,
                                const model::ModelSpec& m, double tol = 1e-9);

/// Writes "e,s,J,u" rows for every grid point and channel state.
void export_csv(const ValueTable& J, const GridPolicy& policy, const GridSpec& grid,
                std::ostream& out);

}  // namespace remest::dp
