#pragma once

#include <optional>
#include <string>
#include <vector>

#include "remest/rng.hpp"

namespace remest::model {

struct NoiseSpec {
    enum class Kind { gaussian, discrete };
    Kind kind = Kind::gaussian;
    double sigma = 1.0;                // gaussian only
    std::vector<int> support;          // discrete only, sorted ascending
    std::vector<double> pmf;           // discrete only, aligned with support

    static NoiseSpec make_gaussian(double sigma);
    static NoiseSpec make_discrete(std::vector<int> support, std::vector<double> pmf);
};

struct ArSourceSpec {
    double a = 1.0;
    NoiseSpec noise;
};

struct ChannelSpec {
    int num_states = 1;
    std::vector<std::vector<double>> Q;      // num_states x num_states, row-stochastic
    std::vector<double> power_levels;        // u^(0)=0 < u^(1) < ... < u^(m)
    std::vector<std::vector<double>> drop;   // num_states x (m+1), p(s,u)
    std::vector<double> tx_cost;             // lambda(u^(0)) ... lambda(u^(m))

    int num_levels() const { return static_cast<int>(power_levels.size()); }  // m+1
};

struct DistortionSpec {
    enum class Kind { power, custom };
    Kind kind = Kind::power;
    double p = 2.0;                    // power only: d(e) = |e|^p
    std::vector<double> knots;         // custom only: e >= 0, ascending, knots[0] = 0
    std::vector<double> values;        // custom only: d at knots, values[0] = 0, non-decreasing

    static DistortionSpec make_power(double p);
    static DistortionSpec make_custom(std::vector<double> knots, std::vector<double> values);
};

struct CostSpec {
    DistortionSpec distortion;
    double beta = 0.9;                 // in (0, 1]
};

struct ModelSpec {
    ArSourceSpec source;
    ChannelSpec channel;
    CostSpec cost;
    int reference_state = 0;
};

/// Per-state ordered thresholds k[s][i-1] for levels i = 1..m; implicitly
/// k^(0)(s) = 0 and k^(m+1)(s) = +inf.
struct ThresholdPolicy {
    std::vector<std::vector<double>> k;

    int num_states() const { return static_cast<int>(k.size()); }
    int num_thresholds() const { return k.empty() ? 0 : static_cast<int>(k[0].size()); }
};

/// Returns one message per violated invariant; empty means the spec is valid.
std::vector<std::string> validate_model(const ModelSpec& spec);

/// Shape/order/fineness checks for a policy against a channel. Empty = valid.
std::vector<std::string> validate_policy(const ThresholdPolicy& policy, const ChannelSpec& channel);

/// Tail-sum stochastic monotonicity: rows further down put no less mass on
/// every upper tail.
bool is_stochastically_monotone(const std::vector<std::vector<double>>& Q);

/// Error process update: reset to the fresh noise on delivery, otherwise decay.
inline double step_error(double e, bool delivered, double w, double a) {
    return delivered ? w : a * e + w;
}

/// Power level used for error e in channel state s (count of thresholds <= |e|).
int policy_power(const ThresholdPolicy& policy, double e, int s);

/// Receiver estimate update: hold a-scaled prediction on BLANK, adopt the symbol
/// on reception.
inline double kalman_estimate_update(double xhat_prev, std::optional<double> y, double a) {
    return y.has_value() ? *y : a * xhat_prev;
}

double sample_noise(const NoiseSpec& spec, Rng& rng);

int step_channel(const std::vector<std::vector<double>>& Q, int s, Rng& rng);

double evaluate_distortion(const DistortionSpec& d, double e);

}  // namespace remest::model
