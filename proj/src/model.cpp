#include "remest/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace remest::model {

namespace {

constexpr double kSumTol = 1e-12;

std::string fmt(const char* pattern, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), pattern, args...);
    return buf;
}

}  // namespace

NoiseSpec NoiseSpec::make_gaussian(double sigma) {
    NoiseSpec n;
    n.kind = Kind::gaussian;
    n.sigma = sigma;
    return n;
}

NoiseSpec NoiseSpec::make_discrete(std::vector<int> support, std::vector<double> pmf) {
    NoiseSpec n;
    n.kind = Kind::discrete;
    n.support = std::move(support);
    n.pmf = std::move(pmf);
    return n;
}

DistortionSpec DistortionSpec::make_power(double p) {
    DistortionSpec d;
    d.kind = Kind::power;
    d.p = p;
    return d;
}

DistortionSpec DistortionSpec::make_custom(std::vector<double> knots, std::vector<double> values) {
    DistortionSpec d;
    d.kind = Kind::custom;
    d.knots = std::move(knots);
    d.values = std::move(values);
    return d;
}

std::vector<std::string> validate_model(const ModelSpec& spec) {
    std::vector<std::string> report;
    const auto& src = spec.source;
    const auto& ch = spec.channel;
    const auto& cost = spec.cost;

    if (!std::isfinite(src.a)) report.push_back("source.a is not finite");

    switch (src.noise.kind) {
        case NoiseSpec::Kind::gaussian:
            if (!(src.noise.sigma > 0.0)) report.push_back("noise sigma must be > 0");
            break;
        case NoiseSpec::Kind::discrete: {
            const auto& sup = src.noise.support;
            const auto& pmf = src.noise.pmf;
            if (sup.size() != pmf.size() || sup.empty()) {
                report.push_back("noise support and pmf must be non-empty and aligned");
                break;
            }
            if (!std::is_sorted(sup.begin(), sup.end()) ||
                std::adjacent_find(sup.begin(), sup.end()) != sup.end()) {
                report.push_back("noise support must be strictly ascending");
                break;
            }
            double total = 0.0;
            bool neg = false;
            for (double q : pmf) {
                if (q < 0.0) neg = true;
                total += q;
            }
            if (neg) report.push_back("noise pmf has negative entries");
            if (std::fabs(total - 1.0) > kSumTol) report.push_back(fmt("noise pmf sums to %.17g, not 1", total));
            for (std::size_t i = 0; i < sup.size(); ++i) {
                auto it = std::lower_bound(sup.begin(), sup.end(), -sup[i]);
                if (it == sup.end() || *it != -sup[i] ||
                    std::fabs(pmf[static_cast<std::size_t>(it - sup.begin())] - pmf[i]) > kSumTol) {
                    report.push_back(fmt("noise pmf not symmetric at w=%d", sup[i]));
                    break;
                }
            }
            // Unimodality along the support: mass must not grow with |w|.
            std::vector<std::size_t> order(sup.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::sort(order.begin(), order.end(), [&](std::size_t lhs, std::size_t rhs) {
                return std::abs(sup[lhs]) < std::abs(sup[rhs]);
            });
            for (std::size_t i = 1; i < order.size(); ++i) {
                if (pmf[order[i]] > pmf[order[i - 1]] + kSumTol) {
                    report.push_back(fmt("noise pmf increases with |w| at w=%d", sup[order[i]]));
                    break;
                }
            }
            break;
        }
    }

    const int n = ch.num_states;
    if (n < 1) report.push_back("channel.num_states must be >= 1");
    if (static_cast<int>(ch.Q.size()) != n) {
        report.push_back("channel.Q must have num_states rows");
    } else {
        for (int s = 0; s < n; ++s) {
            if (static_cast<int>(ch.Q[s].size()) != n) {
                report.push_back(fmt("channel.Q row %d has wrong length", s));
                continue;
            }
            double total = 0.0;
            for (double q : ch.Q[s]) {
                if (q < 0.0) report.push_back(fmt("channel.Q row %d has a negative entry", s));
                total += q;
            }
            if (std::fabs(total - 1.0) > kSumTol) report.push_back(fmt("channel.Q row %d sums to %.17g, not 1", s, total));
        }
    }

    const int L = ch.num_levels();
    if (L < 1 || ch.power_levels[0] != 0.0) {
        report.push_back("power_levels must start at u=0");
    }
    for (int i = 1; i < L; ++i) {
        if (!(ch.power_levels[i] > ch.power_levels[i - 1])) {
            report.push_back("power_levels must be strictly increasing");
            break;
        }
    }

    if (static_cast<int>(ch.drop.size()) != n) {
        report.push_back("channel.drop must have num_states rows");
    } else {
        for (int s = 0; s < n; ++s) {
            if (static_cast<int>(ch.drop[s].size()) != L) {
                report.push_back(fmt("channel.drop row %d must have one entry per power level", s));
                continue;
            }
            if (std::fabs(ch.drop[s][0] - 1.0) > kSumTol) {
                report.push_back(fmt("p(%d, u=0) must equal 1 (zero power never delivers)", s));
            }
            for (int u = 0; u < L; ++u) {
                if (ch.drop[s][u] < 0.0 || ch.drop[s][u] > 1.0) {
                    report.push_back(fmt("p(%d, level %d) outside [0, 1]", s, u));
                }
                if (u > 0 && ch.drop[s][u] > ch.drop[s][u - 1] + kSumTol) {
                    report.push_back(fmt("p(%d, ·) must be weakly decreasing in power (level %d)", s, u));
                }
            }
        }
        for (int s = 1; s < n; ++s) {
            if (static_cast<int>(ch.drop[s].size()) != L || static_cast<int>(ch.drop[s - 1].size()) != L) continue;
            for (int u = 0; u < L; ++u) {
                if (ch.drop[s][u] > ch.drop[s - 1][u] + kSumTol) {
                    report.push_back(fmt("p(·, level %d) must be weakly decreasing in s (higher states are better): p(%d)=%g > p(%d)=%g", u, s, ch.drop[s][u], s - 1, ch.drop[s - 1][u]));
                }
            }
        }
    }

    if (static_cast<int>(ch.tx_cost.size()) != L) {
        report.push_back("channel.tx_cost must have one entry per power level");
    } else {
        if (ch.tx_cost[0] != 0.0) report.push_back(fmt("λ(0) ≠ 0 (got %g)", ch.tx_cost[0]));
        for (int u = 0; u < L; ++u) {
            if (ch.tx_cost[u] < 0.0) report.push_back(fmt("λ(level %d) is negative", u));
            if (u > 0 && ch.tx_cost[u] + kSumTol < ch.tx_cost[u - 1]) {
                report.push_back(fmt("λ must be weakly increasing in power (level %d)", u));
            }
        }
    }

    switch (cost.distortion.kind) {
        case DistortionSpec::Kind::power:
            if (!(cost.distortion.p >= 1.0)) report.push_back("distortion power p must be >= 1");
            break;
        case DistortionSpec::Kind::custom: {
            const auto& kn = cost.distortion.knots;
            const auto& va = cost.distortion.values;
            if (kn.size() != va.size() || kn.empty()) {
                report.push_back("custom distortion knots and values must be non-empty and aligned");
                break;
            }
            if (kn[0] != 0.0 || va[0] != 0.0) report.push_back("custom distortion must have d(0) = 0");
            if (!std::is_sorted(kn.begin(), kn.end())) report.push_back("custom distortion knots must be ascending");
            if (!std::is_sorted(va.begin(), va.end())) report.push_back("custom distortion must be non-decreasing on e >= 0");
            break;
        }
    }

    if (!(cost.beta > 0.0 && cost.beta <= 1.0)) report.push_back(fmt("beta must be in (0, 1], got %g", cost.beta));

    if (spec.reference_state < 0 || spec.reference_state >= n) {
        report.push_back(fmt("reference_state %d outside [0, %d)", spec.reference_state, n));
    }

    return report;
}

std::vector<std::string> validate_policy(const ThresholdPolicy& policy, const ChannelSpec& channel) {
    std::vector<std::string> report;
    const int m = channel.num_levels() - 1;
    if (policy.num_states() != channel.num_states) {
        report.push_back("policy must have one threshold row per channel state");
        return report;
    }
    for (int s = 0; s < policy.num_states(); ++s) {
        if (static_cast<int>(policy.k[s].size()) != m) {
            report.push_back(fmt("policy row %d must have %d thresholds", s, m));
            continue;
        }
        for (int i = 0; i < m; ++i) {
            const double v = policy.k[s][i];
            if (!std::isfinite(v) || v < 0.0) {
                report.push_back(fmt("threshold k^(%d)(%d) must be finite and >= 0", i + 1, s));
            }
            if (i > 0 && v < policy.k[s][i - 1]) {
                report.push_back(fmt("thresholds for state %d must be ordered at level %d", s, i + 1));
            }
        }
    }
    return report;
}

bool is_stochastically_monotone(const std::vector<std::vector<double>>& Q) {
    const int n = static_cast<int>(Q.size());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < i; ++j) {
            double tail_i = 0.0, tail_j = 0.0;
            // Accumulate tails right-to-left; compare after each upper set {l+1, ...}.
            for (int l = n - 1; l >= 1; --l) {
                tail_i += Q[i][l];
                tail_j += Q[j][l];
                if (tail_i + kSumTol < tail_j) return false;
            }
        }
    }
    return true;
}

int policy_power(const ThresholdPolicy& policy, double e, int s) {
    const double abs_e = std::fabs(e);
    const auto& row = policy.k[s];
    int level = 0;
    while (level < static_cast<int>(row.size()) && row[level] <= abs_e) ++level;
    return level;
}

double sample_noise(const NoiseSpec& spec, Rng& rng) {
    if (spec.kind == NoiseSpec::Kind::gaussian) return spec.sigma * rng.gaussian();
    double u = rng.uniform01();
    double acc = 0.0;
    for (std::size_t i = 0; i < spec.pmf.size(); ++i) {
        acc += spec.pmf[i];
        if (u < acc) return spec.support[i];
    }
    return spec.support.back();
}

int step_channel(const std::vector<std::vector<double>>& Q, int s, Rng& rng) {
    double u = rng.uniform01();
    double acc = 0.0;
    const auto& row = Q[s];
    for (std::size_t t = 0; t + 1 < row.size(); ++t) {
        acc += row[t];
        if (u < acc) return static_cast<int>(t);
    }
    return static_cast<int>(row.size()) - 1;
}

double evaluate_distortion(const DistortionSpec& d, double e) {
    const double x = std::fabs(e);
    if (d.kind == DistortionSpec::Kind::power) {
        if (d.p == 2.0) return x * x;
        if (d.p == 1.0) return x;
        return std::pow(x, d.p);
    }
    const auto& kn = d.knots;
    const auto& va = d.values;
    if (x <= kn.front()) return va.front();
    if (x >= kn.back()) {
        // Extend with the final segment's slope so the function stays non-decreasing.
        if (kn.size() == 1) return va.back();
        const std::size_t last = kn.size() - 1;
        const double slope = (va[last] - va[last - 1]) / (kn[last] - kn[last - 1]);
        return va[last] + slope * (x - kn[last]);
    }
    auto it = std::upper_bound(kn.begin(), kn.end(), x);
    const std::size_t hi = static_cast<std::size_t>(it - kn.begin());
    const std::size_t lo = hi - 1;
    const double t = (x - kn[lo]) / (kn[hi] - kn[lo]);
    return va[lo] + t * (va[hi] - va[lo]);
}

}  // namespace remest::model
