#include "remest/pomdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

#include "remest/errors.hpp"

namespace remest::pomdp {

namespace {

constexpr double kNormTol = 1e-10;

void require_normalized(const std::vector<double>& p, const char* what) {
    double sum = 0.0;
    for (double v : p) {
        if (v < 0.0) throw std::invalid_argument(std::string(what) + ": negative probability");
        sum += v;
    }
    if (std::fabs(sum - 1.0) > kNormTol) {
        throw std::invalid_argument(std::string(what) + ": probabilities sum to " +
                                    std::to_string(sum));
    }
}

std::vector<double> normalized(std::vector<double> p) {
    double sum = 0.0;
    for (double v : p) sum += v;
    for (double& v : p) v /= sum;
    return p;
}

}  // namespace

std::vector<std::string> validate_source(const FiniteSourceSpec& src) {
    std::vector<std::string> report;
    const int n = src.n_symbols;
    if (n < 1 || n > 6) {
        report.push_back("n_symbols must be between 1 and 6");
        return report;
    }
    if (static_cast<int>(src.P.size()) != n) {
        report.push_back("P must have one row per symbol");
    } else {
        for (int x = 0; x < n; ++x) {
            if (static_cast<int>(src.P[static_cast<std::size_t>(x)].size()) != n) {
                report.push_back("P row " + std::to_string(x) + " has the wrong length");
                continue;
            }
            double sum = 0.0;
            for (double v : src.P[static_cast<std::size_t>(x)]) {
                if (v < 0.0) report.push_back("P row " + std::to_string(x) + " has a negative entry");
                sum += v;
            }
            if (std::fabs(sum - 1.0) > 1e-12) {
                report.push_back("P row " + std::to_string(x) + " sums to " + std::to_string(sum));
            }
        }
    }
    if (static_cast<int>(src.distortion.size()) != n) {
        report.push_back("distortion must be an n-by-n matrix");
    } else {
        for (int x = 0; x < n; ++x) {
            if (static_cast<int>(src.distortion[static_cast<std::size_t>(x)].size()) != n) {
                report.push_back("distortion row " + std::to_string(x) + " has the wrong length");
                continue;
            }
            for (double v : src.distortion[static_cast<std::size_t>(x)]) {
                if (v < 0.0) {
                    report.push_back("distortion row " + std::to_string(x) +
                                     " has a negative entry");
                    break;
                }
            }
        }
    }
    return report;
}

Belief make_belief(std::vector<double> p, Belief::Kind kind) {
    if (p.empty()) throw std::invalid_argument("belief: empty probability vector");
    require_normalized(p, "belief");
    Belief b;
    b.p = normalized(std::move(p));
    b.kind = kind;
    return b;
}

Belief pre_update(const Belief& post, const std::vector<std::vector<double>>& P) {
    if (post.kind != Belief::Kind::post) {
        throw std::invalid_argument("pre_update expects a post-transmission belief");
    }
    const std::size_t n = post.p.size();
    if (P.size() != n) throw std::invalid_argument("pre_update: transition matrix shape mismatch");
    require_normalized(post.p, "pre_update input");
    std::vector<double> out(n, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
        if (P[x].size() != n) {
            throw std::invalid_argument("pre_update: transition matrix shape mismatch");
        }
        for (std::size_t y = 0; y < n; ++y) out[y] += post.p[x] * P[x][y];
    }
    require_normalized(out, "pre_update output");
    Belief b;
    b.p = normalized(std::move(out));
    b.kind = Belief::Kind::pre;
    return b;
}

double drop_mass(const Belief& pre, int s, const Prescription& phi,
                 const model::ChannelSpec& channel) {
    if (phi.u.size() != pre.p.size()) {
        throw std::invalid_argument("prescription does not cover the alphabet");
    }
    double mass = 0.0;
    for (std::size_t x = 0; x < pre.p.size(); ++x) {
        mass += pre.p[x] *
                channel.drop[static_cast<std::size_t>(s)][static_cast<std::size_t>(phi.u[x])];
    }
    return mass;
}

Belief post_update(const Belief& pre, int s, const Prescription& phi, int y,
                   const model::ChannelSpec& channel) {
    if (pre.kind != Belief::Kind::pre) {
        throw std::invalid_argument("post_update expects a pre-transmission belief");
    }
    const std::size_t n = pre.p.size();
    Belief out;
    out.kind = Belief::Kind::post;
    if (y != kBlank) {
        if (y < 0 || static_cast<std::size_t>(y) >= n) {
            throw std::invalid_argument("post_update: received symbol out of range");
        }
        out.p.assign(n, 0.0);
        out.p[static_cast<std::size_t>(y)] = 1.0;
        return out;
    }
    const double mass = drop_mass(pre, s, phi, channel);
    if (mass <= 0.0) {
        throw std::invalid_argument("post_update: blank observed but the drop mass is zero");
    }
    out.p.resize(n);
    for (std::size_t x = 0; x < n; ++x) {
        out.p[x] = pre.p[x] *
                   channel.drop[static_cast<std::size_t>(s)][static_cast<std::size_t>(phi.u[x])] /
                   mass;
    }
    require_normalized(out.p, "post_update output");
    out.p = normalized(std::move(out.p));
    return out;
}

Estimate optimal_estimate(const Belief& post, const std::vector<std::vector<double>>& d) {
    const std::size_t n = post.p.size();
    if (d.size() != n) throw std::invalid_argument("distortion matrix shape mismatch");
    Estimate best;
    best.distortion = std::numeric_limits<double>::infinity();
    for (std::size_t xh = 0; xh < n; ++xh) {
        double acc = 0.0;
        for (std::size_t x = 0; x < n; ++x) acc += post.p[x] * d[x][xh];
        if (acc < best.distortion) {
            best.distortion = acc;
            best.x_hat = static_cast<int>(xh);
        }
    }
    return best;
}

namespace {

using QuantizedBelief = std::vector<long long>;

QuantizedBelief quantize(const std::vector<double>& p) {
    QuantizedBelief q(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) q[i] = std::llround(p[i] * 1e9);
    return q;
}

struct Solver {
    const FiniteSourceSpec& src;
    const model::ChannelSpec& channel;
    int T;
    std::vector<Prescription> prescriptions;
    std::map<std::tuple<int, int, QuantizedBelief>, std::size_t> memo;  // -> tree index
    std::vector<StrategyNode> tree;

    // Cost-to-go from a pre-transmission belief with the channel last seen in
    // state s_prev. Returns the node's value.
    double v1(int t, const Belief& pre, int s_prev) {
        if (t > T) return 0.0;
        const auto key = std::make_tuple(t, s_prev, quantize(pre.p));
        if (auto it = memo.find(key); it != memo.end()) return tree[it->second].value;

        const int n = src.n_symbols;
        const int ns = channel.num_states;
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_phi = 0;
        for (std::size_t pi = 0; pi < prescriptions.size(); ++pi) {
            const Prescription& phi = prescriptions[pi];
            double total = 0.0;
            for (int x = 0; x < n; ++x) {
                total += pre.p[static_cast<std::size_t>(x)] *
                         channel.tx_cost[static_cast<std::size_t>(phi.u[static_cast<std::size_t>(x)])];
            }
            for (int s2 = 0; s2 < ns; ++s2) {
                const double q = channel.Q[static_cast<std::size_t>(s_prev)]
                                          [static_cast<std::size_t>(s2)];
                if (q == 0.0) continue;
                for (int x = 0; x < n; ++x) {
                    const double pd = channel.drop[static_cast<std::size_t>(s2)]
                                                  [static_cast<std::size_t>(
                                                      phi.u[static_cast<std::size_t>(x)])];
                    const double mass = pre.p[static_cast<std::size_t>(x)] * (1.0 - pd);
                    if (mass <= 0.0) continue;
                    total += q * mass * v2(t, dirac(x), s2);
                }
                const double blank = drop_mass(pre, s2, phi, channel);
                if (blank > 0.0) {
                    total += q * blank * v2(t, post_update(pre, s2, phi, kBlank, channel), s2);
                }
            }
            if (total < best) {
                best = total;
                best_phi = pi;
            }
        }

        StrategyNode node;
        node.t = t;
        node.s = s_prev;
        node.belief = pre.p;
        node.phi = prescriptions[best_phi];
        node.value = best;
        tree.push_back(std::move(node));
        memo.emplace(key, tree.size() - 1);
        return best;
    }

    // Estimation cost plus the time-updated continuation; the continuation
    // past the final stage is identically zero.
    double v2(int t, const Belief& post, int s) {
        double value = optimal_estimate(post, src.distortion).distortion;
        if (t < T) value += v1(t + 1, pre_update(post, src.P), s);
        return value;
    }

    Belief dirac(int x) const {
        Belief b;
        b.kind = Belief::Kind::post;
        b.p.assign(static_cast<std::size_t>(src.n_symbols), 0.0);
        b.p[static_cast<std::size_t>(x)] = 1.0;
        return b;
    }
};

}  // namespace

SolveResult solve_common_info_dp(const FiniteSourceSpec& src, const model::ChannelSpec& channel,
                                 int T, const Belief& initial_pre, int initial_state) {
    const auto problems = validate_source(src);
    if (!problems.empty()) {
        std::string joined = "invalid source:";
        for (const auto& p : problems) {
            joined += ' ';
            joined += p;
            joined += ';';
        }
        throw std::invalid_argument(joined);
    }
    if (src.n_symbols > 4) throw BudgetError("enumeration budget: n_symbols must be <= 4");
    if (T < 0) throw std::invalid_argument("horizon T must be >= 0");
    if (T > 4) throw BudgetError("enumeration budget: T must be <= 4");
    if (channel.num_levels() > 3) throw BudgetError("enumeration budget: at most 3 power levels");
    if (initial_state < 0 || initial_state >= channel.num_states) {
        throw std::invalid_argument("initial channel state out of range");
    }
    const std::size_t ns = static_cast<std::size_t>(channel.num_states);
    const std::size_t nlv = static_cast<std::size_t>(channel.num_levels());
    if (channel.Q.size() != ns || channel.drop.size() != ns || channel.tx_cost.size() != nlv) {
        throw std::invalid_argument("channel tables do not match its state and level counts");
    }
    for (const auto& row : channel.Q) {
        if (row.size() != ns) throw std::invalid_argument("channel transition row has the wrong length");
    }
    for (const auto& row : channel.drop) {
        if (row.size() != nlv) throw std::invalid_argument("channel drop row has the wrong length");
    }
    if (initial_pre.kind != Belief::Kind::pre ||
        static_cast<int>(initial_pre.p.size()) != src.n_symbols) {
        throw std::invalid_argument("initial belief must be a pre-transmission belief over the alphabet");
    }
    require_normalized(initial_pre.p, "initial belief");

    Solver solver{src, channel, T, {}, {}, {}};
    const int n = src.n_symbols;
    const int nl = channel.num_levels();
    long long count = 1;
    for (int x = 0; x < n; ++x) count *= nl;
    solver.prescriptions.reserve(static_cast<std::size_t>(count));
    for (long long code = 0; code < count; ++code) {
        Prescription phi;
        phi.u.resize(static_cast<std::size_t>(n));
        long long rem = code;
        for (int x = n - 1; x >= 0; --x) {
            phi.u[static_cast<std::size_t>(x)] = static_cast<int>(rem % nl);
            rem /= nl;
        }
        solver.prescriptions.push_back(std::move(phi));
    }

    SolveResult out;
    out.value = solver.v1(0, initial_pre, initial_state);
    out.tree = std::move(solver.tree);
    return out;
}

void export_tree(const SolveResult& result, std::ostream& out) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "value %.12g\n", result.value);
    out << buf;
    for (const auto& node : result.tree) {
        for (int i = 0; i < node.t; ++i) out << "  ";
        out << "t=" << node.t << " s=" << node.s << " belief=(";
        for (std::size_t i = 0; i < node.belief.size(); ++i) {
            std::snprintf(buf, sizeof(buf), i ? ",%.9g" : "%.9g", node.belief[i]);
            out << buf;
        }
        out << ") phi=(";
        for (std::size_t i = 0; i < node.phi.u.size(); ++i) {
            out << (i ? "," : "") << node.phi.u[i];
        }
        std::snprintf(buf, sizeof(buf), ") V=%.12g\n", node.value);
        out << buf;
    }
}

}  // namespace remest::pomdp
