#include "remest/dp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "remest/errors.hpp"

namespace remest::dp {

namespace {

std::string fmt(const char* f, ...) {
    char buf[256];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

void require_valid_model(const model::ModelSpec& m) {
    const auto issues = model::validate_model(m);
    if (!issues.empty()) {
        std::string joined = "invalid model:";
        for (const auto& s : issues) {
            joined += ' ';
            joined += s;
            joined += ';';
        }
        throw std::invalid_argument(joined);
    }
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Linear interpolation with boundary clamping; atoms landing on grid points
// (up to rounding dust) are snapped so integer-lattice models stay exact.
double interp(const ValueTable& J, const GridSpec& grid, double y, int s, long long& clamped) {
    const int n = grid.n_points;
    const double pos = (y + grid.e_max) / grid.spacing();
    if (pos <= 0.0) {
        if (pos < -1e-9) ++clamped;
        return J.at(0, s);
    }
    if (pos >= n - 1) {
        if (pos > n - 1 + 1e-9) ++clamped;
        return J.at(n - 1, s);
    }
    int i0 = static_cast<int>(pos);
    double frac = pos - i0;
    if (frac < 1e-12) frac = 0.0;
    if (frac > 1.0 - 1e-12) {
        ++i0;
        frac = 0.0;
    }
    if (frac == 0.0) return J.at(i0, s);
    return (1.0 - frac) * J.at(i0, s) + frac * J.at(i0 + 1, s);
}

}  // namespace

void validate_grid(const GridSpec& grid) {
    if (!(grid.e_max > 0.0)) throw std::invalid_argument("grid e_max must be positive");
    if (grid.n_points < 3 || grid.n_points % 2 == 0) {
        throw std::invalid_argument("grid n_points must be an odd integer >= 3");
    }
    if (!(grid.noise_truncation > 0.0)) {
        throw std::invalid_argument("grid noise_truncation must be positive");
    }
}

ValueTable zero_table(const GridSpec& grid, int n_states, double beta, HorizonTag tag) {
    validate_grid(grid);
    ValueTable J;
    J.values.assign(static_cast<std::size_t>(grid.n_points) * n_states, 0.0);
    J.n_states = n_states;
    J.beta = beta;
    J.tag = tag;
    return J;
}

NoiseGrid discretize_noise(const model::NoiseSpec& noise, const GridSpec& grid) {
    validate_grid(grid);
    const int n = grid.n_points;
    const double h = grid.spacing();
    NoiseGrid out;
    out.weights.assign(static_cast<std::size_t>(n), 0.0);

    // Outermost indices kept: symmetric window within the truncation bound.
    const double bound = std::min(grid.noise_truncation, grid.e_max);
    int hi = std::min(n - 1, static_cast<int>(std::floor((bound + grid.e_max) / h + 1e-9)));
    hi = std::max(hi, grid.zero_index());
    const int lo = grid.mirror(hi);
    const double x_hi = grid.point(hi);
    const double x_lo = grid.point(lo);

    if (noise.kind == model::NoiseSpec::Kind::gaussian) {
        const double sd = noise.sigma;
        double interior = 0.0;
        for (int i = lo; i <= hi; ++i) {
            const double a = (grid.point(i) - 0.5 * h) / sd;
            const double b = (grid.point(i) + 0.5 * h) / sd;
            const double w = normal_cdf(b) - normal_cdf(a);
            out.weights[static_cast<std::size_t>(i)] = w;
            interior += w;
        }
        const double upper_tail = 1.0 - normal_cdf((x_hi + 0.5 * h) / sd);
        const double lower_tail = normal_cdf((x_lo - 0.5 * h) / sd);
        out.weights[static_cast<std::size_t>(hi)] += upper_tail;
        out.weights[static_cast<std::size_t>(lo)] += lower_tail;
        out.folded_mass = upper_tail + lower_tail;
        (void)interior;
    } else {
        for (std::size_t k = 0; k < noise.support.size(); ++k) {
            const double w = static_cast<double>(noise.support[k]);
            const double p = noise.pmf[k];
            if (w >= x_hi) {
                out.weights[static_cast<std::size_t>(hi)] += p;
                if (w > x_hi + 1e-12) out.folded_mass += p;
                continue;
            }
            if (w <= x_lo) {
                out.weights[static_cast<std::size_t>(lo)] += p;
                if (w < x_lo - 1e-12) out.folded_mass += p;
                continue;
            }
            const double pos = (w + grid.e_max) / h;
            int i0 = static_cast<int>(pos);
            double frac = pos - i0;
            if (frac < 1e-12) frac = 0.0;
            if (frac > 1.0 - 1e-12) {
                ++i0;
                frac = 0.0;
            }
            out.weights[static_cast<std::size_t>(i0)] += (1.0 - frac) * p;
            if (frac > 0.0) out.weights[static_cast<std::size_t>(i0 + 1)] += frac * p;
        }
    }

    int first = 0, last = n - 1;
    while (first < n && out.weights[static_cast<std::size_t>(first)] == 0.0) ++first;
    while (last >= 0 && out.weights[static_cast<std::size_t>(last)] == 0.0) --last;
    out.lo = first;
    out.hi = last;
    return out;
}

BackupResult bellman_backup(const ValueTable& J, const model::ModelSpec& m, const GridSpec& grid) {
    validate_grid(grid);
    require_valid_model(m);
    const int n = grid.n_points;
    const int ns = m.channel.num_states;
    const int nl = m.channel.num_levels();
    if (J.n_states != ns || J.n_points() != n) {
        throw std::invalid_argument("value table shape does not match the grid and channel");
    }
    const bool finite = J.tag.kind == HorizonTag::Kind::finite;
    const double beta = m.cost.beta;
    if (!finite && !(beta < 1.0)) {
        throw std::invalid_argument("discounted backup requires beta < 1");
    }
    const double w_stage = finite ? 1.0 : 1.0 - beta;
    const double w_cont = finite ? 1.0 : beta;

    const NoiseGrid noise = discretize_noise(m.source.noise, grid);

    BackupResult res;
    res.folded_noise_mass = noise.folded_mass;
    res.J = zero_table(grid, ns, beta,
                       finite ? HorizonTag::finite(J.tag.t - 1) : HorizonTag::infinite());
    res.policy.levels.assign(static_cast<std::size_t>(n) * ns, 0);
    res.policy.n_states = ns;
    res.policy.n_levels = nl;

    // E_W J(W, s') is shared by every cell; E_W J(a e + W, s') depends on e.
    std::vector<double> ejw(static_cast<std::size_t>(ns), 0.0);
    for (int s2 = 0; s2 < ns; ++s2) {
        double acc = 0.0;
        for (int j = noise.lo; j <= noise.hi; ++j) {
            acc += noise.weights[static_cast<std::size_t>(j)] * J.at(j, s2);
        }
        ejw[static_cast<std::size_t>(s2)] = acc;
    }
    std::vector<double> g(static_cast<std::size_t>(n) * ns, 0.0);
    const double a = m.source.a;
    for (int i = 0; i < n; ++i) {
        const double ae = a * grid.point(i);
        for (int s2 = 0; s2 < ns; ++s2) {
            double acc = 0.0;
            for (int j = noise.lo; j <= noise.hi; ++j) {
                acc += noise.weights[static_cast<std::size_t>(j)] *
                       interp(J, grid, ae + grid.point(j), s2, res.clamped_evaluations);
            }
            g[static_cast<std::size_t>(i) * ns + s2] = acc;
        }
    }

    for (int i = 0; i < n; ++i) {
        const double de = model::evaluate_distortion(m.cost.distortion, grid.point(i));
        for (int s = 0; s < ns; ++s) {
            double best = std::numeric_limits<double>::infinity();
            int best_u = 0;
            for (int u = 0; u < nl; ++u) {
                double drop_mix = 0.0;
                double cont = 0.0;
                for (int s2 = 0; s2 < ns; ++s2) {
                    const double q = m.channel.Q[static_cast<std::size_t>(s)]
                                                [static_cast<std::size_t>(s2)];
                    const double pd = m.channel.drop[static_cast<std::size_t>(s2)]
                                                    [static_cast<std::size_t>(u)];
                    drop_mix += q * pd;
                    cont += q * (pd * g[static_cast<std::size_t>(i) * ns + s2] +
                                 (1.0 - pd) * ejw[static_cast<std::size_t>(s2)]);
                }
                const double cand =
                    w_stage * (m.channel.tx_cost[static_cast<std::size_t>(u)] + drop_mix * de) +
                    w_cont * cont;
                if (cand < best) {
                    best = cand;
                    best_u = u;
                }
            }
            res.J.at(i, s) = best;
            res.policy.at(i, s) = best_u;
        }
    }
    return res;
}

FiniteHorizonResult solve_finite_horizon(const model::ModelSpec& m, const GridSpec& grid, int T) {
    if (T < 0) throw std::invalid_argument("horizon T must be >= 0");
    require_valid_model(m);
    FiniteHorizonResult out;
    out.J.resize(static_cast<std::size_t>(T) + 1);
    out.policy.resize(static_cast<std::size_t>(T) + 1);
    ValueTable next =
        zero_table(grid, m.channel.num_states, m.cost.beta, HorizonTag::finite(T + 1));
    for (int t = T; t >= 0; --t) {
        BackupResult step = bellman_backup(next, m, grid);
        out.folded_noise_mass = step.folded_noise_mass;
        next = step.J;
        out.J[static_cast<std::size_t>(t)] = std::move(step.J);
        out.policy[static_cast<std::size_t>(t)] = std::move(step.policy);
    }
    return out;
}

ValueIterationResult value_iteration(const model::ModelSpec& m, const GridSpec& grid, double tol,
                                     long long max_iters) {
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    require_valid_model(m);
    if (!(m.cost.beta < 1.0)) {
        throw std::invalid_argument("value iteration requires beta < 1");
    }
    ValueIterationResult out;
    ValueTable J = zero_table(grid, m.channel.num_states, m.cost.beta, HorizonTag::infinite());
    for (long long it = 0; it < max_iters; ++it) {
        BackupResult step = bellman_backup(J, m, grid);
        double diff = 0.0;
        for (std::size_t idx = 0; idx < J.values.size(); ++idx) {
            diff = std::max(diff, std::fabs(step.J.values[idx] - J.values[idx]));
        }
        out.residuals.push_back(diff);
        out.folded_noise_mass = step.folded_noise_mass;
        out.clamped_evaluations += step.clamped_evaluations;
        J = std::move(step.J);
        out.policy = std::move(step.policy);
        out.iters = it + 1;
        if (diff < tol) {
            out.J = std::move(J);
            return out;
        }
    }
    throw ConvergenceError(fmt("value iteration did not reach tol %g within %lld sweeps",
                               tol, static_cast<long long>(max_iters)));
}

double start_value(const ValueTable& J, const model::ModelSpec& m, const GridSpec& grid) {
    const NoiseGrid noise = discretize_noise(m.source.noise, grid);
    double acc = 0.0;
    for (int j = noise.lo; j <= noise.hi; ++j) {
        acc += noise.weights[static_cast<std::size_t>(j)] * J.at(j, m.reference_state);
    }
    return acc;
}

ThresholdExtraction extract_thresholds(const GridPolicy& policy, const GridSpec& grid) {
    validate_grid(grid);
    const int n = grid.n_points;
    const int ns = policy.n_states;
    const int nl = policy.n_levels;
    if (policy.n_points() != n || ns < 1 || nl < 2) {
        throw std::invalid_argument("grid policy shape does not match the grid");
    }
    const int z = grid.zero_index();

    std::vector<std::string> offenders;
    for (int s = 0; s < ns; ++s) {
        for (int i = 0; i < n && offenders.size() < 16; ++i) {
            if (policy.at(i, s) != policy.at(grid.mirror(i), s)) {
                offenders.push_back(fmt("asymmetric at (e=%g, s=%d)", grid.point(i), s));
            }
        }
        for (int i = z; i + 1 < n && offenders.size() < 16; ++i) {
            if (policy.at(i + 1, s) < policy.at(i, s)) {
                offenders.push_back(fmt("level drops at (e=%g, s=%d)", grid.point(i + 1), s));
            }
        }
    }
    if (!offenders.empty()) {
        std::string msg = "policy is not in threshold form:";
        for (const auto& o : offenders) {
            msg += ' ';
            msg += o;
            msg += ';';
        }
        throw NonThresholdPolicyError(msg);
    }

    ThresholdExtraction out;
    out.policy.k.assign(static_cast<std::size_t>(ns),
                        std::vector<double>(static_cast<std::size_t>(nl) - 1, 0.0));
    for (int s = 0; s < ns; ++s) {
        for (int level = 1; level < nl; ++level) {
            int first = -1;
            for (int i = z; i < n; ++i) {
                if (policy.at(i, s) >= level) {
                    first = i;
                    break;
                }
            }
            double k;
            if (first < 0) {
                k = grid.e_max;
                out.warnings.push_back(
                    fmt("level %d unused in state %d: threshold set to the grid bound %g",
                        level, s, grid.e_max));
            } else if (first == z) {
                k = 0.0;
            } else {
                k = 0.5 * (grid.point(first - 1) + grid.point(first));
            }
            out.policy.k[static_cast<std::size_t>(s)][static_cast<std::size_t>(level) - 1] = k;
        }
    }
    return out;
}

StructureReport check_structure(const ValueTable& J, const GridPolicy& policy,
                                const model::ModelSpec& m, double tol) {
    const int n = J.n_points();
    const int ns = J.n_states;
    StructureReport rep;

    auto mirror = [n](int i) { return n - 1 - i; };

    double worst_even = 0.0;
    std::string even_loc;
    for (int s = 0; s < ns; ++s) {
        for (int i = 0; i < n; ++i) {
            const double v = std::fabs(J.at(i, s) - J.at(mirror(i), s));
            if (v > worst_even) {
                worst_even = v;
                even_loc = fmt("evenness worst at (index %d, s=%d)", i, s);
            }
        }
    }
    rep.worst_evenness = worst_even;
    rep.value_even = worst_even <= tol;
    if (!even_loc.empty()) rep.details.push_back(even_loc);

    const int z = (n - 1) / 2;
    double worst_qc = 0.0;
    std::string qc_loc;
    for (int s = 0; s < ns; ++s) {
        for (int i = z; i + 1 < n; ++i) {
            const double v = J.at(i, s) - J.at(i + 1, s);
            if (v > worst_qc) {
                worst_qc = v;
                qc_loc = fmt("value decreases from index %d to %d in state %d", i, i + 1, s);
            }
        }
    }
    rep.worst_quasiconvexity = worst_qc;
    rep.value_quasiconvex = worst_qc <= tol;
    if (!qc_loc.empty()) rep.details.push_back(qc_loc);

    rep.monotonicity_applicable = model::is_stochastically_monotone(m.channel.Q);
    double worst_mono = 0.0;
    std::string mono_loc;
    if (rep.monotonicity_applicable) {
        for (int s = 0; s + 1 < ns; ++s) {
            for (int i = 0; i < n; ++i) {
                const double v = J.at(i, s + 1) - J.at(i, s);
                if (v > worst_mono) {
                    worst_mono = v;
                    mono_loc = fmt("value increases from state %d to %d at index %d", s, s + 1, i);
                }
            }
        }
    }
    rep.worst_state_monotonicity = worst_mono;
    rep.value_monotone_in_state = !rep.monotonicity_applicable || worst_mono <= tol;
    if (!mono_loc.empty()) rep.details.push_back(mono_loc);

    int violations = 0;
    for (int s = 0; s < policy.n_states; ++s) {
        for (int i = 0; i < n; ++i) {
            if (policy.at(i, s) != policy.at(mirror(i), s)) ++violations;
        }
        for (int i = z; i + 1 < n; ++i) {
            if (policy.at(i + 1, s) < policy.at(i, s)) ++violations;
        }
    }
    rep.policy_violations = violations;
    rep.policy_threshold_form = violations == 0;
    if (violations > 0) rep.details.push_back(fmt("policy violations: %d cells", violations));
    return rep;
}

void export_csv(const ValueTable& J, const GridPolicy& policy, const GridSpec& grid,
                std::ostream& out) {
    out << "e,s,J,u\n";
    char buf[64];
    for (int i = 0; i < grid.n_points; ++i) {
        for (int s = 0; s < J.n_states; ++s) {
            std::snprintf(buf, sizeof(buf), "%.17g,%d,%.17g,%d\n", grid.point(i), s, J.at(i, s),
                          policy.at(i, s));
            out << buf;
        }
    }
}

}  // namespace remest::dp
