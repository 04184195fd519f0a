#include "remest/sim.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>
#include <vector>

#include "remest/errors.hpp"

namespace remest::sim {

namespace {

// Flat, cache-friendly copy of the model for the per-step loop.
struct CompiledModel {
    double a = 1.0;
    bool gaussian_noise = true;
    double sigma = 1.0;
    std::vector<double> noise_value;
    std::vector<double> noise_cdf;
    int n_states = 1;
    int n_levels = 1;  // m + 1
    std::vector<double> q_cdf;  // row-major cumulative rows
    std::vector<double> drop;   // n_states x n_levels
    std::vector<double> lam;
    bool squared_distortion = true;
    model::DistortionSpec distortion;
    double beta = 0.9;
    int s_ref = 0;
};

CompiledModel compile(const model::ModelSpec& m) {
    CompiledModel cm;
    cm.a = m.source.a;
    cm.gaussian_noise = m.source.noise.kind == model::NoiseSpec::Kind::gaussian;
    cm.sigma = m.source.noise.sigma;
    if (!cm.gaussian_noise) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m.source.noise.pmf.size(); ++i) {
            acc += m.source.noise.pmf[i];
            cm.noise_value.push_back(m.source.noise.support[i]);
            cm.noise_cdf.push_back(acc);
        }
        cm.noise_cdf.back() = 1.0;
    }
    cm.n_states = m.channel.num_states;
    cm.n_levels = m.channel.num_levels();
    cm.q_cdf.resize(static_cast<std::size_t>(cm.n_states) * cm.n_states);
    for (int s = 0; s < cm.n_states; ++s) {
        double acc = 0.0;
        for (int t = 0; t < cm.n_states; ++t) {
            acc += m.channel.Q[s][t];
            cm.q_cdf[static_cast<std::size_t>(s) * cm.n_states + t] = acc;
        }
        cm.q_cdf[static_cast<std::size_t>(s) * cm.n_states + cm.n_states - 1] = 1.0;
    }
    cm.drop.resize(static_cast<std::size_t>(cm.n_states) * cm.n_levels);
    for (int s = 0; s < cm.n_states; ++s)
        for (int u = 0; u < cm.n_levels; ++u)
            cm.drop[static_cast<std::size_t>(s) * cm.n_levels + u] = m.channel.drop[s][u];
    cm.lam = m.channel.tx_cost;
    cm.squared_distortion =
        m.cost.distortion.kind == model::DistortionSpec::Kind::power && m.cost.distortion.p == 2.0;
    cm.distortion = m.cost.distortion;
    cm.beta = m.cost.beta;
    cm.s_ref = m.reference_state;
    return cm;
}

inline double draw_noise(const CompiledModel& cm, Rng& rng) {
    if (cm.gaussian_noise) return cm.sigma * rng.gaussian();
    const double u = rng.uniform01();
    std::size_t i = 0;
    while (u >= cm.noise_cdf[i]) ++i;
    return cm.noise_value[i];
}

inline int draw_state(const CompiledModel& cm, int s, Rng& rng) {
    const double u = rng.uniform01();
    const double* row = cm.q_cdf.data() + static_cast<std::size_t>(s) * cm.n_states;
    int t = 0;
    while (u >= row[t]) ++t;
    return t < cm.n_states ? t : cm.n_states - 1;
}

struct CycleResult {
    double l = 0.0;
    double m = 0.0;
    double beta_tau = 1.0;
    bool capped = false;
};

struct CycleLoopParams {
    long long max_cycle_len;
    double cutoff;
};

CycleResult run_one_cycle(const CompiledModel& cm, const std::vector<double>& thr, int n_thr,
                          const CycleLoopParams& lp, Rng& rng) {
    CycleResult out;
    double eplus = 0.0;
    int s = cm.s_ref;
    double bt = 1.0;
    long long t = 0;
    for (;;) {
        const double w = draw_noise(cm, rng);
        const double e = cm.a * eplus + w;
        const double abs_e = std::fabs(e);
        const double* ks = thr.data() + static_cast<std::size_t>(s) * n_thr;
        int u = 0;
        while (u < n_thr && ks[u] <= abs_e) ++u;
        const int snew = draw_state(cm, s, rng);
        bool delivered = false;
        if (u > 0) {
            const double pd = cm.drop[static_cast<std::size_t>(snew) * cm.n_levels + u];
            delivered = rng.uniform01() >= pd;
        }
        eplus = delivered ? 0.0 : e;
        double cost = cm.lam[u];
        cost += cm.squared_distortion ? eplus * eplus : model::evaluate_distortion(cm.distortion, eplus);
        out.l += bt * cost;
        out.m += bt;
        bt *= cm.beta;
        s = snew;
        ++t;
        if (delivered && snew == cm.s_ref) break;
        if (t >= lp.max_cycle_len) {
            out.capped = true;
            break;
        }
        if (bt < lp.cutoff) break;
    }
    out.beta_tau = bt;
    return out;
}

struct ChunkSums {
    double l = 0.0, m = 0.0, ll = 0.0, mm = 0.0, lm = 0.0, bt = 0.0, bt2 = 0.0;
    long long capped = 0;
};

constexpr long long kChunk = 1024;

void require_valid(const model::ModelSpec& m, const model::ThresholdPolicy& policy) {
    auto issues = model::validate_model(m);
    auto pol = model::validate_policy(policy, m.channel);
    issues.insert(issues.end(), pol.begin(), pol.end());
    if (!issues.empty()) {
        std::string joined = "invalid model/policy:";
        for (const auto& s : issues) {
            joined += ' ';
            joined += s;
            joined += ';';
        }
        throw std::invalid_argument(joined);
    }
}

}  // namespace

CycleEstimate run_cycles(const model::ModelSpec& m, const model::ThresholdPolicy& policy,
                         const SimConfig& cfg) {
    return run_cycles(m, policy, cfg, cfg.seed);
}

CycleEstimate run_cycles(const model::ModelSpec& m, const model::ThresholdPolicy& policy,
                         const SimConfig& cfg, std::uint64_t seed) {
    if (cfg.n_cycles < 1) throw std::invalid_argument("n_cycles must be >= 1");
    if (cfg.max_cycle_len < 1) throw std::invalid_argument("max_cycle_len must be >= 1");
    require_valid(m, policy);

    CompiledModel cm = compile(m);
    cm.beta = cfg.beta;
    const int n_thr = policy.num_thresholds();
    std::vector<double> thr;
    for (const auto& row : policy.k) thr.insert(thr.end(), row.begin(), row.end());

    CycleLoopParams lp;
    lp.max_cycle_len = cfg.max_cycle_len;
    lp.cutoff = (cfg.beta < 1.0) ? cfg.discount_cutoff : 0.0;

    const long long n = cfg.n_cycles;
    const long long n_chunks = (n + kChunk - 1) / kChunk;
    std::vector<ChunkSums> partial(static_cast<std::size_t>(n_chunks));
    std::atomic<long long> next_chunk{0};
    std::atomic<long long> capped_total{0};
    const long long degenerate_at = n / 2;

    auto work = [&]() {
        for (;;) {
            const long long c = next_chunk.fetch_add(1);
            if (c >= n_chunks) return;
            if (capped_total.load(std::memory_order_relaxed) > degenerate_at) return;
            ChunkSums sums;
            const long long lo = c * kChunk;
            const long long hi = std::min(n, lo + kChunk);
            for (long long i = lo; i < hi; ++i) {
                Rng rng(derive_stream(seed, static_cast<std::uint64_t>(i)));
                const CycleResult r = run_one_cycle(cm, thr, n_thr, lp, rng);
                sums.l += r.l;
                sums.m += r.m;
                sums.ll += r.l * r.l;
                sums.mm += r.m * r.m;
                sums.lm += r.l * r.m;
                sums.bt += r.beta_tau;
                sums.bt2 += r.beta_tau * r.beta_tau;
                if (r.capped) ++sums.capped;
            }
            partial[static_cast<std::size_t>(c)] = sums;
            if (sums.capped) capped_total.fetch_add(sums.capped, std::memory_order_relaxed);
        }
    };

    const int workers = std::max(1, cfg.workers);
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int i = 0; i < workers; ++i) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }

    if (capped_total.load() > degenerate_at) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "degenerate policy: more than half of cycles hit the %lld-step cap before "
                      "regenerating at state %d",
                      static_cast<long long>(cfg.max_cycle_len), m.reference_state);
        throw DegeneratePolicyError(buf);
    }

    ChunkSums total;
    for (const auto& p : partial) {
        total.l += p.l;
        total.m += p.m;
        total.ll += p.ll;
        total.mm += p.mm;
        total.lm += p.lm;
        total.bt += p.bt;
        total.bt2 += p.bt2;
        total.capped += p.capped;
    }

    CycleEstimate est;
    est.n_cycles = n;
    est.capped_cycles = total.capped;
    const double dn = static_cast<double>(n);
    est.l_hat = total.l / dn;
    est.m_hat = total.m / dn;
    est.c_hat = est.l_hat / est.m_hat;
    est.mean_beta_tau = total.bt / dn;
    if (n > 1) {
        const double var_l = std::max(0.0, (total.ll - dn * est.l_hat * est.l_hat) / (dn - 1.0));
        const double var_m = std::max(0.0, (total.mm - dn * est.m_hat * est.m_hat) / (dn - 1.0));
        const double cov = (total.lm - dn * est.l_hat * est.m_hat) / (dn - 1.0);
        const double var_bt = std::max(0.0, (total.bt2 - dn * est.mean_beta_tau * est.mean_beta_tau) / (dn - 1.0));
        est.se_l = std::sqrt(var_l / dn);
        est.se_m = std::sqrt(var_m / dn);
        est.se_beta_tau = std::sqrt(var_bt / dn);
        const double var_c =
            std::max(0.0, var_l - 2.0 * est.c_hat * cov + est.c_hat * est.c_hat * var_m);
        est.se_c = std::sqrt(var_c / dn) / est.m_hat;
    }
    return est;
}

double check_renewal_identity(const CycleEstimate& est, double beta) {
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must be in (0, 1)");
    return est.mean_beta_tau - (1.0 - (1.0 - beta) * est.m_hat);
}

DirectEstimate estimate_cost_direct(const model::ModelSpec& m, const model::ThresholdPolicy& policy,
                                    long long horizon, long long reps, std::uint64_t seed) {
    const double beta = m.cost.beta;
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("direct estimator requires beta in (0, 1)");
    if (horizon < 1 || std::pow(beta, static_cast<double>(horizon)) >= 1e-6) {
        throw std::invalid_argument("horizon too short: beta^horizon must be < 1e-6");
    }
    if (reps < 1) throw std::invalid_argument("reps must be >= 1");
    require_valid(m, policy);

    CompiledModel cm = compile(m);
    const int n_thr = policy.num_thresholds();
    std::vector<double> thr;
    for (const auto& row : policy.k) thr.insert(thr.end(), row.begin(), row.end());

    double sum = 0.0, sum2 = 0.0;
    for (long long r = 0; r < reps; ++r) {
        Rng rng(derive_stream(seed, static_cast<std::uint64_t>(r), 0x64697265ULL));
        double eplus = 0.0;
        int s = cm.s_ref;
        double bt = 1.0;
        double acc = 0.0;
        for (long long t = 0; t < horizon; ++t) {
            const double w = draw_noise(cm, rng);
            const double e = cm.a * eplus + w;
            const double abs_e = std::fabs(e);
            const double* ks = thr.data() + static_cast<std::size_t>(s) * n_thr;
            int u = 0;
            while (u < n_thr && ks[u] <= abs_e) ++u;
            const int snew = draw_state(cm, s, rng);
            bool delivered = false;
            if (u > 0) {
                const double pd = cm.drop[static_cast<std::size_t>(snew) * cm.n_levels + u];
                delivered = rng.uniform01() >= pd;
            }
            eplus = delivered ? 0.0 : e;
            double cost = cm.lam[u];
            cost += cm.squared_distortion ? eplus * eplus
                                          : model::evaluate_distortion(cm.distortion, eplus);
            acc += bt * cost;
            bt *= beta;
            s = snew;
        }
        const double x = (1.0 - beta) * acc;
        sum += x;
        sum2 += x * x;
    }
    DirectEstimate out;
    const double dn = static_cast<double>(reps);
    out.value = sum / dn;
    if (reps > 1) {
        const double var = std::max(0.0, (sum2 - dn * out.value * out.value) / (dn - 1.0));
        out.se = std::sqrt(var / dn);
    }
    return out;
}

}  // namespace remest::sim
