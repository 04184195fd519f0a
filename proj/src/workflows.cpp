#include "remest/workflows.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "remest/dp.hpp"
#include "remest/errors.hpp"
#include "remest/pomdp.hpp"
#include "remest/rmc.hpp"
#include "remest/rng.hpp"
#include "remest/sim.hpp"

namespace remest::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using config::ExperimentConfig;

// Stream tag for the post-optimization policy evaluation; far outside the
// iteration indices the optimizer itself feeds into derive_stream.
constexpr std::uint64_t kStreamFinalEval = 0x66696e616cULL;
// Stream tag base for table rows: each (row, replication) pair gets one
// optimizer stream at base + 2*row and one evaluation stream at
// base + 2*row + 1, so streams never collide across rows.
constexpr std::uint64_t kStreamTableBase = 0x74626c31ULL;

std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_file_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

double elapsed_seconds(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ordered_json summary_base(const ExperimentConfig& cfg, double runtime_seconds) {
    ordered_json j;
    j["workflow"] = config::workflow_name(cfg.workflow);
    j["seed"] = cfg.seed;
    j["runtime_seconds"] = runtime_seconds;
    return j;
}

void finish_summary(ordered_json& j, const ExperimentConfig& cfg, const fs::path& dir) {
    j["config"] = ordered_json::parse(config::resolved_config_json(cfg));
    write_file_atomic(dir / "summary.json", j.dump(2) + "\n");
}

std::vector<std::string> threshold_column_names(const model::ThresholdPolicy& k) {
    std::vector<std::string> names;
    for (int s = 0; s < k.num_states(); ++s) {
        for (int i = 0; i < k.num_thresholds(); ++i) {
            names.push_back("k_s" + std::to_string(s) + "_u" + std::to_string(i + 1));
        }
    }
    return names;
}

std::string estimate_csv(const sim::CycleEstimate& est) {
    std::string csv =
        "l_hat,m_hat,c_hat,n_cycles,se_l,se_m,se_c,mean_beta_tau,se_beta_tau,capped_cycles\n";
    csv += fmt_double(est.l_hat) + "," + fmt_double(est.m_hat) + "," + fmt_double(est.c_hat) + "," +
           std::to_string(est.n_cycles) + "," + fmt_double(est.se_l) + "," + fmt_double(est.se_m) +
           "," + fmt_double(est.se_c) + "," + fmt_double(est.mean_beta_tau) + "," +
           fmt_double(est.se_beta_tau) + "," + std::to_string(est.capped_cycles) + "\n";
    return csv;
}

std::string trace_csv(const rmc::IterateTrace& trace, const model::ThresholdPolicy& shape,
                      long long stride) {
    const auto names = threshold_column_names(shape);
    const std::size_t width = names.size();
    std::string csv = "iteration";
    for (const auto& n : names) csv += "," + n;
    csv += ",l_hat,m_hat,c_hat";
    for (const auto& n : names) csv += ",n_hat_" + n.substr(2);
    csv += ",value_seed,plus_seed,minus_seed,degenerate\n";
    for (const auto& row : trace.rows) {
        if (row.iteration % stride != 0) continue;
        csv += std::to_string(row.iteration);
        for (std::size_t i = 0; i < width; ++i) {
            csv += "," + fmt_double(i < row.k.size() ? row.k[i] : 0.0);
        }
        csv += "," + fmt_double(row.l_hat) + "," + fmt_double(row.m_hat) + "," +
               fmt_double(row.c_hat);
        for (std::size_t i = 0; i < width; ++i) {
            csv += "," + fmt_double(i < row.n_hat.size() ? row.n_hat[i] : 0.0);
        }
        csv += "," + std::to_string(row.value_seed) + "," + std::to_string(row.plus_seed) + "," +
               std::to_string(row.minus_seed) + "," + (row.degenerate ? "1" : "0");
        csv += "\n";
    }
    return csv;
}

ordered_json estimate_json(const sim::CycleEstimate& est) {
    ordered_json j;
    j["l_hat"] = est.l_hat;
    j["m_hat"] = est.m_hat;
    j["c_hat"] = est.c_hat;
    j["c_two_sigma"] = 2.0 * est.se_c;
    j["se_l"] = est.se_l;
    j["se_m"] = est.se_m;
    j["se_c"] = est.se_c;
    j["n_cycles"] = est.n_cycles;
    j["mean_beta_tau"] = est.mean_beta_tau;
    j["capped_cycles"] = est.capped_cycles;
    return j;
}

int wf_evaluate(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path dir = cfg.output_dir;
    const sim::CycleEstimate est = sim::run_cycles(cfg.model, cfg.policy, cfg.sim);
    write_file_atomic(dir / "evaluate.csv", estimate_csv(est));

    ordered_json j = summary_base(cfg, elapsed_seconds(t0));
    j["thresholds"] = cfg.policy.k;
    j["estimate"] = estimate_json(est);
    j["artifacts"] = {"evaluate.csv"};
    finish_summary(j, cfg, dir);
    return 0;
}

int wf_optimize(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path dir = cfg.output_dir;
    const rmc::OptimizeResult res = rmc::optimize(cfg.model, cfg.policy, cfg.rmc);
    write_file_atomic(dir / "trace.csv", trace_csv(res.trace, cfg.policy, cfg.trace_stride));

    sim::SimConfig final_cfg = cfg.sim;
    final_cfg.seed = derive_stream(cfg.seed, kStreamFinalEval);
    const sim::CycleEstimate est = sim::run_cycles(cfg.model, res.k_final, final_cfg);
    write_file_atomic(dir / "final_estimate.csv", estimate_csv(est));

    ordered_json j = summary_base(cfg, elapsed_seconds(t0));
    j["initial_thresholds"] = cfg.policy.k;
    j["final_thresholds"] = res.k_final.k;
    j["iterations"] = cfg.rmc.iterations;
    j["final_estimate"] = estimate_json(est);
    j["final_eval_seed"] = final_cfg.seed;
    j["artifacts"] = {"trace.csv", "final_estimate.csv"};
    finish_summary(j, cfg, dir);
    return 0;
}

ordered_json structure_json(const dp::StructureReport& rep) {
    ordered_json j;
    j["value_even"] = rep.value_even;
    j["value_quasiconvex"] = rep.value_quasiconvex;
    j["value_monotone_in_state"] = rep.value_monotone_in_state;
    j["policy_threshold_form"] = rep.policy_threshold_form;
    j["monotonicity_applicable"] = rep.monotonicity_applicable;
    j["worst_evenness"] = rep.worst_evenness;
    j["worst_quasiconvexity"] = rep.worst_quasiconvexity;
    j["worst_state_monotonicity"] = rep.worst_state_monotonicity;
    j["policy_violations"] = rep.policy_violations;
    j["details"] = rep.details;
    return j;
}

int wf_dp(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path dir = cfg.output_dir;

    ordered_json j;
    const dp::GridSpec& grid = cfg.dp.grid;
    if (cfg.dp.horizon >= 0) {
        const dp::FiniteHorizonResult fh = dp::solve_finite_horizon(cfg.model, grid, cfg.dp.horizon);
        const auto extraction = dp::extract_thresholds(fh.policy[0], grid);
        const auto structure = dp::check_structure(fh.J[0], fh.policy[0], cfg.model, 1e-9);
        std::ostringstream table;
        dp::export_csv(fh.J[0], fh.policy[0], grid, table);
        write_file_atomic(dir / "dp_table.csv", table.str());

        j = summary_base(cfg, elapsed_seconds(t0));
        j["horizon"] = cfg.dp.horizon;
        j["thresholds"] = extraction.policy.k;
        j["threshold_warnings"] = extraction.warnings;
        j["start_value"] = dp::start_value(fh.J[0], cfg.model, grid);
        j["folded_noise_mass"] = fh.folded_noise_mass;
        j["structure"] = structure_json(structure);
    } else {
        const dp::ValueIterationResult vi =
            dp::value_iteration(cfg.model, grid, cfg.dp.tolerance, cfg.dp.max_iterations);
        const auto extraction = dp::extract_thresholds(vi.policy, grid);
        const auto structure =
            dp::check_structure(vi.J, vi.policy, cfg.model, 10.0 * cfg.dp.tolerance);
        std::ostringstream table;
        dp::export_csv(vi.J, vi.policy, grid, table);
        write_file_atomic(dir / "dp_table.csv", table.str());

        j = summary_base(cfg, elapsed_seconds(t0));
        j["thresholds"] = extraction.policy.k;
        j["threshold_warnings"] = extraction.warnings;
        j["start_value"] = dp::start_value(vi.J, cfg.model, grid);
        j["iterations"] = vi.iters;
        j["final_residual"] = vi.residuals.empty() ? 0.0 : vi.residuals.back();
        j["folded_noise_mass"] = vi.folded_noise_mass;
        j["clamped_evaluations"] = vi.clamped_evaluations;
        j["structure"] = structure_json(structure);
    }
    j["artifacts"] = {"dp_table.csv"};
    finish_summary(j, cfg, dir);
    return 0;
}

int wf_pomdp(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path dir = cfg.output_dir;
    const pomdp::Belief init =
        pomdp::make_belief(cfg.pomdp.initial_belief, pomdp::Belief::Kind::pre);
    const pomdp::SolveResult res = pomdp::solve_common_info_dp(
        cfg.pomdp.source, cfg.model.channel, cfg.pomdp.horizon, init, cfg.pomdp.initial_state);

    std::ostringstream tree;
    pomdp::export_tree(res, tree);
    write_file_atomic(dir / "tree.txt", tree.str());

    ordered_json j = summary_base(cfg, elapsed_seconds(t0));
    j["value"] = res.value;
    j["nodes"] = res.tree.size();
    j["root_prescription"] = res.tree.back().phi.u;
    j["artifacts"] = {"tree.txt"};
    finish_summary(j, cfg, dir);
    return 0;
}

struct TableRep {
    model::ThresholdPolicy k_final;
    sim::CycleEstimate final_eval;
    std::uint64_t opt_seed = 0;
    std::uint64_t eval_seed = 0;
    rmc::IterateTrace trace;  // kept for the first replication of each row
};

struct MeanSpread {
    double mean = 0.0;
    double two_sigma = 0.0;  // twice the sample standard deviation
};

MeanSpread mean_spread(const std::vector<double>& xs) {
    MeanSpread out;
    const double n = static_cast<double>(xs.size());
    for (double x : xs) out.mean += x;
    out.mean /= n;
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - out.mean) * (x - out.mean);
        out.two_sigma = 2.0 * std::sqrt(ss / (n - 1.0));
    }
    return out;
}

int wf_table1(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path dir = cfg.output_dir;
    const std::size_t n_rows = cfg.table1.lambda1.size();
    const std::size_t reps = static_cast<std::size_t>(cfg.replications);
    const std::size_t n_jobs = n_rows * reps;
    std::vector<TableRep> results(n_jobs);

    // Each replication is its own job on a derived stream; results land in a
    // fixed slot so the merge order never depends on scheduling.
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto run_job = [&](std::size_t job) {
        const std::size_t li = job / reps;
        const std::size_t rep = job % reps;
        model::ModelSpec m = cfg.model;
        m.channel.tx_cost[1] = cfg.table1.lambda1[li];

        rmc::RmcConfig opt_cfg = cfg.rmc;
        opt_cfg.workers = 1;
        opt_cfg.seed = derive_stream(cfg.seed, kStreamTableBase + 2 * li, rep);
        const rmc::OptimizeResult opt = rmc::optimize(m, cfg.policy, opt_cfg);

        sim::SimConfig eval_cfg;
        eval_cfg.n_cycles = cfg.table1.eval_cycles;
        eval_cfg.beta = m.cost.beta;
        eval_cfg.max_cycle_len = cfg.rmc.max_cycle_len;
        eval_cfg.discount_cutoff = cfg.rmc.discount_cutoff;
        eval_cfg.workers = 1;
        eval_cfg.seed = derive_stream(cfg.seed, kStreamTableBase + 2 * li + 1, rep);

        TableRep out;
        out.k_final = opt.k_final;
        out.final_eval = sim::run_cycles(m, opt.k_final, eval_cfg);
        out.opt_seed = opt_cfg.seed;
        out.eval_seed = eval_cfg.seed;
        if (rep == 0) out.trace = opt.trace;
        results[job] = std::move(out);
    };
    auto worker = [&] {
        for (std::size_t job = next.fetch_add(1); job < n_jobs; job = next.fetch_add(1)) {
            try {
                run_job(job);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), n_jobs);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    std::string table_csv = "lambda1,k0_mean,k0_2sigma,k1_mean,k1_2sigma,C_mean,C_2sigma\n";
    std::string reps_csv = "lambda1,replication,opt_seed,eval_seed,k0,k1,c_hat,se_c\n";
    ordered_json rows = ordered_json::array();
    std::vector<std::string> trace_files;
    for (std::size_t li = 0; li < n_rows; ++li) {
        std::vector<double> k0s, k1s, cs;
        for (std::size_t rep = 0; rep < reps; ++rep) {
            const TableRep& r = results[li * reps + rep];
            k0s.push_back(r.k_final.k[0][0]);
            k1s.push_back(r.k_final.k[1][0]);
            cs.push_back(r.final_eval.c_hat);
            reps_csv += fmt_double(cfg.table1.lambda1[li]) + "," + std::to_string(rep) + "," +
                        std::to_string(r.opt_seed) + "," + std::to_string(r.eval_seed) + "," +
                        fmt_double(r.k_final.k[0][0]) + "," + fmt_double(r.k_final.k[1][0]) + "," +
                        fmt_double(r.final_eval.c_hat) + "," + fmt_double(r.final_eval.se_c) + "\n";
        }
        const MeanSpread k0 = mean_spread(k0s);
        const MeanSpread k1 = mean_spread(k1s);
        const MeanSpread c = mean_spread(cs);
        table_csv += fmt_double(cfg.table1.lambda1[li]) + "," + fmt_double(k0.mean) + "," +
                     fmt_double(k0.two_sigma) + "," + fmt_double(k1.mean) + "," +
                     fmt_double(k1.two_sigma) + "," + fmt_double(c.mean) + "," +
                     fmt_double(c.two_sigma) + "\n";

        const std::string trace_name =
            "trace_lambda" + fmt_double(cfg.table1.lambda1[li]) + "_rep0.csv";
        write_file_atomic(dir / trace_name,
                          trace_csv(results[li * reps].trace, cfg.policy, cfg.table1.trace_stride));
        trace_files.push_back(trace_name);

        ordered_json row;
        row["lambda1"] = cfg.table1.lambda1[li];
        row["k0_mean"] = k0.mean;
        row["k0_2sigma"] = k0.two_sigma;
        row["k1_mean"] = k1.mean;
        row["k1_2sigma"] = k1.two_sigma;
        row["C_mean"] = c.mean;
        row["C_2sigma"] = c.two_sigma;
        rows.push_back(row);
    }
    write_file_atomic(dir / "table1.csv", table_csv);
    write_file_atomic(dir / "replications.csv", reps_csv);

    ordered_json j = summary_base(cfg, elapsed_seconds(t0));
    j["assumptions"] = {
        "distortion d(e) = |e|^2 (the source experiment's d is not recoverable; a different "
        "d shifts every reported threshold and cost systematically)"};
    j["replications"] = cfg.replications;
    j["eval_cycles"] = cfg.table1.eval_cycles;
    j["rows"] = rows;
    ordered_json artifacts = {"table1.csv", "replications.csv"};
    for (const auto& t : trace_files) artifacts.push_back(t);
    j["artifacts"] = artifacts;
    finish_summary(j, cfg, dir);
    return 0;
}

const char* classify_error(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return "config";
    if (dynamic_cast<const DegeneratePolicyError*>(&e)) return "degenerate_policy";
    if (dynamic_cast<const NonThresholdPolicyError*>(&e)) return "non_threshold_policy";
    if (dynamic_cast<const ConvergenceError*>(&e)) return "convergence";
    if (dynamic_cast<const BudgetError*>(&e)) return "budget";
    if (dynamic_cast<const std::invalid_argument*>(&e)) return "invalid_argument";
    return "runtime";
}

}  // namespace

int run_workflow(const ExperimentConfig& cfg, std::ostream& err) {
    try {
        switch (cfg.workflow) {
            case config::Workflow::evaluate: return wf_evaluate(cfg);
            case config::Workflow::optimize: return wf_optimize(cfg);
            case config::Workflow::dp: return wf_dp(cfg);
            case config::Workflow::pomdp: return wf_pomdp(cfg);
            case config::Workflow::table1: return wf_table1(cfg);
        }
        err << "error: unhandled workflow\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        try {
            ordered_json j;
            j["error"]["type"] = classify_error(e);
            j["error"]["message"] = e.what();
            j["workflow"] = config::workflow_name(cfg.workflow);
            j["seed"] = cfg.seed;
            write_file_atomic(fs::path(cfg.output_dir) / "error.json", j.dump(2) + "\n");
        } catch (...) {
            // The error report is best effort; the exit status carries the failure.
        }
        return 1;
    }
}

}  // namespace remest::cli
