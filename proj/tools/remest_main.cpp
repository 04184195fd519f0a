#include <array>
#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include "CLI11.hpp"
#include "remest/config.hpp"
#include "remest/errors.hpp"
#include "remest/workflows.hpp"

namespace {

struct SubArgs {
    CLI::App* cmd = nullptr;
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> replications;
    std::optional<int> workers;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Remote estimation over a Markov packet-drop channel: simulation-based "
                 "optimization, grid dynamic programming, and exact finite-source solves"};
    app.require_subcommand(1);

    const std::array<std::pair<const char*, const char*>, 6> subcommands = {{
        {"evaluate", "Estimate the discounted cost of a fixed threshold policy"},
        {"optimize", "Run the simulation-based threshold optimizer"},
        {"dp", "Solve the discretized dynamic program and extract thresholds"},
        {"pomdp", "Solve the finite-source belief dynamic program exactly"},
        {"table1", "Optimize and evaluate across transmission costs with replications"},
        {"validate", "Load and validate a config, then exit"},
    }};
    std::array<SubArgs, 6> args;
    for (std::size_t i = 0; i < subcommands.size(); ++i) {
        CLI::App* cmd = app.add_subcommand(subcommands[i].first, subcommands[i].second);
        args[i].cmd = cmd;
        cmd->add_option("--config", args[i].config_path, "Experiment config (JSON)")->required();
        cmd->add_option("--out", args[i].out_dir, "Output directory override");
        cmd->add_option("--seed", args[i].seed, "Seed override (drives every random stream)");
        cmd->add_option("--replications", args[i].replications, "Replication count override");
        cmd->add_option("--workers", args[i].workers, "Worker thread count override");
    }

    CLI11_PARSE(app, argc, argv);

    std::size_t chosen = 0;
    while (chosen < args.size() && !args[chosen].cmd->parsed()) ++chosen;
    const SubArgs& sub = args[chosen];
    const std::string name = subcommands[chosen].first;

    try {
        remest::config::ExperimentConfig cfg = remest::config::load_config(sub.config_path);
        remest::config::Overrides ov;
        if (!sub.out_dir.empty()) ov.output_dir = sub.out_dir;
        ov.seed = sub.seed;
        ov.replications = sub.replications;
        ov.workers = sub.workers;
        remest::config::apply_overrides(cfg, ov);

        if (name == "validate") {
            std::cout << "config OK: workflow " << remest::config::workflow_name(cfg.workflow)
                      << ", " << cfg.model.channel.num_states << " channel state(s), "
                      << cfg.model.channel.num_levels() << " power level(s), seed " << cfg.seed
                      << "\n";
            return 0;
        }
        if (remest::config::workflow_name(cfg.workflow) != name) {
            std::cerr << "error: config declares workflow '"
                      << remest::config::workflow_name(cfg.workflow) << "' but the '" << name
                      << "' subcommand was invoked\n";
            return 1;
        }

        const int status = remest::cli::run_workflow(cfg, std::cerr);
        if (status == 0) {
            std::cout << "wrote " << cfg.output_dir << "/summary.json\n";
        }
        return status;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
