#pragma once

#include <iosfwd>

#include "remest/config.hpp"

namespace remest::cli {

/// Runs the configured workflow and writes its artifacts under
/// cfg.output_dir: always a summary.json embedding the resolved config (so
/// the summary itself reloads as a config), plus per-workflow CSV or text
/// outputs. All files are written atomically. Returns the process exit
/// status: 0 on success; on any module error a machine-readable error.json
/// is written (best effort), the message goes to `err`, and the status is 1.
int run_workflow(const config::ExperimentConfig& cfg, std::ostream& err);

}  // namespace remest::cli
