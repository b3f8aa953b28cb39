// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "mlmkit/config.hpp"

namespace mlmkit {

/// One CLI invocation: subcommand plus configuration sources in precedence
/// order preset < config file < overrides. Artifacts land under run_dir.
struct RunRequest {
    std::string subcommand;
    std::string preset;                  // named preset, may be empty
    std::string config_path;             // config file, may be empty
    std::vector<std::string> overrides;  // "section.key=value" entries
    std::string run_dir;
};

/// Executes the subcommand, writing the resolved config snapshot, logs, and
/// result CSVs under run_dir. Throws the usual error taxonomy; the CLI and C
/// API translate kinds into exit codes.
void run_command(const RunRequest& request);

const std::vector<std::string>& subcommand_names();
const std::vector<std::string>& preset_names();
/// Raw preset text (ConfigError for unknown names).
std::string preset_text(const std::string& name);

}  // namespace mlmkit
