#pragma once

#include <map>
#include <string>

#include "trapmodes/trap_model.hpp"

namespace trapmodes {

// Everything one invocation needs, resolved from flags. The seed is recorded
// in every output file; seed 0 means the deterministic default start.
struct RunManifest {
    enum class Command { relax, modes, micromotion, sweep, evolve };

    std::string config_path;
    Command command = Command::relax;
    std::string output_dir = ".";
    unsigned seed = 0;
    int jobs = 1;
    std::map<std::string, std::string> overrides;  // dotted config path -> value

    double a_min = 0.0, a_max = 0.0;
    double q_min = 0.0, q_max = 0.0;
    int a_count = 1, q_count = 1;
};

/// Config file + overrides -> validated TrapConfig. Throws ConfigError on
/// unreadable files, bad JSON, or override paths that do not parse.
TrapConfig load_config(const RunManifest& manifest);

int cmd_relax(const RunManifest& manifest);
int cmd_modes(const RunManifest& manifest);
int cmd_micromotion(const RunManifest& manifest);
int cmd_sweep(const RunManifest& manifest);
int cmd_evolve(const RunManifest& manifest);

/// Flag parsing + dispatch. Returns the process exit code:
/// 0 success, 2 no crystal, 3 unstable crystal, 4 I/O or config error.
int run_cli(int argc, char** argv);

}  // namespace trapmodes
