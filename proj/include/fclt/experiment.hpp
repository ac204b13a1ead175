#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace fclt {

struct ExperimentOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> reps;
    std::optional<int> threads;
    std::optional<std::string> out_dir;
    std::optional<bool> emit_svg;
};

struct ExperimentResult {
    int exit_code = 0;          // 0 ok, 2 config error, 3 numerical, 4 verify violation
    std::string report_json;    // {"result": {...}, "metadata": {...}}
    std::string error;          // populated when exit_code != 0 and no report exists
};

// Runs one experiment described by a self-describing JSON config:
//   kind:   "runs" | "graph" | "homsum" | "uprocess"
//   action: "simulate" | "bound" | "verify-covariance" | "verify-regression"
//         | "verify-distance" | "rate-study"
// plus a spec object keyed by the kind name and action parameters. Unknown
// fields are rejected. Reports are byte-identical for identical config+seed
// regardless of the thread count; volatile fields live under "metadata".
ExperimentResult run_experiment(const std::string& config_json,
                                const ExperimentOverrides& overrides = {});

// Expected action family for a CLI subcommand ("simulate", "bound", "verify",
// "rate"); returns false when the config action does not belong to it.
bool action_matches_subcommand(const std::string& action, const std::string& subcommand);

}  // namespace fclt
