// fclt: simulation and bound evaluation for functional CLTs obtained through
// exchangeable pairs. Experiments are described by a self-describing JSON
// config (see README for the schema); quick runs can instead use the inline
// --kind/--n/--p/--rs flags.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fclt/experiment.hpp"

namespace {

std::string default_action(const std::string& subcommand) {
    if (subcommand == "simulate") return "simulate";
    if (subcommand == "bound") return "bound";
    if (subcommand == "verify") return "verify-covariance";
    return "rate-study";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fclt: process simulation and Gaussian-approximation bound evaluation"};
    app.require_subcommand(1);

    std::string config_path, kind, action, rs_list, out_dir;
    fclt::ExperimentOverrides overrides;
    std::uint64_t seed = 0;
    int reps = 0, threads = 0, n = 0;
    double p = 0.5;
    bool emit_svg = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config JSON path");
        sub->add_option("--kind", kind, "inline spec kind: runs | graph | homsum");
        sub->add_option("--action", action, "experiment action (defaults per subcommand)");
        sub->add_option("--n", n, "inline spec size");
        sub->add_option("--p", p, "inline success/edge probability");
        sub->add_option("--rs", rs_list, "inline runs orders as a comma list, e.g. 2,1");
        sub->add_option("--out", out_dir, "output directory for report and artifacts");
        sub->add_option("--seed", seed, "master seed override");
        sub->add_option("--reps", reps, "replication count override");
        sub->add_option("--threads", threads, "worker thread cap");
        sub->add_flag("--emit-svg", emit_svg, "emit a log-log chart for rate studies");
    };

    CLI::App* sim = app.add_subcommand("simulate", "draw one path of the configured process");
    CLI::App* bound = app.add_subcommand("bound", "evaluate the configured theorem bounds");
    CLI::App* verify = app.add_subcommand("verify", "run a verification experiment");
    CLI::App* rate = app.add_subcommand("rate", "run a rate study");
    for (CLI::App* sub : {sim, bound, verify, rate}) add_common(sub);

    CLI11_PARSE(app, argc, argv);

    CLI::App* active = nullptr;
    for (CLI::App* sub : {sim, bound, verify, rate})
        if (sub->parsed()) active = sub;
    if (active == nullptr) return 2;

    std::string config;
    if (active->count("--config")) {
        std::ifstream f(config_path);
        if (!f) {
            std::cerr << "error: cannot open config file " << config_path << "\n";
            return 2;
        }
        std::stringstream buf;
        buf << f.rdbuf();
        config = buf.str();
    } else {
        // synthesize a config from the inline flags
        if (kind.empty() || n == 0) {
            std::cerr << "error: either --config or --kind with --n is required\n";
            return 2;
        }
        nlohmann::json cfg;
        cfg["kind"] = kind;
        cfg["action"] = active->count("--action") ? action : default_action(active->get_name());
        nlohmann::json spec;
        spec["n"] = n;
        if (kind == "runs") {
            spec["p"] = p;
            std::vector<int> rs;
            std::stringstream ss(rs_list);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                if (!tok.empty()) rs.push_back(std::stoi(tok));
            }
            if (rs.empty()) {
                std::cerr << "error: --rs comma list required for kind runs\n";
                return 2;
            }
            spec["rs"] = rs;
        } else if (kind == "graph") {
            spec["p"] = p;
        } else if (kind == "homsum") {
            spec["orders"] = std::vector<int>{1, 2};
        } else {
            std::cerr << "error: inline flags support kinds runs|graph|homsum\n";
            return 2;
        }
        cfg[kind] = spec;
        config = cfg.dump();
    }

    // reject configs whose action belongs to a different subcommand
    {
        std::string cfg_action;
        try {
            const auto j = nlohmann::json::parse(config);
            cfg_action = j.value("action", std::string());
        } catch (...) {
            // leave full diagnostics to run_experiment
        }
        if (!cfg_action.empty() &&
            !fclt::action_matches_subcommand(cfg_action, active->get_name())) {
            std::cerr << "error: config action \"" << cfg_action
                      << "\" does not belong to subcommand \"" << active->get_name() << "\"\n";
            return 2;
        }
    }

    if (active->count("--seed")) overrides.seed = seed;
    if (active->count("--reps")) overrides.reps = reps;
    if (active->count("--threads")) overrides.threads = threads;
    if (active->count("--out")) overrides.out_dir = out_dir;
    if (active->count("--emit-svg")) overrides.emit_svg = emit_svg;

    const auto res = fclt::run_experiment(config, overrides);
    if (!res.report_json.empty()) std::cout << res.report_json;
    if (res.exit_code != 0 && !res.error.empty()) std::cerr << "error: " << res.error << "\n";
    return res.exit_code;
}
