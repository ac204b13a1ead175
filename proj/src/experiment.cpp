#include "fclt/experiment.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fclt/bounds.hpp"
#include "fclt/gaussian.hpp"
#include "fclt/graph.hpp"
#include "fclt/mc.hpp"
#include "fclt/runs.hpp"
#include "fclt/simd.hpp"
#include "fclt/uprocess.hpp"

namespace fclt {

namespace {

using nlohmann::json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct VerifyViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!allowed.count(key))
            throw ConfigError("unknown field \"" + key + "\" in " + where);
    }
}

RunsSpec parse_runs(const json& j) {
    require_keys(j, {"n", "p", "rs"}, "runs spec");
    RunsSpec s;
    s.n = j.at("n").get<int>();
    s.p = j.at("p").get<double>();
    s.rs = j.at("rs").get<std::vector<int>>();
    s.validate();
    return s;
}

GraphSpec parse_graph(const json& j) {
    require_keys(j, {"n", "p"}, "graph spec");
    GraphSpec s;
    s.n = j.at("n").get<int>();
    s.p = j.at("p").get<double>();
    s.validate();
    return s;
}

WeightArray parse_weights(const json& j, int n, int p) {
    if (j.is_string()) {
        const std::string kind = j.get<std::string>();
        if (kind == "complete") return complete_weights(n, p);
        throw ConfigError("unknown weights builtin \"" + kind + "\"");
    }
    require_keys(j, {"type", "width", "keep", "seed", "entries", "n", "p"}, "weights");
    const std::string type = j.value("type", std::string("explicit"));
    if (type == "complete") return complete_weights(n, p);
    if (type == "banded") return banded_weights(n, p, j.at("width").get<int>());
    if (type == "incomplete_random")
        return incomplete_random_weights(n, p, j.at("keep").get<double>(),
                                         j.value("seed", 7ull));
    if (type == "explicit") return WeightArray::from_json_string(j.dump());
    throw ConfigError("unknown weights type \"" + type + "\"");
}

UProcessSpec parse_homsum(const json& j) {
    require_keys(j, {"n", "orders", "weights", "measure", "sigmas"}, "homsum spec");
    const int n = j.at("n").get<int>();
    const auto orders = j.at("orders").get<std::vector<int>>();
    BaseMeasure mu = j.contains("measure") ? BaseMeasure::from_json_string(j.at("measure").dump())
                                           : BaseMeasure::rademacher();
    std::vector<WeightArray> ws;
    for (std::size_t i = 0; i < orders.size(); ++i) {
        if (j.contains("weights") && j.at("weights").is_array())
            ws.push_back(parse_weights(j.at("weights").at(i), n, orders[i]));
        else
            ws.push_back(parse_weights(j.value("weights", json("complete")), n, orders[i]));
    }
    std::vector<double> sigmas;
    if (j.contains("sigmas")) sigmas = j.at("sigmas").get<std::vector<double>>();
    return homsum_spec(std::move(ws), std::move(mu), std::move(sigmas));
}

UProcessSpec parse_uprocess(const json& j) {
    require_keys(j, {"n", "measure", "components"}, "uprocess spec");
    UProcessSpec spec;
    spec.n = j.at("n").get<int>();
    spec.mu = BaseMeasure::from_json_string(j.at("measure").dump());
    for (const auto& c : j.at("components")) {
        require_keys(c, {"kernel", "weights", "sigma"}, "uprocess component");
        WeightArray w = parse_weights(c.at("weights"), spec.n,
                                      c.at("kernel").value("p", c.at("kernel").value("j", 1)));
        Kernel k = kernel_from_json_string(c.at("kernel").dump(), spec.mu);
        spec.comp.push_back({std::move(k), std::move(w), c.at("sigma").get<double>()});
    }
    spec.d = static_cast<int>(spec.comp.size());
    std::sort(spec.comp.begin(), spec.comp.end(),
              [](const UComponent& a, const UComponent& b) { return a.psi.p < b.psi.p; });
    spec.validate();
    return spec;
}

struct Problem {
    std::string kind;
    PathSampler y;        // the discrete process
    PathSampler d_pre;    // the pre-limiting Gaussian process
    double pre_bound = 0.0;
    std::string pre_bound_name;
    int n = 0;
    int dim = 0;
    // optional extras
    std::optional<RunsSpec> runs;
    std::optional<GraphSpec> graph;
    std::shared_ptr<UProcessSpec> uspec;
};

Problem build_problem(const std::string& kind, const json& cfg) {
    Problem pr;
    pr.kind = kind;
    if (kind == "runs") {
        const RunsSpec spec = parse_runs(cfg.at("runs"));
        pr.runs = spec;
        pr.n = spec.n;
        pr.dim = spec.d();
        pr.y = {spec.d(), spec.n,
                [spec](Rng& rng) { return simulate_runs(spec, rng); }};
        pr.d_pre = runs_prelimit_sampler(spec);
        pr.pre_bound = runs_bound_pre(spec).total;
        pr.pre_bound_name = "runs-pre";
    } else if (kind == "graph") {
        const GraphSpec spec = parse_graph(cfg.at("graph"));
        pr.graph = spec;
        pr.n = spec.n;
        pr.dim = 2;
        pr.y = {2, spec.n, [spec](Rng& rng) { return simulate_graph(spec, rng).y; }};
        pr.d_pre = graph_prelimit_sampler(spec);
        pr.pre_bound = graph_bounds(spec.n).pre;
        pr.pre_bound_name = "graph-pre";
    } else if (kind == "homsum" || kind == "uprocess") {
        auto spec = std::make_shared<UProcessSpec>(kind == "homsum" ? parse_homsum(cfg.at("homsum"))
                                                                    : parse_uprocess(cfg.at("uprocess")));
        spec->validate();
        pr.uspec = spec;
        pr.n = spec->n;
        pr.dim = spec->d;
        pr.y = {spec->d, spec->n,
                [spec](Rng& rng) { return simulate_Y(*spec, rng).path; }};
        pr.d_pre = build_prelimit_ustat(*spec);
        pr.pre_bound = bound_weighted_pre(*spec).total;
        pr.pre_bound_name = "weighted-pre";
    } else {
        throw ConfigError("unknown kind \"" + kind + "\"");
    }
    return pr;
}

json terms_json(const BoundReport& rep) {
    json j;
    j["theorem"] = rep.theorem;
    j["norm_unit"] = rep.norm_unit;
    j["terms"] = rep.terms;
    j["total"] = rep.total;
    return j;
}

void write_rate_svg(const std::string& file, const std::vector<double>& ns,
                    const std::vector<double>& values, double slope) {
    const double w = 480, h = 360, ml = 60, mb = 40, mt = 20, mr = 20;
    double xmin = std::log10(ns.front()), xmax = std::log10(ns.back());
    double ymin = 1e300, ymax = -1e300;
    for (double v : values) {
        ymin = std::min(ymin, std::log10(v));
        ymax = std::max(ymax, std::log10(v));
    }
    if (ymax - ymin < 1e-9) ymax = ymin + 1.0;
    auto px = [&](double lx) { return ml + (lx - xmin) / (xmax - xmin) * (w - ml - mr); };
    auto py = [&](double ly) { return h - mb - (ly - ymin) / (ymax - ymin) * (h - mb - mt); };
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
       << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\""
       << h - mb << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
       << "\" stroke=\"black\"/>\n";
    os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < ns.size(); ++i)
        os << px(std::log10(ns[i])) << "," << py(std::log10(values[i])) << " ";
    os << "\"/>\n";
    for (std::size_t i = 0; i < ns.size(); ++i)
        os << "<circle cx=\"" << px(std::log10(ns[i])) << "\" cy=\"" << py(std::log10(values[i]))
           << "\" r=\"3\" fill=\"steelblue\"/>\n";
    os << "<text x=\"" << ml + 10 << "\" y=\"" << mt + 14
       << "\" font-family=\"monospace\" font-size=\"13\">log-log slope = " << slope
       << "</text>\n";
    os << "<text x=\"" << (w / 2) << "\" y=\"" << h - 8
       << "\" font-family=\"monospace\" font-size=\"12\">log10 n</text>\n";
    os << "</svg>\n";
    std::ofstream f(file);
    if (!f) throw std::runtime_error("cannot open " + file);
    f << os.str();
}

json run_action(const json& cfg, const std::string& kind, const std::string& action,
                std::uint64_t seed, int reps, int threads, const std::string& out_dir,
                bool emit_svg) {
    json result;
    if (action == "simulate") {
        Problem pr = build_problem(kind, cfg);
        Rng rng(seed);
        const StepPath path = pr.y.draw(rng);
        result["d"] = path.d;
        result["n"] = path.n;
        result["sup_norm"] = sup_norm(path);
        result["final"] = eval(path, 1.0);
        if (kind == "graph") {
            // third slot reserved for a triangle component
            result["components"] = {"edges", "two_stars"};
        }
        if (!out_dir.empty()) {
            const std::string csv = out_dir + "/path.csv";
            write_csv_file(path, csv);
            result["path_csv"] = "path.csv";
        }
        return result;
    }

    if (action == "bound") {
        if (kind == "runs") {
            const RunsSpec spec = parse_runs(cfg.at("runs"));
            result["pre"] = terms_json(runs_bound_pre(spec));
            result["con"] = terms_json(runs_bound_con(spec));
        } else if (kind == "graph") {
            const GraphSpec spec = parse_graph(cfg.at("graph"));
            const auto b = graph_bounds(spec.n);
            result["pre"] = {{"theorem", "graph-pre"}, {"norm_unit", "M"}, {"total", b.pre}};
            result["con"] = {{"theorem", "graph-con"}, {"norm_unit", "M"}, {"total", b.con}};
        } else {
            Problem pr = build_problem(kind, cfg);
            const std::string variant = cfg.value("variant", std::string("simple"));
            if (variant != "simple" && variant != "sharp")
                throw ConfigError("variant must be \"simple\" or \"sharp\"");
            result["pre"] = terms_json(bound_weighted_pre(
                *pr.uspec, variant == "sharp" ? PreVariant::Sharp : PreVariant::Simple));
            result["con"] = terms_json(gammas_con(*pr.uspec, phi_n_of(*pr.uspec)));
            // order-2 components carry the matrix diagnostics (the absolute
            // constants in front of the ratio terms stay symbolic)
            for (const auto& c : pr.uspec->comp) {
                if (c.psi.p != 2) continue;
                Matrix a(pr.uspec->n, pr.uspec->n);
                for (std::size_t k = 0; k < c.weights.count(); ++k) {
                    const std::int32_t* s = c.weights.subset(k);
                    a.at(s[0] - 1, s[1] - 1) = c.weights.weight(k);
                    a.at(s[1] - 1, s[0] - 1) = c.weights.weight(k);
                }
                const auto diag = homsum_diagnostics(a);
                result["p2_diagnostics"] = {{"rho", diag.rho},
                                            {"gamma", diag.gamma},
                                            {"lambda_star", diag.lambda_star},
                                            {"sigma", diag.sigma},
                                            {"tr_a4_over_sigma4", diag.tr_a4_over_sigma4},
                                            {"ratio_terms", diag.ratio_terms},
                                            {"degenerate", diag.degenerate}};
                break;
            }
        }
        return result;
    }

    if (action == "verify-covariance") {
        Problem pr = build_problem(kind, cfg);
        std::vector<double> times = cfg.value("times", std::vector<double>{0.2, 0.4, 0.6, 0.8, 1.0});
        const CovEstimate cy = empirical_covariance(pr.y, times, reps, derive_seed(seed, 1), threads);
        const CovEstimate cd =
            empirical_covariance(pr.d_pre, times, reps, derive_seed(seed, 2), threads);
        double worst = 0.0;
        int k = cy.cov.rows;
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
                const double se =
                    std::sqrt(cy.se.at(i, j) * cy.se.at(i, j) + cd.se.at(i, j) * cd.se.at(i, j));
                const double diff = std::fabs(cy.cov.at(i, j) - cd.cov.at(i, j));
                if (se > 0.0) worst = std::max(worst, diff / se);
            }
        result["times"] = times;
        result["reps"] = reps;
        result["max_abs_diff_over_se"] = worst;
        result["pass"] = worst <= 5.0;
        if (!out_dir.empty()) {
            write_matrix_csv(cy.cov, out_dir + "/cov_process.csv");
            write_matrix_csv(cd.cov, out_dir + "/cov_prelimit.csv");
            result["cov_process_csv"] = "cov_process.csv";
            result["cov_prelimit_csv"] = "cov_prelimit.csv";
        }
        if (worst > 5.0) throw VerifyViolation("covariance mismatch: max |diff|/se = " +
                                               std::to_string(worst));
        return result;
    }

    if (action == "verify-regression") {
        if (kind != "graph") throw ConfigError("verify-regression requires kind \"graph\"");
        const GraphSpec spec = parse_graph(cfg.at("graph"));
        if (spec.n > 12)
            throw ConfigError("verify-regression: exact mode requires n <= 12");
        const int configs = cfg.value("configs", 100);
        const double tol = cfg.value("tolerance", 1e-12);
        Rng rng(seed);
        double worst_a = 0.0, worst_b = 0.0;
        for (int c = 0; c < configs; ++c) {
            EdgeSet edges(spec.n);
            for (int j = 2; j <= spec.n; ++j)
                for (int i = 1; i < j; ++i) edges.set(i, j, rng.bernoulli(spec.p));
            const auto res = graph_regression_residual(spec, edges);
            worst_a = std::max(worst_a, res.res_a);
            worst_b = std::max(worst_b, res.res_b);
        }
        // negative control: perturbed Lambda must produce a visible residual
        EdgeSet complete(spec.n);
        for (int j = 2; j <= spec.n; ++j)
            for (int i = 1; i < j; ++i) complete.set(i, j, true);
        const auto neg = graph_regression_residual(spec, complete, 1.1);
        result["configs"] = configs;
        result["max_residual_a"] = worst_a;
        result["max_residual_b"] = worst_b;
        result["negative_control_residual"] = std::max(neg.res_a, neg.res_b);
        const bool pass = worst_a <= tol && worst_b <= tol && std::max(neg.res_a, neg.res_b) >= 1e-3;
        result["pass"] = pass;
        if (!pass) throw VerifyViolation("regression identity violated");
        return result;
    }

    if (action == "verify-distance") {
        Problem pr = build_problem(kind, cfg);
        const int count = cfg.value("functional_count", 10);
        const auto gs = default_functionals(pr.dim, count, derive_seed(seed, 99));
        json list = json::array();
        bool all_ok = true;
        int idx = 0;
        for (const auto& g : gs) {
            const auto dom = dominance_check(pr.y, pr.d_pre, g, pr.pre_bound, reps,
                                             derive_seed(seed, 1000 + static_cast<std::uint64_t>(idx)),
                                             threads);
            list.push_back({{"estimate", dom.estimate},
                            {"se", dom.se},
                            {"bound", dom.bound},
                            {"dominated", dom.dominated}});
            all_ok = all_ok && dom.dominated;
            ++idx;
        }
        result["bound_name"] = pr.pre_bound_name;
        result["bound"] = pr.pre_bound;
        result["reps"] = reps;
        result["functionals"] = list;
        result["pass"] = all_ok;
        if (!all_ok) throw VerifyViolation("bound dominance violated");
        return result;
    }

    if (action == "rate-study") {
        if (kind != "graph") throw ConfigError("rate-study currently supports kind \"graph\"");
        const GraphSpec base = parse_graph(cfg.at("graph"));
        const std::vector<double> ns =
            cfg.value("ns", std::vector<double>{50, 100, 200, 400, 800});
        // formula-only decay of the continuous bound
        std::vector<double> bound_vals;
        for (double nv : ns) bound_vals.push_back(graph_bounds(static_cast<int>(nv)).con);
        const RateFit bound_fit = rate_fit(ns, bound_vals);

        // empirical distance between Y_n and the continuous limit
        Matrix theta(1, 2);
        theta.at(0, 0) = 4.0;
        const TestFunctional g = make_test_functional({1.0}, theta);
        std::vector<double> est, ses;
        for (double nv : ns) {
            GraphSpec spec = base;
            spec.n = static_cast<int>(nv);
            PathSampler y{2, spec.n, [spec](Rng& rng) { return simulate_graph(spec, rng).y; }};
            PathSampler z = graph_limit_sampler(spec.p, spec.n);
            const auto dist = estimate_distance(y, z, g, reps,
                                                derive_seed(seed, static_cast<std::uint64_t>(nv)),
                                                threads);
            est.push_back(std::max(dist.estimate, 1e-300));
            ses.push_back(dist.se);
        }
        const RateFit emp_fit = rate_fit(ns, est);
        result["ns"] = ns;
        result["bound_values"] = bound_vals;
        result["bound_slope"] = bound_fit.slope;
        result["bound_r2"] = bound_fit.r2;
        result["empirical_estimates"] = est;
        result["empirical_ses"] = ses;
        result["empirical_slope"] = emp_fit.slope;
        result["reps"] = reps;
        if (!out_dir.empty()) {
            std::ofstream csv(out_dir + "/rate.csv");
            csv.precision(17);
            csv << "n,series,value\n";
            for (std::size_t i = 0; i < ns.size(); ++i) {
                csv << ns[i] << ",bound," << bound_vals[i] << "\n";
                csv << ns[i] << ",empirical," << est[i] << "\n";
                csv << ns[i] << ",empirical_se," << ses[i] << "\n";
            }
            result["rate_csv"] = "rate.csv";
            if (emit_svg) {
                write_rate_svg(out_dir + "/rate.svg", ns, est, emp_fit.slope);
                result["rate_svg"] = "rate.svg";
            }
        }
        return result;
    }

    throw ConfigError("unknown action \"" + action + "\"");
}

}  // namespace

bool action_matches_subcommand(const std::string& action, const std::string& subcommand) {
    if (subcommand == "simulate") return action == "simulate";
    if (subcommand == "bound") return action == "bound";
    if (subcommand == "verify") return action.rfind("verify-", 0) == 0;
    if (subcommand == "rate") return action == "rate-study";
    return false;
}

ExperimentResult run_experiment(const std::string& config_json,
                                const ExperimentOverrides& overrides) {
    ExperimentResult out;
    json cfg;
    try {
        cfg = json::parse(config_json);
    } catch (const json::parse_error& e) {
        out.exit_code = 2;
        out.error = std::string("config parse error: ") + e.what();
        return out;
    }

    const auto t0 = std::chrono::steady_clock::now();
    try {
        require_keys(cfg,
                     {"kind", "action", "seed", "reps", "threads", "out", "emit_svg", "runs",
                      "graph", "homsum", "uprocess", "times", "ns", "functional_count", "variant",
                      "configs", "tolerance"},
                     "config");
        const std::string kind = cfg.at("kind").get<std::string>();
        const std::string action = cfg.at("action").get<std::string>();
        const std::uint64_t seed = overrides.seed.value_or(cfg.value("seed", 1ull));
        const int reps = overrides.reps.value_or(cfg.value("reps", 10000));
        const int threads = overrides.threads.value_or(cfg.value("threads", 1));
        std::string out_dir = overrides.out_dir.value_or(cfg.value("out", std::string()));
        const bool emit_svg = overrides.emit_svg.value_or(cfg.value("emit_svg", false));
        if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

        json report;
        int exit_code = 0;
        try {
            report["result"] = run_action(cfg, kind, action, seed, reps, threads, out_dir, emit_svg);
            report["result"]["kind"] = kind;
            report["result"]["action"] = action;
            report["result"]["seed"] = seed;
        } catch (const VerifyViolation& e) {
            report["result"] = {{"kind", kind}, {"action", action}, {"seed", seed},
                                {"pass", false}, {"violation", e.what()}};
            exit_code = 4;
        }
        const double wall =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        const auto now = std::chrono::system_clock::now().time_since_epoch();
        report["metadata"] = {{"walltime_ms", wall},
                              {"timestamp_unix_ms",
                               std::chrono::duration_cast<std::chrono::milliseconds>(now).count()},
                              {"threads", threads},
                              {"reps", reps},
                              {"simd_backend", vec::active_backend()},
                              {"version", "0.1.0"}};
        out.report_json = report.dump(2) + "\n";
        out.exit_code = exit_code;
        if (!out_dir.empty()) {
            std::ofstream f(out_dir + "/report.json");
            f << out.report_json;
        }
        return out;
    } catch (const ConfigError& e) {
        out.exit_code = 2;
        out.error = e.what();
    } catch (const json::exception& e) {
        out.exit_code = 2;
        out.error = std::string("config error: ") + e.what();
    } catch (const std::invalid_argument& e) {
        out.exit_code = 2;
        out.error = e.what();
    } catch (const std::exception& e) {
        out.exit_code = 3;
        out.error = e.what();
    }
    return out;
}

}  // namespace fclt
