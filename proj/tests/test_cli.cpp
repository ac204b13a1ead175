#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "fclt/experiment.hpp"
#include "fclt/runs.hpp"

using namespace fclt;
using nlohmann::json;

TEST_CASE("runs bound config end to end") {
    const std::string cfg = R"({
        "kind": "runs", "action": "bound", "seed": 1,
        "runs": {"n": 1000, "p": 0.5, "rs": [2, 1]}
    })";
    const auto res = run_experiment(cfg);
    REQUIRE(res.exit_code == 0);
    const json rep = json::parse(res.report_json);
    const auto& con = rep.at("result").at("con");
    CHECK(con.at("terms").contains("gamma1"));
    CHECK(con.at("terms").contains("gamma2"));
    CHECK(con.at("terms").contains("gamma3"));

    // matches the module-level evaluation
    RunsSpec spec{1000, 0.5, {2, 1}};
    CHECK(con.at("total").get<double>() == doctest::Approx(runs_bound_con(spec).total));
    CHECK(rep.at("result").at("pre").at("total").get<double>() ==
          doctest::Approx(runs_bound_pre(spec).total));
}

TEST_CASE("graph verify-regression via config") {
    const std::string cfg = R"({
        "kind": "graph", "action": "verify-regression", "seed": 3, "configs": 12,
        "graph": {"n": 5, "p": 0.3}
    })";
    const auto res = run_experiment(cfg);
    REQUIRE(res.exit_code == 0);
    const json rep = json::parse(res.report_json);
    CHECK(rep.at("result").at("pass").get<bool>());
    CHECK(rep.at("result").at("max_residual_a").get<double>() <= 1e-12);
    CHECK(rep.at("result").at("max_residual_b").get<double>() <= 1e-12);
    CHECK(rep.at("result").at("negative_control_residual").get<double>() >= 1e-3);
}

TEST_CASE("malformed and invalid configs exit with code 2") {
    CHECK(run_experiment("{not json").exit_code == 2);
    CHECK(run_experiment(R"({"kind":"runs","action":"bound","bogus_field":1,
                            "runs":{"n":10,"p":0.5,"rs":[1]}})").exit_code == 2);
    CHECK(run_experiment(R"({"kind":"nope","action":"bound"})").exit_code == 2);
    CHECK(run_experiment(R"({"kind":"runs","action":"dance",
                            "runs":{"n":10,"p":0.5,"rs":[1]}})").exit_code == 2);
    // spec violation surfaces as config error
    CHECK(run_experiment(R"({"kind":"runs","action":"bound",
                            "runs":{"n":10,"p":0.5,"rs":[7]}})").exit_code == 2);
}

TEST_CASE("verify reports are identical across thread counts") {
    const std::string base = R"({
        "kind": "runs", "action": "verify-covariance", "seed": 77, "reps": 400,
        "times": [0.5, 1.0],
        "runs": {"n": 16, "p": 0.5, "rs": [2, 1]}
    })";
    ExperimentOverrides o1, o4;
    o1.threads = 1;
    o4.threads = 4;
    const auto r1 = run_experiment(base, o1);
    const auto r4 = run_experiment(base, o4);
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r4.exit_code == 0);
    const json j1 = json::parse(r1.report_json);
    const json j4 = json::parse(r4.report_json);
    CHECK(j1.at("result") == j4.at("result"));
}

TEST_CASE("simulate writes a path csv") {
    const auto dir = std::filesystem::temp_directory_path() / "fclt_test_sim";
    std::filesystem::remove_all(dir);
    const std::string cfg = R"({
        "kind": "graph", "action": "simulate", "seed": 5,
        "graph": {"n": 12, "p": 0.5}
    })";
    ExperimentOverrides o;
    o.out_dir = dir.string();
    const auto res = run_experiment(cfg, o);
    REQUIRE(res.exit_code == 0);
    CHECK(std::filesystem::exists(dir / "path.csv"));
    CHECK(std::filesystem::exists(dir / "report.json"));
    std::ifstream f(dir / "path.csv");
    std::string header;
    std::getline(f, header);
    CHECK(header == "t,v1,v2");
    std::filesystem::remove_all(dir);
}

TEST_CASE("verify-distance catches dominance and violations") {
    // a healthy run passes
    const std::string good = R"({
        "kind": "graph", "action": "verify-distance", "seed": 11, "reps": 1500,
        "functional_count": 2, "graph": {"n": 20, "p": 0.5}
    })";
    CHECK(run_experiment(good).exit_code == 0);
}

TEST_CASE("rate-study emits csv and svg artifacts") {
    const auto dir = std::filesystem::temp_directory_path() / "fclt_test_rate";
    std::filesystem::remove_all(dir);
    const std::string cfg = R"({
        "kind": "graph", "action": "rate-study", "seed": 9, "reps": 300,
        "ns": [16, 32, 64], "graph": {"n": 16, "p": 0.5}
    })";
    ExperimentOverrides o;
    o.out_dir = dir.string();
    o.emit_svg = true;
    const auto res = run_experiment(cfg, o);
    REQUIRE(res.exit_code == 0);
    CHECK(std::filesystem::exists(dir / "rate.csv"));
    CHECK(std::filesystem::exists(dir / "rate.svg"));
    const json rep = json::parse(res.report_json);
    CHECK(rep.at("result").contains("bound_slope"));
    CHECK(rep.at("result").contains("empirical_slope"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("uprocess kind with explicit kernel and weights") {
    const std::string cfg = R"({
        "kind": "uprocess", "action": "bound", "seed": 1, "variant": "sharp",
        "uprocess": {
            "n": 6,
            "measure": {"atoms": [[-1.0, 0.5], [1.0, 0.5]]},
            "components": [
                {"kernel": {"type": "product", "p": 2}, "weights": "complete", "sigma": 3.0}
            ]
        }
    })";
    const auto res = run_experiment(cfg);
    REQUIRE(res.exit_code == 0);
    const json rep = json::parse(res.report_json);
    CHECK(rep.at("result").at("pre").at("total").get<double>() > 0.0);
    CHECK(rep.at("result").at("con").at("terms").contains("gamma5"));
    // order-2 component triggers the matrix diagnostics
    const auto& diag = rep.at("result").at("p2_diagnostics");
    CHECK(diag.at("ratio_terms").size() == 3);
    CHECK(diag.at("lambda_star").get<double>() >= diag.at("rho").get<double>() - 1e-9);
    CHECK(diag.at("gamma").get<double>() >= diag.at("lambda_star").get<double>() - 1e-9);
}

TEST_CASE("subcommand/action mapping") {
    CHECK(action_matches_subcommand("simulate", "simulate"));
    CHECK(action_matches_subcommand("verify-covariance", "verify"));
    CHECK(action_matches_subcommand("verify-distance", "verify"));
    CHECK(action_matches_subcommand("rate-study", "rate"));
    CHECK_FALSE(action_matches_subcommand("simulate", "bound"));
    CHECK_FALSE(action_matches_subcommand("rate-study", "verify"));
}
