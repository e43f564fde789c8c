#include <doctest.h>

#include <unistd.h>

#include <algorithm>

#include <nlohmann/json.hpp>

#include "support/cli_harness.hpp"

using namespace cascade;
using testing::run_cli;

TEST_CASE("cli exit codes") {
    testing::ScratchDir dir("cli_codes");
    auto structure = dir / "structure.json";
    CHECK(run_cli({"example", "--out", structure}) == 0);
    CHECK(run_cli({"validate", structure}) == 0);

    auto bad = dir.file("bad.json", R"({"name": "x", "horizon": 3, "positions": [], "tiers": []})");
    CHECK(run_cli({"validate", bad}) == 1);
    CHECK(run_cli({"validate", dir / "missing.json"}) == 1);
    CHECK(run_cli({"frobnicate"}) == 2);
    CHECK(run_cli({"simulate", "--structure", structure}) == 2);

    auto inflows = dir.file("in.csv", "period,amount\n0,80\n1,30\n2,50\n");
    auto out = dir / "payments.csv";
    CHECK(run_cli({"run", "--structure", structure, "--inflows", inflows, "--out", out}) == 0);
    auto csv = io::read_file(out);
    CHECK(csv.find("0,1,senior,40,30,0\n") != std::string::npos);
    CHECK(csv.find("0,2,junior,30,5,0\n") != std::string::npos);
    CHECK(std::filesystem::exists(out + ".manifest.json"));

    auto short_path = dir.file("short.csv", "period,amount\n0,80\n1,30\n");
    CHECK(run_cli({"run", "--structure", structure, "--inflows", short_path, "--out", out}) == 1);
}

TEST_CASE("simulate, metrics and enumerate end to end") {
    testing::ScratchDir dir("cli_flow");
    auto structure = dir / "structure.json";
    REQUIRE(run_cli({"example", "--out", structure}) == 0);
    auto pool = dir.file("pool.json", testing::kExamplePool);

    CHECK(run_cli({"simulate", "--structure", structure, "--pool", pool, "--scenarios", "500", "--seed", "42", "--out",
                   dir / "a"}) == 0);
    CHECK(run_cli({"simulate", "--structure", structure, "--pool", pool, "--scenarios", "500", "--seed", "42", "--out",
                   dir / "b"}) == 0);
    CHECK(io::read_file(dir / "a/payments.csv") == io::read_file(dir / "b/payments.csv"));
    CHECK(io::read_file(dir / "a/scenarios.csv") == io::read_file(dir / "b/scenarios.csv"));
    auto manifest = nlohmann::json::parse(io::read_file(dir / "a/manifest.json"));
    CHECK(manifest["seed"] == 42);
    CHECK(manifest["scenario_count"] == 500);

    CHECK(run_cli({"metrics", "--payments", dir / "a", "--quantiles", "0.5,0.99", "--out", dir / "report.json"}) == 0);
    auto report = nlohmann::json::parse(io::read_file(dir / "report.json"));
    CHECK(report["positions"].size() == 3);
    CHECK(report["positions"][1]["quantiles"].contains("0.99"));
    CHECK(run_cli({"metrics", "--payments", dir / "a", "--quantiles", "1.5", "--out", dir / "r.json"}) == 1);

    CHECK(run_cli({"enumerate", "--structure", structure, "--pool", pool, "--out", dir / "exact"}) == 0);
    auto exact = io::parse_payments_csv(io::read_file(dir / "exact/payments.csv"));
    REQUIRE(exact.weights);
    Rational total = 0;
    for (const auto& w : *exact.weights) total += w;
    CHECK(total == 1);
    CHECK(run_cli({"metrics", "--payments", dir / "exact", "--format", "csv", "--out", dir / "exact.csv"}) == 0);
}

TEST_CASE("sweep") {
    testing::ScratchDir dir("cli_sweep");
    auto structure = dir.file("structure.json", R"({
      "name": "rated", "horizon": 3,
      "positions": [
        {"name": "senior", "kind": "note", "priority": 1, "notional": 600, "params": {"rate_bps": 500}},
        {"name": "junior", "kind": "note", "priority": 2, "notional": 400, "params": {"rate_bps": 1000}}
      ],
      "tiers": [{"name": "all", "mode": "sequential", "members": ["senior", "junior"]}]
    })");
    auto pool = dir.file("pool.json", testing::kExamplePool);
    auto space = dir.file("space.json", R"({
      "parameters": [{"kind": "position_notional", "target": "junior", "grid": [100, 200, 300]}],
      "constraints": [{"metric_bound": {"position": "senior", "metric": "expected_loss", "comparator": "<=", "bound": 1e9}}]
    })");
    auto objective = dir.file("objective.json", R"({"position": "junior", "metric": "present_value"})");
    std::vector<std::string> base{"sweep", "--structure", structure, "--pool", pool, "--seed", "7", "--scenarios", "200",
                                  "--space", space, "--objective", objective, "--out"};
    auto args = base;
    args.push_back(dir / "table.csv");
    CHECK(run_cli(args) == 0);
    auto table = io::read_file(dir / "table.csv");
    CHECK(std::count(table.begin(), table.end(), '\n') == 4);

    auto infeasible = dir.file("space2.json", R"({
      "parameters": [{"kind": "position_notional", "target": "junior", "grid": [100]}],
      "constraints": [{"total_notional_equals": 1}]
    })");
    args = base;
    args[10] = infeasible;
    args.push_back(dir / "table2.csv");
    CHECK(run_cli(args) == 1);
    CHECK(std::filesystem::exists(dir / "table2.csv"));
}
