#include "cascade/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cascade/allocation.hpp"
#include "cascade/design.hpp"
#include "cascade/inflow.hpp"
#include "cascade/io.hpp"
#include "cascade/metrics.hpp"
#include "cascade/parallel.hpp"

namespace cascade {

namespace fs = std::filesystem;

namespace {

std::string utc_timestamp() {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct Inputs {
    std::vector<std::pair<std::string, std::string>> digests;

    std::string read(const std::string& path) {
        auto text = io::read_file(path);
        digests.emplace_back(path, io::sha256_hex(text));
        return text;
    }
};

io::RunManifest manifest(const std::string& command, const Inputs& inputs) {
    io::RunManifest m;
    m.tool_version = std::string(kToolVersion);
    m.command = command;
    m.input_digests = inputs.digests;
    m.timestamp = utc_timestamp();
    return m;
}

fs::path manifest_beside(const fs::path& out) {
    auto p = out;
    p += ".manifest.json";
    return p;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, "cannot create directory '" + dir.string() + "'");
}

std::vector<double> parse_levels(const std::string& text) {
    std::vector<double> levels;
    std::istringstream is(text);
    std::string item;
    while (std::getline(is, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            levels.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error(ErrorCode::BadLevel, "quantile level '" + item + "' is not a number");
        }
    }
    return levels;
}

ScenarioSet to_scenario_set(const std::vector<InflowScenario>& scenarios) {
    ScenarioSet set;
    bool weighted = !scenarios.empty() && scenarios.front().weight;
    if (weighted) set.weights.emplace();
    for (const auto& s : scenarios) {
        set.inflows.push_back(s.inflows);
        set.pool_losses.push_back(s.pool_losses);
        if (weighted) set.weights->push_back(*s.weight);
    }
    return set;
}

std::vector<InflowScenario> simulate_pool(const PoolSpec& pool, std::uint64_t seed, std::size_t count) {
    std::vector<InflowScenario> scenarios(count);
    parallel_for(count, [&](std::size_t i) { scenarios[i] = sample_scenario(pool, seed, static_cast<std::int64_t>(i)); });
    return scenarios;
}

void check_horizons(const StructureSpec& spec, const PoolSpec& pool) {
    if (spec.horizon != pool.horizon) {
        throw Error(ErrorCode::LengthMismatch, "pool horizon " + std::to_string(pool.horizon) +
                                                   " differs from structure horizon " + std::to_string(spec.horizon));
    }
}

void write_scenario_outputs(const fs::path& dir, const StructureSpec& spec, const std::vector<InflowScenario>& scenarios,
                            io::RunManifest m) {
    ensure_dir(dir);
    auto set = to_scenario_set(scenarios);
    auto matrices = run_scenarios(spec, set);
    io::write_file_atomic(dir / "payments.csv", io::payments_csv(spec, matrices, set.weights));
    io::write_file_atomic(dir / "scenarios.csv", io::scenarios_csv(scenarios));
    m.scenario_count = scenarios.size();
    io::write_file_atomic(dir / "manifest.json", m.to_json());
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv) {
    CLI::App app{"cascade: contractual cash-flow waterfalls over deterministic and simulated inflows", "cascade"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    std::string structure_path, pool_path, inflows_path, out_path, payments_dir, curve_path, space_path, objective_path;
    std::string levels_text = "0.95,0.99", format = "json", mode = "grid";
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> search_seed;
    std::size_t scenario_count = 0, samples = 0, budget = kDefaultSearchBudget;
    std::int64_t minor_per_major = 100;

    auto* validate = app.add_subcommand("validate", "Validate a structure specification");
    validate->add_option("structure", structure_path, "Structure JSON")->required();

    auto* example = app.add_subcommand("example", "Print the three-position example structure");
    example->add_option("--out", out_path, "Write to a file instead of standard output");

    auto* run = app.add_subcommand("run", "Run the waterfall on one deterministic inflow path");
    run->add_option("--structure", structure_path)->required();
    run->add_option("--inflows", inflows_path, "CSV with header period,amount[,pool_loss]")->required();
    run->add_option("--out", out_path, "payments.csv")->required();

    auto* simulate = app.add_subcommand("simulate", "Sample inflow scenarios and run the waterfall on each");
    simulate->add_option("--structure", structure_path)->required();
    simulate->add_option("--pool", pool_path)->required();
    simulate->add_option("--scenarios", scenario_count)->required()->check(CLI::PositiveNumber);
    simulate->add_option("--seed", seed)->required();
    simulate->add_option("--out", out_path, "Output directory")->required();

    auto* enumerate = app.add_subcommand("enumerate", "Enumerate every scenario of a small pool with exact weights");
    enumerate->add_option("--structure", structure_path)->required();
    enumerate->add_option("--pool", pool_path)->required();
    enumerate->add_option("--out", out_path, "Output directory")->required();

    auto* metrics = app.add_subcommand("metrics", "Expected payments, values and loss measures from payments.csv");
    metrics->add_option("--payments", payments_dir, "Directory containing payments.csv")->required();
    metrics->add_option("--discount", curve_path, "CSV with header period,factor (default: all ones)");
    metrics->add_option("--quantiles", levels_text, "Comma-separated levels in (0,1)");
    metrics->add_option("--out", out_path)->required();
    metrics->add_option("--format", format)->check(CLI::IsMember({"json", "csv"}));
    metrics->add_option("--minor-per-major", minor_per_major, "Minor units per major unit")->check(CLI::PositiveNumber);

    auto* sweep = app.add_subcommand("sweep", "Evaluate a design space on one shared scenario set");
    sweep->add_option("--structure", structure_path)->required();
    sweep->add_option("--pool", pool_path)->required();
    sweep->add_option("--seed", seed)->required();
    sweep->add_option("--scenarios", scenario_count)->required()->check(CLI::PositiveNumber);
    sweep->add_option("--space", space_path)->required();
    sweep->add_option("--objective", objective_path)->required();
    sweep->add_option("--out", out_path, "table.csv")->required();
    sweep->add_option("--discount", curve_path);
    sweep->add_option("--mode", mode)->check(CLI::IsMember({"grid", "random"}));
    sweep->add_option("--samples", samples, "Random-search draws");
    sweep->add_option("--search-seed", search_seed, "Random-search seed (default: --seed)");
    sweep->add_option("--budget", budget);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    std::string command;
    for (int i = 0; i < argc; ++i) command += (i ? " " : "") + std::string(argv[i]);

    try {
        Inputs inputs;
        if (*validate) {
            auto spec = io::parse_structure(inputs.read(structure_path));
            std::cout << "{\"valid\": true, \"name\": " << nlohmann::json(spec.name).dump() << "}\n";
        } else if (*example) {
            auto text = io::serialize_structure(example_structure());
            if (out_path.empty()) {
                std::cout << text;
            } else {
                io::write_file_atomic(out_path, text);
            }
        } else if (*run) {
            auto spec = io::parse_structure(inputs.read(structure_path));
            auto path = io::parse_inflows_csv(inputs.read(inflows_path));
            std::vector<PaymentMatrix> matrices{run_waterfall(spec, path.inflows, path.pool_losses, 0)};
            io::write_file_atomic(out_path, io::payments_csv(spec, matrices));
            io::write_file_atomic(manifest_beside(out_path), manifest(command, inputs).to_json());
        } else if (*simulate) {
            auto spec = io::parse_structure(inputs.read(structure_path));
            auto pool = io::parse_pool(inputs.read(pool_path));
            check_horizons(spec, pool);
            auto m = manifest(command, inputs);
            m.seed = seed;
            write_scenario_outputs(out_path, spec, simulate_pool(pool, seed, scenario_count), m);
        } else if (*enumerate) {
            auto spec = io::parse_structure(inputs.read(structure_path));
            auto pool = io::parse_pool(inputs.read(pool_path));
            check_horizons(spec, pool);
            write_scenario_outputs(out_path, spec, enumerate_scenarios(pool), manifest(command, inputs));
        } else if (*metrics) {
            auto table = io::parse_payments_csv(inputs.read((fs::path(payments_dir) / "payments.csv").string()));
            DiscountCurve curve;
            if (curve_path.empty()) {
                curve.factors.assign(table.matrices.front().periods.size(), 1.0);
            } else {
                curve = io::parse_curve_csv(inputs.read(curve_path));
            }
            auto levels = parse_levels(levels_text);
            auto report = build_report(table.positions, table.matrices, table.weights, curve, levels);
            io::write_file_atomic(out_path, format == "csv" ? io::report_csv(report, minor_per_major)
                                                            : io::report_json(report, minor_per_major));
            auto m = manifest(command, inputs);
            m.scenario_count = table.matrices.size();
            io::write_file_atomic(manifest_beside(out_path), m.to_json());
        } else if (*sweep) {
            auto spec = io::parse_structure(inputs.read(structure_path));
            auto pool = io::parse_pool(inputs.read(pool_path));
            check_horizons(spec, pool);
            auto space = io::parse_design_space(inputs.read(space_path), spec);
            auto objective = io::parse_objective(inputs.read(objective_path));
            DiscountCurve curve;
            if (curve_path.empty()) {
                curve.factors.assign(static_cast<std::size_t>(spec.horizon), 1.0);
            } else {
                curve = io::parse_curve_csv(inputs.read(curve_path));
            }
            auto scenarios = to_scenario_set(simulate_pool(pool, seed, scenario_count));
            SearchMode search_mode;
            if (mode == "random") {
                search_mode.kind = SearchMode::Kind::random;
                search_mode.samples = samples;
                search_mode.seed = search_seed.value_or(seed);
            }
            auto result = search(space, objective, scenarios, curve, search_mode, budget);
            io::write_file_atomic(out_path, io::sweep_table_csv(space, result));
            auto m = manifest(command, inputs);
            m.seed = seed;
            m.scenario_count = scenario_count;
            io::write_file_atomic(manifest_beside(out_path), m.to_json());
            require_best(result);
        }
    } catch (const Error& e) {
        std::cerr << e.to_json() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << Error(ErrorCode::IoError, e.what()).to_json() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace cascade
