#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cascade/allocation.hpp"
#include "cascade/cli.hpp"
#include "cascade/inflow.hpp"
#include "cascade/io.hpp"
#include "cascade/metrics.hpp"

namespace py = pybind11;
using namespace cascade;

namespace {

std::vector<Money> to_money(const std::vector<std::int64_t>& v) { return {v.begin(), v.end()}; }

std::vector<std::int64_t> to_ints(const std::vector<Money>& v) {
    std::vector<std::int64_t> out;
    for (auto m : v) out.push_back(m.minor());
    return out;
}

py::dict named(const StructureSpec& spec, const std::vector<Money>& values) {
    py::dict d;
    for (std::size_t i = 0; i < spec.positions.size(); ++i) d[py::str(spec.positions[i].name)] = values[i].minor();
    return d;
}

py::dict matrix_dict(const StructureSpec& spec, const PaymentMatrix& m) {
    py::list periods;
    for (const auto& p : m.periods) {
        py::dict triggers;
        for (std::size_t j = 0; j < spec.triggers.size(); ++j) triggers[py::str(spec.triggers[j].name)] = bool(p.trigger_values[j]);
        py::dict row;
        row["period"] = p.period;
        row["inflow"] = p.inflow.minor();
        row["available"] = p.available.minor();
        row["dues"] = named(spec, p.dues);
        row["payments"] = named(spec, p.payments);
        row["residual_after"] = p.residual_after.minor();
        row["tier_order"] = p.effective_tier_order;
        row["triggers"] = triggers;
        periods.append(row);
    }
    py::dict out;
    out["scenario"] = m.scenario;
    out["periods"] = periods;
    return out;
}

py::dict scenario_dict(const InflowScenario& s) {
    py::list events;
    for (const auto& e : s.events) {
        if (e) {
            events.append(py::make_tuple(std::string(to_string(e->type)), e->period));
        } else {
            events.append(py::none());
        }
    }
    py::list flows;
    for (const auto& row : s.unit_flows) flows.append(to_ints(row));
    py::dict out;
    out["id"] = s.id;
    out["events"] = events;
    out["unit_flows"] = flows;
    out["inflows"] = to_ints(s.inflows);
    out["pool_losses"] = to_ints(s.pool_losses);
    out["weight"] = s.weight ? py::object(py::str(rational_to_string(*s.weight))) : py::object(py::none());
    return out;
}

Weights parse_weights(const std::optional<std::vector<std::string>>& weights) {
    if (!weights) return std::nullopt;
    std::vector<Rational> out;
    for (const auto& w : *weights) out.push_back(parse_rational(w));
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Contractual cash-flow waterfalls over deterministic and simulated inflows";
    m.attr("__version__") = std::string(kToolVersion);

    static py::exception<Error> cascade_error(m, "CascadeError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object err = cascade_error;
            py::object instance = err(std::string(to_string(e.code())) + ": " + e.what());
            instance.attr("code") = std::string(to_string(e.code()));
            PyErr_SetObject(err.ptr(), instance.ptr());
        }
    });

    m.def("example_structure", [] { return io::serialize_structure(example_structure()); },
          "The three-position example structure as JSON text.");

    m.def("validate_structure", [](const std::string& text) { return io::serialize_structure(io::parse_structure(text)); },
          py::arg("text"), "Parse and validate a structure; returns its canonical JSON.");

    m.def(
        "allocate_sequential",
        [](std::int64_t available, const std::vector<std::int64_t>& dues) {
            auto r = allocate_sequential(Money{available}, to_money(dues));
            return py::make_tuple(to_ints(r.payments), r.remaining.minor());
        },
        py::arg("available"), py::arg("dues"));

    m.def(
        "allocate_pro_rata",
        [](std::int64_t available, const std::vector<std::int64_t>& dues, const std::vector<std::string>& weights) {
            std::vector<Rational> w;
            for (const auto& s : weights) w.push_back(parse_rational(s));
            auto r = allocate_pro_rata(Money{available}, to_money(dues), w);
            return py::make_tuple(to_ints(r.payments), r.remaining.minor());
        },
        py::arg("available"), py::arg("dues"), py::arg("weights"));

    m.def(
        "run_waterfall",
        [](const std::string& structure, const std::vector<std::int64_t>& inflows,
           const std::optional<std::vector<std::int64_t>>& pool_losses) {
            auto spec = io::parse_structure(structure);
            auto losses = pool_losses ? to_money(*pool_losses) : std::vector<Money>{};
            return matrix_dict(spec, run_waterfall(spec, to_money(inflows), losses));
        },
        py::arg("structure"), py::arg("inflows"), py::arg("pool_losses") = py::none());

    m.def(
        "sample_scenario",
        [](const std::string& pool, std::uint64_t seed, std::int64_t index) {
            return scenario_dict(sample_scenario(io::parse_pool(pool), seed, index));
        },
        py::arg("pool"), py::arg("seed"), py::arg("index"));

    m.def(
        "enumerate_scenarios",
        [](const std::string& pool) {
            py::list out;
            for (const auto& s : enumerate_scenarios(io::parse_pool(pool))) out.append(scenario_dict(s));
            return out;
        },
        py::arg("pool"));

    m.def(
        "metrics",
        [](const std::string& structure, const std::vector<std::vector<std::int64_t>>& inflow_paths,
           const std::optional<std::vector<std::string>>& weights, const std::vector<double>& levels,
           const std::optional<std::vector<double>>& discount) {
            auto spec = io::parse_structure(structure);
            ScenarioSet set;
            for (const auto& p : inflow_paths) set.inflows.push_back(to_money(p));
            set.weights = parse_weights(weights);
            auto matrices = run_scenarios(spec, set);
            DiscountCurve curve{discount ? *discount : std::vector<double>(static_cast<std::size_t>(spec.horizon), 1.0)};
            auto report = build_report(spec, matrices, set.weights, curve, levels);
            py::dict out;
            for (const auto& p : report.positions) {
                py::dict d;
                d["expected_payments"] = p.expected_path;
                d["present_value"] = p.present_value;
                d["expected_loss"] = p.loss.expected_loss.convert_to<double>();
                d["shortfall_probability"] = p.loss.shortfall_probability.convert_to<double>();
                d["quantiles"] = to_ints(p.loss.quantiles);
                d["losses"] = to_ints(p.loss.samples);
                out[py::str(p.position)] = d;
            }
            return out;
        },
        py::arg("structure"), py::arg("inflow_paths"), py::arg("weights") = py::none(),
        py::arg("levels") = std::vector<double>{}, py::arg("discount") = py::none());

    m.def(
        "cli",
        [](const std::vector<std::string>& args) {
            std::vector<const char*> argv{"cascade"};
            for (const auto& a : args) argv.push_back(a.c_str());
            py::gil_scoped_release release;
            return cli_dispatch(static_cast<int>(argv.size()), argv.data());
        },
        py::arg("args"), "Run the command-line tool in-process; returns its exit code.");
}
