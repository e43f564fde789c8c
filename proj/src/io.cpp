#include "cascade/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <unistd.h>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

namespace cascade::io {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::SchemaError, (path.empty() ? std::string("/") : path) + ": " + what);
}

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, column = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw Error(ErrorCode::SyntaxError, "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
                                                e.what());
    }
}

// Closed-world object access: every key must be listed, required keys must be present.
class Fields {
public:
    Fields(const json& j, std::string path, std::initializer_list<std::string_view> allowed) : j_(j), path_(std::move(path)) {
        if (!j.is_object()) schema_error(path_, "expected an object");
        for (const auto& [key, _] : j.items()) {
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                schema_error(path_, "unknown field '" + key + "'");
            }
        }
    }

    bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
    std::string at(const std::string& key) const { return path_ + "/" + key; }

    const json& required(const std::string& key) const {
        if (!j_.contains(key)) schema_error(path_, "missing field '" + key + "'");
        return j_.at(key);
    }

    std::int64_t integer(const std::string& key) const { return as_integer(required(key), at(key)); }
    std::int64_t integer_or(const std::string& key, std::int64_t fallback) const {
        return has(key) ? as_integer(j_.at(key), at(key)) : fallback;
    }
    std::string string(const std::string& key) const { return as_string(required(key), at(key)); }
    bool boolean_or(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        if (!j_.at(key).is_boolean()) schema_error(at(key), "expected a boolean");
        return j_.at(key).get<bool>();
    }
    const json& array(const std::string& key) const {
        const auto& v = required(key);
        if (!v.is_array()) schema_error(at(key), "expected an array");
        return v;
    }
    const json* optional_array(const std::string& key) const {
        if (!has(key)) return nullptr;
        if (!j_.at(key).is_array()) schema_error(at(key), "expected an array");
        return &j_.at(key);
    }

    static std::int64_t as_integer(const json& v, const std::string& path) {
        if (!v.is_number_integer()) schema_error(path, "expected an integer");
        if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
            schema_error(path, "integer out of range");
        }
        return v.get<std::int64_t>();
    }
    static std::string as_string(const json& v, const std::string& path) {
        if (!v.is_string()) schema_error(path, "expected a string");
        return v.get<std::string>();
    }

private:
    const json& j_;
    std::string path_;
};

template <class E>
E parse_enum(const std::string& text, const std::string& path, std::initializer_list<E> values) {
    for (E v : values) {
        if (to_string(v) == text) return v;
    }
    schema_error(path, "unexpected value '" + text + "'");
}

std::vector<std::string> string_list(const json& arr, const std::string& path) {
    if (!arr.is_array()) schema_error(path, "expected an array");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(Fields::as_string(arr[i], path + "/" + std::to_string(i)));
    return out;
}

std::vector<Rational> weight_list(const json& arr, const std::string& path) {
    if (!arr.is_array()) schema_error(path, "expected an array");
    std::vector<Rational> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        auto p = path + "/" + std::to_string(i);
        try {
            out.push_back(parse_rational(Fields::as_string(arr[i], p)));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::SchemaError) throw;
            schema_error(p, "weights must be decimal strings");
        }
    }
    return out;
}

std::vector<std::int64_t> int_list(const json& arr, const std::string& path) {
    if (!arr.is_array()) schema_error(path, "expected an array");
    std::vector<std::int64_t> out;
    for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(Fields::as_integer(arr[i], path + "/" + std::to_string(i)));
    return out;
}

std::vector<Money> money_list(const json& arr, const std::string& path) {
    std::vector<Money> out;
    for (auto v : int_list(arr, path)) out.emplace_back(v);
    return out;
}

Comparator parse_comparator(const std::string& text, const std::string& path) {
    return parse_enum(text, path, {Comparator::less, Comparator::less_equal, Comparator::greater, Comparator::greater_equal});
}

Position parse_position(const json& j, const std::string& path) {
    Fields f(j, path, {"name", "kind", "notional", "priority", "maturity", "params", "due_schedule"});
    Position p;
    p.name = f.string("name");
    p.kind = parse_enum(f.string("kind"), f.at("kind"), {PositionKind::cost, PositionKind::note, PositionKind::residual});
    p.notional = Money{f.integer_or("notional", 0)};
    p.priority = f.integer("priority");
    if (f.has("maturity")) p.maturity = f.integer("maturity");
    if (f.has("params")) {
        Fields g(j.at("params"), f.at("params"), {"rate_bps", "cap", "cumulative_dues", "amortizing"});
        p.params.rate_bps = g.integer_or("rate_bps", 0);
        if (g.has("cap")) p.params.cap = Money{g.integer("cap")};
        p.params.cumulative_dues = g.boolean_or("cumulative_dues", false);
        p.params.amortizing = g.boolean_or("amortizing", false);
    }
    if (const json* d = f.optional_array("due_schedule")) p.due_schedule = money_list(*d, f.at("due_schedule"));
    return p;
}

Tier parse_tier(const json& j, const std::string& path) {
    Fields f(j, path, {"name", "mode", "members", "weights"});
    Tier t;
    t.name = f.string("name");
    t.mode = parse_enum(f.string("mode"), f.at("mode"), {TierMode::sequential, TierMode::pro_rata});
    t.members = string_list(f.array("members"), f.at("members"));
    if (const json* w = f.optional_array("weights")) t.weights = weight_list(*w, f.at("weights"));
    return t;
}

Trigger parse_trigger(const json& j, const std::string& path) {
    Fields f(j, path, {"name", "metric", "position", "comparator", "threshold", "latching"});
    Trigger t;
    t.name = f.string("name");
    t.metric = parse_enum(f.string("metric"), f.at("metric"),
                          {TriggerMetric::cumulative_pool_loss, TriggerMetric::cumulative_position_shortfall,
                           TriggerMetric::residual_balance, TriggerMetric::period_inflow, TriggerMetric::period_index});
    if (f.has("position")) t.position = f.string("position");
    if (t.metric == TriggerMetric::cumulative_position_shortfall && t.position.empty()) {
        schema_error(path, "cumulative_position_shortfall needs a 'position'");
    }
    t.comparator = parse_comparator(f.string("comparator"), f.at("comparator"));
    t.threshold = f.integer("threshold");
    t.latching = f.boolean_or("latching", false);
    return t;
}

Rule parse_rule(const json& j, const std::string& path) {
    Fields f(j, path, {"when", "effect", "tiers", "position"});
    Rule r;
    if (f.has("when")) {
        auto when = f.string("when");
        if (when != "always") r.when = when;
    }
    r.effect = parse_enum(f.string("effect"), f.at("effect"),
                          {RuleEffect::use_tier_order, RuleEffect::divert_residual_to, RuleEffect::zero_dues_of});
    if (r.effect == RuleEffect::use_tier_order) {
        r.tier_order = string_list(f.array("tiers"), f.at("tiers"));
        if (f.has("position")) schema_error(f.at("position"), "not allowed for use_tier_order");
    } else {
        r.position = f.string("position");
        if (f.has("tiers")) schema_error(f.at("tiers"), "only allowed for use_tier_order");
    }
    return r;
}

std::string weight_string(const Rational& r) { return rational_to_string(r); }

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text, std::vector<std::string>& header) {
    std::istringstream is(text);
    std::string line;
    std::vector<std::vector<std::string>> rows;
    bool first = true;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split(line);
        if (first) {
            header = std::move(cells);
            first = false;
            continue;
        }
        if (cells.size() != header.size()) {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                                   std::to_string(header.size()) + " columns");
        }
        rows.push_back(std::move(cells));
    }
    if (first) throw Error(ErrorCode::ParseError, "empty CSV");
    return rows;
}

std::int64_t parse_int(const std::string& s, const std::string& what) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw Error(ErrorCode::ParseError, what + ": '" + s + "' is not an integer");
    }
    return v;
}

double parse_double(const std::string& s, const std::string& what) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw Error(ErrorCode::ParseError, what + ": '" + s + "' is not a number");
    return v;
}

std::string shortest(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
    if (ec != std::errc{}) return std::to_string(v);
    return std::string(buf, end);
}

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

StructureSpec parse_structure(const std::string& text) {
    json j = parse_json(text);
    Fields f(j, "", {"name", "horizon", "initial_residual", "positions", "tiers", "triggers", "rules"});
    StructureSpec spec;
    spec.name = f.string("name");
    spec.horizon = f.integer("horizon");
    spec.initial_residual = Money{f.integer_or("initial_residual", 0)};
    const auto& positions = f.array("positions");
    for (std::size_t i = 0; i < positions.size(); ++i) {
        spec.positions.push_back(parse_position(positions[i], "/positions/" + std::to_string(i)));
    }
    const auto& tiers = f.array("tiers");
    for (std::size_t i = 0; i < tiers.size(); ++i) spec.tiers.push_back(parse_tier(tiers[i], "/tiers/" + std::to_string(i)));
    if (const json* tr = f.optional_array("triggers")) {
        for (std::size_t i = 0; i < tr->size(); ++i) {
            spec.triggers.push_back(parse_trigger((*tr)[i], "/triggers/" + std::to_string(i)));
        }
    }
    if (const json* rules = f.optional_array("rules")) {
        for (std::size_t i = 0; i < rules->size(); ++i) {
            spec.rules.push_back(parse_rule((*rules)[i], "/rules/" + std::to_string(i)));
        }
    }
    validate_spec(spec);
    return spec;
}

std::string serialize_structure(const StructureSpec& spec) {
    ordered out;
    out["name"] = spec.name;
    out["horizon"] = spec.horizon;
    out["initial_residual"] = spec.initial_residual.minor();
    out["positions"] = ordered::array();
    for (const auto& p : spec.positions) {
        ordered o;
        o["name"] = p.name;
        o["kind"] = std::string(to_string(p.kind));
        o["notional"] = p.notional.minor();
        o["priority"] = p.priority;
        o["maturity"] = p.maturity ? ordered(*p.maturity) : ordered(nullptr);
        ordered params;
        params["rate_bps"] = p.params.rate_bps;
        params["cap"] = p.params.cap ? ordered(p.params.cap->minor()) : ordered(nullptr);
        params["cumulative_dues"] = p.params.cumulative_dues;
        params["amortizing"] = p.params.amortizing;
        o["params"] = params;
        if (p.due_schedule) {
            o["due_schedule"] = ordered::array();
            for (auto d : *p.due_schedule) o["due_schedule"].push_back(d.minor());
        } else {
            o["due_schedule"] = nullptr;
        }
        out["positions"].push_back(o);
    }
    out["tiers"] = ordered::array();
    for (const auto& t : spec.tiers) {
        ordered o;
        o["name"] = t.name;
        o["mode"] = std::string(to_string(t.mode));
        o["members"] = t.members;
        if (t.mode == TierMode::pro_rata) {
            o["weights"] = ordered::array();
            for (const auto& w : t.weights) o["weights"].push_back(weight_string(w));
        }
        out["tiers"].push_back(o);
    }
    out["triggers"] = ordered::array();
    for (const auto& t : spec.triggers) {
        ordered o;
        o["name"] = t.name;
        o["metric"] = std::string(to_string(t.metric));
        if (t.metric == TriggerMetric::cumulative_position_shortfall) o["position"] = t.position;
        o["comparator"] = std::string(to_string(t.comparator));
        o["threshold"] = t.threshold;
        o["latching"] = t.latching;
        out["triggers"].push_back(o);
    }
    out["rules"] = ordered::array();
    for (const auto& r : spec.rules) {
        ordered o;
        o["when"] = r.when ? *r.when : std::string("always");
        o["effect"] = std::string(to_string(r.effect));
        if (r.effect == RuleEffect::use_tier_order) {
            o["tiers"] = r.tier_order;
        } else {
            o["position"] = r.position;
        }
        out["rules"].push_back(o);
    }
    return out.dump(2) + "\n";
}

PoolSpec parse_pool(const std::string& text) {
    json j = parse_json(text);
    Fields f(j, "", {"horizon", "dependence", "correlation", "units"});
    PoolSpec pool;
    pool.horizon = f.integer("horizon");
    auto dep = f.has("dependence") ? f.string("dependence") : std::string("independent");
    if (dep == "independent") {
        pool.dependence = Dependence::independent;
        if (f.has("correlation")) schema_error(f.at("correlation"), "only allowed with one_factor dependence");
    } else if (dep == "one_factor") {
        pool.dependence = Dependence::one_factor;
        const auto& c = f.required("correlation");
        if (!c.is_number()) schema_error(f.at("correlation"), "expected a number");
        pool.correlation = c.get<double>();
    } else {
        schema_error(f.at("dependence"), "unexpected value '" + dep + "'");
    }
    const auto& units = f.array("units");
    for (std::size_t i = 0; i < units.size(); ++i) {
        std::string path = "/units/" + std::to_string(i);
        Fields u(units[i], path, {"id", "baseline", "outstanding_principal", "default_hazard_bps", "prepay_hazard_bps",
                                  "recovery_bps", "recovery_lag"});
        Unit unit;
        unit.id = u.string("id");
        unit.baseline = money_list(u.array("baseline"), u.at("baseline"));
        unit.outstanding_principal = Money{u.integer_or("outstanding_principal", 0)};
        auto hazard = [&](const std::string& key) -> std::vector<std::int64_t> {
            if (!u.has(key)) return {0};
            const auto& v = units[i].at(key);
            if (v.is_array()) return int_list(v, u.at(key));
            return {Fields::as_integer(v, u.at(key))};
        };
        unit.default_hazard_bps = hazard("default_hazard_bps");
        unit.prepay_hazard_bps = hazard("prepay_hazard_bps");
        unit.recovery_bps = u.integer_or("recovery_bps", 0);
        unit.recovery_lag = u.integer_or("recovery_lag", 0);
        pool.units.push_back(std::move(unit));
    }
    validate_pool(pool);
    return pool;
}

std::string serialize_pool(const PoolSpec& pool) {
    ordered out;
    out["horizon"] = pool.horizon;
    out["dependence"] = pool.dependence == Dependence::independent ? "independent" : "one_factor";
    if (pool.dependence == Dependence::one_factor) out["correlation"] = pool.correlation;
    out["units"] = ordered::array();
    for (const auto& u : pool.units) {
        ordered o;
        o["id"] = u.id;
        o["baseline"] = ordered::array();
        for (auto b : u.baseline) o["baseline"].push_back(b.minor());
        o["outstanding_principal"] = u.outstanding_principal.minor();
        o["default_hazard_bps"] = u.default_hazard_bps;
        o["prepay_hazard_bps"] = u.prepay_hazard_bps;
        o["recovery_bps"] = u.recovery_bps;
        o["recovery_lag"] = u.recovery_lag;
        out["units"].push_back(o);
    }
    return out.dump(2) + "\n";
}

DesignSpace parse_design_space(const std::string& text, StructureSpec base) {
    json j = parse_json(text);
    Fields f(j, "", {"parameters", "constraints"});
    DesignSpace space;
    space.base = std::move(base);
    const auto& params = f.array("parameters");
    for (std::size_t i = 0; i < params.size(); ++i) {
        std::string path = "/parameters/" + std::to_string(i);
        Fields p(params[i], path, {"kind", "target", "grid"});
        DesignParameter param;
        auto kind = p.string("kind");
        param.target = p.string("target");
        const auto& grid = p.array("grid");
        for (std::size_t k = 0; k < grid.size(); ++k) {
            std::string gp = p.at("grid") + "/" + std::to_string(k);
            if (kind == "position_notional" || kind == "trigger_threshold") {
                param.grid.emplace_back(Fields::as_integer(grid[k], gp));
            } else if (kind == "pro_rata_weights") {
                param.grid.emplace_back(weight_list(grid[k], gp));
            } else if (kind == "tier_order") {
                param.grid.emplace_back(string_list(grid[k], gp));
            } else {
                schema_error(p.at("kind"), "unexpected value '" + kind + "'");
            }
        }
        param.kind = kind == "position_notional"  ? ParameterKind::position_notional
                     : kind == "trigger_threshold" ? ParameterKind::trigger_threshold
                     : kind == "pro_rata_weights"  ? ParameterKind::pro_rata_weights
                     : kind == "tier_order"        ? ParameterKind::tier_order
                                                   : (schema_error(p.at("kind"), "unexpected value '" + kind + "'"),
                                                      ParameterKind::position_notional);
        space.parameters.push_back(std::move(param));
    }
    if (const json* cs = f.optional_array("constraints")) {
        for (std::size_t i = 0; i < cs->size(); ++i) {
            std::string path = "/constraints/" + std::to_string(i);
            Fields c((*cs)[i], path, {"total_notional_equals", "metric_bound"});
            if (c.has("total_notional_equals")) {
                space.constraints.emplace_back(TotalNotional{Money{c.integer("total_notional_equals")}});
            } else if (c.has("metric_bound")) {
                Fields b((*cs)[i].at("metric_bound"), c.at("metric_bound"),
                         {"position", "metric", "level", "comparator", "bound"});
                MetricBound mb;
                mb.position = b.string("position");
                auto metric = b.string("metric");
                if (metric == "expected_loss") {
                    mb.metric = MetricKind::expected_loss;
                } else if (metric == "shortfall_prob") {
                    mb.metric = MetricKind::shortfall_prob;
                } else if (metric == "quantile") {
                    mb.metric = MetricKind::quantile;
                    const auto& lv = b.required("level");
                    if (!lv.is_number()) schema_error(b.at("level"), "expected a number");
                    mb.level = lv.get<double>();
                } else {
                    schema_error(b.at("metric"), "unexpected value '" + metric + "'");
                }
                mb.comparator = parse_comparator(b.string("comparator"), b.at("comparator"));
                const auto& bound = b.required("bound");
                if (!bound.is_number()) schema_error(b.at("bound"), "expected a number");
                mb.bound = bound.get<double>();
                space.constraints.emplace_back(mb);
            } else {
                schema_error(path, "expected total_notional_equals or metric_bound");
            }
        }
    }
    return space;
}

Objective parse_objective(const std::string& text) {
    json j = parse_json(text);
    Fields f(j, "", {"position", "metric", "direction"});
    Objective o;
    o.position = f.string("position");
    auto metric = f.string("metric");
    if (metric == "present_value") {
        o.metric = ObjectiveMetric::present_value;
    } else if (metric == "expected_payment_total") {
        o.metric = ObjectiveMetric::expected_payment_total;
    } else if (metric == "negated_expected_loss") {
        o.metric = ObjectiveMetric::negated_expected_loss;
    } else {
        schema_error(f.at("metric"), "unexpected value '" + metric + "'");
    }
    if (f.has("direction") && f.string("direction") != "maximize") schema_error(f.at("direction"), "only 'maximize' is supported");
    return o;
}

InflowPath parse_inflows_csv(const std::string& text) {
    std::vector<std::string> header;
    auto rows = csv_rows(text, header);
    const bool with_loss = header == std::vector<std::string>{"period", "amount", "pool_loss"};
    if (!with_loss && header != std::vector<std::string>{"period", "amount"}) {
        throw Error(ErrorCode::ParseError, "inflow CSV header must be 'period,amount' (optionally ',pool_loss')");
    }
    InflowPath out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (parse_int(rows[i][0], "period") != static_cast<std::int64_t>(i)) {
            throw Error(ErrorCode::ParseError, "inflow periods must run 0, 1, ... in order");
        }
        out.inflows.emplace_back(parse_int(rows[i][1], "amount"));
        if (with_loss) out.pool_losses.emplace_back(parse_int(rows[i][2], "pool_loss"));
    }
    return out;
}

DiscountCurve parse_curve_csv(const std::string& text) {
    std::vector<std::string> header;
    auto rows = csv_rows(text, header);
    if (header != std::vector<std::string>{"period", "factor"}) {
        throw Error(ErrorCode::ParseError, "curve CSV header must be 'period,factor'");
    }
    DiscountCurve curve;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (parse_int(rows[i][0], "period") != static_cast<std::int64_t>(i)) {
            throw Error(ErrorCode::ParseError, "curve periods must run 0, 1, ... in order");
        }
        curve.factors.push_back(parse_double(rows[i][1], "factor"));
    }
    curve.validate();
    return curve;
}

std::string payments_csv(const StructureSpec& spec, std::span<const PaymentMatrix> matrices, const Weights& weights) {
    std::string out = weights ? "scenario,period,position,due,paid,residual_after,weight\n"
                              : "scenario,period,position,due,paid,residual_after\n";
    for (std::size_t s = 0; s < matrices.size(); ++s) {
        const auto& m = matrices[s];
        const std::string tail = weights ? "," + rational_to_string((*weights)[s]) + "\n" : "\n";
        const std::string sid = std::to_string(m.scenario);
        for (const auto& p : m.periods) {
            const std::string prefix = sid + "," + std::to_string(p.period) + ",";
            const std::string residual = "," + p.residual_after.str();
            for (std::size_t i = 0; i < spec.positions.size(); ++i) {
                out += prefix;
                out += spec.positions[i].name;
                out += ',';
                out += p.dues[i].str();
                out += ',';
                out += p.payments[i].str();
                out += residual;
                out += tail;
            }
        }
    }
    return out;
}

std::string scenarios_csv(std::span<const InflowScenario> scenarios) {
    bool weighted = !scenarios.empty() && scenarios.front().weight.has_value();
    std::string out = weighted ? "scenario,period,inflow,weight\n" : "scenario,period,inflow\n";
    for (const auto& s : scenarios) {
        for (std::size_t t = 0; t < s.inflows.size(); ++t) {
            out += std::to_string(s.id) + "," + std::to_string(t) + "," + s.inflows[t].str();
            if (weighted) out += "," + rational_to_string(s.weight.value_or(Rational(0)));
            out += "\n";
        }
    }
    return out;
}

PaymentsTable parse_payments_csv(const std::string& text) {
    std::vector<std::string> header;
    auto rows = csv_rows(text, header);
    const std::vector<std::string> base{"scenario", "period", "position", "due", "paid", "residual_after"};
    auto with_weight = base;
    with_weight.push_back("weight");
    const bool weighted = header == with_weight;
    if (!weighted && header != base) throw Error(ErrorCode::ParseError, "unexpected payments CSV header");

    PaymentsTable table;
    std::vector<Rational> weights;
    std::map<std::string, std::size_t> position_of;
    for (const auto& r : rows) {
        if (!position_of.count(r[2])) {
            position_of[r[2]] = table.positions.size();
            table.positions.push_back(r[2]);
        }
    }
    const std::size_t n = table.positions.size();
    std::int64_t current = -1;
    for (const auto& r : rows) {
        auto scenario = parse_int(r[0], "scenario");
        auto period = parse_int(r[1], "period");
        if (table.matrices.empty() || scenario != current) {
            current = scenario;
            table.matrices.emplace_back();
            table.matrices.back().scenario = scenario;
            if (weighted) weights.push_back(parse_rational(r[6]));
        }
        auto& m = table.matrices.back();
        if (m.periods.empty() || m.periods.back().period != period) {
            if (period != static_cast<std::int64_t>(m.periods.size())) {
                throw Error(ErrorCode::ParseError, "scenario " + r[0] + ": periods must run 0, 1, ... in order");
            }
            PeriodAllocation pa;
            pa.period = period;
            pa.payments.assign(n, Money{0});
            pa.dues.assign(n, Money{0});
            m.periods.push_back(std::move(pa));
        }
        auto& pa = m.periods.back();
        auto i = position_of[r[2]];
        pa.dues[i] = Money{parse_int(r[3], "due")};
        pa.payments[i] = Money{parse_int(r[4], "paid")};
        pa.residual_after = Money{parse_int(r[5], "residual_after")};
    }
    if (weighted) table.weights = std::move(weights);
    return table;
}

std::string report_json(const MetricReport& report, std::int64_t minor_per_major) {
    auto major = [&](const Rational& r) { return to_major_string(r, minor_per_major); };
    ordered out;
    out["minor_per_major"] = minor_per_major;
    out["levels"] = report.levels;
    out["positions"] = ordered::array();
    for (const auto& p : report.positions) {
        ordered o;
        o["position"] = p.position;
        o["expected_payments"] = ordered::array();
        for (const auto& v : p.expected_path_exact) o["expected_payments"].push_back(major(v));
        o["present_value"] = shortest(p.present_value / static_cast<double>(minor_per_major));
        o["expected_loss"] = major(p.loss.expected_loss);
        o["shortfall_probability"] = to_major_string(p.loss.shortfall_probability, 1);
        o["quantiles"] = ordered::object();
        for (std::size_t k = 0; k < report.levels.size(); ++k) {
            o["quantiles"][shortest(report.levels[k])] = major(Rational(p.loss.quantiles[k].minor()));
        }
        o["losses"] = ordered::array();
        for (auto l : p.loss.samples) o["losses"].push_back(major(Rational(l.minor())));
        out["positions"].push_back(o);
    }
    return out.dump(2) + "\n";
}

std::string report_csv(const MetricReport& report, std::int64_t minor_per_major) {
    auto major = [&](const Rational& r) { return to_major_string(r, minor_per_major); };
    std::string out = "position,metric,value\n";
    for (const auto& p : report.positions) {
        for (std::size_t t = 0; t < p.expected_path_exact.size(); ++t) {
            out += p.position + ",expected_payment[" + std::to_string(t) + "]," + major(p.expected_path_exact[t]) + "\n";
        }
        out += p.position + ",present_value," + shortest(p.present_value / static_cast<double>(minor_per_major)) + "\n";
        out += p.position + ",expected_loss," + major(p.loss.expected_loss) + "\n";
        out += p.position + ",shortfall_probability," + to_major_string(p.loss.shortfall_probability, 1) + "\n";
        for (std::size_t k = 0; k < report.levels.size(); ++k) {
            out += p.position + ",quantile[" + shortest(report.levels[k]) + "]," +
                   major(Rational(p.loss.quantiles[k].minor())) + "\n";
        }
    }
    return out;
}

std::string sweep_table_csv(const DesignSpace& space, const SearchResult& result) {
    auto render = [](const ParameterValue& v) -> std::string {
        if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
        std::string s;
        if (const auto* w = std::get_if<std::vector<Rational>>(&v)) {
            for (const auto& x : *w) s += (s.empty() ? "" : "|") + rational_to_string(x);
        } else {
            for (const auto& x : std::get<std::vector<std::string>>(v)) s += (s.empty() ? "" : ">") + x;
        }
        return s;
    };
    auto kind_name = [](ParameterKind k) {
        switch (k) {
            case ParameterKind::position_notional: return "position_notional";
            case ParameterKind::trigger_threshold: return "trigger_threshold";
            case ParameterKind::pro_rata_weights: return "pro_rata_weights";
            case ParameterKind::tier_order: return "tier_order";
        }
        return "?";
    };
    std::string out = "point";
    for (const auto& p : space.parameters) out += "," + csv_cell(std::string(kind_name(p.kind)) + ":" + p.target);
    out += ",objective,feasible,valid,rank";
    for (const auto& c : space.constraints) out += "," + csv_cell("slack:" + describe(c));
    out += "\n";

    std::vector<std::string> rank(result.points.size());
    for (std::size_t r = 0; r < result.ranking.size(); ++r) rank[result.ranking[r]] = std::to_string(r + 1);
    for (std::size_t i = 0; i < result.points.size(); ++i) {
        const auto& e = result.points[i];
        out += std::to_string(i);
        for (std::size_t j = 0; j < space.parameters.size(); ++j) {
            out += "," + csv_cell(render(space.parameters[j].grid[e.grid_index[j]]));
        }
        out += "," + (e.valid ? shortest(e.objective) : std::string());
        out += e.feasible ? ",true" : ",false";
        out += e.valid ? ",true" : ",false";
        out += "," + rank[i];
        for (std::size_t c = 0; c < space.constraints.size(); ++c) {
            out += "," + (e.valid && c < e.slacks.size() ? shortest(e.slacks[c]) : std::string());
        }
        out += "\n";
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw Error(ErrorCode::IoError, "write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorCode::IoError, "cannot move output into '" + path.string() + "'");
    }
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

std::string RunManifest::to_json() const {
    ordered out;
    out["tool_version"] = tool_version;
    out["command"] = command;
    out["inputs"] = ordered::array();
    for (const auto& [path, digest] : input_digests) out["inputs"].push_back({{"path", path}, {"sha256", digest}});
    out["seed"] = seed ? ordered(*seed) : ordered(nullptr);
    out["scenario_count"] = scenario_count ? ordered(*scenario_count) : ordered(nullptr);
    out["timestamp"] = timestamp;
    return out.dump(2) + "\n";
}

}  // namespace cascade::io
