#include "cascade/inflow.hpp"

#include <cmath>
#include <set>

#include "cascade/random.hpp"

namespace cascade {

std::string_view to_string(EventType e) { return e == EventType::default_event ? "default" : "prepayment"; }

namespace {

std::int64_t hazard_at(const std::vector<std::int64_t>& h, Period t) {
    if (h.empty()) return 0;
    if (h.size() == 1) return h.front();
    return t >= 0 && t < static_cast<Period>(h.size()) ? h[static_cast<std::size_t>(t)] : 0;
}

std::uint64_t id_key(const std::string& id) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : id) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void check_trace(const EventTrace& trace, Period horizon) {
    if (trace && (trace->period < 0 || trace->period >= horizon)) {
        throw Error(ErrorCode::InconsistentTrace, "event period " + std::to_string(trace->period) + " outside horizon");
    }
}

}  // namespace

std::int64_t Unit::default_hazard(Period t) const { return hazard_at(default_hazard_bps, t); }
std::int64_t Unit::prepay_hazard(Period t) const { return hazard_at(prepay_hazard_bps, t); }

UnitState unit_state_at(const Unit& unit, const EventTrace& trace, Period t, Period horizon) {
    check_trace(trace, horizon);
    UnitState s;
    if (!trace || trace->period > t) return s;
    s.since = trace->period;
    if (trace->type == EventType::prepayment) {
        s.status = UnitStatus::prepaid;
        return s;
    }
    s.status = UnitStatus::defaulted;
    Period due = std::min(trace->period + unit.recovery_lag, horizon - 1);
    if (due > t) s.pending_recovery = std::make_pair(due, apply_bps(unit.outstanding_principal, unit.recovery_bps));
    return s;
}

void validate_pool(const PoolSpec& pool) {
    std::vector<Error> issues;
    auto add = [&](ErrorCode c, std::string m) { issues.emplace_back(c, std::move(m)); };
    if (pool.horizon < 1) add(ErrorCode::InvalidPool, "horizon must be at least 1");
    if (pool.units.empty()) add(ErrorCode::InvalidPool, "pool has no units");
    if (pool.dependence == Dependence::one_factor && !(pool.correlation >= 0.0 && pool.correlation <= 1.0)) {
        add(ErrorCode::BadCorrelation, "correlation must lie in [0, 1]");
    }
    std::set<std::string> ids;
    for (const auto& u : pool.units) {
        const std::string where = "unit '" + u.id + "'";
        if (!ids.insert(u.id).second) add(ErrorCode::InvalidPool, "duplicate " + where);
        if (static_cast<Period>(u.baseline.size()) != pool.horizon) {
            add(ErrorCode::LengthMismatch, where + ": baseline length differs from the horizon");
        }
        for (auto b : u.baseline) {
            if (b < Money{0}) {
                add(ErrorCode::NegativeAmount, where + ": negative baseline flow");
                break;
            }
        }
        if (u.outstanding_principal < Money{0}) add(ErrorCode::NegativeAmount, where + ": negative outstanding principal");
        if (u.recovery_bps < 0 || u.recovery_bps > 10000) add(ErrorCode::InvalidPool, where + ": recovery_bps outside [0, 10000]");
        if (u.recovery_lag < 0) add(ErrorCode::InvalidPool, where + ": negative recovery lag");
        for (const auto* h : {&u.default_hazard_bps, &u.prepay_hazard_bps}) {
            if (h->size() != 1 && static_cast<Period>(h->size()) != pool.horizon) {
                add(ErrorCode::LengthMismatch, where + ": hazard list must have one entry or one per period");
            }
        }
        for (Period t = 0; t < pool.horizon; ++t) {
            auto hd = u.default_hazard(t), hp = u.prepay_hazard(t);
            if (hd < 0 || hp < 0 || hd + hp > 10000) {
                add(ErrorCode::InvalidPool, where + ": hazards at period " + std::to_string(t) + " outside [0, 10000] bps");
                break;
            }
        }
    }
    if (!issues.empty()) {
        // A single correlation problem surfaces under its own code.
        if (issues.size() == 1) throw issues.front();
        std::string msg = std::string("pool is invalid: ") + issues.front().what();
        throw Error(ErrorCode::InvalidPool, msg, std::move(issues));
    }
}

std::vector<Money> unit_cashflow(const Unit& unit, const EventTrace& trace, Period horizon) {
    check_trace(trace, horizon);
    if (static_cast<Period>(unit.baseline.size()) != horizon) {
        throw Error(ErrorCode::LengthMismatch, "unit '" + unit.id + "': baseline length differs from the horizon");
    }
    std::vector<Money> flows = unit.baseline;
    if (!trace) return flows;
    const auto event_at = static_cast<std::size_t>(trace->period);
    for (std::size_t t = event_at; t < flows.size(); ++t) flows[t] = Money{0};
    if (trace->type == EventType::prepayment) {
        flows[event_at] = unit.outstanding_principal;
    } else {
        auto paid_at = static_cast<std::size_t>(std::min(trace->period + unit.recovery_lag, horizon - 1));
        flows[paid_at] += apply_bps(unit.outstanding_principal, unit.recovery_bps);
    }
    return flows;
}

std::vector<Money> unit_loss(const Unit& unit, const EventTrace& trace, Period horizon) {
    check_trace(trace, horizon);
    std::vector<Money> loss(static_cast<std::size_t>(horizon));
    if (trace && trace->type == EventType::default_event) {
        loss[static_cast<std::size_t>(trace->period)] =
            unit.outstanding_principal - apply_bps(unit.outstanding_principal, unit.recovery_bps);
    }
    return loss;
}

std::vector<Money> aggregate_inflows(std::span<const std::vector<Money>> unit_flows) {
    if (unit_flows.empty()) return {};
    std::vector<Money> total(unit_flows.front().size());
    for (const auto& row : unit_flows) {
        if (row.size() != total.size()) throw Error(ErrorCode::RaggedInput, "unit flow rows differ in length");
        for (std::size_t t = 0; t < row.size(); ++t) total[t] += row[t];
    }
    return total;
}

InflowScenario build_scenario(const PoolSpec& pool, std::vector<EventTrace> events, std::int64_t id) {
    if (events.size() != pool.units.size()) throw Error(ErrorCode::InconsistentTrace, "one trace per unit required");
    InflowScenario s;
    s.id = id;
    s.pool_losses.assign(static_cast<std::size_t>(pool.horizon), Money{0});
    for (std::size_t i = 0; i < pool.units.size(); ++i) {
        s.unit_flows.push_back(unit_cashflow(pool.units[i], events[i], pool.horizon));
        auto loss = unit_loss(pool.units[i], events[i], pool.horizon);
        for (std::size_t t = 0; t < loss.size(); ++t) s.pool_losses[t] += loss[t];
    }
    s.inflows = s.unit_flows.empty() ? std::vector<Money>(static_cast<std::size_t>(pool.horizon))
                                     : aggregate_inflows(s.unit_flows);
    s.events = std::move(events);
    return s;
}

InflowScenario sample_scenario(const PoolSpec& pool, std::uint64_t master_seed, std::int64_t scenario) {
    if (pool.dependence == Dependence::one_factor && !(pool.correlation >= 0.0 && pool.correlation <= 1.0)) {
        throw Error(ErrorCode::BadCorrelation, "correlation must lie in [0, 1]");
    }
    const auto omega = static_cast<std::uint64_t>(scenario);
    const double loading = std::sqrt(pool.correlation);
    const double residual_loading = std::sqrt(1.0 - pool.correlation);

    std::vector<double> factor;
    if (pool.dependence == Dependence::one_factor) {
        for (Period t = 0; t < pool.horizon; ++t) {
            factor.push_back(rng::standard_normal(
                rng::hash({master_seed, omega, static_cast<std::uint64_t>(t), rng::kCommonFactor})));
        }
    }

    std::vector<EventTrace> events(pool.units.size());
    for (std::size_t i = 0; i < pool.units.size(); ++i) {
        const Unit& u = pool.units[i];
        const std::uint64_t key = id_key(u.id);
        for (Period t = 0; t < pool.horizon && !events[i]; ++t) {
            const auto tk = static_cast<std::uint64_t>(t);
            const auto hd = u.default_hazard(t), hp = u.prepay_hazard(t);
            if (pool.dependence == Dependence::independent) {
                auto h = rng::hash({master_seed, omega, key, tk, rng::kDefaultDraw});
                if (rng::below_bps(h, hd)) {
                    events[i] = UnitEvent{EventType::default_event, t};
                } else if (rng::below_bps(h, hd + hp)) {
                    events[i] = UnitEvent{EventType::prepayment, t};
                }
            } else {
                double eps = rng::standard_normal(rng::hash({master_seed, omega, key, tk, rng::kIdiosyncratic}));
                double latent = loading * factor[static_cast<std::size_t>(t)] + residual_loading * eps;
                if (hd > 0 && latent < rng::normal_quantile(static_cast<double>(hd) / 10000.0)) {
                    events[i] = UnitEvent{EventType::default_event, t};
                } else if (hd < 10000 &&
                           rng::below_bps(rng::hash({master_seed, omega, key, tk, rng::kPrepayDraw}), hp, 10000 - hd)) {
                    events[i] = UnitEvent{EventType::prepayment, t};
                }
            }
        }
    }
    return build_scenario(pool, std::move(events), scenario);
}

std::vector<InflowScenario> enumerate_scenarios(const PoolSpec& pool) {
    if (pool.dependence != Dependence::independent) {
        throw Error(ErrorCode::UnsupportedDependence, "exact enumeration supports independent units only");
    }
    struct Outcome {
        EventTrace trace;
        Rational probability;
    };
    std::vector<std::vector<Outcome>> per_unit;
    std::size_t total = 1;
    for (const auto& u : pool.units) {
        std::vector<Outcome> outcomes;
        Rational survive = 1;
        for (Period t = 0; t < pool.horizon; ++t) {
            Rational hd(u.default_hazard(t), 10000), hp(u.prepay_hazard(t), 10000);
            if (survive > 0 && hd > 0) outcomes.push_back({UnitEvent{EventType::default_event, t}, survive * hd});
            if (survive > 0 && hp > 0) outcomes.push_back({UnitEvent{EventType::prepayment, t}, survive * hp});
            survive *= 1 - hd - hp;
        }
        if (survive > 0) outcomes.insert(outcomes.begin(), Outcome{std::nullopt, survive});
        if (outcomes.size() > kMaxEnumeratedScenarios / total) {
            throw Error(ErrorCode::TooLarge, "scenario space exceeds " + std::to_string(kMaxEnumeratedScenarios));
        }
        total *= outcomes.size();
        per_unit.push_back(std::move(outcomes));
    }

    std::vector<InflowScenario> out;
    out.reserve(total);
    std::vector<std::size_t> digit(per_unit.size(), 0);
    for (std::size_t k = 0; k < total; ++k) {
        std::vector<EventTrace> events;
        Rational weight = 1;
        for (std::size_t i = 0; i < per_unit.size(); ++i) {
            events.push_back(per_unit[i][digit[i]].trace);
            weight *= per_unit[i][digit[i]].probability;
        }
        auto s = build_scenario(pool, std::move(events), static_cast<std::int64_t>(k));
        s.weight = weight;
        out.push_back(std::move(s));
        // Odometer, last unit fastest.
        for (std::size_t i = per_unit.size(); i-- > 0;) {
            if (++digit[i] < per_unit[i].size()) break;
            digit[i] = 0;
        }
    }
    return out;
}

}  // namespace cascade
