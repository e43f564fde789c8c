#include "cascade/structure.hpp"

#include <algorithm>
#include <set>

namespace cascade {

std::string_view to_string(PositionKind k) {
    switch (k) {
        case PositionKind::cost: return "cost";
        case PositionKind::note: return "note";
        case PositionKind::residual: return "residual";
    }
    return "?";
}

std::string_view to_string(TierMode m) { return m == TierMode::sequential ? "sequential" : "pro_rata"; }

std::string_view to_string(TriggerMetric m) {
    switch (m) {
        case TriggerMetric::cumulative_pool_loss: return "cumulative_pool_loss";
        case TriggerMetric::cumulative_position_shortfall: return "cumulative_position_shortfall";
        case TriggerMetric::residual_balance: return "residual_balance";
        case TriggerMetric::period_inflow: return "period_inflow";
        case TriggerMetric::period_index: return "period_index";
    }
    return "?";
}

std::string_view to_string(Comparator c) {
    switch (c) {
        case Comparator::less: return "<";
        case Comparator::less_equal: return "<=";
        case Comparator::greater: return ">";
        case Comparator::greater_equal: return ">=";
    }
    return "?";
}

std::string_view to_string(RuleEffect e) {
    switch (e) {
        case RuleEffect::use_tier_order: return "use_tier_order";
        case RuleEffect::divert_residual_to: return "divert_residual_to";
        case RuleEffect::zero_dues_of: return "zero_dues_of";
    }
    return "?";
}

namespace {

template <class T>
std::optional<std::size_t> find_named(const std::vector<T>& items, std::string_view name) {
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].name == name) return i;
    }
    return std::nullopt;
}

}  // namespace

std::optional<std::size_t> StructureSpec::position_index(std::string_view n) const { return find_named(positions, n); }
std::optional<std::size_t> StructureSpec::tier_index(std::string_view n) const { return find_named(tiers, n); }
std::optional<std::size_t> StructureSpec::trigger_index(std::string_view n) const { return find_named(triggers, n); }

StructureState initial_state(const StructureSpec& spec) {
    StructureState s;
    s.residual = spec.initial_residual;
    s.positions.resize(spec.positions.size());
    for (std::size_t i = 0; i < spec.positions.size(); ++i) s.positions[i].outstanding = spec.positions[i].notional;
    s.latched.assign(spec.triggers.size(), false);
    return s;
}

std::vector<Error> collect_violations(const StructureSpec& spec) {
    std::vector<Error> out;
    auto add = [&](ErrorCode c, std::string msg) { out.emplace_back(c, std::move(msg)); };

    if (spec.horizon < 1) add(ErrorCode::InvalidStructure, "horizon must be at least 1");
    if (spec.positions.empty()) add(ErrorCode::EmptyStructure, "structure has no positions");
    if (spec.initial_residual < Money{0}) add(ErrorCode::NegativeAmount, "initial_residual is negative");

    std::set<std::string> names;
    for (const auto& p : spec.positions) {
        const std::string where = "position '" + p.name + "'";
        if (!names.insert(p.name).second) add(ErrorCode::DuplicatePosition, "duplicate " + where);
        if (p.notional < Money{0}) add(ErrorCode::NegativeAmount, where + ": notional is negative");
        if (p.params.cap && *p.params.cap < Money{0}) add(ErrorCode::NegativeAmount, where + ": cap is negative");
        if (p.params.rate_bps < 0) add(ErrorCode::NegativeAmount, where + ": rate_bps is negative");
        if (p.maturity && (*p.maturity < 0 || *p.maturity >= spec.horizon)) {
            add(ErrorCode::InvalidStructure, where + ": maturity outside the horizon");
        }
        if (p.params.amortizing && !p.maturity) {
            add(ErrorCode::InvalidStructure, where + ": amortizing positions need a maturity");
        }
        if (p.due_schedule) {
            if (static_cast<Period>(p.due_schedule->size()) > spec.horizon) {
                add(ErrorCode::InvalidStructure, where + ": due_schedule longer than the horizon");
            }
            for (auto d : *p.due_schedule) {
                if (d < Money{0}) {
                    add(ErrorCode::NegativeAmount, where + ": due_schedule entry is negative");
                    break;
                }
            }
        }
    }

    std::vector<int> membership(spec.positions.size(), 0);
    std::set<std::string> tier_names;
    std::optional<std::int64_t> previous_tier_max;
    for (const auto& tier : spec.tiers) {
        const std::string where = "tier '" + tier.name + "'";
        if (!tier_names.insert(tier.name).second) add(ErrorCode::InvalidStructure, "duplicate " + where);
        if (tier.members.empty()) add(ErrorCode::InvalidStructure, where + " has no members");

        std::optional<std::int64_t> lo, hi, previous_member;
        for (const auto& m : tier.members) {
            auto idx = spec.position_index(m);
            if (!idx) {
                add(ErrorCode::UnresolvedReference, where + " references unknown position '" + m + "'");
                continue;
            }
            ++membership[*idx];
            const auto& p = spec.positions[*idx];
            if (tier.mode == TierMode::pro_rata && p.kind == PositionKind::residual) {
                add(ErrorCode::InvalidStructure, where + ": residual position '" + m + "' must be in a sequential tier");
            }
            if (tier.mode == TierMode::sequential && previous_member && p.priority <= *previous_member) {
                add(ErrorCode::InvalidStructure, where + ": members not in strict priority order at '" + m + "'");
            }
            previous_member = p.priority;
            lo = lo ? std::min(*lo, p.priority) : p.priority;
            hi = hi ? std::max(*hi, p.priority) : p.priority;
        }
        if (lo && previous_tier_max && *lo <= *previous_tier_max) {
            add(ErrorCode::InvalidStructure, where + " is not junior to the tier before it");
        }
        if (hi) previous_tier_max = hi;

        if (tier.mode == TierMode::pro_rata) {
            if (tier.weights.size() != tier.members.size()) {
                add(ErrorCode::BadWeights, where + ": weight count does not match member count");
            } else {
                Rational sum = 0;
                bool negative = false;
                for (const auto& w : tier.weights) {
                    negative |= w < 0;
                    sum += w;
                }
                if (negative) add(ErrorCode::BadWeights, where + ": negative weight");
                if (sum != 1) add(ErrorCode::BadWeights, where + ": weights sum to " + rational_to_string(sum) + ", not 1");
            }
        } else if (!tier.weights.empty()) {
            add(ErrorCode::BadWeights, where + ": sequential tiers take no weights");
        }
    }
    for (std::size_t i = 0; i < spec.positions.size(); ++i) {
        if (membership[i] == 0) add(ErrorCode::InvalidStructure, "position '" + spec.positions[i].name + "' is in no tier");
        if (membership[i] > 1) add(ErrorCode::InvalidStructure, "position '" + spec.positions[i].name + "' is in several tiers");
    }

    std::set<std::string> trigger_names;
    for (const auto& tr : spec.triggers) {
        const std::string where = "trigger '" + tr.name + "'";
        if (!trigger_names.insert(tr.name).second) add(ErrorCode::InvalidStructure, "duplicate " + where);
        if (tr.threshold < 0) add(ErrorCode::NegativeAmount, where + ": threshold is negative");
        if (tr.metric == TriggerMetric::cumulative_position_shortfall && !spec.position_index(tr.position)) {
            add(ErrorCode::UnresolvedReference, where + " references unknown position '" + tr.position + "'");
        }
    }

    for (std::size_t r = 0; r < spec.rules.size(); ++r) {
        const auto& rule = spec.rules[r];
        const std::string where = "rule " + std::to_string(r);
        if (rule.when && !spec.trigger_index(*rule.when)) {
            add(ErrorCode::UnresolvedReference, where + " references unknown trigger '" + *rule.when + "'");
        }
        switch (rule.effect) {
            case RuleEffect::use_tier_order: {
                std::set<std::string> seen;
                bool ok = rule.tier_order.size() == spec.tiers.size();
                for (const auto& t : rule.tier_order) {
                    if (!spec.tier_index(t)) {
                        add(ErrorCode::UnresolvedReference, where + " references unknown tier '" + t + "'");
                        ok = false;
                    }
                    ok &= seen.insert(t).second;
                }
                if (!ok) add(ErrorCode::InvalidStructure, where + ": tier order must list every tier exactly once");
                break;
            }
            case RuleEffect::divert_residual_to:
            case RuleEffect::zero_dues_of:
                if (!spec.position_index(rule.position)) {
                    add(ErrorCode::UnresolvedReference, where + " references unknown position '" + rule.position + "'");
                }
                break;
        }
    }
    return out;
}

const StructureSpec& validate_spec(const StructureSpec& spec) {
    auto violations = collect_violations(spec);
    if (!violations.empty()) {
        std::string msg = "structure '" + spec.name + "' is invalid (" + std::to_string(violations.size()) + " violation" +
                          (violations.size() == 1 ? "" : "s") + "): " + violations.front().what();
        throw Error(ErrorCode::ValidationError, msg, std::move(violations));
    }
    return spec;
}

Money derive_dues(const Position& position, const PositionState& state, Period t) {
    if (position.kind == PositionKind::residual) return Money::unbounded();
    if (position.due_schedule) {
        const auto& schedule = *position.due_schedule;
        return t >= 0 && t < static_cast<Period>(schedule.size()) ? schedule[static_cast<std::size_t>(t)] : Money{0};
    }
    Money due{0};
    if (!position.maturity || t <= *position.maturity) {
        due += apply_bps(state.outstanding, position.params.rate_bps);
        if (position.params.amortizing && position.maturity && t == *position.maturity) due += state.outstanding;
    }
    if (position.params.cumulative_dues) due += state.last_shortfall;
    if (position.params.cap) due = min(due, *position.params.cap);
    return due;
}

namespace {

bool compare(std::int64_t value, Comparator c, std::int64_t threshold) {
    switch (c) {
        case Comparator::less: return value < threshold;
        case Comparator::less_equal: return value <= threshold;
        case Comparator::greater: return value > threshold;
        case Comparator::greater_equal: return value >= threshold;
    }
    return false;
}

}  // namespace

bool evaluate_trigger(const StructureSpec& spec, const Trigger& trigger, const StructureState& state, Period t) {
    if (trigger.latching) {
        auto idx = spec.trigger_index(trigger.name);
        if (idx && *idx < state.latched.size() && state.latched[*idx]) return true;
    }
    std::int64_t value = 0;
    switch (trigger.metric) {
        case TriggerMetric::cumulative_pool_loss: value = state.cumulative_pool_loss.minor(); break;
        case TriggerMetric::cumulative_position_shortfall: {
            auto idx = spec.position_index(trigger.position);
            if (!idx || *idx >= state.positions.size()) {
                throw Error(ErrorCode::UnknownMetric,
                            "trigger '" + trigger.name + "': state carries no shortfall for '" + trigger.position + "'");
            }
            value = state.positions[*idx].cumulative_shortfall.minor();
            break;
        }
        case TriggerMetric::residual_balance: value = state.residual.minor(); break;
        case TriggerMetric::period_inflow: value = state.current_inflow.minor(); break;
        case TriggerMetric::period_index: value = t; break;
        default: throw Error(ErrorCode::UnknownMetric, "trigger '" + trigger.name + "': unknown metric");
    }
    return compare(value, trigger.comparator, trigger.threshold);
}

StructureSpec example_structure() {
    auto dues = [](std::int64_t amount) { return std::vector<Money>(3, Money{amount}); };
    StructureSpec spec;
    spec.name = "three-position example";
    spec.horizon = 3;
    spec.positions = {
        Position{.name = "cost", .kind = PositionKind::cost, .priority = 1, .due_schedule = dues(5)},
        Position{.name = "senior", .kind = PositionKind::note, .priority = 2, .due_schedule = dues(40)},
        Position{.name = "junior", .kind = PositionKind::note, .priority = 3, .due_schedule = dues(30)},
    };
    spec.tiers = {Tier{.name = "waterfall", .mode = TierMode::sequential, .members = {"cost", "senior", "junior"}}};
    return spec;
}

}  // namespace cascade
