#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cascade/error.hpp"
#include "cascade/money.hpp"

namespace cascade {

using Period = std::int64_t;

enum class PositionKind { cost, note, residual };
enum class TierMode { sequential, pro_rata };
enum class TriggerMetric {
    cumulative_pool_loss,
    cumulative_position_shortfall,
    residual_balance,
    period_inflow,
    period_index,
};
enum class Comparator { less, less_equal, greater, greater_equal };
enum class RuleEffect { use_tier_order, divert_residual_to, zero_dues_of };

std::string_view to_string(PositionKind);
std::string_view to_string(TierMode);
std::string_view to_string(TriggerMetric);
std::string_view to_string(Comparator);
std::string_view to_string(RuleEffect);

// Position-specific contractual parameters.
struct ContractParams {
    std::int64_t rate_bps = 0;  // per period, applied to outstanding notional
    std::optional<Money> cap;   // upper bound on each period's due
    bool cumulative_dues = false;
    bool amortizing = false;  // bullet principal due at maturity

    friend bool operator==(const ContractParams&, const ContractParams&) = default;
};

struct Position {
    std::string name;
    PositionKind kind = PositionKind::note;
    Money notional;
    std::int64_t priority = 0;  // lower is more senior
    std::optional<Period> maturity;
    ContractParams params;
    // Explicit dues by period; periods past the end owe nothing.
    std::optional<std::vector<Money>> due_schedule;

    friend bool operator==(const Position&, const Position&) = default;
};

struct Tier {
    std::string name;
    TierMode mode = TierMode::sequential;
    std::vector<std::string> members;
    std::vector<Rational> weights;  // pro_rata only

    friend bool operator==(const Tier&, const Tier&) = default;
};

struct Trigger {
    std::string name;
    TriggerMetric metric = TriggerMetric::cumulative_pool_loss;
    std::string position;  // cumulative_position_shortfall only
    Comparator comparator = Comparator::greater_equal;
    std::int64_t threshold = 0;  // minor units, or a period index
    bool latching = false;

    friend bool operator==(const Trigger&, const Trigger&) = default;
};

struct Rule {
    std::optional<std::string> when;  // trigger name; empty means always
    RuleEffect effect = RuleEffect::use_tier_order;
    std::vector<std::string> tier_order;  // use_tier_order
    std::string position;                 // divert_residual_to, zero_dues_of

    friend bool operator==(const Rule&, const Rule&) = default;
};

struct StructureSpec {
    std::string name;
    Period horizon = 0;  // number of periods, t = 0 .. horizon-1
    std::vector<Position> positions;
    std::vector<Tier> tiers;
    std::vector<Trigger> triggers;
    std::vector<Rule> rules;
    Money initial_residual;

    std::optional<std::size_t> position_index(std::string_view name) const;
    std::optional<std::size_t> tier_index(std::string_view name) const;
    std::optional<std::size_t> trigger_index(std::string_view name) const;

    friend bool operator==(const StructureSpec&, const StructureSpec&) = default;
};

struct PositionState {
    Money outstanding;
    Money cumulative_paid;
    Money cumulative_shortfall;
    Money last_shortfall;  // carried into the next due when cumulative_dues is set

    friend bool operator==(const PositionState&, const PositionState&) = default;
};

// Start-of-period state of one scenario. Never shared between scenarios.
struct StructureState {
    Period period = 0;
    Money residual;
    Money current_inflow;  // F_t, visible to triggers before allocation
    Money cumulative_pool_loss;
    std::vector<PositionState> positions;
    std::vector<bool> latched;  // indexed like spec.triggers

    friend bool operator==(const StructureState&, const StructureState&) = default;
};

StructureState initial_state(const StructureSpec& spec);

// Returns the spec if valid; otherwise throws Error(ValidationError) listing every violation.
const StructureSpec& validate_spec(const StructureSpec& spec);

// All violations, empty when valid.
std::vector<Error> collect_violations(const StructureSpec& spec);

Money derive_dues(const Position& position, const PositionState& state, Period t);

bool evaluate_trigger(const StructureSpec& spec, const Trigger& trigger, const StructureState& state, Period t);

// The three-position, three-period structure used throughout the docs.
StructureSpec example_structure();

}  // namespace cascade
