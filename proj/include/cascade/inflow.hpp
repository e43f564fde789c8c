#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cascade/money.hpp"
#include "cascade/structure.hpp"

namespace cascade {

// A cash-flow generating unit (loan, lease, receivable).
struct Unit {
    std::string id;
    std::vector<Money> baseline;  // scheduled flow per period
    Money outstanding_principal;
    // Per-period event probabilities in basis points: one entry (constant) or one per period.
    std::vector<std::int64_t> default_hazard_bps{0};
    std::vector<std::int64_t> prepay_hazard_bps{0};
    std::int64_t recovery_bps = 0;
    Period recovery_lag = 0;

    std::int64_t default_hazard(Period t) const;
    std::int64_t prepay_hazard(Period t) const;

    friend bool operator==(const Unit&, const Unit&) = default;
};

enum class EventType { default_event, prepayment };

std::string_view to_string(EventType);

// At most one absorbing event per unit: performing until it happens.
struct UnitEvent {
    EventType type = EventType::default_event;
    Period period = 0;

    friend bool operator==(const UnitEvent&, const UnitEvent&) = default;
};

using EventTrace = std::optional<UnitEvent>;

enum class UnitStatus { performing, defaulted, prepaid };

struct UnitState {
    UnitStatus status = UnitStatus::performing;
    Period since = 0;
    std::optional<std::pair<Period, Money>> pending_recovery;

    friend bool operator==(const UnitState&, const UnitState&) = default;
};

// State of a unit at the end of period t given its trace.
UnitState unit_state_at(const Unit& unit, const EventTrace& trace, Period t, Period horizon);

enum class Dependence { independent, one_factor };

struct PoolSpec {
    std::vector<Unit> units;
    Dependence dependence = Dependence::independent;
    double correlation = 0.0;  // one_factor only
    Period horizon = 0;

    friend bool operator==(const PoolSpec&, const PoolSpec&) = default;
};

void validate_pool(const PoolSpec& pool);

struct InflowScenario {
    std::int64_t id = 0;
    std::vector<EventTrace> events;                // per unit
    std::vector<std::vector<Money>> unit_flows;    // unit x period
    std::vector<Money> inflows;                    // aggregate F_t
    std::vector<Money> pool_losses;                // per period, outstanding less recovery at default
    std::optional<Rational> weight;                // enumeration only

    friend bool operator==(const InflowScenario&, const InflowScenario&) = default;
};

std::vector<Money> unit_cashflow(const Unit& unit, const EventTrace& trace, Period horizon);

// Loss booked by a unit at each period: outstanding less recovery, at the default period.
std::vector<Money> unit_loss(const Unit& unit, const EventTrace& trace, Period horizon);

std::vector<Money> aggregate_inflows(std::span<const std::vector<Money>> unit_flows);

InflowScenario build_scenario(const PoolSpec& pool, std::vector<EventTrace> events, std::int64_t id);

InflowScenario sample_scenario(const PoolSpec& pool, std::uint64_t master_seed, std::int64_t scenario);

inline constexpr std::size_t kMaxEnumeratedScenarios = 1'000'000;

std::vector<InflowScenario> enumerate_scenarios(const PoolSpec& pool);

}  // namespace cascade
