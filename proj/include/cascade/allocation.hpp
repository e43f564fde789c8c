#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cascade/money.hpp"
#include "cascade/structure.hpp"

namespace cascade {

struct AllocationResult {
    std::vector<Money> payments;
    Money remaining;

    friend bool operator==(const AllocationResult&, const AllocationResult&) = default;
};

// Pays each due in order with min(due, remaining funds).
AllocationResult allocate_sequential(Money available, std::span<const Money> dues);

// Capped proportional split with redistribution of freed excess. Integer rounding
// uses largest remainder per round, lower index first on ties.
AllocationResult allocate_pro_rata(Money available, std::span<const Money> dues, std::span<const Rational> weights);

// Vectors are indexed like spec.positions / spec.triggers.
struct PeriodAllocation {
    Period period = 0;
    Money inflow;
    Money available;
    std::vector<Money> payments;
    std::vector<Money> dues;
    Money residual_after;
    std::vector<std::string> effective_tier_order;
    std::vector<bool> trigger_values;

    friend bool operator==(const PeriodAllocation&, const PeriodAllocation&) = default;
};

struct PaymentMatrix {
    std::int64_t scenario = 0;
    std::vector<PeriodAllocation> periods;
    StructureState final_state;

    friend bool operator==(const PaymentMatrix&, const PaymentMatrix&) = default;
};

struct PeriodStep {
    PeriodAllocation allocation;
    StructureState next;
};

// One period of the waterfall. pool_loss is the pool loss realised during this
// period; it enters the state only after allocation.
PeriodStep allocate_period(const StructureSpec& spec, const StructureState& state, Money inflow,
                           Money pool_loss = Money{0});

// Folds allocate_period over every period. pool_losses may be empty (treated as zero).
PaymentMatrix run_waterfall(const StructureSpec& spec, std::span<const Money> inflows,
                            std::span<const Money> pool_losses = {}, std::int64_t scenario = 0);

}  // namespace cascade
