#include "cascade/allocation.hpp"

#include <algorithm>
#include <numeric>

namespace cascade {

namespace {

void require_non_negative(Money available, std::span<const Money> dues) {
    if (available < Money{0}) throw Error(ErrorCode::NegativeInput, "available funds are negative");
    for (auto d : dues) {
        if (d < Money{0}) throw Error(ErrorCode::NegativeInput, "a due amount is negative");
    }
}

BigInt floor_of(const Rational& r) {
    BigInt q = boost::multiprecision::numerator(r) / boost::multiprecision::denominator(r);
    if (r < 0 && Rational(q) != r) q -= 1;
    return q;
}

// Splits budget over `members` proportionally to weights, none exceeding its ideal
// share rounded up. Largest remainder; ties go to the lower index.
void largest_remainder(Money budget, const std::vector<std::size_t>& members, std::span<const Rational> weights,
                       const Rational& total_weight, std::vector<Money>& payments) {
    struct Share {
        std::size_t index;
        Rational fraction;
    };
    std::vector<Share> shares;
    shares.reserve(members.size());
    std::int64_t handed_out = 0;
    for (auto i : members) {
        Rational ideal = Rational(budget.minor()) * weights[i] / total_weight;
        BigInt whole = floor_of(ideal);
        auto whole64 = whole.convert_to<std::int64_t>();
        payments[i] += Money{whole64};
        handed_out += whole64;
        shares.push_back({i, ideal - Rational(whole)});
    }
    std::stable_sort(shares.begin(), shares.end(), [](const Share& a, const Share& b) {
        if (a.fraction != b.fraction) return a.fraction > b.fraction;
        return a.index < b.index;
    });
    std::int64_t left = budget.minor() - handed_out;
    for (std::size_t k = 0; left > 0 && k < shares.size(); ++k, --left) payments[shares[k].index] += Money{1};
}

}  // namespace

AllocationResult allocate_sequential(Money available, std::span<const Money> dues) {
    require_non_negative(available, dues);
    AllocationResult out{std::vector<Money>(dues.size()), available};
    for (std::size_t i = 0; i < dues.size(); ++i) {
        out.payments[i] = min(dues[i], out.remaining);
        out.remaining -= out.payments[i];
    }
    return out;
}

AllocationResult allocate_pro_rata(Money available, std::span<const Money> dues, std::span<const Rational> weights) {
    require_non_negative(available, dues);
    if (weights.size() != dues.size()) throw Error(ErrorCode::BadWeights, "weight count does not match due count");
    Rational sum = 0;
    for (const auto& w : weights) {
        if (w < 0) throw Error(ErrorCode::BadWeights, "negative pro-rata weight");
        sum += w;
    }
    if (sum != 1) throw Error(ErrorCode::BadWeights, "pro-rata weights sum to " + rational_to_string(sum));

    std::vector<Money> payments(dues.size());
    Money budget = available;
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < dues.size(); ++i) {
        if (dues[i] > Money{0} && weights[i] > 0) active.push_back(i);
    }

    while (budget > Money{0} && !active.empty()) {
        Rational total = 0;
        for (auto i : active) total += weights[i];

        // Cap every member whose proportional share covers what it is still owed.
        std::vector<std::size_t> still_open;
        Money freed{0};
        for (auto i : active) {
            Money need = dues[i] - payments[i];
            if (Rational(budget.minor()) * weights[i] / total >= Rational(need.minor())) {
                payments[i] = dues[i];
                freed += need;
            } else {
                still_open.push_back(i);
            }
        }
        if (freed == Money{0} && still_open.size() == active.size()) {
            largest_remainder(budget, active, weights, total, payments);
            budget = Money{0};
            break;
        }
        budget -= freed;
        active = std::move(still_open);
    }

    // Zero-weight members are served in member order once weighted members are full.
    for (std::size_t i = 0; i < dues.size() && budget > Money{0}; ++i) {
        if (weights[i] == 0) {
            Money pay = min(dues[i] - payments[i], budget);
            payments[i] += pay;
            budget -= pay;
        }
    }
    return {std::move(payments), budget};
}

PeriodStep allocate_period(const StructureSpec& spec, const StructureState& state, Money inflow, Money pool_loss) {
    if (inflow < Money{0}) throw Error(ErrorCode::NegativeInput, "inflow is negative");
    if (pool_loss < Money{0}) throw Error(ErrorCode::NegativeInput, "pool loss is negative");
    const Period t = state.period;
    const std::size_t n = spec.positions.size();

    StructureState start = state;
    start.current_inflow = inflow;

    PeriodAllocation alloc;
    alloc.period = t;
    alloc.inflow = inflow;
    alloc.available = inflow + state.residual;
    alloc.trigger_values.resize(spec.triggers.size());
    for (std::size_t j = 0; j < spec.triggers.size(); ++j) {
        alloc.trigger_values[j] = evaluate_trigger(spec, spec.triggers[j], start, t);
    }

    auto rule_active = [&](const Rule& r) {
        if (!r.when) return true;
        auto j = spec.trigger_index(*r.when);
        return j && alloc.trigger_values[*j];
    };

    const std::vector<std::string>* order = nullptr;
    std::optional<std::size_t> divert_to;
    std::vector<bool> zeroed(n, false);
    for (const auto& rule : spec.rules) {
        if (!rule_active(rule)) continue;
        switch (rule.effect) {
            case RuleEffect::use_tier_order:
                if (!order) order = &rule.tier_order;
                break;
            case RuleEffect::divert_residual_to:
                if (!divert_to) divert_to = spec.position_index(rule.position);
                break;
            case RuleEffect::zero_dues_of:
                if (auto i = spec.position_index(rule.position)) zeroed[*i] = true;
                break;
        }
    }
    if (order) {
        alloc.effective_tier_order = *order;
    } else {
        for (const auto& tier : spec.tiers) alloc.effective_tier_order.push_back(tier.name);
    }

    alloc.dues.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        alloc.dues[i] = zeroed[i] ? Money{0} : derive_dues(spec.positions[i], state.positions[i], t);
    }

    alloc.payments.assign(n, Money{0});
    Money remaining = alloc.available;
    for (const auto& tier_name : alloc.effective_tier_order) {
        const Tier& tier = spec.tiers[*spec.tier_index(tier_name)];
        std::vector<std::size_t> members;
        std::vector<Money> dues;
        for (const auto& m : tier.members) {
            members.push_back(*spec.position_index(m));
            dues.push_back(alloc.dues[members.back()]);
        }
        AllocationResult r = tier.mode == TierMode::sequential ? allocate_sequential(remaining, dues)
                                                               : allocate_pro_rata(remaining, dues, tier.weights);
        for (std::size_t k = 0; k < members.size(); ++k) alloc.payments[members[k]] = r.payments[k];
        remaining = r.remaining;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (alloc.dues[i].is_unbounded()) alloc.dues[i] = alloc.payments[i];
    }

    StructureState next = state;
    next.period = t + 1;
    next.current_inflow = Money{0};
    next.cumulative_pool_loss += pool_loss;

    for (std::size_t i = 0; i < n; ++i) {
        const Position& p = spec.positions[i];
        PositionState& ps = next.positions[i];
        if (p.kind == PositionKind::note && p.params.amortizing && !p.due_schedule && !zeroed[i] && p.maturity &&
            t == *p.maturity) {
            Money principal_due = state.positions[i].outstanding;
            Money other = positive_part(alloc.dues[i] - principal_due);
            Money principal_paid = min(positive_part(alloc.payments[i] - other), ps.outstanding);
            ps.outstanding -= principal_paid;
        }
    }

    if (divert_to && remaining > Money{0}) {
        const std::size_t i = *divert_to;
        const Position& p = spec.positions[i];
        Money extra = p.kind == PositionKind::note ? min(remaining, next.positions[i].outstanding) : remaining;
        alloc.payments[i] += extra;
        alloc.dues[i] += extra;
        remaining -= extra;
        if (p.kind == PositionKind::note) next.positions[i].outstanding -= extra;
    }
    alloc.residual_after = remaining;
    next.residual = remaining;

    for (std::size_t i = 0; i < n; ++i) {
        PositionState& ps = next.positions[i];
        Money shortfall = positive_part(alloc.dues[i] - alloc.payments[i]);
        ps.cumulative_paid += alloc.payments[i];
        ps.cumulative_shortfall += shortfall;
        ps.last_shortfall = shortfall;
    }
    for (std::size_t j = 0; j < spec.triggers.size(); ++j) {
        if (spec.triggers[j].latching && alloc.trigger_values[j]) next.latched[j] = true;
    }
    return {std::move(alloc), std::move(next)};
}

PaymentMatrix run_waterfall(const StructureSpec& spec, std::span<const Money> inflows, std::span<const Money> pool_losses,
                            std::int64_t scenario) {
    if (static_cast<Period>(inflows.size()) != spec.horizon) {
        throw Error(ErrorCode::LengthMismatch, "inflow path has " + std::to_string(inflows.size()) +
                                                   " periods, structure horizon is " + std::to_string(spec.horizon));
    }
    if (!pool_losses.empty() && pool_losses.size() != inflows.size()) {
        throw Error(ErrorCode::LengthMismatch, "pool loss path length does not match the inflow path");
    }
    PaymentMatrix out;
    out.scenario = scenario;
    out.periods.reserve(inflows.size());
    StructureState state = initial_state(spec);
    for (std::size_t t = 0; t < inflows.size(); ++t) {
        auto step = allocate_period(spec, state, inflows[t], pool_losses.empty() ? Money{0} : pool_losses[t]);
        out.periods.push_back(std::move(step.allocation));
        state = std::move(step.next);
    }
    out.final_state = std::move(state);
    return out;
}

}  // namespace cascade
