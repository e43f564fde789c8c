#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cascade/metrics.hpp"
#include "cascade/structure.hpp"

namespace cascade {

enum class ParameterKind { position_notional, trigger_threshold, pro_rata_weights, tier_order };

// One grid value. position_notional/trigger_threshold take an integer, pro_rata_weights
// a weight vector, tier_order a list of tier names.
using ParameterValue = std::variant<std::int64_t, std::vector<Rational>, std::vector<std::string>>;

struct DesignParameter {
    ParameterKind kind = ParameterKind::position_notional;
    // Position, trigger or tier name. For tier_order: "default" or a rule index.
    std::string target;
    std::vector<ParameterValue> grid;
};

enum class MetricKind { expected_loss, shortfall_prob, quantile };

struct MetricBound {
    std::string position;
    MetricKind metric = MetricKind::expected_loss;
    double level = 0.0;  // quantile only
    Comparator comparator = Comparator::less_equal;
    double bound = 0.0;
};

struct TotalNotional {
    Money equals;
};

using Constraint = std::variant<TotalNotional, MetricBound>;

std::string describe(const Constraint& constraint);

struct DesignSpace {
    StructureSpec base;
    std::vector<DesignParameter> parameters;
    std::vector<Constraint> constraints;
    std::size_t grid_size() const;
};

enum class ObjectiveMetric { present_value, expected_payment_total, negated_expected_loss };

struct Objective {
    std::string position;
    ObjectiveMetric metric = ObjectiveMetric::present_value;
};

struct DesignEvaluation {
    std::vector<std::size_t> grid_index;  // per parameter
    StructureSpec spec;
    MetricReport report;
    double objective = 0.0;
    bool feasible = true;
    bool valid = true;  // false if the instantiated spec failed validation
    std::string invalid_reason;
    std::vector<double> slacks;  // per constraint; negative means violated
    std::vector<std::string> violated;
    std::uint64_t scenario_fingerprint = 0;
};

DesignEvaluation evaluate_design(const StructureSpec& point, const ScenarioSet& scenarios, const DiscountCurve& curve,
                                 const Objective& objective, std::span<const Constraint> constraints = {});

StructureSpec instantiate(const DesignSpace& space, std::span<const std::size_t> grid_index);

struct SearchMode {
    enum class Kind { exhaustive_grid, random } kind = Kind::exhaustive_grid;
    std::size_t samples = 0;  // random only
    std::uint64_t seed = 0;
};

struct SearchResult {
    std::vector<DesignEvaluation> points;  // evaluation order
    std::vector<std::size_t> ranking;      // feasible points, best first
    std::optional<std::size_t> best;
    std::optional<std::size_t> nearest_infeasible;  // set when nothing is feasible
};

inline constexpr std::size_t kDefaultSearchBudget = 10'000;

SearchResult search(const DesignSpace& space, const Objective& objective, const ScenarioSet& scenarios,
                    const DiscountCurve& curve, const SearchMode& mode, std::size_t budget = kDefaultSearchBudget);

// Returns the best point or throws EmptyFeasibleSet naming the nearest-to-feasible point.
const DesignEvaluation& require_best(const SearchResult& result);

}  // namespace cascade
