#include "cascade/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "cascade/random.hpp"

namespace cascade {

namespace {

std::string_view metric_name(MetricKind m) {
    switch (m) {
        case MetricKind::expected_loss: return "expected_loss";
        case MetricKind::shortfall_prob: return "shortfall_prob";
        case MetricKind::quantile: return "quantile";
    }
    return "?";
}

bool holds(double value, Comparator c, double bound) {
    switch (c) {
        case Comparator::less: return value < bound;
        case Comparator::less_equal: return value <= bound;
        case Comparator::greater: return value > bound;
        case Comparator::greater_equal: return value >= bound;
    }
    return false;
}

double slack_of(double value, Comparator c, double bound) {
    return c == Comparator::less || c == Comparator::less_equal ? bound - value : value - bound;
}

template <class T>
const T& expect(const ParameterValue& v, const DesignParameter& p) {
    if (const T* out = std::get_if<T>(&v)) return *out;
    throw Error(ErrorCode::InvalidDesign, "grid value has the wrong type for parameter '" + p.target + "'");
}

double violation(const DesignEvaluation& e) {
    if (!e.valid) return std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (double s : e.slacks) total += std::max(0.0, -s);
    return total;
}

}  // namespace

std::string describe(const Constraint& constraint) {
    std::ostringstream os;
    if (const auto* t = std::get_if<TotalNotional>(&constraint)) {
        os << "total_notional == " << t->equals;
    } else {
        const auto& b = std::get<MetricBound>(constraint);
        os << metric_name(b.metric);
        if (b.metric == MetricKind::quantile) os << "@" << b.level;
        os << "(" << b.position << ") " << to_string(b.comparator) << " " << b.bound;
    }
    return os.str();
}

std::size_t DesignSpace::grid_size() const {
    std::size_t n = 1;
    for (const auto& p : parameters) {
        if (p.grid.empty()) return 0;
        if (n > std::numeric_limits<std::size_t>::max() / p.grid.size()) return std::numeric_limits<std::size_t>::max();
        n *= p.grid.size();
    }
    return n;
}

StructureSpec instantiate(const DesignSpace& space, std::span<const std::size_t> grid_index) {
    if (grid_index.size() != space.parameters.size()) throw Error(ErrorCode::InvalidDesign, "grid index has the wrong rank");
    StructureSpec spec = space.base;
    for (std::size_t j = 0; j < space.parameters.size(); ++j) {
        const auto& param = space.parameters[j];
        if (grid_index[j] >= param.grid.size()) throw Error(ErrorCode::InvalidDesign, "grid index out of range");
        const auto& value = param.grid[grid_index[j]];
        switch (param.kind) {
            case ParameterKind::position_notional: {
                auto i = spec.position_index(param.target);
                if (!i) throw Error(ErrorCode::UnresolvedReference, "unknown position '" + param.target + "'");
                spec.positions[*i].notional = Money{expect<std::int64_t>(value, param)};
                break;
            }
            case ParameterKind::trigger_threshold: {
                auto i = spec.trigger_index(param.target);
                if (!i) throw Error(ErrorCode::UnresolvedReference, "unknown trigger '" + param.target + "'");
                spec.triggers[*i].threshold = expect<std::int64_t>(value, param);
                break;
            }
            case ParameterKind::pro_rata_weights: {
                auto i = spec.tier_index(param.target);
                if (!i) throw Error(ErrorCode::UnresolvedReference, "unknown tier '" + param.target + "'");
                spec.tiers[*i].weights = expect<std::vector<Rational>>(value, param);
                break;
            }
            case ParameterKind::tier_order: {
                const auto& order = expect<std::vector<std::string>>(value, param);
                if (param.target == "default") {
                    std::vector<Tier> reordered;
                    for (const auto& name : order) {
                        auto i = space.base.tier_index(name);
                        if (!i) throw Error(ErrorCode::UnresolvedReference, "unknown tier '" + name + "'");
                        reordered.push_back(space.base.tiers[*i]);
                    }
                    if (reordered.size() != spec.tiers.size()) {
                        throw Error(ErrorCode::InvalidDesign, "tier order must list every tier");
                    }
                    spec.tiers = std::move(reordered);
                } else {
                    std::size_t r = 0;
                    try {
                        r = std::stoul(param.target);
                    } catch (...) {
                        throw Error(ErrorCode::InvalidDesign, "tier_order target must be 'default' or a rule index");
                    }
                    if (r >= spec.rules.size() || spec.rules[r].effect != RuleEffect::use_tier_order) {
                        throw Error(ErrorCode::InvalidDesign, "rule " + param.target + " is not a use_tier_order rule");
                    }
                    spec.rules[r].tier_order = order;
                }
                break;
            }
        }
    }
    return spec;
}

DesignEvaluation evaluate_design(const StructureSpec& point, const ScenarioSet& scenarios, const DiscountCurve& curve,
                                 const Objective& objective, std::span<const Constraint> constraints) {
    if (scenarios.size() == 0) throw Error(ErrorCode::EmptyInput, "scenario set is empty");
    validate_spec(point);
    auto target = point.position_index(objective.position);
    if (!target) throw Error(ErrorCode::UnknownPosition, "objective names unknown position '" + objective.position + "'");

    std::vector<double> levels;
    for (const auto& c : constraints) {
        if (const auto* b = std::get_if<MetricBound>(&c)) {
            if (!point.position_index(b->position)) {
                throw Error(ErrorCode::UnknownPosition, "constraint names unknown position '" + b->position + "'");
            }
            if (b->metric == MetricKind::quantile &&
                std::find(levels.begin(), levels.end(), b->level) == levels.end()) {
                levels.push_back(b->level);
            }
        }
    }

    DesignEvaluation e;
    e.spec = point;
    e.scenario_fingerprint = scenarios.fingerprint();
    auto matrices = run_scenarios(point, scenarios);
    e.report = build_report(point, matrices, scenarios.weights, curve, levels);

    const auto& m = e.report.positions[*target];
    switch (objective.metric) {
        case ObjectiveMetric::present_value: e.objective = m.present_value; break;
        case ObjectiveMetric::expected_payment_total:
            e.objective = std::accumulate(m.expected_path.begin(), m.expected_path.end(), 0.0);
            break;
        case ObjectiveMetric::negated_expected_loss: e.objective = -m.loss.expected_loss.convert_to<double>(); break;
    }

    for (const auto& c : constraints) {
        bool ok = true;
        double slack = 0.0;
        if (const auto* t = std::get_if<TotalNotional>(&c)) {
            Money total{0};
            for (const auto& p : point.positions) total += p.notional;
            slack = -std::abs(static_cast<double>(total.minor() - t->equals.minor()));
            ok = total == t->equals;
        } else {
            const auto& b = std::get<MetricBound>(c);
            const auto& loss = e.report.positions[*point.position_index(b.position)].loss;
            double value = 0.0;
            switch (b.metric) {
                case MetricKind::expected_loss: value = loss.expected_loss.convert_to<double>(); break;
                case MetricKind::shortfall_prob: value = loss.shortfall_probability.convert_to<double>(); break;
                case MetricKind::quantile: {
                    auto k = std::find(levels.begin(), levels.end(), b.level) - levels.begin();
                    value = static_cast<double>(loss.quantiles[static_cast<std::size_t>(k)].minor());
                    break;
                }
            }
            slack = slack_of(value, b.comparator, b.bound);
            ok = holds(value, b.comparator, b.bound);
        }
        e.slacks.push_back(slack);
        if (!ok) e.violated.push_back(describe(c));
    }
    e.feasible = e.violated.empty();
    return e;
}

SearchResult search(const DesignSpace& space, const Objective& objective, const ScenarioSet& scenarios,
                    const DiscountCurve& curve, const SearchMode& mode, std::size_t budget) {
    std::vector<std::vector<std::size_t>> points;
    const std::size_t size = space.grid_size();
    if (size == 0) throw Error(ErrorCode::InvalidDesign, "a design parameter has an empty grid");
    if (mode.kind == SearchMode::Kind::exhaustive_grid) {
        if (size > budget) {
            throw Error(ErrorCode::BudgetExceeded,
                        "grid has " + std::to_string(size) + " points, budget is " + std::to_string(budget));
        }
        std::vector<std::size_t> index(space.parameters.size(), 0);
        for (std::size_t k = 0; k < size; ++k) {
            points.push_back(index);
            for (std::size_t j = index.size(); j-- > 0;) {
                if (++index[j] < space.parameters[j].grid.size()) break;
                index[j] = 0;
            }
        }
    } else {
        if (mode.samples == 0 || mode.samples > budget) {
            throw Error(ErrorCode::BudgetExceeded, "random search needs 1.." + std::to_string(budget) + " samples");
        }
        for (std::size_t k = 0; k < mode.samples; ++k) {
            std::vector<std::size_t> index;
            for (std::size_t j = 0; j < space.parameters.size(); ++j) {
                auto h = rng::hash({mode.seed, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(j), rng::kDesignDraw});
                auto n = static_cast<unsigned __int128>(space.parameters[j].grid.size());
                index.push_back(static_cast<std::size_t>((static_cast<unsigned __int128>(h) * n) >> 64));
            }
            points.push_back(std::move(index));
        }
    }

    SearchResult result;
    for (const auto& index : points) {
        DesignEvaluation e;
        e.grid_index = index;
        try {
            e.spec = instantiate(space, index);
            auto evaluated = evaluate_design(e.spec, scenarios, curve, objective, space.constraints);
            evaluated.grid_index = index;
            e = std::move(evaluated);
        } catch (const Error& err) {
            if (err.code() != ErrorCode::ValidationError && err.code() != ErrorCode::InvalidDesign &&
                err.code() != ErrorCode::UnresolvedReference) {
                throw;
            }
            e.valid = false;
            e.feasible = false;
            e.invalid_reason = err.what();
            e.objective = std::numeric_limits<double>::quiet_NaN();
            e.scenario_fingerprint = scenarios.fingerprint();
        }
        result.points.push_back(std::move(e));
    }

    for (std::size_t i = 0; i < result.points.size(); ++i) {
        if (result.points[i].feasible) result.ranking.push_back(i);
    }
    std::stable_sort(result.ranking.begin(), result.ranking.end(),
                     [&](auto a, auto b) { return result.points[a].objective > result.points[b].objective; });
    if (!result.ranking.empty()) {
        result.best = result.ranking.front();
    } else {
        std::size_t nearest = 0;
        for (std::size_t i = 1; i < result.points.size(); ++i) {
            if (violation(result.points[i]) < violation(result.points[nearest])) nearest = i;
        }
        if (!result.points.empty()) result.nearest_infeasible = nearest;
    }
    return result;
}

const DesignEvaluation& require_best(const SearchResult& result) {
    if (result.best) return result.points[*result.best];
    std::string msg = "no feasible design point";
    if (result.nearest_infeasible) {
        const auto& p = result.points[*result.nearest_infeasible];
        msg += "; nearest is point " + std::to_string(*result.nearest_infeasible);
        if (!p.valid) {
            msg += " (invalid: " + p.invalid_reason + ")";
        } else {
            msg += " violating";
            for (const auto& v : p.violated) msg += " [" + v + "]";
        }
    }
    throw Error(ErrorCode::EmptyFeasibleSet, msg);
}

}  // namespace cascade
