#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cascade/allocation.hpp"
#include "cascade/money.hpp"

namespace cascade {

struct DiscountCurve {
    std::vector<double> factors;  // d_t, each in [0, 1]

    void validate() const;
};

using Weights = std::optional<std::vector<Rational>>;

// E[P_{p,t}] in minor units, [position][period]. Accumulates exactly and divides once.
std::vector<std::vector<double>> expected_payments(std::span<const PaymentMatrix> matrices,
                                                   const Weights& weights = std::nullopt);

// Exact variant used by oracles and tests.
std::vector<std::vector<Rational>> expected_payments_exact(std::span<const PaymentMatrix> matrices,
                                                           const Weights& weights = std::nullopt);

// V_p = sum_t d_t E[P_{p,t}]. The only floating-point step in the metric layer.
double present_value(std::span<const double> expected_path, const DiscountCurve& curve);

// L_p = sum_t (C_{p,t} - P_{p,t})^+.
Money cumulative_loss(const PaymentMatrix& matrix, std::size_t position);

struct LossSummary {
    Rational expected_loss;
    Rational shortfall_probability;
    std::vector<Money> quantiles;  // one per requested level
    std::vector<Money> samples;    // L_p(omega) in matrix order
};

// Per position, in spec order.
std::vector<LossSummary> loss_distribution(std::span<const PaymentMatrix> matrices, const Weights& weights,
                                           std::span<const double> levels);

// Smallest loss whose cumulative weight reaches level.
Money nearest_rank_quantile(std::span<const Money> samples, std::span<const Rational> weights, double level);

struct PositionMetrics {
    std::string position;
    std::vector<double> expected_path;
    std::vector<Rational> expected_path_exact;
    double present_value = 0.0;
    LossSummary loss;
};

struct MetricReport {
    std::vector<double> levels;
    std::vector<PositionMetrics> positions;
};

MetricReport build_report(std::span<const std::string> position_names, std::span<const PaymentMatrix> matrices,
                          const Weights& weights, const DiscountCurve& curve, std::span<const double> levels);

MetricReport build_report(const StructureSpec& spec, std::span<const PaymentMatrix> matrices, const Weights& weights,
                          const DiscountCurve& curve, std::span<const double> levels);

// Scenario paths used to drive allocation without regenerating the asset layer.
struct ScenarioSet {
    std::vector<std::vector<Money>> inflows;
    std::vector<std::vector<Money>> pool_losses;
    Weights weights;

    std::uint64_t fingerprint() const;
    std::size_t size() const { return inflows.size(); }
};

std::vector<PaymentMatrix> run_scenarios(const StructureSpec& spec, const ScenarioSet& scenarios);

struct ThicknessPoint {
    Money notional;
    std::vector<LossSummary> losses;
    std::vector<std::vector<double>> expected_payments;
};

// Re-runs allocation only, on the identical scenario set, for each notional of position.
std::vector<ThicknessPoint> thickness_sensitivity(const StructureSpec& spec, const ScenarioSet& scenarios,
                                                  std::string_view position, std::span<const Money> grid,
                                                  std::span<const double> levels = {});

}  // namespace cascade
