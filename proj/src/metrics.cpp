#include "cascade/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>

#include "cascade/parallel.hpp"

namespace cascade {

namespace {

void check_inputs(std::span<const PaymentMatrix> matrices, const Weights& weights) {
    if (matrices.empty()) throw Error(ErrorCode::EmptyInput, "no payment matrices");
    const auto periods = matrices.front().periods.size();
    const auto positions = periods ? matrices.front().periods.front().payments.size() : 0;
    for (const auto& m : matrices) {
        if (m.periods.size() != periods) throw Error(ErrorCode::RaggedInput, "payment matrices differ in period count");
        for (const auto& p : m.periods) {
            if (p.payments.size() != positions || p.dues.size() != positions) {
                throw Error(ErrorCode::RaggedInput, "payment matrices differ in position count");
            }
        }
    }
    if (weights) {
        if (weights->size() != matrices.size()) throw Error(ErrorCode::WeightMismatch, "weight count differs from scenario count");
        Rational sum = 0;
        for (const auto& w : *weights) {
            if (w < 0) throw Error(ErrorCode::WeightMismatch, "negative scenario weight");
            sum += w;
        }
        if (sum != 1) throw Error(ErrorCode::WeightMismatch, "scenario weights sum to " + rational_to_string(sum));
    }
}

std::size_t position_count(const PaymentMatrix& m) { return m.periods.empty() ? 0 : m.periods.front().payments.size(); }

Rational level_as_rational(double level) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, level);
    std::string text(buf, end);
    if (text.find_first_of("eE") != std::string::npos) return Rational(level);
    return parse_rational(text);
}

void check_levels(std::span<const double> levels) {
    for (double l : levels) {
        if (!(l > 0.0 && l < 1.0)) throw Error(ErrorCode::BadLevel, "quantile level must lie in (0, 1)");
    }
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

}  // namespace

void DiscountCurve::validate() const {
    for (double d : factors) {
        if (!(d >= 0.0 && d <= 1.0)) throw Error(ErrorCode::BadCurve, "discount factors must lie in [0, 1]");
    }
}

std::vector<std::vector<Rational>> expected_payments_exact(std::span<const PaymentMatrix> matrices, const Weights& weights) {
    check_inputs(matrices, weights);
    const auto periods = matrices.front().periods.size();
    const auto positions = position_count(matrices.front());
    std::vector<std::vector<Rational>> out(positions, std::vector<Rational>(periods));
    if (weights) {
        for (std::size_t s = 0; s < matrices.size(); ++s) {
            const auto& w = (*weights)[s];
            if (w == 0) continue;
            for (std::size_t t = 0; t < periods; ++t) {
                for (std::size_t p = 0; p < positions; ++p) {
                    out[p][t] += w * matrices[s].periods[t].payments[p].minor();
                }
            }
        }
        return out;
    }
    std::vector<std::vector<__int128>> sums(positions, std::vector<__int128>(periods, 0));
    for (const auto& m : matrices) {
        for (std::size_t t = 0; t < periods; ++t) {
            for (std::size_t p = 0; p < positions; ++p) sums[p][t] += m.periods[t].payments[p].minor();
        }
    }
    for (std::size_t p = 0; p < positions; ++p) {
        for (std::size_t t = 0; t < periods; ++t) {
            __int128 v = sums[p][t];
            bool neg = v < 0;
            unsigned __int128 mag = neg ? -static_cast<unsigned __int128>(v) : static_cast<unsigned __int128>(v);
            BigInt big = static_cast<std::uint64_t>(mag >> 64);
            big <<= 64;
            big += static_cast<std::uint64_t>(mag);
            out[p][t] = Rational(neg ? BigInt(-big) : big, BigInt(matrices.size()));
        }
    }
    return out;
}

std::vector<std::vector<double>> expected_payments(std::span<const PaymentMatrix> matrices, const Weights& weights) {
    auto exact = expected_payments_exact(matrices, weights);
    std::vector<std::vector<double>> out(exact.size());
    for (std::size_t p = 0; p < exact.size(); ++p) {
        for (const auto& v : exact[p]) out[p].push_back(to_double(v));
    }
    return out;
}

double present_value(std::span<const double> expected_path, const DiscountCurve& curve) {
    curve.validate();
    if (expected_path.size() != curve.factors.size()) {
        throw Error(ErrorCode::LengthMismatch, "discount curve length differs from the payment path");
    }
    double pv = 0.0;
    for (std::size_t t = 0; t < expected_path.size(); ++t) pv += curve.factors[t] * expected_path[t];
    return pv;
}

Money cumulative_loss(const PaymentMatrix& matrix, std::size_t position) {
    Money loss{0};
    for (const auto& p : matrix.periods) {
        if (position >= p.payments.size()) throw Error(ErrorCode::UnknownPosition, "position index out of range");
        loss += positive_part(p.dues[position] - p.payments[position]);
    }
    if (matrix.periods.empty() && position > 0) throw Error(ErrorCode::UnknownPosition, "position index out of range");
    return loss;
}

Money nearest_rank_quantile(std::span<const Money> samples, std::span<const Rational> weights, double level) {
    if (samples.empty()) throw Error(ErrorCode::EmptyInput, "no samples");
    if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::BadLevel, "quantile level must lie in (0, 1)");
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return samples[a] < samples[b]; });
    const Rational target = level_as_rational(level);
    const Rational uniform(1, static_cast<long long>(samples.size()));
    Rational cumulative = 0;
    for (auto i : order) {
        cumulative += weights.empty() ? uniform : weights[i];
        if (cumulative >= target) return samples[i];
    }
    return samples[order.back()];
}

std::vector<LossSummary> loss_distribution(std::span<const PaymentMatrix> matrices, const Weights& weights,
                                           std::span<const double> levels) {
    check_inputs(matrices, weights);
    check_levels(levels);
    const auto positions = position_count(matrices.front());
    const Rational n(static_cast<long long>(matrices.size()));
    std::span<const Rational> w = weights ? std::span<const Rational>(*weights) : std::span<const Rational>{};

    std::vector<LossSummary> out(positions);
    for (std::size_t p = 0; p < positions; ++p) {
        auto& summary = out[p];
        summary.samples.reserve(matrices.size());
        BigInt loss_sum = 0, hit_count = 0;
        for (std::size_t s = 0; s < matrices.size(); ++s) {
            Money loss = cumulative_loss(matrices[s], p);
            summary.samples.push_back(loss);
            if (weights) {
                summary.expected_loss += w[s] * loss.minor();
                if (loss > Money{0}) summary.shortfall_probability += w[s];
            } else {
                loss_sum += loss.minor();
                if (loss > Money{0}) hit_count += 1;
            }
        }
        if (!weights) {
            summary.expected_loss = Rational(loss_sum) / n;
            summary.shortfall_probability = Rational(hit_count) / n;
        }
        for (double level : levels) summary.quantiles.push_back(nearest_rank_quantile(summary.samples, w, level));
    }
    return out;
}

MetricReport build_report(const StructureSpec& spec, std::span<const PaymentMatrix> matrices, const Weights& weights,
                          const DiscountCurve& curve, std::span<const double> levels) {
    std::vector<std::string> names;
    for (const auto& p : spec.positions) names.push_back(p.name);
    return build_report(names, matrices, weights, curve, levels);
}

MetricReport build_report(std::span<const std::string> position_names, std::span<const PaymentMatrix> matrices,
                          const Weights& weights, const DiscountCurve& curve, std::span<const double> levels) {
    auto exact = expected_payments_exact(matrices, weights);
    auto losses = loss_distribution(matrices, weights, levels);
    if (exact.size() != position_names.size()) {
        throw Error(ErrorCode::UnknownPosition, "payment matrices do not match the structure's positions");
    }
    MetricReport report;
    report.levels.assign(levels.begin(), levels.end());
    for (std::size_t p = 0; p < position_names.size(); ++p) {
        PositionMetrics m;
        m.position = position_names[p];
        for (const auto& v : exact[p]) m.expected_path.push_back(to_double(v));
        m.present_value = present_value(m.expected_path, curve);
        m.expected_path_exact = std::move(exact[p]);
        m.loss = std::move(losses[p]);
        report.positions.push_back(std::move(m));
    }
    return report;
}

std::uint64_t ScenarioSet::fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](std::int64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= static_cast<std::uint64_t>(v >> (8 * b)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto* group : {&inflows, &pool_losses}) {
        mix(static_cast<std::int64_t>(group->size()));
        for (const auto& path : *group) {
            mix(static_cast<std::int64_t>(path.size()));
            for (auto m : path) mix(m.minor());
        }
    }
    if (weights) {
        for (const auto& w : *weights) {
            for (char c : rational_to_string(w)) mix(c);
        }
    }
    return h;
}

std::vector<PaymentMatrix> run_scenarios(const StructureSpec& spec, const ScenarioSet& scenarios) {
    if (!scenarios.pool_losses.empty() && scenarios.pool_losses.size() != scenarios.inflows.size()) {
        throw Error(ErrorCode::LengthMismatch, "pool loss paths do not match inflow paths");
    }
    std::vector<PaymentMatrix> out(scenarios.size());
    parallel_for(scenarios.size(), [&](std::size_t s) {
        std::span<const Money> losses;
        if (!scenarios.pool_losses.empty()) losses = scenarios.pool_losses[s];
        out[s] = run_waterfall(spec, scenarios.inflows[s], losses, static_cast<std::int64_t>(s));
    });
    return out;
}

std::vector<ThicknessPoint> thickness_sensitivity(const StructureSpec& spec, const ScenarioSet& scenarios,
                                                  std::string_view position, std::span<const Money> grid,
                                                  std::span<const double> levels) {
    auto idx = spec.position_index(position);
    if (!idx) throw Error(ErrorCode::UnknownPosition, "unknown position '" + std::string(position) + "'");
    std::vector<ThicknessPoint> out;
    for (Money notional : grid) {
        if (notional < Money{0}) throw Error(ErrorCode::NegativeInput, "grid notional is negative");
        StructureSpec point = spec;
        point.positions[*idx].notional = notional;
        validate_spec(point);
        auto matrices = run_scenarios(point, scenarios);
        out.push_back({notional, loss_distribution(matrices, scenarios.weights, levels),
                       expected_payments(matrices, scenarios.weights)});
    }
    return out;
}

}  // namespace cascade
