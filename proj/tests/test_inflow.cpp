#include <doctest.h>

#include <cmath>

#include "cascade/inflow.hpp"
#include "cascade/parallel.hpp"
#include "cascade/random.hpp"

using namespace cascade;

namespace {

std::vector<Money> money(std::initializer_list<std::int64_t> v) { return {v.begin(), v.end()}; }

Unit loan(std::string id, std::int64_t default_bps, std::int64_t prepay_bps, Period horizon) {
    Unit u;
    u.id = std::move(id);
    u.baseline.assign(static_cast<std::size_t>(horizon), Money{10});
    u.outstanding_principal = Money{100};
    u.default_hazard_bps = {default_bps};
    u.prepay_hazard_bps = {prepay_bps};
    u.recovery_bps = 4000;
    u.recovery_lag = 1;
    return u;
}

PoolSpec pool_of(std::vector<Unit> units, Period horizon) {
    PoolSpec p;
    p.units = std::move(units);
    p.horizon = horizon;
    return p;
}

}  // namespace

TEST_CASE("unit_cashflow") {
    auto u = loan("a", 0, 0, 3);
    CHECK(unit_cashflow(u, std::nullopt, 3) == money({10, 10, 10}));
    CHECK(unit_cashflow(u, UnitEvent{EventType::default_event, 1}, 3) == money({10, 0, 40}));
    CHECK(unit_cashflow(u, UnitEvent{EventType::prepayment, 1}, 3) == money({10, 100, 0}));
    CHECK(unit_loss(u, UnitEvent{EventType::default_event, 1}, 3) == money({0, 60, 0}));

    SUBCASE("recovery past the horizon lands in the last period") {
        u.recovery_lag = 5;
        CHECK(unit_cashflow(u, UnitEvent{EventType::default_event, 0}, 3) == money({0, 0, 40}));
    }
    SUBCASE("trace outside the horizon") {
        CHECK_THROWS_AS(unit_cashflow(u, UnitEvent{EventType::default_event, 3}, 3), Error);
    }
    SUBCASE("unit state") {
        auto s = unit_state_at(u, UnitEvent{EventType::default_event, 1}, 1, 3);
        CHECK(s.status == UnitStatus::defaulted);
        REQUIRE(s.pending_recovery);
        CHECK(s.pending_recovery->first == 2);
        CHECK(unit_state_at(u, UnitEvent{EventType::default_event, 1}, 0, 3).status == UnitStatus::performing);
        CHECK(unit_state_at(u, UnitEvent{EventType::prepayment, 0}, 2, 3).status == UnitStatus::prepaid);
    }
}

TEST_CASE("aggregate_inflows") {
    std::vector<std::vector<Money>> flows{money({10, 0}), money({5, 5})};
    CHECK(aggregate_inflows(flows) == money({15, 5}));
    flows.push_back(money({1}));
    CHECK_THROWS_AS(aggregate_inflows(flows), Error);
}

TEST_CASE("sample_scenario") {
    SUBCASE("zero hazards reproduce the baseline") {
        auto pool = pool_of({loan("a", 0, 0, 4), loan("b", 0, 0, 4)}, 4);
        for (std::int64_t w = 0; w < 50; ++w) {
            auto s = sample_scenario(pool, 7, w);
            CHECK(s.inflows == money({20, 20, 20, 20}));
            CHECK(s.events == std::vector<EventTrace>{std::nullopt, std::nullopt});
        }
    }
    SUBCASE("certain default happens in the first period") {
        auto pool = pool_of({loan("a", 10000, 0, 3)}, 3);
        auto s = sample_scenario(pool, 1, 0);
        REQUIRE(s.events[0]);
        CHECK(s.events[0]->type == EventType::default_event);
        CHECK(s.events[0]->period == 0);
        CHECK(s.pool_losses == money({60, 0, 0}));
    }
    SUBCASE("same seed and index give the same scenario regardless of order or threads") {
        auto pool = pool_of({loan("a", 1500, 500, 5), loan("b", 800, 300, 5), loan("c", 2500, 0, 5)}, 5);
        std::vector<InflowScenario> forward, parallel(200);
        for (std::int64_t w = 0; w < 200; ++w) forward.push_back(sample_scenario(pool, 42, w));
        parallel_for(200, [&](std::size_t w) { parallel[w] = sample_scenario(pool, 42, static_cast<std::int64_t>(w)); }, 4);
        CHECK(forward == parallel);
        for (std::int64_t w = 199; w >= 0; --w) CHECK(sample_scenario(pool, 42, w) == forward[static_cast<std::size_t>(w)]);
        bool differs = false;
        for (std::int64_t w = 0; w < 200 && !differs; ++w) differs = sample_scenario(pool, 43, w) != forward[static_cast<std::size_t>(w)];
        CHECK(differs);
    }
    SUBCASE("a unit's draws do not depend on its position in the pool") {
        auto ab = pool_of({loan("a", 3000, 1000, 3), loan("b", 3000, 1000, 3)}, 3);
        auto ba = pool_of({loan("b", 3000, 1000, 3), loan("a", 3000, 1000, 3)}, 3);
        for (std::int64_t w = 0; w < 100; ++w) {
            auto x = sample_scenario(ab, 5, w), y = sample_scenario(ba, 5, w);
            CHECK(x.events[0] == y.events[1]);
            CHECK(x.events[1] == y.events[0]);
        }
    }
    SUBCASE("correlation out of range") {
        auto pool = pool_of({loan("a", 100, 0, 2)}, 2);
        pool.dependence = Dependence::one_factor;
        pool.correlation = 1.5;
        CHECK_THROWS_AS(sample_scenario(pool, 1, 0), Error);
        CHECK_THROWS_AS(validate_pool(pool), Error);
    }
    SUBCASE("one-factor marginal default rate") {
        auto pool = pool_of({loan("a", 2000, 0, 1)}, 1);
        pool.dependence = Dependence::one_factor;
        pool.correlation = 0.4;
        int defaults = 0;
        const int n = 40000;
        for (int w = 0; w < n; ++w) defaults += sample_scenario(pool, 9, w).events[0].has_value();
        double se = std::sqrt(0.2 * 0.8 / n);
        CHECK(std::abs(defaults / double(n) - 0.2) < 4 * se);
    }
}

TEST_CASE("independent sampling frequencies") {
    auto pool = pool_of({loan("a", 2000, 1000, 1)}, 1);
    int defaults = 0, prepays = 0;
    const int n = 50000;
    for (int w = 0; w < n; ++w) {
        auto s = sample_scenario(pool, 3, w);
        if (s.events[0]) (s.events[0]->type == EventType::default_event ? defaults : prepays)++;
    }
    CHECK(std::abs(defaults / double(n) - 0.2) < 4 * std::sqrt(0.2 * 0.8 / n));
    CHECK(std::abs(prepays / double(n) - 0.1) < 4 * std::sqrt(0.1 * 0.9 / n));
}

TEST_CASE("enumerate_scenarios") {
    SUBCASE("single unit, single period") {
        Unit u = loan("a", 2000, 0, 1);
        auto all = enumerate_scenarios(pool_of({u}, 1));
        REQUIRE(all.size() == 2);
        CHECK(all[0].events[0] == std::nullopt);
        CHECK(*all[0].weight == Rational(4, 5));
        CHECK(*all[1].weight == Rational(1, 5));
        CHECK(all[1].inflows == money({40}));
    }
    SUBCASE("two units, two periods") {
        auto all = enumerate_scenarios(pool_of({loan("a", 1000, 0, 2), loan("b", 2500, 0, 2)}, 2));
        CHECK(all.size() == 9);
        Rational total = 0;
        for (const auto& s : all) total += *s.weight;
        CHECK(total == 1);
        CHECK(*all[0].weight == Rational(9, 10) * Rational(9, 10) * Rational(3, 4) * Rational(3, 4));
    }
    SUBCASE("competing risks") {
        auto all = enumerate_scenarios(pool_of({loan("a", 1000, 2000, 2)}, 2));
        CHECK(all.size() == 5);
        Rational total = 0;
        for (const auto& s : all) total += *s.weight;
        CHECK(total == 1);
    }
    SUBCASE("certain default drops the no-event outcome") {
        auto all = enumerate_scenarios(pool_of({loan("a", 10000, 0, 2)}, 2));
        REQUIRE(all.size() == 1);
        CHECK(*all[0].weight == 1);
    }
    SUBCASE("too large") {
        std::vector<Unit> units;
        for (int i = 0; i < 12; ++i) units.push_back(loan("u" + std::to_string(i), 500, 500, 4));
        CHECK_THROWS_AS(enumerate_scenarios(pool_of(units, 4)), Error);
    }
    SUBCASE("one-factor pools are not enumerable") {
        auto pool = pool_of({loan("a", 1000, 0, 2)}, 2);
        pool.dependence = Dependence::one_factor;
        try {
            enumerate_scenarios(pool);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::UnsupportedDependence);
        }
    }
}

TEST_CASE("validate_pool") {
    auto pool = pool_of({loan("a", 1000, 0, 3)}, 3);
    CHECK_NOTHROW(validate_pool(pool));
    pool.units.push_back(loan("a", 9000, 2000, 2));
    try {
        validate_pool(pool);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidPool);
        CHECK(e.details().size() >= 3);
    }
}

TEST_CASE("counter-based draws") {
    CHECK(rng::hash({1, 2, 3}) == rng::hash({1, 2, 3}));
    CHECK(rng::hash({1, 2, 3}) != rng::hash({1, 3, 2}));
    CHECK_FALSE(rng::below_bps(0, 0));
    CHECK(rng::below_bps(~0ULL, 10000));
    CHECK(rng::normal_quantile(0.5) == doctest::Approx(0.0));
    CHECK(rng::normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
}
