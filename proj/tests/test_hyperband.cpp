#include <cmath>
#include <map>

#include "doctest.h"
#include "spo2/common.hpp"
#include "spo2/hyperband.hpp"

using namespace spo2;

TEST_CASE("plan(81,3) reproduces the canonical five-bracket table") {
    const HyperbandPlan p = plan(81, 3);
    REQUIRE(p.brackets.size() == 5);

    // (s, [(n_i, r_i)...]) as published for R=81, eta=3
    const std::vector<std::vector<std::pair<int, int>>> expected = {
        {{81, 1}, {27, 3}, {9, 9}, {3, 27}, {1, 81}},
        {{34, 3}, {11, 9}, {3, 27}, {1, 81}},
        {{15, 9}, {5, 27}, {1, 81}},
        {{8, 27}, {2, 81}},
        {{5, 81}},
    };
    for (size_t b = 0; b < 5; ++b) {
        CHECK(p.brackets[b].s == static_cast<int>(4 - b));
        REQUIRE(p.brackets[b].rungs.size() == expected[b].size());
        for (size_t r = 0; r < expected[b].size(); ++r) {
            CHECK(p.brackets[b].rungs[r].configs == expected[b][r].first);
            CHECK(p.brackets[b].rungs[r].epochs == expected[b][r].second);
        }
    }

    // analytic budget: 405 + 363 + 351 + 378 + 405
    CHECK(p.total_epochs() == 1902);
}

TEST_CASE("successive-halving recurrence holds for every bracket") {
    for (int r_max : {27, 81, 243}) {
        const HyperbandPlan p = plan(r_max, 3);
        for (const auto& bracket : p.brackets) {
            for (size_t i = 1; i < bracket.rungs.size(); ++i) {
                CHECK(bracket.rungs[i].configs == bracket.rungs[i - 1].configs / 3);
                CHECK(bracket.rungs[i].epochs == bracket.rungs[i - 1].epochs * 3);
            }
            CHECK(bracket.rungs.back().epochs == r_max);
        }
    }
}

TEST_CASE("R equal to eta gives two brackets") {
    const HyperbandPlan p = plan(3, 3);
    CHECK(p.brackets.size() == 2);
}

TEST_CASE("bad budgets are rejected") {
    CHECK_THROWS_AS(plan(81, 1), Error);
    CHECK_THROWS_AS(plan(2, 3), Error);
    try {
        plan(81, 1);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BadBudget);
    }
}

TEST_CASE("hyperband finds the minimum of a convex objective") {
    SearchSpace space;
    space.lr_lo = 1e-5;
    space.lr_hi = 1e-1;
    // smooth convex bowl in log-lr with its minimum inside the range
    const double best_log_lr = std::log(3e-3);
    const Objective objective = [&](const TunerConfig& cfg, int epochs, std::uint64_t) {
        const double d = std::log(cfg.learning_rate) - best_log_lr;
        // more epochs reveal the true value more sharply
        return d * d + 1.0 / static_cast<double>(epochs);
    };
    const HyperbandPlan p = plan(27, 3);
    const TuningResult result = run_hyperband(space, p, objective, 2024);
    CHECK(std::abs(std::log(result.best_config.learning_rate) - best_log_lr) < 1.0);
    CHECK(result.epochs_spent == p.total_epochs());
}

TEST_CASE("constant objective completes within budget") {
    SearchSpace space;
    const Objective objective = [](const TunerConfig&, int, std::uint64_t) { return 1.0; };
    const HyperbandPlan p = plan(9, 3);
    const TuningResult result = run_hyperband(space, p, objective, 7);
    CHECK(result.best_val_rmse == 1.0);
    CHECK(result.epochs_spent == p.total_epochs());
}

TEST_CASE("same seed gives the same winner") {
    SearchSpace space;
    const Objective objective = [](const TunerConfig& cfg, int epochs, std::uint64_t) {
        return std::abs(std::log(cfg.learning_rate) + 6.0) + 0.3 / epochs + 0.01 * cfg.filters;
    };
    const HyperbandPlan p = plan(9, 3);
    const TuningResult a = run_hyperband(space, p, objective, 99);
    const TuningResult b = run_hyperband(space, p, objective, 99);
    CHECK(a.best_config.learning_rate == b.best_config.learning_rate);
    CHECK(a.best_config.filters == b.best_config.filters);
    CHECK(a.best_val_rmse == b.best_val_rmse);
    REQUIRE(a.log.size() == b.log.size());
    for (size_t i = 0; i < a.log.size(); ++i) REQUIRE(a.log[i].val_rmse == b.log[i].val_rmse);
}

TEST_CASE("rung survivors are the top configs by objective with index tie-breaks") {
    SearchSpace space;
    // a stable pseudo-score per config, independent of the epoch budget
    const Objective by_id = [](const TunerConfig& cfg, int, std::uint64_t) {
        return std::fmod(cfg.learning_rate * 1e6, 1.0);
    };
    const HyperbandPlan p = plan(9, 3);
    const TuningResult result = run_hyperband(space, p, by_id, 5);

    // within each bracket, every promoted config must have been in the top
    // floor(n/eta) of the previous rung
    for (const auto& bracket : p.brackets) {
        std::vector<TuningLogRow> rows;
        for (const auto& row : result.log)
            if (row.bracket == bracket.s) rows.push_back(row);
        for (size_t r = 0; r + 1 < bracket.rungs.size(); ++r) {
            std::vector<TuningLogRow> rung_rows, next_rows;
            for (const auto& row : rows) {
                if (row.rung == static_cast<int>(r)) rung_rows.push_back(row);
                if (row.rung == static_cast<int>(r + 1)) next_rows.push_back(row);
            }
            std::stable_sort(rung_rows.begin(), rung_rows.end(), [](const auto& a, const auto& b) {
                if (a.val_rmse != b.val_rmse) return a.val_rmse < b.val_rmse;
                return a.config_id < b.config_id;
            });
            REQUIRE(next_rows.size() <= rung_rows.size());
            for (size_t k = 0; k < next_rows.size(); ++k)
                REQUIRE(next_rows[k].config_id == rung_rows[k].config_id);
        }
    }
}

TEST_CASE("objective failures carry the config id") {
    SearchSpace space;
    const Objective objective = [](const TunerConfig&, int, std::uint64_t) -> double {
        throw Error(ErrorCode::DivergenceDetected, "synthetic failure");
    };
    try {
        run_hyperband(space, plan(3, 3), objective, 1);
        FAIL("expected propagated failure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DivergenceDetected);
        CHECK(std::string(e.what()).find("config") != std::string::npos);
    }
}

TEST_CASE("sampled configs respect the space") {
    SearchSpace space;
    space.lr_lo = 1e-4;
    space.lr_hi = 1e-2;
    space.dropout_lo = 0.1;
    space.dropout_hi = 0.4;
    Rng rng(8);
    for (int i = 0; i < 200; ++i) {
        const TunerConfig cfg = sample_config(space, rng);
        REQUIRE(cfg.learning_rate >= space.lr_lo);
        REQUIRE(cfg.learning_rate <= space.lr_hi);
        REQUIRE(std::count(space.filter_choices.begin(), space.filter_choices.end(), cfg.filters) == 1);
        REQUIRE(std::count(space.kernel_choices.begin(), space.kernel_choices.end(), cfg.kernel) == 1);
        REQUIRE(std::count(space.node_choices.begin(), space.node_choices.end(), cfg.nodes) == 1);
        REQUIRE(cfg.dropout_p >= 0.1);
        REQUIRE(cfg.dropout_p <= 0.4);
    }
}
