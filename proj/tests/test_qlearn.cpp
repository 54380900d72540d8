#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "esim/exact.hpp"
#include "esim/qlearn.hpp"

using namespace esim;

namespace {

SystemConfig small_config() {
    SystemConfig c;
    c.n = 1;
    c.d_max = 2;
    c.e_max = 2;
    c.conversion = ConversionFunction::scaled_log(1.0);
    c.arrival.data = {Distribution::poisson(0.3)};
    c.arrival.energy = Distribution::poisson(1.0);
    return c;
}

qlearn::QTable::Entry make_entry(std::vector<double> q, std::vector<long long> v) {
    qlearn::QTable::Entry e;
    e.q = std::move(q);
    e.visits = std::move(v);
    e.n_state = 0;
    for (long long c : e.visits) e.n_state += c;
    return e;
}

}  // namespace

TEST_CASE("step sizes: constant and polynomial schedules") {
    auto c = qlearn::StepSize::constant(0.1);
    CHECK(c.at(0) == 0.1);
    CHECK(c.at(999'999) == 0.1);

    auto p = qlearn::StepSize::polynomial(1.0, 0.6);
    CHECK(p.at(0) == doctest::Approx(1.0));
    CHECK(p.at(7) == doctest::Approx(1.0 / std::pow(8.0, 0.6)));

    auto strided = qlearn::StepSize::polynomial(1.0, 1.0, 100);
    CHECK(strided.at(0) == doctest::Approx(1.0));
    CHECK(strided.at(99) == doctest::Approx(1.0));
    CHECK(strided.at(100) == doctest::Approx(0.5));
}

TEST_CASE("epsilon-greedy with epsilon=0 is pure argmin") {
    auto entry = make_entry({1.0, 0.5, 2.0}, {1, 1, 1});
    Rng rng(1);
    auto mode = qlearn::Exploration::epsilon_greedy(0.0);
    for (int k = 0; k < 100; ++k) CHECK(qlearn::select_action(entry, 3, mode, rng) == 1);
}

TEST_CASE("epsilon-greedy explores only non-greedy actions") {
    auto entry = make_entry({1.0, 0.5, 2.0}, {1, 1, 1});
    Rng rng(7);
    auto mode = qlearn::Exploration::epsilon_greedy(1.0);  // always explore
    int seen0 = 0, seen2 = 0;
    for (int k = 0; k < 1000; ++k) {
        int a = qlearn::select_action(entry, 3, mode, rng);
        CHECK(a != 1);
        if (a == 0) ++seen0;
        if (a == 2) ++seen2;
    }
    CHECK(seen0 > 400);  // roughly uniform over the two non-greedy actions
    CHECK(seen2 > 400);
}

TEST_CASE("ucb rule: hand-evaluated score comparison") {
    qlearn::QTable::Entry entry;
    entry.q = {0.5, 0.5};
    entry.visits = {4, 2};
    entry.n_state = 8;
    Rng rng(1);
    auto mode = qlearn::Exploration::ucb(1.0);
    // -0.5 + sqrt(ln 8 / 2) = 0.519 beats -0.5 + sqrt(ln 8 / 4) = 0.221.
    CHECK(qlearn::select_action(entry, 2, mode, rng) == 1);
}

TEST_CASE("ucb picks unvisited actions first") {
    auto entry = make_entry({-10.0, 0.0, 0.0}, {5, 0, 3});
    Rng rng(1);
    auto mode = qlearn::Exploration::ucb(1.0);
    CHECK(qlearn::select_action(entry, 3, mode, rng) == 1);
}

TEST_CASE("single action is always chosen") {
    auto entry = make_entry({3.0}, {0});
    Rng rng(1);
    CHECK(qlearn::select_action(entry, 1, qlearn::Exploration::epsilon_greedy(0.5), rng) == 0);
    CHECK(qlearn::select_action(entry, 1, qlearn::Exploration::ucb(1.0), rng) == 0);
}

TEST_CASE("q_update implements the relative-value rule") {
    qlearn::QTable table;

    // Empty table: Q <- 0.9*0 + 0.1*(cost + 0 - 0).
    qlearn::q_update(table, 5, 0, 2, 1.0, 6, 0, 0.1);
    CHECK(table.find(5)->q[0] == doctest::Approx(0.1));
    CHECK(table.find(5)->visits[0] == 1);
    CHECK(table.find(5)->n_state == 1);

    // Seed next-state and reference values, then check the full target.
    table.at(6, 1).q[0] = 2.0;
    table.at(0, 1).q[0] = 0.5;
    table.at(5, 2).q[1] = 1.0;
    qlearn::q_update(table, 5, 1, 2, 3.0, 6, 0, 0.5);
    // target = 3.0 + min Q(6) - min Q(0) = 3.0 + 2.0 - 0.5 = 4.5
    CHECK(table.find(5)->q[1] == doctest::Approx(0.5 * 1.0 + 0.5 * 4.5));

    // Fixed point: if Q already equals the target, the update is a no-op.
    qlearn::QTable t2;
    t2.at(1, 1).q[0] = 1.5;
    t2.at(2, 1).q[0] = 1.0;
    t2.at(0, 1).q[0] = 0.5;
    qlearn::q_update(t2, 1, 0, 1, 1.0, 2, 0, 0.1);  // target = 1 + 1 - 0.5 = 1.5
    CHECK(t2.find(1)->q[0] == doctest::Approx(1.5));
}

TEST_CASE("state keyer matches the exact module indexing") {
    SystemConfig c = small_config();
    c.n = 2;
    c.d_max = 3;
    c.e_max = 2;
    c.arrival.data = {Distribution::poisson(0.3), Distribution::poisson(0.3)};
    qlearn::StateKeyer keyer(c);
    auto model = exact::build_model(c);
    for (int i = 0; i < model.n_states; ++i)
        CHECK(keyer.key(model.state_of(i)) == static_cast<std::uint64_t>(i));
    CHECK(keyer.reference_key() == 0);
}

TEST_CASE("share_proportional respects budget and data") {
    Rng rng(11);
    env::SystemState s;
    s.q = {3, 1, 0};
    s.e = 5;

    for (int trial = 0; trial < 1000; ++trial) {
        auto a = qlearn::share_proportional(s, 4, rng);
        CHECK(a.total() == 4);
        CHECK(a.t[2] >= 0);
    }

    env::SystemState empty;
    empty.q = {0, 0};
    empty.e = 5;
    CHECK(qlearn::share_proportional(empty, 3, rng).total() == 0);
    CHECK(qlearn::share_proportional(s, 0, rng).total() == 0);
}

TEST_CASE("training produces a feasible, reproducible policy") {
    SystemConfig c = small_config();
    qlearn::LearnerConfig learner;
    learner.alpha = qlearn::StepSize::constant(0.1);
    learner.exploration = qlearn::Exploration::epsilon_greedy(0.1);
    learner.iterations = 200'000;
    learner.seed = 3;
    learner.curve_stride = 50'000;

    auto r1 = qlearn::train(c, learner);
    auto r2 = qlearn::train(c, learner);
    CHECK(r1.curve.size() == 4);
    CHECK(r1.curve.back().running_avg_cost ==
          doctest::Approx(r2.curve.back().running_avg_cost));

    // Policy is feasible over a long randomized rollout.
    auto eval = env::evaluate_policy(c, r1.policy, 100'000, 77);
    CHECK(std::isfinite(eval.avg_cost));

    // All visited Q values stay bounded (relative updates keep them finite).
    for (const auto& [key, e] : r1.table->entries())
        for (double q : e.q) CHECK(std::abs(q) < 1e6);
}

TEST_CASE("tail-averaged table tracks the raw table") {
    SystemConfig c = small_config();
    qlearn::LearnerConfig learner;
    learner.alpha = qlearn::StepSize::constant(0.1);
    learner.exploration = qlearn::Exploration::epsilon_greedy(0.1);
    learner.iterations = 500'000;
    learner.seed = 5;

    auto r = qlearn::train(c, learner);
    REQUIRE(r.avg_table);
    CHECK(r.avg_table->size() > 0);
    for (const auto& [key, avg] : r.avg_table->entries()) {
        const auto* raw = r.table->find(key);
        REQUIRE(raw != nullptr);
        for (std::size_t a = 0; a < avg.q.size(); ++a)
            CHECK(std::abs(avg.q[a] - raw->q[a]) < 2.0);  // same noise ball
    }
}

TEST_CASE("ucb training visits every state-action pair") {
    SystemConfig c = small_config();
    qlearn::LearnerConfig learner;
    learner.alpha = qlearn::StepSize::constant(0.1);
    learner.exploration = qlearn::Exploration::ucb(1.0);
    learner.iterations = 300'000;
    learner.seed = 9;

    auto r = qlearn::train(c, learner);
    auto model = exact::build_model(c);
    for (int i = 0; i < model.n_states; ++i) {
        const auto* e = r.table->find(static_cast<std::uint64_t>(i));
        REQUIRE(e != nullptr);
        for (long long v : e->visits) CHECK(v > 0);
    }
}

TEST_CASE("combined-nodes learner runs on the reduced state space") {
    SystemConfig c = small_config();
    c.n = 2;
    c.arrival.data = {Distribution::poisson(0.3), Distribution::poisson(0.3)};
    qlearn::LearnerConfig learner;
    learner.alpha = qlearn::StepSize::constant(0.1);
    learner.exploration = qlearn::Exploration::epsilon_greedy(0.1);
    learner.iterations = 200'000;
    learner.seed = 4;

    auto r = qlearn::train_combined(c, learner);
    // Reduced space: (sum q, e) pairs only: at most 5 * 3 = 15 states.
    CHECK(r.table->size() <= 15);
    auto eval = env::evaluate_policy(c, r.policy, 100'000, 13);
    CHECK(std::isfinite(eval.avg_cost));
}
