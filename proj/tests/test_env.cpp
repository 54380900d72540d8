#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "esim/env.hpp"

using namespace esim;

namespace {

SystemConfig one_node(double x_mean, double y_mean, int cap = 2) {
    SystemConfig c;
    c.n = 1;
    c.d_max = cap;
    c.e_max = cap;
    c.conversion = ConversionFunction::scaled_log(1.0);
    c.arrival.data = {Distribution::poisson(x_mean)};
    c.arrival.energy = Distribution::poisson(y_mean);
    return c;
}

long long binom(int n, int k) {
    long long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

TEST_CASE("feasible actions enumerate the simplex sum(t) <= e") {
    for (int n = 1; n <= 3; ++n) {
        for (int e = 0; e <= 5; ++e) {
            auto actions = env::feasible_actions(n, e);
            CHECK(static_cast<long long>(actions.size()) == binom(e + n, n));
            std::set<std::vector<int>> seen;
            for (const auto& a : actions) {
                CHECK(static_cast<int>(a.t.size()) == n);
                int total = 0;
                for (int v : a.t) {
                    CHECK(v >= 0);
                    total += v;
                }
                CHECK(total <= e);
                seen.insert(a.t);
            }
            CHECK(seen.size() == actions.size());  // no duplicates
        }
    }
}

TEST_CASE("feasible actions are in ascending lexicographic order") {
    auto actions = env::feasible_actions(2, 2);
    REQUIRE(actions.size() == 6);
    CHECK(actions[0].t == std::vector<int>{0, 0});
    CHECK(actions[1].t == std::vector<int>{0, 1});
    CHECK(actions[2].t == std::vector<int>{0, 2});
    CHECK(actions[3].t == std::vector<int>{1, 0});
    CHECK(actions[4].t == std::vector<int>{1, 1});
    CHECK(actions[5].t == std::vector<int>{2, 0});
}

TEST_CASE("transmit bits: real value and rounded integer") {
    auto g = ConversionFunction::scaled_log(1.0);  // ln(1 + t)
    auto b = env::transmit_bits(g, 2);
    CHECK(b.real_bits == doctest::Approx(std::log(3.0)));
    CHECK(b.integer_bits == 1);  // ln 3 = 1.0986 rounds to 1

    auto snr = ConversionFunction::log_half_snr(3.0);  // 0.5 log2(1 + 3t)
    auto b2 = env::transmit_bits(snr, 1);
    CHECK(b2.real_bits == doctest::Approx(1.0));
    CHECK(b2.integer_bits == 1);

    CHECK(env::transmit_bits(g, 0).real_bits == 0.0);
    CHECK(env::transmit_bits(g, 0).integer_bits == 0);
}

TEST_CASE("stage cost matches the weighted backlog formula") {
    SystemConfig c = one_node(0.0, 0.0, 10);
    c.n = 2;
    c.arrival.data = {Distribution::poisson(0.0), Distribution::poisson(0.0)};

    env::SystemState s;
    s.q = {4, 2};
    s.e = 5;

    // No transmission: cost is the raw queue sum.
    CHECK(env::stage_cost(c, s, env::Action{{0, 0}}) == doctest::Approx(6.0));

    // t = (2, 0): node 1 clears ln(3) bits (real-valued in the cost).
    double expected = (4.0 - std::log(3.0)) + 2.0;
    CHECK(env::stage_cost(c, s, env::Action{{2, 0}}) == doctest::Approx(expected));

    // Weighted variant r1 = 0.7, r2 = 0.3 on a single node.
    SystemConfig w = one_node(0.0, 0.0, 10);
    w.r1 = 0.7;
    w.r2 = 0.3;
    env::SystemState s1;
    s1.q = {4};
    s1.e = 3;
    double want = 0.7 * (4.0 - std::log(3.0)) + 0.3 * 2.0;
    CHECK(env::stage_cost(w, s1, env::Action{{2}}) == doctest::Approx(want));

    // Overshoot clips the backlog term at zero.
    env::SystemState s2;
    s2.q = {1};
    s2.e = 3;
    SystemConfig plain = one_node(0.0, 0.0, 10);
    CHECK(env::stage_cost(plain, s2, env::Action{{3}}) == doctest::Approx(0.0));
}

TEST_CASE("step applies serve-then-arrive dynamics with clipping") {
    SystemConfig c = one_node(0.0, 0.0, 3);
    c.arrival.data = {Distribution::deterministic(2.0)};
    c.arrival.energy = Distribution::deterministic(1.0);

    env::SystemState s;
    s.q = {3};
    s.e = 2;

    Rng rng(1);
    auto r = env::step(c, s, env::Action{{2}}, rng);
    // ln 3 rounds to 1 bit served: (3 - 1)^+ + 2 = 4, clipped to 3.
    CHECK(r.next.q[0] == 3);
    CHECK(r.dropped_data == 1);
    // Energy: 2 - 2 + 1 = 1.
    CHECK(r.next.e == 1);
    CHECK(r.dropped_energy == 0);
}

TEST_CASE("step rejects infeasible actions") {
    SystemConfig c = one_node(0.0, 0.0, 3);
    env::SystemState s;
    s.q = {1};
    s.e = 1;
    Rng rng(1);
    CHECK_THROWS_AS(env::step(c, s, env::Action{{2}}, rng), std::invalid_argument);
}

TEST_CASE("buffers stay within capacity over long random runs") {
    SystemConfig c = one_node(1.2, 1.7, 3);
    c.n = 2;
    c.arrival.data = {Distribution::poisson(1.2), Distribution::exponential(0.8)};

    Rng rng(42);
    env::SystemState s = env::initial_state(c);
    for (int k = 0; k < 200'000; ++k) {
        auto actions = env::feasible_actions(c.n, s.e);
        const auto& a = actions[rng.uniform_below(actions.size())];
        auto r = env::step(c, s, a, rng);
        for (int q : r.next.q) {
            CHECK(q >= 0);
            CHECK(q <= c.d_max);
        }
        CHECK(r.next.e >= 0);
        CHECK(r.next.e <= c.e_max);
        s = std::move(r.next);
    }
}

TEST_CASE("evaluate_policy is deterministic in the seed") {
    SystemConfig c = one_node(0.8, 1.3, 4);
    env::Policy random_feasible = [&](const env::SystemState& s, Rng& rng) {
        auto actions = env::feasible_actions(c.n, s.e);
        return actions[rng.uniform_below(actions.size())];
    };
    auto a = env::evaluate_policy(c, random_feasible, 50'000, 99);
    auto b = env::evaluate_policy(c, random_feasible, 50'000, 99);
    CHECK(a.avg_cost == b.avg_cost);
    CHECK(a.avg_queue_sum == b.avg_queue_sum);
    auto other = env::evaluate_policy(c, random_feasible, 50'000, 100);
    CHECK(other.avg_cost != a.avg_cost);
}

TEST_CASE("zero arrivals and idle policy give zero cost") {
    SystemConfig c = one_node(0.0, 0.0, 2);
    c.arrival.data = {Distribution::deterministic(0.0)};
    c.arrival.energy = Distribution::deterministic(0.0);
    env::Policy idle = [&](const env::SystemState&, Rng&) {
        return env::Action{std::vector<int>(c.n, 0)};
    };
    auto r = env::evaluate_policy(c, idle, 1000, 0);
    CHECK(r.avg_cost == 0.0);
    CHECK(r.avg_queue_sum == 0.0);
}

TEST_CASE("markov arrivals follow the clipped AR recursion") {
    SystemConfig c;
    c.n = 2;
    c.d_max = 10;
    c.e_max = 20;
    c.conversion = ConversionFunction::scaled_log(1.0);
    c.arrival.kind = ArrivalModel::Kind::Markov;
    c.arrival.data = {Distribution::deterministic(0.0),
                      Distribution::deterministic(0.0)};
    c.arrival.energy = Distribution::deterministic(0.0);
    c.arrival.ar_matrix = {{0.2, 0.3}, {0.3, 0.2}};
    c.arrival.ar_energy_coeff = 0.5;

    env::SystemState s = env::initial_state(c);
    s.prev_x = {4, 2};
    s.prev_y = 7;

    Rng rng(3);
    std::vector<int> x;
    int y = 0;
    env::sample_arrivals(c, s, rng, x, y);
    // x1 = round(0.2*4 + 0.3*2) = round(1.4) = 1; x2 = round(0.3*4 + 0.2*2) = 2.
    CHECK(x[0] == 1);
    CHECK(x[1] == 2);
    // y = round(0.5 * 7) = round(3.5) = 4 (round half up).
    CHECK(y == 4);
}
