#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "esim/baselines.hpp"

using namespace esim;

namespace {

SystemConfig two_node_log() {
    SystemConfig c;
    c.n = 2;
    c.d_max = 10;
    c.e_max = 10;
    c.conversion = ConversionFunction::scaled_log(1.0);
    c.arrival.data = {Distribution::poisson(0.5), Distribution::poisson(0.5)};
    c.arrival.energy = Distribution::poisson(2.0);
    return c;
}

}  // namespace

TEST_CASE("greedy budget: round of summed inverse requirements, capped by energy") {
    SystemConfig c = two_node_log();
    Rng rng(1);

    env::SystemState s;
    s.q = {1, 1};
    s.e = 10;
    // g^{-1}(1) = e - 1 per node: total 2(e-1) = 3.44 rounds to 3.
    for (int trial = 0; trial < 200; ++trial) {
        auto a = baselines::greedy_allocate(c, s, rng);
        CHECK(a.total() == 3);
        CHECK(a.t[0] >= 0);
        CHECK(a.t[1] >= 0);
    }

    // Energy-capped: same queues but only 2 units available.
    s.e = 2;
    for (int trial = 0; trial < 200; ++trial)
        CHECK(baselines::greedy_allocate(c, s, rng).total() == 2);
}

TEST_CASE("greedy idles with no backlog or no energy") {
    SystemConfig c = two_node_log();
    Rng rng(2);

    env::SystemState s;
    s.q = {0, 0};
    s.e = 7;
    CHECK(baselines::greedy_allocate(c, s, rng).total() == 0);

    s.q = {4, 2};
    s.e = 0;
    CHECK(baselines::greedy_allocate(c, s, rng).total() == 0);
}

TEST_CASE("greedy with linear conversion spends exactly the requirement") {
    SystemConfig c = two_node_log();
    c.n = 1;
    c.arrival.data = {Distribution::poisson(0.5)};
    c.conversion = ConversionFunction::linear(1.0);
    Rng rng(3);

    env::SystemState s;
    s.q = {2};
    s.e = 10;
    auto a = baselines::greedy_allocate(c, s, rng);
    CHECK(a.t[0] == 2);  // g^{-1}(2) = 2, nothing shared away
}

TEST_CASE("sharing is skewed toward the larger requirement") {
    SystemConfig c = two_node_log();
    Rng rng(4);
    env::SystemState s;
    s.q = {8, 1};
    s.e = 6;

    long long t0_sum = 0, trials = 5'000;
    for (long long k = 0; k < trials; ++k) {
        auto a = baselines::greedy_allocate(c, s, rng);
        CHECK(a.total() <= 6);
        t0_sum += a.t[0];
    }
    long long t1_sum = trials * 6 - t0_sum;  // budget is 6 here: see below
    // Requirement of node 1 (e^8 - 1) dwarfs node 2's (e - 1), so nearly all
    // of the budget goes to node 1 on average.
    CHECK(t0_sum > 4 * t1_sum);
}

TEST_CASE("data-proportional mode shares by queue length") {
    SystemConfig c = two_node_log();
    Rng rng(5);
    env::SystemState s;
    s.q = {3, 1};
    s.e = 4;

    long long t0 = 0, t1 = 0;
    for (int k = 0; k < 20'000; ++k) {
        auto a = baselines::greedy_allocate(c, s, rng,
                                            baselines::ShareMode::DataProportional);
        t0 += a.t[0];
        t1 += a.t[1];
    }
    // Unit shares approach the 3:1 data ratio.
    double ratio = static_cast<double>(t0) / static_cast<double>(t1);
    CHECK(ratio == doctest::Approx(3.0).epsilon(0.1));
}

TEST_CASE("greedy policy is feasible over long random runs") {
    SystemConfig c = two_node_log();
    auto eval = env::evaluate_policy(c, baselines::greedy_policy(c), 200'000, 17);
    CHECK(std::isfinite(eval.avg_cost));
    CHECK(eval.avg_cost >= 0.0);

    // Determinism across identical evaluations.
    auto eval2 = env::evaluate_policy(c, baselines::greedy_policy(c), 200'000, 17);
    CHECK(eval.avg_cost == eval2.avg_cost);
}
