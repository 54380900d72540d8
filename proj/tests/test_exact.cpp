#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "esim/exact.hpp"

using namespace esim;

namespace {

SystemConfig tiny_poisson(double x_mean, double y_mean, int cap) {
    SystemConfig c;
    c.n = 1;
    c.d_max = cap;
    c.e_max = cap;
    c.conversion = ConversionFunction::scaled_log(1.0);
    c.arrival.data = {Distribution::poisson(x_mean)};
    c.arrival.energy = Distribution::poisson(y_mean);
    return c;
}

/// Independent average-cost oracle for a deterministic policy: dense
/// stationary distribution via long damped power iteration, written from
/// scratch so it shares no code with the exact module.
double oracle_policy_cost(const exact::TransitionModel& model,
                          const std::vector<int>& policy) {
    const int n = model.n_states;
    std::vector<double> pi(n, 1.0 / n), next(n);
    for (int it = 0; it < 200'000; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (int i = 0; i < n; ++i)
            for (const auto& [j, p] : model.p[i][policy[i]]) next[j] += pi[i] * p;
        double delta = 0.0;
        for (int i = 0; i < n; ++i) {
            next[i] = 0.5 * next[i] + 0.5 * pi[i];  // damping kills periodicity
            delta += std::abs(next[i] - pi[i]);
        }
        pi.swap(next);
        if (delta < 1e-14) break;
    }
    double cost = 0.0;
    for (int i = 0; i < n; ++i) cost += pi[i] * model.c[i][policy[i]];
    return cost;
}

/// Brute-force optimal average cost: enumerate every stationary deterministic
/// policy of a (small!) model and take the best oracle cost.
double oracle_optimal_cost(const exact::TransitionModel& model) {
    std::vector<int> policy(model.n_states, 0);
    double best = 1e300;
    for (;;) {
        best = std::min(best, oracle_policy_cost(model, policy));
        int pos = model.n_states - 1;
        while (pos >= 0 && policy[pos] + 1 >= model.n_actions(pos)) policy[pos--] = 0;
        if (pos < 0) break;
        ++policy[pos];
    }
    return best;
}

}  // namespace

TEST_CASE("deterministic zero-arrival model: exhaustive hand check") {
    SystemConfig c;
    c.n = 1;
    c.d_max = 1;
    c.e_max = 1;
    c.conversion = ConversionFunction::scaled_log(1.0);
    c.arrival.data = {Distribution::deterministic(0.0)};
    c.arrival.energy = Distribution::deterministic(0.0);

    auto model = exact::build_model(c);
    REQUIRE(model.n_states == 4);

    // With x = y = 0 the next state is fully determined: q' = (q - g_int(t))+,
    // e' = e - t, where g_int(1) = round(ln 2) = 1.
    for (int i = 0; i < model.n_states; ++i) {
        auto s = model.state_of(i);
        const auto& acts = model.actions(i);
        for (std::size_t a = 0; a < acts.size(); ++a) {
            REQUIRE(model.p[i][a].size() == 1);
            auto [j, prob] = model.p[i][a][0];
            CHECK(prob == doctest::Approx(1.0));
            auto nxt = model.state_of(j);
            int served = acts[a].t[0] == 1 ? 1 : 0;
            CHECK(nxt.q[0] == std::max(s.q[0] - served, 0));
            CHECK(nxt.e == s.e - acts[a].t[0]);
        }
    }
}

TEST_CASE("transition rows are exactly stochastic") {
    auto model = exact::build_model(tiny_poisson(0.5, 1.0, 2));
    for (int i = 0; i < model.n_states; ++i) {
        for (int a = 0; a < model.n_actions(i); ++a) {
            double sum = 0.0;
            for (const auto& [j, p] : model.p[i][a]) {
                CHECK(p >= 0.0);
                sum += p;
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("state count is the full product space") {
    SystemConfig c = tiny_poisson(0.5, 1.0, 3);
    c.n = 2;
    c.arrival.data = {Distribution::poisson(0.5), Distribution::poisson(0.5)};
    auto model = exact::build_model(c);
    CHECK(model.n_states == 64);  // 4 * 4 * 4

    // index_of and state_of are inverse bijections.
    for (int i = 0; i < model.n_states; ++i)
        CHECK(model.index_of(model.state_of(i)) == i);
}

TEST_CASE("markov arrivals are rejected") {
    SystemConfig c = tiny_poisson(0.5, 1.0, 2);
    c.arrival.kind = ArrivalModel::Kind::Markov;
    c.arrival.ar_matrix = {{0.2}};
    c.arrival.ar_energy_coeff = 0.5;
    CHECK_THROWS(exact::build_model(c));
}

TEST_CASE("rvi matches the brute-force policy-enumeration oracle") {
    // 9 states, at most 3 actions each: the full SDP space is enumerable.
    auto model = exact::build_model(tiny_poisson(0.3, 1.0, 2));
    auto sol = exact::rvi_solve(model);
    REQUIRE(sol.converged);

    double oracle = oracle_optimal_cost(model);
    CHECK(sol.lambda_star == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("solution satisfies the Bellman and Q-Bellman equations") {
    auto model = exact::build_model(tiny_poisson(0.4, 0.8, 2));
    auto sol = exact::rvi_solve(model);
    REQUIRE(sol.converged);

    for (int i = 0; i < model.n_states; ++i) {
        double min_q = sol.q_star[i][0];
        for (int a = 1; a < model.n_actions(i); ++a)
            min_q = std::min(min_q, sol.q_star[i][a]);
        CHECK(sol.lambda_star + sol.h[i] == doctest::Approx(min_q).epsilon(1e-8));
        // Q*(i,a) = c(i,a) + sum_j p(i,a,j) h*(j)
        for (int a = 0; a < model.n_actions(i); ++a) {
            double rhs = model.c[i][a];
            for (const auto& [j, p] : model.p[i][a]) rhs += p * sol.h[j];
            CHECK(sol.q_star[i][a] == doctest::Approx(rhs).epsilon(1e-8));
        }
    }
    CHECK(sol.h[sol.reference_state] == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("policy_average_cost agrees with the independent oracle") {
    auto model = exact::build_model(tiny_poisson(0.3, 1.0, 2));
    auto sol = exact::rvi_solve(model);
    auto policy = exact::greedy_policy(sol, model);

    double lib = exact::policy_average_cost(model, policy);
    double oracle = oracle_policy_cost(model, policy);
    CHECK(lib == doctest::Approx(oracle).epsilon(1e-6));
    CHECK(lib == doctest::Approx(sol.lambda_star).epsilon(1e-6));
}

TEST_CASE("greedy_policy picks the argmin of q_star") {
    auto model = exact::build_model(tiny_poisson(0.6, 1.2, 2));
    auto sol = exact::rvi_solve(model);
    auto policy = exact::greedy_policy(sol, model);
    for (int i = 0; i < model.n_states; ++i)
        for (int a = 0; a < model.n_actions(i); ++a)
            CHECK(sol.q_star[i][policy[i]] <= sol.q_star[i][a] + 1e-12);
}

TEST_CASE("simulated average cost matches the stationary computation") {
    SystemConfig c = tiny_poisson(0.5, 1.0, 3);
    auto model = exact::build_model(c);
    auto sol = exact::rvi_solve(model);
    auto policy = exact::greedy_policy(sol, model);

    env::Policy p = [&](const env::SystemState& s, Rng&) {
        return model.actions(model.index_of(s))[policy[model.index_of(s)]];
    };
    auto eval = env::evaluate_policy(c, p, 1'000'000, 1234);
    CHECK(eval.avg_cost ==
          doctest::Approx(exact::policy_average_cost(model, policy)).epsilon(0.01));
}

TEST_CASE("h* is monotone in queues and energy") {
    auto model = exact::build_model(tiny_poisson(0.8, 1.5, 5));
    auto sol = exact::rvi_solve(model);
    auto report = exact::verify_monotonicity(sol, model);
    CHECK(report.clean());
}

TEST_CASE("randomized state policies are supported") {
    auto model = exact::build_model(tiny_poisson(0.3, 1.0, 2));
    // Uniform over feasible actions in every state.
    exact::StatePolicy uniform = [&](int i) {
        return std::vector<double>(model.n_actions(i), 1.0 / model.n_actions(i));
    };
    double cost = exact::policy_average_cost(model, uniform);
    auto sol = exact::rvi_solve(model);
    CHECK(cost >= sol.lambda_star - 1e-9);  // cannot beat the optimum
    CHECK(std::isfinite(cost));
}
