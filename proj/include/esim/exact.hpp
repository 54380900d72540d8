#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "esim/env.hpp"

namespace esim::exact {

/// Explicit transition model of a small i.i.d.-arrival instance. States are
/// indexed in mixed radix (q_1, ..., q_n, e), all-empty state at index 0.
struct TransitionModel {
    SystemConfig config;
    int n_states = 0;
    /// Feasible action lists shared by energy level: actions(i) ==
    /// actions_by_energy[state_of(i).e].
    std::vector<std::vector<env::Action>> actions_by_energy;
    /// p[i][a] = sparse row of (next-state index, probability).
    std::vector<std::vector<std::vector<std::pair<int, double>>>> p;
    /// c[i][a] = single-stage cost (deterministic given the pair).
    std::vector<std::vector<double>> c;

    int index_of(const env::SystemState& s) const;
    env::SystemState state_of(int index) const;
    const std::vector<env::Action>& actions(int index) const;
    int n_actions(int index) const { return static_cast<int>(actions(index).size()); }
};

/// Enumerates the full (q, e) product space with capacity-folded arrival
/// pmfs, so rows are exactly stochastic. Throws for Markov arrival models
/// and when |S x A| exceeds max_entries.
TransitionModel build_model(const SystemConfig& config,
                            std::size_t max_entries = 10'000'000);

struct RviSolution {
    double lambda_star = 0.0;
    std::vector<double> h;
    std::vector<std::vector<double>> q_star;
    int reference_state = 0;
    int iterations = 0;
    double span_residual = 0.0;
    bool converged = false;
};

/// Relative value iteration: H <- LH - (LH)(ref) until the span seminorm of
/// successive differences drops below tol.
RviSolution rvi_solve(const TransitionModel& model, int reference_state = 0,
                      double tol = 1e-10, int max_iters = 1'000'000);

/// argmin_a Q*(i, a), lowest index on ties.
std::vector<int> greedy_policy(const RviSolution& sol, const TransitionModel& model);

/// Randomized stationary policy on model states: probabilities over the
/// feasible action list of the given state.
using StatePolicy = std::function<std::vector<double>(int state)>;

/// Stationary average cost via power iteration on the policy-induced chain.
/// If the chain looks reducible (stationary distribution depends on the
/// start), falls back to a long-horizon simulation estimate and warns.
double policy_average_cost(const TransitionModel& model, const StatePolicy& policy);
double policy_average_cost(const TransitionModel& model, const std::vector<int>& policy);

struct MonotonicityReport {
    struct Violation {
        int state_low;
        int state_high;
        int coordinate;  // 0..n-1 data, n = energy
        double magnitude;
    };
    std::vector<Violation> violations;
    bool clean() const { return violations.empty(); }
};

/// Checks h* non-decreasing in each q_i and non-increasing in E over all
/// adjacent state pairs.
MonotonicityReport verify_monotonicity(const RviSolution& sol,
                                       const TransitionModel& model,
                                       double tol = 1e-9);

}  // namespace esim::exact
