#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "esim/config.hpp"
#include "esim/rng.hpp"

namespace esim::env {

/// MDP state: per-node data backlogs, energy level and, for Markov arrival
/// models, the previous realized arrivals.
struct SystemState {
    std::vector<int> q;
    int e = 0;
    std::vector<int> prev_x;  // present iff arrival model is Markov
    int prev_y = 0;
};

/// Per-node integer energy allocation with sum(t) <= state energy.
struct Action {
    std::vector<int> t;
    int total() const {
        int s = 0;
        for (int v : t) s += v;
        return s;
    }
};

/// All integer vectors t >= 0 with sum(t) <= e, in ascending lexicographic
/// order. Cardinality is C(e + n, n).
std::vector<Action> feasible_actions(int n, int e);

/// Exact bits g(t) and the round-half-up integer used for the queue update.
struct TransmitBits {
    double real_bits;
    int integer_bits;
};
TransmitBits transmit_bits(const ConversionFunction& g, int t);

struct StepResult {
    SystemState next;
    std::vector<int> x;  // realized data arrivals
    int y = 0;           // realized energy arrival
    long long dropped_data = 0;
    long long dropped_energy = 0;
};

/// Samples arrivals for the current state (i.i.d. draw, or one AR step using
/// the state's previous arrivals).
void sample_arrivals(const SystemConfig& config, const SystemState& s, Rng& rng,
                     std::vector<int>& x_out, int& y_out);

/// One slot of the system dynamics. Throws std::invalid_argument if the
/// action is infeasible (sum T > E).
StepResult step(const SystemConfig& config, const SystemState& s, const Action& a,
                Rng& rng);

/// sum_i [ r1 * (q_i - g(t_i))^+ + r2 * t_i ] with real-valued g.
double stage_cost(const SystemConfig& config, const SystemState& s, const Action& a);

SystemState initial_state(const SystemConfig& config);

/// A policy maps state to a feasible action; randomized policies draw from
/// the provided stream.
using Policy = std::function<Action(const SystemState&, Rng&)>;

struct EvalResult {
    double avg_cost = 0.0;
    double avg_queue_sum = 0.0;
    long long dropped_data = 0;
    long long dropped_energy = 0;
};

/// Rolls one trajectory of `horizon` steps from the all-empty state and
/// averages stage costs and queue sums. Same seed implies identical result.
/// Throws std::runtime_error naming the step index if the policy returns an
/// infeasible action.
EvalResult evaluate_policy(const SystemConfig& config, const Policy& policy,
                           long long horizon, std::uint64_t seed);

}  // namespace esim::env
