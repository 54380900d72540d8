#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "esim/env.hpp"

namespace esim::qlearn {

/// alpha(k): constant, or polynomial c / ceil((k+1)/stride)^exponent.
struct StepSize {
    enum class Kind { Constant, Polynomial };
    Kind kind = Kind::Constant;
    double value = 0.1;      // constant step
    double c = 1.0;          // polynomial numerator
    double exponent = 0.6;   // polynomial decay exponent
    long long stride = 1;    // polynomial epoch length

    static StepSize constant(double value) { return {Kind::Constant, value, 1.0, 0.6, 1}; }
    static StepSize polynomial(double c, double exponent, long long stride = 1) {
        return {Kind::Polynomial, 0.1, c, exponent, stride};
    }
    double at(long long k) const;
};

struct Exploration {
    enum class Kind { EpsilonGreedy, Ucb };
    Kind kind = Kind::EpsilonGreedy;
    double epsilon = 0.1;
    double beta = 1.0;

    static Exploration epsilon_greedy(double eps) { return {Kind::EpsilonGreedy, eps, 1.0}; }
    static Exploration ucb(double beta) { return {Kind::Ucb, 0.1, beta}; }
};

struct LearnerConfig {
    StepSize alpha;
    Exploration exploration;
    long long iterations = 1'000'000;
    std::uint64_t seed = 0;
    long long curve_stride = 100'000;
    /// Reference state for the relative-value subtraction. Defaults to the
    /// all-empty state. The subtraction only anchors the Q scale if the
    /// reference is actually visited, so on instances where the energy
    /// buffer never empties pick a recurrent state (e.g. empty queues, full
    /// buffer) instead; otherwise Q drifts by the accumulated average cost.
    std::optional<std::uint64_t> reference_key;
    /// Snapshots taken by the tail averager used for policy extraction.
    int tail_snapshots = 128;
};

/// Sparse tabular Q store keyed by packed state. Unvisited pairs read as 0.
class QTable {
  public:
    struct Entry {
        std::vector<double> q;
        std::vector<long long> visits;  // N_{i,a}
        long long n_state = 0;          // N_i
    };

    Entry& at(std::uint64_t key, int n_actions) {
        Entry& e = table_[key];
        if (e.q.empty()) {
            e.q.assign(n_actions, 0.0);
            e.visits.assign(n_actions, 0);
        }
        return e;
    }
    const Entry* find(std::uint64_t key) const {
        auto it = table_.find(key);
        return it == table_.end() ? nullptr : &it->second;
    }
    /// min_a Q(key, a) over the feasible set; 0 when the state is unvisited.
    double min_q(std::uint64_t key) const {
        const Entry* e = find(key);
        if (!e) return 0.0;
        double m = e->q[0];
        for (double v : e->q) m = std::min(m, v);
        return m;
    }
    int argmin_q(std::uint64_t key, int n_actions) const {
        const Entry* e = find(key);
        if (!e) return 0;
        int best = 0;
        for (int a = 1; a < n_actions; ++a)
            if (e->q[a] < e->q[best]) best = a;
        return best;
    }
    std::size_t size() const { return table_.size(); }
    const std::unordered_map<std::uint64_t, Entry>& entries() const { return table_; }

  private:
    std::unordered_map<std::uint64_t, Entry> table_;
};

/// Packs states into table keys (mixed radix). The all-empty state is key 0.
class StateKeyer {
  public:
    explicit StateKeyer(const SystemConfig& config);
    std::uint64_t key(const env::SystemState& s) const;
    std::uint64_t reference_key() const { return 0; }

  private:
    int n_;
    std::uint64_t dq_, de_, xq_, yq_;
    bool markov_;
};

/// Exploration step: epsilon-greedy or the UCB rule
/// argmax_a [ -Q(i,a) + beta * sqrt(ln N_i / N_{i,a}) ], unvisited first.
int select_action(const QTable::Entry& entry, int n_actions,
                  const Exploration& exploration, Rng& rng);

/// Greedy extraction restricted to actions that were actually tried: untried
/// actions still sit at the optimistic initial 0 and must not be selected.
/// When a tail average is supplied, only actions updated inside the
/// averaging window are considered (older estimates are stale). Returns -1
/// when no action qualifies (callers fall back to a heuristic allocation).
int extract_action(const QTable& raw, const QTable* avg, std::uint64_t key,
                   int n_actions);

/// Relative-value Q update:
/// Q(i,a) <- (1-alpha) Q(i,a) + alpha [c + min_b Q(j,b) - min_u Q(ref,u)].
void q_update(QTable& table, std::uint64_t i, int a, int n_actions_i, double cost,
              std::uint64_t j, std::uint64_t ref, double alpha);

struct CurvePoint {
    long long iteration;
    double running_avg_cost;
};

/// Polyak averaging over the tail (second half) of training: periodic full
/// snapshots of the Q table, averaged per entry. A constant step size leaves
/// the iterates hovering in a noise ball around the fixed point; extracting
/// the greedy policy from the tail average removes that noise. Each action is
/// averaged over the snapshots taken after its first visit, so late-explored
/// pairs are not dragged toward the initial 0; actions never visited inside
/// the window are dropped entirely (their estimates are frozen from early
/// training). finalize() emits a pessimistic score per action — window mean
/// plus one standard error over the snapshots where the estimate moved — so
/// ranking thinly-sampled actions is robust. visits[a] holds the number of
/// snapshots that contributed to q[a].
class TailAverager {
  public:
    explicit TailAverager(long long iterations, int snapshots = 128);
    /// Call once per iteration k (0-based) after the update.
    void observe(long long k, const QTable& table);
    std::shared_ptr<QTable> finalize() const;

  private:
    long long start_;
    long long stride_;
    std::shared_ptr<QTable> sums_;
    // Cumulative visit counts at the first and latest snapshots, to detect
    // whether an action was updated at all within the averaging window.
    std::unordered_map<std::uint64_t, std::vector<long long>> baseline_;
    std::unordered_map<std::uint64_t, std::vector<long long>> seen_;
    // Per-action: snapshots where the estimate moved, and sum of squares of
    // the sampled values, for the pessimistic extraction score.
    std::unordered_map<std::uint64_t, std::vector<long long>> active_snaps_;
    std::unordered_map<std::uint64_t, std::vector<double>> sumsq_;
};

struct TrainResult {
    std::shared_ptr<QTable> table;
    std::shared_ptr<QTable> avg_table;  // tail average; policy reads this
    env::Policy policy;                 // deterministic greedy extraction
    std::vector<CurvePoint> curve;
};

/// Single-trajectory tabular Q-learning on the full state-action space.
TrainResult train(const SystemConfig& config, const LearnerConfig& learner);

/// Combined-nodes baseline: learns total energy on the (sum q, E) state and
/// shares units data-proportionally at execution time.
TrainResult train_combined(const SystemConfig& config, const LearnerConfig& learner);

/// Materializes a total-energy budget into a per-node allocation by sampling
/// each unit to node i with probability q_i / sum(q); nothing when sum(q)=0.
env::Action share_proportional(const env::SystemState& s, int budget, Rng& rng);

}  // namespace esim::qlearn
