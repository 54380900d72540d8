#pragma once

#include <cstdint>
#include <vector>

#include "esim/env.hpp"
#include "esim/qlearn.hpp"

namespace esim::aggregate {

/// Contiguous, disjoint, exhaustive integer intervals over a buffer range.
struct Interval {
    int lo;
    int hi;  // inclusive
};

struct PartitionScheme {
    std::vector<Interval> data_cuts;    // cover [0, d_max]
    std::vector<Interval> energy_cuts;  // cover [0, e_max]

    int data_levels() const { return static_cast<int>(data_cuts.size()); }
    int energy_levels() const { return static_cast<int>(energy_cuts.size()); }

    /// 1-based partition index containing the given level.
    int data_level_of(int q) const;
    int energy_level_of(int e) const;

    /// Near-equal-width default: remainder widths go to the top partitions.
    static PartitionScheme uniform(int d_max, int data_parts, int e_max,
                                   int energy_parts);
    static PartitionScheme from_cuts(std::vector<Interval> data,
                                     std::vector<Interval> energy);

    void validate(int d_max, int e_max) const;  // throws on bad cuts
};

/// Tuple of 1-based partition indices: n data levels plus the energy level.
struct AggregateState {
    std::vector<int> levels;  // size n
    int energy_level = 1;
};

AggregateState aggregate(const env::SystemState& s, const PartitionScheme& scheme);

/// All level vectors in {1..energy_level}^n, ascending lexicographic order.
std::vector<std::vector<int>> feasible_aggregate_actions(int n, int energy_level);

struct DistributeDiag {
    long long truncated_lower_bounds = 0;  // unaffordable lower-bound events
    long long units_retained = 0;          // remainder units left in the buffer
};

/// Materializes an aggregate action into an exact allocation: each node gets
/// its partition lower bound, then the remaining energy is shared unit-by-unit
/// with probability proportional to data backlog, skipping nodes at their
/// partition upper bound. Unaffordable lower bounds are truncated for the
/// lowest-backlog nodes first.
env::Action distribute_energy(const env::SystemState& s,
                              const std::vector<int>& t_levels,
                              const PartitionScheme& scheme, Rng& rng,
                              DistributeDiag* diag = nullptr);

/// Packs an aggregate state into a table key; the all-lowest-partitions
/// reference state is key 0.
class AggregateKeyer {
  public:
    AggregateKeyer(int n, int data_levels, int energy_levels)
        : n_(n), s_(data_levels), r_(energy_levels) {}
    std::uint64_t key(const AggregateState& s) const {
        std::uint64_t k = 0;
        for (int i = 0; i < n_; ++i)
            k = k * static_cast<std::uint64_t>(s_) +
                static_cast<std::uint64_t>(s.levels[i] - 1);
        return k * static_cast<std::uint64_t>(r_) +
               static_cast<std::uint64_t>(s.energy_level - 1);
    }
    std::uint64_t reference_key() const { return 0; }

  private:
    int n_, s_, r_;
};

struct TrainResult {
    std::shared_ptr<qlearn::QTable> table;
    std::shared_ptr<qlearn::QTable> avg_table;  // tail average; policy reads this
    env::Policy policy;  // greedy aggregate action, randomized materialization
    std::vector<qlearn::CurvePoint> curve;
};

/// Q-learning over (aggregate state, aggregate action) pairs with the
/// realized stage cost and randomized energy distribution.
TrainResult train_qlsa(const SystemConfig& config, const PartitionScheme& scheme,
                       const qlearn::LearnerConfig& learner);

/// |S'| = s^n * r and sum over aggregate states of |A'(s')| = (l_e)^n.
struct CardinalityReport {
    double aggregate_states;
    double aggregate_pairs;       // sum of per-state action counts
    double aggregate_pairs_bound; // s^n * r * r^n
    double full_states;
    double full_pairs;            // sum over states of C(e + n, n)
};
CardinalityReport cardinality(int n, int d_max, int e_max, int data_parts,
                              int energy_parts);

}  // namespace esim::aggregate
