#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "esim/aggregate.hpp"

namespace esim::crossent {

/// Deterministic feature map for (aggregate state, aggregate action) pairs.
/// Both modes produce one-hot vectors, so theta . phi is a single lookup.
struct FeatureMap {
    enum class Kind { IndicatorHash, TabularOneHot };

    Kind kind = Kind::IndicatorHash;
    int dimension = 50;
    std::uint64_t seed = 0;
    std::uint64_t max_actions = 0;  // tabular mode stride

    static FeatureMap indicator_hash(int dimension, std::uint64_t seed);
    /// One feature per (state, action) pair; dimension = |S'| * max |A'|.
    static FeatureMap tabular_one_hot(int n, int data_levels, int energy_levels);

    int bucket(std::uint64_t aggregate_key, int action_index) const;
};

struct CEConfig {
    int samples = 100;              // N
    double rho = 0.1;               // elite quantile
    long long horizon = 10'000;     // steps per trajectory evaluation
    int max_iterations = 1'000;
    double sigma_threshold = 1e-3;  // stop when max_i sigma_i drops below
    std::uint64_t seed = 0;
};

/// Per-coordinate Gaussian meta-parameters over theta.
struct MetaParams {
    std::vector<double> mu;
    std::vector<double> sigma;
    int iteration = 1;

    static MetaParams init(int dimension, double mu0 = 0.0, double sigma0 = 2.0);
};

/// Boltzmann probabilities over the feasible aggregate actions of one state,
/// computed with max-subtraction.
std::vector<double> policy_probabilities(const std::vector<double>& theta,
                                         const FeatureMap& features,
                                         std::uint64_t aggregate_key, int n_actions);

/// Average stage cost of one seeded trajectory under the Boltzmann policy
/// induced by theta (actions materialized via distribute_energy).
double evaluate_theta(const std::vector<double>& theta, const SystemConfig& config,
                      const aggregate::PartitionScheme& scheme,
                      const FeatureMap& features, long long horizon,
                      std::uint64_t seed);

/// Evaluator abstraction so the CE core can be checked against synthetic
/// objectives; sample_index feeds reproducible per-sample seeds.
using Evaluator = std::function<double(const std::vector<double>& theta,
                                       int sample_index)>;

struct IterationStats {
    double threshold = 0.0;   // elite cost cutoff
    double best = 0.0;        // lowest sampled cost
    double mean_sigma = 0.0;  // after the update
    int elite_count = 0;
};

/// One CE step: sample N thetas, keep those at or below the descending-sort
/// quantile threshold, refit mu and sigma (population variance) on the elites.
MetaParams ce_iterate(const MetaParams& meta, const CEConfig& config,
                      const Evaluator& evaluate, Rng& rng,
                      IterationStats* stats = nullptr);

struct HistoryRow {
    int iteration;
    double threshold;
    double best_lambda;
    double mean_sigma;
};

struct CEResult {
    std::vector<double> mu;  // converged means; induces the final policy
    MetaParams meta;
    std::vector<HistoryRow> history;
    env::Policy policy;
    bool converged = false;
};

CEResult train_ce(const SystemConfig& config, const aggregate::PartitionScheme& scheme,
                  const FeatureMap& features, const CEConfig& ce);

/// Policy induced by a fixed theta (used for the final mu vector).
env::Policy boltzmann_policy(const SystemConfig& config,
                             const aggregate::PartitionScheme& scheme,
                             const FeatureMap& features, std::vector<double> theta);

}  // namespace esim::crossent
