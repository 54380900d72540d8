#include "esim/crossent.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace esim::crossent {

FeatureMap FeatureMap::indicator_hash(int dimension, std::uint64_t seed) {
    FeatureMap f;
    f.kind = Kind::IndicatorHash;
    f.dimension = dimension;
    f.seed = seed;
    return f;
}

FeatureMap FeatureMap::tabular_one_hot(int n, int data_levels, int energy_levels) {
    FeatureMap f;
    f.kind = Kind::TabularOneHot;
    double states = std::pow(static_cast<double>(data_levels), n) * energy_levels;
    double max_actions = std::pow(static_cast<double>(energy_levels), n);
    if (states * max_actions > 1e8)
        throw std::invalid_argument("tabular feature map too large; use indicator hash");
    f.max_actions = static_cast<std::uint64_t>(max_actions);
    f.dimension = static_cast<int>(states * max_actions);
    return f;
}

int FeatureMap::bucket(std::uint64_t aggregate_key, int action_index) const {
    if (kind == Kind::TabularOneHot)
        return static_cast<int>(aggregate_key * max_actions +
                                static_cast<std::uint64_t>(action_index));
    std::uint64_t h = derive_seed(seed, aggregate_key,
                                  static_cast<std::uint64_t>(action_index));
    return static_cast<int>(h % static_cast<std::uint64_t>(dimension));
}

MetaParams MetaParams::init(int dimension, double mu0, double sigma0) {
    MetaParams m;
    m.mu.assign(dimension, mu0);
    m.sigma.assign(dimension, sigma0);
    return m;
}

std::vector<double> policy_probabilities(const std::vector<double>& theta,
                                         const FeatureMap& features,
                                         std::uint64_t aggregate_key, int n_actions) {
    std::vector<double> logits(n_actions);
    for (int a = 0; a < n_actions; ++a)
        logits[a] = theta[features.bucket(aggregate_key, a)];
    double max_logit = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double& l : logits) {
        l = std::exp(l - max_logit);
        total += l;
    }
    for (double& l : logits) l /= total;
    return logits;
}

double evaluate_theta(const std::vector<double>& theta, const SystemConfig& config,
                      const aggregate::PartitionScheme& scheme,
                      const FeatureMap& features, long long horizon,
                      std::uint64_t seed) {
    aggregate::AggregateKeyer keyer(config.n, scheme.data_levels(),
                                    scheme.energy_levels());
    std::vector<std::vector<std::vector<int>>> actions(scheme.energy_levels() + 1);
    for (int l = 1; l <= scheme.energy_levels(); ++l)
        actions[l] = aggregate::feasible_aggregate_actions(config.n, l);

    Rng rng(seed);
    env::SystemState s = env::initial_state(config);
    double cost_sum = 0.0;
    for (long long k = 0; k < horizon; ++k) {
        aggregate::AggregateState agg = aggregate::aggregate(s, scheme);
        const auto& acts = actions[agg.energy_level];
        auto probs = policy_probabilities(theta, features, keyer.key(agg),
                                          static_cast<int>(acts.size()));
        double u = rng.uniform01();
        double acc = 0.0;
        std::size_t a = 0;
        for (; a + 1 < probs.size(); ++a) {
            acc += probs[a];
            if (u < acc) break;
        }
        env::Action real = aggregate::distribute_energy(s, acts[a], scheme, rng);
        cost_sum += env::stage_cost(config, s, real);
        s = env::step(config, s, real, rng).next;
    }
    return cost_sum / static_cast<double>(horizon);
}

MetaParams ce_iterate(const MetaParams& meta, const CEConfig& config,
                      const Evaluator& evaluate, Rng& rng, IterationStats* stats) {
    const int M = static_cast<int>(meta.mu.size());
    const int N = config.samples;

    std::vector<std::vector<double>> thetas(N, std::vector<double>(M));
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < M; ++i)
            thetas[j][i] = meta.mu[i] + meta.sigma[i] * rng.gaussian();

    std::vector<double> lambdas(N);
    for (int j = 0; j < N; ++j) lambdas[j] = evaluate(thetas[j], j);

    // Descending sort; the ceil((1-rho)N)-th entry (1-based) is the cutoff.
    std::vector<double> sorted = lambdas;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    int cut_index = static_cast<int>(std::ceil((1.0 - config.rho) * N));
    cut_index = std::clamp(cut_index, 1, N);
    double threshold = sorted[cut_index - 1];

    MetaParams next;
    next.iteration = meta.iteration + 1;
    next.mu.assign(M, 0.0);
    next.sigma.assign(M, 0.0);
    int elite_count = 0;
    for (int j = 0; j < N; ++j) {
        if (lambdas[j] > threshold) continue;
        ++elite_count;
        for (int i = 0; i < M; ++i) next.mu[i] += thetas[j][i];
    }
    assert(elite_count > 0);  // threshold construction guarantees this
    for (int i = 0; i < M; ++i) next.mu[i] /= elite_count;
    for (int j = 0; j < N; ++j) {
        if (lambdas[j] > threshold) continue;
        for (int i = 0; i < M; ++i) {
            double d = thetas[j][i] - next.mu[i];
            next.sigma[i] += d * d;
        }
    }
    for (int i = 0; i < M; ++i) next.sigma[i] = std::sqrt(next.sigma[i] / elite_count);

    if (stats) {
        stats->threshold = threshold;
        stats->best = *std::min_element(lambdas.begin(), lambdas.end());
        stats->mean_sigma =
            std::accumulate(next.sigma.begin(), next.sigma.end(), 0.0) / M;
        stats->elite_count = elite_count;
    }
    return next;
}

env::Policy boltzmann_policy(const SystemConfig& config,
                             const aggregate::PartitionScheme& scheme,
                             const FeatureMap& features, std::vector<double> theta) {
    auto scheme_ptr = std::make_shared<aggregate::PartitionScheme>(scheme);
    auto theta_ptr = std::make_shared<std::vector<double>>(std::move(theta));
    auto features_ptr = std::make_shared<FeatureMap>(features);
    auto keyer = std::make_shared<aggregate::AggregateKeyer>(
        config.n, scheme.data_levels(), scheme.energy_levels());
    auto actions = std::make_shared<std::vector<std::vector<std::vector<int>>>>();
    actions->resize(scheme.energy_levels() + 1);
    for (int l = 1; l <= scheme.energy_levels(); ++l)
        (*actions)[l] = aggregate::feasible_aggregate_actions(config.n, l);

    return [scheme_ptr, theta_ptr, features_ptr, keyer, actions](
               const env::SystemState& s, Rng& rng) {
        aggregate::AggregateState agg = aggregate::aggregate(s, *scheme_ptr);
        const auto& acts = (*actions)[agg.energy_level];
        auto probs = policy_probabilities(*theta_ptr, *features_ptr, keyer->key(agg),
                                          static_cast<int>(acts.size()));
        double u = rng.uniform01();
        double acc = 0.0;
        std::size_t a = 0;
        for (; a + 1 < probs.size(); ++a) {
            acc += probs[a];
            if (u < acc) break;
        }
        return aggregate::distribute_energy(s, acts[a], *scheme_ptr, rng);
    };
}

CEResult train_ce(const SystemConfig& config, const aggregate::PartitionScheme& scheme,
                  const FeatureMap& features, const CEConfig& ce) {
    config.validate();
    scheme.validate(config.d_max, config.e_max);

    CEResult result;
    MetaParams meta = MetaParams::init(features.dimension);
    Rng rng(derive_seed(ce.seed, 0xce));
    for (int t = 1; t <= ce.max_iterations; ++t) {
        // Per-iteration sample seeds keep trajectories independent across t.
        Evaluator iteration_eval = [&, t](const std::vector<double>& theta,
                                          int sample_index) {
            std::uint64_t seed = derive_seed(ce.seed, t, sample_index);
            return evaluate_theta(theta, config, scheme, features, ce.horizon, seed);
        };
        IterationStats stats;
        meta = ce_iterate(meta, ce, iteration_eval, rng, &stats);
        result.history.push_back({t, stats.threshold, stats.best, stats.mean_sigma});
        double max_sigma = *std::max_element(meta.sigma.begin(), meta.sigma.end());
        if (max_sigma < ce.sigma_threshold) {
            result.converged = true;
            break;
        }
    }
    result.mu = meta.mu;
    result.meta = meta;
    result.policy = boltzmann_policy(config, scheme, features, meta.mu);
    return result;
}

}  // namespace esim::crossent
