#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <stdexcept>

#include "esim/baselines.hpp"
#include "esim/harness.hpp"

namespace esim::harness {

SystemConfig apply_sweep(const SystemConfig& base, const SweepAxis& axis, double value) {
    SystemConfig c = base;
    auto retarget = [value](Distribution& d) {
        switch (d.kind) {
            case Distribution::Kind::Poisson:
            case Distribution::Kind::Deterministic:
                d.param = value;
                break;
            case Distribution::Kind::Exponential:
                d.param = 1.0 / value;
                break;
            case Distribution::Kind::Hyperexponential:
                d = Distribution::hyperexponential_with_mean(value);
                break;
        }
    };
    switch (axis.kind) {
        case SweepAxis::Kind::DataMean:
        case SweepAxis::Kind::NoiseMean:
            if (axis.node < 0 || axis.node >= c.n)
                throw std::invalid_argument("sweep node index out of range");
            retarget(c.arrival.data[axis.node]);
            break;
        case SweepAxis::Kind::EnergyMean:
            retarget(c.arrival.energy);
            break;
    }
    return c;
}

namespace {

aggregate::PartitionScheme scheme_for(const SolverSpec& solver,
                                      const SystemConfig& config) {
    if (solver.explicit_scheme) return *solver.explicit_scheme;
    return aggregate::PartitionScheme::uniform(config.d_max, solver.data_partitions,
                                               config.e_max, solver.energy_partitions);
}

crossent::FeatureMap features_for(const SolverSpec& solver, const SystemConfig& config,
                                  const aggregate::PartitionScheme& scheme) {
    if (solver.tabular_features)
        return crossent::FeatureMap::tabular_one_hot(config.n, scheme.data_levels(),
                                                     scheme.energy_levels());
    return crossent::FeatureMap::indicator_hash(solver.feature_dimension, 0xfea7);
}

}  // namespace

env::Policy make_policy(const SolverSpec& solver, const SystemConfig& config,
                        std::uint64_t seed) {
    if (solver.name == "greedy") return baselines::greedy_policy(config);
    if (solver.name == "greedy-data")
        return baselines::greedy_policy(config, baselines::ShareMode::DataProportional);

    qlearn::LearnerConfig learner;
    learner.alpha = qlearn::StepSize::constant(solver.alpha);
    learner.iterations = solver.iterations;
    learner.tail_snapshots = solver.tail_snapshots;
    learner.seed = seed;

    if (solver.name == "ql-eps" || solver.name == "qlsa-eps")
        learner.exploration = qlearn::Exploration::epsilon_greedy(solver.epsilon);
    else
        // UCB for the UCB-named solvers and for combined: the combined
        // learner's tiny (sum q, E) space makes systematic visit-balanced
        // exploration cheap, and epsilon-greedy occasionally leaves the
        // high-backlog band with stale values (a trained replica can then
        // trap itself there).
        learner.exploration = qlearn::Exploration::ucb(solver.beta);

    // Anchor the relative-value subtraction at (empty queues, full buffer):
    // unlike the all-empty default, that state is recurrent under any stable
    // policy even when harvesting keeps the buffer away from zero.
    env::SystemState anchor = env::initial_state(config);
    anchor.e = config.e_max;

    if (solver.name == "ql-eps" || solver.name == "ql-ucb") {
        learner.reference_key = qlearn::StateKeyer(config).key(anchor);
        return qlearn::train(config, learner).policy;
    }
    if (solver.name == "combined") {
        learner.reference_key = static_cast<std::uint64_t>(config.e_max);
        return qlearn::train_combined(config, learner).policy;
    }
    if (solver.name == "qlsa-eps" || solver.name == "qlsa-ucb") {
        auto scheme = scheme_for(solver, config);
        aggregate::AggregateState agg_anchor;
        agg_anchor.levels.assign(config.n, 1);
        agg_anchor.energy_level = scheme.energy_levels();
        learner.reference_key =
            aggregate::AggregateKeyer(config.n, scheme.data_levels(),
                                      scheme.energy_levels())
                .key(agg_anchor);
        return aggregate::train_qlsa(config, scheme, learner).policy;
    }
    if (solver.name == "ce") {
        auto scheme = scheme_for(solver, config);
        auto features = features_for(solver, config, scheme);
        crossent::CEConfig ce = solver.ce;
        ce.seed = seed;
        return crossent::train_ce(config, scheme, features, ce).policy;
    }
    throw std::invalid_argument("unknown solver: " + solver.name);
}

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, int workers) {
    spec.validate();
    if (workers < 1) workers = 1;

    struct Task {
        std::size_t point;
        std::size_t solver;
    };
    std::vector<Task> tasks;
    for (std::size_t p = 0; p < spec.sweep.grid.size(); ++p)
        for (std::size_t s = 0; s < spec.solvers.size(); ++s) tasks.push_back({p, s});

    std::vector<ResultRow> rows(tasks.size());
    auto run_task = [&](const Task& task) {
        const double value = spec.sweep.grid[task.point];
        const SolverSpec& solver = spec.solvers[task.solver];
        ResultRow row;
        row.sweep_value = value;
        row.solver = solver.name;
        auto start = std::chrono::steady_clock::now();
        try {
            SystemConfig config = apply_sweep(spec.base, spec.sweep, value);
            std::vector<double> costs(spec.replicas), queues(spec.replicas);
            for (int rep = 0; rep < spec.replicas; ++rep) {
                // One training seed per (point, replica), shared by every
                // solver: the trainers sample arrivals from a stream that
                // depends only on this seed, so competing learners train on
                // the same arrival realizations too.
                std::uint64_t train_seed = derive_seed(spec.seed, task.point, rep);
                env::Policy policy = make_policy(solver, config, train_seed);
                // Evaluation streams depend only on (seed, point, replica):
                // every solver at a point is scored on the same arrival
                // realizations (common random numbers), so solver
                // comparisons pair up per replica.
                std::uint64_t eval_seed =
                    derive_seed(spec.seed, task.point, rep, 0xe7a1);
                auto eval = env::evaluate_policy(config, policy, spec.horizon, eval_seed);
                costs[rep] = eval.avg_cost;
                queues[rep] = eval.avg_queue_sum;
            }
            double mean = 0.0, qmean = 0.0;
            for (int rep = 0; rep < spec.replicas; ++rep) {
                mean += costs[rep];
                qmean += queues[rep];
            }
            mean /= spec.replicas;
            qmean /= spec.replicas;
            double var = 0.0;
            for (int rep = 0; rep < spec.replicas; ++rep)
                var += (costs[rep] - mean) * (costs[rep] - mean);
            row.mean_cost = mean;
            row.mean_queue_sum = qmean;
            row.replica_costs = costs;
            row.stderr_cost = spec.replicas > 1
                                  ? std::sqrt(var / (spec.replicas - 1) / spec.replicas)
                                  : 0.0;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        row.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                .count();
        return row;
    };

    if (workers == 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) rows[i] = run_task(tasks[i]);
    } else {
        std::size_t next = 0;
        while (next < tasks.size()) {
            std::size_t batch = std::min<std::size_t>(workers, tasks.size() - next);
            std::vector<std::future<ResultRow>> futures;
            for (std::size_t i = 0; i < batch; ++i)
                futures.push_back(std::async(std::launch::async, run_task,
                                             tasks[next + i]));
            for (std::size_t i = 0; i < batch; ++i) rows[next + i] = futures[i].get();
            next += batch;
        }
    }
    return rows;
}

}  // namespace esim::harness
