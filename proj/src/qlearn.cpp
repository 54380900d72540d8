#include "esim/qlearn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "esim/baselines.hpp"

namespace esim::qlearn {

double StepSize::at(long long k) const {
    if (kind == Kind::Constant) return value;
    double epoch = std::ceil(static_cast<double>(k + 1) / static_cast<double>(stride));
    return c / std::pow(epoch, exponent);
}

StateKeyer::StateKeyer(const SystemConfig& config)
    : n_(config.n),
      dq_(static_cast<std::uint64_t>(config.d_max) + 1),
      de_(static_cast<std::uint64_t>(config.e_max) + 1),
      xq_(static_cast<std::uint64_t>(config.effective_x_cap()) + 1),
      yq_(static_cast<std::uint64_t>(config.effective_y_cap()) + 1),
      markov_(config.markov_arrivals()) {}

std::uint64_t StateKeyer::key(const env::SystemState& s) const {
    std::uint64_t k = 0;
    for (int i = 0; i < n_; ++i) k = k * dq_ + static_cast<std::uint64_t>(s.q[i]);
    k = k * de_ + static_cast<std::uint64_t>(s.e);
    if (markov_) {
        for (int i = 0; i < n_; ++i) k = k * xq_ + static_cast<std::uint64_t>(s.prev_x[i]);
        k = k * yq_ + static_cast<std::uint64_t>(s.prev_y);
    }
    return k;
}

int select_action(const QTable::Entry& entry, int n_actions,
                  const Exploration& exploration, Rng& rng) {
    if (n_actions == 1) return 0;
    if (exploration.kind == Exploration::Kind::EpsilonGreedy) {
        int greedy = 0;
        for (int a = 1; a < n_actions; ++a)
            if (entry.q[a] < entry.q[greedy]) greedy = a;
        if (rng.uniform01() >= exploration.epsilon) return greedy;
        // Uniform over the non-greedy actions.
        int pick = static_cast<int>(rng.uniform_below(n_actions - 1));
        return pick >= greedy ? pick + 1 : pick;
    }
    // UCB: any unvisited action is taken first (lowest index).
    for (int a = 0; a < n_actions; ++a)
        if (entry.visits[a] == 0) return a;
    double log_n = std::log(static_cast<double>(entry.n_state));
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < n_actions; ++a) {
        double score = -entry.q[a] +
                       exploration.beta * std::sqrt(log_n / entry.visits[a]);
        if (score > best_score) {
            best_score = score;
            best = a;
        }
    }
    return best;
}

void q_update(QTable& table, std::uint64_t i, int a, int n_actions_i, double cost,
              std::uint64_t j, std::uint64_t ref, double alpha) {
    double target = cost + table.min_q(j) - table.min_q(ref);
    QTable::Entry& e = table.at(i, n_actions_i);
    e.q[a] = (1.0 - alpha) * e.q[a] + alpha * target;
    ++e.visits[a];
    ++e.n_state;
}

TailAverager::TailAverager(long long iterations, int snapshots) {
    start_ = iterations / 2;
    long long tail = std::max<long long>(iterations - start_, 1);
    stride_ = std::max<long long>(tail / std::max(snapshots, 1), 1);
    sums_ = std::make_shared<QTable>();
}

void TailAverager::observe(long long k, const QTable& table) {
    if (k < start_ || (k - start_) % stride_ != 0) return;
    const bool first = baseline_.empty();
    for (const auto& [key, e] : table.entries()) {
        QTable::Entry& s = sums_->at(key, static_cast<int>(e.q.size()));
        if (first) baseline_[key] = e.visits;
        auto& last = seen_[key];
        auto& act = active_snaps_[key];
        auto& sq = sumsq_[key];
        if (act.empty()) act.assign(e.q.size(), 0);
        if (sq.empty()) sq.assign(e.q.size(), 0.0);
        for (std::size_t a = 0; a < e.q.size(); ++a) {
            // Snapshots where the estimate actually moved; frozen stretches
            // repeat one value and carry no new information.
            if (!first && a < last.size() && e.visits[a] > last[a]) ++act[a];
            if (e.visits[a] == 0) continue;  // still at the initial 0
            s.q[a] += e.q[a];
            sq[a] += e.q[a] * e.q[a];
            ++s.visits[a];  // snapshots contributing to this action
        }
        last = e.visits;
        ++s.n_state;
    }
}

std::shared_ptr<QTable> TailAverager::finalize() const {
    auto out = std::make_shared<QTable>();
    for (const auto& [key, s] : sums_->entries()) {
        if (s.n_state == 0) continue;
        QTable::Entry& e = out->at(key, static_cast<int>(s.q.size()));
        auto base_it = baseline_.find(key);
        auto last_it = seen_.find(key);
        auto act_it = active_snaps_.find(key);
        auto sq_it = sumsq_.find(key);
        for (std::size_t a = 0; a < s.q.size(); ++a) {
            if (s.visits[a] == 0) continue;
            // Actions not visited at all inside the window carry estimates
            // frozen since early training (a constant step size never
            // forgets them); a trajectory that once lingered in a since-
            // abandoned region leaves arbitrary values there, so such
            // actions are dropped rather than averaged.
            if (base_it != baseline_.end() && last_it != seen_.end() &&
                a < base_it->second.size() &&
                last_it->second[a] == base_it->second[a])
                continue;
            const double n = static_cast<double>(s.visits[a]);
            const double mean = s.q[a] / n;
            // Pessimistic score: thinly-sampled actions get a one-standard-
            // error markup so the extraction argmin does not chase a noisy
            // low estimate (winner's curse over large action sets). The
            // effective sample count is the number of snapshots where the
            // estimate moved, not the snapshot count.
            double score = mean;
            if (act_it != active_snaps_.end() && sq_it != sumsq_.end()) {
                const double var =
                    std::max(0.0, sq_it->second[a] / n - mean * mean);
                const double n_eff =
                    std::max<long long>(act_it->second[a], 1);
                score += std::sqrt(var / n_eff);
            }
            e.q[a] = score;
            e.visits[a] = s.visits[a];
        }
        e.n_state = s.n_state;
    }
    return out;
}

env::Action share_proportional(const env::SystemState& s, int budget, Rng& rng) {
    const int n = static_cast<int>(s.q.size());
    env::Action a;
    a.t.assign(n, 0);
    long long total_q = 0;
    for (int q : s.q) total_q += q;
    if (total_q == 0 || budget <= 0) return a;
    for (int u = 0; u < budget; ++u) {
        double r = rng.uniform01() * static_cast<double>(total_q);
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            acc += s.q[i];
            if (r < acc || i == n - 1) {
                ++a.t[i];
                break;
            }
        }
    }
    return a;
}

int extract_action(const QTable& raw, const QTable* avg, std::uint64_t key,
                   int n_actions) {
    const QTable::Entry* r = raw.find(key);
    if (!r) return -1;
    const QTable::Entry* av = avg ? avg->find(key) : nullptr;
    int best = -1;
    double best_v = std::numeric_limits<double>::infinity();
    for (int a = 0; a < n_actions; ++a) {
        if (r->visits[a] == 0) continue;
        // With an averaging window available, trust only actions that were
        // actually updated inside it: estimates frozen since early training
        // are stale (a trajectory that once lingered in a rarely-revisited
        // region leaves arbitrary values there).
        if (av && av->visits[a] == 0) continue;
        double v = av ? av->q[a] : r->q[a];
        if (v < best_v) {
            best_v = v;
            best = a;
        }
    }
    return best;
}

namespace {

/// Per-energy-level action cache shared by the training loops.
std::vector<std::vector<env::Action>> action_cache(const SystemConfig& config) {
    std::vector<std::vector<env::Action>> cache(config.e_max + 1);
    for (int e = 0; e <= config.e_max; ++e) cache[e] = env::feasible_actions(config.n, e);
    return cache;
}

env::Policy greedy_from_table(const SystemConfig& config,
                              std::shared_ptr<QTable> table,
                              std::shared_ptr<QTable> avg) {
    auto keyer = std::make_shared<StateKeyer>(config);
    auto actions = std::make_shared<std::vector<std::vector<env::Action>>>(
        action_cache(config));
    return [config, table, avg, keyer, actions](const env::SystemState& s, Rng& rng) {
        const auto& acts = (*actions)[s.e];
        int a = extract_action(*table, avg.get(), keyer->key(s),
                               static_cast<int>(acts.size()));
        // States never reached during training carry no estimate; act
        // myopically there instead of idling.
        if (a < 0) return baselines::greedy_allocate(config, s, rng);
        return acts[a];
    };
}

}  // namespace

TrainResult train(const SystemConfig& config, const LearnerConfig& learner) {
    config.validate();
    StateKeyer keyer(config);
    auto actions = action_cache(config);
    auto table = std::make_shared<QTable>();
    // Separate exploration and environment streams: arrivals are exogenous,
    // so two learners trained from the same seed see the same arrival
    // sequence regardless of how many draws their exploration rules consume
    // (common random numbers across solvers).
    Rng rng(derive_seed(learner.seed, 0xac7));
    Rng env_rng(derive_seed(learner.seed, 0xe44));

    env::SystemState s = env::initial_state(config);
    std::uint64_t skey = keyer.key(s);
    const std::uint64_t ref = learner.reference_key.value_or(keyer.reference_key());

    TrainResult result;
    TailAverager averager(learner.iterations, learner.tail_snapshots);
    double cost_sum = 0.0;
    for (long long k = 0; k < learner.iterations; ++k) {
        const auto& acts = actions[s.e];
        const int n_actions = static_cast<int>(acts.size());
        QTable::Entry& entry = table->at(skey, n_actions);
        int a = select_action(entry, n_actions, learner.exploration, rng);

        double cost = env::stage_cost(config, s, acts[a]);
        env::StepResult sr = env::step(config, s, acts[a], env_rng);
        std::uint64_t jkey = keyer.key(sr.next);

        q_update(*table, skey, a, n_actions, cost, jkey, ref, learner.alpha.at(k));
        averager.observe(k, *table);

        cost_sum += cost;
        if ((k + 1) % learner.curve_stride == 0)
            result.curve.push_back({k + 1, cost_sum / static_cast<double>(k + 1)});

        s = std::move(sr.next);
        skey = jkey;
    }

    result.table = table;
    result.avg_table = averager.finalize();
    result.policy = greedy_from_table(config, table, result.avg_table);
    return result;
}

TrainResult train_combined(const SystemConfig& config, const LearnerConfig& learner) {
    config.validate();
    auto table = std::make_shared<QTable>();
    // Exploration/action draws and arrival draws on separate streams; see
    // train() for why.
    Rng rng(derive_seed(learner.seed, 0xac7));
    Rng env_rng(derive_seed(learner.seed, 0xe44));
    const std::uint64_t de = static_cast<std::uint64_t>(config.e_max) + 1;
    auto combined_key = [de](const env::SystemState& s) {
        std::uint64_t total_q = 0;
        for (int q : s.q) total_q += static_cast<std::uint64_t>(q);
        return total_q * de + static_cast<std::uint64_t>(s.e);
    };

    env::SystemState s = env::initial_state(config);
    std::uint64_t skey = combined_key(s);

    TrainResult result;
    TailAverager averager(learner.iterations, learner.tail_snapshots);
    double cost_sum = 0.0;
    for (long long k = 0; k < learner.iterations; ++k) {
        // Scalar actions: total budget 0..E.
        const int n_actions = s.e + 1;
        QTable::Entry& entry = table->at(skey, n_actions);
        int budget = select_action(entry, n_actions, learner.exploration, rng);

        env::Action a = share_proportional(s, budget, rng);
        double cost = env::stage_cost(config, s, a);
        env::StepResult sr = env::step(config, s, a, env_rng);
        std::uint64_t jkey = combined_key(sr.next);

        q_update(*table, skey, budget, n_actions, cost, jkey,
                 learner.reference_key.value_or(0), learner.alpha.at(k));
        averager.observe(k, *table);

        cost_sum += cost;
        if ((k + 1) % learner.curve_stride == 0)
            result.curve.push_back({k + 1, cost_sum / static_cast<double>(k + 1)});

        s = std::move(sr.next);
        skey = jkey;
    }

    result.table = table;
    result.avg_table = averager.finalize();
    auto avg = result.avg_table;
    result.policy = [config, table, avg, combined_key](const env::SystemState& s,
                                                       Rng& rng) {
        int budget = extract_action(*table, avg.get(), combined_key(s), s.e + 1);
        if (budget < 0) return baselines::greedy_allocate(config, s, rng);
        return share_proportional(s, budget, rng);
    };
    return result;
}

}  // namespace esim::qlearn
