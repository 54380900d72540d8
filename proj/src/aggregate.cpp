#include "esim/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "esim/baselines.hpp"

namespace esim::aggregate {

namespace {

int level_of(const std::vector<Interval>& cuts, int v, const char* what) {
    for (std::size_t i = 0; i < cuts.size(); ++i)
        if (v >= cuts[i].lo && v <= cuts[i].hi) return static_cast<int>(i) + 1;
    throw std::invalid_argument(std::string(what) + " level " + std::to_string(v) +
                                " outside partition range");
}

void validate_cuts(const std::vector<Interval>& cuts, int cap, const char* what) {
    if (cuts.empty()) throw std::invalid_argument(std::string(what) + " cuts empty");
    if (cuts.front().lo != 0)
        throw std::invalid_argument(std::string(what) + " cuts must start at 0");
    if (cuts.back().hi != cap)
        throw std::invalid_argument(std::string(what) + " cuts must end at capacity");
    for (std::size_t i = 0; i < cuts.size(); ++i) {
        if (cuts[i].lo > cuts[i].hi)
            throw std::invalid_argument(std::string(what) + " cut interval inverted");
        if (i + 1 < cuts.size() && cuts[i].hi + 1 != cuts[i + 1].lo)
            throw std::invalid_argument(std::string(what) + " cuts must be contiguous");
    }
}

std::vector<Interval> uniform_cuts(int cap, int parts) {
    if (parts < 1 || parts > cap + 1)
        throw std::invalid_argument("partition count must be in [1, cap + 1]");
    // cap+1 integer levels split into `parts` intervals; the remainder widths
    // go to the top partitions.
    int base = (cap + 1) / parts;
    int extra = (cap + 1) % parts;
    std::vector<Interval> cuts;
    int lo = 0;
    for (int i = 0; i < parts; ++i) {
        int width = base + (i >= parts - extra ? 1 : 0);
        cuts.push_back({lo, lo + width - 1});
        lo += width;
    }
    return cuts;
}

}  // namespace

int PartitionScheme::data_level_of(int q) const { return level_of(data_cuts, q, "data"); }
int PartitionScheme::energy_level_of(int e) const {
    return level_of(energy_cuts, e, "energy");
}

PartitionScheme PartitionScheme::uniform(int d_max, int data_parts, int e_max,
                                         int energy_parts) {
    PartitionScheme s;
    s.data_cuts = uniform_cuts(d_max, data_parts);
    s.energy_cuts = uniform_cuts(e_max, energy_parts);
    return s;
}

PartitionScheme PartitionScheme::from_cuts(std::vector<Interval> data,
                                           std::vector<Interval> energy) {
    PartitionScheme s;
    s.data_cuts = std::move(data);
    s.energy_cuts = std::move(energy);
    return s;
}

void PartitionScheme::validate(int d_max, int e_max) const {
    validate_cuts(data_cuts, d_max, "data");
    validate_cuts(energy_cuts, e_max, "energy");
}

AggregateState aggregate(const env::SystemState& s, const PartitionScheme& scheme) {
    AggregateState a;
    a.levels.resize(s.q.size());
    for (std::size_t i = 0; i < s.q.size(); ++i)
        a.levels[i] = scheme.data_level_of(s.q[i]);
    a.energy_level = scheme.energy_level_of(s.e);
    return a;
}

std::vector<std::vector<int>> feasible_aggregate_actions(int n, int energy_level) {
    std::vector<std::vector<int>> out;
    std::vector<int> t(n, 1);
    for (;;) {
        out.push_back(t);
        int pos = n - 1;
        while (pos >= 0 && t[pos] == energy_level) t[pos--] = 1;
        if (pos < 0) break;
        ++t[pos];
    }
    return out;
}

env::Action distribute_energy(const env::SystemState& s,
                              const std::vector<int>& t_levels,
                              const PartitionScheme& scheme, Rng& rng,
                              DistributeDiag* diag) {
    const int n = static_cast<int>(s.q.size());
    std::vector<int> lb(n), ub(n);
    for (int i = 0; i < n; ++i) {
        const Interval& iv = scheme.energy_cuts[t_levels[i] - 1];
        lb[i] = iv.lo;
        ub[i] = iv.hi;
    }

    long long lb_sum = std::accumulate(lb.begin(), lb.end(), 0LL);
    if (lb_sum > s.e) {
        // Truncate lower bounds of the lowest-backlog nodes first, keeping
        // energy where the data is.
        if (diag) ++diag->truncated_lower_bounds;
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return s.q[a] < s.q[b]; });
        for (int i : order) {
            long long deficit = lb_sum - s.e;
            if (deficit <= 0) break;
            int cut = static_cast<int>(std::min<long long>(deficit, lb[i]));
            lb[i] -= cut;
            lb_sum -= cut;
        }
    }

    env::Action action;
    action.t = lb;
    long long rem = s.e - lb_sum;
    for (long long u = 0; u < rem; ++u) {
        long long weight = 0;
        for (int i = 0; i < n; ++i)
            if (action.t[i] < ub[i]) weight += s.q[i];
        if (weight == 0) {
            // Every node capped (or no data anywhere): units stay buffered.
            if (diag) diag->units_retained += rem - u;
            break;
        }
        double r = rng.uniform01() * static_cast<double>(weight);
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            if (action.t[i] >= ub[i]) continue;
            acc += s.q[i];
            if (r < acc) {
                ++action.t[i];
                break;
            }
        }
    }
    return action;
}

TrainResult train_qlsa(const SystemConfig& config, const PartitionScheme& scheme,
                       const qlearn::LearnerConfig& learner) {
    config.validate();
    scheme.validate(config.d_max, config.e_max);
    AggregateKeyer keyer(config.n, scheme.data_levels(), scheme.energy_levels());

    // Aggregate action lists depend only on the energy level.
    std::vector<std::vector<std::vector<int>>> actions(scheme.energy_levels() + 1);
    for (int l = 1; l <= scheme.energy_levels(); ++l)
        actions[l] = feasible_aggregate_actions(config.n, l);

    auto table = std::make_shared<qlearn::QTable>();
    // Exploration/distribution draws and arrival draws on separate streams;
    // see qlearn::train() for why.
    Rng rng(derive_seed(learner.seed, 0xac7));
    Rng env_rng(derive_seed(learner.seed, 0xe44));

    env::SystemState s = env::initial_state(config);
    AggregateState agg = aggregate(s, scheme);
    std::uint64_t skey = keyer.key(agg);
    const std::uint64_t ref = learner.reference_key.value_or(keyer.reference_key());

    TrainResult result;
    qlearn::TailAverager averager(learner.iterations, learner.tail_snapshots);
    double cost_sum = 0.0;
    for (long long k = 0; k < learner.iterations; ++k) {
        const auto& acts = actions[agg.energy_level];
        const int n_actions = static_cast<int>(acts.size());
        qlearn::QTable::Entry& entry = table->at(skey, n_actions);
        int a = qlearn::select_action(entry, n_actions, learner.exploration, rng);

        env::Action real_action = distribute_energy(s, acts[a], scheme, rng);
        double cost = env::stage_cost(config, s, real_action);
        env::StepResult sr = env::step(config, s, real_action, env_rng);

        AggregateState next_agg = aggregate(sr.next, scheme);
        std::uint64_t jkey = keyer.key(next_agg);
        qlearn::q_update(*table, skey, a, n_actions, cost, jkey, ref,
                         learner.alpha.at(k));
        averager.observe(k, *table);

        cost_sum += cost;
        if ((k + 1) % learner.curve_stride == 0)
            result.curve.push_back({k + 1, cost_sum / static_cast<double>(k + 1)});

        s = std::move(sr.next);
        agg = std::move(next_agg);
        skey = jkey;
    }

    result.table = table;
    result.avg_table = averager.finalize();
    auto avg = result.avg_table;
    auto scheme_ptr = std::make_shared<PartitionScheme>(scheme);
    auto keyer_ptr = std::make_shared<AggregateKeyer>(keyer);
    auto actions_ptr =
        std::make_shared<std::vector<std::vector<std::vector<int>>>>(std::move(actions));
    result.policy = [config, table, avg, scheme_ptr, keyer_ptr, actions_ptr](
                        const env::SystemState& s, Rng& rng) {
        AggregateState agg = aggregate(s, *scheme_ptr);
        const auto& acts = (*actions_ptr)[agg.energy_level];
        int a = qlearn::extract_action(*table, avg.get(), keyer_ptr->key(agg),
                                       static_cast<int>(acts.size()));
        // Aggregate states never reached during training carry no estimate;
        // act myopically there instead of idling.
        if (a < 0) return baselines::greedy_allocate(config, s, rng);
        return distribute_energy(s, acts[a], *scheme_ptr, rng);
    };
    return result;
}

CardinalityReport cardinality(int n, int d_max, int e_max, int data_parts,
                              int energy_parts) {
    CardinalityReport r{};
    r.aggregate_states = std::pow(static_cast<double>(data_parts), n) * energy_parts;
    double pairs = 0.0;
    for (int l = 1; l <= energy_parts; ++l)
        pairs += std::pow(static_cast<double>(data_parts), n) *
                 std::pow(static_cast<double>(l), n);
    r.aggregate_pairs = pairs;
    r.aggregate_pairs_bound = std::pow(static_cast<double>(data_parts), n) *
                              energy_parts * std::pow(static_cast<double>(energy_parts), n);
    r.full_states = std::pow(static_cast<double>(d_max) + 1, n) * (e_max + 1);
    double full_pairs = 0.0;
    for (int e = 0; e <= e_max; ++e) {
        // C(e + n, n) feasible allocations at energy level e.
        double count = 1.0;
        for (int i = 1; i <= n; ++i) count *= static_cast<double>(e + i) / i;
        full_pairs += std::pow(static_cast<double>(d_max) + 1, n) * count;
    }
    r.full_pairs = full_pairs;
    return r;
}

}  // namespace esim::aggregate
