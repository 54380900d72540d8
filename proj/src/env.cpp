#include "esim/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace esim::env {

std::vector<Action> feasible_actions(int n, int e) {
    std::vector<Action> out;
    std::vector<int> t(n, 0);
    int used = 0;
    // Lexicographic enumeration of the integer simplex {t >= 0 : sum <= e}.
    for (;;) {
        out.push_back(Action{t});
        // Rightmost position whose increment keeps the prefix sum <= e.
        int pos = n - 1;
        while (pos >= 0 && used + 1 > e) {
            used -= t[pos];
            t[pos] = 0;
            --pos;
        }
        if (pos < 0) break;
        ++t[pos];
        ++used;
        for (int i = pos + 1; i < n; ++i) t[i] = 0;
    }
    return out;
}

TransmitBits transmit_bits(const ConversionFunction& g, int t) {
    double real = g.value(static_cast<double>(t));
    return {real, static_cast<int>(std::floor(real + 0.5))};
}

void sample_arrivals(const SystemConfig& config, const SystemState& s, Rng& rng,
                     std::vector<int>& x_out, int& y_out) {
    const auto& arr = config.arrival;
    x_out.resize(config.n);
    if (arr.kind == ArrivalModel::Kind::Iid) {
        for (int i = 0; i < config.n; ++i) x_out[i] = arr.data[i].sample_integer(rng);
        y_out = arr.energy.sample_integer(rng);
    } else {
        const int x_cap = config.effective_x_cap();
        const int y_cap = config.effective_y_cap();
        for (int i = 0; i < config.n; ++i) {
            double v = arr.data[i].sample_real(rng);
            for (int j = 0; j < config.n; ++j)
                v += arr.ar_matrix[i][j] * s.prev_x[j];
            int k = static_cast<int>(std::floor(v + 0.5));
            x_out[i] = std::clamp(k, 0, x_cap);
        }
        double v = arr.ar_energy_coeff * s.prev_y + arr.energy.sample_real(rng);
        y_out = std::clamp(static_cast<int>(std::floor(v + 0.5)), 0, y_cap);
    }
}

StepResult step(const SystemConfig& config, const SystemState& s, const Action& a,
                Rng& rng) {
    int total = a.total();
    if (static_cast<int>(a.t.size()) != config.n || total > s.e)
        throw std::invalid_argument("infeasible action: sum T = " +
                                    std::to_string(total) +
                                    " exceeds E = " + std::to_string(s.e));

    StepResult r;
    sample_arrivals(config, s, rng, r.x, r.y);

    r.next.q.resize(config.n);
    for (int i = 0; i < config.n; ++i) {
        int served = transmit_bits(config.conversion, a.t[i]).integer_bits;
        int level = std::max(s.q[i] - served, 0) + r.x[i];
        if (level > config.d_max) {
            r.dropped_data += level - config.d_max;
            level = config.d_max;
        }
        r.next.q[i] = level;
    }
    int e_level = (s.e - total) + r.y;
    if (e_level > config.e_max) {
        r.dropped_energy += e_level - config.e_max;
        e_level = config.e_max;
    }
    r.next.e = e_level;
    if (config.markov_arrivals()) {
        r.next.prev_x = r.x;
        r.next.prev_y = r.y;
    }
    return r;
}

double stage_cost(const SystemConfig& config, const SystemState& s, const Action& a) {
    double cost = 0.0;
    for (int i = 0; i < config.n; ++i) {
        double backlog = s.q[i] - config.conversion.value(static_cast<double>(a.t[i]));
        cost += config.r1 * std::max(backlog, 0.0) + config.r2 * a.t[i];
    }
    return cost;
}

SystemState initial_state(const SystemConfig& config) {
    SystemState s;
    s.q.assign(config.n, 0);
    s.e = 0;
    if (config.markov_arrivals()) {
        s.prev_x.assign(config.n, 0);
        s.prev_y = 0;
    }
    return s;
}

EvalResult evaluate_policy(const SystemConfig& config, const Policy& policy,
                           long long horizon, std::uint64_t seed) {
    // Policy draws (tie-breaks, proportional sharing) and arrival draws on
    // separate streams: policies evaluated from the same seed then face the
    // same arrival realizations no matter how much randomness they consume
    // (common random numbers).
    Rng policy_rng(derive_seed(seed, 0xac7));
    Rng env_rng(derive_seed(seed, 0xe44));
    SystemState s = initial_state(config);
    EvalResult res;
    double cost_sum = 0.0;
    double queue_sum = 0.0;
    for (long long k = 0; k < horizon; ++k) {
        Action a = policy(s, policy_rng);
        for (int v : s.q) queue_sum += v;
        cost_sum += stage_cost(config, s, a);
        StepResult sr;
        try {
            sr = step(config, s, a, env_rng);
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error("policy returned infeasible action at step " +
                                     std::to_string(k) + ": " + e.what());
        }
        res.dropped_data += sr.dropped_data;
        res.dropped_energy += sr.dropped_energy;
        s = std::move(sr.next);
    }
    res.avg_cost = cost_sum / static_cast<double>(horizon);
    res.avg_queue_sum = queue_sum / static_cast<double>(horizon);
    return res;
}

}  // namespace esim::env
