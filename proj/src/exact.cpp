#include "esim/exact.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

namespace esim::exact {

int TransitionModel::index_of(const env::SystemState& s) const {
    int idx = 0;
    for (int i = 0; i < config.n; ++i) idx = idx * (config.d_max + 1) + s.q[i];
    return idx * (config.e_max + 1) + s.e;
}

env::SystemState TransitionModel::state_of(int index) const {
    env::SystemState s;
    s.q.resize(config.n);
    s.e = index % (config.e_max + 1);
    index /= (config.e_max + 1);
    for (int i = config.n - 1; i >= 0; --i) {
        s.q[i] = index % (config.d_max + 1);
        index /= (config.d_max + 1);
    }
    return s;
}

const std::vector<env::Action>& TransitionModel::actions(int index) const {
    return actions_by_energy[index % (config.e_max + 1)];
}

TransitionModel build_model(const SystemConfig& config, std::size_t max_entries) {
    config.validate();
    if (config.markov_arrivals())
        throw std::invalid_argument(
            "exact model supports i.i.d. arrivals only (Markov state augmentation "
            "exceeds exact scope)");

    TransitionModel m;
    m.config = config;
    const int n = config.n;
    const int dq = config.d_max + 1;
    const int de = config.e_max + 1;

    double states = de;
    for (int i = 0; i < n; ++i) states *= dq;
    if (states > 1e9) throw std::invalid_argument("state space too large to enumerate");
    m.n_states = static_cast<int>(states);

    m.actions_by_energy.resize(de);
    std::size_t entries = 0;
    for (int e = 0; e < de; ++e) {
        m.actions_by_energy[e] = env::feasible_actions(n, e);
        entries += m.actions_by_energy[e].size();
    }
    // Rough |S x A| bound: every (q, e) shares the action list for e.
    double pairs = 0;
    for (int e = 0; e < de; ++e)
        pairs += static_cast<double>(m.actions_by_energy[e].size()) * states / de;
    if (pairs > static_cast<double>(max_entries))
        throw std::invalid_argument("|S x A| = " + std::to_string(pairs) +
                                    " exceeds limit " + std::to_string(max_entries));

    // Capacity-folded arrival pmfs; exact because any arrival at or beyond
    // the capacity saturates the buffer regardless of the pre-arrival level.
    std::vector<std::vector<double>> xpmf(n);
    for (int i = 0; i < n; ++i) xpmf[i] = config.arrival.data[i].pmf_clipped(config.d_max);
    std::vector<double> ypmf = config.arrival.energy.pmf_clipped(config.e_max);

    m.p.resize(m.n_states);
    m.c.resize(m.n_states);
    for (int si = 0; si < m.n_states; ++si) {
        env::SystemState s = m.state_of(si);
        const auto& acts = m.actions_by_energy[s.e];
        m.p[si].resize(acts.size());
        m.c[si].resize(acts.size());
        for (std::size_t ai = 0; ai < acts.size(); ++ai) {
            const env::Action& a = acts[ai];
            m.c[si][ai] = env::stage_cost(config, s, a);

            std::vector<int> qrem(n);
            for (int i = 0; i < n; ++i) {
                int served = env::transmit_bits(config.conversion, a.t[i]).integer_bits;
                qrem[i] = std::max(s.q[i] - served, 0);
            }
            int erem = s.e - a.total();

            std::map<int, double> row;
            // Joint enumeration over per-node data arrivals and the energy
            // arrival; probabilities factor by independence.
            std::vector<int> x(n, 0);
            for (;;) {
                double px = 1.0;
                for (int i = 0; i < n; ++i) px *= xpmf[i][x[i]];
                if (px > 0.0) {
                    env::SystemState next;
                    next.q.resize(n);
                    for (int i = 0; i < n; ++i)
                        next.q[i] = std::min(qrem[i] + x[i], config.d_max);
                    for (int y = 0; y < de; ++y) {
                        double pr = px * ypmf[y];
                        if (pr <= 0.0) continue;
                        next.e = std::min(erem + y, config.e_max);
                        row[m.index_of(next)] += pr;
                    }
                }
                int pos = n - 1;
                while (pos >= 0 && x[pos] == config.d_max) x[pos--] = 0;
                if (pos < 0) break;
                ++x[pos];
            }
            m.p[si][ai].assign(row.begin(), row.end());
        }
    }
    return m;
}

RviSolution rvi_solve(const TransitionModel& model, int reference_state, double tol,
                      int max_iters) {
    const int n = model.n_states;
    RviSolution sol;
    sol.reference_state = reference_state;
    std::vector<double> h(n, 0.0), lh(n, 0.0);

    auto apply_bellman = [&](const std::vector<double>& in, std::vector<double>& out) {
        for (int i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            const auto& rows = model.p[i];
            for (std::size_t a = 0; a < rows.size(); ++a) {
                double v = model.c[i][a];
                for (const auto& [j, pr] : rows[a]) v += pr * in[j];
                best = std::min(best, v);
            }
            out[i] = best;
        }
    };

    for (int it = 0; it < max_iters; ++it) {
        apply_bellman(h, lh);
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (int i = 0; i < n; ++i) {
            double diff = lh[i] - h[i];
            lo = std::min(lo, diff);
            hi = std::max(hi, diff);
        }
        double ref_value = lh[reference_state];
        for (int i = 0; i < n; ++i) h[i] = lh[i] - ref_value;
        sol.iterations = it + 1;
        sol.span_residual = hi - lo;
        if (hi - lo < tol) {
            sol.converged = true;
            break;
        }
    }

    sol.h = h;
    sol.q_star.resize(n);
    double lambda = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const auto& rows = model.p[i];
        sol.q_star[i].resize(rows.size());
        for (std::size_t a = 0; a < rows.size(); ++a) {
            double v = model.c[i][a];
            for (const auto& [j, pr] : rows[a]) v += pr * h[j];
            sol.q_star[i][a] = v;
        }
    }
    lambda = *std::min_element(sol.q_star[reference_state].begin(),
                               sol.q_star[reference_state].end());
    sol.lambda_star = lambda;
    return sol;
}

std::vector<int> greedy_policy(const RviSolution& sol, const TransitionModel& model) {
    std::vector<int> policy(model.n_states, 0);
    for (int i = 0; i < model.n_states; ++i) {
        const auto& q = sol.q_star[i];
        policy[i] = static_cast<int>(std::min_element(q.begin(), q.end()) - q.begin());
    }
    return policy;
}

namespace {

/// Damped power iteration for the stationary distribution; damping removes
/// periodicity without changing the fixed point.
std::vector<double> stationary_distribution(
    const TransitionModel& model, const std::vector<std::vector<double>>& action_probs,
    std::vector<double> pi, double tol = 1e-13, int max_iters = 200000) {
    const int n = model.n_states;
    std::vector<double> next(n, 0.0);
    for (int it = 0; it < max_iters; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (int i = 0; i < n; ++i) {
            if (pi[i] == 0.0) continue;
            const auto& probs = action_probs[i];
            for (std::size_t a = 0; a < probs.size(); ++a) {
                if (probs[a] == 0.0) continue;
                double w = pi[i] * probs[a];
                for (const auto& [j, pr] : model.p[i][a]) next[j] += w * pr;
            }
        }
        double delta = 0.0;
        for (int i = 0; i < n; ++i) {
            next[i] = 0.5 * next[i] + 0.5 * pi[i];
            delta += std::abs(next[i] - pi[i]);
        }
        pi.swap(next);
        if (delta < tol) break;
    }
    return pi;
}

}  // namespace

double policy_average_cost(const TransitionModel& model, const StatePolicy& policy) {
    const int n = model.n_states;
    std::vector<std::vector<double>> probs(n);
    for (int i = 0; i < n; ++i) {
        probs[i] = policy(i);
        if (probs[i].size() != model.p[i].size())
            throw std::invalid_argument("policy distribution size mismatch at state " +
                                        std::to_string(i));
    }

    std::vector<double> uniform(n, 1.0 / n);
    std::vector<double> point(n, 0.0);
    point[0] = 1.0;  // all-empty start, matching simulation
    auto pi_a = stationary_distribution(model, probs, uniform);
    auto pi_b = stationary_distribution(model, probs, point);

    double l1 = 0.0;
    for (int i = 0; i < n; ++i) l1 += std::abs(pi_a[i] - pi_b[i]);
    if (l1 > 1e-8) {
        std::cerr << "[esim] warning: chain appears reducible under this policy "
                     "(stationary L1 gap "
                  << l1 << "); falling back to simulation estimate\n";
        auto env_policy = [&](const env::SystemState& s, Rng& rng) {
            int i = model.index_of(s);
            const auto& pr = probs[i];
            double u = rng.uniform01();
            double acc = 0.0;
            std::size_t a = 0;
            for (; a + 1 < pr.size(); ++a) {
                acc += pr[a];
                if (u < acc) break;
            }
            return model.actions(i)[a];
        };
        return env::evaluate_policy(model.config, env_policy, 10'000'000, 0x5eedULL)
            .avg_cost;
    }

    // d(s) = action-averaged single-stage cost of the randomized policy.
    double cost = 0.0;
    for (int i = 0; i < n; ++i) {
        double d = 0.0;
        for (std::size_t a = 0; a < probs[i].size(); ++a) d += probs[i][a] * model.c[i][a];
        cost += pi_b[i] * d;
    }
    return cost;
}

double policy_average_cost(const TransitionModel& model, const std::vector<int>& policy) {
    return policy_average_cost(model, [&](int i) {
        std::vector<double> probs(model.p[i].size(), 0.0);
        probs[policy[i]] = 1.0;
        return probs;
    });
}

MonotonicityReport verify_monotonicity(const RviSolution& sol,
                                       const TransitionModel& model, double tol) {
    MonotonicityReport report;
    const auto& cfg = model.config;
    for (int i = 0; i < model.n_states; ++i) {
        env::SystemState s = model.state_of(i);
        // h must be non-decreasing in each q coordinate...
        for (int c = 0; c < cfg.n; ++c) {
            if (s.q[c] >= cfg.d_max) continue;
            env::SystemState up = s;
            ++up.q[c];
            int j = model.index_of(up);
            if (sol.h[j] < sol.h[i] - tol)
                report.violations.push_back({i, j, c, sol.h[i] - sol.h[j]});
        }
        // ... and non-increasing in the energy level.
        if (s.e < cfg.e_max) {
            env::SystemState up = s;
            ++up.e;
            int j = model.index_of(up);
            if (sol.h[j] > sol.h[i] + tol)
                report.violations.push_back({i, j, cfg.n, sol.h[j] - sol.h[i]});
        }
    }
    return report;
}

}  // namespace esim::exact
