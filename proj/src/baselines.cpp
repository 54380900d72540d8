#include "esim/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace esim::baselines {

env::Action greedy_allocate(const SystemConfig& config, const env::SystemState& s,
                            Rng& rng, ShareMode mode) {
    const int n = config.n;
    env::Action a;
    a.t.assign(n, 0);

    std::vector<double> requirement(n);
    double total_req = 0.0;
    for (int i = 0; i < n; ++i) {
        requirement[i] = config.conversion.inverse(static_cast<double>(s.q[i]));
        total_req += requirement[i];
    }
    if (total_req <= 0.0) return a;

    int budget = std::min(s.e, static_cast<int>(std::floor(total_req + 0.5)));
    if (budget <= 0) return a;

    std::vector<double> weight(n);
    double total_weight = 0.0;
    for (int i = 0; i < n; ++i) {
        weight[i] = mode == ShareMode::Requirement ? requirement[i]
                                                   : static_cast<double>(s.q[i]);
        total_weight += weight[i];
    }
    for (int u = 0; u < budget; ++u) {
        double r = rng.uniform01() * total_weight;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            acc += weight[i];
            if (r < acc || i == n - 1) {
                ++a.t[i];
                break;
            }
        }
    }
    return a;
}

env::Policy greedy_policy(const SystemConfig& config, ShareMode mode) {
    if (config.conversion.coeff <= 0.0)
        throw std::invalid_argument("greedy needs an invertible conversion function");
    return [config, mode](const env::SystemState& s, Rng& rng) {
        return greedy_allocate(config, s, rng, mode);
    };
}

}  // namespace esim::baselines
