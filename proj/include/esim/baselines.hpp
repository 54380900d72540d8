#pragma once

#include "esim/env.hpp"

namespace esim::baselines {

/// How greedy splits its budget between nodes: by energy requirement
/// g^{-1}(q_i) (default) or by raw data proportion q_i.
enum class ShareMode { Requirement, DataProportional };

/// Myopic heuristic: budget min(e, round(sum_i g^{-1}(q_i))), shared
/// unit-by-unit in proportion to the per-node requirement. Zero backlog or
/// zero energy yields the zero allocation.
env::Action greedy_allocate(const SystemConfig& config, const env::SystemState& s,
                            Rng& rng, ShareMode mode = ShareMode::Requirement);

env::Policy greedy_policy(const SystemConfig& config,
                          ShareMode mode = ShareMode::Requirement);

}  // namespace esim::baselines
