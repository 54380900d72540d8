#pragma once

#include <string>
#include <vector>

#include "esim/harness.hpp"

namespace esim::verify {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;  // measured vs expected, human readable
};

/// Budgets for the oracle checks. full() pins the acceptance-scale settings;
/// quick() shrinks the trajectory/training budgets to smoke-test scale (the
/// tolerances that are budget-independent stay put).
struct Scale {
    long long lemma1_horizon = 1'000'000;
    long long ql_iterations = 10'000'000;
    long long ordering_iterations = 10'000'000;
    long long ordering_horizon = 8'000'000;
    int ordering_replicas = 5;
    long long qlsa_iterations = 10'000'000;
    long long refine_iterations = 5'000'000;
    long long refine_horizon = 500'000;
    int refine_replicas = 5;
    int ce_seeds = 20;

    static Scale full() { return {}; }
    static Scale quick();
};

CheckResult check_lemma1_identity(const Scale& s);
CheckResult check_monotonicity();
CheckResult check_ql_vs_exact(const Scale& s);
CheckResult check_bellman_residual();
CheckResult check_figure_ordering(const Scale& s, int workers = 1);
CheckResult check_qlsa_reduction(const Scale& s);
CheckResult check_partition_refinement(const Scale& s, int workers = 1);
CheckResult check_ce_convergence(const Scale& s);
CheckResult check_cardinality();
CheckResult check_greedy_linear();
/// cli_path empty: re-runs the sweep in process. Otherwise spawns the CLI
/// twice and compares the emitted files byte for byte (timing column
/// canonicalized, since wall-clock time is not reproducible).
CheckResult check_determinism(const std::string& cli_path = "");

/// Runs every check at the given scale, printing one pass/fail line each.
/// Returns the number of failures.
int run_suite(const Scale& scale, int workers, const std::string& cli_path,
              std::vector<CheckResult>* results = nullptr);

/// The 2-node Fig.-3a-style i.i.d. instance used by several checks.
SystemConfig two_node_instance(double x1_mean = 1.5, double x2_mean = 1.0,
                               double y_mean = 13.0, int cap = 14);

}  // namespace esim::verify
