#include "esim/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "esim/baselines.hpp"
#include "esim/exact.hpp"

namespace esim::verify {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

SystemConfig small_instance() {
    // n=1, d_max=e_max=2, Poisson(0.3)/Poisson(1.0), g = ln(1+x).
    SystemConfig c;
    c.n = 1;
    c.d_max = 2;
    c.e_max = 2;
    c.conversion = ConversionFunction::scaled_log(1.0);
    c.arrival.kind = ArrivalModel::Kind::Iid;
    c.arrival.data = {Distribution::poisson(0.3)};
    c.arrival.energy = Distribution::poisson(1.0);
    return c;
}

/// Exact average cost of an arbitrary deterministic env policy.
double exact_cost_of_policy(const exact::TransitionModel& model,
                            const env::Policy& policy) {
    Rng rng(0);
    std::vector<int> choice(model.n_states, 0);
    for (int i = 0; i < model.n_states; ++i) {
        env::SystemState s = model.state_of(i);
        env::Action a = policy(s, rng);
        const auto& acts = model.actions(i);
        auto it = std::find_if(acts.begin(), acts.end(),
                               [&](const env::Action& b) { return b.t == a.t; });
        choice[i] = static_cast<int>(it - acts.begin());
    }
    return exact::policy_average_cost(model, choice);
}

}  // namespace

Scale Scale::quick() {
    Scale s;
    s.lemma1_horizon = 200'000;
    s.ql_iterations = 1'000'000;
    s.ordering_iterations = 1'000'000;
    s.ordering_horizon = 200'000;
    s.ordering_replicas = 3;
    s.qlsa_iterations = 1'000'000;
    s.refine_iterations = 500'000;
    s.refine_horizon = 100'000;
    s.refine_replicas = 3;
    s.ce_seeds = 5;
    return s;
}

SystemConfig two_node_instance(double x1_mean, double x2_mean, double y_mean, int cap) {
    SystemConfig c;
    c.n = 2;
    c.d_max = cap;
    c.e_max = cap;
    c.conversion = ConversionFunction::scaled_log(1.0);
    c.arrival.kind = ArrivalModel::Kind::Iid;
    c.arrival.data = {Distribution::poisson(x1_mean), Distribution::poisson(x2_mean)};
    c.arrival.energy = Distribution::poisson(y_mean);
    return c;
}

CheckResult check_lemma1_identity(const Scale& s) {
    CheckResult r{"lemma1-identity"};
    SystemConfig config = two_node_instance();
    // Lemma 1 compares the cost (real-valued g) against the realized queue
    // dynamics (integer-rounded g) on the same trajectory, so the check uses
    // a conversion where the rounding is exact. Greedy keeps the queues far
    // from d_max, so capacity drops stay negligible too.
    config.conversion = ConversionFunction::linear(1.0);
    env::Policy policy = baselines::greedy_policy(config);
    auto eval = env::evaluate_policy(config, policy, s.lemma1_horizon, 0x1e44a1);
    double expected_x = config.arrival.data[0].mean() + config.arrival.data[1].mean();
    double gap = std::abs(eval.avg_cost - (eval.avg_queue_sum - expected_x));
    r.pass = gap <= 0.02;
    r.detail = "|lambda - (lambda~ - sum E[X])| = " + fmt(gap) + " (tol 0.02)";
    return r;
}

CheckResult check_monotonicity() {
    CheckResult r{"proposition1-monotonicity"};
    std::size_t total_violations = 0;
    std::string details;

    {
        SystemConfig c;
        c.n = 1;
        c.d_max = 5;
        c.e_max = 5;
        c.conversion = ConversionFunction::scaled_log(1.0);
        c.arrival.data = {Distribution::poisson(0.8)};
        c.arrival.energy = Distribution::poisson(1.5);
        auto model = exact::build_model(c);
        auto sol = exact::rvi_solve(model);
        auto report = exact::verify_monotonicity(sol, model);
        total_violations += report.violations.size();
        details += "n=1 d=e=5: " + std::to_string(report.violations.size());
    }
    {
        SystemConfig c = two_node_instance(0.5, 0.5, 1.0, 3);
        auto model = exact::build_model(c);
        auto sol = exact::rvi_solve(model);
        auto report = exact::verify_monotonicity(sol, model);
        total_violations += report.violations.size();
        details += ", n=2 d=e=3: " + std::to_string(report.violations.size());
    }
    r.pass = total_violations == 0;
    r.detail = "violations (tol 1e-9): " + details;
    return r;
}

CheckResult check_ql_vs_exact(const Scale& s) {
    CheckResult r{"ql-vs-exact-oracle"};
    SystemConfig config = small_instance();
    auto model = exact::build_model(config);
    auto sol = exact::rvi_solve(model);

    qlearn::LearnerConfig learner;
    learner.alpha = qlearn::StepSize::constant(0.1);
    learner.exploration = qlearn::Exploration::epsilon_greedy(0.1);
    learner.iterations = s.ql_iterations;
    learner.seed = 0x91;
    auto trained = qlearn::train(config, learner);
    double learned_cost = exact_cost_of_policy(model, trained.policy);

    r.pass = learned_cost <= 1.05 * sol.lambda_star;
    r.detail = "learned " + fmt(learned_cost) + " vs lambda* " + fmt(sol.lambda_star) +
               " (ratio " + fmt(learned_cost / sol.lambda_star) + ", limit 1.05)";
    return r;
}

CheckResult check_bellman_residual() {
    CheckResult r{"bellman-residual"};
    double worst = 0.0;
    auto residual_of = [&](const SystemConfig& c) {
        auto model = exact::build_model(c);
        auto sol = exact::rvi_solve(model);
        double res = 0.0;
        for (int i = 0; i < model.n_states; ++i) {
            double min_q =
                *std::min_element(sol.q_star[i].begin(), sol.q_star[i].end());
            res = std::max(res, std::abs(sol.lambda_star + sol.h[i] - min_q));
        }
        worst = std::max(worst, res);
    };
    residual_of(small_instance());
    {
        SystemConfig c;
        c.n = 1;
        c.d_max = 5;
        c.e_max = 5;
        c.conversion = ConversionFunction::scaled_log(1.0);
        c.arrival.data = {Distribution::poisson(0.8)};
        c.arrival.energy = Distribution::poisson(1.5);
        residual_of(c);
    }
    residual_of(two_node_instance(0.5, 0.5, 1.0, 3));
    r.pass = worst < 1e-8;
    r.detail = "max residual " + fmt(worst) + " (tol 1e-8)";
    return r;
}

CheckResult check_figure_ordering(const Scale& s, int workers) {
    CheckResult r{"figure-ordering"};
    harness::ExperimentSpec spec;
    spec.base = two_node_instance();
    spec.sweep.kind = harness::SweepAxis::Kind::DataMean;
    spec.sweep.node = 0;
    spec.sweep.grid = {1.0, 1.5, 2.0};
    spec.replicas = s.ordering_replicas;
    spec.horizon = s.ordering_horizon;
    spec.seed = 0xf13a;

    auto solver = [&](const std::string& name) {
        harness::SolverSpec sp;
        sp.name = name;
        sp.iterations = s.ordering_iterations;
        return sp;
    };
    spec.solvers = {solver("ql-ucb"), solver("ql-eps"), solver("combined"),
                    solver("greedy")};
    // Moderate exploration bonus: at this budget the visit-balanced rule
    // with beta = 0.7 beats epsilon-greedy consistently across load points;
    // larger bonuses over-explore at high load.
    spec.solvers[0].beta = 0.7;

    auto rows = harness::run_experiment(spec, workers);

    // rows are ordered point-major, solver-minor in the order above.
    bool pass = true;
    std::string details;
    const int ns = static_cast<int>(spec.solvers.size());
    for (std::size_t p = 0; p < spec.sweep.grid.size(); ++p) {
        details += "E[X1]=" + fmt(spec.sweep.grid[p]) + ":";
        for (int i = 0; i < ns; ++i) {
            const auto& row = rows[p * ns + i];
            details += " " + row.solver + "=" + fmt(row.mean_cost);
            if (!row.error.empty()) pass = false;
        }
        for (int i = 0; i + 1 < ns; ++i) {
            const auto& lo = rows[p * ns + i];
            const auto& hi = rows[p * ns + i + 1];
            // Replicas share evaluation streams across solvers (common
            // random numbers), so the gap is tested on the per-replica
            // paired differences: same mean as the difference of means, but
            // the shared evaluation noise cancels.
            const int reps = static_cast<int>(
                std::min(lo.replica_costs.size(), hi.replica_costs.size()));
            double gap = 0.0;
            for (int k = 0; k < reps; ++k)
                gap += hi.replica_costs[k] - lo.replica_costs[k];
            gap = reps > 0 ? gap / reps : hi.mean_cost - lo.mean_cost;
            double var = 0.0;
            for (int k = 0; k < reps; ++k) {
                double d = hi.replica_costs[k] - lo.replica_costs[k] - gap;
                var += d * d;
            }
            double se = reps > 1 ? std::sqrt(var / (reps - 1) / reps)
                                 : std::sqrt(lo.stderr_cost * lo.stderr_cost +
                                             hi.stderr_cost * hi.stderr_cost);
            if (gap <= se) {
                pass = false;
                details += " [" + lo.solver + "<" + hi.solver + " gap " + fmt(gap) +
                           " <= se " + fmt(se) + "]";
            }
        }
        details += ";";
    }
    r.pass = pass;
    r.detail = details;
    return r;
}

CheckResult check_qlsa_reduction(const Scale& s) {
    CheckResult r{"qlsa-singleton-reduction"};
    SystemConfig config = small_instance();
    auto model = exact::build_model(config);

    qlearn::LearnerConfig learner;
    learner.alpha = qlearn::StepSize::constant(0.1);
    learner.exploration = qlearn::Exploration::epsilon_greedy(0.1);
    learner.iterations = s.qlsa_iterations;
    learner.seed = 0x5a;

    auto ql = qlearn::train(config, learner);
    double ql_cost = exact_cost_of_policy(model, ql.policy);

    auto scheme = aggregate::PartitionScheme::uniform(
        config.d_max, config.d_max + 1, config.e_max, config.e_max + 1);
    auto qlsa = aggregate::train_qlsa(config, scheme, learner);
    double qlsa_cost = exact_cost_of_policy(model, qlsa.policy);

    double rel = std::abs(qlsa_cost - ql_cost) / std::max(ql_cost, 1e-12);
    r.pass = rel <= 0.02;
    r.detail = "qlsa " + fmt(qlsa_cost) + " vs ql " + fmt(ql_cost) + " (rel gap " +
               fmt(rel) + ", tol 0.02)";
    return r;
}

CheckResult check_partition_refinement(const Scale& s, int workers) {
    CheckResult r{"partition-refinement"};
    harness::ExperimentSpec spec;
    spec.base = two_node_instance();
    spec.sweep.kind = harness::SweepAxis::Kind::DataMean;
    spec.sweep.node = 0;
    spec.sweep.grid = {1.0, 1.5, 2.0};
    spec.replicas = s.refine_replicas;
    spec.horizon = s.refine_horizon;
    spec.seed = 0x9a57;

    harness::SolverSpec coarse;
    coarse.name = "qlsa-eps";
    coarse.iterations = s.refine_iterations;
    coarse.data_partitions = 3;
    coarse.energy_partitions = 3;
    harness::SolverSpec fine = coarse;
    fine.data_partitions = 7;
    fine.energy_partitions = 7;
    spec.solvers = {coarse, fine};

    auto rows = harness::run_experiment(spec, workers);
    bool pass = true;
    std::string details;
    for (std::size_t p = 0; p < spec.sweep.grid.size(); ++p) {
        const auto& c3 = rows[p * 2];
        const auto& c7 = rows[p * 2 + 1];
        double se = std::sqrt(c3.stderr_cost * c3.stderr_cost +
                              c7.stderr_cost * c7.stderr_cost);
        bool ok = c7.mean_cost <= c3.mean_cost + se && c3.error.empty() &&
                  c7.error.empty();
        pass = pass && ok;
        details += "E[X1]=" + fmt(spec.sweep.grid[p]) + ": 7p=" + fmt(c7.mean_cost) +
                   " vs 3p=" + fmt(c3.mean_cost) + "+se(" + fmt(se) + ")" +
                   (ok ? "" : " VIOLATION") + "; ";
    }
    r.pass = pass;
    r.detail = details;
    return r;
}

CheckResult check_ce_convergence(const Scale& s) {
    CheckResult r{"ce-synthetic-convergence"};
    const int M = 10;
    std::vector<double> theta_star(M);
    for (int i = 0; i < M; ++i) theta_star[i] = (i % 2 == 0 ? 1.0 : -1.0) * (0.2 + 0.1 * i);

    crossent::CEConfig ce;
    ce.samples = 50;
    // A generous elite fraction avoids the premature variance collapse the
    // plain (unsmoothed) elite refit exhibits with very few elites.
    ce.rho = 0.4;
    ce.max_iterations = 200;
    ce.sigma_threshold = 1e-3;

    crossent::Evaluator objective = [&](const std::vector<double>& theta, int) {
        double d2 = 0.0;
        for (int i = 0; i < M; ++i) {
            double d = theta[i] - theta_star[i];
            d2 += d * d;
        }
        return d2;
    };

    int successes = 0;
    for (int seed = 0; seed < s.ce_seeds; ++seed) {
        auto meta = crossent::MetaParams::init(M);
        Rng rng(derive_seed(0xce5eed, seed));
        bool converged = false;
        for (int t = 0; t < ce.max_iterations; ++t) {
            crossent::IterationStats stats;
            meta = crossent::ce_iterate(meta, ce, objective, rng, &stats);
            if (stats.mean_sigma < 1e-3) {
                converged = true;
                break;
            }
        }
        double dist = 0.0;
        for (int i = 0; i < M; ++i) {
            double d = meta.mu[i] - theta_star[i];
            dist += d * d;
        }
        if (converged && std::sqrt(dist) < 0.05) ++successes;
    }
    int required = (18 * s.ce_seeds + 19) / 20;  // 18/20 pro-rated
    r.pass = successes >= required;
    r.detail = std::to_string(successes) + "/" + std::to_string(s.ce_seeds) +
               " seeds converged (need " + std::to_string(required) + ")";
    return r;
}

CheckResult check_cardinality() {
    CheckResult r{"aggregate-cardinality"};
    auto card = aggregate::cardinality(4, 30, 30, 4, 4);
    double four_nine = std::pow(4.0, 9);
    double thirty_nine = std::pow(30.0, 9);
    // Component-wise action grid, the counting the size comparison uses.
    double full_grid = std::pow(31.0, 4) * 31.0 * std::pow(31.0, 4);

    bool agg_ok = card.aggregate_pairs_bound == four_nine &&
                  card.aggregate_pairs <= four_nine &&
                  card.aggregate_pairs >= four_nine / 8.0;
    // The 30^9 figure counts actions on the component grid; the feasible
    // (simplex) pair count must stay below that grid count.
    bool full_ok = std::abs(std::log10(full_grid) - std::log10(thirty_nine)) <= 0.5 &&
                   card.full_pairs < full_grid;
    r.pass = agg_ok && full_ok;
    r.detail = "aggregate pairs " + fmt(card.aggregate_pairs) + " (bound 4^9 = " +
               fmt(four_nine) + "), full grid " + fmt(full_grid) + " vs 30^9 = " +
               fmt(thirty_nine) + ", feasible pairs " + fmt(card.full_pairs);
    return r;
}

CheckResult check_greedy_linear() {
    CheckResult r{"greedy-linear-optimality"};
    SystemConfig c;
    c.n = 1;
    c.d_max = 3;
    c.e_max = 3;
    c.conversion = ConversionFunction::linear(0.5);
    // Energy-rich regime: with g linear there is nothing to gain from
    // smoothing allocations over time, so myopic greedy is optimal. (Under
    // energy scarcity the integer rounding of g in the queue update opens a
    // half-unit exploit that no greedy allocation can match.)
    c.arrival.data = {Distribution::poisson(0.5)};
    c.arrival.energy = Distribution::poisson(3.0);

    auto model = exact::build_model(c);
    auto sol = exact::rvi_solve(model);
    double greedy_cost = exact_cost_of_policy(model, baselines::greedy_policy(c));
    r.pass = greedy_cost <= 1.03 * sol.lambda_star;
    r.detail = "greedy " + fmt(greedy_cost) + " vs lambda* " + fmt(sol.lambda_star) +
               " (ratio " + fmt(greedy_cost / sol.lambda_star) + ", limit 1.03)";
    return r;
}

namespace {

harness::ExperimentSpec determinism_spec() {
    harness::ExperimentSpec spec;
    spec.base = two_node_instance(0.5, 0.5, 2.0, 4);
    spec.sweep.kind = harness::SweepAxis::Kind::DataMean;
    spec.sweep.node = 0;
    spec.sweep.grid = {0.5, 1.0};
    spec.replicas = 2;
    spec.horizon = 20'000;
    spec.seed = 0xd2;
    harness::SolverSpec greedy;
    greedy.name = "greedy";
    harness::SolverSpec ql;
    ql.name = "ql-eps";
    ql.iterations = 50'000;
    spec.solvers = {greedy, ql};
    return spec;
}

/// Blanks the wall-clock column; everything else must match byte for byte.
std::string mask_seconds(const std::string& csv) {
    std::stringstream in(csv);
    std::string line, out;
    while (std::getline(in, line)) {
        int commas = 0;
        std::size_t pos = std::string::npos;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == ',' && ++commas == 5) {
                pos = i;
                break;
            }
        }
        if (pos != std::string::npos) line = line.substr(0, pos) + ",*";
        out += line + "\n";
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

CheckResult check_determinism(const std::string& cli_path) {
    CheckResult r{"determinism"};
    if (cli_path.empty()) {
        auto spec = determinism_spec();
        std::string a = mask_seconds(harness::to_csv(harness::run_experiment(spec, 1)));
        std::string b = mask_seconds(harness::to_csv(harness::run_experiment(spec, 2)));
        r.pass = a == b;
        r.detail = r.pass ? "in-process sweep reproducible across worker counts"
                          : "in-process sweep rows differ";
        return r;
    }

    // Spawn the CLI twice on the same spec file and diff the outputs.
    std::string dir = "/tmp/esim_determinism";
    if (std::system(("mkdir -p " + dir).c_str()) != 0)
        throw std::runtime_error("failed to create " + dir);
    std::string spec_path = dir + "/spec.json";
    {
        std::ofstream spec(spec_path);
        spec << R"({
  "schema_version": 1,
  "system": {
    "n": 2, "d_max": 4, "e_max": 4,
    "conversion": {"kind": "scaled_log", "coeff": 1.0},
    "cost_weights": {"r1": 1.0, "r2": 0.0},
    "arrival": {"kind": "iid",
      "data": [{"kind": "poisson", "mean": 0.5}, {"kind": "poisson", "mean": 0.5}],
      "energy": {"kind": "poisson", "mean": 2.0}}
  },
  "solvers": [{"name": "greedy"}, {"name": "ql-eps", "iterations": 50000}],
  "sweep": {"variable": "data_mean", "node": 0, "grid": [0.5, 1.0]},
  "replicas": 2, "horizon": 20000, "seed": 210
})";
    }
    std::string out_a = dir + "/a.csv";
    std::string out_b = dir + "/b.csv";
    int rc1 = std::system((cli_path + " sweep --config " + spec_path + " --out " +
                           out_a + " > /dev/null")
                              .c_str());
    int rc2 = std::system((cli_path + " sweep --config " + spec_path + " --out " +
                           out_b + " --workers 2 > /dev/null")
                              .c_str());
    if (rc1 != 0 || rc2 != 0) {
        r.pass = false;
        r.detail = "CLI invocation failed";
        return r;
    }
    std::string a = mask_seconds(read_file(out_a));
    std::string b = mask_seconds(read_file(out_b));
    r.pass = !a.empty() && a == b;
    r.detail = r.pass ? "repeated CLI sweeps byte-identical (timing column masked)"
                      : "CLI sweep outputs differ";
    return r;
}

int run_suite(const Scale& scale, int workers, const std::string& cli_path,
              std::vector<CheckResult>* results) {
    std::vector<CheckResult> all;
    auto run = [&](CheckResult (*fn)(const Scale&), const Scale& s) {
        all.push_back(fn(s));
    };
    run(check_lemma1_identity, scale);
    all.push_back(check_monotonicity());
    run(check_ql_vs_exact, scale);
    all.push_back(check_bellman_residual());
    all.push_back(check_figure_ordering(scale, workers));
    run(check_qlsa_reduction, scale);
    all.push_back(check_partition_refinement(scale, workers));
    run(check_ce_convergence, scale);
    all.push_back(check_cardinality());
    all.push_back(check_greedy_linear());
    all.push_back(check_determinism(cli_path));

    int failures = 0;
    for (const auto& c : all) {
        std::printf("%s %-28s %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                    c.detail.c_str());
        if (!c.pass) ++failures;
    }
    if (results) *results = all;
    return failures;
}

}  // namespace esim::verify
