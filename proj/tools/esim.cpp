// Command-line front end: simulate / solve-exact / train / sweep / verify.
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "esim/baselines.hpp"
#include "esim/exact.hpp"
#include "esim/harness.hpp"
#include "esim/verify.hpp"

namespace {

using namespace esim;

int cmd_simulate(const std::string& config_path, const std::string& solver_name,
                 long long horizon, long long iterations, std::uint64_t seed) {
    SystemConfig config = harness::load_system_config(config_path);
    harness::SolverSpec solver;
    solver.name = solver_name;
    solver.iterations = iterations;
    env::Policy policy = harness::make_policy(solver, config, derive_seed(seed, 1));
    auto eval = env::evaluate_policy(config, policy, horizon, derive_seed(seed, 2));
    std::printf("solver=%s horizon=%lld seed=%llu\n", solver_name.c_str(), horizon,
                static_cast<unsigned long long>(seed));
    std::printf("avg_cost=%s\n", harness::format_double(eval.avg_cost).c_str());
    std::printf("avg_queue_sum=%s\n",
                harness::format_double(eval.avg_queue_sum).c_str());
    std::printf("avg_cost_per_node=%s\n",
                harness::format_double(eval.avg_cost / config.n).c_str());
    std::printf("dropped_data=%lld dropped_energy=%lld\n", eval.dropped_data,
                eval.dropped_energy);
    return 0;
}

int cmd_solve_exact(const std::string& config_path, const std::string& out_path) {
    SystemConfig config = harness::load_system_config(config_path);
    auto model = exact::build_model(config);
    auto sol = exact::rvi_solve(model);
    std::printf("states=%d lambda_star=%s iterations=%d span_residual=%s%s\n",
                model.n_states, harness::format_double(sol.lambda_star).c_str(),
                sol.iterations, harness::format_double(sol.span_residual).c_str(),
                sol.converged ? "" : " (NOT CONVERGED)");
    if (!out_path.empty()) {
        std::FILE* out = std::fopen(out_path.c_str(), "wb");
        if (!out) {
            std::fprintf(stderr, "cannot open output file: %s\n", out_path.c_str());
            return 1;
        }
        std::fprintf(out, "state_index,h,best_action\n");
        auto policy = exact::greedy_policy(sol, model);
        for (int i = 0; i < model.n_states; ++i)
            std::fprintf(out, "%d,%s,%d\n", i,
                         harness::format_double(sol.h[i]).c_str(), policy[i]);
        std::fclose(out);
    }
    return 0;
}

int cmd_train(const std::string& method, const std::string& config_path,
              std::uint64_t seed, const std::string& out_path, long long iterations) {
    SystemConfig config = harness::load_system_config(config_path);
    qlearn::LearnerConfig learner;
    learner.iterations = iterations;
    learner.seed = seed;

    if (method == "ql") {
        auto result = qlearn::train(config, learner);
        double final_avg =
            result.curve.empty() ? 0.0 : result.curve.back().running_avg_cost;
        std::printf("trained ql: %zu states visited, running_avg_cost=%s\n",
                    result.table->size(), harness::format_double(final_avg).c_str());
        if (!out_path.empty()) {
            std::vector<std::vector<env::Action>> actions_by_e(config.e_max + 1);
            for (int e = 0; e <= config.e_max; ++e)
                actions_by_e[e] = env::feasible_actions(config.n, e);
            harness::write_policy_snapshot(out_path, config, *result.table,
                                           actions_by_e);
            harness::write_learning_curve(out_path + ".curve.csv", result.curve);
        }
        return 0;
    }
    if (method == "qlsa") {
        auto scheme = aggregate::PartitionScheme::uniform(config.d_max, 3,
                                                          config.e_max, 3);
        auto result = aggregate::train_qlsa(config, scheme, learner);
        double final_avg =
            result.curve.empty() ? 0.0 : result.curve.back().running_avg_cost;
        std::printf("trained qlsa: %zu aggregate states, running_avg_cost=%s\n",
                    result.table->size(), harness::format_double(final_avg).c_str());
        if (!out_path.empty()) {
            harness::write_policy_snapshot(out_path, config, *result.table, {});
            harness::write_learning_curve(out_path + ".curve.csv", result.curve);
        }
        return 0;
    }
    // ce
    auto scheme = aggregate::PartitionScheme::uniform(config.d_max, 3, config.e_max, 3);
    auto features = crossent::FeatureMap::indicator_hash(50, 0xfea7);
    crossent::CEConfig ce;
    ce.seed = seed;
    auto result = crossent::train_ce(config, scheme, features, ce);
    std::printf("trained ce: %zu iterations, converged=%s\n", result.history.size(),
                result.converged ? "yes" : "no");
    if (!out_path.empty()) harness::write_ce_history(out_path, result.history);
    return 0;
}

int cmd_sweep(const std::string& config_path, std::uint64_t seed, bool seed_set,
              const std::string& out_path, int workers) {
    harness::ExperimentSpec spec = harness::load_experiment_spec(config_path);
    if (seed_set) spec.seed = seed;
    auto rows = harness::run_experiment(spec, workers);
    std::string path = !out_path.empty() ? out_path : spec.out_path;
    if (!path.empty()) {
        harness::write_csv(path, rows);
        std::printf("wrote %zu rows to %s\n", rows.size(), path.c_str());
    } else {
        std::fputs(harness::to_csv(rows).c_str(), stdout);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Energy-sharing sensor network simulator and solver suite"};
    app.require_subcommand(1);

    std::string config_path, out_path, method, level = "quick";
    std::string solver_name = "greedy";
    std::uint64_t seed = 0;
    int workers = 1;
    long long horizon = 1'000'000;
    long long iterations = 1'000'000;

    auto* simulate = app.add_subcommand("simulate", "Roll a policy, print stats");
    simulate->add_option("--config", config_path)->required();
    simulate->add_option("--solver", solver_name);
    simulate->add_option("--horizon", horizon);
    simulate->add_option("--iterations", iterations);
    simulate->add_option("--seed", seed);

    auto* solve = app.add_subcommand("solve-exact", "RVI on a small instance");
    solve->add_option("--config", config_path)->required();
    solve->add_option("--out", out_path);

    auto* train = app.add_subcommand("train", "Train a learner");
    train->add_option("method", method)
        ->required()
        ->check(CLI::IsMember({"ql", "qlsa", "ce"}));
    train->add_option("--config", config_path)->required();
    train->add_option("--seed", seed);
    train->add_option("--out", out_path);
    train->add_option("--iterations", iterations);

    auto* sweep = app.add_subcommand("sweep", "Run an experiment spec");
    sweep->add_option("--config", config_path)->required();
    auto* seed_opt = sweep->add_option("--seed", seed);
    sweep->add_option("--out", out_path);
    sweep->add_option("--workers", workers);

    auto* verify = app.add_subcommand("verify", "Run the oracle check suite");
    verify->add_option("level", level)
        ->required()
        ->check(CLI::IsMember({"quick", "full"}));
    verify->add_option("--workers", workers);

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed())
            return cmd_simulate(config_path, solver_name, horizon, iterations, seed);
        if (solve->parsed()) return cmd_solve_exact(config_path, out_path);
        if (train->parsed())
            return cmd_train(method, config_path, seed, out_path, iterations);
        if (sweep->parsed())
            return cmd_sweep(config_path, seed, seed_opt->count() > 0, out_path,
                             workers);
        if (verify->parsed()) {
            auto scale = level == "full" ? esim::verify::Scale::full()
                                         : esim::verify::Scale::quick();
            int failures = esim::verify::run_suite(scale, workers, "");
            std::printf("%s\n", failures == 0 ? "ALL CHECKS PASSED"
                                              : "SOME CHECKS FAILED");
            return failures == 0 ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
