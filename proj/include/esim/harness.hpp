#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "esim/aggregate.hpp"
#include "esim/crossent.hpp"
#include "esim/qlearn.hpp"

namespace esim::harness {

/// One solver entry in an experiment: a name plus its tuning knobs.
struct SolverSpec {
    std::string name;  // greedy | greedy-data | combined | ql-eps | ql-ucb |
                       // qlsa-eps | qlsa-ucb | ce
    long long iterations = 1'000'000;
    double alpha = 0.1;
    double epsilon = 0.1;
    double beta = 1.0;
    int tail_snapshots = 512;
    int data_partitions = 3;
    int energy_partitions = 3;
    std::optional<aggregate::PartitionScheme> explicit_scheme;
    crossent::CEConfig ce;
    int feature_dimension = 50;
    bool tabular_features = false;
};

struct SweepAxis {
    enum class Kind { DataMean, EnergyMean, NoiseMean };
    Kind kind = Kind::DataMean;
    int node = 0;  // ignored for EnergyMean
    std::vector<double> grid;
};

struct ExperimentSpec {
    SystemConfig base;
    std::vector<SolverSpec> solvers;
    SweepAxis sweep;
    int replicas = 1;
    long long horizon = 1'000'000;
    std::uint64_t seed = 0;
    std::string out_path;

    void validate() const;
};

struct ResultRow {
    double sweep_value = 0.0;
    std::string solver;
    double mean_cost = 0.0;
    double stderr_cost = 0.0;
    double mean_queue_sum = 0.0;
    double seconds = 0.0;
    std::string error;  // non-empty when the solver failed at this point
    /// Per-replica evaluation costs. Replicas share evaluation RNG streams
    /// across solvers (common random numbers), so paired per-replica
    /// differences between solvers have much lower variance than the
    /// difference of means. Not serialized to CSV.
    std::vector<double> replica_costs;
};

/// Applies a sweep value to a copy of the base config.
SystemConfig apply_sweep(const SystemConfig& base, const SweepAxis& axis, double value);

/// Builds the policy for one solver on one configured instance (training the
/// learners); fully determined by (spec, seed).
env::Policy make_policy(const SolverSpec& solver, const SystemConfig& config,
                        std::uint64_t seed);

/// Grid x solver x replica orchestration. Replica RNG streams derive from
/// (master seed, point index, replica index) only — shared across solvers
/// for both training arrivals and evaluation (common random numbers) — so
/// worker count and execution order never change the rows, and solver
/// comparisons pair up per replica.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, int workers = 1);

// --- serialization -------------------------------------------------------

std::string to_json(const SystemConfig& config);
SystemConfig system_config_from_json_text(const std::string& text);
SystemConfig load_system_config(const std::string& path);

ExperimentSpec load_experiment_spec(const std::string& path);

/// FNV-1a over the canonical JSON dump; used in policy snapshot headers.
std::uint64_t config_hash(const SystemConfig& config);

std::string csv_header();
std::string to_csv(const std::vector<ResultRow>& rows);
void write_csv(const std::string& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_csv(const std::string& text);

/// Versioned text snapshot: config-hash header, then state-key -> action rows.
void write_policy_snapshot(const std::string& path, const SystemConfig& config,
                           const qlearn::QTable& table,
                           const std::vector<std::vector<env::Action>>& actions_by_e);

void write_learning_curve(const std::string& path,
                          const std::vector<qlearn::CurvePoint>& curve);
void write_ce_history(const std::string& path,
                      const std::vector<crossent::HistoryRow>& history);

/// Fixed-width float formatting shared by every CSV writer so identical
/// values serialize to identical bytes.
std::string format_double(double v);

}  // namespace esim::harness
