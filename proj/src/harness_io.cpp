#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "esim/harness.hpp"

namespace esim::harness {

using nlohmann::json;

namespace {

json distribution_to_json(const Distribution& d) {
    json j;
    switch (d.kind) {
        case Distribution::Kind::Poisson:
            j["kind"] = "poisson";
            j["mean"] = d.param;
            break;
        case Distribution::Kind::Exponential:
            j["kind"] = "exponential";
            j["rate"] = d.param;
            break;
        case Distribution::Kind::Deterministic:
            j["kind"] = "deterministic";
            j["value"] = d.param;
            break;
        case Distribution::Kind::Hyperexponential:
            j["kind"] = "hyperexponential";
            j["weights"] = d.weights;
            j["rates"] = d.rates;
            break;
    }
    return j;
}

Distribution distribution_from_json(const json& j) {
    const std::string kind = j.at("kind");
    if (kind == "poisson") return Distribution::poisson(j.at("mean"));
    if (kind == "exponential") {
        if (j.contains("rate")) return Distribution::exponential(j.at("rate"));
        return Distribution::exponential(1.0 / j.at("mean").get<double>());
    }
    if (kind == "deterministic") return Distribution::deterministic(j.at("value"));
    if (kind == "hyperexponential") {
        if (j.contains("mean") && !j.contains("rates"))
            return Distribution::hyperexponential_with_mean(j.at("mean"));
        return Distribution::hyperexponential(j.at("weights"), j.at("rates"));
    }
    throw std::invalid_argument("unknown distribution kind: " + kind);
}

json conversion_to_json(const ConversionFunction& g) {
    json j;
    switch (g.kind) {
        case ConversionFunction::Kind::LogHalfSnr:
            j["kind"] = "log_half_snr";
            break;
        case ConversionFunction::Kind::ScaledLog:
            j["kind"] = "scaled_log";
            break;
        case ConversionFunction::Kind::SqrtLog:
            j["kind"] = "sqrt_log";
            break;
        case ConversionFunction::Kind::Linear:
            j["kind"] = "linear";
            break;
    }
    j["coeff"] = g.coeff;
    return j;
}

ConversionFunction conversion_from_json(const json& j) {
    const std::string kind = j.at("kind");
    const double coeff = j.value("coeff", 1.0);
    if (kind == "log_half_snr") return ConversionFunction::log_half_snr(coeff);
    if (kind == "scaled_log") return ConversionFunction::scaled_log(coeff);
    if (kind == "sqrt_log") return ConversionFunction::sqrt_log(coeff);
    if (kind == "linear") return ConversionFunction::linear(coeff);
    throw std::invalid_argument("unknown conversion kind: " + kind);
}

json arrival_to_json(const ArrivalModel& a) {
    json j;
    j["kind"] = a.kind == ArrivalModel::Kind::Iid ? "iid" : "markov";
    j["data"] = json::array();
    for (const auto& d : a.data) j["data"].push_back(distribution_to_json(d));
    j["energy"] = distribution_to_json(a.energy);
    if (a.kind == ArrivalModel::Kind::Markov) {
        j["A"] = a.ar_matrix;
        j["b"] = a.ar_energy_coeff;
        if (a.x_cap >= 0) j["x_cap"] = a.x_cap;
        if (a.y_cap >= 0) j["y_cap"] = a.y_cap;
    }
    return j;
}

ArrivalModel arrival_from_json(const json& j) {
    ArrivalModel a;
    const std::string kind = j.at("kind");
    a.kind = kind == "markov" ? ArrivalModel::Kind::Markov : ArrivalModel::Kind::Iid;
    for (const auto& d : j.at("data")) a.data.push_back(distribution_from_json(d));
    a.energy = distribution_from_json(j.at("energy"));
    if (a.kind == ArrivalModel::Kind::Markov) {
        a.ar_matrix = j.at("A").get<std::vector<std::vector<double>>>();
        a.ar_energy_coeff = j.at("b");
        a.x_cap = j.value("x_cap", -1);
        a.y_cap = j.value("y_cap", -1);
    }
    return a;
}

json system_to_json(const SystemConfig& c) {
    json j;
    j["schema_version"] = 1;
    j["n"] = c.n;
    j["d_max"] = c.d_max;
    j["e_max"] = c.e_max;
    j["conversion"] = conversion_to_json(c.conversion);
    j["cost_weights"] = {{"r1", c.r1}, {"r2", c.r2}};
    j["arrival"] = arrival_to_json(c.arrival);
    return j;
}

SystemConfig system_from_json(const json& j) {
    SystemConfig c;
    c.n = j.at("n");
    c.d_max = j.at("d_max");
    c.e_max = j.at("e_max");
    c.conversion = conversion_from_json(j.at("conversion"));
    if (j.contains("cost_weights")) {
        c.r1 = j["cost_weights"].value("r1", 1.0);
        c.r2 = j["cost_weights"].value("r2", 0.0);
    }
    c.arrival = arrival_from_json(j.at("arrival"));
    c.validate();
    return c;
}

aggregate::PartitionScheme scheme_from_json(const json& j, const SystemConfig& base) {
    if (j.contains("data_cuts")) {
        auto cuts = [](const json& arr) {
            std::vector<aggregate::Interval> out;
            for (const auto& iv : arr) out.push_back({iv.at(0), iv.at(1)});
            return out;
        };
        return aggregate::PartitionScheme::from_cuts(cuts(j.at("data_cuts")),
                                                     cuts(j.at("energy_cuts")));
    }
    return aggregate::PartitionScheme::uniform(base.d_max, j.value("data", 3),
                                               base.e_max, j.value("energy", 3));
}

SolverSpec solver_from_json(const json& j, const SystemConfig& base) {
    SolverSpec s;
    s.name = j.at("name");
    s.iterations = j.value("iterations", s.iterations);
    s.alpha = j.value("alpha", s.alpha);
    s.epsilon = j.value("epsilon", s.epsilon);
    s.beta = j.value("beta", s.beta);
    s.tail_snapshots = j.value("tail_snapshots", s.tail_snapshots);
    if (j.contains("partitions")) {
        const auto& p = j["partitions"];
        s.data_partitions = p.value("data", 3);
        s.energy_partitions = p.value("energy", 3);
        if (p.contains("data_cuts")) s.explicit_scheme = scheme_from_json(p, base);
    }
    if (j.contains("ce")) {
        const auto& c = j["ce"];
        s.ce.samples = c.value("samples", s.ce.samples);
        s.ce.rho = c.value("rho", s.ce.rho);
        s.ce.horizon = c.value("horizon", s.ce.horizon);
        s.ce.max_iterations = c.value("max_iterations", s.ce.max_iterations);
        s.ce.sigma_threshold = c.value("sigma_threshold", s.ce.sigma_threshold);
    }
    s.feature_dimension = j.value("feature_dimension", s.feature_dimension);
    s.tabular_features = j.value("tabular_features", s.tabular_features);
    return s;
}

}  // namespace

void ExperimentSpec::validate() const {
    base.validate();
    if (sweep.grid.empty()) throw std::invalid_argument("sweep grid must be non-empty");
    if (replicas < 1) throw std::invalid_argument("replicas must be >= 1");
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    if (solvers.empty()) throw std::invalid_argument("at least one solver required");
}

std::string to_json(const SystemConfig& config) { return system_to_json(config).dump(2); }

SystemConfig system_config_from_json_text(const std::string& text) {
    json j = json::parse(text);
    return system_from_json(j.contains("system") ? j["system"] : j);
}

SystemConfig load_system_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return system_config_from_json_text(ss.str());
}

ExperimentSpec load_experiment_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open experiment spec: " + path);
    json j = json::parse(in);

    ExperimentSpec spec;
    spec.base = system_from_json(j.at("system"));
    for (const auto& s : j.at("solvers")) spec.solvers.push_back(solver_from_json(s, spec.base));

    const auto& sw = j.at("sweep");
    const std::string kind = sw.value("variable", "data_mean");
    if (kind == "data_mean")
        spec.sweep.kind = SweepAxis::Kind::DataMean;
    else if (kind == "energy_mean")
        spec.sweep.kind = SweepAxis::Kind::EnergyMean;
    else if (kind == "noise_mean")
        spec.sweep.kind = SweepAxis::Kind::NoiseMean;
    else
        throw std::invalid_argument("unknown sweep variable: " + kind);
    spec.sweep.node = sw.value("node", 0);
    spec.sweep.grid = sw.at("grid").get<std::vector<double>>();

    spec.replicas = j.value("replicas", 1);
    spec.horizon = j.value("horizon", 1'000'000LL);
    spec.seed = j.value("seed", 0ULL);
    spec.out_path = j.value("out", "");
    spec.validate();
    return spec;
}

std::uint64_t config_hash(const SystemConfig& config) {
    std::string dump = system_to_json(config).dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::string csv_header() {
    return "sweep_value,solver,mean_cost,stderr,mean_queue_sum,seconds";
}

std::string to_csv(const std::vector<ResultRow>& rows) {
    std::string out = csv_header() + "\n";
    for (const auto& r : rows) {
        out += format_double(r.sweep_value) + "," + r.solver + "," +
               format_double(r.mean_cost) + "," + format_double(r.stderr_cost) + "," +
               format_double(r.mean_queue_sum) + "," + format_double(r.seconds);
        if (!r.error.empty()) out += ",# " + r.error;
        out += "\n";
    }
    return out;
}

void write_csv(const std::string& path, const std::vector<ResultRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << to_csv(rows);
}

std::vector<ResultRow> parse_csv(const std::string& text) {
    std::vector<ResultRow> rows;
    std::stringstream ss(text);
    std::string line;
    bool first = true;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line == csv_header()) continue;
        }
        std::stringstream ls(line);
        std::string field;
        ResultRow r;
        std::getline(ls, field, ',');
        r.sweep_value = std::stod(field);
        std::getline(ls, r.solver, ',');
        std::getline(ls, field, ',');
        r.mean_cost = std::stod(field);
        std::getline(ls, field, ',');
        r.stderr_cost = std::stod(field);
        std::getline(ls, field, ',');
        r.mean_queue_sum = std::stod(field);
        std::getline(ls, field, ',');
        r.seconds = std::stod(field);
        if (std::getline(ls, field, ',') && field.size() > 2) r.error = field.substr(2);
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_policy_snapshot(const std::string& path, const SystemConfig& config,
                           const qlearn::QTable& table,
                           const std::vector<std::vector<env::Action>>& actions_by_e) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open snapshot file: " + path);
    out << "# esim-policy v1\n";
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(config_hash(config)));
    out << "# config-hash " << hash << "\n";
    out << "# columns: state_key action_index allocation\n";

    // Sorted keys keep snapshots byte-stable across hash-map orderings.
    std::vector<std::uint64_t> keys;
    keys.reserve(table.entries().size());
    for (const auto& [k, _] : table.entries()) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    for (std::uint64_t k : keys) {
        const auto* e = table.find(k);
        int best = 0;
        for (std::size_t a = 1; a < e->q.size(); ++a)
            if (e->q[a] < e->q[best]) best = static_cast<int>(a);
        out << k << " " << best;
        // Allocation vector, when the per-energy action lists apply.
        const std::uint64_t de = static_cast<std::uint64_t>(config.e_max) + 1;
        std::uint64_t energy = k % de;
        if (energy < actions_by_e.size() &&
            e->q.size() == actions_by_e[energy].size()) {
            out << " [";
            const auto& t = actions_by_e[energy][best].t;
            for (std::size_t i = 0; i < t.size(); ++i)
                out << (i ? " " : "") << t[i];
            out << "]";
        }
        out << "\n";
    }
}

void write_learning_curve(const std::string& path,
                          const std::vector<qlearn::CurvePoint>& curve) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open curve file: " + path);
    out << "iteration,running_avg_cost\n";
    for (const auto& p : curve)
        out << p.iteration << "," << format_double(p.running_avg_cost) << "\n";
}

void write_ce_history(const std::string& path,
                      const std::vector<crossent::HistoryRow>& history) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open history file: " + path);
    out << "iteration,threshold,best_lambda,mean_sigma\n";
    for (const auto& h : history)
        out << h.iteration << "," << format_double(h.threshold) << ","
            << format_double(h.best_lambda) << "," << format_double(h.mean_sigma)
            << "\n";
}

}  // namespace esim::harness
