#pragma once

#include <string>
#include <vector>

#include "esim/rng.hpp"

namespace esim {

/// Arrival distribution for data bits or energy units. Continuous
/// distributions are discretized by rounding samples to the nearest integer.
struct Distribution {
    enum class Kind { Poisson, Exponential, Hyperexponential, Deterministic };

    Kind kind = Kind::Poisson;
    double param = 0.0;                // Poisson mean, Exponential rate,
                                       // Deterministic value
    std::vector<double> weights;       // hyperexponential phase weights
    std::vector<double> rates;         // hyperexponential phase rates

    static Distribution poisson(double mean);
    static Distribution exponential(double rate);
    static Distribution hyperexponential(std::vector<double> weights,
                                         std::vector<double> rates);
    /// 2-phase hyperexponential with phase weights (0.9, 0.1) and rates
    /// chosen so the overall mean hits the requested value.
    static Distribution hyperexponential_with_mean(double mean);
    static Distribution deterministic(double value);

    double mean() const;
    /// Real-valued sample (integer-valued for Poisson/Deterministic).
    double sample_real(Rng& rng) const;
    /// Sample rounded half-up to an integer, never negative.
    int sample_integer(Rng& rng) const;
    /// Pmf of the rounded sample over {0,...,cap}; all mass at or beyond cap
    /// is folded onto cap, so the vector sums to 1 exactly.
    std::vector<double> pmf_clipped(int cap) const;

    void validate() const;  // throws std::invalid_argument
};

/// Energy-to-bits conversion function g. Monotone non-decreasing, concave,
/// g(0) = 0.
struct ConversionFunction {
    enum class Kind { LogHalfSnr, ScaledLog, SqrtLog, Linear };

    Kind kind = Kind::ScaledLog;
    double coeff = 1.0;  // beta for LogHalfSnr, c otherwise

    static ConversionFunction log_half_snr(double beta);
    static ConversionFunction scaled_log(double c);
    static ConversionFunction sqrt_log(double c);
    static ConversionFunction linear(double c);

    double value(double t) const;
    /// Round-half-up quantization, used only for the integer queue update.
    int integer_bits(double t) const;
    /// Analytic inverse: energy needed to transmit the given bits.
    double inverse(double bits) const;

    /// Checks g(0)=0, monotonicity and concavity by sampling integer points
    /// in [0, e_max]. Throws std::invalid_argument on violation.
    void validate(int e_max) const;
};

/// Data/energy arrival process; either i.i.d. per node or a discretized
/// autoregressive (jointly Markov) process.
struct ArrivalModel {
    enum class Kind { Iid, Markov };

    Kind kind = Kind::Iid;
    std::vector<Distribution> data;  // per-node dists (iid) or AR noise dists
    Distribution energy;             // energy dist (iid) or AR noise dist

    // Markov only: X_k = clip(round(A * X_{k-1} + w), 0, x_cap),
    //              Y_k = clip(round(b * Y_{k-1} + v), 0, y_cap).
    std::vector<std::vector<double>> ar_matrix;
    double ar_energy_coeff = 0.0;
    int x_cap = -1;  // defaults to d_max when < 0
    int y_cap = -1;  // defaults to e_max when < 0

    void validate(int n) const;
};

struct SystemConfig {
    int n = 1;         // node count
    int d_max = 1;     // per-node data buffer capacity (bits)
    int e_max = 1;     // energy buffer capacity (units)
    ConversionFunction conversion;
    double r1 = 1.0;   // queue-backlog weight
    double r2 = 0.0;   // energy-spend weight, r1 + r2 = 1
    ArrivalModel arrival;

    bool markov_arrivals() const { return arrival.kind == ArrivalModel::Kind::Markov; }
    int effective_x_cap() const { return arrival.x_cap >= 0 ? arrival.x_cap : d_max; }
    int effective_y_cap() const { return arrival.y_cap >= 0 ? arrival.y_cap : e_max; }

    void validate() const;
};

}  // namespace esim
