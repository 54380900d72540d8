#include "esim/config.hpp"

#include <cmath>
#include <stdexcept>

namespace esim {

Distribution Distribution::poisson(double mean) {
    Distribution d;
    d.kind = Kind::Poisson;
    d.param = mean;
    return d;
}

Distribution Distribution::exponential(double rate) {
    Distribution d;
    d.kind = Kind::Exponential;
    d.param = rate;
    return d;
}

Distribution Distribution::hyperexponential(std::vector<double> weights,
                                            std::vector<double> rates) {
    Distribution d;
    d.kind = Kind::Hyperexponential;
    d.weights = std::move(weights);
    d.rates = std::move(rates);
    return d;
}

Distribution Distribution::hyperexponential_with_mean(double mean) {
    // Phase means (mean/2, 5.5*mean) with weights (0.9, 0.1) give the
    // requested overall mean: 0.9*(mean/2) + 0.1*(5.5*mean) = mean.
    return hyperexponential({0.9, 0.1}, {2.0 / mean, 1.0 / (5.5 * mean)});
}

Distribution Distribution::deterministic(double value) {
    Distribution d;
    d.kind = Kind::Deterministic;
    d.param = value;
    return d;
}

double Distribution::mean() const {
    switch (kind) {
        case Kind::Poisson:
        case Kind::Deterministic:
            return param;
        case Kind::Exponential:
            return 1.0 / param;
        case Kind::Hyperexponential: {
            double m = 0.0;
            for (std::size_t i = 0; i < weights.size(); ++i) m += weights[i] / rates[i];
            return m;
        }
    }
    return 0.0;
}

double Distribution::sample_real(Rng& rng) const {
    switch (kind) {
        case Kind::Poisson:
            return static_cast<double>(rng.poisson(param));
        case Kind::Deterministic:
            return param;
        case Kind::Exponential:
            return rng.exponential(param);
        case Kind::Hyperexponential: {
            double u = rng.uniform01();
            double acc = 0.0;
            for (std::size_t i = 0; i < weights.size(); ++i) {
                acc += weights[i];
                if (u < acc || i + 1 == weights.size()) return rng.exponential(rates[i]);
            }
            return 0.0;
        }
    }
    return 0.0;
}

int Distribution::sample_integer(Rng& rng) const {
    double v = sample_real(rng);
    int k = static_cast<int>(std::floor(v + 0.5));
    return k < 0 ? 0 : k;
}

std::vector<double> Distribution::pmf_clipped(int cap) const {
    std::vector<double> pmf(cap + 1, 0.0);
    switch (kind) {
        case Kind::Poisson: {
            double p = std::exp(-param);
            double total = 0.0;
            for (int k = 0; k < cap; ++k) {
                pmf[k] = p;
                total += p;
                p *= param / (k + 1);
            }
            pmf[cap] = 1.0 - total;
            break;
        }
        case Kind::Deterministic: {
            int k = static_cast<int>(std::floor(param + 0.5));
            if (k < 0) k = 0;
            if (k > cap) k = cap;
            pmf[k] = 1.0;
            break;
        }
        case Kind::Exponential:
        case Kind::Hyperexponential: {
            // P(round(X) = k) from the mixture cdf; k = 0 covers [0, 0.5).
            auto cdf = [this](double x) {
                if (x <= 0.0) return 0.0;
                if (kind == Kind::Exponential) return 1.0 - std::exp(-param * x);
                double f = 0.0;
                for (std::size_t i = 0; i < weights.size(); ++i)
                    f += weights[i] * (1.0 - std::exp(-rates[i] * x));
                return f;
            };
            double total = 0.0;
            for (int k = 0; k < cap; ++k) {
                pmf[k] = cdf(k + 0.5) - cdf(k - 0.5);
                total += pmf[k];
            }
            pmf[cap] = 1.0 - total;
            break;
        }
    }
    return pmf;
}

void Distribution::validate() const {
    switch (kind) {
        case Kind::Poisson:
            if (param <= 0.0 && param != 0.0)
                throw std::invalid_argument("poisson mean must be >= 0");
            break;
        case Kind::Deterministic:
            if (param < 0.0)
                throw std::invalid_argument("deterministic arrival must be >= 0");
            break;
        case Kind::Exponential:
            if (param <= 0.0)
                throw std::invalid_argument("exponential rate must be > 0");
            break;
        case Kind::Hyperexponential: {
            if (weights.empty() || weights.size() != rates.size())
                throw std::invalid_argument("hyperexponential needs matching weights/rates");
            double sum = 0.0;
            for (double w : weights) {
                if (w <= 0.0) throw std::invalid_argument("mixture weights must be > 0");
                sum += w;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw std::invalid_argument("mixture weights must sum to 1");
            for (double r : rates)
                if (r <= 0.0) throw std::invalid_argument("mixture rates must be > 0");
            break;
        }
    }
}

ConversionFunction ConversionFunction::log_half_snr(double beta) {
    return {Kind::LogHalfSnr, beta};
}
ConversionFunction ConversionFunction::scaled_log(double c) {
    return {Kind::ScaledLog, c};
}
ConversionFunction ConversionFunction::sqrt_log(double c) {
    return {Kind::SqrtLog, c};
}
ConversionFunction ConversionFunction::linear(double c) {
    return {Kind::Linear, c};
}

double ConversionFunction::value(double t) const {
    switch (kind) {
        case Kind::LogHalfSnr:
            return 0.5 * std::log2(1.0 + coeff * t);
        case Kind::ScaledLog:
            return coeff * std::log1p(t);
        case Kind::SqrtLog:
            return std::sqrt(coeff * std::log1p(t));
        case Kind::Linear:
            return coeff * t;
    }
    return 0.0;
}

int ConversionFunction::integer_bits(double t) const {
    return static_cast<int>(std::floor(value(t) + 0.5));
}

double ConversionFunction::inverse(double bits) const {
    if (bits <= 0.0) return 0.0;
    switch (kind) {
        case Kind::LogHalfSnr:
            return (std::exp2(2.0 * bits) - 1.0) / coeff;
        case Kind::ScaledLog:
            return std::expm1(bits / coeff);
        case Kind::SqrtLog:
            return std::expm1(bits * bits / coeff);
        case Kind::Linear:
            return bits / coeff;
    }
    return 0.0;
}

void ConversionFunction::validate(int e_max) const {
    if (coeff <= 0.0) throw std::invalid_argument("conversion coefficient must be > 0");
    if (std::abs(value(0.0)) > 1e-12)
        throw std::invalid_argument("conversion function must satisfy g(0) = 0");
    for (int t = 0; t < e_max; ++t) {
        if (value(t + 1) < value(t) - 1e-12)
            throw std::invalid_argument("conversion function must be non-decreasing");
    }
    for (int t = 1; t < e_max; ++t) {
        double second_diff = value(t + 1) - 2.0 * value(t) + value(t - 1);
        if (second_diff > 1e-9)
            throw std::invalid_argument("conversion function must be concave");
    }
}

void ArrivalModel::validate(int n) const {
    if (static_cast<int>(data.size()) != n)
        throw std::invalid_argument("arrival model needs one data distribution per node");
    for (const auto& d : data) d.validate();
    energy.validate();
    if (kind == Kind::Markov) {
        if (static_cast<int>(ar_matrix.size()) != n)
            throw std::invalid_argument("AR coefficient matrix must be n x n");
        for (const auto& row : ar_matrix)
            if (static_cast<int>(row.size()) != n)
                throw std::invalid_argument("AR coefficient matrix must be n x n");
    }
}

void SystemConfig::validate() const {
    if (n < 1) throw std::invalid_argument("node count must be >= 1");
    // d_max = 0 / e_max = 0 are allowed as degenerate (trapped) systems.
    if (d_max < 0) throw std::invalid_argument("d_max must be >= 0");
    if (e_max < 0) throw std::invalid_argument("e_max must be >= 0");
    if (r1 < 0.0 || r1 > 1.0 || r2 < 0.0 || r2 > 1.0 || std::abs(r1 + r2 - 1.0) > 1e-9)
        throw std::invalid_argument("cost weights must satisfy r1, r2 in [0,1], r1 + r2 = 1");
    conversion.validate(e_max);
    arrival.validate(n);
}

}  // namespace esim
