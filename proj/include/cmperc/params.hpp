#pragma once

#include <cstdint>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

namespace cmperc {

// Model parameters shared by all modules. tau is the power-law exponent,
// lambda the location inside the critical window, c_F the power-law constant.
struct ModelParams {
    double tau = 2.5;
    double lambda = 1.0;
    double c_F = 1.0;
    std::int64_t n = 0;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(tau > 2.0 && tau < 3.0))
            throw std::invalid_argument("tau must lie in (2,3), got " + std::to_string(tau));
        if (!(lambda > 0.0))
            throw std::invalid_argument("lambda must be positive");
        if (!(c_F > 0.0))
            throw std::invalid_argument("c_F must be positive");
        if (n < 1)
            throw std::invalid_argument("n must be >= 1");
    }
};

// Scaling exponents: alpha = 1/(tau-1), rho = (tau-2)/(tau-1),
// eta = (3-tau)/(tau-1). Component sizes scale as n^rho, hub degrees as
// n^alpha and the critical window as n^-eta.
struct Exponents {
    double alpha;
    double rho;
    double eta;
};

inline Exponents exponents(double tau) {
    if (!(tau > 2.0 && tau < 3.0))
        throw std::invalid_argument("exponents: tau must lie in (2,3)");
    return Exponents{1.0 / (tau - 1.0), (tau - 2.0) / (tau - 1.0),
                     (3.0 - tau) / (tau - 1.0)};
}

// nu_n = sum d_i(d_i-1) / sum d_i, with exact integer accumulators.
// Degrees up to n^alpha keep both sums inside 128-bit range for n <= 1e9.
inline double criticality_parameter(std::span<const std::int64_t> degree) {
    __int128 num = 0, den = 0;
    for (std::int64_t d : degree) {
        num += static_cast<__int128>(d) * (d - 1);
        den += d;
    }
    if (den == 0)
        throw std::domain_error("criticality_parameter: all-zero degree sequence");
    return static_cast<double>(num) / static_cast<double>(den);
}

// Representative critical percolation probability p_c(lambda) = lambda/nu_n,
// the canonical member of the p_c(lambda)(1+o(1)) family.
inline double critical_p(double lambda, double nu_n) {
    if (!(nu_n > 0.0))
        throw std::invalid_argument("critical_p: nu_n must be positive");
    const double p = lambda / nu_n;
    if (p > 1.0)
        throw std::domain_error("critical_p: lambda/nu_n = " + std::to_string(p) +
                                " > 1 (supercritical beyond percolation range)");
    return p;
}

} // namespace cmperc
