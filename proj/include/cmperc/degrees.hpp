#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "params.hpp"
#include "rng.hpp"

namespace cmperc {

enum class DegreeCase { quantile, iid, user };

inline const char* to_string(DegreeCase c) {
    switch (c) {
        case DegreeCase::quantile: return "quantile";
        case DegreeCase::iid: return "iid";
        default: return "user";
    }
}

// Non-increasing integer degree sequence with even total. Immutable after
// construction; safe to share across threads.
struct DegreeSequence {
    std::vector<std::int64_t> d;
    std::int64_t total = 0;
    DegreeCase case_tag = DegreeCase::user;
    std::optional<double> tau;
    std::optional<double> c_F;
    std::uint64_t seed = 0;

    std::int64_t n() const { return static_cast<std::int64_t>(d.size()); }

    void check_invariants() const {
        if (d.empty()) throw std::invalid_argument("degree sequence is empty");
        for (std::size_t i = 1; i < d.size(); ++i)
            if (d[i] > d[i - 1])
                throw std::invalid_argument("degree sequence must be non-increasing");
        if (d.front() < 1) throw std::invalid_argument("d_1 must be >= 1");
        if (total % 2 != 0) throw std::invalid_argument("sum of degrees must be even");
    }

    static DegreeSequence from_list(std::vector<std::int64_t> deg) {
        DegreeSequence s;
        s.d = std::move(deg);
        s.total = 0;
        for (auto v : s.d) s.total += v;
        s.case_tag = DegreeCase::user;
        s.check_invariants();
        return s;
    }
};

// Generalized inverse of the step tail (1-F)(x) = c_F k^{-(tau-1)} for
// k <= x < k+1: smallest integer k >= 1 with c_F k^{-(tau-1)} <= u.
// Closed form plus a one-step boundary scan against floating error.
inline std::int64_t inverse_tail(double u, double c_F, double tau) {
    const double expo = 1.0 / (tau - 1.0);
    if (u >= c_F) return 1;
    double raw = std::pow(c_F / u, expo);
    if (!(raw < 9.0e18)) throw std::overflow_error("inverse_tail: degree overflows");
    auto k = static_cast<std::int64_t>(std::ceil(raw));
    if (k < 1) k = 1;
    auto sat = [&](std::int64_t kk) {
        return c_F * std::pow(static_cast<double>(kk), -(tau - 1.0)) <= u;
    };
    while (k > 1 && sat(k - 1)) --k;
    while (!sat(k)) ++k;
    return k;
}

namespace detail {
inline void fix_parity(std::vector<std::int64_t>& d, std::int64_t& total) {
    if (total % 2 != 0) {
        d[0] += 1; // dummy half-edge goes to vertex 1
        total += 1;
    }
}
} // namespace detail

// Case I: d_i = (1-F)^{-1}(i/n).
inline DegreeSequence quantile_degrees(const ModelParams& params) {
    params.validate();
    DegreeSequence seq;
    seq.d.resize(static_cast<std::size_t>(params.n));
    seq.total = 0;
    for (std::int64_t i = 1; i <= params.n; ++i) {
        const double u = static_cast<double>(i) / static_cast<double>(params.n);
        seq.d[static_cast<std::size_t>(i - 1)] = inverse_tail(u, params.c_F, params.tau);
        seq.total += seq.d[static_cast<std::size_t>(i - 1)];
    }
    detail::fix_parity(seq.d, seq.total);
    seq.case_tag = DegreeCase::quantile;
    seq.tau = params.tau;
    seq.c_F = params.c_F;
    seq.seed = params.seed;
    seq.check_invariants();
    return seq;
}

// Shared tail-quantile construction: u must be increasing in (0,1].
inline DegreeSequence degrees_from_uniform_quantiles(const std::vector<double>& u,
                                                     double c_F, double tau) {
    DegreeSequence seq;
    seq.d.resize(u.size());
    seq.total = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        seq.d[i] = inverse_tail(u[i], c_F, tau);
        seq.total += seq.d[i];
    }
    detail::fix_parity(seq.d, seq.total);
    seq.case_tag = DegreeCase::user;
    seq.tau = tau;
    seq.c_F = c_F;
    seq.check_invariants();
    return seq;
}

// Case II: order statistics of an i.i.d. power-law sample via the Gamma
// coupling d_i = (1-F)^{-1}(Gamma_i / Gamma_{n+1}).
inline DegreeSequence iid_degrees(const ModelParams& params, Rng& rng) {
    params.validate();
    std::vector<double> gam(static_cast<std::size_t>(params.n) + 1);
    double acc = 0.0;
    for (auto& g : gam) {
        acc += rng.exponential(1.0);
        g = acc;
    }
    std::vector<double> u(static_cast<std::size_t>(params.n));
    for (std::int64_t i = 0; i < params.n; ++i)
        u[static_cast<std::size_t>(i)] = gam[static_cast<std::size_t>(i)] / gam.back();
    DegreeSequence seq = degrees_from_uniform_quantiles(u, params.c_F, params.tau);
    seq.case_tag = DegreeCase::iid;
    seq.seed = params.seed;
    return seq;
}

// --- series helpers -------------------------------------------------------

// sum_{i>=from} i^{-s} for s > 1: exact head plus Euler-Maclaurin remainder.
inline double power_sum_tail(double s, double from) {
    double head = 0.0;
    double N = from;
    for (int k = 0; k < 2000; ++k, N += 1.0) head += std::pow(N, -s);
    return head + std::pow(N, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(N, -s) +
           s / 12.0 * std::pow(N, -s - 1.0);
}

// sum_{i=1}^infty i^{-s} for s > 1 (zeta), direct summation plus tail.
inline double power_sum_full(double s) { return power_sum_tail(s, 1.0); }

// Limiting hub weights theta_i = c_F^alpha i^{-alpha}. Stored in closed form:
// K can be astronomically large (the l2 tail rule at tau=2.5 forces K ~ 6e8),
// so entries are computed on demand rather than materialized.
struct ThetaSequence {
    double c_theta = 1.0; // c_F^alpha
    double alpha = 2.0 / 3.0;
    std::uint64_t K = 0;
    double l2_full = 0.0; // ||theta||_2^2 over the full series
    double mu = std::numeric_limits<double>::quiet_NaN(); // left to caller

    double theta(std::uint64_t i) const {
        return c_theta * std::pow(static_cast<double>(i), -alpha);
    }
    double l2_norm_sq() const { return l2_full; }
    // sum_{i>K'} theta_i^2
    double tail_sq(std::uint64_t from_exclusive) const {
        return c_theta * c_theta *
               power_sum_tail(2.0 * alpha, static_cast<double>(from_exclusive) + 1.0);
    }
    double tail_fraction() const { return tail_sq(K) / l2_full; }
};

inline ThetaSequence theta_limits(const ModelParams& params, std::uint64_t K) {
    if (K < 1) throw std::invalid_argument("theta_limits: K must be >= 1");
    const double alpha = exponents(params.tau).alpha;
    ThetaSequence t;
    t.alpha = alpha;
    t.c_theta = std::pow(params.c_F, alpha);
    t.K = K;
    t.l2_full = t.c_theta * t.c_theta * power_sum_full(2.0 * alpha);
    return t;
}

// Smallest K with tail_sq(K)/l2 below the given fraction.
inline std::uint64_t truncation_for_tail(const ModelParams& params, double tail_frac) {
    ThetaSequence t = theta_limits(params, 1);
    std::uint64_t lo = 1, hi = 1;
    while (t.tail_sq(hi) / t.l2_full >= tail_frac) {
        lo = hi;
        hi *= 2;
        if (hi > (1ULL << 62)) throw std::overflow_error("truncation_for_tail");
    }
    while (lo + 1 < hi) {
        std::uint64_t mid = lo + (hi - lo) / 2;
        (t.tail_sq(mid) / t.l2_full < tail_frac ? hi : lo) = mid;
    }
    return hi;
}

// --- degree scaling diagnostics ----------------------------------------------

struct DegreeScalingTolerances {
    double hub_rel = 0.05;    // on max_{i<=10} |n^-a d_i - theta_i| / theta_i
    double tail_stat = 0.05;  // on n^{-2a} sum_{i>K} d_i^2 at the largest K
};

struct DegreeScalingReport {
    double max_hub_rel_dev = 0.0;       // statistic (a)
    double mu_hat = 0.0;                // empirical l_n / n
    std::vector<std::pair<std::int64_t, double>> tail_ladder; // (K, n^{-2a} sum_{i>K} d_i^2)
    bool hub_ok = false;
    bool tail_ok = false;
};

// Reports, never throws.
inline DegreeScalingReport validate_degree_scaling(const DegreeSequence& deg,
                                              const ThetaSequence& theta,
                                              const DegreeScalingTolerances& tol = {}) {
    DegreeScalingReport rep;
    const double n = static_cast<double>(deg.n());
    const double alpha = theta.alpha;
    const double na = std::pow(n, -alpha);
    for (std::size_t i = 0; i < std::min<std::size_t>(10, deg.d.size()); ++i) {
        const double th = theta.theta(i + 1);
        const double dev = std::abs(na * static_cast<double>(deg.d[i]) - th) / th;
        rep.max_hub_rel_dev = std::max(rep.max_hub_rel_dev, dev);
    }
    rep.mu_hat = static_cast<double>(deg.total) / n;

    std::vector<double> suffix_sq(deg.d.size() + 1, 0.0);
    for (std::size_t i = deg.d.size(); i-- > 0;)
        suffix_sq[i] = suffix_sq[i + 1] +
                       static_cast<double>(deg.d[i]) * static_cast<double>(deg.d[i]);
    const double n2a = std::pow(n, -2.0 * alpha);
    for (std::int64_t K : {1, 10, 100, 1000, 10000}) {
        if (K >= deg.n()) break;
        rep.tail_ladder.emplace_back(K, n2a * suffix_sq[static_cast<std::size_t>(K)]);
    }
    rep.hub_ok = rep.max_hub_rel_dev <= tol.hub_rel;
    rep.tail_ok = rep.tail_ladder.empty() ||
                  rep.tail_ladder.back().second <= tol.tail_stat;
    return rep;
}

// --- serialization ----------------------------------------------------------

// One integer per line; header carries n, tau, c_F, case tag, seed.
inline void save_degrees(std::ostream& os, const DegreeSequence& seq) {
    os << "# n=" << seq.n();
    os.precision(17);
    if (seq.tau) os << " tau=" << *seq.tau;
    if (seq.c_F) os << " cf=" << *seq.c_F;
    os << " case=" << to_string(seq.case_tag) << " seed=" << seq.seed << "\n";
    for (auto v : seq.d) os << v << "\n";
}

inline void save_degrees(const std::string& path, const DegreeSequence& seq) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    save_degrees(f, seq);
}

inline DegreeSequence load_degrees(std::istream& is) {
    std::string header;
    if (!std::getline(is, header) || header.empty() || header[0] != '#')
        throw std::runtime_error("degree file: missing header line");
    DegreeSequence seq;
    std::istringstream hs(header.substr(1));
    std::string tok;
    std::int64_t n = -1;
    while (hs >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "n") n = std::stoll(val);
        else if (key == "tau") seq.tau = std::stod(val);
        else if (key == "cf") seq.c_F = std::stod(val);
        else if (key == "seed") seq.seed = std::stoull(val);
        else if (key == "case") {
            if (val == "quantile") seq.case_tag = DegreeCase::quantile;
            else if (val == "iid") seq.case_tag = DegreeCase::iid;
            else seq.case_tag = DegreeCase::user;
        }
    }
    std::int64_t v;
    while (is >> v) {
        seq.d.push_back(v);
        seq.total += v;
    }
    if (n >= 0 && n != seq.n())
        throw std::runtime_error("degree file: header n does not match line count");
    seq.check_invariants();
    return seq;
}

inline DegreeSequence load_degrees(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    return load_degrees(f);
}

} // namespace cmperc
