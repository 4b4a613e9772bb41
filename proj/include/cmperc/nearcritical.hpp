#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "degrees.hpp"
#include "explore.hpp"
#include "graph.hpp"
#include "params.hpp"

namespace cmperc {

namespace detail {

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a,
                                   double b, double fa, double fm, double fb,
                                   double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0) throw std::runtime_error("adaptive quadrature failed to converge");
    if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double tol) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

} // namespace detail

// kappa = int_0^infty c_F z^-alpha (1 - e^{-c_F z^-alpha}) dz, by adaptive
// quadrature after the substitution u = c_F z^-alpha:
//   kappa = (tau-1) c_F^{tau-1} int_0^infty u^{1-tau} (1 - e^-u) du.
// The unit interval is flattened with u = v^{1/(3-tau)} (smooth integrand);
// the rest splits into an exact power tail and a rapidly decaying piece.
inline double kappa(double c_F, double tau) {
    if (!(tau > 2.0 && tau < 3.0)) throw std::invalid_argument("kappa: tau must lie in (2,3)");
    if (!(c_F > 0.0)) throw std::invalid_argument("kappa: c_F must be positive");
    const double tol = 1e-10;
    const double inner = detail::adaptive_simpson(
        [&](double v) {
            const double u = std::pow(v, 1.0 / (3.0 - tau));
            return u < 1e-12 ? 1.0 : -std::expm1(-u) / u;
        },
        0.0, 1.0, tol);
    const double piece1 = inner / (3.0 - tau);
    const double piece2 = 1.0 / (tau - 2.0) -
                          detail::adaptive_simpson(
                              [&](double u) { return std::pow(u, 1.0 - tau) * std::exp(-u); },
                              1.0, 46.0, tol);
    return (tau - 1.0) * std::pow(c_F, tau - 1.0) * (piece1 + piece2);
}

// Closed form via int_0^infty u^{s-1}(1-e^-u) du = -Gamma(s) for s in (-1,0).
inline double kappa_gamma_form(double c_F, double tau) {
    return -std::pow(c_F, tau - 1.0) * (tau - 1.0) * std::tgamma(2.0 - tau);
}

// Size-biased Laplace-transform statistic behind the supercritical constant:
//   (1/l_n) sum_k d_k (1 - e^{-t_n d_k}) / p_n^{(tau-2)/(3-tau)},
// with t_n = t p_n^{1/(3-tau)}. Compared against kappa t^{tau-2} by callers.
inline double laplace_check(const DegreeSequence& deg, double p_n, double t) {
    if (!(p_n > 0.0 && p_n < 1.0))
        throw std::invalid_argument("laplace_check: p_n must lie in (0,1)");
    if (!deg.tau)
        throw std::invalid_argument("laplace_check: degree sequence carries no tau");
    const double tau = *deg.tau;
    const double t_n = t * std::pow(p_n, 1.0 / (3.0 - tau));
    double acc = 0.0;
    for (const auto d : deg.d) {
        const auto dd = static_cast<double>(d);
        acc += dd * -std::expm1(-t_n * dd);
    }
    acc /= static_cast<double>(deg.total);
    return acc / std::pow(p_n, (tau - 2.0) / (3.0 - tau));
}

enum class Regime { subcritical, critical, supercritical };

inline const char* to_string(Regime r) {
    switch (r) {
        case Regime::subcritical: return "subcritical";
        case Regime::critical: return "critical";
        default: return "supercritical";
    }
}

struct RegimePrediction {
    Regime regime = Regime::critical;
    double p_n = 0.0;
    std::vector<std::pair<std::string, double>> values;
    bool in_regime = true; // false when the stated preconditions fail
};

// Barely subcritical: |C_(i)| ~ theta_i n^alpha p_n with surplus 0.
// Valid for n^-alpha << p_n << p_c.
inline RegimePrediction subcritical_prediction(const ThetaSequence& theta,
                                               std::int64_t n, double p_n,
                                               double alpha, double p_c = 0.0) {
    RegimePrediction pred;
    pred.regime = Regime::subcritical;
    pred.p_n = p_n;
    const double na = std::pow(static_cast<double>(n), alpha);
    pred.in_regime = p_n > 1.0 / na && (p_c <= 0.0 || p_n < p_c);
    for (int i = 1; i <= 10; ++i)
        pred.values.emplace_back("C_" + std::to_string(i),
                                 theta.theta(static_cast<std::uint64_t>(i)) * na * p_n);
    pred.values.emplace_back("surplus_top", 0.0);
    return pred;
}

// Barely supercritical: |C_(1)| ~ E(C_(1)) ~ mu kappa^{1/(3-tau)} n p_n^{1/(3-tau)},
// with the second component of smaller order. Valid for p_c << p_n << 1.
inline RegimePrediction supercritical_prediction(double mu, double kappa_value,
                                                 double tau, std::int64_t n,
                                                 double p_n, double p_c = 0.0) {
    RegimePrediction pred;
    pred.regime = Regime::supercritical;
    pred.p_n = p_n;
    pred.in_regime = p_n < 1.0 && (p_c <= 0.0 || p_n > p_c);
    const double scale = static_cast<double>(n) * std::pow(p_n, 1.0 / (3.0 - tau));
    const double giant = mu * std::pow(kappa_value, 1.0 / (3.0 - tau)) * scale;
    pred.values.emplace_back("C_1", giant);
    pred.values.emplace_back("E_C_1", giant);
    pred.values.emplace_back("C_2_order", scale);
    return pred;
}

// --- hub connectivity ---------------------------------------------------------

struct HubPairStats {
    double mean_edges = 0.0;
    double same_component_fraction = 0.0;
    std::int64_t replicates = 0;
};

// Streaming accumulator over percolation replicates: the number of parallel
// edges between hubs i and j, and how often they share a component.
class HubPairAccumulator {
public:
    HubPairAccumulator(std::int64_t i, std::int64_t j) : i_(i), j_(j) {
        if (i == j) throw std::invalid_argument("hub pair needs i != j");
    }

    void add(const MultiGraph& g) {
        std::int64_t count = 0;
        for (std::int64_t h = g.offset[static_cast<std::size_t>(i_)];
             h < g.offset[static_cast<std::size_t>(i_) + 1]; ++h)
            if (g.owner[static_cast<std::size_t>(g.partner[static_cast<std::size_t>(h)])] == j_)
                ++count;
        edges_ += count;
        same_ += connected(g) ? 1 : 0;
        ++reps_;
    }

    HubPairStats stats() const {
        HubPairStats s;
        s.replicates = reps_;
        if (reps_ > 0) {
            s.mean_edges = static_cast<double>(edges_) / static_cast<double>(reps_);
            s.same_component_fraction =
                static_cast<double>(same_) / static_cast<double>(reps_);
        }
        return s;
    }

private:
    bool connected(const MultiGraph& g) {
        // BFS from i over half-edges until j is seen or the component ends
        seen_.assign(static_cast<std::size_t>(g.n), 0);
        fifo_.clear();
        fifo_.push_back(i_);
        seen_[static_cast<std::size_t>(i_)] = 1;
        std::size_t head = 0;
        while (head < fifo_.size()) {
            const std::int64_t v = fifo_[head++];
            for (std::int64_t h = g.offset[static_cast<std::size_t>(v)];
                 h < g.offset[static_cast<std::size_t>(v) + 1]; ++h) {
                const std::int64_t u =
                    g.owner[static_cast<std::size_t>(g.partner[static_cast<std::size_t>(h)])];
                if (u == j_) return true;
                if (!seen_[static_cast<std::size_t>(u)]) {
                    seen_[static_cast<std::size_t>(u)] = 1;
                    fifo_.push_back(u);
                }
            }
        }
        return false;
    }

    std::int64_t i_, j_;
    std::int64_t reps_ = 0;
    std::int64_t edges_ = 0;
    std::int64_t same_ = 0;
    std::vector<char> seen_;
    std::vector<std::int64_t> fifo_;
};

inline HubPairStats hub_edge_statistics(const std::vector<MultiGraph>& outcomes,
                                        std::int64_t i, std::int64_t j) {
    HubPairAccumulator acc(i, j);
    for (const auto& g : outcomes) acc.add(g);
    return acc.stats();
}

} // namespace cmperc
