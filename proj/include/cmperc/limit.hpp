#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "degrees.hpp"
#include "rng.hpp"

namespace cmperc {

// Piecewise-affine realization of the thinned Levy-type process
// S(t) = coef * sum_i theta_i 1{xi_i <= t} + slope * t,
// with coef = lambda*mu/||theta||_2^2 and slope = -1 (plus an optional
// truncation-compensating drift). Only clocks ringing before the horizon are
// stored; everything downstream works on this exact representation, with no
// time discretization anywhere.
struct LimitPath {
    std::vector<double> time;   // sorted jump times in (0, horizon]
    std::vector<double> size;   // jump sizes, coef * theta_i
    std::vector<double> prefix; // prefix[i] = size[0] + ... + size[i]
    double horizon = 0.0;
    double slope = -1.0;
    double jump_coef = 1.0;
    double lambda = 1.0;
    double mu = 1.0;
    std::uint64_t truncation_K = 0;
    double tail_sq = 0.0;      // sum_{i>K} theta_i^2
    double compensation = 0.0; // extra drift folded into `slope` when enabled

    std::size_t jumps() const { return time.size(); }

    void finalize() {
        prefix.resize(time.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < time.size(); ++i) {
            acc += size[i];
            prefix[i] = acc;
        }
    }

    // number of jumps at times <= t
    std::size_t count_until(double t) const {
        return static_cast<std::size_t>(
            std::upper_bound(time.begin(), time.end(), t) - time.begin());
    }

    double value(double t) const {
        const std::size_t k = count_until(t);
        return (k ? prefix[k - 1] : 0.0) + slope * t;
    }

    // left limit S(t-)
    double value_left(double t) const {
        const std::size_t k = static_cast<std::size_t>(
            std::lower_bound(time.begin(), time.end(), t) - time.begin());
        return (k ? prefix[k - 1] : 0.0) + slope * t;
    }

    // exact for the piecewise-affine representation
    double total_variation() const {
        double s = 0.0;
        for (double j : size) s += j;
        return s + std::abs(slope) * horizon;
    }
};

// Clocks ringing before T among i <= K, sampled blockwise. Within a dyadic
// block the ring probabilities q_i = 1 - exp(-theta_i T / mu) vary by at most
// a factor 2^alpha, so candidates are generated by geometric skips at the
// block maximum and thinned to q_i; ring times are then drawn from the
// exponential law conditioned on {xi <= T}. Exact, and O(#rings) rather than
// O(K) when K is huge.
inline LimitPath simulate_limit_path(const ThetaSequence& theta, double lambda,
                                     double mu, double T, Rng& rng,
                                     bool compensate_truncation = false,
                                     double tail_threshold = 1e-3) {
    if (!(lambda > 0.0) || !(mu > 0.0) || !(T > 0.0))
        throw std::invalid_argument("simulate_limit_path: lambda, mu, T must be positive");
    if (theta.K < 1) throw std::invalid_argument("simulate_limit_path: empty theta");
    const double tail_frac = theta.tail_sq(theta.K) / theta.l2_full;
    if (!(tail_frac < tail_threshold)) {
        // suggest the K that meets the threshold: tail ~ C K^{1-2a}
        const double need = std::pow(tail_frac / tail_threshold,
                                     1.0 / (2.0 * theta.alpha - 1.0));
        throw std::domain_error(
            "simulate_limit_path: truncation tail fraction " + std::to_string(tail_frac) +
            " exceeds threshold; suggested K >= " +
            std::to_string(static_cast<std::uint64_t>(
                std::ceil(static_cast<double>(theta.K) * need))));
    }

    LimitPath path;
    path.horizon = T;
    path.lambda = lambda;
    path.mu = mu;
    path.jump_coef = lambda * mu / theta.l2_full;
    path.truncation_K = theta.K;
    path.tail_sq = theta.tail_sq(theta.K);
    if (compensate_truncation) {
        path.compensation = lambda * path.tail_sq / theta.l2_full;
        path.slope = -1.0 + path.compensation;
    }

    auto ring_prob = [&](double th) { return -std::expm1(-th * T / mu); };
    auto draw_conditional_time = [&](double th, double q) {
        const double u = rng.u01();
        return -(mu / th) * std::log1p(-u * q);
    };
    auto accept = [&](std::uint64_t i, double q_max) {
        const double th = theta.theta(i);
        const double q = ring_prob(th);
        if (q_max < 1.0 && rng.u01() * q_max >= q) return;
        path.time.push_back(draw_conditional_time(th, q));
        path.size.push_back(path.jump_coef * th);
    };

    std::uint64_t start = 1;
    while (start <= theta.K) {
        const std::uint64_t end = std::min(2 * start, theta.K + 1);
        const double q_max = ring_prob(theta.theta(start));
        if (q_max > 0.4 || end - start <= 64) {
            for (std::uint64_t i = start; i < end; ++i) {
                const double q = ring_prob(theta.theta(i));
                const double u = rng.u01();
                if (u < q) {
                    path.time.push_back(-(mu / theta.theta(i)) * std::log1p(-u));
                    path.size.push_back(path.jump_coef * theta.theta(i));
                }
            }
        } else {
            const double log1mq = std::log1p(-q_max);
            std::uint64_t i = start;
            while (true) {
                double u = rng.u01();
                if (u <= 0.0) u = std::numeric_limits<double>::min();
                const double skip = std::floor(std::log(u) / log1mq);
                if (skip >= static_cast<double>(end - i)) break;
                i += static_cast<std::uint64_t>(skip);
                accept(i, q_max);
                if (++i >= end) break;
            }
        }
        start = end;
    }

    // sort jumps by time
    std::vector<std::size_t> order(path.time.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return path.time[a] < path.time[b]; });
    std::vector<double> t2(order.size()), s2(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        t2[i] = path.time[order[i]];
        s2[i] = path.size[order[i]];
    }
    path.time = std::move(t2);
    path.size = std::move(s2);
    path.finalize();
    return path;
}

// Reflection above the past minimum. Minima occur only along drift segments,
// so the running minimum at each jump time is exact and everything in
// between is closed form.
class ReflectedPath {
public:
    explicit ReflectedPath(const LimitPath& path) : path_(&path) {
        premin_.resize(path.jumps());
        double m = 0.0; // value at time 0
        for (std::size_t i = 0; i < path.jumps(); ++i) {
            m = std::min(m, path.value_left(path.time[i]));
            premin_[i] = m;
        }
    }

    const LimitPath& path() const { return *path_; }

    double running_min(double t) const {
        const std::size_t k = path_->count_until(t);
        const double v = path_->value(t);
        const double before = k ? premin_[k - 1] : 0.0;
        return std::min(before, v);
    }

    double operator()(double t) const { return path_->value(t) - running_min(t); }

private:
    const LimitPath* path_;
    std::vector<double> premin_;
};

inline ReflectedPath reflect(const LimitPath& path) { return ReflectedPath(path); }

// Excursion of the reflected path above 0. Closed excursions end where the
// affine segment returns to the running minimum (closed-form root).
struct Excursion {
    double l = 0.0;
    double r = 0.0;
    double length = 0.0;
    double area = 0.0;
    std::int64_t marks = -1; // filled by mark_surplus
    bool open = false;       // truncated by the horizon
};

// Scan the jumps in time order. On the zero set the path tracks its running
// minimum; a jump there opens an excursion whose reflected height then evolves
// in closed form until it returns to zero or the horizon cuts it off.
// Output sorted by length descending, ties broken by earlier start.
inline std::vector<Excursion> excursions(const LimitPath& path) {
    std::vector<Excursion> out;
    const double rate = -path.slope; // downward drift speed
    if (!(rate > 0.0))
        throw std::domain_error("excursions: non-negative drift slope, no excursions close");
    std::size_t i = 0;
    const std::size_t m = path.jumps();
    while (i < m) {
        Excursion e;
        e.l = path.time[i];
        double t_cur = e.l;
        double refl = path.size[i];
        ++i;
        bool closed = false;
        while (true) {
            const double t_hit = t_cur + refl / rate;
            const double t_next = i < m ? path.time[i] : std::numeric_limits<double>::infinity();
            if (t_hit <= t_next) {
                if (t_hit > path.horizon) {
                    const double dt = path.horizon - t_cur;
                    e.area += refl * dt - 0.5 * rate * dt * dt;
                    e.r = path.horizon;
                    e.open = true;
                } else {
                    e.area += 0.5 * refl * refl / rate;
                    e.r = t_hit;
                    closed = true;
                }
                break;
            }
            const double dt = t_next - t_cur;
            e.area += refl * dt - 0.5 * rate * dt * dt;
            refl += path.size[i] - rate * dt;
            t_cur = t_next;
            ++i;
        }
        e.length = e.r - e.l;
        out.push_back(e);
        if (!closed && e.open) break; // trailing open excursion reaches the horizon
    }
    std::sort(out.begin(), out.end(), [](const Excursion& a, const Excursion& b) {
        if (a.length != b.length) return a.length > b.length;
        return a.l < b.l;
    });
    return out;
}

// Exact area under the reflected path over the excursion window, as a sum of
// trapezoids between jumps. Open excursions yield the partial area up to the
// horizon (the open flag stays up).
inline double excursion_area(const Excursion& exc, const LimitPath& path) {
    const double rate = -path.slope;
    const double floor_level = path.value_left(exc.l);
    const double hi = exc.open ? path.horizon : exc.r;
    double t_cur = exc.l;
    double refl = path.value(exc.l) - floor_level;
    double area = 0.0;
    std::size_t i = path.count_until(exc.l);
    while (t_cur < hi) {
        const double t_next = i < path.jumps()
                                  ? std::min(path.time[i], hi)
                                  : hi;
        const double dt = t_next - t_cur;
        area += refl * dt - 0.5 * rate * dt * dt;
        refl -= rate * dt;
        if (i < path.jumps() && path.time[i] <= hi && t_next == path.time[i]) {
            refl += path.size[i];
            ++i;
        }
        t_cur = t_next;
    }
    return area;
}

// Poisson surplus marks: N_i ~ Poisson(rate * A_i) with
// rate = ||theta||_2^2 / (lambda mu^2), independent across excursions. Open
// excursions are marked with their partial area.
inline void mark_surplus(std::vector<Excursion>& excs, const ThetaSequence& theta,
                         double lambda, double mu, Rng& rng) {
    const double rate = theta.l2_full / (lambda * mu * mu);
    for (auto& e : excs) {
        if (e.area < 0.0) throw std::invalid_argument("mark_surplus: negative area");
        if (e.area == 0.0) {
            e.marks = 0;
            continue;
        }
        std::poisson_distribution<std::int64_t> pois(rate * e.area);
        e.marks = pois(rng);
    }
}

// Mark positions inside one excursion by inversion of the piecewise-linear
// cumulative intensity (the integral of the reflected path).
inline std::vector<double> mark_positions(const Excursion& exc, const LimitPath& path,
                                          std::int64_t count, Rng& rng) {
    if (count <= 0) return {};
    const double rate = -path.slope;
    const double total = exc.area;
    std::vector<double> targets(static_cast<std::size_t>(count));
    for (auto& t : targets) t = rng.u01() * total;
    std::sort(targets.begin(), targets.end());

    std::vector<double> out;
    out.reserve(targets.size());
    const double hi = exc.open ? path.horizon : exc.r;
    double t_cur = exc.l;
    double refl = path.value(exc.l) - path.value_left(exc.l);
    double acc = 0.0;
    std::size_t i = path.count_until(exc.l);
    std::size_t ti = 0;
    while (t_cur < hi && ti < targets.size()) {
        const double t_next = i < path.jumps() ? std::min(path.time[i], hi) : hi;
        const double dt = t_next - t_cur;
        const double seg = refl * dt - 0.5 * rate * dt * dt;
        while (ti < targets.size() && targets[ti] <= acc + seg) {
            // solve refl*x - rate*x^2/2 = target - acc for x in [0, dt]
            const double y = targets[ti] - acc;
            const double disc = std::max(refl * refl - 2.0 * rate * y, 0.0);
            const double x = (refl - std::sqrt(disc)) / rate;
            out.push_back(t_cur + std::min(x, dt));
            ++ti;
        }
        acc += seg;
        refl -= rate * dt;
        if (i < path.jumps() && t_next == path.time[i] && path.time[i] <= hi) {
            refl += path.size[i];
            ++i;
        }
        t_cur = t_next;
    }
    while (ti++ < targets.size()) out.push_back(hi);
    return out;
}

struct LimitZEntry {
    double gamma;
    std::int64_t marks;
};

struct LimitZVector {
    std::vector<LimitZEntry> entries;
    bool complete = true; // false when fewer than m closed excursions exist
};

// Top-m (gamma_i, N_i) over closed excursions, ordered as an element of
// U^0_down (length descending, ties by marks descending).
inline LimitZVector z_limit(const std::vector<Excursion>& excs, std::size_t m) {
    LimitZVector z;
    for (const auto& e : excs)
        if (!e.open) z.entries.push_back(LimitZEntry{e.length, e.marks});
    std::sort(z.entries.begin(), z.entries.end(),
              [](const LimitZEntry& a, const LimitZEntry& b) {
                  if (a.gamma != b.gamma) return a.gamma > b.gamma;
                  return a.marks > b.marks;
              });
    if (z.entries.size() < m) {
        z.complete = false;
    } else {
        z.entries.resize(m);
    }
    return z;
}

// --- density condition diagnostic ---------------------------------------------

struct DensityDiagnostic {
    double integral = 0.0;
    double integrand_at_vmax = 0.0;
    bool converged = false;
};

// M_t(v) = sum over {j : v theta_j <= 1, t theta_j <= 1} of theta_j^3,
// evaluated in closed form for the power-law theta; the diagnostic integrates
// exp(-t v^2 M_t(v)) on a log grid over [1e-3, V_max]. For alpha in (1/2,1)
// the integrand decays like exp(-c v^{-1+1/alpha}); at the alpha = 1 boundary
// it plateaus and the converged flag stays false.
inline double m_t_of_v(const ThetaSequence& theta, double t, double v) {
    const double x = std::max(v, t);
    const double bound = 1.0 / x;
    // smallest j with theta_j <= bound
    double j_star = 1.0;
    if (theta.theta(1) > bound)
        j_star = std::ceil(std::pow(theta.c_theta * x, 1.0 / theta.alpha));
    while (j_star > 1.0 && theta.theta(static_cast<std::uint64_t>(j_star) - 1) <= bound)
        j_star -= 1.0;
    while (theta.theta(static_cast<std::uint64_t>(j_star)) > bound) j_star += 1.0;
    const double c3 = theta.c_theta * theta.c_theta * theta.c_theta;
    return c3 * power_sum_tail(3.0 * theta.alpha, j_star);
}

inline DensityDiagnostic density_condition_diagnostic(const ThetaSequence& theta,
                                                      double t, double v_max) {
    if (!(t > 0.0)) throw std::invalid_argument("density diagnostic: t must be positive");
    if (3.0 * theta.alpha <= 1.0)
        throw std::invalid_argument("density diagnostic: needs alpha > 1/3");
    DensityDiagnostic diag;
    const double v_min = 1e-3;
    const int per_decade = 200;
    const auto decades = std::log10(v_max / v_min);
    const int steps = std::max(2, static_cast<int>(per_decade * decades));
    auto integrand = [&](double v) {
        return std::exp(-t * v * v * m_t_of_v(theta, t, v));
    };
    double prev_v = v_min, prev_f = integrand(v_min);
    diag.integral = v_min * 1.0; // integrand <= 1 and -> 1 as v -> 0
    for (int k = 1; k <= steps; ++k) {
        const double v = v_min * std::pow(v_max / v_min, static_cast<double>(k) / steps);
        const double f = integrand(v);
        diag.integral += 0.5 * (prev_f + f) * (v - prev_v);
        prev_v = v;
        prev_f = f;
    }
    diag.integrand_at_vmax = prev_f;
    diag.converged = prev_f < 1e-6;
    return diag;
}

// --- CSV export ----------------------------------------------------------------

inline void write_path_csv(std::ostream& os, const LimitPath& path) {
    os << "jump_time,jump_size\n";
    os.precision(17);
    for (std::size_t i = 0; i < path.jumps(); ++i)
        os << path.time[i] << "," << path.size[i] << "\n";
}

inline void write_excursions_csv(std::ostream& os, const std::vector<Excursion>& excs) {
    os << "l,r,length,area,marks,open_flag\n";
    os.precision(17);
    for (const auto& e : excs) {
        os << e.l << "," << e.r << "," << e.length << "," << e.area << ",";
        if (e.marks >= 0) os << e.marks;
        os << "," << (e.open ? 1 : 0) << "\n";
    }
}

} // namespace cmperc
