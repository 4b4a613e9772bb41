#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "cmperc/degrees.hpp"
#include "cmperc/limit.hpp"
#include "cmperc/params.hpp"
#include "cmperc/stats.hpp"

using namespace cmperc;

namespace {

LimitPath make_path(std::vector<double> times, std::vector<double> sizes, double T) {
    LimitPath p;
    p.time = std::move(times);
    p.size = std::move(sizes);
    p.horizon = T;
    p.finalize();
    return p;
}

ModelParams make_params(double tau = 2.5, double c_F = 1.0) {
    ModelParams p;
    p.tau = tau;
    p.c_F = c_F;
    p.n = 1000;
    return p;
}

// Riemann-sum oracle for the area under the reflected path, independent of
// the closed-form bookkeeping in the excursion scan.
double riemann_area(const LimitPath& path, double lo, double hi, int steps = 2000000) {
    const ReflectedPath refl(path);
    double acc = 0.0;
    const double dt = (hi - lo) / steps;
    for (int i = 0; i < steps; ++i) acc += refl(lo + (i + 0.5) * dt) * dt;
    return acc;
}

// E[S(t)] + t in closed form: coef * sum_i theta_i (1 - e^{-theta_i t/mu}).
double mean_jump_mass(const ThetaSequence& th, double lambda, double mu, double t) {
    const double coef = lambda * mu / th.l2_full;
    const std::uint64_t head = std::min<std::uint64_t>(th.K, 2000000);
    double acc = 0.0;
    for (std::uint64_t i = 1; i <= head; ++i)
        acc += th.theta(i) * -std::expm1(-th.theta(i) * t / mu);
    if (th.K > head) {
        const double c = th.c_theta;
        const double r = t / mu;
        auto range_sum = [&](double s) {
            return power_sum_tail(s, static_cast<double>(head) + 1.0) -
                   power_sum_tail(s, static_cast<double>(th.K) + 1.0);
        };
        acc += c * c * r * range_sum(2.0 * th.alpha) -
               c * c * c * r * r / 2.0 * range_sum(3.0 * th.alpha) +
               c * c * c * c * r * r * r / 6.0 * range_sum(4.0 * th.alpha);
    }
    return coef * acc;
}

} // namespace

TEST_CASE("path value: pure drift and a single jump") {
    const auto drift = make_path({}, {}, 5.0);
    for (double t : {0.0, 0.5, 3.3}) REQUIRE(drift.value(t) == -t);

    const auto one = make_path({1.0}, {0.7}, 5.0);
    REQUIRE(one.value(0.5) == -0.5);
    REQUIRE(one.value(1.5) == Catch::Approx(0.7 - 1.5));
    REQUIRE(one.value_left(1.0) == Catch::Approx(-1.0));
    REQUIRE(one.value(1.0) == Catch::Approx(-0.3));
}

TEST_CASE("path is affine with slope -1 between jumps") {
    const auto p = make_path({0.4, 1.1, 2.7}, {0.5, 0.2, 1.0}, 4.0);
    for (double t : {0.5, 1.2, 2.8, 3.4}) {
        const double h = 0.01;
        REQUIRE(p.value(t + h) - p.value(t) == Catch::Approx(-h).epsilon(1e-9));
    }
}

TEST_CASE("total variation equals jumps plus horizon") {
    const auto p = make_path({0.4, 1.1, 2.7}, {0.5, 0.2, 1.0}, 4.0);
    double jumps = 0.0;
    for (double s : p.size) jumps += s;
    REQUIRE(p.total_variation() == jumps + 4.0);
}

TEST_CASE("reflection of a pure drift path is zero") {
    const auto p = make_path({}, {}, 3.0);
    const auto refl = reflect(p);
    for (double t : {0.0, 1.0, 2.9}) REQUIRE(refl(t) == 0.0);
}

TEST_CASE("reflection right after a jump equals the jump size") {
    const auto p = make_path({1.0}, {0.8}, 3.0);
    const auto refl = reflect(p);
    REQUIRE(refl(1.0) == Catch::Approx(0.8));
    REQUIRE(refl(0.999999) == Catch::Approx(0.0).margin(1e-5));
    // after the excursion closes the path sits on the zero set again
    REQUIRE(refl(2.5) == Catch::Approx(0.0).margin(1e-12));
    for (double t : {0.3, 1.2, 1.7, 2.9}) REQUIRE(refl(t) >= 0.0);
}

TEST_CASE("excursions: single jump of height 2") {
    const auto p = make_path({1.0}, {2.0}, 10.0);
    const auto excs = excursions(p);
    REQUIRE(excs.size() == 1);
    REQUIRE(excs[0].l == Catch::Approx(1.0));
    REQUIRE(excs[0].r == Catch::Approx(3.0));
    REQUIRE(excs[0].length == Catch::Approx(2.0));
    REQUIRE_FALSE(excs[0].open);
    REQUIRE(excs[0].area == Catch::Approx(2.0)); // h^2/2
    REQUIRE(excursion_area(excs[0], p) == Catch::Approx(2.0).epsilon(1e-12));
    REQUIRE(riemann_area(p, 1.0, 3.0) == Catch::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("excursions: two stacked jumps merge into one excursion") {
    // jump 1.0 at t=1; at t=1.5 the height is 0.5, then +1.0 -> closes at 3.0
    const auto p = make_path({1.0, 1.5}, {1.0, 1.0}, 10.0);
    const auto excs = excursions(p);
    REQUIRE(excs.size() == 1);
    REQUIRE(excs[0].l == Catch::Approx(1.0));
    REQUIRE(excs[0].r == Catch::Approx(3.0));
    REQUIRE(excs[0].length == Catch::Approx(2.0));
    // trapezoid sum: (1+0.5)/2*0.5 + 1.5^2/2 = 0.375 + 1.125
    REQUIRE(excs[0].area == Catch::Approx(1.5).epsilon(1e-12));
    REQUIRE(excursion_area(excs[0], p) == Catch::Approx(1.5).epsilon(1e-12));
    REQUIRE(riemann_area(p, 1.0, 3.0) == Catch::Approx(1.5).epsilon(1e-4));
}

TEST_CASE("excursions: pure drift has none, horizon truncation flags open") {
    REQUIRE(excursions(make_path({}, {}, 4.0)).empty());
    const auto p = make_path({1.0}, {5.0}, 3.0); // would close at 6.0
    const auto excs = excursions(p);
    REQUIRE(excs.size() == 1);
    REQUIRE(excs[0].open);
    REQUIRE(excs[0].r == Catch::Approx(3.0));
    // partial area: 5*2 - 2^2/2
    REQUIRE(excs[0].area == Catch::Approx(8.0).epsilon(1e-12));
    REQUIRE(excursion_area(excs[0], p) == Catch::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("consecutive excursions partition time before the last closure") {
    const auto p = make_path({0.5, 0.9, 4.0, 6.5}, {0.3, 0.4, 1.0, 0.2}, 20.0);
    auto excs = excursions(p);
    std::sort(excs.begin(), excs.end(),
              [](const Excursion& a, const Excursion& b) { return a.l < b.l; });
    const auto refl = reflect(p);
    for (std::size_t i = 0; i < excs.size(); ++i) {
        REQUIRE(std::abs(refl(excs[i].r)) < 1e-9);
        if (i + 1 < excs.size()) {
            REQUIRE(excs[i].r <= excs[i + 1].l + 1e-12);
            // strictly between excursions the path sits on its running minimum
            const double mid = 0.5 * (excs[i].r + excs[i + 1].l);
            REQUIRE(std::abs(refl(mid)) < 1e-9);
        }
    }
}

TEST_CASE("mark_surplus draws Poisson(rate * area)") {
    ThetaSequence th;
    th.c_theta = 1.0;
    th.alpha = 2.0 / 3.0;
    th.K = 4;
    th.l2_full = 2.0; // rate = l2/(lambda mu^2) = 2
    std::vector<Excursion> excs(1);
    excs[0].area = 1.0;
    excs[0].length = 1.0;
    Rng rng(21);
    double acc = 0.0;
    const int N = 100000;
    for (int i = 0; i < N; ++i) {
        mark_surplus(excs, th, 1.0, 1.0, rng);
        acc += static_cast<double>(excs[0].marks);
    }
    REQUIRE(acc / N == Catch::Approx(2.0).margin(0.015));

    std::vector<Excursion> zero(1);
    zero[0].area = 0.0;
    mark_surplus(zero, th, 1.0, 1.0, rng);
    REQUIRE(zero[0].marks == 0);
}

TEST_CASE("mark positions land inside the excursion, sorted") {
    const auto p = make_path({1.0, 1.5}, {1.0, 1.0}, 10.0);
    const auto excs = excursions(p);
    Rng rng(22);
    const auto pos = mark_positions(excs[0], p, 50, rng);
    REQUIRE(pos.size() == 50);
    for (std::size_t i = 0; i < pos.size(); ++i) {
        REQUIRE(pos[i] >= excs[0].l);
        REQUIRE(pos[i] <= excs[0].r);
        if (i) REQUIRE(pos[i] >= pos[i - 1]);
    }
}

TEST_CASE("z_limit on a single excursion") {
    std::vector<Excursion> excs(1);
    excs[0].length = 2.0;
    excs[0].marks = 1;
    const auto z = z_limit(excs, 1);
    REQUIRE(z.complete);
    REQUIRE(z.entries.size() == 1);
    REQUIRE(z.entries[0].gamma == 2.0);
    REQUIRE(z.entries[0].marks == 1);
}

TEST_CASE("z_limit ordering and truncation flag") {
    std::vector<Excursion> excs(3);
    excs[0].length = 2.0;
    excs[0].marks = 1;
    excs[1].length = 2.0;
    excs[1].marks = 3;
    excs[2].length = 0.5;
    excs[2].marks = 0;
    const auto z = z_limit(excs, 2);
    REQUIRE(z.complete);
    REQUIRE(z.entries.size() == 2);
    REQUIRE(z.entries[0].marks == 3); // equal lengths ordered by marks
    REQUIRE(z.entries[1].marks == 1);

    const auto z4 = z_limit(excs, 4);
    REQUIRE_FALSE(z4.complete);
    REQUIRE(z4.entries.size() == 3);

    excs[1].open = true; // open excursions are excluded
    const auto z2 = z_limit(excs, 2);
    REQUIRE(z2.entries[0].marks == 1);
}

TEST_CASE("simulate_limit_path rejects an inadequate truncation") {
    const auto theta = theta_limits(make_params(), 100);
    Rng rng(23);
    REQUIRE_THROWS_AS(simulate_limit_path(theta, 1.0, 3.6, 5.0, rng), std::domain_error);
}

TEST_CASE("simulated mean matches the closed form at t=1") {
    const auto params = make_params();
    const auto theta = theta_limits(params, truncation_for_tail(params, 1e-3));
    const double lambda = 1.0, mu = 3.6, T = 1.0;
    Rng rng(24);
    std::vector<double> vals;
    const int N = 2000;
    for (int i = 0; i < N; ++i) {
        const auto path = simulate_limit_path(theta, lambda, mu, T, rng);
        vals.push_back(path.value(1.0) + 1.0);
    }
    const double target = mean_jump_mass(theta, lambda, mu, 1.0);
    const double se = sample_sd(vals) / std::sqrt(static_cast<double>(N));
    REQUIRE(std::abs(mean(vals) - target) < 3.0 * se);
}

TEST_CASE("sampled paths respect the horizon and carry positive jumps") {
    const auto params = make_params();
    const auto theta = theta_limits(params, truncation_for_tail(params, 1e-3));
    Rng rng(25);
    const auto path = simulate_limit_path(theta, 1.0, 3.6, 10.0, rng);
    REQUIRE(path.jumps() > 100);
    for (std::size_t i = 0; i < path.jumps(); ++i) {
        REQUIRE(path.time[i] > 0.0);
        REQUIRE(path.time[i] <= 10.0);
        REQUIRE(path.size[i] > 0.0);
        if (i) REQUIRE(path.time[i] >= path.time[i - 1]);
    }
    REQUIRE(path.total_variation() == Catch::Approx(path.prefix.back() + 10.0));
}

TEST_CASE("largest excursion lengths are strictly ordered") {
    const auto params = make_params();
    const auto theta = theta_limits(params, truncation_for_tail(params, 1e-3));
    Rng rng(26);
    for (int i = 0; i < 300; ++i) {
        const auto path = simulate_limit_path(theta, 1.0, 3.6, 10.0, rng);
        const auto excs = excursions(path);
        std::vector<double> closed;
        for (const auto& e : excs)
            if (!e.open) closed.push_back(e.length);
        if (closed.size() < 2) continue;
        REQUIRE(closed[0] > closed[1] + 1e-9);
    }
}

TEST_CASE("truncation compensation adds the predicted drift") {
    const auto params = make_params();
    const auto theta = theta_limits(params, truncation_for_tail(params, 1e-3));
    Rng rng(27);
    const auto path = simulate_limit_path(theta, 1.0, 3.6, 1.0, rng, true);
    REQUIRE(path.compensation ==
            Catch::Approx(1.0 * theta.tail_sq(theta.K) / theta.l2_full).epsilon(1e-12));
    REQUIRE(path.slope == Catch::Approx(-1.0 + path.compensation));
}

TEST_CASE("density condition: power-law theta integrates, alpha=1 plateaus") {
    ThetaSequence good;
    good.c_theta = 1.0;
    good.alpha = 2.0 / 3.0;
    good.K = 1;
    good.l2_full = power_sum_full(4.0 / 3.0);
    const auto diag = density_condition_diagnostic(good, 1.0, 1000.0);
    REQUIRE(diag.converged);
    REQUIRE(diag.integrand_at_vmax < 1e-6);
    REQUIRE(diag.integral > 0.0);

    ThetaSequence boundary;
    boundary.c_theta = 1.0;
    boundary.alpha = 1.0;
    boundary.K = 1;
    boundary.l2_full = power_sum_full(2.0);
    const auto bad = density_condition_diagnostic(boundary, 1.0, 1000.0);
    REQUIRE_FALSE(bad.converged);
    REQUIRE(bad.integrand_at_vmax > 0.1);
}

TEST_CASE("path and excursion CSV export") {
    const auto p = make_path({1.0, 1.5}, {1.0, 1.0}, 10.0);
    std::ostringstream ps;
    write_path_csv(ps, p);
    REQUIRE(ps.str().find("jump_time,jump_size\n1") == 0);
    auto excs = excursions(p);
    std::ostringstream es;
    write_excursions_csv(es, excs);
    REQUIRE(es.str().find("l,r,length,area,marks,open_flag") == 0);
    REQUIRE(es.str().find(",0\n") != std::string::npos);
}

TEST_CASE("M_t(v) is non-increasing in v and t") {
    ThetaSequence th;
    th.c_theta = 1.0;
    th.alpha = 2.0 / 3.0;
    th.K = 1;
    th.l2_full = power_sum_full(4.0 / 3.0);
    double prev = std::numeric_limits<double>::infinity();
    for (double v : {0.01, 0.1, 1.0, 10.0, 100.0}) {
        const double m = m_t_of_v(th, 1.0, v);
        REQUIRE(m <= prev + 1e-15);
        prev = m;
        REQUIRE(m_t_of_v(th, 2.0, v) <= m + 1e-15);
    }
}
