#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "degrees.hpp"
#include "explore.hpp"
#include "graph.hpp"
#include "limit.hpp"
#include "nearcritical.hpp"
#include "params.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace cmperc {

using json = nlohmann::ordered_json;

enum class ExperimentId {
    critical_window,
    diameter,
    subcritical,
    supercritical,
    limit_compare,
    hub_poisson,
    oracle_suite,
};

inline const char* to_string(ExperimentId id) {
    switch (id) {
        case ExperimentId::critical_window: return "critical_window";
        case ExperimentId::diameter: return "diameter";
        case ExperimentId::subcritical: return "subcritical";
        case ExperimentId::supercritical: return "supercritical";
        case ExperimentId::limit_compare: return "limit_compare";
        case ExperimentId::hub_poisson: return "hub_poisson";
        default: return "oracle_suite";
    }
}

inline ExperimentId experiment_from_string(const std::string& s) {
    for (auto id : {ExperimentId::critical_window, ExperimentId::diameter,
                    ExperimentId::subcritical, ExperimentId::supercritical,
                    ExperimentId::limit_compare, ExperimentId::hub_poisson,
                    ExperimentId::oracle_suite})
        if (s == to_string(id)) return id;
    throw std::invalid_argument("unknown experiment id: " + s);
}

struct ExperimentConfig {
    ExperimentId id = ExperimentId::oracle_suite;
    ModelParams model{2.5, 1.0, 1.0, 1 << 14, 0};
    std::vector<std::int64_t> n_ladder; // empty -> per-experiment default
    int replicates = 100;
    double p_exponent = std::numeric_limits<double>::quiet_NaN();
    double horizon = 30.0;
    double tail_threshold = 1e-3;
    int threads = 0; // 0 -> hardware concurrency
    std::string out_path;
    std::string format = "jsonl";

    void validate() const {
        if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
        for (std::size_t i = 1; i < n_ladder.size(); ++i)
            if (n_ladder[i] <= n_ladder[i - 1])
                throw std::invalid_argument("n ladder must be sorted ascending");
        if (format != "jsonl" && format != "csv")
            throw std::invalid_argument("format must be jsonl or csv");
        ModelParams m = model;
        if (m.n < 1) m.n = 1;
        m.validate();
    }
};

struct Report {
    std::vector<json> rows;
    json summary;
    int exit_code = 0;
};

// --- infrastructure -----------------------------------------------------------

// Dynamic replicate scheduling over a shared atomic counter; all output is
// indexed by replicate, so the result is independent of thread interleaving.
inline void parallel_for(std::int64_t total, int threads,
                         const std::function<void(std::int64_t)>& fn) {
    if (threads <= 0)
        threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 1 || total <= 1) {
        for (std::int64_t i = 0; i < total; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
        while (true) {
            const std::int64_t i = next.fetch_add(1);
            if (i >= total) break;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next.store(total);
                break;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

struct UnionFind {
    std::vector<std::int64_t> parent;

    explicit UnionFind(std::int64_t n) : parent(static_cast<std::size_t>(n)) {
        for (std::int64_t i = 0; i < n; ++i) parent[static_cast<std::size_t>(i)] = i;
    }
    std::int64_t find(std::int64_t x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    }
    void unite(std::int64_t a, std::int64_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[static_cast<std::size_t>(b)] = a;
    }
};

// --- shared replicate helpers ---------------------------------------------------

namespace detail {

struct TopComponents {
    std::int64_t c1 = 0, c2 = 0, c3 = 0;
    std::int64_t sp1 = 0;          // surplus of the largest component
    std::int64_t edges1 = 0;       // edges of the largest component
    std::int64_t total_surplus = 0;
};

inline TopComponents top_components(const std::vector<ComponentRecord>& recs) {
    TopComponents t;
    const ComponentRecord* best = nullptr;
    std::int64_t c1 = 0, c2 = 0, c3 = 0;
    for (const auto& r : recs) {
        t.total_surplus += r.surplus;
        if (r.size > c1) {
            c3 = c2;
            c2 = c1;
            c1 = r.size;
            best = &r;
        } else if (r.size > c2) {
            c3 = c2;
            c2 = r.size;
        } else if (r.size > c3) {
            c3 = r.size;
        }
    }
    t.c1 = c1;
    t.c2 = c2;
    t.c3 = c3;
    if (best) {
        t.sp1 = best->surplus;
        t.edges1 = best->edges;
    }
    return t;
}

} // namespace detail

// --- experiments ---------------------------------------------------------------

namespace experiments {

inline Report critical_window(const ExperimentConfig& cfg) {
    Report rep;
    std::vector<std::int64_t> ladder = cfg.n_ladder;
    if (ladder.empty())
        for (int e = 14; e <= 19; ++e) ladder.push_back(std::int64_t{1} << e);
    const int R = cfg.replicates;
    rep.rows.resize(ladder.size() * static_cast<std::size_t>(R));
    std::vector<std::pair<double, double>> fit_points;
    for (std::size_t li = 0; li < ladder.size(); ++li) {
        ModelParams params = cfg.model;
        params.n = ladder[li];
        const DegreeSequence deg = quantile_degrees(params);
        const double nu = criticality_parameter(deg.d);
        const double p = critical_p(params.lambda, nu);
        std::vector<double> c1s(static_cast<std::size_t>(R));
        parallel_for(R, cfg.threads, [&](std::int64_t r) {
            Rng perc = make_stream(params.seed, static_cast<std::uint64_t>(r) * 97 + li,
                                   Phase::percolate);
            Rng expl = make_stream(params.seed, static_cast<std::uint64_t>(r) * 97 + li,
                                   Phase::explore);
            auto outcome = percolate_retain(deg, p, perc, /*build_matching=*/false);
            auto trace = explore(outcome, expl);
            auto recs = components_from_trace(trace, outcome, /*include_isolated=*/false);
            auto top = detail::top_components(recs);
            c1s[static_cast<std::size_t>(r)] = static_cast<double>(top.c1);
            json row;
            row["experiment"] = to_string(cfg.id);
            row["n"] = params.n;
            row["rep"] = r;
            row["seed"] = derive_seed(params.seed, static_cast<std::uint64_t>(r) * 97 + li,
                                      Phase::percolate);
            row["p"] = p;
            row["c1"] = top.c1;
            row["c2"] = top.c2;
            row["c3"] = top.c3;
            row["surplus1"] = top.sp1;
            row["total_surplus"] = top.total_surplus;
            rep.rows[li * static_cast<std::size_t>(R) + static_cast<std::size_t>(r)] =
                std::move(row);
        });
        fit_points.emplace_back(static_cast<double>(params.n), mean(c1s));
    }
    const auto fit = fit_exponent(fit_points, FitMode::power_law);
    const auto ex = exponents(cfg.model.tau);
    rep.summary["experiment"] = to_string(cfg.id);
    rep.summary["fitted_size_exponent"] = fit.slope;
    rep.summary["stderr"] = fit.stderr_slope;
    rep.summary["rho"] = ex.rho;
    json pts = json::array();
    for (auto& [n, v] : fit_points) pts.push_back({{"n", n}, {"mean_c1", v}});
    rep.summary["ladder"] = pts;
    return rep;
}

inline Report diameter_growth(const ExperimentConfig& cfg) {
    Report rep;
    std::vector<std::int64_t> ladder = cfg.n_ladder;
    if (ladder.empty())
        for (int e = 14; e <= 18; ++e) ladder.push_back(std::int64_t{1} << e);
    const int R = cfg.replicates;
    rep.rows.resize(ladder.size() * static_cast<std::size_t>(R));
    std::vector<std::pair<double, double>> fit_points;
    std::vector<double> medians;
    for (std::size_t li = 0; li < ladder.size(); ++li) {
        ModelParams params = cfg.model;
        params.n = ladder[li];
        const DegreeSequence deg = quantile_degrees(params);
        const double p = critical_p(params.lambda, criticality_parameter(deg.d));
        std::vector<double> diams(static_cast<std::size_t>(R));
        parallel_for(R, cfg.threads, [&](std::int64_t r) {

            Rng perc = make_stream(params.seed, static_cast<std::uint64_t>(r) * 131 + li,
                                   Phase::percolate);
            Rng expl = make_stream(params.seed, static_cast<std::uint64_t>(r) * 131 + li,
                                   Phase::explore);
            auto outcome = percolate_retain(deg, p, perc, false);
            auto trace = explore(outcome, expl);
            auto [dmax, exact] = max_diameter(trace);
            diams[static_cast<std::size_t>(r)] = dmax;
            json row;
            row["experiment"] = to_string(cfg.id);
            row["n"] = params.n;
            row["rep"] = r;
            row["seed"] = derive_seed(params.seed, static_cast<std::uint64_t>(r) * 131 + li,
                                      Phase::percolate);
            row["p"] = p;
            row["max_diameter"] = dmax;
            row["exact"] = exact;
            rep.rows[li * static_cast<std::size_t>(R) + static_cast<std::size_t>(r)] =
                std::move(row);
        });
        medians.push_back(median(diams));
        // the log-growth fit uses per-rung means; medians are integer-valued
        // and their quantization would dominate the fit residuals
        fit_points.emplace_back(static_cast<double>(params.n), mean(diams));
    }
    const auto fit = fit_exponent(fit_points, FitMode::log_growth);
    rep.summary["experiment"] = to_string(cfg.id);
    rep.summary["medians"] = medians;
    json means = json::array();
    for (auto& [n, v] : fit_points) means.push_back(v);
    rep.summary["means"] = means;
    rep.summary["growth_ratio"] = medians.back() / medians.front();
    rep.summary["log_fit_slope"] = fit.slope;
    rep.summary["log_fit_r_squared"] = fit.r_squared;
    return rep;
}

inline Report subcritical(const ExperimentConfig& cfg) {
    Report rep;
    ModelParams params = cfg.model;
    if (!cfg.n_ladder.empty()) params.n = cfg.n_ladder.back();
    const auto ex = exponents(params.tau);
    const double gamma = std::isnan(cfg.p_exponent)
                             ? 0.5 * (ex.alpha + ex.eta)
                             : cfg.p_exponent;
    const double p = std::pow(static_cast<double>(params.n), -gamma);
    const DegreeSequence deg = quantile_degrees(params);
    const double p_c = critical_p(params.lambda, criticality_parameter(deg.d));
    const ThetaSequence theta = theta_limits(params, 16);
    const double scale = std::pow(static_cast<double>(params.n), ex.alpha) * p;

    const int R = cfg.replicates;
    rep.rows.resize(static_cast<std::size_t>(R));
    std::vector<double> r1(static_cast<std::size_t>(R)), r2(r1), r3(r1);
    std::vector<char> sp_zero(static_cast<std::size_t>(R)), hub1(sp_zero), hub2(sp_zero);
    parallel_for(R, cfg.threads, [&](std::int64_t r) {
        Rng perc = make_stream(params.seed, static_cast<std::uint64_t>(r), Phase::percolate);
        Rng expl = make_stream(params.seed, static_cast<std::uint64_t>(r), Phase::explore);
        auto outcome = percolate_retain(deg, p, perc, false);
        auto trace = explore(outcome, expl);
        auto recs = components_from_trace(trace, outcome, false);
        std::vector<std::pair<std::int64_t, std::int64_t>> size_sp;
        size_sp.reserve(recs.size());
        std::int64_t hub_size[2] = {0, 0};
        for (const auto& c : recs) {
            size_sp.emplace_back(c.size, c.surplus);
            if (c.hub_mask & 1u) hub_size[0] = c.size;
            if (c.hub_mask & 2u) hub_size[1] = c.size;
        }
        std::sort(size_sp.begin(), size_sp.end(), std::greater<>());
        size_sp.resize(std::max<std::size_t>(size_sp.size(), 3));
        std::vector<std::int64_t> sizes = {size_sp[0].first, size_sp[1].first,
                                           size_sp[2].first};
        const std::int64_t top_surplus =
            size_sp[0].second + size_sp[1].second + size_sp[2].second;
        r1[static_cast<std::size_t>(r)] = static_cast<double>(sizes[0]) / scale;
        r2[static_cast<std::size_t>(r)] = static_cast<double>(sizes[1]) / scale;
        r3[static_cast<std::size_t>(r)] = static_cast<double>(sizes[2]) / scale;
        const bool sp0 = top_surplus == 0;
        sp_zero[static_cast<std::size_t>(r)] = sp0;
        hub1[static_cast<std::size_t>(r)] = hub_size[0] == sizes[0];
        hub2[static_cast<std::size_t>(r)] = hub_size[1] == sizes[1];
        json row;
        row["experiment"] = to_string(cfg.id);
        row["n"] = params.n;
        row["rep"] = r;
        row["seed"] = derive_seed(params.seed, static_cast<std::uint64_t>(r), Phase::percolate);
        row["p"] = p;
        row["c1"] = sizes[0];
        row["c2"] = sizes[1];
        row["c3"] = sizes[2];
        row["top3_surplus_zero"] = sp0;
        row["hub1_is_largest"] = static_cast<bool>(hub1[static_cast<std::size_t>(r)]);
        row["hub2_is_second"] = static_cast<bool>(hub2[static_cast<std::size_t>(r)]);
        rep.rows[static_cast<std::size_t>(r)] = std::move(row);
    });

    auto frac = [R](const std::vector<char>& v) {
        std::int64_t c = 0;
        for (char x : v) c += x;
        return static_cast<double>(c) / static_cast<double>(R);
    };
    auto pred = subcritical_prediction(theta, params.n, p, ex.alpha, p_c);
    rep.summary["experiment"] = to_string(cfg.id);
    rep.summary["n"] = params.n;
    rep.summary["p"] = p;
    rep.summary["p_c"] = p_c;
    rep.summary["in_regime"] = pred.in_regime;
    rep.summary["mean_ratio_c1"] = mean(r1) / theta.theta(1);
    rep.summary["mean_ratio_c2"] = mean(r2) / theta.theta(2);
    rep.summary["mean_ratio_c3"] = mean(r3) / theta.theta(3);
    rep.summary["top3_surplus_zero_fraction"] = frac(sp_zero);
    rep.summary["hub1_largest_fraction"] = frac(hub1);
    rep.summary["hub2_second_fraction"] = frac(hub2);
    json pv = json::array();
    for (auto& [k, v] : pred.values) pv.push_back({{"label", k}, {"value", v}});
    rep.summary["prediction"] = pv;
    return rep;
}

inline Report supercritical(const ExperimentConfig& cfg) {
    Report rep;
    ModelParams params = cfg.model;
    if (!cfg.n_ladder.empty()) params.n = cfg.n_ladder.back();
    const auto ex = exponents(params.tau);
    const double gamma = std::isnan(cfg.p_exponent) ? 0.5 * ex.eta : cfg.p_exponent;
    const double p = std::pow(static_cast<double>(params.n), -gamma);
    const DegreeSequence deg = quantile_degrees(params);
    const double p_c = critical_p(params.lambda, criticality_parameter(deg.d));
    const double mu = static_cast<double>(deg.total) / static_cast<double>(params.n);
    const double kap = kappa(params.c_F, params.tau);
    const double scale =
        static_cast<double>(params.n) * std::pow(p, 1.0 / (3.0 - params.tau));

    const int R = cfg.replicates;
    rep.rows.resize(static_cast<std::size_t>(R));
    std::vector<double> ratio(static_cast<std::size_t>(R)), second(ratio);
    parallel_for(R, cfg.threads, [&](std::int64_t r) {
        Rng perc = make_stream(params.seed, static_cast<std::uint64_t>(r), Phase::percolate);
        Rng expl = make_stream(params.seed, static_cast<std::uint64_t>(r), Phase::explore);
        auto outcome = percolate_retain(deg, p, perc, false);
        auto trace = explore(outcome, expl);
        auto recs = components_from_trace(trace, outcome, false);
        auto top = detail::top_components(recs);
        ratio[static_cast<std::size_t>(r)] = static_cast<double>(top.c1) / scale;
        second[static_cast<std::size_t>(r)] =
            top.c1 > 0 ? static_cast<double>(top.c2) / static_cast<double>(top.c1) : 0.0;
        json row;
        row["experiment"] = to_string(cfg.id);
        row["n"] = params.n;
        row["rep"] = r;
        row["seed"] = derive_seed(params.seed, static_cast<std::uint64_t>(r), Phase::percolate);
        row["p"] = p;
        row["c1"] = top.c1;
        row["c2"] = top.c2;
        row["edges1"] = top.edges1;
        rep.rows[static_cast<std::size_t>(r)] = std::move(row);
    });
    auto pred = supercritical_prediction(mu, kap, params.tau, params.n, p, p_c);
    rep.summary["experiment"] = to_string(cfg.id);
    rep.summary["n"] = params.n;
    rep.summary["p"] = p;
    rep.summary["p_c"] = p_c;
    rep.summary["in_regime"] = pred.in_regime;
    rep.summary["mean_c1_over_scale"] = mean(ratio);
    rep.summary["target_mu_kappa"] = mu * std::pow(kap, 1.0 / (3.0 - params.tau));
    rep.summary["median_c2_over_c1"] = median(second);
    return rep;
}

inline Report limit_compare(const ExperimentConfig& cfg) {
    Report rep;
    ModelParams params = cfg.model;
    if (!cfg.n_ladder.empty()) params.n = cfg.n_ladder.back();
    const auto ex = exponents(params.tau);
    const DegreeSequence deg = quantile_degrees(params);
    const double nu = criticality_parameter(deg.d);
    const double p = critical_p(params.lambda, nu);
    const double mu = static_cast<double>(deg.total) / static_cast<double>(params.n);
    const double nrho = std::pow(static_cast<double>(params.n), ex.rho);
    const ThetaSequence theta =
        theta_limits(params, truncation_for_tail(params, cfg.tail_threshold));

    const int R = cfg.replicates;
    rep.rows.resize(2 * static_cast<std::size_t>(R));
    std::vector<double> graph_c1(static_cast<std::size_t>(R)), graph_sp(graph_c1);
    std::vector<double> limit_g1(graph_c1), limit_n1(graph_c1);
    parallel_for(R, cfg.threads, [&](std::int64_t r) {
        Rng perc = make_stream(params.seed, static_cast<std::uint64_t>(r), Phase::percolate);
        Rng expl = make_stream(params.seed, static_cast<std::uint64_t>(r), Phase::explore);
        auto outcome = percolate_retain(deg, p, perc, false);
        auto trace = explore(outcome, expl);
        auto recs = components_from_trace(trace, outcome, false);
        auto top = detail::top_components(recs);
        graph_c1[static_cast<std::size_t>(r)] = static_cast<double>(top.c1) / nrho;
        graph_sp[static_cast<std::size_t>(r)] = static_cast<double>(top.sp1);
        json row;
        row["experiment"] = to_string(cfg.id);
        row["kind"] = "graph";
        row["n"] = params.n;
        row["rep"] = r;
        row["seed"] = derive_seed(params.seed, static_cast<std::uint64_t>(r), Phase::percolate);
        row["p"] = p;
        row["c1_rescaled"] = graph_c1[static_cast<std::size_t>(r)];
        row["surplus1"] = top.sp1;
        rep.rows[static_cast<std::size_t>(r)] = std::move(row);
    });
    parallel_for(R, cfg.threads, [&](std::int64_t r) {
        Rng lim = make_stream(params.seed, static_cast<std::uint64_t>(r), Phase::limit);
        Rng marks = make_stream(params.seed, static_cast<std::uint64_t>(r), Phase::marks);
        auto path = simulate_limit_path(theta, params.lambda, mu, cfg.horizon, lim,
                                        false, cfg.tail_threshold);
        auto excs = excursions(path);
        mark_surplus(excs, theta, params.lambda, mu, marks);
        auto z = z_limit(excs, 1);
        const double g1 = z.entries.empty() ? 0.0 : z.entries[0].gamma;
        const double n1 =
            z.entries.empty() ? 0.0 : static_cast<double>(z.entries[0].marks);
        limit_g1[static_cast<std::size_t>(r)] = g1;
        limit_n1[static_cast<std::size_t>(r)] = n1;
        json row;
        row["experiment"] = to_string(cfg.id);
        row["kind"] = "limit";
        row["n"] = params.n;
        row["rep"] = r;
        row["seed"] = derive_seed(params.seed, static_cast<std::uint64_t>(r), Phase::limit);
        row["p"] = p;
        row["gamma1"] = g1;
        row["N1"] = n1;
        rep.rows[static_cast<std::size_t>(R) + static_cast<std::size_t>(r)] = std::move(row);
    });
    rep.summary["experiment"] = to_string(cfg.id);
    rep.summary["n"] = params.n;
    rep.summary["replicates"] = R;
    rep.summary["horizon"] = cfg.horizon;
    rep.summary["truncation_K"] = theta.K;
    rep.summary["ks_distance"] = ks_distance(graph_c1, limit_g1);
    rep.summary["mean_c1_rescaled"] = mean(graph_c1);
    rep.summary["mean_gamma1"] = mean(limit_g1);
    rep.summary["mean_surplus1"] = mean(graph_sp);
    rep.summary["mean_N1"] = mean(limit_n1);
    return rep;
}

inline Report hub_poisson(const ExperimentConfig& cfg) {
    Report rep;
    ModelParams params = cfg.model;
    if (!cfg.n_ladder.empty()) params.n = cfg.n_ladder.back();
    const DegreeSequence deg = quantile_degrees(params);
    const double p = critical_p(params.lambda, criticality_parameter(deg.d));
    const double mu = static_cast<double>(deg.total) / static_cast<double>(params.n);
    const ThetaSequence theta = theta_limits(params, 16);

    const int R = cfg.replicates;
    rep.rows.resize(static_cast<std::size_t>(R));
    std::vector<double> counts(static_cast<std::size_t>(R));
    std::vector<char> same(static_cast<std::size_t>(R));
    parallel_for(R, cfg.threads, [&](std::int64_t r) {
        Rng perc = make_stream(params.seed, static_cast<std::uint64_t>(r), Phase::percolate);
        auto outcome = percolate_retain(deg, p, perc, /*build_matching=*/true);
        HubPairAccumulator acc(0, 1);
        acc.add(*outcome.graph);
        auto s = acc.stats();
        counts[static_cast<std::size_t>(r)] = s.mean_edges;
        same[static_cast<std::size_t>(r)] = s.same_component_fraction > 0.5;
        json row;
        row["experiment"] = to_string(cfg.id);
        row["n"] = params.n;
        row["rep"] = r;
        row["seed"] = derive_seed(params.seed, static_cast<std::uint64_t>(r), Phase::percolate);
        row["p"] = p;
        row["edges_12"] = s.mean_edges;
        row["same_component"] = static_cast<bool>(same[static_cast<std::size_t>(r)]);
        rep.rows[static_cast<std::size_t>(r)] = std::move(row);
    });
    double same_frac = 0.0;
    for (char c : same) same_frac += c;
    same_frac /= static_cast<double>(R);
    rep.summary["experiment"] = to_string(cfg.id);
    rep.summary["n"] = params.n;
    rep.summary["p"] = p;
    rep.summary["mean_parallel_edges"] = mean(counts);
    rep.summary["poisson_mean_target"] =
        params.lambda * theta.theta(1) * theta.theta(2) / mu;
    rep.summary["same_component_fraction"] = same_frac;
    return rep;
}

inline Report oracle_suite(const ExperimentConfig& cfg) {
    Report rep;
    const int R = cfg.replicates;
    rep.rows.resize(static_cast<std::size_t>(R));
    std::atomic<std::int64_t> failures{0};
    parallel_for(R, cfg.threads, [&](std::int64_t r) {
        Rng setup = make_stream(cfg.model.seed, static_cast<std::uint64_t>(r), Phase::degrees);
        Rng perc = make_stream(cfg.model.seed, static_cast<std::uint64_t>(r), Phase::percolate);
        Rng expl = make_stream(cfg.model.seed, static_cast<std::uint64_t>(r), Phase::explore);
        ModelParams params = cfg.model;
        params.n = 2 + static_cast<std::int64_t>(setup.below(999));
        params.tau = 2.2 + 0.7 * setup.u01();
        params.c_F = 0.5 + 1.5 * setup.u01();
        const bool iid = setup.bernoulli(0.5);
        const DegreeSequence deg =
            iid ? iid_degrees(params, setup) : quantile_degrees(params);
        const double p = (r % 4 == 0) ? 1.0 : setup.u01();
        auto outcome = (r % 2 == 0) ? percolate_retain(deg, p, perc, true)
                                    : percolate_fountoulakis(deg, p, perc, true);
        auto trace = explore(outcome, expl);
        auto recs = components_from_trace(trace, outcome, true);

        std::string fail;
        if (outcome.graph && !outcome.graph->involution_ok())
            fail = "pairing involution violated";
        // handshake: edges across explored components = retained/2
        std::int64_t edge_sum = 0;
        for (const auto& c : recs) edge_sum += c.edges;
        if (fail.empty() && edge_sum != outcome.retained_half_edges / 2)
            fail = "handshake identity violated";
        // surplus identity and walk identity
        for (std::size_t k = 0; fail.empty() && k < trace.tau.size(); ++k) {
            if (trace.walk(trace.tau[k]) != -2 * static_cast<std::int64_t>(k + 1))
                fail = "walk does not hit -2k at tau_k";
        }
        for (const auto& c : recs)
            if (fail.empty() && c.size >= 1 && c.surplus != c.edges - c.size + 1)
                fail = "surplus identity violated";
        // union-find oracle on the realized edge list
        if (fail.empty()) {
            UnionFind uf(params.n);
            for (const auto& [u, v] : trace.edges) uf.unite(u, v);
            std::map<std::int64_t, std::int64_t> uf_size;
            for (std::int64_t v = 0; v < params.n; ++v)
                if (outcome.retained_degree[static_cast<std::size_t>(v)] > 0)
                    uf_size[uf.find(v)] += 1;
            std::vector<std::int64_t> a, b;
            for (auto& [root, s] : uf_size) a.push_back(s);
            for (const auto& c : recs)
                if (c.size >= 1) b.push_back(c.size);
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            if (a != b) fail = "components differ from union-find oracle";
            // vertex-level agreement
            for (std::size_t k = 0; fail.empty() && k < trace.tau.size(); ++k) {
                auto verts = component_vertices(trace, k);
                const std::int64_t root = uf.find(verts.front());
                for (auto v : verts)
                    if (uf.find(v) != root) {
                        fail = "explored component splits under union-find";
                        break;
                    }
                if (fail.empty() &&
                    static_cast<std::int64_t>(verts.size()) != uf_size[root])
                    fail = "explored component size differs from union-find";
            }
        }
        if (!fail.empty()) failures.fetch_add(1);
        json row;
        row["experiment"] = to_string(cfg.id);
        row["n"] = params.n;
        row["rep"] = r;
        row["seed"] = derive_seed(cfg.model.seed, static_cast<std::uint64_t>(r), Phase::degrees);
        row["p"] = p;
        row["case"] = iid ? "iid" : "quantile";
        row["method"] = (r % 2 == 0) ? "retain" : "fountoulakis";
        row["ok"] = fail.empty();
        if (!fail.empty()) row["failure"] = fail;
        rep.rows[static_cast<std::size_t>(r)] = std::move(row);
    });
    rep.summary["experiment"] = to_string(cfg.id);
    rep.summary["replicates"] = R;
    rep.summary["failures"] = failures.load();
    rep.exit_code = failures.load() == 0 ? 0 : 2;
    return rep;
}

} // namespace experiments

inline Report run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    switch (cfg.id) {
        case ExperimentId::critical_window: return experiments::critical_window(cfg);
        case ExperimentId::diameter: return experiments::diameter_growth(cfg);
        case ExperimentId::subcritical: return experiments::subcritical(cfg);
        case ExperimentId::supercritical: return experiments::supercritical(cfg);
        case ExperimentId::limit_compare: return experiments::limit_compare(cfg);
        case ExperimentId::hub_poisson: return experiments::hub_poisson(cfg);
        case ExperimentId::oracle_suite: return experiments::oracle_suite(cfg);
    }
    throw std::logic_error("unreachable");
}

// --- report output --------------------------------------------------------------

inline void write_rows_jsonl(std::ostream& os, const Report& rep) {
    for (const auto& row : rep.rows) os << row.dump() << "\n";
}

inline void write_rows_csv(std::ostream& os, const Report& rep) {
    if (rep.rows.empty()) return;
    std::vector<std::string> keys;
    for (auto it = rep.rows.front().begin(); it != rep.rows.front().end(); ++it)
        keys.push_back(it.key());
    for (std::size_t i = 0; i < keys.size(); ++i) os << (i ? "," : "") << keys[i];
    os << "\n";
    for (const auto& row : rep.rows) {
        for (std::size_t i = 0; i < keys.size(); ++i) {
            os << (i ? "," : "");
            if (row.contains(keys[i])) {
                const auto& v = row.at(keys[i]);
                if (v.is_string()) os << v.get<std::string>();
                else os << v.dump();
            }
        }
        os << "\n";
    }
}

inline void write_report(const Report& rep, const std::string& out_path,
                         const std::string& format) {
    if (!out_path.empty()) {
        std::ofstream f(out_path);
        if (!f) throw std::runtime_error("cannot open " + out_path + " for writing");
        if (format == "csv") write_rows_csv(f, rep);
        else write_rows_jsonl(f, rep);
        std::ofstream s(out_path + ".summary.json");
        s << rep.summary.dump(2) << "\n";
    }
}

inline void print_summary(std::ostream& os, const Report& rep) {
    os << "---- summary ----\n";
    for (auto it = rep.summary.begin(); it != rep.summary.end(); ++it)
        os << "  " << it.key() << " = " << it.value().dump() << "\n";
}

// --- config file (key=value) -----------------------------------------------------

inline std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(f, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = val;
    }
    return kv;
}

} // namespace cmperc
