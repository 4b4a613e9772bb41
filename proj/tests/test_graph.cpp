#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <map>
#include <sstream>

#include "cmperc/degrees.hpp"
#include "cmperc/graph.hpp"
#include "cmperc/params.hpp"

using namespace cmperc;

namespace {

ModelParams make_params(std::int64_t n, double tau = 2.5, double c_F = 1.0) {
    ModelParams p;
    p.n = n;
    p.tau = tau;
    p.c_F = c_F;
    return p;
}

// canonical label of a small multigraph: sorted (u,v) pairs
std::string label_of(const MultiGraph& g) {
    auto e = g.edges();
    for (auto& [u, v] : e)
        if (u > v) std::swap(u, v);
    std::sort(e.begin(), e.end());
    std::string s;
    for (auto& [u, v] : e) s += std::to_string(u) + "-" + std::to_string(v) + ";";
    return s;
}

} // namespace

TEST_CASE("d=(2): the self-loop is the only matching") {
    const auto deg = DegreeSequence::from_list({2});
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        const auto g = configuration_model(deg, rng);
        REQUIRE(g.involution_ok());
        REQUIRE(label_of(g) == "0-0;");
    }
}

TEST_CASE("d=(1,1): the single edge") {
    const auto deg = DegreeSequence::from_list({1, 1});
    Rng rng(4);
    const auto g = configuration_model(deg, rng);
    REQUIRE(label_of(g) == "0-1;");
}

TEST_CASE("odd degree sum is rejected") {
    DegreeSequence deg;
    deg.d = {2, 1};
    deg.total = 3;
    Rng rng(5);
    REQUIRE_THROWS_AS(configuration_model(deg, rng), std::invalid_argument);
}

TEST_CASE("d=(2,1,1): matchings are uniform over the three outcomes") {
    // the three perfect matchings of the four half-edges are identified by
    // the partner of half-edge 0 (the labeled graph collapses two of them)
    const auto deg = DegreeSequence::from_list({2, 1, 1});
    Rng rng(6);
    std::map<std::int64_t, int> counts;
    const int N = 30000;
    for (int i = 0; i < N; ++i) counts[configuration_model(deg, rng).partner[0]] += 1;
    REQUIRE(counts.size() == 3);
    // each outcome has probability 1/3; allow 3 sigma
    const double sigma = std::sqrt(N * (1.0 / 3.0) * (2.0 / 3.0));
    for (const auto& [key, c] : counts)
        REQUIRE(std::abs(c - N / 3.0) < 3.0 * sigma);
}

TEST_CASE("percolate_retain at p=0 and p=1") {
    const auto deg = quantile_degrees(make_params(50));
    Rng rng(7);
    const auto empty = percolate_retain(deg, 0.0, rng);
    REQUIRE(empty.retained_half_edges == 0);
    REQUIRE_FALSE(empty.dummy_added);
    for (auto d : empty.retained_degree) REQUIRE(d == 0);

    const auto full = percolate_retain(deg, 1.0, rng);
    REQUIRE(full.retained_degree == deg.d);
    REQUIRE(full.retained_half_edges == deg.total);
    REQUIRE(full.graph->involution_ok());
}

TEST_CASE("percolate_retain marginals match Binomial(d, p)") {
    // aggregate d~Bin(10, 0.3) over replicates, chi-square GOF at 0.01
    const auto deg = DegreeSequence::from_list({10, 10});
    Rng rng(8);
    const int N = 10000;
    std::array<std::int64_t, 11> counts{};
    for (int i = 0; i < N; ++i) {
        const auto out = percolate_retain(deg, 0.3, rng, false);
        // vertex 1 never receives the parity dummy
        counts[static_cast<std::size_t>(out.retained_degree[1])] += 1;
    }
    double chi2 = 0.0;
    for (int k = 0; k <= 10; ++k) {
        double pk = 1.0;
        for (int j = 0; j < k; ++j) pk *= (10.0 - j) / (j + 1.0);
        pk *= std::pow(0.3, k) * std::pow(0.7, 10 - k);
        const double expect = N * pk;
        chi2 += (counts[static_cast<std::size_t>(k)] - expect) *
                (counts[static_cast<std::size_t>(k)] - expect) / expect;
    }
    REQUIRE(chi2 < 23.209); // chi2_{0.99}, 10 dof
}

TEST_CASE("retained fraction concentrates for many unit degrees") {
    const auto deg = DegreeSequence::from_list(std::vector<std::int64_t>(10000, 1));
    Rng rng(9);
    int inside = 0;
    for (int rep = 0; rep < 20; ++rep) {
        const auto out = percolate_retain(deg, 0.3, rng, false);
        const double frac =
            static_cast<double>(out.retained_half_edges - (out.dummy_added ? 1 : 0)) / 10000.0;
        inside += std::abs(frac - 0.3) < 0.02;
    }
    REQUIRE(inside >= 18);
}

TEST_CASE("fountoulakis: p=1 keeps everything, retained count is 2X") {
    const auto deg = quantile_degrees(make_params(40));
    Rng rng(10);
    const auto full = percolate_fountoulakis(deg, 1.0, rng);
    REQUIRE(full.retained_half_edges == deg.total);
    for (int rep = 0; rep < 50; ++rep) {
        const auto out = percolate_fountoulakis(deg, 0.37, rng, false);
        REQUIRE(out.retained_half_edges % 2 == 0);
        REQUIRE_FALSE(out.dummy_added);
        std::int64_t sum = 0;
        for (auto d : out.retained_degree) sum += d;
        REQUIRE(sum == out.retained_half_edges);
    }
}

TEST_CASE("fountoulakis X histogram matches Binomial(2, 1/2)") {
    const auto deg = DegreeSequence::from_list({2, 1, 1});
    Rng rng(11);
    const int N = 30000;
    std::array<int, 3> counts{};
    for (int i = 0; i < N; ++i) {
        const auto out = percolate_fountoulakis(deg, 0.5, rng, false);
        counts[static_cast<std::size_t>(out.retained_half_edges / 2)] += 1;
    }
    const std::array<double, 3> pmf{0.25, 0.5, 0.25};
    for (int k = 0; k < 3; ++k) {
        const double expect = N * pmf[static_cast<std::size_t>(k)];
        const double sigma = std::sqrt(N * pmf[static_cast<std::size_t>(k)] *
                                       (1 - pmf[static_cast<std::size_t>(k)]));
        REQUIRE(std::abs(counts[static_cast<std::size_t>(k)] - expect) < 3.0 * sigma);
    }
}

TEST_CASE("retain-percolation law equals brute-force enumeration on d=(2,1,1), p=1/2") {
    // Oracle: enumerate retention patterns (independent fair coins per
    // half-edge), keep the even-total ones, then enumerate all matchings of
    // the retained half-edges uniformly.
    // half-edges: 0,1 -> vertex0; 2 -> vertex1; 3 -> vertex2
    std::map<std::string, double> oracle;
    double even_mass = 0.0;
    const std::array<std::int64_t, 4> owner{0, 0, 1, 2};
    for (int mask = 0; mask < 16; ++mask) {
        std::vector<int> kept;
        for (int h = 0; h < 4; ++h)
            if (mask & (1 << h)) kept.push_back(h);
        if (kept.size() % 2 != 0) continue;
        const double mass = 1.0 / 16.0;
        even_mass += mass;
        // enumerate perfect matchings of `kept`
        std::vector<std::vector<std::pair<int, int>>> matchings;
        if (kept.empty()) {
            matchings.push_back({});
        } else if (kept.size() == 2) {
            matchings.push_back({{kept[0], kept[1]}});
        } else {
            // 4 half-edges: 3 matchings
            matchings.push_back({{kept[0], kept[1]}, {kept[2], kept[3]}});
            matchings.push_back({{kept[0], kept[2]}, {kept[1], kept[3]}});
            matchings.push_back({{kept[0], kept[3]}, {kept[1], kept[2]}});
        }
        for (const auto& m : matchings) {
            std::vector<std::pair<std::int64_t, std::int64_t>> edges;
            for (auto [a, b] : m) {
                auto u = owner[static_cast<std::size_t>(a)], v = owner[static_cast<std::size_t>(b)];
                edges.emplace_back(std::min(u, v), std::max(u, v));
            }
            std::sort(edges.begin(), edges.end());
            std::string key;
            for (auto& [u, v] : edges) key += std::to_string(u) + "-" + std::to_string(v) + ";";
            oracle[key] += mass / static_cast<double>(matchings.size());
        }
    }
    for (auto& [k, v] : oracle) v /= even_mass;

    const auto deg = DegreeSequence::from_list({2, 1, 1});
    Rng rng(12);
    std::map<std::string, int> counts;
    int accepted = 0;
    const int N = 100000;
    for (int i = 0; i < N; ++i) {
        const auto out = percolate_retain(deg, 0.5, rng);
        if (out.dummy_added) continue; // condition on even retention
        ++accepted;
        counts[label_of(*out.graph)] += 1;
    }
    for (const auto& [key, prob] : oracle) {
        const double expect = accepted * prob;
        const double sigma = std::sqrt(accepted * prob * (1 - prob));
        INFO("outcome " << (key.empty() ? "(empty)" : key));
        REQUIRE(std::abs(counts[key] - expect) <= 3.0 * sigma + 1.0);
    }
}

TEST_CASE("sandwich epsilon") {
    // l_n p = (log n)^4 -> eps = 1/log n
    const std::int64_t n = 1000000;
    const double ln = std::log(static_cast<double>(n));
    {
        const auto eps = sandwich_epsilon(n, static_cast<std::int64_t>(ln * ln * ln * ln), 1.0);
        REQUIRE(eps.value == Catch::Approx(1.0 / ln).epsilon(1e-3));
    }
    {
        const auto eps = sandwich_epsilon(n, 3600000, 0.01);
        REQUIRE(eps.value == Catch::Approx(0.0728).margin(0.0005));
        REQUIRE_FALSE(eps.regime_warning);
    }
    // l_n p = log n -> eps = sqrt(log n) >= 1: coupling regime violated
    REQUIRE_THROWS_AS(sandwich_epsilon(n, static_cast<std::int64_t>(ln), 1.0),
                      std::domain_error);
}

TEST_CASE("percolated degree diagnostics at p=1 and p=0") {
    const auto deg = quantile_degrees(make_params(200));
    Rng rng(13);
    const auto full = percolate_retain(deg, 1.0, rng, false);
    const auto diag = percolated_degree_diagnostics(full, deg, 1.0);
    REQUIRE_FALSE(diag.degenerate);
    REQUIRE(diag.nu_tilde == Catch::Approx(criticality_parameter(deg.d)).epsilon(1e-12));
    REQUIRE(diag.nu_ratio == Catch::Approx(1.0).epsilon(1e-12));
    REQUIRE(diag.ell_ratio == Catch::Approx(1.0).epsilon(1e-12));

    const auto none = percolate_retain(deg, 0.0, rng, false);
    REQUIRE(percolated_degree_diagnostics(none, deg, 0.0).degenerate);
}

TEST_CASE("nu_tilde tracks lambda at criticality, n=1e6") {
    // nu_tilde has sd ~ 0.067 at this n (hub-degree fluctuations), so the
    // in-band fraction for [0.9, 1.1] sits near 0.86, not higher
    const auto params = make_params(1000000);
    const auto deg = quantile_degrees(params);
    const double p_c = critical_p(1.0, criticality_parameter(deg.d));
    int inside = 0, wide = 0;
    const int reps = 200;
    for (int r = 0; r < reps; ++r) {
        Rng rng = make_stream(314, static_cast<std::uint64_t>(r), Phase::percolate);
        const auto out = percolate_retain(deg, p_c, rng, false);
        const auto diag = percolated_degree_diagnostics(out, deg, p_c);
        inside += (diag.nu_tilde >= 0.9 && diag.nu_tilde <= 1.1);
        wide += (diag.nu_tilde >= 0.8 && diag.nu_tilde <= 1.2);
    }
    REQUIRE(inside >= 155);
    REQUIRE(wide >= 190);
}

TEST_CASE("pairing involution holds on random graphs") {
    Rng rng(14);
    for (int rep = 0; rep < 20; ++rep) {
        ModelParams p = make_params(2 + static_cast<std::int64_t>(rng.below(400)),
                                    2.2 + 0.6 * rng.u01());
        const auto deg = quantile_degrees(p);
        const auto g = configuration_model(deg, rng);
        REQUIRE(g.involution_ok());
        REQUIRE(g.edge_count() == deg.total / 2);
    }
}

TEST_CASE("edge list round-trips bit-exactly") {
    Rng rng(15);
    for (int rep = 0; rep < 10; ++rep) {
        const auto deg = quantile_degrees(make_params(2 + static_cast<std::int64_t>(rng.below(300))));
        const auto out = percolate_retain(deg, 0.3 + 0.6 * rng.u01(), rng);
        std::stringstream first;
        write_edge_list(first, *out.graph);
        const auto reloaded = read_edge_list(first);
        std::stringstream second;
        write_edge_list(second, reloaded);
        REQUIRE(first.str() == second.str());
        REQUIRE(reloaded.involution_ok());
    }
}
