#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "degrees.hpp"
#include "params.hpp"
#include "rng.hpp"

namespace cmperc {

// Half-edge-paired multigraph. Half-edge ids are contiguous per vertex
// (owner lookup is an array read); pairing is a fixed-point-free involution.
// Self-loops and multi-edges are permitted.
struct MultiGraph {
    std::int64_t n = 0;
    std::vector<std::int64_t> degree;   // per-vertex half-edge count
    std::vector<std::int64_t> offset;   // half-edges of v: [offset[v], offset[v+1])
    std::vector<std::int64_t> owner;    // half-edge -> vertex
    std::vector<std::int64_t> partner;  // involution

    std::int64_t half_edges() const { return static_cast<std::int64_t>(partner.size()); }
    std::int64_t edge_count() const { return half_edges() / 2; }

    bool involution_ok() const {
        for (std::int64_t h = 0; h < half_edges(); ++h) {
            if (partner[static_cast<std::size_t>(h)] == h) return false;
            if (partner[static_cast<std::size_t>(partner[static_cast<std::size_t>(h)])] != h)
                return false;
        }
        return true;
    }

    // edges as (u,v) with u,v = owners, one entry per pairing
    std::vector<std::pair<std::int64_t, std::int64_t>> edges() const {
        std::vector<std::pair<std::int64_t, std::int64_t>> e;
        e.reserve(static_cast<std::size_t>(edge_count()));
        for (std::int64_t h = 0; h < half_edges(); ++h)
            if (h < partner[static_cast<std::size_t>(h)])
                e.emplace_back(owner[static_cast<std::size_t>(h)],
                               owner[static_cast<std::size_t>(partner[static_cast<std::size_t>(h)])]);
        return e;
    }
};

namespace detail {

inline MultiGraph skeleton_from_degrees(std::int64_t n,
                                        std::vector<std::int64_t> degree) {
    MultiGraph g;
    g.n = n;
    g.degree = std::move(degree);
    g.offset.resize(static_cast<std::size_t>(n) + 1, 0);
    for (std::int64_t v = 0; v < n; ++v)
        g.offset[static_cast<std::size_t>(v) + 1] =
            g.offset[static_cast<std::size_t>(v)] + g.degree[static_cast<std::size_t>(v)];
    const std::int64_t ell = g.offset.back();
    g.owner.resize(static_cast<std::size_t>(ell));
    for (std::int64_t v = 0; v < n; ++v)
        for (std::int64_t h = g.offset[static_cast<std::size_t>(v)];
             h < g.offset[static_cast<std::size_t>(v) + 1]; ++h)
            g.owner[static_cast<std::size_t>(h)] = v;
    g.partner.assign(static_cast<std::size_t>(ell), -1);
    return g;
}

// Uniform perfect matching: full Fisher-Yates shuffle of the half-edge ids,
// then pair consecutive entries. Same law as sequential uniform pairing.
inline void uniform_matching(MultiGraph& g, Rng& rng) {
    const std::int64_t ell = g.half_edges();
    if (ell % 2 != 0)
        throw std::invalid_argument("uniform_matching: odd number of half-edges");
    std::vector<std::int64_t> ids(static_cast<std::size_t>(ell));
    for (std::int64_t h = 0; h < ell; ++h) ids[static_cast<std::size_t>(h)] = h;
    for (std::int64_t i = ell - 1; i > 0; --i)
        std::swap(ids[static_cast<std::size_t>(i)],
                  ids[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i) + 1))]);
    for (std::int64_t i = 0; i < ell; i += 2) {
        const std::int64_t a = ids[static_cast<std::size_t>(i)];
        const std::int64_t b = ids[static_cast<std::size_t>(i + 1)];
        g.partner[static_cast<std::size_t>(a)] = b;
        g.partner[static_cast<std::size_t>(b)] = a;
    }
}

} // namespace detail

inline MultiGraph configuration_model(const DegreeSequence& deg, Rng& rng) {
    if (deg.total % 2 != 0)
        throw std::invalid_argument("configuration_model: sum of degrees is odd");
    MultiGraph g = detail::skeleton_from_degrees(deg.n(), deg.d);
    detail::uniform_matching(g, rng);
    return g;
}

enum class PercolationMethod { half_edge_retention, subset_matching };

// Result of percolating a degree sequence. `graph` holds the realized
// matching when the percolation op built one; the exploration module can
// also generate the matching on the fly from the retained degrees alone.
struct PercolationOutcome {
    std::vector<std::int64_t> retained_degree;
    std::int64_t retained_half_edges = 0;
    PercolationMethod method = PercolationMethod::half_edge_retention;
    double p = 1.0;
    bool dummy_added = false;
    std::optional<MultiGraph> graph;

    std::int64_t n() const { return static_cast<std::int64_t>(retained_degree.size()); }

    // Treat a full degree sequence as "everything retained" (p = 1), with no
    // realized matching; used to drive the simultaneous exploration.
    static PercolationOutcome from_degrees(const DegreeSequence& deg) {
        PercolationOutcome out;
        out.retained_degree = deg.d;
        out.retained_half_edges = deg.total;
        out.p = 1.0;
        return out;
    }
};

namespace detail {

// Binomial(d, p) by direct coin flips for small d, std::binomial otherwise.
inline std::int64_t binomial_draw(std::int64_t d, double p, std::uint64_t threshold,
                                  Rng& rng) {
    if (p >= 1.0) return d;
    if (p <= 0.0) return 0;
    if (d <= 64) {
        std::int64_t c = 0;
        for (std::int64_t k = 0; k < d; ++k) c += (rng() < threshold);
        return c;
    }
    std::binomial_distribution<std::int64_t> bin(d, p);
    return bin(rng);
}

inline std::uint64_t p_threshold(double p) {
    if (p >= 1.0) return ~std::uint64_t{0};
    if (p <= 0.0) return 0;
    return static_cast<std::uint64_t>(std::ldexp(p, 64));
}

} // namespace detail

// Algorithm: keep each half-edge independently with probability p, add a
// dummy half-edge to vertex 1 if the retained count is odd, then match the
// retained half-edges uniformly.
inline PercolationOutcome percolate_retain(const DegreeSequence& deg, double p,
                                           Rng& rng, bool build_matching = true) {
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("percolate_retain: p must lie in [0,1]");
    PercolationOutcome out;
    out.method = PercolationMethod::half_edge_retention;
    out.p = p;
    out.retained_degree.resize(deg.d.size());
    const std::uint64_t thr = detail::p_threshold(p);
    std::int64_t total = 0;
    for (std::size_t i = 0; i < deg.d.size(); ++i) {
        out.retained_degree[i] = detail::binomial_draw(deg.d[i], p, thr, rng);
        total += out.retained_degree[i];
    }
    if (total % 2 != 0) {
        out.retained_degree[0] += 1;
        total += 1;
        out.dummy_added = true;
    }
    out.retained_half_edges = total;
    if (build_matching) {
        MultiGraph g = detail::skeleton_from_degrees(deg.n(), out.retained_degree);
        detail::uniform_matching(g, rng);
        out.graph = std::move(g);
    }
    return out;
}

// Fountoulakis construction: X ~ Bin(l_n/2, p), retain a uniform 2X-subset of
// half-edges, match them uniformly. Distributed as percolation on the
// configuration model; the retained count is even by construction.
inline PercolationOutcome percolate_fountoulakis(const DegreeSequence& deg, double p,
                                                 Rng& rng, bool build_matching = true) {
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("percolate_fountoulakis: p must lie in [0,1]");
    if (deg.total % 2 != 0)
        throw std::invalid_argument("percolate_fountoulakis: odd half-edge count");
    PercolationOutcome out;
    out.method = PercolationMethod::subset_matching;
    out.p = p;
    const std::int64_t ell = deg.total;
    std::int64_t X = 0;
    if (p >= 1.0) X = ell / 2;
    else if (p > 0.0) {
        std::binomial_distribution<std::int64_t> bin(ell / 2, p);
        X = bin(rng);
    }
    // partial Fisher-Yates: first 2X entries become the retained subset
    std::vector<std::int64_t> ids(static_cast<std::size_t>(ell));
    for (std::int64_t h = 0; h < ell; ++h) ids[static_cast<std::size_t>(h)] = h;
    for (std::int64_t i = 0; i < 2 * X; ++i) {
        const std::int64_t j =
            i + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(ell - i)));
        std::swap(ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(j)]);
    }
    // map half-edge id -> owner in the base sequence
    std::vector<std::int64_t> off(deg.d.size() + 1, 0);
    for (std::size_t v = 0; v < deg.d.size(); ++v) off[v + 1] = off[v] + deg.d[v];
    out.retained_degree.assign(deg.d.size(), 0);
    for (std::int64_t i = 0; i < 2 * X; ++i) {
        const auto h = ids[static_cast<std::size_t>(i)];
        const auto v = static_cast<std::size_t>(
            std::upper_bound(off.begin(), off.end(), h) - off.begin() - 1);
        out.retained_degree[v] += 1;
    }
    out.retained_half_edges = 2 * X;
    if (build_matching) {
        MultiGraph g = detail::skeleton_from_degrees(deg.n(), out.retained_degree);
        detail::uniform_matching(g, rng);
        out.graph = std::move(g);
    }
    return out;
}

// epsilon_n for the sandwich coupling: log(n)/sqrt(l_n p). Vanishes whenever
// l_n p >> (log n)^2 and exceeds the required rate by a factor sqrt(log n).
struct SandwichEpsilon {
    double value = 0.0;
    bool regime_warning = false; // l_n p not >> log n
};

inline SandwichEpsilon sandwich_epsilon(std::int64_t n, std::int64_t ell_n, double p) {
    if (n < 3 || ell_n <= 0 || !(p > 0.0))
        throw std::invalid_argument("sandwich_epsilon: need n >= 3, ell_n > 0, p > 0");
    const double lp = static_cast<double>(ell_n) * p;
    const double ln = std::log(static_cast<double>(n));
    SandwichEpsilon eps;
    eps.value = ln / std::sqrt(lp);
    eps.regime_warning = lp < 10.0 * ln;
    if (eps.value >= 1.0)
        throw std::domain_error("sandwich_epsilon: epsilon >= 1, coupling regime violated");
    return eps;
}

// Diagnostics of the percolated degree sequence against the predictions
// nu_tilde ~ p nu_n, d_tilde_i ~ p d_i, l_tilde ~ p l_n.
struct DegreeDiagnostics {
    bool degenerate = false; // no retained half-edges
    double nu_tilde = 0.0;
    double nu_ratio = 0.0;                 // nu_tilde / (p nu_n)
    std::vector<double> hub_ratios;        // d_tilde_i / (p d_i), i < 10
    double ell_ratio = 0.0;                // l_tilde / (p l_n)
    std::vector<std::pair<std::int64_t, double>> tail; // (K, sum_{i>K} dt(dt-1)/l_tilde)
};

inline DegreeDiagnostics percolated_degree_diagnostics(const PercolationOutcome& out,
                                                       const DegreeSequence& deg,
                                                       double p) {
    DegreeDiagnostics diag;
    if (out.retained_half_edges == 0) {
        diag.degenerate = true;
        return diag;
    }
    diag.nu_tilde = criticality_parameter(out.retained_degree);
    const double nu = criticality_parameter(deg.d);
    if (p > 0.0) diag.nu_ratio = diag.nu_tilde / (p * nu);
    for (std::size_t i = 0; i < std::min<std::size_t>(10, deg.d.size()); ++i)
        if (p > 0.0 && deg.d[i] > 0)
            diag.hub_ratios.push_back(static_cast<double>(out.retained_degree[i]) /
                                      (p * static_cast<double>(deg.d[i])));
    if (p > 0.0)
        diag.ell_ratio = static_cast<double>(out.retained_half_edges) /
                         (p * static_cast<double>(deg.total));
    std::vector<double> suffix(out.retained_degree.size() + 1, 0.0);
    for (std::size_t i = out.retained_degree.size(); i-- > 0;) {
        const auto dt = static_cast<double>(out.retained_degree[i]);
        suffix[i] = suffix[i + 1] + dt * (dt - 1.0);
    }
    for (std::int64_t K : {10, 100, 1000}) {
        if (K >= out.n()) break;
        diag.tail.emplace_back(K, suffix[static_cast<std::size_t>(K)] /
                                      static_cast<double>(out.retained_half_edges));
    }
    return diag;
}

// --- edge-list serialization -------------------------------------------------

// Canonical text form: "n m" header, then one "u v" line per edge with
// u <= v, lines sorted; self-loop printed as "u u". Round-trips bit-exactly.
inline void write_edge_list(std::ostream& os, const MultiGraph& g) {
    auto e = g.edges();
    for (auto& [u, v] : e)
        if (u > v) std::swap(u, v);
    std::sort(e.begin(), e.end());
    os << g.n << " " << e.size() << "\n";
    for (const auto& [u, v] : e) os << u << " " << v << "\n";
}

inline void write_edge_list(const std::string& path, const MultiGraph& g) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    write_edge_list(f, g);
}

inline MultiGraph read_edge_list(std::istream& is) {
    std::int64_t n = 0, m = 0;
    if (!(is >> n >> m)) throw std::runtime_error("edge list: bad header");
    std::vector<std::pair<std::int64_t, std::int64_t>> e(static_cast<std::size_t>(m));
    std::vector<std::int64_t> degree(static_cast<std::size_t>(n), 0);
    for (auto& [u, v] : e) {
        if (!(is >> u >> v)) throw std::runtime_error("edge list: truncated");
        if (u < 0 || v < 0 || u >= n || v >= n)
            throw std::runtime_error("edge list: vertex out of range");
        degree[static_cast<std::size_t>(u)] += 1;
        degree[static_cast<std::size_t>(v)] += 1;
    }
    MultiGraph g = detail::skeleton_from_degrees(n, std::move(degree));
    std::vector<std::int64_t> cursor(g.offset.begin(), g.offset.end() - 1);
    for (const auto& [u, v] : e) {
        const std::int64_t hu = cursor[static_cast<std::size_t>(u)]++;
        const std::int64_t hv = cursor[static_cast<std::size_t>(v)]++;
        g.partner[static_cast<std::size_t>(hu)] = hv;
        g.partner[static_cast<std::size_t>(hv)] = hu;
    }
    return g;
}

inline MultiGraph read_edge_list(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    return read_edge_list(f);
}

} // namespace cmperc
