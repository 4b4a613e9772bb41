#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "graph.hpp"
#include "rng.hpp"

namespace cmperc {

struct ExplorationStep {
    std::int64_t walk;     // S_n(l) after the step
    std::int64_t vertex;   // discovered vertex, or -1
    bool new_vertex;       // J_l
    bool surplus;          // a surplus edge closed at this step
};

// Record of the breadth-first exploration walk S_n(l) = S_n(l-1) + d_(l) J_l - 2.
// tau[k-1] is the first l with S_n(l) = -2k; component k occupies steps
// (tau[k-1], tau[k]] and has tau[k]-tau[k-1]-1 edges.
struct ExplorationTrace {
    std::int64_t n = 0;
    std::int64_t retained_half_edges = 0;
    std::vector<ExplorationStep> steps;  // steps[l-1] holds step l; S_n(0) = 0
    std::vector<std::int64_t> tau;
    std::vector<std::int64_t> surplus_times;
    std::vector<std::pair<std::int64_t, std::int64_t>> edges; // realized pairings
    std::vector<std::int64_t> pairing; // realized half-edge involution
    std::int64_t zero_degree_vertices = 0;
    bool complete = false;

    std::int64_t length() const { return static_cast<std::int64_t>(steps.size()); }
    std::int64_t walk(std::int64_t l) const {
        if (l <= 0) return 0;
        return steps[static_cast<std::size_t>(l - 1)].walk;
    }
};

// Breadth-first exploration of a percolated configuration model. When the
// outcome carries a realized matching, pairings are looked up; otherwise the
// partner of each half-edge is drawn uniformly among the currently alive
// half-edges, generating the graph and its exploration simultaneously (the
// two modes give the same joint law).
inline ExplorationTrace explore(const PercolationOutcome& outcome, Rng& rng) {
    if (outcome.retained_half_edges % 2 != 0)
        throw std::invalid_argument("explore: odd number of retained half-edges");
    const std::int64_t n = outcome.n();
    const auto& deg = outcome.retained_degree;

    ExplorationTrace trace;
    trace.n = n;
    trace.retained_half_edges = outcome.retained_half_edges;
    trace.steps.reserve(static_cast<std::size_t>(outcome.retained_half_edges / 2 + 16));

    std::vector<std::int64_t> offset(static_cast<std::size_t>(n) + 1, 0);
    for (std::int64_t v = 0; v < n; ++v) {
        offset[static_cast<std::size_t>(v) + 1] =
            offset[static_cast<std::size_t>(v)] + deg[static_cast<std::size_t>(v)];
        if (deg[static_cast<std::size_t>(v)] == 0) ++trace.zero_degree_vertices;
    }
    const std::int64_t ell = offset.back();

    std::vector<std::int64_t> owner(static_cast<std::size_t>(ell));
    for (std::int64_t v = 0; v < n; ++v)
        for (std::int64_t h = offset[static_cast<std::size_t>(v)];
             h < offset[static_cast<std::size_t>(v) + 1]; ++h)
            owner[static_cast<std::size_t>(h)] = v;

    trace.pairing.assign(static_cast<std::size_t>(ell), -1);

    // alive pool with swap-delete; pos[h] = -1 marks a killed half-edge
    std::vector<std::int64_t> alive(static_cast<std::size_t>(ell));
    std::vector<std::int64_t> pos(static_cast<std::size_t>(ell));
    for (std::int64_t h = 0; h < ell; ++h) {
        alive[static_cast<std::size_t>(h)] = h;
        pos[static_cast<std::size_t>(h)] = h;
    }
    auto kill = [&](std::int64_t h) {
        const std::int64_t at = pos[static_cast<std::size_t>(h)];
        const std::int64_t last = alive.back();
        alive[static_cast<std::size_t>(at)] = last;
        pos[static_cast<std::size_t>(last)] = at;
        alive.pop_back();
        pos[static_cast<std::size_t>(h)] = -1;
    };

    const MultiGraph* g = outcome.graph ? &*outcome.graph : nullptr;

    std::vector<char> discovered(static_cast<std::size_t>(n), 0);
    std::vector<std::int64_t> cursor(static_cast<std::size_t>(n), 0);
    std::vector<std::int64_t> fifo; // discovered vertices in BFS order; head indexes it
    fifo.reserve(1024);
    std::size_t head = 0;

    auto discover = [&](std::int64_t v) {
        discovered[static_cast<std::size_t>(v)] = 1;
        cursor[static_cast<std::size_t>(v)] = offset[static_cast<std::size_t>(v)];
        fifo.push_back(v);
    };

    std::int64_t S = 0;
    auto push_step = [&](std::int64_t v, bool newv, bool surplus) {
        trace.steps.push_back(ExplorationStep{S, v, newv, surplus});
        if (surplus) trace.surplus_times.push_back(trace.length());
        const auto k = static_cast<std::int64_t>(trace.tau.size()) + 1;
        if (S == -2 * k) trace.tau.push_back(trace.length());
    };

    while (!alive.empty()) {
        // skip vertices whose half-edges are all killed
        while (head < fifo.size()) {
            std::int64_t v = fifo[head];
            std::int64_t& c = cursor[static_cast<std::size_t>(v)];
            while (c < offset[static_cast<std::size_t>(v) + 1] &&
                   pos[static_cast<std::size_t>(c)] < 0)
                ++c;
            if (c < offset[static_cast<std::size_t>(v) + 1]) break;
            ++head;
        }
        if (head == fifo.size()) {
            // start a new component: vertex chosen proportional to its degree,
            // realized by taking the owner of a uniform alive half-edge
            const std::int64_t h =
                alive[static_cast<std::size_t>(rng.below(alive.size()))];
            const std::int64_t v = owner[static_cast<std::size_t>(h)];
            discover(v);
            S += deg[static_cast<std::size_t>(v)] - 2;
            push_step(v, true, false);
            continue;
        }
        // pair one half-edge of the exploring vertex
        const std::int64_t v = fifo[head];
        const std::int64_t e = cursor[static_cast<std::size_t>(v)];
        kill(e);
        std::int64_t f;
        if (g) {
            f = g->partner[static_cast<std::size_t>(e)];
        } else {
            f = alive[static_cast<std::size_t>(rng.below(alive.size()))];
        }
        kill(f);
        trace.pairing[static_cast<std::size_t>(e)] = f;
        trace.pairing[static_cast<std::size_t>(f)] = e;
        const std::int64_t u = owner[static_cast<std::size_t>(f)];
        trace.edges.emplace_back(v, u);
        if (!discovered[static_cast<std::size_t>(u)]) {
            discover(u);
            S += deg[static_cast<std::size_t>(u)] - 2;
            push_step(u, true, false);
        } else {
            S -= 2;
            push_step(-1, false, true);
        }
    }
    trace.complete = true;
    return trace;
}

// Per-component statistics. Isolated (degree-zero) vertices have size 0 by
// convention; diameter is filled separately.
struct ComponentRecord {
    std::int64_t size = 0;
    std::int64_t edges = 0;
    std::int64_t surplus = 0;
    int diameter = -1; // -1: not computed
    bool diameter_exact = false;
    std::uint16_t hub_mask = 0; // original vertices 0..9 present
    std::int64_t rep_vertex = -1;
};

inline std::vector<int> hubs_in(const ComponentRecord& rec) {
    std::vector<int> out;
    for (int i = 0; i < 10; ++i)
        if (rec.hub_mask & (1u << i)) out.push_back(i);
    return out;
}

inline std::vector<ComponentRecord> components_from_trace(
    const ExplorationTrace& trace, const PercolationOutcome& outcome,
    bool include_isolated = true) {
    if (!trace.complete)
        throw std::invalid_argument("components_from_trace: incomplete trace");
    std::vector<ComponentRecord> out;
    out.reserve(trace.tau.size());
    std::int64_t prev = 0;
    for (std::int64_t t : trace.tau) {
        ComponentRecord rec;
        rec.edges = t - prev - 1;
        for (std::int64_t l = prev + 1; l <= t; ++l) {
            const auto& st = trace.steps[static_cast<std::size_t>(l - 1)];
            if (st.new_vertex) {
                rec.size += 1;
                if (rec.rep_vertex < 0) rec.rep_vertex = st.vertex;
                if (st.vertex < 10)
                    rec.hub_mask |= static_cast<std::uint16_t>(1u << st.vertex);
            }
        }
        rec.surplus = rec.edges - rec.size + 1;
        out.push_back(rec);
        prev = t;
    }
    if (include_isolated) {
        for (std::int64_t v = 0; v < outcome.n(); ++v) {
            if (outcome.retained_degree[static_cast<std::size_t>(v)] == 0) {
                ComponentRecord rec;
                rec.rep_vertex = v;
                if (v < 10) rec.hub_mask = static_cast<std::uint16_t>(1u << v);
                out.push_back(rec);
            }
        }
    }
    return out;
}

// vertices of the k-th explored component (0-based k)
inline std::vector<std::int64_t> component_vertices(const ExplorationTrace& trace,
                                                    std::size_t k) {
    if (k >= trace.tau.size())
        throw std::out_of_range("component_vertices: no such component");
    const std::int64_t lo = k == 0 ? 0 : trace.tau[k - 1];
    std::vector<std::int64_t> v;
    for (std::int64_t l = lo + 1; l <= trace.tau[k]; ++l) {
        const auto& st = trace.steps[static_cast<std::size_t>(l - 1)];
        if (st.new_vertex) v.push_back(st.vertex);
    }
    return v;
}

// --- diameters ---------------------------------------------------------------

struct Adjacency {
    std::int64_t n = 0;
    std::vector<std::int64_t> offset;
    std::vector<std::int64_t> nbr;
};

// Self-loops are dropped: they never change graph distances.
inline Adjacency build_adjacency(std::int64_t n,
                                 const std::vector<std::pair<std::int64_t, std::int64_t>>& edges) {
    Adjacency a;
    a.n = n;
    a.offset.assign(static_cast<std::size_t>(n) + 1, 0);
    for (const auto& [u, v] : edges) {
        if (u == v) continue;
        a.offset[static_cast<std::size_t>(u) + 1] += 1;
        a.offset[static_cast<std::size_t>(v) + 1] += 1;
    }
    for (std::int64_t i = 0; i < n; ++i)
        a.offset[static_cast<std::size_t>(i) + 1] += a.offset[static_cast<std::size_t>(i)];
    a.nbr.resize(static_cast<std::size_t>(a.offset.back()));
    std::vector<std::int64_t> cur(a.offset.begin(), a.offset.end() - 1);
    for (const auto& [u, v] : edges) {
        if (u == v) continue;
        a.nbr[static_cast<std::size_t>(cur[static_cast<std::size_t>(u)]++)] = v;
        a.nbr[static_cast<std::size_t>(cur[static_cast<std::size_t>(v)]++)] = u;
    }
    return a;
}

// Reusable scratch space: dist is stamped so it never needs clearing.
struct BfsWorkspace {
    std::vector<std::int32_t> stamp;
    std::vector<std::int32_t> dist;
    std::vector<std::int64_t> fifo;
    std::int32_t clock = 0;

    void ensure(std::int64_t n) {
        if (static_cast<std::int64_t>(stamp.size()) < n) {
            stamp.assign(static_cast<std::size_t>(n), 0);
            dist.resize(static_cast<std::size_t>(n));
            clock = 0;
        }
    }
};

namespace detail {

// BFS from src; returns (farthest vertex, eccentricity)
inline std::pair<std::int64_t, int> bfs_ecc(const Adjacency& a, std::int64_t src,
                                            BfsWorkspace& ws) {
    ws.ensure(a.n);
    ++ws.clock;
    ws.fifo.clear();
    ws.fifo.push_back(src);
    ws.stamp[static_cast<std::size_t>(src)] = ws.clock;
    ws.dist[static_cast<std::size_t>(src)] = 0;
    std::size_t qh = 0;
    std::int64_t far = src;
    int ecc = 0;
    while (qh < ws.fifo.size()) {
        const std::int64_t x = ws.fifo[qh++];
        const int dx = ws.dist[static_cast<std::size_t>(x)];
        for (std::int64_t i = a.offset[static_cast<std::size_t>(x)];
             i < a.offset[static_cast<std::size_t>(x) + 1]; ++i) {
            const std::int64_t y = a.nbr[static_cast<std::size_t>(i)];
            if (ws.stamp[static_cast<std::size_t>(y)] == ws.clock) continue;
            ws.stamp[static_cast<std::size_t>(y)] = ws.clock;
            ws.dist[static_cast<std::size_t>(y)] = dx + 1;
            if (dx + 1 > ecc) {
                ecc = dx + 1;
                far = y;
            }
            ws.fifo.push_back(y);
        }
    }
    return {far, ecc};
}

} // namespace detail

inline constexpr std::int64_t kExactDiameterLimit = 10000;

// Exact eccentricity maximum via BFS from every vertex for components of at
// most kExactDiameterLimit vertices; double-sweep lower bound otherwise.
inline std::pair<int, bool> diameter(const Adjacency& adj,
                                     const std::vector<std::int64_t>& component,
                                     BfsWorkspace& ws) {
    if (component.empty()) return {0, true};
    if (static_cast<std::int64_t>(component.size()) <= kExactDiameterLimit) {
        int best = 0;
        for (std::int64_t v : component)
            best = std::max(best, detail::bfs_ecc(adj, v, ws).second);
        return {best, true};
    }
    auto [far, ecc1] = detail::bfs_ecc(adj, component.front(), ws);
    auto [far2, ecc2] = detail::bfs_ecc(adj, far, ws);
    (void)far2;
    return {std::max(ecc1, ecc2), false};
}

inline std::pair<int, bool> diameter(const Adjacency& adj,
                                     const std::vector<std::int64_t>& component) {
    BfsWorkspace ws;
    return diameter(adj, component, ws);
}

// max over all explored components; fills nothing in
inline std::pair<int, bool> max_diameter(const ExplorationTrace& trace) {
    Adjacency adj = build_adjacency(trace.n, trace.edges);
    BfsWorkspace ws;
    int best = 0;
    bool exact = true;
    for (std::size_t k = 0; k < trace.tau.size(); ++k) {
        auto verts = component_vertices(trace, k);
        auto [d, ex] = diameter(adj, verts, ws);
        best = std::max(best, d);
        exact = exact && ex;
    }
    return {best, exact};
}

// --- rescaled objects ---------------------------------------------------------

struct ZEntry {
    double x;        // n^-rho * size
    std::int64_t y;  // surplus
};

// Element of U^0_down: x non-increasing, ties broken by y non-increasing.
struct ZVector {
    std::vector<ZEntry> entries;
};

inline ZVector z_vector(const std::vector<ComponentRecord>& records, std::int64_t n,
                        double rho) {
    const double scale = std::pow(static_cast<double>(n), -rho);
    ZVector z;
    for (const auto& r : records)
        if (r.size >= 1)
            z.entries.push_back(ZEntry{scale * static_cast<double>(r.size), r.surplus});
    std::sort(z.entries.begin(), z.entries.end(), [](const ZEntry& a, const ZEntry& b) {
        if (a.x != b.x) return a.x > b.x;
        return a.y > b.y;
    });
    return z;
}

inline double d_U(const ZVector& a, const ZVector& b) {
    const std::size_t m = std::max(a.entries.size(), b.entries.size());
    double sq = 0.0, prod = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double xa = i < a.entries.size() ? a.entries[i].x : 0.0;
        const double xb = i < b.entries.size() ? b.entries[i].x : 0.0;
        const double ya = i < a.entries.size() ? static_cast<double>(a.entries[i].y) : 0.0;
        const double yb = i < b.entries.size() ? static_cast<double>(b.entries[i].y) : 0.0;
        sq += (xa - xb) * (xa - xb);
        prod += std::abs(xa * ya - xb * yb);
    }
    return std::sqrt(sq) + prod;
}

struct SampledPath {
    std::vector<double> values;
    bool truncated = false;
};

// S-bar_n(t) = n^-rho S_n(floor(t n^rho)) on a caller-supplied grid.
inline SampledPath rescaled_walk(const ExplorationTrace& trace, std::int64_t n,
                                 double rho, const std::vector<double>& grid) {
    if (trace.steps.empty())
        throw std::invalid_argument("rescaled_walk: empty trace");
    const double np = std::pow(static_cast<double>(n), rho);
    SampledPath out;
    out.values.reserve(grid.size());
    for (double t : grid) {
        const auto l = static_cast<std::int64_t>(std::floor(t * np));
        if (l > trace.length()) {
            out.truncated = true;
            break;
        }
        out.values.push_back(static_cast<double>(trace.walk(l)) / np);
    }
    return out;
}

struct SurplusPath {
    std::vector<std::int64_t> counts;
    std::int64_t total = 0;
    bool truncated = false;
};

// N-bar_n(u) = number of surplus edges discovered up to step floor(u n^rho).
inline SurplusPath surplus_process(const ExplorationTrace& trace, std::int64_t n,
                                   double rho, const std::vector<double>& grid) {
    const double np = std::pow(static_cast<double>(n), rho);
    SurplusPath out;
    out.total = static_cast<std::int64_t>(trace.surplus_times.size());
    out.counts.reserve(grid.size());
    for (double u : grid) {
        const auto l = static_cast<std::int64_t>(std::floor(u * np));
        if (l > trace.length()) {
            out.truncated = true;
            break;
        }
        const auto c = std::upper_bound(trace.surplus_times.begin(),
                                        trace.surplus_times.end(), l) -
                       trace.surplus_times.begin();
        out.counts.push_back(static_cast<std::int64_t>(c));
    }
    return out;
}

// --- trace / component CSV export ---------------------------------------------

inline void write_trace_csv(std::ostream& os, const ExplorationTrace& trace) {
    os << "step,S,J,vertex,surplus_flag\n";
    os << "0,0,,,\n";
    for (std::int64_t l = 1; l <= trace.length(); ++l) {
        const auto& st = trace.steps[static_cast<std::size_t>(l - 1)];
        os << l << "," << st.walk << "," << (st.new_vertex ? 1 : 0) << ",";
        if (st.vertex >= 0) os << st.vertex;
        os << "," << (st.surplus ? 1 : 0) << "\n";
    }
}

inline void write_components_csv(std::ostream& os,
                                 const std::vector<ComponentRecord>& recs) {
    os << "size,edges,surplus,diameter,exact_flag,hub_list\n";
    for (const auto& r : recs) {
        os << r.size << "," << r.edges << "," << r.surplus << ",";
        if (r.diameter >= 0) os << r.diameter;
        os << "," << (r.diameter_exact ? 1 : 0) << ",";
        auto hubs = hubs_in(r);
        for (std::size_t i = 0; i < hubs.size(); ++i)
            os << (i ? ";" : "") << hubs[i] + 1;
        os << "\n";
    }
}

} // namespace cmperc
