#ifndef ISPEC_TESTS_ORACLES_HPP
#define ISPEC_TESTS_ORACLES_HPP

// Independent reference implementations used only by the test suite.

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ispec/graph.hpp"
#include "ispec/graph_io.hpp"

namespace oracle {

using ispec::Edge;
using ispec::EndpointMark;
using ispec::GraphKind;
using ispec::MixedGraph;
using ispec::VertexSet;

inline MixedGraph shift_admg() {
    return ispec::parse_graph(
        "vars: E,X1,X2,X3,Y\n"
        "E --> X1\nY --> X2\nX1 --> X2\nX3 --> Y\nY <-> X1\n",
        GraphKind::ADMG);
}

inline MixedGraph shift_admg_observed() {
    return ispec::parse_graph(
        "vars: X1,X2,X3,Y\n"
        "Y --> X2\nX1 --> X2\nX3 --> Y\nY <-> X1\n",
        GraphKind::ADMG);
}

inline MixedGraph shift_pag() {
    return ispec::parse_graph(
        "vars: E,X1,X2,X3,Y\n"
        "E o-> X1\nY --> X2\nX1 --> X2\nX3 o-> Y\nY <-> X1\n");
}

inline std::vector<std::string> names(int n) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back("V" + std::to_string(i));
    return out;
}

// Random ADMG: directed edges follow index order, bidirected edges anywhere.
inline MixedGraph random_admg(std::mt19937_64& rng, int n, double p_dir, double p_bi) {
    std::bernoulli_distribution dir(p_dir), bi(p_bi);
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            if (dir(rng)) edges.push_back(Edge::directed(perm[i], perm[j]));
            if (bi(rng)) edges.push_back(Edge::bidirected(perm[i], perm[j]));
        }
    return MixedGraph(GraphKind::ADMG, names(n), std::move(edges));
}

inline bool is_ancestor(const MixedGraph& g, int a, int b) {
    if (a == b) return true;
    std::vector<char> seen(g.num_vertices(), 0);
    std::vector<int> stack{a};
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        if (v == b) return true;
        if (seen[v]) continue;
        seen[v] = 1;
        for (const Edge& e : g.edges())
            if (e.is_directed() && e.tail() == v) stack.push_back(e.head());
    }
    return false;
}

inline bool in_an_of(const MixedGraph& g, int v, VertexSet z) {
    for (int w : z)
        if (is_ancestor(g, v, w)) return true;
    return false;
}

// Walks every simple path (as an edge sequence, so parallel ADMG edges count
// separately) from x to y and checks the m-connection conditions directly.
inline bool brute_m_connected(const MixedGraph& g, int x, int y, VertexSet z) {
    std::vector<int> path_edges;
    std::vector<int> path_nodes{x};
    std::vector<char> on(g.num_vertices(), 0);
    on[x] = 1;
    std::function<bool(int)> dfs = [&](int v) -> bool {
        for (int id = 0; id < static_cast<int>(g.edges().size()); ++id) {
            const Edge& e = g.edges()[id];
            if (!e.touches(v)) continue;
            const int w = e.other(v);
            if (on[w]) continue;
            path_edges.push_back(id);
            path_nodes.push_back(w);
            on[w] = 1;
            bool ok = false;
            if (w == y) {
                ok = true;
                for (std::size_t k = 1; k + 1 < path_nodes.size(); ++k) {
                    const int m = path_nodes[k];
                    const bool coll = g.edges()[path_edges[k - 1]].mark_at(m) == EndpointMark::Arrow &&
                                      g.edges()[path_edges[k]].mark_at(m) == EndpointMark::Arrow;
                    if (coll ? !in_an_of(g, m, z) : z.contains(m)) {
                        ok = false;
                        break;
                    }
                }
            } else {
                ok = dfs(w);
            }
            on[w] = 0;
            path_nodes.pop_back();
            path_edges.pop_back();
            if (ok) return true;
        }
        return false;
    };
    return dfs(x);
}

// Definite-status check by enumerating every simple path of a PAG. Colliders
// need a directed path to z; definite non-colliders must avoid z.
inline bool brute_definite_connected(const MixedGraph& g, int x, int y, VertexSet z) {
    std::vector<int> nodes{x};
    std::vector<char> on(g.num_vertices(), 0);
    on[x] = 1;
    std::function<bool(int)> dfs = [&](int v) -> bool {
        for (int w = 0; w < g.num_vertices(); ++w) {
            if (on[w] || !g.adjacent(v, w)) continue;
            nodes.push_back(w);
            on[w] = 1;
            bool ok = false;
            if (w == y) {
                ok = true;
                for (std::size_t k = 1; k + 1 < nodes.size(); ++k) {
                    const int a = nodes[k - 1], m = nodes[k], b = nodes[k + 1];
                    const EndpointMark m1 = *g.mark(a, m), m2 = *g.mark(b, m);
                    const bool coll = m1 == EndpointMark::Arrow && m2 == EndpointMark::Arrow;
                    const bool ncoll = m1 == EndpointMark::Tail || m2 == EndpointMark::Tail ||
                                       (m1 == EndpointMark::Circle && m2 == EndpointMark::Circle && !g.adjacent(a, b));
                    if (coll) {
                        if (!in_an_of(g, m, z)) ok = false;
                    } else if (ncoll) {
                        if (z.contains(m)) ok = false;
                    } else {
                        ok = false;
                    }
                    if (!ok) break;
                }
            } else {
                ok = dfs(w);
            }
            on[w] = 0;
            nodes.pop_back();
            if (ok) return true;
        }
        return false;
    };
    return dfs(x);
}

// The MAG of an ADMG over `keep`: u,v adjacent iff no subset of the other
// kept vertices m-separates them; the mark at b is a tail iff b is an
// ancestor of a.
inline MixedGraph truth_mag(const MixedGraph& g, VertexSet keep) {
    std::vector<Edge> edges;
    std::vector<int> ks = keep.to_vector();
    std::vector<std::string> nm;
    for (int v : ks) nm.push_back(g.name(v));
    for (std::size_t i = 0; i < ks.size(); ++i)
        for (std::size_t j = i + 1; j < ks.size(); ++j) {
            const int a = ks[i], b = ks[j];
            const VertexSet rest = keep - VertexSet{a, b};
            bool separable = false;
            for (int k = 0; k <= rest.size() && !separable; ++k)
                ispec::for_each_subset_of_size(rest, k, [&](VertexSet s) {
                    if (!brute_m_connected(g, a, b, s)) separable = true;
                    return separable;
                });
            if (separable) continue;
            const bool a_anc_b = is_ancestor(g, a, b);
            const bool b_anc_a = is_ancestor(g, b, a);
            const int ia = static_cast<int>(i), ib = static_cast<int>(j);
            if (a_anc_b) edges.push_back(Edge::directed(ia, ib));
            else if (b_anc_a) edges.push_back(Edge::directed(ib, ia));
            else edges.push_back(Edge::bidirected(ia, ib));
        }
    return MixedGraph(GraphKind::MAG, nm, std::move(edges));
}

}  // namespace oracle

#endif  // ISPEC_TESTS_ORACLES_HPP
