#ifndef ISPEC_GRAPH_OPS_HPP
#define ISPEC_GRAPH_OPS_HPP

#include <algorithm>
#include <functional>
#include <numeric>
#include <utility>
#include <vector>

#include "ispec/graph.hpp"

namespace ispec {

// ---------------------------------------------------------------------------
// Ancestry
// ---------------------------------------------------------------------------

// Edge e (touching both u and v) is possibly directed from u to v: it is not
// into u and not out of v.
inline bool possibly_directed(const Edge& e, int u, int v) {
    return e.mark_at(u) != EndpointMark::Arrow && e.mark_at(v) != EndpointMark::Tail;
}

// Vertices with a possibly directed path into `target` inside `scope`.
// Reflexive: every member of target is its own possible ancestor.
inline VertexSet possible_ancestors(const MixedGraph& g, VertexSet target, VertexSet scope) {
    if (!target.subset_of(g.all_vertices())) throw InputError("possible_ancestors: unknown vertex");
    VertexSet result = target & scope;
    std::vector<int> stack = result.to_vector();
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int id : g.incident(v)) {
            const Edge& e = g.edge(id);
            const int w = e.other(v);
            if (!scope.contains(w) || result.contains(w)) continue;
            if (possibly_directed(e, w, v)) {
                result.insert(w);
                stack.push_back(w);
            }
        }
    }
    return result;
}

inline VertexSet possible_ancestors(const MixedGraph& g, VertexSet target) {
    return possible_ancestors(g, target, g.all_vertices());
}

// Ancestors through directed edges only (reflexive).
inline VertexSet ancestors(const MixedGraph& g, VertexSet target, VertexSet scope) {
    VertexSet result = target & scope;
    std::vector<int> stack = result.to_vector();
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int id : g.incident(v)) {
            const Edge& e = g.edge(id);
            const int w = e.other(v);
            if (!scope.contains(w) || result.contains(w)) continue;
            if (e.is_directed() && e.tail() == w) {
                result.insert(w);
                stack.push_back(w);
            }
        }
    }
    return result;
}

inline VertexSet ancestors(const MixedGraph& g, VertexSet target) {
    return ancestors(g, target, g.all_vertices());
}

// Pa+ / Pa* / Ch+ / Ch* relative to `scope`, each including the seed set.
// The starred variants ignore neighbours connected through o-o edges.
inline VertexSet possible_parents(const MixedGraph& g, VertexSet s, VertexSet scope, bool include_circle_edges) {
    VertexSet out = s;
    for (int v : s) {
        for (int id : g.incident(v)) {
            const Edge& e = g.edge(id);
            const int w = e.other(v);
            if (!scope.contains(w)) continue;
            if (!include_circle_edges && e.is_circle_circle()) continue;
            if (possibly_directed(e, w, v)) out.insert(w);
        }
    }
    return out;
}

inline VertexSet possible_children(const MixedGraph& g, VertexSet s, VertexSet scope, bool include_circle_edges) {
    VertexSet out = s;
    for (int v : s) {
        for (int id : g.incident(v)) {
            const Edge& e = g.edge(id);
            const int w = e.other(v);
            if (!scope.contains(w)) continue;
            if (!include_circle_edges && e.is_circle_circle()) continue;
            if (possibly_directed(e, v, w)) out.insert(w);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// m-separation (ADMG / MAG)
// ---------------------------------------------------------------------------

// Reachability over (vertex, arrived-with-arrowhead) states. A vertex passed
// as a collider must be an ancestor of z; any other intermediate vertex must
// lie outside z.
inline VertexSet m_reachable(const MixedGraph& g, int x, VertexSet z) {
    const int n = g.num_vertices();
    const VertexSet anz = ancestors(g, z);
    std::vector<char> seen(2 * static_cast<std::size_t>(n), 0);
    std::vector<std::pair<int, bool>> stack;
    VertexSet reached;
    for (int id : g.incident(x)) {
        const Edge& e = g.edge(id);
        const int w = e.other(x);
        const bool arrow = e.mark_at(w) == EndpointMark::Arrow;
        if (!seen[2 * w + arrow]) {
            seen[2 * w + arrow] = 1;
            stack.emplace_back(w, arrow);
        }
    }
    while (!stack.empty()) {
        auto [v, in_arrow] = stack.back();
        stack.pop_back();
        reached.insert(v);
        if (v == x) continue;
        for (int id : g.incident(v)) {
            const Edge& e = g.edge(id);
            const bool out_arrow = e.mark_at(v) == EndpointMark::Arrow;
            const bool collider = in_arrow && out_arrow;
            if (collider ? !anz.contains(v) : z.contains(v)) continue;
            const int w = e.other(v);
            const bool arrow = e.mark_at(w) == EndpointMark::Arrow;
            if (!seen[2 * w + arrow]) {
                seen[2 * w + arrow] = 1;
                stack.emplace_back(w, arrow);
            }
        }
    }
    return reached;
}

inline bool m_connected(const MixedGraph& g, int x, int y, VertexSet z) {
    if (g.kind() == GraphKind::PAG) throw InputError("m_connected expects an ADMG or MAG");
    if (x == y) throw InputError("m_connected: endpoints must differ");
    if (z.contains(x) || z.contains(y)) throw InputError("m_connected: endpoints must not be conditioned on");
    return m_reachable(g, x, z).contains(y);
}

// True when every x in xs is m-separated from every y in ys given z.
inline bool m_separated(const MixedGraph& g, VertexSet xs, VertexSet ys, VertexSet z) {
    for (int x : xs) {
        const VertexSet r = m_reachable(g, x, z);
        if (r.intersects(ys - VertexSet::single(x))) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Definite-status paths (PAG)
// ---------------------------------------------------------------------------

struct PathStep {
    int vertex;
    int edge;  // edge used to reach `vertex`
};

// Enumerates simple definite-status m-connecting paths from x to any member of
// `targets` given z. The callback receives the full path (first entry is x
// with edge -1) and returns true to stop. A definite non-collider has a tail
// on one of its path edges, or circles on both with non-adjacent neighbours;
// colliders must be ancestors of z.
template <typename Fn>
void for_each_definite_connecting_path(const MixedGraph& g, int x, VertexSet targets, VertexSet z, Fn&& fn) {
    const VertexSet anz = ancestors(g, z);
    std::vector<PathStep> path{{x, -1}};
    VertexSet on_path = VertexSet::single(x);
    bool stop = false;

    std::function<void()> extend = [&]() {
        const PathStep cur = path.back();
        for (int id : g.incident(cur.vertex)) {
            if (stop) return;
            const Edge& e = g.edge(id);
            const int w = e.other(cur.vertex);
            if (on_path.contains(w)) continue;
            if (cur.edge >= 0) {
                const Edge& in = g.edge(cur.edge);
                const EndpointMark m_in = in.mark_at(cur.vertex);
                const EndpointMark m_out = e.mark_at(cur.vertex);
                const int prev = path[path.size() - 2].vertex;
                const bool collider = m_in == EndpointMark::Arrow && m_out == EndpointMark::Arrow;
                const bool noncollider = m_in == EndpointMark::Tail || m_out == EndpointMark::Tail ||
                                         (m_in == EndpointMark::Circle && m_out == EndpointMark::Circle &&
                                          !g.adjacent(prev, w));
                if (collider) {
                    if (!anz.contains(cur.vertex)) continue;
                } else if (noncollider) {
                    if (z.contains(cur.vertex)) continue;
                } else {
                    continue;
                }
            }
            path.push_back({w, id});
            on_path.insert(w);
            if (targets.contains(w) && fn(std::as_const(path))) {
                stop = true;
            } else {
                extend();
            }
            on_path.erase(w);
            path.pop_back();
        }
    };
    extend();
}

inline bool definite_m_separated(const MixedGraph& g, VertexSet xs, VertexSet ys, VertexSet z) {
    if (xs.intersects(ys) || xs.intersects(z) || ys.intersects(z))
        throw InputError("definite_m_separated: sets must be pairwise disjoint");
    for (int x : xs) {
        bool found = false;
        for_each_definite_connecting_path(g, x, ys, z, [&](const std::vector<PathStep>&) {
            found = true;
            return true;
        });
        if (found) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Visibility
// ---------------------------------------------------------------------------

// A directed edge X -> Y is visible when some Z not adjacent to Y is either
// into X, or reaches X through a collider path into X whose inner vertices
// are all parents of Y.
inline bool is_visible(const MixedGraph& g, int edge_id) {
    const Edge& e = g.edge(edge_id);
    if (!e.is_directed()) return false;
    const int x = e.tail();
    const int y = e.head();
    auto parent_of_y = [&](int w) { return g.has_directed(w, y); };

    VertexSet visited = VertexSet::single(x);
    std::vector<int> frontier{x};
    while (!frontier.empty()) {
        const int v = frontier.back();
        frontier.pop_back();
        for (int id : g.incident(v)) {
            const Edge& f = g.edge(id);
            const int w = f.other(v);
            if (w == y || visited.contains(w)) continue;
            if (f.mark_at(v) != EndpointMark::Arrow) continue;
            if (!g.adjacent(w, y)) return true;
            // w can only extend the collider path when it is itself a collider
            // (arrowhead at w towards v) and a parent of y.
            if (f.mark_at(w) == EndpointMark::Arrow && parent_of_y(w)) {
                visited.insert(w);
                frontier.push_back(w);
            }
        }
    }
    return false;
}

inline std::vector<int> visible_edges(const MixedGraph& g) {
    if (g.kind() == GraphKind::ADMG) throw InputError("visible_edges expects a MAG or PAG");
    std::vector<int> out;
    for (int id = 0; id < static_cast<int>(g.edges().size()); ++id)
        if (is_visible(g, id)) out.push_back(id);
    return out;
}

// Per-edge visibility flags, indexed by edge id.
inline std::vector<char> visibility_flags(const MixedGraph& g) {
    std::vector<char> flags(g.edges().size(), 0);
    for (int id = 0; id < static_cast<int>(g.edges().size()); ++id) flags[id] = is_visible(g, id);
    return flags;
}

// ---------------------------------------------------------------------------
// Buckets, components, regions
// ---------------------------------------------------------------------------

inline bool name_less(const MixedGraph& g, int a, int b) { return g.name(a) < g.name(b); }

inline int min_by_name(const MixedGraph& g, VertexSet s) {
    int best = s.front();
    for (int v : s)
        if (name_less(g, v, best)) best = v;
    return best;
}

// Partition of `scope` into closures under o-o edges, sorted by smallest name.
inline std::vector<VertexSet> buckets(const MixedGraph& g, VertexSet scope) {
    std::vector<VertexSet> out;
    VertexSet done;
    for (int v : scope) {
        if (done.contains(v)) continue;
        VertexSet block = VertexSet::single(v);
        std::vector<int> stack{v};
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int id : g.incident(u)) {
                const Edge& e = g.edge(id);
                const int w = e.other(u);
                if (!e.is_circle_circle() || !scope.contains(w) || block.contains(w)) continue;
                block.insert(w);
                stack.push_back(w);
            }
        }
        done |= block;
        out.push_back(block);
    }
    std::sort(out.begin(), out.end(), [&](VertexSet a, VertexSet b) {
        return g.name(min_by_name(g, a)) < g.name(min_by_name(g, b));
    });
    return out;
}

inline std::vector<VertexSet> buckets(const MixedGraph& g) { return buckets(g, g.all_vertices()); }

// Vertices joined to `seed` inside `scope` by paths whose inner vertices are
// colliders and whose edges are all invisible. Visibility is judged in the
// full graph `g`, not in the induced subgraph.
inline VertexSet pc_component(const MixedGraph& g, VertexSet seed, VertexSet scope, const std::vector<char>& visible) {
    const int n = g.num_vertices();
    VertexSet result = seed;
    std::vector<char> seen(2 * static_cast<std::size_t>(n), 0);
    std::vector<std::pair<int, bool>> stack;
    auto push_from = [&](int v, bool must_be_collider, bool in_arrow) {
        for (int id : g.incident(v)) {
            const Edge& e = g.edge(id);
            const int w = e.other(v);
            if (!scope.contains(w) || visible[id]) continue;
            if (must_be_collider && !(in_arrow && e.mark_at(v) == EndpointMark::Arrow)) continue;
            const bool arrow = e.mark_at(w) == EndpointMark::Arrow;
            if (!seen[2 * w + arrow]) {
                seen[2 * w + arrow] = 1;
                stack.emplace_back(w, arrow);
            }
        }
    };
    for (int s : seed) push_from(s, false, false);
    while (!stack.empty()) {
        auto [v, in_arrow] = stack.back();
        stack.pop_back();
        result.insert(v);
        push_from(v, true, in_arrow);
    }
    return result;
}

inline VertexSet pc_component(const MixedGraph& g, VertexSet seed, VertexSet scope) {
    return pc_component(g, seed, scope, visibility_flags(g));
}

inline VertexSet pc_component(const MixedGraph& g, VertexSet seed) {
    return pc_component(g, seed, g.all_vertices());
}

// Closure of `seed` under bidirected edges inside `scope`.
inline VertexSet definite_c_component(const MixedGraph& g, VertexSet seed, VertexSet scope) {
    VertexSet result = seed;
    std::vector<int> stack = seed.to_vector();
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int id : g.incident(v)) {
            const Edge& e = g.edge(id);
            const int w = e.other(v);
            if (!e.is_bidirected() || !scope.contains(w) || result.contains(w)) continue;
            result.insert(w);
            stack.push_back(w);
        }
    }
    return result;
}

inline VertexSet definite_c_component(const MixedGraph& g, VertexSet seed) {
    return definite_c_component(g, seed, g.all_vertices());
}

// Union of the buckets of the induced subgraph on c that meet the
// pc-component of a within that subgraph.
inline VertexSet region(const MixedGraph& g, VertexSet a, VertexSet c, const std::vector<char>& visible) {
    if (!a.subset_of(c)) throw InputError("region: a must be a subset of c");
    const VertexSet pc = pc_component(g, a, c, visible);
    VertexSet out;
    for (VertexSet b : buckets(g, c))
        if (b.intersects(pc)) out |= b;
    return out;
}

inline VertexSet region(const MixedGraph& g, VertexSet a, VertexSet c) {
    return region(g, a, c, visibility_flags(g));
}

// Buckets of the induced subgraph on `scope`, in layers: each round emits
// every bucket with no remaining possible-parent bucket, sorted by name.
inline std::vector<VertexSet> bucket_partial_order(const MixedGraph& g, VertexSet scope) {
    if (!scope.subset_of(g.all_vertices())) throw InputError("bucket_partial_order: unknown vertex");
    std::vector<VertexSet> bs = buckets(g, scope);
    const int m = static_cast<int>(bs.size());
    std::vector<int> owner(g.num_vertices(), -1);
    for (int i = 0; i < m; ++i)
        for (int v : bs[i]) owner[v] = i;
    std::vector<std::vector<char>> before(m, std::vector<char>(m, 0));
    std::vector<int> indeg(m, 0);
    for (const Edge& e : g.edges()) {
        if (!scope.contains(e.a) || !scope.contains(e.b)) continue;
        const int ba = owner[e.a], bb = owner[e.b];
        if (ba == bb) continue;
        auto link = [&](int from, int to) {
            if (!before[from][to]) {
                before[from][to] = 1;
                ++indeg[to];
            }
        };
        if (possibly_directed(e, e.a, e.b)) link(ba, bb);
        if (possibly_directed(e, e.b, e.a)) link(bb, ba);
    }
    std::vector<VertexSet> order;
    std::vector<char> placed(m, 0);
    while (static_cast<int>(order.size()) < m) {
        std::vector<int> layer;
        for (int i = 0; i < m; ++i)
            if (!placed[i] && indeg[i] == 0) layer.push_back(i);
        if (layer.empty()) throw InternalError("bucket_partial_order: cyclic possibly-directed structure");
        for (int i : layer) {  // bs is already name-sorted
            placed[i] = 1;
            order.push_back(bs[i]);
        }
        for (int i : layer)
            for (int j = 0; j < m; ++j)
                if (before[i][j]) --indeg[j];
    }
    return order;
}

// ---------------------------------------------------------------------------
// Graph surgery
// ---------------------------------------------------------------------------

enum class Mutilation { RemoveInto, RemoveVisibleOutOf };

// RemoveInto drops every edge with an arrowhead at a member of x.
// RemoveVisibleOutOf drops directed edges out of x that are visible in
// `visibility_ref` (defaults to g itself).
inline MixedGraph mutilate(const MixedGraph& g, Mutilation mode, VertexSet x, const MixedGraph* visibility_ref = nullptr) {
    if (!x.subset_of(g.all_vertices())) throw InputError("mutilate: unknown vertex");
    if (mode == Mutilation::RemoveInto) {
        return g.without_edges([&](const Edge& e) {
            return (x.contains(e.a) && e.mark_a == EndpointMark::Arrow) ||
                   (x.contains(e.b) && e.mark_b == EndpointMark::Arrow);
        });
    }
    const MixedGraph& ref = visibility_ref ? *visibility_ref : g;
    const std::vector<char> vis = visibility_flags(ref);
    return g.without_edges([&](const Edge& e) {
        if (!e.is_directed() || !x.contains(e.tail())) return false;
        for (int id : ref.incident(e.tail())) {
            const Edge& r = ref.edge(id);
            if (r.is_directed() && r.tail() == e.tail() && r.head() == e.head() && vis[id]) return true;
        }
        return false;
    });
}

// A MAG from the equivalence class of a PAG: o-> becomes ->, and every o-o
// component is oriented acyclically without new unshielded colliders by
// repeatedly making a simplicial vertex a sink. Vertices outside
// `preserve_into` are sunk first (largest name first), so members of
// `preserve_into` gain no new arrowheads whenever that is possible.
inline MixedGraph pag_to_mag(const MixedGraph& g, VertexSet preserve_into) {
    if (g.kind() != GraphKind::PAG) throw InputError("pag_to_mag expects a PAG");
    const int n = g.num_vertices();
    std::vector<Edge> edges;
    std::vector<std::vector<char>> circ(n, std::vector<char>(n, 0));
    std::vector<int> circle_ids;
    for (int id = 0; id < static_cast<int>(g.edges().size()); ++id) {
        const Edge& e = g.edge(id);
        if (e.is_circle_circle()) {
            circ[e.a][e.b] = circ[e.b][e.a] = 1;
            circle_ids.push_back(id);
            continue;
        }
        Edge out = e;
        if (out.mark_a == EndpointMark::Circle) out.mark_a = EndpointMark::Tail;
        if (out.mark_b == EndpointMark::Circle) out.mark_b = EndpointMark::Tail;
        edges.push_back(out);
    }
    VertexSet remaining;
    for (int id : circle_ids) remaining.insert(g.edge(id).a).insert(g.edge(id).b);

    // sink_into[v] = vertices whose circle edge to v gets oriented into v.
    std::vector<std::vector<int>> oriented_into(n);
    while (!remaining.empty()) {
        int pick = -1;
        bool pick_preserved = true;
        for (int v : remaining) {
            VertexSet nb;
            for (int w : remaining)
                if (circ[v][w]) nb.insert(w);
            bool clique = true;
            for (int a : nb) {
                for (int b : nb)
                    if (a < b && !g.adjacent(a, b)) clique = false;
            }
            if (!clique) continue;
            const bool preserved = preserve_into.contains(v);
            if (pick < 0 || (pick_preserved && !preserved) ||
                (pick_preserved == preserved && g.name(v) > g.name(pick))) {
                pick = v;
                pick_preserved = preserved;
            }
        }
        if (pick < 0) throw InputError("pag_to_mag: circle component is not chordal");
        for (int w : remaining)
            if (circ[pick][w]) {
                edges.push_back(Edge::directed(w, pick));
                circ[pick][w] = circ[w][pick] = 0;
            }
        remaining.erase(pick);
    }
    // Keep the PAG's edge order for readability: sort by original pair order.
    std::vector<Edge> ordered;
    ordered.reserve(edges.size());
    for (const Edge& pe : g.edges()) {
        for (const Edge& e : edges)
            if ((e.a == pe.a && e.b == pe.b) || (e.a == pe.b && e.b == pe.a)) {
                ordered.push_back(e);
                break;
            }
    }
    try {
        return MixedGraph(GraphKind::MAG, g.names(), std::move(ordered));
    } catch (const InputError& err) {
        throw InputError(std::string("pag_to_mag: ") + err.what());
    }
}

}  // namespace ispec

#endif  // ISPEC_GRAPH_OPS_HPP
