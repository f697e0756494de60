#ifndef ISPEC_GRAPH_HPP
#define ISPEC_GRAPH_HPP

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ispec/errors.hpp"
#include "ispec/vertex_set.hpp"

namespace ispec {

enum class EndpointMark { Tail, Arrow, Circle };

enum class GraphKind { ADMG, MAG, PAG };

inline std::string_view to_string(GraphKind k) {
    switch (k) {
        case GraphKind::ADMG: return "ADMG";
        case GraphKind::MAG: return "MAG";
        case GraphKind::PAG: return "PAG";
    }
    return "?";
}

struct Edge {
    int a = 0;
    int b = 0;
    EndpointMark mark_a = EndpointMark::Tail;
    EndpointMark mark_b = EndpointMark::Arrow;

    static Edge directed(int from, int to) { return {from, to, EndpointMark::Tail, EndpointMark::Arrow}; }
    static Edge bidirected(int u, int v) { return {u, v, EndpointMark::Arrow, EndpointMark::Arrow}; }
    static Edge circle_arrow(int from, int to) { return {from, to, EndpointMark::Circle, EndpointMark::Arrow}; }
    static Edge circle_circle(int u, int v) { return {u, v, EndpointMark::Circle, EndpointMark::Circle}; }

    EndpointMark mark_at(int v) const { return v == a ? mark_a : mark_b; }
    int other(int v) const { return v == a ? b : a; }
    bool touches(int v) const { return v == a || v == b; }

    bool is_directed() const {
        return (mark_a == EndpointMark::Tail && mark_b == EndpointMark::Arrow) ||
               (mark_a == EndpointMark::Arrow && mark_b == EndpointMark::Tail);
    }
    bool is_bidirected() const { return mark_a == EndpointMark::Arrow && mark_b == EndpointMark::Arrow; }
    bool is_circle_circle() const { return mark_a == EndpointMark::Circle && mark_b == EndpointMark::Circle; }

    // For a directed edge: the tail / head vertex.
    int tail() const { return mark_a == EndpointMark::Tail ? a : b; }
    int head() const { return mark_a == EndpointMark::Arrow ? a : b; }

    bool operator==(const Edge&) const = default;
};

// A mixed graph with per-endpoint marks. The same value type stands for an
// ADMG, a MAG or a PAG; `kind` selects which structural invariants are
// enforced at construction. Values are immutable once built.
class MixedGraph {
public:
    MixedGraph() = default;

    MixedGraph(GraphKind kind, std::vector<std::string> names, std::vector<Edge> edges)
        : kind_(kind), names_(std::move(names)), edges_(std::move(edges)) {
        const int n = num_vertices();
        if (n > kMaxVertices) throw InputError("graphs are limited to 64 vertices");
        for (int i = 0; i < n; ++i) {
            if (names_[i].empty()) throw InputError("empty vertex name");
            if (!index_.emplace(names_[i], i).second) throw InputError("duplicate vertex name: " + names_[i]);
        }
        incident_.assign(n, {});
        between_.assign(static_cast<std::size_t>(n) * n, -1);
        for (int id = 0; id < static_cast<int>(edges_.size()); ++id) {
            const Edge& e = edges_[id];
            if (e.a < 0 || e.a >= n || e.b < 0 || e.b >= n) throw InputError("edge endpoint out of range");
            if (e.a == e.b) throw InputError("self loop on " + names_[e.a]);
            validate_edge(e);
            int& slot = between_[e.a * n + e.b];
            if (slot >= 0) {
                if (kind_ != GraphKind::ADMG) throw InputError("multiple edges between " + names_[e.a] + " and " + names_[e.b]);
                const Edge& prev = edges_[slot];
                if (prev.is_directed() == e.is_directed())
                    throw InputError("duplicate edge type between " + names_[e.a] + " and " + names_[e.b]);
            } else {
                slot = id;
                between_[e.b * n + e.a] = id;
            }
            incident_[e.a].push_back(id);
            incident_[e.b].push_back(id);
        }
        if (kind_ != GraphKind::PAG && has_directed_cycle()) throw InputError("directed cycle in " + std::string(to_string(kind_)));
    }

    GraphKind kind() const { return kind_; }
    int num_vertices() const { return static_cast<int>(names_.size()); }
    const std::vector<std::string>& names() const { return names_; }
    const std::string& name(int v) const { return names_.at(v); }
    const std::vector<Edge>& edges() const { return edges_; }
    const Edge& edge(int id) const { return edges_.at(id); }
    std::span<const int> incident(int v) const { return incident_.at(v); }
    VertexSet all_vertices() const { return VertexSet::first_n(num_vertices()); }

    bool has_vertex(std::string_view name) const { return index_.contains(std::string(name)); }

    int index_of(std::string_view name) const {
        auto it = index_.find(std::string(name));
        if (it == index_.end()) throw InputError("unknown vertex: " + std::string(name));
        return it->second;
    }

    VertexSet set_of(const std::vector<std::string>& names) const {
        VertexSet s;
        for (const auto& nm : names) s.insert(index_of(nm));
        return s;
    }

    std::vector<std::string> names_of(VertexSet s) const {
        std::vector<std::string> out;
        for (int v : s) out.push_back(name(v));
        return out;
    }

    // Any edge between u and v (for ADMGs with a double edge, the first listed).
    std::optional<int> edge_between(int u, int v) const {
        const int id = between_.at(u * num_vertices() + v);
        if (id < 0) return std::nullopt;
        return id;
    }

    bool adjacent(int u, int v) const { return u != v && between_.at(u * num_vertices() + v) >= 0; }

    // Mark at `at` on the (unique) edge between u and at.
    std::optional<EndpointMark> mark(int u, int at) const {
        auto id = edge_between(u, at);
        if (!id) return std::nullopt;
        return edges_[*id].mark_at(at);
    }

    VertexSet neighbors(int v) const {
        VertexSet s;
        for (int id : incident(v)) s.insert(edges_[id].other(v));
        return s;
    }

    bool has_directed(int from, int to) const {
        for (int id : incident(from)) {
            const Edge& e = edges_[id];
            if (e.other(from) == to && e.is_directed() && e.tail() == from) return true;
        }
        return false;
    }

    bool has_bidirected(int u, int v) const {
        for (int id : incident(u)) {
            const Edge& e = edges_[id];
            if (e.other(u) == v && e.is_bidirected()) return true;
        }
        return false;
    }

    bool has_circles() const {
        return std::any_of(edges_.begin(), edges_.end(), [](const Edge& e) {
            return e.mark_a == EndpointMark::Circle || e.mark_b == EndpointMark::Circle;
        });
    }

    template <typename Pred>
    MixedGraph without_edges(Pred&& drop) const {
        std::vector<Edge> kept;
        for (const Edge& e : edges_)
            if (!drop(e)) kept.push_back(e);
        return MixedGraph(kind_, names_, std::move(kept));
    }

    // Same vertex list, only the edges with both endpoints in `scope`.
    MixedGraph restricted_to(VertexSet scope) const {
        return without_edges([&](const Edge& e) { return !scope.contains(e.a) || !scope.contains(e.b); });
    }

    MixedGraph with_kind(GraphKind k) const { return MixedGraph(k, names_, edges_); }

    bool operator==(const MixedGraph& o) const {
        return kind_ == o.kind_ && names_ == o.names_ && edges_ == o.edges_;
    }

private:
    void validate_edge(const Edge& e) const {
        const bool circle = e.mark_a == EndpointMark::Circle || e.mark_b == EndpointMark::Circle;
        if (e.mark_a == EndpointMark::Tail && e.mark_b == EndpointMark::Tail)
            throw InputError("undirected edges are not supported");
        if (kind_ != GraphKind::PAG && circle)
            throw InputError("circle mark in " + std::string(to_string(kind_)));
        if (kind_ == GraphKind::PAG) {
            // Without selection bias a tail only appears on a directed edge.
            const bool tail_circle = (e.mark_a == EndpointMark::Tail && e.mark_b == EndpointMark::Circle) ||
                                     (e.mark_a == EndpointMark::Circle && e.mark_b == EndpointMark::Tail);
            if (tail_circle) throw InputError("tail-circle edges are not supported");
        }
    }

    bool has_directed_cycle() const {
        const int n = num_vertices();
        std::vector<int> indeg(n, 0);
        for (const Edge& e : edges_)
            if (e.is_directed()) ++indeg[e.head()];
        std::vector<int> stack;
        for (int v = 0; v < n; ++v)
            if (indeg[v] == 0) stack.push_back(v);
        int seen = 0;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            ++seen;
            for (int id : incident_[v]) {
                const Edge& e = edges_[id];
                if (e.is_directed() && e.tail() == v && --indeg[e.head()] == 0) stack.push_back(e.head());
            }
        }
        return seen != n;
    }

    GraphKind kind_ = GraphKind::PAG;
    std::vector<std::string> names_;
    std::vector<Edge> edges_;
    std::unordered_map<std::string, int> index_;
    std::vector<std::vector<int>> incident_;
    std::vector<int> between_;
};

}  // namespace ispec

#endif  // ISPEC_GRAPH_HPP
