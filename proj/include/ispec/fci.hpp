#ifndef ISPEC_FCI_HPP
#define ISPEC_FCI_HPP

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ispec/citest.hpp"
#include "ispec/data_table.hpp"
#include "ispec/graph.hpp"
#include "ispec/graph_ops.hpp"

namespace ispec {

struct Knowledge {
    // No arrowhead may point into these vertices.
    VertexSet forbidden_into;
    // Earlier tiers cannot be caused by later ones.
    std::vector<VertexSet> tiers;
};

struct FciOptions {
    int max_cond_size = -1;  // -1: unbounded
    bool possible_dsep = true;
};

struct FciReport {
    std::size_t tests_run = 0;
    std::vector<std::pair<std::pair<int, int>, VertexSet>> sepsets;
    std::vector<std::string> rule_firings;

    nlohmann::json to_json(const std::vector<std::string>& names) const {
        nlohmann::json seps = nlohmann::json::array();
        for (const auto& [pair, s] : sepsets) {
            nlohmann::json set = nlohmann::json::array();
            for (int v : s) set.push_back(names[v]);
            seps.push_back({{"a", names[pair.first]}, {"b", names[pair.second]}, {"sepset", set}});
        }
        return {{"tests_run", tests_run}, {"sepsets", seps}, {"rule_firings", rule_firings}};
    }
};

namespace detail {

// Working PAG for the orientation phase. mark[a][b] is the mark at b on the
// edge a *-* b; `none` when a and b are not adjacent.
class FciGraph {
public:
    static constexpr int kNone = -1;

    FciGraph(int n, const Knowledge& k, FciReport* report, const std::vector<std::string>& names)
        : n_(n), mark_(n, std::vector<int>(n, kNone)), knowledge_(k), report_(report), names_(names) {}

    int n() const { return n_; }
    bool adj(int a, int b) const { return mark_[a][b] != kNone; }
    int mark(int a, int at) const { return mark_[a][at]; }
    bool is(int a, int at, EndpointMark m) const { return mark_[a][at] == static_cast<int>(m); }

    void connect(int a, int b) { mark_[a][b] = mark_[b][a] = static_cast<int>(EndpointMark::Circle); }
    void disconnect(int a, int b) { mark_[a][b] = mark_[b][a] = kNone; }
    void reset_circles() {
        for (auto& row : mark_)
            for (int& m : row)
                if (m != kNone) m = static_cast<int>(EndpointMark::Circle);
    }

    std::vector<int> neighbors(int v) const {
        std::vector<int> out;
        for (int w = 0; w < n_; ++w)
            if (adj(v, w)) out.push_back(w);
        return out;
    }

    struct Change {
        int from, at;
        EndpointMark m;
    };

    // Applies all changes or none. Returns whether anything changed. An
    // arrowhead into a forbidden vertex vetoes the whole orientation.
    bool apply(const char* rule, std::initializer_list<Change> changes) {
        for (const Change& c : changes)
            if (c.m == EndpointMark::Arrow && knowledge_.forbidden_into.contains(c.at)) return false;
        bool changed = false;
        for (const Change& c : changes) {
            const int cur = mark_[c.from][c.at];
            if (cur == static_cast<int>(c.m)) continue;
            if (cur != static_cast<int>(EndpointMark::Circle))
                throw FciInstabilityError(std::string(rule) + " conflicts with the settled mark at " + names_[c.at] +
                                          " on edge " + names_[c.from] + " - " + names_[c.at]);
            mark_[c.from][c.at] = static_cast<int>(c.m);
            changed = true;
        }
        if (changed && report_) {
            std::string s = rule;
            for (const Change& c : changes) {
                s += ' ';
                s += names_[c.from] + ">" + names_[c.at] + "=" +
                     (c.m == EndpointMark::Arrow ? "arrow" : c.m == EndpointMark::Tail ? "tail" : "circle");
            }
            report_->rule_firings.push_back(s);
        }
        return changed;
    }

    MixedGraph to_graph(const std::vector<std::string>& names) const {
        std::vector<Edge> edges;
        for (int a = 0; a < n_; ++a)
            for (int b = a + 1; b < n_; ++b) {
                if (!adj(a, b)) continue;
                Edge e{a, b, static_cast<EndpointMark>(mark_[b][a]), static_cast<EndpointMark>(mark_[a][b])};
                // Canonical direction: the arrow end second when only one end is an arrow.
                if (e.mark_a == EndpointMark::Arrow && e.mark_b != EndpointMark::Arrow)
                    e = Edge{b, a, e.mark_b, e.mark_a};
                edges.push_back(e);
            }
        return MixedGraph(GraphKind::PAG, names, std::move(edges));
    }

private:
    int n_;
    std::vector<std::vector<int>> mark_;
    const Knowledge& knowledge_;
    FciReport* report_;
    const std::vector<std::string>& names_;
};

using Mark = EndpointMark;

inline bool possibly_directed_step(const FciGraph& g, int a, int b) {
    return !g.is(b, a, Mark::Arrow) && !g.is(a, b, Mark::Tail);
}

// Uncovered possibly directed paths from `from` to `to` whose second vertex
// is `first`; calls fn(path) until it returns true.
inline bool uncovered_pd_path(const FciGraph& g, int from, int first, int to, VertexSet banned,
                              const std::function<bool(const std::vector<int>&)>& fn) {
    if (banned.contains(first) || !g.adj(from, first) || !possibly_directed_step(g, from, first)) return false;
    std::vector<int> path{from, first};
    if (first == to) return fn(path);
    VertexSet on = VertexSet{from, first} | banned;
    std::function<bool()> rec = [&]() -> bool {
        const int cur = path.back();
        const int prev = path[path.size() - 2];
        for (int w : g.neighbors(cur)) {
            if (on.contains(w) || g.adj(prev, w) || !possibly_directed_step(g, cur, w)) continue;
            path.push_back(w);
            on.insert(w);
            const bool stop = w == to ? fn(path) : rec();
            on.erase(w);
            path.pop_back();
            if (stop) return true;
        }
        return false;
    };
    return rec();
}

}  // namespace detail

// FCI over an abstract CI oracle. Adjacency search is PC-stable in index
// order; sepsets keep the first separating set found.
inline MixedGraph fci(const CiOracle& ci, const std::vector<std::string>& vars, const Knowledge& knowledge = {},
                      const FciOptions& opt = {}, FciReport* report = nullptr) {
    using detail::FciGraph;
    using Mark = EndpointMark;
    const int n = static_cast<int>(vars.size());
    if (n < 1) throw InputError("fci needs at least one variable");
    if (n > kMaxVertices) throw InputError("too many variables");
    FciGraph g(n, knowledge, report, vars);
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) g.connect(a, b);

    std::map<std::pair<int, int>, VertexSet> sepset;
    auto key = [](int a, int b) { return std::make_pair(std::min(a, b), std::max(a, b)); };
    auto test = [&](int a, int b, VertexSet s) {
        if (report) ++report->tests_run;
        return ci(a, b, s);
    };
    auto record = [&](int a, int b, VertexSet s) {
        sepset.emplace(key(a, b), s);
        if (report) report->sepsets.push_back({key(a, b), s});
        g.disconnect(a, b);
    };
    const int max_k = opt.max_cond_size < 0 ? n : opt.max_cond_size;

    // Skeleton.
    for (int depth = 0; depth <= max_k; ++depth) {
        std::vector<VertexSet> snapshot(n);
        bool any = false;
        for (int v = 0; v < n; ++v) {
            for (int w : g.neighbors(v)) snapshot[v].insert(w);
            if (snapshot[v].size() - 1 >= depth) any = true;
        }
        if (!any) break;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                if (a == b || !g.adj(a, b) || !snapshot[a].contains(b)) continue;
                const VertexSet pool = snapshot[a] - VertexSet::single(b);
                if (pool.size() < depth) continue;
                for_each_subset_of_size(pool, depth, [&](VertexSet s) {
                    if (!test(a, b, s)) return false;
                    record(a, b, s);
                    return true;
                });
            }
    }

    auto orient_colliders = [&]() {
        for (int b = 0; b < n; ++b) {
            const auto nb = g.neighbors(b);
            for (std::size_t i = 0; i < nb.size(); ++i)
                for (std::size_t j = i + 1; j < nb.size(); ++j) {
                    const int a = nb[i], c = nb[j];
                    if (g.adj(a, c)) continue;
                    auto it = sepset.find(key(a, c));
                    if (it == sepset.end() || it->second.contains(b)) continue;
                    g.apply("R0", {{a, b, Mark::Arrow}, {c, b, Mark::Arrow}});
                }
        }
    };

    auto apply_tiers = [&]() {
        for (std::size_t t = 0; t < knowledge.tiers.size(); ++t)
            for (std::size_t u = t + 1; u < knowledge.tiers.size(); ++u)
                for (int a : knowledge.tiers[t])
                    for (int b : knowledge.tiers[u])
                        if (g.adj(a, b)) g.apply("tiers", {{a, b, Mark::Arrow}});
    };

    if (opt.possible_dsep) {
        apply_tiers();
        orient_colliders();
        // Possible-D-Sep(x): vertices reachable from x along paths on which
        // every inner vertex is a collider or sits in a triangle.
        auto pdsep = [&](int x) {
            VertexSet out;
            std::vector<std::pair<int, int>> stack;
            std::vector<std::vector<char>> seen(n, std::vector<char>(n, 0));
            for (int w : g.neighbors(x)) {
                out.insert(w);
                seen[x][w] = 1;
                stack.emplace_back(x, w);
            }
            while (!stack.empty()) {
                auto [prev, cur] = stack.back();
                stack.pop_back();
                for (int nxt : g.neighbors(cur)) {
                    if (nxt == prev || nxt == x || seen[cur][nxt]) continue;
                    const bool collider = g.is(prev, cur, Mark::Arrow) && g.is(nxt, cur, Mark::Arrow);
                    if (!collider && !g.adj(prev, nxt)) continue;
                    seen[cur][nxt] = 1;
                    out.insert(nxt);
                    stack.emplace_back(cur, nxt);
                }
            }
            out.erase(x);
            return out;
        };
        std::vector<VertexSet> pds(n);
        for (int v = 0; v < n; ++v) pds[v] = pdsep(v);
        for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b) {
                if (!g.adj(a, b)) continue;
                bool removed = false;
                for (int side = 0; side < 2 && !removed; ++side) {
                    const int x = side ? b : a, y = side ? a : b;
                    const VertexSet pool = pds[x] - VertexSet::single(y);
                    const int top = std::min(pool.size(), max_k);
                    for (int k = 0; k <= top && !removed; ++k)
                        for_each_subset_of_size(pool, k, [&](VertexSet s) {
                            if (!test(x, y, s)) return false;
                            sepset.erase(key(a, b));
                            record(a, b, s);
                            removed = true;
                            return true;
                        });
                }
            }
        g.reset_circles();
        if (report) report->rule_firings.clear();
    }

    apply_tiers();
    orient_colliders();

    auto sepset_of = [&](int a, int c) -> std::optional<VertexSet> {
        auto it = sepset.find(key(a, c));
        if (it == sepset.end()) return std::nullopt;
        return it->second;
    };

    auto rule1 = [&]() {
        bool ch = false;
        for (int b = 0; b < n; ++b)
            for (int a : g.neighbors(b))
                for (int c : g.neighbors(b)) {
                    if (a == c || g.adj(a, c)) continue;
                    if (g.is(a, b, Mark::Arrow) && g.is(c, b, Mark::Circle))
                        ch |= g.apply("R1", {{c, b, Mark::Tail}, {b, c, Mark::Arrow}});
                }
        return ch;
    };
    auto rule2 = [&]() {
        bool ch = false;
        for (int a = 0; a < n; ++a)
            for (int c : g.neighbors(a)) {
                if (!g.is(a, c, Mark::Circle)) continue;
                for (int b : g.neighbors(a)) {
                    if (b == c || !g.adj(b, c)) continue;
                    const bool first = g.is(b, a, Mark::Tail) && g.is(a, b, Mark::Arrow) && g.is(b, c, Mark::Arrow);
                    const bool second = g.is(a, b, Mark::Arrow) && g.is(c, b, Mark::Tail) && g.is(b, c, Mark::Arrow);
                    if (first || second) {
                        ch |= g.apply("R2", {{a, c, Mark::Arrow}});
                        break;
                    }
                }
            }
        return ch;
    };
    auto rule3 = [&]() {
        bool ch = false;
        for (int b = 0; b < n; ++b)
            for (int d : g.neighbors(b)) {
                if (!g.is(d, b, Mark::Circle)) continue;
                const auto nb = g.neighbors(b);
                for (int a : nb)
                    for (int c : nb) {
                        if (a >= c || a == d || c == d || g.adj(a, c)) continue;
                        if (!g.is(a, b, Mark::Arrow) || !g.is(c, b, Mark::Arrow)) continue;
                        if (!g.adj(a, d) || !g.adj(c, d)) continue;
                        if (!g.is(a, d, Mark::Circle) || !g.is(c, d, Mark::Circle)) continue;
                        ch |= g.apply("R3", {{d, b, Mark::Arrow}});
                    }
            }
        return ch;
    };
    // Discriminating paths <d, ..., a, b, c> for b, with b o-* c.
    auto rule4 = [&]() {
        bool ch = false;
        for (int b = 0; b < n; ++b)
            for (int c : g.neighbors(b)) {
                if (!g.is(c, b, Mark::Circle)) continue;
                for (int a : g.neighbors(b)) {
                    if (a == c || !g.adj(a, c)) continue;
                    // a must be a collider-ready parent of c with an arrowhead at a from b's side.
                    if (!(g.is(c, a, Mark::Tail) && g.is(a, c, Mark::Arrow)) || !g.is(b, a, Mark::Arrow)) continue;
                    // BFS backwards from a over colliders that are parents of c.
                    std::vector<int> prev(n, -2);
                    prev[a] = b;
                    std::vector<int> queue{a};
                    bool done = false;
                    for (std::size_t qi = 0; qi < queue.size() && !done; ++qi) {
                        const int cur = queue[qi];
                        for (int d : g.neighbors(cur)) {
                            if (d == b || d == c || prev[d] != -2 || d == prev[cur]) continue;
                            if (!g.is(d, cur, Mark::Arrow)) continue;
                            if (!g.adj(d, c)) {
                                const auto s = sepset_of(d, c);
                                if (!s) continue;
                                if (s->contains(b))
                                    ch |= g.apply("R4", {{c, b, Mark::Tail}, {b, c, Mark::Arrow}});
                                else
                                    ch |= g.apply("R4", {{a, b, Mark::Arrow}, {c, b, Mark::Arrow}, {b, c, Mark::Arrow}});
                                done = true;
                                break;
                            }
                            // d continues the path: collider at d and parent of c.
                            if (g.is(cur, d, Mark::Arrow) && g.is(c, d, Mark::Tail) && g.is(d, c, Mark::Arrow)) {
                                prev[d] = cur;
                                queue.push_back(d);
                            }
                        }
                    }
                }
            }
        return ch;
    };
    auto rule8 = [&]() {
        bool ch = false;
        for (int a = 0; a < n; ++a)
            for (int c : g.neighbors(a)) {
                if (!(g.is(c, a, Mark::Circle) && g.is(a, c, Mark::Arrow))) continue;
                for (int b : g.neighbors(a)) {
                    if (b == c || !g.adj(b, c)) continue;
                    if (g.is(b, a, Mark::Tail) && g.is(a, b, Mark::Arrow) && g.is(c, b, Mark::Tail) && g.is(b, c, Mark::Arrow)) {
                        ch |= g.apply("R8", {{c, a, Mark::Tail}});
                        break;
                    }
                }
            }
        return ch;
    };
    auto rule9 = [&]() {
        bool ch = false;
        for (int a = 0; a < n; ++a)
            for (int c : g.neighbors(a)) {
                if (!(g.is(c, a, Mark::Circle) && g.is(a, c, Mark::Arrow))) continue;
                for (int b : g.neighbors(a)) {
                    if (b == c || g.adj(b, c)) continue;
                    const bool found = detail::uncovered_pd_path(g, a, b, c, {}, [](const std::vector<int>&) { return true; });
                    if (found) {
                        ch |= g.apply("R9", {{c, a, Mark::Tail}});
                        break;
                    }
                }
            }
        return ch;
    };
    auto rule10 = [&]() {
        bool ch = false;
        for (int a = 0; a < n; ++a)
            for (int c : g.neighbors(a)) {
                if (!(g.is(c, a, Mark::Circle) && g.is(a, c, Mark::Arrow))) continue;
                std::vector<int> pars;
                for (int p : g.neighbors(c))
                    if (p != a && g.is(c, p, Mark::Tail) && g.is(p, c, Mark::Arrow)) pars.push_back(p);
                bool fired = false;
                for (std::size_t i = 0; i < pars.size() && !fired; ++i)
                    for (std::size_t j = i + 1; j < pars.size() && !fired; ++j) {
                        const int b = pars[i], d = pars[j];
                        // Candidate second vertices of uncovered p.d. paths a..b and a..d.
                        std::vector<int> mus, omegas;
                        for (int m : g.neighbors(a)) {
                            if (m == c) continue;
                            auto ok = [](const std::vector<int>&) { return true; };
                            if (m == b ? detail::possibly_directed_step(g, a, b)
                                       : detail::uncovered_pd_path(g, a, m, b, VertexSet::single(c), ok))
                                mus.push_back(m);
                            if (m == d ? detail::possibly_directed_step(g, a, d)
                                       : detail::uncovered_pd_path(g, a, m, d, VertexSet::single(c), ok))
                                omegas.push_back(m);
                        }
                        for (int m : mus)
                            for (int w : omegas)
                                if (!fired && m != w && !g.adj(m, w)) fired = g.apply("R10", {{c, a, Mark::Tail}});
                    }
                ch |= fired;
            }
        return ch;
    };

    bool changed = true;
    while (changed) {
        changed = false;
        changed |= rule1();
        changed |= rule2();
        changed |= rule3();
        changed |= rule4();
        if (changed) continue;
        changed |= rule8();
        changed |= rule9();
        changed |= rule10();
    }
    return g.to_graph(vars);
}

// CI oracle answering with exact m-separation in a mixed graph.
inline CiOracle separation_oracle(const MixedGraph& g) {
    return [g](int a, int b, VertexSet s) { return !m_connected(g, a, b, s); };
}

// Pools the datasets, appends the environment column E (last), forbids
// arrowheads into E and runs FCI with the chosen test.
inline MixedGraph pooled_fci(const std::vector<DataTable>& datasets, TestKind test, double alpha,
                             const FciOptions& opt = {}, FciReport* report = nullptr, const std::string& env_name = "E") {
    if (datasets.empty()) throw InputError("pooled_fci needs at least one dataset");
    if (datasets.size() < 2) throw InputError("a single dataset gives a constant environment column");
    const DataTable pooled = pool_with_env(datasets, env_name);
    const GaussianCiTester tester(pooled, test);
    Knowledge k;
    k.forbidden_into.insert(pooled.index_of(env_name));
    return fci(tester.oracle(alpha), pooled.names(), k, opt, report);
}

// FCI on a table that already carries its environment column.
inline MixedGraph fci_on_table(const DataTable& data, TestKind test, double alpha, const FciOptions& opt = {},
                               FciReport* report = nullptr) {
    const GaussianCiTester tester(data, test);
    Knowledge k;
    if (data.env_column()) {
        const Column& e = data.column(*data.env_column());
        if (std::all_of(e.values.begin(), e.values.end(), [&](double v) { return v == e.values[0]; }))
            throw InputError("environment column is constant");
        k.forbidden_into.insert(data.index_of(*data.env_column()));
    }
    return fci(tester.oracle(alpha), data.names(), k, opt, report);
}

// Vertices adjacent to env whose edge is not into env.
inline VertexSet possible_children_of_env(const MixedGraph& p, int env) {
    VertexSet out;
    for (int id : p.incident(env)) {
        const Edge& e = p.edge(id);
        if (e.mark_at(env) != EndpointMark::Arrow) out.insert(e.other(env));
    }
    return out;
}

}  // namespace ispec

#endif  // ISPEC_FCI_HPP
