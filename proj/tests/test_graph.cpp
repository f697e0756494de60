#include <gtest/gtest.h>

#include <random>

#include "ispec/graph_io.hpp"
#include "ispec/graph_ops.hpp"
#include "oracles.hpp"

using namespace ispec;

namespace {

VertexSet S(const MixedGraph& g, std::vector<std::string> names) { return g.set_of(names); }

std::vector<std::string> visible_names(const MixedGraph& g) {
    std::vector<std::string> out;
    for (int id : visible_edges(g)) {
        const Edge& e = g.edge(id);
        out.push_back(g.name(e.tail()) + "->" + g.name(e.head()));
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST(GraphIo, RoundTripIsByteStable) {
    const std::string text = "vars: A,B,C,D\nA o-> B\nB --> C\nA <-> C\nC o-o D\n";
    EXPECT_EQ(serialize_graph(parse_graph(text)), text);
}

TEST(GraphIo, ReversedOperatorsAreNormalized) {
    const auto g = parse_graph("vars: A,B\nA <-- B\n");
    EXPECT_EQ(serialize_graph(g), "vars: A,B\nB --> A\n");
}

TEST(GraphIo, RejectsBadInput) {
    EXPECT_THROW(parse_graph("A --> B\n"), InputError);
    EXPECT_THROW(parse_graph("vars: A,B\nA --> C\n"), InputError);
    EXPECT_THROW(parse_graph("vars: A,B\nA ~~ B\n"), InputError);
    EXPECT_THROW(parse_graph("vars: A,A\n"), InputError);
    EXPECT_THROW(parse_graph("vars: A,B\nA o-> B\n", GraphKind::MAG), InputError);
    EXPECT_THROW(parse_graph("vars: A,B\nA --> B\nB --> A\n", GraphKind::ADMG), InputError);
}

TEST(GraphCore, AdmgAllowsDirectedPlusBidirectedPair) {
    const auto g = parse_graph("vars: A,B\nA --> B\nA <-> B\n", GraphKind::ADMG);
    EXPECT_EQ(g.edges().size(), 2u);
    EXPECT_THROW(parse_graph("vars: A,B\nA --> B\nA <-> B\n", GraphKind::MAG), InputError);
}

TEST(GraphCore, PossibleAncestors) {
    const auto p = oracle::shift_pag();
    EXPECT_EQ(possible_ancestors(p, S(p, {"X2"})), p.all_vertices());
    EXPECT_EQ(possible_ancestors(p, S(p, {"X3"})), S(p, {"X3"}));
    const auto lone = parse_graph("vars: V\n");
    EXPECT_EQ(possible_ancestors(lone, S(lone, {"V"})), S(lone, {"V"}));
    EXPECT_THROW(possible_ancestors(p, VertexSet{9}), InputError);
}

TEST(GraphCore, MConnectedExamples) {
    const auto g = oracle::shift_admg();
    EXPECT_FALSE(m_connected(g, g.index_of("X3"), g.index_of("X1"), {}));
    EXPECT_TRUE(m_connected(g, g.index_of("X3"), g.index_of("X1"), S(g, {"X2"})));
    const auto two = parse_graph("vars: A,B\n", GraphKind::ADMG);
    EXPECT_FALSE(m_connected(two, 0, 1, {}));
    EXPECT_THROW(m_connected(two, 0, 0, {}), InputError);
    EXPECT_THROW(m_connected(oracle::shift_pag(), 0, 1, {}), InputError);
}

TEST(GraphCore, DefiniteMSeparatedExamples) {
    const auto p = oracle::shift_pag();
    // Every E..Y path meets X1 or X2 as a collider outside An({X3}).
    EXPECT_TRUE(definite_m_separated(p, S(p, {"E"}), S(p, {"Y"}), S(p, {"X3"})));
    EXPECT_TRUE(definite_m_separated(p, S(p, {"X3"}), S(p, {"X2"}), S(p, {"Y", "X1"})));
    EXPECT_FALSE(definite_m_separated(p, S(p, {"E"}), S(p, {"Y"}), S(p, {"X2"})));
    const auto empty = parse_graph("vars: A,B\n");
    EXPECT_TRUE(definite_m_separated(empty, {0}, {1}, {}));
    EXPECT_THROW(definite_m_separated(p, S(p, {"E"}), S(p, {"E"}), {}), InputError);
}

TEST(GraphCore, VisibleEdges) {
    const auto p = oracle::shift_pag();
    EXPECT_EQ(visible_names(p), (std::vector<std::string>{"X1->X2", "Y->X2"}));
    const auto xy = parse_graph("vars: X,Y\nX --> Y\n", GraphKind::MAG);
    EXPECT_TRUE(visible_edges(xy).empty());
    // Z is not adjacent to Y, but nothing points into Z or X from outside,
    // so only X -> Y has a witness (Z <-> X into X).
    const auto m = parse_graph("vars: Z,X,Y\nZ <-> X\nX --> Y\n", GraphKind::MAG);
    EXPECT_EQ(visible_names(m), (std::vector<std::string>{"X->Y"}));
}

TEST(GraphCore, VisibleThroughColliderPath) {
    // W <-> C <-> X with C -> Y; W not adjacent to Y makes X -> Y visible.
    const auto m = parse_graph("vars: W,C,X,Y\nW <-> C\nC <-> X\nC --> Y\nX --> Y\n", GraphKind::MAG);
    const auto vis = visible_names(m);
    EXPECT_NE(std::find(vis.begin(), vis.end(), "X->Y"), vis.end());
}

TEST(GraphCore, VisibilityUnaffectedByIsolatedVertex) {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 100; ++rep) {
        const auto g = oracle::random_admg(rng, 5, 0.4, 0.3);
        const auto mag = oracle::truth_mag(g, g.all_vertices());
        auto nm = mag.names();
        nm.push_back("ISO");
        const MixedGraph bigger(GraphKind::MAG, nm, mag.edges());
        EXPECT_EQ(visible_edges(mag), visible_edges(bigger));
        for (int id : visible_edges(mag)) EXPECT_TRUE(mag.edge(id).is_directed());
    }
}

TEST(GraphCore, Buckets) {
    const auto p = oracle::shift_pag();
    EXPECT_EQ(buckets(p).size(), 5u);
    const auto g = parse_graph("vars: A,B,C,D\nA o-o B\nB o-o C\n");
    const auto bs = buckets(g);
    ASSERT_EQ(bs.size(), 2u);
    EXPECT_EQ(bs[0], S(g, {"A", "B", "C"}));
    EXPECT_EQ(bs[1], S(g, {"D"}));
    const auto h = parse_graph("vars: A,B\nA o-> B\n");
    EXPECT_EQ(buckets(h).size(), 2u);
}

TEST(GraphCore, BucketsPartitionRandomPags) {
    std::mt19937_64 rng(9);
    std::bernoulli_distribution coin(0.4);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<Edge> edges;
        for (int i = 0; i < 6; ++i)
            for (int j = i + 1; j < 6; ++j)
                if (coin(rng)) edges.push_back(coin(rng) ? Edge::circle_circle(i, j) : Edge::circle_arrow(i, j));
        const MixedGraph g(GraphKind::PAG, oracle::names(6), edges);
        VertexSet all;
        for (VertexSet b : buckets(g)) {
            EXPECT_FALSE(all.intersects(b));
            all |= b;
        }
        EXPECT_EQ(all, g.all_vertices());
    }
}

TEST(GraphCore, PcComponent) {
    const auto p = oracle::shift_pag();
    EXPECT_EQ(pc_component(p, S(p, {"Y"})), S(p, {"Y", "X1", "X3", "E"}));
    EXPECT_EQ(pc_component(p, S(p, {"X2"})), S(p, {"X2"}));
    const auto lone = parse_graph("vars: A\n");
    EXPECT_EQ(pc_component(lone, {0}), VertexSet{0});
}

TEST(GraphCore, DefiniteCComponent) {
    const auto p = oracle::shift_pag();
    EXPECT_EQ(definite_c_component(p, S(p, {"Y"})), S(p, {"Y", "X1"}));
    EXPECT_EQ(definite_c_component(p, S(p, {"X2"})), S(p, {"X2"}));
    const auto chain = parse_graph("vars: A,B,C\nA <-> B\nB <-> C\n", GraphKind::ADMG);
    EXPECT_EQ(definite_c_component(chain, {0}), chain.all_vertices());
}

TEST(GraphCore, Region) {
    const auto p = oracle::shift_pag();
    EXPECT_EQ(region(p, S(p, {"Y"}), S(p, {"Y", "X1", "X3"})), S(p, {"Y", "X1", "X3"}));
    EXPECT_EQ(region(p, S(p, {"X2"}), S(p, {"X2"})), S(p, {"X2"}));
    EXPECT_EQ(region(p, S(p, {"Y"}), S(p, {"Y", "X2"})), S(p, {"Y"}));
    EXPECT_THROW(region(p, S(p, {"Y"}), S(p, {"X2"})), InputError);
}

TEST(GraphCore, BucketPartialOrder) {
    const auto p = oracle::shift_pag();
    const auto order = bucket_partial_order(p, p.all_vertices());
    std::vector<std::string> flat;
    for (VertexSet b : order) flat.push_back(p.name(b.front()));
    EXPECT_EQ(flat, (std::vector<std::string>{"E", "X3", "X1", "Y", "X2"}));
    EXPECT_EQ(bucket_partial_order(p, S(p, {"X2"})), std::vector<VertexSet>{S(p, {"X2"})});
    const auto ab = parse_graph("vars: A,B\nA o-o B\n");
    EXPECT_EQ(bucket_partial_order(ab, ab.all_vertices()), std::vector<VertexSet>{ab.all_vertices()});
}

TEST(GraphCore, Mutilate) {
    const auto p = oracle::shift_pag();
    const auto r = pag_to_mag(p, {});
    const auto into = mutilate(r, Mutilation::RemoveInto, S(r, {"X1"}));
    EXPECT_FALSE(into.adjacent(r.index_of("E"), r.index_of("X1")));
    EXPECT_FALSE(into.adjacent(r.index_of("Y"), r.index_of("X1")));
    EXPECT_TRUE(into.adjacent(r.index_of("X1"), r.index_of("X2")));
    const auto out = mutilate(r, Mutilation::RemoveVisibleOutOf, S(r, {"Y"}), &p);
    EXPECT_FALSE(out.adjacent(r.index_of("Y"), r.index_of("X2")));
    EXPECT_EQ(out.edges().size(), 4u);
    EXPECT_EQ(mutilate(r, Mutilation::RemoveInto, {}), r);
}

TEST(GraphCore, RemoveIntoLeavesNoArrowheads) {
    std::mt19937_64 rng(13);
    for (int rep = 0; rep < 100; ++rep) {
        const auto g = oracle::random_admg(rng, 6, 0.4, 0.3);
        const VertexSet x{static_cast<int>(rng() % 6), static_cast<int>(rng() % 6)};
        const auto h = mutilate(g, Mutilation::RemoveInto, x);
        for (const Edge& e : h.edges())
            for (int v : x)
                if (e.touches(v)) EXPECT_NE(e.mark_at(v), EndpointMark::Arrow);
    }
}

TEST(GraphCore, PagToMag) {
    const auto p = oracle::shift_pag();
    const auto m = pag_to_mag(p, S(p, {"X1"}));
    EXPECT_EQ(m.kind(), GraphKind::MAG);
    EXPECT_EQ(serialize_graph(m), "vars: E,X1,X2,X3,Y\nE --> X1\nY --> X2\nX1 --> X2\nX3 --> Y\nY <-> X1\n");
    const auto ab = parse_graph("vars: A,B\nA o-o B\n");
    EXPECT_EQ(serialize_graph(pag_to_mag(ab, {})), "vars: A,B\nA --> B\n");
    const auto plain = parse_graph("vars: A,B,C\nA --> B\nC <-> B\n");
    EXPECT_EQ(pag_to_mag(plain, {}).edges(), plain.edges());
}

TEST(GraphCore, PagToMagPreservesArrowheadsAtRequestedVertices) {
    // Chordal circle component: A o-o B o-o C, A o-o C, plus D o-> A.
    const auto g = parse_graph("vars: A,B,C,D\nA o-o B\nB o-o C\nA o-o C\nD o-> A\n");
    for (int v = 0; v < 3; ++v) {
        const auto m = pag_to_mag(g, VertexSet{v});
        for (const Edge& e : m.edges()) {
            if (!e.touches(v)) continue;
            const int w = e.other(v);
            EXPECT_EQ(e.mark_at(v) == EndpointMark::Arrow, *g.mark(w, v) == EndpointMark::Arrow);
        }
        EXPECT_FALSE(m.has_circles());
    }
}

TEST(GraphCore, MConnectedMatchesBruteForce) {
    std::mt19937_64 rng(21);
    for (int rep = 0; rep < 60; ++rep) {
        const int n = 3 + static_cast<int>(rng() % 4);
        const auto g = oracle::random_admg(rng, n, 0.35, 0.25);
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y) {
                if (x == y) continue;
                const VertexSet rest = g.all_vertices() - VertexSet{x, y};
                VertexSet z;
                for (int v : rest)
                    if (rng() & 1) z.insert(v);
                EXPECT_EQ(m_connected(g, x, y, z), oracle::brute_m_connected(g, x, y, z));
            }
    }
}

TEST(GraphCore, DefiniteSeparationMatchesMagSeparationWithoutCircles) {
    std::mt19937_64 rng(33);
    for (int rep = 0; rep < 80; ++rep) {
        const int n = 3 + static_cast<int>(rng() % 5);
        const auto g = oracle::random_admg(rng, n, 0.35, 0.25);
        const auto mag = oracle::truth_mag(g, g.all_vertices());
        const auto as_pag = mag.with_kind(GraphKind::PAG);
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y) {
                if (x == y) continue;
                VertexSet z;
                for (int v : g.all_vertices() - VertexSet{x, y})
                    if (rng() & 1) z.insert(v);
                EXPECT_EQ(definite_m_separated(as_pag, {x}, {y}, z), !m_connected(mag, x, y, z));
            }
    }
}

TEST(GraphCore, DefiniteSeparationMatchesBruteForceOnPags) {
    std::mt19937_64 rng(41);
    std::uniform_int_distribution<int> kind(0, 4);
    for (int rep = 0; rep < 100; ++rep) {
        const int n = 3 + static_cast<int>(rng() % 4);
        std::vector<Edge> edges;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                switch (kind(rng)) {
                    case 0: edges.push_back(Edge::directed(i, j)); break;
                    case 1: edges.push_back(Edge::bidirected(i, j)); break;
                    case 2: edges.push_back(Edge::circle_arrow(i, j)); break;
                    case 3: edges.push_back(Edge::circle_circle(i, j)); break;
                    default: break;
                }
            }
        const MixedGraph g(GraphKind::PAG, oracle::names(n), edges);
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y) {
                if (x == y) continue;
                VertexSet z;
                for (int v : g.all_vertices() - VertexSet{x, y})
                    if (rng() & 1) z.insert(v);
                EXPECT_EQ(definite_m_separated(g, {x}, {y}, z), !oracle::brute_definite_connected(g, x, y, z));
            }
    }
}
