#ifndef ISPEC_INVARIANCE_HPP
#define ISPEC_INVARIANCE_HPP

#include <vector>

#include "ispec/errors.hpp"
#include "ispec/graph.hpp"
#include "ispec/graph_ops.hpp"

namespace ispec {

struct InvarianceQuery {
    VertexSet x;  // intervened
    VertexSet y;  // targets
    VertexSet z;  // conditioning

    void validate(const MixedGraph& p) const {
        if (p.kind() != GraphKind::PAG) throw InputError("invariance checks expect a PAG");
        if (!(x | y | z).subset_of(p.all_vertices())) throw InputError("invariance query: unknown vertex");
        if (x.intersects(y) || y.intersects(z)) throw InputError("invariance query: y must be disjoint from x and z");
    }
};

// Direct check by enumerating definite-status paths in the PAG.
inline bool invariant_conditional(const MixedGraph& p, const InvarianceQuery& q) {
    q.validate(p);
    const VertexSet poss_an_z = possible_ancestors(p, q.z);
    const auto visible = visibility_flags(p);
    for (int x : q.x) {
        const VertexSet single = VertexSet::single(x);
        bool ok = true;
        if (q.z.contains(x)) {
            for_each_definite_connecting_path(p, x, q.y, q.z - single, [&](const std::vector<PathStep>& path) {
                const Edge& e = p.edge(path[1].edge);
                ok = e.is_directed() && e.tail() == x && visible[path[1].edge];
                return !ok;
            });
        } else if (poss_an_z.contains(x)) {
            ok = definite_m_separated(p, single, q.y, q.z);
        } else {
            for_each_definite_connecting_path(p, x, q.y, q.z, [&](const std::vector<PathStep>& path) {
                ok = p.edge(path[1].edge).mark_at(x) == EndpointMark::Arrow;
                return !ok;
            });
        }
        if (!ok) return false;
    }
    return true;
}

// Same criterion checked by m-separation in MAGs of the equivalence class
// that add no arrowheads into the intervened vertex.
inline bool invariant_conditional_mag(const MixedGraph& p, const InvarianceQuery& q) {
    q.validate(p);
    const VertexSet poss_an_z = possible_ancestors(p, q.z);
    for (int x : q.x) {
        const VertexSet single = VertexSet::single(x);
        const MixedGraph r = pag_to_mag(p, single);
        bool ok;
        if (q.z.contains(x)) {
            ok = m_separated(mutilate(r, Mutilation::RemoveVisibleOutOf, single, &p), single, q.y, q.z - single);
        } else if (poss_an_z.contains(x)) {
            ok = m_separated(r, single, q.y, q.z);
        } else {
            ok = m_separated(mutilate(r, Mutilation::RemoveInto, single), single, q.y, q.z);
        }
        if (!ok) return false;
    }
    return true;
}

}  // namespace ispec

#endif  // ISPEC_INVARIANCE_HPP
