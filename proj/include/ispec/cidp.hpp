#ifndef ISPEC_CIDP_HPP
#define ISPEC_CIDP_HPP

#include <optional>
#include <utility>
#include <vector>

#include "ispec/errors.hpp"
#include "ispec/expression.hpp"
#include "ispec/graph.hpp"
#include "ispec/graph_ops.hpp"
#include "ispec/simplify.hpp"

namespace ispec {

using SetPair = std::pair<VertexSet, VertexSet>;

namespace detail {

inline VertexSet pa_star(const MixedGraph& p, VertexSet s, VertexSet scope) { return possible_parents(p, s, scope, false); }
inline VertexSet ch_star(const MixedGraph& p, VertexSet s, VertexSet scope) { return possible_children(p, s, scope, false); }

inline void check_disjoint(const MixedGraph& p, std::initializer_list<VertexSet> sets, const char* what) {
    VertexSet seen;
    for (VertexSet s : sets) {
        if (!s.subset_of(p.all_vertices())) throw InputError(std::string(what) + ": unknown vertex");
        if (s.intersects(seen)) throw InputError(std::string(what) + ": sets must be disjoint");
        seen |= s;
    }
}

}  // namespace detail

inline std::vector<SetPair> decompose(const MixedGraph& p, VertexSet t, VertexSet z) {
    detail::check_disjoint(p, {t, z}, "decompose");
    std::vector<SetPair> out;
    const auto visible = visibility_flags(p);
    while (!t.empty()) {
        const VertexSet scope = t | z;
        auto comp = [&](VertexSet s) { return pc_component(p, s, scope, visible); };
        VertexSet x = VertexSet::single(t.front());
        VertexSet cx = comp(x);
        auto a_of = [&] {
            const VertexSet rest = scope - cx;
            return detail::pa_star(p, cx, scope) & detail::pa_star(p, comp(rest), scope);
        };
        VertexSet a = a_of();
        while (!a.subset_of(z)) {
            const VertexSet grown = x | detail::ch_star(p, a & t, scope);
            if (grown == x) break;  // no further growth possible
            x = grown;
            cx = comp(x);
            a = a_of();
        }
        const VertexSet t1 = cx & t;
        const VertexSet t2 = t - t1;
        out.emplace_back(t1, region(p, x, scope, visible) - t1);
        if (t2.empty()) break;
        z = region(p, scope - cx, scope, visible) - t2;
        t = t2;
    }
    return out;
}

// Throws NotIdentifiableError on FAIL.
inline SetPair do_see(const MixedGraph& p, VertexSet t, VertexSet z) {
    detail::check_disjoint(p, {t, z}, "do_see");
    const auto visible = visibility_flags(p);
    const std::vector<VertexSet> all_buckets = buckets(p);
    while (true) {
        const VertexSet tz = t | z;
        bool straddled = false;
        for (VertexSet b : all_buckets) {
            if (!b.intersects(tz) || b.subset_of(tz)) continue;
            straddled = true;
            const VertexSet scope = tz | b;
            const VertexSet c = pc_component(p, b - tz, scope, visible);
            if (detail::pa_star(p, c, scope).intersects(t)) throw NotIdentifiableError("do-see: straddling bucket has a possible parent in T");
            z = (z | b) - t;
            break;
        }
        if (!straddled) return {t, z};
    }
}

// Q[t \ x_bucket] from q = Q[t] by the bucket factorization. Prefixes follow
// bucket_partial_order on t unless another topological bucket order is given.
inline ExprPtr prop2_eliminate(const MixedGraph& p, VertexSet t, VertexSet x_bucket, const ExprPtr& q,
                               const std::vector<VertexSet>* order_override = nullptr) {
    if (!x_bucket.subset_of(t)) throw InputError("prop2_eliminate: bucket must lie inside t");
    const std::vector<VertexSet> order = order_override ? *order_override : bucket_partial_order(p, t);
    if (std::find(order.begin(), order.end(), x_bucket) == order.end())
        throw InputError("prop2_eliminate: x_bucket is not a bucket of the induced subgraph");
    const auto visible = visibility_flags(p);
    for (int v : x_bucket) {
        const VertexSet pc = pc_component(p, VertexSet::single(v), t, visible);
        const VertexSet ch = possible_children(p, VertexSet::single(v), t, true);
        if (!((pc & ch) - x_bucket).empty())
            throw NotIdentifiableError("prop2: bucket member has a possible child in its pc-component");
    }
    const VertexSet s = definite_c_component(p, x_bucket, t);
    std::vector<ExprPtr> kept, summed;
    VertexSet prefix;
    for (VertexSet b : order) {
        ExprPtr f = expr::conditional(q, b, prefix, t);
        (b.subset_of(s) ? summed : kept).push_back(std::move(f));
        prefix |= b;
    }
    kept.push_back(expr::sum(x_bucket, expr::product(std::move(summed))));
    return expr::product(std::move(kept));
}

namespace detail {

class Identifier {
public:
    explicit Identifier(const MixedGraph& p) : p_(p), visible_(visibility_flags(p)), mag_(pag_to_mag(p, {})) {}

    const MixedGraph& mag() const { return mag_; }

    ExprPtr identify(VertexSet c, VertexSet t, const ExprPtr& q) {
        if (c.empty()) return expr::one();
        if (c == t) return q;
        // Bucket elimination, latest buckets first.
        std::vector<VertexSet> order = bucket_partial_order(p_, t);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const VertexSet b = *it;
            if (!b.subset_of(t - c)) continue;
            const VertexSet pc = pc_component(p_, b, t, visible_);
            const VertexSet ch = possible_children(p_, b, t, true);
            if (!(pc & ch).subset_of(b)) continue;
            const ExprPtr next = simplify(prop2_eliminate(p_, t, b, q), &mag_);
            return identify(c, t - b, next);
        }
        for (VertexSet b : buckets(p_, c)) {
            const VertexSet rb = region(p_, b, c, visible_);
            if (rb == c) continue;
            const VertexSet rest = region(p_, c - rb, c, visible_);
            if (rest == c) continue;
            const ExprPtr num = expr::product({identify(rb, t, q), identify(rest, t, q)});
            return expr::quotient(num, identify(rb & rest, t, q));
        }
        throw NotIdentifiableError("identify: no bucket can be eliminated and no region split applies");
    }

private:
    const MixedGraph& p_;
    std::vector<char> visible_;
    MixedGraph mag_;
};

}  // namespace detail

// Throws NotIdentifiableError on FAIL.
inline ExprPtr identify_q(const MixedGraph& p, VertexSet c, VertexSet t, const ExprPtr& q) {
    if (!c.subset_of(t) || !t.subset_of(p.all_vertices())) throw InputError("identify_q: need c ⊆ t ⊆ vertices");
    detail::Identifier id(p);
    return simplify(id.identify(c, t, q), &id.mag());
}

// Expression for P_x(y | z), or nullopt when the algorithm fails.
inline std::optional<ExprPtr> cidp(const MixedGraph& p, VertexSet x, VertexSet y, VertexSet z) {
    if (p.kind() != GraphKind::PAG) throw InputError("cidp expects a PAG");
    detail::check_disjoint(p, {x, y, z}, "cidp");
    const VertexSet all = p.all_vertices();
    try {
        const VertexSet d = possible_ancestors(p, y | z, all - x) - z;
        std::vector<SetPair> fstar;
        for (const SetPair& f : decompose(p, d, z))
            if (f.first.intersects(y)) fstar.push_back(do_see(p, f.first, f.second));
        detail::Identifier id(p);
        const ExprPtr joint = expr::p(all, {}, all);
        std::vector<ExprPtr> factors;
        for (const auto& [di, zi] : fstar) {
            const ExprPtr q = id.identify(di | zi, all, joint);
            factors.push_back(expr::sum(di - y, expr::quotient(q, expr::sum(di, q))));
        }
        return simplify(expr::product(std::move(factors)), &id.mag());
    } catch (const NotIdentifiableError&) {
        return std::nullopt;
    }
}

}  // namespace ispec

#endif  // ISPEC_CIDP_HPP
