#ifndef ISPEC_SIMPLIFY_HPP
#define ISPEC_SIMPLIFY_HPP

#include <algorithm>
#include <vector>

#include "ispec/expression.hpp"
#include "ispec/graph.hpp"
#include "ispec/graph_ops.hpp"

namespace ispec {

namespace detail {

class Simplifier {
public:
    // mag may be null; when set, leaf conditioning sets are pruned with
    // m-separation and the chain rule may use implied independences.
    explicit Simplifier(const MixedGraph* mag) : mag_(mag) {}

    ExprPtr run(ExprPtr e) {
        std::string prev = key(*e);
        for (int i = 0; i < 200; ++i) {
            e = visit(e);
            std::string cur = key(*e);
            if (cur == prev) return e;
            prev = std::move(cur);
        }
        return e;
    }

private:
    ExprPtr visit(const ExprPtr& e) {
        switch (e->kind) {
            case ExprKind::One:
            case ExprKind::Joint: return e;
            case ExprKind::Conditional:
                if (is_leaf(*e)) return leaf(e->target, e->given, e->vars);
                return conditional(visit(e->kids[0]), *e);
            case ExprKind::Product: {
                std::vector<ExprPtr> ks;
                for (const auto& k : e->kids) ks.push_back(visit(k));
                return product(std::move(ks));
            }
            case ExprKind::Quotient: return quotient(visit(e->kids[0]), visit(e->kids[1]));
            case ExprKind::Sum: return sum(e->vars, visit(e->kids[0]));
        }
        return e;
    }

    ExprPtr leaf(VertexSet target, VertexSet given, VertexSet all) {
        target -= given;
        if (target.empty()) return expr::one();
        if (mag_) {
            for (int c : given) {
                if (m_separated(*mag_, target, VertexSet::single(c), given - VertexSet::single(c))) given.erase(c);
            }
        }
        return expr::p(target, given, all);
    }

    ExprPtr conditional(const ExprPtr& child, const Expr& e) {
        if ((e.target - e.given).empty()) return expr::one();
        if (is_leaf(*child) && e.vars == child->target && (e.target | e.given).subset_of(child->target))
            return leaf(e.target, e.given | child->given, child->vars);
        const ExprPtr num = sum(e.vars - (e.target | e.given), child);
        const ExprPtr den = sum(e.vars - e.given, child);
        return quotient(num, den);
    }

    static std::vector<ExprPtr> factors_of(const ExprPtr& e) {
        if (e->kind == ExprKind::Product) return e->kids;
        if (e->kind == ExprKind::One) return {};
        return {e};
    }

    static ExprPtr sorted_product(std::vector<ExprPtr> fs) {
        std::vector<ExprPtr> kept;
        for (auto& f : fs)
            if (f->kind != ExprKind::One) kept.push_back(std::move(f));
        if (kept.empty()) return expr::one();
        if (kept.size() == 1) return kept[0];
        std::vector<std::pair<std::string, ExprPtr>> keyed;
        for (auto& f : kept) keyed.emplace_back(key(*f), f);
        std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<ExprPtr> out;
        for (auto& [k, f] : keyed) out.push_back(f);
        return expr::product(std::move(out));
    }

    ExprPtr product(std::vector<ExprPtr> ks) {
        std::vector<ExprPtr> flat, nums, dens;
        bool has_quotient = false;
        for (const auto& k : ks) {
            if (k->kind == ExprKind::Product) {
                for (const auto& kk : k->kids) flat.push_back(kk);
            } else {
                flat.push_back(k);
            }
        }
        for (const auto& f : flat) {
            if (f->kind == ExprKind::Quotient) {
                has_quotient = true;
                for (const auto& x : factors_of(f->kids[0])) nums.push_back(x);
                for (const auto& x : factors_of(f->kids[1])) dens.push_back(x);
            } else {
                nums.push_back(f);
            }
        }
        if (has_quotient) return quotient(sorted_product(nums), sorted_product(dens));
        return sorted_product(flat);
    }

    ExprPtr quotient(ExprPtr num, ExprPtr den) {
        if (num->kind == ExprKind::Quotient) {
            den = product({num->kids[1], den});
            num = num->kids[0];
        }
        if (den->kind == ExprKind::Quotient) {
            num = product({num, den->kids[1]});
            den = den->kids[0];
        }
        std::vector<ExprPtr> ns = factors_of(num), ds = factors_of(den);
        // Cancel identical factors.
        for (auto it = ns.begin(); it != ns.end();) {
            auto jt = std::find_if(ds.begin(), ds.end(), [&](const ExprPtr& d) { return same(d, *it); });
            if (jt != ds.end()) {
                ds.erase(jt);
                it = ns.erase(it);
            } else {
                ++it;
            }
        }
        // P(A,B | C) / P(B | C) = P(A | B,C).
        for (auto& n : ns) {
            if (!is_leaf(*n)) continue;
            for (auto jt = ds.begin(); jt != ds.end(); ++jt) {
                const ExprPtr& d = *jt;
                if (!is_leaf(*d) || d->given != n->given || d->vars != n->vars) continue;
                if (!d->target.subset_of(n->target) || d->target == n->target) continue;
                n = leaf(n->target - d->target, n->given | d->target, n->vars);
                ds.erase(jt);
                break;
            }
        }
        ExprPtr out_num = sorted_product(ns);
        if (ds.empty()) return out_num;
        return expr::quotient(out_num, sorted_product(ds));
    }

    // Σ_v P(H1 | C1) P(H2 | C2) with v ∈ H1 ⊆ C2, C1 ⊆ C2 \ H1. Needs
    // H1 ⊥ (C2 \ H1 \ C1) | C1 unless that set is empty.
    bool chain_applies(const Expr& f1, const Expr& f2, int v) const {
        if (!is_leaf(f1) || !is_leaf(f2) || f1.vars != f2.vars) return false;
        if (!f1.target.contains(v) || !f1.target.subset_of(f2.given)) return false;
        const VertexSet rest = f2.given - f1.target;
        if (!f1.given.subset_of(rest)) return false;
        const VertexSet extra = rest - f1.given;
        if (extra.empty()) return true;
        return mag_ && m_separated(*mag_, f1.target, extra, f1.given);
    }

    ExprPtr sum(VertexSet s, ExprPtr child) {
        if (s.empty()) return child;
        if (child->kind == ExprKind::Sum) return sum(s | child->vars, child->kids[0]);
        if (child->kind == ExprKind::Quotient && !free_vars(*child->kids[1]).intersects(s))
            return quotient(sum(s, child->kids[0]), child->kids[1]);
        std::vector<ExprPtr> fs = factors_of(child);
        std::vector<ExprPtr> outside, inside;
        for (const auto& f : fs) (free_vars(*f).intersects(s) ? inside : outside).push_back(f);
        if (!outside.empty() && !inside.empty())
            return product({sorted_product(outside), sum(s, sorted_product(inside))});

        bool changed = true;
        while (changed) {
            changed = false;
            for (int v : s) {
                std::vector<std::size_t> idx;
                for (std::size_t i = 0; i < inside.size(); ++i)
                    if (free_vars(*inside[i]).contains(v)) idx.push_back(i);
                if (idx.size() == 1) {
                    const ExprPtr& f = inside[idx[0]];
                    if (is_leaf(*f) && f->target.contains(v) && !f->given.contains(v)) {
                        const VertexSet t = f->target - VertexSet::single(v);
                        inside[idx[0]] = t.empty() ? expr::one() : expr::p(t, f->given, f->vars);
                        s.erase(v);
                        changed = true;
                        break;
                    }
                } else if (idx.size() == 2) {
                    for (int order = 0; order < 2 && !changed; ++order) {
                        const ExprPtr& f1 = inside[idx[order]];
                        const ExprPtr& f2 = inside[idx[1 - order]];
                        if (!chain_applies(*f1, *f2, v)) continue;
                        const VertexSet t = (f1->target | f2->target) - VertexSet::single(v);
                        const VertexSet g = f2->given - f1->target;
                        inside[idx[0]] = expr::p(t, g, f1->vars);
                        inside.erase(inside.begin() + static_cast<std::ptrdiff_t>(idx[1]));
                        s.erase(v);
                        changed = true;
                    }
                    if (changed) break;
                }
            }
        }
        ExprPtr body = sorted_product(inside);
        if (s.empty()) return body;
        return expr::sum(s, body);
    }

    const MixedGraph* mag_;
};

}  // namespace detail

// Algebraic clean-up preserving the value for every distribution Markov to
// `mag` (or for every distribution when mag is null).
inline ExprPtr simplify(ExprPtr e, const MixedGraph* mag = nullptr) {
    e = detail::Simplifier(nullptr).run(std::move(e));
    if (mag) e = detail::Simplifier(mag).run(std::move(e));
    return e;
}

// Order-insensitive structural equality after simplification.
inline bool expressions_equal(const ExprPtr& a, const ExprPtr& b, const MixedGraph* mag = nullptr) {
    return key(*simplify(a, mag)) == key(*simplify(b, mag));
}

}  // namespace ispec

#endif  // ISPEC_SIMPLIFY_HPP
