#ifndef ISPEC_EXPRESSION_HPP
#define ISPEC_EXPRESSION_HPP

#include <algorithm>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "ispec/errors.hpp"
#include "ispec/scm.hpp"
#include "ispec/vertex_set.hpp"

namespace ispec {

// ---------------------------------------------------------------------------
// Expression tree
// ---------------------------------------------------------------------------

enum class ExprKind { One, Joint, Conditional, Product, Quotient, Sum };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Immutable node. Field use by kind:
//   Joint:       tag, vars
//   Conditional: kids[0] = distribution, target, given, vars = its domain
//                (the variables the child is a distribution over)
//   Product:     kids
//   Quotient:    kids[0] / kids[1]
//   Sum:         vars summed out of kids[0]
struct Expr {
    ExprKind kind = ExprKind::One;
    std::string tag;
    VertexSet vars;
    VertexSet target;
    VertexSet given;
    std::vector<ExprPtr> kids;
};

inline const std::string kObservedTag = "P";

namespace expr {

inline ExprPtr one() {
    static const ExprPtr o = std::make_shared<const Expr>();
    return o;
}

inline ExprPtr joint(std::string tag, VertexSet vars) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Joint;
    e->tag = std::move(tag);
    e->vars = vars;
    return e;
}

inline ExprPtr conditional(ExprPtr child, VertexSet target, VertexSet given, VertexSet domain) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Conditional;
    e->kids = {std::move(child)};
    e->target = target;
    e->given = given;
    e->vars = domain;
    return e;
}

// Observational conditional P(target | given) over all of `all`.
inline ExprPtr p(VertexSet target, VertexSet given, VertexSet all) {
    return conditional(joint(kObservedTag, all), target, given, all);
}

inline ExprPtr product(std::vector<ExprPtr> factors) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Product;
    e->kids = std::move(factors);
    return e;
}

inline ExprPtr quotient(ExprPtr num, ExprPtr den) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Quotient;
    e->kids = {std::move(num), std::move(den)};
    return e;
}

inline ExprPtr sum(VertexSet vars, ExprPtr child) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Sum;
    e->vars = vars;
    e->kids = {std::move(child)};
    return e;
}

}  // namespace expr

// A leaf is an observational conditional P(target | given).
inline bool is_leaf(const Expr& e) {
    return e.kind == ExprKind::Conditional && e.kids[0]->kind == ExprKind::Joint && e.kids[0]->tag == kObservedTag &&
           e.vars == e.kids[0]->vars;
}

inline VertexSet free_vars(const Expr& e) {
    switch (e.kind) {
        case ExprKind::One: return {};
        case ExprKind::Joint: return e.vars;
        case ExprKind::Conditional: return e.target | e.given | (free_vars(*e.kids[0]) - e.vars);
        case ExprKind::Product:
        case ExprKind::Quotient: {
            VertexSet s;
            for (const auto& k : e.kids) s |= free_vars(*k);
            return s;
        }
        case ExprKind::Sum: return free_vars(*e.kids[0]) - e.vars;
    }
    return {};
}

namespace detail {

inline std::string set_key(VertexSet s) {
    std::string out;
    for (int v : s) {
        if (!out.empty()) out += ',';
        out += std::to_string(v);
    }
    return out;
}

}  // namespace detail

// Name-independent structural key; equal keys mean equal trees.
inline std::string key(const Expr& e) {
    switch (e.kind) {
        case ExprKind::One: return "1";
        case ExprKind::Joint: return e.tag + "[" + detail::set_key(e.vars) + "]";
        case ExprKind::Conditional:
            if (is_leaf(e)) return "P(" + detail::set_key(e.target) + "|" + detail::set_key(e.given) + ")";
            return "C(" + key(*e.kids[0]) + ";" + detail::set_key(e.target) + "|" + detail::set_key(e.given) + ";" +
                   detail::set_key(e.vars) + ")";
        case ExprKind::Product: {
            std::string s = "*(";
            for (std::size_t i = 0; i < e.kids.size(); ++i) s += (i ? " " : "") + key(*e.kids[i]);
            return s + ")";
        }
        case ExprKind::Quotient: return "/(" + key(*e.kids[0]) + " " + key(*e.kids[1]) + ")";
        case ExprKind::Sum: return "S[" + detail::set_key(e.vars) + "](" + key(*e.kids[0]) + ")";
    }
    return "?";
}

inline bool same(const ExprPtr& a, const ExprPtr& b) { return a == b || key(*a) == key(*b); }

namespace detail {

inline std::string names_of(VertexSet s, const std::vector<std::string>& names) {
    std::vector<std::string> v;
    for (int i : s) v.push_back(names.at(i));
    std::sort(v.begin(), v.end());
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
    return out;
}

}  // namespace detail

// Readable infix rendering, e.g. "[P(X2 | X1,Y) * P(Y | X3)] / sum_{Y}[...]".
inline std::string to_string(const Expr& e, const std::vector<std::string>& names) {
    using detail::names_of;
    switch (e.kind) {
        case ExprKind::One: return "1";
        case ExprKind::Joint: return e.tag + "(" + names_of(e.vars, names) + ")";
        case ExprKind::Conditional: {
            const std::string body = e.given.empty() ? names_of(e.target, names)
                                                     : names_of(e.target, names) + " | " + names_of(e.given, names);
            if (is_leaf(e)) return "P(" + body + ")";
            return "Q[" + to_string(*e.kids[0], names) + "](" + body + ")";
        }
        case ExprKind::Product: {
            std::string s;
            for (std::size_t i = 0; i < e.kids.size(); ++i) s += (i ? " * " : "") + to_string(*e.kids[i], names);
            return s;
        }
        case ExprKind::Quotient:
            return "[" + to_string(*e.kids[0], names) + "] / [" + to_string(*e.kids[1], names) + "]";
        case ExprKind::Sum: return "sum_{" + names_of(e.vars, names) + "}[" + to_string(*e.kids[0], names) + "]";
    }
    return "?";
}

// Prefix notation: (quotient (product P(..) P(..)) (sum {Y} ...)).
inline std::string to_prefix(const Expr& e, const std::vector<std::string>& names) {
    using detail::names_of;
    switch (e.kind) {
        case ExprKind::One: return "1";
        case ExprKind::Joint: return "(joint " + e.tag + " {" + names_of(e.vars, names) + "})";
        case ExprKind::Conditional:
            if (is_leaf(e)) return to_string(e, names);
            return "(conditional " + to_prefix(*e.kids[0], names) + " {" + names_of(e.target, names) + "} {" +
                   names_of(e.given, names) + "})";
        case ExprKind::Product: {
            std::string s = "(product";
            for (const auto& k : e.kids) s += " " + to_prefix(*k, names);
            return s + ")";
        }
        case ExprKind::Quotient: return "(quotient " + to_prefix(*e.kids[0], names) + " " + to_prefix(*e.kids[1], names) + ")";
        case ExprKind::Sum: return "(sum {" + names_of(e.vars, names) + "} " + to_prefix(*e.kids[0], names) + ")";
    }
    return "?";
}

inline nlohmann::json to_json(const Expr& e, const std::vector<std::string>& names) {
    auto set = [&](VertexSet s) {
        nlohmann::json a = nlohmann::json::array();
        for (int v : s) a.push_back(names.at(v));
        return a;
    };
    switch (e.kind) {
        case ExprKind::One: return {{"node", "one"}};
        case ExprKind::Joint: return {{"node", "joint"}, {"tag", e.tag}, {"vars", set(e.vars)}};
        case ExprKind::Conditional:
            if (is_leaf(e)) return {{"node", "conditional"}, {"of", "P(O)"}, {"target", set(e.target)}, {"given", set(e.given)}};
            return {{"node", "conditional"}, {"of", to_json(*e.kids[0], names)}, {"target", set(e.target)},
                    {"given", set(e.given)}, {"domain", set(e.vars)}};
        case ExprKind::Product: {
            nlohmann::json f = nlohmann::json::array();
            for (const auto& k : e.kids) f.push_back(to_json(*k, names));
            return {{"node", "product"}, {"factors", f}};
        }
        case ExprKind::Quotient:
            return {{"node", "quotient"}, {"num", to_json(*e.kids[0], names)}, {"den", to_json(*e.kids[1], names)}};
        case ExprKind::Sum: return {{"node", "sum"}, {"over", set(e.vars)}, {"of", to_json(*e.kids[0], names)}};
    }
    return {};
}

// Collects every observational leaf (deduplicated by key).
inline void collect_leaves(const ExprPtr& e, std::vector<ExprPtr>& out) {
    if (is_leaf(*e)) {
        for (const auto& x : out)
            if (same(x, e)) return;
        out.push_back(e);
        return;
    }
    if (e->kind == ExprKind::Conditional) {
        collect_leaves(e->kids[0], out);
        return;
    }
    for (const auto& k : e->kids) collect_leaves(k, out);
}

// ---------------------------------------------------------------------------
// Factors and numeric evaluation
// ---------------------------------------------------------------------------

// Table over an ascending list of discrete variables, first varying fastest.
struct Factor {
    std::vector<int> vars;
    std::vector<int> card;
    std::vector<double> values;

    static Factor scalar(double v) { return {{}, {}, {v}}; }

    std::size_t index(const std::vector<int>& full_assignment) const {
        std::size_t idx = 0, mult = 1;
        for (std::size_t i = 0; i < vars.size(); ++i) {
            idx += mult * static_cast<std::size_t>(full_assignment[vars[i]]);
            mult *= static_cast<std::size_t>(card[i]);
        }
        return idx;
    }
};

// Distribution over discrete variables that can produce conditional tables.
class ProbabilitySource {
public:
    virtual ~ProbabilitySource() = default;
    virtual int num_vars() const = 0;
    virtual int levels(int v) const = 0;
    // Table over target ∪ given holding P(target | given).
    virtual Factor conditional(VertexSet target, VertexSet given) const = 0;
};

namespace detail {

// Enumerates every assignment of `vars` inside a full-length vector.
template <typename Fn>
void enumerate(const std::vector<int>& vars, const std::vector<int>& card, std::vector<int>& full, Fn&& fn) {
    for (int v : vars) full[v] = 0;
    while (true) {
        fn();
        std::size_t i = 0;
        for (; i < vars.size(); ++i) {
            if (++full[vars[i]] < card[i]) break;
            full[vars[i]] = 0;
        }
        if (i == vars.size()) return;
    }
}

inline Factor make_factor(VertexSet vars, const ProbabilitySource& src) {
    Factor f;
    f.vars = vars.to_vector();
    std::size_t size = 1;
    for (int v : f.vars) {
        f.card.push_back(src.levels(v));
        size *= static_cast<std::size_t>(src.levels(v));
    }
    f.values.assign(size, 0.0);
    return f;
}

template <typename Op>
Factor combine(const Factor& a, const Factor& b, const ProbabilitySource& src, Op op) {
    VertexSet all = VertexSet::from(a.vars) | VertexSet::from(b.vars);
    Factor out = make_factor(all, src);
    std::vector<int> full(src.num_vars(), 0);
    std::size_t i = 0;
    enumerate(out.vars, out.card, full, [&] { out.values[i++] = op(a.values[a.index(full)], b.values[b.index(full)]); });
    return out;
}

inline Factor sum_out(const Factor& f, VertexSet s, const ProbabilitySource& src) {
    const VertexSet keep = VertexSet::from(f.vars) - s;
    double mult = 1;
    for (int v : s - VertexSet::from(f.vars)) mult *= src.levels(v);  // summing a variable the factor ignores
    Factor out = make_factor(keep, src);
    std::vector<int> full(src.num_vars(), 0);
    std::size_t i = 0;
    enumerate(f.vars, f.card, full, [&] { out.values[out.index(full)] += f.values[i++]; });
    if (mult != 1)
        for (double& v : out.values) v *= mult;
    return out;
}

inline Factor divide(const Factor& a, const Factor& b, const ProbabilitySource& src) {
    return combine(a, b, src, [](double x, double y) {
        if (y == 0) throw UndefinedConditionalError("division by a zero-probability term");
        return x / y;
    });
}

class Evaluator {
public:
    explicit Evaluator(const ProbabilitySource& src) : src_(src) {}

    const Factor& eval(const ExprPtr& e) {
        auto it = memo_.find(e.get());
        if (it != memo_.end()) return it->second;
        Factor f = compute(*e);
        keep_.push_back(e);
        return memo_.emplace(e.get(), std::move(f)).first->second;
    }

private:
    Factor compute(const Expr& e) {
        switch (e.kind) {
            case ExprKind::One: return Factor::scalar(1.0);
            case ExprKind::Joint:
                if (e.tag != kObservedTag) throw InputError("cannot evaluate distribution tag " + e.tag);
                return src_.conditional(e.vars, {});
            case ExprKind::Conditional: {
                if (is_leaf(e)) return src_.conditional(e.target - e.given, e.given);
                const Factor& child = eval(e.kids[0]);
                const Factor num = sum_out(child, e.vars - (e.target | e.given), src_);
                const Factor den = sum_out(child, e.vars - e.given, src_);
                return divide(num, den, src_);
            }
            case ExprKind::Product: {
                Factor acc = Factor::scalar(1.0);
                for (const auto& k : e.kids) acc = combine(acc, eval(k), src_, [](double x, double y) { return x * y; });
                return acc;
            }
            case ExprKind::Quotient: return divide(eval(e.kids[0]), eval(e.kids[1]), src_);
            case ExprKind::Sum: return sum_out(eval(e.kids[0]), e.vars, src_);
        }
        throw InternalError("unknown expression node");
    }

    const ProbabilitySource& src_;
    std::unordered_map<const Expr*, Factor> memo_;
    std::vector<ExprPtr> keep_;
};

}  // namespace detail

// Exact conditionals from a full joint table.
class JointSource : public ProbabilitySource {
public:
    explicit JointSource(const JointTable& t) : table_(t) {}
    int num_vars() const override { return table_.num_vars(); }
    int levels(int v) const override { return table_.levels().at(v); }

    Factor conditional(VertexSet target, VertexSet given) const override {
        const VertexSet both = target | given;
        Factor joint = marginal(both);
        if (given.empty()) return joint;
        const Factor den = marginal(given);
        return detail::divide(joint, den, *this);
    }

    Factor marginal(VertexSet s) const {
        auto it = cache_.find(s.bits());
        if (it != cache_.end()) return it->second;
        Factor f = detail::make_factor(s, *this);
        for (std::size_t idx = 0; idx < table_.size(); ++idx) f.values[f.index(table_.decode(idx))] += table_.at(idx);
        cache_.emplace(s.bits(), f);
        return f;
    }

private:
    const JointTable& table_;
    mutable std::map<std::uint64_t, Factor> cache_;
};

// Add-one smoothed frequency tables from discrete data. Column i of the table
// is variable i.
class EmpiricalSource : public ProbabilitySource {
public:
    EmpiricalSource(const DataTable& data, std::vector<int> columns) : data_(data), columns_(std::move(columns)) {
        for (int c : columns_) {
            const Column& col = data_.column(c);
            if (col.kind != ColumnKind::Discrete) throw UnsupportedModelError("column " + col.name + " is not discrete");
            levels_.push_back(col.levels);
        }
    }
    int num_vars() const override { return static_cast<int>(columns_.size()); }
    int levels(int v) const override { return levels_.at(v); }

    Factor conditional(VertexSet target, VertexSet given) const override {
        auto it = cache_.find({target.bits(), given.bits()});
        if (it != cache_.end()) return it->second;
        const VertexSet both = target | given;
        Factor counts = detail::make_factor(both, *this);
        std::vector<int> full(num_vars(), 0);
        for (std::size_t r = 0; r < data_.num_rows(); ++r) {
            for (int v : both) full[v] = static_cast<int>(data_.column(columns_[v]).values[r]);
            counts.values[counts.index(full)] += 1;
        }
        for (double& c : counts.values) c += 1;  // add-one smoothing per cell
        const Factor den = detail::sum_out(counts, target, *this);
        Factor out = detail::divide(counts, den, *this);
        cache_.emplace(std::make_pair(target.bits(), given.bits()), out);
        return out;
    }

private:
    const DataTable& data_;
    std::vector<int> columns_;
    std::vector<int> levels_;
    mutable std::map<std::pair<std::uint64_t, std::uint64_t>, Factor> cache_;
};

// Full table of the expression over its free variables.
inline Factor evaluate_table(const ExprPtr& e, const ProbabilitySource& src) {
    detail::Evaluator ev(src);
    return ev.eval(e);
}

inline double evaluate_expression(const ExprPtr& e, const ProbabilitySource& src, const Assignment& a) {
    const Factor f = evaluate_table(e, src);
    std::vector<int> full(src.num_vars(), 0);
    for (int v : f.vars) {
        auto it = a.find(v);
        if (it == a.end()) throw InputError("unbound variable in expression evaluation");
        full[v] = it->second;
    }
    return f.values[f.index(full)];
}

inline double evaluate_expression(const ExprPtr& e, const JointTable& dist, const Assignment& a) {
    return evaluate_expression(e, JointSource(dist), a);
}

}  // namespace ispec

#endif  // ISPEC_EXPRESSION_HPP
