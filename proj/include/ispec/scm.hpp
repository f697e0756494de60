#ifndef ISPEC_SCM_HPP
#define ISPEC_SCM_HPP

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ispec/data_table.hpp"
#include "ispec/graph.hpp"
#include "ispec/graph_ops.hpp"

namespace ispec {

using Assignment = std::map<int, int>;  // vertex -> level

// ---------------------------------------------------------------------------
// Joint tables over discrete variables
// ---------------------------------------------------------------------------

// Full joint over `levels.size()` variables, mixed radix with variable 0
// varying fastest.
class JointTable {
public:
    JointTable() = default;
    JointTable(std::vector<int> levels, std::vector<double> probs) : levels_(std::move(levels)), probs_(std::move(probs)) {
        std::size_t n = 1;
        for (int k : levels_) n *= static_cast<std::size_t>(k);
        if (n != probs_.size()) throw InputError("joint table size does not match levels");
    }

    int num_vars() const { return static_cast<int>(levels_.size()); }
    const std::vector<int>& levels() const { return levels_; }
    std::size_t size() const { return probs_.size(); }
    double at(std::size_t idx) const { return probs_[idx]; }

    std::vector<int> decode(std::size_t idx) const {
        std::vector<int> v(levels_.size());
        for (std::size_t i = 0; i < levels_.size(); ++i) {
            v[i] = static_cast<int>(idx % levels_[i]);
            idx /= levels_[i];
        }
        return v;
    }

    // P(partial assignment).
    double marginal(const Assignment& a) const {
        double s = 0;
        for (std::size_t idx = 0; idx < probs_.size(); ++idx) {
            const auto v = decode(idx);
            bool match = true;
            for (auto [var, val] : a)
                if (v[var] != val) {
                    match = false;
                    break;
                }
            if (match) s += probs_[idx];
        }
        return s;
    }

    double conditional(const Assignment& target, const Assignment& given) const {
        const double den = marginal(given);
        if (den <= 0) throw UndefinedConditionalError("conditioning event has probability zero");
        Assignment both = given;
        for (auto [k, v] : target) {
            auto it = both.find(k);
            if (it != both.end() && it->second != v) return 0.0;
            both[k] = v;
        }
        return marginal(both) / den;
    }

private:
    std::vector<int> levels_;
    std::vector<double> probs_;
};

// Calls fn(assignment) for every joint value of `vars`.
template <typename Fn>
void for_each_assignment(const std::vector<int>& vars, const std::vector<int>& levels, Fn&& fn) {
    Assignment a;
    for (int v : vars) a[v] = 0;
    while (true) {
        fn(std::as_const(a));
        std::size_t i = 0;
        for (; i < vars.size(); ++i) {
            if (++a[vars[i]] < levels[vars[i]]) break;
            a[vars[i]] = 0;
        }
        if (i == vars.size()) return;
    }
}

// ---------------------------------------------------------------------------
// Discrete SCM
// ---------------------------------------------------------------------------

// Conditional tables for each observed vertex of an ADMG given its observed
// parents and one latent per bidirected edge. Latents are binary with
// P(U=1) = latent_prior[i].
struct DiscreteScm {
    MixedGraph graph;
    std::vector<int> levels;
    std::vector<std::pair<int, int>> latents;
    std::vector<double> latent_prior;
    std::vector<std::vector<int>> parents;         // observed parents
    std::vector<std::vector<int>> latent_parents;  // indices into latents
    // cpt[v][config * levels[v] + value]; config is mixed radix over
    // parents (fastest first) then latent parents.
    std::vector<std::vector<double>> cpt;

    int num_vertices() const { return graph.num_vertices(); }

    std::size_t config_count(int v) const {
        std::size_t c = 1;
        for (int p : parents[v]) c *= static_cast<std::size_t>(levels[p]);
        return c << latent_parents[v].size();
    }

    std::size_t config_of(int v, const std::vector<int>& obs, const std::vector<int>& lat) const {
        std::size_t c = 0, mult = 1;
        for (int p : parents[v]) {
            c += mult * static_cast<std::size_t>(obs[p]);
            mult *= static_cast<std::size_t>(levels[p]);
        }
        for (int l : latent_parents[v]) {
            c += mult * static_cast<std::size_t>(lat[l]);
            mult *= 2;
        }
        return c;
    }

    double prob(int v, int value, const std::vector<int>& obs, const std::vector<int>& lat) const {
        return cpt[v][config_of(v, obs, lat) * levels[v] + value];
    }
};

// Topological order over the directed part.
inline std::vector<int> topological_order(const MixedGraph& g) {
    const int n = g.num_vertices();
    std::vector<int> indeg(n, 0), order;
    for (const Edge& e : g.edges())
        if (e.is_directed()) ++indeg[e.head()];
    for (int v = 0; v < n; ++v)
        if (indeg[v] == 0) order.push_back(v);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const int v = order[i];
        for (int id : g.incident(v)) {
            const Edge& e = g.edge(id);
            if (e.is_directed() && e.tail() == v && --indeg[e.head()] == 0) order.push_back(e.head());
        }
    }
    if (static_cast<int>(order.size()) != n) throw InputError("graph has a directed cycle");
    return order;
}

inline DiscreteScm discrete_scm_skeleton(const MixedGraph& g, std::vector<int> levels) {
    if (g.kind() != GraphKind::ADMG) throw InputError("discrete SCMs are defined over ADMGs");
    if (static_cast<int>(levels.size()) != g.num_vertices()) throw InputError("one level count per vertex");
    DiscreteScm s;
    s.graph = g;
    s.levels = std::move(levels);
    const int n = g.num_vertices();
    s.parents.assign(n, {});
    s.latent_parents.assign(n, {});
    for (const Edge& e : g.edges()) {
        if (e.is_directed()) {
            s.parents[e.head()].push_back(e.tail());
        } else if (e.is_bidirected()) {
            const int l = static_cast<int>(s.latents.size());
            s.latents.emplace_back(e.a, e.b);
            s.latent_prior.push_back(0.5);
            s.latent_parents[e.a].push_back(l);
            s.latent_parents[e.b].push_back(l);
        }
    }
    for (auto& p : s.parents) std::sort(p.begin(), p.end());
    s.cpt.assign(n, {});
    for (int v = 0; v < n; ++v) s.cpt[v].assign(s.config_count(v) * s.levels[v], 1.0 / s.levels[v]);
    return s;
}

// Fresh random conditional table for v: each row drawn uniformly from the
// simplex, then mixed with the uniform row so no entry is tiny.
inline void randomize_mechanism(DiscreteScm& s, int v, std::mt19937_64& rng) {
    std::exponential_distribution<double> ex(1.0);
    const int k = s.levels[v];
    for (std::size_t c = 0; c < s.config_count(v); ++c) {
        double total = 0;
        std::vector<double> row(k);
        for (double& r : row) total += (r = ex(rng));
        for (int i = 0; i < k; ++i) s.cpt[v][c * k + i] = 0.9 * row[i] / total + 0.1 / k;
    }
}

inline DiscreteScm random_discrete_scm(const MixedGraph& g, std::vector<int> levels, std::uint64_t seed) {
    DiscreteScm s = discrete_scm_skeleton(g, std::move(levels));
    std::mt19937_64 rng(seed);
    for (int v = 0; v < g.num_vertices(); ++v) randomize_mechanism(s, v, rng);
    return s;
}

// Copy of s whose mechanisms for members of m are redrawn; everything else,
// including the latent priors, is shared.
inline DiscreteScm with_shifted_mechanisms(const DiscreteScm& s, VertexSet m, std::uint64_t seed) {
    DiscreteScm out = s;
    std::mt19937_64 rng(seed);
    for (int v : m) randomize_mechanism(out, v, rng);
    return out;
}

// Exact joint over the observed vertices by enumerating latents. Vertices in
// `intervention` are clamped (their factor is removed and the value fixed).
inline JointTable scm_joint(const DiscreteScm& s, const Assignment& intervention = {}) {
    const int n = s.num_vertices();
    const int nl = static_cast<int>(s.latents.size());
    std::size_t total = 1;
    for (int k : s.levels) total *= static_cast<std::size_t>(k);
    std::vector<double> probs(total, 0.0);
    const JointTable shape(s.levels, std::vector<double>(total, 0.0));
    std::vector<int> lat(nl, 0);
    for (std::uint64_t lbits = 0; lbits < (std::uint64_t{1} << nl); ++lbits) {
        double pl = 1;
        for (int l = 0; l < nl; ++l) {
            lat[l] = static_cast<int>((lbits >> l) & 1u);
            pl *= lat[l] ? s.latent_prior[l] : 1 - s.latent_prior[l];
        }
        for (std::size_t idx = 0; idx < total; ++idx) {
            const auto obs = shape.decode(idx);
            double p = pl;
            for (int v = 0; v < n && p > 0; ++v) {
                auto it = intervention.find(v);
                if (it != intervention.end()) {
                    if (obs[v] != it->second) p = 0;
                } else {
                    p *= s.prob(v, obs[v], obs, lat);
                }
            }
            probs[idx] += p;
        }
    }
    return JointTable(s.levels, std::move(probs));
}

// P_x(y | z) by truncated factorization.
inline double interventional_oracle(const DiscreteScm& s, const Assignment& x, const Assignment& y, const Assignment& z) {
    return scm_joint(s, x).conditional(y, z);
}

inline DataTable sample_discrete_scm(const DiscreteScm& s, std::size_t n, std::uint64_t seed,
                                     const Assignment& intervention = {}) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const auto order = topological_order(s.graph);
    const int nv = s.num_vertices();
    std::vector<Column> cols(nv);
    for (int v = 0; v < nv; ++v) {
        cols[v].name = s.graph.name(v);
        cols[v].kind = ColumnKind::Discrete;
        cols[v].levels = s.levels[v];
        cols[v].values.reserve(n);
    }
    std::vector<int> obs(nv), lat(s.latents.size());
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t l = 0; l < lat.size(); ++l) lat[l] = unif(rng) < s.latent_prior[l] ? 1 : 0;
        for (int v : order) {
            auto it = intervention.find(v);
            if (it != intervention.end()) {
                obs[v] = it->second;
                continue;
            }
            const double u = unif(rng);
            double acc = 0;
            int val = s.levels[v] - 1;
            for (int k = 0; k < s.levels[v]; ++k) {
                acc += s.prob(v, k, obs, lat);
                if (u < acc) {
                    val = k;
                    break;
                }
            }
            obs[v] = val;
        }
        for (int v = 0; v < nv; ++v) cols[v].values.push_back(obs[v]);
    }
    return DataTable(std::move(cols));
}

// ---------------------------------------------------------------------------
// Linear-Gaussian SCM
// ---------------------------------------------------------------------------

struct LinearEquation {
    std::vector<std::pair<int, double>> parents;  // (variable, coefficient)
    double intercept = 0;
    double noise_sd = 1;
};

// Variables listed in topological order; hidden ones are sampled but not
// emitted.
struct LinearGaussianScm {
    std::vector<std::string> names;
    std::vector<char> hidden;
    std::vector<LinearEquation> equations;

    int index_of(const std::string& n) const {
        for (int i = 0; i < static_cast<int>(names.size()); ++i)
            if (names[i] == n) return i;
        throw InputError("unknown variable: " + n);
    }

    void validate() const {
        if (names.size() != hidden.size() || names.size() != equations.size())
            throw InputError("linear SCM: inconsistent sizes");
        for (std::size_t v = 0; v < equations.size(); ++v) {
            if (!(equations[v].noise_sd > 0)) throw InputError("linear SCM: noise variances must be positive");
            for (auto [p, c] : equations[v].parents)
                if (p < 0 || p >= static_cast<int>(v)) throw InputError("linear SCM: parents must precede children");
        }
    }
};

inline DataTable simulate_linear(const LinearGaussianScm& scm, std::size_t n, std::uint64_t seed) {
    scm.validate();
    if (n < 1) throw InputError("sample size must be at least 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> std_normal(0.0, 1.0);
    const int nv = static_cast<int>(scm.names.size());
    std::vector<std::vector<double>> vals(nv, std::vector<double>(n));
    for (std::size_t r = 0; r < n; ++r)
        for (int v = 0; v < nv; ++v) {
            const LinearEquation& eq = scm.equations[v];
            double x = eq.intercept;
            for (auto [p, c] : eq.parents) x += c * vals[p][r];
            vals[v][r] = x + eq.noise_sd * std_normal(rng);
        }
    std::vector<Column> cols;
    for (int v = 0; v < nv; ++v)
        if (!scm.hidden[v]) cols.push_back({scm.names[v], ColumnKind::Continuous, 0, std::move(vals[v])});
    return DataTable(std::move(cols));
}

// The five-equation simulation system; `alpha` scales the confounder in the
// equation for X1. Emitted columns: X1, X2, X3, Y.
inline LinearGaussianScm confounded_scm(double alpha) {
    // order: X3, U, Y, X1, X2
    LinearGaussianScm s;
    s.names = {"X3", "U", "Y", "X1", "X2"};
    s.hidden = {0, 1, 0, 0, 0};
    s.equations = {
        {{}, 0, 0.1},
        {{}, 0, 0.1},
        {{{0, 0.5}, {1, 5.0}}, 0, 0.1},
        {{{1, alpha}}, 0, 0.1},
        {{{2, 0.2}, {3, -1.0}}, 0, 0.1},
    };
    return s;
}

inline DataTable simulate_confounded(std::size_t n, double alpha, std::uint64_t seed) {
    return simulate_linear(confounded_scm(alpha), n, seed).select({"X1", "X2", "X3", "Y"});
}

// ---------------------------------------------------------------------------
// Synthetic hospital cohort
// ---------------------------------------------------------------------------

// Hospital (3 levels) -> Age, Hospital -> LabTime, Age -> Mortality,
// Bicarbonate <-> Mortality, Mortality -> LabTime. LabTime follows the
// practice-pattern probabilities; it flips its association with mortality
// between the first and third hospital.
inline DiscreteScm hospital_scm() {
    const MixedGraph g(GraphKind::ADMG, {"Hospital", "Age", "Bicarbonate", "LabTime", "Mortality"},
                       {Edge::directed(0, 1), Edge::directed(0, 3), Edge::directed(1, 4), Edge::bidirected(2, 4),
                        Edge::directed(4, 3)});
    DiscreteScm s = discrete_scm_skeleton(g, {3, 3, 2, 2, 2});
    // Cohort sizes 16608 / 5621 / 2558.
    s.cpt[0] = {16608.0 / 24787, 5621.0 / 24787, 2558.0 / 24787};
    // Age | Hospital: older populations in later hospitals.
    s.cpt[1] = {0.40, 0.35, 0.25, 0.30, 0.40, 0.30, 0.25, 0.35, 0.40};
    // Bicarbonate | U.
    s.cpt[2] = {0.75, 0.25, 0.30, 0.70};
    // Mortality | Age, U  (config = age + 3 * u)
    s.cpt[4] = {0.92, 0.08, 0.85, 0.15, 0.75, 0.25, 0.70, 0.30, 0.55, 0.45, 0.40, 0.60};
    // LabTime | Hospital, Mortality  (parents sorted: Hospital, Mortality)
    const double p1[3][2] = {{0.40, 0.65}, {0.50, 0.50}, {0.65, 0.40}};  // [h][mort] = P(L=1)
    s.cpt[3].assign(6 * 2, 0);
    for (int h = 0; h < 3; ++h)
        for (int m = 0; m < 2; ++m) {
            const std::size_t c = static_cast<std::size_t>(h + 3 * m);
            s.cpt[3][c * 2 + 1] = p1[h][m];
            s.cpt[3][c * 2 + 0] = 1 - p1[h][m];
        }
    return s;
}

}  // namespace ispec

#endif  // ISPEC_SCM_HPP
