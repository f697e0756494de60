// Acceptance checks. Run `acceptance <id>` for one criterion or
// `acceptance all`; each prints one PASS/FAIL line.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "ispec/ispec.hpp"
#include "oracles.hpp"

using namespace ispec;

namespace {

struct Verdict {
    bool pass;
    std::string detail;
};

struct Criterion {
    std::string id;
    std::string title;
    double budget_seconds;
    std::function<Verdict()> run;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ---------------------------------------------------------------------------

Verdict c1_identification_fixture() {
    const auto p = oracle::shift_pag();
    const auto got = cidp(p, p.set_of({"X1"}), p.set_of({"Y"}), p.set_of({"X2", "X3"}));
    if (!got) return {false, "cidp returned FAIL"};
    const VertexSet all = p.all_vertices();
    const int X1 = p.index_of("X1"), X2 = p.index_of("X2"), X3 = p.index_of("X3"), Y = p.index_of("Y");
    const ExprPtr body = expr::product({expr::p({Y}, {X3}, all), expr::p({X2}, {Y, X1}, all)});
    const ExprPtr want = expr::quotient(body, expr::sum({Y}, body));
    const MixedGraph mag = pag_to_mag(p, {});
    const bool eq = key(*simplify(*got, &mag)) == key(*simplify(want, &mag));
    return {eq, to_string(**got, p.names())};
}

std::vector<Assignment> assignments(VertexSet vars, const std::vector<int>& levels) {
    std::vector<Assignment> out{{}};
    for (int v : vars) {
        std::vector<Assignment> next;
        for (const auto& a : out)
            for (int k = 0; k < levels[v]; ++k) {
                Assignment b = a;
                b[v] = k;
                next.push_back(b);
            }
        out = std::move(next);
    }
    return out;
}

Assignment restrict_to(const Assignment& a, VertexSet s) {
    Assignment out;
    for (auto [k, v] : a)
        if (s.contains(k)) out[k] = v;
    return out;
}

Verdict c2_cidp_soundness() {
    std::mt19937_64 rng(2);
    int graphs = 0, calls = 0, checked = 0;
    double worst = 0;
    for (int rep = 0; rep < 2000 && graphs < 100; ++rep) {
        const int n = 3 + static_cast<int>(rng() % 3);
        const auto g = oracle::random_admg(rng, n, 0.45, 0.15);
        const auto p = fci(separation_oracle(g), g.names());
        const DiscreteScm s = random_discrete_scm(g, std::vector<int>(n, 2), 1000 + rep);
        const JointTable j = scm_joint(s);
        bool any = false;
        for (int q = 0; q < 12; ++q) {
            const int xv = static_cast<int>(rng() % n);
            const int yv = (xv + 1 + static_cast<int>(rng() % (n - 1))) % n;
            VertexSet x{xv}, y{yv}, z;
            for (int v = 0; v < n; ++v) {
                if (v == xv || v == yv) continue;
                const auto r = rng() % 4;
                if (r == 1) x.insert(v);
                if (r == 2) y.insert(v);
                if (r == 3) z.insert(v);
            }
            const auto e = cidp(p, x, y, z);
            if (!e) continue;
            any = true;
            ++calls;
            const Factor t = evaluate_table(*e, JointSource(j));
            for (const auto& a : assignments(x | y | z, s.levels)) {
                double want;
                try {
                    want = interventional_oracle(s, restrict_to(a, x), restrict_to(a, y), restrict_to(a, z));
                } catch (const UndefinedConditionalError&) {
                    continue;
                }
                std::vector<int> full(n, 0);
                for (auto [k, v] : a) full[k] = v;
                worst = std::max(worst, std::abs(t.values[t.index(full)] - want));
                ++checked;
            }
        }
        graphs += any;
    }
    const bool pass = graphs == 100 && worst <= 1e-9;
    return {pass, std::to_string(graphs) + " graphs, " + std::to_string(calls) + " identified queries, " +
                      std::to_string(checked) + " assignments, max gap " + fmt("%.3g", worst)};
}

InvarianceQuery random_query(std::mt19937_64& rng, int n) {
    InvarianceQuery q;
    const int yv = static_cast<int>(rng() % n);
    q.y.insert(yv);
    for (int v = 0; v < n; ++v) {
        if (v == yv) continue;
        const auto r = rng() % 4;
        if (r == 1) q.x.insert(v);
        if (r == 2) q.z.insert(v);
        if (r == 3) q.x.insert(v), q.z.insert(v);
    }
    return q;
}

Verdict c3_invariance_equivalence() {
    std::mt19937_64 rng(3);
    int agree = 0, stable = 0;
    for (int rep = 0; rep < 300; ++rep) {
        const int n = 2 + static_cast<int>(rng() % 5);
        const auto g = oracle::random_admg(rng, n, 0.45, 0.2);
        const auto p = fci(separation_oracle(g), g.names());
        for (int k = 0; k < 5; ++k) {
            const auto q = random_query(rng, n);
            const bool a = invariant_conditional(p, q);
            agree += a == invariant_conditional_mag(p, q);
            stable += a;
        }
    }
    return {agree == 1500, std::to_string(agree) + "/1500 agree, " + std::to_string(stable) + " stable"};
}

Verdict c4_m_separation() {
    std::mt19937_64 rng(4);
    long long triples = 0, agree = 0;
    for (int rep = 0; rep < 200; ++rep) {
        const int n = 2 + static_cast<int>(rng() % 6);
        const auto g = oracle::random_admg(rng, n, 0.35, 0.25);
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y) {
                if (x == y) continue;
                const VertexSet rest = g.all_vertices() - VertexSet{x, y};
                for (int k = 0; k <= rest.size(); ++k)
                    for_each_subset_of_size(rest, k, [&](VertexSet z) {
                        ++triples;
                        agree += m_connected(g, x, y, z) == oracle::brute_m_connected(g, x, y, z);
                        return false;
                    });
            }
    }
    return {agree == triples, std::to_string(agree) + "/" + std::to_string(triples) + " triples agree"};
}

bool same_pag(const MixedGraph& a, const MixedGraph& b) {
    if (a.names() != b.names()) return false;
    for (int u = 0; u < a.num_vertices(); ++u)
        for (int v = 0; v < a.num_vertices(); ++v)
            if (u != v && a.mark(u, v) != b.mark(u, v)) return false;
    return true;
}

Verdict c5a_oracle_structure() {
    const auto g = oracle::shift_admg();
    Knowledge k;
    k.forbidden_into.insert(g.index_of("E"));
    const auto p = fci(separation_oracle(g), g.names(), k);
    return {same_pag(p, oracle::shift_pag()), "fci on the d-separation oracle of the five-vertex example"};
}

Verdict c5b_pooled_structure() {
    const auto truth = oracle::shift_pag();
    int full = 0, observed = 0, e_isolated = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto p = pooled_fci({simulate_confounded(50000, 4, 100 + 2 * seed), simulate_confounded(50000, 8, 101 + 2 * seed)},
                                  TestKind::FisherZ, 0.01);
        bool obs_ok = true, all_ok = true;
        for (const auto& a : truth.names())
            for (const auto& b : truth.names()) {
                if (a == b) continue;
                const bool same = p.adjacent(p.index_of(a), p.index_of(b)) == truth.adjacent(truth.index_of(a), truth.index_of(b));
                all_ok &= same;
                if (a != "E" && b != "E") obs_ok &= same;
            }
        full += all_ok;
        observed += obs_ok;
        e_isolated += p.incident(p.index_of("E")).empty();
    }
    return {full >= 18, std::to_string(full) + "/20 seeds match shift PAG adjacencies (need 18); observed skeleton " +
                            std::to_string(observed) + "/20; E isolated in " + std::to_string(e_isolated) + "/20"};
}

struct SweepModels {
    SearchResult full, conditional;
    std::vector<NamedModel> models;
};

SweepModels sweep_models() {
    const DataTable train = pool_with_env({simulate_confounded(50000, 4, 41), simulate_confounded(50000, 8, 42)});
    const auto p = oracle::shift_pag();
    const InvarianceSpec spec{p, p.set_of({"X1"})};
    SearchOptions opt;
    opt.seed = 5;
    SweepModels m;
    m.full = i_spec_search(spec, "Y", train, opt);
    opt.mode = SearchMode::ConditionalOnly;
    m.conditional = i_spec_search(spec, "Y", train, opt);
    const auto split = train_test_split(train, opt.train_fraction, opt.seed);
    m.models = {{"unstable", fit_unstable_baseline(split.first, "Y", {"X1", "X2", "X3"}, Backend::LinearGaussian)},
                {"conditional", *m.conditional.best().model},
                {"interventional", *m.full.best().model}};
    return m;
}

Verdict c6_shift_sweep() {
    const SweepModels m = sweep_models();
    const auto rows = shift_sweep(m.models, linspace(-5, 17, 100), 10000, 77);
    bool a = true, b = true;
    double lo[3] = {1e300, 1e300, 1e300}, hi[3] = {0, 0, 0}, sum[3] = {0, 0, 0};
    for (std::size_t i = 0; i < rows.size(); i += 3) {
        const double cond = rows[i + 1].mse, intv = rows[i + 2].mse;
        a &= std::abs(cond - 0.26) <= 0.02;
        b &= intv < cond;
        for (int k = 0; k < 3; ++k) {
            lo[k] = std::min(lo[k], rows[i + k].mse);
            hi[k] = std::max(hi[k], rows[i + k].mse);
            sum[k] += rows[i + k].mse;
        }
    }
    const double spread_c = (hi[1] - lo[1]) / (sum[1] / 100), spread_i = (hi[2] - lo[2]) / (sum[2] / 100);
    const bool c = spread_c < 0.05 && spread_i < 0.05;
    const auto at4 = shift_sweep(m.models, {4.0}, 10000, 77), at8 = shift_sweep(m.models, {8.0}, 10000, 77);
    auto unstable_best = [](const std::vector<SweepRow>& r) { return r[0].mse < r[1].mse && r[0].mse < r[2].mse; };
    const bool d = unstable_best(at4) && unstable_best(at8);
    std::ostringstream s;
    s << rows.size() << " rows; (a) " << (a ? "ok" : "no") << " cond " << fmt("%.4f", lo[1]) << ".." << fmt("%.4f", hi[1])
      << "; (b) " << (b ? "ok" : "no") << " intv " << fmt("%.4f", lo[2]) << ".." << fmt("%.4f", hi[2]) << "; (c) "
      << (c ? "ok" : "no") << " spread " << fmt("%.3f", spread_c) << "/" << fmt("%.3f", spread_i)
      << "; (d) " << (d ? "ok" : "no") << " unstable@4 " << fmt("%.4f", at4[0].mse) << " @8 " << fmt("%.4f", at8[0].mse);
    return {rows.size() == 300 && a && b && c && d, s.str()};
}

// Second half of (d): at alpha = 17 the unstable MSE must be at least twice
// the conditional model's.
Verdict c6_far_shift_ratio() {
    const SweepModels m = sweep_models();
    const auto at17 = shift_sweep(m.models, {17.0}, 10000, 77);
    const double ratio = at17[0].mse / at17[1].mse;
    return {ratio >= 2, "unstable " + fmt("%.4f", at17[0].mse) + " vs conditional " + fmt("%.4f", at17[1].mse) +
                            ", ratio " + fmt("%.2f", ratio) + " (need 2)"};
}

Verdict c7_subsumption() {
    const SweepModels m = sweep_models();
    std::map<VertexSet, std::string> full;
    for (const auto& c : m.full.stable) full[c.z] = key(*c.expression);
    bool contained = true;
    for (const auto& c : m.conditional.stable) {
        const auto it = full.find(c.z);
        contained &= it != full.end() && it->second == key(*c.expression);
    }
    const bool strict = contained && m.full.stable.size() > m.conditional.stable.size();
    const double lf = m.full.best().validation_loss, lc = m.conditional.best().validation_loss;
    return {strict && lf < lc, std::to_string(m.conditional.stable.size()) + " conditional-only candidates inside " +
                                   std::to_string(m.full.stable.size()) + " full; winner MSE " + fmt("%.4f", lf) +
                                   " vs " + fmt("%.4f", lc)};
}

double table_gap(const Factor& a, const Factor& b, const std::vector<int>& levels) {
    double gap = 0;
    for (const auto& asg : assignments(VertexSet::first_n(static_cast<int>(levels.size())), levels)) {
        std::vector<int> full(levels.size(), 0);
        for (auto [k, v] : asg) full[k] = v;
        gap = std::max(gap, std::abs(a.values[a.index(full)] - b.values[b.index(full)]));
    }
    return gap;
}

Verdict c8_stability() {
    int candidates = 0, graphs = 0;
    double worst = 0;
    auto check = [&](const MixedGraph& g, const MixedGraph& p, const DiscreteScm& s, int target, VertexSet m,
                     std::uint64_t seed) {
        const JointTable before = scm_joint(s), after = scm_joint(with_shifted_mechanisms(s, m, seed));
        SearchOptions opt;
        opt.backend = Backend::DiscreteExact;
        opt.seed = seed;
        const auto r = i_spec_search({p, m}, g.name(target), sample_discrete_scm(s, 2000, seed), opt);
        for (const auto& c : r.stable) {
            worst = std::max(worst, table_gap(evaluate_table(c.expression, JointSource(before)),
                                              evaluate_table(c.expression, JointSource(after)), s.levels));
            ++candidates;
        }
        ++graphs;
        const auto all = g.all_vertices();
        const auto baseline = expr::p(VertexSet::single(target), all - VertexSet::single(target), all);
        return table_gap(evaluate_table(baseline, JointSource(before)), evaluate_table(baseline, JointSource(after)), s.levels);
    };
    const auto g = oracle::shift_admg_observed();
    const auto p = fci(separation_oracle(g), g.names());
    const DiscreteScm s = random_discrete_scm(g, {2, 2, 2, 2}, 8);
    const double baseline_gap = check(g, p, s, g.index_of("Y"), g.set_of({"X1"}), 80);
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 60; ++rep) {
        const int n = 3 + static_cast<int>(rng() % 3);
        const auto gr = oracle::random_admg(rng, n, 0.45, 0.2);
        const auto pr = fci(separation_oracle(gr), gr.names());
        const int t = static_cast<int>(rng() % n);
        VertexSet m;
        for (int v = 0; v < n; ++v)
            if (v != t && rng() % 3 == 0) m.insert(v);
        check(gr, pr, random_discrete_scm(gr, std::vector<int>(n, 2), 900 + rep), t, m, 500 + rep);
    }
    return {worst <= 1e-9 && baseline_gap > 1e-3,
            std::to_string(candidates) + " candidates on " + std::to_string(graphs) + " graphs, max shift gap " +
                fmt("%.3g", worst) + "; unstable baseline gap " + fmt("%.3f", baseline_gap)};
}

Verdict c9_hospital() {
    int excluded = 0;
    std::vector<double> gaps;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const DataTable d = sample_discrete_scm(hospital_scm(), 60000, 300 + seed).with_env("Hospital");
        const MixedGraph p = fci_on_table(d, TestKind::DegenerateGaussian, 0.01);
        SearchOptions opt;
        opt.backend = Backend::DiscreteExact;
        opt.seed = seed;
        const auto r = i_spec_search({p, p.set_of({"LabTime"})}, "Mortality", d, opt);
        if (r.failed()) continue;
        const Candidate& best = r.best();
        excluded += !free_vars(*best.expression).contains(p.index_of("LabTime"));
        const auto [train, test] = train_test_split(d, 0.8, seed);
        const DataTable h1 = train.environment(0), h3 = train.environment(2);
        const auto stable_pred = [&](const DataTable& t) {
            return fit_expression(best.expression, p.names(), t, "Mortality", Backend::DiscreteExact).predict(test);
        };
        const auto unstable_pred = [&](const DataTable& t) {
            return fit_unstable_baseline(t, "Mortality", {"Age", "Bicarbonate", "LabTime"}, Backend::DiscreteExact).predict(test);
        };
        const double rs = rank_correlation(stable_pred(h1), stable_pred(h3));
        const double ru = rank_correlation(unstable_pred(h1), unstable_pred(h3));
        gaps.push_back(rs - ru);
    }
    std::sort(gaps.begin(), gaps.end());
    const double median = gaps.empty() ? 0 : (gaps[(gaps.size() - 1) / 2] + gaps[gaps.size() / 2]) / 2;
    return {excluded == 20 && gaps.size() == 20 && median > 0,
            "LabTime excluded in " + std::to_string(excluded) + "/20 seeds; median rho gap " + fmt("%.3f", median)};
}

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> all{
        {"c1", "identification fixture", 1, c1_identification_fixture},
        {"c2", "cidp numeric soundness", 120, c2_cidp_soundness},
        {"c3", "invariance checkers agree", 120, c3_invariance_equivalence},
        {"c4", "m-separation vs brute force", 120, c4_m_separation},
        {"c5a", "structure recovery from oracle", 300, c5a_oracle_structure},
        {"c5b", "structure recovery from pooled samples", 300, c5b_pooled_structure},
        {"c6", "shift sweep", 600, c6_shift_sweep},
        {"c6r", "shift sweep far-shift ratio", 600, c6_far_shift_ratio},
        {"c7", "subsumption", 120, c7_subsumption},
        {"c8", "stability under mechanism shifts", 60, c8_stability},
        {"c9", "synthetic hospitals", 300, c9_hospital},
    };
    return all;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string which = argc > 1 ? argv[1] : "all";
    bool ok = true, found = false;
    for (const auto& c : criteria()) {
        if (which != "all" && which != c.id) continue;
        found = true;
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs <= c.budget_seconds;
        const bool pass = v.pass && in_time;
        std::cout << (pass ? "PASS " : "FAIL ") << c.id << " " << c.title << ": " << v.detail << " ["
                  << fmt("%.2f", secs) << " s of " << fmt("%.0f", c.budget_seconds) << " s]" << std::endl;
        ok &= pass;
    }
    if (!found) {
        std::cerr << "unknown criterion " << which << '\n';
        return 2;
    }
    return ok ? 0 : 1;
}
