#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "ispec/fci.hpp"
#include "ispec/search.hpp"
#include "oracles.hpp"

using namespace ispec;

namespace {

DataTable confounded_pooled(std::size_t n, std::uint64_t seed) {
    return pool_with_env({simulate_confounded(n, 4, seed), simulate_confounded(n, 8, seed + 1)});
}

InvarianceSpec shift_spec() {
    const auto p = oracle::shift_pag();
    return {p, p.set_of({"X1"})};
}

std::vector<VertexSet> zs(const SearchResult& r) {
    std::vector<VertexSet> out;
    for (const auto& c : r.stable) out.push_back(c.z);
    return out;
}

}  // namespace

TEST(OrderedPowerset, SizeThenLexicographic) {
    const auto s = ordered_powerset({1, 3, 4});
    const std::vector<VertexSet> want{{}, {1}, {3}, {4}, {1, 3}, {1, 4}, {3, 4}, {1, 3, 4}};
    EXPECT_EQ(s, want);
    EXPECT_EQ(ordered_powerset(VertexSet::first_n(10)).size(), 1024u);
}

TEST(Search, FullModePicksInterventionalModel) {
    const auto spec = shift_spec();
    const auto r = i_spec_search(spec, "Y", confounded_pooled(20000, 1));
    ASSERT_FALSE(r.failed());
    EXPECT_EQ(r.subsets_checked, 8u);
    const Candidate& best = r.best();
    EXPECT_TRUE(best.interventional);
    EXPECT_EQ(best.z, spec.pag.set_of({"X2", "X3"}));
    for (const auto& c : r.stable)
        if (c.z == spec.pag.set_of({"X3"})) {
            EXPECT_FALSE(c.interventional);
            EXPECT_LT(best.validation_loss, c.validation_loss);
        }
}

TEST(Search, ConditionalOnlyModePicksConditionalOnX3) {
    const auto spec = shift_spec();
    SearchOptions opt;
    opt.mode = SearchMode::ConditionalOnly;
    const auto r = i_spec_search(spec, "Y", confounded_pooled(20000, 1), opt);
    ASSERT_FALSE(r.failed());
    EXPECT_EQ(r.best().z, spec.pag.set_of({"X3"}));
    for (const auto& c : r.stable) EXPECT_FALSE(c.interventional);
}

TEST(Search, ConditionalOnlyCandidatesAppearInFullMode) {
    std::mt19937_64 rng(5);
    int compared = 0;
    for (int rep = 0; rep < 150; ++rep) {
        const int n = 3 + static_cast<int>(rng() % 3);
        const auto g = oracle::random_admg(rng, n, 0.45, 0.2);
        const auto p = fci(separation_oracle(g), g.names());
        const int t = static_cast<int>(rng() % n);
        VertexSet m;
        for (int v = 0; v < n; ++v)
            if (v != t && rng() % 3 == 0) m.insert(v);
        const InvarianceSpec spec{p, m};
        for (VertexSet z : ordered_powerset(p.all_vertices() - VertexSet::single(t))) {
            const auto cond = stable_form(spec, t, z, SearchMode::ConditionalOnly);
            const auto full = stable_form(spec, t, z, SearchMode::Full);
            if (!cond) continue;
            ASSERT_TRUE(full.has_value());
            EXPECT_TRUE(same(cond->expression, full->expression));
            ++compared;
        }
    }
    EXPECT_GT(compared, 200);
}

TEST(Search, FailsWhenNothingIsStable) {
    const auto p = parse_graph("vars: A,Y\nA o-o Y\n");
    Column a{"A", ColumnKind::Continuous, 0, {0.1, 0.4, 0.2, 0.9, 0.5}};
    Column y{"Y", ColumnKind::Continuous, 0, {0.3, 0.1, 0.8, 0.2, 0.6}};
    const auto r = i_spec_search({p, p.set_of({"A"})}, "Y", DataTable({a, y}));
    EXPECT_TRUE(r.failed());
    EXPECT_TRUE(r.stable.empty());
    EXPECT_THROW(r.best(), InputError);
}

TEST(Search, SingleEnvNeedsMutableSetAndNoEnvironment) {
    const auto spec = shift_spec();
    SearchOptions opt;
    opt.mode = SearchMode::SingleEnv;
    EXPECT_THROW(i_spec_search(spec, "Y", confounded_pooled(100, 1), opt), InputError);
    const auto g = oracle::shift_admg_observed();
    const auto p = fci(separation_oracle(g), g.names());
    const DataTable d = simulate_confounded(5000, 4, 3);
    EXPECT_THROW(i_spec_search({p, {}}, "Y", d, opt), InputError);
    const auto r = i_spec_search({p, p.set_of({"X2"})}, "Y", d, opt);
    EXPECT_FALSE(r.failed());
}

TEST(Search, RejectsBadSpecs) {
    const auto spec = shift_spec();
    const DataTable d = confounded_pooled(100, 1);
    EXPECT_THROW(i_spec_search({spec.pag, spec.pag.set_of({"Y"})}, "Y", d), InputError);
    EXPECT_THROW(i_spec_search({spec.pag, spec.pag.set_of({"E"})}, "Y", d), InputError);
    EXPECT_THROW(i_spec_search(spec, "Y", d.select({"X1", "X2", "Y", "E"})), InputError);
    EXPECT_THROW(i_spec_search({oracle::shift_admg(), {1}}, "Y", d), InputError);
}

TEST(Search, BudgetsRefuseRatherThanPrune) {
    const int n = 22;
    const auto names = oracle::names(n);
    std::vector<Column> cols;
    for (const auto& nm : names) cols.push_back(Column{nm, ColumnKind::Continuous, 0, {0.0, 1.0, 2.0}});
    const MixedGraph p(GraphKind::PAG, names, {});
    try {
        i_spec_search({p, {}}, names[0], DataTable(cols));
        FAIL() << "expected a budget error";
    } catch (const BudgetExceededError& e) {
        EXPECT_EQ(e.found, 0u);
    }
    SearchOptions opt;
    opt.max_seconds = 1e-12;
    opt.threads = 1;
    EXPECT_THROW(i_spec_search(shift_spec(), "Y", confounded_pooled(100, 1), opt), BudgetExceededError);
}

TEST(Search, OutputIndependentOfThreadCount) {
    const auto spec = shift_spec();
    const DataTable d = confounded_pooled(5000, 7);
    SearchOptions one, many;
    one.threads = 1;
    many.threads = 4;
    const auto a = i_spec_search(spec, "Y", d, one), b = i_spec_search(spec, "Y", d, many);
    EXPECT_EQ(zs(a), zs(b));
    EXPECT_EQ(search_json(a, spec, "Y", one).dump(), search_json(b, spec, "Y", many).dump());
}

TEST(Search, DiscreteBackendKeepsPracticeVariableOut) {
    const DiscreteScm s = hospital_scm();
    const auto p = [&] {
        Knowledge k;
        k.forbidden_into.insert(0);
        return fci(separation_oracle(s.graph), s.graph.names(), k);
    }();
    const DataTable d = sample_discrete_scm(s, 30000, 2).with_env("Hospital");
    SearchOptions opt;
    opt.backend = Backend::DiscreteExact;
    const auto r = i_spec_search({p, p.set_of({"LabTime"})}, "Mortality", d, opt);
    ASSERT_FALSE(r.failed());
    EXPECT_FALSE(free_vars(*r.best().expression).contains(p.index_of("LabTime")));
    EXPECT_FALSE(free_vars(*r.best().expression).contains(p.index_of("Hospital")));
}

TEST(ShiftSweep, GridCsvAndShape) {
    const DataTable train = confounded_pooled(20000, 11);
    const auto spec = shift_spec();
    const auto r = i_spec_search(spec, "Y", train);
    SearchOptions copt;
    copt.mode = SearchMode::ConditionalOnly;
    const auto rc = i_spec_search(spec, "Y", train, copt);
    const std::vector<NamedModel> models{
        {"unstable", fit_unstable_baseline(train, "Y", {"X1", "X2", "X3"}, Backend::LinearGaussian)},
        {"conditional", *rc.best().model},
        {"interventional", *r.best().model}};
    const auto grid = linspace(-5, 17, 100);
    EXPECT_DOUBLE_EQ(grid.front(), -5);
    EXPECT_DOUBLE_EQ(grid.back(), 17);
    const auto rows = shift_sweep(models, grid, 500, 3);
    ASSERT_EQ(rows.size(), 300u);
    std::ostringstream csv;
    write_sweep_csv(csv, rows);
    const std::string text = csv.str();
    EXPECT_EQ(text.substr(0, 16), "alpha,model,mse\n");
    EXPECT_NE(text.find("\n-5.000000,unstable,"), std::string::npos);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 301);

    const auto at = [&](double alpha) { return shift_sweep(models, {alpha}, 10000, 5); };
    const auto train_point = at(4);
    EXPECT_LT(train_point[0].mse, train_point[1].mse);
    EXPECT_LT(train_point[0].mse, train_point[2].mse);
    const auto far = at(17);
    EXPECT_GT(far[0].mse, far[1].mse);
    EXPECT_GT(far[0].mse, far[2].mse);
    EXPECT_THROW(shift_sweep(models, {}, 10, 1), InputError);
}
