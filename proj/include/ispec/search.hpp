#ifndef ISPEC_SEARCH_HPP
#define ISPEC_SEARCH_HPP

#include <chrono>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ispec/cidp.hpp"
#include "ispec/data_table.hpp"
#include "ispec/errors.hpp"
#include "ispec/estimate.hpp"
#include "ispec/graph.hpp"
#include "ispec/invariance.hpp"
#include "ispec/parallel.hpp"
#include "ispec/scm.hpp"

namespace ispec {

enum class SearchMode { Full, ConditionalOnly, SingleEnv };

inline SearchMode parse_search_mode(const std::string& s) {
    if (s == "full") return SearchMode::Full;
    if (s == "conditional-only") return SearchMode::ConditionalOnly;
    if (s == "single-env") return SearchMode::SingleEnv;
    throw InputError("unknown search mode: " + s);
}

inline std::string search_mode_name(SearchMode m) {
    switch (m) {
        case SearchMode::Full: return "full";
        case SearchMode::ConditionalOnly: return "conditional-only";
        case SearchMode::SingleEnv: return "single-env";
    }
    return "?";
}

// A PAG plus the variables whose mechanisms may change between environments.
struct InvarianceSpec {
    MixedGraph pag;
    VertexSet mutable_set;

    void validate(int target, std::optional<int> env) const {
        if (pag.kind() != GraphKind::PAG) throw InputError("invariance spec needs a PAG");
        if (!mutable_set.subset_of(pag.all_vertices())) throw InputError("mutable set names unknown vertices");
        if (mutable_set.contains(target)) throw InputError("the target cannot be mutable");
        if (env && mutable_set.contains(*env)) throw InputError("the environment indicator cannot be mutable");
    }
};

struct SearchOptions {
    SearchMode mode = SearchMode::Full;
    Backend backend = Backend::LinearGaussian;
    LossKind loss = LossKind::Auto;
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    int max_vars = 20;       // exhaustive search refuses larger feature sets
    double max_seconds = 0;  // 0: no time budget
    unsigned threads = 0;    // 0: hardware concurrency
};

struct Candidate {
    VertexSet z;
    bool interventional = false;
    ExprPtr expression;
    std::optional<FittedModel> model;
    double validation_loss = std::numeric_limits<double>::quiet_NaN();
    std::string fit_error;
};

struct SearchResult {
    std::vector<Candidate> stable;  // powerset order
    std::optional<std::size_t> winner;
    std::size_t subsets_checked = 0;

    bool failed() const { return !winner; }
    const Candidate& best() const {
        if (!winner) throw InputError("search failed: no stable candidate");
        return stable[*winner];
    }
};

// Subsets of `base` by size, then lexicographically on sorted members.
inline std::vector<VertexSet> ordered_powerset(VertexSet base) {
    std::vector<VertexSet> out;
    for (int k = 0; k <= base.size(); ++k)
        for_each_subset_of_size(base, k, [&](VertexSet s) {
            out.push_back(s);
            return false;
        });
    return out;
}

// The stable form for one conditioning set: the plain conditional when it is
// invariant, otherwise (outside conditional-only mode) the identified
// conditional interventional distribution.
inline std::optional<Candidate> stable_form(const InvarianceSpec& spec, int target, VertexSet z, SearchMode mode) {
    const VertexSet y = VertexSet::single(target);
    if (invariant_conditional(spec.pag, {spec.mutable_set, y, z})) {
        Candidate c;
        c.z = z;
        c.expression = expr::p(y, z, spec.pag.all_vertices());
        return c;
    }
    if (mode == SearchMode::ConditionalOnly) return std::nullopt;
    auto e = cidp(spec.pag, spec.mutable_set, y, z - spec.mutable_set);
    if (!e) return std::nullopt;
    Candidate c;
    c.z = z;
    c.interventional = true;
    c.expression = *e;
    return c;
}

inline SearchResult i_spec_search(const InvarianceSpec& spec, const std::string& target, const DataTable& data,
                                  const SearchOptions& opt = {}) {
    const MixedGraph& p = spec.pag;
    const int t = p.index_of(target);
    std::optional<int> env;
    if (data.env_column()) {
        if (opt.mode == SearchMode::SingleEnv) throw InputError("single-env mode expects data without an environment column");
        if (p.has_vertex(*data.env_column())) env = p.index_of(*data.env_column());
    }
    if (opt.mode == SearchMode::SingleEnv && spec.mutable_set.empty())
        throw InputError("mutable set required in single-env mode");
    spec.validate(t, env);
    for (const auto& n : p.names())
        if (!data.has_column(n)) throw InputError("data lacks column " + n);
    if (!(opt.train_fraction > 0 && opt.train_fraction < 1)) throw InputError("train fraction must lie in (0, 1)");

    VertexSet features = p.all_vertices() - VertexSet::single(t);
    if (env) features.erase(*env);
    if (features.size() > opt.max_vars)
        throw BudgetExceededError("exhaustive search over " + std::to_string(features.size()) +
                                      " features exceeds the budget of " + std::to_string(opt.max_vars),
                                  0);

    const auto subsets = ordered_powerset(features);
    std::vector<std::optional<Candidate>> forms(subsets.size());
    std::vector<char> done(subsets.size(), 0);
    const auto start = std::chrono::steady_clock::now();
    auto out_of_time = [&] {
        if (opt.max_seconds <= 0) return false;
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() > opt.max_seconds;
    };
    parallel_for(subsets.size(), opt.threads, [&](std::size_t i) {
        if (out_of_time()) return;
        forms[i] = stable_form(spec, t, subsets[i], opt.mode);
        done[i] = 1;
    });

    SearchResult result;
    for (std::size_t i = 0; i < subsets.size(); ++i) {
        result.subsets_checked += static_cast<std::size_t>(done[i]);
        if (forms[i]) result.stable.push_back(std::move(*forms[i]));
    }
    if (result.subsets_checked < subsets.size())
        throw BudgetExceededError("time budget exhausted after " + std::to_string(result.subsets_checked) + " of " +
                                      std::to_string(subsets.size()) + " conditioning sets",
                                  result.stable.size());

    const auto [train, valid] = train_test_split(data, opt.train_fraction, opt.seed);
    parallel_for(result.stable.size(), opt.threads, [&](std::size_t i) {
        Candidate& c = result.stable[i];
        try {
            c.model = fit_expression(c.expression, p.names(), train, target, opt.backend);
            c.validation_loss = validation_loss(*c.model, valid, opt.loss);
        } catch (const std::runtime_error& e) {
            c.model.reset();
            c.fit_error = e.what();
        }
    });
    for (std::size_t i = 0; i < result.stable.size(); ++i) {
        const Candidate& c = result.stable[i];
        if (!c.model) continue;
        if (!result.winner || c.validation_loss < result.stable[*result.winner].validation_loss) result.winner = i;
    }
    return result;
}

inline nlohmann::json candidate_json(const Candidate& c, const std::vector<std::string>& names) {
    nlohmann::json z = nlohmann::json::array();
    for (int v : c.z) z.push_back(names[v]);
    nlohmann::json j{{"z", z},
                     {"form", c.interventional ? "interventional" : "conditional"},
                     {"expression", to_string(*c.expression, names)},
                     {"prefix", to_prefix(*c.expression, names)}};
    if (c.model) {
        j["validation_loss"] = c.validation_loss;
        j["model"] = c.model->to_json();
    } else {
        j["fit_error"] = c.fit_error;
    }
    return j;
}

inline nlohmann::json search_json(const SearchResult& r, const InvarianceSpec& spec, const std::string& target,
                                  const SearchOptions& opt) {
    const auto& names = spec.pag.names();
    nlohmann::json m = nlohmann::json::array();
    for (int v : spec.mutable_set) m.push_back(names[v]);
    nlohmann::json stable = nlohmann::json::array();
    for (const auto& c : r.stable) stable.push_back(candidate_json(c, names));
    nlohmann::json j{{"target", target},
                     {"mutable", m},
                     {"mode", search_mode_name(opt.mode)},
                     {"backend", backend_name(opt.backend)},
                     {"subsets_checked", r.subsets_checked},
                     {"stable", stable}};
    j["status"] = r.failed() ? "FAIL" : "OK";
    j["winner"] = r.winner ? nlohmann::json(*r.winner) : nlohmann::json(nullptr);
    return j;
}

// The model that conditions on every feature, ignoring stability.
inline FittedModel fit_unstable_baseline(const DataTable& train, const std::string& target,
                                         const std::vector<std::string>& features, Backend backend) {
    if (backend == Backend::LinearGaussian) return fit_ols(train, target, features);
    std::vector<std::string> names(features);
    names.push_back(target);
    const VertexSet all = VertexSet::first_n(static_cast<int>(names.size()));
    const int t = static_cast<int>(features.size());
    const auto e = expr::p(VertexSet::single(t), all - VertexSet::single(t), all);
    return fit_expression(e, names, train, target, backend);
}

// ---------------------------------------------------------------------------
// Shift sweep
// ---------------------------------------------------------------------------

struct NamedModel {
    std::string name;
    FittedModel model;
};

struct SweepRow {
    double alpha;
    std::string model;
    double mse;
};

using ShiftSimulator = std::function<DataTable(std::size_t n, double alpha, std::uint64_t seed)>;

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n == 0) throw InputError("grid needs at least one point");
    if (n == 1) return {lo};
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return out;
}

// Every grid point reuses `seed`, so the models see the same noise draws and
// only the shift changes along the grid.
inline std::vector<SweepRow> shift_sweep(const std::vector<NamedModel>& models, const std::vector<double>& grid,
                                         std::size_t n_test, std::uint64_t seed,
                                         const ShiftSimulator& simulate = simulate_confounded, unsigned threads = 0) {
    if (grid.empty()) throw InputError("alpha grid is empty");
    if (models.empty()) throw InputError("no models to sweep");
    std::vector<SweepRow> rows(grid.size() * models.size());
    parallel_for(grid.size(), threads, [&](std::size_t g) {
        const DataTable test = simulate(n_test, grid[g], seed);
        for (std::size_t m = 0; m < models.size(); ++m)
            rows[g * models.size() + m] = {grid[g], models[m].name,
                                           validation_loss(models[m].model, test, LossKind::SquaredError)};
    });
    return rows;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "alpha,model,mse\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.6f,%s,%.6f\n", r.alpha, r.model.c_str(), r.mse);
        out << buf;
    }
}

}  // namespace ispec

#endif  // ISPEC_SEARCH_HPP
