#ifndef ISPEC_CLI_HPP
#define ISPEC_CLI_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ispec/cidp.hpp"
#include "ispec/citest.hpp"
#include "ispec/data_table.hpp"
#include "ispec/errors.hpp"
#include "ispec/fci.hpp"
#include "ispec/graph_io.hpp"
#include "ispec/invariance.hpp"
#include "ispec/scm.hpp"
#include "ispec/search.hpp"

namespace ispec {

namespace fs = std::filesystem;

// Data generated in-process instead of read from files.
struct SimulationSpec {
    std::string scenario = "confounded";  // or "hospital"
    std::vector<double> alphas{4, 8};     // one environment per entry
    std::size_t n = 50000;                // rows per environment
};

struct SweepSpec {
    double lo = -5;
    double hi = 17;
    std::size_t points = 100;
    std::size_t n_test = 10000;
};

// Run configuration; see README for the JSON layout.
struct RunConfig {
    std::vector<std::string> data;
    std::optional<std::string> schema;
    std::optional<SimulationSpec> simulate;
    std::string target;
    std::string env = "E";
    TestKind test = TestKind::FisherZ;
    double alpha = 0.01;
    std::optional<std::string> graph;
    std::optional<std::vector<std::string>> mutable_vars;  // nullopt: PossCh(E)
    SearchOptions search;
    std::optional<std::uint64_t> seed;
    std::string out = "run";
    SweepSpec sweep;

    static RunConfig from_json(const nlohmann::json& j, const fs::path& base = {}) {
        RunConfig c;
        auto path = [&](const std::string& p) { return fs::path(p).is_absolute() ? p : (base / p).string(); };
        if (j.contains("data")) {
            if (j["data"].is_string())
                c.data.push_back(path(j["data"].get<std::string>()));
            else
                for (const auto& d : j["data"]) c.data.push_back(path(d.get<std::string>()));
        }
        if (j.contains("schema")) c.schema = path(j["schema"].get<std::string>());
        if (j.contains("simulate")) {
            SimulationSpec s;
            const auto& sj = j["simulate"];
            s.scenario = sj.value("scenario", s.scenario);
            if (sj.contains("alphas")) s.alphas = sj["alphas"].get<std::vector<double>>();
            s.n = sj.value("n", s.n);
            c.simulate = s;
        }
        c.target = j.value("target", "");
        c.env = j.value("env", c.env);
        if (j.contains("test")) c.test = parse_test_kind(j["test"].get<std::string>());
        c.alpha = j.value("alpha", c.alpha);
        if (j.contains("graph")) c.graph = path(j["graph"].get<std::string>());
        if (j.contains("mutable")) c.set_mutable(j["mutable"]);
        if (j.contains("mode")) c.search.mode = parse_search_mode(j["mode"].get<std::string>());
        if (j.contains("backend")) c.search.backend = parse_backend(j["backend"].get<std::string>());
        if (j.contains("loss")) c.search.loss = parse_loss(j["loss"].get<std::string>());
        c.search.train_fraction = j.value("train_fraction", c.search.train_fraction);
        c.search.max_vars = j.value("max_vars", c.search.max_vars);
        c.search.max_seconds = j.value("max_seconds", c.search.max_seconds);
        c.search.threads = j.value("threads", c.search.threads);
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
        c.out = j.value("out", c.out);
        if (j.contains("sweep")) {
            const auto& sj = j["sweep"];
            c.sweep.lo = sj.value("lo", c.sweep.lo);
            c.sweep.hi = sj.value("hi", c.sweep.hi);
            c.sweep.points = sj.value("points", c.sweep.points);
            c.sweep.n_test = sj.value("n_test", c.sweep.n_test);
        }
        return c;
    }

    static RunConfig load(const std::string& file) {
        std::ifstream in(file);
        if (!in) throw InputError("cannot open config " + file);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw InputError("bad config " + file + ": " + e.what());
        }
        return from_json(j, fs::path(file).parent_path());
    }

    void set_mutable(const nlohmann::json& m) {
        if (m.is_string() && m.get<std::string>() == "PossChE")
            mutable_vars.reset();
        else if (m.is_array())
            mutable_vars = m.get<std::vector<std::string>>();
        else
            throw InputError("mutable must be a list of names or \"PossChE\"");
    }

    void set_mutable(const std::string& flag) {
        if (flag == "PossChE")
            mutable_vars.reset();
        else
            mutable_vars = split_names(flag);
    }

    static std::vector<std::string> split_names(const std::string& s) {
        std::vector<std::string> out;
        for (auto& part : detail::split(s, ','))
            if (!part.empty()) out.push_back(part);
        return out;
    }

    void validate() const {
        if (!seed) throw InputError("config must set a seed");
        if (target.empty()) throw InputError("config must name a target");
        if (data.empty() == !simulate) throw InputError("config needs exactly one of data files or a simulate block");
        if (simulate && simulate->alphas.empty()) throw InputError("simulate block needs at least one alpha");
    }
};

// ---------------------------------------------------------------------------
// Pipeline pieces shared by the subcommands
// ---------------------------------------------------------------------------

inline DataTable simulate_scenario(const SimulationSpec& s, std::uint64_t seed, const std::string& env) {
    if (s.scenario == "confounded") {
        std::vector<DataTable> parts;
        for (std::size_t i = 0; i < s.alphas.size(); ++i) parts.push_back(simulate_confounded(s.n, s.alphas[i], seed + i));
        return parts.size() == 1 ? parts[0] : pool_with_env(parts, env);
    }
    if (s.scenario == "hospital") return sample_discrete_scm(hospital_scm(), s.n, seed).with_env("Hospital");
    throw InputError("unknown scenario: " + s.scenario);
}

inline DataTable load_data(const RunConfig& c) {
    if (c.simulate) return simulate_scenario(*c.simulate, *c.seed, c.env);
    std::optional<Schema> schema;
    if (c.schema) schema = read_schema(*c.schema);
    if (c.data.size() == 1) return read_csv(c.data[0], schema ? &*schema : nullptr);
    std::vector<DataTable> parts;
    for (const auto& f : c.data) parts.push_back(read_csv(f, schema ? &*schema : nullptr));
    return pool_with_env(parts, c.env);
}

inline MixedGraph obtain_pag(const RunConfig& c, const DataTable& d) {
    if (c.graph) return read_graph_file(*c.graph, GraphKind::PAG);
    return fci_on_table(d, c.test, c.alpha);
}

inline VertexSet resolve_mutable(const RunConfig& c, const MixedGraph& p, const DataTable& d) {
    if (c.mutable_vars) return p.set_of(*c.mutable_vars);
    if (c.search.mode == SearchMode::SingleEnv) throw InputError("mutable set required in single-env mode");
    if (!d.env_column() || !p.has_vertex(*d.env_column()))
        throw InputError("mutable set required: no environment column to take PossChE from");
    return possible_children_of_env(p, p.index_of(*d.env_column()));
}

inline std::string join_names(const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
}

inline void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw InputError("cannot write " + p.string());
    out << text;
}

inline std::string candidate_metrics_csv(const SearchResult& r, const std::vector<std::string>& names) {
    std::ostringstream out;
    out << "candidate,form,z,validation_loss\n";
    char buf[64];
    for (std::size_t i = 0; i < r.stable.size(); ++i) {
        const Candidate& c = r.stable[i];
        std::vector<std::string> z;
        for (int v : c.z) z.push_back(names[v]);
        out << i << ',' << (c.interventional ? "interventional" : "conditional") << ",\"" << join_names(z) << "\",";
        if (c.model) {
            std::snprintf(buf, sizeof buf, "%.6f", c.validation_loss);
            out << buf;
        } else {
            out << "nan";
        }
        out << '\n';
    }
    return out.str();
}

struct SearchRun {
    MixedGraph pag;
    InvarianceSpec spec;
    SearchResult result;
    DataTable data;
};

inline SearchRun run_search(const RunConfig& c, std::ostream& log) {
    c.validate();
    DataTable d = load_data(c);
    if (c.search.mode == SearchMode::SingleEnv && !c.mutable_vars) throw InputError("mutable set required in single-env mode");
    log << "data: " << d.num_rows() << " rows, columns " << join_names(d.names()) << '\n';
    MixedGraph p = obtain_pag(c, d);
    log << "pag:\n" << serialize_graph(p);
    const VertexSet m = resolve_mutable(c, p, d);
    log << "mutable: " << join_names(p.names_of(m)) << '\n';
    SearchOptions opt = c.search;
    opt.seed = *c.seed;
    InvarianceSpec spec{p, m};
    SearchResult r = i_spec_search(spec, c.target, d, opt);
    log << "mode " << search_mode_name(opt.mode) << ": " << r.subsets_checked << " conditioning sets, "
        << r.stable.size() << " stable\n";
    if (r.winner) log << "winner: " << to_string(*r.best().expression, p.names()) << '\n';
    return {std::move(p), std::move(spec), std::move(r), std::move(d)};
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"ispec: stable prediction under declared mechanism shifts"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> data_files;
    std::string env = "E", test = "fisher-z", graph_out;
    double alpha = 0.01;
    auto* learn = app.add_subcommand("learn-pag", "learn a PAG from pooled multi-environment data");
    learn->add_option("--config", config_path, "run config (JSON)");
    learn->add_option("--data", data_files, "one CSV per environment, or a single pooled CSV with --env");
    learn->add_option("--env", env, "environment column name");
    learn->add_option("--test", test, "fisher-z | degenerate-gaussian");
    learn->add_option("--alpha", alpha, "test level");
    learn->add_option("--out", graph_out, "write the graph here instead of stdout");

    std::string graph_path, xs, ys, zs, format = "text";
    auto* ident = app.add_subcommand("identify", "identify P_x(y | z) from a PAG");
    ident->add_option("--graph", graph_path, "PAG file")->required();
    ident->add_option("--x", xs, "intervened vertices, comma separated");
    ident->add_option("--y", ys, "targets")->required();
    ident->add_option("--z", zs, "conditioning vertices");
    ident->add_option("--format", format, "text | prefix | json");

    auto* check = app.add_subcommand("check", "test whether P(y | z) is invariant to shifts in x");
    check->add_option("--graph", graph_path, "PAG file")->required();
    check->add_option("--x", xs, "mutable vertices")->required();
    check->add_option("--y", ys, "targets")->required();
    check->add_option("--z", zs, "conditioning vertices");

    std::optional<std::string> target, mutable_flag, mode, backend, out_dir, graph_flag;
    std::optional<std::uint64_t> seed;
    auto add_overrides = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "run config (JSON)")->required();
        sub->add_option("--target", target, "target column");
        sub->add_option("--mutable", mutable_flag, "comma separated names, or PossChE");
        sub->add_option("--mode", mode, "full | conditional-only | single-env");
        sub->add_option("--backend", backend, "linear-gaussian | discrete-exact");
        sub->add_option("--graph", graph_flag, "use this PAG instead of learning one");
        sub->add_option("--seed", seed, "random seed");
        sub->add_option("--out", out_dir, "run directory");
    };
    auto* search = app.add_subcommand("search", "search for the best stable distribution");
    add_overrides(search);
    auto* sweep = app.add_subcommand("sweep", "score stable and unstable models across shifted test sets");
    add_overrides(sweep);

    std::string scenario = "confounded", csv_out;
    double sim_alpha = 4;
    std::size_t sim_n = 1000;
    std::uint64_t sim_seed = 0;
    auto* simulate = app.add_subcommand("simulate", "sample a built-in simulation scenario to CSV");
    simulate->add_option("--scenario", scenario, "confounded | hospital");
    simulate->add_option("--alpha", sim_alpha, "confounder coefficient in X1 (confounded)");
    simulate->add_option("--n", sim_n, "rows");
    simulate->add_option("--seed", sim_seed, "random seed");
    simulate->add_option("--out", csv_out, "CSV path (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    auto load_config = [&] {
        RunConfig c = RunConfig::load(config_path);
        if (target) c.target = *target;
        if (mutable_flag) c.set_mutable(*mutable_flag);
        if (mode) c.search.mode = parse_search_mode(*mode);
        if (backend) c.search.backend = parse_backend(*backend);
        if (graph_flag) c.graph = *graph_flag;
        if (seed) c.seed = *seed;
        if (out_dir) c.out = *out_dir;
        return c;
    };
    auto vertex_set = [](const MixedGraph& g, const std::string& s) { return g.set_of(RunConfig::split_names(s)); };

    try {
        if (*learn) {
            DataTable d;
            if (!config_path.empty()) {
                RunConfig c = RunConfig::load(config_path);
                if (!c.seed) c.seed = 0;
                d = load_data(c);
                test = c.test == TestKind::FisherZ ? "fisher-z" : "degenerate-gaussian";
                alpha = c.alpha;
            } else if (data_files.size() == 1) {
                d = read_csv(data_files[0]).with_env(env);
            } else if (data_files.size() > 1) {
                std::vector<DataTable> parts;
                for (const auto& f : data_files) parts.push_back(read_csv(f));
                d = pool_with_env(parts, env);
            } else {
                throw InputError("learn-pag needs --config or --data");
            }
            const MixedGraph p = fci_on_table(d, parse_test_kind(test), alpha);
            if (graph_out.empty())
                out << serialize_graph(p);
            else
                write_graph_file(graph_out, p);
            if (d.env_column())
                out << "PossChE: " << join_names(p.names_of(possible_children_of_env(p, p.index_of(*d.env_column()))))
                    << '\n';
            return 0;
        }
        if (*ident) {
            const MixedGraph p = read_graph_file(graph_path);
            const auto e = cidp(p, vertex_set(p, xs), vertex_set(p, ys), vertex_set(p, zs));
            if (!e) {
                out << "FAIL: not identifiable\n";
                return 1;
            }
            if (format == "json")
                out << to_json(**e, p.names()).dump(2) << '\n';
            else if (format == "prefix")
                out << to_prefix(**e, p.names()) << '\n';
            else if (format == "text")
                out << to_string(**e, p.names()) << '\n';
            else
                throw InputError("unknown format: " + format);
            return 0;
        }
        if (*check) {
            const MixedGraph p = read_graph_file(graph_path);
            const InvarianceQuery q{vertex_set(p, xs), vertex_set(p, ys), vertex_set(p, zs)};
            const bool stable = invariant_conditional(p, q);
            if (stable != invariant_conditional_mag(p, q)) throw InternalError("invariance checkers disagree");
            out << (stable ? "stable" : "unstable") << '\n';
            return stable ? 0 : 1;
        }
        if (*simulate) {
            SimulationSpec s;
            s.scenario = scenario;
            s.alphas = {sim_alpha};
            s.n = sim_n;
            const DataTable d = simulate_scenario(s, sim_seed, "E");
            if (csv_out.empty())
                write_csv(out, d);
            else
                write_csv(csv_out, d);
            return 0;
        }
        if (*search) {
            const RunConfig c = load_config();
            std::ostringstream log;
            const SearchRun run = run_search(c, log);
            const fs::path dir(c.out);
            fs::create_directories(dir);
            write_text(dir / "graph.txt", serialize_graph(run.pag));
            write_text(dir / "candidates.json", search_json(run.result, run.spec, c.target, c.search).dump(2) + "\n");
            write_text(dir / "metrics.csv", candidate_metrics_csv(run.result, run.pag.names()));
            log << (run.result.failed() ? "FAIL\n" : "OK\n");
            write_text(dir / "log.txt", log.str());
            out << log.str();
            return run.result.failed() ? 1 : 0;
        }
        if (*sweep) {
            RunConfig c = load_config();
            if (!c.simulate || c.simulate->scenario != "confounded")
                throw InputError("sweep needs a simulate block with scenario confounded");
            std::ostringstream log;
            c.search.mode = SearchMode::Full;
            const SearchRun full = run_search(c, log);
            c.search.mode = SearchMode::ConditionalOnly;
            const SearchRun cond = run_search(c, log);
            if (full.result.failed() || cond.result.failed()) {
                log << "FAIL\n";
                out << log.str();
                return 1;
            }
            const auto [train, valid] = train_test_split(full.data, c.search.train_fraction, *c.seed);
            std::vector<std::string> features;
            for (const auto& n : full.pag.names())
                if (n != c.target && n != c.env) features.push_back(n);
            const std::vector<NamedModel> models{
                {"unstable", fit_unstable_baseline(train, c.target, features, c.search.backend)},
                {"conditional", *cond.result.best().model},
                {"interventional", *full.result.best().model}};
            const auto rows = shift_sweep(models, linspace(c.sweep.lo, c.sweep.hi, c.sweep.points), c.sweep.n_test,
                                          *c.seed + 7919, simulate_confounded, c.search.threads);
            const fs::path dir(c.out);
            fs::create_directories(dir);
            write_text(dir / "graph.txt", serialize_graph(full.pag));
            nlohmann::json cj{{"full", search_json(full.result, full.spec, c.target, c.search)}};
            c.search.mode = SearchMode::ConditionalOnly;
            cj["conditional-only"] = search_json(cond.result, cond.spec, c.target, c.search);
            write_text(dir / "candidates.json", cj.dump(2) + "\n");
            std::ostringstream csv;
            write_sweep_csv(csv, rows);
            write_text(dir / "metrics.csv", csv.str());
            log << "sweep: " << rows.size() << " rows\nOK\n";
            write_text(dir / "log.txt", log.str());
            out << log.str();
            return 0;
        }
    } catch (const BudgetExceededError& e) {
        err << "error: " << e.what() << " (" << e.found << " stable candidates found)\n";
        return 2;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const DegenerateDataError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const UnsupportedModelError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const nlohmann::json::exception& e) {
        err << "error: bad config: " << e.what() << '\n';
        return 2;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}

}  // namespace ispec

#endif  // ISPEC_CLI_HPP
