#ifndef ISPEC_DATA_TABLE_HPP
#define ISPEC_DATA_TABLE_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "ispec/errors.hpp"

namespace ispec {

enum class ColumnKind { Continuous, Discrete };

struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::Continuous;
    int levels = 0;  // discrete only
    std::vector<double> values;
};

// Column-major table of samples. Discrete values are stored as integral
// doubles in [0, levels).
class DataTable {
public:
    DataTable() = default;

    explicit DataTable(std::vector<Column> columns, std::optional<std::string> env = std::nullopt)
        : columns_(std::move(columns)), env_(std::move(env)) {
        for (int i = 0; i < num_columns(); ++i) {
            const Column& c = columns_[i];
            if (!index_.emplace(c.name, i).second) throw InputError("duplicate column: " + c.name);
            if (c.values.size() != columns_[0].values.size()) throw InputError("column length mismatch: " + c.name);
            if (c.kind == ColumnKind::Discrete) {
                if (c.levels < 1) throw InputError("discrete column needs at least one level: " + c.name);
                for (double v : c.values)
                    if (v != std::floor(v) || v < 0 || v >= c.levels)
                        throw InputError("discrete value out of range in " + c.name);
            }
        }
        if (env_) {
            const Column& e = column(*env_);
            if (e.kind != ColumnKind::Discrete) throw InputError("environment column must be discrete");
        }
    }

    int num_columns() const { return static_cast<int>(columns_.size()); }
    std::size_t num_rows() const { return columns_.empty() ? 0 : columns_[0].values.size(); }
    const std::vector<Column>& columns() const { return columns_; }
    const Column& column(int i) const { return columns_.at(i); }
    const Column& column(const std::string& name) const { return columns_[index_of(name)]; }
    const std::optional<std::string>& env_column() const { return env_; }

    bool has_column(const std::string& name) const { return index_.count(name) > 0; }

    int index_of(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw InputError("unknown column: " + name);
        return it->second;
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const Column& c : columns_) out.push_back(c.name);
        return out;
    }

    DataTable rows(const std::vector<std::size_t>& idx) const {
        std::vector<Column> cols = columns_;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            cols[c].values.clear();
            cols[c].values.reserve(idx.size());
            for (std::size_t r : idx) cols[c].values.push_back(columns_[c].values.at(r));
        }
        return DataTable(std::move(cols), env_);
    }

    DataTable select(const std::vector<std::string>& names) const {
        std::vector<Column> cols;
        for (const auto& n : names) cols.push_back(column(n));
        std::optional<std::string> env;
        if (env_ && std::find(names.begin(), names.end(), *env_) != names.end()) env = env_;
        return DataTable(std::move(cols), env);
    }

    DataTable with_column(Column c) const {
        std::vector<Column> cols = columns_;
        cols.push_back(std::move(c));
        return DataTable(std::move(cols), env_);
    }

    DataTable with_env(std::optional<std::string> env) const { return DataTable(columns_, std::move(env)); }

    // Rows of environment level `e`.
    DataTable environment(int e) const {
        if (!env_) throw InputError("table has no environment column");
        const auto& ev = column(*env_).values;
        std::vector<std::size_t> idx;
        for (std::size_t r = 0; r < ev.size(); ++r)
            if (static_cast<int>(ev[r]) == e) idx.push_back(r);
        return rows(idx);
    }

private:
    std::vector<Column> columns_;
    std::optional<std::string> env_;
    std::unordered_map<std::string, int> index_;
};

// Row-wise concatenation of tables sharing one schema.
inline DataTable concat_rows(const std::vector<DataTable>& parts) {
    if (parts.empty()) throw InputError("nothing to concatenate");
    std::vector<Column> cols = parts[0].columns();
    for (std::size_t p = 1; p < parts.size(); ++p) {
        if (parts[p].names() != parts[0].names()) throw InputError("schema mismatch between datasets");
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const Column& src = parts[p].column(static_cast<int>(c));
            if (src.kind != cols[c].kind || src.levels != cols[c].levels)
                throw InputError("column kind mismatch for " + src.name);
            cols[c].values.insert(cols[c].values.end(), src.values.begin(), src.values.end());
        }
    }
    return DataTable(std::move(cols), parts[0].env_column());
}

// Pools per-environment tables and appends a discrete environment column.
inline DataTable pool_with_env(const std::vector<DataTable>& parts, const std::string& env_name = "E") {
    DataTable pooled = concat_rows(parts);
    Column e{env_name, ColumnKind::Discrete, static_cast<int>(parts.size()), {}};
    for (std::size_t p = 0; p < parts.size(); ++p) e.values.insert(e.values.end(), parts[p].num_rows(), static_cast<double>(p));
    return pooled.with_column(std::move(e)).with_env(env_name);
}

// Seeded split: within each environment (or the whole table) a shuffled
// `train_fraction` of the rows goes to the first table.
inline std::pair<DataTable, DataTable> train_test_split(const DataTable& d, double train_fraction, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::vector<std::size_t>> groups;
    if (d.env_column()) {
        const Column& e = d.column(*d.env_column());
        groups.resize(e.levels);
        for (std::size_t r = 0; r < d.num_rows(); ++r) groups[static_cast<int>(e.values[r])].push_back(r);
    } else {
        groups.emplace_back(d.num_rows());
        for (std::size_t r = 0; r < d.num_rows(); ++r) groups[0][r] = r;
    }
    std::vector<std::size_t> train, test;
    for (auto& g : groups) {
        std::shuffle(g.begin(), g.end(), rng);
        const auto cut = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(g.size())));
        train.insert(train.end(), g.begin(), g.begin() + static_cast<std::ptrdiff_t>(cut));
        test.insert(test.end(), g.begin() + static_cast<std::ptrdiff_t>(cut), g.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {d.rows(train), d.rows(test)};
}

// ---------------------------------------------------------------------------
// CSV + JSON schema
// ---------------------------------------------------------------------------
//
// Schema: {"columns": [{"name": "X1", "kind": "continuous"},
//                      {"name": "E", "kind": "discrete", "levels": 2}],
//          "env": "E"}
// Columns absent from the schema default to continuous.

struct Schema {
    std::vector<Column> columns;  // values unused
    std::optional<std::string> env;

    static Schema from_json(const nlohmann::json& j) {
        Schema s;
        for (const auto& c : j.at("columns")) {
            Column col;
            col.name = c.at("name").get<std::string>();
            const std::string kind = c.value("kind", "continuous");
            if (kind == "discrete") {
                col.kind = ColumnKind::Discrete;
                col.levels = c.at("levels").get<int>();
            } else if (kind != "continuous") {
                throw InputError("unknown column kind: " + kind);
            }
            s.columns.push_back(col);
        }
        if (j.contains("env") && !j["env"].is_null()) s.env = j["env"].get<std::string>();
        return s;
    }

    nlohmann::json to_json() const {
        nlohmann::json cols = nlohmann::json::array();
        for (const Column& c : columns) {
            nlohmann::json o{{"name", c.name}, {"kind", c.kind == ColumnKind::Discrete ? "discrete" : "continuous"}};
            if (c.kind == ColumnKind::Discrete) o["levels"] = c.levels;
            cols.push_back(o);
        }
        nlohmann::json j{{"columns", cols}};
        if (env) j["env"] = *env;
        return j;
    }

    static Schema of(const DataTable& d) {
        Schema s;
        for (const Column& c : d.columns()) s.columns.push_back({c.name, c.kind, c.levels, {}});
        s.env = d.env_column();
        return s;
    }
};

inline DataTable parse_csv(std::istream& in, const Schema* schema = nullptr) {
    auto split = [](const std::string& line) {
        std::vector<std::string> out;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
            while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
            out.push_back(cell);
        }
        if (!line.empty() && line.back() == ',') out.emplace_back();
        return out;
    };
    std::string line;
    if (!std::getline(in, line)) throw InputError("empty CSV");
    const auto header = split(line);
    std::vector<Column> cols(header.size());
    for (std::size_t i = 0; i < header.size(); ++i) {
        cols[i].name = header[i];
        if (schema) {
            for (const Column& s : schema->columns)
                if (s.name == header[i]) {
                    cols[i].kind = s.kind;
                    cols[i].levels = s.levels;
                }
        }
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = split(line);
        if (cells.size() != header.size())
            throw InputError("CSV line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) + " fields");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (cells[i].empty() || cells[i] == "NA" || cells[i] == "NaN")
                throw InputError("missing value at CSV line " + std::to_string(lineno));
            std::size_t used = 0;
            double v = 0;
            try {
                v = std::stod(cells[i], &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != cells[i].size() || !std::isfinite(v))
                throw InputError("non-numeric value at CSV line " + std::to_string(lineno) + ": " + cells[i]);
            cols[i].values.push_back(v);
        }
    }
    return DataTable(std::move(cols), schema ? schema->env : std::nullopt);
}

inline DataTable read_csv(const std::string& path, const Schema* schema = nullptr) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open data file: " + path);
    return parse_csv(f, schema);
}

inline Schema read_schema(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open schema file: " + path);
    try {
        return Schema::from_json(nlohmann::json::parse(f));
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("bad schema: ") + e.what());
    }
}

inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline void write_csv(std::ostream& out, const DataTable& d) {
    const auto names = d.names();
    for (std::size_t i = 0; i < names.size(); ++i) out << (i ? "," : "") << names[i];
    out << '\n';
    for (std::size_t r = 0; r < d.num_rows(); ++r) {
        for (int c = 0; c < d.num_columns(); ++c) out << (c ? "," : "") << format_number(d.column(c).values[r]);
        out << '\n';
    }
}

inline void write_csv(const std::string& path, const DataTable& d) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write data file: " + path);
    write_csv(f, d);
}

}  // namespace ispec

#endif  // ISPEC_DATA_TABLE_HPP
