#ifndef ISPEC_GRAPH_IO_HPP
#define ISPEC_GRAPH_IO_HPP

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ispec/graph.hpp"

namespace ispec {

// Edge-list text format:
//
//   vars: A,B,C
//   A o-> B
//   B --> C
//   A <-> C
//   A o-o C
//
// Reversed spellings (`<--`, `<-o`) are accepted on input; output always
// writes the non-arrow end first so that serialize(parse(text)) == text for
// canonical text.

namespace detail {

inline std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

}  // namespace detail

inline MixedGraph parse_graph(std::string_view text, GraphKind kind = GraphKind::PAG) {
    std::vector<std::string> names;
    bool have_vars = false;
    std::vector<std::vector<std::string>> raw_edges;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.rfind("vars:", 0) == 0) {
            if (have_vars) throw InputError("duplicate vars line");
            have_vars = true;
            const std::string rest = detail::trim(std::string_view(t).substr(5));
            if (!rest.empty()) names = detail::split(rest, ',');
            continue;
        }
        std::istringstream ls(t);
        std::string a, op, b, extra;
        if (!(ls >> a >> op >> b) || (ls >> extra))
            throw InputError("line " + std::to_string(lineno) + ": expected `A <op> B`");
        raw_edges.push_back({a, op, b});
    }
    if (!have_vars) throw InputError("missing `vars:` header line");

    std::unordered_map<std::string, int> index;
    for (int i = 0; i < static_cast<int>(names.size()); ++i) index.emplace(names[i], i);
    auto lookup = [&](const std::string& nm) {
        auto it = index.find(nm);
        if (it == index.end()) throw InputError("edge references undeclared vertex: " + nm);
        return it->second;
    };

    std::vector<Edge> edges;
    for (const auto& r : raw_edges) {
        const int u = lookup(r[0]);
        const int v = lookup(r[2]);
        const std::string& op = r[1];
        if (op == "-->") edges.push_back(Edge::directed(u, v));
        else if (op == "<--") edges.push_back(Edge::directed(v, u));
        else if (op == "<->") edges.push_back(Edge::bidirected(u, v));
        else if (op == "o->") edges.push_back(Edge::circle_arrow(u, v));
        else if (op == "<-o") edges.push_back(Edge::circle_arrow(v, u));
        else if (op == "o-o") edges.push_back(Edge::circle_circle(u, v));
        else throw InputError("unknown edge operator: " + op);
    }
    return MixedGraph(kind, std::move(names), std::move(edges));
}

inline std::string serialize_graph(const MixedGraph& g) {
    std::string out = "vars: ";
    for (int i = 0; i < g.num_vertices(); ++i) {
        if (i) out += ',';
        out += g.name(i);
    }
    out += '\n';
    for (const Edge& e : g.edges()) {
        int first = e.a, second = e.b;
        EndpointMark m1 = e.mark_a, m2 = e.mark_b;
        if (m1 == EndpointMark::Arrow && m2 != EndpointMark::Arrow) {
            std::swap(first, second);
            std::swap(m1, m2);
        }
        std::string op;
        if (m1 == EndpointMark::Tail && m2 == EndpointMark::Arrow) op = "-->";
        else if (m1 == EndpointMark::Arrow && m2 == EndpointMark::Arrow) op = "<->";
        else if (m1 == EndpointMark::Circle && m2 == EndpointMark::Arrow) op = "o->";
        else if (m1 == EndpointMark::Circle && m2 == EndpointMark::Circle) op = "o-o";
        else throw InputError("edge cannot be written in the text format");
        out += g.name(first) + ' ' + op + ' ' + g.name(second) + '\n';
    }
    return out;
}

inline MixedGraph read_graph_file(const std::string& path, GraphKind kind = GraphKind::PAG) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open graph file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_graph(ss.str(), kind);
}

inline void write_graph_file(const std::string& path, const MixedGraph& g) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write graph file: " + path);
    f << serialize_graph(g);
}

}  // namespace ispec

#endif  // ISPEC_GRAPH_IO_HPP
