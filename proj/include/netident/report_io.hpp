#pragma once

// JSON graph input, the report document, and DOT export.
//
// Graph format (1-based nodes):
//   {"n": int, "edges": [[j, i], ...], "excited": [int, ...], "measured": [int, ...]}
// An optional "layout" member (editor node positions) is accepted and ignored.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "netident/engine.hpp"
#include "netident/errors.hpp"
#include "netident/topology.hpp"
#include "netident/verify.hpp"
#include "netident/version.hpp"

namespace netident {

using ordered_json = nlohmann::ordered_json;

/// Input error with an optional source position (1-based line and column).
class InputError : public Error {
public:
    InputError(ErrorCode code, const std::string& message, std::optional<std::size_t> line = std::nullopt,
               std::optional<std::size_t> column = std::nullopt)
        : Error(code, message), line_(line), column_(column) {}

    std::optional<std::size_t> line() const noexcept { return line_; }
    std::optional<std::size_t> column() const noexcept { return column_; }

private:
    std::optional<std::size_t> line_;
    std::optional<std::size_t> column_;
};

// ---------------------------------------------------------------------------
// Canonical writer

namespace detail {

inline std::string format_double(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s(buf);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

inline void write_json(const ordered_json& j, std::string& out, int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
    const char* nl = indent > 0 ? "\n" : "";
    switch (j.type()) {
        case ordered_json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{";
            out += nl;
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) {
                    out += ",";
                    out += nl;
                }
                first = false;
                out += pad;
                out += ordered_json(it.key()).dump();
                out += indent > 0 ? ": " : ":";
                write_json(it.value(), out, indent, depth + 1);
            }
            out += nl;
            out += close_pad;
            out += "}";
            return;
        }
        case ordered_json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            // Arrays of scalars stay on one line.
            const bool flat = std::none_of(j.begin(), j.end(), [](const ordered_json& v) { return v.is_structured(); });
            out += "[";
            bool first = true;
            for (const auto& v : j) {
                if (!first) out += flat ? ", " : ",";
                if (!flat) {
                    out += nl;
                    out += pad;
                }
                first = false;
                write_json(v, out, indent, depth + 1);
            }
            if (!flat) {
                out += nl;
                out += close_pad;
            }
            out += "]";
            return;
        }
        case ordered_json::value_t::number_float:
            out += format_double(j.get<double>());
            return;
        default:
            out += j.dump();
            return;
    }
}

inline std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace detail

/// Canonical text: insertion-ordered keys, floats with 17 significant digits,
/// trailing newline.
inline std::string to_canonical_json(const ordered_json& j, int indent = 2) {
    std::string out;
    detail::write_json(j, out, indent, 0);
    out += "\n";
    return out;
}

inline ordered_json parse_json_text(const std::string& text) {
    try {
        return ordered_json::parse(text);
    } catch (const ordered_json::parse_error& e) {
        // e.byte is 1-based and points just past the offending character.
        const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
        const auto [line, col] = detail::line_col(text, at);
        std::string msg = e.what();
        const auto pos = msg.find("syntax error");
        if (pos != std::string::npos) msg = msg.substr(pos);
        throw InputError(ErrorCode::invalid_json, msg, line, col);
    }
}

// ---------------------------------------------------------------------------
// Graph input

struct GraphInput {
    NetworkTopology topo;
    SelectionSets sets;
};

struct ParseOptions {
    bool strict = false;
    TopologyOptions topology;
};

namespace detail {

inline long long get_int(const ordered_json& j, const std::string& where) {
    if (!j.is_number_integer()) throw InputError(ErrorCode::invalid_schema, where + " must be an integer");
    return j.get<long long>();
}

inline std::vector<long long> get_int_list(const ordered_json& j, const std::string& where) {
    if (!j.is_array()) throw InputError(ErrorCode::invalid_schema, where + " must be an array of integers");
    std::vector<long long> out;
    for (std::size_t k = 0; k < j.size(); ++k) out.push_back(get_int(j[k], where + "[" + std::to_string(k) + "]"));
    return out;
}

inline void check_fields(const ordered_json& obj, const std::set<std::string>& known, const std::string& where,
                         bool strict, std::vector<std::string>* warnings) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (known.count(it.key())) continue;
        const std::string msg = "unknown field \"" + it.key() + "\"" + (where.empty() ? "" : " in " + where);
        if (strict) throw InputError(ErrorCode::unknown_field, msg);
        if (warnings) warnings->push_back(msg + " ignored");
    }
}

inline const ordered_json& require(const ordered_json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw InputError(ErrorCode::invalid_schema, std::string("missing required field \"") + key + "\"");
    return *it;
}

}  // namespace detail

/// Validates a parsed graph object. Extra top-level keys in `extra_known`
/// are accepted silently (used for request options).
inline GraphInput graph_from_json(const ordered_json& j, const ParseOptions& options = {},
                                  std::vector<std::string>* warnings = nullptr,
                                  const std::set<std::string>& extra_known = {}) {
    if (!j.is_object()) throw InputError(ErrorCode::invalid_schema, "graph must be a JSON object");
    std::set<std::string> known{"n", "edges", "excited", "measured", "layout"};
    known.insert(extra_known.begin(), extra_known.end());
    detail::check_fields(j, known, "", options.strict, warnings);

    const long long n = detail::get_int(detail::require(j, "n"), "n");
    const auto& edges_json = detail::require(j, "edges");
    if (!edges_json.is_array()) throw InputError(ErrorCode::invalid_schema, "edges must be an array of [j, i] pairs");
    std::vector<std::pair<long long, long long>> edges;
    for (std::size_t k = 0; k < edges_json.size(); ++k) {
        const auto& e = edges_json[k];
        const std::string where = "edges[" + std::to_string(k) + "]";
        if (!e.is_array() || e.size() != 2) throw InputError(ErrorCode::invalid_schema, where + " must be a [j, i] pair");
        edges.emplace_back(detail::get_int(e[0], where + "[0]"), detail::get_int(e[1], where + "[1]"));
    }
    GraphInput out;
    out.topo = validate_topology(n, std::move(edges), options.topology);
    out.sets = validate_selection(out.topo, detail::get_int_list(detail::require(j, "excited"), "excited"),
                                  detail::get_int_list(detail::require(j, "measured"), "measured"));
    return out;
}

inline GraphInput parse_graph(const std::string& text, const ParseOptions& options = {},
                              std::vector<std::string>* warnings = nullptr) {
    return graph_from_json(parse_json_text(text), options, warnings);
}

inline ordered_json graph_to_json(const NetworkTopology& topo, const SelectionSets& sets) {
    ordered_json j;
    j["n"] = topo.node_count();
    j["edges"] = ordered_json::array();
    for (const auto& e : topo.edges()) j["edges"].push_back({e.from, e.to});
    j["excited"] = sets.excited;
    j["measured"] = sets.measured;
    return j;
}

/// Canonical graph text, byte-compatible with what the CLI reads.
inline std::string export_graph(const NetworkTopology& topo, const SelectionSets& sets) {
    return to_canonical_json(graph_to_json(topo, sets));
}

// ---------------------------------------------------------------------------
// Analyze request (HTTP body): a graph plus optional analysis options.

struct AnalyzeRequest {
    GraphInput graph;
    AnalysisParams params;
    bool verify = false;
    std::vector<std::string> warnings;
};

inline AnalyzeRequest parse_analyze_request(const std::string& text, const ParseOptions& options = {}) {
    const ordered_json j = parse_json_text(text);
    AnalyzeRequest req;
    req.graph = graph_from_json(j, options, &req.warnings,
                                {"nsamples", "seed", "tolerances", "cond_limit", "verify"});
    auto number = [&](const char* key, const ordered_json& v) {
        if (!v.is_number()) throw InputError(ErrorCode::invalid_schema, std::string(key) + " must be a number");
        return v.get<double>();
    };
    if (auto it = j.find("nsamples"); it != j.end()) {
        const long long ns = detail::get_int(*it, "nsamples");
        if (ns < 1 || ns > 10000) throw InputError(ErrorCode::invalid_parameter, "nsamples must be in [1, 10000]");
        req.params.nsamples = static_cast<int>(ns);
    }
    if (auto it = j.find("seed"); it != j.end()) {
        if (!it->is_number_integer()) throw InputError(ErrorCode::invalid_schema, "seed must be an integer");
        if (!it->is_number_unsigned() && it->get<long long>() < 0) {
            throw InputError(ErrorCode::invalid_parameter, "seed must be non-negative");
        }
        req.params.seed = it->get<std::uint64_t>();
    }
    if (auto it = j.find("tolerances"); it != j.end()) {
        if (!it->is_object()) throw InputError(ErrorCode::invalid_schema, "tolerances must be an object");
        detail::check_fields(*it, {"rank", "entry"}, "tolerances", options.strict, &req.warnings);
        if (auto r = it->find("rank"); r != it->end()) req.params.tol.rank = number("tolerances.rank", *r);
        if (auto e = it->find("entry"); e != it->end()) req.params.tol.entry = number("tolerances.entry", *e);
    }
    if (auto it = j.find("cond_limit"); it != j.end()) req.params.cond_limit = number("cond_limit", *it);
    if (auto it = j.find("verify"); it != j.end()) {
        if (!it->is_boolean()) throw InputError(ErrorCode::invalid_schema, "verify must be a boolean");
        req.verify = it->get<bool>();
    }
    try {
        validate_params(req.params);
    } catch (const Error& e) {
        throw InputError(e.code(), e.what());
    }
    return req;
}

// ---------------------------------------------------------------------------
// Report document

struct ReportDocument {
    std::string schema_version = kSchemaVersion;
    std::string tool_version = kVersion;
    NetworkTopology topo;
    SelectionSets sets;
    IdentifiabilityReport report;
    std::vector<std::string> warnings;
    std::optional<double> elapsed_ms;
    std::optional<VerificationReport> verification;

    friend bool operator==(const ReportDocument&, const ReportDocument&) = default;
};

inline ReportDocument make_document(const NetworkTopology& topo, const SelectionSets& sets,
                                    IdentifiabilityReport report, std::vector<std::string> warnings = {}) {
    ReportDocument doc;
    doc.topo = topo;
    doc.sets = sets;
    doc.report = std::move(report);
    doc.warnings = std::move(warnings);
    return doc;
}

namespace detail {

inline ordered_json optional_number(const std::optional<double>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

inline std::optional<double> read_optional_number(const ordered_json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

}  // namespace detail

inline ordered_json to_json(const ReportDocument& doc) {
    const auto& r = doc.report;
    ordered_json j;
    j["schema_version"] = doc.schema_version;
    j["tool"] = {{"name", kToolName}, {"version", doc.tool_version}};
    j["input"] = graph_to_json(doc.topo, doc.sets);

    ordered_json params;
    params["nsamples"] = r.params.nsamples;
    params["seed"] = r.params.seed;
    params["tolerances"] = {{"rank", r.params.tol.rank}, {"entry", r.params.tol.entry}};
    params["cond_limit"] = r.params.cond_limit;
    params["max_retries"] = r.params.max_retries;
    params["allow_self_loops"] = doc.topo.self_loops_allowed();
    j["parameters"] = params;

    ordered_json result;
    result["scope"] = "generic local identifiability";
    result["network_locally_identifiable"] = r.network;
    result["full_rank_marks_all_edges"] = true;
    result["edges"] = ordered_json::array();
    for (std::size_t k = 0; k < doc.topo.edge_count(); ++k) {
        const Edge& e = doc.topo.edge(k);
        result["edges"].push_back(
            ordered_json{{"from", e.from}, {"to", e.to}, {"locally_identifiable", k < r.edges.size() && r.edges[k]}});
    }
    j["result"] = result;

    j["samples"] = ordered_json::array();
    for (const auto& s : r.samples) {
        ordered_json sj;
        sj["rank"] = s.rank;
        sj["kernel_dim"] = s.kernel_dim;
        sj["cond"] = s.cond;
        sj["singular_values"] = s.singular_values;
        j["samples"].push_back(sj);
    }
    j["warnings"] = doc.warnings;
    if (doc.elapsed_ms) j["timing"] = {{"elapsed_ms", *doc.elapsed_ms}};
    if (doc.verification) {
        const auto& v = *doc.verification;
        ordered_json vj;
        vj["passed"] = v.passed;
        vj["prime"] = v.prime;
        vj["checks"] = ordered_json::array();
        for (const auto& c : v.checks) {
            vj["checks"].push_back(ordered_json{{"name", c.name},
                                                {"passed", c.passed},
                                                {"value", detail::optional_number(c.value)},
                                                {"threshold", detail::optional_number(c.threshold)},
                                                {"detail", c.detail}});
        }
        j["verification"] = vj;
    }
    return j;
}

inline std::string export_json(const ReportDocument& doc) { return to_canonical_json(to_json(doc)); }

inline ReportDocument report_from_json(const ordered_json& j) {
    try {
        ReportDocument doc;
        doc.schema_version = j.at("schema_version").get<std::string>();
        if (doc.schema_version != kSchemaVersion) {
            throw InputError(ErrorCode::invalid_schema, "unsupported schema version " + doc.schema_version);
        }
        doc.tool_version = j.at("tool").at("version").get<std::string>();
        const auto& p = j.at("parameters");
        ParseOptions opts;
        opts.strict = true;
        opts.topology.allow_self_loops = p.at("allow_self_loops").get<bool>();
        auto graph = graph_from_json(j.at("input"), opts);
        doc.topo = std::move(graph.topo);
        doc.sets = std::move(graph.sets);

        auto& r = doc.report;
        r.params.nsamples = p.at("nsamples").get<int>();
        r.params.seed = p.at("seed").get<std::uint64_t>();
        r.params.tol.rank = p.at("tolerances").at("rank").get<double>();
        r.params.tol.entry = p.at("tolerances").at("entry").get<double>();
        r.params.cond_limit = p.at("cond_limit").get<double>();
        r.params.max_retries = p.at("max_retries").get<int>();

        const auto& res = j.at("result");
        r.network = res.at("network_locally_identifiable").get<bool>();
        const auto& edges = res.at("edges");
        if (edges.size() != doc.topo.edge_count()) {
            throw InputError(ErrorCode::invalid_schema, "result.edges length does not match |E|");
        }
        for (std::size_t k = 0; k < edges.size(); ++k) {
            const Edge e{edges[k].at("from").get<int>(), edges[k].at("to").get<int>()};
            if (e != doc.topo.edge(k)) throw InputError(ErrorCode::invalid_schema, "result.edges order differs from input");
            r.edges.push_back(edges[k].at("locally_identifiable").get<bool>());
        }
        for (const auto& sj : j.at("samples")) {
            SampleDiagnostics s;
            s.rank = sj.at("rank").get<int>();
            s.kernel_dim = sj.at("kernel_dim").get<int>();
            s.cond = sj.at("cond").get<double>();
            s.singular_values = sj.at("singular_values").get<std::vector<double>>();
            r.samples.push_back(std::move(s));
        }
        doc.warnings = j.at("warnings").get<std::vector<std::string>>();
        if (auto t = j.find("timing"); t != j.end()) doc.elapsed_ms = t->at("elapsed_ms").get<double>();
        if (auto v = j.find("verification"); v != j.end()) {
            VerificationReport vr;
            vr.passed = v->at("passed").get<bool>();
            vr.prime = v->at("prime").get<std::uint64_t>();
            for (const auto& c : v->at("checks")) {
                vr.checks.push_back({c.at("name").get<std::string>(), c.at("passed").get<bool>(),
                                     detail::read_optional_number(c.at("value")),
                                     detail::read_optional_number(c.at("threshold")), c.at("detail").get<std::string>()});
            }
            doc.verification = std::move(vr);
        }
        return doc;
    } catch (const ordered_json::exception& e) {
        throw InputError(ErrorCode::invalid_schema, std::string("malformed report: ") + e.what());
    }
}

inline ReportDocument parse_report(const std::string& text) { return report_from_json(parse_json_text(text)); }

// ---------------------------------------------------------------------------
// DOT

/// Directed graph with verdict styling: identifiable edges solid black,
/// non-identifiable edges dashed red. Excited nodes are boxes, measured nodes
/// get a double outline; node labels carry E / M tags.
inline std::string export_dot(const ReportDocument& doc) {
    const auto& r = doc.report;
    std::set<int> excited(doc.sets.excited.begin(), doc.sets.excited.end());
    std::set<int> measured(doc.sets.measured.begin(), doc.sets.measured.end());
    std::ostringstream out;
    out << "digraph network {\n";
    out << "  // identifiable: solid black; non-identifiable: dashed red\n";
    out << "  // excited: box, tag E; measured: double outline, tag M\n";
    out << "  label=\"" << (r.network ? "network generically locally identifiable"
                                      : "network not generically locally identifiable")
        << "\";\n";
    out << "  node [shape=circle];\n";
    for (int v = 1; v <= doc.topo.node_count(); ++v) {
        const bool e = excited.count(v) > 0;
        const bool m = measured.count(v) > 0;
        std::string label = std::to_string(v);
        if (e && m) {
            label += " (E,M)";
        } else if (e) {
            label += " (E)";
        } else if (m) {
            label += " (M)";
        }
        out << "  " << v << " [label=\"" << label << "\"";
        if (e) out << ", shape=box";
        if (m) out << ", peripheries=2";
        out << "];\n";
    }
    for (std::size_t k = 0; k < doc.topo.edge_count(); ++k) {
        const Edge& edge = doc.topo.edge(k);
        const bool ok = k < r.edges.size() && r.edges[k];
        out << "  " << edge.from << " -> " << edge.to;
        if (ok) {
            out << " [style=solid, color=black];\n";
        } else {
            out << " [style=dashed, color=red];\n";
        }
    }
    out << "}\n";
    return out.str();
}

}  // namespace netident
