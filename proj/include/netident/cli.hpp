#pragma once

// `netident analyze` and `netident serve`.
// Exit codes: 0 success, 1 usage or input error, 2 analysis failure.

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "netident/engine.hpp"
#include "netident/errors.hpp"
#include "netident/report_io.hpp"
#include "netident/service.hpp"
#include "netident/verify.hpp"
#include "netident/version.hpp"

namespace netident::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitAnalysis = 2;

struct AnalyzeOptions {
    std::string input;
    AnalysisParams params;
    std::string format = "json";
    bool verify = false;
    bool strict = false;
    bool allow_self_loops = false;
    bool timing = false;
};

inline bool is_input_error(ErrorCode code) {
    switch (code) {
        case ErrorCode::sampling_failed:
        case ErrorCode::decomposition_failed:
        case ErrorCode::singular_transfer:
        case ErrorCode::timeout:
            return false;
        default:
            return true;
    }
}

inline int run_analyze(const AnalyzeOptions& opt, std::ostream& out, std::ostream& err) {
    std::ifstream file(opt.input, std::ios::binary);
    if (!file) {
        err << "error: cannot open input file '" << opt.input << "'\n";
        return kExitUsage;
    }
    std::stringstream buffer;
    buffer << file.rdbuf();

    GraphInput graph;
    std::vector<std::string> warnings;
    try {
        ParseOptions po;
        po.strict = opt.strict;
        po.topology.allow_self_loops = opt.allow_self_loops;
        graph = parse_graph(buffer.str(), po, &warnings);
        validate_params(opt.params);
    } catch (const InputError& e) {
        err << opt.input;
        if (e.line()) err << ':' << *e.line() << ':' << e.column().value_or(1);
        err << ": error: " << to_string(e.code()) << ": " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << opt.input << ": error: " << to_string(e.code()) << ": " << e.what() << '\n';
        return kExitUsage;
    }
    for (const auto& w : warnings) err << opt.input << ": warning: " << w << '\n';

    try {
        const auto start = std::chrono::steady_clock::now();
        auto report = analyze(graph.topo, graph.sets, opt.params);
        auto doc = make_document(graph.topo, graph.sets, std::move(report), warnings);
        if (opt.verify) doc.verification = run_verification(graph.topo, graph.sets, opt.params, doc.report);
        if (opt.timing) {
            doc.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        }
        out << (opt.format == "dot" ? export_dot(doc) : export_json(doc));
        if (doc.verification && !doc.verification->passed) {
            err << "error: verification failed\n";
            return kExitAnalysis;
        }
        return kExitOk;
    } catch (const Error& e) {
        err << "error: analysis failed: " << to_string(e.code()) << ": " << e.what() << '\n';
        return is_input_error(e.code()) ? kExitUsage : kExitAnalysis;
    } catch (const std::exception& e) {
        err << "error: analysis failed: " << e.what() << '\n';
        return kExitAnalysis;
    }
}

inline int run_serve(const service::ServiceConfig& config, std::ostream& out, std::ostream& err) {
    try {
        service::Server server(config);
        if (server.bind() < 0) {
            err << "error: cannot bind " << config.host << ':' << config.port << '\n';
            return kExitUsage;
        }
        out << "netident " << kVersion << " listening on http://" << config.host << ':' << server.port() << '\n'
            << std::flush;
        return server.listen() ? kExitOk : kExitAnalysis;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}

/// Entry point shared by the executable and the tests.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Generic local identifiability of partially excited, partially measured dynamical networks",
                 "netident"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kVersion);
    app.require_subcommand(1);

    AnalyzeOptions a;
    auto* analyze_cmd = app.add_subcommand("analyze", "Run the randomized identifiability test on a JSON graph");
    analyze_cmd->add_option("--input", a.input, "Graph file {\"n\", \"edges\", \"excited\", \"measured\"}")
        ->required();
    analyze_cmd->add_option("--nsamples", a.params.nsamples, "Number of random samples")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    analyze_cmd->add_option("--seed", a.params.seed, "Random seed")->capture_default_str();
    analyze_cmd->add_option("--tol-rank", a.params.tol.rank, "Relative singular-value threshold")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    analyze_cmd->add_option("--tol-entry", a.params.tol.entry, "Kernel-row zero threshold")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    analyze_cmd->add_option("--cond-limit", a.params.cond_limit, "Resample when cond(I - G) exceeds this")
        ->capture_default_str();
    analyze_cmd->add_option("--format", a.format, "Output format")
        ->capture_default_str()
        ->check(CLI::IsMember({"json", "dot"}));
    analyze_cmd->add_flag("--verify", a.verify, "Run the oracle cross-checks and append them to the report");
    analyze_cmd->add_flag("--strict", a.strict, "Reject unknown fields in the input");
    analyze_cmd->add_flag("--allow-self-loops", a.allow_self_loops, "Accept edges (i, i)");
    analyze_cmd->add_flag("--timing", a.timing, "Include wall-clock timing (output is then not reproducible)");

    service::ServiceConfig s;
    auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API (and optionally a static UI bundle)");
    serve_cmd->add_option("--port", s.port, "TCP port (0 picks a free one)")->capture_default_str();
    serve_cmd->add_option("--host", s.host, "Bind address")->capture_default_str();
    serve_cmd->add_option("--static-dir", s.static_dir, "Directory served under /");
    serve_cmd->add_option("--timeout", s.timeout_seconds, "Per-request analysis timeout in seconds")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    serve_cmd->add_flag("--cors", s.cors, "Send permissive CORS headers (UI development)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kToolName << ' ' << kVersion << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        if (app.got_subcommand(analyze_cmd)) {
            err << analyze_cmd->help();
        } else if (app.got_subcommand(serve_cmd)) {
            err << serve_cmd->help();
        } else {
            err << app.help();
        }
        return kExitUsage;
    }

    if (*analyze_cmd) return run_analyze(a, out, err);
    return run_serve(s, out, err);
}

}  // namespace netident::cli
