#pragma once

// HTTP layer: POST /api/analyze, GET /api/health, and optional static files
// under "/". Handlers are plain functions so they can be exercised without a
// socket; Server binds them to cpp-httplib.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <random>
#include <string>

#include "netident/engine.hpp"
#include "netident/errors.hpp"
#include "netident/report_io.hpp"
#include "netident/verify.hpp"
#include "netident/version.hpp"

// After Eigen: <resolv.h>, pulled in by httplib, defines a `_res` macro that
// collides with Eigen parameter names.
#include <httplib.h>

namespace netident::service {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string static_dir;
    bool cors = false;
    double timeout_seconds = 10.0;
    std::size_t max_body_bytes = 1 << 20;
};

struct HttpResponse {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

/// HTTP status for an error category.
inline int status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_json:
        case ErrorCode::invalid_schema:
        case ErrorCode::unknown_field:
        case ErrorCode::node_count_zero:
        case ErrorCode::node_out_of_range:
        case ErrorCode::duplicate_edge:
        case ErrorCode::self_loop:
        case ErrorCode::duplicate_node_in_set:
            return 400;
        case ErrorCode::empty_excited_set:
        case ErrorCode::empty_measured_set:
        case ErrorCode::invalid_parameter:
            return 422;
        case ErrorCode::timeout:
            return 408;
        default:
            return 500;
    }
}

namespace detail {

inline std::string error_body(std::string_view code, const std::string& message, const std::string& id = {}) {
    ordered_json err{{"code", code}, {"message", message}};
    if (!id.empty()) err["id"] = id;
    return to_canonical_json(ordered_json{{"error", err}});
}

inline std::string new_error_id() {
    static std::atomic<std::uint64_t> counter{0};
    static const std::uint64_t salt = std::random_device{}();
    char buf[40];
    std::snprintf(buf, sizeof buf, "err-%08llx-%06llx", static_cast<unsigned long long>(salt & 0xffffffffull),
                  static_cast<unsigned long long>(++counter));
    return buf;
}

inline HttpResponse internal_error(const std::string& what) {
    const std::string id = new_error_id();
    std::cerr << "netident serve: internal error " << id << ": " << what << '\n';
    return {500, error_body("internal", "internal error", id)};
}

}  // namespace detail

inline HttpResponse handle_health() {
    return {200, to_canonical_json(ordered_json{{"status", "ok"}, {"name", kToolName}, {"version", kVersion}})};
}

inline HttpResponse handle_analyze(const std::string& body, const std::string& content_type,
                                   const ServiceConfig& config = {}) {
    if (body.size() > config.max_body_bytes) {
        return {413, detail::error_body("payload-too-large",
                                        "request body exceeds " + std::to_string(config.max_body_bytes) + " bytes")};
    }
    if (content_type.rfind("application/json", 0) != 0) {
        return {415, detail::error_body("unsupported-media-type", "content type must be application/json")};
    }
    try {
        const auto deadline = std::chrono::steady_clock::now() +
                              std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                  std::chrono::duration<double>(config.timeout_seconds));
        auto req = parse_analyze_request(body);
        auto report = analyze(req.graph.topo, req.graph.sets, req.params, deadline);
        auto doc = make_document(req.graph.topo, req.graph.sets, std::move(report), std::move(req.warnings));
        if (req.verify) {
            doc.verification = run_verification(req.graph.topo, req.graph.sets, req.params, doc.report, {}, deadline);
        }
        return {200, export_json(doc)};
    } catch (const Error& e) {
        const int status = status_for(e.code());
        if (status == 500) return detail::internal_error(std::string(to_string(e.code())) + ": " + e.what());
        return {status, detail::error_body(to_string(e.code()), e.what())};
    } catch (const std::exception& e) {
        return detail::internal_error(e.what());
    }
}

/// cpp-httplib server wired to the handlers above.
class Server {
public:
    explicit Server(ServiceConfig config) : config_(std::move(config)) {
        server_.set_payload_max_length(config_.max_body_bytes);
        server_.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
            apply(handle_health(), res);
        });
        server_.Post("/api/analyze", [this](const httplib::Request& req, httplib::Response& res) {
            apply(handle_analyze(req.body, req.get_header_value("Content-Type"), config_), res);
        });
        if (config_.cors) {
            server_.Options(R"(/api/.*)", [this](const httplib::Request&, httplib::Response& res) {
                res.status = 204;
                add_cors(res);
            });
        }
        if (!config_.static_dir.empty() && !server_.set_mount_point("/", config_.static_dir)) {
            throw Error(ErrorCode::invalid_parameter, "static directory not found: " + config_.static_dir);
        }
    }

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds to config.port (0 picks a free port) and returns the bound port, or -1.
    int bind() {
        if (config_.port == 0) return bound_ = server_.bind_to_any_port(config_.host);
        return bound_ = server_.bind_to_port(config_.host, config_.port) ? config_.port : -1;
    }

    /// Serves until stop(); requires a successful bind().
    bool listen() { return server_.listen_after_bind(); }

    void stop() { server_.stop(); }
    void wait_until_ready() const { server_.wait_until_ready(); }
    int port() const noexcept { return bound_; }
    const ServiceConfig& config() const noexcept { return config_; }

private:
    void add_cors(httplib::Response& res) const {
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
    }

    void apply(const HttpResponse& r, httplib::Response& res) const {
        res.status = r.status;
        res.set_content(r.body, r.content_type);
        if (config_.cors) add_cors(res);
    }

    ServiceConfig config_;
    httplib::Server server_;
    int bound_ = -1;
};

}  // namespace netident::service
