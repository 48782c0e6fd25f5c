#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace netident {

/// Machine-readable error categories shared by the CLI and the HTTP layer.
enum class ErrorCode {
    invalid_json,
    invalid_schema,
    unknown_field,
    node_count_zero,
    node_out_of_range,
    duplicate_edge,
    self_loop,
    empty_excited_set,
    empty_measured_set,
    duplicate_node_in_set,
    invalid_parameter,
    dimension_mismatch,
    singular_transfer,
    sampling_failed,
    decomposition_failed,
    precondition_violated,
    timeout,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_json: return "invalid-json";
        case ErrorCode::invalid_schema: return "invalid-schema";
        case ErrorCode::unknown_field: return "unknown-field";
        case ErrorCode::node_count_zero: return "node-count-zero";
        case ErrorCode::node_out_of_range: return "node-out-of-range";
        case ErrorCode::duplicate_edge: return "duplicate-edge";
        case ErrorCode::self_loop: return "self-loop";
        case ErrorCode::empty_excited_set: return "empty-excited-set";
        case ErrorCode::empty_measured_set: return "empty-measured-set";
        case ErrorCode::duplicate_node_in_set: return "duplicate-node-in-set";
        case ErrorCode::invalid_parameter: return "invalid-parameter";
        case ErrorCode::dimension_mismatch: return "dimension-mismatch";
        case ErrorCode::singular_transfer: return "singular-transfer";
        case ErrorCode::sampling_failed: return "sampling-failed";
        case ErrorCode::decomposition_failed: return "decomposition-failed";
        case ErrorCode::precondition_violated: return "precondition-violated";
        case ErrorCode::timeout: return "timeout";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Raised for malformed network descriptions and selection sets.
class TopologyError : public Error {
public:
    using Error::Error;
};

/// (I - G(x)) is numerically singular, i.e. x lies in the excluded set D
/// where det(I - G(x)) = 0.
class SingularTransferError : public Error {
public:
    SingularTransferError(const std::string& message, double cond)
        : Error(ErrorCode::singular_transfer, message), cond_(cond) {}

    double cond() const noexcept { return cond_; }

private:
    double cond_;
};

class SamplingError : public Error {
public:
    SamplingError(const std::string& message, double last_cond)
        : Error(ErrorCode::sampling_failed, message), last_cond_(last_cond) {}

    double last_cond() const noexcept { return last_cond_; }

private:
    double last_cond_;
};

class DecompositionError : public Error {
public:
    explicit DecompositionError(const std::string& message)
        : Error(ErrorCode::decomposition_failed, message) {}
};

}  // namespace netident
