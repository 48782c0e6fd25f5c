#pragma once

// Network graph, excitation/measurement sets and the structural selection
// matrices B, C and I_G.
//
// Index conventions (all external data is 1-based):
//   * an edge (from j, to i) means G(i, j) != 0, i.e. the signal flows j -> i;
//   * edges are kept sorted by (j, i), which is the column-major order of G
//     and the coordinate order of the edge-weight vector x;
//   * vec() stacks columns, so I_G column k has its single 1 at row
//     (j_k - 1) * n + i_k (1-based), i.e. (j_k - 1) * n + (i_k - 1) 0-based.

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "netident/errors.hpp"

namespace netident {

struct Edge {
    int from = 0;  ///< source node j (1-based)
    int to = 0;    ///< target node i (1-based)

    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct TopologyOptions {
    bool allow_self_loops = false;
};

/// Immutable, validated network graph.
class NetworkTopology {
public:
    NetworkTopology() = default;

    int node_count() const noexcept { return n_; }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const Edge& edge(std::size_t k) const { return edges_.at(k); }
    bool self_loops_allowed() const noexcept { return self_loops_; }

    /// Position of (from, to) in the canonical edge order, or edge_count().
    std::size_t index_of(Edge e) const {
        auto it = std::lower_bound(edges_.begin(), edges_.end(), e);
        if (it == edges_.end() || *it != e) return edges_.size();
        return static_cast<std::size_t>(it - edges_.begin());
    }

    friend bool operator==(const NetworkTopology&, const NetworkTopology&) = default;

private:
    friend NetworkTopology validate_topology(long long, std::vector<std::pair<long long, long long>>,
                                             TopologyOptions);
    int n_ = 0;
    std::vector<Edge> edges_;
    bool self_loops_ = false;
};

/// Validates a raw (n, [(j, i), ...]) description and sorts edges into
/// canonical order.
inline NetworkTopology validate_topology(long long n, std::vector<std::pair<long long, long long>> raw_edges,
                                         TopologyOptions options = {}) {
    if (n <= 0) {
        throw TopologyError(ErrorCode::node_count_zero, "node count must be positive, got " + std::to_string(n));
    }
    if (n > 1'000'000) {
        throw TopologyError(ErrorCode::invalid_parameter, "node count " + std::to_string(n) + " is too large");
    }
    NetworkTopology topo;
    topo.n_ = static_cast<int>(n);
    topo.self_loops_ = options.allow_self_loops;
    topo.edges_.reserve(raw_edges.size());
    for (const auto& [j, i] : raw_edges) {
        if (j < 1 || j > n || i < 1 || i > n) {
            throw TopologyError(ErrorCode::node_out_of_range,
                                "edge (" + std::to_string(j) + ", " + std::to_string(i) +
                                    ") references a node outside [1, " + std::to_string(n) + "]");
        }
        if (j == i && !options.allow_self_loops) {
            throw TopologyError(ErrorCode::self_loop,
                                "self-loop on node " + std::to_string(j) + " (self-loops are disabled)");
        }
        topo.edges_.push_back(Edge{static_cast<int>(j), static_cast<int>(i)});
    }
    std::sort(topo.edges_.begin(), topo.edges_.end());
    auto dup = std::adjacent_find(topo.edges_.begin(), topo.edges_.end());
    if (dup != topo.edges_.end()) {
        throw TopologyError(ErrorCode::duplicate_edge, "duplicate edge (" + std::to_string(dup->from) + ", " +
                                                           std::to_string(dup->to) + ")");
    }
    return topo;
}

inline NetworkTopology validate_topology(int n, const std::vector<Edge>& edges, TopologyOptions options = {}) {
    std::vector<std::pair<long long, long long>> raw;
    raw.reserve(edges.size());
    for (const auto& e : edges) raw.emplace_back(e.from, e.to);
    return validate_topology(static_cast<long long>(n), std::move(raw), options);
}

/// Excited set (B) and measured set (C), strictly increasing, 1-based.
struct SelectionSets {
    std::vector<int> excited;
    std::vector<int> measured;

    friend bool operator==(const SelectionSets&, const SelectionSets&) = default;
};

namespace detail {

inline std::vector<int> normalize_node_set(std::vector<long long> raw, int n, const char* what, ErrorCode empty_code) {
    if (raw.empty()) throw TopologyError(empty_code, std::string(what) + " set must not be empty");
    std::sort(raw.begin(), raw.end());
    for (std::size_t k = 0; k < raw.size(); ++k) {
        if (raw[k] < 1 || raw[k] > n) {
            throw TopologyError(ErrorCode::node_out_of_range, std::string(what) + " node " + std::to_string(raw[k]) +
                                                                  " outside [1, " + std::to_string(n) + "]");
        }
        if (k > 0 && raw[k] == raw[k - 1]) {
            throw TopologyError(ErrorCode::duplicate_node_in_set,
                                std::string(what) + " node " + std::to_string(raw[k]) + " listed twice");
        }
    }
    return {raw.begin(), raw.end()};
}

}  // namespace detail

inline SelectionSets validate_selection(const NetworkTopology& topo, std::vector<long long> excited,
                                        std::vector<long long> measured) {
    SelectionSets sets;
    sets.excited = detail::normalize_node_set(std::move(excited), topo.node_count(), "excited",
                                              ErrorCode::empty_excited_set);
    sets.measured = detail::normalize_node_set(std::move(measured), topo.node_count(), "measured",
                                               ErrorCode::empty_measured_set);
    return sets;
}

inline SelectionSets validate_selection(const NetworkTopology& topo, const std::vector<int>& excited,
                                        const std::vector<int>& measured) {
    return validate_selection(topo, std::vector<long long>(excited.begin(), excited.end()),
                              std::vector<long long>(measured.begin(), measured.end()));
}

/// B (n x |B|), C (|C| x n) and I_G (n^2 x |E|), with the index metadata they
/// were built from.
struct SelectionMatrices {
    Eigen::MatrixXd B;
    Eigen::MatrixXd C;
    Eigen::MatrixXd IG;
    int n = 0;
    std::vector<int> excited;
    std::vector<int> measured;
    std::vector<Edge> edges;

    /// 0-based row of K for excitation column b and measurement row c, both
    /// 0-based positions inside the selection lists.
    std::size_t k_row(std::size_t b, std::size_t c) const { return b * measured.size() + c; }
    std::size_t k_rows() const { return excited.size() * measured.size(); }
};

/// 0-based row of vec(M) for entry (row, col) of an n x n matrix, 0-based.
inline std::size_t vec_index(int row, int col, int n) {
    return static_cast<std::size_t>(col) * static_cast<std::size_t>(n) + static_cast<std::size_t>(row);
}

inline SelectionMatrices build_selection_matrices(const NetworkTopology& topo, const SelectionSets& sets) {
    const int n = topo.node_count();
    auto check = [n](int node, const char* what) {
        if (node < 1 || node > n) {
            throw TopologyError(ErrorCode::node_out_of_range,
                                std::string(what) + " node " + std::to_string(node) + " exceeds n = " + std::to_string(n));
        }
    };
    SelectionMatrices sel;
    sel.n = n;
    sel.excited = sets.excited;
    sel.measured = sets.measured;
    sel.edges = topo.edges();

    sel.B = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(sets.excited.size()));
    for (std::size_t b = 0; b < sets.excited.size(); ++b) {
        check(sets.excited[b], "excited");
        sel.B(sets.excited[b] - 1, static_cast<Eigen::Index>(b)) = 1.0;
    }
    sel.C = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sets.measured.size()), n);
    for (std::size_t c = 0; c < sets.measured.size(); ++c) {
        check(sets.measured[c], "measured");
        sel.C(static_cast<Eigen::Index>(c), sets.measured[c] - 1) = 1.0;
    }
    const auto n2 = static_cast<Eigen::Index>(n) * n;
    sel.IG = Eigen::MatrixXd::Zero(n2, static_cast<Eigen::Index>(topo.edge_count()));
    for (std::size_t k = 0; k < topo.edge_count(); ++k) {
        const Edge& e = topo.edge(k);
        sel.IG(static_cast<Eigen::Index>(vec_index(e.to - 1, e.from - 1, n)), static_cast<Eigen::Index>(k)) = 1.0;
    }
    return sel;
}

/// Whether every node is excited (B = I).
inline bool fully_excited(const SelectionMatrices& sel) {
    return static_cast<int>(sel.excited.size()) == sel.n;
}

/// Whether every node is measured (C = I).
inline bool fully_measured(const SelectionMatrices& sel) {
    return static_cast<int>(sel.measured.size()) == sel.n;
}

}  // namespace netident
