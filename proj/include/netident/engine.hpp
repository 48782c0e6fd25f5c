#pragma once

// Generic local identifiability engine: random complex network samples, the
// gradient matrix K(x) = (B^T T^T (x) C T) I_G of the map
// x -> vec(C (I - G(x))^-1 B), and rank / kernel tests on it.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "netident/errors.hpp"
#include "netident/linalg.hpp"
#include "netident/random.hpp"
#include "netident/topology.hpp"

namespace netident {

struct Tolerances {
    /// Singular values above rank * max(rows, cols) * sigma_max count toward the rank.
    double rank = 1e-9;
    /// A kernel-basis row whose 2-norm is at most this is treated as zero.
    double entry = 1e-7;

    friend bool operator==(const Tolerances&, const Tolerances&) = default;
};

struct AnalysisParams {
    int nsamples = 5;
    std::uint64_t seed = 1;
    Tolerances tol;
    double cond_limit = 1e8;
    int max_retries = 50;

    friend bool operator==(const AnalysisParams&, const AnalysisParams&) = default;
};

inline void validate_params(const AnalysisParams& p) {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::invalid_parameter, what); };
    if (p.nsamples < 1) fail("nsamples must be >= 1, got " + std::to_string(p.nsamples));
    if (!(p.tol.rank > 0.0) || !std::isfinite(p.tol.rank)) fail("tol-rank must be positive and finite");
    if (!(p.tol.entry > 0.0) || !std::isfinite(p.tol.entry)) fail("tol-entry must be positive and finite");
    if (!(p.cond_limit > 1.0)) fail("cond-limit must be > 1");
    if (p.max_retries < 1) fail("max-retries must be >= 1");
}

// ---------------------------------------------------------------------------
// Samples

struct NetworkSample {
    CVector x;       ///< edge weights in canonical edge order
    CMatrix G;       ///< network matrix G(x)
    CMatrix T;       ///< (I - G)^-1
    double cond = 1;  ///< 1-norm condition number of (I - G)
    int retries = 0;  ///< rejected draws before this one
};

/// G(x): zero except G(i, j) = x_k for edge k = (j -> i).
inline CMatrix network_matrix(const NetworkTopology& topo, const CVector& x) {
    if (static_cast<std::size_t>(x.size()) != topo.edge_count()) {
        throw Error(ErrorCode::dimension_mismatch, "edge-weight vector has length " + std::to_string(x.size()) +
                                                       ", expected " + std::to_string(topo.edge_count()));
    }
    CMatrix G = CMatrix::Zero(topo.node_count(), topo.node_count());
    for (std::size_t k = 0; k < topo.edge_count(); ++k) {
        const Edge& e = topo.edge(k);
        G(e.to - 1, e.from - 1) = x(static_cast<Eigen::Index>(k));
    }
    return G;
}

namespace detail {

/// reach[j * n + i] is true iff the nonzero pattern of G has a path j -> i
/// of length >= 1.
inline std::vector<bool> reachability(const CMatrix& G) {
    const Eigen::Index n = G.rows();
    std::vector<bool> reach(static_cast<std::size_t>(n * n), false);
    std::vector<Eigen::Index> stack;
    for (Eigen::Index src = 0; src < n; ++src) {
        stack.assign(1, src);
        while (!stack.empty()) {
            const Eigen::Index j = stack.back();
            stack.pop_back();
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto slot = static_cast<std::size_t>(src * n + i);
                if (G(i, j) != Complex(0) && !reach[slot]) {
                    reach[slot] = true;
                    stack.push_back(i);
                }
            }
        }
    }
    return reach;
}

}  // namespace detail

struct TransferResult {
    CMatrix T;
    double cond = 1;
};

/// T = (I - G)^-1 with the 1-norm condition number of (I - G).
inline TransferResult compute_transfer(const CMatrix& G) {
    const Eigen::Index n = G.rows();
    if (G.cols() != n) throw Error(ErrorCode::dimension_mismatch, "network matrix must be square");
    const CMatrix A = CMatrix::Identity(n, n) - G;
    TransferResult out;
    if (n == 0) {
        out.T = CMatrix(0, 0);
        return out;
    }
    Eigen::PartialPivLU<CMatrix> lu(A);
    out.T = lu.inverse();
    // T(i, j) vanishes identically unless G has a directed path j -> i; pin
    // those entries to exact zeros so round-off cannot fake rank.
    const auto reach = detail::reachability(G);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (i != j && !reach[static_cast<std::size_t>(j * n + i)]) out.T(i, j) = 0.0;
        }
    }
    const double norm_a = A.cwiseAbs().colwise().sum().maxCoeff();
    const double norm_t = all_finite(out.T) ? out.T.cwiseAbs().colwise().sum().maxCoeff()
                                            : std::numeric_limits<double>::infinity();
    out.cond = norm_a * norm_t;
    if (!std::isfinite(out.cond) || out.cond > 1.0 / std::numeric_limits<double>::epsilon()) {
        throw SingularTransferError(
            "I - G(x) is numerically singular (cond = " + std::to_string(out.cond) +
                "): x lies in the excluded set D = {x | det(I - G(x)) = 0}",
            out.cond);
    }
    return out;
}

/// Builds the sample for a given x, rejecting it when cond(I - G) > cond_limit.
inline NetworkSample make_sample(const NetworkTopology& topo, CVector x, double cond_limit) {
    NetworkSample s;
    s.G = network_matrix(topo, x);
    s.x = std::move(x);
    auto tr = compute_transfer(s.G);
    if (tr.cond > cond_limit) {
        throw SingularTransferError("cond(I - G) = " + std::to_string(tr.cond) + " exceeds the limit " +
                                        std::to_string(cond_limit) + " (sample too close to D)",
                                    tr.cond);
    }
    s.T = std::move(tr.T);
    s.cond = tr.cond;
    return s;
}

/// Draws x with real and imaginary parts i.i.d. uniform on [-1, 1], retrying
/// until cond(I - G) <= cond_limit.
inline NetworkSample sample_network_matrix(const NetworkTopology& topo, SplitMix64& stream, double cond_limit,
                                           int max_retries = 50) {
    if (!(cond_limit > 1.0)) throw Error(ErrorCode::invalid_parameter, "cond_limit must be > 1");
    double last_cond = std::numeric_limits<double>::infinity();
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        CVector x(static_cast<Eigen::Index>(topo.edge_count()));
        for (Eigen::Index k = 0; k < x.size(); ++k) {
            const double re = stream.next_uniform(-1.0, 1.0);
            const double im = stream.next_uniform(-1.0, 1.0);
            x(k) = Complex(re, im);
        }
        try {
            NetworkSample s = make_sample(topo, std::move(x), cond_limit);
            s.retries = attempt;
            return s;
        } catch (const SingularTransferError& e) {
            last_cond = e.cond();
        }
    }
    throw SamplingError("no sample with cond(I - G) <= " + std::to_string(cond_limit) + " after " +
                            std::to_string(max_retries) + " retries (last cond = " + std::to_string(last_cond) + ")",
                        last_cond);
}

/// Sample `index` of a run; depends only on (seed, index).
inline NetworkSample draw_sample(const NetworkTopology& topo, const AnalysisParams& params, int index) {
    auto stream = SplitMix64::substream(params.seed, static_cast<std::uint64_t>(index));
    return sample_network_matrix(topo, stream, params.cond_limit, params.max_retries);
}

// ---------------------------------------------------------------------------
// K matrix

struct KRow {
    int excited = 0;   ///< excitation node b (1-based)
    int measured = 0;  ///< measurement node c (1-based)

    friend bool operator==(const KRow&, const KRow&) = default;
};

/// Row r = b * |C| + c holds d/dx of (C T B)(c, b); column k is edge k.
struct KMatrix {
    CMatrix entries;
    std::vector<KRow> rows;
    std::vector<Edge> cols;

    Eigen::Index row_count() const { return entries.rows(); }
    Eigen::Index col_count() const { return entries.cols(); }
};

namespace detail {

inline void check_dims(const NetworkSample& s, const SelectionMatrices& sel) {
    if (s.T.rows() != sel.n || s.T.cols() != sel.n ||
        static_cast<std::size_t>(s.x.size()) != sel.edges.size()) {
        throw Error(ErrorCode::dimension_mismatch, "sample and selection matrices disagree on n or |E|");
    }
}

inline KMatrix with_metadata(CMatrix entries, const SelectionMatrices& sel) {
    KMatrix K;
    K.entries = std::move(entries);
    K.rows.reserve(sel.k_rows());
    for (int b : sel.excited) {
        for (int c : sel.measured) K.rows.push_back(KRow{b, c});
    }
    K.cols = sel.edges;
    return K;
}

}  // namespace detail

/// K = (B^T T^T (x) C T) I_G.
inline KMatrix build_K(const NetworkSample& sample, const SelectionMatrices& sel) {
    detail::check_dims(sample, sel);
    const CMatrix left = sel.B.cast<Complex>().transpose() * sample.T.transpose();
    const CMatrix right = sel.C.cast<Complex>() * sample.T;
    const CMatrix full = kronecker(left, right);
    return detail::with_metadata(full * sel.IG.cast<Complex>(), sel);
}

/// Full-excitation specialization K' = (I (x) C T) I_G, which encodes C T Delta = 0.
inline KMatrix reduce_full_excitation(const NetworkSample& sample, const SelectionMatrices& sel) {
    detail::check_dims(sample, sel);
    if (!fully_excited(sel)) {
        throw Error(ErrorCode::precondition_violated, "full-excitation reduction requires every node to be excited");
    }
    const CMatrix right = sel.C.cast<Complex>() * sample.T;
    const CMatrix full = kronecker(CMatrix::Identity(sel.n, sel.n), right);
    return detail::with_metadata(full * sel.IG.cast<Complex>(), sel);
}

/// Full-measurement specialization ((T B)^T (x) I) I_G, which encodes Delta T B = 0.
inline KMatrix reduce_full_measurement(const NetworkSample& sample, const SelectionMatrices& sel) {
    detail::check_dims(sample, sel);
    if (!fully_measured(sel)) {
        throw Error(ErrorCode::precondition_violated, "full-measurement reduction requires every node to be measured");
    }
    const CMatrix left = (sample.T * sel.B.cast<Complex>()).transpose();
    const CMatrix full = kronecker(left, CMatrix::Identity(sel.n, sel.n));
    return detail::with_metadata(full * sel.IG.cast<Complex>(), sel);
}

// ---------------------------------------------------------------------------
// Rank and kernel

struct KernelDecomposition {
    int rank = 0;
    Eigen::VectorXd singular_values;
    double threshold = 0;
    CMatrix kernel;  ///< orthonormal basis of ker K, |E| x (|E| - rank)
};

inline KernelDecomposition decompose(const CMatrix& K, double tol_rank) {
    if (!all_finite(K)) throw DecompositionError("K contains non-finite entries");
    KernelDecomposition out;
    const Eigen::Index cols = K.cols();
    if (cols == 0 || K.rows() == 0) {
        out.singular_values = Eigen::VectorXd(0);
        out.kernel = CMatrix::Identity(cols, cols);
        return out;
    }
    Eigen::JacobiSVD<CMatrix> svd(K, Eigen::ComputeFullV);
    out.singular_values = svd.singularValues();
    const double sigma_max = out.singular_values.size() ? out.singular_values(0) : 0.0;
    out.threshold = tol_rank * static_cast<double>(std::max(K.rows(), cols)) * sigma_max;
    for (Eigen::Index i = 0; i < out.singular_values.size(); ++i) {
        if (out.singular_values(i) > out.threshold) ++out.rank;
    }
    if (!all_finite(svd.matrixV())) throw DecompositionError("SVD of K failed to converge");
    out.kernel = svd.matrixV().rightCols(cols - out.rank);
    return out;
}

struct RankResult {
    int rank = 0;
    Eigen::VectorXd singular_values;
};

inline RankResult numeric_rank(const CMatrix& K, double tol_rank) {
    auto d = decompose(K, tol_rank);
    return {d.rank, std::move(d.singular_values)};
}

inline RankResult numeric_rank(const KMatrix& K, double tol_rank) { return numeric_rank(K.entries, tol_rank); }

inline CMatrix kernel_basis(const CMatrix& K, double tol_rank) { return decompose(K, tol_rank).kernel; }

inline CMatrix kernel_basis(const KMatrix& K, double tol_rank) { return kernel_basis(K.entries, tol_rank); }

/// Edge e is locally identifiable on this sample iff row e of the kernel
/// basis vanishes (ker K is orthogonal to the e-th unit vector).
inline std::vector<bool> edge_verdicts_from_kernel(const CMatrix& V, double tol_entry) {
    std::vector<bool> verdicts(static_cast<std::size_t>(V.rows()), true);
    if (V.cols() == 0) return verdicts;
    for (Eigen::Index e = 0; e < V.rows(); ++e) {
        verdicts[static_cast<std::size_t>(e)] = V.row(e).norm() <= tol_entry;
    }
    return verdicts;
}

/// Rank-drop route: edge e is identifiable iff removing its column lowers the rank by one.
inline bool edge_verdict_by_rank_drop(const CMatrix& K, std::size_t e, double tol_rank) {
    const auto cols = static_cast<std::size_t>(K.cols());
    if (e >= cols) throw Error(ErrorCode::invalid_parameter, "edge index out of range");
    CMatrix reduced(K.rows(), K.cols() - 1);
    const auto ei = static_cast<Eigen::Index>(e);
    reduced.leftCols(ei) = K.leftCols(ei);
    reduced.rightCols(K.cols() - 1 - ei) = K.rightCols(K.cols() - 1 - ei);
    return numeric_rank(K, tol_rank).rank == numeric_rank(reduced, tol_rank).rank + 1;
}

inline bool edge_verdict_by_rank_drop(const KMatrix& K, std::size_t e, double tol_rank) {
    return edge_verdict_by_rank_drop(K.entries, e, tol_rank);
}

// ---------------------------------------------------------------------------
// Identifiability test

struct SampleDiagnostics {
    int rank = 0;
    int kernel_dim = 0;
    std::vector<double> singular_values;
    double cond = 1;

    friend bool operator==(const SampleDiagnostics&, const SampleDiagnostics&) = default;
};

struct IdentifiabilityReport {
    bool network = false;
    std::vector<bool> edges;
    std::vector<SampleDiagnostics> samples;
    AnalysisParams params;

    friend bool operator==(const IdentifiabilityReport&, const IdentifiabilityReport&) = default;
};

using Deadline = std::optional<std::chrono::steady_clock::time_point>;

/// Randomized generic local identifiability test. Each sample is certified
/// independently and the verdicts are OR-accumulated: full rank marks the
/// network (and hence every edge) identifiable, otherwise the kernel test
/// certifies individual edges.
inline IdentifiabilityReport analyze(const NetworkTopology& topo, const SelectionSets& sets,
                                     const AnalysisParams& params, Deadline deadline = std::nullopt) {
    validate_params(params);
    const SelectionMatrices sel = build_selection_matrices(topo, sets);
    const auto edge_count = static_cast<int>(topo.edge_count());

    IdentifiabilityReport report;
    report.params = params;
    report.edges.assign(topo.edge_count(), false);
    report.samples.reserve(static_cast<std::size_t>(params.nsamples));

    for (int i = 0; i < params.nsamples; ++i) {
        if (deadline && std::chrono::steady_clock::now() > *deadline) {
            throw Error(ErrorCode::timeout, "analysis exceeded its deadline after " + std::to_string(i) + " samples");
        }
        const std::string where = "sample " + std::to_string(i) + ": ";
        NetworkSample sample;
        KernelDecomposition dec;
        try {
            sample = draw_sample(topo, params, i);
            dec = decompose(build_K(sample, sel).entries, params.tol.rank);
        } catch (const SamplingError& e) {
            throw SamplingError(where + e.what(), e.last_cond());
        } catch (const DecompositionError& e) {
            throw DecompositionError(where + e.what());
        }

        SampleDiagnostics diag;
        diag.rank = dec.rank;
        diag.kernel_dim = edge_count - dec.rank;
        diag.singular_values.assign(dec.singular_values.data(),
                                    dec.singular_values.data() + dec.singular_values.size());
        diag.cond = sample.cond;
        report.samples.push_back(std::move(diag));

        if (dec.rank == edge_count) {
            report.network = true;
            report.edges.assign(topo.edge_count(), true);
        } else {
            const auto v = edge_verdicts_from_kernel(dec.kernel, params.tol.entry);
            for (std::size_t e = 0; e < v.size(); ++e) report.edges[e] = report.edges[e] || v[e];
        }
    }
    return report;
}

}  // namespace netident
