#pragma once

// Independent checks for the engine: direct evaluation of the input-output
// map h(x) = vec(C (I - G(x))^-1 B), a column-wise K built from the
// differential C T G(e_e) T B, central finite differences, an exact GF(p)
// rank test and first-order flatness witnesses for non-identifiable edges.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "netident/engine.hpp"
#include "netident/errors.hpp"
#include "netident/gfp.hpp"
#include "netident/linalg.hpp"
#include "netident/random.hpp"
#include "netident/topology.hpp"

namespace netident {

/// h : C^|E| \ D -> C^(|B| |C|), x -> vec(C (I - G(x))^-1 B).
class ForwardMap {
public:
    ForwardMap(NetworkTopology topo, const SelectionSets& sets)
        : topo_(std::move(topo)), sel_(build_selection_matrices(topo_, sets)) {
        CMatrix pattern = CMatrix::Zero(topo_.node_count(), topo_.node_count());
        for (const Edge& e : topo_.edges()) pattern(e.to - 1, e.from - 1) = 1.0;
        reach_ = detail::reachability(pattern);
    }

    const NetworkTopology& topology() const noexcept { return topo_; }
    const SelectionMatrices& selection() const noexcept { return sel_; }
    Eigen::Index output_size() const { return static_cast<Eigen::Index>(sel_.k_rows()); }

    template <typename Real = double>
    CVectorT<Real> operator()(const CVectorT<Real>& x) const {
        using C = std::complex<Real>;
        const int n = topo_.node_count();
        if (static_cast<std::size_t>(x.size()) != topo_.edge_count()) {
            throw Error(ErrorCode::dimension_mismatch, "edge-weight vector length does not match |E|");
        }
        CMatrixT<Real> A = CMatrixT<Real>::Identity(n, n);
        for (std::size_t k = 0; k < topo_.edge_count(); ++k) {
            const Edge& e = topo_.edge(k);
            A(e.to - 1, e.from - 1) -= x(static_cast<Eigen::Index>(k));
        }
        Eigen::PartialPivLU<CMatrixT<Real>> lu(A);
        CMatrixT<Real> TB = lu.solve(sel_.B.cast<C>());
        const Real rcond = lu.rcond();
        // Same structural zeros as compute_transfer: T(i, j) = 0 without a path j -> i.
        for (std::size_t b = 0; b < sel_.excited.size(); ++b) {
            const int j = sel_.excited[b] - 1;
            for (int i = 0; i < n; ++i) {
                if (i != j && !reach_[static_cast<std::size_t>(j * n + i)]) TB(i, static_cast<Eigen::Index>(b)) = C(0);
            }
        }
        if (!all_finite(TB) || !(rcond > Real(10) * std::numeric_limits<Real>::epsilon())) {
            throw SingularTransferError("h is undefined here: I - G(x) is singular (x in D)",
                                        static_cast<double>(Real(1) / rcond));
        }
        return vec(sel_.C.cast<C>() * TB);
    }

private:
    NetworkTopology topo_;
    SelectionMatrices sel_;
    std::vector<bool> reach_;
};

template <typename Real = double>
CVectorT<Real> eval_h(const ForwardMap& fm, const std::type_identity_t<CVectorT<Real>>& x) {
    return fm.template operator()<Real>(x);
}

/// K assembled one column at a time from vec(C T G(e_e) T B).
inline KMatrix build_K_columns(const NetworkSample& sample, const SelectionMatrices& sel) {
    detail::check_dims(sample, sel);
    const CMatrix CT = sel.C.cast<Complex>() * sample.T;
    const CMatrix TB = sample.T * sel.B.cast<Complex>();
    CMatrix K(static_cast<Eigen::Index>(sel.k_rows()), static_cast<Eigen::Index>(sel.edges.size()));
    for (std::size_t k = 0; k < sel.edges.size(); ++k) {
        CMatrix unit = CMatrix::Zero(sel.n, sel.n);
        unit(sel.edges[k].to - 1, sel.edges[k].from - 1) = 1.0;
        K.col(static_cast<Eigen::Index>(k)) = vec(CT * unit * TB);
    }
    return detail::with_metadata(std::move(K), sel);
}

/// Central differences of h along each coordinate with a real step. h is
/// holomorphic, so the real-direction quotient approximates dh/dx_e.
/// A stencil point inside D triggers a retry with step / 10 (at most 3).
template <typename Real = double>
CMatrixT<Real> finite_difference_jacobian(const ForwardMap& fm, const std::type_identity_t<CVectorT<Real>>& x,
                                          std::type_identity_t<Real> step) {
    const Eigen::Index m = fm.output_size();
    const Eigen::Index edges = x.size();
    CMatrixT<Real> J(m, edges);
    for (Eigen::Index e = 0; e < edges; ++e) {
        Real h = step;
        for (int attempt = 0;; ++attempt) {
            try {
                CVectorT<Real> plus = x;
                CVectorT<Real> minus = x;
                plus(e) += h;
                minus(e) -= h;
                J.col(e) = (fm.template operator()<Real>(plus) - fm.template operator()<Real>(minus)) / (Real(2) * h);
                break;
            } catch (const SingularTransferError&) {
                if (attempt == 3) throw;
                h /= Real(10);
            }
        }
    }
    return J;
}

/// Least-squares slope of log(value) against log(t).
inline double fit_log_slope(const std::vector<double>& t, const std::vector<double>& value) {
    const auto count = static_cast<double>(t.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double lx = std::log(t[i]);
        const double ly = std::log(value[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (count * sxy - sx * sy) / (count * sxx - sx * sx);
}

struct ConvergenceStudy {
    std::vector<double> steps;
    std::vector<double> errors;  ///< relative max-norm error of J against K per step
    std::optional<double> order;  ///< fitted exponent; empty when the quotient is exact
    bool exact = false;           ///< every error sits at the round-off floor (h affine per coordinate)
};

/// Measures how the finite-difference error shrinks with the step. Runs in
/// long double so round-off stays well below the O(step^2) truncation term.
inline ConvergenceStudy finite_difference_convergence(const ForwardMap& fm, const CVector& x, const CMatrix& K,
                                                      const std::vector<double>& steps = {1e-3, 1e-4, 1e-5}) {
    using LD = long double;
    ConvergenceStudy study;
    study.steps = steps;
    const CVectorT<LD> xl = x.cast<std::complex<LD>>();
    const double h_scale = std::max(1.0, max_abs(fm.template operator()<LD>(xl).template cast<Complex>()));
    const double k_scale = std::max(max_abs(K), std::numeric_limits<double>::min());
    std::vector<double> usable_t;
    std::vector<double> usable_e;
    for (double step : steps) {
        const CMatrix J = finite_difference_jacobian<LD>(fm, xl, static_cast<LD>(step)).cast<Complex>();
        const double err = max_abs(J - K) / k_scale;
        study.errors.push_back(err);
        // Round-off of the long double quotient, expressed relative to K.
        const double floor =
            1e3 * static_cast<double>(std::numeric_limits<LD>::epsilon()) * h_scale / (step * k_scale) +
            1e2 * std::numeric_limits<double>::epsilon();
        if (err > floor) {
            usable_t.push_back(step);
            usable_e.push_back(err);
        }
    }
    if (usable_t.size() >= 2) {
        study.order = fit_log_slope(usable_t, usable_e);
    } else {
        study.exact = true;
    }
    return study;
}

// ---------------------------------------------------------------------------
// Exact rank over GF(p)

struct FieldSample {
    std::uint64_t prime = gfp::kDefaultPrime;
    std::vector<std::uint64_t> x;
    gfp::Matrix G;
    gfp::Matrix T;  ///< (I - G)^-1 mod p
    int retries = 0;
};

struct ExactRankResult {
    int rank = 0;
    std::vector<bool> edge_verdicts;
    std::uint64_t prime = gfp::kDefaultPrime;
    int retries = 0;
};

inline FieldSample sample_field(const NetworkTopology& topo, std::uint64_t p, SplitMix64& stream, int max_retries) {
    const gfp::Field f(p);
    const auto n = static_cast<std::size_t>(topo.node_count());
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        FieldSample s;
        s.prime = p;
        s.G = gfp::Matrix(n, n);
        s.x.resize(topo.edge_count());
        for (std::size_t k = 0; k < topo.edge_count(); ++k) {
            s.x[k] = stream.next_below(p);
            s.G(static_cast<std::size_t>(topo.edge(k).to - 1), static_cast<std::size_t>(topo.edge(k).from - 1)) = s.x[k];
        }
        gfp::Matrix A = gfp::Matrix::identity(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) A(i, j) = f.sub(A(i, j), s.G(i, j));
        }
        if (auto inv = gfp::inverse(f, A)) {
            s.T = std::move(*inv);
            s.retries = attempt;
            return s;
        }
    }
    throw SamplingError("det(I - G) vanished mod p on every draw", std::numeric_limits<double>::infinity());
}

/// Rank of K and kernel-based edge verdicts at a uniformly random point of
/// GF(p)^|E|, computed exactly.
inline ExactRankResult exact_rank_gfp(const NetworkTopology& topo, const SelectionSets& sets,
                                      std::uint64_t p = gfp::kDefaultPrime, std::uint64_t seed = 1,
                                      int max_retries = 50) {
    if (!gfp::is_prime(p) || p >= (std::uint64_t{1} << 63)) {
        throw Error(ErrorCode::invalid_parameter, "GF(p) oracle needs a prime p < 2^63, got " + std::to_string(p));
    }
    const gfp::Field f(p);
    const SelectionMatrices sel = build_selection_matrices(topo, sets);
    SplitMix64 stream(seed);
    FieldSample s = sample_field(topo, p, stream, max_retries);

    gfp::Matrix K(sel.k_rows(), topo.edge_count());
    for (std::size_t k = 0; k < topo.edge_count(); ++k) {
        const auto i = static_cast<std::size_t>(topo.edge(k).to - 1);
        const auto j = static_cast<std::size_t>(topo.edge(k).from - 1);
        for (std::size_t b = 0; b < sel.excited.size(); ++b) {
            for (std::size_t c = 0; c < sel.measured.size(); ++c) {
                const auto cn = static_cast<std::size_t>(sel.measured[c] - 1);
                const auto bn = static_cast<std::size_t>(sel.excited[b] - 1);
                K(sel.k_row(b, c), k) = f.mul(s.T(cn, i), s.T(j, bn));
            }
        }
    }

    ExactRankResult out;
    out.prime = p;
    out.retries = s.retries;
    const auto basis = gfp::kernel(f, K);
    out.rank = static_cast<int>(topo.edge_count() - basis.size());
    out.edge_verdicts.assign(topo.edge_count(), true);
    for (const auto& v : basis) {
        for (std::size_t e = 0; e < v.size(); ++e) {
            if (v[e] != 0) out.edge_verdicts[e] = false;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Non-identifiability witnesses

inline constexpr double kWitnessSignificance = 0.1;
inline const std::array<double, 3> kWitnessSteps{1e-2, 1e-3, 1e-4};

struct WitnessPoint {
    double t = 0;
    double residual = 0;
};

struct Witness {
    std::size_t edge = 0;
    CVector delta;                     ///< unit vector in ker K
    double significance = 0;           ///< |delta_e| / ||delta||
    std::vector<WitnessPoint> curve;   ///< ||h(x + t delta) - h(x)||
    std::optional<double> exponent;    ///< fitted power of t; empty when h is flat to round-off
    bool flat = false;
};

/// A kernel direction with a large e-th component along which h is constant
/// to first order, so x_e cannot be recovered locally.
inline Witness kernel_direction_witness(const ForwardMap& fm, const NetworkSample& sample, std::size_t e,
                                        const Tolerances& tol = {}) {
    if (e >= fm.topology().edge_count()) throw Error(ErrorCode::invalid_parameter, "edge index out of range");
    const KMatrix K = build_K(sample, fm.selection());
    const CMatrix V = kernel_basis(K, tol.rank);
    const Eigen::Index ei = static_cast<Eigen::Index>(e);
    if (V.cols() == 0 || V.row(ei).norm() <= tol.entry) {
        throw Error(ErrorCode::precondition_violated,
                    "edge " + std::to_string(e) + " is identifiable on this sample; no kernel witness exists");
    }
    // The unit kernel vector maximizing |delta_e| is V V^H e_e, normalized.
    Witness w;
    w.edge = e;
    w.delta = V * V.row(ei).adjoint();
    w.delta /= w.delta.norm();
    w.significance = std::abs(w.delta(ei));
    if (w.significance < kWitnessSignificance) {
        throw Error(ErrorCode::precondition_violated,
                    "kernel has no direction with a significant component on edge " + std::to_string(e) +
                        " (max " + std::to_string(w.significance) + ")");
    }

    using LD = long double;
    const CVectorT<LD> x = sample.x.cast<std::complex<LD>>();
    const CVectorT<LD> d = w.delta.cast<std::complex<LD>>();
    const CVectorT<LD> h0 = fm.template operator()<LD>(x);
    const double scale = std::max(1.0, max_abs(h0.template cast<Complex>()));
    const double floor = 1e4 * static_cast<double>(std::numeric_limits<LD>::epsilon()) * scale * sample.cond;

    std::vector<double> ts;
    std::vector<double> rs;
    for (double t : kWitnessSteps) {
        const CVectorT<LD> ht = fm.template operator()<LD>(x + static_cast<LD>(t) * d);
        const double r = static_cast<double>((ht - h0).norm());
        w.curve.push_back({t, r});
        if (r > floor) {
            ts.push_back(t);
            rs.push_back(r);
        }
    }
    if (ts.size() >= 2) {
        w.exponent = fit_log_slope(ts, rs);
    } else {
        w.flat = true;
    }
    return w;
}

/// Walks the run's sample stream until a sample yields a significant witness
/// for edge e. The kernel projection of e_e varies with x, so a single sample
/// can fall below the significance threshold even for a non-identifiable edge.
inline std::pair<Witness, int> search_witness(const ForwardMap& fm, const AnalysisParams& params, std::size_t e,
                                              int max_samples = 10) {
    std::string last_error = "no samples tried";
    for (int i = 0; i < max_samples; ++i) {
        const NetworkSample sample = draw_sample(fm.topology(), params, i);
        try {
            return {kernel_direction_witness(fm, sample, e, params.tol), i};
        } catch (const SamplingError&) {
            throw;
        } catch (const Error& err) {
            last_error = err.what();
        }
    }
    throw Error(ErrorCode::precondition_violated,
                "no witness for edge " + std::to_string(e) + " in " + std::to_string(max_samples) +
                    " samples: " + last_error);
}

}  // namespace netident
