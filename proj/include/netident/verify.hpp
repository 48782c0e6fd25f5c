#pragma once

// Oracle cross-checks run against one analysis (CLI `--verify`).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "netident/engine.hpp"
#include "netident/oracle.hpp"

namespace netident {

struct VerificationThresholds {
    double dual_construction = 1e-12;
    double finite_difference = 1e-5;
    double finite_difference_step = 1e-6;
    double min_order = 1.9;

    friend bool operator==(const VerificationThresholds&, const VerificationThresholds&) = default;
};

struct VerificationCheck {
    std::string name;
    bool passed = false;
    std::optional<double> value;      ///< measured quantity, when the check has one
    std::optional<double> threshold;  ///< bound the value is compared against
    std::string detail;

    friend bool operator==(const VerificationCheck&, const VerificationCheck&) = default;
};

struct VerificationReport {
    bool passed = true;
    std::uint64_t prime = gfp::kDefaultPrime;
    std::vector<VerificationCheck> checks;

    friend bool operator==(const VerificationReport&, const VerificationReport&) = default;
};

inline VerificationReport run_verification(const NetworkTopology& topo, const SelectionSets& sets,
                                           const AnalysisParams& params, const IdentifiabilityReport& report,
                                           const VerificationThresholds& limits = {},
                                           Deadline deadline = std::nullopt) {
    const ForwardMap fm(topo, sets);
    const SelectionMatrices& sel = fm.selection();
    VerificationReport out;
    auto add = [&out](VerificationCheck check) {
        out.passed = out.passed && check.passed;
        out.checks.push_back(std::move(check));
    };
    auto check_deadline = [&] {
        if (deadline && std::chrono::steady_clock::now() > *deadline) {
            throw Error(ErrorCode::timeout, "verification exceeded its deadline");
        }
    };

    std::vector<NetworkSample> samples;
    samples.reserve(static_cast<std::size_t>(params.nsamples));
    for (int i = 0; i < params.nsamples; ++i) samples.push_back(draw_sample(topo, params, i));

    double dual = 0.0;
    double fd = 0.0;
    bool agree = true;
    std::string disagreement;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        check_deadline();
        const KMatrix K = build_K(samples[i], sel);
        dual = std::max(dual, relative_max_diff(K.entries, build_K_columns(samples[i], sel).entries));
        const CMatrix J = finite_difference_jacobian(fm, samples[i].x, limits.finite_difference_step);
        fd = std::max(fd, relative_max_diff(J, K.entries));
        const auto verdicts = edge_verdicts_from_kernel(kernel_basis(K, params.tol.rank), params.tol.entry);
        for (std::size_t e = 0; e < verdicts.size(); ++e) {
            if (verdicts[e] != edge_verdict_by_rank_drop(K, e, params.tol.rank)) {
                agree = false;
                disagreement = "sample " + std::to_string(i) + " edge " + std::to_string(e);
            }
        }
    }
    add({"dual_construction", dual <= limits.dual_construction, dual, limits.dual_construction,
         "Kronecker K vs column-wise C T G(e_e) T B, max relative difference"});
    add({"finite_difference", fd <= limits.finite_difference, fd, limits.finite_difference,
         "central differences at step " + std::to_string(limits.finite_difference_step) + " vs K"});

    check_deadline();
    if (!samples.empty()) {
        const auto study = finite_difference_convergence(fm, samples.front().x, build_K(samples.front(), sel).entries);
        const bool ok = study.exact || (study.order && *study.order >= limits.min_order);
        add({"finite_difference_order", ok, study.order, limits.min_order,
             study.exact ? "h is affine along every coordinate; differences are exact" : "fitted error exponent"});
    }

    add({"kernel_rank_drop_agreement", agree, std::nullopt, std::nullopt,
         agree ? "kernel and rank-drop verdicts agree on every edge of every sample" : "mismatch at " + disagreement});

    bool generic = true;
    for (const auto& s : report.samples) generic = generic && s.rank == report.samples.front().rank;
    add({"genericity", generic, std::nullopt, std::nullopt,
         generic ? "every sample has the same rank" : "sample ranks differ"});

    check_deadline();
    const auto exact = exact_rank_gfp(topo, sets, gfp::kDefaultPrime, params.seed);
    out.prime = exact.prime;
    bool rank_match = true;
    for (const auto& s : report.samples) rank_match = rank_match && s.rank == exact.rank;
    const bool verdict_match = exact.edge_verdicts == report.edges;
    add({"exact_rank_gfp", rank_match && verdict_match, static_cast<double>(exact.rank), std::nullopt,
         std::string(rank_match ? "rank matches" : "rank differs") + ", " +
             (verdict_match ? "edge verdicts match" : "edge verdicts differ")});

    double worst = std::numeric_limits<double>::infinity();
    bool witnesses_ok = true;
    int witness_count = 0;
    std::string witness_detail;
    for (std::size_t e = 0; e < report.edges.size(); ++e) {
        if (report.edges[e]) continue;
        check_deadline();
        ++witness_count;
        try {
            const auto [w, index] = search_witness(fm, params, e, std::max(params.nsamples, 10));
            if (w.exponent) {
                worst = std::min(worst, *w.exponent);
                if (*w.exponent < limits.min_order) {
                    witnesses_ok = false;
                    witness_detail = "edge " + std::to_string(e) + " exponent " + std::to_string(*w.exponent);
                }
            }
        } catch (const Error& err) {
            if (err.code() == ErrorCode::timeout) throw;
            witnesses_ok = false;
            witness_detail = err.what();
        }
    }
    add({"witnesses", witnesses_ok, std::isfinite(worst) ? std::optional<double>(worst) : std::nullopt,
         limits.min_order,
         witnesses_ok ? std::to_string(witness_count) + " non-identifiable edge(s), h flat to second order along each"
                      : witness_detail});

    if (!samples.empty() && fully_excited(sel)) {
        const auto a = edge_verdicts_from_kernel(kernel_basis(build_K(samples.front(), sel), params.tol.rank),
                                                 params.tol.entry);
        const auto b = edge_verdicts_from_kernel(
            kernel_basis(reduce_full_excitation(samples.front(), sel), params.tol.rank), params.tol.entry);
        add({"full_excitation_reduction", a == b, std::nullopt, std::nullopt, "(I (x) C T) I_G vs general K"});
    }
    if (!samples.empty() && fully_measured(sel)) {
        const auto a = edge_verdicts_from_kernel(kernel_basis(build_K(samples.front(), sel), params.tol.rank),
                                                 params.tol.entry);
        const auto b = edge_verdicts_from_kernel(
            kernel_basis(reduce_full_measurement(samples.front(), sel), params.tol.rank), params.tol.entry);
        add({"full_measurement_reduction", a == b, std::nullopt, std::nullopt, "((T B)^T (x) I) I_G vs general K"});
    }
    return out;
}

}  // namespace netident
