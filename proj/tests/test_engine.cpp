#include <gtest/gtest.h>

#include <netident/engine.hpp>

#include <chrono>
#include <random>

#include "test_support.hpp"

using namespace netident;
using netident::fixtures::chain;
using netident::fixtures::two_cycle;

namespace {

CMatrix make(std::initializer_list<std::initializer_list<Complex>> rows) {
    CMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index r = 0;
    for (auto row : rows) {
        Eigen::Index c = 0;
        for (auto v : row) m(r, c++) = v;
        ++r;
    }
    return m;
}

CVector vec_of(std::initializer_list<Complex> v) {
    CVector x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index k = 0;
    for (auto z : v) x(k++) = z;
    return x;
}

std::vector<bool> sample_verdicts(const KMatrix& K, const Tolerances& tol = {}) {
    return edge_verdicts_from_kernel(kernel_basis(K, tol.rank), tol.entry);
}

}  // namespace

// --- sampling and transfer ---------------------------------------------------

TEST(SampleNetworkMatrix, ChainIsTriangular) {
    auto inst = chain({1}, {2});
    for (std::uint64_t seed : {1ull, 2ull, 99ull}) {
        SplitMix64 stream(seed);
        auto s = sample_network_matrix(inst.topo, stream, 1e8);
        const Complex g = s.x(0);
        EXPECT_LE(std::abs(g.real()), 1.0);
        EXPECT_LE(std::abs(g.imag()), 1.0);
        EXPECT_EQ(s.G, make({{0, 0}, {g, 0}}));
        EXPECT_LT(relative_max_diff(s.T, make({{1, 0}, {g, 1}})), 1e-15);
    }
}

TEST(SampleNetworkMatrix, EmptyEdgeSetGivesIdentity) {
    auto topo = validate_topology(3, std::vector<Edge>{});
    SplitMix64 stream(5);
    auto s = sample_network_matrix(topo, stream, 1e8);
    EXPECT_EQ(s.x.size(), 0);
    EXPECT_EQ(s.G, CMatrix::Zero(3, 3));
    EXPECT_EQ(s.T, CMatrix::Identity(3, 3));
}

TEST(SampleNetworkMatrix, MemberOfDIsRejected) {
    auto inst = two_cycle({1}, {1});
    // x1 * x2 = 1, so det(I - G) = 0.
    EXPECT_THROW(make_sample(inst.topo, vec_of({1.0, 1.0}), 1e8), SingularTransferError);
    EXPECT_THROW(make_sample(inst.topo, vec_of({Complex(0, 1), Complex(0, -1)}), 1e8), SingularTransferError);
    // Close to D but not on it: rejected by the cond guard only.
    EXPECT_THROW(make_sample(inst.topo, vec_of({1.0, 1.0 - 1e-10}), 1e8), SingularTransferError);
    EXPECT_NO_THROW(make_sample(inst.topo, vec_of({1.0, 1.0 - 1e-10}), 1e12));
}

TEST(SampleNetworkMatrix, DeterministicAndBoundedRetries) {
    auto inst = two_cycle({1}, {1});
    SplitMix64 a(42), b(42);
    auto s1 = sample_network_matrix(inst.topo, a, 1e8);
    auto s2 = sample_network_matrix(inst.topo, b, 1e8);
    EXPECT_EQ(s1.x, s2.x);
    // With cond_limit barely above 1 nearly every draw is rejected.
    SplitMix64 c(1);
    try {
        sample_network_matrix(inst.topo, c, 1.0 + 1e-12, 50);
        FAIL() << "expected SamplingError";
    } catch (const SamplingError& e) {
        EXPECT_GT(e.last_cond(), 1.0);
    }
}

TEST(ComputeTransfer, ClosedForms) {
    EXPECT_EQ(compute_transfer(CMatrix::Zero(3, 3)).T, CMatrix::Identity(3, 3));
    const Complex g(0.3, -0.7);
    EXPECT_LT(relative_max_diff(compute_transfer(make({{0, 0}, {g, 0}})).T, make({{1, 0}, {g, 1}})), 1e-15);
    const Complex a(0.5, 0.25), b(-0.4, 0.9);
    auto tr = compute_transfer(make({{0, b}, {a, 0}}));
    const CMatrix expected = make({{1, b}, {a, 1}}) / (1.0 - a * b);
    EXPECT_LT(relative_max_diff(tr.T, expected), 1e-14);
    EXPECT_GE(tr.cond, 1.0);
    EXPECT_THROW(compute_transfer(make({{0, 1}, {1, 0}})), SingularTransferError);
}

TEST(ComputeTransfer, ResidualInvariant) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 40; ++trial) {
        auto inst = fixtures::random_instance(rng);
        SplitMix64 stream(static_cast<std::uint64_t>(trial));
        auto s = sample_network_matrix(inst.topo, stream, 1e8);
        const int n = inst.topo.node_count();
        const CMatrix residual = (CMatrix::Identity(n, n) - s.G) * s.T - CMatrix::Identity(n, n);
        EXPECT_LE(max_abs(residual), 1e-10 * n);
        EXPECT_LE(s.cond, 1e8);
    }
}

// --- K construction ----------------------------------------------------------

TEST(BuildK, ChainExciteSourceMeasureSink) {
    auto inst = chain({1}, {2});
    auto sel = build_selection_matrices(inst.topo, inst.sets);
    auto s = make_sample(inst.topo, vec_of({Complex(0.4, 0.8)}), 1e8);
    auto K = build_K(s, sel);
    ASSERT_EQ(K.row_count(), 1);
    ASSERT_EQ(K.col_count(), 1);
    EXPECT_LT(std::abs(K.entries(0, 0) - Complex(1)), 1e-15);
    EXPECT_EQ(K.rows[0], (KRow{1, 2}));
    EXPECT_EQ(K.cols[0], (Edge{1, 2}));
}

TEST(BuildK, ChainReversedRolesIsZero) {
    auto inst = chain({2}, {1});
    auto sel = build_selection_matrices(inst.topo, inst.sets);
    auto s = make_sample(inst.topo, vec_of({Complex(-0.2, 0.6)}), 1e8);
    EXPECT_EQ(build_K(s, sel).entries, CMatrix::Zero(1, 1));
}

TEST(BuildK, AtZeroNetworkMatrix) {
    // With T = I, K = (B^T (x) C) I_G: column of edge (j, i) has a single 1 at
    // row (b = j, c = i) when j is excited and i measured.
    auto topo = validate_topology(3, std::vector<Edge>{{1, 2}, {2, 3}, {3, 1}, {1, 3}});
    auto sets = validate_selection(topo, std::vector<int>{1, 2}, std::vector<int>{2, 3});
    auto sel = build_selection_matrices(topo, sets);
    auto s = make_sample(topo, CVector::Zero(4), 1e8);
    auto K = build_K(s, sel);
    ASSERT_EQ(K.row_count(), 4);
    for (std::size_t k = 0; k < topo.edge_count(); ++k) {
        const Edge& e = topo.edge(k);
        for (Eigen::Index r = 0; r < K.row_count(); ++r) {
            const bool hit = K.rows[static_cast<std::size_t>(r)] == KRow{e.from, e.to};
            EXPECT_EQ(K.entries(r, static_cast<Eigen::Index>(k)), Complex(hit ? 1.0 : 0.0)) << k << "," << r;
        }
    }
}

TEST(BuildK, DifferentialIdentity) {
    // unvec(K delta) == C T G(delta) T B
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        auto inst = fixtures::random_instance(rng);
        auto sel = build_selection_matrices(inst.topo, inst.sets);
        SplitMix64 stream(static_cast<std::uint64_t>(trial) + 100);
        auto s = sample_network_matrix(inst.topo, stream, 1e8);
        auto K = build_K(s, sel);
        const CVector delta = CVector::Random(static_cast<Eigen::Index>(inst.topo.edge_count()));
        const CMatrix lhs = unvec(K.entries * delta, sel.C.rows(), sel.B.cols());
        const CMatrix rhs = sel.C.cast<Complex>() * s.T * network_matrix(inst.topo, delta) * s.T * sel.B.cast<Complex>();
        EXPECT_LE(relative_max_diff(lhs, rhs), 1e-12);
    }
}

TEST(BuildK, DimensionMismatchThrows) {
    auto inst = chain({1}, {2});
    auto other = two_cycle({1}, {2});
    auto sel = build_selection_matrices(other.topo, other.sets);
    auto s = make_sample(inst.topo, vec_of({0.5}), 1e8);
    EXPECT_THROW(build_K(s, sel), Error);
}

// --- rank and kernel ---------------------------------------------------------

TEST(NumericRank, SmallCases) {
    EXPECT_EQ(numeric_rank(make({{1}}), 1e-9).rank, 1);
    EXPECT_EQ(numeric_rank(make({{0}}), 1e-9).rank, 0);
    auto r = numeric_rank(make({{1, 1}, {1, 1}}), 1e-9);
    EXPECT_EQ(r.rank, 1);
    ASSERT_EQ(r.singular_values.size(), 2);
    EXPECT_NEAR(r.singular_values(0), 2.0, 1e-14);
    EXPECT_NEAR(r.singular_values(1), 0.0, 1e-14);
}

TEST(NumericRank, NonFiniteInputFails) {
    CMatrix bad = make({{1, std::numeric_limits<double>::quiet_NaN()}});
    EXPECT_THROW(numeric_rank(bad, 1e-9), DecompositionError);
}

TEST(KernelBasis, SmallCases) {
    EXPECT_EQ(kernel_basis(make({{1}}), 1e-9).cols(), 0);
    CMatrix v0 = kernel_basis(make({{0}}), 1e-9);
    ASSERT_EQ(v0.cols(), 1);
    EXPECT_NEAR(std::abs(v0(0, 0)), 1.0, 1e-15);
    CMatrix v = kernel_basis(make({{1, 1}}), 1e-9);
    ASSERT_EQ(v.cols(), 1);
    // v spans (1, -1) / sqrt(2) up to a unit phase.
    EXPECT_NEAR(std::abs(v(0, 0)), std::sqrt(0.5), 1e-14);
    EXPECT_LT(std::abs(v(0, 0) + v(1, 0)), 1e-14);
}

TEST(KernelBasis, ResidualAndOrthonormality) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 30; ++trial) {
        auto inst = fixtures::random_instance(rng);
        auto sel = build_selection_matrices(inst.topo, inst.sets);
        SplitMix64 stream(static_cast<std::uint64_t>(trial));
        auto K = build_K(sample_network_matrix(inst.topo, stream, 1e8), sel);
        auto dec = decompose(K.entries, 1e-9);
        const double sigma_max = dec.singular_values.size() ? dec.singular_values(0) : 0.0;
        EXPECT_EQ(dec.kernel.cols(), K.col_count() - dec.rank);
        if (dec.kernel.cols() == 0) continue;
        EXPECT_LT(max_abs(dec.kernel.adjoint() * dec.kernel - CMatrix::Identity(dec.kernel.cols(), dec.kernel.cols())),
                  1e-12);
        for (Eigen::Index c = 0; c < dec.kernel.cols(); ++c) {
            EXPECT_LE((K.entries * dec.kernel.col(c)).norm(), 1e-9 * std::max<double>(sigma_max, 1e-300) + 1e-300);
        }
    }
}

TEST(EdgeVerdictsFromKernel, SmallCases) {
    EXPECT_EQ(edge_verdicts_from_kernel(CMatrix(3, 0), 1e-7), (std::vector<bool>{true, true, true}));
    EXPECT_EQ(edge_verdicts_from_kernel(make({{1}}), 1e-7), (std::vector<bool>{false}));
    const double s = std::sqrt(0.5);
    EXPECT_EQ(edge_verdicts_from_kernel(make({{s}, {-s}}), 1e-7), (std::vector<bool>{false, false}));
    EXPECT_EQ(edge_verdicts_from_kernel(make({{1e-9}, {1}}), 1e-7), (std::vector<bool>{true, false}));
}

TEST(EdgeVerdictByRankDrop, SmallCases) {
    EXPECT_TRUE(edge_verdict_by_rank_drop(make({{1}}), 0, 1e-9));
    EXPECT_FALSE(edge_verdict_by_rank_drop(make({{0}}), 0, 1e-9));
    EXPECT_FALSE(edge_verdict_by_rank_drop(make({{1, 1}}), 0, 1e-9));
    EXPECT_TRUE(edge_verdict_by_rank_drop(make({{1, 0}, {0, 1}}), 1, 1e-9));
    EXPECT_THROW(edge_verdict_by_rank_drop(make({{1}}), 1, 1e-9), Error);
}

// --- full-excitation / full-measurement reductions ----------------------------

TEST(ReduceFullExcitation, ChainAgreesWithGeneralK) {
    auto inst = chain({1, 2}, {2});
    auto sel = build_selection_matrices(inst.topo, inst.sets);
    auto s = make_sample(inst.topo, vec_of({Complex(0.1, -0.3)}), 1e8);
    EXPECT_EQ(sample_verdicts(build_K(s, sel)), (std::vector<bool>{true}));
    EXPECT_EQ(sample_verdicts(reduce_full_excitation(s, sel)), (std::vector<bool>{true}));
}

TEST(ReduceFullExcitation, AtZeroTargetMustBeMeasured) {
    auto topo = validate_topology(3, std::vector<Edge>{{1, 2}, {2, 3}, {3, 1}});
    auto sets = validate_selection(topo, std::vector<int>{1, 2, 3}, std::vector<int>{2});
    auto sel = build_selection_matrices(topo, sets);
    auto s = make_sample(topo, CVector::Zero(3), 1e8);
    auto Kp = reduce_full_excitation(s, sel);
    EXPECT_EQ(Kp.entries, kronecker(CMatrix::Identity(3, 3), sel.C.cast<Complex>()) * sel.IG.cast<Complex>());
    EXPECT_EQ(sample_verdicts(Kp), (std::vector<bool>{true, false, false}));
}

TEST(ReduceFullExcitation, PreconditionChecked) {
    auto inst = chain({1}, {2});
    auto sel = build_selection_matrices(inst.topo, inst.sets);
    auto s = make_sample(inst.topo, vec_of({0.5}), 1e8);
    EXPECT_THROW(reduce_full_excitation(s, sel), Error);
    EXPECT_THROW(reduce_full_measurement(s, sel), Error);
}

TEST(ReduceFullMeasurement, MirrorsGeneralK) {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 20; ++trial) {
        auto inst = fixtures::random_instance(rng);
        std::vector<int> all(static_cast<std::size_t>(inst.topo.node_count()));
        std::iota(all.begin(), all.end(), 1);
        auto sets = validate_selection(inst.topo, inst.sets.excited, all);
        auto sel = build_selection_matrices(inst.topo, sets);
        SplitMix64 stream(static_cast<std::uint64_t>(trial));
        auto s = sample_network_matrix(inst.topo, stream, 1e8);
        EXPECT_EQ(sample_verdicts(build_K(s, sel)), sample_verdicts(reduce_full_measurement(s, sel)));
    }
}

// --- analyze -------------------------------------------------------------------

TEST(Analyze, ChainExciteSourceMeasureSink) {
    auto inst = chain({1}, {2});
    auto r = analyze(inst.topo, inst.sets, AnalysisParams{.nsamples = 3});
    EXPECT_TRUE(r.network);
    EXPECT_EQ(r.edges, (std::vector<bool>{true}));
    ASSERT_EQ(r.samples.size(), 3u);
    for (const auto& s : r.samples) {
        EXPECT_EQ(s.rank, 1);
        EXPECT_EQ(s.kernel_dim, 0);
    }
}

TEST(Analyze, ChainReversedRoles) {
    auto inst = chain({2}, {1});
    auto r = analyze(inst.topo, inst.sets, AnalysisParams{.nsamples = 3});
    EXPECT_FALSE(r.network);
    EXPECT_EQ(r.edges, (std::vector<bool>{false}));
    for (const auto& s : r.samples) EXPECT_EQ(s.kernel_dim, 1);
}

TEST(Analyze, TwoCycleExciteOneMeasureBoth) {
    auto inst = two_cycle({1}, {1, 2});
    auto r = analyze(inst.topo, inst.sets, AnalysisParams{});
    EXPECT_TRUE(r.network);
    EXPECT_EQ(r.edges, (std::vector<bool>{true, true}));
    for (const auto& s : r.samples) EXPECT_EQ(s.rank, 2);
}

TEST(Analyze, TwoCycleSingleMeasurementIsNotIdentifiable) {
    auto inst = two_cycle({1}, {1});
    auto r = analyze(inst.topo, inst.sets, AnalysisParams{});
    EXPECT_FALSE(r.network);
    EXPECT_EQ(r.edges, (std::vector<bool>{false, false}));
}

TEST(Analyze, EmptyEdgeSetIsTriviallyIdentifiable) {
    auto topo = validate_topology(2, std::vector<Edge>{});
    auto r = analyze(topo, validate_selection(topo, std::vector<int>{1}, std::vector<int>{2}), AnalysisParams{});
    EXPECT_TRUE(r.network);
    EXPECT_TRUE(r.edges.empty());
}

TEST(Analyze, DeterministicAndParamsEchoed) {
    auto inst = fixtures::corpus()[3];
    AnalysisParams p{.nsamples = 4, .seed = 77};
    auto a = analyze(inst.topo, inst.sets, p);
    auto b = analyze(inst.topo, inst.sets, p);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.params, p);
}

TEST(Analyze, RejectsBadParams) {
    auto inst = chain({1}, {2});
    EXPECT_THROW(analyze(inst.topo, inst.sets, AnalysisParams{.nsamples = 0}), Error);
    EXPECT_THROW(analyze(inst.topo, inst.sets, AnalysisParams{.cond_limit = 1.0}), Error);
    AnalysisParams neg;
    neg.tol.rank = -1;
    EXPECT_THROW(analyze(inst.topo, inst.sets, neg), Error);
}

TEST(Analyze, ExpiredDeadlineTimesOut) {
    auto inst = chain({1}, {2});
    try {
        analyze(inst.topo, inst.sets, AnalysisParams{}, std::chrono::steady_clock::now() - std::chrono::seconds(1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::timeout);
    }
}

TEST(Analyze, SamplingFailureNamesSample) {
    auto inst = two_cycle({1}, {1});
    AnalysisParams p{.cond_limit = 1.0 + 1e-12, .max_retries = 3};
    try {
        analyze(inst.topo, inst.sets, p);
        FAIL();
    } catch (const SamplingError& e) {
        EXPECT_NE(std::string(e.what()).find("sample 0"), std::string::npos);
    }
}

// --- properties over the corpus ----------------------------------------------------

TEST(EngineProperties, KernelAndRankDropAgree) {
    for (const auto& inst : fixtures::corpus()) {
        auto sel = build_selection_matrices(inst.topo, inst.sets);
        AnalysisParams p;
        for (int i = 0; i < 5; ++i) {
            auto K = build_K(draw_sample(inst.topo, p, i), sel);
            auto v = sample_verdicts(K);
            for (std::size_t e = 0; e < inst.topo.edge_count(); ++e) {
                EXPECT_EQ(v[e], edge_verdict_by_rank_drop(K, e, p.tol.rank)) << inst.name << " edge " << e;
            }
        }
    }
}

TEST(EngineProperties, NetworkVerdictConsistency) {
    for (const auto& inst : fixtures::corpus()) {
        auto r = analyze(inst.topo, inst.sets, AnalysisParams{});
        bool any_full = false;
        for (const auto& s : r.samples) {
            EXPECT_EQ(s.kernel_dim, static_cast<int>(inst.topo.edge_count()) - s.rank);
            any_full = any_full || s.kernel_dim == 0;
        }
        EXPECT_EQ(r.network, any_full) << inst.name;
        if (r.network) EXPECT_EQ(std::count(r.edges.begin(), r.edges.end(), false), 0);
        if (!r.network) EXPECT_GT(std::count(r.edges.begin(), r.edges.end(), false), 0) << inst.name;
    }
}

TEST(EngineProperties, RankIsGenericAcrossSamples) {
    for (const auto& inst : fixtures::corpus()) {
        auto r = analyze(inst.topo, inst.sets, AnalysisParams{.nsamples = 10, .seed = 5});
        for (const auto& s : r.samples) EXPECT_EQ(s.rank, r.samples.front().rank) << inst.name;
    }
}

TEST(EngineProperties, MonotoneInSelectionsAtFixedSample) {
    for (const auto& inst : fixtures::corpus()) {
        const int n = inst.topo.node_count();
        auto s = draw_sample(inst.topo, AnalysisParams{}, 0);
        auto base = sample_verdicts(build_K(s, build_selection_matrices(inst.topo, inst.sets)));
        for (int v = 1; v <= n; ++v) {
            for (int role = 0; role < 2; ++role) {
                SelectionSets grown = inst.sets;
                auto& list = role == 0 ? grown.excited : grown.measured;
                if (std::find(list.begin(), list.end(), v) != list.end()) continue;
                list.push_back(v);
                std::sort(list.begin(), list.end());
                auto after = sample_verdicts(build_K(s, build_selection_matrices(inst.topo, grown)));
                for (std::size_t e = 0; e < base.size(); ++e) {
                    if (base[e]) EXPECT_TRUE(after[e]) << inst.name << " node " << v << " role " << role;
                }
            }
        }
    }
}

TEST(EngineProperties, PermutationEquivariance) {
    std::mt19937_64 rng(31);
    for (const auto& inst : fixtures::corpus()) {
        const int n = inst.topo.node_count();
        std::vector<int> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), 1);
        std::shuffle(perm.begin(), perm.end(), rng);
        auto relabel = [&](int v) { return perm[static_cast<std::size_t>(v - 1)]; };
        std::vector<Edge> edges;
        for (const auto& e : inst.topo.edges()) edges.push_back({relabel(e.from), relabel(e.to)});
        std::vector<int> exc, meas;
        for (int v : inst.sets.excited) exc.push_back(relabel(v));
        for (int v : inst.sets.measured) meas.push_back(relabel(v));
        auto topo2 = validate_topology(n, edges);
        auto sets2 = validate_selection(topo2, exc, meas);

        auto r1 = analyze(inst.topo, inst.sets, AnalysisParams{});
        auto r2 = analyze(topo2, sets2, AnalysisParams{.seed = 1234});
        EXPECT_EQ(r1.network, r2.network);
        for (std::size_t k = 0; k < inst.topo.edge_count(); ++k) {
            const Edge& e = inst.topo.edge(k);
            EXPECT_EQ(r1.edges[k], r2.edges[topo2.index_of({relabel(e.from), relabel(e.to)})]) << inst.name;
        }
    }
}

TEST(EngineProperties, FullExcitationReductionMatches) {
    for (const auto& inst : fixtures::corpus()) {
        std::vector<int> all(static_cast<std::size_t>(inst.topo.node_count()));
        std::iota(all.begin(), all.end(), 1);
        auto sets = validate_selection(inst.topo, all, inst.sets.measured);
        auto sel = build_selection_matrices(inst.topo, sets);
        auto s = draw_sample(inst.topo, AnalysisParams{}, 0);
        EXPECT_EQ(sample_verdicts(build_K(s, sel)), sample_verdicts(reduce_full_excitation(s, sel))) << inst.name;
    }
}
