#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "mlow/error.hpp"
#include "mlow/factorization.hpp"
#include "mlow/log.hpp"
#include "oracles.hpp"

namespace {

using namespace mlow;

Eigen::MatrixXd rank_one_toy() {
    Eigen::MatrixXd r(2, 2);
    r << 1, 2, 2, 4;
    return r;
}

Eigen::MatrixXd low_rank_nonneg(Eigen::Index rows, Eigen::Index cols, Eigen::Index rank, std::uint64_t seed) {
    return oracle::uniform_matrix(rows, rank, seed) * oracle::uniform_matrix(rank, cols, seed + 1000);
}

FitOptions options(std::size_t rank, std::size_t iterations, double lambda = 0.0, std::uint64_t seed = 0) {
    FitOptions o;
    o.rank = rank;
    o.iterations = iterations;
    o.lambda = lambda;
    o.seed = seed;
    return o;
}

/// Two orthogonal nonnegative blocks: rows 0..(n/2) live on the first half of
/// the columns, the rest on the second half.
Eigen::MatrixXd two_block_matrix(std::uint64_t seed) {
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(20, 12);
    const Eigen::MatrixXd a = oracle::uniform_matrix(10, 6, seed, 0.5, 1.0);
    const Eigen::MatrixXd b = oracle::uniform_matrix(10, 6, seed + 1, 0.5, 1.0);
    r.topLeftCorner(10, 6) = a;
    r.bottomRightCorner(10, 6) = b;
    return r;
}

TEST(Methods, NamesRoundTrip) {
    for (Method m : {Method::pca, Method::nmf, Method::semi_nmf, Method::hyperplane_nmf}) {
        EXPECT_EQ(parse_method(to_string(m)), m);
    }
    EXPECT_THROW(parse_method("ica"), InvalidInput);
}

// ---------------------------------------------------------------- PCA

TEST(Pca, RankOneExactRecovery) {
    const auto c = fit_pca(rank_one_toy(), 1);
    ASSERT_EQ(c.values.rows(), 1);
    const Eigen::RowVector2d expected = Eigen::RowVector2d(1, 2) / std::sqrt(5.0);
    const double sign = c.values(0, 0) >= 0 ? 1.0 : -1.0;
    EXPECT_NEAR((sign * c.values.row(0) - expected).norm(), 0.0, 1e-12);
    EXPECT_NEAR(method_reconstruction_error(rank_one_toy(), c), 0.0, 1e-12);
    EXPECT_EQ(c.method, Method::pca);
}

TEST(Pca, IdentityIsReproduced) {
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
    const auto c = fit_pca(eye, 3);
    EXPECT_NEAR(method_reconstruction_error(eye, c), 0.0, 1e-12);
}

TEST(Pca, ErrorEqualsTailSingularEnergy) {
    const Eigen::MatrixXd r = oracle::uniform_matrix(50, 20, 42);
    const auto c = fit_pca(r, 5);
    const double expected = oracle::truncated_svd_error(r, 5);
    EXPECT_NEAR(method_reconstruction_error(r, c), expected, 1e-9 * expected);
    const Eigen::MatrixXd gram = c.values * c.values.transpose();
    EXPECT_LT((gram - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Pca, RowsSumNonNegative) {
    const Eigen::MatrixXd r = oracle::uniform_matrix(30, 10, 9);
    const auto c = fit_pca(r, 4);
    for (Eigen::Index i = 0; i < c.values.rows(); ++i) EXPECT_GE(c.values.row(i).sum(), 0.0);
}

TEST(Pca, RejectsOversizedRank) {
    const Eigen::MatrixXd r = oracle::uniform_matrix(4, 6, 1);
    EXPECT_THROW(fit_pca(r, 5), InvalidRank);
    EXPECT_THROW(fit_pca(r, 0), InvalidRank);
}

// ---------------------------------------------------------------- NMF

TEST(Nmf, RankOneToyConverges) {
    const auto result = fit_nmf(rank_one_toy(), options(1, 500));
    EXPECT_LT(reconstruction_error(rank_one_toy(), result.coefficients, result.components.values), 1e-8);
}

TEST(Nmf, FullRankCaseDrivesErrorToZero) {
    const Eigen::MatrixXd h_true = oracle::uniform_matrix(4, 4, 17, 0.1, 1.0);
    const auto result = fit_nmf(h_true, options(4, 3000));
    const double rel = reconstruction_error(h_true, result.coefficients, result.components.values) / h_true.norm();
    EXPECT_LT(rel, 1e-3);
}

TEST(Nmf, ExactLowRankProductIsRecovered) {
    const Eigen::MatrixXd r = low_rank_nonneg(40, 30, 5, 3);
    const auto result = fit_nmf(r, options(5, 1000));
    const double rel = reconstruction_error(r, result.coefficients, result.components.values) / r.norm();
    EXPECT_LT(rel, 1e-3);
}

TEST(Nmf, ObjectiveNeverIncreases) {
    const Eigen::MatrixXd r = oracle::uniform_matrix(40, 30, 5);
    std::vector<double> trace;
    auto o = options(5, 300);
    o.on_iteration = [&](const IterationState& s) {
        ASSERT_NE(s.coefficients, nullptr);
        const double recomputed = 0.5 * (r - *s.coefficients * s.components).squaredNorm();
        EXPECT_NEAR(s.objective, recomputed, 1e-9 * recomputed);
        trace.push_back(recomputed);
        EXPECT_GE(s.components.minCoeff(), 0.0);
        EXPECT_GE(s.coefficients->minCoeff(), 0.0);
    };
    fit_nmf(r, o);
    ASSERT_EQ(trace.size(), 301u);
    for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] + 1e-10) << "iteration " << i;
}

TEST(Nmf, RejectsNegativeInput) {
    Eigen::MatrixXd r = rank_one_toy();
    r(0, 1) = -0.1;
    EXPECT_THROW(fit_nmf(r, options(1, 10)), InvalidInput);
    EXPECT_THROW(fit_hyperplane_nmf(r, options(1, 10)), InvalidInput);
    EXPECT_THROW(fit_nmf(rank_one_toy(), options(1, 0)), InvalidInput);
}

TEST(NmfInference, IdentityComponentsGiveTheRows) {
    ComponentMatrix c;
    c.method = Method::nmf;
    c.values = Eigen::MatrixXd::Identity(3, 3);
    const Eigen::MatrixXd rows = oracle::uniform_matrix(4, 3, 8, 0.1, 2.0);
    const Eigen::MatrixXd w = infer_nmf_coefficients(rows, c);
    // Exact up to the 1e-12 denominator guard.
    EXPECT_LT((w - rows).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(NmfInference, MatchesGridNnlsOnTwoComponentToy) {
    ComponentMatrix c;
    c.method = Method::nmf;
    c.values = oracle::uniform_matrix(2, 6, 31, 0.1, 1.0);
    const Eigen::RowVector2d w_true(0.8, 1.7);
    const Eigen::MatrixXd rows = w_true * c.values;
    const Eigen::Vector2d grid = oracle::nnls_grid(rows.row(0), c.values, 4.0);
    const Eigen::MatrixXd w = infer_nmf_coefficients(rows, c, 2000);
    EXPECT_LT((w.row(0).transpose() - grid).norm() / grid.norm(), 1e-4);
    EXPECT_LT((w.row(0) - w_true).norm() / w_true.norm(), 1e-4);
}

TEST(NmfInference, ZeroRowsGiveZeroCoefficients) {
    ComponentMatrix c;
    c.method = Method::nmf;
    c.values = oracle::uniform_matrix(3, 5, 2, 0.1, 1.0);
    const Eigen::MatrixXd w = infer_nmf_coefficients(Eigen::MatrixXd::Zero(2, 5), c);
    EXPECT_LT(w.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(NmfInference, MethodMismatchIsRejected) {
    ComponentMatrix c;
    c.method = Method::pca;
    c.values = Eigen::MatrixXd::Identity(2, 2);
    EXPECT_THROW(infer_nmf_coefficients(Eigen::MatrixXd::Ones(1, 2), c), InvalidMethod);
    c.method = Method::nmf;
    EXPECT_THROW(project_coefficients(Eigen::MatrixXd::Ones(1, 2), c), InvalidMethod);
}

// ----------------------------------------------------------- Semi-NMF

TEST(SemiNmf, DisjointOrthonormalComponentsGiveProjection) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 4);
    h(0, 0) = 0.6;
    h(0, 1) = 0.8;
    h(1, 2) = 1.0;
    const Eigen::MatrixXd r = oracle::uniform_matrix(5, 4, 6);
    const Eigen::MatrixXd w = least_squares_coefficients(r, h);
    const Eigen::MatrixXd expected = r * h.transpose();
    EXPECT_LT((w - expected).cwiseAbs().maxCoeff(), 1e-7 * expected.cwiseAbs().maxCoeff());
}

TEST(SemiNmf, WStepSatisfiesNormalEquations) {
    for (const Eigen::MatrixXd& r : {rank_one_toy(), Eigen::MatrixXd(oracle::uniform_matrix(40, 30, 12))}) {
        const std::size_t rank = r.rows() == 2 ? 1 : 5;
        std::size_t checked = 0;
        auto o = options(rank, 100);
        o.on_iteration = [&](const IterationState& s) {
            ASSERT_NE(s.coefficients, nullptr);
            const Eigen::MatrixXd& h = s.components;
            const Eigen::MatrixXd residual = (r - *s.coefficients * h) * h.transpose();
            EXPECT_LT(residual.norm() / (r * h.transpose()).norm(), 1e-6) << "iteration " << s.iteration;
            EXPECT_GE(h.minCoeff(), 0.0);
            ++checked;
        };
        fit_semi_nmf(r, o);
        EXPECT_EQ(checked, 101u);
    }
}

TEST(SemiNmf, FinalObjectiveNotAboveInitial) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Eigen::MatrixXd r = oracle::uniform_matrix(40, 30, 200 + seed);
        std::vector<double> trace;
        auto o = options(5, 200, 0.0, seed);
        o.on_iteration = [&](const IterationState& s) { trace.push_back(s.objective); };
        const auto c = fit_semi_nmf(r, o);
        ASSERT_FALSE(trace.empty());
        EXPECT_LE(trace.back(), trace.front());
        EXPECT_GE(c.values.minCoeff(), 0.0);
    }
}

// ----------------------------------------------------- Hyperplane-NMF

TEST(HyperplaneNmf, RankOneToyRecoversDirection) {
    const Eigen::MatrixXd r = rank_one_toy();
    const auto c = fit_hyperplane_nmf(r, options(1, 1000, 0.0));
    const Eigen::RowVector2d h = c.values.row(0);
    EXPECT_NEAR(h[1] / h[0], 2.0, 1e-6);
    const Eigen::MatrixXd rec = r * c.values.transpose() * c.values;
    EXPECT_LT((rec - r).norm() / r.norm(), 1e-6);
}

TEST(HyperplaneNmf, DefaultOptions) {
    const FitOptions defaults;
    EXPECT_EQ(defaults.rank, 10u);
    EXPECT_EQ(defaults.iterations, 1000u);
    EXPECT_DOUBLE_EQ(defaults.lambda, 20.0);
}

TEST(HyperplaneNmf, HugeLambdaSeparatesOrthogonalBlocks) {
    const Eigen::MatrixXd r = two_block_matrix(4);
    const auto c = fit_hyperplane_nmf(r, options(2, 1000, 1e6));
    const double cosine = c.values.row(0).dot(c.values.row(1)) / (c.values.row(0).norm() * c.values.row(1).norm());
    EXPECT_LT(cosine, 0.05);
}

TEST(HyperplaneNmf, NonNegativeAndMostlyDescending) {
    const Eigen::MatrixXd r = oracle::uniform_matrix(40, 30, 77);
    for (double lambda : {0.0, 20.0}) {
        std::vector<double> trace;
        auto o = options(5, 300, lambda, 1);
        o.on_iteration = [&](const IterationState& s) {
            EXPECT_GE(s.components.minCoeff(), 0.0);
            if (s.coefficients != nullptr) EXPECT_GE(s.coefficients->minCoeff(), 0.0);
            EXPECT_NEAR(s.objective, hyperplane_objective(r, s.components, lambda), 1e-9 * s.objective);
            trace.push_back(s.objective);
        };
        fit_hyperplane_nmf(r, o);
        ASSERT_EQ(trace.size(), 301u);
        std::size_t increases = 0;
        for (std::size_t i = 1; i < trace.size(); ++i) increases += trace[i] > trace[i - 1] ? 1 : 0;
        EXPECT_LT(trace.back(), trace.front());
        EXPECT_LE(static_cast<double>(increases), 0.05 * 300.0);
    }
}

TEST(HyperplaneNmf, DeterministicForFixedSeed) {
    const Eigen::MatrixXd r = oracle::uniform_matrix(30, 20, 3);
    const auto a = fit_hyperplane_nmf(r, options(4, 200, 20.0, 9));
    const auto b = fit_hyperplane_nmf(r, options(4, 200, 20.0, 9));
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.seed, 9u);
    EXPECT_EQ(a.iterations, 200u);
    EXPECT_DOUBLE_EQ(a.lambda, 20.0);
}

TEST(HyperplaneNmf, DiversityGrowsWithLambda) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Eigen::MatrixXd r = oracle::uniform_matrix(40, 30, 500 + seed);
        double previous = std::numeric_limits<double>::infinity();
        for (double lambda : {0.0, 20.0, 200.0}) {
            const auto c = fit_hyperplane_nmf(r, options(5, 500, lambda, seed));
            const double cosine = mean_pairwise_cosine(c.values);
            EXPECT_LE(cosine, previous + 1e-12) << "seed " << seed << " lambda " << lambda;
            previous = cosine;
        }
    }
}

TEST(HyperplaneNmf, InitializationIsPositiveAndSeeded) {
    const Eigen::MatrixXd r = oracle::uniform_matrix(30, 12, 8);
    const Eigen::MatrixXd a = hyperplane_initialization(r, 4, 5);
    const Eigen::MatrixXd b = hyperplane_initialization(r, 4, 5);
    EXPECT_EQ(a, b);
    EXPECT_GT(a.minCoeff(), 0.0);
    // Positive singular-vector entries are kept as they are.
    const auto pca = fit_pca(r, 4);
    for (Eigen::Index i = 0; i < 4; ++i) {
        for (Eigen::Index j = 0; j < 12; ++j) {
            if (pca.values(i, j) > 0) EXPECT_NEAR(a(i, j), pca.values(i, j), 1e-12);
        }
    }
}

TEST(HyperplaneNmf, NoZeroRowsAfterFit) {
    const Eigen::MatrixXd r = two_block_matrix(2);
    const auto c = fit_hyperplane_nmf(r, options(4, 300, 20.0));
    for (Eigen::Index i = 0; i < c.values.rows(); ++i) EXPECT_GT(c.values.row(i).norm(), kUpdateEpsilon);
}

// ------------------------------------------------------ Cosine penalty

TEST(CosinePenalty, DisjointRowsHaveNoPenalty) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 4);
    h(0, 0) = 1.0;
    h(0, 1) = 2.0;
    h(1, 3) = 3.0;
    const auto p = cosine_penalty_and_gradient(h);
    EXPECT_DOUBLE_EQ(p.penalty, 0.0);
    EXPECT_EQ(p.grad_minus.cwiseAbs().maxCoeff(), 0.0);
}

TEST(CosinePenalty, IdenticalRowsGiveTangentGradient) {
    Eigen::MatrixXd h(2, 3);
    h.row(0) << 1.0, 2.0, 0.5;
    h.row(1) = h.row(0);
    const auto p = cosine_penalty_and_gradient(h);
    EXPECT_NEAR(p.penalty, 2.0, 1e-12);
    for (Eigen::Index i = 0; i < 2; ++i) {
        const Eigen::RowVectorXd g = p.grad_plus.row(i) - p.grad_minus.row(i);
        EXPECT_NEAR(g.dot(h.row(i)), 0.0, 1e-12);
    }
}

TEST(CosinePenalty, GradientMatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Eigen::MatrixXd h = oracle::uniform_matrix(4, 10, 900 + seed, 0.1, 1.0);
        const auto p = cosine_penalty_and_gradient(h);
        EXPECT_NEAR(p.penalty, oracle::pairwise_cosine_sum(h), 1e-12);
        EXPECT_GE(p.grad_plus.minCoeff(), 0.0);
        EXPECT_GE(p.grad_minus.minCoeff(), 0.0);
        // The full ordered-pair penalty counts every pair twice, so its
        // derivative is twice the per-row split.
        const Eigen::MatrixXd fd = oracle::central_difference(oracle::pairwise_cosine_sum, h, 1e-6);
        const Eigen::MatrixXd analytic = 2.0 * (p.grad_plus - p.grad_minus);
        const double rel = (analytic - fd).cwiseAbs().maxCoeff() / fd.cwiseAbs().maxCoeff();
        EXPECT_LT(rel, 1e-5);
    }
}

// ------------------------------------------------------- Projection

TEST(Projection, ZeroRowsGiveZero) {
    ComponentMatrix c;
    c.method = Method::hyperplane_nmf;
    c.values = oracle::uniform_matrix(3, 6, 1);
    EXPECT_EQ(project_coefficients(Eigen::MatrixXd::Zero(2, 6), c), Eigen::MatrixXd::Zero(2, 3));
}

TEST(Projection, RowSpanIsReproducedWithOrthonormalComponents) {
    const Eigen::MatrixXd r = oracle::uniform_matrix(20, 8, 4);
    const auto c = fit_pca(r, 3);
    const Eigen::MatrixXd in_span = oracle::uniform_matrix(5, 3, 6, -1.0, 1.0) * c.values;
    const Eigen::MatrixXd rec = project_coefficients(in_span, c) * c.values;
    EXPECT_LT((rec - in_span).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Projection, DimensionMismatchIsRejected) {
    ComponentMatrix c;
    c.method = Method::pca;
    c.values = Eigen::MatrixXd::Identity(2, 3);
    EXPECT_THROW(project_coefficients(Eigen::MatrixXd::Ones(1, 4), c), InvalidInput);
}

TEST(Projection, RuleDispatchesByMethod) {
    const Eigen::MatrixXd h = oracle::uniform_matrix(2, 5, 3, 0.1, 1.0);
    const Eigen::MatrixXd rows = oracle::uniform_matrix(3, 5, 4);
    ComponentMatrix c;
    c.values = h;
    c.method = Method::hyperplane_nmf;
    EXPECT_EQ(coefficients_for(rows, c), rows * h.transpose());
    c.method = Method::semi_nmf;
    EXPECT_EQ(coefficients_for(rows, c), least_squares_coefficients(rows, h));
    c.method = Method::nmf;
    EXPECT_EQ(coefficients_for(rows, c), infer_nmf_coefficients(rows, c));
}

// ----------------------------------------------------- Cross-method

TEST(EckartYoung, NoMethodBeatsTruncatedSvd) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const Eigen::MatrixXd r = oracle::uniform_matrix(30, 16, 700 + seed);
        const double floor = oracle::truncated_svd_error(r, 4);
        const auto o = options(4, 200, 20.0, seed);
        EXPECT_GE(method_reconstruction_error(r, fit_pca(r, 4)), floor - 1e-9);
        const auto nmf = fit_nmf(r, o);
        EXPECT_GE(reconstruction_error(r, nmf.coefficients, nmf.components.values), floor - 1e-9);
        EXPECT_GE(method_reconstruction_error(r, nmf.components), floor - 1e-9);
        EXPECT_GE(method_reconstruction_error(r, fit_semi_nmf(r, o)), floor - 1e-9);
        EXPECT_GE(method_reconstruction_error(r, fit_hyperplane_nmf(r, o)), floor - 1e-9);
    }
}

TEST(Determinism, AllSeededMethodsRepeatBitForBit) {
    const Eigen::MatrixXd r = oracle::uniform_matrix(25, 12, 55);
    const auto o = options(3, 100, 20.0, 123);
    EXPECT_EQ(fit_nmf(r, o).components.values, fit_nmf(r, o).components.values);
    EXPECT_EQ(fit_semi_nmf(r, o).values, fit_semi_nmf(r, o).values);
    EXPECT_EQ(fit_pca(r, 3).values, fit_pca(r, 3).values);
    auto other = o;
    other.seed = 124;
    EXPECT_NE(fit_nmf(r, o).components.values, fit_nmf(r, other).components.values);
}

TEST(MeanPairwiseCosine, KnownValues) {
    EXPECT_DOUBLE_EQ(mean_pairwise_cosine(Eigen::MatrixXd::Ones(1, 3)), 0.0);
    EXPECT_NEAR(mean_pairwise_cosine(Eigen::MatrixXd::Ones(3, 3)), 1.0, 1e-12);
    EXPECT_NEAR(mean_pairwise_cosine(Eigen::MatrixXd::Identity(3, 3)), 0.0, 1e-12);
}

}  // namespace
