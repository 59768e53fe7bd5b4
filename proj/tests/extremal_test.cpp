#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "test_support.hpp"

namespace pickbody {
namespace {

using testing::Rng;

Kernel diagonal_kernel(Rng& rng, Eigen::Index n) {
    RealVector d(n);
    for (Eigen::Index i = 0; i < n; ++i) d(i) = testing::uniform(rng, 0.5, 2.0);
    return Kernel(ComplexMatrix(d.cast<Complex>().asDiagonal()));
}

// Szego kernel on (0, 1/2, i/2) with the (1,2) entry turned by exp(0.5 i).
Kernel phase_perturbed_fixture() {
    const std::vector<Complex> alpha{0.0, 0.5, Complex(0.0, 0.5)};
    ComplexMatrix m = szego_kernel(alpha).matrix();
    m(0, 1) *= std::polar(1.0, 0.5);
    m(1, 0) = std::conj(m(0, 1));
    return Kernel(m);
}

const std::vector<Complex> kFixtureBoundary{Complex(0.11464688419809645, -0.12747114870743825),
                                            Complex(-0.32952049631488428, 0.16029191461000772)};

// Brute-force oracle with Eigen's solver: branch and bound over squares
// covering the disc of the free coordinate, using
// |S(x) - S(y)|_2 <= |x - y| (2 sum_j |K_2j| |w_j| + 2 K_22 max(|x|, |y|)).
// Returns an upper bound for max lambda_min and the best value seen.
double smallest_eig(const Kernel& k, const std::vector<Complex>& w_sub, Complex x) {
    const std::vector<Complex> w{w_sub[0], w_sub[1], x};
    ComplexMatrix s(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) s(i, j) = (1.0 - w[i] * std::conj(w[j])) * k.matrix()(i, j);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(s, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

double brute_force_upper_bound(const Kernel& k, const std::vector<Complex>& w_sub, double& best_seen) {
    double lip = 2.0 * 1.5 * k.matrix()(2, 2).real();
    for (int j = 0; j < 2; ++j) lip += 2.0 * std::abs(k.matrix()(2, j)) * std::abs(w_sub[j]);
    struct Cell {
        double cx, cy, half;
    };
    std::vector<Cell> todo{{0.0, 0.0, 1.0}};
    double bound = -1e300;
    best_seen = -1e300;
    while (!todo.empty()) {
        const Cell c = todo.back();
        todo.pop_back();
        if (std::hypot(c.cx, c.cy) - c.half * std::sqrt(2.0) > 1.0) continue;
        const double f = smallest_eig(k, w_sub, Complex(c.cx, c.cy));
        best_seen = std::max(best_seen, f);
        const double ub = f + lip * c.half * std::sqrt(2.0);
        if (ub < 0.0 || c.half < 1e-4) {
            bound = std::max(bound, ub);
            continue;
        }
        const double h = c.half / 2.0;
        for (double dx : {-h, h})
            for (double dy : {-h, h}) todo.push_back({c.cx + dx, c.cy + dy, h});
    }
    return bound;
}

TEST(Lift, SzegoPairLiftIsBlaschkeExtension) {
    const std::vector<Complex> alpha{0.1, Complex(-0.3, 0.4), Complex(0.5, 0.2)};
    const auto k = szego_raw(alpha);
    const TupleIndex idx({0, 1}, 3);
    const BlaschkeProduct b(Complex(0.6, 0.8), {Complex(0.2, -0.1)});
    const std::vector<Complex> w_sub{b(alpha[0]), b(alpha[1])};
    const auto lift = lift_boundary_point(k, idx, w_sub);
    ASSERT_TRUE(lift.has_value());
    const std::vector<Complex> extra{alpha[2]};
    const auto ext = extend_values(PickProblem({alpha[0], alpha[1]}, w_sub), extra);
    EXPECT_LT(std::abs((*lift)[2] - ext[0]), 1e-9);
    EXPECT_LT(std::abs((*lift)[2] - b(alpha[2])), 1e-9);
}

TEST(Lift, DiagonalKernelCompletesWithZeros) {
    Rng rng(80);
    const auto k = diagonal_kernel(rng, 3);
    const TupleIndex idx({0}, 3);
    const std::vector<Complex> w_sub{std::polar(1.0, 0.7)};
    const auto lift = lift_boundary_point(k, idx, w_sub);
    ASSERT_TRUE(lift.has_value());
    EXPECT_EQ((*lift)[0], w_sub[0]);
    EXPECT_TRUE(membership(k, *lift));
    EXPECT_TRUE(membership(k, std::vector<Complex>{w_sub[0], 0.0, 0.0}));
}

TEST(Lift, FullTupleReturnsInput) {
    const std::vector<Complex> alpha{0.0, 0.5};
    const auto k = szego_raw(alpha);
    const auto lift = lift_boundary_point(k, TupleIndex::full(2), std::vector<Complex>{0.0, 0.5});
    ASSERT_TRUE(lift.has_value());
    EXPECT_EQ(*lift, (std::vector<Complex>{0.0, 0.5}));
}

TEST(Lift, RejectsInteriorSubPoint) {
    const auto k = szego_raw(std::vector<Complex>{0.0, 0.5, -0.5});
    EXPECT_THROW(lift_boundary_point(k, TupleIndex({0, 1}, 3), std::vector<Complex>{0.0, 0.2}),
                 PreconditionViolation);
}

TEST(Lift, LiftsLandOnTheBoundary) {
    Rng rng(81);
    for (int trial = 0; trial < 60; ++trial) {
        const Eigen::Index n = 3 + trial % 2;
        const auto alpha = testing::random_separated_points(rng, static_cast<std::size_t>(n), 0.9, 0.05);
        const Kernel k = trial % 3 == 0 ? diagonal_kernel(rng, n) : szego_kernel(alpha);
        const auto tuples = TupleIndex::proper_tuples(static_cast<std::size_t>(n));
        const auto& idx = tuples[static_cast<std::size_t>(trial) % tuples.size()];
        const auto w_sub = sample_boundary_point(restrict(k, idx), rng);
        const auto lift = lift_boundary_point(k, idx, w_sub);
        ASSERT_TRUE(lift.has_value());
        EXPECT_LE(std::abs(operator_norm(k, *lift) - 1.0), 1e-8);
        EXPECT_EQ(project(std::span<const Complex>(*lift), idx), w_sub);
    }
}

TEST(VerifyExtremal, DiagonalKernels) {
    Rng rng(82);
    for (Eigen::Index n = 2; n <= 4; ++n) {
        const auto v = verify_extremal(diagonal_kernel(rng, n), 50, 3);
        EXPECT_TRUE(v.extremal);
        EXPECT_TRUE(v.counterexamples.empty());
        EXPECT_EQ(v.checked_tuples.size(), (std::size_t{1} << n) - 2);
        for (const auto& wit : v.witnesses) {
            // Zero completion is a closed-form witness.
            std::vector<Complex> zero_fill(static_cast<std::size_t>(n), 0.0);
            for (std::size_t a = 0; a < wit.tuple.size(); ++a) zero_fill[wit.tuple[a]] = wit.w_sub[a];
            EXPECT_TRUE(membership(diagonal_kernel(rng, n), zero_fill));
        }
    }
}

TEST(VerifyExtremal, SzegoKernels) {
    Rng rng(83);
    for (std::size_t n = 2; n <= 4; ++n) {
        const auto alpha = testing::random_separated_points(rng, n, 0.9, 0.05);
        const auto v = verify_extremal(szego_kernel(alpha), 50, 4);
        EXPECT_TRUE(v.extremal) << "n = " << n;
        for (const auto& wit : v.witnesses) {
            std::vector<Complex> nodes, extra;
            for (auto i : wit.tuple.indices()) nodes.push_back(alpha[i]);
            const auto out = wit.tuple.complement(n);
            for (auto f : out) extra.push_back(alpha[f]);
            const auto ext = extend_values(PickProblem(nodes, wit.w_sub), extra);
            for (std::size_t f = 0; f < out.size(); ++f) EXPECT_LT(std::abs(ext[f] - wit.lift[out[f]]), 1e-7);
        }
    }
}

TEST(VerifyExtremal, DeterministicForSeed) {
    const auto k = szego_raw(std::vector<Complex>{0.1, -0.2, Complex(0.3, 0.3)});
    const auto a = verify_extremal(k, 10, 99);
    const auto b = verify_extremal(k, 10, 99);
    ASSERT_EQ(a.witnesses.size(), b.witnesses.size());
    for (std::size_t i = 0; i < a.witnesses.size(); ++i) EXPECT_EQ(a.witnesses[i].lift, b.witnesses[i].lift);
}

TEST(PhasePerturbedFixture, BruteForceConfirmsNoLift) {
    const auto k = phase_perturbed_fixture();
    const TupleIndex idx({0, 1}, 3);
    ASSERT_TRUE(defect(restrict(k, idx), kFixtureBoundary).boundary);
    double best_seen = 0.0;
    const double oracle_bound = brute_force_upper_bound(k, kFixtureBoundary, best_seen);
    EXPECT_LT(oracle_bound, 0.0);
    const auto r = lift_search(k, idx, kFixtureBoundary);
    EXPECT_EQ(r.status, LiftStatus::Counterexample);
    EXPECT_LE(r.best_min_eig, oracle_bound);
    EXPECT_GE(r.best_min_eig, best_seen - 1e-6);
    EXPECT_GE(r.upper_bound, best_seen - 1e-12);
}

TEST(PhasePerturbedFixture, VerifyExtremalReportsCounterexamples) {
    const auto v = verify_extremal(phase_perturbed_fixture(), 30, 7);
    EXPECT_FALSE(v.extremal);
    ASSERT_FALSE(v.counterexamples.empty());
    for (const auto& c : v.counterexamples) EXPECT_LT(c.upper_bound, 0.0);
}

TEST(CompletionBound, NeverBelowAchievedValue) {
    Rng rng(84);
    for (int trial = 0; trial < 100; ++trial) {
        const Kernel k(testing::random_pd(rng, 3, 0.3, 2.0));
        const TupleIndex idx({0, 2}, 3);
        const auto w_sub = sample_boundary_point(restrict(k, idx), rng);
        const double bound = detail::completion_upper_bound(k, idx, w_sub);
        for (int s = 0; s < 20; ++s) {
            const std::vector<Complex> w{w_sub[0], testing::random_disc_point(rng), w_sub[1]};
            EXPECT_LE(min_eigenvalue(schur_scale(k, w)), bound + 1e-12);
        }
    }
}

} // namespace
} // namespace pickbody
