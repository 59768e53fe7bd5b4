#include <gtest/gtest.h>

#include "test_support.hpp"

namespace pickbody {
namespace {

using testing::Rng;

PickProblem problem(std::vector<Complex> nodes, std::vector<Complex> targets) {
    return PickProblem(std::move(nodes), std::move(targets));
}

TEST(PickMatrix, Examples) {
    const auto ones = pick_matrix(problem({0.0, 0.5}, {0.0, 0.5}));
    EXPECT_LE(max_abs(ones.matrix() - ComplexMatrix::Ones(2, 2)), 1e-15);

    const std::vector<Complex> nodes{Complex(0.1, 0.2), Complex(-0.3, 0.4), 0.6};
    const auto szego = pick_matrix(problem(nodes, {0.0, 0.0, 0.0}));
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            EXPECT_LT(std::abs(szego(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) -
                               1.0 / (1.0 - nodes[i] * std::conj(nodes[j]))),
                      1e-15);

    const Complex l(0.3, 0.1), w(-0.2, 0.5);
    const auto single = pick_matrix(problem({l}, {w}));
    EXPECT_NEAR(single(0, 0).real(), (1.0 - std::norm(w)) / (1.0 - std::norm(l)), 1e-15);
}

TEST(PickProblem, RejectsInvalid) {
    EXPECT_THROW(problem({0.1, 0.1}, {0.0, 0.2}), InvalidInput);
    EXPECT_THROW(problem({0.1}, {0.0, 0.2}), InvalidInput);
    EXPECT_THROW(problem({1.0}, {0.0}), InvalidInput);
    EXPECT_THROW(problem({0.1}, {1.2}), InvalidInput);
    EXPECT_THROW(problem({}, {}), InvalidInput);
}

TEST(Solvable, Examples) {
    EXPECT_TRUE(solvable(problem({0.0, 0.5}, {0.0, 0.3})));
    EXPECT_FALSE(solvable(problem({0.0, 0.5}, {0.0, 0.9})));
    const std::vector<Complex> nodes{Complex(0.1, 0.2), Complex(-0.3, 0.4), 0.6};
    EXPECT_TRUE(solvable(problem(nodes, nodes)));
}

TEST(SolutionCountClass, Examples) {
    EXPECT_EQ(solution_count_class(problem({0.0, 0.5}, {0.0, 0.5})), (SolutionCount{SolutionClass::Unique, 1}));
    EXPECT_EQ(solution_count_class(problem({0.0, 0.5}, {0.0, 0.3})).kind, SolutionClass::Many);
    EXPECT_EQ(solution_count_class(problem({0.0, 0.5}, {0.0, 0.9})).kind, SolutionClass::None);
}

TEST(SolutionCountClass, BoundaryTargets) {
    const Complex c = std::polar(1.0, 2.0);
    EXPECT_EQ(solution_count_class(problem({0.0, 0.5}, {c, c})), (SolutionCount{SolutionClass::Unique, 0}));
    EXPECT_EQ(solution_count_class(problem({0.0, 0.5}, {c, 0.0})).kind, SolutionClass::None);
}

TEST(UniqueSolution, Examples) {
    const auto id = unique_solution(problem({0.0, 0.5}, {0.0, 0.5}));
    EXPECT_LT(std::abs(id(Complex(0.3, 0.4)) - Complex(0.3, 0.4)), 1e-12);

    const auto aut = unique_solution(problem({0.0, 0.5}, {-0.5, 0.0}));
    for (Complex z : {Complex(0.2, 0.1), Complex(-0.7, 0.3)})
        EXPECT_LT(std::abs(aut(z) - (z - 0.5) / (1.0 - 0.5 * z)), 1e-12);

    // targets are z^2 at (0, 1/2, -1/2) = (0, 1/4, 1/4)
    const auto pr = problem({0.0, 0.5, -0.5}, {0.0, 0.25, 0.25});
    EXPECT_EQ(numeric_rank(pick_matrix(pr)), 2u);
    const auto sq = unique_solution(pr);
    EXPECT_EQ(sq.degree(), 2u);
    for (Complex z : {Complex(0.2, 0.1), Complex(-0.7, 0.3), Complex(0.0, 0.9)})
        EXPECT_LT(std::abs(sq(z) - z * z), 1e-8);

    EXPECT_THROW(unique_solution(problem({0.0, 0.5}, {0.0, 0.3})), PreconditionViolation);
    EXPECT_THROW(unique_solution(problem({0.0, 0.5}, {0.0, 0.9})), PreconditionViolation);
}

TEST(ExtendValues, Examples) {
    const std::vector<Complex> extra{-0.5};
    EXPECT_LT(std::abs(extend_values(problem({0.0, 0.5}, {0.0, 0.5}), extra)[0] + 0.5), 1e-12);
    const Complex c = std::polar(1.0, 0.9);
    const std::vector<Complex> half{0.5};
    EXPECT_LT(std::abs(extend_values(problem({0.0}, {c}), half)[0] - c), 1e-15);
    EXPECT_LT(std::abs(extend_values(problem({0.0, 0.5}, {-0.5, 0.0}), extra)[0] + 0.8), 1e-12);
}

TEST(Solvable, TwoPointOracle) {
    Rng rng(31);
    int yes = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Complex l1 = testing::random_disc_point(rng, 0.98), l2 = testing::random_disc_point(rng, 0.98);
        const Complex w1 = testing::random_disc_point(rng, 0.98), w2 = testing::random_disc_point(rng, 0.98);
        const bool oracle = moebius_distance(w1, w2) <= moebius_distance(l1, l2) + 1e-9;
        EXPECT_EQ(solvable(problem({l1, l2}, {w1, w2})), oracle);
        yes += oracle ? 1 : 0;
    }
    EXPECT_GT(yes, 100);
}

TEST(Solvable, ForwardClosureUnderBlaschke) {
    Rng rng(32);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t degree = static_cast<std::size_t>(trial % 5);
        const auto b = testing::random_blaschke(rng, degree, 0.9);
        const std::size_t n = 1 + static_cast<std::size_t>(trial % 6);
        const auto nodes = testing::random_separated_points(rng, n, 0.9, 0.05);
        const auto pr = problem(nodes, b.evaluate(nodes));
        ASSERT_TRUE(solvable(pr));
        if (degree > 0) {
            EXPECT_LE(numeric_rank(pick_matrix(pr)), degree);
        }
    }
}

TEST(Solvable, AutomorphismInvariance) {
    Rng rng(33);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(trial % 3);
        const auto nodes = testing::random_separated_points(rng, n, 0.9, 0.05);
        std::vector<Complex> targets;
        for (std::size_t k = 0; k < n; ++k) targets.push_back(testing::random_disc_point(rng, 0.9));
        const auto phi = testing::random_automorphism(rng);
        const auto psi = testing::random_automorphism(rng);
        const auto pr = problem(nodes, targets);
        const auto moved = problem(phi.apply(nodes), psi.apply(targets));
        EXPECT_EQ(solvable(pr), solvable(moved));
    }
}

TEST(ExtendValues, ExtendedTupleKeepsRank) {
    Rng rng(34);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t degree = 1 + static_cast<std::size_t>(trial % 3);
        const auto b = testing::random_blaschke(rng, degree, 0.8);
        const auto nodes = testing::random_separated_points(rng, degree + 3, 0.8, 0.15);
        const std::vector<Complex> sub_nodes(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(degree + 1));
        const std::vector<Complex> extra(nodes.begin() + static_cast<std::ptrdiff_t>(degree + 1), nodes.end());
        const auto sub = problem(sub_nodes, b.evaluate(sub_nodes));
        const auto ext = extend_values(sub, extra);
        std::vector<Complex> all_targets = sub.targets();
        all_targets.insert(all_targets.end(), ext.begin(), ext.end());
        const auto full = problem(nodes, all_targets);
        EXPECT_TRUE(solvable(full));
        EXPECT_EQ(numeric_rank(pick_matrix(full)), degree);
    }
}

} // namespace
} // namespace pickbody
