#pragma once

// Classical Nevanlinna-Pick interpolation on the unit disc.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pickbody/errors.hpp"
#include "pickbody/moebius.hpp"
#include "pickbody/numlin.hpp"

namespace pickbody {

inline constexpr double kMinNodeSeparation = 1e-12;

/// Interpolation data lambda_j -> w_j with distinct interior nodes.
class PickProblem {
public:
    PickProblem(std::vector<DiscPoint> nodes, std::vector<DiscPoint> targets)
        : nodes_(std::move(nodes)), targets_(std::move(targets)) {
        if (nodes_.empty() || nodes_.size() != targets_.size()) {
            throw InvalidInput("PickProblem: need n >= 1 nodes and as many targets");
        }
        for (auto z : nodes_) {
            if (!is_finite(z) || !(std::abs(z) < 1.0)) {
                throw InvalidInput("PickProblem: nodes must lie in the open disc");
            }
        }
        for (auto w : targets_) require_closed_disc(w, "PickProblem target");
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            for (std::size_t j = i + 1; j < nodes_.size(); ++j) {
                if (moebius_distance(nodes_[i], nodes_[j]) <= kMinNodeSeparation) {
                    throw InvalidInput("PickProblem: coincident nodes");
                }
            }
        }
    }

    std::size_t size() const { return nodes_.size(); }
    const std::vector<DiscPoint>& nodes() const { return nodes_; }
    const std::vector<DiscPoint>& targets() const { return targets_; }

private:
    std::vector<DiscPoint> nodes_;
    std::vector<DiscPoint> targets_;
};

/// (1 - w_i conj(w_j)) / (1 - lambda_i conj(lambda_j)).
inline HermitianMatrix pick_matrix(const PickProblem& p) {
    const auto n = static_cast<Eigen::Index>(p.size());
    ComplexMatrix m(n, n);
    const auto& l = p.nodes();
    const auto& w = p.targets();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto ui = static_cast<std::size_t>(i);
            const auto uj = static_cast<std::size_t>(j);
            m(i, j) = (1.0 - w[ui] * std::conj(w[uj])) / (1.0 - l[ui] * std::conj(l[uj]));
        }
    }
    return HermitianMatrix(m);
}

inline bool solvable(const PickProblem& p, const ToleranceConfig& tol = {}) {
    return is_psd(pick_matrix(p), tol);
}

enum class SolutionClass { None, Unique, Many };

struct SolutionCount {
    SolutionClass kind = SolutionClass::None;
    std::size_t rank = 0; // meaningful for Unique (and Many, where rank = n)

    friend bool operator==(const SolutionCount&, const SolutionCount&) = default;
};

inline const char* to_string(SolutionClass c) {
    switch (c) {
    case SolutionClass::None: return "None";
    case SolutionClass::Unique: return "Unique";
    case SolutionClass::Many: return "Many";
    }
    return "?";
}

namespace detail {

inline bool has_boundary_target(const PickProblem& p, const ToleranceConfig& tol) {
    for (auto w : p.targets()) {
        if (!is_interior(w, tol.boundary_tol)) return true;
    }
    return false;
}

inline bool all_targets_equal(const PickProblem& p, double slack) {
    for (auto w : p.targets()) {
        if (std::abs(w - p.targets().front()) > slack) return false;
    }
    return true;
}

} // namespace detail

/// None if unsolvable; Unique(r) if the Pick matrix is singular of rank r and
/// the degree-r Blaschke product reconstructs; Many if positive definite.
/// A rank-deficient matrix whose Blaschke reconstruction fails is reported as
/// Many, so uniqueness is only ever claimed with a verified interpolant.
inline SolutionCount solution_count_class(const PickProblem& p, const ToleranceConfig& tol = {}) {
    const std::size_t n = p.size();
    if (detail::has_boundary_target(p, tol)) {
        if (detail::all_targets_equal(p, tol.boundary_tol)) {
            return {SolutionClass::Unique, 0};
        }
        return {SolutionClass::None, 0};
    }
    const auto pm = pick_matrix(p);
    if (!is_psd(pm, tol)) {
        return {SolutionClass::None, 0};
    }
    const std::size_t rank = numeric_rank(pm, tol);
    if (rank >= n) {
        return {SolutionClass::Many, n};
    }
    try {
        (void)blaschke_from_nodes(p.nodes(), p.targets(), rank, tol);
    } catch (const ReconstructionFailure&) {
        return {SolutionClass::Many, n};
    }
    return {SolutionClass::Unique, rank};
}

inline BlaschkeProduct unique_solution(const PickProblem& p, const ToleranceConfig& tol = {}) {
    const auto cls = solution_count_class(p, tol);
    if (cls.kind != SolutionClass::Unique) {
        throw PreconditionViolation(std::string("unique_solution: problem class is ") + to_string(cls.kind));
    }
    if (cls.rank == 0) {
        const Complex c = p.targets().front();
        return BlaschkeProduct(c / std::abs(c), {});
    }
    return blaschke_from_nodes(p.nodes(), p.targets(), cls.rank, tol);
}

/// Values of the unique interpolant of `p_sub` at further nodes.
inline std::vector<DiscPoint> extend_values(const PickProblem& p_sub, std::span<const DiscPoint> extra_nodes,
                                            const ToleranceConfig& tol = {}) {
    const auto b = unique_solution(p_sub, tol);
    for (auto z : extra_nodes) require_closed_disc(z, "extend_values");
    return b.evaluate(extra_nodes);
}

} // namespace pickbody
