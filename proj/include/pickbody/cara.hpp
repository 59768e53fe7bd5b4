#pragma once

// Model domains (disc, polydisc), Caratheodory quantities, Pick-body
// membership and an Agler-decomposition feasibility solver.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pickbody/errors.hpp"
#include "pickbody/kernel_ball.hpp"
#include "pickbody/moebius.hpp"
#include "pickbody/numlin.hpp"
#include "pickbody/pick_disc.hpp"

namespace pickbody {

enum class DomainKind { Disc, Polydisc };

struct DomainModel {
    DomainKind kind = DomainKind::Disc;
    std::size_t dim = 1;

    static DomainModel disc() { return {DomainKind::Disc, 1}; }
    static DomainModel polydisc(std::size_t m) {
        if (m < 1) throw InvalidInput("polydisc dimension must be >= 1");
        return {DomainKind::Polydisc, m};
    }

    std::size_t coord_count() const { return kind == DomainKind::Disc ? 1 : dim; }
    bool is_disc_like() const { return coord_count() == 1; }

    std::string name() const {
        return kind == DomainKind::Disc ? "disc" : "polydisc(" + std::to_string(dim) + ")";
    }

    friend bool operator==(const DomainModel&, const DomainModel&) = default;
};

struct DomainPoint {
    std::vector<Complex> coords;

    DomainPoint() = default;
    DomainPoint(std::initializer_list<Complex> c) : coords(c) {}
    explicit DomainPoint(std::vector<Complex> c) : coords(std::move(c)) {}

    std::size_t size() const { return coords.size(); }
    Complex operator[](std::size_t k) const { return coords[k]; }
};

inline void require_domain_point(const DomainModel& d, const DomainPoint& z, const char* what) {
    if (z.size() != d.coord_count()) {
        throw InvalidInput(std::string(what) + ": point has " + std::to_string(z.size()) + " coordinates, " +
                           d.name() + " needs " + std::to_string(d.coord_count()));
    }
    for (auto c : z.coords) {
        if (!is_finite(c) || !(std::abs(c) < 1.0)) {
            throw InvalidInput(std::string(what) + ": coordinates must lie in the open disc");
        }
    }
}

/// Coordinate k of every point.
inline std::vector<Complex> coordinate(std::span<const DomainPoint> z, std::size_t k) {
    std::vector<Complex> out;
    out.reserve(z.size());
    for (const auto& p : z) out.push_back(p[k]);
    return out;
}

inline bool same_point(const DomainPoint& a, const DomainPoint& b, double tol = 1e-12) {
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (std::abs(a[k] - b[k]) > tol) return false;
    }
    return true;
}

inline void require_distinct_points(const DomainModel& d, std::span<const DomainPoint> z, const char* what) {
    if (z.empty()) throw InvalidInput(std::string(what) + ": need at least one point");
    for (const auto& p : z) require_domain_point(d, p, what);
    for (std::size_t i = 0; i < z.size(); ++i) {
        for (std::size_t j = i + 1; j < z.size(); ++j) {
            if (same_point(z[i], z[j])) throw InvalidInput(std::string(what) + ": repeated point");
        }
    }
}

/// c*(z, w): the Moebius distance on the disc, the coordinate maximum on the
/// polydisc.
inline double cara_distance(const DomainModel& d, const DomainPoint& z, const DomainPoint& w) {
    require_domain_point(d, z, "cara_distance");
    require_domain_point(d, w, "cara_distance");
    double best = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) best = std::max(best, moebius_distance(z[k], w[k]));
    return best;
}

namespace detail {

inline std::vector<Complex> dedupe(std::span<const Complex> pts, double tol = 1e-12) {
    std::vector<Complex> out;
    for (auto p : pts) {
        const bool seen = std::any_of(out.begin(), out.end(), [&](Complex q) { return std::abs(p - q) <= tol; });
        if (!seen) out.push_back(p);
    }
    return out;
}

inline double blaschke_modulus(Complex z, std::span<const Complex> zeros) {
    double v = 1.0;
    for (auto a : zeros) v *= moebius_distance(z, a);
    return v;
}

} // namespace detail

/// Generalized Moebius function on the disc: prod_j m(z1, z_j) over the
/// distinct zeros.
inline double gen_cara_disc(DiscPoint z1, std::span<const DiscPoint> zeros) {
    if (!is_finite(z1) || !(std::abs(z1) < 1.0)) throw InvalidInput("gen_cara_disc: z1 must be interior");
    for (auto a : zeros) {
        if (!is_finite(a) || !(std::abs(a) < 1.0)) throw InvalidInput("gen_cara_disc: zeros must be interior");
    }
    return detail::blaschke_modulus(z1, detail::dedupe(zeros));
}

inline double gen_cara_disc(DiscPoint z1, std::initializer_list<DiscPoint> zeros) {
    return gen_cara_disc(z1, std::span<const DiscPoint>(zeros.begin(), zeros.size()));
}

inline constexpr double kCandidateVanishTol = 1e-10;

/// Certified lower bound for the generalized Caratheodory function on the
/// polydisc: the best |f(z1)| over explicit candidates f vanishing at every
/// zero (coordinate Blaschke products, Blaschke products of linear slices and
/// of the coordinate product).
inline double gen_cara_lower_bound(const DomainModel& d, const DomainPoint& z1, std::span<const DomainPoint> zeros,
                                   std::size_t budget = 4096) {
    require_domain_point(d, z1, "gen_cara_lower_bound");
    for (const auto& z : zeros) require_domain_point(d, z, "gen_cara_lower_bound");
    if (zeros.empty()) return 1.0;
    const std::size_t m = d.coord_count();
    const std::size_t nz = zeros.size();
    double best = 0.0;

    // Candidate f(z) = prod_k B_k(z_k), B_k vanishing at the zeros assigned to coordinate k.
    {
        std::vector<std::size_t> assign(nz, 0);
        std::size_t visited = 0;
        for (;;) {
            double value = 1.0;
            for (std::size_t k = 0; k < m && value > 0.0; ++k) {
                std::vector<Complex> vals;
                for (std::size_t j = 0; j < nz; ++j) {
                    if (assign[j] == k) vals.push_back(zeros[j][k]);
                }
                value *= detail::blaschke_modulus(z1[k], detail::dedupe(vals));
            }
            best = std::max(best, value);
            if (++visited >= budget) break;
            std::size_t pos = 0;
            while (pos < nz && ++assign[pos] == m) assign[pos++] = 0;
            if (pos == nz) break;
        }
    }

    auto composed = [&](auto&& h) {
        std::vector<Complex> hz;
        for (const auto& z : zeros) hz.push_back(h(z));
        const auto roots = detail::dedupe(hz);
        for (auto v : hz) {
            if (detail::blaschke_modulus(v, roots) > kCandidateVanishTol) return 0.0;
        }
        return detail::blaschke_modulus(h(z1), roots);
    };

    if (m > 1) {
        best = std::max(best, composed([&](const DomainPoint& z) {
            Complex p = 1.0;
            for (auto c : z.coords) p *= c;
            return p;
        }));

        // Linear slices h(z) = sum_k t_k u_k z_k with convex weights t and unimodular u.
        std::mt19937_64 rng(0x5eedULL + m * 1000003ULL + nz);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const std::size_t slices = std::max<std::size_t>(budget / 4, 16);
        std::vector<double> t(m);
        std::vector<Complex> u(m);
        for (std::size_t s = 0; s < slices; ++s) {
            double total = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                t[k] = -std::log(1.0 - unit(rng));
                total += t[k];
                u[k] = std::polar(1.0, 2.0 * std::numbers::pi * unit(rng));
            }
            if (s == 0) u.assign(m, 1.0);
            best = std::max(best, composed([&](const DomainPoint& z) {
                Complex h = 0.0;
                for (std::size_t k = 0; k < m; ++k) h += t[k] / total * u[k] * z[k];
                return h;
            }));
        }
    }
    return std::min(best, 1.0);
}

enum class Membership { Member, NonMember, Undecided };

inline const char* to_string(Membership m) {
    switch (m) {
    case Membership::Member: return "Member";
    case Membership::NonMember: return "NonMember";
    case Membership::Undecided: return "Undecided";
    }
    return "?";
}

enum class FeasibilityStatus { Feasible, Infeasible, Undecided };

inline const char* to_string(FeasibilityStatus s) {
    switch (s) {
    case FeasibilityStatus::Feasible: return "Feasible";
    case FeasibilityStatus::Infeasible: return "Infeasible";
    case FeasibilityStatus::Undecided: return "Undecided";
    }
    return "?";
}

struct FeasibilityResult {
    FeasibilityStatus status = FeasibilityStatus::Undecided;
    std::vector<ComplexMatrix> witnesses; // Feasible: one PSD kernel per coordinate
    double residual = 0.0;                // affine residual, max-entry norm
    std::size_t iterations = 0;
    std::optional<ComplexMatrix> certificate; // Infeasible: admissible kernel whose ball excludes w
};

struct FeasibilityOptions {
    double tol = 1e-7;
    long budget = 20000;
    std::size_t plateau_window = 500;
    double plateau_rel = 1e-12;
    std::size_t certificate_every = 50;
};

namespace detail {

inline ComplexMatrix one_minus_outer(std::span<const Complex> x) {
    const auto n = static_cast<Eigen::Index>(x.size());
    ComplexMatrix p(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            p(i, j) = 1.0 - x[static_cast<std::size_t>(i)] * std::conj(x[static_cast<std::size_t>(j)]);
        }
    }
    return p;
}

inline ComplexMatrix psd_part(const ComplexMatrix& x) {
    const auto eig = hermitian_eigen(HermitianMatrix(x));
    const RealVector clipped = eig.eigenvalues.cwiseMax(0.0);
    return eig.eigenvectors * clipped.cast<Complex>().asDiagonal() * eig.eigenvectors.adjoint();
}

// Gamma with P_k o Gamma >= 0 for all k and sum_ij A_ij Gamma_ij < 0, built
// from a normal direction y of the affine constraint; returned only once
// verified.
inline std::optional<ComplexMatrix> verified_certificate(const std::vector<ComplexMatrix>& p, const ComplexMatrix& a,
                                                        const ComplexMatrix& y) {
    const auto n = a.rows();
    for (double sign : {-1.0, 1.0}) {
        ComplexMatrix g = sign * y.conjugate();
        g = (g + g.adjoint()).eval() * 0.5;
        const double gs = max_abs(g);
        if (!(gs > 0.0)) continue;
        g /= gs;
        double worst = 0.0;
        for (const auto& pk : p) {
            worst = std::min(worst, min_eigenvalue(HermitianMatrix(pk.cwiseProduct(g))));
        }
        double diag_floor = 1.0;
        for (const auto& pk : p) {
            for (Eigen::Index i = 0; i < n; ++i) diag_floor = std::min(diag_floor, pk(i, i).real());
        }
        const double eps = 2.0 * (-worst) / std::max(diag_floor, 1e-300) + 1e-9;
        g += eps * ComplexMatrix::Identity(n, n);
        bool admissible = true;
        for (const auto& pk : p) {
            if (min_eigenvalue(HermitianMatrix(pk.cwiseProduct(g))) < 0.0) admissible = false;
        }
        if (!admissible) continue;
        const double pairing = a.cwiseProduct(g).sum().real();
        if (pairing >= -1e-9) continue;
        if (min_eigenvalue(HermitianMatrix(g)) <= 0.0) continue;
        return g;
    }
    return std::nullopt;
}

} // namespace detail

/// PSD Gamma_k with sum_k (1 - x^k_i conj(x^k_j)) Gamma_k(i,j) = 1 - w_i conj(w_j),
/// one coordinate x^k per polydisc factor. Dykstra alternating projections
/// between the affine constraint and the product of PSD cones.
inline FeasibilityResult agler_feasibility(const std::vector<std::vector<Complex>>& coords, std::span<const Complex> w,
                                           const FeasibilityOptions& opt = {}) {
    if (opt.budget <= 0) throw InvalidInput("agler_feasibility: budget must be positive");
    if (coords.empty()) throw InvalidInput("agler_feasibility: need at least one coordinate");
    const std::size_t n = w.size();
    for (const auto& c : coords) {
        if (c.size() != n) throw InvalidInput("agler_feasibility: coordinate length mismatch");
        for (auto x : c) {
            if (!is_finite(x) || !(std::abs(x) < 1.0)) throw InvalidInput("agler_feasibility: nodes must be interior");
        }
    }
    for (auto x : w) require_closed_disc(x, "agler_feasibility target");
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            bool same = true;
            for (const auto& c : coords) same = same && std::abs(c[i] - c[j]) <= 1e-12;
            if (same) throw InvalidInput("agler_feasibility: repeated point");
        }
    }

    const std::size_t m = coords.size();
    const auto ni = static_cast<Eigen::Index>(n);
    std::vector<ComplexMatrix> p;
    for (const auto& c : coords) p.push_back(detail::one_minus_outer(c));
    const ComplexMatrix a = detail::one_minus_outer(w);
    ComplexMatrix denom = ComplexMatrix::Zero(ni, ni);
    for (const auto& pk : p) denom += pk.cwiseAbs2().cast<Complex>();

    auto affine_residual = [&](const std::vector<ComplexMatrix>& g) {
        ComplexMatrix r = a;
        for (std::size_t k = 0; k < m; ++k) r -= p[k].cwiseProduct(g[k]);
        return r;
    };

    FeasibilityResult out;
    // A single coordinate may already solve the problem.
    for (std::size_t k = 0; k < m; ++k) {
        const ComplexMatrix pick = a.cwiseQuotient(p[k]);
        const HermitianMatrix h(pick);
        if (min_eigenvalue(h) >= -ToleranceConfig{}.psd_tol * h.scale()) {
            out.status = FeasibilityStatus::Feasible;
            out.witnesses.assign(m, ComplexMatrix::Zero(ni, ni));
            out.witnesses[k] = h.matrix();
            out.residual = max_abs(affine_residual(out.witnesses));
            return out;
        }
    }

    std::vector<ComplexMatrix> x(m, ComplexMatrix::Zero(ni, ni));
    std::vector<ComplexMatrix> q(m, ComplexMatrix::Zero(ni, ni));
    std::vector<ComplexMatrix> y(m);
    double window_start = -1.0;
    for (long it = 1; it <= opt.budget; ++it) {
        const ComplexMatrix r = affine_residual(x).cwiseQuotient(denom);
        for (std::size_t k = 0; k < m; ++k) y[k] = x[k] + p[k].conjugate().cwiseProduct(r);
        for (std::size_t k = 0; k < m; ++k) {
            const ComplexMatrix shifted = y[k] + q[k];
            x[k] = detail::psd_part(shifted);
            q[k] = shifted - x[k];
        }
        const ComplexMatrix res = affine_residual(x);
        const double resid = max_abs(res);
        out.iterations = static_cast<std::size_t>(it);
        out.residual = resid;
        if (resid <= opt.tol) {
            out.status = FeasibilityStatus::Feasible;
            out.witnesses = x;
            return out;
        }
        if (resid > 10.0 * opt.tol && static_cast<std::size_t>(it) % opt.certificate_every == 0) {
            // Candidate dual directions: each Dykstra correction q_k is exactly
            // negative semidefinite, so -conj(q_k) / P_k is admissible for the
            // k-th coordinate; the scaled residual is the affine normal.
            std::vector<ComplexMatrix> dirs;
            ComplexMatrix total = ComplexMatrix::Zero(ni, ni);
            for (std::size_t k = 0; k < m; ++k) {
                dirs.push_back(q[k].cwiseQuotient(p[k].conjugate()));
                total += dirs.back();
            }
            dirs.push_back(total);
            dirs.push_back(res.cwiseQuotient(denom));
            for (const auto& dir : dirs) {
                if (auto cert = detail::verified_certificate(p, a, dir)) {
                    out.status = FeasibilityStatus::Infeasible;
                    out.certificate = std::move(cert);
                    return out;
                }
            }
        }
        if (static_cast<std::size_t>(it) % opt.plateau_window == 0) {
            if (window_start > 0.0 && resid > 10.0 * opt.tol &&
                std::abs(window_start - resid) <= opt.plateau_rel * window_start) {
                out.status = FeasibilityStatus::Infeasible;
                return out;
            }
            window_start = resid;
        }
    }
    out.status = FeasibilityStatus::Undecided;
    return out;
}

/// Bidisc form: nodes (lambda_i, mu_i), targets w.
inline FeasibilityResult agler_pick_feasibility(std::span<const Complex> lambda, std::span<const Complex> mu,
                                                std::span<const Complex> w, double tol = 1e-7, long budget = 20000) {
    if (lambda.size() != w.size() || mu.size() != w.size()) {
        throw InvalidInput("agler_pick_feasibility: length mismatch");
    }
    FeasibilityOptions opt;
    opt.tol = tol;
    opt.budget = budget;
    return agler_feasibility({{lambda.begin(), lambda.end()}, {mu.begin(), mu.end()}}, w, opt);
}

struct MembershipOptions {
    ToleranceConfig tol{};
    double check_tol = 1e-8; // slack on the two-point rule
    FeasibilityOptions feasibility{};
};

namespace detail {

inline bool all_equal(std::span<const Complex> w, double slack) {
    return std::all_of(w.begin(), w.end(), [&](Complex x) { return std::abs(x - w.front()) <= slack; });
}

// Two-point rule on the polydisc.
inline bool two_point_member(const DomainModel& d, const DomainPoint& z1, const DomainPoint& z2, Complex w1,
                             Complex w2, const MembershipOptions& opt) {
    const double bt = opt.tol.boundary_tol;
    if (!is_interior(w1, bt) || !is_interior(w2, bt)) return std::abs(w1 - w2) <= bt;
    return moebius_distance(w1, w2) <= cara_distance(d, z1, z2) + opt.check_tol;
}

} // namespace detail

/// Is w in the Pick body of (D, z)?
inline Membership pick_body_membership(const DomainModel& d, std::span<const DomainPoint> z, std::span<const Complex> w,
                                       const MembershipOptions& opt = {}) {
    require_distinct_points(d, z, "pick_body_membership");
    if (w.size() != z.size()) throw InvalidInput("pick_body_membership: need one target per point");
    for (auto x : w) require_closed_disc(x, "pick_body_membership target");
    const std::size_t n = z.size();
    const double bt = opt.tol.boundary_tol;

    if (detail::all_equal(w, 1e-14)) return Membership::Member;
    if (d.is_disc_like()) {
        return solvable(PickProblem(coordinate(z, 0), {w.begin(), w.end()}), opt.tol) ? Membership::Member
                                                                                   : Membership::NonMember;
    }
    // A unimodular value forces a constant function.
    for (auto x : w) {
        if (!is_interior(x, bt)) return detail::all_equal(w, bt) ? Membership::Member : Membership::NonMember;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (!detail::two_point_member(d, z[i], z[j], w[i], w[j], opt)) return Membership::NonMember;
        }
    }
    if (n <= 2) return Membership::Member;

    std::vector<std::vector<Complex>> coords;
    for (std::size_t k = 0; k < d.coord_count(); ++k) coords.push_back(coordinate(z, k));
    for (const auto& c : coords) {
        if (detail::dedupe(c).size() < n) continue;
        if (solvable(PickProblem(c, {w.begin(), w.end()}), opt.tol)) return Membership::Member;
    }
    const auto res = agler_feasibility(coords, w, opt.feasibility);
    if (res.status == FeasibilityStatus::Feasible) return Membership::Member;
    // On the bidisc an Agler decomposition exists for every member.
    if (res.status == FeasibilityStatus::Infeasible && d.coord_count() == 2) return Membership::NonMember;
    return Membership::Undecided;
}

/// Gamma is admissible for the polydisc nodes when every coordinate scaling
/// ((1 - x_i conj(x_j)) Gamma(i,j)) is PSD.
inline bool is_admissible(const ComplexMatrix& gamma, std::span<const DomainPoint> z, const ToleranceConfig& tol = {}) {
    if (z.empty()) return false;
    for (std::size_t k = 0; k < z.front().size(); ++k) {
        const auto c = coordinate(z, k);
        if (!is_psd(HermitianMatrix(detail::one_minus_outer(c).cwiseProduct(gamma)), tol)) return false;
    }
    return true;
}

/// Random admissible kernel: Schur product of the coordinate Szego kernels
/// with a random PD matrix.
inline std::optional<Kernel> random_admissible_kernel(const DomainModel& d, std::span<const DomainPoint> z,
                                                     std::mt19937_64& rng) {
    require_distinct_points(d, z, "random_admissible_kernel");
    const auto n = static_cast<Eigen::Index>(z.size());
    std::normal_distribution<double> g(0.0, 1.0);
    ComplexMatrix b(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) b(i, j) = Complex(g(rng), g(rng));
    ComplexMatrix gamma = b * b.adjoint() + 1e-3 * ComplexMatrix::Identity(n, n);
    for (std::size_t k = 0; k < d.coord_count(); ++k) {
        const auto c = coordinate(z, k);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                gamma(i, j) /= 1.0 - c[static_cast<std::size_t>(i)] * std::conj(c[static_cast<std::size_t>(j)]);
    }
    try {
        return normalize(Kernel(gamma));
    } catch (const PreconditionViolation&) {
        return std::nullopt;
    }
}

/// An admissible kernel whose ball excludes w, or nothing within budget.
inline std::optional<Kernel> admissible_separation(const DomainModel& d, std::span<const DomainPoint> z,
                                                   std::span<const Complex> w, std::size_t budget = 2000,
                                                   std::uint64_t seed = 0, const MembershipOptions& opt = {}) {
    const auto verdict = pick_body_membership(d, z, w, opt);
    if (verdict == Membership::Member) {
        throw PreconditionViolation("admissible_separation: target tuple is a member of the Pick body");
    }
    auto separates = [&](const Kernel& k) { return !membership(k, w, opt.tol); };

    std::vector<std::vector<Complex>> coords;
    for (std::size_t k = 0; k < d.coord_count(); ++k) coords.push_back(coordinate(z, k));
    for (const auto& c : coords) {
        if (detail::dedupe(c).size() < c.size()) continue;
        const auto s = szego_raw(c);
        if (is_admissible(s.matrix(), z, opt.tol) && separates(s)) return s;
    }
    if (d.is_disc_like()) return std::nullopt;

    const auto res = agler_feasibility(coords, w, opt.feasibility);
    if (res.certificate) {
        try {
            Kernel k(*res.certificate);
            if (separates(k)) return k;
        } catch (const PreconditionViolation&) {
        }
    }
    std::mt19937_64 rng(seed);
    for (std::size_t t = 0; t < budget; ++t) {
        if (auto k = random_admissible_kernel(d, z, rng); k && separates(*k)) return k;
    }
    return std::nullopt;
}

} // namespace pickbody
