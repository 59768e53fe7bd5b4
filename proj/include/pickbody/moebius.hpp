#pragma once

// Unit disc geometry: pseudohyperbolic (Moebius) distance, disc automorphisms
// and finite Blaschke products, including reconstruction of the extremal
// Blaschke interpolant by the Schur peeling recursion.

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pickbody/errors.hpp"
#include "pickbody/numlin.hpp"

namespace pickbody {

/// A point of the closed unit disc.
using DiscPoint = Complex;

inline constexpr double kClosedDiscSlack = 1e-12;

inline bool in_closed_disc(DiscPoint z) { return std::abs(z) <= 1.0 + kClosedDiscSlack; }

inline bool is_interior(DiscPoint z, double boundary_tol = 1e-8) {
    return std::abs(z) < 1.0 - boundary_tol;
}

inline bool is_finite(DiscPoint z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

inline void require_closed_disc(DiscPoint z, const char* what) {
    if (!is_finite(z) || !in_closed_disc(z)) {
        throw InvalidInput(std::string(what) + ": point outside the closed unit disc");
    }
}

/// m(a, b) = |a - b| / |1 - conj(a) b|.
inline double moebius_distance(DiscPoint a, DiscPoint b) {
    require_closed_disc(a, "moebius_distance");
    require_closed_disc(b, "moebius_distance");
    if (a == b && std::abs(a) < 1.0) {
        return 0.0;
    }
    const double denom = std::abs(1.0 - std::conj(a) * b);
    if (denom < 1e-15) {
        throw DegenerateBoundaryPair("moebius_distance: boundary pair with conj(a) b = 1");
    }
    return std::min(1.0, std::abs(a - b) / denom);
}

/// phi(z) = rotation * (z - center) / (1 - conj(center) z).
struct DiscAutomorphism {
    Complex rotation{1.0, 0.0};
    Complex center{0.0, 0.0};

    DiscAutomorphism() = default;
    DiscAutomorphism(Complex rot, Complex c) : rotation(rot / std::abs(rot)), center(c) {
        if (!(std::abs(c) < 1.0)) {
            throw InvalidInput("disc automorphism centre must lie in the open disc");
        }
    }

    Complex operator()(Complex z) const {
        return rotation * (z - center) / (1.0 - std::conj(center) * z);
    }

    DiscAutomorphism inverse() const {
        // z = (zeta/rot + c) / (1 + conj(c) zeta/rot) = rot' (zeta - c') / (1 - conj(c') zeta)
        // with c' = -rot c and rot' = 1/rot.
        return DiscAutomorphism(std::conj(rotation), -rotation * center);
    }

    std::vector<Complex> apply(std::span<const Complex> zs) const {
        std::vector<Complex> out;
        out.reserve(zs.size());
        for (auto z : zs) {
            out.push_back((*this)(z));
        }
        return out;
    }
};

/// Polynomial with coefficients in ascending order.
using Polynomial = std::vector<Complex>;

namespace detail {

inline Complex poly_eval(const Polynomial& p, Complex z) {
    Complex acc = 0.0;
    for (auto it = p.rbegin(); it != p.rend(); ++it) {
        acc = acc * z + *it;
    }
    return acc;
}

inline Polynomial poly_mul_linear(const Polynomial& p, Complex c0, Complex c1) {
    // p(z) * (c0 + c1 z)
    Polynomial out(p.size() + 1, Complex{0.0, 0.0});
    for (std::size_t k = 0; k < p.size(); ++k) {
        out[k] += c0 * p[k];
        out[k + 1] += c1 * p[k];
    }
    return out;
}

inline Polynomial poly_add(const Polynomial& a, const Polynomial& b) {
    Polynomial out(std::max(a.size(), b.size()), Complex{0.0, 0.0});
    for (std::size_t k = 0; k < a.size(); ++k) out[k] += a[k];
    for (std::size_t k = 0; k < b.size(); ++k) out[k] += b[k];
    return out;
}

inline Polynomial poly_derivative(const Polynomial& p) {
    if (p.size() <= 1) {
        return {Complex{0.0, 0.0}};
    }
    Polynomial d(p.size() - 1);
    for (std::size_t k = 1; k < p.size(); ++k) {
        d[k - 1] = static_cast<double>(k) * p[k];
    }
    return d;
}

/// Roots of a polynomial of exact degree `degree` via companion-matrix
/// eigenvalues followed by a few Newton polishing steps.
inline std::vector<Complex> poly_roots(const Polynomial& p, std::size_t degree) {
    if (degree == 0) {
        return {};
    }
    const Complex lead = p[degree];
    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(
        static_cast<Eigen::Index>(degree), static_cast<Eigen::Index>(degree));
    for (std::size_t k = 1; k < degree; ++k) {
        companion(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k - 1)) = 1.0;
    }
    for (std::size_t k = 0; k < degree; ++k) {
        companion(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(degree - 1)) = -p[k] / lead;
    }
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, false);
    std::vector<Complex> roots;
    const Polynomial trimmed(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(degree + 1));
    const Polynomial dp = poly_derivative(trimmed);
    for (Eigen::Index k = 0; k < solver.eigenvalues().size(); ++k) {
        Complex r = solver.eigenvalues()(k);
        for (int it = 0; it < 3; ++it) {
            const Complex d = poly_eval(dp, r);
            if (std::abs(d) < 1e-14) break;
            const Complex step = poly_eval(trimmed, r) / d;
            if (!is_finite(step) || std::abs(step) > 1e-6) break;
            r -= step;
        }
        roots.push_back(r);
    }
    return roots;
}

} // namespace detail

/// B(z) = constant * prod_k (z - a_k) / (1 - conj(a_k) z).
class BlaschkeProduct {
public:
    BlaschkeProduct() = default;

    BlaschkeProduct(Complex unimodular_constant, std::vector<DiscPoint> zeros)
        : constant_(unimodular_constant), zeros_(std::move(zeros)) {
        const double mod = std::abs(constant_);
        if (!is_finite(constant_) || std::abs(mod - 1.0) > 1e-9) {
            throw InvalidInput("Blaschke constant must be unimodular");
        }
        constant_ /= mod;
        for (auto a : zeros_) {
            if (!is_finite(a) || !(std::abs(a) < 1.0)) {
                throw InvalidInput("Blaschke zeros must lie in the open disc");
            }
        }
    }

    static BlaschkeProduct identity() { return BlaschkeProduct({1.0, 0.0}, {Complex{0.0, 0.0}}); }

    static BlaschkeProduct from_automorphism(const DiscAutomorphism& phi) {
        return BlaschkeProduct(phi.rotation, {phi.center});
    }

    std::size_t degree() const { return zeros_.size(); }
    Complex unimodular_constant() const { return constant_; }
    const std::vector<DiscPoint>& zeros() const { return zeros_; }

    DiscPoint operator()(DiscPoint z) const {
        Complex value = constant_;
        for (auto a : zeros_) {
            value *= (z - a) / (1.0 - std::conj(a) * z);
        }
        return value;
    }

    std::vector<DiscPoint> evaluate(std::span<const DiscPoint> zs) const {
        std::vector<DiscPoint> out;
        out.reserve(zs.size());
        for (auto z : zs) out.push_back((*this)(z));
        return out;
    }

    /// Numerator constant * prod (z - a_k), ascending coefficients.
    Polynomial numerator() const {
        Polynomial p{constant_};
        for (auto a : zeros_) p = detail::poly_mul_linear(p, -a, 1.0);
        return p;
    }

    /// Denominator prod (1 - conj(a_k) z), ascending coefficients.
    Polynomial denominator() const {
        Polynomial q{Complex{1.0, 0.0}};
        for (auto a : zeros_) q = detail::poly_mul_linear(q, 1.0, -std::conj(a));
        return q;
    }

private:
    Complex constant_{1.0, 0.0};
    std::vector<DiscPoint> zeros_;
};

inline DiscPoint blaschke_eval(const BlaschkeProduct& b, DiscPoint z) {
    require_closed_disc(z, "blaschke_eval");
    return b(z);
}

/// Reconstructs the Blaschke product of degree `rank` interpolating
/// nodes[j] -> targets[j]. The caller certifies that the Pick matrix is PSD
/// with numeric rank `rank` < n.
///
/// Schur recursion: while the leading target is interior, replace the problem
/// by  w_j <- phi_{w_0}(w_j) / b_{lambda_0}(lambda_j)  on the remaining nodes.
/// After `rank` steps the remaining targets are a single unimodular constant.
/// The product is then re-assembled as a rational function and factored.
inline BlaschkeProduct blaschke_from_nodes(std::span<const DiscPoint> nodes,
                                           std::span<const DiscPoint> targets, std::size_t rank,
                                           const ToleranceConfig& tol = {}) {
    const std::size_t n = nodes.size();
    if (n == 0 || targets.size() != n) {
        throw InvalidInput("blaschke_from_nodes: need equally many nodes and targets");
    }
    if (rank >= n) {
        throw InvalidInput("blaschke_from_nodes: rank must be smaller than the number of nodes");
    }
    for (auto z : nodes) {
        if (!is_finite(z) || !(std::abs(z) < 1.0)) {
            throw InvalidInput("blaschke_from_nodes: nodes must be interior");
        }
    }
    for (auto w : targets) require_closed_disc(w, "blaschke_from_nodes");

    constexpr double kConstantSlack = 1e-6;
    auto constant_fit = [&](std::span<const DiscPoint> rest) -> Complex {
        const Complex c = rest.front();
        if (std::abs(std::abs(c) - 1.0) > kConstantSlack) {
            throw ReconstructionFailure("blaschke_from_nodes: residual problem is not a unimodular constant");
        }
        for (auto w : rest) {
            if (std::abs(w - c) > kConstantSlack) {
                throw ReconstructionFailure("blaschke_from_nodes: residual targets disagree");
            }
        }
        return c / std::abs(c);
    };

    // Boundary targets force the constant solution.
    for (auto w : targets) {
        if (!is_interior(w, tol.boundary_tol)) {
            const Complex c = constant_fit(targets);
            return BlaschkeProduct(c, {});
        }
    }

    std::vector<DiscPoint> w(targets.begin(), targets.end());
    std::vector<DiscPoint> peeled_targets;
    for (std::size_t k = 0; k < rank; ++k) {
        const Complex wk = w[k];
        if (!(std::abs(wk) < 1.0)) {
            throw ReconstructionFailure("blaschke_from_nodes: boundary value reached before full degree");
        }
        peeled_targets.push_back(wk);
        const Complex lk = nodes[k];
        for (std::size_t j = k + 1; j < n; ++j) {
            const Complex num = (w[j] - wk) / (1.0 - std::conj(wk) * w[j]);
            const Complex den = (nodes[j] - lk) / (1.0 - std::conj(lk) * nodes[j]);
            w[j] = num / den;
            if (!is_finite(w[j]) || std::abs(w[j]) > 1.0 + kConstantSlack) {
                throw ReconstructionFailure("blaschke_from_nodes: Schur parameter left the disc");
            }
        }
    }
    const Complex c = constant_fit(std::span<const DiscPoint>(w).subspan(rank));

    // f_k = (b_k f_{k+1} + w_k) / (1 + conj(w_k) b_k f_{k+1}),  b_k(z) = (z - l_k)/(1 - conj(l_k) z)
    Polynomial num{c};
    Polynomial den{Complex{1.0, 0.0}};
    for (std::size_t kk = rank; kk-- > 0;) {
        const Complex lk = nodes[kk];
        const Complex wk = peeled_targets[kk];
        const Polynomial zp = detail::poly_mul_linear(num, -lk, 1.0);
        const Polynomial bq = detail::poly_mul_linear(den, 1.0, -std::conj(lk));
        Polynomial new_num = zp;
        Polynomial new_den = bq;
        for (std::size_t i = 0; i < bq.size(); ++i) new_num[i] += wk * bq[i];
        for (std::size_t i = 0; i < zp.size(); ++i) new_den[i] += std::conj(wk) * zp[i];
        num = std::move(new_num);
        den = std::move(new_den);
    }
    auto zeros = detail::poly_roots(num, rank);
    for (auto& a : zeros) {
        if (!(std::abs(a) < 1.0)) {
            throw ReconstructionFailure("blaschke_from_nodes: recovered zero outside the disc");
        }
    }
    // Fix the unimodular constant on the unit circle, where every factor has modulus one.
    const Complex probe{1.0, 0.0};
    Complex value = detail::poly_eval(num, probe) / detail::poly_eval(den, probe);
    Complex factors = 1.0;
    for (auto a : zeros) factors *= (probe - a) / (1.0 - std::conj(a) * probe);
    Complex constant = value / factors;
    BlaschkeProduct result(constant / std::abs(constant), std::move(zeros));

    for (std::size_t j = 0; j < n; ++j) {
        if (std::abs(result(nodes[j]) - targets[j]) > 1e-8) {
            throw ReconstructionFailure("blaschke_from_nodes: interpolation check failed");
        }
    }
    return result;
}

} // namespace pickbody
