#pragma once

// Small dense complex Hermitian linear algebra: a cyclic Jacobi eigensolver,
// tolerance-aware PSD / rank tests and Gram factorisation.
//
// All tolerances are relative to max(1, ||A||_max).

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pickbody/errors.hpp"

namespace pickbody {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

struct ToleranceConfig {
    double psd_tol = 1e-10;
    double rank_tol = 1e-8;
    double boundary_tol = 1e-8;

    void validate() const {
        if (!(psd_tol >= 0.0) || !(rank_tol >= 0.0) || !(boundary_tol >= 0.0)) {
            throw InvalidInput("tolerances must be non-negative");
        }
    }
};

inline bool all_finite(const ComplexMatrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) {
                return false;
            }
        }
    }
    return true;
}

inline double max_abs(const ComplexMatrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// Square complex matrix stored in symmetrised form (A + A*)/2.
class HermitianMatrix {
public:
    HermitianMatrix() = default;

    explicit HermitianMatrix(const ComplexMatrix& a) {
        if (a.rows() < 1 || a.rows() != a.cols()) {
            throw InvalidInput("Hermitian matrix must be square with dimension >= 1");
        }
        if (!all_finite(a)) {
            throw InvalidInput("matrix has non-finite entries");
        }
        m_ = (a + a.adjoint()) * 0.5;
        for (Eigen::Index i = 0; i < m_.rows(); ++i) {
            m_(i, i) = Complex(m_(i, i).real(), 0.0);
        }
    }

    static HermitianMatrix identity(Eigen::Index n) {
        return HermitianMatrix(ComplexMatrix::Identity(n, n));
    }

    Eigen::Index dim() const { return m_.rows(); }
    const ComplexMatrix& matrix() const { return m_; }
    Complex operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
    double max_abs() const { return pickbody::max_abs(m_); }

    /// max(1, ||A||_max), the scale all relative tolerances refer to.
    double scale() const { return std::max(1.0, max_abs()); }

private:
    ComplexMatrix m_;
};

struct EigenResult {
    RealVector eigenvalues;     // ascending
    ComplexMatrix eigenvectors; // orthonormal columns
};

namespace detail {

// One cyclic Jacobi rotation zeroing a(p,q). The rotation is the product of a
// phase matrix that makes a(p,q) real and a classical real Givens rotation.
inline void jacobi_rotate(ComplexMatrix& a, ComplexMatrix& v, Eigen::Index p, Eigen::Index q) {
    const Complex apq = a(p, q);
    const double r = std::abs(apq);
    if (r == 0.0) {
        return;
    }
    const Complex phase = apq / r;
    const double app = a(p, p).real();
    const double aqq = a(q, q).real();
    const double theta = (aqq - app) / (2.0 * r);
    double t;
    if (std::abs(theta) > 1e150) {
        t = 0.5 / theta;
    } else {
        t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
    }
    const double c = 1.0 / std::sqrt(1.0 + t * t);
    const double s = t * c;
    const Complex jqp = -s * std::conj(phase); // J(q,p)
    const Complex jqq = c * std::conj(phase);  // J(q,q)

    const Eigen::Index n = a.rows();
    // A <- A J
    for (Eigen::Index k = 0; k < n; ++k) {
        const Complex akp = a(k, p);
        const Complex akq = a(k, q);
        a(k, p) = c * akp + jqp * akq;
        a(k, q) = s * akp + jqq * akq;
    }
    // A <- J* A
    for (Eigen::Index k = 0; k < n; ++k) {
        const Complex apk = a(p, k);
        const Complex aqk = a(q, k);
        a(p, k) = c * apk + std::conj(jqp) * aqk;
        a(q, k) = s * apk + std::conj(jqq) * aqk;
    }
    a(p, q) = 0.0;
    a(q, p) = 0.0;
    a(p, p) = Complex(a(p, p).real(), 0.0);
    a(q, q) = Complex(a(q, q).real(), 0.0);
    // V <- V J
    for (Eigen::Index k = 0; k < n; ++k) {
        const Complex vkp = v(k, p);
        const Complex vkq = v(k, q);
        v(k, p) = c * vkp + jqp * vkq;
        v(k, q) = s * vkp + jqq * vkq;
    }
}

} // namespace detail

/// Full eigendecomposition by cyclic complex Jacobi sweeps.
inline EigenResult hermitian_eigen(const HermitianMatrix& A) {
    const Eigen::Index n = A.dim();
    if (n < 1 || !all_finite(A.matrix())) {
        throw InvalidInput("hermitian_eigen: malformed matrix");
    }
    ComplexMatrix a = A.matrix();
    ComplexMatrix v = ComplexMatrix::Identity(n, n);
    const double frob2 = a.squaredNorm();

    constexpr int kMaxSweeps = 100;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double off = 0.0;
        for (Eigen::Index q = 1; q < n; ++q) {
            for (Eigen::Index p = 0; p < q; ++p) {
                off += std::norm(a(p, q));
            }
        }
        if (off == 0.0 || off <= 1e-34 * frob2) {
            break;
        }
        for (Eigen::Index p = 0; p + 1 < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                detail::jacobi_rotate(a, v, p, q);
            }
        }
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
        return a(x, x).real() < a(y, y).real();
    });
    EigenResult out;
    out.eigenvalues.resize(n);
    out.eigenvectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto src = order[static_cast<std::size_t>(k)];
        out.eigenvalues(k) = a(src, src).real();
        out.eigenvectors.col(k) = v.col(src);
    }
    return out;
}

inline double min_eigenvalue(const HermitianMatrix& A) {
    return hermitian_eigen(A).eigenvalues(0);
}

inline bool is_psd(const HermitianMatrix& A, const ToleranceConfig& tol = {}) {
    return min_eigenvalue(A) >= -tol.psd_tol * A.scale();
}

/// Number of eigenvalues above rank_tol * max(1, ||A||_max).
inline std::size_t numeric_rank(const HermitianMatrix& A, const ToleranceConfig& tol = {}) {
    const auto eig = hermitian_eigen(A);
    const double scale = A.scale();
    if (eig.eigenvalues(0) < -tol.psd_tol * scale) {
        throw PreconditionViolation("numeric_rank: matrix is not positive semidefinite");
    }
    std::size_t rank = 0;
    for (Eigen::Index k = 0; k < eig.eigenvalues.size(); ++k) {
        if (eig.eigenvalues(k) > tol.rank_tol * scale) {
            ++rank;
        }
    }
    return rank;
}

/// Returns G with G* G = K; column j of G is the vector k_j with
/// K(i, j) = <k_j, k_i>.
inline ComplexMatrix gram_columns(const HermitianMatrix& K, const ToleranceConfig& tol = {}) {
    const auto eig = hermitian_eigen(K);
    if (eig.eigenvalues(0) <= tol.psd_tol * K.scale()) {
        throw PreconditionViolation("gram_columns: kernel is not positive definite");
    }
    const RealVector root = eig.eigenvalues.cwiseSqrt();
    return root.asDiagonal() * eig.eigenvectors.adjoint();
}

} // namespace pickbody
