#pragma once

// Kernel balls D_K = { w : ((1 - w_i conj(w_j)) K(i,j)) >= 0 } for a positive
// definite kernel K, the equivalent operator picture ||T_w|| <= 1 with
// T_w k_j = conj(w_j) k_j, Szegő kernels and their recognition, and the
// defect-rank classification of boundary points.

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "pickbody/errors.hpp"
#include "pickbody/moebius.hpp"
#include "pickbody/numlin.hpp"

namespace pickbody {

/// Strictly increasing, non-empty list of 0-based indices into 0..n-1.
class TupleIndex {
public:
    TupleIndex(std::vector<std::size_t> indices, std::size_t n) : idx_(std::move(indices)) {
        if (idx_.empty()) {
            throw InvalidInput("TupleIndex: empty index tuple");
        }
        for (std::size_t k = 0; k < idx_.size(); ++k) {
            if (idx_[k] >= n) {
                throw InvalidInput("TupleIndex: index out of range");
            }
            if (k > 0 && idx_[k] <= idx_[k - 1]) {
                throw InvalidInput("TupleIndex: indices must be strictly increasing");
            }
        }
    }

    static TupleIndex full(std::size_t n) {
        std::vector<std::size_t> all(n);
        for (std::size_t k = 0; k < n; ++k) all[k] = k;
        return TupleIndex(std::move(all), n);
    }

    /// All non-empty proper index tuples of 0..n-1, ordered by size and then
    /// lexicographically.
    static std::vector<TupleIndex> proper_tuples(std::size_t n) {
        std::vector<TupleIndex> out;
        for (std::size_t size = 1; size < n; ++size) {
            for (unsigned mask = 1; mask < (1u << n); ++mask) {
                if (static_cast<std::size_t>(std::popcount(mask)) != size) continue;
                std::vector<std::size_t> sel;
                for (std::size_t k = 0; k < n; ++k) {
                    if (mask & (1u << k)) sel.push_back(k);
                }
                out.emplace_back(std::move(sel), n);
            }
        }
        std::stable_sort(out.begin(), out.end(), [](const TupleIndex& a, const TupleIndex& b) {
            if (a.size() != b.size()) return a.size() < b.size();
            return a.indices() < b.indices();
        });
        return out;
    }

    std::size_t size() const { return idx_.size(); }
    const std::vector<std::size_t>& indices() const { return idx_; }
    std::size_t operator[](std::size_t k) const { return idx_[k]; }

    /// Indices of 0..n-1 not in this tuple.
    std::vector<std::size_t> complement(std::size_t n) const {
        std::vector<std::size_t> out;
        for (std::size_t k = 0, p = 0; k < n; ++k) {
            if (p < idx_.size() && idx_[p] == k) {
                ++p;
            } else {
                out.push_back(k);
            }
        }
        return out;
    }

    friend bool operator==(const TupleIndex&, const TupleIndex&) = default;

private:
    std::vector<std::size_t> idx_;
};

/// Labeled positive definite matrix.
class Kernel {
public:
    explicit Kernel(HermitianMatrix m, std::vector<std::string> labels = {}, const ToleranceConfig& tol = {})
        : m_(std::move(m)), labels_(std::move(labels)) {
        const auto n = static_cast<std::size_t>(m_.dim());
        if (labels_.empty()) {
            for (std::size_t k = 0; k < n; ++k) labels_.push_back("z" + std::to_string(k + 1));
        }
        if (labels_.size() != n) {
            throw InvalidInput("Kernel: label count does not match dimension");
        }
        if (min_eigenvalue(m_) <= tol.psd_tol * m_.scale()) {
            throw PreconditionViolation("Kernel: matrix is not positive definite");
        }
    }

    explicit Kernel(const ComplexMatrix& m, std::vector<std::string> labels = {}, const ToleranceConfig& tol = {})
        : Kernel(HermitianMatrix(m), std::move(labels), tol) {}

    std::size_t size() const { return static_cast<std::size_t>(m_.dim()); }
    const HermitianMatrix& hermitian() const { return m_; }
    const ComplexMatrix& matrix() const { return m_.matrix(); }
    Complex operator()(std::size_t i, std::size_t j) const {
        return m_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    const std::vector<std::string>& labels() const { return labels_; }

    bool normalized() const {
        for (Eigen::Index i = 0; i < m_.dim(); ++i) {
            if (std::abs(m_(i, i).real() - 1.0) > 1e-12) return false;
        }
        return true;
    }

private:
    HermitianMatrix m_;
    std::vector<std::string> labels_;
};

/// D K D with D = diag(K(i,i)^{-1/2}); the kernel ball is unchanged.
inline Kernel normalize(const Kernel& k) {
    const auto n = static_cast<Eigen::Index>(k.size());
    RealVector d(n);
    for (Eigen::Index i = 0; i < n; ++i) d(i) = 1.0 / std::sqrt(k.matrix()(i, i).real());
    ComplexMatrix m = d.asDiagonal() * k.matrix() * d.asDiagonal();
    for (Eigen::Index i = 0; i < n; ++i) m(i, i) = 1.0;
    return Kernel(m, k.labels());
}

inline void require_length(const Kernel& k, std::size_t len, const char* what) {
    if (len != k.size()) {
        throw InvalidInput(std::string(what) + ": tuple length does not match kernel size");
    }
}

/// ((1 - w_i conj(w_j)) K(i,j)).
inline HermitianMatrix schur_scale(const Kernel& k, std::span<const DiscPoint> w) {
    require_length(k, w.size(), "schur_scale");
    const auto n = static_cast<Eigen::Index>(k.size());
    ComplexMatrix s(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            s(i, j) = (1.0 - w[static_cast<std::size_t>(i)] * std::conj(w[static_cast<std::size_t>(j)])) *
                      k.matrix()(i, j);
        }
    }
    return HermitianMatrix(s);
}

inline bool membership(const Kernel& k, std::span<const DiscPoint> w, const ToleranceConfig& tol = {}) {
    return is_psd(schur_scale(k, w), tol);
}

/// Smallest eigenvalue of the Schur-scaled matrix, relative to its scale.
inline double membership_margin(const Kernel& k, std::span<const DiscPoint> w) {
    const auto s = schur_scale(k, w);
    return min_eigenvalue(s) / s.scale();
}

struct DefectReport {
    double operator_norm = 0.0;   // ||T_w||
    std::size_t defect_rank = 0;  // rank of I - T_w* T_w
    bool boundary = false;        // | ||T_w|| - 1 | <= boundary_tol
};

namespace detail {

/// Matrix of T_w* T_w in the orthonormal frame G = L* (K = L L*):
///   L^{-1} diag(w) K diag(conj w) L^{-*}.
inline HermitianMatrix operator_gram(const Kernel& k, std::span<const DiscPoint> w) {
    require_length(k, w.size(), "defect");
    const auto n = static_cast<Eigen::Index>(k.size());
    Eigen::LLT<ComplexMatrix> llt(k.matrix());
    if (llt.info() != Eigen::Success) {
        throw PreconditionViolation("defect: kernel is not positive definite");
    }
    ComplexMatrix a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            a(i, j) = w[static_cast<std::size_t>(i)] * k.matrix()(i, j) *
                      std::conj(w[static_cast<std::size_t>(j)]);
        }
    }
    const ComplexMatrix y = llt.matrixL().solve(a);             // L^{-1} A
    const ComplexMatrix m = llt.matrixL().solve(y.adjoint());  // L^{-1} A L^{-*}
    return HermitianMatrix(m);
}

} // namespace detail

inline double operator_norm(const Kernel& k, std::span<const DiscPoint> w) {
    const auto eig = hermitian_eigen(detail::operator_gram(k, w));
    return std::sqrt(std::max(0.0, eig.eigenvalues(eig.eigenvalues.size() - 1)));
}

inline DefectReport defect(const Kernel& k, std::span<const DiscPoint> w, const ToleranceConfig& tol = {}) {
    const auto tt = detail::operator_gram(k, w);
    const auto eig = hermitian_eigen(tt);
    DefectReport rep;
    rep.operator_norm = std::sqrt(std::max(0.0, eig.eigenvalues(eig.eigenvalues.size() - 1)));
    rep.boundary = std::abs(rep.operator_norm - 1.0) <= tol.boundary_tol;
    // Eigenvalues of I - T*T are 1 - mu_k.
    const double scale = std::max(1.0, HermitianMatrix(ComplexMatrix::Identity(tt.dim(), tt.dim()) - tt.matrix()).max_abs());
    for (Eigen::Index j = 0; j < eig.eigenvalues.size(); ++j) {
        if (1.0 - eig.eigenvalues(j) > tol.rank_tol * scale) ++rep.defect_rank;
    }
    return rep;
}

/// r* = 1 / ||T_w||; r* w lies on the boundary of D_K.
inline double boundary_scale(const Kernel& k, std::span<const DiscPoint> w) {
    require_length(k, w.size(), "boundary_scale");
    if (std::all_of(w.begin(), w.end(), [](DiscPoint x) { return x == Complex{0.0, 0.0}; })) {
        throw NoBoundaryScale("boundary_scale: the zero tuple has no boundary scaling");
    }
    const double norm = operator_norm(k, w);
    if (!(norm > 0.0)) {
        throw NoBoundaryScale("boundary_scale: operator norm vanishes");
    }
    return 1.0 / norm;
}

inline std::vector<DiscPoint> scaled(std::span<const DiscPoint> w, double r) {
    std::vector<DiscPoint> out(w.begin(), w.end());
    for (auto& x : out) x *= r;
    return out;
}

inline Kernel restrict(const Kernel& k, const TupleIndex& idx) {
    const auto m = static_cast<Eigen::Index>(idx.size());
    ComplexMatrix sub(m, m);
    std::vector<std::string> labels;
    for (Eigen::Index a = 0; a < m; ++a) {
        if (idx[static_cast<std::size_t>(a)] >= k.size()) {
            throw InvalidInput("restrict: index out of range");
        }
        labels.push_back(k.labels()[idx[static_cast<std::size_t>(a)]]);
        for (Eigen::Index b = 0; b < m; ++b) {
            sub(a, b) = k(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
        }
    }
    return Kernel(sub, std::move(labels));
}

template <typename T>
std::vector<T> project(std::span<const T> w, const TupleIndex& idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (auto i : idx.indices()) {
        if (i >= w.size()) throw InvalidInput("project: index out of range");
        out.push_back(w[i]);
    }
    return out;
}

template <typename T>
std::vector<T> project(const std::vector<T>& w, const TupleIndex& idx) {
    return project(std::span<const T>(w), idx);
}

inline void require_distinct_interior(std::span<const DiscPoint> alpha, const char* what) {
    for (auto a : alpha) {
        if (!is_finite(a) || !(std::abs(a) < 1.0)) {
            throw InvalidInput(std::string(what) + ": nodes must lie in the open disc");
        }
    }
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        for (std::size_t j = i + 1; j < alpha.size(); ++j) {
            if (moebius_distance(alpha[i], alpha[j]) <= 1e-12) {
                throw InvalidInput(std::string(what) + ": repeated node");
            }
        }
    }
}

/// The raw Szegő matrix 1 / (1 - alpha_i conj(alpha_j)).
inline Kernel szego_raw(std::span<const DiscPoint> alpha) {
    require_distinct_interior(alpha, "szego_raw");
    const auto n = static_cast<Eigen::Index>(alpha.size());
    ComplexMatrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            m(i, j) = 1.0 / (1.0 - alpha[static_cast<std::size_t>(i)] * std::conj(alpha[static_cast<std::size_t>(j)]));
        }
    }
    return Kernel(m);
}

/// sqrt(1-|a|^2) sqrt(1-|b|^2) / (1 - a conj(b)).
inline Complex szego_entry(DiscPoint a, DiscPoint b) {
    return std::sqrt(1.0 - std::norm(a)) * std::sqrt(1.0 - std::norm(b)) / (1.0 - a * std::conj(b));
}

/// Normalised phase-modulated Szegő kernel
///   K(l,m) = exp(i(theta_l - theta_m)) sqrt(1-|a_l|^2) sqrt(1-|a_m|^2) / (1 - a_l conj(a_m)).
inline Kernel szego_kernel(std::span<const DiscPoint> alpha, std::span<const double> theta) {
    if (alpha.empty() || theta.size() != alpha.size()) {
        throw InvalidInput("szego_kernel: need as many phases as nodes");
    }
    require_distinct_interior(alpha, "szego_kernel");
    const auto n = static_cast<Eigen::Index>(alpha.size());
    ComplexMatrix m(n, n);
    for (Eigen::Index l = 0; l < n; ++l) {
        for (Eigen::Index k = 0; k < n; ++k) {
            const auto ul = static_cast<std::size_t>(l);
            const auto uk = static_cast<std::size_t>(k);
            m(l, k) = std::polar(1.0, theta[ul] - theta[uk]) * szego_entry(alpha[ul], alpha[uk]);
        }
        m(l, l) = 1.0;
    }
    return Kernel(m);
}

inline Kernel szego_kernel(std::span<const DiscPoint> alpha) {
    std::vector<double> zero(alpha.size(), 0.0);
    return szego_kernel(alpha, zero);
}

struct SzegoForm {
    std::vector<DiscPoint> alpha; // alpha[0] = 0, alpha[1] real positive
    std::vector<double> theta;    // theta[0] = 0
    double residual = 0.0;        // max |szego_kernel(alpha, theta) - K|
};

inline constexpr double kRecognitionTolerance = 1e-7;

namespace detail {

// Points at modulus r whose Moebius distance to the real point a > 0 is rho.
inline std::vector<Complex> moebius_circle_intersection(double a, double r, double rho) {
    const double denom = 2.0 * a * r * (1.0 - rho * rho);
    if (!(denom > 0.0)) return {};
    double c = (r * r + a * a - rho * rho - rho * rho * a * a * r * r) / denom;
    if (std::abs(c) > 1.0 + 1e-9) return {};
    c = std::clamp(c, -1.0, 1.0);
    const double phi = std::acos(c);
    if (phi < 1e-14 || std::numbers::pi - phi < 1e-14) return {std::polar(r, phi)};
    return {std::polar(r, phi), std::polar(r, -phi)};
}

inline std::optional<SzegoForm> finish_recognition(const Kernel& k, std::vector<DiscPoint> alpha) {
    const std::size_t n = alpha.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::abs(alpha[i] - alpha[j]) <= 1e-12) return std::nullopt;
        }
    }
    std::vector<double> theta(n, 0.0);
    for (std::size_t m = 1; m < n; ++m) theta[m] = -std::arg(k(0, m));
    double residual = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        for (std::size_t m = 0; m < n; ++m) {
            const Complex model = l == m ? Complex{1.0, 0.0}
                                         : std::polar(1.0, theta[l] - theta[m]) * szego_entry(alpha[l], alpha[m]);
            residual = std::max(residual, std::abs(model - k(l, m)));
        }
    }
    return SzegoForm{std::move(alpha), std::move(theta), residual};
}

} // namespace detail

/// Recognises a normalised kernel of the form szego_kernel(alpha, theta) and
/// returns the canonical representative (alpha_1 = 0, alpha_2 > 0, theta_1 = 0,
/// first non-real alpha in the upper half plane or its mirror image).
inline std::optional<SzegoForm> szego_recognition(const Kernel& k, const ToleranceConfig& tol = {}) {
    (void)tol;
    if (!k.normalized()) {
        throw PreconditionViolation("szego_recognition: kernel must have unit diagonal");
    }
    const std::size_t n = k.size();
    if (n == 1) {
        return SzegoForm{{Complex{0.0, 0.0}}, {0.0}, 0.0};
    }
    // Target Moebius distances from the entry moduli.
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (std::size_t l = 0; l < n; ++l) {
        for (std::size_t m = l + 1; m < n; ++m) {
            const double mod = std::abs(k(l, m));
            if (mod >= 1.0) return std::nullopt;
            const double d = std::sqrt(std::max(0.0, 1.0 - mod * mod));
            if (d >= 1.0 - 1e-12 || d <= 1e-12) return std::nullopt;
            dist[l][m] = dist[m][l] = d;
        }
    }

    std::vector<DiscPoint> alpha(n);
    alpha[0] = 0.0;
    alpha[1] = dist[0][1];
    bool have_nonreal = false;
    for (std::size_t kk = 2; kk < n; ++kk) {
        auto candidates = detail::moebius_circle_intersection(dist[0][1], dist[0][kk], dist[1][kk]);
        if (candidates.empty()) return std::nullopt;
        std::size_t best = 0;
        if (candidates.size() == 2) {
            if (!have_nonreal) {
                best = 0; // upper half plane
            } else {
                double best_err = std::numeric_limits<double>::infinity();
                for (std::size_t c = 0; c < candidates.size(); ++c) {
                    double err = 0.0;
                    for (std::size_t j = 2; j < kk; ++j) {
                        err += std::abs(moebius_distance(candidates[c], alpha[j]) - dist[j][kk]);
                    }
                    if (err < best_err) {
                        best_err = err;
                        best = c;
                    }
                }
            }
            have_nonreal = true;
        }
        alpha[kk] = candidates[best];
    }

    std::optional<SzegoForm> best_form;
    for (int mirror = 0; mirror < 2; ++mirror) {
        std::vector<DiscPoint> a = alpha;
        if (mirror == 1) {
            for (auto& x : a) x = std::conj(x);
        }
        auto form = detail::finish_recognition(k, std::move(a));
        if (form && (!best_form || form->residual < best_form->residual)) best_form = std::move(form);
    }
    if (!best_form || best_form->residual > kRecognitionTolerance) return std::nullopt;
    return best_form;
}

enum class SingularKind { Rank1, Rank2 };

struct SingularClassification {
    SingularKind kind = SingularKind::Rank2;
    std::size_t defect_rank = 0;
    std::vector<Complex> c;            // Rank1: K(i,j) = conj(c_i) c_j / (1 - a_i conj(a_j))
    std::optional<Kernel> alpha_kernel; // Rank1 with distinct alpha
    double residual = 0.0;             // Rank1 reconstruction residual
    bool alpha_distinct = false;
};

/// Classifies a boundary point alpha in D^3 of a 3x3 kernel ball by the rank of
/// I - T_alpha* T_alpha: rank one gives the Szegő form of K at alpha, rank two
/// a smooth point.
inline SingularClassification singular_classify(const Kernel& k, std::span<const DiscPoint> alpha,
                                                const ToleranceConfig& tol = {}) {
    if (k.size() != 3 || alpha.size() != 3) {
        throw InvalidInput("singular_classify: expects a 3x3 kernel and a point of D^3");
    }
    for (auto a : alpha) {
        if (!is_finite(a) || !(std::abs(a) < 1.0)) {
            throw PreconditionViolation("singular_classify: point must lie in the open tridisc");
        }
    }
    const auto rep = defect(k, alpha, tol);
    if (!rep.boundary) {
        throw PreconditionViolation("singular_classify: point is not on the boundary of the kernel ball");
    }
    SingularClassification out;
    out.defect_rank = rep.defect_rank;
    if (rep.defect_rank == 2) {
        out.kind = SingularKind::Rank2;
        return out;
    }
    if (rep.defect_rank != 1) {
        throw PreconditionViolation("singular_classify: unexpected defect rank " + std::to_string(rep.defect_rank));
    }
    out.kind = SingularKind::Rank1;
    const auto s = schur_scale(k, alpha);
    const auto eig = hermitian_eigen(s);
    const Eigen::Index top = eig.eigenvalues.size() - 1;
    const ComplexVector u = std::sqrt(std::max(0.0, eig.eigenvalues(top))) * eig.eigenvectors.col(top);
    for (Eigen::Index i = 0; i < u.size(); ++i) out.c.push_back(std::conj(u(i)));

    ComplexMatrix model(3, 3);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            model(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                std::conj(out.c[i]) * out.c[j] / (1.0 - alpha[i] * std::conj(alpha[j]));
        }
    }
    out.residual = max_abs(model - k.matrix());
    out.alpha_distinct = true;
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = i + 1; j < 3; ++j) {
            if (std::abs(alpha[i] - alpha[j]) <= 1e-9) out.alpha_distinct = false;
        }
    }
    if (out.alpha_distinct) {
        try {
            out.alpha_kernel = Kernel(model, k.labels());
        } catch (const Error&) {
            out.alpha_kernel.reset();
        }
    }
    return out;
}

} // namespace pickbody
