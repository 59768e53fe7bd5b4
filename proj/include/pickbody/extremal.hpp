#pragma once

// Extremal kernels: boundary lifts, sampled extremality verdicts, and the
// numerical checks relating extremal kernels to Pick bodies.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pickbody/cara.hpp"
#include "pickbody/errors.hpp"
#include "pickbody/kernel_ball.hpp"
#include "pickbody/moebius.hpp"
#include "pickbody/numlin.hpp"
#include "pickbody/pick_disc.hpp"

namespace pickbody {

struct LiftOptions {
    ToleranceConfig tol{};
    std::size_t budget = 4000; // objective evaluations
    std::size_t starts = 8;
    std::uint64_t seed = 0;
};

enum class LiftStatus { Lifted, Counterexample, Undecided };

inline const char* to_string(LiftStatus s) {
    switch (s) {
    case LiftStatus::Lifted: return "Lifted";
    case LiftStatus::Counterexample: return "Counterexample";
    case LiftStatus::Undecided: return "Undecided";
    }
    return "?";
}

struct LiftResult {
    LiftStatus status = LiftStatus::Undecided;
    std::vector<Complex> w;   // best full tuple found
    double best_min_eig = 0;  // lambda_min of the Schur-scaled matrix at w
    double upper_bound = 0;   // certified bound on lambda_min over all completions
    std::size_t evaluations = 0;
};

namespace detail {

// Real coordinates 2f, 2f+1 of the free complex coordinate f.
inline double real_coord(const std::vector<Complex>& x, std::size_t c) {
    return c % 2 == 0 ? x[c / 2].real() : x[c / 2].imag();
}

inline void set_real_coord(std::vector<Complex>& x, std::size_t c, double v) {
    Complex& z = x[c / 2];
    z = c % 2 == 0 ? Complex(v, z.imag()) : Complex(z.real(), v);
    if (std::abs(z) > 1.0) z /= std::abs(z);
}

// Coordinate-wise quadratic-fit pattern search for a maximum over the closed
// polydisc. Stops at `target`, at step 1e-13 or when the budget is spent.
inline double pattern_search(const std::function<double(const std::vector<Complex>&)>& phi, std::vector<Complex>& x,
                             double step, double target, std::size_t& evals, std::size_t max_evals) {
    double f = phi(x);
    ++evals;
    const std::size_t dims = 2 * x.size();
    while (step > 1e-13 && evals < max_evals && f < target) {
        bool improved = false;
        for (std::size_t c = 0; c < dims && evals < max_evals; ++c) {
            const double t = real_coord(x, c);
            auto at = [&](double v) {
                auto y = x;
                set_real_coord(y, c, v);
                ++evals;
                return std::make_pair(phi(y), y);
            };
            auto [fm, ym] = at(t - step);
            auto [fp, yp] = at(t + step);
            const double curv = fp - 2.0 * f + fm;
            double cand = curv < 0.0 ? t + step * (fm - fp) / (2.0 * curv) : (fp > fm ? t + 2.0 * step : t - 2.0 * step);
            cand = std::clamp(cand, t - 2.0 * step, t + 2.0 * step);
            auto [fc, yc] = at(cand);
            double best = f;
            std::vector<Complex>* arg = nullptr;
            if (fm > best) best = fm, arg = &ym;
            if (fp > best) best = fp, arg = &yp;
            if (fc > best) best = fc, arg = &yc;
            if (arg != nullptr) {
                x = *arg;
                f = best;
                improved = true;
            }
        }
        if (!improved) step *= 0.5;
    }
    return f;
}

// Center plus rings of radius 1/2 and 1 with 8 points each.
inline std::vector<Complex> coarse_grid() {
    std::vector<Complex> g{0.0};
    for (double r : {0.5, 1.0}) {
        for (int k = 0; k < 8; ++k) g.push_back(std::polar(r, k * std::numbers::pi / 4.0));
    }
    return g;
}

inline ComplexMatrix submatrix(const ComplexMatrix& a, std::span<const std::size_t> rows,
                               std::span<const std::size_t> cols) {
    ComplexMatrix s(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                a(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(cols[j]));
    return s;
}

// Upper bound for lambda_min(S(w)) valid for every completion of w_sub:
// with C the Schur complement of K_FF and v the bottom eigenvector of
// S_C(w_sub), the test vector u = (v, -K_FF^{-1} K_FI v) gives
// u* S(w) u <= v* S_C(w_sub) v.
inline double completion_upper_bound(const Kernel& k, const TupleIndex& idx, std::span<const Complex> w_sub) {
    const auto& in = idx.indices();
    const auto out = idx.complement(k.size());
    const ComplexMatrix kii = submatrix(k.matrix(), in, in);
    const ComplexMatrix kif = submatrix(k.matrix(), in, out);
    const ComplexMatrix kfi = submatrix(k.matrix(), out, in);
    const ComplexMatrix kff = submatrix(k.matrix(), out, out);
    Eigen::LLT<ComplexMatrix> llt(kff);
    const ComplexMatrix c = kii - kif * llt.solve(kfi);
    const Kernel ck(HermitianMatrix(c), {}, ToleranceConfig{0.0, 0.0, 0.0});
    const auto eig = hermitian_eigen(schur_scale(ck, w_sub));
    const ComplexVector v = eig.eigenvectors.col(0);
    const ComplexVector uf = -llt.solve(kfi * v);
    const double u2 = v.squaredNorm() + uf.squaredNorm();
    return eig.eigenvalues(0) * v.squaredNorm() / u2;
}

} // namespace detail

/// Search for w with project(w, I) = w_sub and w in the kernel ball.
///
/// Coordinates outside I are first forced by the null space of the
/// restricted Schur-scaled matrix (S_FI v = 0 for every null vector v);
/// the remaining ones maximise lambda_min with multistart pattern search and
/// a coarse grid. A failure is a counterexample only when the certified
/// completion bound is below -10 psd_tol.
inline LiftResult lift_search(const Kernel& k, const TupleIndex& idx, std::span<const Complex> w_sub,
                              const LiftOptions& opt = {}) {
    const std::size_t n = k.size();
    if (idx.indices().back() >= n) throw InvalidInput("lift: tuple index out of range for the kernel");
    if (w_sub.size() != idx.size()) throw InvalidInput("lift: w_sub length does not match tuple");
    for (auto x : w_sub) require_closed_disc(x, "lift w_sub");
    const auto sub = restrict(k, idx);
    if (!defect(sub, w_sub, opt.tol).boundary) {
        throw PreconditionViolation("lift: w_sub is not on the boundary of the restricted kernel ball");
    }

    const auto& in = idx.indices();
    const auto out = idx.complement(n);
    const double kscale = std::max(1.0, 2.0 * max_abs(k.matrix()));
    LiftResult res;
    res.w.assign(n, 0.0);
    for (std::size_t a = 0; a < in.size(); ++a) res.w[in[a]] = w_sub[a];

    auto full = [&](const std::vector<Complex>& x) {
        auto w = res.w;
        for (std::size_t f = 0; f < out.size(); ++f) w[out[f]] = x[f];
        return w;
    };
    auto finish = [&](LiftStatus s, const std::vector<Complex>& w) {
        res.status = s;
        res.w = w;
        res.best_min_eig = min_eigenvalue(schur_scale(k, w));
        return res;
    };
    if (out.empty()) return finish(LiftStatus::Lifted, res.w);

    auto accept = [&](const std::vector<Complex>& w) { return membership(k, w, opt.tol); };

    // Null space of the restricted Schur-scaled matrix.
    const auto s_ii = schur_scale(sub, w_sub);
    const auto eig = hermitian_eigen(s_ii);
    const double null_cut = opt.tol.rank_tol * s_ii.scale();
    std::vector<ComplexVector> nulls;
    for (Eigen::Index j = 0; j < eig.eigenvalues.size(); ++j) {
        if (eig.eigenvalues(j) <= null_cut || j == 0) nulls.push_back(eig.eigenvectors.col(j));
    }

    // x_f sum_i conj(w_i) K_fi v_i = sum_i K_fi v_i, least squares over null vectors.
    std::vector<Complex> x0(out.size(), 0.0);
    std::vector<std::size_t> undetermined;
    for (std::size_t f = 0; f < out.size(); ++f) {
        Complex top = 0.0;
        double bottom = 0.0;
        double size = 0.0;
        for (const auto& v : nulls) {
            Complex num = 0.0, den = 0.0;
            for (std::size_t a = 0; a < in.size(); ++a) {
                const Complex kv = k(out[f], in[a]) * v(static_cast<Eigen::Index>(a));
                num += kv;
                den += std::conj(w_sub[a]) * kv;
                size += std::abs(kv);
            }
            top += std::conj(den) * num;
            bottom += std::norm(den);
        }
        if (std::sqrt(bottom) <= 1e-9 * std::max(size, 1e-300) || bottom == 0.0) {
            undetermined.push_back(f);
        } else {
            Complex xf = top / bottom;
            if (std::abs(xf) > 1.0) xf /= std::abs(xf);
            x0[f] = xf;
        }
    }
    if (accept(full(x0))) return finish(LiftStatus::Lifted, full(x0));

    std::size_t evals = 0;
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double target = -opt.tol.psd_tol;
    std::vector<Complex> best_x = x0;
    double best_f = -1e300;

    auto search = [&](const std::function<double(const std::vector<Complex>&)>& phi, std::vector<Complex> start_free,
                      std::span<const std::size_t> vary) -> std::optional<std::vector<Complex>> {
        // phi takes the reduced vector of the coordinates listed in `vary`.
        auto expand = [&](const std::vector<Complex>& y) {
            auto x = start_free;
            for (std::size_t a = 0; a < vary.size(); ++a) x[vary[a]] = y[a];
            return x;
        };
        std::vector<std::vector<Complex>> starts;
        std::vector<Complex> y0;
        for (auto f : vary) y0.push_back(start_free[f]);
        starts.push_back(y0);

        // Coarse grid: full product for up to two coordinates, else one at a time.
        const auto grid = detail::coarse_grid();
        std::vector<std::pair<double, std::vector<Complex>>> scored;
        if (vary.size() <= 2) {
            std::vector<std::size_t> pos(vary.size(), 0);
            for (;;) {
                std::vector<Complex> y;
                for (auto p : pos) y.push_back(grid[p]);
                scored.emplace_back(phi(y), y);
                ++evals;
                std::size_t c = 0;
                while (c < pos.size() && ++pos[c] == grid.size()) pos[c++] = 0;
                if (c == pos.size()) break;
            }
        } else {
            for (std::size_t a = 0; a < vary.size(); ++a) {
                for (const auto& g : grid) {
                    auto y = y0;
                    y[a] = g;
                    scored.emplace_back(phi(y), y);
                    ++evals;
                }
            }
        }
        std::sort(scored.begin(), scored.end(), [](const auto& l, const auto& r) { return l.first > r.first; });
        for (std::size_t s = 0; s < std::min<std::size_t>(3, scored.size()); ++s) starts.push_back(scored[s].second);
        while (starts.size() < opt.starts) {
            std::vector<Complex> y;
            for (std::size_t a = 0; a < vary.size(); ++a) {
                y.push_back(std::polar(std::sqrt(unit(rng)), 2.0 * std::numbers::pi * unit(rng)));
            }
            starts.push_back(y);
        }
        const std::size_t per_start = std::max<std::size_t>(opt.budget / (2 * opt.starts), 50);
        for (auto& y : starts) {
            if (evals >= opt.budget) break;
            std::size_t local = 0;
            const double f = detail::pattern_search(phi, y, 0.25, target, local, per_start);
            evals += local;
            const auto x = expand(y);
            const auto w = full(x);
            const double fw = min_eigenvalue(schur_scale(k, w));
            if (fw > best_f) {
                best_f = fw;
                best_x = x;
            }
            if (f >= target && accept(w)) return x;
        }
        return std::nullopt;
    };

    // Stage 1: forced coordinates fixed, the rest maximise the Schur-scaled
    // matrix compressed to the complement of the null directions.
    if (!undetermined.empty()) {
        ComplexMatrix basis = ComplexMatrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        ComplexMatrix nmat = ComplexMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(nulls.size()));
        for (std::size_t c = 0; c < nulls.size(); ++c)
            for (std::size_t a = 0; a < in.size(); ++a)
                nmat(static_cast<Eigen::Index>(in[a]), static_cast<Eigen::Index>(c)) = nulls[c](static_cast<Eigen::Index>(a));
        const ComplexMatrix proj = basis - nmat * nmat.adjoint();
        const auto peig = hermitian_eigen(HermitianMatrix(proj));
        ComplexMatrix q(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n - nulls.size()));
        Eigen::Index col = 0;
        for (Eigen::Index j = 0; j < peig.eigenvalues.size(); ++j) {
            if (peig.eigenvalues(j) > 0.5 && col < q.cols()) q.col(col++) = peig.eigenvectors.col(j);
        }
        auto phi = [&](const std::vector<Complex>& y) {
            auto x = x0;
            for (std::size_t a = 0; a < undetermined.size(); ++a) x[undetermined[a]] = y[a];
            const auto s = schur_scale(k, full(x));
            if (q.cols() == 0) return 0.0;
            return min_eigenvalue(HermitianMatrix(q.adjoint() * s.matrix() * q)) / kscale;
        };
        if (auto x = search(phi, x0, undetermined)) return finish(LiftStatus::Lifted, full(*x));
    }

    // Stage 2: every free coordinate, objective lambda_min itself.
    std::vector<std::size_t> all(out.size());
    for (std::size_t f = 0; f < out.size(); ++f) all[f] = f;
    auto phi_all = [&](const std::vector<Complex>& y) { return min_eigenvalue(schur_scale(k, full(y))) / kscale; };
    if (evals < opt.budget) {
        if (auto x = search(phi_all, best_x, all)) return finish(LiftStatus::Lifted, full(*x));
    }

    res.evaluations = evals;
    res.upper_bound = detail::completion_upper_bound(k, idx, w_sub);
    const auto status =
        res.upper_bound < -10.0 * opt.tol.psd_tol * kscale ? LiftStatus::Counterexample : LiftStatus::Undecided;
    auto r = finish(status, full(best_x));
    r.evaluations = evals;
    return r;
}

inline std::optional<std::vector<Complex>> lift_boundary_point(const Kernel& k, const TupleIndex& idx,
                                                               std::span<const Complex> w_sub,
                                                               const LiftOptions& opt = {}) {
    auto r = lift_search(k, idx, w_sub, opt);
    if (r.status != LiftStatus::Lifted) return std::nullopt;
    return r.w;
}

struct LiftWitness {
    TupleIndex tuple;
    std::vector<Complex> w_sub;
    std::vector<Complex> lift;
};

struct LiftFailure {
    TupleIndex tuple;
    std::vector<Complex> w_sub;
    double best_residual = 0; // lambda_min at the best completion found
    double upper_bound = 0;
};

struct ExtremalVerdict {
    bool extremal = false;
    std::vector<TupleIndex> checked_tuples;
    std::vector<LiftWitness> witnesses;
    std::vector<LiftFailure> counterexamples;
    std::vector<LiftFailure> undecided;
    std::size_t samples = 0;
};

/// Random boundary point of the restricted ball: a complex Gaussian
/// direction scaled by its boundary scale.
inline std::vector<Complex> sample_boundary_point(const Kernel& k, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Complex> dir;
    for (std::size_t i = 0; i < k.size(); ++i) dir.emplace_back(g(rng), g(rng));
    return scaled(dir, boundary_scale(k, dir));
}

/// Sampled extremality: every sampled boundary point of every proper
/// subkernel ball must lift.
inline ExtremalVerdict verify_extremal(const Kernel& k, std::size_t samples_per_tuple, std::uint64_t seed = 0,
                                       const LiftOptions& opt = {}, bool keep_witnesses = true) {
    ExtremalVerdict v;
    const auto tuples = TupleIndex::proper_tuples(k.size());
    for (std::size_t t = 0; t < tuples.size(); ++t) {
        const auto& idx = tuples[t];
        v.checked_tuples.push_back(idx);
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(t)};
        std::mt19937_64 rng(seq);
        const auto sub = restrict(k, idx);
        for (std::size_t s = 0; s < samples_per_tuple; ++s) {
            const auto w_sub = sample_boundary_point(sub, rng);
            auto lopt = opt;
            lopt.seed = rng();
            const auto r = lift_search(k, idx, w_sub, lopt);
            ++v.samples;
            switch (r.status) {
            case LiftStatus::Lifted:
                if (keep_witnesses) v.witnesses.push_back({idx, w_sub, r.w});
                break;
            case LiftStatus::Counterexample:
                v.counterexamples.push_back({idx, w_sub, r.best_min_eig, r.upper_bound});
                break;
            case LiftStatus::Undecided:
                v.undecided.push_back({idx, w_sub, r.best_min_eig, r.upper_bound});
                break;
            }
        }
    }
    v.extremal = v.counterexamples.empty() && v.undecided.empty();
    return v;
}

// ---------------------------------------------------------------------------
// Theorem and lemma checks.

struct CheckResult {
    std::string name;
    bool pass = false;
    double residual = 0.0;
};

struct TheoremReport {
    std::string theorem;
    std::vector<CheckResult> hypotheses;
    std::vector<CheckResult> conclusions; // empty unless every hypothesis passed
    std::vector<CheckResult> details;     // informational, never gate the verdict
    bool conclusion_evaluated = false;
    bool one_sided = false;
    std::size_t samples = 0;

    bool hypotheses_pass() const {
        return std::all_of(hypotheses.begin(), hypotheses.end(), [](const CheckResult& c) { return c.pass; });
    }
    bool passed() const {
        return conclusion_evaluated && hypotheses_pass() &&
               std::all_of(conclusions.begin(), conclusions.end(), [](const CheckResult& c) { return c.pass; });
    }
};

struct TheoremOptions {
    ToleranceConfig tol{};
    double check_tol = 1e-8;
    std::size_t extremal_samples = 20;   // per proper tuple
    std::size_t body_samples = 200;      // D_K versus D_Omega sampling
    std::size_t cross_samples = 1000;    // K ball versus disc Pick body at alpha
    std::uint64_t seed = 0;
    LiftOptions lift{};
    MembershipOptions membership{};
};

namespace detail {

// sqrt(c^2 - m^2) amplifies rounding; distances closer than this are equal.
inline constexpr double kDistanceResolution = 1e-14;

inline double bound_term(double c, double m) {
    if (std::abs(c - m) <= kDistanceResolution) return 0.0;
    return std::sqrt(std::max(0.0, c * c - m * m) / (1.0 - m * m));
}

inline double pair_distance_residual(std::span<const Complex> alpha, const DomainModel& d,
                                     std::span<const DomainPoint> z, std::size_t i, std::size_t j) {
    return std::abs(moebius_distance(alpha[i], alpha[j]) - cara_distance(d, z[i], z[j]));
}

inline CheckResult unit_diagonal(const Kernel& k) {
    double r = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) r = std::max(r, std::abs(k(i, i) - 1.0));
    return {"unit diagonal", r <= 1e-12, r};
}

inline CheckResult interior_tuple(std::span<const Complex> alpha, const char* name) {
    double worst = 0.0;
    for (auto a : alpha) worst = std::max(worst, std::abs(a));
    return {name, worst < 1.0 && std::all_of(alpha.begin(), alpha.end(), is_finite), worst};
}

inline CheckResult sampled_extremality(const Kernel& k, const TheoremOptions& opt, std::size_t& samples) {
    const auto v = verify_extremal(k, opt.extremal_samples, opt.seed, opt.lift, false);
    samples += v.samples;
    return {"extremal (sampled)", v.extremal, static_cast<double>(v.counterexamples.size() + v.undecided.size())};
}

// Tuples on both sides of the boundary of D_K: random directions scaled by
// r* (1 +- u), u in [1e-3, 0.1].
inline std::vector<std::vector<Complex>> two_sided_samples(const Kernel& k, std::size_t count,
                                                           std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(1e-3, 0.1);
    std::vector<std::vector<Complex>> out;
    for (std::size_t s = 0; s < count; ++s) {
        std::vector<Complex> dir;
        for (std::size_t i = 0; i < k.size(); ++i) dir.emplace_back(g(rng), g(rng));
        const double r = boundary_scale(k, dir);
        out.push_back(scaled(dir, r * (s % 2 == 0 ? 1.0 - u(rng) : 1.0 + u(rng))));
    }
    return out;
}

inline bool in_closed_polydisc(std::span<const Complex> w) {
    return std::all_of(w.begin(), w.end(), [](Complex x) { return std::abs(x) <= 1.0; });
}

// Fraction of sampled tuples on which the ball of K and the disc Pick body
// at nodes alpha agree.
inline CheckResult cross_membership(const Kernel& k, std::span<const Complex> alpha, const TheoremOptions& opt,
                                    std::size_t& samples) {
    std::mt19937_64 rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);
    const auto pts = two_sided_samples(k, opt.cross_samples, rng);
    std::size_t agree = 0;
    for (const auto& w : pts) {
        const bool in_k = membership(k, w, opt.tol);
        const bool in_disc = in_closed_polydisc(w) && solvable(PickProblem({alpha.begin(), alpha.end()}, w), opt.tol);
        agree += in_k == in_disc ? 1 : 0;
    }
    samples += pts.size();
    const double rate = pts.empty() ? 1.0 : static_cast<double>(agree) / static_cast<double>(pts.size());
    return {"cross-membership agreement", agree == pts.size(), 1.0 - rate};
}

// Sampled check of D_K = D_Omega(z).
inline CheckResult body_equality(const Kernel& k, const DomainModel& d, std::span<const DomainPoint> z,
                                 const TheoremOptions& opt, std::size_t& samples) {
    std::mt19937_64 rng(opt.seed ^ 0x51ed270b27a3c9f1ULL);
    const auto pts = two_sided_samples(k, opt.body_samples, rng);
    std::size_t agree = 0, decided = 0;
    for (const auto& w : pts) {
        const bool in_k = membership(k, w, opt.tol);
        if (!in_closed_polydisc(w)) {
            ++decided;
            agree += in_k ? 0 : 1;
            continue;
        }
        const auto m = pick_body_membership(d, z, w, opt.membership);
        if (m == Membership::Undecided) continue;
        ++decided;
        agree += in_k == (m == Membership::Member) ? 1 : 0;
    }
    samples += pts.size();
    const double rate = decided == 0 ? 0.0 : static_cast<double>(agree) / static_cast<double>(decided);
    return {"kernel ball equals Pick body (sampled)", decided > 0 && agree == decided, 1.0 - rate};
}

inline CheckResult recovered_distances(const SzegoForm& form, std::span<const Complex> alpha) {
    double worst = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i)
        for (std::size_t j = i + 1; j < alpha.size(); ++j)
            worst = std::max(worst, std::abs(moebius_distance(form.alpha[i], form.alpha[j]) -
                                             moebius_distance(alpha[i], alpha[j])));
    return {"recovered nodes match alpha up to automorphism", worst <= 1e-7, worst};
}

} // namespace detail

/// |K(i,j)| = sqrt(1 - c*(z_i, z_j)^2) for every pair.
inline TheoremReport entry_modulus_check(const Kernel& k, const DomainModel& d, std::span<const DomainPoint> z,
                                         double tol = 1e-10) {
    TheoremReport rep;
    rep.theorem = "entry-modulus";
    require_distinct_points(d, z, "entry_modulus_check");
    if (z.size() != k.size()) throw InvalidInput("entry_modulus_check: point count does not match kernel");
    rep.hypotheses.push_back(detail::unit_diagonal(k));
    if (!rep.hypotheses_pass()) return rep;
    double worst = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        for (std::size_t j = i + 1; j < z.size(); ++j) {
            const double c = cara_distance(d, z[i], z[j]);
            worst = std::max(worst, std::abs(std::abs(k(i, j)) - std::sqrt(1.0 - c * c)));
        }
    }
    rep.conclusion_evaluated = true;
    rep.conclusions.push_back({"entry modulus identity", worst <= tol, worst});
    return rep;
}

/// Threshold t* with (0, ..., t, ..., 0) in D_K iff t <= t*, by bisection.
inline double axis_threshold(const Kernel& k, std::size_t position, const ToleranceConfig& tol = {}) {
    if (position >= k.size()) throw InvalidInput("axis_threshold: position out of range");
    std::vector<Complex> w(k.size(), 0.0);
    double lo = 0.0, hi = 1.0;
    w[position] = 1.0;
    if (membership(k, w, tol)) return 1.0;
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        w[position] = mid;
        (membership(k, w, tol) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// The axis threshold against the generalized Caratheodory function at
/// z_position with zeros at the other points.
inline TheoremReport axis_point_check(const Kernel& k, const DomainModel& d, std::span<const DomainPoint> z,
                                      std::size_t position, double tol = 1e-7) {
    TheoremReport rep;
    rep.theorem = "axis-point";
    require_distinct_points(d, z, "axis_point_check");
    if (z.size() != k.size() || position >= z.size()) throw InvalidInput("axis_point_check: bad sizes");
    const std::vector<Complex> zero(k.size(), 0.0);
    rep.hypotheses.push_back({"zero tuple is a member", membership(k, zero), 0.0});
    if (!rep.hypotheses_pass()) return rep;
    rep.conclusion_evaluated = true;
    const double thr = axis_threshold(k, position);
    std::vector<DomainPoint> zeros;
    for (std::size_t j = 0; j < z.size(); ++j) {
        if (j != position) zeros.push_back(z[j]);
    }
    rep.details.push_back({"threshold", true, thr});
    if (d.is_disc_like()) {
        const double exact = gen_cara_disc(z[position][0], coordinate(zeros, 0));
        rep.conclusions.push_back({"threshold equals generalized Caratheodory value", std::abs(thr - exact) <= tol,
                                   std::abs(thr - exact)});
    } else {
        rep.one_sided = true;
        const double lb = gen_cara_lower_bound(d, z[position], zeros);
        rep.conclusions.push_back({"threshold at least the certified lower bound", thr >= lb - tol, lb - thr});
    }
    return rep;
}

/// Bound c*(z3; z1, z2) >= max_j sqrt((c*(z_j,z3)^2 - m(a_j,a3)^2) / (1 - m(a_j,a3)^2))
/// together with the agreement of the two moduli
/// sqrt(1 - c*(z_j,z3)^2) / sqrt(1 - m(a_j,a3)^2).
inline TheoremReport theorem3_check(const Kernel& k, const DomainModel& d, std::span<const DomainPoint> z,
                                    std::span<const Complex> alpha, const TheoremOptions& opt = {}) {
    TheoremReport rep;
    rep.theorem = "3";
    require_distinct_points(d, z, "theorem3_check");
    if (k.size() != 3 || z.size() != 3 || alpha.size() != 3) throw InvalidInput("theorem3_check: expects n = 3");
    rep.hypotheses.push_back(detail::unit_diagonal(k));
    rep.hypotheses.push_back(detail::interior_tuple(alpha, "alpha in the open tridisc"));
    if (!rep.hypotheses_pass()) return rep;
    const auto def = defect(k, alpha, opt.tol);
    rep.hypotheses.push_back({"alpha on the boundary of the kernel ball", def.boundary, def.operator_norm - 1.0});
    const double pr = detail::pair_distance_residual(alpha, d, z, 0, 1);
    rep.hypotheses.push_back({"m(a1,a2) = c*(z1,z2)", pr <= opt.check_tol, pr});
    if (!rep.hypotheses_pass()) return rep;
    rep.hypotheses.push_back(detail::sampled_extremality(k, opt, rep.samples));
    rep.hypotheses.push_back(detail::body_equality(k, d, z, opt, rep.samples));
    if (!rep.hypotheses_pass()) return rep;

    rep.conclusion_evaluated = true;
    double rhs = 0.0;
    double mu[2];
    for (std::size_t j = 0; j < 2; ++j) {
        const double c = cara_distance(d, z[j], z[2]);
        const double m = moebius_distance(alpha[j], alpha[2]);
        rhs = std::max(rhs, detail::bound_term(c, m));
        mu[j] = std::sqrt(1.0 - c * c) / std::sqrt(1.0 - m * m);
    }
    double lhs;
    if (d.is_disc_like()) {
        lhs = gen_cara_disc(z[2][0], std::vector<Complex>{z[0][0], z[1][0]});
    } else {
        rep.one_sided = true;
        lhs = gen_cara_lower_bound(d, z[2], std::vector<DomainPoint>{z[0], z[1]});
    }
    rep.details.push_back({"rhs", true, rhs});
    rep.details.push_back({"lhs", true, lhs});
    rep.conclusions.push_back({"generalized Caratheodory bound", lhs >= rhs - opt.check_tol, rhs - lhs});
    rep.conclusions.push_back({"modulus consistency", std::abs(mu[0] - mu[1]) <= opt.check_tol,
                               std::abs(mu[0] - mu[1])});
    return rep;
}

struct SearchCandidate {
    std::vector<DomainPoint> z;
    std::size_t coordinate = 0; // Szego kernel of this coordinate
    double body_disagreement = 0.0;
    double rhs = 0.0;
    double lhs_lower_bound = 0.0;
};

/// Search mode on the bidisc: random configurations with K the normalized
/// Szego kernel of one coordinate and alpha that coordinate's values. Logs
/// near-satisfying instances and asserts nothing about their existence.
inline std::vector<SearchCandidate> theorem3_search(std::size_t trials, std::uint64_t seed,
                                                    double max_disagreement = 0.05, std::size_t body_samples = 60,
                                                    long feasibility_budget = 3000) {
    const auto d = DomainModel::polydisc(2);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<SearchCandidate> out;
    for (std::size_t t = 0; t < trials; ++t) {
        std::vector<DomainPoint> z;
        for (int p = 0; p < 3; ++p) {
            DomainPoint pt;
            for (int c = 0; c < 2; ++c) pt.coords.push_back(std::polar(0.85 * std::sqrt(unit(rng)), 6.283185307 * unit(rng)));
            z.push_back(pt);
        }
        for (std::size_t c = 0; c < 2; ++c) {
            const auto alpha = coordinate(z, c);
            if (detail::pair_distance_residual(alpha, d, z, 0, 1) > 1e-12) continue;
            const auto k = normalize(szego_raw(alpha));
            TheoremOptions opt;
            opt.body_samples = body_samples;
            opt.membership.feasibility.budget = feasibility_budget;
            opt.seed = rng();
            std::size_t samples = 0;
            const auto eq = detail::body_equality(k, d, z, opt, samples);
            if (eq.residual > max_disagreement) continue;
            SearchCandidate cand;
            cand.z = z;
            cand.coordinate = c;
            cand.body_disagreement = eq.residual;
            for (std::size_t j = 0; j < 2; ++j) {
                const double cs = cara_distance(d, z[j], z[2]);
                const double m = moebius_distance(alpha[j], alpha[2]);
                cand.rhs = std::max(cand.rhs, detail::bound_term(cs, m));
            }
            cand.lhs_lower_bound = gen_cara_lower_bound(d, z[2], std::vector<DomainPoint>{z[0], z[1]});
            out.push_back(cand);
        }
    }
    return out;
}

/// Three-point boundary structure: alpha on the boundary with at least two
/// pairs on the boundary of their restricted balls forces distinct alpha and
/// D_K equal to the disc Pick body at alpha.
inline TheoremReport theorem2_pipeline(const Kernel& k, const DomainModel& d, std::span<const DomainPoint> z,
                                       std::span<const Complex> alpha, const TheoremOptions& opt = {}) {
    TheoremReport rep;
    rep.theorem = "2";
    require_distinct_points(d, z, "theorem2_pipeline");
    if (k.size() != 3 || z.size() != 3 || alpha.size() != 3) throw InvalidInput("theorem2_pipeline: expects n = 3");
    rep.hypotheses.push_back(detail::interior_tuple(alpha, "alpha in the open tridisc"));
    if (!rep.hypotheses_pass()) return rep;
    const auto def = defect(k, alpha, opt.tol);
    rep.hypotheses.push_back({"alpha on the boundary of the kernel ball", def.boundary, def.operator_norm - 1.0});
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = i + 1; j < 3; ++j) {
            const TupleIndex idx({i, j}, 3);
            const std::vector<Complex> a{alpha[i], alpha[j]};
            if (defect(restrict(k, idx), a, opt.tol).boundary) ++pairs;
        }
    }
    rep.hypotheses.push_back({"at least two pairs on restricted boundaries", pairs >= 2, static_cast<double>(pairs)});
    if (!rep.hypotheses_pass()) return rep;
    rep.hypotheses.push_back(detail::body_equality(k, d, z, opt, rep.samples));
    if (!rep.hypotheses_pass()) return rep;

    rep.conclusion_evaluated = true;
    double sep = 1.0;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = i + 1; j < 3; ++j) sep = std::min(sep, std::abs(alpha[i] - alpha[j]));
    rep.conclusions.push_back({"alpha pairwise distinct", sep > 1e-9, sep});
    try {
        const auto cls = singular_classify(k, alpha, opt.tol);
        rep.details.push_back({cls.kind == SingularKind::Rank1 ? "singular: rank-one defect" : "singular: rank-two defect",
                               true, cls.residual});
    } catch (const Error&) {
        rep.details.push_back({"singular classification unavailable", false, 0.0});
    }
    const auto form = szego_recognition(normalize(k), opt.tol);
    rep.conclusions.push_back({"Szego recognition", form.has_value(), form ? form->residual : 1.0});
    if (form && sep > 1e-9) {
        rep.conclusions.push_back(detail::recovered_distances(*form, alpha));
        rep.conclusions.push_back(detail::cross_membership(k, alpha, opt, rep.samples));
    }
    return rep;
}

/// Kernel ball equals the disc Pick body at alpha when alpha meets the
/// distance conditions m(a_1, a_j) = c*(z_1, z_j).
inline TheoremReport theorem4_pipeline(const Kernel& k, const DomainModel& d, std::span<const DomainPoint> z,
                                       std::span<const Complex> alpha, const TheoremOptions& opt = {}) {
    TheoremReport rep;
    rep.theorem = "4";
    require_distinct_points(d, z, "theorem4_pipeline");
    if (z.size() != k.size() || alpha.size() != k.size()) throw InvalidInput("theorem4_pipeline: size mismatch");
    rep.hypotheses.push_back(detail::unit_diagonal(k));
    rep.hypotheses.push_back(detail::interior_tuple(alpha, "alpha in the open polydisc"));
    if (!rep.hypotheses_pass()) return rep;
    rep.hypotheses.push_back({"alpha in the kernel ball", membership(k, alpha, opt.tol), -membership_margin(k, alpha)});
    double worst = 0.0;
    for (std::size_t j = 1; j < alpha.size(); ++j) {
        worst = std::max(worst, detail::pair_distance_residual(alpha, d, z, 0, j));
    }
    rep.hypotheses.push_back({"m(a1,aj) = c*(z1,zj)", worst <= opt.check_tol, worst});
    if (!rep.hypotheses_pass()) return rep;
    rep.hypotheses.push_back(detail::sampled_extremality(k, opt, rep.samples));
    if (!rep.hypotheses_pass()) return rep;

    rep.conclusion_evaluated = true;
    const auto form = szego_recognition(k, opt.tol);
    rep.conclusions.push_back({"Szego recognition", form.has_value(), form ? form->residual : 1.0});
    if (form) {
        rep.conclusions.push_back(detail::recovered_distances(*form, alpha));
        std::vector<Complex> distinct_check(alpha.begin(), alpha.end());
        if (detail::dedupe(distinct_check, 1e-12).size() == alpha.size()) {
            rep.conclusions.push_back(detail::cross_membership(k, alpha, opt, rep.samples));
        }
    }
    return rep;
}

namespace detail {

// Values at z of a random function in the closed unit ball of H^infinity of
// the polydisc: a convex combination of products of coordinate Blaschke
// factors.
inline std::vector<Complex> random_function_values(std::span<const DomainPoint> z, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto factor = [&]() {
        const Complex a = std::polar(0.9 * std::sqrt(unit(rng)), 2.0 * std::numbers::pi * unit(rng));
        return DiscAutomorphism(std::polar(1.0, 2.0 * std::numbers::pi * unit(rng)), a);
    };
    const std::size_t m = z.front().size();
    const std::size_t terms = 2;
    std::vector<Complex> w(z.size(), 0.0);
    double total = 0.0;
    std::vector<double> weights;
    for (std::size_t t = 0; t < terms; ++t) {
        weights.push_back(unit(rng) + 1e-3);
        total += weights.back();
    }
    for (std::size_t t = 0; t < terms; ++t) {
        std::vector<std::pair<std::size_t, DiscAutomorphism>> fs;
        for (std::size_t k = 0; k < m; ++k) {
            if (unit(rng) < 0.6 || k == t % m) fs.emplace_back(k, factor());
        }
        for (std::size_t i = 0; i < z.size(); ++i) {
            Complex v = weights[t] / total;
            for (const auto& [k, f] : fs) v *= f(z[i][k]);
            w[i] += v;
        }
    }
    return w;
}

} // namespace detail

/// Desk-scale intersection check: on the disc, the Szego kernel ball against
/// the Pick body; on the polydisc, sampled admissible kernels contain
/// sampled members and admissible_separation separates non-members.
inline TheoremReport theorem1_desk_check(const DomainModel& d, std::span<const DomainPoint> z, std::size_t samples,
                                         std::uint64_t seed = 0, std::size_t separation_budget = 200,
                                         std::size_t admissible_kernels = 20, const MembershipOptions& mopt = {}) {
    TheoremReport rep;
    rep.theorem = "1";
    require_distinct_points(d, z, "theorem1_desk_check");
    rep.hypotheses.push_back({"distinct points", true, 0.0});
    rep.conclusion_evaluated = true;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform_tuple = [&]() {
        std::vector<Complex> w;
        for (std::size_t i = 0; i < z.size(); ++i) {
            w.push_back(std::polar(std::sqrt(unit(rng)), 2.0 * std::numbers::pi * unit(rng)));
        }
        return w;
    };

    if (d.is_disc_like()) {
        const auto nodes = coordinate(z, 0);
        const auto k = szego_raw(nodes);
        std::size_t agree = 0;
        for (std::size_t s = 0; s < samples; ++s) {
            const auto w = s % 2 == 0 ? uniform_tuple() : detail::random_function_values(z, rng);
            const bool in_k = membership(k, w, mopt.tol);
            agree += in_k == (pick_body_membership(d, z, w, mopt) == Membership::Member) ? 1 : 0;
        }
        rep.samples = samples;
        rep.conclusions.push_back({"Szego kernel ball equals the Pick body", agree == samples,
                                   samples == 0 ? 0.0 : 1.0 - static_cast<double>(agree) / static_cast<double>(samples)});
        return rep;
    }

    std::vector<Kernel> family;
    for (std::size_t t = 0; t < admissible_kernels * 4 && family.size() < admissible_kernels; ++t) {
        if (auto k = random_admissible_kernel(d, z, rng)) family.push_back(*k);
    }
    std::size_t members = 0, violations = 0, nonmembers = 0, separated = 0, undecided = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        const auto w = s % 2 == 0 ? detail::random_function_values(z, rng) : uniform_tuple();
        const auto m = pick_body_membership(d, z, w, mopt);
        if (m == Membership::Member) {
            ++members;
            for (const auto& k : family) violations += membership(k, w, mopt.tol) ? 0 : 1;
        } else if (m == Membership::NonMember) {
            ++nonmembers;
            if (admissible_separation(d, z, w, separation_budget, rng(), mopt)) ++separated;
        } else {
            ++undecided;
        }
    }
    rep.samples = samples;
    const double sep_rate = nonmembers == 0 ? 1.0 : static_cast<double>(separated) / static_cast<double>(nonmembers);
    rep.conclusions.push_back({"admissible kernels contain members", violations == 0, static_cast<double>(violations)});
    rep.conclusions.push_back({"non-members separated (rate >= 0.99)", sep_rate >= 0.99, 1.0 - sep_rate});
    rep.details.push_back({"members", true, static_cast<double>(members)});
    rep.details.push_back({"non-members", true, static_cast<double>(nonmembers)});
    rep.details.push_back({"undecided", true, static_cast<double>(undecided)});
    rep.details.push_back({"admissible kernels sampled", true, static_cast<double>(family.size())});
    return rep;
}

} // namespace pickbody
