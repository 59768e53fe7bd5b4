#pragma once

// pickbody command-line front end: problem parsing, dispatch and reports.

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pickbody/pickbody.hpp"

namespace pickbody::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolName = "pickbody";
inline constexpr const char* kToolVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kNegative = 1, kInputError = 2, kUndecided = 3, kInternalError = 4 };

struct Problem {
    Json raw;
    std::string id = "instance";
    DomainModel domain = DomainModel::disc();
    std::vector<DomainPoint> points;
    std::optional<ComplexMatrix> kernel;
    std::vector<std::string> labels;
    std::optional<std::vector<Complex>> targets;
    std::optional<std::vector<Complex>> alpha;
    std::optional<std::uint64_t> seed;
    ToleranceConfig tol{};
};

struct Settings {
    std::string command;
    std::string in;
    std::string out;
    std::string format = "json";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples;
    std::optional<long> budget;
    std::optional<double> tol;
    std::string theorem;
};

struct Verdict {
    std::string name;
    std::string verdict;
    double residual = 0.0;
};

struct Outcome {
    int exit = kOk;
    std::vector<Verdict> verdicts; // the first row is the overall verdict
    Json result = Json::object();
    Json witnesses = Json::array();
};

// ---------------------------------------------------------------------------
// Parsing

inline Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline Json to_json(Complex z) { return Json{{"re", number(z.real())}, {"im", number(z.imag())}}; }

inline Json to_json(std::span<const Complex> v) {
    Json a = Json::array();
    for (auto z : v) a.push_back(to_json(z));
    return a;
}

inline Json to_json(const ComplexMatrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(to_json(m(i, j)));
        rows.push_back(row);
    }
    return rows;
}

inline Json to_json(const DomainPoint& p) { return to_json(std::span<const Complex>(p.coords)); }

inline Json to_json(const TupleIndex& t) { return Json(t.indices()); }

[[noreturn]] inline void bad(const std::string& path, const std::string& msg) {
    throw InvalidInput(path + ": " + msg);
}

inline double parse_real(const Json& j, const std::string& path) {
    if (!j.is_number()) bad(path, "expected a number");
    const double x = j.get<double>();
    if (!std::isfinite(x)) bad(path, "expected a finite number");
    return x;
}

inline Complex parse_complex(const Json& j, const std::string& path) {
    if (!j.is_object() || j.size() != 2 || !j.contains("re") || !j.contains("im")) {
        bad(path, "expected {\"re\": number, \"im\": number}");
    }
    return {parse_real(j.at("re"), path + ".re"), parse_real(j.at("im"), path + ".im")};
}

inline std::vector<Complex> parse_complex_list(const Json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) bad(path, "expected a non-empty array of complex numbers");
    std::vector<Complex> v;
    for (std::size_t i = 0; i < j.size(); ++i) v.push_back(parse_complex(j[i], path + "[" + std::to_string(i) + "]"));
    return v;
}

inline DomainModel parse_domain(const Json& j) {
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
        bad("domain", "expected {\"kind\": \"disc\"} or {\"kind\": \"polydisc\", \"dim\": m}");
    }
    for (const auto& [key, _] : j.items()) {
        if (key != "kind" && key != "dim") bad("domain", "unknown field '" + key + "'");
    }
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "disc") {
        if (j.contains("dim") && (!j.at("dim").is_number_unsigned() || j.at("dim").get<std::size_t>() != 1)) {
            bad("domain.dim", "the disc has dimension 1");
        }
        return DomainModel::disc();
    }
    if (kind == "polydisc") {
        if (!j.contains("dim") || !j.at("dim").is_number_unsigned() || j.at("dim").get<std::size_t>() < 1) {
            bad("domain.dim", "expected a positive integer");
        }
        return DomainModel::polydisc(j.at("dim").get<std::size_t>());
    }
    bad("domain.kind", "unknown domain '" + kind + "'");
}

/// A point is either a tuple of complex coordinates or, on the disc, a
/// single complex number.
inline DomainPoint parse_point(const Json& j, const std::string& path) {
    if (j.is_object()) return DomainPoint{parse_complex(j, path)};
    return DomainPoint(parse_complex_list(j, path));
}

inline ComplexMatrix parse_matrix(const Json& j) {
    if (!j.is_array() || j.empty()) bad("kernel", "expected a non-empty square array of rows");
    const auto n = static_cast<Eigen::Index>(j.size());
    ComplexMatrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        const std::string rp = "kernel[" + std::to_string(i) + "]";
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) bad(rp, "matrix is not square");
        for (Eigen::Index k = 0; k < n; ++k) {
            m(i, k) = parse_complex(row[static_cast<std::size_t>(k)], rp + "[" + std::to_string(k) + "]");
        }
    }
    const double asym = max_abs(m - m.adjoint());
    if (asym > 1e-8 * std::max(1.0, max_abs(m))) bad("kernel", "matrix is not Hermitian");
    return (m + m.adjoint()) * 0.5;
}

inline Problem parse_problem(const Json& j) {
    static const std::vector<std::string> known{"id", "domain", "points", "kernel", "labels", "targets",
                                                "alpha", "seed", "tolerances", "description"};
    if (!j.is_object()) bad("problem", "expected a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) bad("problem", "unknown field '" + key + "'");
    }
    Problem p;
    p.raw = j;
    if (j.contains("id")) {
        if (!j.at("id").is_string()) bad("id", "expected a string");
        p.id = j.at("id").get<std::string>();
    }
    if (j.contains("description") && !j.at("description").is_string()) bad("description", "expected a string");
    if (j.contains("domain")) p.domain = parse_domain(j.at("domain"));
    if (j.contains("points")) {
        const auto& pts = j.at("points");
        if (!pts.is_array()) bad("points", "expected an array of points");
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const std::string path = "points[" + std::to_string(i) + "]";
            auto pt = parse_point(pts[i], path);
            require_domain_point(p.domain, pt, path.c_str());
            for (auto c : pt.coords) {
                if (!(std::abs(c) < 1.0)) bad(path, "coordinates must lie in the open disc");
            }
            p.points.push_back(std::move(pt));
        }
        require_distinct_points(p.domain, p.points, "points");
    }
    if (j.contains("kernel")) p.kernel = parse_matrix(j.at("kernel"));
    if (j.contains("labels")) {
        const auto& l = j.at("labels");
        if (!l.is_array()) bad("labels", "expected an array of strings");
        for (const auto& s : l) {
            if (!s.is_string()) bad("labels", "expected an array of strings");
            p.labels.push_back(s.get<std::string>());
        }
    }
    if (j.contains("targets")) p.targets = parse_complex_list(j.at("targets"), "targets");
    if (j.contains("alpha")) p.alpha = parse_complex_list(j.at("alpha"), "alpha");
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) bad("seed", "expected an unsigned integer");
        p.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("tolerances")) {
        const auto& t = j.at("tolerances");
        if (!t.is_object()) bad("tolerances", "expected an object");
        for (const auto& [key, val] : t.items()) {
            const double v = parse_real(val, "tolerances." + key);
            if (key == "psd_tol") p.tol.psd_tol = v;
            else if (key == "rank_tol") p.tol.rank_tol = v;
            else if (key == "boundary_tol") p.tol.boundary_tol = v;
            else bad("tolerances", "unknown field '" + key + "'");
        }
        p.tol.validate();
    }
    if (p.kernel && !p.labels.empty() && p.labels.size() != static_cast<std::size_t>(p.kernel->rows())) {
        bad("labels", "label count does not match the kernel");
    }
    return p;
}

// ---------------------------------------------------------------------------
// Commands

inline const std::vector<DomainPoint>& need_points(const Problem& p, std::size_t min_count) {
    if (p.points.size() < min_count) bad("points", "need at least " + std::to_string(min_count) + " points");
    return p.points;
}

inline const std::vector<Complex>& need_targets(const Problem& p, std::size_t n, const char* field = "targets") {
    if (!p.targets) bad(field, "missing");
    if (p.targets->size() != n) bad(field, "expected " + std::to_string(n) + " entries");
    return *p.targets;
}

inline const std::vector<Complex>& need_alpha(const Problem& p, std::size_t n) {
    if (!p.alpha) bad("alpha", "missing");
    if (p.alpha->size() != n) bad("alpha", "expected " + std::to_string(n) + " entries");
    return *p.alpha;
}

/// The given kernel, or the normalized Szego kernel of disc points.
inline Kernel kernel_or_szego(const Problem& p, bool normalized) {
    if (p.kernel) {
        Kernel k(*p.kernel, p.labels, p.tol);
        return normalized ? normalize(k) : k;
    }
    if (!p.domain.is_disc_like() || p.points.empty()) {
        bad("kernel", "missing (a default Szego kernel needs disc points)");
    }
    const auto nodes = coordinate(p.points, 0);
    return normalized ? szego_kernel(nodes) : szego_raw(nodes);
}

inline std::string exit_verdict(Membership m) { return to_string(m); }

inline int membership_exit(Membership m) {
    switch (m) {
    case Membership::Member: return kOk;
    case Membership::NonMember: return kNegative;
    case Membership::Undecided: return kUndecided;
    }
    return kInternalError;
}

inline Outcome cmd_solve(const Problem& p) {
    Outcome o;
    if (!p.domain.is_disc_like()) bad("domain", "solve needs the disc");
    const auto& z = need_points(p, 1);
    const auto nodes = coordinate(z, 0);
    const PickProblem prob(nodes, need_targets(p, nodes.size()));
    const auto pm = pick_matrix(prob);
    const auto cls = solution_count_class(prob, p.tol);
    const double min_eig = min_eigenvalue(pm);
    o.result["class"] = to_string(cls.kind);
    o.result["solvable"] = cls.kind != SolutionClass::None;
    o.result["rank"] = cls.rank;
    o.result["pick_min_eigenvalue"] = number(min_eig);
    o.result["pick_matrix"] = to_json(pm.matrix());
    double residual = min_eig;
    if (cls.kind == SolutionClass::Unique) {
        const auto b = unique_solution(prob, p.tol);
        residual = 0.0;
        const auto vals = b.evaluate(nodes);
        for (std::size_t i = 0; i < vals.size(); ++i) residual = std::max(residual, std::abs(vals[i] - prob.targets()[i]));
        o.result["blaschke"] = {{"degree", b.degree()},
                                {"constant", to_json(b.unimodular_constant())},
                                {"zeros", to_json(std::span<const Complex>(b.zeros()))},
                                {"interpolation_residual", number(residual)}};
        o.witnesses.push_back({{"kind", "blaschke"}, {"degree", b.degree()}});
    }
    o.verdicts.push_back({"solvability", to_string(cls.kind), residual});
    o.exit = cls.kind == SolutionClass::None ? kNegative : kOk;
    return o;
}

inline Outcome cmd_member(const Problem& p, const Settings& s) {
    Outcome o;
    if (p.kernel) {
        const Kernel k(*p.kernel, p.labels, p.tol);
        const auto& w = need_targets(p, k.size());
        for (auto x : w) require_closed_disc(x, "targets");
        const bool in = membership(k, w, p.tol);
        const double margin = membership_margin(k, w);
        o.result["mode"] = "kernel";
        o.result["member"] = in;
        o.result["margin"] = number(margin);
        o.result["operator_norm"] = number(operator_norm(k, w));
        const auto m = in ? Membership::Member : Membership::NonMember;
        o.verdicts.push_back({"membership", exit_verdict(m), margin});
        o.exit = membership_exit(m);
        return o;
    }
    const auto& z = need_points(p, 1);
    const auto& w = need_targets(p, z.size());
    MembershipOptions mopt;
    mopt.tol = p.tol;
    if (s.tol) {
        mopt.check_tol = *s.tol;
        mopt.feasibility.tol = *s.tol;
    }
    if (s.budget) mopt.feasibility.budget = *s.budget;
    const auto m = pick_body_membership(p.domain, z, w, mopt);
    double residual = 0.0;
    if (p.domain.is_disc_like()) {
        for (auto x : w) require_closed_disc(x, "targets");
        residual = min_eigenvalue(pick_matrix(PickProblem(coordinate(z, 0), w)));
    }
    o.result["mode"] = "domain";
    o.result["domain"] = p.domain.name();
    o.result["membership"] = to_string(m);
    o.verdicts.push_back({"membership", to_string(m), residual});
    o.exit = membership_exit(m);
    return o;
}

inline Outcome cmd_boundary(const Problem& p) {
    Outcome o;
    const auto k = kernel_or_szego(p, false);
    const auto& dir = need_targets(p, k.size());
    const double r = boundary_scale(k, dir);
    const auto pt = scaled(dir, r);
    const auto def = defect(k, pt, p.tol);
    o.result["scale"] = number(r);
    o.result["point"] = to_json(pt);
    o.result["operator_norm"] = number(def.operator_norm);
    o.result["defect_rank"] = def.defect_rank;
    o.verdicts.push_back({"boundary", def.boundary ? "Boundary" : "Interior", std::abs(def.operator_norm - 1.0)});
    o.witnesses.push_back({{"kind", "boundary_point"}, {"point", to_json(pt)}});
    o.exit = kOk;
    return o;
}

inline Json failure_json(const LiftFailure& f) {
    return {{"tuple", to_json(f.tuple)},
            {"w_sub", to_json(f.w_sub)},
            {"best_residual", number(f.best_residual)},
            {"upper_bound", number(f.upper_bound)}};
}

inline Outcome cmd_extremal(const Problem& p, const Settings& s, std::uint64_t seed) {
    Outcome o;
    const auto k = kernel_or_szego(p, false);
    LiftOptions lopt;
    lopt.tol = p.tol;
    if (s.budget) lopt.budget = static_cast<std::size_t>(std::max(1L, *s.budget));
    const std::size_t samples = s.samples.value_or(50);
    const auto v = verify_extremal(k, samples, seed, lopt, false);
    o.result["extremal"] = v.extremal;
    o.result["checked_tuples"] = v.checked_tuples.size();
    o.result["samples"] = v.samples;
    o.result["counterexamples"] = v.counterexamples.size();
    o.result["undecided"] = v.undecided.size();
    double worst = 0.0;
    for (const auto& f : v.counterexamples) {
        worst = std::min(worst, f.best_residual);
        Json w = failure_json(f);
        w["kind"] = "counterexample";
        o.witnesses.push_back(w);
    }
    for (const auto& f : v.undecided) {
        Json w = failure_json(f);
        w["kind"] = "undecided";
        o.witnesses.push_back(w);
    }
    if (v.extremal) {
        o.verdicts.push_back({"extremal", "Extremal", 0.0});
        o.exit = kOk;
    } else if (!v.counterexamples.empty()) {
        o.verdicts.push_back({"extremal", "NotExtremal", worst});
        o.exit = kNegative;
    } else {
        o.verdicts.push_back({"extremal", "Undecided", 0.0});
        o.exit = kUndecided;
    }
    return o;
}

inline Outcome cmd_recognize(const Problem& p) {
    Outcome o;
    if (!p.kernel) bad("kernel", "missing");
    const Kernel raw(*p.kernel, p.labels, p.tol);
    const auto k = normalize(raw);
    o.result["normalized_input"] = raw.normalized();
    const auto form = szego_recognition(k, p.tol);
    o.result["recognized"] = form.has_value();
    if (form) {
        o.result["alpha"] = to_json(std::span<const Complex>(form->alpha));
        o.result["theta"] = form->theta;
        o.result["residual"] = number(form->residual);
        Json dist = Json::array();
        for (std::size_t i = 0; i < form->alpha.size(); ++i)
            for (std::size_t j = i + 1; j < form->alpha.size(); ++j)
                dist.push_back({{"pair", {i, j}}, {"distance", number(moebius_distance(form->alpha[i], form->alpha[j]))}});
        o.result["distances"] = dist;
        o.verdicts.push_back({"recognition", "Szego", form->residual});
        o.exit = kOk;
    } else {
        o.verdicts.push_back({"recognition", "NotSzego", 0.0});
        o.exit = kNegative;
    }
    return o;
}

inline void add_checks(Outcome& o, const std::vector<CheckResult>& checks, const char* group) {
    for (const auto& c : checks) {
        o.verdicts.push_back({std::string(group) + ": " + c.name, c.pass ? "PASS" : "FAIL", c.residual});
    }
}

inline Json report_json(const TheoremReport& r) {
    auto list = [](const std::vector<CheckResult>& cs) {
        Json a = Json::array();
        for (const auto& c : cs) a.push_back({{"name", c.name}, {"pass", c.pass}, {"residual", number(c.residual)}});
        return a;
    };
    return {{"theorem", r.theorem},
            {"hypotheses", list(r.hypotheses)},
            {"conclusions", list(r.conclusions)},
            {"details", list(r.details)},
            {"conclusion_evaluated", r.conclusion_evaluated},
            {"one_sided", r.one_sided},
            {"samples", r.samples}};
}

/// Overall verdict of a set of reports: Pass, Fail (a conclusion failed), or
/// Skipped (a hypothesis failed, so nothing was concluded).
inline void conclude(Outcome& o, const std::vector<TheoremReport>& reps, const std::string& name) {
    bool skipped = false, failed = false;
    double worst = 0.0;
    for (const auto& r : reps) {
        if (!r.conclusion_evaluated || !r.hypotheses_pass()) skipped = true;
        else if (!r.passed()) failed = true;
        for (const auto& c : r.conclusions) {
            if (!c.pass) worst = std::max(worst, std::abs(c.residual));
        }
    }
    std::vector<Verdict> rows;
    if (failed) {
        rows.push_back({name, "Fail", worst});
        o.exit = kNegative;
    } else if (skipped) {
        rows.push_back({name, "Skipped", 0.0});
        o.exit = kUndecided;
    } else {
        rows.push_back({name, "Pass", 0.0});
        o.exit = kOk;
    }
    Json arr = Json::array();
    for (const auto& r : reps) {
        arr.push_back(report_json(r));
        Outcome tmp;
        add_checks(tmp, r.hypotheses, (r.theorem + " hypothesis").c_str());
        add_checks(tmp, r.conclusions, (r.theorem + " conclusion").c_str());
        rows.insert(rows.end(), tmp.verdicts.begin(), tmp.verdicts.end());
    }
    o.verdicts = std::move(rows);
    o.result["reports"] = arr;
}

inline Outcome cmd_verify(const Problem& p, const Settings& s, std::uint64_t seed) {
    Outcome o;
    const std::string& t = s.theorem;
    TheoremOptions topt;
    topt.tol = p.tol;
    topt.seed = seed;
    topt.membership.tol = p.tol;
    topt.lift.tol = p.tol;
    if (s.tol) {
        topt.check_tol = *s.tol;
        topt.membership.check_tol = *s.tol;
    }
    if (s.samples) topt.extremal_samples = *s.samples;
    if (s.budget) {
        topt.lift.budget = static_cast<std::size_t>(std::max(1L, *s.budget));
        topt.membership.feasibility.budget = *s.budget;
    }
    o.result["theorem"] = t;

    if (t == "1") {
        const auto& z = need_points(p, 1);
        const auto rep = theorem1_desk_check(p.domain, z, s.samples.value_or(200), seed,
                                             static_cast<std::size_t>(s.budget.value_or(200)), 20, topt.membership);
        conclude(o, {rep}, "theorem 1");
        return o;
    }
    if (t == "3" && !p.alpha) {
        const auto found = theorem3_search(s.samples.value_or(10), seed);
        for (const auto& c : found) {
            Json pts = Json::array();
            for (const auto& z : c.z) pts.push_back(to_json(z));
            o.witnesses.push_back({{"kind", "search_candidate"},
                                   {"points", pts},
                                   {"coordinate", c.coordinate},
                                   {"body_disagreement", number(c.body_disagreement)},
                                   {"rhs", number(c.rhs)},
                                   {"lhs_lower_bound", number(c.lhs_lower_bound)}});
        }
        o.result["mode"] = "search";
        o.result["candidates"] = found.size();
        o.verdicts.push_back({"theorem 3 search", "Logged", 0.0});
        o.exit = kOk;
        return o;
    }
    if (t == "2" || t == "3" || t == "4") {
        const auto& z = need_points(p, 2);
        const auto k = kernel_or_szego(p, true);
        if (k.size() != z.size()) bad("kernel", "size does not match the number of points");
        const auto& alpha = need_alpha(p, z.size());
        TheoremReport rep;
        if (t == "2") rep = theorem2_pipeline(k, p.domain, z, alpha, topt);
        else if (t == "3") rep = theorem3_check(k, p.domain, z, alpha, topt);
        else rep = theorem4_pipeline(k, p.domain, z, alpha, topt);
        conclude(o, {rep}, "theorem " + t);
        return o;
    }
    if (t == "lemmas") {
        const auto& z = need_points(p, 2);
        const auto k = kernel_or_szego(p, true);
        if (k.size() != z.size()) bad("kernel", "size does not match the number of points");
        std::vector<TheoremReport> reps;
        reps.push_back(entry_modulus_check(k, p.domain, z, s.tol.value_or(1e-10)));
        for (std::size_t pos = 0; pos < k.size(); ++pos) {
            reps.push_back(axis_point_check(k, p.domain, z, pos, s.tol.value_or(1e-7)));
            reps.back().theorem += "[" + std::to_string(pos) + "]";
        }
        conclude(o, reps, "lemmas");
        return o;
    }
    bad("--theorem", "expected one of 1, 2, 3, 4, lemmas");
}

inline Outcome cmd_distance(const Problem& p, const Settings& s) {
    Outcome o;
    const auto& z = need_points(p, 2);
    double value = 0.0;
    std::string kind;
    if (z.size() == 2) {
        value = cara_distance(p.domain, z[0], z[1]);
        kind = "Exact";
    } else if (p.domain.is_disc_like()) {
        const auto zeros = coordinate(std::span<const DomainPoint>(z).subspan(1), 0);
        value = gen_cara_disc(z[0][0], zeros);
        kind = "Exact";
    } else {
        const auto budget = static_cast<std::size_t>(std::max(1L, s.budget.value_or(4096)));
        value = gen_cara_lower_bound(p.domain, z[0], std::span<const DomainPoint>(z).subspan(1), budget);
        kind = "LowerBound";
    }
    o.result["quantity"] = z.size() == 2 ? "caratheodory_distance" : "generalized_caratheodory";
    o.result["value"] = number(value);
    o.result["kind"] = kind;
    o.verdicts.push_back({"distance", kind, 0.0});
    o.exit = kOk;
    return o;
}

// ---------------------------------------------------------------------------
// Reports

inline Json build_report(const Settings& s, const Problem& p, std::uint64_t seed, const Outcome& o, double ms) {
    Json verdicts = Json::array();
    Json residuals = Json::object();
    for (const auto& v : o.verdicts) {
        verdicts.push_back({{"name", v.name}, {"verdict", v.verdict}, {"residual", number(v.residual)}});
        residuals[v.name] = number(v.residual);
    }
    Json settings = {{"format", s.format}};
    if (s.samples) settings["samples"] = *s.samples;
    if (s.budget) settings["budget"] = *s.budget;
    if (s.tol) settings["tol"] = *s.tol;
    if (!s.theorem.empty()) settings["theorem"] = s.theorem;
    return {{"tool", kToolName},
            {"version", kToolVersion},
            {"command", s.command},
            {"instance_id", p.id},
            {"seed", seed},
            {"exit_code", o.exit},
            {"input", p.raw},
            {"settings", settings},
            {"verdict", o.verdicts.empty() ? "" : o.verdicts.front().verdict},
            {"verdicts", verdicts},
            {"residuals", residuals},
            {"result", o.result},
            {"witnesses", o.witnesses},
            {"timing", {{"elapsed_ms", ms}}}};
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

inline std::string format_csv(const Settings& s, const Problem& p, std::uint64_t seed, const Outcome& o) {
    std::ostringstream os;
    os << "command,instance-id,verdict,residual,seed\n";
    os.precision(17);
    for (std::size_t i = 0; i < o.verdicts.size(); ++i) {
        const auto& v = o.verdicts[i];
        const std::string id = i == 0 ? p.id : p.id + "#" + v.name;
        os << csv_field(s.command) << ',' << csv_field(id) << ',' << csv_field(v.verdict) << ',' << v.residual << ','
           << seed << '\n';
    }
    return os.str();
}

inline Json read_json(const std::string& path) {
    std::string text;
    if (path == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        text = ss.str();
    } else {
        std::ifstream f(path);
        if (!f) throw InvalidInput("cannot read '" + path + "'");
        std::ostringstream ss;
        ss << f.rdbuf();
        text = ss.str();
    }
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidInput(std::string("malformed JSON: ") + e.what());
    }
}

inline Outcome dispatch(const Settings& s, const Problem& p, std::uint64_t seed) {
    if (s.command == "solve") return cmd_solve(p);
    if (s.command == "member") return cmd_member(p, s);
    if (s.command == "boundary") return cmd_boundary(p);
    if (s.command == "extremal") return cmd_extremal(p, s, seed);
    if (s.command == "recognize") return cmd_recognize(p);
    if (s.command == "verify") return cmd_verify(p, s, seed);
    if (s.command == "distance") return cmd_distance(p, s);
    throw InvalidInput("unknown command '" + s.command + "'");
}

/// Runs one invocation. Reports go to `out` (or --out), diagnostics to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Pick body and kernel ball computations", kToolName};
    Settings s;
    app.add_option("command", s.command, "solve | member | boundary | extremal | recognize | verify | distance")
        ->required()
        ->check(CLI::IsMember({"solve", "member", "boundary", "extremal", "recognize", "verify", "distance"}));
    app.add_option("--in", s.in, "problem file (JSON, '-' for stdin)")->required();
    app.add_option("--out", s.out, "report file (default stdout)");
    app.add_option("--format", s.format, "report format")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--seed", s.seed, "random seed (default: problem seed, else 0)");
    app.add_option("--samples", s.samples, "sample count for randomized checks")->check(CLI::PositiveNumber);
    app.add_option("--budget", s.budget, "iteration or evaluation budget")->check(CLI::PositiveNumber);
    app.add_option("--tol", s.tol, "check tolerance")->check(CLI::NonNegativeNumber);
    app.add_option("--theorem", s.theorem, "verify: 1 | 2 | 3 | 4 | lemmas")
        ->check(CLI::IsMember({"1", "2", "3", "4", "lemmas"}));
    app.set_version_flag("--version", kToolVersion);
    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        app.exit(e, out, err);
        return kOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kInputError;
    }
    if (s.command == "verify" && s.theorem.empty()) {
        err << "error: verify needs --theorem\n";
        return kInputError;
    }
    if (s.command != "verify" && !s.theorem.empty()) {
        err << "error: --theorem only applies to verify\n";
        return kInputError;
    }

    const auto start = std::chrono::steady_clock::now();
    Problem p;
    Outcome o;
    std::uint64_t seed = 0;
    try {
        p = parse_problem(read_json(s.in));
        seed = s.seed.value_or(p.seed.value_or(0));
        o = dispatch(s, p, seed);
    } catch (const InvalidInput& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const PreconditionViolation& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const NoBoundaryScale& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternalError;
    }
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

    const std::string text =
        s.format == "csv" ? format_csv(s, p, seed, o) : build_report(s, p, seed, o, ms).dump(2) + "\n";
    if (s.out.empty()) {
        out << text;
    } else {
        std::ofstream f(s.out);
        if (!f) {
            err << "error: cannot write '" << s.out << "'\n";
            return kInputError;
        }
        f << text;
    }
    return o.exit;
}

} // namespace pickbody::cli
