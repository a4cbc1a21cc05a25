#pragma once

// Implanting a rescaled f_beta into a fixed interval of a host map:
//
//   h_2  host flattened to the identity on J around a fixed point P
//   chi  trapezoid, 1 on J_hat, 0 off J_tilde
//   h_3  (1 - chi) h_2 + chi (A o f o A^-1),  A : [0,1] -> J_hat increasing affine

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "mmdlab/error.hpp"
#include "mmdlab/fbeta.hpp"
#include "mmdlab/pwa_map.hpp"
#include "mmdlab/rational.hpp"

namespace mmdlab {

inline PwaMap flatten_fixed_point(const PwaMap& host, const Rational& P, const Rational& rho) {
    if (!(rho > 0)) throw ContractError("flattening radius rho must be positive");
    if (P - rho < 0 || P + rho > 1)
        throw ContractError("[P - rho, P + rho] = " + to_string(Interval{P - rho, P + rho}) + " leaves [0,1]");
    if (host.eval(P) != P) throw ContractError("P = " + to_fraction(P) + " is not a fixed point of the host");
    Rational lo = P - rho, hi = P + rho;
    std::vector<Node> nodes;
    for (const auto& n : host.nodes())
        if (n.x < lo) nodes.push_back(n);
    nodes.push_back({lo, host.eval(lo)});
    nodes.push_back({P - rho / 2, P - rho / 2});
    nodes.push_back({P + rho / 2, P + rho / 2});
    nodes.push_back({hi, host.eval(hi)});
    for (const auto& n : host.nodes())
        if (n.x > hi) nodes.push_back(n);
    return PwaMap(std::move(nodes));
}

inline Interval flattened_interval(const Rational& P, const Rational& rho) { return {P - rho / 2, P + rho / 2}; }

inline PwaMap make_bump(const Interval& j_hat, const Interval& j_tilde) {
    if (j_hat.degenerate()) throw DomainError("J_hat must have positive length");
    if (!(j_tilde.lo < j_hat.lo && j_hat.hi < j_tilde.hi))
        throw DomainError("J_hat " + to_string(j_hat) + " is not strictly inside J_tilde " + to_string(j_tilde));
    if (j_tilde.lo < 0 || j_tilde.hi > 1) throw DomainError("J_tilde leaves [0,1]");
    return PwaMap({{0, 0}, {j_tilde.lo, 0}, {j_hat.lo, 1}, {j_hat.hi, 1}, {j_tilde.hi, 0}, {1, 0}});
}

// A(t) = lo + t |J_hat|
inline Rational affine_to(const Interval& j_hat, const Rational& t) { return j_hat.lo + t * j_hat.length(); }
inline Rational affine_from(const Interval& j_hat, const Rational& x) { return (x - j_hat.lo) / j_hat.length(); }

// A o f o A^-1 on J_hat, the identity elsewhere. Needs f(0) = 0, f(1) = 1.
inline PwaMap conjugate_into(const PwaMap& f, const Interval& j_hat) {
    if (j_hat.degenerate() || j_hat.lo < 0 || j_hat.hi > 1) throw DomainError("J_hat must be a proper interval of [0,1]");
    if (f.eval(0) != 0 || f.eval(1) != 1) throw ContractError("conjugated map must fix 0 and 1");
    std::vector<Node> nodes;
    nodes.push_back({0, 0});
    for (const auto& n : f.nodes()) nodes.push_back({affine_to(j_hat, n.x), affine_to(j_hat, n.y)});
    nodes.push_back({1, 1});
    return PwaMap(std::move(nodes));
}

struct SurgeryPlan {
    PwaMap host = PwaMap::identity();
    Rational P;
    Rational rho;          // J = [P - rho/2, P + rho/2]
    Interval j_hat;
    Interval j_tilde;
    FBetaPlan fbeta_plan;
    std::optional<Rational> budget; // requires |J_tilde| < budget / 3

    Interval J() const { return flattened_interval(P, rho); }
};

inline void check_surgery_plan(const SurgeryPlan& plan) {
    if (plan.host.eval(plan.P) != plan.P) throw ContractError("P = " + to_fraction(plan.P) + " is not fixed by the host");
    if (!(plan.j_tilde.lo < plan.j_hat.lo && plan.j_hat.hi < plan.j_tilde.hi))
        throw ContractError("J_hat " + to_string(plan.j_hat) + " is not strictly inside J_tilde " + to_string(plan.j_tilde));
    Interval J = plan.J();
    if (!J.contains(plan.j_tilde) || J == plan.j_tilde)
        throw ContractError("J_tilde " + to_string(plan.j_tilde) + " is not a proper subinterval of J " + to_string(J));
    if (plan.budget && !(plan.j_tilde.length() < *plan.budget / 3))
        throw ContractError("|J_tilde| = " + to_fraction(plan.j_tilde.length()) + " is not below budget/3 = " +
                            to_fraction(Rational(*plan.budget / 3)));
}

struct ImplantResult {
    PwaMap h2 = PwaMap::identity();
    PwaMap chi = PwaMap::identity();
    PwaMap g = PwaMap::identity(); // A o f o A^-1 extended by the identity
    PwaMap h3 = PwaMap::identity();
};

// h_2 + chi (g - h_2), built node by node. Where chi varies the two blend
// partners must coincide, otherwise the blend would not be piecewise affine.
inline PwaMap blend(const PwaMap& h2, const PwaMap& chi, const PwaMap& g) {
    std::vector<Rational> xs = merged_breakpoints(h2, chi);
    for (const auto& n : g.nodes()) xs.push_back(n.x);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::vector<Node> nodes;
    nodes.reserve(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const Rational& x = xs[i];
        Rational c = chi.eval(x), a = h2.eval(x), b = g.eval(x);
        if (i + 1 < xs.size()) {
            const Rational& x1 = xs[i + 1];
            if (chi.eval(x1) != c && (a != b || h2.eval(x1) != g.eval(x1)))
                throw ContractError("blend is not piecewise affine on " + to_string(Interval{x, x1}) +
                                    ": chi varies while h_2 and the implant differ");
        }
        nodes.push_back({x, a + c * (b - a)});
    }
    return PwaMap(std::move(nodes));
}

inline ImplantResult implant(const SurgeryPlan& plan, std::size_t node_budget = default_node_budget) {
    check_surgery_plan(plan);
    FBetaModel model(plan.fbeta_plan, node_budget);
    if (!model.map()) throw ResourceError("f_beta exceeds the node budget and cannot be implanted as a node list");
    ImplantResult r;
    r.h2 = flatten_fixed_point(plan.host, plan.P, plan.rho);
    r.chi = make_bump(plan.j_hat, plan.j_tilde);
    r.g = conjugate_into(*model.map(), plan.j_hat);
    r.h3 = blend(r.h2, r.chi, r.g);
    return r;
}

// Nodes of either map outside `region` where the two maps differ.
inline std::vector<Rational> locality_violations(const PwaMap& a, const PwaMap& b, const Interval& region) {
    std::vector<Rational> bad;
    for (const auto& x : merged_breakpoints(a, b))
        if (!(region.lo < x && x < region.hi) && a.eval(x) != b.eval(x)) bad.push_back(x);
    return bad;
}

// ---- plan files -------------------------------------------------------------------
//
//   mmdlab-surgery-plan 1
//   host = <path to PwaMap>
//   fbeta_plan = <path to plan>
//   P = p/q
//   rho = p/q
//   J_hat = lo,hi
//   J_tilde = lo,hi
//   budget = p/q          (optional)
//
// Relative paths resolve against the plan file's directory.

inline constexpr const char* surgery_header = "mmdlab-surgery-plan 1";

struct SurgeryPlanFile {
    std::string host_path;
    std::string fbeta_plan_path;
    Rational P;
    Rational rho;
    Interval j_hat;
    Interval j_tilde;
    std::optional<Rational> budget;
};

inline void write_surgery_plan(std::ostream& os, const SurgeryPlanFile& f) {
    os << surgery_header << '\n';
    os << "host = " << f.host_path << '\n';
    os << "fbeta_plan = " << f.fbeta_plan_path << '\n';
    os << "P = " << to_fraction(f.P) << '\n';
    os << "rho = " << to_fraction(f.rho) << '\n';
    os << "J_hat = " << to_fraction(f.j_hat.lo) << ',' << to_fraction(f.j_hat.hi) << '\n';
    os << "J_tilde = " << to_fraction(f.j_tilde.lo) << ',' << to_fraction(f.j_tilde.hi) << '\n';
    if (f.budget) os << "budget = " << to_fraction(*f.budget) << '\n';
}

inline SurgeryPlanFile read_surgery_plan_file(std::istream& is) {
    std::string header;
    std::getline(is, header);
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header != surgery_header) throw ParseError("unsupported surgery plan header: '" + header + "'");
    auto kv = detail::read_key_values(is);
    SurgeryPlanFile f;
    f.host_path = detail::require_key(kv, "host");
    f.fbeta_plan_path = detail::require_key(kv, "fbeta_plan");
    f.P = parse_rational(detail::require_key(kv, "P"));
    f.rho = parse_rational(detail::require_key(kv, "rho"));
    f.j_hat = parse_interval(detail::require_key(kv, "J_hat"));
    f.j_tilde = parse_interval(detail::require_key(kv, "J_tilde"));
    if (auto it = kv.find("budget"); it != kv.end()) f.budget = parse_rational(it->second);
    return f;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open " + path.string());
    return in;
}

inline PwaMap load_pwa(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_pwa(in);
}

inline FBetaPlan load_plan(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_plan(in);
}

inline SurgeryPlan load_surgery_plan(const std::filesystem::path& path) {
    auto in = open_input(path);
    SurgeryPlanFile f = read_surgery_plan_file(in);
    auto resolve = [&](const std::string& p) {
        std::filesystem::path q(p);
        return q.is_absolute() ? q : path.parent_path() / q;
    };
    SurgeryPlan plan;
    plan.host = load_pwa(resolve(f.host_path));
    plan.fbeta_plan = load_plan(resolve(f.fbeta_plan_path));
    plan.P = f.P;
    plan.rho = f.rho;
    plan.j_hat = f.j_hat;
    plan.j_tilde = f.j_tilde;
    plan.budget = f.budget;
    return plan;
}

} // namespace mmdlab
