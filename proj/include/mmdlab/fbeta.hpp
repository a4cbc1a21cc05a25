#pragma once

// Piecewise-affine interval maps f_beta with prescribed metric mean
// dimension beta.
//
// Layout of [0,1], left to right:
//
//   [0, a_{2K}] identity tail, G_{K-1}, J_{K-1}, ..., G_0, J_0 = [a_1, 1]
//
// with J_k = [a_{2k+1}, a_{2k}] and gaps G_k = [a_{2k+2}, a_{2k+1}]. Each
// J_k is cut into ell_k subintervals of width eps_k = gamma_k / ell_k.
// Subintervals 1+4i (i = 0..i_k) are increasing full branches onto J_k,
// subintervals 3+4i (i = 0..i_k-1) decreasing full branches; the remaining
// ones are tent-shaped connectors that dip into G_k or rise into G_{k-1}.
// Every gap carries an attractor at its midpoint b_k.

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mmdlab/error.hpp"
#include "mmdlab/pwa_map.hpp"
#include "mmdlab/rational.hpp"
#include "mmdlab/separation.hpp"

namespace mmdlab {

enum class FBetaVariant { standard, full };

struct FBetaLevel {
    Rational a_even; // a_{2k}: top of J_k
    Rational a_odd;  // a_{2k+1}: bottom of J_k
    Rational gamma;  // |J_k|
    Integer ell;
    Integer i;       // i_k
    Rational eps;    // gamma / ell = a_{2k+2}
    Rational b;      // attractor of G_k (its midpoint)

    Interval core() const { return {a_odd, a_even}; }
    Interval gap() const { return {eps, a_odd}; }
    Rational c(const Integer& j) const { return a_odd + eps * Rational(j); }
};

struct FBetaPlan {
    Rational beta;
    std::size_t levels = 0;
    Rational seed_a1;
    FBetaVariant variant = FBetaVariant::standard;
    std::vector<FBetaLevel> level;

    // a_{2K}: the identity tail is [0, tail_top()].
    const Rational& tail_top() const { return level.back().eps; }

    // Midpoint of G_{k-1}; for k = 0 the gap above J_0 is the point {1}.
    Rational top_peak(std::size_t k) const { return k == 0 ? Rational(1) : level[k - 1].b; }

    friend bool operator==(const FBetaPlan& a, const FBetaPlan& b) {
        if (a.beta != b.beta || a.levels != b.levels || a.seed_a1 != b.seed_a1 || a.variant != b.variant ||
            a.level.size() != b.level.size())
            return false;
        for (std::size_t k = 0; k < a.level.size(); ++k) {
            const auto& x = a.level[k];
            const auto& y = b.level[k];
            if (x.a_even != y.a_even || x.a_odd != y.a_odd || x.gamma != y.gamma || x.ell != y.ell || x.i != y.i ||
                x.eps != y.eps || x.b != y.b)
                return false;
        }
        return true;
    }
};

inline const Integer max_plan_ell = Integer("1000000000000000000");

// 4 * floor((ell/gamma)^beta) + 1 <= ell
inline bool branch_layout_fits(const Integer& ell, const Rational& gamma, const Rational& beta) {
    Integer i = floor_pow(Rational(ell) / gamma, beta);
    return 4 * i + 1 <= ell;
}

namespace detail {

inline Integer next_odd_after(const Integer& after) {
    Integer l = after + 1;
    if (l < 3) l = 3;
    if (mpz_even_p(l.get_mpz_t())) l += 1;
    return l;
}

// h(ell) = (ell/gamma)^beta - (ell-1)/4 >= 1. Where this holds the branch
// layout cannot fit; h is concave in ell, so the set is one interval.
inline bool layout_excess(const Integer& ell, const Rational& gamma, const Rational& beta) {
    Rational rhs = Rational(ell + 3) / 4;
    return compare_pow(Rational(ell) / gamma, beta, rhs) != std::strong_ordering::less;
}

} // namespace detail

// Smallest odd ell > after (and >= 3) whose branch layout fits.
inline Integer minimal_feasible_ell(const Rational& gamma, const Rational& beta, const Integer& after) {
    if (beta >= 1) throw ContractError("branch layout 4*i_k+1 <= ell_k is unsatisfiable at beta = 1");
    Integer l = detail::next_odd_after(after);
    for (;;) {
        if (branch_layout_fits(l, gamma, beta)) return l;
        if (detail::layout_excess(l, gamma, beta)) break;
        l += 2;
        if (l > max_plan_ell) throw ResourceError("ell search exceeded 1e18");
    }
    // Jump over the excess region: exponential then binary search for its end.
    Integer lo = l;
    Integer step = 2;
    while (detail::layout_excess(lo + step, gamma, beta)) {
        lo += step;
        step *= 2;
        if (lo > max_plan_ell) throw ResourceError("ell search exceeded 1e18");
    }
    Integer hi = lo + step;
    while (hi - lo > 2) {
        Integer mid = lo + ((hi - lo) / 4) * 2;
        if (detail::layout_excess(mid, gamma, beta))
            lo = mid;
        else
            hi = mid;
    }
    for (l = hi;; l += 2) {
        if (branch_layout_fits(l, gamma, beta)) return l;
        if (l > max_plan_ell) throw ResourceError("ell search exceeded 1e18");
    }
}

// beta = 1 variant: smallest odd ell > after, >= 3, with ell >= gamma^-(k+1).
inline Integer variant_ell(const Rational& gamma, std::size_t k, const Integer& after) {
    Integer l = detail::next_odd_after(after);
    Integer need = ceil(pow(Rational(1 / gamma), static_cast<unsigned long>(k + 1)));
    if (l < need) {
        l = need;
        if (mpz_even_p(l.get_mpz_t())) l += 1;
    }
    return l;
}

inline void validate_plan(const FBetaPlan& plan) {
    if (plan.beta < 0 || plan.beta > 1) throw ContractError("beta must lie in [0,1]");
    if (plan.levels == 0 || plan.level.size() != plan.levels) throw ContractError("plan level table size mismatch");
    bool full = plan.variant == FBetaVariant::full;
    if (full && plan.beta != 1) throw ContractError("the full-branch variant is defined for beta = 1 only");
    if (!full && plan.beta == 1)
        throw ContractError("beta = 1 needs the full-branch variant (branch layout is unsatisfiable)");
    Integer prev_ell = 1;
    Rational prev_even = 1;
    for (std::size_t k = 0; k < plan.levels; ++k) {
        const auto& L = plan.level[k];
        std::string at = "level " + std::to_string(k) + ": ";
        if (L.a_even != prev_even) throw ContractError(at + "a_{2k} does not continue the sequence");
        if (!(L.a_odd < L.a_even && L.a_odd > 0)) throw ContractError(at + "a_{2k+1} must lie in (0, a_{2k})");
        if (L.gamma != L.a_even - L.a_odd) throw ContractError(at + "gamma_k != a_{2k} - a_{2k+1}");
        if (mpz_even_p(L.ell.get_mpz_t()) || L.ell < 3 || !(L.ell > prev_ell))
            throw ContractError(at + "ell_k must be odd, >= 3 and strictly increasing");
        if (L.eps != L.gamma / Rational(L.ell)) throw ContractError(at + "a_{2k+2} != gamma_k / ell_k");
        if (!(L.eps < L.a_odd)) throw ContractError(at + "a_{2k+2} must lie below a_{2k+1}");
        if (L.b != (L.eps + L.a_odd) / 2) throw ContractError(at + "b_k is not the midpoint of G_k");
        if (full) {
            if (L.i != L.ell) throw ContractError(at + "variant levels carry i_k = ell_k");
        } else {
            if (L.i != floor_pow(Rational(L.ell) / L.gamma, plan.beta))
                throw ContractError(at + "i_k != floor((ell_k/gamma_k)^beta)");
            if (!(4 * L.i + 1 <= L.ell)) throw ContractError(at + "branch layout 4 i_k + 1 <= ell_k violated");
            if (L.i < 1) throw ContractError(at + "i_k must be >= 1");
        }
        prev_ell = L.ell;
        prev_even = L.eps;
    }
}

inline FBetaPlan plan_sequences(const Rational& beta, std::size_t levels, const Rational& seed_a1,
                                FBetaVariant variant = FBetaVariant::standard) {
    if (beta < 0 || beta > 1) throw ContractError("beta must lie in [0,1]");
    if (levels == 0) throw ContractError("at least one level is required");
    if (!(seed_a1 > 0 && seed_a1 < 1)) throw ContractError("seed a_1 must lie in (0,1)");
    if (variant == FBetaVariant::full && beta != 1)
        throw ContractError("the full-branch variant is defined for beta = 1 only");
    if (variant == FBetaVariant::standard && beta == 1)
        throw ContractError("beta = 1 needs the full-branch variant (branch layout is unsatisfiable)");

    FBetaPlan plan{beta, levels, seed_a1, variant, {}};
    Rational a_even = 1;
    Integer prev_ell = 1;
    for (std::size_t k = 0; k < levels; ++k) {
        FBetaLevel L;
        L.a_even = a_even;
        L.a_odd = k == 0 ? seed_a1 : Rational(a_even / 2);
        L.gamma = L.a_even - L.a_odd;
        if (variant == FBetaVariant::full) {
            L.ell = variant_ell(L.gamma, k, prev_ell);
            L.i = L.ell;
        } else {
            L.ell = minimal_feasible_ell(L.gamma, beta, prev_ell);
            L.i = floor_pow(Rational(L.ell) / L.gamma, beta);
        }
        L.eps = L.gamma / Rational(L.ell);
        if (!(L.eps < L.a_odd))
            throw ContractError("level " + std::to_string(k) + ": a_{2k+2} = " + to_fraction(L.eps) +
                                " does not lie below a_{2k+1} = " + to_fraction(L.a_odd) + " (choose a larger seed a_1)");
        L.b = (L.eps + L.a_odd) / 2;
        plan.level.push_back(L);
        prev_ell = L.ell;
        a_even = L.eps;
    }
    validate_plan(plan);
    return plan;
}

// floor((1/eps_k)^beta)^n, or ell_k^n for the variant.
inline Integer predicted_count(const FBetaPlan& plan, std::size_t k, std::size_t n) {
    if (k >= plan.levels) throw DomainError("level " + std::to_string(k) + " beyond the plan");
    const auto& L = plan.level[k];
    Integer base = plan.variant == FBetaVariant::full ? L.ell : floor_pow(Rational(1 / L.eps), plan.beta);
    return pow(base, static_cast<unsigned long>(n));
}

enum class PieceKind { up, top_connector, down, bottom_connector, trailing };

struct BranchEntry {
    Integer j; // 1-based subinterval index
    bool increasing;
    Interval domain;
};

struct GapNodes {
    Node left, mid_left, centre, mid_right, right;
};

// Attractor on G = [g_l, g_r] with b the midpoint: nodes at the quarter
// points move halfway towards b, so f(x) > x left of b, f(x) < x right of b
// and |f(x) - b| = |x - b| / 2 near b.
inline GapNodes gap_nodes(const Interval& g) {
    Rational b = g.midpoint();
    Rational ml = (g.lo + b) / 2;
    Rational mr = (b + g.hi) / 2;
    return {{g.lo, g.lo}, {ml, (ml + b) / 2}, {b, b}, {mr, (mr + b) / 2}, {g.hi, g.hi}};
}

inline Rational tent_value(const Rational& t, const Rational& base, const Rational& peak) {
    Rational s = 1 - abs(2 * t - 1);
    return base + (peak - base) * s;
}

class FBetaModel {
public:
    explicit FBetaModel(FBetaPlan plan, std::size_t node_budget = default_node_budget) : plan_(std::move(plan)) {
        validate_plan(plan_);
        if (node_estimate() <= node_budget) map_ = materialize();
    }

    const FBetaPlan& plan() const { return plan_; }
    std::size_t levels() const { return plan_.levels; }
    const FBetaLevel& level(std::size_t k) const { return plan_.level.at(k); }
    bool full_variant() const { return plan_.variant == FBetaVariant::full; }

    // Materialized PwaMap, absent when the node estimate exceeds the budget.
    const std::optional<PwaMap>& map() const { return map_; }

    Integer node_estimate() const {
        Integer total = 2;
        for (const auto& L : plan_.level) total += (full_variant() ? L.ell : 6 * L.i + 3) + 5;
        return total;
    }

    // Closed-form evaluation, independent of the node list.
    Rational eval(const Rational& x) const {
        if (x < 0 || x > 1) throw DomainError("x = " + to_fraction(x) + " outside [0,1]");
        for (std::size_t k = 0; k < plan_.levels; ++k) {
            const auto& L = plan_.level[k];
            if (x >= L.a_odd) return eval_level(k, x);
            if (x >= L.eps) return eval_gap(L.gap(), x);
        }
        return x;
    }

    Rational operator()(const Rational& x) const { return eval(x); }

    // Kind of the j-th subinterval of J_k (1-based).
    PieceKind piece_kind(std::size_t k, const Integer& j) const {
        const auto& L = level(k);
        if (j < 1 || j > L.ell) throw DomainError("subinterval index out of range");
        if (full_variant()) return mpz_odd_p(j.get_mpz_t()) ? PieceKind::up : PieceKind::down;
        if (j > 4 * L.i + 1) return PieceKind::trailing;
        Integer r = (j - 1) % 4;
        switch (r.get_ui()) {
        case 0: return PieceKind::up;
        case 1: return PieceKind::top_connector;
        case 2: return PieceKind::down;
        default: return PieceKind::bottom_connector;
        }
    }

    // Value on subinterval j of J_k at local coordinate t in [0,1]. The
    // trailing block is treated as one piece spanning all its subintervals.
    Rational piece_value(std::size_t k, const Integer& j, const Rational& t) const {
        const auto& L = level(k);
        switch (piece_kind(k, j)) {
        case PieceKind::up: return L.a_odd + t * L.gamma;
        case PieceKind::down: return L.a_even - t * L.gamma;
        case PieceKind::top_connector: return tent_value(t, L.a_even, plan_.top_peak(k));
        case PieceKind::bottom_connector: return tent_value(t, L.a_odd, L.b);
        case PieceKind::trailing: return tent_value(t, L.a_even, plan_.top_peak(k));
        }
        return 0;
    }

    // Increasing branches 1+4i: pairwise gaps 3 eps_k, certified at eps_k.
    // Variant: all ell_k branches, touching, no declared scale.
    FullBranchSystem markov_view(std::size_t k) const {
        const auto& L = level(k);
        if (full_variant()) return {L.core(), L.a_odd, L.eps, L.eps, L.ell, BranchPattern::alternating, 0};
        return {L.core(), L.a_odd, L.eps, 4 * L.eps, L.i + 1, BranchPattern::increasing, L.eps};
    }

    // Every full branch of level k (positions 1, 3, 5, ..., alternating).
    FullBranchSystem full_branch_view(std::size_t k) const {
        const auto& L = level(k);
        if (full_variant()) return markov_view(k);
        return {L.core(), L.a_odd, L.eps, 2 * L.eps, 2 * L.i + 1, BranchPattern::alternating, 0};
    }

    std::vector<BranchEntry> branch_table(std::size_t k, unsigned long cap = 1'000'000) const {
        FullBranchSystem v = full_branch_view(k);
        if (v.count > cap) throw ResourceError("branch table of level " + std::to_string(k) + " has " +
                                               v.count.get_str() + " entries");
        std::vector<BranchEntry> out;
        unsigned long count = v.count.get_ui();
        unsigned long step = full_variant() ? 1 : 2;
        for (unsigned long m = 0; m < count; ++m) {
            Integer jm(m);
            out.push_back({Integer(m * step + 1), v.increasing(jm), v.domain(jm)});
        }
        return out;
    }

    // Breakpoint list in x order; used to materialize the PwaMap.
    std::vector<Node> nodes() const {
        std::vector<Node> out;
        auto append = [&](const std::vector<Node>& seg, const char* what) {
            if (!out.empty()) {
                if (!(out.back() == seg.front()))
                    throw ContractError(std::string("discontinuity entering ") + what + " at x = " +
                                        to_fraction(seg.front().x));
                out.insert(out.end(), seg.begin() + 1, seg.end());
            } else {
                out = seg;
            }
        };
        const Rational& tail = plan_.tail_top();
        append({{0, 0}, {tail, tail}}, "tail");
        for (std::size_t k = plan_.levels; k-- > 0;) {
            const auto& L = plan_.level[k];
            GapNodes g = gap_nodes(L.gap());
            append({g.left, g.mid_left, g.centre, g.mid_right, g.right}, "gap");
            append(level_nodes(k), "level");
        }
        return out;
    }

private:
    Rational eval_gap(const Interval& g, const Rational& x) const {
        GapNodes n = gap_nodes(g);
        const Node* pts[5] = {&n.left, &n.mid_left, &n.centre, &n.mid_right, &n.right};
        for (int s = 0; s < 4; ++s) {
            const Node& a = *pts[s];
            const Node& b = *pts[s + 1];
            if (x <= b.x) return a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x);
        }
        return x;
    }

    Rational eval_level(std::size_t k, const Rational& x) const {
        const auto& L = plan_.level[k];
        if (!full_variant() && 4 * L.i + 1 < L.ell) {
            Rational block_start = L.c(4 * L.i + 1);
            if (x >= block_start) {
                Rational t = (x - block_start) / (L.a_even - block_start);
                return tent_value(t, L.a_even, plan_.top_peak(k));
            }
        }
        Rational offset = (x - L.a_odd) / L.eps;
        Integer j0 = floor(offset);
        Integer last = full_variant() ? Integer(L.ell - 1) : Integer(4 * L.i);
        if (j0 > last) j0 = last;
        return piece_value(k, j0 + 1, offset - Rational(j0));
    }

    std::vector<Node> level_nodes(std::size_t k) const {
        const auto& L = plan_.level[k];
        std::vector<Node> out;
        out.push_back({L.a_odd, L.a_odd});
        Integer pieces = full_variant() ? L.ell : Integer(4 * L.i + 1);
        const Rational peak = plan_.top_peak(k);
        for (Integer j = 1; j <= pieces; ++j) {
            Rational x0 = L.c(j - 1);
            Rational x1 = L.c(j);
            Rational mid = (x0 + x1) / 2;
            switch (piece_kind(k, j)) {
            case PieceKind::up: out.push_back({x1, L.a_even}); break;
            case PieceKind::down: out.push_back({x1, L.a_odd}); break;
            case PieceKind::top_connector:
                out.push_back({mid, peak});
                out.push_back({x1, L.a_even});
                break;
            case PieceKind::bottom_connector:
                out.push_back({mid, L.b});
                out.push_back({x1, L.a_odd});
                break;
            case PieceKind::trailing: break;
            }
        }
        if (pieces < L.ell) {
            Rational start = L.c(pieces);
            out.push_back({(start + L.a_even) / 2, peak});
            out.push_back({L.a_even, L.a_even});
        }
        return out;
    }

    PwaMap materialize() const { return PwaMap(nodes()); }

    FBetaPlan plan_;
    std::optional<PwaMap> map_;
};

inline FBetaModel build_fbeta(const FBetaPlan& plan, std::size_t node_budget = default_node_budget) {
    return FBetaModel(plan, node_budget);
}

// Level-aware dynamics: the materialized map when present, else the
// closed form.
inline auto fbeta_dynamics(const FBetaModel& model) {
    return [&model](const Rational& x) -> Rational {
        if (model.map()) return model.map()->eval(x);
        return model.eval(x);
    };
}

// Level used at scale eps: the deepest k with eps <= eps_k (level 0 above eps_0).
inline std::size_t level_for_scale(const FBetaPlan& plan, const Rational& eps) {
    std::size_t k = 0;
    for (std::size_t t = 0; t < plan.levels; ++t)
        if (eps <= plan.level[t].eps) k = t;
    return k;
}

inline auto fbeta_counter(const FBetaModel& model, unsigned long cap = default_representative_cap) {
    return [&model, cap](std::size_t n, const Rational& eps) {
        std::size_t k = level_for_scale(model.plan(), eps);
        return count_cylinders(model.markov_view(k), n, eps, fbeta_dynamics(model), cap).record;
    };
}

// ---- verification -----------------------------------------------------------------

struct VerificationReport {
    bool ok = true;
    std::vector<std::string> passed;
    std::string failure; // first violated invariant
};

struct VerifyOptions {
    std::size_t cylinder_depth = 2;
    unsigned long representative_cap = default_representative_cap;
    // Levels with more subintervals are checked on one representative of each
    // residue class modulo 4 plus the boundary pieces.
    unsigned long exhaustive_piece_limit = 2'000'000;
};

inline VerificationReport verify_model(const FBetaModel& model, const VerifyOptions& opt = {}) {
    VerificationReport rep;
    auto fail = [&](std::string what) {
        rep.ok = false;
        rep.failure = std::move(what);
        return rep;
    };
    try {
        validate_plan(model.plan());
    } catch (const ContractError& e) {
        return fail(std::string("plan: ") + e.what());
    }
    rep.passed.push_back("plan invariants");

    if (model.eval(0) != 0 || model.eval(1) != 1) return fail("f(0) = 0 and f(1) = 1");
    rep.passed.push_back("f(0) = 0, f(1) = 1");

    const auto& plan = model.plan();
    for (std::size_t k = 0; k < plan.levels; ++k) {
        const auto& L = plan.level[k];
        std::string at = "level " + std::to_string(k);
        Interval lower_bound_region{L.eps, k == 0 ? Rational(1) : plan.level[k - 1].a_odd};
        bool sampled = L.ell > opt.exhaustive_piece_limit;
        std::vector<Integer> js;
        if (!sampled) {
            for (Integer j = 1; j <= L.ell; ++j) js.push_back(j);
        } else {
            for (Integer j = 1; j <= 8; ++j) js.push_back(j);
            for (Integer j = 4 * L.i - 6; j <= L.ell; ++j)
                if (j > 8) js.push_back(j);
        }
        Integer pieces = model.full_variant() ? L.ell : Integer(4 * L.i + 1);
        for (const auto& j : js) {
            PieceKind kind = model.piece_kind(k, j);
            if (kind == PieceKind::trailing) continue;
            Rational v0 = model.piece_value(k, j, 0);
            Rational v1 = model.piece_value(k, j, 1);
            Rational vm = model.piece_value(k, j, Rational(1, 2));
            for (const Rational* v : {&v0, &v1, &vm})
                if (!lower_bound_region.contains(*v))
                    return fail(at + ": subinterval " + j.get_str() + " leaves G_k u J_k u G_{k-1}");
            if (kind == PieceKind::up && (v0 != L.a_odd || v1 != L.a_even))
                return fail(at + ": increasing branch " + j.get_str() + " is not onto J_k");
            if (kind == PieceKind::down && (v0 != L.a_even || v1 != L.a_odd))
                return fail(at + ": decreasing branch " + j.get_str() + " is not onto J_k");
            if (j < pieces && model.piece_kind(k, j + 1) != PieceKind::trailing &&
                v1 != model.piece_value(k, j + 1, 0))
                return fail(at + ": jump between subintervals " + j.get_str() + " and " + Integer(j + 1).get_str() +
                            " at x = " + to_fraction(L.c(j)));
        }
        if (model.piece_value(k, 1, 0) != L.a_odd) return fail(at + ": f(a_{2k+1}) != a_{2k+1}");
        if (pieces < L.ell) {
            if (model.piece_value(k, pieces, 1) != L.a_even)
                return fail(at + ": trailing block does not start at a_{2k}");
            if (model.piece_value(k, L.ell, 1) != L.a_even) return fail(at + ": trailing block does not end at a_{2k}");
            Rational peak = model.piece_value(k, L.ell, Rational(1, 2));
            if (!lower_bound_region.contains(peak)) return fail(at + ": trailing block leaves G_{k-1}");
        } else if (model.piece_value(k, L.ell, 1) != L.a_even) {
            return fail(at + ": f(a_{2k}) != a_{2k}");
        }
        GapNodes g = gap_nodes(L.gap());
        for (const Node* n : {&g.left, &g.mid_left, &g.centre, &g.mid_right, &g.right})
            if (!L.gap().contains(n->y)) return fail(at + ": gap map leaves G_k at node x = " + to_fraction(n->x));
        if (!(g.mid_left.y > g.mid_left.x) || !(g.mid_right.y < g.mid_right.x) || g.centre.y != g.centre.x)
            return fail(at + ": gap map is not attracting to b_k");
        rep.passed.push_back(at + (sampled ? ": pieces (residue sample), gap invariance"
                                           : ": pieces, continuity, gap invariance"));
    }
    Rational tail_probe = plan.tail_top() / 2;
    if (model.eval(tail_probe) != tail_probe) return fail("identity tail");
    rep.passed.push_back("identity tail [0, a_{2K}]");

    if (const auto& map = model.map()) {
        // Both routes are piecewise affine; agreeing on every node of the map
        // and at every closed-form breakpoint makes them equal.
        for (const auto& n : map->nodes())
            if (model.eval(n.x) != n.y) return fail("node list disagrees with closed form at x = " + to_fraction(n.x));
        for (std::size_t k = 0; k < plan.levels; ++k) {
            const auto& L = plan.level[k];
            for (Integer j = 0; j <= L.ell; ++j) {
                Rational x = L.c(j);
                if (map->eval(x) != model.eval(x))
                    return fail("node list disagrees with closed form at x = " + to_fraction(x));
                if (j < L.ell) {
                    Rational mid = x + L.eps / 2;
                    if (map->eval(mid) != model.eval(mid))
                        return fail("node list disagrees with closed form at x = " + to_fraction(mid));
                }
            }
        }
        rep.passed.push_back("materialized map matches closed form (" + std::to_string(map->size()) + " nodes)");
    }

    for (std::size_t k = 0; k < plan.levels; ++k) {
        const auto& L = plan.level[k];
        std::size_t n = opt.cylinder_depth;
        auto view = model.markov_view(k);
        Rational scale = model.full_variant() ? Rational(L.eps / 2) : L.eps;
        auto cyl = count_cylinders(view, n, scale, fbeta_dynamics(model), opt.representative_cap);
        Integer predicted = predicted_count(plan, k, n);
        if (cyl.record.count < predicted)
            return fail("level " + std::to_string(k) + ": cylinder count " + cyl.record.count.get_str() +
                        " below prediction " + predicted.get_str());
        rep.passed.push_back("level " + std::to_string(k) + ": cylinder count " + cyl.record.count.get_str() +
                             " >= predicted " + predicted.get_str() +
                             (cyl.record.certified ? " (certified)" : " (" + cyl.note + ")"));
    }
    return rep;
}

// ---- text formats -----------------------------------------------------------------

inline constexpr const char* plan_header = "mmdlab-fbeta-plan 1";
inline constexpr const char* model_header = "mmdlab-fbeta-model 1";

inline std::string variant_name(FBetaVariant v) { return v == FBetaVariant::full ? "full" : "standard"; }

inline FBetaVariant parse_variant(const std::string& s) {
    if (s == "full") return FBetaVariant::full;
    if (s == "standard" || s == "none") return FBetaVariant::standard;
    throw ParseError("unknown variant '" + s + "'");
}

inline void write_plan_body(std::ostream& os, const FBetaPlan& plan) {
    os << "beta = " << to_fraction(plan.beta) << '\n';
    os << "K = " << plan.levels << '\n';
    os << "seed_a1 = " << to_fraction(plan.seed_a1) << '\n';
    os << "variant = " << variant_name(plan.variant) << '\n';
    os << "# level = a_even a_odd ell i eps b\n";
    for (std::size_t k = 0; k < plan.levels; ++k) {
        const auto& L = plan.level[k];
        os << "level." << k << " = " << to_fraction(L.a_even) << ' ' << to_fraction(L.a_odd) << ' ' << L.ell.get_str()
           << ' ' << L.i.get_str() << ' ' << to_fraction(L.eps) << ' ' << to_fraction(L.b) << '\n';
    }
}

inline void write_plan(std::ostream& os, const FBetaPlan& plan) {
    os << plan_header << '\n';
    write_plan_body(os, plan);
}

namespace detail {

inline std::map<std::string, std::string> read_key_values(std::istream& is, const std::string& stop = {}) {
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!stop.empty() && line == stop) break;
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find(" = ");
        if (eq == std::string::npos) throw ParseError("expected 'key = value': " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return kv;
}

inline const std::string& require_key(const std::map<std::string, std::string>& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParseError("missing key '" + key + "'");
    return it->second;
}

inline std::size_t parse_count(const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        throw ParseError("not a non-negative integer: '" + s + "'");
    return std::stoul(s);
}

// Rebuilds the plan from its parameters and checks it against the stored table.
inline FBetaPlan plan_from_keys(const std::map<std::string, std::string>& kv) {
    Rational beta = parse_rational(require_key(kv, "beta"));
    std::size_t levels = parse_count(require_key(kv, "K"));
    Rational seed = parse_rational(require_key(kv, "seed_a1"));
    FBetaVariant variant = parse_variant(require_key(kv, "variant"));
    FBetaPlan plan = plan_sequences(beta, levels, seed, variant);
    for (std::size_t k = 0; k < levels; ++k) {
        auto it = kv.find("level." + std::to_string(k));
        if (it == kv.end()) continue;
        std::istringstream row(it->second);
        std::string a_even, a_odd, ell, i, eps, b;
        if (!(row >> a_even >> a_odd >> ell >> i >> eps >> b)) throw ParseError("short level row " + it->first);
        const auto& L = plan.level[k];
        if (parse_rational(a_even) != L.a_even || parse_rational(a_odd) != L.a_odd || Integer(ell) != L.ell ||
            Integer(i) != L.i || parse_rational(eps) != L.eps || parse_rational(b) != L.b)
            throw ContractError("stored level " + std::to_string(k) + " does not match the recomputed plan");
    }
    return plan;
}

} // namespace detail

inline FBetaPlan read_plan(std::istream& is) {
    std::string header;
    std::getline(is, header);
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header != plan_header) throw ParseError("unsupported plan header: '" + header + "'");
    return detail::plan_from_keys(detail::read_key_values(is));
}

inline std::string view_row(const FullBranchSystem& v) {
    return to_fraction(v.core.lo) + ' ' + to_fraction(v.core.hi) + ' ' + to_fraction(v.first) + ' ' +
           to_fraction(v.width) + ' ' + to_fraction(v.stride) + ' ' + v.count.get_str() + ' ' +
           (v.pattern == BranchPattern::increasing ? "increasing" : "alternating") + ' ' +
           to_fraction(v.separation_scale);
}

// Model = plan block, Markov views, then either the PwaMap node block or
// "map = omitted" when the map exceeds the node budget.
inline void write_model(std::ostream& os, const FBetaModel& model) {
    os << model_header << '\n';
    write_plan_body(os, model.plan());
    os << "# view = core_lo core_hi first width stride count pattern scale\n";
    for (std::size_t k = 0; k < model.levels(); ++k) os << "view." << k << " = " << view_row(model.markov_view(k)) << '\n';
    if (model.map()) {
        os << "map = nodes " << model.map()->size() << '\n';
        os << "end-header\n";
        write_pwa(os, *model.map());
    } else {
        os << "map = omitted " << model.node_estimate().get_str() << '\n';
        os << "end-header\n";
    }
}

inline FBetaModel read_model(std::istream& is, std::size_t node_budget = default_node_budget) {
    std::string header;
    std::getline(is, header);
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header != model_header) throw ParseError("unsupported model header: '" + header + "'");
    auto kv = detail::read_key_values(is, "end-header");
    FBetaModel model(detail::plan_from_keys(kv), node_budget);
    for (std::size_t k = 0; k < model.levels(); ++k) {
        auto it = kv.find("view." + std::to_string(k));
        if (it != kv.end() && it->second != view_row(model.markov_view(k)))
            throw ContractError("stored view " + std::to_string(k) + " does not match the plan");
    }
    const std::string& m = detail::require_key(kv, "map");
    if (m.rfind("nodes", 0) == 0) {
        PwaMap stored = read_pwa(is);
        if (!model.map() || !(stored == *model.map()))
            throw ContractError("stored node list does not match the plan");
    }
    return model;
}

} // namespace mmdlab
