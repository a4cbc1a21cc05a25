#pragma once

// Dynamical metric d_n, (n, eps)-separated set counting and the
// entropy-at-scale / metric mean dimension estimators built on it.

#include <algorithm>
#include <bit>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mmdlab/error.hpp"
#include "mmdlab/parallel.hpp"
#include "mmdlab/pwa_map.hpp"
#include "mmdlab/rational.hpp"

namespace mmdlab {

template <class F>
concept IntervalDynamics = requires(const F& f, const Rational& x) {
    { f(x) } -> std::convertible_to<Rational>;
};

enum class CountMethod { greedy_grid, exhaustive_grid, cylinder_exact };

inline std::string_view method_name(CountMethod m) {
    switch (m) {
    case CountMethod::greedy_grid: return "greedy-grid";
    case CountMethod::exhaustive_grid: return "exhaustive-grid";
    case CountMethod::cylinder_exact: return "cylinder-exact";
    }
    return "?";
}

inline CountMethod parse_method(std::string_view s) {
    if (s == "greedy-grid") return CountMethod::greedy_grid;
    if (s == "exhaustive-grid") return CountMethod::exhaustive_grid;
    if (s == "cylinder-exact") return CountMethod::cylinder_exact;
    throw ParseError("unknown count method '" + std::string(s) + "'");
}

struct CountRecord {
    std::size_t n = 0;
    Rational epsilon;
    Integer count = 1;
    CountMethod method = CountMethod::greedy_grid;
    std::optional<Rational> grid;
    // For cylinder counts: representatives were materialized and verified
    // pairwise separated. Grid and exhaustive counts are always certified
    // lower bounds (the witness set is explicit).
    bool certified = false;
};

// x, f(x), ..., f^{n-1}(x).
template <IntervalDynamics F>
std::vector<Rational> orbit(const F& f, const Rational& x, std::size_t n) {
    std::vector<Rational> out;
    out.reserve(n);
    Rational cur = x;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) cur = f(cur);
        out.push_back(cur);
    }
    return out;
}

namespace detail {

inline Rational sup_gap(const std::vector<Rational>& a, const std::vector<Rational>& b) {
    Rational best = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        Rational d = abs(a[i] - b[i]);
        if (d > best) best = d;
    }
    return best;
}

inline bool within(const std::vector<Rational>& a, const std::vector<Rational>& b, const Rational& eps) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (abs(a[i] - b[i]) > eps) return false;
    return true;
}

} // namespace detail

// max_{0 <= i < n} |f^i(x) - f^i(y)|, by pointwise orbit evaluation.
template <IntervalDynamics F>
Rational dn_distance(const F& f, const Rational& x, const Rational& y, std::size_t n) {
    if (n == 0) throw DomainError("d_n needs n >= 1");
    return detail::sup_gap(orbit(f, x, n), orbit(f, y, n));
}

// Exact neighbour index for sup-norm vectors at scale eps. Vectors are
// bucketed by floor(v_i / eps) on their first few coordinates; two vectors
// within eps of each other sit in adjacent buckets, so a query inspects
// 3^D buckets and then compares candidates exactly.
class SeparationIndex {
public:
    SeparationIndex(Rational eps, std::size_t key_dims = 3) : eps_(std::move(eps)), key_dims_(key_dims) {
        if (eps_ <= 0) throw DomainError("separation scale must be positive");
    }

    // Index of a stored vector at sup-distance <= eps from v, if any.
    std::optional<std::size_t> find_close(const std::vector<Rational>& v) const {
        Key base = key_of(v);
        Key probe = base;
        std::optional<std::size_t> hit;
        visit_neighbours(base, probe, 0, [&](const Key& k) {
            if (hit) return;
            auto it = buckets_.find(k);
            if (it == buckets_.end()) return;
            for (std::size_t idx : it->second) {
                if (detail::within(points_[idx], v, eps_)) {
                    hit = idx;
                    return;
                }
            }
        });
        return hit;
    }

    std::size_t insert(std::vector<Rational> v) {
        std::size_t idx = points_.size();
        buckets_[key_of(v)].push_back(idx);
        points_.push_back(std::move(v));
        return idx;
    }

    const std::vector<std::vector<Rational>>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }

private:
    using Key = std::vector<std::int64_t>;
    struct KeyHash {
        std::size_t operator()(const Key& k) const noexcept {
            std::size_t h = 1469598103934665603ull;
            for (auto v : k) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ull;
            return h;
        }
    };

    Key key_of(const std::vector<Rational>& v) const {
        std::size_t dims = std::min(key_dims_, v.size());
        Key k(dims);
        for (std::size_t i = 0; i < dims; ++i) {
            Integer cell = floor(Rational(v[i] / eps_));
            if (!cell.fits_slong_p()) throw ResourceError("bucket coordinate out of range");
            k[i] = cell.get_si();
        }
        return k;
    }

    template <class Visit>
    static void visit_neighbours(const Key& base, Key& probe, std::size_t dim, Visit&& visit) {
        if (dim == base.size()) {
            visit(probe);
            return;
        }
        for (std::int64_t d = -1; d <= 1; ++d) {
            probe[dim] = base[dim] + d;
            visit_neighbours(base, probe, dim + 1, visit);
        }
        probe[dim] = base[dim];
    }

    Rational eps_;
    std::size_t key_dims_;
    std::vector<std::vector<Rational>> points_;
    std::unordered_map<Key, std::vector<std::size_t>, KeyHash> buckets_;
};

namespace detail {

// Splits `ids` into chains along coordinate `dim` (consecutive sorted values
// more than eps apart start a new chain). Two vectors within eps in sup norm
// always share a chain, so close pairs are found inside the leaves.
inline void close_pairs_in(const std::vector<std::vector<Rational>>& v, std::vector<std::size_t> ids,
                           std::size_t dim, const Rational& eps,
                           std::optional<std::pair<std::size_t, std::size_t>>& best) {
    constexpr std::size_t leaf = 16;
    std::size_t dims = v[ids.front()].size();
    if (ids.size() <= leaf || dim == dims) {
        for (std::size_t a = 0; a < ids.size(); ++a)
            for (std::size_t b = a + 1; b < ids.size(); ++b) {
                std::pair<std::size_t, std::size_t> p = std::minmax(ids[a], ids[b]);
                if (best && std::pair(p.second, p.first) >= std::pair(best->second, best->first)) continue;
                if (within(v[p.first], v[p.second], eps)) best = p;
            }
        return;
    }
    std::sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) { return v[a][dim] < v[b][dim]; });
    std::size_t start = 0;
    for (std::size_t i = 1; i <= ids.size(); ++i) {
        if (i < ids.size() && v[ids[i]][dim] - v[ids[i - 1]][dim] <= eps) continue;
        if (i - start > 1)
            close_pairs_in(v, std::vector<std::size_t>(ids.begin() + static_cast<std::ptrdiff_t>(start),
                                                       ids.begin() + static_cast<std::ptrdiff_t>(i)),
                           dim + 1, eps, best);
        start = i;
    }
}

} // namespace detail

// Pair (j, i), j < i, at sup-distance <= eps with the smallest i (then j), if any.
inline std::optional<std::pair<std::size_t, std::size_t>>
find_unseparated_pair(const std::vector<std::vector<Rational>>& vectors, const Rational& eps) {
    if (eps <= 0) throw DomainError("separation scale must be positive");
    std::optional<std::pair<std::size_t, std::size_t>> best;
    if (vectors.size() < 2) return best;
    std::vector<std::size_t> ids(vectors.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    detail::close_pairs_in(vectors, std::move(ids), 0, eps, best);
    return best;
}

// ---- grid and subset counting -------------------------------------------

// 0, h, 2h, ... <= 1, plus 1 itself.
inline std::vector<Rational> grid_points(const Rational& resolution) {
    if (resolution <= 0) throw DomainError("grid resolution must be positive");
    Integer steps = floor(Rational(1 / resolution));
    if (!steps.fits_ulong_p() || steps > 50'000'000) throw ResourceError("grid too fine");
    std::vector<Rational> pts;
    pts.reserve(steps.get_ui() + 2);
    for (unsigned long k = 0; k <= steps.get_ui(); ++k) pts.push_back(resolution * k);
    if (pts.back() != 1) pts.push_back(1);
    return pts;
}

// Left-to-right greedy: keeps a point when it is (n, eps)-separated from
// every point kept so far. The result is maximal by inclusion.
template <IntervalDynamics F>
std::vector<std::size_t> greedy_separated_subset(const F& f, std::span<const Rational> points, std::size_t n,
                                                 const Rational& eps) {
    if (n == 0) throw DomainError("n must be >= 1");
    if (eps <= 0) throw DomainError("epsilon must be positive");
    SeparationIndex index(eps);
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < points.size(); ++i) {
        auto orb = orbit(f, points[i], n);
        if (!index.find_close(orb)) {
            index.insert(std::move(orb));
            kept.push_back(i);
        }
    }
    return kept;
}

template <IntervalDynamics F>
CountRecord count_separated_greedy(const F& f, std::size_t n, const Rational& eps, const Rational& grid) {
    if (eps <= 0) throw DomainError("epsilon must be positive");
    if (grid <= 0) throw PrecisionError("grid resolution must be positive");
    if (grid * 4 > eps)
        throw PrecisionError("grid resolution " + to_fraction(grid) + " is coarser than epsilon/4 = " +
                             to_fraction(Rational(eps / 4)));
    auto pts = grid_points(grid);
    auto kept = greedy_separated_subset(f, std::span<const Rational>(pts), n, eps);
    return CountRecord{n, eps, Integer(static_cast<unsigned long>(kept.size())), CountMethod::greedy_grid, grid, true};
}

inline constexpr std::size_t exhaustive_point_limit = 14;

namespace detail {

inline void max_clique(std::uint32_t candidates, std::uint32_t chosen, const std::vector<std::uint32_t>& adj,
                       std::uint32_t& best) {
    if (candidates == 0) {
        if (std::popcount(chosen) > std::popcount(best)) best = chosen;
        return;
    }
    if (std::popcount(chosen) + std::popcount(candidates) <= std::popcount(best)) return;
    int v = std::countr_zero(candidates);
    std::uint32_t bit = 1u << v;
    max_clique(candidates & adj[static_cast<std::size_t>(v)], chosen | bit, adj, best);
    max_clique(candidates & ~bit, chosen, adj, best);
}

} // namespace detail

// Indices of a maximum (n, eps)-separated subset of `points` (exact).
template <IntervalDynamics F>
std::vector<std::size_t> max_separated_subset(const F& f, std::span<const Rational> points, std::size_t n,
                                              const Rational& eps) {
    if (n == 0) throw DomainError("n must be >= 1");
    if (eps <= 0) throw DomainError("epsilon must be positive");
    if (points.size() > exhaustive_point_limit)
        throw ResourceError("exhaustive count limited to " + std::to_string(exhaustive_point_limit) + " points, got " +
                            std::to_string(points.size()));
    std::vector<std::vector<Rational>> orbits;
    orbits.reserve(points.size());
    for (const auto& p : points) orbits.push_back(orbit(f, p, n));
    std::vector<std::uint32_t> adj(points.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j)
            if (!detail::within(orbits[i], orbits[j], eps)) {
                adj[i] |= 1u << j;
                adj[j] |= 1u << i;
            }
    std::uint32_t all = points.empty() ? 0u : static_cast<std::uint32_t>((1ull << points.size()) - 1);
    std::uint32_t best = 0;
    detail::max_clique(all, 0, adj, best);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < points.size(); ++i)
        if (best & (1u << i)) out.push_back(i);
    return out;
}

template <IntervalDynamics F>
CountRecord count_separated_exhaustive(const F& f, std::size_t n, const Rational& eps,
                                       std::span<const Rational> points) {
    auto best = max_separated_subset(f, points, n, eps);
    return CountRecord{n, eps, Integer(static_cast<unsigned long>(best.size())), CountMethod::exhaustive_grid,
                       std::nullopt, true};
}

// ---- full-branch Markov systems --------------------------------------------

enum class BranchPattern { increasing, alternating };

// B full branches on an arithmetic lattice of domains inside a core
// interval: branch j has domain [first + j*stride, first + j*stride + width]
// and maps it affinely onto the core (increasing, or alternating starting
// increasing). `separation_scale` is the declared eps* the lattice is
// certified at (0 when none is declared).
struct FullBranchSystem {
    Interval core;
    Rational first;
    Rational width;
    Rational stride;
    Integer count = 1;
    BranchPattern pattern = BranchPattern::increasing;
    Rational separation_scale = 0;

    static FullBranchSystem single(const Interval& core) {
        return {core, core.lo, core.length(), core.length(), 1, BranchPattern::increasing, 0};
    }

    void validate() const {
        if (!(core.lo < core.hi)) throw ContractError("full-branch system needs a non-degenerate core");
        if (count < 1) throw ContractError("full-branch system needs at least one branch");
        if (width <= 0) throw ContractError("branch domains must have positive width");
        if (count > 1 && stride < width) throw ContractError("branch domains overlap (stride < width)");
        if (first < core.lo || last_domain_end() > core.hi)
            throw ContractError("branch domains must lie inside the core " + to_string(core));
        if (separation_scale < 0) throw ContractError("negative separation scale");
        if (count > 1 && separation_scale > 0 && !(min_gap() > separation_scale))
            throw ContractError("declared separation scale " + to_fraction(separation_scale) +
                                " is not below the domain gap " + to_fraction(min_gap()));
    }

    Rational min_gap() const { return stride - width; }
    Rational last_domain_end() const { return first + stride * Rational(count - 1) + width; }

    Interval domain(const Integer& j) const {
        Rational lo = first + stride * Rational(j);
        return {lo, lo + width};
    }

    bool increasing(const Integer& j) const {
        return pattern == BranchPattern::increasing || mpz_even_p(j.get_mpz_t());
    }

    // Branch containing x, if any.
    std::optional<Integer> branch_of(const Rational& x) const {
        if (x < first) return std::nullopt;
        Integer j = floor(Rational((x - first) / stride));
        if (j >= count) j = count - 1;
        if (x <= first + stride * Rational(j) + width) return j;
        return std::nullopt;
    }

    Rational branch_value(const Integer& j, const Rational& x) const {
        Interval d = domain(j);
        Rational t = (x - d.lo) / width;
        return increasing(j) ? Rational(core.lo + t * core.length()) : Rational(core.hi - t * core.length());
    }

    // Declared dynamics on the union of branch domains.
    Rational operator()(const Rational& x) const {
        auto j = branch_of(x);
        if (!j) throw DomainError("x = " + to_fraction(x) + " is outside every branch domain");
        return branch_value(*j, x);
    }

    // Preimage under branch j of a sub-interval of the core.
    Interval pull_back(const Integer& j, const Interval& target) const {
        Interval d = domain(j);
        Rational s = width / core.length();
        if (increasing(j)) return {d.lo + (target.lo - core.lo) * s, d.lo + (target.hi - core.lo) * s};
        return {d.lo + (core.hi - target.hi) * s, d.lo + (core.hi - target.lo) * s};
    }

    // Image of the system under x -> offset + scale * x (scale > 0).
    FullBranchSystem transported(const Rational& offset, const Rational& scale) const {
        if (scale <= 0) throw DomainError("transport scale must be positive");
        return {{offset + scale * core.lo, offset + scale * core.hi},
                offset + scale * first,
                scale * width,
                scale * stride,
                count,
                pattern,
                scale * separation_scale};
    }

    // Exact width of every depth-n cylinder: width^n / |core|^{n-1}.
    Rational cylinder_width(std::size_t n) const {
        if (n == 0) return core.length();
        return pow(width, static_cast<unsigned long>(n)) / pow(core.length(), static_cast<unsigned long>(n - 1));
    }
};

// The map as a full-branch system, when its pieces have equal width and
// each maps onto the common value range (increasing throughout, or
// alternating starting increasing).
inline std::optional<FullBranchSystem> lattice_of(const PwaMap& map) {
    const auto& ns = map.nodes();
    Rational lo = ns[0].y, hi = ns[0].y;
    for (const auto& n : ns) {
        if (n.y < lo) lo = n.y;
        if (n.y > hi) hi = n.y;
    }
    if (!(lo < hi) || lo > 0 || hi < 1) return std::nullopt;
    Rational width = ns[1].x - ns[0].x;
    bool all_up = true, alternating = true;
    for (std::size_t i = 0; i + 1 < ns.size(); ++i) {
        if (ns[i + 1].x - ns[i].x != width) return std::nullopt;
        bool up = ns[i].y == lo && ns[i + 1].y == hi;
        bool down = ns[i].y == hi && ns[i + 1].y == lo;
        if (!up && !down) return std::nullopt;
        all_up = all_up && up;
        alternating = alternating && (i % 2 == 0 ? up : down);
    }
    if (!all_up && !alternating) return std::nullopt;
    FullBranchSystem sys{{lo, hi}, 0, width, width, Integer(static_cast<unsigned long>(map.pieces())),
                         all_up ? BranchPattern::increasing : BranchPattern::alternating, 0};
    return sys;
}

struct CylinderCount {
    CountRecord record;
    std::vector<Rational> representatives; // cylinder midpoints, itinerary order
    std::string note;
};

inline constexpr unsigned long default_representative_cap = 1ul << 18;

// Depth-n cylinders of a full-branch system, in lexicographic itinerary order.
inline std::vector<Interval> enumerate_cylinders(const FullBranchSystem& sys, std::size_t n) {
    sys.validate();
    if (!sys.count.fits_ulong_p()) throw ResourceError("too many branches to enumerate");
    unsigned long b = sys.count.get_ui();
    std::vector<Interval> level{sys.core};
    for (std::size_t depth = 0; depth < n; ++depth) {
        std::vector<Interval> next;
        next.reserve(level.size() * b);
        for (unsigned long j = 0; j < b; ++j)
            for (const auto& c : level) next.push_back(sys.pull_back(Integer(j), c));
        level = std::move(next);
    }
    return level;
}

// Counts B^n depth-n cylinders. When the lattice gaps exceed eps and B^n is
// within `cap`, the cylinder midpoints are materialized, their orbits are
// computed with `dynamics` (checked against the declared branches step by
// step) and verified pairwise (n, eps)-separated.
template <IntervalDynamics F>
CylinderCount count_cylinders(const FullBranchSystem& sys, std::size_t n, const Rational& eps, const F& dynamics,
                              unsigned long cap = default_representative_cap) {
    sys.validate();
    if (eps <= 0) throw DomainError("epsilon must be positive");
    CylinderCount out;
    out.record = CountRecord{n, eps, pow(sys.count, static_cast<unsigned long>(n)), CountMethod::cylinder_exact,
                             std::nullopt, false};
    if (n == 0) {
        out.representatives = {sys.core.midpoint()};
        out.record.certified = true;
        return out;
    }
    if (sys.count > 1 && !(sys.min_gap() > eps)) {
        out.note = "domain gap " + to_fraction(sys.min_gap()) + " does not exceed epsilon; count not certified";
        return out;
    }
    if (out.record.count > cap) {
        out.note = "B^n = " + out.record.count.get_str() + " exceeds the representative cap; gap certificate only";
        return out;
    }
    auto cylinders = enumerate_cylinders(sys, n);
    unsigned long b = sys.count.get_ui();
    std::vector<std::vector<Rational>> orbits;
    orbits.reserve(cylinders.size());
    out.representatives.reserve(cylinders.size());
    for (std::size_t idx = 0; idx < cylinders.size(); ++idx) {
        Rational x = cylinders[idx].midpoint();
        // itinerary digits, most significant first
        std::vector<unsigned long> itin(n);
        std::size_t rest = idx;
        for (std::size_t t = n; t-- > 0;) {
            itin[t] = rest % b;
            rest /= b;
        }
        std::vector<Rational> orb;
        orb.reserve(n);
        Rational cur = x;
        for (std::size_t t = 0; t < n; ++t) {
            Interval d = sys.domain(Integer(itin[t]));
            if (!d.contains(cur))
                throw ContractError("orbit of cylinder representative " + to_fraction(x) + " leaves branch domain " +
                                    to_string(d) + " at step " + std::to_string(t));
            orb.push_back(cur);
            if (t + 1 < n) {
                Rational next = dynamics(cur);
                if (next != sys.branch_value(Integer(itin[t]), cur))
                    throw ContractError("dynamics disagree with the declared full branch at x = " + to_fraction(cur));
                cur = std::move(next);
            }
        }
        orbits.push_back(std::move(orb));
        out.representatives.push_back(std::move(x));
    }
    if (auto bad = find_unseparated_pair(orbits, eps)) {
        out.note = "representatives " + std::to_string(bad->first) + " and " + std::to_string(bad->second) +
                   " are not separated";
        return out;
    }
    out.record.certified = true;
    return out;
}

inline CylinderCount count_cylinders(const FullBranchSystem& sys, std::size_t n, const Rational& eps,
                                     unsigned long cap = default_representative_cap) {
    return count_cylinders(sys, n, eps, sys, cap);
}

// ---- rates and profiles ------------------------------------------------------

struct RateEstimate {
    Rational epsilon;
    std::size_t n_min = 1;
    std::size_t n_max = 2;
    double h_hat = 0;         // least-squares slope of log count against n (nats/iterate)
    double max_increment = 0; // max single-step increase of log count
    double ratio = 0;         // h_hat / |log eps|, clamped to [0, 1]
    std::vector<CountRecord> records;
};

struct SeparationReport {
    std::vector<RateEstimate> entries; // in the order of the requested scales
    double upper = 0;                  // max ratio over the tail half of the scales
    double lower = 0;                  // min ratio over the tail half
    std::size_t n_min = 1;
    std::size_t n_max = 2;
};

inline void check_window(std::size_t n_min, std::size_t n_max) {
    if (n_min < 1 || n_max <= n_min)
        throw DomainError("n window needs n_max > n_min >= 1, got [" + std::to_string(n_min) + ", " +
                          std::to_string(n_max) + "]");
}

// Records must share epsilon and cover consecutive n.
inline RateEstimate rate_from_records(std::vector<CountRecord> records) {
    if (records.size() < 2) throw DomainError("rate needs at least two counts");
    std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.n < b.n; });
    RateEstimate est;
    est.epsilon = records.front().epsilon;
    est.n_min = records.front().n;
    est.n_max = records.back().n;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    double m = static_cast<double>(records.size());
    std::vector<double> logs;
    for (const auto& r : records) {
        if (r.count < 1) throw ContractError("counts are always >= 1");
        double x = static_cast<double>(r.n);
        double y = log_of(r.count);
        logs.push_back(y);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    est.h_hat = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    est.max_increment = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < logs.size(); ++i) {
        double gap = static_cast<double>(records[i].n - records[i - 1].n);
        est.max_increment = std::max(est.max_increment, (logs[i] - logs[i - 1]) / gap);
    }
    double denom = std::fabs(log_of(est.epsilon));
    est.ratio = denom > 0 ? std::clamp(est.h_hat / denom, 0.0, 1.0) : 0.0;
    est.records = std::move(records);
    return est;
}

// A counter is any callable (n, eps) -> CountRecord.
template <class Counter>
concept SeparationCounter = requires(Counter c, std::size_t n, const Rational& eps) {
    { c(n, eps) } -> std::convertible_to<CountRecord>;
};

template <SeparationCounter Counter>
RateEstimate rate_at_scale(Counter&& counter, const Rational& eps, std::size_t n_min, std::size_t n_max,
                           std::size_t workers = 1) {
    check_window(n_min, n_max);
    if (eps <= 0) throw DomainError("epsilon must be positive");
    auto records = parallel_map(n_max - n_min + 1, workers,
                                [&](std::size_t i) -> CountRecord { return counter(n_min + i, eps); });
    return rate_from_records(std::move(records));
}

inline void finish_profile(SeparationReport& report) {
    std::size_t m = report.entries.size();
    std::size_t start = m / 2;
    if (start >= m) start = m - 1;
    report.upper = -1;
    report.lower = 2;
    for (std::size_t i = start; i < m; ++i) {
        report.upper = std::max(report.upper, report.entries[i].ratio);
        report.lower = std::min(report.lower, report.entries[i].ratio);
    }
}

inline void check_scales(const std::vector<Rational>& scales) {
    if (scales.empty()) throw DomainError("no scales given");
    for (std::size_t i = 0; i < scales.size(); ++i) {
        if (!(scales[i] > 0 && scales[i] < 1)) throw DomainError("scales must lie in (0,1)");
        if (i > 0 && !(scales[i] < scales[i - 1])) throw DomainError("scales must be strictly decreasing");
    }
}

// All (scale, n) jobs fan out together; the merge is by job index.
template <SeparationCounter Counter>
SeparationReport mdim_profile(Counter&& counter, const std::vector<Rational>& scales, std::size_t n_min,
                              std::size_t n_max, std::size_t workers = 1) {
    check_scales(scales);
    check_window(n_min, n_max);
    std::size_t per = n_max - n_min + 1;
    auto records = parallel_map(scales.size() * per, workers, [&](std::size_t job) -> CountRecord {
        return counter(n_min + job % per, scales[job / per]);
    });
    SeparationReport report;
    report.n_min = n_min;
    report.n_max = n_max;
    for (std::size_t s = 0; s < scales.size(); ++s) {
        std::vector<CountRecord> chunk(records.begin() + static_cast<std::ptrdiff_t>(s * per),
                                       records.begin() + static_cast<std::ptrdiff_t>((s + 1) * per));
        report.entries.push_back(rate_from_records(std::move(chunk)));
    }
    finish_profile(report);
    return report;
}

// ---- ready-made counters ---------------------------------------------------------

// Greedy on the grid eps/4 (or a fixed resolution).
template <IntervalDynamics F>
auto greedy_counter(const F& f, std::optional<Rational> grid = std::nullopt) {
    return [&f, grid](std::size_t n, const Rational& eps) {
        Rational h = grid ? *grid : Rational(eps / 4);
        return count_separated_greedy(f, n, eps, h);
    };
}

template <IntervalDynamics F>
auto cylinder_counter(const FullBranchSystem& sys, const F& dynamics, unsigned long cap = default_representative_cap) {
    return [&sys, &dynamics, cap](std::size_t n, const Rational& eps) {
        return count_cylinders(sys, n, eps, dynamics, cap).record;
    };
}

// ---- CSV / JSON export -----------------------------------------------------------------

inline constexpr const char* report_csv_header = "epsilon,n,count,method,grid,h_hat,ratio";

// One row per record, sorted by (epsilon, n, method).
inline void write_report_csv(std::ostream& os, const SeparationReport& report) {
    struct Row {
        const CountRecord* rec;
        const RateEstimate* est;
    };
    std::vector<Row> rows;
    for (const auto& e : report.entries)
        for (const auto& r : e.records) rows.push_back({&r, &e});
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (a.rec->epsilon != b.rec->epsilon) return a.rec->epsilon < b.rec->epsilon;
        if (a.rec->n != b.rec->n) return a.rec->n < b.rec->n;
        return method_name(a.rec->method) < method_name(b.rec->method);
    });
    os << report_csv_header << '\n';
    for (const auto& row : rows) {
        const CountRecord& r = *row.rec;
        os << to_fraction(r.epsilon) << ',' << r.n << ',' << r.count.get_str() << ',' << method_name(r.method) << ','
           << (r.grid ? to_fraction(*r.grid) : std::string()) << ',' << to_decimal(row.est->h_hat) << ','
           << to_decimal(row.est->ratio) << '\n';
    }
}

} // namespace mmdlab
