#pragma once

// Pseudo-horseshoes: a lap detector for interval maps and a rectangle
// model of coherent pseudo-horseshoes in the square [-delta, delta]^2.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mmdlab/error.hpp"
#include "mmdlab/parallel.hpp"
#include "mmdlab/pwa_map.hpp"
#include "mmdlab/rational.hpp"

namespace mmdlab {

// ---- one dimension ---------------------------------------------------------------

struct Lap {
    Interval domain;   // maximal strictly monotone run of the restricted map
    Interval image;
    bool increasing;
};

struct Horseshoe1DReport {
    Interval I;
    Interval C;
    Rational epsilon;
    Rational eta;
    std::size_t n_detected = 0;
    std::vector<Lap> laps;              // all laps of map restricted to I
    std::vector<Interval> lap_domains;  // chosen crossing domains (preimages of the widened core)
    std::vector<Rational> margins;      // realized margin eta' >= eta of each chosen lap
    std::optional<Rational> min_pairwise_gap;       // between chosen domains
    std::optional<Rational> min_pairwise_hausdorff; // between chosen domains
};

namespace detail {

inline std::vector<Lap> laps_of(const PwaMap& map, const Interval& I) {
    std::vector<Node> pts;
    pts.push_back({I.lo, map.eval(I.lo)});
    for (const auto& n : map.nodes())
        if (I.lo < n.x && n.x < I.hi) pts.push_back(n);
    if (I.hi != I.lo) pts.push_back({I.hi, map.eval(I.hi)});

    std::vector<Lap> laps;
    std::size_t start = 0;
    int dir = 0;
    auto close = [&](std::size_t end) {
        if (dir == 0) return;
        const Node& a = pts[start];
        const Node& b = pts[end];
        laps.push_back({{a.x, b.x}, dir > 0 ? Interval{a.y, b.y} : Interval{b.y, a.y}, dir > 0});
    };
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        int s = sgn(Rational(pts[i + 1].y - pts[i].y));
        if (s != dir) {
            close(i);
            start = i;
            dir = s;
        }
    }
    close(pts.size() - 1);
    return laps;
}

// x in the lap with map(x) = y, for y inside the lap's image.
inline Rational lap_preimage(const PwaMap& map, const Lap& lap, const Rational& y) {
    std::vector<Node> pts;
    pts.push_back({lap.domain.lo, map.eval(lap.domain.lo)});
    for (const auto& n : map.nodes())
        if (lap.domain.lo < n.x && n.x < lap.domain.hi) pts.push_back(n);
    pts.push_back({lap.domain.hi, map.eval(lap.domain.hi)});
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const Node& a = pts[i];
        const Node& b = pts[i + 1];
        const Rational& lo = lap.increasing ? a.y : b.y;
        const Rational& hi = lap.increasing ? b.y : a.y;
        if (lo <= y && y <= hi) return a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
    }
    throw ContractError("value outside lap image");
}

} // namespace detail

// Counts laps of map|I that cross [min C - eta, max C + eta], keeping the
// largest subfamily whose crossing domains are pairwise more than epsilon
// apart in Hausdorff distance. Along the line the chosen domains are
// ordered with monotone endpoints, so the earliest-first greedy choice is
// optimal.
inline Horseshoe1DReport detect_1d(const PwaMap& map, const Interval& I, const Interval& C, const Rational& epsilon,
                                   const Rational& eta) {
    if (C.degenerate()) throw DomainError("core " + to_string(C) + " is degenerate");
    if (!(I.lo >= 0 && I.hi <= 1) || !I.contains(C)) throw DomainError("need C inside I inside [0,1]");
    if (eta < 0) throw DomainError("margin eta must be >= 0");
    if (epsilon <= 0) throw DomainError("epsilon must be positive");

    Horseshoe1DReport rep{I, C, epsilon, eta};
    rep.laps = detail::laps_of(map, I);
    Interval target{C.lo - eta, C.hi + eta};
    std::vector<std::pair<Interval, Rational>> crossing;
    for (const auto& lap : rep.laps) {
        if (!lap.image.contains(target)) continue;
        Rational x0 = detail::lap_preimage(map, lap, lap.increasing ? target.lo : target.hi);
        Rational x1 = detail::lap_preimage(map, lap, lap.increasing ? target.hi : target.lo);
        Rational margin = std::min(Rational(C.lo - lap.image.lo), Rational(lap.image.hi - C.hi));
        crossing.push_back({{x0, x1}, margin});
    }
    for (const auto& [dom, margin] : crossing) {
        if (!rep.lap_domains.empty() && !(hausdorff(rep.lap_domains.back(), dom) > epsilon)) continue;
        rep.lap_domains.push_back(dom);
        rep.margins.push_back(margin);
    }
    rep.n_detected = rep.lap_domains.size();
    for (std::size_t a = 0; a < rep.lap_domains.size(); ++a)
        for (std::size_t b = a + 1; b < rep.lap_domains.size(); ++b) {
            Rational g = interval_gap(rep.lap_domains[a], rep.lap_domains[b]);
            Rational h = hausdorff(rep.lap_domains[a], rep.lap_domains[b]);
            if (!rep.min_pairwise_gap || g < *rep.min_pairwise_gap) rep.min_pairwise_gap = g;
            if (!rep.min_pairwise_hausdorff || h < *rep.min_pairwise_hausdorff) rep.min_pairwise_hausdorff = h;
        }
    return rep;
}

// ---- two dimensions --------------------------------------------------------------

struct Point2 {
    Rational x;
    Rational y;

    friend bool operator==(const Point2& a, const Point2& b) { return a.x == b.x && a.y == b.y; }
};

struct Rect {
    Interval x;
    Interval y;

    bool contains(const Point2& p) const { return x.contains(p.x) && y.contains(p.y); }
    Point2 centre() const { return {x.midpoint(), y.midpoint()}; }
    friend bool operator==(const Rect& a, const Rect& b) { return a.x == b.x && a.y == b.y; }
};

inline std::optional<Rect> intersect(const Rect& a, const Rect& b) {
    Rational xl = std::max(a.x.lo, b.x.lo), xh = std::min(a.x.hi, b.x.hi);
    Rational yl = std::max(a.y.lo, b.y.lo), yh = std::min(a.y.hi, b.y.hi);
    if (xh < xl || yh < yl) return std::nullopt;
    return Rect{{xl, xh}, {yl, yh}};
}

inline std::string to_string(const Rect& r) { return to_string(r.x) + " x " + to_string(r.y); }

// Sup-norm gap between rectangles (0 if they meet).
inline Rational rect_gap(const Rect& a, const Rect& b) {
    return std::max(interval_gap(a.x, b.x), interval_gap(a.y, b.y));
}

// (x, y) -> (ax x + bx, ay y + by)
struct DiagonalAffine {
    Rational ax = 1, bx = 0, ay = 1, by = 0;

    Point2 operator()(const Point2& p) const { return {ax * p.x + bx, ay * p.y + by}; }

    Rect image(const Rect& r) const {
        Rational x0 = ax * r.x.lo + bx, x1 = ax * r.x.hi + bx;
        Rational y0 = ay * r.y.lo + by, y1 = ay * r.y.hi + by;
        return {{std::min(x0, x1), std::max(x0, x1)}, {std::min(y0, y1), std::max(y0, y1)}};
    }

    DiagonalAffine inverse() const {
        if (ax == 0 || ay == 0) throw ContractError("singular branch map");
        return {1 / ax, -bx / ax, 1 / ay, -by / ay};
    }

    // this o inner
    DiagonalAffine after(const DiagonalAffine& inner) const {
        return {ax * inner.ax, ax * inner.bx + bx, ay * inner.ay, ay * inner.by + by};
    }

    friend bool operator==(const DiagonalAffine& a, const DiagonalAffine& b) {
        return a.ax == b.ax && a.bx == b.bx && a.ay == b.ay && a.by == b.by;
    }
};

struct HorseshoeStage {
    std::vector<Rect> H;              // horizontal slabs
    std::vector<Rect> V;              // vertical strips, V[j] = psi[j](H[j])
    std::vector<DiagonalAffine> psi;
    std::vector<bool> flipped;        // psi reverses the vertical direction
};

struct Horseshoe2DModel {
    std::size_t N = 1;
    std::size_t p = 1;
    Rational delta;
    Rational epsilon;
    Rational width;
    std::vector<HorseshoeStage> stages;

    Rect square() const { return {{-delta, delta}, {-delta, delta}}; }

    // alpha with N = (1/eps)^(alpha dim), dim = 2
    double alpha() const {
        if (N <= 1) return 0;
        return std::log(static_cast<double>(N)) / (2 * std::fabs(log_of(epsilon)));
    }

    // Slab of stage s containing the point, if any.
    std::optional<std::size_t> slab_of(std::size_t s, const Point2& q) const {
        const auto& H = stages.at(s).H;
        for (std::size_t j = 0; j < H.size(); ++j)
            if (H[j].contains(q)) return j;
        return std::nullopt;
    }

    // Strip-local dynamics of stage s.
    Point2 step(std::size_t s, const Point2& q) const {
        auto j = slab_of(s, q);
        if (!j) throw DomainError("point (" + to_fraction(q.x) + ", " + to_fraction(q.y) + ") lies in no slab of stage " +
                                  std::to_string(s));
        return stages[s].psi[*j](q);
    }

    // q, F_0 q, F_1 F_0 q, ... (n points), stage index advancing mod p.
    std::vector<Point2> orbit(const Point2& q, std::size_t n) const {
        std::vector<Point2> out;
        out.reserve(n);
        Point2 cur = q;
        for (std::size_t t = 0; t < n; ++t) {
            out.push_back(cur);
            if (t + 1 < n) cur = step(t % p, cur);
        }
        return out;
    }
};

inline void check_packing(std::size_t N, const Rational& delta, const Rational& epsilon, const Rational& w) {
    if (N == 0) throw ContractError("type N must be >= 1");
    if (!(delta > 0)) throw ContractError("delta must be positive");
    if (!(epsilon > 0 && epsilon < delta)) throw ContractError("packing needs 0 < epsilon < delta");
    if (!(w > 0)) throw ContractError("packing needs strip width w > 0");
    if (N * (w + epsilon) > 2 * delta && N > 1)
        throw ContractError("packing needs N (w + epsilon) <= 2 delta: " + std::to_string(N) + " (" + to_fraction(w) +
                            " + " + to_fraction(epsilon) + ") > " + to_fraction(Rational(2 * delta)));
    if (w > 2 * delta) throw ContractError("strip width exceeds the square");
}

// Default width 2 delta / N - epsilon: the flush packing then leaves gaps
// N epsilon / (N - 1) > epsilon between strips. A single strip is the
// whole square.
inline Rational default_strip_width(std::size_t N, const Rational& delta, const Rational& epsilon) {
    if (N == 0) throw ContractError("type N must be >= 1");
    if (N == 1) return 2 * delta;
    return 2 * delta / Rational(N) - epsilon;
}

inline Horseshoe2DModel build_model_2d(std::size_t N, const Rational& delta, const Rational& epsilon, std::size_t p,
                                       std::optional<Rational> width = std::nullopt) {
    if (p == 0) throw ContractError("period p must be >= 1");
    if (N == 0) throw ContractError("type N must be >= 1");
    Rational w = width ? *width : default_strip_width(N, delta, epsilon);
    check_packing(N, delta, epsilon, w);
    Horseshoe2DModel m{N, p, delta, epsilon, w, {}};
    Rational gap = N > 1 ? Rational((2 * delta - Rational(N) * w) / Rational(N - 1)) : Rational(0);
    Rational two_delta = 2 * delta;
    for (std::size_t s = 0; s < p; ++s) {
        HorseshoeStage st;
        for (std::size_t j = 0; j < N; ++j) {
            Rational off = -delta + Rational(j) * (w + gap);
            Rect H{{-delta, delta}, {off, off + w}};
            bool flip = j % 2 == 1;
            DiagonalAffine psi;
            psi.ax = w / two_delta;
            psi.bx = off + delta * w / two_delta;
            psi.ay = flip ? Rational(-two_delta / w) : Rational(two_delta / w);
            psi.by = flip ? Rational(delta + off * two_delta / w) : Rational(-delta - off * two_delta / w);
            st.H.push_back(H);
            st.V.push_back(psi.image(H));
            st.psi.push_back(psi);
            st.flipped.push_back(flip);
        }
        m.stages.push_back(std::move(st));
    }
    return m;
}

struct Horseshoe2DCheck {
    bool ok = true;
    std::vector<std::string> passed;
    std::string failure;
};

inline Horseshoe2DCheck verify_conditions(const Horseshoe2DModel& m) {
    Horseshoe2DCheck rep;
    auto fail = [&](std::string what) {
        rep.ok = false;
        rep.failure = std::move(what);
        return rep;
    };
    auto name = [](const char* kind, std::size_t s, std::size_t j) {
        return std::string(kind) + "_{" + std::to_string(s) + "," + std::to_string(j) + "}";
    };
    if (m.stages.size() != m.p) return fail("stage count differs from p");
    Rect sq = m.square();
    for (std::size_t s = 0; s < m.p; ++s) {
        const auto& st = m.stages[s];
        if (st.H.size() != m.N || st.V.size() != m.N || st.psi.size() != m.N)
            return fail("stage " + std::to_string(s) + " does not carry N strips");
        for (std::size_t j = 0; j < m.N; ++j) {
            if (!sq.x.contains(st.H[j].x) || !sq.y.contains(st.H[j].y))
                return fail(name("H", s, j) + " leaves the square");
            if (!sq.x.contains(st.V[j].x) || !sq.y.contains(st.V[j].y))
                return fail(name("V", s, j) + " leaves the square");
            if (st.V[j].y != sq.y) return fail(name("V", s, j) + " does not meet both the bottom and the top edge");
            if (!(st.psi[j].image(st.H[j]) == st.V[j]))
                return fail("psi_{" + std::to_string(s) + "," + std::to_string(j) + "} does not carry " +
                            name("H", s, j) + " onto " + name("V", s, j));
        }
        for (const char* kind : {"H", "V"}) {
            const auto& strips = kind[0] == 'H' ? st.H : st.V;
            for (std::size_t a = 0; a < m.N; ++a)
                for (std::size_t b = a + 1; b < m.N; ++b) {
                    if (intersect(strips[a], strips[b]))
                        return fail(name(kind, s, a) + " and " + name(kind, s, b) + " overlap");
                    Rational g = rect_gap(strips[a], strips[b]);
                    if (!(g > m.epsilon))
                        return fail(name(kind, s, a) + " and " + name(kind, s, b) + " are " + to_fraction(g) +
                                    " apart, not more than epsilon = " + to_fraction(m.epsilon));
                }
        }
    }
    rep.passed.push_back("strips inside the square, branch maps onto their strips");
    rep.passed.push_back("vertical strips meet bottom and top edges");
    rep.passed.push_back("strips pairwise disjoint with gaps > epsilon");
    for (std::size_t s = 0; s < m.p; ++s) {
        std::size_t next = (s + 1) % m.p;
        for (std::size_t j1 = 0; j1 < m.N; ++j1)
            for (std::size_t j2 = 0; j2 < m.N; ++j2) {
                const Rect& V = m.stages[s].V[j1];
                const Rect& H = m.stages[next].H[j2];
                if (!(H.x.contains(V.x) && V.y.contains(H.y)))
                    return fail(name("V", s, j1) + " does not cross " + name("H", next, j2));
            }
    }
    rep.passed.push_back("coherence: every V_{s,j1} crosses every H_{s+1 mod p,j2}");
    return rep;
}

struct CertificateRow {
    std::vector<std::size_t> itinerary;
    Point2 point;
    Rational min_pairwise_dn;
};

struct SeparatedBound2D {
    std::size_t depth = 0; // p * ell
    Integer count;         // N^depth
    std::vector<Rect> sets;
    std::vector<CertificateRow> rows;
    Rational min_pairwise_dn; // over all pairs
};

inline constexpr std::size_t certificate_point_cap = 1u << 14;

namespace detail {

inline Rational sup_dist(const Point2& a, const Point2& b) {
    return std::max(Rational(abs(a.x - b.x)), Rational(abs(a.y - b.y)));
}

inline Rational orbit_dist(const std::vector<Point2>& a, const std::vector<Point2>& b) {
    Rational best = 0;
    for (std::size_t t = 0; t < a.size(); ++t) best = std::max(best, sup_dist(a[t], b[t]));
    return best;
}

} // namespace detail

// Nested sets K^ over p*ell steps: K^_{j0..jm} is the set of points whose
// first m+1 positions visit H_{0,j0}, H_{1,j1}, ... Every such set is a
// rectangle; its centre is the representative. All pairs are checked by
// direct orbit evaluation in the sup metric.
inline SeparatedBound2D separated_bound_2d(const Horseshoe2DModel& m, std::size_t ell, std::size_t workers = 1) {
    if (ell == 0) throw DomainError("ell must be >= 1");
    std::size_t depth = m.p * ell;
    SeparatedBound2D out;
    out.depth = depth;
    out.count = pow(Integer(static_cast<unsigned long>(m.N)), depth);
    if (out.count > certificate_point_cap)
        throw ResourceError("certificate would hold " + out.count.get_str() + " points (cap " +
                            std::to_string(certificate_point_cap) + ")");
    std::size_t total = out.count.get_ui();

    struct Node2 {
        Rect set;          // initial points
        DiagonalAffine phi; // time-t position of those points
        std::vector<std::size_t> itinerary;
    };
    std::vector<Node2> layer;
    for (std::size_t j = 0; j < m.N; ++j) layer.push_back({m.stages[0].H[j], {}, {j}});
    for (std::size_t t = 1; t < depth; ++t) {
        std::size_t prev = (t - 1) % m.p;
        std::size_t cur = t % m.p;
        std::vector<Node2> next;
        next.reserve(layer.size() * m.N);
        for (const auto& node : layer) {
            DiagonalAffine phi = m.stages[prev].psi[node.itinerary.back()].after(node.phi);
            Rect image = phi.image(node.set);
            for (std::size_t j = 0; j < m.N; ++j) {
                auto meet = intersect(image, m.stages[cur].H[j]);
                if (!meet || meet->x.degenerate() || meet->y.degenerate())
                    throw ContractError("coherence violation: empty K^ set at depth " + std::to_string(t) +
                                        " entering H_{" + std::to_string(cur) + "," + std::to_string(j) + "}");
                Node2 child{phi.inverse().image(*meet), phi, node.itinerary};
                child.itinerary.push_back(j);
                next.push_back(std::move(child));
            }
        }
        layer = std::move(next);
    }
    if (layer.size() != total) throw ContractError("K^ count differs from N^(p ell)");

    std::vector<std::vector<Point2>> orbits(total);
    for (std::size_t a = 0; a < total; ++a) {
        out.sets.push_back(layer[a].set);
        Point2 c = layer[a].set.centre();
        orbits[a] = m.orbit(c, depth);
        for (std::size_t t = 0; t < depth; ++t) {
            std::size_t s = t % m.p;
            if (!m.stages[s].H[layer[a].itinerary[t]].contains(orbits[a][t]))
                throw ContractError("representative leaves its itinerary at time " + std::to_string(t));
        }
        out.rows.push_back({layer[a].itinerary, c, 0});
    }
    auto mins = parallel_map(total, workers, [&](std::size_t a) {
        std::optional<Rational> best;
        for (std::size_t b = 0; b < total; ++b) {
            if (a == b) continue;
            Rational d = detail::orbit_dist(orbits[a], orbits[b]);
            if (!best || d < *best) best = d;
        }
        return best ? *best : Rational(0);
    });
    for (std::size_t a = 0; a < total; ++a) {
        out.rows[a].min_pairwise_dn = mins[a];
        if (total > 1 && !(mins[a] > m.epsilon))
            throw ContractError("representatives are not (p ell, epsilon)-separated at row " + std::to_string(a));
        if (a == 0 || mins[a] < out.min_pairwise_dn) out.min_pairwise_dn = mins[a];
    }
    return out;
}

// log(certified count) / (p ell) / |log eps| at the deepest ell <= ell_max
// whose certificate fits the cap.
inline double ratio_lower_bound(const Horseshoe2DModel& m, std::size_t ell_max, std::size_t workers = 1) {
    if (ell_max == 0) throw DomainError("ell_max must be >= 1");
    if (m.N <= 1) return 0;
    double best = 0;
    for (std::size_t ell = 1; ell <= ell_max; ++ell) {
        Integer count = pow(Integer(static_cast<unsigned long>(m.N)), m.p * ell);
        if (count > certificate_point_cap) break;
        auto cert = separated_bound_2d(m, ell, workers);
        best = log_of(cert.count) / static_cast<double>(cert.depth) / std::fabs(log_of(m.epsilon));
    }
    return best;
}

// ---- text formats ----------------------------------------------------------

inline constexpr const char* horseshoe_header = "mmdlab-horseshoe2d 1";
inline constexpr const char* certificate_csv_header = "itinerary,x,y,min_pairwise_dn";

inline std::string rect_row(const Rect& r) {
    return to_fraction(r.x.lo) + ' ' + to_fraction(r.x.hi) + ' ' + to_fraction(r.y.lo) + ' ' + to_fraction(r.y.hi);
}

inline void write_model_2d(std::ostream& os, const Horseshoe2DModel& m) {
    os << horseshoe_header << '\n';
    os << "N = " << m.N << "\np = " << m.p << "\ndelta = " << to_fraction(m.delta)
       << "\nepsilon = " << to_fraction(m.epsilon) << "\nwidth = " << to_fraction(m.width) << '\n';
    os << "# H, V = xlo xhi ylo yhi; psi = ax bx ay by\n";
    for (std::size_t s = 0; s < m.p; ++s)
        for (std::size_t j = 0; j < m.N; ++j) {
            const auto& st = m.stages[s];
            std::string key = std::to_string(s) + "." + std::to_string(j);
            os << "H." << key << " = " << rect_row(st.H[j]) << '\n';
            os << "V." << key << " = " << rect_row(st.V[j]) << '\n';
            const auto& a = st.psi[j];
            os << "psi." << key << " = " << to_fraction(a.ax) << ' ' << to_fraction(a.bx) << ' ' << to_fraction(a.ay)
               << ' ' << to_fraction(a.by) << '\n';
        }
}

inline Horseshoe2DModel read_model_2d(std::istream& is) {
    std::string line;
    std::getline(is, line);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != horseshoe_header) throw ParseError("unsupported horseshoe header: '" + line + "'");
    Horseshoe2DModel m;
    auto fractions = [](const std::string& v, std::size_t count) {
        std::istringstream in(v);
        std::vector<Rational> out;
        std::string tok;
        while (in >> tok) out.push_back(parse_rational(tok));
        if (out.size() != count) throw ParseError("expected " + std::to_string(count) + " fractions: " + v);
        return out;
    };
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find(" = ");
        if (eq == std::string::npos) throw ParseError("expected 'key = value': " + line);
        std::string key = line.substr(0, eq), val = line.substr(eq + 3);
        if (key == "N") {
            m.N = std::stoul(val);
        } else if (key == "p") {
            m.p = std::stoul(val);
            m.stages.assign(m.p, {});
        } else if (key == "delta") {
            m.delta = parse_rational(val);
        } else if (key == "epsilon") {
            m.epsilon = parse_rational(val);
        } else if (key == "width") {
            m.width = parse_rational(val);
        } else {
            auto d1 = key.find('.');
            auto d2 = key.find('.', d1 + 1);
            if (d1 == std::string::npos || d2 == std::string::npos) throw ParseError("unknown key " + key);
            std::string kind = key.substr(0, d1);
            std::size_t s = std::stoul(key.substr(d1 + 1, d2 - d1 - 1));
            std::size_t j = std::stoul(key.substr(d2 + 1));
            if (s >= m.stages.size() || j >= m.N) throw ParseError("strip index out of range: " + key);
            auto& st = m.stages[s];
            if (st.H.size() < m.N) {
                st.H.resize(m.N);
                st.V.resize(m.N);
                st.psi.resize(m.N);
                st.flipped.resize(m.N);
            }
            auto v = fractions(val, 4);
            if (kind == "H") {
                st.H[j] = {{v[0], v[1]}, {v[2], v[3]}};
            } else if (kind == "V") {
                st.V[j] = {{v[0], v[1]}, {v[2], v[3]}};
            } else if (kind == "psi") {
                st.psi[j] = {v[0], v[1], v[2], v[3]};
                st.flipped[j] = v[2] < 0;
            } else {
                throw ParseError("unknown key " + key);
            }
        }
    }
    return m;
}

inline std::string itinerary_text(const std::vector<std::size_t>& it) {
    std::string s;
    for (std::size_t t = 0; t < it.size(); ++t) {
        if (t) s += '-';
        s += std::to_string(it[t]);
    }
    return s;
}

inline void write_certificate_csv(std::ostream& os, const SeparatedBound2D& cert) {
    os << certificate_csv_header << '\n';
    for (const auto& r : cert.rows)
        os << itinerary_text(r.itinerary) << ',' << to_fraction(r.point.x) << ',' << to_fraction(r.point.y) << ','
           << to_fraction(r.min_pairwise_dn) << '\n';
}

} // namespace mmdlab
