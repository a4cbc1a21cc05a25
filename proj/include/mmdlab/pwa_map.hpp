#pragma once

// Continuous piecewise-affine self-maps of [0,1] with exact rational nodes.

#include <algorithm>
#include <cstddef>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mmdlab/error.hpp"
#include "mmdlab/rational.hpp"

namespace mmdlab {

struct Node {
    Rational x;
    Rational y;

    friend bool operator==(const Node& a, const Node& b) { return a.x == b.x && a.y == b.y; }
};

inline constexpr std::size_t default_node_budget = 1'000'000;

namespace detail {

inline bool collinear(const Node& a, const Node& b, const Node& c) {
    return (b.y - a.y) * (c.x - b.x) == (c.y - b.y) * (b.x - a.x);
}

// Drops exact duplicates and middle nodes of collinear triples.
inline std::vector<Node> canonical_nodes(std::vector<Node> nodes) {
    std::vector<Node> out;
    out.reserve(nodes.size());
    for (auto& n : nodes) {
        if (!out.empty() && out.back().x == n.x) {
            if (out.back().y != n.y)
                throw ContractError("discontinuity at x = " + to_fraction(n.x));
            continue;
        }
        while (out.size() >= 2 && collinear(out[out.size() - 2], out.back(), n)) out.pop_back();
        out.push_back(std::move(n));
    }
    return out;
}

} // namespace detail

class PwaMap {
public:
    // Validates the self-map contract and brings the nodes to canonical form.
    explicit PwaMap(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
        if (nodes_.size() < 2) throw ContractError("a PwaMap needs at least two nodes");
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const Node& n = nodes_[i];
            if (n.y < 0 || n.y > 1)
                throw ContractError("value outside [0,1] at node " + std::to_string(i) + ": y = " + to_fraction(n.y));
            if (i > 0 && !(nodes_[i - 1].x < n.x))
                throw ContractError("node x-coordinates not strictly increasing at node " + std::to_string(i));
        }
        if (nodes_.front().x != 0) throw ContractError("first node must sit at x = 0");
        if (nodes_.back().x != 1) throw ContractError("last node must sit at x = 1");
        nodes_ = detail::canonical_nodes(std::move(nodes_));
    }

    static PwaMap identity() { return PwaMap({{0, 0}, {1, 1}}); }
    static PwaMap constant(const Rational& c) { return PwaMap({{0, c}, {1, c}}); }
    static PwaMap tent() { return PwaMap({{0, 0}, {Rational(1, 2), 1}, {1, 0}}); }

    const std::vector<Node>& nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }
    std::size_t pieces() const { return nodes_.size() - 1; }

    bool is_identity() const { return nodes_.size() == 2 && nodes_[0].y == 0 && nodes_[1].y == 1; }

    // Index of the piece [x_i, x_{i+1}] containing x (the left one at a node).
    std::size_t piece_of(const Rational& x) const {
        if (x < 0 || x > 1) throw DomainError("x = " + to_fraction(x) + " outside [0,1]");
        auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x,
                                   [](const Rational& v, const Node& n) { return v < n.x; });
        std::size_t idx = static_cast<std::size_t>(it - nodes_.begin());
        if (idx == 0) return 0;
        return std::min(idx - 1, nodes_.size() - 2);
    }

    Rational eval(const Rational& x) const {
        std::size_t i = piece_of(x);
        const Node& a = nodes_[i];
        const Node& b = nodes_[i + 1];
        if (x == a.x) return a.y;
        if (x == b.x) return b.y;
        return a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x);
    }

    Rational operator()(const Rational& x) const { return eval(x); }

    Rational slope(std::size_t piece) const {
        const Node& a = nodes_.at(piece);
        const Node& b = nodes_.at(piece + 1);
        return (b.y - a.y) / (b.x - a.x);
    }

    // Largest absolute piece slope.
    Rational lipschitz() const {
        Rational best = 0;
        for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
            Rational s = abs(slope(i));
            if (s > best) best = s;
        }
        return best;
    }

    friend bool operator==(const PwaMap& a, const PwaMap& b) { return a.nodes_ == b.nodes_; }

private:
    std::vector<Node> nodes_;
};

inline Rational eval(const PwaMap& map, const Rational& x) { return map.eval(x); }

// outer o inner. Breakpoints are inner's nodes plus inner-preimages of
// outer's nodes; the node count is checked against `budget` before any
// node is materialized.
inline PwaMap compose(const PwaMap& outer, const PwaMap& inner, std::size_t budget = default_node_budget) {
    const auto& on = outer.nodes();
    const auto& in = inner.nodes();
    auto lower = [&](const Rational& y) {
        return std::lower_bound(on.begin(), on.end(), y, [](const Node& n, const Rational& v) { return n.x < v; });
    };
    auto upper = [&](const Rational& y) {
        return std::upper_bound(on.begin(), on.end(), y, [](const Rational& v, const Node& n) { return v < n.x; });
    };

    std::size_t estimate = in.size();
    for (std::size_t i = 0; i + 1 < in.size(); ++i) {
        const Rational& y0 = in[i].y;
        const Rational& y1 = in[i + 1].y;
        if (y0 == y1) continue;
        const Rational& lo = y0 < y1 ? y0 : y1;
        const Rational& hi = y0 < y1 ? y1 : y0;
        auto first = upper(lo);
        auto last = lower(hi);
        if (last > first) estimate += static_cast<std::size_t>(last - first);
    }
    if (estimate > budget)
        throw ResourceError("composition needs " + std::to_string(estimate) + " nodes, budget is " +
                            std::to_string(budget));

    std::vector<Node> out;
    out.reserve(estimate);
    out.push_back({in.front().x, outer.eval(in.front().y)});
    for (std::size_t i = 0; i + 1 < in.size(); ++i) {
        const Node& a = in[i];
        const Node& b = in[i + 1];
        if (a.y != b.y) {
            Rational scale = (b.x - a.x) / (b.y - a.y);
            if (a.y < b.y) {
                for (auto it = upper(a.y); it != on.end() && it->x < b.y; ++it)
                    out.push_back({a.x + (it->x - a.y) * scale, it->y});
            } else {
                auto stop = upper(b.y);
                for (auto it = lower(a.y); it != stop;) {
                    --it;
                    if (it->x <= b.y) break;
                    out.push_back({a.x + (it->x - a.y) * scale, it->y});
                }
            }
        }
        out.push_back({b.x, outer.eval(b.y)});
    }
    return PwaMap(std::move(out));
}

// n-fold composition; n = 0 is the identity.
inline PwaMap iterate(const PwaMap& map, std::size_t n, std::size_t budget = default_node_budget) {
    if (n == 0 || map.is_identity()) return PwaMap::identity();
    PwaMap result = map;
    for (std::size_t k = 2; k <= n; ++k) {
        try {
            result = compose(map, result, budget);
        } catch (const ResourceError& e) {
            throw ResourceError("iterate(n = " + std::to_string(n) + ") exceeded the node budget at depth " +
                                std::to_string(k) + ": " + e.what());
        }
    }
    return result;
}

// Merged, sorted breakpoint set of two maps.
inline std::vector<Rational> merged_breakpoints(const PwaMap& a, const PwaMap& b) {
    std::vector<Rational> xs;
    xs.reserve(a.size() + b.size());
    for (const auto& n : a.nodes()) xs.push_back(n.x);
    for (const auto& n : b.nodes()) xs.push_back(n.x);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    return xs;
}

// Uniform distance; the piecewise-affine difference peaks at a merged breakpoint.
inline Rational sup_distance(const PwaMap& a, const PwaMap& b) {
    Rational best = 0;
    for (const auto& x : merged_breakpoints(a, b)) {
        Rational d = abs(a.eval(x) - b.eval(x));
        if (d > best) best = d;
    }
    return best;
}

// Solution set of f(x) = x as maximal closed intervals, left to right.
inline std::vector<Interval> fixed_points(const PwaMap& map) {
    std::vector<Interval> raw;
    const auto& ns = map.nodes();
    for (std::size_t i = 0; i + 1 < ns.size(); ++i) {
        const Node& a = ns[i];
        const Node& b = ns[i + 1];
        Rational g0 = a.y - a.x;
        Rational g1 = b.y - b.x;
        if (g0 == 0 && g1 == 0) {
            raw.push_back({a.x, b.x});
        } else if (g0 == 0) {
            raw.push_back({a.x, a.x});
        } else if (g1 == 0) {
            raw.push_back({b.x, b.x});
        } else if ((g0 < 0) != (g1 < 0)) {
            Rational x = a.x + g0 * (b.x - a.x) / (g0 - g1);
            raw.push_back({x, x});
        }
    }
    std::vector<Interval> merged;
    for (auto& iv : raw) {
        if (!merged.empty() && iv.lo <= merged.back().hi) {
            if (iv.hi > merged.back().hi) merged.back().hi = iv.hi;
        } else {
            merged.push_back(iv);
        }
    }
    return merged;
}

// ---- text format -------------------------------------------------------
//
//   mmdlab-pwamap 1
//   p/q r/s        (one node per line, x then y)

inline constexpr const char* pwa_header = "mmdlab-pwamap 1";

inline void write_pwa(std::ostream& os, const PwaMap& map) {
    os << pwa_header << '\n';
    for (const auto& n : map.nodes()) os << to_fraction(n.x) << ' ' << to_fraction(n.y) << '\n';
}

inline std::string to_text(const PwaMap& map) {
    std::ostringstream os;
    write_pwa(os, map);
    return os.str();
}

// Reads node lines until end of stream or a line equal to `terminator`.
inline PwaMap read_pwa_body(std::istream& is, const std::string& terminator = {}) {
    std::vector<Node> nodes;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!terminator.empty() && line == terminator) break;
        if (line.empty()) continue;
        auto space = line.find(' ');
        if (space == std::string::npos) throw ParseError("node line needs 'x y': " + line);
        nodes.push_back({parse_rational(std::string_view(line).substr(0, space)),
                         parse_rational(std::string_view(line).substr(space + 1))});
    }
    return PwaMap(std::move(nodes));
}

inline PwaMap read_pwa(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw ParseError("empty PwaMap document");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header != pwa_header) throw ParseError("unsupported PwaMap header: '" + header + "'");
    return read_pwa_body(is);
}

inline PwaMap pwa_from_text(const std::string& text) {
    std::istringstream is(text);
    return read_pwa(is);
}

} // namespace mmdlab
