#pragma once

// Independent reference computations for the test suites. Nothing here
// calls the library routine it is used to check.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mmdlab/mmdlab.hpp"

namespace oracle {

using mmdlab::Integer;
using mmdlab::Node;
using mmdlab::PwaMap;
using mmdlab::Rational;

// Largest m with m^q <= x^p, by counting up from 0.
inline Integer floor_pow_naive(const Rational& x, unsigned long p, unsigned long q) {
    Rational xp = 1;
    for (unsigned long k = 0; k < p; ++k) xp *= x;
    Integer m = 0;
    for (;;) {
        Integer next = m + 1;
        Integer nq = 1;
        for (unsigned long k = 0; k < q; ++k) nq *= next;
        if (Rational(nq) > xp) return m;
        m = next;
    }
}

struct LevelScan {
    Integer ell;
    Integer i;
};

// Linear scan of odd ell > after for 4 floor((ell/gamma)^(p/q)) + 1 <= ell.
inline LevelScan scan_level(const Rational& gamma, unsigned long p, unsigned long q, const Integer& after) {
    Integer ell = after + 1;
    if (ell < 3) ell = 3;
    if (ell % 2 == 0) ell += 1;
    for (;; ell += 2) {
        Integer i = floor_pow_naive(Rational(ell) / gamma, p, q);
        if (4 * i + 1 <= ell) return {ell, i};
    }
}

// Pairwise check of strict (n, eps)-separation by orbit evaluation.
template <class F>
bool pairwise_separated(const F& f, const std::vector<Rational>& pts, std::size_t n, const Rational& eps) {
    std::vector<std::vector<Rational>> orbits;
    for (const auto& x : pts) orbits.push_back(mmdlab::orbit(f, x, n));
    for (std::size_t a = 0; a < orbits.size(); ++a)
        for (std::size_t b = a + 1; b < orbits.size(); ++b) {
            Rational best = 0;
            for (std::size_t t = 0; t < n; ++t) {
                Rational d = abs(orbits[a][t] - orbits[b][t]);
                if (d > best) best = d;
            }
            if (!(best > eps)) return false;
        }
    return true;
}

// Maximum separated subset by trying every subset (small inputs only).
template <class F>
std::size_t brute_max_separated(const F& f, const std::vector<Rational>& pts, std::size_t n, const Rational& eps) {
    std::size_t best = 0;
    std::size_t m = pts.size();
    for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
        std::size_t c = static_cast<std::size_t>(__builtin_popcount(mask));
        if (c <= best) continue;
        std::vector<Rational> sub;
        for (std::size_t i = 0; i < m; ++i)
            if (mask & (1u << i)) sub.push_back(pts[i]);
        if (pairwise_separated(f, sub, n, eps)) best = c;
    }
    return best;
}

// Linear interpolation straight from a node list.
inline Rational eval_nodes(const std::vector<Node>& ns, const Rational& x) {
    for (std::size_t i = 0; i + 1 < ns.size(); ++i)
        if (ns[i].x <= x && x <= ns[i + 1].x)
            return ns[i].y + (ns[i + 1].y - ns[i].y) * (x - ns[i].x) / (ns[i + 1].x - ns[i].x);
    throw std::runtime_error("x outside node range");
}

// Random continuous self-map with nodes on the grid 1/den.
inline PwaMap random_map(std::mt19937_64& rng, std::size_t max_inner = 5, long den = 16) {
    std::uniform_int_distribution<long> value(0, den);
    std::uniform_int_distribution<std::size_t> count(0, max_inner);
    std::size_t inner = count(rng);
    std::vector<long> xs;
    std::uniform_int_distribution<long> pos(1, den - 1);
    for (std::size_t k = 0; k < inner; ++k) xs.push_back(pos(rng));
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::vector<Node> nodes;
    nodes.push_back({0, mmdlab::make_rational(value(rng), den)});
    for (long x : xs) nodes.push_back({mmdlab::make_rational(x, den), mmdlab::make_rational(value(rng), den)});
    nodes.push_back({1, mmdlab::make_rational(value(rng), den)});
    return PwaMap(std::move(nodes));
}

inline Rational random_fraction(std::mt19937_64& rng, long den) {
    std::uniform_int_distribution<long> v(0, den);
    return mmdlab::make_rational(v(rng), den);
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("mmdlab_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace oracle
