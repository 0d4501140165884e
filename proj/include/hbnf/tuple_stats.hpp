#pragma once

// Index statistics mu, S, B, C, A of signed multi-indices and empirical
// checks of the inequalities relating A(j, l), A(i, l) and A(i, j).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "random.hpp"

namespace hbnf {

struct TupleStats {
    int mu = 0;    // third largest |j_i|
    int S = 0;     // largest - second largest
    double B = 0;  // sqrt(second * third)
    int C = 0;     // largest
    double A = 0;  // B / (B + S)
};

/// Running top-three of absolute index values.
struct TopThree {
    int first = 0, second = 0, third = 0;

    void push(int v) {
        v = std::abs(v);
        if (v > first) {
            third = second;
            second = first;
            first = v;
        } else if (v > second) {
            third = second;
            second = v;
        } else if (v > third) {
            third = v;
        }
    }

    TupleStats stats() const {
        TupleStats t;
        t.mu = third;
        t.S = first - second;
        t.B = std::sqrt(static_cast<double>(second) * third);
        t.C = first;
        t.A = t.B / (t.B + t.S);
        return t;
    }
};

inline TupleStats tuple_stats(std::span<const int> j) {
    if (j.size() < 3) throw std::invalid_argument("tuple_stats: arity must be >= 3");
    TopThree top;
    for (int v : j) {
        if (v == 0) throw std::invalid_argument("tuple_stats: zero index");
        top.push(v);
    }
    return top.stats();
}

/// A of the concatenation of a tuple and extra indices.
inline double A_of(std::span<const int> j, std::initializer_list<int> extra) {
    TopThree top;
    for (int v : j) top.push(v);
    for (int v : extra) top.push(v);
    return top.stats().A;
}

/// The majorant of A(j, l) in terms of j_1, j_2 and l, without its factor 2.
inline double A_majorant(int j1, int j2, int l) {
    j1 = std::abs(j1);
    j2 = std::abs(j2);
    l = std::abs(l);
    if (l <= j2) return static_cast<double>(j2) / (l + j1 - j2);
    const double r = std::sqrt(static_cast<double>(l) * j2);
    return r / (r + std::abs(j1 - l));
}

// ---------------------------------------------------------------------------
// Empirical constants

struct LemmaCheck {
    std::string name;
    double empirical = 0;  // sup of the ratio over scanned cases
    double stated = std::numeric_limits<double>::quiet_NaN();  // NaN when unstated
    std::size_t cases = 0;
    std::vector<int> worst_j, worst_i;
    int worst_l = 0;

    bool holds() const { return std::isnan(stated) ? std::isfinite(empirical) : empirical <= stated * (1 + 1e-12); }
};

struct ALemmaOptions {
    int j_bound = 40;          // |l| A(j,l) and majorant lemmas: j_1 <= j_bound
    int l_bound = 120;         // ... and l <= l_bound
    int pair_bound = 30;       // bracket lemmas: i_1, j_1 <= pair_bound (ordered pairs)
    int pair_l_factor = 3;     // ... and l <= pair_l_factor * pair_bound
    int random_samples = 20000;
    int random_bound = 200;
    std::uint64_t seed = 20240601;
};

struct ALemmaReport {
    LemmaCheck l_times_A;     // |l| A(j,l) <= 2 |j_1|
    LemmaCheck majorant;      // A(j,l) <= 2 * majorant(j_1, j_2, l)
    LemmaCheck squared_pair;  // A(j,l)^2 A(i,l)^2 <= C A(i,j)
    LemmaCheck mu_pair;       // max(mu(j,l) A(i,l)^2, mu(i,l) A(j,l)^2) <= C mu(i,j)^2

    bool all_hold() const {
        return l_times_A.holds() && majorant.holds() && squared_pair.holds() && mu_pair.holds();
    }
};

namespace detail {

inline void record(LemmaCheck& c, double ratio, std::span<const int> j, std::span<const int> i, int l) {
    ++c.cases;
    if (ratio > c.empirical) {
        c.empirical = ratio;
        c.worst_j.assign(j.begin(), j.end());
        c.worst_i.assign(i.begin(), i.end());
        c.worst_l = l;
    }
}

inline void check_single(ALemmaReport& r, std::span<const int> j, int l) {
    const double A = A_of(j, {l});
    record(r.l_times_A, std::abs(l) * A / std::abs(j[0]), j, {}, l);
    record(r.majorant, A / A_majorant(j[0], j[1], l), j, {}, l);
}

/// Non-increasing tuples of length k with entries in 1..bound.
template <class F>
void for_each_ordered(int k, int bound, F&& f) {
    std::vector<int> t(k);
    auto rec = [&](auto&& self, int level, int upper) -> void {
        for (int v = 1; v <= upper; ++v) {
            t[level] = v;
            if (level + 1 == k)
                f(std::span<const int>(t));
            else
                self(self, level + 1, v);
        }
    };
    rec(rec, 0, bound);
}

inline std::vector<int> random_ordered(int k, int bound, std::uint64_t seed, std::uint64_t stream, std::uint64_t& ctr) {
    std::vector<int> t(k);
    for (int& v : t) v = 1 + static_cast<int>(counter_uniform(seed, stream, ctr++) * bound);
    std::sort(t.begin(), t.end(), std::greater<>());
    return t;
}

}  // namespace detail

/// Exhaustive scan over ordered pairs/triples plus random higher-arity
/// samples. Each ratio's supremum is the smallest constant consistent with
/// the scanned cases.
inline ALemmaReport verify_A_lemmas(const ALemmaOptions& opt = {}) {
    ALemmaReport r;
    r.l_times_A.name = "|l| A(j,l) / |j_1|";
    r.l_times_A.stated = 2.0;
    r.majorant.name = "A(j,l) / majorant(j_1,j_2,l)";
    r.majorant.stated = 2.0;
    r.squared_pair.name = "A(j,l)^2 A(i,l)^2 / A(i,j)";
    r.mu_pair.name = "max(mu(j,l) A(i,l)^2, mu(i,l) A(j,l)^2) / mu(i,j)^2";

    for (int k = 2; k <= 3; ++k) {
        detail::for_each_ordered(k, opt.j_bound, [&](std::span<const int> j) {
            for (int l = 1; l <= opt.l_bound; ++l) detail::check_single(r, j, l);
        });
    }

    // Bracket lemmas over ordered pairs i, j. A(j,l), A(i,l), mu(.,l) are
    // tabulated so the triple loop is multiply-compare only.
    const int P = opt.pair_bound;
    const int L = opt.pair_l_factor * P;
    std::vector<std::array<int, 2>> pairs;
    detail::for_each_ordered(2, P, [&](std::span<const int> t) { pairs.push_back({t[0], t[1]}); });
    const std::size_t np = pairs.size();
    std::vector<double> A_pl(np * L);
    std::vector<int> mu_pl(np * L);
    for (std::size_t p = 0; p < np; ++p) {
        for (int l = 1; l <= L; ++l) {
            TopThree top;
            top.push(pairs[p][0]);
            top.push(pairs[p][1]);
            top.push(l);
            const auto s = top.stats();
            A_pl[p * L + l - 1] = s.A;
            mu_pl[p * L + l - 1] = s.mu;
        }
    }
    for (std::size_t a = 0; a < np; ++a) {
        for (std::size_t b = 0; b < np; ++b) {
            TopThree top;
            top.push(pairs[a][0]);
            top.push(pairs[a][1]);
            top.push(pairs[b][0]);
            top.push(pairs[b][1]);
            const auto ij = top.stats();
            const double mu2 = static_cast<double>(ij.mu) * ij.mu;
            double best11 = 0, best12 = 0;
            int l11 = 0, l12 = 0;
            for (int l = 1; l <= L; ++l) {
                const double Aj = A_pl[a * L + l - 1], Ai = A_pl[b * L + l - 1];
                const double q11 = Aj * Aj * Ai * Ai;
                const double q12 = std::max(mu_pl[a * L + l - 1] * Ai * Ai, mu_pl[b * L + l - 1] * Aj * Aj);
                if (q11 > best11) best11 = q11, l11 = l;
                if (q12 > best12) best12 = q12, l12 = l;
            }
            r.squared_pair.cases += L;
            r.mu_pair.cases += L;
            const std::array<int, 2> j{pairs[a][0], pairs[a][1]}, i{pairs[b][0], pairs[b][1]};
            if (best11 / ij.A > r.squared_pair.empirical) {
                r.squared_pair.empirical = best11 / ij.A;
                r.squared_pair.worst_j.assign(j.begin(), j.end());
                r.squared_pair.worst_i.assign(i.begin(), i.end());
                r.squared_pair.worst_l = l11;
            }
            if (best12 / mu2 > r.mu_pair.empirical) {
                r.mu_pair.empirical = best12 / mu2;
                r.mu_pair.worst_j.assign(j.begin(), j.end());
                r.mu_pair.worst_i.assign(i.begin(), i.end());
                r.mu_pair.worst_l = l12;
            }
        }
    }

    // Random higher-arity samples.
    std::uint64_t ctr = 0;
    for (int s = 0; s < opt.random_samples; ++s) {
        const int kj = 3 + s % 3;
        auto j = detail::random_ordered(kj, opt.random_bound, opt.seed, 1, ctr);
        const int l = 1 + static_cast<int>(counter_uniform(opt.seed, 2, ctr++) * 3 * opt.random_bound);
        detail::check_single(r, j, l);
        auto i = detail::random_ordered(2 + s % 2, opt.random_bound, opt.seed, 3, ctr);
        std::vector<int> ij(j);
        ij.insert(ij.end(), i.begin(), i.end());
        const auto s_ij = tuple_stats(ij);
        const double Aj = A_of(j, {l}), Ai = A_of(i, {l});
        std::vector<int> jl(j), il(i);
        jl.push_back(l);
        il.push_back(l);
        const int mu_jl = tuple_stats(jl).mu;
        const int mu_il = tuple_stats(il).mu;
        detail::record(r.squared_pair, Aj * Aj * Ai * Ai / s_ij.A, j, i, l);
        detail::record(r.mu_pair, std::max(mu_jl * Ai * Ai, mu_il * Aj * Aj) / (double(s_ij.mu) * s_ij.mu), j, i, l);
    }
    return r;
}

}  // namespace hbnf
