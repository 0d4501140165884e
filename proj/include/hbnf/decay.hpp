#pragma once

// Empirical decay constants of the overlaps a_j:
//   c_N = sup_j |a_j| C(j)^beta / (mu(j)^nu A(j)^N)
// over ordered tuples, with snapshots at intermediate cutoffs.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "hermite.hpp"
#include "tuple_stats.hpp"

namespace hbnf {

struct DecaySnapshot {
    int cutoff = 0;
    std::vector<double> c;  // one per N
    std::vector<std::vector<int>> worst;
    std::size_t tuples = 0;
};

struct OverlapDecayReport {
    int arity = 0;
    double nu = 0, beta = 0;
    std::vector<int> N;
    std::vector<DecaySnapshot> snapshots;  // ascending cutoffs, last is the full scan
    // Histogram of log10 of the N = N.front() ratio over the full scan.
    double hist_lo = -12, hist_hi = 2;
    std::vector<std::size_t> histogram;

    const DecaySnapshot& final() const { return snapshots.back(); }
    /// Largest relative change of c_N between the last two snapshots.
    double plateau_change() const {
        if (snapshots.size() < 2) return 0;
        const auto& a = snapshots[snapshots.size() - 2];
        const auto& b = snapshots.back();
        double m = 0;
        for (std::size_t n = 0; n < a.c.size(); ++n) m = std::max(m, std::abs(b.c[n] - a.c[n]) / a.c[n]);
        return m;
    }
};

/// One streaming pass over ordered tuples with j_1 <= cutoffs.back(); c_N is
/// recorded for every cutoff in the (ascending) list.
inline OverlapDecayReport overlap_decay(int k, std::vector<int> cutoffs, double nu, double beta, const std::vector<int>& N_list,
                                        int histogram_bins = 56) {
    if (k < 3) throw std::invalid_argument("overlap_decay: arity must be >= 3");
    if (cutoffs.empty()) throw std::invalid_argument("overlap_decay: need at least one cutoff");
    std::sort(cutoffs.begin(), cutoffs.end());
    OverlapDecayReport rep;
    rep.arity = k;
    rep.nu = nu;
    rep.beta = beta;
    rep.N = N_list;
    rep.histogram.assign(histogram_bins, 0);
    DecaySnapshot cur;
    cur.c.assign(N_list.size(), 0.0);
    cur.worst.assign(N_list.size(), {});
    std::size_t next = 0;
    auto flush_until = [&](int j1) {
        while (next < cutoffs.size() && cutoffs[next] < j1) {
            cur.cutoff = cutoffs[next++];
            rep.snapshots.push_back(cur);
        }
    };
    const double bin_width = (rep.hist_hi - rep.hist_lo) / histogram_bins;
    for_each_ordered_overlap(k, cutoffs.back(), [&](std::span<const int> j, double a) {
        flush_until(j[0]);
        ++cur.tuples;
        TopThree top;
        for (int v : j) top.push(v);
        const auto st = top.stats();
        const double base = std::abs(a) * std::pow(double(st.C), beta) / std::pow(double(st.mu), nu);
        for (std::size_t n = 0; n < N_list.size(); ++n) {
            const double v = base / std::pow(st.A, N_list[n]);
            if (v > cur.c[n]) {
                cur.c[n] = v;
                cur.worst[n].assign(j.begin(), j.end());
            }
            if (n == 0 && v > 0) {
                const int b = static_cast<int>(std::floor((std::log10(v) - rep.hist_lo) / bin_width));
                ++rep.histogram[std::clamp(b, 0, histogram_bins - 1)];
            }
        }
    });
    flush_until(cutoffs.back() + 1);
    return rep;
}

}  // namespace hbnf
