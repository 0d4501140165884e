#pragma once

// Hermite multipliers m_j = mt_j / j^k with mt_j uniform in [-1/2, 1/2],
// the resulting frequencies omega_j = 2j - 1 + m_j, and small-divisor scans.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hermite.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "stats.hpp"
#include "tuple_stats.hpp"

namespace hbnf {

class NumericallyResonant : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MultiplierSample {
    int class_index = 1;
    std::uint64_t seed = 0;
    std::vector<double> values;  // mt_1 .. mt_J

    int cutoff() const { return static_cast<int>(values.size()); }
    double multiplier(int j) const { return values.at(j - 1) / std::pow(static_cast<double>(j), class_index); }
};

/// mt_j depends only on (seed, j), so samples at different cutoffs agree on
/// their common modes.
inline MultiplierSample sample_multiplier(int k, int J, std::uint64_t seed) {
    if (k < 1 || J < 1) throw std::invalid_argument("sample_multiplier: need k >= 1 and J >= 1");
    MultiplierSample s;
    s.class_index = k;
    s.seed = seed;
    s.values.resize(J);
    for (int j = 1; j <= J; ++j) s.values[j - 1] = counter_uniform(seed, 0x6d756c74, j) - 0.5;
    return s;
}

class FrequencyVector {
public:
    static FrequencyVector unperturbed(int J) {
        if (J < 1) throw std::invalid_argument("FrequencyVector: J must be >= 1");
        FrequencyVector f;
        f.omega_.resize(J);
        for (int j = 1; j <= J; ++j) f.omega_[j - 1] = 2.0 * j - 1.0;
        return f;
    }

    static FrequencyVector from_sample(const MultiplierSample& s) {
        FrequencyVector f = unperturbed(s.cutoff());
        for (int j = 1; j <= s.cutoff(); ++j) f.omega_[j - 1] += s.multiplier(j);
        f.sample_ = s;
        return f;
    }

    int cutoff() const { return static_cast<int>(omega_.size()); }
    double operator()(int j) const {
        if (j < 1 || j > cutoff()) throw TableRangeError("frequency index outside 1..J");
        return omega_[j - 1];
    }
    std::span<const double> values() const { return omega_; }
    const std::optional<MultiplierSample>& sample() const { return sample_; }
    std::string provenance() const {
        if (!sample_) return "unperturbed";
        return "W_" + std::to_string(sample_->class_index) + " seed=" + std::to_string(sample_->seed);
    }

private:
    std::vector<double> omega_;
    std::optional<MultiplierSample> sample_;
};

struct SmallDivisor {
    double omega = 0;
    bool structural = false;  // plus == minus as multisets; Omega is exactly 0
};

inline bool same_multiset(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) return false;
    std::vector<int> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    return x == y;
}

/// Omega = sum_{plus} omega - sum_{minus} omega.
inline SmallDivisor small_divisor(const FrequencyVector& freq, std::span<const int> plus, std::span<const int> minus) {
    if (plus.size() + minus.size() < 3) throw std::invalid_argument("small_divisor: total arity must be >= 3");
    if (same_multiset(plus, minus)) return {0.0, true};
    double s = 0.0;
    for (int j : plus) s += freq(j);
    for (int j : minus) s -= freq(j);
    return {s, false};
}

struct DivisorRecord {
    std::vector<int> plus, minus;
    double omega = 0;
    int S = 0;
    int mu = 0;
    bool violation = false;
};

struct NonresonanceScan {
    int max_arity = 0;
    int cutoff = 0;
    double gamma = 0;
    double delta = 0;
    std::size_t tuples = 0;
    std::size_t structural = 0;
    /// min over non-structural tuples of |Omega| mu^delta / (1 + S): the
    /// largest gamma for which the truncated system is strongly non-resonant.
    double admissible_gamma = std::numeric_limits<double>::infinity();
    DivisorRecord tightest;
    std::vector<DivisorRecord> violations;
    /// The smallest |Omega| values seen (sorted), for spectra plots.
    std::vector<DivisorRecord> smallest;
};

inline constexpr double kDefaultScanBudget = 5e8;

namespace detail {

/// Calls f(multiset) for each non-decreasing sequence of length n over 1..J.
template <class F>
void for_each_multiset(int n, int lo, int J, std::vector<int>& buf, F&& f) {
    if (static_cast<int>(buf.size()) == n) {
        f(std::span<const int>(buf));
        return;
    }
    for (int v = lo; v <= J; ++v) {
        buf.push_back(v);
        for_each_multiset(n, v, J, buf, f);
        buf.pop_back();
    }
}

inline std::vector<std::vector<int>> all_multisets(int n, int J) {
    std::vector<std::vector<int>> out;
    std::vector<int> buf;
    for_each_multiset(n, 1, J, buf, [&](std::span<const int> m) { out.emplace_back(m.begin(), m.end()); });
    return out;
}

inline double multiset_count(int n, int J) {
    return n == 0 ? 1.0 : ordered_tuple_count(n, J);
}

}  // namespace detail

/// Enumerates every split (plus, minus) of every index multiset of arity
/// 3..r within 1..J, up to the global sign (|plus| >= |minus|, and for equal
/// sizes plus <= minus lexicographically), and reports all violations of
/// |Omega| >= gamma (1 + S) / mu^delta.
inline NonresonanceScan scan_nonresonance(const FrequencyVector& freq, int r, int J, double gamma, double delta,
                                          std::size_t keep_smallest = 0, double budget = kDefaultScanBudget) {
    if (r < 3) throw std::invalid_argument("scan_nonresonance: r must be >= 3");
    if (J < 1 || J > freq.cutoff()) throw std::invalid_argument("scan_nonresonance: cutoff outside frequency vector");
    double total = 0;
    for (int a = 3; a <= r; ++a)
        for (int p = (a + 1) / 2; p <= a; ++p) total += detail::multiset_count(p, J) * detail::multiset_count(a - p, J);
    if (total > budget) throw BudgetExceeded("scan_nonresonance: " + std::to_string(total) + " tuples exceed budget");

    NonresonanceScan out;
    out.max_arity = r;
    out.cutoff = J;
    out.gamma = gamma;
    out.delta = delta;

    struct Split {
        int p, q;
    };
    std::vector<Split> splits;
    for (int a = 3; a <= r; ++a)
        for (int p = (a + 1) / 2; p <= a; ++p) splits.push_back({p, a - p});

    // One block per (|plus|, |minus|) split; merged in split order.
    std::vector<NonresonanceScan> partial(splits.size());
    parallel_blocks(splits.size(), [&](std::size_t b) {
        const auto [p, q] = splits[b];
        NonresonanceScan& acc = partial[b];
        acc.admissible_gamma = std::numeric_limits<double>::infinity();
        const auto pluses = detail::all_multisets(p, J);
        const auto minuses = detail::all_multisets(q, J);
        for (std::size_t a = 0; a < pluses.size(); ++a) {
            for (std::size_t c = 0; c < minuses.size(); ++c) {
                if (p == q && minuses[c] < pluses[a]) continue;
                ++acc.tuples;
                if (p == q && minuses[c] == pluses[a]) {
                    ++acc.structural;
                    continue;
                }
                TopThree top;
                for (int j : pluses[a]) top.push(j);
                for (int j : minuses[c]) top.push(j);
                const auto st = top.stats();
                // Re-summing in index order keeps Omega bit-identical to small_divisor.
                double omega = 0.0;
                for (int j : pluses[a]) omega += freq(j);
                for (int j : minuses[c]) omega -= freq(j);
                const double weight = std::pow(static_cast<double>(st.mu), delta) / (1.0 + st.S);
                const double ratio = std::abs(omega) * weight;
                const bool violation = std::abs(omega) < gamma / weight;
                DivisorRecord rec{pluses[a], minuses[c], omega, st.S, st.mu, violation};
                if (ratio < acc.admissible_gamma) {
                    acc.admissible_gamma = ratio;
                    acc.tightest = rec;
                }
                if (violation) acc.violations.push_back(rec);
                if (keep_smallest > 0) {
                    auto& v = acc.smallest;
                    if (v.size() < keep_smallest || std::abs(omega) < std::abs(v.back().omega)) {
                        auto pos = std::upper_bound(v.begin(), v.end(), std::abs(omega),
                                                    [](double x, const DivisorRecord& d) { return x < std::abs(d.omega); });
                        v.insert(pos, rec);
                        if (v.size() > keep_smallest) v.pop_back();
                    }
                }
            }
        }
    });

    for (auto& part : partial) {
        out.tuples += part.tuples;
        out.structural += part.structural;
        if (part.admissible_gamma < out.admissible_gamma) {
            out.admissible_gamma = part.admissible_gamma;
            out.tightest = part.tightest;
        }
        out.violations.insert(out.violations.end(), part.violations.begin(), part.violations.end());
        out.smallest.insert(out.smallest.end(), part.smallest.begin(), part.smallest.end());
    }
    std::stable_sort(out.smallest.begin(), out.smallest.end(),
                     [](const DivisorRecord& a, const DivisorRecord& b) { return std::abs(a.omega) < std::abs(b.omega); });
    if (out.smallest.size() > keep_smallest) out.smallest.resize(keep_smallest);
    return out;
}

struct ResonantMeasureEstimate {
    std::size_t samples = 0;
    std::size_t violating = 0;
    double probability = 0;
    WilsonInterval interval;
};

/// Monte-Carlo fraction of multiplier samples whose truncated scan has at
/// least one violation. Sample i uses seed derive_seed(seed, i).
inline ResonantMeasureEstimate estimate_resonant_measure(int k, int r, int J, double delta, double gamma,
                                                         std::size_t n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw std::invalid_argument("estimate_resonant_measure: need at least one sample");
    std::vector<char> hit(n_samples, 0);
    const std::size_t blocks = std::min<std::size_t>(n_samples, 64);
    parallel_blocks(blocks, [&](std::size_t b) {
        for (std::size_t i = b; i < n_samples; i += blocks) {
            const auto freq = FrequencyVector::from_sample(sample_multiplier(k, J, derive_seed(seed, i)));
            hit[i] = scan_nonresonance(freq, r, J, gamma, delta).violations.empty() ? 0 : 1;
        }
    });
    ResonantMeasureEstimate e;
    e.samples = n_samples;
    for (char h : hit) e.violating += h;
    e.probability = static_cast<double>(e.violating) / n_samples;
    e.interval = wilson_interval(e.violating, n_samples);
    return e;
}

}  // namespace hbnf
