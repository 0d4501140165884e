#pragma once

// Hermite eigenfunctions of T = -d^2/dx^2 + x^2 and exact k-fold overlap
// integrals a_j = \int phi_{j_1} ... phi_{j_k} dx.
//
// Mode indices are 1-based: phi_j has eigenvalue 2j - 1 and is the
// L^2-normalised Hermite function of polynomial degree j - 1.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

namespace hbnf {

class TableRangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class BudgetExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// pi^{-1/4}
inline constexpr double kInvPiQuarter = 0.75112554446494248286;

namespace detail {
inline constexpr double kRescaleThreshold = 1e150;
inline constexpr double kRescaleFactor = 1e-150;
inline constexpr double kLogRescale = 345.38776394910684;  // ln(1e150)
}  // namespace detail

/// phi_1(x) .. phi_J(x) into out[0 .. J-1].
///
/// The recurrence runs on the polynomial part of the normalised functions,
///   p_{n+1} = sqrt(2/(n+1)) x p_n - sqrt(n/(n+1)) p_{n-1},
/// and the Gaussian factor is only applied in log space together with the
/// accumulated rescaling exponent, so no intermediate can overflow.
inline void eval_phi_all(int J, double x, std::span<double> out) {
    if (J < 1 || out.size() < static_cast<std::size_t>(J))
        throw std::invalid_argument("eval_phi_all: need J >= 1 and room for J values");
    const double gauss_log = -0.5 * x * x;
    double prev = 0.0;
    double cur = 1.0;
    double log_scale = 0.0;
    out[0] = kInvPiQuarter * std::exp(gauss_log);
    for (int n = 0; n + 1 < J; ++n) {
        const double next = std::sqrt(2.0 / (n + 1)) * x * cur - std::sqrt(double(n) / (n + 1)) * prev;
        prev = cur;
        cur = next;
        if (std::abs(cur) > detail::kRescaleThreshold) {
            cur *= detail::kRescaleFactor;
            prev *= detail::kRescaleFactor;
            log_scale += detail::kLogRescale;
        }
        out[n + 1] = kInvPiQuarter * cur * std::exp(log_scale + gauss_log);
    }
}

struct PhiValue {
    double value = 0;
    double derivative = 0;
};

/// phi_j(x) and phi_j'(x). The derivative is carried through the same
/// recurrence (forward mode), independent of any ladder identity.
inline PhiValue eval_phi_with_derivative(int j, double x) {
    if (j < 1) throw std::invalid_argument("eval_phi: mode index must be >= 1");
    const double gauss_log = -0.5 * x * x;
    double prev = 0.0, cur = 1.0;    // p_{n-1}, p_n
    double dprev = 0.0, dcur = 0.0;  // their x-derivatives
    double log_scale = 0.0;
    for (int n = 0; n + 1 < j; ++n) {
        const double a = std::sqrt(2.0 / (n + 1));
        const double b = std::sqrt(double(n) / (n + 1));
        const double next = a * x * cur - b * prev;
        const double dnext = a * (cur + x * dcur) - b * dprev;
        prev = cur;
        cur = next;
        dprev = dcur;
        dcur = dnext;
        if (std::abs(cur) > detail::kRescaleThreshold || std::abs(dcur) > detail::kRescaleThreshold) {
            cur *= detail::kRescaleFactor;
            prev *= detail::kRescaleFactor;
            dcur *= detail::kRescaleFactor;
            dprev *= detail::kRescaleFactor;
            log_scale += detail::kLogRescale;
        }
    }
    const double envelope = kInvPiQuarter * std::exp(log_scale + gauss_log);
    return {cur * envelope, (dcur - x * cur) * envelope};
}

inline double eval_phi(int j, double x) {
    return eval_phi_with_derivative(j, x).value;
}

/// n-point Gauss-Hermite rule for the weight e^{-y^2}. Weights are stored
/// multiplied by e^{y_i^2} so integrands built from Hermite functions (which
/// carry their own Gaussian) can be summed without underflow.
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> scaled_weights;

    std::size_t size() const { return nodes.size(); }
};

inline GaussHermiteRule compute_gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: n must be >= 1");
    GaussHermiteRule rule;
    rule.nodes.resize(n);
    rule.scaled_weights.resize(n);
    if (n == 1) {
        rule.nodes[0] = 0.0;
        rule.scaled_weights[0] = std::sqrt(std::numbers::pi);
        return rule;
    }
    // Golub-Welsch: eigenvalues of the Jacobi matrix, then Newton polish.
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n - 1);
    for (int k = 1; k < n; ++k) sub[k - 1] = std::sqrt(0.5 * k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw std::runtime_error("gauss_hermite: eigen solver failed");
    for (int i = 0; i < n; ++i) {
        double y = solver.eigenvalues()[i];
        for (int it = 0; it < 3; ++it) {
            const PhiValue p = eval_phi_with_derivative(n + 1, y);
            if (p.derivative == 0.0) break;
            const double step = p.value / p.derivative;
            y -= step;
            if (std::abs(step) < 1e-16 * (1.0 + std::abs(y))) break;
        }
        rule.nodes[i] = y;
    }
    for (int i = 0; i < n / 2; ++i) {
        const double m = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
        rule.nodes[i] = -m;
        rule.nodes[n - 1 - i] = m;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    for (int i = 0; i < n; ++i) {
        const double p = eval_phi(n, rule.nodes[i]);
        rule.scaled_weights[i] = 1.0 / (n * p * p);
    }
    return rule;
}

/// Cached rule; rules are immutable once built and shared across threads.
inline const GaussHermiteRule& gauss_hermite(int n) {
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<GaussHermiteRule>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<GaussHermiteRule>(compute_gauss_hermite(n));
    return *slot;
}

/// Degree of the polynomial part of phi_{j_1} ... phi_{j_k}.
inline int overlap_degree(std::span<const int> indices) {
    int d = 0;
    for (int j : indices) d += j - 1;
    return d;
}

/// Minimal node count making the scaled quadrature exact: 2n - 1 >= degree.
inline int overlap_node_count(int degree) {
    return (degree + 1) / 2 + 1;
}

/// \int phi_{j_1} ... phi_{j_k} dx on an n-node rule. With x = y sqrt(2/k) the
/// Gaussian factor e^{-k x^2 / 2} becomes e^{-y^2}; the result is exact
/// whenever 2n - 1 >= sum (j_i - 1).
inline double overlap_with_nodes(std::span<const int> indices, int n) {
    const int k = static_cast<int>(indices.size());
    if (k < 1) throw std::invalid_argument("overlap: empty index tuple");
    int jmax = 0;
    for (int j : indices) {
        if (j < 1) throw std::invalid_argument("overlap: mode indices must be >= 1");
        jmax = std::max(jmax, j);
    }
    const auto& rule = gauss_hermite(n);
    const double scale = std::sqrt(2.0 / k);
    std::vector<double> phi(jmax);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        eval_phi_all(jmax, rule.nodes[i] * scale, phi);
        double prod = rule.scaled_weights[i];
        for (int j : indices) prod *= phi[j - 1];
        sum += prod;
    }
    return sum * scale;
}

/// Exact overlap; odd total degree gives exactly zero.
inline double hermite_overlap(std::span<const int> indices) {
    const int degree = overlap_degree(indices);
    if (degree % 2 != 0) return 0.0;
    return overlap_with_nodes(indices, overlap_node_count(degree));
}

/// Truncated Hermite basis, modes 1..J.
class HermiteBasis {
public:
    explicit HermiteBasis(int max_index) : max_index_(max_index) {
        if (max_index < 1) throw std::invalid_argument("HermiteBasis: J must be >= 1");
    }

    int max_index() const { return max_index_; }

    /// log of 1 / sqrt(2^n n! sqrt(pi)), n = j - 1: the factor turning H_n e^{-x^2/2}
    /// into phi_j. Stored in log form because it underflows for large j.
    double log_normalization(int j) const {
        check(j);
        const double n = j - 1;
        return -0.5 * (n * std::numbers::ln2 + std::lgamma(n + 1.0) + 0.5 * std::log(std::numbers::pi));
    }

    double phi(int j, double x) const {
        check(j);
        return eval_phi(j, x);
    }

    double overlap(std::span<const int> indices) const {
        if (indices.size() < 2) throw std::invalid_argument("overlap: arity must be >= 2");
        for (int j : indices) {
            if (j < 1 || j > max_index_)
                throw TableRangeError("overlap: index " + std::to_string(j) + " outside 1.." +
                                      std::to_string(max_index_));
        }
        return hermite_overlap(indices);
    }

private:
    void check(int j) const {
        if (j < 1 || j > max_index_)
            throw TableRangeError("mode index " + std::to_string(j) + " outside 1.." + std::to_string(max_index_));
    }

    int max_index_;
};

/// Number of non-increasing k-tuples over 1..J, i.e. C(J + k - 1, k).
inline double ordered_tuple_count(int k, int J) {
    double c = 1.0;
    for (int i = 1; i <= k; ++i) c = c * (J - 1 + i) / i;
    return c;
}

/// Streams every ordered tuple j_1 >= ... >= j_k (1..J) with even total degree
/// together with its overlap. Tuples arrive in lexicographic order of
/// (j_1, ..., j_k). All tuples share one exact rule sized for the largest
/// degree, and partial products are reused across the inner loops.
template <class Callback>
void for_each_ordered_overlap(int k, int J, Callback&& callback) {
    if (k < 2 || J < 1) throw std::invalid_argument("for_each_ordered_overlap: need k >= 2, J >= 1");
    const int n = overlap_node_count(k * (J - 1));
    const auto& rule = gauss_hermite(n);
    const double scale = std::sqrt(2.0 / k);
    std::vector<double> table(static_cast<std::size_t>(J) * n);
    {
        std::vector<double> buf(J);
        for (int i = 0; i < n; ++i) {
            eval_phi_all(J, rule.nodes[i] * scale, buf);
            for (int j = 0; j < J; ++j) table[static_cast<std::size_t>(j) * n + i] = buf[j];
        }
    }
    auto row = [&](int j) { return table.data() + static_cast<std::size_t>(j - 1) * n; };

    std::vector<double> partial(static_cast<std::size_t>(k) * n);
    std::vector<int> idx(k);
    auto recurse = [&](auto&& self, int level, int upper, int parity) -> void {
        for (int j = 1; j <= upper; ++j) {
            idx[level] = j;
            const int par = (parity + j - 1) & 1;
            const double* phi = row(j);
            if (level == k - 1) {
                if (par != 0) continue;
                const double* prev = partial.data() + static_cast<std::size_t>(level - 1) * n;
                double sum = 0.0;
                for (int i = 0; i < n; ++i) sum += prev[i] * phi[i];
                callback(std::span<const int>(idx), sum);
                continue;
            }
            double* out = partial.data() + static_cast<std::size_t>(level) * n;
            if (level == 0) {
                for (int i = 0; i < n; ++i) out[i] = scale * rule.scaled_weights[i] * phi[i];
            } else {
                const double* prev = out - n;
                for (int i = 0; i < n; ++i) out[i] = prev[i] * phi[i];
            }
            self(self, level + 1, j, par);
        }
    };
    recurse(recurse, 0, J, 0);
}

/// Immutable table of nonzero overlaps over sorted (non-increasing) tuples.
class OverlapTable {
public:
    static constexpr int kFormatVersion = 1;

    OverlapTable(int arity, int cutoff) : arity_(arity), cutoff_(cutoff) {}

    int arity() const { return arity_; }
    int cutoff() const { return cutoff_; }
    std::size_t size() const { return values_.size(); }

    std::span<const std::uint16_t> indices(std::size_t entry) const {
        return {indices_.data() + entry * arity_, static_cast<std::size_t>(arity_)};
    }
    double value(std::size_t entry) const { return values_[entry]; }

    /// Overlap for any permutation of the tuple; zero when absent (parity).
    double at(std::span<const int> tuple) const {
        if (static_cast<int>(tuple.size()) != arity_) throw std::invalid_argument("OverlapTable::at: wrong arity");
        std::vector<std::uint16_t> key(tuple.size());
        for (std::size_t i = 0; i < tuple.size(); ++i) {
            if (tuple[i] < 1 || tuple[i] > cutoff_) throw TableRangeError("OverlapTable::at: index outside table");
            key[i] = static_cast<std::uint16_t>(tuple[i]);
        }
        std::sort(key.begin(), key.end(), std::greater<>());
        std::size_t lo = 0, hi = size();
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            auto cur = indices(mid);
            if (std::lexicographical_compare(cur.begin(), cur.end(), key.begin(), key.end()))
                lo = mid + 1;
            else
                hi = mid;
        }
        if (lo < size()) {
            auto cur = indices(lo);
            if (std::equal(cur.begin(), cur.end(), key.begin())) return values_[lo];
        }
        return 0.0;
    }

    void push_back(std::span<const int> tuple, double value) {
        for (int j : tuple) indices_.push_back(static_cast<std::uint16_t>(j));
        values_.push_back(value);
    }

    void write_csv(std::ostream& os) const {
        os << "# hbnf-overlap-table k=" << arity_ << " J=" << cutoff_ << " version=" << kFormatVersion << '\n';
        char buf[64];
        for (std::size_t e = 0; e < size(); ++e) {
            for (auto j : indices(e)) os << j << ',';
            std::snprintf(buf, sizeof buf, "%.17g", values_[e]);
            os << buf << '\n';
        }
    }

    static OverlapTable read_csv(std::istream& is) {
        std::string header;
        if (!std::getline(is, header)) throw std::runtime_error("overlap table: missing header");
        int k = 0, J = 0, version = 0;
        if (std::sscanf(header.c_str(), "# hbnf-overlap-table k=%d J=%d version=%d", &k, &J, &version) != 3)
            throw std::runtime_error("overlap table: malformed header");
        if (version != kFormatVersion) throw std::runtime_error("overlap table: unsupported version");
        OverlapTable table(k, J);
        std::string line;
        std::vector<int> tuple(k);
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::istringstream row(line);
            std::string field;
            for (int i = 0; i < k; ++i) {
                if (!std::getline(row, field, ',')) throw std::runtime_error("overlap table: short row");
                tuple[i] = std::stoi(field);
            }
            if (!std::getline(row, field)) throw std::runtime_error("overlap table: missing value");
            table.push_back(tuple, std::strtod(field.c_str(), nullptr));
        }
        return table;
    }

private:
    int arity_;
    int cutoff_;
    std::vector<std::uint16_t> indices_;
    std::vector<double> values_;
};

inline constexpr double kDefaultTupleBudget = 5e7;

inline OverlapTable build_overlap_table(int k, int J, double tuple_budget = kDefaultTupleBudget) {
    if (k < 2 || J < 1) throw std::invalid_argument("build_overlap_table: need k >= 2 and J >= 1");
    if (J > 65535) throw std::invalid_argument("build_overlap_table: cutoff too large for table format");
    if (ordered_tuple_count(k, J) > tuple_budget)
        throw BudgetExceeded("build_overlap_table: " + std::to_string(ordered_tuple_count(k, J)) +
                             " tuples exceed budget");
    OverlapTable table(k, J);
    for_each_ordered_overlap(k, J, [&](std::span<const int> tuple, double a) { table.push_back(tuple, a); });
    return table;
}

/// Cache directory from HBNF_CACHE_DIR, or empty when caching is off.
inline std::filesystem::path overlap_cache_dir() {
    const char* env = std::getenv("HBNF_CACHE_DIR");
    return env ? std::filesystem::path(env) : std::filesystem::path{};
}

/// Loads the (k, J, version) table from the cache directory or builds and stores it.
inline OverlapTable load_or_build_overlap_table(int k, int J, const std::filesystem::path& cache_dir = overlap_cache_dir()) {
    if (cache_dir.empty()) return build_overlap_table(k, J);
    const auto file = cache_dir / ("overlap_k" + std::to_string(k) + "_J" + std::to_string(J) + "_v" +
                                   std::to_string(OverlapTable::kFormatVersion) + ".csv");
    if (std::filesystem::exists(file)) {
        std::ifstream in(file);
        return OverlapTable::read_csv(in);
    }
    OverlapTable table = build_overlap_table(k, J);
    std::filesystem::create_directories(cache_dir);
    const auto tmp = file.string() + ".tmp";
    {
        std::ofstream out(tmp);
        table.write_csv(out);
    }
    std::filesystem::rename(tmp, file);
    return table;
}

// ---------------------------------------------------------------------------
// Basis diagnostics

/// max_{i,j <= J} |<phi_i, phi_j> - delta_ij| with an exact J-node rule.
inline double orthonormality_error(int J) {
    const auto& rule = gauss_hermite(J);
    std::vector<double> table(static_cast<std::size_t>(J) * J);
    std::vector<double> buf(J);
    for (int i = 0; i < J; ++i) {
        eval_phi_all(J, rule.nodes[i], buf);
        for (int j = 0; j < J; ++j) table[static_cast<std::size_t>(j) * J + i] = buf[j];
    }
    double worst = 0.0;
    for (int a = 0; a < J; ++a) {
        for (int b = 0; b <= a; ++b) {
            double s = 0.0;
            for (int i = 0; i < J; ++i)
                s += rule.scaled_weights[i] * table[static_cast<std::size_t>(a) * J + i] *
                     table[static_cast<std::size_t>(b) * J + i];
            worst = std::max(worst, std::abs(s - (a == b ? 1.0 : 0.0)));
        }
    }
    return worst;
}

/// <phi_j, T phi_j> = \int (phi_j')^2 + x^2 phi_j^2 dx, exact on a (j+1)-node rule.
inline double rayleigh_quotient(int j) {
    const auto& rule = gauss_hermite(j + 1);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const double y = rule.nodes[i];
        const PhiValue p = eval_phi_with_derivative(j, y);
        s += rule.scaled_weights[i] * (p.derivative * p.derivative + y * y * p.value * p.value);
    }
    return s;
}

struct SupNorm {
    double value = 0;
    double location = 0;
};

/// max_x |phi_j(x)|: dense scan over x >= 0 (|phi_j| is even) past the
/// turning point, then golden-section refinement around the best sample.
inline SupNorm sup_norm(int j) {
    const double turning = std::sqrt(2.0 * j - 1.0);
    const double h = 0.02 * std::numbers::pi / std::sqrt(2.0 * j + 1.0);
    const double x_end = turning + 4.0;
    SupNorm best;
    for (double x = 0.0; x <= x_end; x += h) {
        const double v = std::abs(eval_phi(j, x));
        if (v > best.value) best = {v, x};
    }
    double a = std::max(0.0, best.location - h), b = best.location + h;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = std::abs(eval_phi(j, c)), fd = std::abs(eval_phi(j, d));
    for (int it = 0; it < 80; ++it) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = std::abs(eval_phi(j, c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = std::abs(eval_phi(j, d));
        }
    }
    const double x = 0.5 * (a + b);
    const double v = std::abs(eval_phi(j, x));
    if (v > best.value) best = {v, x};
    return best;
}

}  // namespace hbnf
