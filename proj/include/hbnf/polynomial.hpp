#pragma once

// Sparse complex polynomials in the mode variables xi_1..xi_J, eta_1..eta_J.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "frequency.hpp"
#include "hermite.hpp"
#include "nonlinearity.hpp"
#include "state.hpp"
#include "tuple_stats.hpp"

namespace hbnf {

/// xi_{a_1} ... xi_{a_p} eta_{b_1} ... eta_{b_q}, each block ascending.
struct Monomial {
    std::vector<int> xi;
    std::vector<int> eta;

    Monomial() = default;
    Monomial(std::vector<int> x, std::vector<int> e) : xi(std::move(x)), eta(std::move(e)) {
        std::sort(xi.begin(), xi.end());
        std::sort(eta.begin(), eta.end());
        for (int v : xi)
            if (v < 1) throw std::invalid_argument("Monomial: mode indices must be >= 1");
        for (int v : eta)
            if (v < 1) throw std::invalid_argument("Monomial: mode indices must be >= 1");
    }

    /// Signed indices: j > 0 is xi_j, j < 0 is eta_{-j}.
    static Monomial from_signed(std::span<const int> z) {
        std::vector<int> x, e;
        for (int v : z) {
            if (v == 0) throw std::invalid_argument("Monomial: zero index");
            (v > 0 ? x : e).push_back(std::abs(v));
        }
        return {std::move(x), std::move(e)};
    }
    static Monomial from_signed(std::initializer_list<int> z) { return from_signed(std::span<const int>(z.begin(), z.size())); }

    std::vector<int> signed_indices() const {
        std::vector<int> s(xi);
        for (int v : eta) s.push_back(-v);
        return s;
    }

    int degree() const { return static_cast<int>(xi.size() + eta.size()); }
    bool is_action_type() const { return xi == eta; }
    Monomial conjugate() const {
        Monomial m;
        m.xi = eta;
        m.eta = xi;
        return m;
    }
    int max_index() const {
        int m = 0;
        if (!xi.empty()) m = xi.back();
        if (!eta.empty()) m = std::max(m, eta.back());
        return m;
    }

    /// Ordered by degree, then xi block, then eta block.
    friend bool operator<(const Monomial& a, const Monomial& b) {
        if (a.degree() != b.degree()) return a.degree() < b.degree();
        if (a.xi != b.xi) return a.xi < b.xi;
        return a.eta < b.eta;
    }
    friend bool operator==(const Monomial& a, const Monomial& b) { return a.xi == b.xi && a.eta == b.eta; }

    std::string to_string() const {
        std::string s;
        for (int v : signed_indices()) {
            if (!s.empty()) s += ' ';
            s += std::to_string(v);
        }
        return s;
    }
};

inline constexpr double kDefaultDropTolerance = 1e-16;

class SparsePolynomial {
public:
    using Terms = std::map<Monomial, Complex>;

    SparsePolynomial() = default;
    explicit SparsePolynomial(int cutoff) : cutoff_(cutoff) {
        if (cutoff < 1) throw std::invalid_argument("SparsePolynomial: cutoff must be >= 1");
    }

    int cutoff() const { return cutoff_; }
    const Terms& terms() const { return terms_; }
    std::size_t size() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }

    void add(const Monomial& m, Complex c) {
        if (c == Complex{}) return;
        if (m.max_index() > cutoff_) throw TableRangeError("SparsePolynomial: monomial index above cutoff");
        auto [it, inserted] = terms_.try_emplace(m, c);
        if (!inserted) {
            it->second += c;
            if (it->second == Complex{}) terms_.erase(it);
        }
    }
    void add(std::initializer_list<int> signed_indices, Complex c) { add(Monomial::from_signed(signed_indices), c); }

    Complex coefficient(const Monomial& m) const {
        auto it = terms_.find(m);
        return it == terms_.end() ? Complex{} : it->second;
    }

    int min_degree() const { return empty() ? 0 : terms_.begin()->first.degree(); }
    int max_degree() const { return empty() ? 0 : terms_.rbegin()->first.degree(); }
    bool homogeneous() const { return min_degree() == max_degree(); }

    SparsePolynomial degree_part(int k) const { return filter([k](const Monomial& m) { return m.degree() == k; }); }
    SparsePolynomial truncated(int max_deg) const { return filter([max_deg](const Monomial& m) { return m.degree() <= max_deg; }); }

    template <class Pred>
    SparsePolynomial filter(Pred&& keep) const {
        SparsePolynomial out(cutoff_);
        for (const auto& [m, c] : terms_)
            if (keep(m)) out.terms_.emplace_hint(out.terms_.end(), m, c);
        return out;
    }

    double max_abs() const {
        double s = 0;
        for (const auto& [m, c] : terms_) s = std::max(s, std::abs(c));
        return s;
    }

    /// Sum of |a| over all terms.
    double l1_norm() const {
        double s = 0;
        for (const auto& [m, c] : terms_) s += std::abs(c);
        return s;
    }

    /// Drops coefficients with |a| <= rel_tol * max|a|.
    void prune(double rel_tol = kDefaultDropTolerance) {
        const double floor = rel_tol * max_abs();
        std::erase_if(terms_, [floor](const auto& kv) { return std::abs(kv.second) <= floor; });
    }

    SparsePolynomial& operator+=(const SparsePolynomial& o) {
        check_cutoff(o);
        for (const auto& [m, c] : o.terms_) add(m, c);
        return *this;
    }
    SparsePolynomial& operator-=(const SparsePolynomial& o) {
        check_cutoff(o);
        for (const auto& [m, c] : o.terms_) add(m, -c);
        return *this;
    }
    SparsePolynomial& operator*=(Complex s) {
        if (s == Complex{}) {
            terms_.clear();
            return *this;
        }
        for (auto& [m, c] : terms_) c *= s;
        std::erase_if(terms_, [](const auto& kv) { return kv.second == Complex{}; });
        return *this;
    }
    friend SparsePolynomial operator+(SparsePolynomial a, const SparsePolynomial& b) { return a += b; }
    friend SparsePolynomial operator-(SparsePolynomial a, const SparsePolynomial& b) { return a -= b; }
    friend SparsePolynomial operator*(Complex s, SparsePolynomial a) { return a *= s; }

    Complex evaluate(const StateVector& z) const {
        check_state(z);
        Complex acc = 0;
        for (const auto& [m, c] : terms_) {
            Complex p = c;
            for (int j : m.xi) p *= z.xi[j - 1];
            for (int j : m.eta) p *= z.eta[j - 1];
            acc += p;
        }
        return acc;
    }

    void check_cutoff(const SparsePolynomial& o) const {
        if (o.cutoff_ != cutoff_)
            throw std::invalid_argument("SparsePolynomial: cutoff mismatch (" + std::to_string(cutoff_) + " vs " +
                                        std::to_string(o.cutoff_) + ")");
    }
    void check_state(const StateVector& z) const {
        if (z.cutoff() != cutoff_) throw std::invalid_argument("SparsePolynomial: state cutoff mismatch");
    }

    Terms& mutable_terms() { return terms_; }

private:
    int cutoff_ = 1;
    Terms terms_;
};

// ---------------------------------------------------------------------------
// Brackets

namespace detail {

/// Copy of v with one occurrence of x removed (v sorted, x present).
inline std::vector<int> remove_one(const std::vector<int>& v, int x) {
    std::vector<int> out;
    out.reserve(v.size() - 1);
    bool done = false;
    for (int e : v) {
        if (!done && e == x) {
            done = true;
            continue;
        }
        out.push_back(e);
    }
    return out;
}

inline std::vector<int> merge_sorted(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> out(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), out.begin());
    return out;
}

/// Distinct values of a sorted vector with multiplicities.
inline std::vector<std::pair<int, int>> runs(const std::vector<int>& v) {
    std::vector<std::pair<int, int>> out;
    for (int e : v) {
        if (!out.empty() && out.back().first == e)
            ++out.back().second;
        else
            out.push_back({e, 1});
    }
    return out;
}

inline int multiplicity(const std::vector<int>& v, int x) {
    auto [lo, hi] = std::equal_range(v.begin(), v.end(), x);
    return static_cast<int>(hi - lo);
}

}  // namespace detail

struct BracketStats {
    double dropped_mass = 0;  // sum of |a b| * multiplicities over pairs above max_degree
    std::size_t dropped_pairs = 0;
};

/// {F, G} = i sum_j (dF/dxi_j dG/deta_j - dF/deta_j dG/dxi_j). Products of
/// degree above max_degree are skipped and tallied in stats.
inline SparsePolynomial poisson_bracket(const SparsePolynomial& F, const SparsePolynomial& G,
                                        int max_degree = std::numeric_limits<int>::max(),
                                        BracketStats* stats = nullptr) {
    F.check_cutoff(G);
    const int J = F.cutoff();
    // G's terms indexed by the variables they contain.
    using Entry = std::pair<const Monomial*, Complex>;
    std::vector<std::vector<Entry>> with_xi(J + 1), with_eta(J + 1);
    for (const auto& [m, c] : G.terms()) {
        for (const auto& [j, n] : detail::runs(m.xi)) with_xi[j].push_back({&m, c});
        for (const auto& [j, n] : detail::runs(m.eta)) with_eta[j].push_back({&m, c});
    }

    const Complex I(0, 1);
    SparsePolynomial out(J);
    auto& acc = out.mutable_terms();
    auto accumulate = [&](const Monomial& f, Complex a, bool f_on_xi, int j, int pf) {
        const auto& partners = f_on_xi ? with_eta[j] : with_xi[j];
        if (partners.empty()) return;
        const auto f_xi = f_on_xi ? detail::remove_one(f.xi, j) : f.xi;
        const auto f_eta = f_on_xi ? f.eta : detail::remove_one(f.eta, j);
        for (const auto& [g, b] : partners) {
            const int pg = detail::multiplicity(f_on_xi ? g->eta : g->xi, j);
            if (f.degree() + g->degree() - 2 > max_degree) {
                if (stats) {
                    stats->dropped_mass += std::abs(a * b) * pf * pg;
                    ++stats->dropped_pairs;
                }
                continue;
            }
            Monomial prod;
            if (f_on_xi) {
                prod.xi = detail::merge_sorted(f_xi, g->xi);
                prod.eta = detail::merge_sorted(f_eta, detail::remove_one(g->eta, j));
            } else {
                prod.xi = detail::merge_sorted(f_xi, detail::remove_one(g->xi, j));
                prod.eta = detail::merge_sorted(f_eta, g->eta);
            }
            const Complex sign = f_on_xi ? I : -I;
            acc[std::move(prod)] += sign * a * b * double(pf * pg);
        }
    };
    for (const auto& [f, a] : F.terms()) {
        for (const auto& [j, n] : detail::runs(f.xi)) accumulate(f, a, true, j, n);
        for (const auto& [j, n] : detail::runs(f.eta)) accumulate(f, a, false, j, n);
    }
    std::erase_if(acc, [](const auto& kv) { return kv.second == Complex{}; });
    return out;
}

/// sum_j omega_j xi_j eta_j
inline SparsePolynomial h0_polynomial(const FrequencyVector& freq) {
    SparsePolynomial h(freq.cutoff());
    for (int j = 1; j <= freq.cutoff(); ++j) h.add(Monomial({j}, {j}), freq(j));
    return h;
}

/// Omega of a monomial: sum of omega over its xi indices minus over its eta indices.
inline double monomial_divisor(const FrequencyVector& freq, const Monomial& m) {
    if (m.is_action_type()) return 0.0;
    double s = 0.0;
    for (int j : m.xi) s += freq(j);
    for (int j : m.eta) s -= freq(j);
    return s;
}

/// {H_0, c * m} = -i Omega c * m; returns the new coefficient.
inline Complex bracket_with_H0(const FrequencyVector& freq, const Monomial& m, Complex c = 1.0) {
    return Complex(0, -1) * monomial_divisor(freq, m) * c;
}

inline SparsePolynomial bracket_with_H0(const FrequencyVector& freq, const SparsePolynomial& P) {
    SparsePolynomial out(P.cutoff());
    for (const auto& [m, c] : P.terms()) out.add(m, bracket_with_H0(freq, m, c));
    return out;
}

// ---------------------------------------------------------------------------
// Reality and class diagnostics

struct RealityCertificate {
    double mismatch = 0;  // max |conj(a_m) - a_{conj m}|
    double scale = 0;     // max |a|

    bool real(double tol = 1e-13) const { return mismatch <= tol * std::max(1.0, scale); }
};

inline RealityCertificate reality_certificate(const SparsePolynomial& P) {
    RealityCertificate r;
    r.scale = P.max_abs();
    for (const auto& [m, c] : P.terms())
        r.mismatch = std::max(r.mismatch, std::abs(std::conj(c) - P.coefficient(m.conjugate())));
    return r;
}

struct ClassDiagnostic {
    double nu = 0, beta = 0;
    std::vector<int> N;
    std::vector<double> c;       // sup |a| C^beta / (mu^nu A^N)
    std::vector<double> c_plus;  // same with the extra (1 + S) factor
    std::size_t terms = 0;
};

inline ClassDiagnostic class_T_diagnostic(const SparsePolynomial& P, double nu, double beta, const std::vector<int>& N_list) {
    ClassDiagnostic d;
    d.nu = nu;
    d.beta = beta;
    d.N = N_list;
    d.c.assign(N_list.size(), 0.0);
    d.c_plus.assign(N_list.size(), 0.0);
    for (const auto& [m, a] : P.terms()) {
        if (m.degree() < 3) throw std::invalid_argument("class_T_diagnostic: terms of degree < 3");
        const auto st = tuple_stats(m.signed_indices());
        const double base = std::abs(a) * std::pow(double(st.C), beta) / std::pow(double(st.mu), nu);
        for (std::size_t n = 0; n < N_list.size(); ++n) {
            const double v = base / std::pow(st.A, N_list[n]);
            d.c[n] = std::max(d.c[n], v);
            d.c_plus[n] = std::max(d.c_plus[n], v * (1.0 + st.S));
        }
        ++d.terms;
    }
    return d;
}

// ---------------------------------------------------------------------------
// Derivatives

struct Gradient {
    std::vector<Complex> d_xi, d_eta;
};

inline Gradient gradient(const SparsePolynomial& P, const StateVector& z) {
    P.check_state(z);
    const int J = P.cutoff();
    Gradient g{std::vector<Complex>(J), std::vector<Complex>(J)};
    std::vector<Complex> f;
    for (const auto& [m, a] : P.terms()) {
        f.clear();
        for (int j : m.xi) f.push_back(z.xi[j - 1]);
        for (int j : m.eta) f.push_back(z.eta[j - 1]);
        const auto idx = m.signed_indices();
        const std::size_t d = f.size();
        // Prefix/suffix products give every "all but one factor" product.
        std::vector<Complex> pre(d + 1, 1.0), suf(d + 1, 1.0);
        for (std::size_t i = 0; i < d; ++i) pre[i + 1] = pre[i] * f[i];
        for (std::size_t i = d; i-- > 0;) suf[i] = suf[i + 1] * f[i];
        for (std::size_t i = 0; i < d; ++i) {
            const Complex term = a * pre[i] * suf[i + 1];
            if (idx[i] > 0)
                g.d_xi[idx[i] - 1] += term;
            else
                g.d_eta[-idx[i] - 1] += term;
        }
    }
    return g;
}

/// X_P(z) = (-dP/dxi_k, +dP/deta_k).
inline StateVector vector_field_apply(const SparsePolynomial& P, const StateVector& z) {
    auto g = gradient(P, z);
    StateVector out(P.cutoff());
    for (int k = 0; k < P.cutoff(); ++k) {
        out.xi[k] = -g.d_xi[k];
        out.eta[k] = g.d_eta[k];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Nonlinearity expansion

namespace detail {

inline double multinomial_count(const std::vector<int>& sorted) {
    double c = std::tgamma(double(sorted.size()) + 1);
    for (const auto& [v, n] : runs(sorted)) c /= std::tgamma(double(n) + 1);
    return c;
}

}  // namespace detail

/// P(xi, eta) = int g(sum xi_j phi_j, sum eta_j phi_j) dx truncated to modes
/// 1..J and degree r.
inline SparsePolynomial expand_nonlinearity(const Nonlinearity& g, int r, int J) {
    if (J < 1) throw std::invalid_argument("expand_nonlinearity: J must be >= 1");
    SparsePolynomial P(J);
    std::map<std::vector<int>, double> cache;
    for (const auto& t : g.terms()) {
        if (t.l + t.m > r) continue;
        const auto xs = detail::all_multisets(t.l, J);
        const auto es = detail::all_multisets(t.m, J);
        for (const auto& x : xs) {
            const double cx = detail::multinomial_count(x);
            for (const auto& e : es) {
                auto key = detail::merge_sorted(x, e);
                auto it = cache.find(key);
                if (it == cache.end()) it = cache.emplace(key, hermite_overlap(key)).first;
                if (it->second == 0.0) continue;
                P.add(Monomial(x, e), t.coeff * cx * detail::multinomial_count(e) * it->second);
            }
        }
    }
    const auto cert = reality_certificate(P);
    if (!cert.real(1e-12)) throw std::logic_error("expand_nonlinearity: result failed the reality certificate");
    return P;
}

// ---------------------------------------------------------------------------
// Serialization

inline void write_polynomial(std::ostream& os, const SparsePolynomial& P) {
    os << "# hbnf-polynomial v1\n# cutoff=" << P.cutoff() << "\nindices;re;im\n";
    char buf[96];
    for (const auto& [m, c] : P.terms()) {
        std::snprintf(buf, sizeof buf, ";%.17g;%.17g\n", c.real(), c.imag());
        os << m.to_string() << buf;
    }
}

inline SparsePolynomial read_polynomial(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "# hbnf-polynomial v1")
        throw std::runtime_error("read_polynomial: missing or unsupported format header");
    if (!std::getline(is, line) || line.rfind("# cutoff=", 0) != 0)
        throw std::runtime_error("read_polynomial: missing cutoff line");
    SparsePolynomial P(std::stoi(line.substr(9)));
    if (!std::getline(is, line) || line != "indices;re;im") throw std::runtime_error("read_polynomial: missing column header");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto a = line.find(';'), b = line.rfind(';');
        if (a == std::string::npos || a == b) throw std::runtime_error("read_polynomial: malformed row: " + line);
        std::istringstream idx(line.substr(0, a));
        std::vector<int> s;
        for (int v; idx >> v;) s.push_back(v);
        const double re = std::stod(line.substr(a + 1, b - a - 1));
        const double im = std::stod(line.substr(b + 1));
        P.add(Monomial::from_signed(s), {re, im});
    }
    return P;
}

}  // namespace hbnf
