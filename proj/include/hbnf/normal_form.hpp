#pragma once

// Homological equation, Lie series and the order-r Birkhoff iteration.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>
#include <nlohmann/json.hpp>

#include "frequency.hpp"
#include "polynomial.hpp"
#include "state.hpp"

namespace hbnf {

inline constexpr double kDivisorFloor = 1e-12;

struct HomologicalSplit {
    SparsePolynomial chi;
    SparsePolynomial Z;
    double divisor_floor = kDivisorFloor;
    double min_divisor = std::numeric_limits<double>::infinity();  // over non-action monomials
    double residual = 0;  // coefficient-wise relative, see detail::homological_residual
};

namespace detail {

inline HomologicalSplit solve_with_sign(const SparsePolynomial& Q, const FrequencyVector& freq, double sigma, double floor) {
    if (freq.cutoff() != Q.cutoff()) throw std::invalid_argument("solve_homological: cutoff mismatch with frequencies");
    HomologicalSplit s{SparsePolynomial(Q.cutoff()), SparsePolynomial(Q.cutoff()), floor};
    for (const auto& [m, a] : Q.terms()) {
        if (m.is_action_type()) {
            s.Z.add(m, a);
            continue;
        }
        const double omega = monomial_divisor(freq, m);
        s.min_divisor = std::min(s.min_divisor, std::abs(omega));
        if (std::abs(omega) < floor)
            throw NumericallyResonant("numerically resonant sample: |Omega| = " + std::to_string(std::abs(omega)) +
                                      " below floor for monomial [" + m.to_string() + "]");
        s.chi.add(m, sigma * Complex(0, 1) * a / omega);
    }
    return s;
}

/// Coefficient-wise relative residual of {H0, chi} + Q - Z (generic bracket).
/// Each coefficient is scaled by |Q_m| + |b_m| sum_i omega_{j_i}, the size of
/// the terms that cancel in it.
inline double homological_residual(const HomologicalSplit& s, const SparsePolynomial& Q, const FrequencyVector& freq) {
    auto R = poisson_bracket(h0_polynomial(freq), s.chi);
    R += Q;
    R -= s.Z;
    double worst = 0;
    for (const auto& [m, r] : R.terms()) {
        double w = 0;
        for (int j : m.signed_indices()) w += freq(std::abs(j));
        const double denom = std::abs(Q.coefficient(m)) + std::abs(s.chi.coefficient(m)) * w;
        worst = std::max(worst, denom > 0 ? std::abs(r) / denom : std::abs(r));
    }
    return worst;
}

}  // namespace detail

/// Sign sigma in b = sigma i a / Omega that makes {H0, chi} + Q = Z hold.
/// Determined once from a single non-resonant monomial.
inline double homological_sign() {
    static const double sigma = [] {
        const auto freq = FrequencyVector::unperturbed(3);
        SparsePolynomial Q(3);
        Q.add({1, 2, -3}, 1.0);
        for (double s : {1.0, -1.0}) {
            auto split = detail::solve_with_sign(Q, freq, s, kDivisorFloor);
            if (detail::homological_residual(split, Q, freq) < 1e-15) return s;
        }
        throw std::logic_error("homological_sign: neither sign satisfies the homological identity");
    }();
    return sigma;
}

/// Splits Q into Z (action monomials) and chi with {H0, chi} + Q = Z.
inline HomologicalSplit solve_homological(const SparsePolynomial& Q, const FrequencyVector& freq,
                                          double floor = kDivisorFloor) {
    auto s = detail::solve_with_sign(Q, freq, homological_sign(), floor);
    s.residual = detail::homological_residual(s, Q, freq);
    return s;
}

struct LieSeries {
    SparsePolynomial value;
    double dropped_mass = 0;  // coefficient mass above degree r, weighted by 1/k!
    int brackets = 0;
};

/// sum_k P^[k] / k!, P^[k+1] = {P^[k], chi}, truncated at degree r.
inline LieSeries lie_transform_series(const SparsePolynomial& P, const SparsePolynomial& chi, int r,
                                      double drop_tol = kDefaultDropTolerance) {
    if (!chi.empty() && chi.min_degree() < 3) throw std::invalid_argument("lie_transform_series: chi must have degree >= 3");
    LieSeries out{P.truncated(r)};
    if (chi.empty()) return out;
    SparsePolynomial term = out.value;
    for (int k = 1;; ++k) {
        BracketStats st;
        term = poisson_bracket(term, chi, r, &st);
        term *= 1.0 / k;
        out.dropped_mass += st.dropped_mass / k;
        ++out.brackets;
        term.prune(drop_tol);
        if (term.empty()) break;
        out.value += term;
    }
    out.value.prune(drop_tol);
    return out;
}

struct NormalFormOptions {
    double divisor_floor = kDivisorFloor;
    double drop_tolerance = kDefaultDropTolerance;
    std::size_t max_terms = 5'000'000;
};

struct NormalFormStep {
    int degree = 0;
    std::size_t source_terms = 0;
    std::size_t chi_terms = 0;
    std::size_t z_terms = 0;
    double homological_residual = 0;
    double min_divisor = 0;
    double dropped_mass = 0;
    std::size_t hamiltonian_terms = 0;
};

struct NormalFormResult {
    int order = 0;
    int cutoff = 0;
    std::string provenance;
    std::vector<double> frequencies;
    double sigma = 0;
    std::vector<SparsePolynomial> chi;  // chi[k - 3] has degree k
    SparsePolynomial Z;                 // action-only part, degrees 3..r
    SparsePolynomial transformed;       // H o tau truncated at degree r
    std::vector<NormalFormStep> steps;
    double input_scale = 0;
    double terminal_residual = 0;  // max non-action coefficient of degree <= r, relative to input_scale

    const SparsePolynomial& chi_of_degree(int k) const { return chi.at(k - 3); }
    double max_homological_residual() const {
        double m = 0;
        for (const auto& s : steps) m = std::max(m, s.homological_residual);
        return m;
    }
};

/// Non-action coefficients of degree <= r (H0 itself is action-type).
inline double non_normal_residual(const SparsePolynomial& H, int r) {
    double m = 0;
    for (const auto& [mon, c] : H.terms())
        if (mon.degree() <= r && !mon.is_action_type()) m = std::max(m, std::abs(c));
    return m;
}

inline NormalFormResult birkhoff_iterate(const SparsePolynomial& P, const FrequencyVector& freq, int r,
                                         const NormalFormOptions& opt = {}) {
    if (r < 3) throw std::invalid_argument("birkhoff_iterate: order r must be >= 3");
    if (P.cutoff() != freq.cutoff()) throw std::invalid_argument("birkhoff_iterate: cutoff mismatch with frequencies");
    if (!P.empty() && P.min_degree() < 3) throw std::invalid_argument("birkhoff_iterate: P must have degree >= 3");
    const auto cert = reality_certificate(P);
    if (!cert.real(1e-12)) throw std::invalid_argument("birkhoff_iterate: P is not real");

    NormalFormResult res;
    res.order = r;
    res.cutoff = P.cutoff();
    res.provenance = freq.provenance();
    res.frequencies.assign(freq.values().begin(), freq.values().end());
    res.sigma = homological_sign();
    res.input_scale = P.max_abs();
    res.Z = SparsePolynomial(P.cutoff());

    SparsePolynomial H = h0_polynomial(freq) + P.truncated(r);
    for (int k = 3; k <= r; ++k) {
        const auto Pk = H.degree_part(k);
        auto split = solve_homological(Pk, freq, opt.divisor_floor);
        NormalFormStep step;
        step.degree = k;
        step.source_terms = Pk.size();
        step.chi_terms = split.chi.size();
        step.z_terms = split.Z.size();
        step.homological_residual = split.residual;
        step.min_divisor = split.min_divisor;
        if (!split.chi.empty()) {
            auto lie = lie_transform_series(H, split.chi, r, opt.drop_tolerance);
            H = std::move(lie.value);
            step.dropped_mass = lie.dropped_mass;
        }
        step.hamiltonian_terms = H.size();
        if (H.size() > opt.max_terms)
            throw BudgetExceeded("birkhoff_iterate: " + std::to_string(H.size()) + " terms exceed the polynomial budget");
        res.Z += split.Z;
        res.chi.push_back(std::move(split.chi));
        res.steps.push_back(step);
    }
    res.transformed = std::move(H);
    res.terminal_residual = non_normal_residual(res.transformed, r) / (res.input_scale > 0 ? res.input_scale : 1.0);
    return res;
}

// ---------------------------------------------------------------------------
// The transformation tau as a composition of Lie flows

class FlowEscape : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class TauDirection { forward, inverse };

struct FlowOptions {
    double abs_tol = 1e-15;
    double rel_tol = 1e-13;
    double escape_factor = 2.0;
};

/// Time-t flow of d/dt F = {F, chi}: xi' = i dchi/deta, eta' = -i dchi/dxi.
inline StateVector lie_flow(const SparsePolynomial& chi, const StateVector& z, double t, const FlowOptions& opt = {}) {
    namespace ode = boost::numeric::odeint;
    if (chi.empty() || t == 0) return z;
    const int J = z.cutoff();
    using Vec = std::vector<double>;
    auto pack = [J](const StateVector& s) {
        Vec v(4 * J);
        for (int k = 0; k < J; ++k) {
            v[4 * k] = s.xi[k].real();
            v[4 * k + 1] = s.xi[k].imag();
            v[4 * k + 2] = s.eta[k].real();
            v[4 * k + 3] = s.eta[k].imag();
        }
        return v;
    };
    auto unpack = [J](const Vec& v) {
        StateVector s(J);
        for (int k = 0; k < J; ++k) {
            s.xi[k] = {v[4 * k], v[4 * k + 1]};
            s.eta[k] = {v[4 * k + 2], v[4 * k + 3]};
        }
        return s;
    };
    const double n0 = z.norm(0);
    const Complex I(0, 1);
    auto rhs = [&](const Vec& v, Vec& dv, double) {
        const auto g = gradient(chi, unpack(v));
        for (int k = 0; k < J; ++k) {
            const Complex dxi = I * g.d_eta[k];
            const Complex deta = -I * g.d_xi[k];
            dv[4 * k] = dxi.real();
            dv[4 * k + 1] = dxi.imag();
            dv[4 * k + 2] = deta.real();
            dv[4 * k + 3] = deta.imag();
        }
    };
    Vec v = pack(z);
    auto stepper = ode::make_controlled<ode::runge_kutta_dopri5<Vec>>(opt.abs_tol * std::max(n0, 1e-300), opt.rel_tol);
    ode::integrate_adaptive(stepper, rhs, v, 0.0, t, t / 16, [&](const Vec& s, double time) {
        double n = 0;
        for (double x : s) n += x * x;
        if (std::sqrt(n) > opt.escape_factor * n0)
            throw FlowEscape("lie_flow: norm grew beyond " + std::to_string(opt.escape_factor) + "x at t=" + std::to_string(time));
    });
    return unpack(v);
}

/// forward: tau(z) = phi_3(phi_4(...phi_r(z))); inverse undoes it.
inline StateVector apply_tau(const NormalFormResult& nf, const StateVector& z, TauDirection dir,
                             const FlowOptions& opt = {}) {
    if (z.cutoff() != nf.cutoff) throw std::invalid_argument("apply_tau: state cutoff mismatch");
    StateVector w = z;
    const int n = static_cast<int>(nf.chi.size());
    if (dir == TauDirection::forward) {
        for (int i = n - 1; i >= 0; --i) w = lie_flow(nf.chi[i], w, 1.0, opt);
    } else {
        for (int i = 0; i < n; ++i) w = lie_flow(nf.chi[i], w, -1.0, opt);
    }
    return w;
}

// ---------------------------------------------------------------------------
// Persistence

inline void save_normal_form(const NormalFormResult& nf, const std::filesystem::path& dir,
                             const nlohmann::json& extra = nlohmann::json::object()) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json m;
    m["format"] = "hbnf-normal-form";
    m["version"] = 1;
    m["order"] = nf.order;
    m["cutoff"] = nf.cutoff;
    m["provenance"] = nf.provenance;
    m["frequencies"] = nf.frequencies;
    m["sigma"] = nf.sigma;
    m["input_scale"] = nf.input_scale;
    m["terminal_residual"] = nf.terminal_residual;
    m["steps"] = nlohmann::json::array();
    for (const auto& s : nf.steps)
        m["steps"].push_back({{"degree", s.degree},
                              {"source_terms", s.source_terms},
                              {"chi_terms", s.chi_terms},
                              {"z_terms", s.z_terms},
                              {"homological_residual", s.homological_residual},
                              {"min_divisor", std::isfinite(s.min_divisor) ? nlohmann::json(s.min_divisor) : nlohmann::json()},
                              {"dropped_mass", s.dropped_mass},
                              {"hamiltonian_terms", s.hamiltonian_terms}});
    auto write = [&](const std::string& name, const SparsePolynomial& p) {
        std::ofstream os(dir / name);
        if (!os) throw std::runtime_error("save_normal_form: cannot write " + (dir / name).string());
        write_polynomial(os, p);
        m["files"].push_back(name);
    };
    m["files"] = nlohmann::json::array();
    for (std::size_t i = 0; i < nf.chi.size(); ++i) write("chi_" + std::to_string(i + 3) + ".csv", nf.chi[i]);
    write("Z.csv", nf.Z);
    write("transformed.csv", nf.transformed);
    for (const auto& [k, v] : extra.items()) m[k] = v;
    std::ofstream os(dir / "manifest.json");
    os << m.dump(2) << '\n';
}

inline NormalFormResult load_normal_form(const std::filesystem::path& dir) {
    std::ifstream ms(dir / "manifest.json");
    if (!ms) throw std::runtime_error("load_normal_form: missing manifest.json in " + dir.string());
    const auto m = nlohmann::json::parse(ms);
    if (m.value("format", "") != "hbnf-normal-form" || m.value("version", 0) != 1)
        throw std::runtime_error("load_normal_form: unsupported manifest format");
    NormalFormResult nf;
    nf.order = m.at("order");
    nf.cutoff = m.at("cutoff");
    nf.provenance = m.at("provenance");
    nf.frequencies = m.at("frequencies").get<std::vector<double>>();
    nf.sigma = m.at("sigma");
    nf.input_scale = m.at("input_scale");
    nf.terminal_residual = m.at("terminal_residual");
    auto read = [&](const std::string& name) {
        std::ifstream is(dir / name);
        if (!is) throw std::runtime_error("load_normal_form: missing " + name);
        return read_polynomial(is);
    };
    for (int k = 3; k <= nf.order; ++k) nf.chi.push_back(read("chi_" + std::to_string(k) + ".csv"));
    nf.Z = read("Z.csv");
    nf.transformed = read("transformed.csv");
    for (const auto& s : m.at("steps")) {
        NormalFormStep st;
        st.degree = s.at("degree");
        st.source_terms = s.at("source_terms");
        st.chi_terms = s.at("chi_terms");
        st.z_terms = s.at("z_terms");
        st.homological_residual = s.at("homological_residual");
        st.min_divisor = s.at("min_divisor").is_null() ? std::numeric_limits<double>::infinity() : s.at("min_divisor").get<double>();
        st.dropped_mass = s.at("dropped_mass");
        st.hamiltonian_terms = s.at("hamiltonian_terms");
        nf.steps.push_back(st);
    }
    return nf;
}

}  // namespace hbnf
