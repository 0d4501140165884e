#pragma once

// Time integration of the truncated Hamiltonian system
//   xi_j' = -i omega_j xi_j - i dP/deta_j
// on real points (eta = conj xi), plus action-drift observables.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "frequency.hpp"
#include "hermite.hpp"
#include "nonlinearity.hpp"
#include "normal_form.hpp"
#include "polynomial.hpp"
#include "random.hpp"
#include "state.hpp"

namespace hbnf {

class DynamicsBlowup : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// P(xi, eta) = int g(u, v) dx with u = sum xi_j phi_j, v = sum eta_j phi_j,
/// evaluated on one Gauss-Hermite grid per degree of g. Each grid is exact for
/// the degree-d integrands of P and of its gradient, so this is the Galerkin
/// nonlinearity with no aliasing.
class NonlinearField {
public:
    NonlinearField() = default;
    NonlinearField(const Nonlinearity& g, int J) : J_(J) {
        if (J < 1) throw std::invalid_argument("NonlinearField: J must be >= 1");
        for (int d : g.degrees()) {
            Grid grid;
            for (const auto& t : g.terms())
                if (t.l + t.m == d) grid.terms.push_back(t);
            const int n = overlap_node_count(d * (J - 1));
            const auto& rule = gauss_hermite(n);
            const double scale = std::sqrt(2.0 / d);
            grid.weights.resize(n);
            grid.phi.resize(static_cast<std::size_t>(n) * J);
            for (int i = 0; i < n; ++i) {
                grid.weights[i] = rule.scaled_weights[i] * scale;
                eval_phi_all(J, rule.nodes[i] * scale, std::span<double>(grid.phi.data() + std::size_t(i) * J, J));
            }
            grids_.push_back(std::move(grid));
        }
    }

    int cutoff() const { return J_; }
    bool empty() const { return grids_.empty(); }

    /// Total number of collocation nodes over all grids.
    std::size_t node_count() const {
        std::size_t n = 0;
        for (const auto& g : grids_) n += g.weights.size();
        return n;
    }

    Complex energy(const StateVector& z) const {
        Complex e = 0;
        for (const auto& grid : grids_) {
            for (std::size_t i = 0; i < grid.weights.size(); ++i) {
                const auto [u, v] = grid.fields(z, i, J_);
                Complex gi = 0;
                for (const auto& t : grid.terms) gi += t.coeff * ipow(u, t.l) * ipow(v, t.m);
                e += grid.weights[i] * gi;
            }
        }
        return e;
    }

    Gradient gradient(const StateVector& z) const {
        Gradient g{std::vector<Complex>(J_), std::vector<Complex>(J_)};
        for (const auto& grid : grids_) {
            for (std::size_t i = 0; i < grid.weights.size(); ++i) {
                const auto [u, v] = grid.fields(z, i, J_);
                Complex gu = 0, gv = 0;
                for (const auto& t : grid.terms) {
                    if (t.l > 0) gu += t.coeff * double(t.l) * ipow(u, t.l - 1) * ipow(v, t.m);
                    if (t.m > 0) gv += t.coeff * double(t.m) * ipow(u, t.l) * ipow(v, t.m - 1);
                }
                gu *= grid.weights[i];
                gv *= grid.weights[i];
                const double* row = grid.phi.data() + i * J_;
                for (int j = 0; j < J_; ++j) {
                    g.d_xi[j] += gu * row[j];
                    g.d_eta[j] += gv * row[j];
                }
            }
        }
        return g;
    }

    /// dP/deta at the real point (xi, conj xi).
    std::vector<Complex> deta_real(const std::vector<Complex>& xi) const {
        std::vector<Complex> out(J_);
        for (const auto& grid : grids_) {
            for (std::size_t i = 0; i < grid.weights.size(); ++i) {
                const double* row = grid.phi.data() + i * J_;
                Complex u = 0;
                for (int j = 0; j < J_; ++j) u += xi[j] * row[j];
                const Complex v = std::conj(u);
                Complex gv = 0;
                for (const auto& t : grid.terms)
                    if (t.m > 0) gv += t.coeff * double(t.m) * ipow(u, t.l) * ipow(v, t.m - 1);
                gv *= grid.weights[i];
                for (int j = 0; j < J_; ++j) out[j] += gv * row[j];
            }
        }
        return out;
    }

private:
    struct Grid {
        std::vector<GTerm> terms;
        std::vector<double> weights;
        std::vector<double> phi;  // node-major, J values per node

        std::pair<Complex, Complex> fields(const StateVector& z, std::size_t i, int J) const {
            const double* row = phi.data() + i * J;
            Complex u = 0, v = 0;
            for (int j = 0; j < J; ++j) {
                u += z.xi[j] * row[j];
                v += z.eta[j] * row[j];
            }
            return {u, v};
        }
    };

    static Complex ipow(Complex x, int n) {
        Complex r = 1;
        for (int k = 0; k < n; ++k) r *= x;
        return r;
    }

    int J_ = 0;
    std::vector<Grid> grids_;
};

/// H = sum omega_j xi_j eta_j + P on a real point.
inline double hamiltonian(const StateVector& z, const NonlinearField& field, const FrequencyVector& freq) {
    double h = 0;
    for (int j = 0; j < z.cutoff(); ++j) h += freq.values()[j] * std::real(z.xi[j] * z.eta[j]);
    return h + (field.empty() ? 0.0 : field.energy(z).real());
}

/// Real initial point with |xi_j| proportional to exp(-decay (j - 1)), seeded
/// phases, and ||z||_s = eps.
inline StateVector initial_state(int J, double eps, double s, std::uint64_t seed, double decay = 0.5) {
    std::vector<Complex> xi(J);
    for (int j = 1; j <= J; ++j) {
        const double phase = 2 * std::numbers::pi * counter_uniform(seed, 0x70686173, j);
        xi[j - 1] = std::polar(std::exp(-decay * (j - 1)), phase);
    }
    auto z = StateVector::real_point(std::move(xi));
    z *= eps / z.norm(s);
    return z;
}

enum class Scheme { strang, rk4 };

inline Scheme parse_scheme(const std::string& s) {
    if (s == "strang") return Scheme::strang;
    if (s == "rk4") return Scheme::rk4;
    throw std::invalid_argument("unknown integration scheme '" + s + "' (expected strang or rk4)");
}

struct EvolveOptions {
    double dt = 1e-2;  // negative integrates backwards
    double T = 1.0;    // duration, > 0
    Scheme scheme = Scheme::strang;
    int record_every = 1;
    std::vector<double> s_list{1.0};
    bool keep_states = true;
    double blowup_factor = 2.0;
    int max_iterations = 100;  // implicit midpoint fixed-point iterations
};

struct TrajectoryRecord {
    std::vector<double> s_list;
    std::vector<double> t;
    std::vector<double> energy;
    std::vector<double> l2;  // sum |xi_j|^2
    std::vector<std::vector<double>> norm_s;   // [time][s index]
    std::vector<std::vector<double>> drift_s;  // [time][s index]
    std::vector<double> tail;                  // sum_{j > J/2} I_j
    std::vector<StateVector> states;           // when keep_states
    std::vector<double> initial_actions;
    std::size_t steps = 0;

    std::size_t size() const { return t.size(); }
};

namespace detail {

inline double weighted_drift(const std::vector<double>& I, const std::vector<double>& I0, double s) {
    double d = 0;
    for (std::size_t j = 0; j < I.size(); ++j) d += std::pow(double(j + 1), 2 * s) * std::abs(I[j] - I0[j]);
    return d;
}

inline void record(TrajectoryRecord& tr, double t, const std::vector<Complex>& xi, const NonlinearField& field,
                   const FrequencyVector& freq, bool keep) {
    const auto z = StateVector::real_point(xi);
    const auto I = z.actions();
    if (tr.t.empty()) tr.initial_actions = I;
    tr.t.push_back(t);
    tr.energy.push_back(hamiltonian(z, field, freq));
    double l2 = 0, tail = 0;
    const int J = z.cutoff();
    for (int j = 0; j < J; ++j) {
        l2 += I[j];
        if (j + 1 > J / 2) tail += I[j];
    }
    tr.l2.push_back(l2);
    tr.tail.push_back(tail);
    std::vector<double> ns, ds;
    for (double s : tr.s_list) {
        ns.push_back(z.norm(s));
        ds.push_back(weighted_drift(I, tr.initial_actions, s));
    }
    tr.norm_s.push_back(std::move(ns));
    tr.drift_s.push_back(std::move(ds));
    if (keep) tr.states.push_back(z);
}

}  // namespace detail

/// Strang splitting: exact linear rotation for dt/2, implicit midpoint on the
/// nonlinear field for dt, rotation for dt/2. Symmetric and symplectic, and
/// conserves sum |xi_j|^2 when g is gauge invariant. rk4 is classical RK4 on
/// the full field.
inline TrajectoryRecord evolve(const StateVector& z0, const NonlinearField& field, const FrequencyVector& freq,
                               const EvolveOptions& opt) {
    const int J = z0.cutoff();
    if (freq.cutoff() != J || (!field.empty() && field.cutoff() != J))
        throw std::invalid_argument("evolve: cutoff mismatch between state, field and frequencies");
    if (!z0.is_real_point(1e-14 * std::max(1.0, z0.norm(0))))
        throw std::invalid_argument("evolve: initial point must be real (eta = conj xi)");
    if (!(opt.T > 0) || opt.dt == 0) throw std::invalid_argument("evolve: need T > 0 and dt != 0");
    if (opt.record_every < 1) throw std::invalid_argument("evolve: record_every must be >= 1");

    const double dt = opt.dt;
    const auto n_steps = static_cast<std::size_t>(std::llround(opt.T / std::abs(dt)));
    const Complex I(0, 1);
    std::vector<Complex> half_rot(J);
    for (int j = 0; j < J; ++j) half_rot[j] = std::exp(-I * freq.values()[j] * (0.5 * dt));
    auto nonlinear = [&](const std::vector<Complex>& x) {
        if (field.empty()) return std::vector<Complex>(J);
        auto g = field.deta_real(x);
        for (auto& v : g) v *= -I;
        return g;
    };
    auto full_rhs = [&](const std::vector<Complex>& x) {
        auto f = nonlinear(x);
        for (int j = 0; j < J; ++j) f[j] += -I * freq.values()[j] * x[j];
        return f;
    };

    TrajectoryRecord tr;
    tr.s_list = opt.s_list;
    const double guard_s = opt.s_list.empty() ? 0.0 : opt.s_list.front();
    const double n0 = z0.norm(guard_s);
    std::vector<Complex> xi = z0.xi;
    detail::record(tr, 0.0, xi, field, freq, opt.keep_states);

    std::vector<Complex> tmp(J), mid(J), next(J);
    for (std::size_t step = 1; step <= n_steps; ++step) {
        if (opt.scheme == Scheme::strang) {
            for (int j = 0; j < J; ++j) xi[j] *= half_rot[j];
            if (!field.empty()) {
                // next = xi + dt f((xi + next) / 2) by fixed-point iteration.
                auto f = nonlinear(xi);
                for (int j = 0; j < J; ++j) next[j] = xi[j] + dt * f[j];
                double scale = 0;
                for (int j = 0; j < J; ++j) scale = std::max(scale, std::abs(xi[j]));
                double prev_change = std::numeric_limits<double>::infinity();
                for (int it = 0;; ++it) {
                    for (int j = 0; j < J; ++j) mid[j] = 0.5 * (xi[j] + next[j]);
                    f = nonlinear(mid);
                    double change = 0;
                    for (int j = 0; j < J; ++j) {
                        const Complex v = xi[j] + dt * f[j];
                        change = std::max(change, std::abs(v - next[j]));
                        next[j] = v;
                    }
                    if (change <= 1e-16 * scale || (change >= prev_change && change <= 1e-13 * scale)) break;
                    if (it + 1 >= opt.max_iterations)
                        throw std::runtime_error("evolve: implicit midpoint iteration did not converge (dt too large?)");
                    prev_change = change;
                }
                xi.swap(next);
            }
            for (int j = 0; j < J; ++j) xi[j] *= half_rot[j];
        } else {
            const auto k1 = full_rhs(xi);
            for (int j = 0; j < J; ++j) tmp[j] = xi[j] + 0.5 * dt * k1[j];
            const auto k2 = full_rhs(tmp);
            for (int j = 0; j < J; ++j) tmp[j] = xi[j] + 0.5 * dt * k2[j];
            const auto k3 = full_rhs(tmp);
            for (int j = 0; j < J; ++j) tmp[j] = xi[j] + dt * k3[j];
            const auto k4 = full_rhs(tmp);
            for (int j = 0; j < J; ++j) xi[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        ++tr.steps;
        const double t = static_cast<double>(step) * dt;
        if (step % opt.record_every == 0 || step == n_steps) {
            detail::record(tr, t, xi, field, freq, opt.keep_states);
            const double n = tr.norm_s.back().empty() ? StateVector::real_point(xi).norm(0) : tr.norm_s.back().front();
            if (!std::isfinite(n) || n > opt.blowup_factor * n0) {
                char buf[160];
                std::snprintf(buf, sizeof buf, "evolve: norm %.6g exceeded %.3g x initial %.6g at t=%.6g", n,
                              opt.blowup_factor, n0, t);
                throw DynamicsBlowup(buf);
            }
        }
    }
    return tr;
}

/// max over recorded times of sum_j j^{2s} |I_j(t) - I_j(0)|.
inline double measure_action_drift(const TrajectoryRecord& tr, double s) {
    if (tr.states.empty()) {
        for (std::size_t k = 0; k < tr.s_list.size(); ++k) {
            if (tr.s_list[k] != s) continue;
            double m = 0;
            for (const auto& d : tr.drift_s) m = std::max(m, d[k]);
            return m;
        }
        throw std::invalid_argument("measure_action_drift: s not recorded and no states kept");
    }
    double m = 0;
    for (const auto& z : tr.states) m = std::max(m, detail::weighted_drift(z.actions(), tr.initial_actions, s));
    return m;
}

/// Actions of tau^{-1}(z(t)) at each recorded time.
inline std::vector<std::vector<double>> normalized_actions(const TrajectoryRecord& tr, const NormalFormResult& nf) {
    if (tr.states.empty()) throw std::invalid_argument("normalized_actions: trajectory has no stored states");
    std::vector<std::vector<double>> out(tr.states.size());
    parallel_blocks(tr.states.size(), [&](std::size_t i) {
        out[i] = apply_tau(nf, tr.states[i], TauDirection::inverse).actions();
    });
    return out;
}

/// The drift functional evaluated on normalized actions.
inline double normalized_action_drift(const TrajectoryRecord& tr, const NormalFormResult& nf, double s) {
    const auto I = normalized_actions(tr, nf);
    double m = 0;
    for (const auto& v : I) m = std::max(m, detail::weighted_drift(v, I.front(), s));
    return m;
}

/// [sum_j j^{2s} |sqrt I'_j(t) - sqrt I'_j(0)|^2]^{1/2} per recorded time.
inline std::vector<double> distance_to_torus(const TrajectoryRecord& tr, const NormalFormResult& nf, double s) {
    const auto I = normalized_actions(tr, nf);
    std::vector<double> d(I.size());
    for (std::size_t t = 0; t < I.size(); ++t) {
        double acc = 0;
        for (std::size_t j = 0; j < I[t].size(); ++j) {
            const double diff = std::sqrt(std::max(I[t][j], 0.0)) - std::sqrt(std::max(I[0][j], 0.0));
            acc += std::pow(double(j + 1), 2 * s) * diff * diff;
        }
        d[t] = std::sqrt(acc);
    }
    return d;
}

/// max |H(t) - H(0)| over the record.
inline double energy_drift(const TrajectoryRecord& tr) {
    double m = 0;
    for (double e : tr.energy) m = std::max(m, std::abs(e - tr.energy.front()));
    return m;
}

/// Columns t,H,l2,norm_s,drift_s,tail; norm_s and drift_s use the first s.
inline void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& tr) {
    os << "t,H,l2,norm_s,drift_s,tail\n";
    char buf[256];
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const double ns = tr.norm_s[i].empty() ? 0.0 : tr.norm_s[i].front();
        const double ds = tr.drift_s[i].empty() ? 0.0 : tr.drift_s[i].front();
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", tr.t[i], tr.energy[i], tr.l2[i], ns, ds,
                      tr.tail[i]);
        os << buf;
    }
}

/// t,I_1,...,I_J every stride-th record.
inline void write_actions_csv(std::ostream& os, const TrajectoryRecord& tr, std::size_t stride = 1) {
    if (tr.states.empty()) throw std::invalid_argument("write_actions_csv: trajectory has no stored states");
    os << 't';
    for (int j = 1; j <= tr.states.front().cutoff(); ++j) os << ",I_" << j;
    os << '\n';
    char buf[32];
    for (std::size_t i = 0; i < tr.states.size(); i += std::max<std::size_t>(stride, 1)) {
        std::snprintf(buf, sizeof buf, "%.17g", tr.t[i]);
        os << buf;
        for (double v : tr.states[i].actions()) {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            os << buf;
        }
        os << '\n';
    }
}

}  // namespace hbnf
