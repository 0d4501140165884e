#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace hbnf {

using Complex = std::complex<double>;

/// Truncated phase-space point z = (xi, eta), modes 1..J stored at [j - 1].
struct StateVector {
    std::vector<Complex> xi;
    std::vector<Complex> eta;

    StateVector() = default;
    explicit StateVector(int J) : xi(J), eta(J) {
        if (J < 0) throw std::invalid_argument("StateVector: negative cutoff");
    }

    /// The real point (xi, conj(xi)).
    static StateVector real_point(std::vector<Complex> xi_values) {
        StateVector z;
        z.eta.resize(xi_values.size());
        for (std::size_t j = 0; j < xi_values.size(); ++j) z.eta[j] = std::conj(xi_values[j]);
        z.xi = std::move(xi_values);
        return z;
    }

    int cutoff() const { return static_cast<int>(xi.size()); }

    bool is_real_point(double tol = 0.0) const {
        for (std::size_t j = 0; j < xi.size(); ++j)
            if (std::abs(eta[j] - std::conj(xi[j])) > tol) return false;
        return true;
    }

    /// ||z||_s = (sum_j j^{2s} (|xi_j|^2 + |eta_j|^2))^{1/2}
    double norm(double s) const {
        double acc = 0;
        for (std::size_t j = 0; j < xi.size(); ++j)
            acc += std::pow(double(j + 1), 2 * s) * (std::norm(xi[j]) + std::norm(eta[j]));
        return std::sqrt(acc);
    }

    /// N(z) = 2 sum_j j^{2s} xi_j eta_j; equals ||z||_s^2 on real points.
    Complex weighted_action_sum(double s) const {
        Complex acc = 0;
        for (std::size_t j = 0; j < xi.size(); ++j) acc += std::pow(double(j + 1), 2 * s) * xi[j] * eta[j];
        return 2.0 * acc;
    }

    /// I_j = xi_j eta_j (real part; exact on real points).
    std::vector<double> actions() const {
        std::vector<double> I(xi.size());
        for (std::size_t j = 0; j < xi.size(); ++j) I[j] = std::real(xi[j] * eta[j]);
        return I;
    }

    StateVector& operator+=(const StateVector& o) {
        check_same(o);
        for (std::size_t j = 0; j < xi.size(); ++j) {
            xi[j] += o.xi[j];
            eta[j] += o.eta[j];
        }
        return *this;
    }
    StateVector& operator-=(const StateVector& o) {
        check_same(o);
        for (std::size_t j = 0; j < xi.size(); ++j) {
            xi[j] -= o.xi[j];
            eta[j] -= o.eta[j];
        }
        return *this;
    }
    StateVector& operator*=(Complex c) {
        for (auto& v : xi) v *= c;
        for (auto& v : eta) v *= c;
        return *this;
    }
    friend StateVector operator+(StateVector a, const StateVector& b) { return a += b; }
    friend StateVector operator-(StateVector a, const StateVector& b) { return a -= b; }
    friend StateVector operator*(Complex c, StateVector a) { return a *= c; }

private:
    void check_same(const StateVector& o) const {
        if (o.xi.size() != xi.size()) throw std::invalid_argument("StateVector: cutoff mismatch");
    }
};

}  // namespace hbnf
