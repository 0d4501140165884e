#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "state.hpp"

namespace hbnf {

/// coeff * u^l v^m
struct GTerm {
    int l = 0;
    int m = 0;
    Complex coeff{};
};

/// Polynomial nonlinearity g(u, v) = sum g_lm u^l v^m. Real means
/// g(u, conj u) is real, i.e. g_lm = conj(g_ml); every term has order >= 3.
class Nonlinearity {
public:
    Nonlinearity() = default;

    explicit Nonlinearity(const std::vector<GTerm>& terms) {
        std::map<std::pair<int, int>, Complex> merged;
        for (const auto& t : terms) {
            if (t.l < 0 || t.m < 0) throw std::invalid_argument("nonlinearity: negative exponent");
            if (t.l + t.m < 3) throw std::invalid_argument("nonlinearity: terms of degree < 3 are not allowed");
            merged[{t.l, t.m}] += t.coeff;
        }
        double scale = 0;
        for (const auto& [lm, c] : merged) scale = std::max(scale, std::abs(c));
        for (const auto& [lm, c] : merged) {
            auto it = merged.find({lm.second, lm.first});
            const Complex partner = it == merged.end() ? Complex{} : it->second;
            if (std::abs(std::conj(c) - partner) > 1e-14 * scale)
                throw std::invalid_argument("nonlinearity: g is not real (g_lm != conj g_ml for l=" +
                                            std::to_string(lm.first) + ", m=" + std::to_string(lm.second) + ")");
        }
        for (const auto& [lm, c] : merged)
            if (c != Complex{}) terms_.push_back({lm.first, lm.second, c});
    }

    /// lambda (u v)^2, the cubic Gross-Pitaevskii type term |psi|^4.
    static Nonlinearity quartic(double lambda = 1.0) { return Nonlinearity({{2, 2, lambda}}); }

    /// u^2 v + u v^2
    static Nonlinearity cubic() { return Nonlinearity({{2, 1, 1.0}, {1, 2, 1.0}}); }

    const std::vector<GTerm>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    int max_degree() const {
        int d = 0;
        for (const auto& t : terms_) d = std::max(d, t.l + t.m);
        return d;
    }

    std::vector<int> degrees() const {
        std::vector<int> d;
        for (const auto& t : terms_) d.push_back(t.l + t.m);
        std::sort(d.begin(), d.end());
        d.erase(std::unique(d.begin(), d.end()), d.end());
        return d;
    }

    /// True when g depends on |psi|^2 only (all terms have l == m).
    bool gauge_invariant() const {
        return std::all_of(terms_.begin(), terms_.end(), [](const GTerm& t) { return t.l == t.m; });
    }

    double scale() const {
        double s = 0;
        for (const auto& t : terms_) s = std::max(s, std::abs(t.coeff));
        return s;
    }

    friend void to_json(nlohmann::json& j, const Nonlinearity& g) {
        j = nlohmann::json::array();
        for (const auto& t : g.terms_) j.push_back({{"l", t.l}, {"m", t.m}, {"re", t.coeff.real()}, {"im", t.coeff.imag()}});
    }
    friend void from_json(const nlohmann::json& j, Nonlinearity& g) {
        std::vector<GTerm> terms;
        for (const auto& e : j)
            terms.push_back({e.at("l").get<int>(), e.at("m").get<int>(),
                             Complex{e.at("re").get<double>(), e.value("im", 0.0)}});
        g = Nonlinearity(terms);
    }

private:
    std::vector<GTerm> terms_;
};

}  // namespace hbnf
