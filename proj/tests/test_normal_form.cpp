#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include <hbnf/normal_form.hpp>
#include <hbnf/random.hpp>

using namespace hbnf;

namespace {

StateVector real_state(int J, double size, std::uint64_t seed) {
    std::vector<Complex> xi(J);
    for (int j = 0; j < J; ++j)
        xi[j] = std::polar(std::exp(-0.3 * j), 2 * 3.14159265358979 * counter_uniform(seed, 0, j));
    auto z = StateVector::real_point(std::move(xi));
    const double n = z.norm(0);
    for (int j = 0; j < J; ++j) {
        z.xi[j] *= size / n;
        z.eta[j] *= size / n;
    }
    return z;
}

struct Fixture {
    FrequencyVector freq = FrequencyVector::from_sample(sample_multiplier(1, 4, 7));
    SparsePolynomial P = expand_nonlinearity(Nonlinearity::cubic(), 5, 4);
    NormalFormResult nf = birkhoff_iterate(P, freq, 5);
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

}  // namespace

TEST(Homological, SignIsCalibrated) { EXPECT_EQ(homological_sign(), -1.0); }

TEST(Homological, SplitsActionAndSolvesIdentity) {
    const auto freq = FrequencyVector::from_sample(sample_multiplier(1, 5, 3));
    const auto Q = expand_nonlinearity(Nonlinearity::quartic(), 4, 5);
    const auto s = solve_homological(Q, freq);
    for (const auto& [m, c] : s.Z.terms()) EXPECT_TRUE(m.is_action_type());
    for (const auto& [m, c] : s.chi.terms()) EXPECT_FALSE(m.is_action_type());
    EXPECT_EQ(s.Z.size() + s.chi.size(), Q.size());
    EXPECT_LE(s.residual, 1e-13);
    auto R = bracket_with_H0(freq, s.chi);
    R += Q;
    R -= s.Z;
    EXPECT_LE(R.max_abs(), 1e-13 * Q.max_abs());
}

TEST(Homological, ExactResonanceRefused) {
    const auto freq = FrequencyVector::unperturbed(3);
    SparsePolynomial Q(3);
    Q.add({1, 3, -2, -2}, 1.0);
    Q.add({2, 2, -1, -3}, 1.0);
    EXPECT_THROW(solve_homological(Q, freq), NumericallyResonant);
}

TEST(LieSeries, MatchesFlowComposition) {
    // sum_k ad^k F / k! evaluated at z equals F at the time-1 flow of chi.
    SparsePolynomial F(2), chi(2);
    F.add({1, 2, -1}, Complex(0.3, 0.1));
    F.add({-1, -2, 1}, Complex(0.3, -0.1));
    F.add({1, -1}, 1.0);
    chi.add({1, 1, -2}, Complex(0, 0.5));
    chi.add({-1, -1, 2}, Complex(0, -0.5));
    const auto L = lie_transform_series(F, chi, 14, 0).value;
    const auto z = StateVector::real_point({Complex(0.01, 0.02), Complex(-0.015, 0.005)});
    const double scale = std::abs(F.evaluate(z));
    EXPECT_LT(std::abs(F.evaluate(lie_flow(chi, z, 1.0)) - L.evaluate(z)), 1e-12 * scale);
    EXPECT_GT(std::abs(F.evaluate(lie_flow(chi, z, -1.0)) - L.evaluate(z)), 1e-3 * scale);
}

TEST(LieSeries, TruncatesAtOrder) {
    SparsePolynomial F(2), chi(2);
    F.add({1, 1, -2}, 1.0);
    chi.add({1, 2, -2}, Complex(0, 1));
    const auto L = lie_transform_series(F, chi, 4);
    EXPECT_LE(L.value.max_degree(), 4);
    EXPECT_GT(L.dropped_mass, 0.0);
    SparsePolynomial bad(2);
    bad.add({1, -1}, 1.0);
    EXPECT_THROW(lie_transform_series(F, bad, 4), std::invalid_argument);
}

TEST(NormalForm, TerminalResidualAtOrderFive) {
    const auto& f = fixture();
    EXPECT_LE(f.nf.terminal_residual, 1e-10);
    EXPECT_LE(f.nf.max_homological_residual(), 1e-10);
    ASSERT_EQ(f.nf.chi.size(), 3u);
    for (int k = 3; k <= 5; ++k)
        if (!f.nf.chi_of_degree(k).empty()) {
            EXPECT_EQ(f.nf.chi_of_degree(k).min_degree(), k);
        }
    for (const auto& [m, c] : f.nf.Z.terms()) EXPECT_TRUE(m.is_action_type());
    EXPECT_TRUE(reality_certificate(f.nf.transformed).real(1e-12));
}

TEST(NormalForm, TransformedHamiltonianIsHComposedWithTau) {
    const auto& f = fixture();
    const auto H = h0_polynomial(f.freq) + f.P;
    std::vector<double> err;
    for (double size : {1e-2, 1e-3}) {
        const auto z = real_state(4, size, 1);
        const auto w = apply_tau(f.nf, z, TauDirection::forward);
        err.push_back(std::abs(H.evaluate(w) - f.nf.transformed.evaluate(z)));
    }
    // Remainder starts at degree r + 1 = 6.
    EXPECT_GT(std::log10(err[0] / std::max(err[1], 1e-300)), 5.0);
}

TEST(NormalForm, TauIsNearIdentityQuadratically) {
    const auto& f = fixture();
    std::vector<double> ratio;
    for (double size : {1e-2, 1e-3, 1e-4}) {
        const auto z = real_state(4, size, 2);
        const auto w = apply_tau(f.nf, z, TauDirection::forward);
        ratio.push_back((w - z).norm(0) / (size * size));
        const auto back = apply_tau(f.nf, w, TauDirection::inverse);
        EXPECT_LE((back - z).norm(0), 1e-9 * size);
        EXPECT_TRUE(w.is_real_point(1e-12 * size));
    }
    const auto [lo, hi] = std::minmax_element(ratio.begin(), ratio.end());
    EXPECT_LE(*hi / *lo, 2.0);
}

TEST(NormalForm, HigherOrderNeverWorseThanLower) {
    const auto freq = FrequencyVector::from_sample(sample_multiplier(1, 3, 7));
    const auto P = expand_nonlinearity(Nonlinearity::cubic(), 6, 3);
    const auto z = real_state(3, 1e-2, 5);
    const auto H = h0_polynomial(freq) + P;
    double prev = 0;
    for (int r = 3; r <= 5; ++r) {
        const auto nf = birkhoff_iterate(P, freq, r);
        // Defect of the normal-form truncation at z, measured through tau.
        const double defect = std::abs(H.evaluate(apply_tau(nf, z, TauDirection::forward)) - (h0_polynomial(freq) + nf.Z).evaluate(z));
        if (r > 3) {
            EXPECT_LT(defect, prev);
        }
        prev = defect;
    }
}

TEST(NormalForm, RejectsBadInput) {
    const auto freq = FrequencyVector::unperturbed(3);
    SparsePolynomial quad(3);
    quad.add({1, -1}, 1.0);
    EXPECT_THROW(birkhoff_iterate(quad, freq, 4), std::invalid_argument);
    EXPECT_THROW(birkhoff_iterate(SparsePolynomial(3), freq, 2), std::invalid_argument);
    SparsePolynomial unreal(3);
    unreal.add({1, 1, -2}, 1.0);
    EXPECT_THROW(birkhoff_iterate(unreal, freq, 4), std::invalid_argument);
    // The unperturbed oscillator is resonant at degree 4.
    EXPECT_THROW(birkhoff_iterate(expand_nonlinearity(Nonlinearity::quartic(), 4, 3), freq, 4), NumericallyResonant);
}

TEST(NormalForm, FlowEscapeDetected) {
    SparsePolynomial chi(1);
    chi.add({1, 1, -1}, Complex(0, 50));
    chi.add({-1, -1, 1}, Complex(0, -50));
    const auto z = StateVector::real_point({Complex(1.0, 0.5)});
    EXPECT_THROW(lie_flow(chi, z, 1.0), FlowEscape);
}

TEST(NormalForm, PersistenceRoundTrip) {
    const auto& f = fixture();
    const auto dir = std::filesystem::temp_directory_path() / "hbnf_test_nf";
    std::filesystem::remove_all(dir);
    save_normal_form(f.nf, dir);
    const auto back = load_normal_form(dir);
    EXPECT_EQ(back.order, f.nf.order);
    EXPECT_EQ(back.frequencies, f.nf.frequencies);
    ASSERT_EQ(back.chi.size(), f.nf.chi.size());
    for (std::size_t i = 0; i < back.chi.size(); ++i) {
        ASSERT_EQ(back.chi[i].size(), f.nf.chi[i].size());
        for (const auto& [m, c] : f.nf.chi[i].terms()) EXPECT_EQ(back.chi[i].coefficient(m), c);
    }
    EXPECT_EQ(back.Z.size(), f.nf.Z.size());
    EXPECT_EQ(back.steps.size(), f.nf.steps.size());
    const auto z = real_state(4, 1e-2, 3);
    EXPECT_EQ((apply_tau(back, z, TauDirection::forward) - apply_tau(f.nf, z, TauDirection::forward)).norm(0), 0.0);
    std::filesystem::remove_all(dir);
}
