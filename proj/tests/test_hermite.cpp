#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <hbnf/hermite.hpp>
#include <hbnf/stats.hpp>

using namespace hbnf;
using Big = boost::multiprecision::cpp_bin_float_50;

namespace {

// int prod phi_{j_i} dx by a 50-digit trapezoid rule on [-14, 14]; the
// integrand is entire and Gaussian-decaying, so the rule is spectrally exact.
double big_overlap(const std::vector<int>& idx) {
    int top = 0;
    for (int j : idx) top = std::max(top, j);
    const Big pi = boost::math::constants::pi<Big>();
    const Big h = Big(1) / 64;
    Big sum = 0;
    for (int n = -14 * 64; n <= 14 * 64; ++n) {
        const Big x = h * n;
        std::vector<Big> phi(top + 1);
        phi[1] = pow(pi, Big(-0.25)) * exp(-x * x / 2);
        if (top >= 2) phi[2] = sqrt(Big(2)) * x * phi[1];
        for (int j = 2; j < top; ++j) phi[j + 1] = sqrt(Big(2) / j) * x * phi[j] - sqrt(Big(j - 1) / j) * phi[j - 1];
        Big p = 1;
        for (int j : idx) p *= phi[j];
        sum += p;
    }
    return static_cast<double>(sum * h);
}

}  // namespace

TEST(Hermite, GroundStateClosedForm) {
    EXPECT_NEAR(eval_phi(1, 0.0), std::pow(std::numbers::pi, -0.25), 1e-16);
    const double x = 0.7;
    EXPECT_NEAR(eval_phi(2, x), std::sqrt(2.0) * x * std::pow(std::numbers::pi, -0.25) * std::exp(-x * x / 2), 1e-15);
    EXPECT_NEAR(eval_phi(3, x), (2 * x * x - 1) / std::sqrt(2.0) * std::pow(std::numbers::pi, -0.25) * std::exp(-x * x / 2), 1e-15);
}

TEST(Hermite, DerivativeMatchesFiniteDifference) {
    for (int j : {1, 4, 17, 60}) {
        const double x = 1.3, h = 1e-5;
        const double fd = (eval_phi(j, x + h) - eval_phi(j, x - h)) / (2 * h);
        EXPECT_NEAR(eval_phi_with_derivative(j, x).derivative, fd, 1e-8) << j;
        EXPECT_DOUBLE_EQ(eval_phi_with_derivative(j, x).value, eval_phi(j, x));
    }
}

TEST(Hermite, FarTailDoesNotOverflow) {
    for (double x : {40.0, 80.0, 200.0}) {
        const double v = eval_phi(500, x);
        EXPECT_TRUE(std::isfinite(v)) << x;
        EXPECT_LT(std::abs(v), 1e-50) << x;
    }
}

TEST(Hermite, GaussHermiteIntegratesGaussianMoments) {
    const auto& rule = gauss_hermite(12);
    double m0 = 0, m2 = 0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const double y = rule.nodes[i], w = rule.scaled_weights[i] * std::exp(-y * y);
        m0 += w;
        m2 += w * y * y;
    }
    EXPECT_NEAR(m0, std::sqrt(std::numbers::pi), 1e-14);
    EXPECT_NEAR(m2, std::sqrt(std::numbers::pi) / 2, 1e-14);
}

TEST(Hermite, OrthonormalityAndSpectrum) {
    EXPECT_LT(orthonormality_error(200), 1e-10);
    for (int j : {1, 2, 10, 100, 200}) EXPECT_NEAR(rayleigh_quotient(j), 2.0 * j - 1.0, 1e-8 * j) << j;
}

TEST(Hermite, OverlapClosedForms) {
    const double pi = std::numbers::pi;
    const std::vector<int> t111{1, 1, 1}, t1111{1, 1, 1, 1};
    EXPECT_NEAR(hermite_overlap(t111), std::pow(pi, -0.25) * std::sqrt(2.0 / 3.0), 1e-15);
    EXPECT_NEAR(hermite_overlap(t1111), 1.0 / std::sqrt(2 * pi), 1e-15);
    const std::vector<int> odd{1, 1, 2};
    EXPECT_EQ(hermite_overlap(odd), 0.0);
}

TEST(Hermite, OverlapMatchesMultiprecisionOracle) {
    const std::vector<std::vector<int>> cases{{1, 1, 1}, {3, 2, 1}, {5, 4, 3}, {7, 5, 2}, {4, 4, 2, 2}, {9, 6, 3, 2}, {12, 7, 5, 4, 2}};
    for (const auto& t : cases) {
        const double oracle = big_overlap(t);
        EXPECT_NEAR(hermite_overlap(t), oracle, 1e-14 * std::max(1.0, std::abs(oracle))) << t.size();
    }
}

TEST(Hermite, OverlapIsSymmetric) {
    const std::vector<int> a{7, 3, 2}, b{2, 7, 3};
    EXPECT_NEAR(hermite_overlap(a), hermite_overlap(b), 1e-15);
}

TEST(Hermite, BasisRejectsOutOfRange) {
    HermiteBasis basis(10);
    EXPECT_NO_THROW(basis.phi(10, 0.0));
    EXPECT_THROW(basis.phi(11, 0.0), TableRangeError);
    EXPECT_THROW(basis.phi(0, 0.0), TableRangeError);
}

TEST(Hermite, TableRoundTripAndLookup) {
    const auto tab = build_overlap_table(3, 8);
    std::stringstream ss;
    tab.write_csv(ss);
    const auto back = OverlapTable::read_csv(ss);
    const std::vector<int> t{6, 5, 3}, perm{3, 6, 5};
    EXPECT_DOUBLE_EQ(back.at(t), hermite_overlap(t));
    EXPECT_DOUBLE_EQ(back.at(perm), tab.at(t));
    const std::vector<int> outside{9, 1, 1};
    EXPECT_THROW(tab.at(outside), TableRangeError);
}

TEST(Hermite, TupleBudgetEnforced) { EXPECT_THROW(build_overlap_table(4, 400, 1e3), BudgetExceeded); }

TEST(Hermite, SupNormLaw) {
    std::vector<double> js, sups;
    for (int j = 50; j <= 400; j += 50) {
        js.push_back(j);
        sups.push_back(sup_norm(j).value);
    }
    const double slope = fit_loglog_slope(js, sups);
    EXPECT_GT(slope, -0.10);
    EXPECT_LT(slope, -0.07);
}
