#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include <hbnf/dynamics.hpp>
#include <hbnf/stats.hpp>

using namespace hbnf;

namespace {

EvolveOptions opts(double dt, double T, int record_every = 10) {
    EvolveOptions o;
    o.dt = dt;
    o.T = T;
    o.record_every = record_every;
    return o;
}

}  // namespace

TEST(Field, EnergyEqualsPolynomialExpansion) {
    for (const auto& g : {Nonlinearity::quartic(), Nonlinearity::cubic(), Nonlinearity({{3, 3, 0.2}, {2, 2, 1.0}})}) {
        const int J = 5;
        NonlinearField field(g, J);
        const auto P = expand_nonlinearity(g, g.max_degree(), J);
        const auto z = initial_state(J, 0.4, 1, 3);
        EXPECT_NEAR(std::abs(field.energy(z) - P.evaluate(z)), 0.0, 1e-15);
        const auto a = field.gradient(z), b = gradient(P, z);
        for (int j = 0; j < J; ++j) {
            EXPECT_LT(std::abs(a.d_xi[j] - b.d_xi[j]), 1e-15);
            EXPECT_LT(std::abs(a.d_eta[j] - b.d_eta[j]), 1e-15);
        }
        const auto d = field.deta_real(z.xi);
        for (int j = 0; j < J; ++j) EXPECT_LT(std::abs(d[j] - a.d_eta[j]), 1e-15);
    }
}

TEST(InitialState, NormAndDeterminism) {
    const auto z = initial_state(16, 0.05, 1.0, 7);
    EXPECT_NEAR(z.norm(1.0), 0.05, 1e-15);
    EXPECT_TRUE(z.is_real_point());
    EXPECT_EQ(initial_state(16, 0.05, 1.0, 7).xi, z.xi);
    EXPECT_NE(initial_state(16, 0.05, 1.0, 8).xi, z.xi);
    EXPECT_NEAR(z.weighted_action_sum(1.0).real(), 0.05 * 0.05, 1e-16);
}

TEST(Evolve, LinearLimitIsExactRotation) {
    const int J = 6;
    const auto freq = FrequencyVector::from_sample(sample_multiplier(1, J, 2));
    NonlinearField field(Nonlinearity::quartic(), J);
    const auto z = initial_state(J, 1e-7, 0, 4);
    const auto tr = evolve(z, field, freq, opts(0.1, 5.0, 50));
    const auto& zT = tr.states.back();
    for (int j = 0; j < J; ++j) {
        const Complex expect = std::exp(Complex(0, -freq(j + 1) * 5.0)) * z.xi[j];
        EXPECT_LT(std::abs(zT.xi[j] - expect), 1e-12 * std::abs(z.xi[j]) + 1e-20) << j;
    }
}

TEST(Evolve, StrangConservesL2AndStaysReal) {
    const int J = 8;
    const auto freq = FrequencyVector::from_sample(sample_multiplier(1, J, 7));
    NonlinearField field(Nonlinearity::quartic(), J);
    const auto tr = evolve(initial_state(J, 0.3, 1, 1), field, freq, opts(0.02, 20.0));
    for (double l2 : tr.l2) EXPECT_NEAR(l2, tr.l2.front(), 1e-14);
    for (const auto& s : tr.states) EXPECT_TRUE(s.is_real_point());
    EXPECT_EQ(tr.steps, 1000u);
    EXPECT_NEAR(tr.t.back(), 20.0, 1e-12);
}

TEST(Evolve, SecondOrderEnergyError) {
    const int J = 8;
    const auto freq = FrequencyVector::from_sample(sample_multiplier(1, J, 7));
    NonlinearField field(Nonlinearity::quartic(), J);
    const auto z = initial_state(J, 0.3, 1, 1);
    std::vector<double> drift;
    for (double dt : {0.02, 0.01}) drift.push_back(energy_drift(evolve(z, field, freq, opts(dt, 10.0, 1))));
    const double ratio = drift[0] / drift[1];
    EXPECT_GT(ratio, 3.5);
    EXPECT_LT(ratio, 4.5);
}

TEST(Evolve, TimeReversible) {
    const int J = 8;
    const auto freq = FrequencyVector::from_sample(sample_multiplier(1, J, 7));
    NonlinearField field(Nonlinearity::quartic(), J);
    const auto z = initial_state(J, 0.3, 1, 1);
    auto o = opts(0.01, 5.0, 500);
    const auto fwd = evolve(z, field, freq, o);
    o.dt = -0.01;
    const auto back = evolve(fwd.states.back(), field, freq, o);
    EXPECT_LT((back.states.back() - z).norm(0) / z.norm(0), 1e-12);
}

TEST(Evolve, StrangAgreesWithRk4) {
    const int J = 6;
    const auto freq = FrequencyVector::from_sample(sample_multiplier(1, J, 7));
    NonlinearField field(Nonlinearity::cubic(), J);
    const auto z = initial_state(J, 0.2, 1, 1);
    auto o = opts(1e-3, 2.0, 2000);
    const auto a = evolve(z, field, freq, o);
    o.scheme = Scheme::rk4;
    const auto b = evolve(z, field, freq, o);
    EXPECT_LT((a.states.back() - b.states.back()).norm(0) / z.norm(0), 1e-6);
}

TEST(Evolve, BlowupDetected) {
    const int J = 3;
    const auto freq = FrequencyVector::unperturbed(J);
    NonlinearField field(Nonlinearity({{3, 3, -50.0}}), J);
    auto o = opts(0.05, 50.0);
    o.scheme = Scheme::rk4;
    EXPECT_THROW(evolve(initial_state(J, 3.0, 0, 1), field, freq, o), DynamicsBlowup);
}

TEST(Evolve, RejectsBadOptions) {
    const auto freq = FrequencyVector::unperturbed(3);
    NonlinearField field(Nonlinearity::quartic(), 3);
    const auto z = initial_state(3, 0.1, 1, 1);
    EXPECT_THROW(evolve(z, field, freq, opts(0.0, 1.0)), std::invalid_argument);
    EXPECT_THROW(evolve(z, field, freq, opts(0.1, -1.0)), std::invalid_argument);
    EXPECT_THROW(parse_scheme("euler"), std::invalid_argument);
}

TEST(Observables, DriftFunctionalAndCsv) {
    const int J = 4;
    const auto freq = FrequencyVector::from_sample(sample_multiplier(1, J, 7));
    NonlinearField field(Nonlinearity::quartic(), J);
    const auto tr = evolve(initial_state(J, 0.2, 1, 1), field, freq, opts(0.05, 5.0, 5));
    double by_hand = 0;
    for (const auto& s : tr.states) {
        double d = 0;
        const auto I = s.actions();
        for (int j = 0; j < J; ++j) d += double((j + 1) * (j + 1)) * std::abs(I[j] - tr.initial_actions[j]);
        by_hand = std::max(by_hand, d);
    }
    EXPECT_NEAR(measure_action_drift(tr, 1.0), by_hand, 1e-18);
    std::ostringstream os;
    write_trajectory_csv(os, tr);
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "t,H,l2,norm_s,drift_s,tail");
    std::ostringstream as;
    write_actions_csv(as, tr, 2);
    EXPECT_EQ(as.str().substr(0, as.str().find('\n')), "t,I_1,I_2,I_3,I_4");
}

TEST(Observables, NormalizedActionsDriftLess) {
    const int J = 4;
    const auto freq = FrequencyVector::from_sample(sample_multiplier(1, J, 7));
    const auto g = Nonlinearity::cubic();
    const auto nf = birkhoff_iterate(expand_nonlinearity(g, 3, J), freq, 3);
    NonlinearField field(g, J);
    const auto tr = evolve(initial_state(J, 0.01, 1, 1), field, freq, opts(0.01, 20.0, 50));
    const double raw = measure_action_drift(tr, 1.0);
    const double normalized = normalized_action_drift(tr, nf, 1.0);
    EXPECT_LT(normalized, raw);
    const auto d = distance_to_torus(tr, nf, 1.0);
    EXPECT_EQ(d.front(), 0.0);
    EXPECT_EQ(d.size(), tr.size());
}
