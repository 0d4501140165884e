// Acceptance run: one PASS/FAIL line per criterion. Exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <hbnf/hbnf.hpp>

using namespace hbnf;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Line {
    int id;
    bool pass;
    std::string detail;
};

std::vector<Line> lines;

void report(int id, bool pass, const std::string& detail) {
    lines.push_back({id, pass, detail});
    std::printf("%s %2d  %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
}

std::string f(const char* fmt, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    return buf;
}

void guarded(int id, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(id, false, std::string("exception: ") + e.what());
    }
}

SparsePolynomial random_poly(int J, int degree, int terms, std::uint64_t seed) {
    SparsePolynomial P(J);
    std::uint64_t ctr = 0;
    for (int t = 0; t < terms; ++t) {
        std::vector<int> idx;
        for (int i = 0; i < degree; ++i) {
            const int j = 1 + static_cast<int>(counter_uniform(seed, 1, ctr++) * J);
            idx.push_back(counter_uniform(seed, 2, ctr++) < 0.5 ? j : -j);
        }
        // Dyadic coefficients: brackets with integer frequencies are exact.
        const double re = std::ldexp(std::floor(counter_uniform(seed, 3, ctr) * 64) - 32, -5);
        const double im = std::ldexp(std::floor(counter_uniform(seed, 4, ctr) * 64) - 32, -5);
        ++ctr;
        P.add(Monomial::from_signed(idx), Complex(re, im));
    }
    return P;
}

StateVector scaled_state(int J, double size, std::uint64_t seed) {
    auto z = initial_state(J, 1.0, 0.0, seed);
    z *= size / z.norm(0);
    return z;
}

void hermite_basis() {
    const auto t0 = Clock::now();
    const double ortho = orthonormality_error(200);
    double ray = 0;
    for (int j = 1; j <= 200; ++j) ray = std::max(ray, std::abs(rayleigh_quotient(j) - (2.0 * j - 1.0)));
    const double secs = seconds_since(t0);
    report(1, ortho < 1e-10 && ray < 1e-8 && secs < 30,
           f("Hermite basis J=200: orthonormality %.2e (< 1e-10), eigenvalue error %.2e (< 1e-8), %.1f s (< 30 s)", ortho, ray,
             secs));
}

void sup_norm_law() {
    std::vector<double> js, sups;
    for (int i = 0; i < 26; ++i) {
        const int j = static_cast<int>(std::lround(50 * std::pow(40.0, i / 25.0)));
        js.push_back(j);
        sups.push_back(sup_norm(j).value);
    }
    const double slope = fit_loglog_slope(js, sups);
    report(2, slope >= -0.10 && slope <= -0.07, f("sup-norm exponent over j in [50, 2000]: %.4f (in [-0.10, -0.07])", slope));
}

void overlap_decay_plateau() {
    bool ok = true;
    std::string detail;
    for (int k : {3, 4}) {
        const auto rep = overlap_decay(k, {100, 150}, 0.2, 1.0 / 24, {1, 2, 4});
        const auto& c = rep.final().c;
        bool finite = true;
        for (double v : c) finite = finite && std::isfinite(v) && v > 0;
        const double change = rep.plateau_change();
        ok = ok && finite && change < 0.05;
        if (!detail.empty()) detail += "; ";
        detail += f("k=%d c_N(N=1,2,4) = %.4g, %.4g, %.4g, change 100->150 %.2e", k, c[0], c[1], c[2], change);
    }
    report(3, ok, "overlap decay constants finite with plateau (< 5%): " + detail);
}

void a_lemmas() {
    ALemmaOptions opt;
    opt.j_bound = 120;
    opt.l_bound = 120;
    opt.pair_bound = 30;
    const auto r = verify_A_lemmas(opt);
    ALemmaOptions wide = opt;
    wide.j_bound = 10;
    wide.l_bound = 10;
    wide.pair_bound = 60;
    wide.random_bound = 400;
    const auto r2 = verify_A_lemmas(wide);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(a, b); };
    const double d11 = rel(r.squared_pair.empirical, r2.squared_pair.empirical);
    const double d12 = rel(r.mu_pair.empirical, r2.mu_pair.empirical);
    const bool pass = r.l_times_A.empirical <= 2.0 && r.majorant.empirical <= 2.0 && std::isfinite(r.squared_pair.empirical) &&
                      std::isfinite(r.mu_pair.empirical) && d11 < 0.05 && d12 < 0.05;
    report(4, pass,
           f("A-lemmas: |l|A/j1 sup %.4f (<= 2), majorant ratio sup %.4f (<= 2); pair constants %.4f, %.4f, "
             "change under doubling %.1e, %.1e (< 5%%)",
             r.l_times_A.empirical, r.majorant.empirical, r.squared_pair.empirical, r.mu_pair.empirical, d11, d12));
}

void bracket_algebra() {
    double anti = 0, jacobi = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto F = random_poly(5, 3 + trial % 2, 8, 3 * trial + 1);
        const auto G = random_poly(5, 3 + (trial / 2) % 2, 8, 3 * trial + 2);
        const auto H = random_poly(5, 3, 8, 3 * trial + 3);
        auto a = poisson_bracket(F, G);
        a += poisson_bracket(G, F);
        anti = std::max(anti, a.max_abs() / (F.max_abs() * G.max_abs()));
        auto jac = poisson_bracket(F, poisson_bracket(G, H));
        jac += poisson_bracket(G, poisson_bracket(H, F));
        jac += poisson_bracket(H, poisson_bracket(F, G));
        jacobi = std::max(jacobi, jac.max_abs() / (F.max_abs() * G.max_abs() * H.max_abs()));
    }
    // Integer frequencies and dyadic coefficients: both routes are exact in
    // floating point, so any difference is an algebra error.
    std::size_t mismatches = 0;
    const auto freq = FrequencyVector::unperturbed(5);
    double generic_dev = 0;
    const auto gfreq = FrequencyVector::from_sample(sample_multiplier(1, 5, 11));
    for (int trial = 0; trial < 100; ++trial) {
        const auto P = random_poly(5, 3 + trial % 3, 10, 1000 + trial);
        const auto fast = bracket_with_H0(freq, P);
        const auto slow = poisson_bracket(h0_polynomial(freq), P);
        if (fast.size() != slow.size()) ++mismatches;
        for (const auto& [m, c] : slow.terms())
            if (fast.coefficient(m) != c) ++mismatches;
        // Sampled frequencies: the two summation orders agree to rounding.
        const auto gf = bracket_with_H0(gfreq, P);
        const auto gs = poisson_bracket(h0_polynomial(gfreq), P);
        for (const auto& [m, c] : gs.terms()) {
            double w = 0;
            for (int j : m.signed_indices()) w += gfreq(std::abs(j));
            generic_dev = std::max(generic_dev, std::abs(gf.coefficient(m) - c) / (w * std::abs(P.coefficient(m))));
        }
    }
    const bool pass = anti <= 1e-12 && jacobi <= 1e-12 && mismatches == 0 && generic_dev <= 1e-15;
    report(5, pass,
           f("bracket algebra (100 trials): antisymmetry %.1e, Jacobi %.1e (<= 1e-12); bracket_with_H0 vs generic: %zu "
             "bitwise mismatches on integer frequencies, %.1e relative on sampled frequencies",
             anti, jacobi, mismatches, generic_dev));
}

struct DefaultRun {
    RunManifest manifest;
    double seconds = 0;
};

const DefaultRun& default_run() {
    static const DefaultRun run = [] {
        ExperimentConfig cfg;  // J = 16, r = 4, quartic, k = 1, seed 7, eps {0.1, 0.05, 0.025}, T = 10/eps
        cfg.output_dir = (std::filesystem::temp_directory_path() / "hbnf_acceptance_run").string();
        std::filesystem::remove_all(cfg.output_dir);
        PipelineOptions o;
        o.plots = false;
        const auto t0 = Clock::now();
        DefaultRun r{run_pipeline(cfg, o), 0};
        r.seconds = seconds_since(t0);
        return r;
    }();
    return run;
}

const NormalFormResult& small_normal_form(double* secs = nullptr) {
    static double elapsed = 0;
    static const NormalFormResult nf = [] {
        const auto t0 = Clock::now();
        const auto freq = FrequencyVector::from_sample(sample_multiplier(1, 4, 7));
        auto res = birkhoff_iterate(expand_nonlinearity(Nonlinearity::cubic(), 5, 4), freq, 5);
        elapsed = seconds_since(t0);
        return res;
    }();
    if (secs) *secs = elapsed;
    return nf;
}

void homological_identity() {
    const double small = small_normal_form().max_homological_residual();
    const auto& steps = default_run().manifest.json.at("stages").at("normal_form").at("steps");
    double big = 0;
    for (const auto& s : steps) big = std::max(big, s.at("homological_residual").get<double>());
    report(6, small <= 1e-10 && big <= 1e-10,
           f("homological residual, every step: J=4 r=5 run %.1e, default J=16 r=4 run %.1e (<= 1e-10)", small, big));
}

void terminal_check() {
    double secs = 0;
    const auto& nf = small_normal_form(&secs);
    report(7, nf.terminal_residual <= 1e-10 && secs < 300,
           f("normal form J=4 r=5 (cubic, k=1, seed 7): non-action coefficients / input scale %.1e (<= 1e-10), %.2f s (< 300 s)",
             nf.terminal_residual, secs));
}

void tau_contract() {
    const auto& nf = small_normal_form();
    std::vector<double> ratio;
    double roundtrip = 0;
    for (double size : {1e-2, 1e-3, 1e-4}) {
        const auto z = scaled_state(4, size, 3);
        const auto w = apply_tau(nf, z, TauDirection::forward);
        ratio.push_back((w - z).norm(0) / (size * size));
        const auto back = apply_tau(nf, w, TauDirection::inverse);
        roundtrip = std::max(roundtrip, (back - z).norm(0) / size);
    }
    const auto [lo, hi] = std::minmax_element(ratio.begin(), ratio.end());
    report(8, *hi / *lo <= 2.0 && roundtrip <= 1e-9,
           f("tau: |tau(z)-z|/|z|^2 = %.4g, %.4g, %.4g (spread %.3f <= 2); round trip %.1e |z| (<= 1e-9)", ratio[0], ratio[1],
             ratio[2], *hi / *lo, roundtrip));
}

void drift_scaling() {
    const auto& run = default_run();
    const auto& ev = run.manifest.json.at("stages").at("evolve");
    const double slope = ev.at("drift_slope");
    std::string drifts;
    for (const auto& r : ev.at("runs")) drifts += f("%.3g@%.3g ", r.at("drift").get<double>(), r.at("eps").get<double>());
    report(9, slope >= 2.5 && run.seconds < 1800,
           f("action drift exponent (J=16, quartic, k=1, seed 7, T=10/eps): %.3f (>= 2.5); drifts %s; pipeline %.1f s (< 1800 s)",
             slope, drifts.c_str(), run.seconds));
}

void integrator_health() {
    const double ratio = default_run().manifest.json.at("stages").at("energy_study").at("ratio");
    const int J = 16;
    const auto freq = FrequencyVector::from_sample(sample_multiplier(1, J, 7));
    const NonlinearField field(Nonlinearity::quartic(), J);
    const auto z = initial_state(J, 0.1, 1.0, 7);
    EvolveOptions o;
    o.dt = 1e-3;
    o.T = 10;
    o.record_every = 10000;
    const auto fwd = evolve(z, field, freq, o);
    o.dt = -1e-3;
    const auto back = evolve(fwd.states.back(), field, freq, o);
    const double rev = (back.states.back() - z).norm(0) / z.norm(0);
    report(10, ratio >= 3.5 && ratio <= 4.5 && rev <= 1e-8,
           f("integrator: energy drift ratio dt:dt/2 %.3f (in [3.5, 4.5]); reversibility at dt=1e-3, T=10: %.1e (<= 1e-8)", ratio,
             rev));
}

void resonance_scan() {
    const auto unpert = FrequencyVector::unperturbed(20);
    const auto scan0 = scan_nonresonance(unpert, 4, 20, 1e-6, 4);
    bool exact = false;
    for (const auto& v : scan0.violations) {
        auto p = v.plus, m = v.minus;
        std::sort(p.begin(), p.end());
        std::sort(m.begin(), m.end());
        const std::vector<int> a{1, 3}, b{2, 2};
        if (v.omega == 0.0 && ((p == a && m == b) || (p == b && m == a))) exact = true;
    }
    const auto freq = FrequencyVector::from_sample(sample_multiplier(1, 20, 7));
    const auto cert = scan_nonresonance(freq, 4, 20, 0, 4);
    const auto scan = scan_nonresonance(freq, 4, 20, cert.admissible_gamma, 4);
    report(11, exact && cert.admissible_gamma > 0 && scan.violations.empty(),
           f("resonance: unperturbed omega_1+omega_3-2omega_2 = 0 found: %s; generic sample r=4 J=20: certified gamma %.4g, "
             "%zu sub-gamma divisors",
             exact ? "yes" : "no", cert.admissible_gamma, scan.violations.size()));
}

}  // namespace

int main() {
    guarded(1, hermite_basis);
    guarded(2, sup_norm_law);
    guarded(3, overlap_decay_plateau);
    guarded(4, a_lemmas);
    guarded(5, bracket_algebra);
    guarded(6, homological_identity);
    guarded(7, terminal_check);
    guarded(8, tau_contract);
    guarded(9, drift_scaling);
    guarded(10, integrator_health);
    guarded(11, resonance_scan);
    std::size_t failed = 0;
    for (const auto& l : lines) failed += !l.pass;
    std::printf("%zu/%zu criteria passed\n", lines.size() - failed, lines.size());
    return failed == 0 ? 0 : 1;
}
