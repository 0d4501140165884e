#pragma once

// End-to-end experiment: sample -> scan -> expand -> normal form -> evolve ->
// reports. Everything is written under config.output_dir.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "config.hpp"
#include "decay.hpp"
#include "dynamics.hpp"
#include "frequency.hpp"
#include "normal_form.hpp"
#include "polynomial.hpp"
#include "stats.hpp"
#include "svg.hpp"

namespace hbnf {

class PipelineError : public std::runtime_error {
public:
    PipelineError(const std::string& stage, const std::string& what)
        : std::runtime_error("stage '" + stage + "': " + what), stage_(stage) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

struct Criterion {
    std::string name;
    double value = 0;
    std::string requirement;
    bool pass = false;
};

struct RunManifest {
    nlohmann::json json;
    std::vector<Criterion> criteria;
    std::filesystem::path directory;

    bool all_pass() const {
        return std::all_of(criteria.begin(), criteria.end(), [](const Criterion& c) { return c.pass; });
    }
};

inline FrequencyVector make_frequencies(const ExperimentConfig& c) {
    return c.unperturbed ? FrequencyVector::unperturbed(c.cutoff)
                         : FrequencyVector::from_sample(sample_multiplier(c.multiplier_class, c.cutoff, c.seed));
}

inline std::string csv_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string join_indices(const std::vector<int>& v, char sep = ' ') {
    std::string s;
    for (int x : v) {
        if (!s.empty()) s += sep;
        s += std::to_string(x);
    }
    return s;
}

/// Columns arity,split,indices,omega,S,mu; indices are signed (minus = eta).
inline void write_divisor_csv(std::ostream& os, const std::vector<DivisorRecord>& recs) {
    os << "arity,split,indices,omega,S,mu\n";
    for (const auto& r : recs) {
        std::vector<int> s(r.plus);
        for (int v : r.minus) s.push_back(-v);
        os << r.plus.size() + r.minus.size() << ',' << r.plus.size() << '|' << r.minus.size() << ',' << join_indices(s) << ','
           << csv_num(r.omega) << ',' << r.S << ',' << r.mu << '\n';
    }
}

namespace detail {

inline std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("missing input: " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string iso_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

}  // namespace detail

struct PlotReport {
    std::vector<std::string> files;
    std::vector<std::string> warnings;
    std::optional<double> slope;
};

/// Renders SVG charts from the CSVs of a completed run and writes slope.txt.
inline PlotReport emit_plots(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::exists(dir / "manifest.json")) throw std::runtime_error("emit_plots: missing input: " + (dir / "manifest.json").string());
    PlotReport rep;
    const auto out = dir / "plots";
    fs::create_directories(out);
    auto save = [&](const std::string& name, const std::string& content) {
        svg::write_file((out / name).string(), content);
        rep.files.push_back("plots/" + name);
    };

    const auto drift = detail::read_numeric_csv(dir / "drift_vs_eps.csv");
    if (drift.size() < 2) {
        rep.warnings.push_back(drift.empty() ? "eps list is empty: no drift plot" : "fewer than two eps values: no drift plot");
    } else {
        std::vector<double> eps, d, dn;
        for (const auto& r : drift) {
            eps.push_back(r.at(0));
            d.push_back(r.at(1));
            dn.push_back(r.at(2));
        }
        const double slope = fit_loglog_slope(eps, d);
        rep.slope = slope;
        std::ofstream(dir / "slope.txt") << csv_num(slope) << '\n';
        rep.files.push_back("slope.txt");
        // Fitted line through the geometric centre of the data.
        double lx = 0, ly = 0;
        for (std::size_t i = 0; i < eps.size(); ++i) {
            lx += std::log(eps[i]);
            ly += std::log(d[i]);
        }
        lx /= eps.size();
        ly /= eps.size();
        svg::Series fit{"fit", {}, {}, "#888888", false, true, true};
        for (double e : {*std::min_element(eps.begin(), eps.end()), *std::max_element(eps.begin(), eps.end())}) {
            fit.x.push_back(e);
            fit.y.push_back(std::exp(ly + slope * (std::log(e) - lx)));
        }
        svg::Chart c{"Action drift vs eps", "eps", "max_t sum j^2s |I_j(t) - I_j(0)|", true, true,
                     {{"original", eps, d, "#1f77b4"}, {"normalized", eps, dn, "#d62728"}, fit},
                     {"fitted slope = " + svg::detail::fmt(slope)}};
        save("drift_vs_eps.svg", svg::render(c));
    }

    const auto energy = detail::read_numeric_csv(dir / "energy_vs_dt.csv");
    if (!energy.empty()) {
        std::vector<double> dt, e;
        for (const auto& r : energy) {
            dt.push_back(r.at(0));
            e.push_back(r.at(1));
        }
        std::vector<std::string> notes;
        if (energy.size() >= 2 && e[1] > 0) notes.push_back("ratio dt/(dt/2) = " + svg::detail::fmt(e[0] / e[1]));
        save("energy_vs_dt.svg", svg::render({"Energy drift vs time step", "dt", "max_t |H(t) - H(0)|", true, true,
                                              {{"energy drift", dt, e, "#2ca02c"}}, notes}));
    }

    const auto hist = detail::read_numeric_csv(dir / "decay_histogram.csv");
    if (!hist.empty()) {
        std::vector<double> edges{hist.front().at(0)}, counts;
        for (const auto& r : hist) {
            edges.push_back(r.at(1));
            counts.push_back(r.at(2));
        }
        save("decay_histogram.svg", svg::render_histogram("Overlap decay ratios (first N)", "log10 ratio", edges, counts));
    }

    const auto div = detail::read_numeric_csv(dir / "divisors.csv");
    if (!div.empty()) {
        std::vector<double> rank, om;
        for (std::size_t i = 0; i < div.size(); ++i) {
            rank.push_back(double(i + 1));
            om.push_back(std::abs(div[i].at(3)));
        }
        save("divisors.svg", svg::render({"Smallest small divisors", "rank", "|Omega|", false, true,
                                          {{"|Omega|", rank, om, "#9467bd", true, false}}, {}}));
    }
    return rep;
}

struct PipelineOptions {
    bool plots = true;
    std::size_t keep_divisors = 200;
    std::ostream* log = nullptr;
};

inline RunManifest run_pipeline(const ExperimentConfig& cfg, const PipelineOptions& popt = {}) {
    namespace fs = std::filesystem;
    using clock = std::chrono::steady_clock;
    cfg.validate();
    const fs::path dir = cfg.output_dir;
    fs::create_directories(dir);
    auto say = [&](const std::string& m) {
        if (popt.log) *popt.log << m << std::endl;
    };

    RunManifest man;
    man.directory = dir;
    nlohmann::json& M = man.json;
    nlohmann::json config_echo = cfg;
    config_echo.erase("output_dir");
    M["format"] = "hbnf-run";
    M["version"] = 1;
    M["code_version"] = kVersion;
    M["config_hash"] = config_hash(cfg);
    M["config"] = config_echo;
    nlohmann::json timestamps{{"started", detail::iso_now()}, {"stage_seconds", nlohmann::json::object()}};
    std::vector<std::string> files;
    auto add_criterion = [&](std::string name, double value, std::string req, bool pass) {
        man.criteria.push_back({std::move(name), value, std::move(req), pass});
    };

    auto stage = [&](const std::string& name, auto&& body) {
        say("[" + name + "]");
        const auto t0 = clock::now();
        try {
            body();
        } catch (const PipelineError&) {
            throw;
        } catch (const std::exception& e) {
            throw PipelineError(name, e.what());
        }
        timestamps["stage_seconds"][name] = std::chrono::duration<double>(clock::now() - t0).count();
    };
    auto open = [&](const std::string& name) {
        std::ofstream os(dir / name);
        if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
        files.push_back(name);
        return os;
    };

    const int J = cfg.cutoff, r = cfg.order;
    FrequencyVector freq;
    double gamma = 0;
    stage("sample", [&] {
        freq = make_frequencies(cfg);
        M["stages"]["sample"] = {{"provenance", freq.provenance()},
                                 {"omega", std::vector<double>(freq.values().begin(), freq.values().end())}};
        if (freq.sample()) M["stages"]["sample"]["multipliers"] = freq.sample()->values;
    });

    stage("scan", [&] {
        auto scan = scan_nonresonance(freq, r, J, cfg.gamma.value_or(0.0), cfg.delta, popt.keep_divisors);
        gamma = cfg.gamma.value_or(scan.admissible_gamma);
        if (!cfg.gamma) scan = scan_nonresonance(freq, r, J, gamma, cfg.delta, popt.keep_divisors);
        {
            auto os = open("divisors.csv");
            write_divisor_csv(os, scan.smallest);
        }
        {
            auto os = open("violations.csv");
            write_divisor_csv(os, scan.violations);
        }
        M["stages"]["scan"] = {{"tuples", scan.tuples},
                               {"structural", scan.structural},
                               {"admissible_gamma", scan.admissible_gamma},
                               {"gamma", gamma},
                               {"gamma_source", cfg.gamma ? "config" : "certified"},
                               {"delta", cfg.delta},
                               {"violations", scan.violations.size()}};
        add_criterion("no divisor below gamma (r=" + std::to_string(r) + ", J=" + std::to_string(J) + ")",
                      double(scan.violations.size()), "0 violations", scan.violations.empty() && gamma > 0);
    });

    SparsePolynomial P;
    stage("expand", [&] {
        P = expand_nonlinearity(cfg.g, r, J);
        auto os = open("P.csv");
        write_polynomial(os, P);
        const auto cert = reality_certificate(P);
        M["stages"]["expand"] = {{"terms", P.size()}, {"reality_mismatch", cert.mismatch}, {"scale", P.max_abs()}};
    });

    NormalFormResult nf;
    stage("normal_form", [&] {
        nf = birkhoff_iterate(P, freq, r);
        save_normal_form(nf, dir / "normal_form", {{"gamma", gamma}, {"delta", cfg.delta}, {"seed", cfg.seed}});
        for (const auto& f : {std::string("manifest.json"), std::string("Z.csv"), std::string("transformed.csv")})
            files.push_back("normal_form/" + f);
        for (int k = 3; k <= r; ++k) files.push_back("normal_form/chi_" + std::to_string(k) + ".csv");
        nlohmann::json steps = nlohmann::json::array();
        for (const auto& s : nf.steps)
            steps.push_back({{"degree", s.degree},
                             {"chi_terms", s.chi_terms},
                             {"z_terms", s.z_terms},
                             {"homological_residual", s.homological_residual},
                             {"dropped_mass", s.dropped_mass}});
        M["stages"]["normal_form"] = {{"sigma", nf.sigma},
                                      {"input_scale", nf.input_scale},
                                      {"terminal_residual", nf.terminal_residual},
                                      {"z_terms", nf.Z.size()},
                                      {"steps", steps}};
        add_criterion("homological residual, every step", nf.max_homological_residual(), "<= 1e-10",
                      nf.max_homological_residual() <= 1e-10);
        add_criterion("terminal non-normal residual / input scale", nf.terminal_residual, "<= 1e-10",
                      nf.terminal_residual <= 1e-10);
    });

    const NonlinearField field(cfg.g, J);
    const double s0 = cfg.s_list.front();
    const auto scheme = parse_scheme(cfg.scheme);
    stage("evolve", [&] {
        std::vector<double> eps_used, drifts, ndrifts;
        nlohmann::json runs = nlohmann::json::array();
        for (std::size_t i = 0; i < cfg.eps_list.size(); ++i) {
            const double eps = cfg.eps_list[i];
            const auto z0 = initial_state(J, eps, s0, derive_seed(cfg.seed, 1));
            EvolveOptions o;
            o.dt = cfg.dt;
            o.T = cfg.horizon(eps);
            o.scheme = scheme;
            o.record_every = cfg.record_every;
            o.s_list = cfg.s_list;
            o.keep_states = true;
            say("  eps=" + svg::detail::fmt(eps) + " T=" + svg::detail::fmt(o.T));
            const auto tr = evolve(z0, field, freq, o);
            {
                auto os = open("trajectory_" + std::to_string(i) + ".csv");
                write_trajectory_csv(os, tr);
            }
            // Subsample for the tau^{-1} based observables.
            TrajectoryRecord sub;
            sub.s_list = tr.s_list;
            sub.initial_actions = tr.initial_actions;
            const std::size_t n = tr.size(), m = std::min<std::size_t>(n, cfg.normalized_samples);
            for (std::size_t k = 0; k < m; ++k) {
                const std::size_t idx = m == 1 ? 0 : (k * (n - 1)) / (m - 1);
                sub.t.push_back(tr.t[idx]);
                sub.states.push_back(tr.states[idx]);
            }
            const double d = measure_action_drift(tr, s0);
            const double d_sub = measure_action_drift(sub, s0);
            const double dn = normalized_action_drift(sub, nf, s0);
            const auto dist = distance_to_torus(sub, nf, s0);
            {
                auto os = open("torus_" + std::to_string(i) + ".csv");
                os << "t,distance\n";
                for (std::size_t k = 0; k < dist.size(); ++k) os << csv_num(sub.t[k]) << ',' << csv_num(dist[k]) << '\n';
            }
            double l2_dev = 0;
            for (double v : tr.l2) l2_dev = std::max(l2_dev, std::abs(v - tr.l2.front()));
            runs.push_back({{"eps", eps},
                            {"T", o.T},
                            {"steps", tr.steps},
                            {"drift", d},
                            {"drift_subsampled", d_sub},
                            {"normalized_drift", dn},
                            {"max_distance_to_torus", *std::max_element(dist.begin(), dist.end())},
                            {"energy_drift", energy_drift(tr)},
                            {"l2_deviation", l2_dev},
                            {"tail_max", *std::max_element(tr.tail.begin(), tr.tail.end())}});
            eps_used.push_back(eps);
            drifts.push_back(d);
            ndrifts.push_back(dn);
            add_criterion("normalized drift <= original drift (eps=" + svg::detail::fmt(eps) + ")", dn, "<= " + svg::detail::fmt(d_sub),
                          dn <= d_sub);
        }
        {
            auto os = open("drift_vs_eps.csv");
            os << "eps,drift,normalized_drift\n";
            for (std::size_t i = 0; i < eps_used.size(); ++i)
                os << csv_num(eps_used[i]) << ',' << csv_num(drifts[i]) << ',' << csv_num(ndrifts[i]) << '\n';
        }
        M["stages"]["evolve"] = {{"runs", runs}};
        if (eps_used.size() >= 2) {
            const double slope = fit_loglog_slope(eps_used, drifts);
            M["stages"]["evolve"]["drift_slope"] = slope;
            add_criterion("log-log drift exponent vs eps", slope, ">= 2.5", slope >= 2.5);
        }
    });

    stage("energy_study", [&] {
        const double eps = cfg.eps_list.empty() ? 0.05 : cfg.eps_list.front();
        const auto z0 = initial_state(J, eps, s0, derive_seed(cfg.seed, 1));
        std::vector<double> dts{cfg.dt, cfg.dt / 2, cfg.dt / 4}, drift;
        for (double dt : dts) {
            EvolveOptions o;
            o.dt = dt;
            o.T = 10.0;
            o.scheme = scheme;
            o.s_list = cfg.s_list;
            o.keep_states = false;
            drift.push_back(energy_drift(evolve(z0, field, freq, o)));
        }
        auto os = open("energy_vs_dt.csv");
        os << "dt,energy_drift\n";
        for (std::size_t i = 0; i < dts.size(); ++i) os << csv_num(dts[i]) << ',' << csv_num(drift[i]) << '\n';
        const double ratio = drift[0] / drift[1];
        M["stages"]["energy_study"] = {{"eps", eps}, {"T", 10.0}, {"dt", dts}, {"energy_drift", drift}, {"ratio", ratio}};
        add_criterion("energy drift ratio dt : dt/2", ratio, "in [3.5, 4.5]", ratio >= 3.5 && ratio <= 4.5);
    });

    stage("overlap_decay", [&] {
        const auto rep = overlap_decay(cfg.decay_arity, {cfg.decay_cutoff / 2, cfg.decay_cutoff}, 0.2, 1.0 / 24, {1, 2, 4});
        {
            auto os = open("decay_constants.csv");
            os << "cutoff,N,c_N,worst\n";
            for (const auto& s : rep.snapshots)
                for (std::size_t n = 0; n < rep.N.size(); ++n)
                    os << s.cutoff << ',' << rep.N[n] << ',' << csv_num(s.c[n]) << ',' << join_indices(s.worst[n]) << '\n';
        }
        {
            auto os = open("decay_histogram.csv");
            os << "log10_lo,log10_hi,count\n";
            const double w = (rep.hist_hi - rep.hist_lo) / rep.histogram.size();
            for (std::size_t b = 0; b < rep.histogram.size(); ++b)
                os << csv_num(rep.hist_lo + b * w) << ',' << csv_num(rep.hist_lo + (b + 1) * w) << ',' << rep.histogram[b] << '\n';
        }
        M["stages"]["overlap_decay"] = {{"arity", rep.arity},
                                        {"cutoffs", {cfg.decay_cutoff / 2, cfg.decay_cutoff}},
                                        {"N", rep.N},
                                        {"c_N", rep.final().c},
                                        {"plateau_change", rep.plateau_change()}};
    });

    nlohmann::json crit = nlohmann::json::array();
    for (const auto& c : man.criteria)
        crit.push_back({{"name", c.name}, {"value", c.value}, {"requirement", c.requirement}, {"pass", c.pass}});
    M["criteria"] = crit;

    {
        auto os = open("summary.md");
        os << "# Run summary\n\n";
        os << "- config hash: `" << M["config_hash"].get<std::string>() << "`\n";
        os << "- cutoff J = " << J << ", order r = " << r << ", frequencies: " << freq.provenance() << "\n";
        os << "- gamma = " << csv_num(gamma) << " (" << (cfg.gamma ? "config" : "certified") << "), delta = " << csv_num(cfg.delta)
           << "\n\n";
        os << "| criterion | value | requirement | status |\n|---|---|---|---|\n";
        for (const auto& c : man.criteria)
            os << "| " << c.name << " | " << svg::detail::fmt(c.value) << " | " << c.requirement << " | "
               << (c.pass ? "PASS" : "FAIL") << " |\n";
    }
    files.push_back("manifest.json");
    files.push_back("timestamps.json");
    std::sort(files.begin(), files.end());
    M["files"] = files;
    M["timestamps_file"] = "timestamps.json";
    std::ofstream(dir / "manifest.json") << M.dump(2) << '\n';
    timestamps["finished"] = detail::iso_now();
    std::ofstream(dir / "timestamps.json") << timestamps.dump(2) << '\n';

    if (popt.plots) {
        const auto plots = emit_plots(dir);
        for (const auto& w : plots.warnings) say("warning: " + w);
    }
    return man;
}

}  // namespace hbnf
