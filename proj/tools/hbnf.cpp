// hbnf command-line front end.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <hbnf/config.hpp>
#include <hbnf/decay.hpp>
#include <hbnf/dynamics.hpp>
#include <hbnf/frequency.hpp>
#include <hbnf/hermite.hpp>
#include <hbnf/normal_form.hpp>
#include <hbnf/pipeline.hpp>
#include <hbnf/polynomial.hpp>
#include <hbnf/tuple_stats.hpp>

namespace {

using hbnf::ExperimentConfig;

/// Flags that mirror ExperimentConfig; values given on the command line
/// override the config file.
struct ConfigFlags {
    std::string config_path;
    std::optional<int> cutoff, order, multiplier_class, record_every;
    std::optional<std::uint64_t> seed;
    std::optional<double> gamma, delta, dt, T;
    std::vector<double> eps_list, s_list;
    std::optional<std::string> scheme, output_dir, nonlinearity;
    bool unperturbed = false;

    void attach(CLI::App* app, bool with_dynamics) {
        app->add_option("-c,--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
        app->add_option("-J,--cutoff", cutoff, "Mode cutoff J");
        app->add_option("-r,--order", order, "Normal form order r (>= 3)");
        app->add_option("-k,--class", multiplier_class, "Multiplier class k");
        app->add_option("--seed", seed, "Random seed");
        app->add_option("--gamma", gamma, "Non-resonance constant (default: certified)");
        app->add_option("--delta", delta, "Non-resonance exponent");
        app->add_flag("--unperturbed", unperturbed, "Use omega_j = 2j - 1");
        app->add_option("-g,--nonlinearity", nonlinearity, "quartic | cubic | JSON term list");
        if (with_dynamics) {
            app->add_option("--eps", eps_list, "Initial sizes ||z||_s")->delimiter(',');
            app->add_option("--s", s_list, "Sobolev indices s")->delimiter(',');
            app->add_option("--dt", dt, "Time step");
            app->add_option("-T,--horizon", T, "Horizon (divided by eps when scaling is on)");
            app->add_option("--scheme", scheme, "strang | rk4");
            app->add_option("--record-every", record_every, "Record every n-th step");
        }
        app->add_option("-o,--out", output_dir, "Output directory or file");
    }

    ExperimentConfig resolve() const {
        ExperimentConfig c = config_path.empty() ? ExperimentConfig{} : hbnf::load_config(config_path);
        if (cutoff) c.cutoff = *cutoff;
        if (order) c.order = *order;
        if (multiplier_class) c.multiplier_class = *multiplier_class;
        if (seed) c.seed = *seed;
        if (gamma) c.gamma = *gamma;
        if (delta) c.delta = *delta;
        if (unperturbed) c.unperturbed = true;
        if (nonlinearity) {
            if (*nonlinearity == "quartic")
                c.g = hbnf::Nonlinearity::quartic();
            else if (*nonlinearity == "cubic")
                c.g = hbnf::Nonlinearity::cubic();
            else
                c.g = nlohmann::json::parse(*nonlinearity).get<hbnf::Nonlinearity>();
        }
        if (!eps_list.empty()) c.eps_list = eps_list;
        if (!s_list.empty()) c.s_list = s_list;
        if (dt) c.dt = *dt;
        if (T) c.T = *T;
        if (scheme) c.scheme = *scheme;
        if (record_every) c.record_every = *record_every;
        if (output_dir) c.output_dir = *output_dir;
        c.validate();
        return c;
    }
};

std::vector<int> parse_indices(const std::string& s) {
    std::vector<int> v;
    std::stringstream ss(s);
    for (std::string cell; std::getline(ss, cell, ',');) v.push_back(std::stoi(cell));
    return v;
}

std::ofstream open_out(const std::string& path) {
    if (auto parent = std::filesystem::path(path).parent_path(); !parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    return os;
}

void print_check(std::ostream& os, const hbnf::LemmaCheck& c) {
    os << "| " << c.name << " | " << hbnf::csv_num(c.empirical) << " | "
       << (std::isnan(c.stated) ? std::string("-") : hbnf::csv_num(c.stated)) << " | " << c.cases << " | j=("
       << hbnf::join_indices(c.worst_j, ',') << ") i=(" << hbnf::join_indices(c.worst_i, ',') << ") l=" << c.worst_l << " | "
       << (c.holds() ? "holds" : "VIOLATED") << " |\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Birkhoff normal form workbench for the 1-D harmonic oscillator"};
    app.require_subcommand(1);

    // overlap
    auto* overlap = app.add_subcommand("overlap", "Hermite overlap integrals and tables");
    std::string ov_indices, ov_out;
    int ov_arity = 3, ov_cutoff = 10;
    bool ov_decay = false;
    std::vector<int> ov_decay_cutoffs{100, 150};
    double ov_nu = 0.2, ov_beta = 1.0 / 24;
    overlap->add_option("-i,--indices", ov_indices, "Comma-separated mode indices, e.g. 1,1,1");
    overlap->add_option("-k,--arity", ov_arity, "Table arity");
    overlap->add_option("-J,--cutoff", ov_cutoff, "Table cutoff");
    overlap->add_option("-o,--out", ov_out, "Write the table CSV here (default: cache directory)");
    overlap->add_flag("--decay", ov_decay, "Report empirical decay constants c_N instead of a table");
    overlap->add_option("--decay-cutoffs", ov_decay_cutoffs, "Cutoffs for the decay scan")->delimiter(',');
    overlap->add_option("--nu", ov_nu, "nu exponent");
    overlap->add_option("--beta", ov_beta, "beta exponent");

    // resonance
    auto* resonance = app.add_subcommand("resonance", "Small-divisor and strong non-resonance scan");
    ConfigFlags rs_flags;
    rs_flags.attach(resonance, false);
    std::size_t rs_smallest = 20;
    std::size_t rs_mc = 0;
    resonance->add_option("--smallest", rs_smallest, "Number of smallest divisors to list");
    resonance->add_option("--monte-carlo", rs_mc, "Also estimate the violation probability with this many samples");

    // verify combinatorics
    auto* verify = app.add_subcommand("verify", "Empirical checks");
    verify->require_subcommand(1);
    auto* combi = verify->add_subcommand("combinatorics", "Check the A-function inequalities");
    hbnf::ALemmaOptions lo;
    std::string vc_out, vc_csv;
    combi->add_option("--j-bound", lo.j_bound, "Largest j_1 in the exhaustive scan");
    combi->add_option("--l-bound", lo.l_bound, "Largest l in the exhaustive scan");
    combi->add_option("--pair-bound", lo.pair_bound, "Largest i_1, j_1 for the pair lemmas");
    combi->add_option("--samples", lo.random_samples, "Random higher-arity samples");
    combi->add_option("--seed", lo.seed, "Random seed");
    combi->add_option("-o,--out", vc_out, "Markdown report path (default: stdout)");
    combi->add_option("--csv", vc_csv, "Also write a CSV of the constants");

    // normalform
    auto* normalform = app.add_subcommand("normalform", "Compute the order-r Birkhoff normal form");
    ConfigFlags nf_flags;
    nf_flags.attach(normalform, false);

    // evolve
    auto* evolve_cmd = app.add_subcommand("evolve", "Integrate the truncated equation");
    ConfigFlags ev_flags;
    ev_flags.attach(evolve_cmd, true);
    std::string ev_actions;
    std::size_t ev_stride = 1;
    evolve_cmd->add_option("--actions", ev_actions, "Per-mode action dump CSV");
    evolve_cmd->add_option("--stride", ev_stride, "Record stride of the action dump");

    // pipeline
    auto* pipeline = app.add_subcommand("pipeline", "Run every stage and write a report directory");
    ConfigFlags pl_flags;
    pl_flags.attach(pipeline, true);
    bool pl_no_plots = false;
    pipeline->add_flag("--no-plots", pl_no_plots, "Skip plot rendering");

    // plots
    auto* plots = app.add_subcommand("plots", "Render plots for a completed run");
    std::string pl_dir;
    plots->add_option("run_dir", pl_dir, "Run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (overlap->parsed()) {
            if (!ov_indices.empty()) {
                const auto idx = parse_indices(ov_indices);
                int jmax = 0;
                for (int j : idx) jmax = std::max(jmax, j);
                std::printf("%.17g\n", hbnf::HermiteBasis(std::max(jmax, 1)).overlap(idx));
            } else if (ov_decay) {
                const auto rep = hbnf::overlap_decay(ov_arity, ov_decay_cutoffs, ov_nu, ov_beta, {1, 2, 4});
                std::cout << "cutoff,N,c_N,worst\n";
                for (const auto& s : rep.snapshots)
                    for (std::size_t n = 0; n < rep.N.size(); ++n)
                        std::cout << s.cutoff << ',' << rep.N[n] << ',' << hbnf::csv_num(s.c[n]) << ','
                                  << hbnf::join_indices(s.worst[n]) << '\n';
                std::cerr << "plateau change: " << rep.plateau_change() << '\n';
            } else if (!ov_out.empty()) {
                const auto table = hbnf::build_overlap_table(ov_arity, ov_cutoff);
                auto os = open_out(ov_out);
                table.write_csv(os);
                std::cerr << table.size() << " entries written to " << ov_out << '\n';
            } else {
                const auto dir = hbnf::overlap_cache_dir();
                const auto table = hbnf::load_or_build_overlap_table(ov_arity, ov_cutoff, dir);
                std::cerr << table.size() << " entries (cache " << dir.string() << ")\n";
            }
        } else if (resonance->parsed()) {
            const auto cfg = rs_flags.resolve();
            const auto freq = hbnf::make_frequencies(cfg);
            auto scan = hbnf::scan_nonresonance(freq, cfg.order, cfg.cutoff, cfg.gamma.value_or(0.0), cfg.delta, rs_smallest);
            std::cout << "frequencies: " << freq.provenance() << "\n"
                      << "tuples: " << scan.tuples << " (structural zeros: " << scan.structural << ")\n"
                      << "admissible gamma: " << hbnf::csv_num(scan.admissible_gamma) << "\n"
                      << "tightest: +(" << hbnf::join_indices(scan.tightest.plus, ',') << ") -("
                      << hbnf::join_indices(scan.tightest.minus, ',') << ") omega=" << hbnf::csv_num(scan.tightest.omega)
                      << "\n"
                      << "violations at gamma=" << hbnf::csv_num(cfg.gamma.value_or(0.0)) << ": " << scan.violations.size()
                      << "\n\nsmallest divisors:\n";
            hbnf::write_divisor_csv(std::cout, scan.smallest);
            if (rs_flags.output_dir) {
                auto os = open_out(*rs_flags.output_dir);
                hbnf::write_divisor_csv(os, scan.violations);
            }
            if (rs_mc > 0) {
                const auto est = hbnf::estimate_resonant_measure(cfg.multiplier_class, cfg.order, cfg.cutoff, cfg.delta,
                                                                 cfg.gamma.value_or(0.0), rs_mc, cfg.seed);
                std::cout << "\nviolation probability: " << est.probability << " (" << est.violating << "/" << est.samples
                          << "), 95% Wilson [" << est.interval.lower << ", " << est.interval.upper << "]\n";
            }
        } else if (combi->parsed()) {
            const auto rep = hbnf::verify_A_lemmas(lo);
            std::ostringstream md;
            md << "| inequality | empirical sup | stated constant | cases | worst case | status |\n|---|---|---|---|---|---|\n";
            for (const auto* c : {&rep.l_times_A, &rep.majorant, &rep.squared_pair, &rep.mu_pair}) print_check(md, *c);
            if (vc_out.empty())
                std::cout << md.str();
            else
                open_out(vc_out) << md.str();
            if (!vc_csv.empty()) {
                auto os = open_out(vc_csv);
                os << "name,empirical,stated,cases,holds\n";
                for (const auto* c : {&rep.l_times_A, &rep.majorant, &rep.squared_pair, &rep.mu_pair})
                    os << '"' << c->name << "\"," << hbnf::csv_num(c->empirical) << ',' << hbnf::csv_num(c->stated) << ','
                       << c->cases << ',' << (c->holds() ? 1 : 0) << '\n';
            }
            return rep.all_hold() ? 0 : 2;
        } else if (normalform->parsed()) {
            const auto cfg = nf_flags.resolve();
            const auto freq = hbnf::make_frequencies(cfg);
            const auto P = hbnf::expand_nonlinearity(cfg.g, cfg.order, cfg.cutoff);
            const auto nf = hbnf::birkhoff_iterate(P, freq, cfg.order);
            const std::string dir = nf_flags.output_dir.value_or("normal_form");
            hbnf::save_normal_form(nf, dir, {{"seed", cfg.seed}, {"delta", cfg.delta}});
            for (const auto& s : nf.steps)
                std::cout << "degree " << s.degree << ": chi " << s.chi_terms << " terms, Z " << s.z_terms
                          << " terms, homological residual " << s.homological_residual << ", min |Omega| " << s.min_divisor << '\n';
            std::cout << "terminal residual: " << nf.terminal_residual << "\nwritten to " << dir << '\n';
        } else if (evolve_cmd->parsed()) {
            const auto cfg = ev_flags.resolve();
            const auto freq = hbnf::make_frequencies(cfg);
            const hbnf::NonlinearField field(cfg.g, cfg.cutoff);
            const double eps = cfg.eps_list.empty() ? 0.05 : cfg.eps_list.front();
            const auto z0 = hbnf::initial_state(cfg.cutoff, eps, cfg.s_list.front(), hbnf::derive_seed(cfg.seed, 1));
            hbnf::EvolveOptions o;
            o.dt = cfg.dt;
            o.T = cfg.horizon(eps);
            o.scheme = hbnf::parse_scheme(cfg.scheme);
            o.record_every = cfg.record_every;
            o.s_list = cfg.s_list;
            o.keep_states = !ev_actions.empty();
            const auto tr = hbnf::evolve(z0, field, freq, o);
            if (ev_flags.output_dir) {
                auto os = open_out(*ev_flags.output_dir);
                hbnf::write_trajectory_csv(os, tr);
            } else {
                hbnf::write_trajectory_csv(std::cout, tr);
            }
            if (!ev_actions.empty()) {
                auto os = open_out(ev_actions);
                hbnf::write_actions_csv(os, tr, ev_stride);
            }
            std::cerr << "drift: " << hbnf::csv_num(hbnf::measure_action_drift(tr, cfg.s_list.front()))
                      << "  energy drift: " << hbnf::csv_num(hbnf::energy_drift(tr)) << '\n';
        } else if (pipeline->parsed()) {
            const auto cfg = pl_flags.resolve();
            hbnf::PipelineOptions po;
            po.plots = !pl_no_plots;
            po.log = &std::cerr;
            const auto man = hbnf::run_pipeline(cfg, po);
            for (const auto& c : man.criteria)
                std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " = " << hbnf::csv_num(c.value) << " (" << c.requirement
                          << ")\n";
            std::cout << "report: " << (man.directory / "summary.md").string() << '\n';
            return man.all_pass() ? 0 : 3;
        } else if (plots->parsed()) {
            const auto rep = hbnf::emit_plots(pl_dir);
            for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
            for (const auto& f : rep.files) std::cout << f << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
