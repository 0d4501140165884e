#pragma once

// Experiment configuration (JSON, schema version 1).

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nonlinearity.hpp"

namespace hbnf {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kConfigSchema = 1;

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
    int cutoff = 16;
    int order = 4;
    int multiplier_class = 1;
    bool unperturbed = false;
    std::uint64_t seed = 7;
    std::optional<double> gamma;  // unset: use the certified (largest admissible) value
    double delta = 4.0;
    Nonlinearity g = Nonlinearity::quartic();
    std::vector<double> s_list{1.0};
    std::vector<double> eps_list{0.1, 0.05, 0.025};
    double dt = 0.01;
    double T = 10.0;
    bool horizon_scales_with_eps = true;  // horizon T / eps
    std::string scheme = "strang";
    int record_every = 10;
    int normalized_samples = 100;  // states mapped through tau^{-1} per run
    int decay_arity = 3;
    int decay_cutoff = 40;
    std::string output_dir = "hbnf-run";

    double horizon(double eps) const { return horizon_scales_with_eps ? T / eps : T; }

    void validate() const {
        auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
        if (cutoff < 1) fail("cutoff must be >= 1");
        if (order < 3) fail("order must be >= 3");
        if (multiplier_class < 1) fail("multiplier_class must be >= 1");
        if (gamma && *gamma < 0) fail("gamma must be >= 0");
        if (delta < 0) fail("delta must be >= 0");
        if (g.empty()) fail("nonlinearity must have at least one term");
        if (s_list.empty()) fail("s_list must not be empty");
        for (double e : eps_list)
            if (!(e > 0)) fail("eps_list entries must be > 0");
        if (!(dt > 0)) fail("dt must be > 0");
        if (!(T > 0)) fail("T must be > 0");
        if (scheme != "strang" && scheme != "rk4") fail("scheme must be 'strang' or 'rk4'");
        if (record_every < 1) fail("record_every must be >= 1");
        if (normalized_samples < 2) fail("normalized_samples must be >= 2");
        if (decay_arity < 3 || decay_arity > 4) fail("decay_arity must be 3 or 4");
        if (decay_cutoff < 2) fail("decay_cutoff must be >= 2");
        if (output_dir.empty()) fail("output_dir must not be empty");
    }
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    j = nlohmann::json{{"schema", kConfigSchema},
                       {"cutoff", c.cutoff},
                       {"order", c.order},
                       {"multiplier_class", c.multiplier_class},
                       {"unperturbed", c.unperturbed},
                       {"seed", c.seed},
                       {"gamma", c.gamma ? nlohmann::json(*c.gamma) : nlohmann::json()},
                       {"delta", c.delta},
                       {"nonlinearity", c.g},
                       {"s_list", c.s_list},
                       {"eps_list", c.eps_list},
                       {"dt", c.dt},
                       {"T", c.T},
                       {"horizon_scales_with_eps", c.horizon_scales_with_eps},
                       {"scheme", c.scheme},
                       {"record_every", c.record_every},
                       {"normalized_samples", c.normalized_samples},
                       {"decay_arity", c.decay_arity},
                       {"decay_cutoff", c.decay_cutoff},
                       {"output_dir", c.output_dir}};
}

/// Unknown keys are rejected so typos do not silently fall back to defaults.
inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
    static const std::vector<std::string> known{
        "schema", "cutoff", "order", "multiplier_class", "unperturbed", "seed", "gamma", "delta", "nonlinearity",
        "s_list", "eps_list", "dt", "T", "horizon_scales_with_eps", "scheme", "record_every", "normalized_samples",
        "decay_arity", "decay_cutoff", "output_dir"};
    for (const auto& [k, v] : j.items())
        if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError("config: unknown key '" + k + "'");
    if (j.contains("schema") && j.at("schema") != kConfigSchema)
        throw ConfigError("config: unsupported schema version " + j.at("schema").dump());
    try {
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
        };
        get("cutoff", c.cutoff);
        get("order", c.order);
        get("multiplier_class", c.multiplier_class);
        get("unperturbed", c.unperturbed);
        get("seed", c.seed);
        if (j.contains("gamma")) {
            if (j.at("gamma").is_null())
                c.gamma.reset();
            else
                c.gamma = j.at("gamma").get<double>();
        }
        get("delta", c.delta);
        if (j.contains("nonlinearity")) c.g = j.at("nonlinearity").get<Nonlinearity>();
        get("s_list", c.s_list);
        get("eps_list", c.eps_list);
        get("dt", c.dt);
        get("T", c.T);
        get("horizon_scales_with_eps", c.horizon_scales_with_eps);
        get("scheme", c.scheme);
        get("record_every", c.record_every);
        get("normalized_samples", c.normalized_samples);
        get("decay_arity", c.decay_arity);
        get("decay_cutoff", c.decay_cutoff);
        get("output_dir", c.output_dir);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    auto c = j.get<ExperimentConfig>();
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config: " + path + ": " + e.what());
    }
    return parse_config(j);
}

/// FNV-1a over the canonical JSON dump, without the output directory.
inline std::string config_hash(const ExperimentConfig& c) {
    nlohmann::json j = c;
    j.erase("output_dir");
    const std::string s = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace hbnf
