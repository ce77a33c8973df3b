#pragma once

// JSON config loading for the CLI: sections offspring, motion, normalization,
// experiment. Validation errors always name the offending field.

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "branching.hpp"
#include "levy_motion.hpp"
#include "normalization.hpp"

namespace blex {

struct ExperimentConfig {
    std::vector<double> t_grid{4.0, 6.0, 8.0};
    std::uint64_t replications = 5000;
    std::uint64_t limit_draws = 100000;
    double truncation = 0.05;   // limit-sampler cutoff a
    double front_level = 0.5;   // theta for the front position
    double cut_s = 1.0;         // s in the many-to-one / cut-tree diagnostics
    double jump_theta = 1.0;    // theta in the one-large-jump event

    void validate() const {
        if (t_grid.empty()) throw std::invalid_argument("experiment.t_grid: must be nonempty");
        for (double t : t_grid)
            if (!(t >= 0.0)) throw std::invalid_argument("experiment.t_grid: entries must be >= 0");
        if (replications == 0)
            throw std::invalid_argument("experiment.replications: must be positive");
        if (limit_draws == 0) throw std::invalid_argument("experiment.limit_draws: must be positive");
        if (!(truncation > 0.0)) throw std::invalid_argument("experiment.truncation: must be positive");
        if (!(front_level > 0.0 && front_level < 1.0))
            throw std::invalid_argument("experiment.front_level: must lie in (0,1)");
        if (!(cut_s >= 0.0)) throw std::invalid_argument("experiment.cut_s: must be >= 0");
        if (!(jump_theta > 0.0)) throw std::invalid_argument("experiment.jump_theta: must be positive");
    }
};

struct Config {
    BranchingConfig branching;
    MotionSpec motion = MotionSpec::stable(1.5, 1.0, 1.0);
    SlowlyVarying L = SlowlyVarying::one();
    ExperimentConfig experiment;

    void validate() const {
        branching.validate();
        motion.validate();
        experiment.validate();
    }

    // Fully-resolved key=value lines echoed into every output header.
    std::string describe() const;
};

namespace detail {

inline double config_number(const nlohmann::json& j, const std::string& section,
                            const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number())
        throw std::invalid_argument(section + "." + key + ": must be a number");
    return j[key].get<double>();
}

inline MotionComponent parse_motion_component(const nlohmann::json& j) {
    const std::string kind = j.value("kind", "stable");
    if (kind == "stable") {
        StableComponent st;
        st.alpha = config_number(j, "motion", "alpha", st.alpha);
        st.c1 = config_number(j, "motion", "c1", st.c1);
        st.c2 = config_number(j, "motion", "c2", st.c2);
        st.a = config_number(j, "motion", "a", st.a);
        return st;
    }
    if (kind == "brownian") {
        BrownianComponent br;
        br.b = config_number(j, "motion", "b", br.b);
        return br;
    }
    if (kind == "one-stable-asym") {
        OneStableAsymComponent os;
        os.c1 = config_number(j, "motion", "c1", os.c1);
        os.c2 = config_number(j, "motion", "c2", os.c2);
        os.a = config_number(j, "motion", "a", os.a);
        return os;
    }
    throw std::invalid_argument("motion.kind: unknown kind '" + kind + "'");
}

} // namespace detail

inline Config parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& err) {
        throw std::invalid_argument(std::string("config: not valid JSON: ") + err.what());
    }
    Config cfg;
    if (j.contains("offspring")) {
        const auto& off = j["offspring"];
        cfg.branching.beta = detail::config_number(off, "offspring", "beta", cfg.branching.beta);
        if (off.contains("probs")) {
            if (!off["probs"].is_array())
                throw std::invalid_argument("offspring.probs: must be an array");
            cfg.branching.offspring.probs = off["probs"].get<std::vector<double>>();
        }
    }
    if (j.contains("motion")) {
        const auto& mo = j["motion"];
        if (mo.value("kind", "stable") == "composite") {
            if (!mo.contains("components") || !mo["components"].is_array())
                throw std::invalid_argument("motion.components: required for composite kind");
            cfg.motion.components.clear();
            for (const auto& comp : mo["components"])
                cfg.motion.components.push_back(detail::parse_motion_component(comp));
        } else {
            cfg.motion.components = {detail::parse_motion_component(mo)};
        }
    }
    if (j.contains("normalization")) {
        const auto& no = j["normalization"];
        const std::string l_kind = no.value("L", "one");
        if (l_kind == "one")
            cfg.L = SlowlyVarying::one();
        else if (l_kind == "log-pow")
            cfg.L = SlowlyVarying::log_pow(detail::config_number(no, "normalization", "p", 1.0));
        else
            throw std::invalid_argument("normalization.L: must be 'one' or 'log-pow'");
    }
    if (j.contains("experiment")) {
        const auto& ex = j["experiment"];
        auto& e = cfg.experiment;
        if (ex.contains("t_grid")) {
            if (!ex["t_grid"].is_array())
                throw std::invalid_argument("experiment.t_grid: must be an array");
            e.t_grid = ex["t_grid"].get<std::vector<double>>();
        }
        e.replications =
            std::uint64_t(detail::config_number(ex, "experiment", "replications", double(e.replications)));
        e.limit_draws =
            std::uint64_t(detail::config_number(ex, "experiment", "limit_draws", double(e.limit_draws)));
        e.truncation = detail::config_number(ex, "experiment", "truncation", e.truncation);
        e.front_level = detail::config_number(ex, "experiment", "front_level", e.front_level);
        e.cut_s = detail::config_number(ex, "experiment", "cut_s", e.cut_s);
        e.jump_theta = detail::config_number(ex, "experiment", "jump_theta", e.jump_theta);
    }
    cfg.validate();
    return cfg;
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

inline std::string Config::describe() const {
    char buf[256];
    std::string out;
    auto kv = [&](const char* key, double value) {
        std::snprintf(buf, sizeof buf, "%s=%.17g\n", key, value);
        out += buf;
    };
    kv("offspring.beta", branching.beta);
    out += "offspring.probs=";
    for (std::size_t i = 0; i < branching.offspring.probs.size(); ++i) {
        std::snprintf(buf, sizeof buf, i ? ",%.17g" : "%.17g", branching.offspring.probs[i]);
        out += buf;
    }
    out += "\n";
    for (const auto& comp : motion.components) {
        if (const auto* st = std::get_if<StableComponent>(&comp)) {
            std::snprintf(buf, sizeof buf, "motion.stable alpha=%.17g c1=%.17g c2=%.17g a=%.17g\n",
                          st->alpha, st->c1, st->c2, st->a);
        } else if (const auto* br = std::get_if<BrownianComponent>(&comp)) {
            std::snprintf(buf, sizeof buf, "motion.brownian b=%.17g\n", br->b);
        } else {
            const auto& os = std::get<OneStableAsymComponent>(comp);
            std::snprintf(buf, sizeof buf, "motion.one-stable-asym c1=%.17g c2=%.17g a=%.17g\n",
                          os.c1, os.c2, os.a);
        }
        out += buf;
    }
    if (L.is_one()) {
        out += "normalization.L=one\n";
    } else {
        std::snprintf(buf, sizeof buf, "normalization.L=log-pow p=%.17g\n", L.exponent);
        out += buf;
    }
    out += "experiment.t_grid=";
    for (std::size_t i = 0; i < experiment.t_grid.size(); ++i) {
        std::snprintf(buf, sizeof buf, i ? ",%.17g" : "%.17g", experiment.t_grid[i]);
        out += buf;
    }
    out += "\n";
    kv("experiment.replications", double(experiment.replications));
    kv("experiment.limit_draws", double(experiment.limit_draws));
    kv("experiment.truncation", experiment.truncation);
    kv("experiment.front_level", experiment.front_level);
    kv("experiment.cut_s", experiment.cut_s);
    kv("experiment.jump_theta", experiment.jump_theta);
    return out;
}

} // namespace blex
