#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stigmergy/calcium_kernel.hpp"
#include "stigmergy/errors.hpp"
#include "stigmergy/pattern_learning.hpp"
#include "stigmergy/rng.hpp"
#include "stigmergy/task_allocation.hpp"

namespace stigmergy {

struct KernelConfig {
    StimulusWaveform stimulus;
    GluParams glu;
    CalciumParams calcium;
    TelegraphParams telegraph;
    RegulationParams regulation;
    double d_th = 10.0;
    double gaussian_sigma = 2.5;
    std::size_t gaussian_points = 201;

    void validate() const {
        stimulus.validate();
        glu.validate();
        calcium.validate();
        telegraph.validate();
        regulation.validate();
        if (d_th <= 0.0) throw config_error("kernel: d_th must be > 0");
        if (d_th > telegraph.domain_len) {
            throw config_error("kernel: d_th must not exceed telegraph domain_len");
        }
        if (gaussian_sigma <= 0.0) throw config_error("kernel: gaussian_sigma must be > 0");
        if (gaussian_points < 2) throw config_error("kernel: gaussian_points must be >= 2");
    }
};

struct OutputConfig {
    std::string directory = "runs";
    bool frames = true;
};

// Top-level run configuration: one section per subsystem, every field with
// a shipped default. Loading rejects unknown keys.
struct RunConfig {
    KernelConfig kernel;
    Experiment1Config experiment1;
    PatternConfig experiment2;
    OutputConfig output;

    void validate() const {
        kernel.validate();
        experiment1.validate();
        experiment2.validate();
    }
};

inline KernelTable build_kernel(const KernelConfig& cfg, KernelChoice choice) {
    cfg.validate();
    if (choice == KernelChoice::gaussian) {
        return build_gaussian_kernel(cfg.gaussian_sigma, cfg.d_th, cfg.gaussian_points);
    }
    return build_diffusion_kernel(cfg.stimulus, cfg.glu, cfg.calcium, cfg.telegraph,
                                  cfg.regulation, cfg.d_th);
}

namespace cfgio {

using json = nlohmann::json;

// Strict section reader: typed getters plus unknown-key rejection.
class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw config_error("config: '" + path_ + "' must be an object");
    }

    Section child(const std::string& key) {
        seen_.push_back(key);
        if (!node_.contains(key)) return Section(empty_object(), path_ + "." + key);
        return Section(node_.at(key), path_ + "." + key);
    }

    double number(const std::string& key, double fallback) {
        seen_.push_back(key);
        if (!node_.contains(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_number()) throw type_error(key, "a number");
        return v.get<double>();
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback) {
        seen_.push_back(key);
        if (!node_.contains(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_number_integer()) throw type_error(key, "an integer");
        return v.get<std::int64_t>();
    }

    bool boolean(const std::string& key, bool fallback) {
        seen_.push_back(key);
        if (!node_.contains(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_boolean()) throw type_error(key, "a boolean");
        return v.get<bool>();
    }

    std::string text(const std::string& key, const std::string& fallback) {
        seen_.push_back(key);
        if (!node_.contains(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_string()) throw type_error(key, "a string");
        return v.get<std::string>();
    }

    bool has(const std::string& key) const { return node_.contains(key); }
    const json& raw(const std::string& key) {
        seen_.push_back(key);
        return node_.at(key);
    }

    // Call after reading every expected key.
    void finish() const {
        for (const auto& item : node_.items()) {
            if (std::find(seen_.begin(), seen_.end(), item.key()) == seen_.end()) {
                throw config_error("config: unknown key '" + path_ + "." + item.key() + "'");
            }
        }
    }

private:
    static const json& empty_object() {
        static const json empty = json::object();
        return empty;
    }

    config_error type_error(const std::string& key, const std::string& expected) const {
        return config_error("config: '" + path_ + "." + key + "' must be " + expected);
    }

    const json& node_;
    std::string path_;
    std::vector<std::string> seen_;
};

inline KernelChoice parse_kernel_choice(const std::string& name, const std::string& path) {
    if (name == "diffusion") return KernelChoice::diffusion;
    if (name == "gaussian") return KernelChoice::gaussian;
    throw config_error("config: '" + path + "' must be 'diffusion' or 'gaussian'");
}

inline std::string kernel_choice_name(KernelChoice choice) {
    return choice == KernelChoice::diffusion ? "diffusion" : "gaussian";
}

// Resolves a target field: a built-in glyph name or a path to a 28x28 PBM.
inline PatternTarget resolve_target(const std::string& name) {
    if (name == "digit4") return PatternTarget::digit4();
    if (name == "digit8") return PatternTarget::digit8();
    std::ifstream in(name);
    if (!in) throw config_error("config: cannot open pattern target file '" + name + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return PatternTarget::parse_pbm(buffer.str());
}

} // namespace cfgio

// Names of the built-in or file-based pattern targets, kept alongside the
// resolved bits so the effective config can be re-emitted.
struct RunConfigSources {
    std::string target_first = "digit4";
    std::string target_second = "digit8";
};

struct LoadedConfig {
    RunConfig config;
    RunConfigSources sources;
};

inline LoadedConfig config_from_json(const nlohmann::json& root) {
    if (!root.is_object()) throw config_error("config: top level must be an object");
    LoadedConfig loaded;
    RunConfig& cfg = loaded.config;

    cfgio::Section top(root, "$");

    {
        cfgio::Section kernel = top.child("kernel");
        {
            cfgio::Section s = kernel.child("stimulus");
            auto& w = cfg.kernel.stimulus;
            w.pulse_amplitude = s.number("pulse_amplitude", w.pulse_amplitude);
            w.pulse_width = s.number("pulse_width", w.pulse_width);
            w.pulse_period = s.number("pulse_period", w.pulse_period);
            w.pulse_count = static_cast<int>(s.integer("pulse_count", w.pulse_count));
            w.rest_level = s.number("rest_level", w.rest_level);
            s.finish();
        }
        {
            cfgio::Section s = kernel.child("glu");
            auto& g = cfg.kernel.glu;
            g.t_max = s.number("t_max", g.t_max);
            g.v_base = s.number("v_base", g.v_base);
            g.k_n = s.number("k_n", g.k_n);
            s.finish();
        }
        {
            cfgio::Section s = kernel.child("calcium");
            auto& c = cfg.kernel.calcium;
            c.v_ca = s.number("v_ca", c.v_ca);
            c.k_ca = s.number("k_ca", c.k_ca);
            c.hill_exp = s.number("hill_exp", c.hill_exp);
            c.tau_ca = s.number("tau_ca", c.tau_ca);
            c.ca_eq = s.number("ca_eq", c.ca_eq);
            s.finish();
        }
        {
            cfgio::Section s = kernel.child("telegraph");
            auto& t = cfg.kernel.telegraph;
            t.tau_d = s.number("tau_d", t.tau_d);
            t.d_coef = s.number("d_coef", t.d_coef);
            t.dx = s.number("dx", t.dx);
            t.dt = s.number("dt", t.dt);
            t.domain_len = s.number("domain_len", t.domain_len);
            t.duration = s.number("duration", t.duration);
            t.source_width = s.number("source_width", t.source_width);
            s.finish();
        }
        {
            cfgio::Section s = kernel.child("regulation");
            auto& r = cfg.kernel.regulation;
            r.k_i = s.number("k_i", r.k_i);
            r.i_th = s.number("i_th", r.i_th);
            s.finish();
        }
        cfg.kernel.d_th = kernel.number("d_th", cfg.kernel.d_th);
        cfg.kernel.gaussian_sigma = kernel.number("gaussian_sigma", cfg.kernel.gaussian_sigma);
        cfg.kernel.gaussian_points =
            static_cast<std::size_t>(kernel.integer("gaussian_points",
                                                    static_cast<std::int64_t>(cfg.kernel.gaussian_points)));
        kernel.finish();
    }

    {
        cfgio::Section e1 = top.child("experiment1");
        auto& x = cfg.experiment1;
        x.agent_count = static_cast<std::size_t>(e1.integer("agent_count", static_cast<std::int64_t>(x.agent_count)));
        x.requirement = e1.number("requirement", x.requirement);
        x.batch_size = static_cast<std::size_t>(e1.integer("batch_size", static_cast<std::int64_t>(x.batch_size)));
        x.reward_min = static_cast<int>(e1.integer("reward_min", x.reward_min));
        x.reward_max = static_cast<int>(e1.integer("reward_max", x.reward_max));
        x.ability_min = static_cast<int>(e1.integer("ability_min", x.ability_min));
        x.ability_max = static_cast<int>(e1.integer("ability_max", x.ability_max));
        x.cost_per_action = e1.number("cost_per_action", x.cost_per_action);
        x.episodes = static_cast<std::size_t>(e1.integer("episodes", static_cast<std::int64_t>(x.episodes)));
        x.selection.alpha = e1.number("alpha", x.selection.alpha);
        x.selection.beta = e1.number("beta", x.selection.beta);
        x.selection.n_sel = e1.number("n_sel", x.selection.n_sel);
        const std::string mode = e1.text("selection_mode", x.selection.mode == SelectionParams::Mode::additive
                                                               ? "additive"
                                                               : "multiplicative");
        if (mode == "additive") {
            x.selection.mode = SelectionParams::Mode::additive;
        } else if (mode == "multiplicative") {
            x.selection.mode = SelectionParams::Mode::multiplicative;
        } else {
            throw config_error("config: '$.experiment1.selection_mode' must be 'additive' or 'multiplicative'");
        }
        x.update.rho1 = e1.number("rho1", x.update.rho1);
        x.update.rho2 = e1.number("rho2", x.update.rho2);
        x.update.factor = e1.number("factor", x.update.factor);
        x.update.clamp_local = e1.number("clamp_local", x.update.clamp_local);
        x.update.clamp_prop = e1.number("clamp_prop", x.update.clamp_prop);
        x.eps_s = e1.number("eps_s", x.eps_s);
        x.eps_phi = e1.number("eps_phi", x.eps_phi);
        x.d_min = e1.number("d_min", x.d_min);
        x.d_max = e1.number("d_max", x.d_max);
        x.d_init = e1.number("d_init", x.d_init);
        x.distance_adjust = e1.boolean("distance_adjust", x.distance_adjust);
        x.kernel = cfgio::parse_kernel_choice(e1.text("kernel", cfgio::kernel_choice_name(x.kernel)),
                                              "$.experiment1.kernel");
        e1.finish();
    }

    {
        cfgio::Section e2 = top.child("experiment2");
        auto& x = cfg.experiment2;
        x.group_size = static_cast<std::size_t>(e2.integer("group_size", static_cast<std::int64_t>(x.group_size)));
        if (e2.has("base")) {
            const auto& base = e2.raw("base");
            if (base.is_string()) {
                if (base.get<std::string>() != "auto") {
                    throw config_error("config: '$.experiment2.base' must be a number or 'auto'");
                }
                x.base_auto = true;
            } else if (base.is_number()) {
                x.base_auto = false;
                x.base = base.get<double>();
            } else {
                throw config_error("config: '$.experiment2.base' must be a number or 'auto'");
            }
        }
        x.unit_input = e2.number("unit_input", x.unit_input);
        x.factor = e2.number("factor", x.factor);
        x.iterations = static_cast<std::size_t>(e2.integer("iterations", static_cast<std::int64_t>(x.iterations)));
        x.switch_iteration = static_cast<std::size_t>(
            e2.integer("switch_iteration", static_cast<std::int64_t>(x.switch_iteration)));
        x.snapshot_every = static_cast<std::size_t>(
            e2.integer("snapshot_every", static_cast<std::int64_t>(x.snapshot_every)));
        x.d_min = e2.number("d_min", x.d_min);
        x.d_max = e2.number("d_max", x.d_max);
        x.d_init = e2.number("d_init", x.d_init);
        loaded.sources.target_first = e2.text("target_first", loaded.sources.target_first);
        loaded.sources.target_second = e2.text("target_second", loaded.sources.target_second);
        x.first = cfgio::resolve_target(loaded.sources.target_first);
        x.second = cfgio::resolve_target(loaded.sources.target_second);
        x.kernel = cfgio::parse_kernel_choice(e2.text("kernel", cfgio::kernel_choice_name(x.kernel)),
                                              "$.experiment2.kernel");
        e2.finish();
    }

    {
        cfgio::Section out = top.child("output");
        cfg.output.directory = out.text("directory", cfg.output.directory);
        cfg.output.frames = out.boolean("frames", cfg.output.frames);
        out.finish();
    }

    top.finish();
    cfg.validate();
    return loaded;
}

inline nlohmann::json config_to_json(const RunConfig& cfg, const RunConfigSources& sources) {
    nlohmann::json root;
    root["kernel"] = {
        {"stimulus",
         {{"pulse_amplitude", cfg.kernel.stimulus.pulse_amplitude},
          {"pulse_width", cfg.kernel.stimulus.pulse_width},
          {"pulse_period", cfg.kernel.stimulus.pulse_period},
          {"pulse_count", cfg.kernel.stimulus.pulse_count},
          {"rest_level", cfg.kernel.stimulus.rest_level}}},
        {"glu", {{"t_max", cfg.kernel.glu.t_max}, {"v_base", cfg.kernel.glu.v_base}, {"k_n", cfg.kernel.glu.k_n}}},
        {"calcium",
         {{"v_ca", cfg.kernel.calcium.v_ca},
          {"k_ca", cfg.kernel.calcium.k_ca},
          {"hill_exp", cfg.kernel.calcium.hill_exp},
          {"tau_ca", cfg.kernel.calcium.tau_ca},
          {"ca_eq", cfg.kernel.calcium.ca_eq}}},
        {"telegraph",
         {{"tau_d", cfg.kernel.telegraph.tau_d},
          {"d_coef", cfg.kernel.telegraph.d_coef},
          {"dx", cfg.kernel.telegraph.dx},
          {"dt", cfg.kernel.telegraph.dt},
          {"domain_len", cfg.kernel.telegraph.domain_len},
          {"duration", cfg.kernel.telegraph.duration},
          {"source_width", cfg.kernel.telegraph.source_width}}},
        {"regulation", {{"k_i", cfg.kernel.regulation.k_i}, {"i_th", cfg.kernel.regulation.i_th}}},
        {"d_th", cfg.kernel.d_th},
        {"gaussian_sigma", cfg.kernel.gaussian_sigma},
        {"gaussian_points", cfg.kernel.gaussian_points},
    };
    const auto& x1 = cfg.experiment1;
    root["experiment1"] = {
        {"agent_count", x1.agent_count},
        {"requirement", x1.requirement},
        {"batch_size", x1.batch_size},
        {"reward_min", x1.reward_min},
        {"reward_max", x1.reward_max},
        {"ability_min", x1.ability_min},
        {"ability_max", x1.ability_max},
        {"cost_per_action", x1.cost_per_action},
        {"episodes", x1.episodes},
        {"alpha", x1.selection.alpha},
        {"beta", x1.selection.beta},
        {"n_sel", x1.selection.n_sel},
        {"selection_mode", x1.selection.mode == SelectionParams::Mode::additive ? "additive" : "multiplicative"},
        {"rho1", x1.update.rho1},
        {"rho2", x1.update.rho2},
        {"factor", x1.update.factor},
        {"clamp_local", x1.update.clamp_local},
        {"clamp_prop", x1.update.clamp_prop},
        {"eps_s", x1.eps_s},
        {"eps_phi", x1.eps_phi},
        {"d_min", x1.d_min},
        {"d_max", x1.d_max},
        {"d_init", x1.d_init},
        {"distance_adjust", x1.distance_adjust},
        {"kernel", cfgio::kernel_choice_name(x1.kernel)},
    };
    const auto& x2 = cfg.experiment2;
    nlohmann::json e2 = {
        {"group_size", x2.group_size},
        {"unit_input", x2.unit_input},
        {"factor", x2.factor},
        {"iterations", x2.iterations},
        {"switch_iteration", x2.switch_iteration},
        {"snapshot_every", x2.snapshot_every},
        {"d_min", x2.d_min},
        {"d_max", x2.d_max},
        {"d_init", x2.d_init},
        {"target_first", sources.target_first},
        {"target_second", sources.target_second},
        {"kernel", cfgio::kernel_choice_name(x2.kernel)},
    };
    if (x2.base_auto) {
        e2["base"] = "auto";
    } else {
        e2["base"] = x2.base;
    }
    root["experiment2"] = e2;
    root["output"] = {{"directory", cfg.output.directory}, {"frames", cfg.output.frames}};
    return root;
}

inline LoadedConfig default_config() {
    return config_from_json(nlohmann::json::object());
}

inline LoadedConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("config: cannot open '" + path.string() + "'");
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("config: parse failure in '" + path.string() + "': " + e.what());
    }
    return config_from_json(root);
}

// Content digest of the effective configuration, recorded in manifests.
inline std::string config_digest(const RunConfig& cfg, const RunConfigSources& sources) {
    const std::uint64_t h = fnv1a64(config_to_json(cfg, sources).dump());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace stigmergy
