#pragma once

// Experiment configuration: one JSON document describing the design space,
// contexts, predictor, oracle and controller settings. Relative paths are
// resolved against the directory holding the config file.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "comet/design_space.hpp"
#include "comet/error.hpp"
#include "comet/eval_oracle.hpp"
#include "comet/meta_predictor.hpp"
#include "comet/shaping_controller.hpp"

namespace comet {

inline constexpr int kConfigSchemaVersion = 1;

enum class ExperimentKind { train_predictor, search, compare, gen_synth };

inline std::string_view to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::train_predictor: return "train-predictor";
        case ExperimentKind::search: return "search";
        case ExperimentKind::compare: return "compare";
        case ExperimentKind::gen_synth: return "gen-synth";
    }
    return "?";
}

inline std::optional<ExperimentKind> parse_experiment_kind(std::string_view s) {
    for (auto k : {ExperimentKind::train_predictor, ExperimentKind::search, ExperimentKind::compare, ExperimentKind::gen_synth})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

struct OracleSpec {
    std::string kind = "synthetic";  // synthetic | tabular
    SyntheticTaskSpec synthetic;
    std::filesystem::path table;
};

struct PredictorSpec {
    PredictorConfig config;
    double oversample = 1.0;
    double holdout = 0.2;
    std::filesystem::path stats;  // empty: generate from synthetic_stats in memory
    std::filesystem::path model;  // empty: <out>/model.json
};

struct ExperimentConfig {
    int schema_version = kConfigSchemaVersion;
    ExperimentKind experiment = ExperimentKind::search;
    std::filesystem::path source;  // config file, if loaded from disk
    ActionCatalog catalog;
    Shape input;
    std::vector<ContextSpec> contexts;
    std::string search_context;
    PredictorSpec predictor;
    std::size_t synth_count = 2000;
    TrueCostModel truth;
    OracleSpec oracle;
    std::string meta = "model";  // model | ground_truth
    ShapingConfig shaping;
    std::vector<double> scalarized_weights;
    int replicates = 1;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::filesystem::path out = "out";
    std::vector<std::string> reference_network;

    const ContextSpec& context() const {
        for (const auto& c : contexts)
            if (c.name == search_context) return c;
        throw SchemaError("config: search_context '" + search_context + "' is not a declared context");
    }

    SearchSpace space() const { return SearchSpace{catalog, input, context()}; }

    std::filesystem::path model_path() const { return predictor.model.empty() ? out / "model.json" : predictor.model; }

    std::optional<CandidateNetwork> reference() const {
        if (reference_network.empty()) return std::nullopt;
        CandidateNetwork net(input);
        for (const auto& name : reference_network) {
            auto a = catalog.find(name);
            if (!a) throw SchemaError("config: reference_network uses unknown action '" + name + "'");
            net = apply_action(net, catalog, *a);
        }
        return net;
    }

    /// Checks everything that can be checked without touching data files.
    void validate() const {
        if (schema_version != kConfigSchemaVersion)
            throw VersionError("config schema_version " + std::to_string(schema_version) + " is not supported (expected " +
                               std::to_string(kConfigSchemaVersion) + ")");
        if (catalog.actions.empty()) throw SchemaError("config: design_space.actions is empty");
        if (catalog.max_depth < 1) throw SchemaError("config: design_space.max_depth must be >= 1");
        if (input.channels < 1 || input.height < 1 || input.width < 1)
            throw SchemaError("config: design_space.input_shape must be positive");
        for (std::size_t i = 0; i < catalog.actions.size(); ++i)
            for (std::size_t j = i + 1; j < catalog.actions.size(); ++j)
                if (catalog.actions[i].name == catalog.actions[j].name)
                    throw SchemaError("config: duplicate action name '" + catalog.actions[i].name + "'");
        if (legal_actions(CandidateNetwork(input), catalog).empty())
            throw SchemaError("config: no action is valid on the input shape");
        if (contexts.empty()) throw SchemaError("config: at least one context is required");
        for (const auto& c : contexts) c.validate();
        (void)context();
        if (!truth.context_multipliers.empty() && truth.context_multipliers.size() != contexts.size())
            throw SchemaError("config: synthetic_stats.context_multipliers needs one entry per context");
        if (synth_count < 1) throw SchemaError("config: synthetic_stats.count must be >= 1");
        if (predictor.config.bags < 1) throw SchemaError("config: predictor.bags must be >= 1");
        if (!(predictor.oversample >= 1.0)) throw SchemaError("config: predictor.oversample must be >= 1");
        if (!(predictor.holdout > 0.0 && predictor.holdout < 1.0)) throw SchemaError("config: predictor.holdout must be in (0, 1)");
        if (oracle.kind == "synthetic") {
            (void)SyntheticOracle(oracle.synthetic, catalog.size());
        } else if (oracle.kind == "tabular") {
            if (oracle.table.empty()) throw SchemaError("config: oracle.table is required for a tabular oracle");
        } else {
            throw SchemaError("config: oracle.kind must be 'synthetic' or 'tabular'");
        }
        if (meta != "model" && meta != "ground_truth") throw SchemaError("config: meta must be 'model' or 'ground_truth'");
        try {
            shaping.validate();
        } catch (const ArgumentError& e) {
            throw SchemaError(std::string("config: shaping: ") + e.what());
        }
        if (experiment == ExperimentKind::compare && scalarized_weights.size() != 1 + shaping.secondaries.size())
            throw SchemaError("config: scalarized_weights needs 1 + " + std::to_string(shaping.secondaries.size()) +
                              " entries");
        if (replicates < 1) throw SchemaError("config: replicates must be >= 1");
        if (jobs < 1) throw SchemaError("config: jobs must be >= 1");
        (void)reference();
    }
};

namespace detail {

using nlohmann::json;

inline void check_keys(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) throw SchemaError("config: '" + where + "' must be an object");
    for (const auto& [k, v] : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || a == k;
        if (!ok) throw SchemaError("config: unknown key '" + k + "' in '" + where + "'");
    }
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw SchemaError("config: missing required key '" + where + "." + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw SchemaError("config: '" + where + "." + key + "' has the wrong type");
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
    return j.contains(key) ? get<T>(j, key, where) : fallback;
}

// JSON has no infinity; accept the strings "inf" and "-inf".
inline double get_real(const json& j, const char* key, double fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    if (!v.is_number()) throw SchemaError("config: '" + where + "." + key + "' must be a number");
    return v.get<double>();
}

inline json real_json(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

inline LayerTemplate parse_action(const json& j, const std::string& where) {
    check_keys(j, where, {"name", "kind", "kernel_size", "stride", "padding", "expansion_ratio", "id_skip", "channels"});
    LayerTemplate t;
    t.name = get<std::string>(j, "name", where);
    const auto kind = get<std::string>(j, "kind", where);
    auto k = parse_block_kind(kind);
    if (!k) throw SchemaError("config: '" + where + ".kind' has unknown block kind '" + kind + "'");
    t.kind = *k;
    t.kernel_size = get_or<int>(j, "kernel_size", 1, where);
    t.stride = get_or<int>(j, "stride", 1, where);
    t.padding = get_or<int>(j, "padding", 0, where);
    t.expansion_ratio = get_or<double>(j, "expansion_ratio", 1.0, where);
    t.id_skip = get_or<bool>(j, "id_skip", false, where);
    t.channels = get_or<int>(j, "channels", 0, where);
    if (t.kernel_size < 1 || t.stride < 1 || t.padding < 0 || !(t.expansion_ratio > 0.0) || t.channels < 0)
        throw SchemaError("config: action '" + t.name + "' has out-of-range parameters");
    return t;
}

inline json action_json(const LayerTemplate& t) {
    return {{"name", t.name},       {"kind", std::string(to_string(t.kind))},
            {"kernel_size", t.kernel_size}, {"stride", t.stride},
            {"padding", t.padding}, {"expansion_ratio", t.expansion_ratio},
            {"id_skip", t.id_skip}, {"channels", t.channels}};
}

inline ContextSpec parse_context(const json& j, const std::string& where) {
    check_keys(j, where, {"name", "cores", "compute_units", "memory_mb", "clock_freq_mhz", "memory_bandwidth",
                          "processor_kind", "task"});
    ContextSpec c;
    c.name = get<std::string>(j, "name", where);
    c.cores = get<double>(j, "cores", where);
    c.compute_units = get<double>(j, "compute_units", where);
    c.memory_mb = get<double>(j, "memory_mb", where);
    c.clock_freq_mhz = get<double>(j, "clock_freq_mhz", where);
    c.memory_bandwidth = get<double>(j, "memory_bandwidth", where);
    c.processor_kind = get_or<std::string>(j, "processor_kind", "", where);
    if (j.contains("task")) {
        const auto& t = j.at("task");
        if (!t.is_object()) throw SchemaError("config: '" + where + ".task' must be an object");
        for (const auto& [k, v] : t.items()) {
            if (v.is_boolean()) c.task[k] = v.get<bool>() ? 1.0 : 0.0;
            else if (v.is_number()) c.task[k] = v.get<double>();
            else throw SchemaError("config: task feature '" + k + "' must be numeric or boolean");
        }
    }
    return c;
}

inline json context_json(const ContextSpec& c) {
    return {{"name", c.name},
            {"cores", c.cores},
            {"compute_units", c.compute_units},
            {"memory_mb", c.memory_mb},
            {"clock_freq_mhz", c.clock_freq_mhz},
            {"memory_bandwidth", c.memory_bandwidth},
            {"processor_kind", c.processor_kind},
            {"task", c.task}};
}

inline std::size_t action_index(const ActionCatalog& catalog, const std::string& name, const std::string& where) {
    auto a = catalog.find(name);
    if (!a) throw SchemaError("config: '" + where + "' references unknown action '" + name + "'");
    return *a;
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    if (p.empty()) return {};
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

}  // namespace detail

/// Parses a config document; `base` anchors relative paths.
inline ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base = ".") {
    using namespace detail;
    check_keys(j, "<root>", {"schema_version", "experiment", "design_space", "contexts", "search_context", "predictor",
                             "synthetic_stats", "oracle", "meta", "shaping", "scalarized_weights", "replicates", "seed",
                             "jobs", "out", "reference_network"});
    ExperimentConfig cfg;
    cfg.schema_version = get<int>(j, "schema_version", "<root>");
    if (cfg.schema_version != kConfigSchemaVersion)
        throw VersionError("config schema_version " + std::to_string(cfg.schema_version) + " is not supported (expected " +
                           std::to_string(kConfigSchemaVersion) + ")");
    const auto kind = get_or<std::string>(j, "experiment", "search", "<root>");
    auto ek = parse_experiment_kind(kind);
    if (!ek) throw SchemaError("config: unknown experiment '" + kind + "'");
    cfg.experiment = *ek;

    const auto& ds = j.contains("design_space") ? j.at("design_space") : throw SchemaError("config: missing 'design_space'");
    check_keys(ds, "design_space", {"input_shape", "max_depth", "actions"});
    const auto in = get<std::vector<int>>(ds, "input_shape", "design_space");
    if (in.size() != 3) throw SchemaError("config: design_space.input_shape must be [channels, height, width]");
    cfg.input = Shape{in[0], in[1], in[2]};
    cfg.catalog.max_depth = get<int>(ds, "max_depth", "design_space");
    if (!ds.contains("actions") || !ds.at("actions").is_array())
        throw SchemaError("config: design_space.actions must be a list");
    for (std::size_t i = 0; i < ds.at("actions").size(); ++i)
        cfg.catalog.actions.push_back(parse_action(ds.at("actions")[i], "design_space.actions[" + std::to_string(i) + "]"));

    if (!j.contains("contexts") || !j.at("contexts").is_array()) throw SchemaError("config: 'contexts' must be a list");
    for (std::size_t i = 0; i < j.at("contexts").size(); ++i)
        cfg.contexts.push_back(parse_context(j.at("contexts")[i], "contexts[" + std::to_string(i) + "]"));
    cfg.search_context = get_or<std::string>(j, "search_context", cfg.contexts.empty() ? "" : cfg.contexts.front().name,
                                             "<root>");

    if (j.contains("predictor")) {
        const auto& p = j.at("predictor");
        check_keys(p, "predictor", {"bags", "rounds", "shrinkage", "max_depth", "min_samples_leaf", "oversample", "holdout",
                                    "stats", "model"});
        auto& pc = cfg.predictor.config;
        pc.bags = get_or<int>(p, "bags", pc.bags, "predictor");
        pc.boost.rounds = get_or<int>(p, "rounds", pc.boost.rounds, "predictor");
        pc.boost.shrinkage = get_or<double>(p, "shrinkage", pc.boost.shrinkage, "predictor");
        pc.boost.tree.max_depth = get_or<int>(p, "max_depth", pc.boost.tree.max_depth, "predictor");
        pc.boost.tree.min_samples_leaf = get_or<int>(p, "min_samples_leaf", pc.boost.tree.min_samples_leaf, "predictor");
        cfg.predictor.oversample = get_or<double>(p, "oversample", 1.0, "predictor");
        cfg.predictor.holdout = get_or<double>(p, "holdout", 0.2, "predictor");
        cfg.predictor.stats = resolve(base, get_or<std::string>(p, "stats", "", "predictor"));
        cfg.predictor.model = resolve(base, get_or<std::string>(p, "model", "", "predictor"));
    }

    if (j.contains("synthetic_stats")) {
        const auto& s = j.at("synthetic_stats");
        check_keys(s, "synthetic_stats", {"count", "latency_intercept", "per_kernel_sq", "per_channel", "per_output_volume",
                                          "memory_intercept", "memory_per_element", "context_multipliers",
                                          "infeasibility", "memory_fraction"});
        const std::string w = "synthetic_stats";
        cfg.synth_count = get_or<std::size_t>(s, "count", cfg.synth_count, w);
        auto& t = cfg.truth;
        t.latency_intercept = get_or<double>(s, "latency_intercept", t.latency_intercept, w);
        t.per_kernel_sq = get_or<double>(s, "per_kernel_sq", t.per_kernel_sq, w);
        t.per_channel = get_or<double>(s, "per_channel", t.per_channel, w);
        t.per_output_volume = get_or<double>(s, "per_output_volume", t.per_output_volume, w);
        t.memory_intercept = get_or<double>(s, "memory_intercept", t.memory_intercept, w);
        t.memory_per_element = get_or<double>(s, "memory_per_element", t.memory_per_element, w);
        t.context_multipliers = get_or<std::vector<double>>(s, "context_multipliers", {}, w);
        t.infeasibility = get_or<bool>(s, "infeasibility", t.infeasibility, w);
        t.memory_fraction = get_or<double>(s, "memory_fraction", t.memory_fraction, w);
    }

    if (j.contains("oracle")) {
        const auto& o = j.at("oracle");
        check_keys(o, "oracle", {"kind", "base_utility", "repeat_decay", "bonuses", "noise_sigma", "cap", "min_depth",
                                 "seed", "table"});
        cfg.oracle.kind = get_or<std::string>(o, "kind", "synthetic", "oracle");
        auto& sp = cfg.oracle.synthetic;
        if (cfg.oracle.kind == "synthetic") {
            sp.base_utility.assign(cfg.catalog.size(), 0.0);
            if (!o.contains("base_utility") || !o.at("base_utility").is_object())
                throw SchemaError("config: oracle.base_utility must map every action name to a utility");
            std::size_t seen = 0;
            for (const auto& [name, v] : o.at("base_utility").items()) {
                if (!v.is_number()) throw SchemaError("config: oracle.base_utility." + name + " must be a number");
                sp.base_utility[action_index(cfg.catalog, name, "oracle.base_utility")] = v.get<double>();
                ++seen;
            }
            if (seen != cfg.catalog.size())
                throw SchemaError("config: oracle.base_utility must list all " + std::to_string(cfg.catalog.size()) +
                                  " actions");
        }
        sp.repeat_decay = get_or<double>(o, "repeat_decay", sp.repeat_decay, "oracle");
        sp.noise_sigma = get_or<double>(o, "noise_sigma", sp.noise_sigma, "oracle");
        sp.cap = get_or<double>(o, "cap", sp.cap, "oracle");
        sp.min_depth = get_or<std::size_t>(o, "min_depth", sp.min_depth, "oracle");
        sp.seed = get_or<std::uint64_t>(o, "seed", sp.seed, "oracle");
        if (o.contains("bonuses")) {
            const auto& b = o.at("bonuses");
            if (!b.is_array()) throw SchemaError("config: oracle.bonuses must be a list of [prev, next, value]");
            for (const auto& e : b) {
                if (!e.is_array() || e.size() != 3 || !e[0].is_string() || !e[1].is_string() || !e[2].is_number())
                    throw SchemaError("config: oracle.bonuses entries must be [prev, next, value]");
                sp.bonuses[{action_index(cfg.catalog, e[0].get<std::string>(), "oracle.bonuses"),
                            action_index(cfg.catalog, e[1].get<std::string>(), "oracle.bonuses")}] = e[2].get<double>();
            }
        }
        cfg.oracle.table = resolve(base, get_or<std::string>(o, "table", "", "oracle"));
    } else {
        throw SchemaError("config: missing 'oracle'");
    }
    cfg.meta = get_or<std::string>(j, "meta", "model", "<root>");

    if (j.contains("shaping")) {
        const auto& s = j.at("shaping");
        check_keys(s, "shaping", {"gamma", "beta", "epsilon0", "epsilon_threshold", "tau", "softmax_temperature",
                                  "max_steps", "episodes", "warmup", "epsilon_cap", "delta_mode", "shaping_episodes",
                                  "backend", "hidden", "q_step_size", "phi_step_size", "secondaries"});
        const std::string w = "shaping";
        auto& sc = cfg.shaping;
        sc.gamma = get_real(s, "gamma", sc.gamma, w);
        sc.beta = get_real(s, "beta", sc.beta, w);
        sc.epsilon_threshold = get_real(s, "epsilon_threshold", sc.epsilon_threshold, w);
        sc.tau = get_real(s, "tau", sc.tau, w);
        sc.softmax_temperature = get_real(s, "softmax_temperature", sc.softmax_temperature, w);
        sc.max_steps = get_or<int>(s, "max_steps", sc.max_steps, w);
        sc.episodes = get_or<int>(s, "episodes", sc.episodes, w);
        sc.warmup = get_or<int>(s, "warmup", sc.warmup, w);
        sc.epsilon_cap = get_real(s, "epsilon_cap", sc.epsilon_cap, w);
        sc.shaping_episodes = get_or<int>(s, "shaping_episodes", sc.shaping_episodes, w);
        sc.hidden = get_or<std::vector<int>>(s, "hidden", sc.hidden, w);
        sc.q_step_size = get_real(s, "q_step_size", sc.q_step_size, w);
        sc.phi_step_size = get_real(s, "phi_step_size", sc.phi_step_size, w);
        const auto dm = get_or<std::string>(s, "delta_mode", "primary", w);
        if (dm == "primary") sc.delta_mode = DeltaMode::primary;
        else if (dm == "per_secondary") sc.delta_mode = DeltaMode::per_secondary;
        else throw SchemaError("config: shaping.delta_mode must be 'primary' or 'per_secondary'");
        const auto be = get_or<std::string>(s, "backend", "tabular", w);
        if (be == "tabular") sc.backend = ApproxBackend::tabular;
        else if (be == "mlp") sc.backend = ApproxBackend::mlp;
        else throw SchemaError("config: shaping.backend must be 'tabular' or 'mlp'");
        sc.secondaries.clear();
        if (s.contains("secondaries")) {
            for (std::size_t i = 0; i < s.at("secondaries").size(); ++i) {
                const auto& e = s.at("secondaries")[i];
                const std::string we = "shaping.secondaries[" + std::to_string(i) + "]";
                check_keys(e, we, {"target", "budget"});
                sc.secondaries.push_back(SecondarySpec{get<std::string>(e, "target", we), get<double>(e, "budget", we)});
            }
        }
        if (s.contains("epsilon0")) {
            const auto& e0 = s.at("epsilon0");
            if (e0.is_number()) sc.epsilon0.assign(sc.secondaries.size(), e0.get<double>());
            else sc.epsilon0 = get<std::vector<double>>(s, "epsilon0", w);
        } else {
            sc.epsilon0.assign(sc.secondaries.size(), 1.0);
        }
    } else {
        cfg.shaping.epsilon0.clear();
    }
    cfg.scalarized_weights = get_or<std::vector<double>>(j, "scalarized_weights", {}, "<root>");
    if (cfg.scalarized_weights.empty()) {
        // default: weight 1 on accuracy, each secondary weighted by its initial trade-off
        cfg.scalarized_weights.push_back(1.0);
        cfg.scalarized_weights.insert(cfg.scalarized_weights.end(), cfg.shaping.epsilon0.begin(), cfg.shaping.epsilon0.end());
    }
    cfg.replicates = get_or<int>(j, "replicates", 1, "<root>");
    cfg.seed = get_or<std::uint64_t>(j, "seed", 0, "<root>");
    cfg.jobs = get_or<int>(j, "jobs", 1, "<root>");
    cfg.out = resolve(base, get_or<std::string>(j, "out", "out", "<root>"));
    cfg.reference_network = get_or<std::vector<std::string>>(j, "reference_network", {}, "<root>");
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string(), 0, std::string("invalid JSON: ") + e.what());
    }
    auto base = path.parent_path();
    if (base.empty()) base = ".";
    ExperimentConfig cfg = parse_config(j, base);
    cfg.source = path;
    return cfg;
}

/// Fully expanded config (defaults filled, paths resolved); archived with every run.
inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    using namespace detail;
    json actions = json::array();
    for (const auto& a : cfg.catalog.actions) actions.push_back(action_json(a));
    json contexts = json::array();
    for (const auto& c : cfg.contexts) contexts.push_back(context_json(c));
    json oracle{{"kind", cfg.oracle.kind}};
    if (cfg.oracle.kind == "synthetic") {
        const auto& sp = cfg.oracle.synthetic;
        json util = json::object();
        for (std::size_t i = 0; i < cfg.catalog.size(); ++i) util[cfg.catalog.actions[i].name] = sp.base_utility[i];
        json bonuses = json::array();
        for (const auto& [k, v] : sp.bonuses)
            bonuses.push_back({cfg.catalog.actions[k.first].name, cfg.catalog.actions[k.second].name, v});
        oracle.update({{"base_utility", util},
                       {"repeat_decay", sp.repeat_decay},
                       {"bonuses", bonuses},
                       {"noise_sigma", sp.noise_sigma},
                       {"cap", sp.cap},
                       {"min_depth", sp.min_depth},
                       {"seed", sp.seed}});
    } else {
        oracle["table"] = cfg.oracle.table.string();
    }
    const auto& sc = cfg.shaping;
    json secondaries = json::array();
    for (const auto& s : sc.secondaries) secondaries.push_back({{"target", s.target}, {"budget", s.budget}});
    const auto& pc = cfg.predictor.config;
    const auto& t = cfg.truth;
    return {{"schema_version", cfg.schema_version},
            {"experiment", std::string(to_string(cfg.experiment))},
            {"design_space",
             {{"input_shape", {cfg.input.channels, cfg.input.height, cfg.input.width}},
              {"max_depth", cfg.catalog.max_depth},
              {"actions", actions}}},
            {"contexts", contexts},
            {"search_context", cfg.search_context},
            {"predictor",
             {{"bags", pc.bags},
              {"rounds", pc.boost.rounds},
              {"shrinkage", pc.boost.shrinkage},
              {"max_depth", pc.boost.tree.max_depth},
              {"min_samples_leaf", pc.boost.tree.min_samples_leaf},
              {"oversample", cfg.predictor.oversample},
              {"holdout", cfg.predictor.holdout},
              {"stats", cfg.predictor.stats.string()},
              {"model", cfg.model_path().string()}}},
            {"synthetic_stats",
             {{"count", cfg.synth_count},
              {"latency_intercept", t.latency_intercept},
              {"per_kernel_sq", t.per_kernel_sq},
              {"per_channel", t.per_channel},
              {"per_output_volume", t.per_output_volume},
              {"memory_intercept", t.memory_intercept},
              {"memory_per_element", t.memory_per_element},
              {"context_multipliers", t.context_multipliers},
              {"infeasibility", t.infeasibility},
              {"memory_fraction", t.memory_fraction}}},
            {"oracle", oracle},
            {"meta", cfg.meta},
            {"shaping",
             {{"gamma", sc.gamma},
              {"beta", sc.beta},
              {"epsilon0", sc.epsilon0},
              {"epsilon_threshold", real_json(sc.epsilon_threshold)},
              {"tau", real_json(sc.tau)},
              {"softmax_temperature", sc.softmax_temperature},
              {"max_steps", sc.max_steps},
              {"episodes", sc.episodes},
              {"warmup", sc.warmup},
              {"epsilon_cap", real_json(sc.epsilon_cap)},
              {"delta_mode", sc.delta_mode == DeltaMode::primary ? "primary" : "per_secondary"},
              {"shaping_episodes", sc.shaping_episodes},
              {"backend", sc.backend == ApproxBackend::tabular ? "tabular" : "mlp"},
              {"hidden", sc.hidden},
              {"q_step_size", sc.q_step_size},
              {"phi_step_size", sc.phi_step_size},
              {"secondaries", secondaries}}},
            {"scalarized_weights", cfg.scalarized_weights},
            {"replicates", cfg.replicates},
            {"seed", cfg.seed},
            {"jobs", cfg.jobs},
            {"out", cfg.out.string()},
            {"reference_network", cfg.reference_network}};
}

}  // namespace comet
