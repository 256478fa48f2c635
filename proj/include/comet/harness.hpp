#pragma once

// Experiment commands behind the CLI: gen-synth, train-predictor, search,
// compare. Replicates run on a bounded thread pool; each writes its own files
// and the merged report is assembled in seed order.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "comet/config.hpp"
#include "comet/eval_oracle.hpp"
#include "comet/meta_dataset.hpp"
#include "comet/meta_predictor.hpp"
#include "comet/shaping_controller.hpp"

namespace comet {

namespace fs = std::filesystem;

inline void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("failed writing " + path.string());
}

inline void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

/// Trailing moving average; entry e averages episodes max(0, e-w+1)..e.
inline std::vector<double> smooth(const std::vector<double>& v, std::size_t window = 3) {
    std::vector<double> s(v.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        acc += v[i];
        if (i >= window) acc -= v[i - window];
        s[i] = acc / double(std::min(i + 1, window));
    }
    return s;
}

/// Episodes needed to reach `fraction` of the final smoothed return (1-based),
/// or nullopt for an empty curve.
inline std::optional<std::size_t> episodes_to_plateau(const std::vector<double>& curve, double fraction = 0.95,
                                                      std::size_t window = 3) {
    if (curve.empty()) return std::nullopt;
    const auto s = smooth(curve, window);
    const double goal = fraction * s.back();
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s[i] >= goal) return i + 1;
    return s.size();
}

inline std::vector<double> normalized_returns(const SearchTrace& t) {
    std::vector<double> v;
    v.reserve(t.episodes.size());
    for (const auto& e : t.episodes) v.push_back(e.normalized_return);
    return v;
}

/// Mean over curves, truncated to the shortest.
inline std::vector<double> mean_curve(const std::vector<std::vector<double>>& curves) {
    if (curves.empty()) return {};
    std::size_t n = curves.front().size();
    for (const auto& c : curves) n = std::min(n, c.size());
    std::vector<double> m(n, 0.0);
    for (const auto& c : curves)
        for (std::size_t i = 0; i < n; ++i) m[i] += c[i];
    for (double& x : m) x /= double(curves.size());
    return m;
}

struct Stat {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation; 0 for a single value
    std::size_t n = 0;
};

inline Stat summarize(const std::vector<double>& v) {
    Stat s;
    s.n = v.size();
    if (v.empty()) return s;
    for (double x : v) s.mean += x;
    s.mean /= double(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(ss / double(v.size() - 1));
    }
    return s;
}

struct ReplicateRow {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double final_accuracy = 0.0;
    std::vector<std::pair<std::string, std::optional<double>>> final_latency;  // per context; nullopt = infeasible
    std::size_t depth = 0;
    double parameters = 0.0;
    std::optional<double> size_ratio;  // parameters / reference parameters
    std::optional<std::size_t> episodes_to_plateau;
    std::size_t episodes = 0;
    std::size_t steps = 0;
    double wall_time_s = 0.0;
    std::string chain;
    std::string fingerprint;

    nlohmann::json to_json() const {
        nlohmann::json lat = nlohmann::json::object();
        for (const auto& [c, v] : final_latency) lat[c] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
        nlohmann::json j{{"seed", seed},
                         {"ok", ok},
                         {"final_accuracy", final_accuracy},
                         {"final_latency", lat},
                         {"depth", depth},
                         {"parameters", parameters},
                         {"size_ratio", size_ratio ? nlohmann::json(*size_ratio) : nlohmann::json(nullptr)},
                         {"episodes_to_plateau",
                          episodes_to_plateau ? nlohmann::json(*episodes_to_plateau) : nlohmann::json(nullptr)},
                         {"episodes", episodes},
                         {"steps", steps},
                         {"wall_time_s", wall_time_s},
                         {"chain", chain},
                         {"fingerprint", fingerprint}};
        if (!ok) j["error"] = error;
        return j;
    }
};

struct RunReport {
    std::string controller;
    std::vector<ReplicateRow> rows;
    std::vector<double> mean_curve;

    std::vector<std::uint64_t> failed_seeds() const {
        std::vector<std::uint64_t> f;
        for (const auto& r : rows)
            if (!r.ok) f.push_back(r.seed);
        return f;
    }

    std::optional<std::size_t> plateau() const { return episodes_to_plateau(mean_curve); }

    nlohmann::json to_json() const {
        nlohmann::json rs = nlohmann::json::array();
        std::vector<double> acc, time, plat, ratio, depth;
        for (const auto& r : rows) {
            rs.push_back(r.to_json());
            if (!r.ok) continue;
            acc.push_back(r.final_accuracy);
            time.push_back(r.wall_time_s);
            depth.push_back(double(r.depth));
            if (r.episodes_to_plateau) plat.push_back(double(*r.episodes_to_plateau));
            if (r.size_ratio) ratio.push_back(*r.size_ratio);
        }
        auto st = [](const Stat& s) { return nlohmann::json{{"mean", s.mean}, {"stddev", s.stddev}, {"n", s.n}}; };
        auto p = plateau();
        return {{"controller", controller},
                {"replicates", rs},
                {"aggregate",
                 {{"final_accuracy", st(summarize(acc))},
                  {"depth", st(summarize(depth))},
                  {"size_ratio", st(summarize(ratio))},
                  {"episodes_to_plateau", st(summarize(plat))},
                  {"wall_time_s", st(summarize(time))}}},
                {"mean_curve_episodes_to_plateau", p ? nlohmann::json(*p) : nlohmann::json(nullptr)},
                {"failed_seeds", failed_seeds()}};
    }
};

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; exceptions are
/// captured per index.
inline std::vector<std::exception_ptr> parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::min<std::size_t>(std::size_t(std::max(1, jobs)), n);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return errors;
}

inline std::string describe(const std::exception_ptr& e) {
    try {
        std::rethrow_exception(e);
    } catch (const std::exception& x) {
        return x.what();
    } catch (...) {
        return "unknown error";
    }
}

using OracleVariant = std::variant<SyntheticOracle, TabularBenchOracle>;
using MetaVariant = std::variant<BoBModel, GroundTruthMeta>;

inline OracleVariant make_oracle(const ExperimentConfig& cfg) {
    if (cfg.oracle.kind == "tabular") {
        auto o = TabularBenchOracle::load(cfg.oracle.table.string(), cfg.catalog);
        const auto missing = o.missing_keys(cfg.input);
        if (!missing.empty())
            throw SchemaError(cfg.oracle.table.string() + ": benchmark table has no row for key '" + missing.front() +
                              "' (" + std::to_string(missing.size()) + " missing)");
        return o;
    }
    return SyntheticOracle(cfg.oracle.synthetic, cfg.catalog.size());
}

inline MetaVariant make_meta(const ExperimentConfig& cfg) {
    if (cfg.meta == "ground_truth") return GroundTruthMeta(cfg.truth, cfg.contexts);
    const auto path = cfg.model_path();
    if (!fs::exists(path)) throw Error("model file not found: " + path.string() + " (run train-predictor first)");
    BoBModel m = load_model(path.string());
    FeatureSchema expect = FeatureSchema::for_contexts(cfg.contexts);
    if (!(m.schema() == expect))
        throw SchemaError("model schema " + m.schema().fingerprint() + " does not match the configured contexts (" +
                          expect.fingerprint() + ")");
    return m;
}

inline std::vector<std::uint64_t> replicate_seeds(const ExperimentConfig& cfg) {
    std::vector<std::uint64_t> s;
    for (int r = 0; r < cfg.replicates; ++r) s.push_back(cfg.seed + std::uint64_t(r));
    return s;
}

template <class Meta>
ReplicateRow summarize_trace(const ExperimentConfig& cfg, const Meta& meta, const SearchTrace& t) {
    ReplicateRow row;
    row.seed = t.seed;
    row.ok = !t.error;
    if (t.error) row.error = *t.error;
    row.final_accuracy = t.final_accuracy;
    row.depth = t.final_network.depth();
    row.parameters = parameter_count(t.final_network);
    if (auto ref = cfg.reference(); ref && parameter_count(*ref) > 0.0) row.size_ratio = row.parameters / parameter_count(*ref);
    row.episodes = t.episodes.size();
    row.steps = t.records.size();
    row.episodes_to_plateau = episodes_to_plateau(normalized_returns(t));
    row.wall_time_s = t.wall_time_s;
    row.chain = chain_key(t.final_network, cfg.catalog);
    row.fingerprint = t.fingerprint();
    const auto lat = meta.target_index(kPrimaryTargetColumn);
    for (const auto& c : cfg.contexts) {
        std::optional<double> v;
        if (lat && !t.final_network.empty()) {
            const auto p = meta.predict_network(t.final_network, c);
            if (p.is_feasible()) v = p.values()[*lat];
        } else if (lat) {
            v = 0.0;
        }
        row.final_latency.emplace_back(c.name, v);
    }
    return row;
}

/// Runs one controller over all replicate seeds, writing per-replicate trace
/// and curve files under `dir`.
template <class Oracle, class Meta>
RunReport run_replicates(const ExperimentConfig& cfg, const Oracle& oracle, const Meta& meta, ControllerKind kind,
                         const fs::path& dir) {
    const auto seeds = replicate_seeds(cfg);
    const SearchSpace space = cfg.space();
    std::vector<SearchTrace> traces(seeds.size());
    auto errors = parallel_for(seeds.size(), cfg.jobs, [&](std::size_t i) {
        SearchTrace t = kind == ControllerKind::coregulated
                            ? run_search(space, oracle, meta, cfg.shaping, seeds[i])
                            : run_search_scalarized(space, oracle, meta, cfg.shaping, cfg.scalarized_weights, seeds[i]);
        const fs::path rep = dir / ("seed_" + std::to_string(seeds[i]));
        write_text(rep / "trace.csv", t.to_csv());
        write_text(rep / "curve.csv", t.curve_csv());
        traces[i] = std::move(t);
    });
    RunReport report;
    report.controller = kind == ControllerKind::coregulated ? "coregulated" : "scalarized";
    std::vector<std::vector<double>> curves;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        if (errors[i]) {
            ReplicateRow row;
            row.seed = seeds[i];
            row.error = describe(errors[i]);
            report.rows.push_back(std::move(row));
            continue;
        }
        report.rows.push_back(summarize_trace(cfg, meta, traces[i]));
        if (report.rows.back().ok) curves.push_back(normalized_returns(traces[i]));
    }
    report.mean_curve = mean_curve(curves);
    std::ostringstream os;
    os << "episode,return_normalized\n";
    for (std::size_t e = 0; e < report.mean_curve.size(); ++e) os << e << ',' << csv::format_number(report.mean_curve[e]) << '\n';
    write_text(dir / "curve_mean.csv", os.str());
    return report;
}

struct CommandResult {
    nlohmann::json report;
    std::vector<std::uint64_t> failed_seeds;
    bool ok() const { return failed_seeds.empty(); }
};

inline void archive_config(const ExperimentConfig& cfg) {
    write_json(cfg.out / "effective_config.json", config_to_json(cfg));
}

inline CommandResult cmd_gen_synth(const ExperimentConfig& cfg) {
    cfg.validate();
    archive_config(cfg);
    const auto data = gen_synth_stats(cfg.catalog, cfg.input, cfg.contexts, cfg.truth, cfg.synth_count, cfg.seed);
    const auto path = cfg.out / "stats.csv";
    fs::create_directories(cfg.out);
    write_stats(data, path.string());
    nlohmann::json rep{{"rows", data.size()},
                       {"feasible", data.feasible_count()},
                       {"infeasible", data.size() - data.feasible_count()},
                       {"path", path.string()}};
    write_json(cfg.out / "gen_synth_report.json", rep);
    return {rep, {}};
}

inline CommandResult cmd_train_predictor(const ExperimentConfig& cfg) {
    cfg.validate();
    archive_config(cfg);
    MetaDataset data = cfg.predictor.stats.empty()
                           ? gen_synth_stats(cfg.catalog, cfg.input, cfg.contexts, cfg.truth, cfg.synth_count, cfg.seed)
                           : ingest_stats(cfg.predictor.stats.string());
    auto [train, holdout] = split_holdout(data, cfg.predictor.holdout, cfg.seed);
    if (cfg.predictor.oversample > 1.0) train = oversample(train, cfg.predictor.oversample, derive_seed(cfg.seed, 7));
    PredictorConfig pc = cfg.predictor.config;
    pc.seed = cfg.seed;
    pc.jobs = cfg.jobs;
    const BoBModel model = learn_meta(train, pc);
    const auto path = cfg.model_path();
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    save_model(model, path.string());
    nlohmann::json rep = score(model, holdout).to_json();
    rep["model"] = path.string();
    rep["fingerprint"] = model.fingerprint();
    rep["train_rows"] = train.size();
    rep["holdout_rows"] = holdout.size();
    rep["training_loss_monotone"] = model.training_loss_monotone();
    write_json(cfg.out / "predictor_report.json", rep);
    return {rep, {}};
}

template <class Fn>
auto with_components(const ExperimentConfig& cfg, Fn&& fn) {
    const OracleVariant oracle = make_oracle(cfg);
    const MetaVariant meta = make_meta(cfg);
    return std::visit([&](const auto& o, const auto& m) { return fn(o, m); }, oracle, meta);
}

inline CommandResult cmd_search(const ExperimentConfig& cfg) {
    cfg.validate();
    archive_config(cfg);
    return with_components(cfg, [&](const auto& oracle, const auto& meta) {
        RunReport r = run_replicates(cfg, oracle, meta, ControllerKind::coregulated, cfg.out / "search");
        nlohmann::json rep = r.to_json();
        write_json(cfg.out / "search_report.json", rep);
        return CommandResult{rep, r.failed_seeds()};
    });
}

inline CommandResult cmd_compare(const ExperimentConfig& cfg) {
    cfg.validate();
    archive_config(cfg);
    return with_components(cfg, [&](const auto& oracle, const auto& meta) {
        RunReport co = run_replicates(cfg, oracle, meta, ControllerKind::coregulated, cfg.out / "coregulated");
        RunReport sc = run_replicates(cfg, oracle, meta, ControllerKind::scalarized, cfg.out / "scalarized");
        const auto pc = co.plateau();
        const auto ps = sc.plateau();
        nlohmann::json rep{{"coregulated", co.to_json()}, {"scalarized", sc.to_json()}};
        rep["speedup"] = pc && ps ? nlohmann::json(double(*ps) / double(*pc)) : nlohmann::json(nullptr);

        std::ostringstream os;
        os << "episode,coregulated,scalarized\n";
        const std::size_t n = std::min(co.mean_curve.size(), sc.mean_curve.size());
        for (std::size_t e = 0; e < n; ++e)
            os << e << ',' << csv::format_number(co.mean_curve[e]) << ',' << csv::format_number(sc.mean_curve[e]) << '\n';
        write_text(cfg.out / "compare_curves.csv", os.str());
        write_json(cfg.out / "compare_report.json", rep);
        auto failed = co.failed_seeds();
        for (auto s : sc.failed_seeds())
            if (std::find(failed.begin(), failed.end(), s) == failed.end()) failed.push_back(s);
        return CommandResult{rep, failed};
    });
}

inline CommandResult run_command(const ExperimentConfig& cfg) {
    switch (cfg.experiment) {
        case ExperimentKind::gen_synth: return cmd_gen_synth(cfg);
        case ExperimentKind::train_predictor: return cmd_train_predictor(cfg);
        case ExperimentKind::search: return cmd_search(cfg);
        case ExperimentKind::compare: return cmd_compare(cfg);
    }
    throw ArgumentError("unknown experiment");
}

}  // namespace comet
