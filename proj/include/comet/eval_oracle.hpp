#pragma once

// Accuracy sources standing in for on-device candidate inference, and the
// synthetic ground-truth generator for layerwise execution statistics.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "comet/csv.hpp"
#include "comet/design_space.hpp"
#include "comet/error.hpp"
#include "comet/meta_dataset.hpp"
#include "comet/meta_predictor.hpp"
#include "comet/random.hpp"

namespace comet {

template <class O>
concept AccuracyOracle = requires(const O& o, const CandidateNetwork& n) {
    { o.accuracy(n) } -> std::convertible_to<double>;
};

struct SyntheticTaskSpec {
    std::vector<double> base_utility;  // per catalog action
    double repeat_decay = 0.9;         // k-th repeat of an action earns utility * decay^k
    std::map<std::pair<std::size_t, std::size_t>, double> bonuses;  // (previous, next) adjacent pair
    double noise_sigma = 0.0;
    double cap = 1.0;
    std::size_t min_depth = 0;  // accuracy is 0 for shallower networks
    std::uint64_t seed = 0;
};

/// accuracy = clamp(sum_i u(a_i) * decay^(prior uses of a_i) + sum bonus(a_{i-1}, a_i) + noise, 0, cap).
/// Noise is a pure function of (seed, chain).
class SyntheticOracle {
public:
    SyntheticOracle(SyntheticTaskSpec spec, std::size_t n_actions) : spec_(std::move(spec)), n_actions_(n_actions) {
        if (spec_.base_utility.size() != n_actions_)
            throw ArgumentError("synthetic task needs one base utility per action (" + std::to_string(n_actions_) + ")");
        if (!(spec_.cap > 0.0 && spec_.cap <= 1.0)) throw ArgumentError("accuracy cap must be in (0, 1]");
        if (!(spec_.noise_sigma >= 0.0)) throw ArgumentError("noise sigma must be >= 0");
        if (!(spec_.repeat_decay > 0.0)) throw ArgumentError("repeat decay must be > 0");
        for (const auto& [k, v] : spec_.bonuses)
            if (k.first >= n_actions_ || k.second >= n_actions_) throw ArgumentError("bonus references unknown action");
    }

    const SyntheticTaskSpec& spec() const { return spec_; }

    double accuracy(const CandidateNetwork& net) const { return accuracy_of_chain(net.origins()); }

    double accuracy_of_chain(const std::vector<std::uint32_t>& chain) const {
        if (chain.empty() || chain.size() < spec_.min_depth) return 0.0;
        std::vector<int> uses(n_actions_, 0);
        double acc = 0.0;
        for (std::size_t i = 0; i < chain.size(); ++i) {
            const auto a = chain[i];
            if (a >= n_actions_) throw OracleError("layer " + std::to_string(i) + " was not built from the catalog");
            acc += spec_.base_utility[a] * std::pow(spec_.repeat_decay, uses[a]++);
            if (i > 0) {
                auto it = spec_.bonuses.find({chain[i - 1], a});
                if (it != spec_.bonuses.end()) acc += it->second;
            }
        }
        if (spec_.noise_sigma > 0.0) {
            std::string key;
            for (auto a : chain) key += std::to_string(a) + ',';
            Rng rng(derive_seed(spec_.seed, fnv1a64(key)));
            acc += spec_.noise_sigma * standard_normal(rng);
        }
        return std::clamp(acc, 0.0, spec_.cap);
    }

private:
    SyntheticTaskSpec spec_;
    std::size_t n_actions_;
};

/// Exact lookup over an externally supplied table. File layout:
///   key,accuracy[,latency.<context name>...]
/// where key is chain_key(): catalog action names joined by '|'.
class TabularBenchOracle {
public:
    TabularBenchOracle(const ActionCatalog& catalog, std::unordered_map<std::string, double> accuracy,
                       std::map<std::string, std::unordered_map<std::string, double>> latency = {})
        : catalog_(catalog), accuracy_(std::move(accuracy)), latency_(std::move(latency)) {}

    static TabularBenchOracle load(const std::string& path, const ActionCatalog& catalog) {
        const auto t = csv::read_file(path);
        const auto kc = t.column("key");
        const auto ac = t.column("accuracy");
        if (!kc || !ac) throw SchemaError(path + ": benchmark table needs 'key' and 'accuracy' columns");
        std::unordered_map<std::string, double> acc;
        std::map<std::string, std::unordered_map<std::string, double>> lat;
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            const auto& row = t.rows[r];
            auto v = csv::parse_number(row[*ac]);
            if (!v || *v < 0.0 || *v > 1.0)
                throw ParseError(path, t.line_numbers[r], "accuracy must be a number in [0,1]");
            const std::string key = csv::trim(row[*kc]);
            acc[key] = *v;
            for (std::size_t c = 0; c < t.header.size(); ++c) {
                if (t.header[c].rfind("latency.", 0) != 0) continue;
                auto l = csv::parse_number(row[c]);
                if (!l) throw ParseError(path, t.line_numbers[r], "column '" + t.header[c] + "': non-numeric value");
                lat[t.header[c].substr(8)][key] = *l;
            }
        }
        return TabularBenchOracle(catalog, std::move(acc), std::move(lat));
    }

    double accuracy(const CandidateNetwork& net) const {
        if (net.empty()) return 0.0;
        const std::string key = chain_key(net, catalog_);
        auto it = accuracy_.find(key);
        if (it == accuracy_.end()) throw OracleError("benchmark table has no row for key '" + key + "'");
        return it->second;
    }

    double latency(const CandidateNetwork& net, const std::string& context) const {
        const std::string key = chain_key(net, catalog_);
        auto c = latency_.find(context);
        if (c == latency_.end()) throw OracleError("benchmark table has no latency column for context '" + context + "'");
        auto it = c->second.find(key);
        if (it == c->second.end()) throw OracleError("benchmark table has no row for key '" + key + "'");
        return it->second;
    }

    /// Keys of legal networks (depth >= 1) missing from the table.
    std::vector<std::string> missing_keys(const Shape& input) const {
        std::vector<std::string> missing;
        std::vector<CandidateNetwork> frontier{CandidateNetwork(input)};
        while (!frontier.empty()) {
            CandidateNetwork net = std::move(frontier.back());
            frontier.pop_back();
            for (auto a : legal_actions(net, catalog_)) {
                auto next = apply_action(net, catalog_, a);
                const auto key = chain_key(next, catalog_);
                if (!accuracy_.count(key)) missing.push_back(key);
                frontier.push_back(std::move(next));
            }
        }
        return missing;
    }

private:
    ActionCatalog catalog_;
    std::unordered_map<std::string, double> accuracy_;
    std::map<std::string, std::unordered_map<std::string, double>> latency_;
};

inline constexpr std::string_view kMemoryTargetColumn = "Peak Memory";

/// Ground truth for synthetic layerwise statistics:
///   latency_ms = (intercept + k^2 * per_kernel_sq + channels * per_channel
///                 + output_volume * per_output_volume) * multiplier[context]
///   memory_mb  = memory_intercept + (input_volume + output_volume) * memory_per_element
/// A row is infeasible when memory_mb > memory_fraction * context.memory_mb.
struct TrueCostModel {
    double latency_intercept = 0.05;
    double per_kernel_sq = 0.02;
    double per_channel = 0.004;
    double per_output_volume = 2e-5;
    double memory_intercept = 0.02;
    double memory_per_element = 4e-6;
    std::vector<double> context_multipliers;  // one per context; empty means all 1
    bool infeasibility = true;
    double memory_fraction = 2e-4;

    double multiplier(std::size_t ctx) const {
        return context_multipliers.empty() ? 1.0 : context_multipliers.at(ctx);
    }

    double latency(const ArchLayerSpec& l, const Shape& out, std::size_t ctx) const {
        const double k2 = double(l.kernel_size) * l.kernel_size;
        return (latency_intercept + per_kernel_sq * k2 + per_channel * l.channels + per_output_volume * out.volume()) *
               multiplier(ctx);
    }

    double memory(const Shape& in, const Shape& out) const {
        return memory_intercept + memory_per_element * (in.volume() + out.volume());
    }

    bool feasible(const Shape& in, const Shape& out, const ContextSpec& ctx) const {
        return !infeasibility || memory(in, out) <= memory_fraction * ctx.memory_mb;
    }
};

/// The cost model itself as a meta-behavior source: per-layer truth summed
/// over layers, infeasible when any layer is.
class GroundTruthMeta {
public:
    GroundTruthMeta(TrueCostModel truth, std::vector<ContextSpec> contexts)
        : truth_(std::move(truth)), contexts_(std::move(contexts)) {
        if (!truth_.context_multipliers.empty() && truth_.context_multipliers.size() != contexts_.size())
            throw ArgumentError("need one context multiplier per context");
    }

    MetaPrediction predict_network(const CandidateNetwork& net, const ContextSpec& ctx) const {
        std::size_t ci = contexts_.size();
        for (std::size_t i = 0; i < contexts_.size(); ++i)
            if (contexts_[i].name == ctx.name) ci = i;
        if (ci == contexts_.size()) throw OracleError("unknown context '" + ctx.name + "'");
        const auto shapes = net.propagate();
        double lat = 0.0, mem = 0.0;
        for (std::size_t i = 0; i < net.depth(); ++i) {
            if (!truth_.feasible(shapes[i], shapes[i + 1], ctx)) return MetaPrediction::infeasible();
            lat += truth_.latency(net.layers()[i], shapes[i + 1], ci);
            mem += truth_.memory(shapes[i], shapes[i + 1]);
        }
        return MetaPrediction::feasible({lat, mem});
    }

    std::optional<std::size_t> target_index(std::string_view name) const {
        if (name == kPrimaryTargetColumn) return 0;
        if (name == kMemoryTargetColumn) return 1;
        return std::nullopt;
    }

private:
    TrueCostModel truth_;
    std::vector<ContextSpec> contexts_;
};

/// Uniformly random legal chain of the given depth (shorter if a dead end is hit).
inline CandidateNetwork random_network(const ActionCatalog& catalog, const Shape& input, std::size_t depth, Rng& rng) {
    CandidateNetwork net(input);
    for (std::size_t d = 0; d < depth; ++d) {
        const auto legal = legal_actions(net, catalog);
        if (legal.empty()) break;
        net = apply_action(net, catalog, legal[uniform_index(rng, legal.size())]);
    }
    return net;
}

/// Emits exactly `count` layer rows from random networks on random contexts.
/// Targets: "Execution time" (ms) and "Peak Memory" (MB).
inline MetaDataset gen_synth_stats(const ActionCatalog& catalog, const Shape& input,
                                   const std::vector<ContextSpec>& contexts, const TrueCostModel& truth,
                                   std::size_t count, std::uint64_t seed) {
    if (count < 1) throw ArgumentError("count must be >= 1");
    if (contexts.empty()) throw ArgumentError("at least one context is required");
    if (!truth.context_multipliers.empty() && truth.context_multipliers.size() != contexts.size())
        throw ArgumentError("need one context multiplier per context");
    if (catalog.max_depth < 1 || catalog.actions.empty()) throw ArgumentError("catalog is empty");
    for (const auto& c : contexts) c.validate();

    const FeatureSchema schema = FeatureSchema::for_contexts(contexts);
    MetaDataset data(schema, {std::string(kPrimaryTargetColumn), std::string(kMemoryTargetColumn)});
    Rng rng(seed);
    while (data.size() < count) {
        const std::size_t ci = uniform_index(rng, contexts.size());
        const std::size_t depth = 1 + uniform_index(rng, std::uint64_t(catalog.max_depth));
        const CandidateNetwork net = random_network(catalog, input, depth, rng);
        if (net.empty()) throw ArgumentError("no legal action from the input shape");
        const auto shapes = net.propagate();
        const auto rows = parse_network(net, contexts[ci], schema).rows;
        for (std::size_t i = 0; i < rows.size() && data.size() < count; ++i) {
            MetaSample s;
            s.features = rows[i];
            s.feasible = truth.feasible(shapes[i], shapes[i + 1], contexts[ci]);
            if (s.feasible)
                s.targets = {truth.latency(net.layers()[i], shapes[i + 1], ci), truth.memory(shapes[i], shapes[i + 1])};
            data.add(std::move(s));
        }
    }
    return data;
}

}  // namespace comet
