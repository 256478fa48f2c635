#pragma once

// Layerwise execution statistics: typed samples, the infeasible registry,
// CSV ingestion/export and the interpolating oversampler.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "comet/csv.hpp"
#include "comet/design_space.hpp"
#include "comet/error.hpp"
#include "comet/random.hpp"

namespace comet {

inline constexpr std::string_view kPrimaryTargetColumn = "Execution time";
inline constexpr std::string_view kFeasibleColumn = "feasible";
inline constexpr std::string_view kProcessorColumn = "Processor";
inline constexpr std::string_view kTaskPrefix = "task.";

/// One encoded row. Infeasible rows carry no targets at all.
struct MetaSample {
    std::vector<double> features;
    std::vector<double> targets;
    bool feasible = true;
};

/// "<arch columns>|<context columns>" with exact number formatting; identifies
/// an (architecture, context) pair in the infeasible registry.
inline std::string row_signature(const std::vector<double>& features) {
    std::string sig;
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (i == FeatureSchema::kArchWidth)
            sig += '|';
        else if (i)
            sig += ',';
        sig += csv::format_number(features[i]);
    }
    return sig;
}

class MetaDataset {
public:
    MetaDataset() = default;
    MetaDataset(FeatureSchema schema, std::vector<std::string> target_names)
        : schema_(std::move(schema)), target_names_(std::move(target_names)) {}

    const FeatureSchema& schema() const { return schema_; }
    const std::vector<std::string>& target_names() const { return target_names_; }
    const std::vector<MetaSample>& samples() const { return samples_; }
    const std::set<std::string>& infeasible_registry() const { return registry_; }
    std::size_t size() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }

    std::size_t feasible_count() const {
        return static_cast<std::size_t>(
            std::count_if(samples_.begin(), samples_.end(), [](const MetaSample& s) { return s.feasible; }));
    }

    void add(MetaSample s) {
        if (s.features.size() != schema_.width())
            throw SchemaError("sample has " + std::to_string(s.features.size()) + " features, schema expects " +
                              std::to_string(schema_.width()));
        if (s.feasible) {
            if (s.targets.size() != target_names_.size())
                throw SchemaError("feasible sample needs " + std::to_string(target_names_.size()) + " targets");
            for (double t : s.targets)
                if (!std::isfinite(t) || t < 0.0) throw SchemaError("feasible targets must be finite and >= 0");
        } else {
            if (!s.targets.empty()) throw SchemaError("infeasible sample must not carry targets");
            registry_.insert(row_signature(s.features));
        }
        samples_.push_back(std::move(s));
    }

private:
    FeatureSchema schema_;
    std::vector<std::string> target_names_;
    std::vector<MetaSample> samples_;
    std::set<std::string> registry_;
};

namespace detail {

inline constexpr std::array<std::string_view, 17> kRequiredStatsColumns = {
    "Type",         "Kernel Size",   "Stride", "Padding",        "Expansion Ratio", "Idskip",
    "Channels",     "Height",        "Width",  "Input Volume",   "Output Volume",   "Execution time",
    "Cores",        "Compute Units", "Memory", "Clock Freq.",    "Memory B/w"};

inline bool is_known_column(std::string_view c) {
    if (c == kFeasibleColumn || c == kProcessorColumn || c.substr(0, kTaskPrefix.size()) == kTaskPrefix) return true;
    return std::find(kRequiredStatsColumns.begin(), kRequiredStatsColumns.end(), c) != kRequiredStatsColumns.end();
}

}  // namespace detail

/// Reads a stats corpus. Required: the 17 attribute columns. Optional:
/// `Processor`, `task.<name>`, `feasible` (0/1, default 1). Any other column
/// is an additional target. Throws SchemaError / ParseError with locations.
inline MetaDataset ingest_stats(const std::string& path) {
    const csv::Table table = csv::read_file(path);
    if (table.header.empty()) throw SchemaError(path + ": empty file (no header)");
    for (auto req : detail::kRequiredStatsColumns)
        if (!table.column(req)) throw SchemaError(path + ": missing required column '" + std::string(req) + "'");

    std::vector<std::size_t> target_cols{*table.column(kPrimaryTargetColumn)};
    std::vector<std::string> target_names{std::string(kPrimaryTargetColumn)};
    std::vector<std::string> task_names;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        const auto& h = table.header[c];
        if (h.substr(0, kTaskPrefix.size()) == kTaskPrefix) task_names.push_back(h.substr(kTaskPrefix.size()));
        if (!detail::is_known_column(h)) {
            target_cols.push_back(c);
            target_names.push_back(h);
        }
    }
    const auto proc_col = table.column(kProcessorColumn);
    const auto feas_col = table.column(kFeasibleColumn);

    std::vector<std::string> levels;
    if (proc_col)
        for (const auto& r : table.rows)
            if (auto v = csv::trim(r[*proc_col]); !v.empty()) levels.push_back(v);
    FeatureSchema schema(levels, task_names);
    MetaDataset data(schema, target_names);

    for (std::size_t ri = 0; ri < table.rows.size(); ++ri) {
        const auto& r = table.rows[ri];
        const std::size_t line = table.line_numbers[ri];
        auto num = [&](std::string_view col) {
            const std::size_t c = *table.column(col);
            auto v = csv::parse_number(r[c]);
            if (!v || !std::isfinite(*v))
                throw ParseError(path, line, "column '" + std::string(col) + "': non-numeric value '" + r[c] + "'");
            return *v;
        };
        bool feasible = true;
        if (feas_col) {
            const std::string f = csv::trim(r[*feas_col]);
            if (f == "0" || f == "false")
                feasible = false;
            else if (f != "1" && f != "true" && !f.empty())
                throw ParseError(path, line, "column 'feasible' must be 0 or 1, got '" + f + "'");
        }
        const std::string type = csv::trim(r[*table.column("Type")]);
        auto kind = parse_block_kind(type);
        if (!kind) throw ParseError(path, line, "column 'Type': unknown block type '" + type + "'");

        MetaSample s;
        s.feasible = feasible;
        s.features.reserve(schema.width());
        for (std::size_t k = 0; k < FeatureSchema::kTypeWidth; ++k)
            s.features.push_back(static_cast<std::size_t>(*kind) == k ? 1.0 : 0.0);
        for (auto col : FeatureSchema::kArchNumeric) s.features.push_back(num(col));
        for (auto col : FeatureSchema::kContextNumeric) s.features.push_back(num(col));
        const std::string proc = proc_col ? csv::trim(r[*proc_col]) : std::string();
        for (const auto& lvl : schema.processor_levels()) s.features.push_back(lvl == proc ? 1.0 : 0.0);
        for (const auto& t : schema.task_names()) s.features.push_back(num("task." + t));

        if (feasible) {
            for (std::size_t ti = 0; ti < target_cols.size(); ++ti) {
                auto v = csv::parse_number(r[target_cols[ti]]);
                if (!v || !std::isfinite(*v) || *v < 0.0)
                    throw ParseError(path, line,
                                     "target '" + target_names[ti] + "': expected a finite non-negative number, got '" +
                                         r[target_cols[ti]] + "'");
                s.targets.push_back(*v);
            }
        }
        data.add(std::move(s));
    }
    return data;
}

/// Inverse of ingest_stats (same column order as the attribute list).
inline void write_stats(const MetaDataset& data, const std::string& path) {
    const auto& schema = data.schema();
    std::vector<std::string> header(detail::kRequiredStatsColumns.begin(), detail::kRequiredStatsColumns.end());
    if (!schema.processor_levels().empty()) header.emplace_back(kProcessorColumn);
    for (const auto& t : schema.task_names()) header.push_back(std::string(kTaskPrefix) + t);
    for (std::size_t t = 1; t < data.target_names().size(); ++t) header.push_back(data.target_names()[t]);
    header.emplace_back(kFeasibleColumn);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    out << csv::join(header) << '\n';
    const std::size_t ctx0 = FeatureSchema::kArchWidth;
    const std::size_t proc0 = ctx0 + FeatureSchema::kContextNumeric.size();
    const std::size_t task0 = proc0 + schema.processor_levels().size();
    for (const auto& s : data.samples()) {
        std::vector<std::string> f;
        std::size_t kind = 0;
        for (std::size_t k = 0; k < FeatureSchema::kTypeWidth; ++k)
            if (s.features[k] > s.features[kind]) kind = k;
        f.emplace_back(kBlockKindNames[kind]);
        for (std::size_t i = FeatureSchema::kTypeWidth; i < ctx0; ++i) f.push_back(csv::format_number(s.features[i]));
        f.push_back(s.feasible ? csv::format_number(s.targets[0]) : std::string());
        for (std::size_t i = ctx0; i < proc0; ++i) f.push_back(csv::format_number(s.features[i]));
        if (!schema.processor_levels().empty()) {
            std::string proc;
            for (std::size_t i = 0; i < schema.processor_levels().size(); ++i)
                if (s.features[proc0 + i] > 0.5) proc = schema.processor_levels()[i];
            f.push_back(proc);
        }
        for (std::size_t i = 0; i < schema.task_names().size(); ++i) f.push_back(csv::format_number(s.features[task0 + i]));
        for (std::size_t t = 1; t < data.target_names().size(); ++t)
            f.push_back(s.feasible ? csv::format_number(s.targets[t]) : std::string());
        f.emplace_back(s.feasible ? "1" : "0");
        out << csv::join(f) << '\n';
    }
}

/// Interpolating oversampler for feasible rows. Adds round((factor - 1) * n)
/// synthetic rows, each a convex combination of a random feasible row and one
/// of its k nearest feasible neighbours (weight u ~ U(0,1) open); categorical
/// columns are copied from whichever parent the synthetic point is nearer to.
inline MetaDataset oversample(const MetaDataset& data, double factor, std::uint64_t seed, std::size_t k_neighbors = 5) {
    if (!(factor >= 1.0) || !std::isfinite(factor)) throw ArgumentError("oversample factor must be >= 1");
    std::vector<std::size_t> feasible;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (data.samples()[i].feasible) feasible.push_back(i);
    if (feasible.size() < 2) throw ArgumentError("oversample needs at least 2 feasible samples");

    MetaDataset out = data;
    const auto extra = static_cast<std::size_t>(std::llround((factor - 1.0) * double(feasible.size())));
    if (extra == 0) return out;

    const auto& schema = data.schema();
    const std::size_t width = schema.width();
    auto distance = [&](const MetaSample& a, const MetaSample& b) {
        double d = 0.0;
        for (std::size_t c = 0; c < width; ++c) {
            const double x = std::log1p(std::abs(a.features[c])) - std::log1p(std::abs(b.features[c]));
            d += x * x;
        }
        return d;
    };

    Rng rng(seed);
    const std::size_t k = std::min(k_neighbors, feasible.size() - 1);
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t n = 0; n < extra; ++n) {
        const std::size_t ia = feasible[uniform_index(rng, feasible.size())];
        const MetaSample& a = data.samples()[ia];
        dist.clear();
        for (std::size_t j : feasible)
            if (j != ia) dist.emplace_back(distance(a, data.samples()[j]), j);
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        const MetaSample& b = data.samples()[dist[uniform_index(rng, k)].second];
        const double u = uniform_open01(rng);
        const MetaSample& nearer = u < 0.5 ? a : b;

        MetaSample s;
        s.feasible = true;
        s.features.resize(width);
        for (std::size_t c = 0; c < width; ++c)
            s.features[c] = schema.is_categorical(c) ? nearer.features[c] : a.features[c] + u * (b.features[c] - a.features[c]);
        s.targets.resize(a.targets.size());
        for (std::size_t t = 0; t < a.targets.size(); ++t) s.targets[t] = a.targets[t] + u * (b.targets[t] - a.targets[t]);
        out.add(std::move(s));
    }
    return out;
}

/// Deterministic shuffled split; returns {train, holdout}.
inline std::pair<MetaDataset, MetaDataset> split_holdout(const MetaDataset& data, double holdout_fraction,
                                                         std::uint64_t seed) {
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) throw ArgumentError("holdout_fraction must be in (0,1)");
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
    const auto n_hold = static_cast<std::size_t>(std::llround(holdout_fraction * double(data.size())));
    MetaDataset train(data.schema(), data.target_names());
    MetaDataset hold(data.schema(), data.target_names());
    for (std::size_t i = 0; i < idx.size(); ++i) (i < n_hold ? hold : train).add(data.samples()[idx[i]]);
    return {std::move(train), std::move(hold)};
}

}  // namespace comet
