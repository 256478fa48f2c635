#pragma once

// Chain-structured search space: neural block templates, candidate networks
// grown by appending instantiated blocks, and the per-layer feature encoding
// shared by the meta-behavior predictor and the controller.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "comet/error.hpp"
#include "comet/random.hpp"

namespace comet {

inline void log_warning(const std::string& msg) { std::clog << "[comet] warning: " << msg << '\n'; }

// Enumerators are declared in lexicographic order of their names; the one-hot
// encoding relies on that.
enum class BlockKind : std::uint8_t { conv, dense, dwconv, pool, skip };

inline constexpr std::array<std::string_view, 5> kBlockKindNames = {"conv", "dense", "dwconv", "pool", "skip"};

inline std::string_view to_string(BlockKind k) { return kBlockKindNames[static_cast<std::size_t>(k)]; }

inline std::optional<BlockKind> parse_block_kind(std::string_view s) {
    for (std::size_t i = 0; i < kBlockKindNames.size(); ++i)
        if (kBlockKindNames[i] == s) return static_cast<BlockKind>(i);
    if (s == "depthwise-conv" || s == "depthwise_conv") return BlockKind::dwconv;
    return std::nullopt;
}

struct Shape {
    int channels = 0;
    int height = 0;
    int width = 0;

    double volume() const { return double(channels) * double(height) * double(width); }
    bool operator==(const Shape&) const = default;
};

/// One instantiated block. `channels` is the block's output channel count;
/// `height`/`width` are the spatial dims of its input.
struct ArchLayerSpec {
    BlockKind kind = BlockKind::conv;
    int kernel_size = 1;
    int stride = 1;
    int padding = 0;
    double expansion_ratio = 1.0;
    bool id_skip = false;
    int channels = 1;
    int height = 1;
    int width = 1;

    bool operator==(const ArchLayerSpec&) const = default;
};

/// A catalog entry. channels == 0 means "derive from the input" (input channels
/// times expansion_ratio for conv/dense; channel-preserving kinds ignore it).
struct LayerTemplate {
    std::string name;
    BlockKind kind = BlockKind::conv;
    int kernel_size = 1;
    int stride = 1;
    int padding = 0;
    double expansion_ratio = 1.0;
    bool id_skip = false;
    int channels = 0;
};

struct ActionCatalog {
    std::vector<LayerTemplate> actions;
    int max_depth = 1;

    std::size_t size() const { return actions.size(); }

    std::optional<std::size_t> find(std::string_view name) const {
        for (std::size_t i = 0; i < actions.size(); ++i)
            if (actions[i].name == name) return i;
        return std::nullopt;
    }
};

struct ContextSpec {
    std::string name;
    double cores = 0;
    double compute_units = 0;
    double memory_mb = 0;
    double clock_freq_mhz = 0;
    double memory_bandwidth = 0;
    std::string processor_kind;
    std::map<std::string, double> task;  // boolean task flags stored as 0/1

    void validate() const {
        for (double v : {cores, compute_units, memory_mb, clock_freq_mhz, memory_bandwidth})
            if (!(v >= 0.0) || !std::isfinite(v))
                throw SchemaError("context '" + name + "': hardware features must be finite and non-negative");
        for (const auto& [k, v] : task)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw SchemaError("context '" + name + "': task feature '" + k + "' must be non-negative");
    }
};

namespace detail {

inline bool preserves_channels(BlockKind k) {
    return k == BlockKind::dwconv || k == BlockKind::pool || k == BlockKind::skip;
}

/// Empty string when `layer` is valid on input `in`, otherwise the violated constraint.
inline std::string layer_violation(const ArchLayerSpec& layer, const Shape& in) {
    if (layer.kernel_size < 1) return "kernel_size must be >= 1";
    if (layer.stride < 1) return "stride must be >= 1";
    if (layer.padding < 0) return "padding must be >= 0";
    if (!(layer.expansion_ratio > 0.0)) return "expansion_ratio must be > 0";
    if (layer.channels < 1 || layer.height < 1 || layer.width < 1)
        return "channels, height and width must be positive";
    if (layer.height != in.height || layer.width != in.width)
        return "input spatial dims " + std::to_string(layer.height) + "x" + std::to_string(layer.width) +
               " do not match incoming " + std::to_string(in.height) + "x" + std::to_string(in.width);
    if (preserves_channels(layer.kind) && layer.channels != in.channels)
        return std::string(to_string(layer.kind)) + " must preserve channels (" + std::to_string(in.channels) +
               "), got " + std::to_string(layer.channels);
    if (layer.kind == BlockKind::skip && (layer.kernel_size != 1 || layer.stride != 1 || layer.padding != 0))
        return "skip requires kernel_size 1, stride 1, padding 0";
    if (layer.kind == BlockKind::dense && (layer.kernel_size != 1 || layer.stride != 1 || layer.padding != 0))
        return "dense requires kernel_size 1, stride 1, padding 0";
    const int span = std::min(in.height, in.width) + 2 * layer.padding;
    if (layer.kernel_size > span)
        return "kernel_size " + std::to_string(layer.kernel_size) + " exceeds padded input " + std::to_string(span);
    return {};
}

}  // namespace detail

inline Shape output_shape(const ArchLayerSpec& layer) {
    if (layer.kind == BlockKind::dense) return {layer.channels, 1, 1};
    if (layer.kind == BlockKind::skip) return {layer.channels, layer.height, layer.width};
    const int oh = (layer.height + 2 * layer.padding - layer.kernel_size) / layer.stride + 1;
    const int ow = (layer.width + 2 * layer.padding - layer.kernel_size) / layer.stride + 1;
    return {layer.channels, oh, ow};
}

/// Instantiates a template on the given input; nullopt plus reason when it
/// cannot produce a valid layer there.
inline std::optional<ArchLayerSpec> instantiate(const LayerTemplate& t, const Shape& in, std::string* reason = nullptr) {
    ArchLayerSpec layer;
    layer.kind = t.kind;
    layer.kernel_size = t.kernel_size;
    layer.stride = t.stride;
    layer.padding = t.padding;
    layer.expansion_ratio = t.expansion_ratio;
    layer.id_skip = t.id_skip;
    layer.height = in.height;
    layer.width = in.width;
    if (detail::preserves_channels(t.kind))
        layer.channels = in.channels;
    else
        layer.channels = t.channels > 0 ? t.channels : static_cast<int>(std::lround(in.channels * t.expansion_ratio));
    std::string why = detail::layer_violation(layer, in);
    if (!why.empty()) {
        if (reason) *reason = std::move(why);
        return std::nullopt;
    }
    return layer;
}

/// Sentinel origin for layers that were not produced from a catalog template.
inline constexpr std::uint32_t kNoOrigin = std::numeric_limits<std::uint32_t>::max();

/// A chain of blocks applied to an input tensor. Immutable in practice: all
/// growth goes through apply_action, which returns a new value.
class CandidateNetwork {
public:
    CandidateNetwork() = default;
    explicit CandidateNetwork(Shape input) : input_(input) {}
    CandidateNetwork(Shape input, std::vector<ArchLayerSpec> layers, std::vector<std::uint32_t> origins = {})
        : input_(input), layers_(std::move(layers)), origins_(std::move(origins)) {
        origins_.resize(layers_.size(), kNoOrigin);
    }

    const Shape& input_shape() const { return input_; }
    const std::vector<ArchLayerSpec>& layers() const { return layers_; }
    /// Catalog index each layer was instantiated from (kNoOrigin otherwise).
    const std::vector<std::uint32_t>& origins() const { return origins_; }
    std::size_t depth() const { return layers_.size(); }
    bool empty() const { return layers_.empty(); }

    /// Input shape of every layer followed by the final output shape
    /// (depth + 1 entries). Throws ShapeError at the first inconsistent layer.
    std::vector<Shape> propagate() const {
        std::vector<Shape> shapes;
        shapes.reserve(layers_.size() + 1);
        shapes.push_back(input_);
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            std::string why = detail::layer_violation(layers_[i], shapes.back());
            if (!why.empty()) throw ShapeError(i, why);
            shapes.push_back(output_shape(layers_[i]));
        }
        return shapes;
    }

    void validate() const { (void)propagate(); }

    Shape output() const {
        return layers_.empty() ? input_ : output_shape(layers_.back());
    }

    CandidateNetwork appended(const ArchLayerSpec& layer, std::uint32_t origin) const {
        CandidateNetwork next = *this;
        next.layers_.push_back(layer);
        next.origins_.push_back(origin);
        return next;
    }

    bool operator==(const CandidateNetwork&) const = default;

private:
    Shape input_{};
    std::vector<ArchLayerSpec> layers_;
    std::vector<std::uint32_t> origins_;
};

/// Catalog indices whose instantiation keeps the network shape-valid and
/// within max_depth. Empty result means the state is terminal.
inline std::vector<std::size_t> legal_actions(const CandidateNetwork& net, const ActionCatalog& catalog) {
    std::vector<std::size_t> out;
    if (net.depth() >= static_cast<std::size_t>(catalog.max_depth)) return out;
    const Shape in = net.output();
    for (std::size_t i = 0; i < catalog.actions.size(); ++i)
        if (instantiate(catalog.actions[i], in)) out.push_back(i);
    return out;
}

/// Appends an already instantiated layer; the input network is untouched.
inline CandidateNetwork apply_action(const CandidateNetwork& net, const ArchLayerSpec& layer,
                                     std::uint32_t origin = kNoOrigin) {
    std::string why = detail::layer_violation(layer, net.output());
    if (!why.empty()) throw IllegalActionError("cannot append layer " + std::to_string(net.depth()) + ": " + why);
    return net.appended(layer, origin);
}

inline CandidateNetwork apply_action(const CandidateNetwork& net, const ActionCatalog& catalog, std::size_t action) {
    if (action >= catalog.size()) throw IllegalActionError("action index " + std::to_string(action) + " out of range");
    if (net.depth() >= static_cast<std::size_t>(catalog.max_depth))
        throw IllegalActionError("depth " + std::to_string(net.depth()) + " already at max_depth " +
                                 std::to_string(catalog.max_depth));
    std::string why;
    auto layer = instantiate(catalog.actions[action], net.output(), &why);
    if (!layer) throw IllegalActionError("action '" + catalog.actions[action].name + "': " + why);
    return net.appended(*layer, static_cast<std::uint32_t>(action));
}

/// Trainable parameter count, used for size ratios in reports.
inline double parameter_count(const CandidateNetwork& net) {
    const auto shapes = net.propagate();
    double total = 0.0;
    for (std::size_t i = 0; i < net.depth(); ++i) {
        const auto& l = net.layers()[i];
        const double k2 = double(l.kernel_size) * l.kernel_size;
        const double in_c = shapes[i].channels;
        switch (l.kind) {
            case BlockKind::conv: total += k2 * in_c * l.channels + l.channels; break;
            case BlockKind::dwconv: total += k2 * in_c + in_c; break;
            case BlockKind::dense: total += shapes[i].volume() * l.channels + l.channels; break;
            case BlockKind::pool:
            case BlockKind::skip: break;
        }
    }
    return total;
}

/// Column layout of an encoded layer row:
///   Type=<kind> one-hot (fixed, sorted), ten numeric architecture columns,
///   five numeric hardware columns, Processor=<level> one-hot (sorted levels),
///   task.<name> columns (sorted names).
/// Numeric column names match the stats corpus header.
class FeatureSchema {
public:
    static constexpr std::array<std::string_view, 10> kArchNumeric = {
        "Kernel Size", "Stride", "Padding", "Expansion Ratio", "Idskip",
        "Channels",    "Height", "Width",   "Input Volume",    "Output Volume"};
    static constexpr std::array<std::string_view, 5> kContextNumeric = {"Cores", "Compute Units", "Memory",
                                                                        "Clock Freq.", "Memory B/w"};
    static constexpr std::size_t kTypeWidth = kBlockKindNames.size();
    static constexpr std::size_t kArchWidth = kTypeWidth + kArchNumeric.size();
    static constexpr std::size_t kIdskipColumn = kTypeWidth + 4;

    FeatureSchema() = default;
    FeatureSchema(std::vector<std::string> processor_levels, std::vector<std::string> task_names)
        : processor_levels_(std::move(processor_levels)), task_names_(std::move(task_names)) {
        std::sort(processor_levels_.begin(), processor_levels_.end());
        processor_levels_.erase(std::unique(processor_levels_.begin(), processor_levels_.end()),
                                processor_levels_.end());
        std::sort(task_names_.begin(), task_names_.end());
        task_names_.erase(std::unique(task_names_.begin(), task_names_.end()), task_names_.end());
    }

    static FeatureSchema for_contexts(const std::vector<ContextSpec>& contexts) {
        std::vector<std::string> levels;
        std::vector<std::string> tasks;
        for (const auto& c : contexts) {
            if (!c.processor_kind.empty()) levels.push_back(c.processor_kind);
            for (const auto& [k, v] : c.task) tasks.push_back(k);
        }
        return FeatureSchema(std::move(levels), std::move(tasks));
    }

    const std::vector<std::string>& processor_levels() const { return processor_levels_; }
    const std::vector<std::string>& task_names() const { return task_names_; }

    std::size_t width() const { return kArchWidth + kContextNumeric.size() + processor_levels_.size() + task_names_.size(); }

    std::vector<std::string> columns() const {
        std::vector<std::string> cols;
        cols.reserve(width());
        for (auto k : kBlockKindNames) cols.push_back("Type=" + std::string(k));
        for (auto c : kArchNumeric) cols.emplace_back(c);
        for (auto c : kContextNumeric) cols.emplace_back(c);
        for (const auto& p : processor_levels_) cols.push_back("Processor=" + p);
        for (const auto& t : task_names_) cols.push_back("task." + t);
        return cols;
    }

    /// Columns that are copied rather than interpolated when synthesizing rows.
    bool is_categorical(std::size_t col) const {
        if (col < kTypeWidth || col == kIdskipColumn) return true;
        return col >= kArchWidth + kContextNumeric.size();
    }

    std::string fingerprint() const {
        std::string joined;
        for (const auto& c : columns()) {
            joined += c;
            joined += '\x1f';
        }
        return hex64(fnv1a64(joined));
    }

    bool operator==(const FeatureSchema&) const = default;

    /// Appends the context block (numeric, processor one-hot, tasks) to `row`.
    void encode_context(const ContextSpec& ctx, std::vector<double>& row) const {
        for (double v : {ctx.cores, ctx.compute_units, ctx.memory_mb, ctx.clock_freq_mhz, ctx.memory_bandwidth})
            row.push_back(v);
        bool matched = processor_levels_.empty() || ctx.processor_kind.empty();
        for (const auto& lvl : processor_levels_) {
            const bool hit = lvl == ctx.processor_kind;
            matched = matched || hit;
            row.push_back(hit ? 1.0 : 0.0);
        }
        if (!matched) log_warning("unseen processor kind '" + ctx.processor_kind + "' encoded as all zeros");
        for (const auto& t : task_names_) {
            auto it = ctx.task.find(t);
            row.push_back(it == ctx.task.end() ? 0.0 : it->second);
        }
    }

    void encode_layer(const ArchLayerSpec& layer, const Shape& in, const Shape& out, std::vector<double>& row) const {
        for (std::size_t k = 0; k < kTypeWidth; ++k) row.push_back(static_cast<std::size_t>(layer.kind) == k ? 1.0 : 0.0);
        row.push_back(layer.kernel_size);
        row.push_back(layer.stride);
        row.push_back(layer.padding);
        row.push_back(layer.expansion_ratio);
        row.push_back(layer.id_skip ? 1.0 : 0.0);
        row.push_back(layer.channels);
        row.push_back(layer.height);
        row.push_back(layer.width);
        row.push_back(in.volume());
        row.push_back(out.volume());
    }

private:
    std::vector<std::string> processor_levels_;
    std::vector<std::string> task_names_;
};

struct FeatureMatrix {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

/// One encoded row per layer: architecture features ++ context features.
/// Throws ShapeError naming the first inconsistent layer.
inline FeatureMatrix parse_network(const CandidateNetwork& net, const ContextSpec& ctx, const FeatureSchema& schema) {
    const auto shapes = net.propagate();
    FeatureMatrix m;
    m.columns = schema.columns();
    m.rows.reserve(net.depth());
    for (std::size_t i = 0; i < net.depth(); ++i) {
        std::vector<double> row;
        row.reserve(schema.width());
        schema.encode_layer(net.layers()[i], shapes[i], shapes[i + 1], row);
        schema.encode_context(ctx, row);
        m.rows.push_back(std::move(row));
    }
    return m;
}

inline FeatureMatrix parse_network(const CandidateNetwork& net, const ContextSpec& ctx) {
    return parse_network(net, ctx, FeatureSchema::for_contexts({ctx}));
}

inline std::size_t state_embedding_width(const ActionCatalog& catalog) {
    return FeatureSchema::kArchWidth + 2 + catalog.size() + FeatureSchema::kContextNumeric.size();
}

/// Fixed-length controller state: last layer summary, aggregates (depth,
/// cumulative output volume, per-template usage counts), and hardware context.
/// Magnitudes are squashed with log1p(x)/10.
inline std::vector<double> state_embedding(const CandidateNetwork& net, const ContextSpec& ctx,
                                           const ActionCatalog& catalog) {
    auto squash = [](double x) { return std::log1p(std::max(0.0, x)) / 10.0; };
    const auto shapes = net.propagate();
    std::vector<double> e;
    e.reserve(state_embedding_width(catalog));
    if (net.empty()) {
        e.resize(FeatureSchema::kArchWidth, 0.0);
    } else {
        std::vector<double> row;
        const std::size_t last = net.depth() - 1;
        FeatureSchema{}.encode_layer(net.layers()[last], shapes[last], shapes[last + 1], row);
        for (std::size_t i = 0; i < row.size(); ++i) e.push_back(i < FeatureSchema::kTypeWidth ? row[i] : squash(row[i]));
    }
    double cumulative = 0.0;
    for (std::size_t i = 1; i < shapes.size(); ++i) cumulative += shapes[i].volume();
    e.push_back(double(net.depth()) / std::max(1, catalog.max_depth));
    e.push_back(squash(cumulative));
    std::vector<double> counts(catalog.size(), 0.0);
    for (auto o : net.origins())
        if (o < counts.size()) counts[o] += 1.0;
    for (double c : counts) e.push_back(c / std::max(1, catalog.max_depth));
    for (double v : {ctx.cores, ctx.compute_units, ctx.memory_mb, ctx.clock_freq_mhz, ctx.memory_bandwidth})
        e.push_back(squash(v));
    return e;
}

/// Human-readable key of the chain, e.g. "conv3|pool2|conv3". Used for
/// tabular benchmark lookup.
inline std::string chain_key(const CandidateNetwork& net, const ActionCatalog& catalog) {
    std::string key;
    for (std::size_t i = 0; i < net.depth(); ++i) {
        if (i) key += '|';
        const auto o = net.origins()[i];
        key += o < catalog.size() ? catalog.actions[o].name : std::string("?");
    }
    return key;
}

}  // namespace comet
