#pragma once

// Bag-of-boosted meta-behavior predictor: a bagged ensemble whose members hold
// one boosted tree regressor per response target plus a boosted feasibility
// gate. Infeasible (architecture, context) pairs are a tagged outcome, never a
// regressed sentinel.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "comet/boosting.hpp"
#include "comet/design_space.hpp"
#include "comet/error.hpp"
#include "comet/meta_dataset.hpp"
#include "comet/random.hpp"

namespace comet {

struct PredictorConfig {
    int bags = 10;
    BoostParams boost{50, 0.1, TreeParams{4, 5}};
    std::uint64_t seed = 0;
    unsigned jobs = 1;  // members trained concurrently; does not affect the result
};

/// Feasible(values) | Infeasible.
class MetaPrediction {
public:
    static MetaPrediction infeasible() { return MetaPrediction{}; }
    static MetaPrediction feasible(std::vector<double> values) {
        MetaPrediction p;
        p.values_ = std::move(values);
        return p;
    }
    bool is_feasible() const { return values_.has_value(); }
    const std::vector<double>& values() const { return values_.value(); }

private:
    std::optional<std::vector<double>> values_;
};

class BoBModel {
public:
    static constexpr const char* kFormat = "comet.bob-model";
    static constexpr int kVersion = 1;

    struct Member {
        std::vector<BoostedRegressor> regressors;  // one per target
        BoostedRegressor gate;                     // regresses 1 = feasible, 0 = infeasible
    };

    BoBModel() = default;
    BoBModel(FeatureSchema schema, std::vector<std::string> target_names, std::vector<Member> members,
             std::set<std::string> registry)
        : schema_(std::move(schema)),
          target_names_(std::move(target_names)),
          members_(std::move(members)),
          registry_(std::move(registry)) {}

    const FeatureSchema& schema() const { return schema_; }
    const std::vector<std::string>& target_names() const { return target_names_; }
    const std::vector<Member>& members() const { return members_; }
    const std::set<std::string>& infeasible_registry() const { return registry_; }

    /// True when every fit in the ensemble (regressors and gates) has a
    /// non-increasing training loss. Loaded models carry no loss history.
    bool training_loss_monotone() const {
        for (const auto& m : members_) {
            if (!m.gate.training_loss_monotone()) return false;
            for (const auto& r : m.regressors)
                if (!r.training_loss_monotone()) return false;
        }
        return true;
    }

    std::optional<std::size_t> target_index(std::string_view name) const {
        for (std::size_t i = 0; i < target_names_.size(); ++i)
            if (target_names_[i] == name) return i;
        return std::nullopt;
    }

    /// Ensemble-mean feasibility score in [~0, ~1]; >= 0.5 passes the gate.
    double gate_score(std::span<const double> row) const {
        check_row(row);
        double s = 0.0;
        for (const auto& m : members_) s += m.gate.predict(row);
        return s / double(members_.size());
    }

    /// Per-target ensemble mean, clamped at 0, ignoring the gate.
    std::vector<double> predict_targets(std::span<const double> row) const {
        check_row(row);
        std::vector<double> out(target_names_.size(), 0.0);
        for (const auto& m : members_)
            for (std::size_t t = 0; t < out.size(); ++t) out[t] += m.regressors[t].predict(row);
        for (double& v : out) v = std::max(0.0, v / double(members_.size()));
        return out;
    }

    bool gate_passes(std::span<const double> row) const {
        if (!registry_.empty() && registry_.count(row_signature({row.begin(), row.end()}))) return false;
        return gate_score(row) >= 0.5;
    }

    MetaPrediction predict(std::span<const double> row) const {
        if (!gate_passes(row)) return MetaPrediction::infeasible();
        return MetaPrediction::feasible(predict_targets(row));
    }

    /// Checks the matrix was encoded with this model's schema.
    MetaPrediction predict(const FeatureMatrix& m, std::size_t row) const {
        check_columns(m);
        return predict(m.rows.at(row));
    }

    /// Whole-network meta-behavior: per-layer predictions summed; infeasible
    /// if any layer is.
    MetaPrediction predict_network(const CandidateNetwork& net, const ContextSpec& ctx) const {
        const FeatureMatrix m = parse_network(net, ctx, schema_);
        std::vector<double> total(target_names_.size(), 0.0);
        for (const auto& row : m.rows) {
            auto p = predict(row);
            if (!p.is_feasible()) return MetaPrediction::infeasible();
            for (std::size_t t = 0; t < total.size(); ++t) total[t] += p.values()[t];
        }
        return MetaPrediction::feasible(std::move(total));
    }

    /// Copy without target `name`'s regressors.
    BoBModel without_target(std::string_view name) const {
        auto idx = target_index(name);
        if (!idx) throw ArgumentError("unknown target '" + std::string(name) + "'");
        BoBModel m = *this;
        m.target_names_.erase(m.target_names_.begin() + static_cast<std::ptrdiff_t>(*idx));
        for (auto& mem : m.members_) mem.regressors.erase(mem.regressors.begin() + static_cast<std::ptrdiff_t>(*idx));
        return m;
    }

    nlohmann::json to_json() const {
        nlohmann::json members = nlohmann::json::array();
        for (const auto& m : members_) {
            nlohmann::json regs = nlohmann::json::array();
            for (const auto& r : m.regressors) regs.push_back(r.to_json());
            members.push_back({{"regressors", std::move(regs)}, {"gate", m.gate.to_json()}});
        }
        return {{"format", kFormat},
                {"version", kVersion},
                {"schema",
                 {{"fingerprint", schema_.fingerprint()},
                  {"processor_levels", schema_.processor_levels()},
                  {"task_names", schema_.task_names()}}},
                {"targets", target_names_},
                {"infeasible_registry", registry_},
                {"members", std::move(members)}};
    }

    static BoBModel from_json(const nlohmann::json& j) {
        if (!j.is_object() || j.value("format", std::string()) != kFormat)
            throw ParseError("model", 0, "not a " + std::string(kFormat) + " document");
        const int version = j.at("version").get<int>();
        if (version != kVersion)
            throw VersionError("model file version " + std::to_string(version) + " is not supported (expected version " +
                               std::to_string(kVersion) + ")");
        const auto& js = j.at("schema");
        FeatureSchema schema(js.at("processor_levels").get<std::vector<std::string>>(),
                             js.at("task_names").get<std::vector<std::string>>());
        if (schema.fingerprint() != js.at("fingerprint").get<std::string>())
            throw ParseError("model", 0, "schema fingerprint does not match its column lists");
        auto targets = j.at("targets").get<std::vector<std::string>>();
        std::vector<Member> members;
        for (const auto& jm : j.at("members")) {
            Member m;
            for (const auto& r : jm.at("regressors")) m.regressors.push_back(BoostedRegressor::from_json(r, schema.width()));
            if (m.regressors.size() != targets.size()) throw ParseError("model", 0, "member regressor count mismatch");
            m.gate = BoostedRegressor::from_json(jm.at("gate"), schema.width());
            members.push_back(std::move(m));
        }
        if (members.empty()) throw ParseError("model", 0, "model has no members");
        auto registry = j.at("infeasible_registry").get<std::set<std::string>>();
        return BoBModel(std::move(schema), std::move(targets), std::move(members), std::move(registry));
    }

    std::string fingerprint() const { return hex64(fnv1a64(to_json().dump())); }

private:
    void check_row(std::span<const double> row) const {
        if (row.size() != schema_.width())
            throw SchemaError("feature row width " + std::to_string(row.size()) + " does not match schema " +
                              schema_.fingerprint() + " (width " + std::to_string(schema_.width()) + ")");
    }

    void check_columns(const FeatureMatrix& m) const {
        if (m.columns != schema_.columns()) {
            std::string joined;
            for (const auto& c : m.columns) joined += c + '\x1f';
            throw SchemaError("feature schema mismatch: expected " + schema_.fingerprint() + ", got " +
                              hex64(fnv1a64(joined)));
        }
    }

    FeatureSchema schema_;
    std::vector<std::string> target_names_;
    std::vector<Member> members_;
    std::set<std::string> registry_;
};

namespace detail {

inline BoBModel::Member train_member(const MetaDataset& data, const std::vector<std::size_t>& feasible,
                                     const std::vector<std::size_t>& infeasible, const PredictorConfig& cfg,
                                     std::uint64_t member_seed) {
    Rng rng(member_seed);
    const auto& samples = data.samples();
    BoBModel::Member member;

    std::vector<const std::vector<double>*> rows;
    rows.reserve(feasible.size());
    std::vector<std::size_t> drawn;
    drawn.reserve(feasible.size());
    for (std::size_t i = 0; i < feasible.size(); ++i) drawn.push_back(feasible[uniform_index(rng, feasible.size())]);
    for (auto d : drawn) rows.push_back(&samples[d].features);
    {
        TrainingMatrix x(rows, data.schema().width());
        std::vector<double> y(drawn.size());
        for (std::size_t t = 0; t < data.target_names().size(); ++t) {
            for (std::size_t i = 0; i < drawn.size(); ++i) y[i] = samples[drawn[i]].targets[t];
            member.regressors.push_back(BoostedRegressor::fit(x, y, cfg.boost));
        }
    }

    // Gate bootstrap is stratified: the feasible/infeasible counts of the
    // source data are preserved exactly.
    rows.clear();
    std::vector<double> labels;
    for (std::size_t i = 0; i < feasible.size(); ++i) {
        rows.push_back(&samples[feasible[uniform_index(rng, feasible.size())]].features);
        labels.push_back(1.0);
    }
    for (std::size_t i = 0; i < infeasible.size(); ++i) {
        rows.push_back(&samples[infeasible[uniform_index(rng, infeasible.size())]].features);
        labels.push_back(0.0);
    }
    TrainingMatrix gx(rows, data.schema().width());
    member.gate = BoostedRegressor::fit(gx, labels, cfg.boost);
    return member;
}

}  // namespace detail

/// Trains the ensemble. Member b draws from Rng(seed + b), so the result does
/// not depend on cfg.jobs.
inline BoBModel learn_meta(const MetaDataset& data, const PredictorConfig& cfg) {
    if (cfg.bags < 1) throw ArgumentError("bag count must be >= 1");
    std::vector<std::size_t> feasible, infeasible;
    for (std::size_t i = 0; i < data.size(); ++i) (data.samples()[i].feasible ? feasible : infeasible).push_back(i);
    if (feasible.empty()) throw TrainingError("no regression targets: dataset has no feasible rows");
    const auto min_rows = static_cast<std::size_t>(std::max(2, cfg.boost.tree.min_samples_leaf));
    if (feasible.size() < min_rows)
        throw TrainingError("need at least " + std::to_string(min_rows) + " feasible rows, got " +
                            std::to_string(feasible.size()));

    std::vector<BoBModel::Member> members(static_cast<std::size_t>(cfg.bags));
    const unsigned jobs = std::max(1u, std::min<unsigned>(cfg.jobs, static_cast<unsigned>(cfg.bags)));
    if (jobs == 1) {
        for (std::size_t b = 0; b < members.size(); ++b)
            members[b] = detail::train_member(data, feasible, infeasible, cfg, cfg.seed + b);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(jobs);
        for (unsigned w = 0; w < jobs; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t b = w; b < members.size(); b += jobs)
                        members[b] = detail::train_member(data, feasible, infeasible, cfg, cfg.seed + b);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    return BoBModel(data.schema(), data.target_names(), std::move(members), data.infeasible_registry());
}

struct TargetScore {
    std::string name;
    std::optional<double> r2;  // nullopt when the holdout target has zero variance
    double rmse = 0.0;
    std::size_t count = 0;
};

struct ScoreReport {
    std::vector<TargetScore> targets;
    double gate_accuracy = 0.0;
    std::size_t rows = 0;

    nlohmann::json to_json() const {
        nlohmann::json t = nlohmann::json::array();
        for (const auto& s : targets)
            t.push_back({{"target", s.name},
                         {"r2", s.r2 ? nlohmann::json(*s.r2) : nlohmann::json(nullptr)},
                         {"rmse", s.rmse},
                         {"count", s.count}});
        return {{"targets", std::move(t)}, {"gate_accuracy", gate_accuracy}, {"rows", rows}};
    }
};

/// R^2 and RMSE per target over feasible holdout rows (ungated regressor
/// output), gate accuracy over all rows.
inline ScoreReport score(const BoBModel& model, const MetaDataset& holdout) {
    if (holdout.empty()) throw ArgumentError("holdout set is empty");
    if (!(holdout.schema() == model.schema()) || holdout.target_names() != model.target_names())
        throw SchemaError("holdout schema " + holdout.schema().fingerprint() + " does not match model schema " +
                          model.schema().fingerprint());
    const std::size_t w = model.target_names().size();
    std::vector<std::vector<double>> truth(w), pred(w);
    std::size_t gate_hits = 0;
    for (const auto& s : holdout.samples()) {
        if (model.gate_passes(s.features) == s.feasible) ++gate_hits;
        if (!s.feasible) continue;
        const auto p = model.predict_targets(s.features);
        for (std::size_t t = 0; t < w; ++t) {
            truth[t].push_back(s.targets[t]);
            pred[t].push_back(p[t]);
        }
    }
    ScoreReport rep;
    rep.rows = holdout.size();
    rep.gate_accuracy = double(gate_hits) / double(holdout.size());
    for (std::size_t t = 0; t < w; ++t) {
        TargetScore ts;
        ts.name = model.target_names()[t];
        ts.count = truth[t].size();
        if (ts.count > 0) {
            double mean = 0.0;
            for (double v : truth[t]) mean += v;
            mean /= double(ts.count);
            double ss_res = 0.0, ss_tot = 0.0;
            for (std::size_t i = 0; i < ts.count; ++i) {
                ss_res += (truth[t][i] - pred[t][i]) * (truth[t][i] - pred[t][i]);
                ss_tot += (truth[t][i] - mean) * (truth[t][i] - mean);
            }
            ts.rmse = std::sqrt(ss_res / double(ts.count));
            if (ss_tot > 0.0) ts.r2 = 1.0 - ss_res / ss_tot;
        }
        rep.targets.push_back(std::move(ts));
    }
    return rep;
}

inline void save_model(const BoBModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write model file " + path);
    out << model.to_json().dump() << '\n';
    if (!out) throw Error("failed writing model file " + path);
}

/// Parses and validates the whole document before constructing the model.
inline BoBModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path, 0, std::string("corrupt model file: ") + e.what());
    }
    try {
        return BoBModel::from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path, 0, std::string("malformed model document: ") + e.what());
    }
}

}  // namespace comet
