#pragma once

// Co-regulated shaping controller.
//
// Each step grows the candidate network by one block, scores it with the
// accuracy oracle (primary reward) and the meta-behavior source (secondary
// rewards), then:
//   * moves every potential Phi_i toward r_S^i + gamma * Phi_i(s', a')      (on-policy a')
//   * updates each trade-off eps_i <- eps_i * exp(Delta_i) while above the
//     threshold, 0 (absorbing) otherwise
//   * moves Q toward r_P + gamma * max_a' Q(s', a') + sum_i eps_i * Phi_i(s, a)
// Actions are drawn from a softmax over Q + sum_i eps_i * Phi_i.
//
// The scalarized baseline runs the same loop with no potentials and the
// single reward w_0 * r_P + sum_i w_i * r_S^i.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "comet/csv.hpp"
#include "comet/design_space.hpp"
#include "comet/error.hpp"
#include "comet/eval_oracle.hpp"
#include "comet/function_approx.hpp"
#include "comet/meta_predictor.hpp"
#include "comet/random.hpp"

namespace comet {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class DeltaMode { primary, per_secondary };
enum class ApproxBackend { tabular, mlp };
enum class ControllerKind { coregulated, scalarized };

/// Secondary reward i is 1 - clamp(metric / budget, 0, 1) for the named
/// meta-behavior target, so larger is better and the scale matches accuracy.
struct SecondarySpec {
    std::string target;
    double budget = 1.0;
};

struct ShapingConfig {
    double gamma = 0.9;
    double beta = 0.5;
    std::vector<double> epsilon0{1.0};  // one per secondary
    double epsilon_threshold = 0.01;
    double tau = 1e-3;
    double softmax_temperature = 0.2;
    int max_steps = 0;  // per episode; 0 means the catalog's max_depth
    int episodes = 100;
    int warmup = 3;
    double epsilon_cap = kInf;
    DeltaMode delta_mode = DeltaMode::primary;
    int shaping_episodes = -1;  // after this many episodes eps is forced to 0; < 0 disables
    ApproxBackend backend = ApproxBackend::tabular;
    std::vector<int> hidden{32, 32};
    double q_step_size = 0.01;
    double phi_step_size = 0.1;
    std::vector<SecondarySpec> secondaries;

    void validate() const {
        if (!(gamma > 0.0 && gamma < 1.0)) throw ArgumentError("gamma must be in (0, 1)");
        if (!(beta > 0.0)) throw ArgumentError("beta must be > 0");
        if (!(epsilon_threshold > 0.0)) throw ArgumentError("epsilon_threshold must be > 0");
        if (epsilon0.size() != secondaries.size())
            throw ArgumentError("epsilon0 needs one entry per secondary (" + std::to_string(secondaries.size()) + ")");
        for (double e : epsilon0) {
            if (!(e >= 0.0) || !std::isfinite(e)) throw ArgumentError("epsilon0 entries must be finite and >= 0");
            if (e > 0.0 && !(epsilon_threshold < e)) throw ArgumentError("epsilon_threshold must be below epsilon0");
        }
        if (std::isnan(tau)) throw ArgumentError("tau must not be NaN");
        if (!(softmax_temperature > 0.0)) throw ArgumentError("softmax_temperature must be > 0");
        if (max_steps < 0) throw ArgumentError("max_steps must be >= 0");
        if (episodes < 1) throw ArgumentError("episodes must be >= 1");
        if (warmup < 1) throw ArgumentError("warmup must be >= 1");
        if (!(epsilon_cap > 0.0)) throw ArgumentError("epsilon_cap must be > 0");
        if (!(q_step_size > 0.0) || !(phi_step_size > 0.0)) throw ArgumentError("step sizes must be > 0");
        for (int h : hidden)
            if (h < 1) throw ArgumentError("hidden widths must be positive");
        for (const auto& s : secondaries)
            if (!(s.budget > 0.0)) throw ArgumentError("secondary '" + s.target + "' needs a positive budget");
    }
};

struct SearchSpace {
    ActionCatalog catalog;
    Shape input;
    ContextSpec context;
};

template <class M>
concept MetaSource = requires(const M& m, const CandidateNetwork& n, const ContextSpec& c, std::string_view name) {
    { m.predict_network(n, c) } -> std::same_as<MetaPrediction>;
    { m.target_index(name) } -> std::same_as<std::optional<std::size_t>>;
};

inline double epsilon_update(double eps, double delta, double threshold) {
    return eps > threshold ? eps * std::exp(delta) : 0.0;
}

inline double normalize_secondary(double metric, double budget) {
    return 1.0 - std::clamp(metric / budget, 0.0, 1.0);
}

inline std::vector<double> softmax(std::span<const double> scores, double temperature) {
    if (scores.empty()) throw TerminalStateError("softmax over an empty action set");
    const double top = *std::max_element(scores.begin(), scores.end());
    std::vector<double> p(scores.size());
    double z = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) z += (p[i] = std::exp((scores[i] - top) / temperature));
    for (double& v : p) v /= z;
    return p;
}

/// One potential update: Phi(s,a) += beta * (r_s + gamma * Phi(s',a') - Phi(s,a)),
/// with Phi(s',a') = 0 when s' is terminal (no a').
inline ValueApprox potential_update(ValueApprox phi, const Observation& s, std::size_t a, const Observation& s_next,
                                    std::optional<std::size_t> a_next, double r_s, double beta, double gamma) {
    if (!std::isfinite(r_s)) throw ArgumentError("non-finite secondary reward");
    const double current = phi.value(s, a);
    const double next = a_next ? phi.value(s_next, *a_next) : 0.0;
    const double td = r_s + gamma * next - current;
    phi.update(s, a, current + beta * td);
    return phi;
}

struct ShapingState {
    ValueApprox q;
    std::vector<ValueApprox> phi;
    std::vector<double> epsilons;
    double last_primary = 0.0;
    std::vector<double> last_secondary;
    std::uint64_t step = 0;     // global step counter
    std::uint64_t episode = 0;  // completed episodes
    Rng rng;
};

/// Q(s,a) + sum_i eps_i * Phi_i(s,a)
inline double shaped_score(const ShapingState& st, const Observation& s, std::size_t a) {
    double v = st.q.value(s, a);
    for (std::size_t i = 0; i < st.phi.size(); ++i) v += st.epsilons[i] * st.phi[i].value(s, a);
    return v;
}

inline double q_target(const ShapingState& st, const Observation& s, std::size_t a, const Observation& s_next,
                       double r_p, std::span<const std::size_t> legal_next, double gamma) {
    if (!std::isfinite(r_p)) throw ArgumentError("non-finite primary reward");
    double best = 0.0;
    if (!legal_next.empty()) {
        best = -kInf;
        for (auto a2 : legal_next) best = std::max(best, st.q.value(s_next, a2));
    }
    double target = r_p + gamma * best;
    for (std::size_t i = 0; i < st.phi.size(); ++i) target += st.epsilons[i] * st.phi[i].value(s, a);
    return target;
}

/// Tabular backend: Q(s,a) <- Q + r_P + [gamma max Q(s',.) - Q] + sum eps_i Phi_i(s,a).
inline ShapingState q_update(ShapingState st, const Observation& s, std::size_t a, const Observation& s_next, double r_p,
                             std::span<const std::size_t> legal_next, double gamma) {
    const double target = q_target(st, s, a, s_next, r_p, legal_next, gamma);
    st.q.update(s, a, target);
    return st;
}

/// Softmax draw over shaped scores restricted to `legal`; consumes one
/// uniform from the state's RNG.
inline std::size_t select_action(ShapingState& st, const Observation& s, std::span<const std::size_t> legal,
                                 double temperature) {
    if (legal.empty()) throw TerminalStateError("no legal action: state is terminal");
    std::vector<double> scores;
    scores.reserve(legal.size());
    for (auto a : legal) scores.push_back(shaped_score(st, s, a));
    const auto p = softmax(scores, temperature);
    const double u = uniform01(st.rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        acc += p[i];
        if (u < acc) return legal[i];
    }
    return legal.back();
}

struct StepRecord {
    std::uint64_t episode = 0;
    std::uint64_t step = 0;
    std::uint64_t step_in_episode = 0;
    std::vector<double> state;  // embedding of s
    std::size_t action = 0;
    double primary = 0.0;
    std::vector<double> secondary;
    bool infeasible = false;
    std::vector<double> epsilons;  // after this step's update
    double delta = 0.0;            // primary growth used by the eps update (0 at the first step)
    double delta_stop = kInf;      // growth within the episode (+inf at its first step)
    double q_target = 0.0;
    std::vector<double> phi;  // Phi_i(s, a) after this step's update
    double reward = 0.0;      // scalar reward fed to Q (r_P, or the weighted sum for the baseline)
    double cumulative_return = 0.0;
};

struct EpisodeSummary {
    std::uint64_t episode = 0;
    std::size_t steps = 0;
    double primary_return = 0.0;
    double normalized_return = 0.0;
    std::vector<double> epsilons;
    double last_delta = kInf;
};

struct SearchTrace {
    ControllerKind kind = ControllerKind::coregulated;
    std::uint64_t seed = 0;
    std::size_t secondary_count = 0;
    std::size_t potential_count = 0;
    std::vector<StepRecord> records;
    std::vector<EpisodeSummary> episodes;
    CandidateNetwork final_network;
    double final_accuracy = 0.0;
    double wall_time_s = 0.0;
    std::optional<std::string> error;

    std::vector<std::uint32_t> greedy_chain() const { return final_network.origins(); }

    std::string to_csv() const {
        std::ostringstream os;
        std::vector<std::string> h{"episode", "step", "step_in_episode", "action", "primary"};
        for (std::size_t i = 1; i <= secondary_count; ++i) h.push_back("secondary_" + std::to_string(i));
        h.emplace_back("infeasible");
        for (std::size_t i = 1; i <= potential_count; ++i) h.push_back("epsilon_" + std::to_string(i));
        h.insert(h.end(), {"delta", "delta_stop", "reward", "q_target"});
        for (std::size_t i = 1; i <= potential_count; ++i) h.push_back("phi_" + std::to_string(i));
        h.insert(h.end(), {"cumulative_return", "state"});
        os << csv::join(h) << '\n';
        for (const auto& r : records) {
            std::vector<std::string> f{std::to_string(r.episode), std::to_string(r.step), std::to_string(r.step_in_episode),
                                       std::to_string(r.action), csv::format_number(r.primary)};
            for (double v : r.secondary) f.push_back(csv::format_number(v));
            f.emplace_back(r.infeasible ? "1" : "0");
            for (double v : r.epsilons) f.push_back(csv::format_number(v));
            f.push_back(csv::format_number(r.delta));
            f.push_back(csv::format_number(r.delta_stop));
            f.push_back(csv::format_number(r.reward));
            f.push_back(csv::format_number(r.q_target));
            for (double v : r.phi) f.push_back(csv::format_number(v));
            f.push_back(csv::format_number(r.cumulative_return));
            std::string st;
            for (std::size_t i = 0; i < r.state.size(); ++i) {
                if (i) st += ';';
                st += csv::format_number(r.state[i]);
            }
            f.push_back(std::move(st));
            os << csv::join(f) << '\n';
        }
        return os.str();
    }

    /// Per-episode learning curve: episode,return_normalized,epsilon_1..k,delta
    std::string curve_csv() const { return curve_to_csv(episodes, potential_count); }

    static std::string curve_to_csv(const std::vector<EpisodeSummary>& eps, std::size_t k) {
        std::ostringstream os;
        std::vector<std::string> h{"episode", "return_normalized"};
        for (std::size_t i = 1; i <= k; ++i) h.push_back("epsilon_" + std::to_string(i));
        h.emplace_back("delta");
        os << csv::join(h) << '\n';
        for (const auto& e : eps) {
            std::vector<std::string> f{std::to_string(e.episode), csv::format_number(e.normalized_return)};
            for (std::size_t i = 0; i < k; ++i) f.push_back(i < e.epsilons.size() ? csv::format_number(e.epsilons[i]) : "");
            f.push_back(csv::format_number(e.last_delta));
            os << csv::join(f) << '\n';
        }
        return os.str();
    }

    /// Identity of the trajectory (wall time excluded).
    std::string fingerprint() const {
        std::string chain;
        for (auto a : greedy_chain()) chain += std::to_string(a) + ',';
        return hex64(fnv1a64(chain, fnv1a64(to_csv())));
    }
};

/// One controller run; owns the learning state and can be checkpointed at
/// episode boundaries.
template <AccuracyOracle Oracle, MetaSource Meta>
class SearchRun {
public:
    static constexpr const char* kCheckpointFormat = "comet.checkpoint";
    static constexpr int kCheckpointVersion = 1;

    SearchRun(const SearchSpace& space, const Oracle& oracle, const Meta& meta, ShapingConfig cfg, std::uint64_t seed,
              ControllerKind kind = ControllerKind::coregulated, std::vector<double> weights = {})
        : space_(space), oracle_(oracle), meta_(meta), cfg_(std::move(cfg)), kind_(kind), weights_(std::move(weights)),
          seed_(seed) {
        prepare();
        const std::size_t n_actions = space_.catalog.size();
        st_.q = make_approx(derive_seed(seed, 1), cfg_.q_step_size);
        if (kind_ == ControllerKind::coregulated) {
            for (std::size_t i = 0; i < cfg_.secondaries.size(); ++i)
                st_.phi.push_back(make_approx(derive_seed(seed, 100 + i), cfg_.phi_step_size));
            st_.epsilons = cfg_.epsilon0;
        }
        (void)n_actions;
        st_.rng = Rng(derive_seed(seed, 0));
    }

    /// Restores a run from checkpoint(); the continuation replays exactly.
    static SearchRun resume(const nlohmann::json& ckpt, const SearchSpace& space, const Oracle& oracle, const Meta& meta,
                            ShapingConfig cfg) {
        if (ckpt.value("format", std::string()) != kCheckpointFormat) throw ParseError("checkpoint", 0, "not a checkpoint");
        const int version = ckpt.at("version").get<int>();
        if (version != kCheckpointVersion)
            throw VersionError("checkpoint version " + std::to_string(version) + " is not supported (expected version " +
                               std::to_string(kCheckpointVersion) + ")");
        const auto kind = ckpt.at("kind").get<std::string>() == "scalarized" ? ControllerKind::scalarized
                                                                              : ControllerKind::coregulated;
        SearchRun run(space, oracle, meta, std::move(cfg), ckpt.at("seed").get<std::uint64_t>(), kind,
                      ckpt.at("weights").get<std::vector<double>>());
        run.st_.q = ValueApprox::from_json(ckpt.at("q"));
        run.st_.phi.clear();
        for (const auto& p : ckpt.at("phi")) run.st_.phi.push_back(ValueApprox::from_json(p));
        run.st_.epsilons = ckpt.at("epsilons").get<std::vector<double>>();
        run.st_.last_primary = ckpt.at("last_primary").get<double>();
        run.st_.last_secondary = ckpt.at("last_secondary").get<std::vector<double>>();
        run.st_.step = ckpt.at("step").get<std::uint64_t>();
        run.st_.episode = ckpt.at("episode").get<std::uint64_t>();
        run.st_.rng = rng_from_state(ckpt.at("rng").get<std::string>());
        if (run.st_.phi.size() != run.st_.epsilons.size()) throw ParseError("checkpoint", 0, "potential/epsilon count mismatch");
        return run;
    }

    nlohmann::json checkpoint() const {
        nlohmann::json phi = nlohmann::json::array();
        for (const auto& p : st_.phi) phi.push_back(p.to_json());
        return {{"format", kCheckpointFormat},
                {"version", kCheckpointVersion},
                {"kind", kind_ == ControllerKind::scalarized ? "scalarized" : "coregulated"},
                {"seed", seed_},
                {"weights", weights_},
                {"q", st_.q.to_json()},
                {"phi", std::move(phi)},
                {"epsilons", st_.epsilons},
                {"last_primary", st_.last_primary},
                {"last_secondary", st_.last_secondary},
                {"step", st_.step},
                {"episode", st_.episode},
                {"rng", rng_state(st_.rng)}};
    }

    const ShapingState& state() const { return st_; }
    const ShapingConfig& config() const { return cfg_; }
    std::uint64_t episodes_done() const { return st_.episode; }

    SearchTrace make_trace() const {
        SearchTrace t;
        t.kind = kind_;
        t.seed = seed_;
        t.secondary_count = cfg_.secondaries.size();
        t.potential_count = st_.phi.size();
        return t;
    }

    /// Runs one growth rollout from the empty network. Returns false (and sets
    /// trace.error) if the oracle or meta source failed.
    bool run_episode(SearchTrace& trace) {
        try {
            episode_impl(trace);
            return true;
        } catch (const OracleError& e) {
            trace.error = std::string("oracle failure in episode ") + std::to_string(st_.episode) + ": " + e.what();
            return false;
        }
    }

    /// Runs episodes until `total` have been completed (or a failure).
    void run_until(std::uint64_t total, SearchTrace& trace) {
        while (st_.episode < total && !trace.error)
            if (!run_episode(trace)) break;
    }

    /// Deterministic rollout taking the highest shaped score (lowest index on ties).
    CandidateNetwork greedy_rollout() const {
        CandidateNetwork net(space_.input);
        double prev = 0.0;
        for (std::size_t t = 0; t < horizon_; ++t) {
            const auto legal = legal_actions(net, space_.catalog);
            if (legal.empty()) break;
            const Observation s = observe(net);
            std::size_t best = legal.front();
            double best_score = -kInf;
            for (auto a : legal) {
                const double v = shaped_score(st_, s, a);
                if (v > best_score) {
                    best_score = v;
                    best = a;
                }
            }
            net = apply_action(net, space_.catalog, best);
            const double acc = oracle_.accuracy(net);
            const double d = t == 0 ? kInf : acc - prev;
            prev = acc;
            if (t + 1 >= std::size_t(cfg_.warmup) && d < cfg_.tau) break;
        }
        return net;
    }

    void finish(SearchTrace& trace) const {
        if (trace.error) {
            trace.final_network = CandidateNetwork(space_.input);
            return;
        }
        try {
            trace.final_network = greedy_rollout();
            trace.final_accuracy = oracle_.accuracy(trace.final_network);
        } catch (const OracleError& e) {
            trace.error = std::string("oracle failure in final rollout: ") + e.what();
        }
    }

    std::size_t horizon() const { return horizon_; }

private:
    void prepare() {
        cfg_.validate();
        space_.context.validate();
        if (space_.catalog.actions.empty()) throw ArgumentError("action catalog is empty");
        if (space_.catalog.max_depth < 1) throw ArgumentError("max_depth must be >= 1");
        if (legal_actions(CandidateNetwork(space_.input), space_.catalog).empty())
            throw ArgumentError("no catalog action is valid on the input shape");
        for (const auto& s : cfg_.secondaries) {
            auto idx = meta_.target_index(s.target);
            if (!idx) throw SchemaError("meta-behavior source has no target '" + s.target + "'");
            target_idx_.push_back(*idx);
        }
        if (kind_ == ControllerKind::scalarized && weights_.size() != 1 + cfg_.secondaries.size())
            throw ArgumentError("scalarized weights need 1 + " + std::to_string(cfg_.secondaries.size()) + " entries");
        const auto depth = std::size_t(space_.catalog.max_depth);
        horizon_ = cfg_.max_steps > 0 ? std::min(depth, std::size_t(cfg_.max_steps)) : depth;
    }

    ValueApprox make_approx(std::uint64_t init_seed, double step) const {
        const std::size_t n_actions = space_.catalog.size();
        if (cfg_.backend == ApproxBackend::tabular) return ValueApprox(TabularApprox(n_actions));
        std::vector<int> widths{int(state_embedding_width(space_.catalog) + n_actions)};
        widths.insert(widths.end(), cfg_.hidden.begin(), cfg_.hidden.end());
        widths.push_back(1);
        Rng rng(init_seed);
        return ValueApprox(MlpApprox::random(std::move(widths), step, rng), n_actions);
    }

    Observation observe(const CandidateNetwork& net) const {
        return Observation{net.origins(), state_embedding(net, space_.context, space_.catalog)};
    }

    /// Normalized secondary rewards; all 0 and flagged when infeasible.
    std::pair<std::vector<double>, bool> secondary_rewards(const CandidateNetwork& net) {
        const std::size_t k = cfg_.secondaries.size();
        if (k == 0) return {{}, false};
        auto it = meta_cache_.find(net.origins());
        if (it == meta_cache_.end()) it = meta_cache_.emplace(net.origins(), meta_.predict_network(net, space_.context)).first;
        const MetaPrediction& p = it->second;
        if (!p.is_feasible()) return {std::vector<double>(k, 0.0), true};
        std::vector<double> r(k);
        for (std::size_t i = 0; i < k; ++i)
            r[i] = normalize_secondary(p.values().at(target_idx_[i]), cfg_.secondaries[i].budget);
        return {std::move(r), false};
    }

    void episode_impl(SearchTrace& trace) {
        const double threshold =
            cfg_.shaping_episodes >= 0 && st_.episode >= std::uint64_t(cfg_.shaping_episodes) ? kInf : cfg_.epsilon_threshold;
        CandidateNetwork net(space_.input);
        Observation s = observe(net);
        std::vector<std::size_t> legal = legal_actions(net, space_.catalog);
        std::size_t a = select_action(st_, s, legal, cfg_.softmax_temperature);

        EpisodeSummary summary;
        summary.episode = st_.episode;
        double prev_in_episode = 0.0;
        double ret = 0.0;
        for (std::size_t t = 0;; ++t) {
            CandidateNetwork next = apply_action(net, space_.catalog, a);
            const double r_p = oracle_.accuracy(next);
            auto [r_s, infeasible] = secondary_rewards(next);
            const Observation s_next = observe(next);
            const std::vector<std::size_t> legal_next =
                t + 1 < horizon_ ? legal_actions(next, space_.catalog) : std::vector<std::size_t>{};
            std::optional<std::size_t> a_next;
            if (!legal_next.empty()) a_next = select_action(st_, s_next, legal_next, cfg_.softmax_temperature);

            const double delta_stop = t == 0 ? kInf : r_p - prev_in_episode;
            const double delta = st_.step == 0 ? 0.0 : r_p - st_.last_primary;

            StepRecord rec;
            rec.episode = st_.episode;
            rec.step = st_.step;
            rec.step_in_episode = t;
            rec.state = s.embedding;
            rec.action = a;
            rec.primary = r_p;
            rec.secondary = r_s;
            rec.infeasible = infeasible;
            rec.delta = delta;
            rec.delta_stop = delta_stop;

            for (std::size_t i = 0; i < st_.phi.size(); ++i) {
                st_.phi[i] = potential_update(std::move(st_.phi[i]), s, a, s_next, a_next, r_s[i], cfg_.beta, cfg_.gamma);
                double d_i = delta;
                if (cfg_.delta_mode == DeltaMode::per_secondary)
                    d_i = st_.step == 0 ? 0.0 : r_s[i] - st_.last_secondary.at(i);
                st_.epsilons[i] = std::min(epsilon_update(st_.epsilons[i], d_i, threshold), cfg_.epsilon_cap);
                rec.phi.push_back(st_.phi[i].value(s, a));
            }
            rec.epsilons = st_.epsilons;

            double reward = r_p;
            if (kind_ == ControllerKind::scalarized) {
                reward = weights_[0] * r_p;
                for (std::size_t i = 0; i < r_s.size(); ++i) reward += weights_[i + 1] * r_s[i];
            }
            rec.reward = reward;
            rec.q_target = q_target(st_, s, a, s_next, reward, legal_next, cfg_.gamma);
            st_.q.update(s, a, rec.q_target);

            ret += r_p;
            rec.cumulative_return = ret;
            trace.records.push_back(std::move(rec));

            st_.last_primary = r_p;
            st_.last_secondary = r_s;
            ++st_.step;
            prev_in_episode = r_p;
            summary.last_delta = delta_stop;

            const bool stop_growth = t + 1 >= std::size_t(cfg_.warmup) && delta_stop < cfg_.tau;
            if (!a_next || stop_growth) break;
            net = std::move(next);
            s = s_next;
            a = *a_next;
        }
        summary.steps = std::size_t(trace.records.back().step_in_episode + 1);
        summary.primary_return = ret;
        summary.normalized_return = ret / double(horizon_);
        summary.epsilons = st_.epsilons;
        trace.episodes.push_back(std::move(summary));
        ++st_.episode;
    }

    SearchSpace space_;
    const Oracle& oracle_;
    const Meta& meta_;
    ShapingConfig cfg_;
    ControllerKind kind_;
    std::vector<double> weights_;
    std::uint64_t seed_;
    std::vector<std::size_t> target_idx_;
    std::size_t horizon_ = 1;
    ShapingState st_;
    std::map<std::vector<std::uint32_t>, MetaPrediction> meta_cache_;
};

template <AccuracyOracle Oracle, MetaSource Meta>
SearchTrace run_controller(const SearchSpace& space, const Oracle& oracle, const Meta& meta, const ShapingConfig& cfg,
                           std::uint64_t seed, ControllerKind kind, std::vector<double> weights) {
    const auto start = std::chrono::steady_clock::now();
    SearchRun<Oracle, Meta> run(space, oracle, meta, cfg, seed, kind, std::move(weights));
    SearchTrace trace = run.make_trace();
    run.run_until(std::uint64_t(cfg.episodes), trace);
    run.finish(trace);
    trace.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return trace;
}

/// Co-regulated shaping search.
template <AccuracyOracle Oracle, MetaSource Meta>
SearchTrace run_search(const SearchSpace& space, const Oracle& oracle, const Meta& meta, const ShapingConfig& cfg,
                       std::uint64_t seed) {
    return run_controller(space, oracle, meta, cfg, seed, ControllerKind::coregulated, {});
}

/// Plain Q-learning on r = w_0 * r_P + sum_i w_i * r_S^i.
template <AccuracyOracle Oracle, MetaSource Meta>
SearchTrace run_search_scalarized(const SearchSpace& space, const Oracle& oracle, const Meta& meta,
                                  const ShapingConfig& cfg, std::vector<double> weights, std::uint64_t seed) {
    return run_controller(space, oracle, meta, cfg, seed, ControllerKind::scalarized, std::move(weights));
}

/// Continues a checkpointed run to cfg.episodes; the trace holds only the
/// steps executed after the checkpoint.
template <AccuracyOracle Oracle, MetaSource Meta>
SearchTrace resume_search(const nlohmann::json& ckpt, const SearchSpace& space, const Oracle& oracle, const Meta& meta,
                          const ShapingConfig& cfg) {
    auto run = SearchRun<Oracle, Meta>::resume(ckpt, space, oracle, meta, cfg);
    SearchTrace trace = run.make_trace();
    run.run_until(std::uint64_t(cfg.episodes), trace);
    run.finish(trace);
    return trace;
}

}  // namespace comet
