// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "comet/harness.hpp"
#include "fixtures.hpp"

using namespace comet;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(const char* id, const char* what, const Outcome& o, double secs) {
    std::printf("%s %s: %s  (%s, %.2fs)\n", o.pass ? "PASS" : "FAIL", id, what, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Traces whose epsilon schedule is checked afterwards.
struct EpsTrace {
    SearchTrace trace;
    std::vector<double> eps0;
    double threshold;
    int shaping_episodes;
};
std::vector<EpsTrace> eps_traces;

// --- A1 task: 3 actions, depth 4; the secondary prefers the primary-poor skip block.

SyntheticOracle a1_oracle() {
    SyntheticTaskSpec t;
    t.base_utility = {0.2, 0.15, 0.05};
    t.bonuses[{1, 0}] = 0.1;
    return SyntheticOracle(t, 3);
}

fixtures::FnMeta a1_meta() {
    return {{"Execution time"}, [](const std::vector<std::uint32_t>& c) {
                double lat = 0.0;
                for (auto a : c) lat += a == 0 ? 3.0 : a == 1 ? 1.0 : 0.0;
                return std::optional<std::vector<double>>(std::vector<double>{lat});
            }};
}

SearchSpace a1_space() { return {fixtures::toy_catalog(4), fixtures::toy_input(), fixtures::phone()}; }

ShapingConfig a1_config() {
    ShapingConfig c;
    c.secondaries = {{"Execution time", 6.0}};
    c.epsilon0 = {1.0};
    c.shaping_episodes = 100;
    c.episodes = 600;
    c.tau = -kInf;
    c.softmax_temperature = 1.0;
    return c;
}

Outcome a1() {
    const auto oracle = a1_oracle();
    const auto cfg = a1_config();
    double best_value = 0.0, gap = 0.0;
    const auto best = fixtures::brute_force_best([&](const auto& c) { return oracle.accuracy_of_chain(c); }, 3, 4,
                                                 cfg.gamma, &best_value, &gap);
    const auto t0 = Clock::now();
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto t = run_search(a1_space(), oracle, a1_meta(), cfg, seed);
        hits += t.greedy_chain() == best;
        eps_traces.push_back({std::move(t), cfg.epsilon0, cfg.epsilon_threshold, cfg.shaping_episodes});
    }
    const double secs = seconds_since(t0);
    std::string chain;
    for (auto a : best) chain += std::to_string(a);
    return {hits >= 19 && secs < 10.0,
            fmt("%d/20 seeds recover optimum %s (value %.4f, runner-up gap %.4f); search %.2fs, limit 10s", hits,
                chain.c_str(), best_value, gap, secs)};
}

// --- A2 task: 6 actions, depth 5; accuracy is 0 below depth 3, only a0 is
// worth stacking, and the latency secondary rewards exactly the a0-only prefixes.

SyntheticOracle a2_oracle() {
    SyntheticTaskSpec t;
    t.base_utility = {0.25, 0.03, 0.03, 0.03, 0.03, 0.03};
    t.min_depth = 3;
    return SyntheticOracle(t, 6);
}

fixtures::FnMeta a2_meta() {
    return {{"Execution time"}, [](const std::vector<std::uint32_t>& c) {
                double lat = 0.0;
                for (auto a : c) lat += a == 0 ? 0.0 : 1.0;
                return std::optional<std::vector<double>>(std::vector<double>{lat});
            }};
}

SearchSpace a2_space() {
    ActionCatalog cat;
    cat.max_depth = 5;
    for (int i = 0; i < 6; ++i) cat.actions.push_back(fixtures::tmpl("b" + std::to_string(i), BlockKind::skip, 1, 1, 0));
    return {cat, fixtures::toy_input(), fixtures::phone()};
}

ShapingConfig a2_config() {
    ShapingConfig c;
    c.secondaries = {{"Execution time", 1.0}};
    c.epsilon0 = {1.0};
    c.episodes = 300;
    c.tau = -kInf;
    c.softmax_temperature = 0.2;
    c.backend = ApproxBackend::mlp;
    return c;
}

Outcome a2() {
    const auto oracle = a2_oracle();
    const auto meta = a2_meta();
    const auto cfg = a2_config();
    const std::vector<double> weights{1.0, cfg.epsilon0[0]};
    const auto t0 = Clock::now();
    std::vector<std::vector<double>> co, sc;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto t = run_search(a2_space(), oracle, meta, cfg, seed);
        co.push_back(normalized_returns(t));
        eps_traces.push_back({std::move(t), cfg.epsilon0, cfg.epsilon_threshold, cfg.shaping_episodes});
        sc.push_back(normalized_returns(run_search_scalarized(a2_space(), oracle, meta, cfg, weights, seed)));
    }
    const double secs = seconds_since(t0);
    const auto mc = mean_curve(co), ms = mean_curve(sc);
    const auto pc = *episodes_to_plateau(mc), ps = *episodes_to_plateau(ms);
    const double ratio = double(ps) / double(pc);
    return {ratio >= 2.0 && secs < 120.0,
            fmt("plateau co-regulated %zu vs scalarized %zu episodes, speedup %.2fx (bar 2x); asymptotes %.4f vs %.4f; "
                "%.1fs, limit 120s",
                pc, ps, ratio, smooth(mc).back(), smooth(ms).back(), secs)};
}

// --- A3 / A7: predictor on a synthetic three-context corpus.

struct A3State {
    BoBModel model;
    MetaDataset holdout;
} a3_state;

Outcome a3() {
    const auto cat = fixtures::stats_catalog();
    const auto ctx = fixtures::three_contexts();
    TrueCostModel truth;
    truth.context_multipliers = {1.0, 1.6, 3.0};
    const auto t0 = Clock::now();
    const auto data = gen_synth_stats(cat, {3, 32, 32}, ctx, truth, 2000, 2024);
    auto [train, holdout] = split_holdout(data, 0.2, 1);
    PredictorConfig pc;
    pc.seed = 1;
    a3_state.model = learn_meta(train, pc);
    a3_state.holdout = holdout;
    const auto rep = score(a3_state.model, holdout);
    const double secs = seconds_since(t0);
    bool ok = rep.gate_accuracy >= 0.95 && secs < 30.0;
    std::string per;
    for (const auto& t : rep.targets) {
        ok = ok && t.r2 && *t.r2 >= 0.9;
        per += fmt("%s R2 %.4f rmse %.4f; ", t.name.c_str(), t.r2 ? *t.r2 : -1.0, t.rmse);
    }
    const double infeasible = 1.0 - double(data.feasible_count()) / double(data.size());
    return {ok, per + fmt("gate accuracy %.4f; %.1f%% infeasible rows; %.1fs, limit 30s", rep.gate_accuracy,
                          100.0 * infeasible, secs)};
}

Outcome a4() {
    std::size_t checked = 0, zeros = 0;
    double worst = 0.0;
    for (const auto& e : eps_traces) {
        const auto c = fixtures::check_epsilon_schedule(e.trace, e.eps0, e.threshold, e.shaping_episodes, 1e-9);
        if (!c.ok) return {false, "seed " + std::to_string(e.trace.seed) + ": " + c.first_failure};
        checked += c.checked;
        zeros += c.zero_steps;
        worst = std::max(worst, c.max_rel_error);
    }
    return {!eps_traces.empty(), fmt("%zu traces, %zu steps (%zu after cutoff), max relative error %.3g, tol 1e-9",
                                     eps_traces.size(), checked, zeros, worst)};
}

Outcome a5() {
    const auto oracle = a1_oracle();
    auto acc = [&](const auto& c) { return oracle.accuracy_of_chain(c); };
    int same_plain = 0, same_ref = 0, same_null = 0;
    const int seeds = 10;
    for (int seed = 0; seed < seeds; ++seed) {
        auto cfg = a1_config();
        cfg.episodes = 100;
        cfg.shaping_episodes = -1;
        cfg.tau = 0.01;
        cfg.softmax_temperature = 0.3;
        auto zero = cfg;
        zero.epsilon0 = {0.0};
        auto plain = cfg;
        plain.secondaries.clear();
        plain.epsilon0.clear();
        const auto tz = run_search(a1_space(), oracle, a1_meta(), zero, std::uint64_t(seed));
        const auto tp = run_search(a1_space(), oracle, a1_meta(), plain, std::uint64_t(seed));
        const auto ref = fixtures::reference_q_learning(acc, 3, 4, cfg.gamma, cfg.softmax_temperature, cfg.tau,
                                                        cfg.warmup, cfg.episodes, std::uint64_t(seed));
        same_plain += fixtures::q_targets(tz) == fixtures::q_targets(tp);
        same_ref += fixtures::q_targets(tz) == ref;

        // second secondary reads a constant-zero target and starts at eps 0
        auto meta2 = a1_meta();
        meta2.targets.push_back("Null");
        meta2.fn = [base = a1_meta().fn](const std::vector<std::uint32_t>& c) {
            auto v = base(c);
            v->push_back(0.0);
            return v;
        };
        auto two = cfg;
        two.secondaries.push_back({"Null", 1.0});
        two.epsilon0.push_back(0.0);
        const auto t1 = run_search(a1_space(), oracle, a1_meta(), cfg, std::uint64_t(seed));
        const auto t2 = run_search(a1_space(), oracle, meta2, two, std::uint64_t(seed));
        bool same = t1.records.size() == t2.records.size() && t1.final_network == t2.final_network;
        for (std::size_t i = 0; same && i < t1.records.size(); ++i) {
            const auto &a = t1.records[i], &b = t2.records[i];
            same = a.action == b.action && a.state == b.state && a.primary == b.primary &&
                   a.secondary[0] == b.secondary[0] && a.epsilons[0] == b.epsilons[0] && a.q_target == b.q_target &&
                   a.phi[0] == b.phi[0] && a.delta == b.delta && a.cumulative_return == b.cumulative_return;
        }
        same_null += same;
    }
    return {same_plain == seeds && same_ref == seeds && same_null == seeds,
            fmt("eps0=0 vs unshaped: %d/%d, vs reference Q-learning: %d/%d, null second secondary: %d/%d (bit-exact)",
                same_plain, seeds, same_ref, seeds, same_null, seeds)};
}

Outcome a6() {
    Rng rng(606);
    double worst = 0.0;
    for (int c = 0; c < 100; ++c) {
        std::vector<int> widths{2 + int(uniform_index(rng, 20))};
        const auto hidden = 1 + uniform_index(rng, 3);
        for (std::size_t h = 0; h < hidden; ++h) widths.push_back(1 + int(uniform_index(rng, 16)));
        widths.push_back(1);
        auto m = MlpApprox::random(widths, 0.01, rng);
        std::vector<double> x(static_cast<std::size_t>(widths[0]));
        for (auto& v : x) v = uniform_real(rng, -1.0, 1.0);
        const double target = uniform_real(rng, -2.0, 2.0);
        const auto g = m.loss_gradient(x, target);
        const auto fd = fixtures::fd_gradient(widths, m.parameters(), x, target);
        for (std::size_t k = 0; k < g.size(); ++k) {
            const double denom = std::max({std::abs(fd[k]), std::abs(g[k]), 1e-300});
            worst = std::max(worst, std::abs(fd[k] - g[k]) / denom);
        }
    }
    return {worst <= 1e-4, fmt("100 random networks, max relative error %.3g, tol 1e-4", worst)};
}

Outcome a7() {
    const bool monotone = a3_state.model.training_loss_monotone();
    const auto path = std::filesystem::temp_directory_path() / "comet_acceptance_model.json";
    save_model(a3_state.model, path.string());
    const auto back = load_model(path.string());
    std::filesystem::remove(path);
    const auto fresh = gen_synth_stats(fixtures::stats_catalog(), {3, 32, 32}, fixtures::three_contexts(), [] {
        TrueCostModel t;
        t.context_multipliers = {1.0, 1.6, 3.0};
        return t;
    }(), 100, 77);
    std::size_t same = 0;
    for (const auto& s : fresh.samples()) {
        const auto a = a3_state.model.predict(s.features), b = back.predict(s.features);
        same += a.is_feasible() == b.is_feasible() && (!a.is_feasible() || a.values() == b.values()) &&
                a3_state.model.gate_score(s.features) == back.gate_score(s.features);
    }
    const std::size_t fits = a3_state.model.members().size() * (1 + a3_state.model.target_names().size());
    return {monotone && same == fresh.size(),
            fmt("%zu boosted fits %s; reloaded model identical on %zu/%zu rows", fits,
                monotone ? "all non-increasing" : "HAVE A LOSS INCREASE", same, fresh.size())};
}

}  // namespace

int main() {
    struct Criterion {
        const char* id;
        const char* what;
        std::function<Outcome()> fn;
    };
    const std::vector<Criterion> all{
        {"A1", "policy invariance", a1},
        {"A2", "convergence speedup", a2},
        {"A3", "predictor fidelity", a3},
        {"A4", "epsilon schedule exactness", a4},
        {"A5", "degenerate equivalences", a5},
        {"A6", "gradient check", a6},
        {"A7", "boosting monotonicity and round trip", a7},
    };
    for (const auto& c : all) {
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = c.fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        report(c.id, c.what, o, seconds_since(t0));
    }
    std::printf("%d of %zu criteria failed\n", failures, all.size());
    return failures == 0 ? 0 : 1;
}
