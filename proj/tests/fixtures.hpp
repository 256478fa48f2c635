#pragma once

// Shared test fixtures and reference implementations that do not reuse the
// library's own code paths.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "comet/design_space.hpp"
#include "comet/eval_oracle.hpp"
#include "comet/meta_predictor.hpp"
#include "comet/random.hpp"
#include "comet/shaping_controller.hpp"

namespace fixtures {

using namespace comet;

inline LayerTemplate tmpl(std::string name, BlockKind kind, int k, int s, int p, int ch = 0) {
    LayerTemplate t;
    t.name = std::move(name);
    t.kind = kind;
    t.kernel_size = k;
    t.stride = s;
    t.padding = p;
    t.channels = ch;
    return t;
}

/// Three spatially shape-preserving blocks: every chain up to max_depth is legal.
inline ActionCatalog toy_catalog(int max_depth) {
    ActionCatalog c;
    c.actions = {tmpl("conv3", BlockKind::conv, 3, 1, 1, 8), tmpl("dw3", BlockKind::dwconv, 3, 1, 1),
                 tmpl("skip", BlockKind::skip, 1, 1, 0)};
    c.max_depth = max_depth;
    return c;
}

inline Shape toy_input() { return {3, 8, 8}; }

inline ContextSpec phone() {
    ContextSpec c;
    c.name = "phone";
    c.cores = 8;
    c.compute_units = 2;
    c.memory_mb = 4096;
    c.clock_freq_mhz = 2400;
    c.memory_bandwidth = 25.6;
    c.processor_kind = "cpu";
    return c;
}

inline ContextSpec tablet() {
    ContextSpec c = phone();
    c.name = "tablet";
    c.cores = 4;
    c.memory_mb = 2048;
    c.processor_kind = "gpu";
    c.task["detection"] = 1;
    return c;
}

inline ContextSpec watch() {
    ContextSpec c = phone();
    c.name = "watch";
    c.cores = 2;
    c.compute_units = 1;
    c.memory_mb = 512;
    c.clock_freq_mhz = 1000;
    c.memory_bandwidth = 6.4;
    c.processor_kind = "dsp";
    return c;
}

/// Meta-behavior source backed by an arbitrary function of the chain.
struct FnMeta {
    std::vector<std::string> targets;
    std::function<std::optional<std::vector<double>>(const std::vector<std::uint32_t>&)> fn;

    MetaPrediction predict_network(const CandidateNetwork& net, const ContextSpec&) const {
        auto v = fn(net.origins());
        return v ? MetaPrediction::feasible(*v) : MetaPrediction::infeasible();
    }
    std::optional<std::size_t> target_index(std::string_view name) const {
        for (std::size_t i = 0; i < targets.size(); ++i)
            if (targets[i] == name) return i;
        return std::nullopt;
    }
};

/// Accuracy oracle backed by a function of the chain.
struct FnOracle {
    std::function<double(const std::vector<std::uint32_t>&)> fn;
    double accuracy(const CandidateNetwork& net) const { return fn(net.origins()); }
};

/// All chains of exactly `depth` actions over `n` actions.
inline std::vector<std::vector<std::uint32_t>> all_chains(std::size_t n, std::size_t depth) {
    std::vector<std::vector<std::uint32_t>> out{{}};
    for (std::size_t d = 0; d < depth; ++d) {
        std::vector<std::vector<std::uint32_t>> next;
        for (const auto& c : out)
            for (std::uint32_t a = 0; a < n; ++a) {
                auto e = c;
                e.push_back(a);
                next.push_back(std::move(e));
            }
        out = std::move(next);
    }
    return out;
}

/// Exhaustive search for the chain maximizing sum_t gamma^(t-1) * acc(prefix_t),
/// the discounted primary return of a full-depth rollout. Ties go to the
/// lexicographically smallest chain.
template <class AccFn>
std::vector<std::uint32_t> brute_force_best(AccFn acc, std::size_t n, std::size_t depth, double gamma,
                                            double* best_value = nullptr, double* runner_up_gap = nullptr) {
    std::vector<std::uint32_t> best;
    double bv = -std::numeric_limits<double>::infinity();
    std::vector<double> values;
    for (const auto& c : all_chains(n, depth)) {
        double v = 0.0, g = 1.0;
        for (std::size_t t = 1; t <= c.size(); ++t) {
            v += g * acc(std::vector<std::uint32_t>(c.begin(), c.begin() + std::ptrdiff_t(t)));
            g *= gamma;
        }
        values.push_back(v);
        if (v > bv) {
            bv = v;
            best = c;
        }
    }
    if (best_value) *best_value = bv;
    if (runner_up_gap) {
        double second = -std::numeric_limits<double>::infinity();
        bool skipped = false;
        for (double v : values) {
            if (v == bv && !skipped) {
                skipped = true;
                continue;
            }
            second = std::max(second, v);
        }
        *runner_up_gap = bv - second;
    }
    return best;
}

struct EpsilonCheck {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t zero_steps = 0;
    bool ok = true;
    std::string first_failure;
};

/// Verifies eps_t = eps0 * exp(r_t - r_0) while the closed-form value has
/// stayed above the threshold, and eps_t == 0 exactly afterwards. The
/// threshold is +inf from episode `shaping_episodes` on when that is >= 0.
inline EpsilonCheck check_epsilon_schedule(const SearchTrace& trace, const std::vector<double>& eps0, double threshold,
                                           int shaping_episodes, double tol = 1e-9) {
    EpsilonCheck res;
    if (trace.records.empty()) return res;
    const double r0 = trace.records.front().primary;
    for (std::size_t i = 0; i < eps0.size(); ++i) {
        bool dead = false;
        double prev = eps0[i];
        for (const auto& rec : trace.records) {
            const double thr = shaping_episodes >= 0 && rec.episode >= std::uint64_t(shaping_episodes)
                                   ? std::numeric_limits<double>::infinity()
                                   : threshold;
            const double got = rec.epsilons.at(i);
            if (dead || !(prev > thr)) {
                dead = true;
                ++res.zero_steps;
                if (got != 0.0 && res.ok) {
                    res.ok = false;
                    res.first_failure = "step " + std::to_string(rec.step) + ": expected 0, got " + std::to_string(got);
                }
                prev = 0.0;
            } else {
                const double expect = eps0[i] * std::exp(rec.primary - r0);
                const double rel = std::abs(got - expect) / std::max(std::abs(expect), 1e-300);
                res.max_rel_error = std::max(res.max_rel_error, rel);
                if (!(rel <= tol) && res.ok) {
                    res.ok = false;
                    res.first_failure = "step " + std::to_string(rec.step) + ": expected " + std::to_string(expect) +
                                        ", got " + std::to_string(got);
                }
                prev = expect;
            }
            ++res.checked;
        }
    }
    return res;
}

/// Independent tabular Q-learning with the controller's sampling protocol
/// (one uniform per softmax draw from stream 0, draws for s then s').
/// Returns the sequence of Q-targets. Every chain must be legal up to depth.
template <class AccFn>
std::vector<double> reference_q_learning(AccFn acc, std::size_t n_actions, std::size_t depth, double gamma,
                                         double temperature, double tau, int warmup, int episodes, std::uint64_t seed) {
    std::map<std::pair<std::vector<std::uint32_t>, std::size_t>, double> q;
    auto Q = [&](const std::vector<std::uint32_t>& s, std::size_t a) {
        auto it = q.find({s, a});
        return it == q.end() ? 0.0 : it->second;
    };
    Rng rng(derive_seed(seed, 0));
    auto draw = [&](const std::vector<std::uint32_t>& s) {
        std::vector<double> sc(n_actions);
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < n_actions; ++a) top = std::max(top, sc[a] = Q(s, a));
        std::vector<double> p(n_actions);
        double z = 0.0;
        for (std::size_t a = 0; a < n_actions; ++a) z += (p[a] = std::exp((sc[a] - top) / temperature));
        for (double& v : p) v /= z;
        const double u = uniform01(rng);
        double c = 0.0;
        for (std::size_t a = 0; a < n_actions; ++a) {
            c += p[a];
            if (u < c) return a;
        }
        return n_actions - 1;
    };
    std::vector<double> targets;
    for (int e = 0; e < episodes; ++e) {
        std::vector<std::uint32_t> s;
        std::size_t a = draw(s);
        double prev = 0.0;
        for (std::size_t t = 0;; ++t) {
            auto s2 = s;
            s2.push_back(std::uint32_t(a));
            const double r = acc(s2);
            const bool terminal = t + 1 >= depth;
            std::optional<std::size_t> a2;
            if (!terminal) a2 = draw(s2);
            double best = 0.0;
            if (!terminal) {
                best = -std::numeric_limits<double>::infinity();
                for (std::size_t b = 0; b < n_actions; ++b) best = std::max(best, Q(s2, b));
            }
            const double target = r + gamma * best;
            targets.push_back(target);
            q[{s, a}] = target;
            const double d = t == 0 ? std::numeric_limits<double>::infinity() : r - prev;
            prev = r;
            if (!a2 || (t + 1 >= std::size_t(warmup) && d < tau)) break;
            s = s2;
            a = *a2;
        }
    }
    return targets;
}

/// Central-difference gradient of 0.5 * (f(x) - t)^2 with an independent
/// long-double forward pass (tanh hidden layers, linear output). Parameters are
/// laid out [W0, b0, W1, b1, ...] with W row-major (out x in).
inline std::vector<double> fd_gradient(const std::vector<int>& widths, const std::vector<double>& params,
                                       const std::vector<double>& x, double target, long double h = 1e-5L) {
    std::vector<long double> p(params.begin(), params.end());
    auto forward = [&] {
        std::vector<long double> a(x.begin(), x.end());
        std::size_t o = 0;
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            const auto in = std::size_t(widths[l]), out = std::size_t(widths[l + 1]);
            std::vector<long double> z(out, 0.0L);
            for (std::size_t i = 0; i < out; ++i)
                for (std::size_t j = 0; j < in; ++j) z[i] += p[o + i * in + j] * a[j];
            o += in * out;
            for (std::size_t i = 0; i < out; ++i) z[i] += p[o + i];
            o += out;
            if (l + 2 < widths.size())
                for (auto& v : z) v = std::tanh(v);
            a = std::move(z);
        }
        const long double r = a[0] - target;
        return 0.5L * r * r;
    };
    std::vector<double> g(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
        const long double keep = p[k];
        p[k] = keep + h;
        const long double up = forward();
        p[k] = keep - h;
        const long double dn = forward();
        p[k] = keep;
        g[k] = double((up - dn) / (2 * h));
    }
    return g;
}

inline std::vector<double> q_targets(const SearchTrace& t) {
    std::vector<double> v;
    for (const auto& r : t.records) v.push_back(r.q_target);
    return v;
}

/// Three-context synthetic corpus setup used by the predictor tests.
inline ActionCatalog stats_catalog() {
    ActionCatalog c;
    c.actions = {tmpl("conv3_16", BlockKind::conv, 3, 1, 1, 16), tmpl("conv5_32", BlockKind::conv, 5, 1, 2, 32),
                 tmpl("conv1_8", BlockKind::conv, 1, 1, 0, 8),   tmpl("dw3", BlockKind::dwconv, 3, 1, 1),
                 tmpl("pool2", BlockKind::pool, 2, 2, 0),        tmpl("skip", BlockKind::skip, 1, 1, 0)};
    c.max_depth = 6;
    return c;
}

inline std::vector<ContextSpec> three_contexts() { return {phone(), tablet(), watch()}; }

}  // namespace fixtures
