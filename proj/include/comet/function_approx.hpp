#pragma once

// Value-function approximators for Q and the shaping potentials.
//
// Two backends sit behind ValueApprox:
//   * TabularApprox - exact dictionary over (chain, action); update() sets the
//     entry to the regression target, so the controller's update formulas
//     apply literally.
//   * MlpApprox - tanh MLP over (state embedding ++ action one-hot) with a
//     scalar linear output; update() is one SGD step on 0.5 * (f - target)^2.

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "comet/error.hpp"
#include "comet/random.hpp"

namespace comet {

/// What an approximator sees of a search state. Tabular keys on `chain`,
/// the MLP consumes `embedding`.
struct Observation {
    std::vector<std::uint32_t> chain;
    std::vector<double> embedding;
};

class MlpApprox {
public:
    MlpApprox() = default;

    /// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
    static MlpApprox random(std::vector<int> widths, double step_size, Rng& rng) {
        MlpApprox m = zeros(std::move(widths), step_size);
        for (std::size_t l = 0; l + 1 < m.widths_.size(); ++l) {
            const double bound = 1.0 / std::sqrt(double(m.widths_[l]));
            for (double& w : m.weights_[l]) w = uniform_real(rng, -bound, bound);
        }
        return m;
    }

    static MlpApprox zeros(std::vector<int> widths, double step_size) {
        if (widths.size() < 2 || widths.back() != 1) throw ArgumentError("MLP widths must end in a scalar output");
        for (int w : widths)
            if (w < 1) throw ArgumentError("MLP layer widths must be positive");
        if (!(step_size >= 0.0)) throw ArgumentError("step_size must be >= 0");
        MlpApprox m;
        m.widths_ = std::move(widths);
        m.step_size_ = step_size;
        for (std::size_t l = 0; l + 1 < m.widths_.size(); ++l) {
            m.weights_.emplace_back(std::size_t(m.widths_[l + 1]) * std::size_t(m.widths_[l]), 0.0);
            m.biases_.emplace_back(std::size_t(m.widths_[l + 1]), 0.0);
        }
        return m;
    }

    std::size_t input_dim() const { return widths_.empty() ? 0 : std::size_t(widths_.front()); }
    const std::vector<int>& widths() const { return widths_; }
    double step_size() const { return step_size_; }
    void set_step_size(double s) { step_size_ = s; }

    std::vector<double>& weights(std::size_t layer) { return weights_[layer]; }
    std::vector<double>& biases(std::size_t layer) { return biases_[layer]; }

    double forward(std::span<const double> input) const {
        check_input(input);
        std::vector<double> act(input.begin(), input.end()), next;
        for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
            layer_forward(l, act, next);
            act.swap(next);
        }
        return act[0];
    }

    double forward(std::span<const double> state_embed, std::span<const double> action_onehot) const {
        if (state_embed.size() + action_onehot.size() != input_dim())
            throw ArgumentError("MLP input has " + std::to_string(state_embed.size() + action_onehot.size()) +
                                " values, expected " + std::to_string(input_dim()));
        std::vector<double> x(state_embed.begin(), state_embed.end());
        x.insert(x.end(), action_onehot.begin(), action_onehot.end());
        return forward(x);
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
        return n;
    }

    /// Flattened as [W0, b0, W1, b1, ...], weights row-major (out x in).
    std::vector<double> parameters() const {
        std::vector<double> p;
        p.reserve(parameter_count());
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            p.insert(p.end(), weights_[l].begin(), weights_[l].end());
            p.insert(p.end(), biases_[l].begin(), biases_[l].end());
        }
        return p;
    }

    void set_parameters(std::span<const double> p) {
        if (p.size() != parameter_count()) throw ArgumentError("parameter vector size mismatch");
        std::size_t k = 0;
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            for (double& w : weights_[l]) w = p[k++];
            for (double& b : biases_[l]) b = p[k++];
        }
    }

    /// Gradient of 0.5 * (forward(input) - target)^2 in parameters() order.
    std::vector<double> loss_gradient(std::span<const double> input, double target) const {
        check_input(input);
        const std::size_t L = weights_.size();
        std::vector<std::vector<double>> acts(L + 1);
        acts[0].assign(input.begin(), input.end());
        for (std::size_t l = 0; l < L; ++l) layer_forward(l, acts[l], acts[l + 1]);

        std::vector<std::vector<double>> gw(L), gb(L);
        std::vector<double> delta{acts[L][0] - target};
        for (std::size_t l = L; l-- > 0;) {
            const std::size_t in = std::size_t(widths_[l]), out = std::size_t(widths_[l + 1]);
            gw[l].assign(out * in, 0.0);
            gb[l] = delta;
            for (std::size_t o = 0; o < out; ++o)
                for (std::size_t i = 0; i < in; ++i) gw[l][o * in + i] = delta[o] * acts[l][i];
            if (l == 0) break;
            std::vector<double> prev(in, 0.0);
            for (std::size_t i = 0; i < in; ++i) {
                double s = 0.0;
                for (std::size_t o = 0; o < out; ++o) s += weights_[l][o * in + i] * delta[o];
                const double a = acts[l][i];  // tanh output of layer l-1
                prev[i] = s * (1.0 - a * a);
            }
            delta.swap(prev);
        }
        std::vector<double> g;
        g.reserve(parameter_count());
        for (std::size_t l = 0; l < L; ++l) {
            g.insert(g.end(), gw[l].begin(), gw[l].end());
            g.insert(g.end(), gb[l].begin(), gb[l].end());
        }
        return g;
    }

    void sgd_step_inplace(std::span<const double> input, double target) {
        if (!std::isfinite(target)) throw ArgumentError("non-finite regression target");
        const auto g = loss_gradient(input, target);
        std::size_t k = 0;
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            for (double& w : weights_[l]) w -= step_size_ * g[k++];
            for (double& b : biases_[l]) b -= step_size_ * g[k++];
        }
    }

    MlpApprox sgd_step(std::span<const double> input, double target) const {
        MlpApprox next = *this;
        next.sgd_step_inplace(input, target);
        return next;
    }

    nlohmann::json to_json() const {
        return {{"widths", widths_}, {"step_size", step_size_}, {"weights", weights_}, {"biases", biases_}};
    }

    static MlpApprox from_json(const nlohmann::json& j) {
        MlpApprox m = zeros(j.at("widths").get<std::vector<int>>(), j.at("step_size").get<double>());
        auto w = j.at("weights").get<std::vector<std::vector<double>>>();
        auto b = j.at("biases").get<std::vector<std::vector<double>>>();
        if (w.size() != m.weights_.size() || b.size() != m.biases_.size()) throw Error("MLP layer count mismatch");
        for (std::size_t l = 0; l < w.size(); ++l)
            if (w[l].size() != m.weights_[l].size() || b[l].size() != m.biases_[l].size())
                throw Error("MLP layer size mismatch");
        m.weights_ = std::move(w);
        m.biases_ = std::move(b);
        return m;
    }

    bool operator==(const MlpApprox&) const = default;

private:
    void check_input(std::span<const double> input) const {
        if (input.size() != input_dim())
            throw ArgumentError("MLP input has " + std::to_string(input.size()) + " values, expected " +
                                std::to_string(input_dim()));
    }

    void layer_forward(std::size_t l, const std::vector<double>& in, std::vector<double>& out) const {
        const std::size_t n_in = std::size_t(widths_[l]), n_out = std::size_t(widths_[l + 1]);
        const bool last = l + 2 == widths_.size();
        out.assign(n_out, 0.0);
        for (std::size_t o = 0; o < n_out; ++o) {
            double s = biases_[l][o];
            const double* row = &weights_[l][o * n_in];
            for (std::size_t i = 0; i < n_in; ++i) s += row[i] * in[i];
            out[o] = last ? s : std::tanh(s);
        }
    }

    std::vector<int> widths_;
    double step_size_ = 0.0;
    std::vector<std::vector<double>> weights_;
    std::vector<std::vector<double>> biases_;
};

class TabularApprox {
public:
    TabularApprox() = default;
    explicit TabularApprox(std::size_t n_actions) : n_actions_(n_actions) {}

    std::size_t action_count() const { return n_actions_; }
    std::size_t entry_count() const { return table_.size(); }

    double value(const std::vector<std::uint32_t>& chain, std::size_t action) const {
        check_action(action);
        auto it = table_.find(chain);
        return it == table_.end() ? 0.0 : it->second[action];
    }

    void set(const std::vector<std::uint32_t>& chain, std::size_t action, double v) {
        check_action(action);
        if (!std::isfinite(v)) throw ArgumentError("non-finite tabular value");
        auto [it, inserted] = table_.try_emplace(chain, n_actions_, 0.0);
        it->second[action] = v;
    }

    nlohmann::json to_json() const {
        nlohmann::json entries = nlohmann::json::array();
        for (const auto& [k, v] : table_) entries.push_back({k, v});
        return {{"actions", n_actions_}, {"entries", std::move(entries)}};
    }

    static TabularApprox from_json(const nlohmann::json& j) {
        TabularApprox t(j.at("actions").get<std::size_t>());
        for (const auto& e : j.at("entries")) {
            auto vals = e.at(1).get<std::vector<double>>();
            if (vals.size() != t.n_actions_) throw Error("tabular entry width mismatch");
            t.table_.emplace(e.at(0).get<std::vector<std::uint32_t>>(), std::move(vals));
        }
        return t;
    }

    bool operator==(const TabularApprox&) const = default;

private:
    void check_action(std::size_t a) const {
        if (a >= n_actions_) throw ArgumentError("action " + std::to_string(a) + " out of range");
    }

    std::size_t n_actions_ = 0;
    std::map<std::vector<std::uint32_t>, std::vector<double>> table_;
};

/// Q(s, a) / Phi(s, a) estimator with a single regression-style update.
class ValueApprox {
public:
    ValueApprox() = default;
    explicit ValueApprox(TabularApprox t) : impl_(std::move(t)) {}
    ValueApprox(MlpApprox m, std::size_t n_actions) : impl_(std::move(m)), n_actions_(n_actions) {}

    bool is_tabular() const { return std::holds_alternative<TabularApprox>(impl_); }
    const TabularApprox& tabular() const { return std::get<TabularApprox>(impl_); }
    const MlpApprox& mlp() const { return std::get<MlpApprox>(impl_); }

    double value(const Observation& s, std::size_t action) const {
        if (const auto* t = std::get_if<TabularApprox>(&impl_)) return t->value(s.chain, action);
        return std::get<MlpApprox>(impl_).forward(mlp_input(s, action));
    }

    /// Moves the estimate at (s, a) toward `target`: exact assignment for the
    /// tabular backend, one SGD step for the MLP.
    void update(const Observation& s, std::size_t action, double target) {
        if (!std::isfinite(target)) throw ArgumentError("non-finite regression target");
        if (auto* t = std::get_if<TabularApprox>(&impl_)) {
            t->set(s.chain, action, target);
            return;
        }
        std::get<MlpApprox>(impl_).sgd_step_inplace(mlp_input(s, action), target);
    }

    nlohmann::json to_json() const {
        if (const auto* t = std::get_if<TabularApprox>(&impl_)) return {{"backend", "tabular"}, {"model", t->to_json()}};
        return {{"backend", "mlp"}, {"actions", n_actions_}, {"model", std::get<MlpApprox>(impl_).to_json()}};
    }

    static ValueApprox from_json(const nlohmann::json& j) {
        const auto backend = j.at("backend").get<std::string>();
        if (backend == "tabular") return ValueApprox(TabularApprox::from_json(j.at("model")));
        if (backend == "mlp") return ValueApprox(MlpApprox::from_json(j.at("model")), j.at("actions").get<std::size_t>());
        throw Error("unknown approximator backend '" + backend + "'");
    }

    bool operator==(const ValueApprox&) const = default;

private:
    std::vector<double> mlp_input(const Observation& s, std::size_t action) const {
        if (action >= n_actions_) throw ArgumentError("action " + std::to_string(action) + " out of range");
        std::vector<double> x = s.embedding;
        x.resize(s.embedding.size() + n_actions_, 0.0);
        x[s.embedding.size() + action] = 1.0;
        return x;
    }

    std::variant<TabularApprox, MlpApprox> impl_;
    std::size_t n_actions_ = 0;
};

}  // namespace comet
