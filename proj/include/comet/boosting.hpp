#pragma once

// Squared-error gradient boosting over binary regression trees.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "comet/error.hpp"

namespace comet {

struct TreeParams {
    int max_depth = 4;
    int min_samples_leaf = 5;
};

struct BoostParams {
    int rounds = 50;
    double shrinkage = 0.1;
    TreeParams tree;
};

/// Column-major training matrix with per-column presorted row orders, shared
/// by every tree grown on the same rows.
class TrainingMatrix {
public:
    TrainingMatrix(const std::vector<const std::vector<double>*>& rows, std::size_t width)
        : n_rows_(rows.size()), n_cols_(width), values_(rows.size() * width), order_(width) {
        for (std::size_t r = 0; r < n_rows_; ++r)
            for (std::size_t c = 0; c < n_cols_; ++c) values_[c * n_rows_ + r] = (*rows[r])[c];
        for (std::size_t c = 0; c < n_cols_; ++c) {
            auto& ord = order_[c];
            ord.resize(n_rows_);
            std::iota(ord.begin(), ord.end(), 0u);
            std::stable_sort(ord.begin(), ord.end(),
                             [&](unsigned a, unsigned b) { return at(a, c) < at(b, c); });
        }
    }

    std::size_t rows() const { return n_rows_; }
    std::size_t cols() const { return n_cols_; }
    double at(std::size_t r, std::size_t c) const { return values_[c * n_rows_ + r]; }
    const std::vector<unsigned>& order(std::size_t c) const { return order_[c]; }

private:
    std::size_t n_rows_;
    std::size_t n_cols_;
    std::vector<double> values_;
    std::vector<std::vector<unsigned>> order_;
};

/// Binary regression tree. Internal nodes send x[feature] <= threshold left;
/// every leaf holds the mean of the residuals that reached it.
class RegressionTree {
public:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0;
    };

    RegressionTree() = default;

    /// Grows a tree on `residuals` (indexed by matrix row) and writes each
    /// training row's leaf value to `fitted`.
    static RegressionTree fit(const TrainingMatrix& x, std::span<const double> residuals, const TreeParams& params,
                              std::vector<double>& fitted) {
        RegressionTree tree;
        tree.max_depth_ = params.max_depth;
        fitted.assign(x.rows(), 0.0);
        std::vector<std::vector<unsigned>> lists(x.cols());
        for (std::size_t c = 0; c < x.cols(); ++c) lists[c] = x.order(c);
        if (x.cols() == 0) {
            lists.emplace_back(x.rows());
            std::iota(lists[0].begin(), lists[0].end(), 0u);
        }
        std::vector<char> goes_left(x.rows(), 0);
        tree.grow(x, residuals, params, std::move(lists), 0, fitted, goes_left);
        return tree;
    }

    double predict(std::span<const double> features) const {
        int i = 0;
        while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
            const Node& n = nodes_[static_cast<std::size_t>(i)];
            i = features[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
        }
        return nodes_[static_cast<std::size_t>(i)].value;
    }

    const std::vector<Node>& nodes() const { return nodes_; }
    int max_depth() const { return max_depth_; }

    int depth() const { return nodes_.empty() ? 0 : depth_of(0); }

    nlohmann::json to_json() const {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& n : nodes_) arr.push_back({n.feature, n.threshold, n.left, n.right, n.value});
        return {{"max_depth", max_depth_}, {"nodes", std::move(arr)}};
    }

    static RegressionTree from_json(const nlohmann::json& j, std::size_t n_features) {
        RegressionTree t;
        t.max_depth_ = j.at("max_depth").get<int>();
        const auto& arr = j.at("nodes");
        const int count = static_cast<int>(arr.size());
        for (const auto& e : arr) {
            Node n{e.at(0).get<int>(), e.at(1).get<double>(), e.at(2).get<int>(), e.at(3).get<int>(), e.at(4).get<double>()};
            const bool leaf = n.feature < 0;
            if (!leaf && (n.feature >= static_cast<int>(n_features) || n.left <= 0 || n.right <= 0 || n.left >= count ||
                          n.right >= count))
                throw Error("tree node references out-of-range feature or child");
            t.nodes_.push_back(n);
        }
        if (t.nodes_.empty()) throw Error("tree has no nodes");
        return t;
    }

private:
    int depth_of(int i) const {
        const Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.feature < 0) return 0;
        return 1 + std::max(depth_of(n.left), depth_of(n.right));
    }

    int grow(const TrainingMatrix& x, std::span<const double> r, const TreeParams& p,
             std::vector<std::vector<unsigned>> lists, int depth, std::vector<double>& fitted,
             std::vector<char>& goes_left) {
        const auto& rows = lists[0];
        const std::size_t n = rows.size();
        double sum = 0.0;
        for (unsigned row : rows) sum += r[row];
        const double mean = n ? sum / double(n) : 0.0;

        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back(Node{-1, 0.0, -1, -1, mean});

        const std::size_t min_leaf = static_cast<std::size_t>(std::max(1, p.min_samples_leaf));
        if (depth >= p.max_depth || n < 2 * min_leaf || x.cols() == 0) {
            for (unsigned row : rows) fitted[row] = mean;
            return id;
        }

        // Maximizing sL^2/nL + sR^2/nR is minimizing the children's SSE.
        const double parent_score = sum * sum / double(n);
        double best_score = parent_score;
        int best_feature = -1;
        double best_threshold = 0.0;
        for (std::size_t c = 0; c < x.cols(); ++c) {
            const auto& ord = lists[c];
            double left_sum = 0.0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                left_sum += r[ord[i]];
                const std::size_t nl = i + 1;
                if (nl < min_leaf) continue;
                if (n - nl < min_leaf) break;
                const double lo = x.at(ord[i], c);
                const double hi = x.at(ord[i + 1], c);
                if (!(lo < hi)) continue;
                const double right_sum = sum - left_sum;
                const double score = left_sum * left_sum / double(nl) + right_sum * right_sum / double(n - nl);
                if (score > best_score * (1.0 + 1e-12) + 1e-300) {
                    best_score = score;
                    best_feature = static_cast<int>(c);
                    double mid = lo + (hi - lo) / 2.0;
                    best_threshold = mid < hi ? mid : lo;
                }
            }
        }
        if (best_feature < 0) {
            for (unsigned row : rows) fitted[row] = mean;
            return id;
        }

        const auto bf = static_cast<std::size_t>(best_feature);
        for (unsigned row : rows) goes_left[row] = x.at(row, bf) <= best_threshold ? 1 : 0;
        std::vector<std::vector<unsigned>> left(lists.size()), right(lists.size());
        for (std::size_t c = 0; c < lists.size(); ++c) {
            left[c].reserve(n);
            right[c].reserve(n);
            for (unsigned row : lists[c]) (goes_left[row] ? left[c] : right[c]).push_back(row);
        }
        lists.clear();
        lists.shrink_to_fit();

        const int l = grow(x, r, p, std::move(left), depth + 1, fitted, goes_left);
        const int rr = grow(x, r, p, std::move(right), depth + 1, fitted, goes_left);
        Node& node = nodes_[static_cast<std::size_t>(id)];
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.left = l;
        node.right = rr;
        return id;
    }

    std::vector<Node> nodes_;
    int max_depth_ = 0;
};

/// prediction = base + shrinkage * sum(tree outputs)
class BoostedRegressor {
public:
    BoostedRegressor() = default;

    static BoostedRegressor fit(const TrainingMatrix& x, std::span<const double> y, const BoostParams& params) {
        if (y.size() != x.rows()) throw ArgumentError("target count does not match row count");
        if (x.rows() == 0) throw TrainingError("no rows to fit");
        if (!(params.shrinkage > 0.0 && params.shrinkage <= 1.0)) throw ArgumentError("shrinkage must be in (0, 1]");
        if (params.rounds < 0) throw ArgumentError("rounds must be >= 0");

        BoostedRegressor model;
        model.shrinkage_ = params.shrinkage;
        model.base_ = std::accumulate(y.begin(), y.end(), 0.0) / double(y.size());

        std::vector<double> pred(y.size(), model.base_);
        std::vector<double> residual(y.size());
        std::vector<double> fitted;
        auto loss = [&] {
            double s = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - pred[i]) * (y[i] - pred[i]);
            return s / double(y.size());
        };
        model.training_loss_.push_back(loss());
        for (int round = 0; round < params.rounds; ++round) {
            for (std::size_t i = 0; i < y.size(); ++i) residual[i] = y[i] - pred[i];
            model.trees_.push_back(RegressionTree::fit(x, residual, params.tree, fitted));
            for (std::size_t i = 0; i < y.size(); ++i) pred[i] += model.shrinkage_ * fitted[i];
            model.training_loss_.push_back(loss());
        }
        return model;
    }

    double predict(std::span<const double> features) const {
        double s = 0.0;
        for (const auto& t : trees_) s += t.predict(features);
        return base_ + shrinkage_ * s;
    }

    double base_prediction() const { return base_; }
    double shrinkage() const { return shrinkage_; }
    const std::vector<RegressionTree>& trees() const { return trees_; }
    /// Mean squared training error before round 1 and after every round.
    const std::vector<double>& training_loss() const { return training_loss_; }

    bool training_loss_monotone() const {
        for (std::size_t i = 1; i < training_loss_.size(); ++i)
            if (training_loss_[i] > training_loss_[i - 1]) return false;
        return true;
    }

    nlohmann::json to_json() const {
        nlohmann::json trees = nlohmann::json::array();
        for (const auto& t : trees_) trees.push_back(t.to_json());
        return {{"base", base_}, {"shrinkage", shrinkage_}, {"trees", std::move(trees)}};
    }

    static BoostedRegressor from_json(const nlohmann::json& j, std::size_t n_features) {
        BoostedRegressor m;
        m.base_ = j.at("base").get<double>();
        m.shrinkage_ = j.at("shrinkage").get<double>();
        for (const auto& t : j.at("trees")) m.trees_.push_back(RegressionTree::from_json(t, n_features));
        return m;
    }

private:
    double base_ = 0.0;
    double shrinkage_ = 1.0;
    std::vector<RegressionTree> trees_;
    std::vector<double> training_loss_;
};

}  // namespace comet
