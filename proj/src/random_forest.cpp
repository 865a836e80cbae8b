#include <algorithm>
#include <cmath>
#include <numeric>

#include "abaf/analysis.hpp"
#include "abaf/error.hpp"
#include "abaf/rng.hpp"

namespace abaf {

void RfConfig::validate() const {
    require(n_trees >= 1, ErrorCode::InvalidArgument, "n_trees must be >= 1", "rf.n_trees");
    require(min_leaf >= 1, ErrorCode::InvalidArgument, "min_leaf must be >= 1", "rf.min_leaf");
}

namespace {

double gini(double n1, double n) {
    if (n <= 0) return 0.0;
    const double p = n1 / n;
    return 2.0 * p * (1.0 - p);
}

struct Builder {
    const std::vector<std::vector<double>>& X;
    const std::vector<int>& y;
    const RfConfig& cfg;
    std::size_t mtry;
    Rng& rng;
    std::vector<TreeNode>& nodes;
    std::vector<double>& gain;  // per-feature weighted impurity decrease

    int build(std::vector<std::size_t>& idx, std::size_t depth) {
        const double n = static_cast<double>(idx.size());
        double n1 = 0;
        for (std::size_t i : idx) n1 += y[i];
        const int id = static_cast<int>(nodes.size());
        nodes.push_back({});
        nodes[id].p1 = n1 / n;

        const bool pure = n1 == 0 || n1 == n;
        const bool deep = cfg.max_depth > 0 && depth >= cfg.max_depth;
        if (pure || deep || idx.size() < 2 * cfg.min_leaf) return id;

        const std::size_t d = X.front().size();
        std::vector<std::size_t> feats(d);
        std::iota(feats.begin(), feats.end(), 0);
        for (std::size_t k = 0; k < mtry; ++k) std::swap(feats[k], feats[k + rng.below(d - k)]);

        const double parent = gini(n1, n);
        double best_gain = 0.0, best_thr = 0.0;
        int best_f = -1;
        std::vector<std::size_t> sorted = idx;
        for (std::size_t k = 0; k < mtry; ++k) {
            const std::size_t f = feats[k];
            std::stable_sort(sorted.begin(), sorted.end(),
                             [&](std::size_t a, std::size_t b) { return X[a][f] < X[b][f]; });
            double l1 = 0;
            for (std::size_t s = 0; s + 1 < sorted.size(); ++s) {
                l1 += y[sorted[s]];
                const double xl = X[sorted[s]][f], xr = X[sorted[s + 1]][f];
                if (xl == xr) continue;
                const double nl = static_cast<double>(s + 1), nr = n - nl;
                if (nl < static_cast<double>(cfg.min_leaf) || nr < static_cast<double>(cfg.min_leaf)) continue;
                const double g = parent - (nl * gini(l1, nl) + nr * gini(n1 - l1, nr)) / n;
                if (g > best_gain) {
                    best_gain = g;
                    best_f = static_cast<int>(f);
                    best_thr = xl + (xr - xl) / 2;
                }
            }
        }
        if (best_f < 0) return id;

        gain[static_cast<std::size_t>(best_f)] += n * best_gain;
        std::vector<std::size_t> left, right;
        for (std::size_t i : idx) (X[i][static_cast<std::size_t>(best_f)] <= best_thr ? left : right).push_back(i);
        idx.clear();
        idx.shrink_to_fit();
        nodes[id].feature = best_f;
        nodes[id].threshold = best_thr;
        const int l = build(left, depth + 1);
        const int r = build(right, depth + 1);
        nodes[id].left = l;
        nodes[id].right = r;
        return id;
    }
};

}  // namespace

RandomForest random_forest_fit(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                               const RfConfig& cfg) {
    cfg.validate();
    require(X.size() == y.size(), ErrorCode::ShapeMismatch, "X and y differ in row count", "y");
    require(X.size() >= 2, ErrorCode::DegenerateData, "need at least two samples", "X");
    const std::size_t d = X.front().size();
    require(d >= 1, ErrorCode::EmptyInput, "no features", "X");
    std::size_t n1 = 0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        require(X[i].size() == d, ErrorCode::ShapeMismatch, "ragged feature rows", "X");
        require(y[i] == 0 || y[i] == 1, ErrorCode::InvalidValue, "labels must be binary", "y");
        n1 += static_cast<std::size_t>(y[i]);
    }
    require(n1 > 0 && n1 < y.size(), ErrorCode::DegenerateData, "labels contain one class", "y");

    std::size_t mtry = cfg.features_per_split;
    if (mtry == 0) mtry = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d)))));
    mtry = std::min(mtry, d);

    RandomForest forest;
    forest.n_features = d;
    forest.importance.assign(d, 0.0);
    std::size_t contributing = 0;
    for (std::size_t t = 0; t < cfg.n_trees; ++t) {
        Rng rng = Rng::named(cfg.seed, "rf/tree" + std::to_string(t));
        std::vector<std::size_t> boot(X.size());
        for (auto& i : boot) i = rng.below(X.size());
        std::vector<TreeNode> nodes;
        std::vector<double> gain(d, 0.0);
        Builder b{X, y, cfg, mtry, rng, nodes, gain};
        b.build(boot, 0);
        const double total = std::accumulate(gain.begin(), gain.end(), 0.0);
        if (total > 0.0) {
            for (std::size_t f = 0; f < d; ++f) forest.importance[f] += gain[f] / total;
            ++contributing;
        }
        forest.trees.push_back(std::move(nodes));
    }
    if (contributing == 0) {
        std::fill(forest.importance.begin(), forest.importance.end(), 1.0 / static_cast<double>(d));
    } else {
        const double total = std::accumulate(forest.importance.begin(), forest.importance.end(), 0.0);
        for (double& v : forest.importance) v /= total;
    }
    return forest;
}

double RandomForest::predict_proba(const std::vector<double>& x) const {
    require(x.size() == n_features, ErrorCode::ShapeMismatch, "feature count differs from the forest", "x");
    double s = 0.0;
    for (const auto& nodes : trees) {
        int k = 0;
        while (nodes[k].feature >= 0)
            k = x[static_cast<std::size_t>(nodes[k].feature)] <= nodes[k].threshold ? nodes[k].left : nodes[k].right;
        s += nodes[k].p1;
    }
    return s / static_cast<double>(trees.size());
}

const std::vector<double>& rf_importance(const RandomForest& forest) { return forest.importance; }

}  // namespace abaf
