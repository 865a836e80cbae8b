#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace abaf {

// ---------------------------------------------------------------------------
// Two-sample tests and multiple-testing correction
// ---------------------------------------------------------------------------

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;  // two-sided
};

/// Unequal-variance t-test of mean(a) - mean(b). Each sample needs at least
/// two values; both variances zero is degenerate.
WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

/// Benjamini-Hochberg adjusted q-values in input order.
std::vector<double> bh_fdr(const std::vector<double>& p_values);

// ---------------------------------------------------------------------------
// Random forest
// ---------------------------------------------------------------------------

struct RfConfig {
    std::size_t n_trees = 100;
    std::size_t max_depth = 0;          // 0 = unlimited
    std::size_t features_per_split = 0; // 0 = floor(sqrt(d)), at least 1
    std::size_t min_leaf = 1;
    std::uint64_t seed = 0;
    void validate() const;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    double p1 = 0.0;  // share of class 1 in the node
};

struct RandomForest {
    std::vector<std::vector<TreeNode>> trees;
    std::vector<double> importance;  // mean decrease in Gini impurity, sums to 1
    std::size_t n_features = 0;

    /// Mean over trees of the leaf class-1 share.
    double predict_proba(const std::vector<double>& x) const;
};

/// Bootstrap-sampled Gini trees. Rows of X are samples.
RandomForest random_forest_fit(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                               const RfConfig& cfg);
const std::vector<double>& rf_importance(const RandomForest& forest);

// ---------------------------------------------------------------------------
// Significant-feature report
// ---------------------------------------------------------------------------

struct TTestResult {
    std::string feature_name;
    double t_stat = 0.0;
    double p_value = 1.0;
    double q_value = 1.0;
    double rf_score = 0.0;
    std::string category;
};

enum class SignificanceFilter { QValue, PValue };

struct RankConfig {
    double alpha = 0.01;
    SignificanceFilter filter = SignificanceFilter::QValue;
    RfConfig rf;
};

/// Table category from the LLD name prefix of an HSF feature name.
std::string feature_category(const std::string& feature_name);

/// Welch test per column (class 1 minus class 0), BH over all columns, keep
/// rows passing the filter, then order by random-forest importance (fit on
/// the surviving columns) descending, ties by column index.
std::vector<TTestResult> rank_significant_features(const std::vector<std::vector<double>>& X,
                                                   const std::vector<int>& labels,
                                                   const std::vector<std::string>& names,
                                                   const RankConfig& cfg);

/// CSV columns FeatureName,t,q(FDR),RF_Score,Category.
void emit_feature_report(const std::vector<TTestResult>& table, const std::filesystem::path& path);

}  // namespace abaf
