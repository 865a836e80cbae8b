#pragma once

#include <array>
#include <optional>
#include <vector>

namespace abaf {

/// Binary classification metrics with class 1 (depression) as positive.
struct Metrics {
    double acc = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double macro_f1 = 0.0;     // mean of the two per-class F1 scores
    double weighted_f1 = 0.0;  // support-weighted per-class F1
    std::optional<double> roc_auc;  // absent when y_true has one class
    std::optional<double> pr_auc;
    std::array<std::array<long, 2>, 2> confusion{};  // [true][predicted]
    bool precision_undefined = false;  // no positive predictions
    bool recall_undefined = false;     // no positive truths

    long n() const { return confusion[0][0] + confusion[0][1] + confusion[1][0] + confusion[1][1]; }
};

/// Prediction is positive when score >= threshold. ROC-AUC is the trapezoid
/// area over all distinct score thresholds; PR-AUC is the step sum
/// sum_k (R_k - R_{k-1}) P_k (average precision).
Metrics compute_metrics(const std::vector<int>& y_true, const std::vector<double>& y_score,
                        double threshold = 0.5);

/// ROC curve points (FPR, TPR) from the highest threshold down.
std::vector<std::array<double, 2>> roc_curve(const std::vector<int>& y_true, const std::vector<double>& y_score);
/// PR curve points (recall, precision) from the highest threshold down.
std::vector<std::array<double, 2>> pr_curve(const std::vector<int>& y_true, const std::vector<double>& y_score);

}  // namespace abaf
