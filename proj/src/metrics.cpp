#include "abaf/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "abaf/error.hpp"

namespace abaf {

namespace {

struct Sweep {
    std::vector<double> tp, fp;  // cumulative counts after each distinct threshold
    double pos = 0, neg = 0;
};

Sweep sweep(const std::vector<int>& y, const std::vector<double>& s) {
    std::vector<std::size_t> order(y.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
    Sweep w;
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (y[order[i]] == 1 ? tp : fp) += 1;
        if (i + 1 == order.size() || s[order[i + 1]] != s[order[i]]) {
            w.tp.push_back(tp);
            w.fp.push_back(fp);
        }
    }
    w.pos = tp;
    w.neg = fp;
    return w;
}

double f1_of(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

}  // namespace

Metrics compute_metrics(const std::vector<int>& y, const std::vector<double>& s, double threshold) {
    require(y.size() == s.size(), ErrorCode::ShapeMismatch, "labels and scores differ in length", "y_score");
    require(!y.empty(), ErrorCode::EmptyInput, "no predictions", "y_true");
    Metrics m;
    for (std::size_t i = 0; i < y.size(); ++i) {
        require(y[i] == 0 || y[i] == 1, ErrorCode::InvalidValue, "labels must be binary", "y_true");
        m.confusion[static_cast<std::size_t>(y[i])][s[i] >= threshold ? 1 : 0] += 1;
    }
    const double tn = static_cast<double>(m.confusion[0][0]), fp = static_cast<double>(m.confusion[0][1]);
    const double fn = static_cast<double>(m.confusion[1][0]), tp = static_cast<double>(m.confusion[1][1]);
    const double n = tn + fp + fn + tp;
    m.acc = (tp + tn) / n;
    m.precision_undefined = tp + fp == 0;
    m.recall_undefined = tp + fn == 0;
    m.precision = m.precision_undefined ? 0.0 : tp / (tp + fp);
    m.recall = m.recall_undefined ? 0.0 : tp / (tp + fn);
    m.f1 = f1_of(m.precision, m.recall);
    const double p0 = tn + fn > 0 ? tn / (tn + fn) : 0.0;
    const double r0 = tn + fp > 0 ? tn / (tn + fp) : 0.0;
    const double f1_neg = f1_of(p0, r0);
    m.macro_f1 = 0.5 * (m.f1 + f1_neg);
    m.weighted_f1 = ((tp + fn) * m.f1 + (tn + fp) * f1_neg) / n;

    if (tp + fn > 0 && tn + fp > 0) {
        const Sweep w = sweep(y, s);
        double roc = 0, ap = 0, prev_tp = 0, prev_fp = 0;
        for (std::size_t k = 0; k < w.tp.size(); ++k) {
            roc += (w.fp[k] - prev_fp) * (w.tp[k] + prev_tp) / 2.0;
            ap += (w.tp[k] - prev_tp) / w.pos * (w.tp[k] / (w.tp[k] + w.fp[k]));
            prev_tp = w.tp[k];
            prev_fp = w.fp[k];
        }
        m.roc_auc = roc / (w.pos * w.neg);
        m.pr_auc = ap;
    }
    return m;
}

std::vector<std::array<double, 2>> roc_curve(const std::vector<int>& y, const std::vector<double>& s) {
    const Sweep w = sweep(y, s);
    std::vector<std::array<double, 2>> pts{{0.0, 0.0}};
    for (std::size_t k = 0; k < w.tp.size(); ++k)
        pts.push_back({w.neg > 0 ? w.fp[k] / w.neg : 0.0, w.pos > 0 ? w.tp[k] / w.pos : 0.0});
    return pts;
}

std::vector<std::array<double, 2>> pr_curve(const std::vector<int>& y, const std::vector<double>& s) {
    const Sweep w = sweep(y, s);
    std::vector<std::array<double, 2>> pts;
    for (std::size_t k = 0; k < w.tp.size(); ++k)
        pts.push_back({w.pos > 0 ? w.tp[k] / w.pos : 0.0, w.tp[k] / (w.tp[k] + w.fp[k])});
    return pts;
}

}  // namespace abaf
