#include <algorithm>
#include <numeric>
#include <sstream>

#include "abaf/analysis.hpp"
#include "abaf/error.hpp"
#include "abaf/text_io.hpp"

namespace abaf {

std::string feature_category(const std::string& name) {
    auto starts = [&](const char* prefix) { return name.rfind(prefix, 0) == 0; };
    if (starts("mfcc")) return "MFCC";
    if (starts("melspec")) return "Mel Spec";
    if (starts("logEnergy") || starts("zcr")) return "Envelope";
    if (starts("fband") || starts("spectral")) return "Energy Spec";
    if (starts("F0")) return "Prosodic";
    if (starts("voiceProb")) return "Voicing";
    return "Other";
}

std::vector<TTestResult> rank_significant_features(const std::vector<std::vector<double>>& X,
                                                   const std::vector<int>& labels,
                                                   const std::vector<std::string>& names,
                                                   const RankConfig& cfg) {
    require(X.size() == labels.size(), ErrorCode::ShapeMismatch, "rows and labels differ in count", "labels");
    require(!X.empty(), ErrorCode::EmptyInput, "no subjects", "X");
    const std::size_t d = names.size();
    std::size_t n1 = 0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        require(X[i].size() == d, ErrorCode::ShapeMismatch, "row length differs from the name list", "X");
        require(labels[i] == 0 || labels[i] == 1, ErrorCode::InvalidValue, "labels must be binary", "labels");
        n1 += static_cast<std::size_t>(labels[i]);
    }
    require(n1 > 0 && n1 < labels.size(), ErrorCode::DegenerateData, "labels contain one class", "labels");
    require(cfg.alpha > 0.0 && cfg.alpha <= 1.0, ErrorCode::InvalidArgument, "alpha must be in (0,1]", "alpha");

    std::vector<TTestResult> all(d);
    std::vector<double> p(d, 1.0);
    for (std::size_t j = 0; j < d; ++j) {
        std::vector<double> a, b;
        for (std::size_t i = 0; i < X.size(); ++i) (labels[i] ? a : b).push_back(X[i][j]);
        all[j].feature_name = names[j];
        all[j].category = feature_category(names[j]);
        try {
            const WelchResult w = welch_t_test(a, b);
            all[j].t_stat = w.t;
            p[j] = w.p;
        } catch (const Error&) {
            // constant within a group: no test, p stays 1
        }
        all[j].p_value = p[j];
    }
    const std::vector<double> q = bh_fdr(p);

    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < d; ++j) {
        all[j].q_value = q[j];
        const double v = cfg.filter == SignificanceFilter::QValue ? q[j] : p[j];
        if (v < cfg.alpha) keep.push_back(j);
    }
    std::vector<TTestResult> out;
    if (keep.empty()) return out;

    std::vector<std::vector<double>> sub(X.size(), std::vector<double>(keep.size()));
    for (std::size_t i = 0; i < X.size(); ++i)
        for (std::size_t k = 0; k < keep.size(); ++k) sub[i][k] = X[i][keep[k]];
    const RandomForest forest = random_forest_fit(sub, labels, cfg.rf);
    std::vector<std::size_t> order(keep.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return forest.importance[a] > forest.importance[b]; });
    for (std::size_t k : order) {
        TTestResult r = all[keep[k]];
        r.rf_score = forest.importance[k];
        out.push_back(std::move(r));
    }
    return out;
}

void emit_feature_report(const std::vector<TTestResult>& table, const std::filesystem::path& path) {
    require(!table.empty(), ErrorCode::EmptyInput, "feature report has no significant rows", "table");
    std::ostringstream os;
    os << csv_row({"FeatureName", "t", "q(FDR)", "RF_Score", "Category"});
    for (const auto& r : table)
        os << csv_row({r.feature_name, format_double(r.t_stat), format_double(r.q_value), format_double(r.rf_score),
                       r.category});
    write_text_file(path, os.str());
}

}  // namespace abaf
