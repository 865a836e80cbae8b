#include "abaf/reports.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <sstream>

#include "abaf/error.hpp"
#include "abaf/text_io.hpp"
#include "json.hpp"

namespace abaf {

std::array<std::optional<double>, 8> metric_values(const Metrics& m) {
    return {m.acc, m.precision, m.recall, m.f1, m.macro_f1, m.weighted_f1, m.roc_auc, m.pr_auc};
}

MetricAggregate aggregate(const ExperimentReport& report) {
    MetricAggregate agg;
    for (std::size_t j = 0; j < 8; ++j) {
        std::vector<double> v;
        for (const auto& f : report.folds)
            if (auto x = metric_values(f.metrics)[j]) v.push_back(*x);
        if (v.empty()) continue;
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        agg.mean[j] = mean;
        agg.std[j] = std::sqrt(var / static_cast<double>(v.size()));
    }
    return agg;
}

double mean_metric(const ExperimentReport& report, const std::string& metric) {
    const MetricAggregate agg = aggregate(report);
    for (std::size_t j = 0; j < 8; ++j)
        if (metric == kMetricNames[j]) {
            require(agg.mean[j].has_value(), ErrorCode::DegenerateData, "metric '" + metric + "' is undefined",
                    "metric");
            return *agg.mean[j];
        }
    fail(ErrorCode::InvalidArgument, "unknown metric '" + metric + "'", "metric");
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

}  // namespace

std::string report_csv(const ExperimentReport& report) {
    require(!report.folds.empty(), ErrorCode::EmptyInput, "report has no rows", "report");
    std::vector<std::string> header{"row", "repeat", "fold", "n"};
    for (const char* m : kMetricNames) header.push_back(m);
    for (const char* c : {"tn", "fp", "fn", "tp"}) header.push_back(c);
    std::ostringstream os;
    os << csv_row(header);
    for (const auto& f : report.folds) {
        std::vector<std::string> row{"fold", std::to_string(f.repeat), std::to_string(f.fold),
                                     std::to_string(f.metrics.n())};
        for (const auto& v : metric_values(f.metrics)) row.push_back(cell(v));
        const auto& c = f.metrics.confusion;
        for (long x : {c[0][0], c[0][1], c[1][0], c[1][1]}) row.push_back(std::to_string(x));
        os << csv_row(row);
    }
    const MetricAggregate agg = aggregate(report);
    for (const char* which : {"mean", "std"}) {
        std::vector<std::string> row{which, "", "", ""};
        const auto& vals = std::string(which) == "mean" ? agg.mean : agg.std;
        for (const auto& v : vals) row.push_back(cell(v));
        for (int i = 0; i < 4; ++i) row.push_back("");
        os << csv_row(row);
    }
    return os.str();
}

void write_report_csv(const ExperimentReport& report, const std::filesystem::path& path) {
    write_text_file(path, report_csv(report));
}

std::string report_json(const ExperimentReport& report, const std::string& started_at) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["name"] = report.name;
    j["seed"] = report.seed;
    j["started_at"] = started_at;
    j["config"] = report.config_snapshot;
    auto metrics_json = [](const std::array<std::optional<double>, 8>& v) {
        ordered_json m = ordered_json::object();
        for (std::size_t i = 0; i < 8; ++i) m[kMetricNames[i]] = v[i] ? ordered_json(*v[i]) : ordered_json(nullptr);
        return m;
    };
    ordered_json rows = ordered_json::array();
    for (const auto& f : report.folds) {
        ordered_json r;
        r["repeat"] = f.repeat;
        r["fold"] = f.fold;
        r["n"] = f.metrics.n();
        r["metrics"] = metrics_json(metric_values(f.metrics));
        const auto& c = f.metrics.confusion;
        r["confusion"] = {{c[0][0], c[0][1]}, {c[1][0], c[1][1]}};
        r["weights"] = f.weights;
        r["sub_scores"] = f.sub_scores;
        r["best_epoch"] = f.best_epoch;
        rows.push_back(r);
    }
    j["folds"] = rows;
    const MetricAggregate agg = aggregate(report);
    j["mean"] = metrics_json(agg.mean);
    j["std"] = metrics_json(agg.std);
    return j.dump(2) + "\n";
}

void write_report_json(const ExperimentReport& report, const std::filesystem::path& path,
                       const std::string& started_at) {
    write_text_file(path, report_json(report, started_at));
}

namespace {

constexpr double kPlot = 360.0, kMargin = 50.0;

std::string fmt(double v) { return format_fixed(v, 2); }

std::string svg_curve(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                      const std::vector<std::array<double, 2>>& pts, bool diagonal, bool step) {
    std::ostringstream os;
    const double size = kPlot + 2 * kMargin;
    auto X = [](double x) { return kMargin + x * kPlot; };
    auto Y = [](double y) { return kMargin + (1.0 - y) * kPlot; };
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << size << "\" height=\"" << size << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << size / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n";
    os << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kPlot << "\" height=\"" << kPlot
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = t / 4.0;
        os << "<text x=\"" << fmt(X(v)) << "\" y=\"" << fmt(kMargin + kPlot + 16)
           << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt(v) << "</text>\n";
        os << "<text x=\"" << fmt(kMargin - 6) << "\" y=\"" << fmt(Y(v) + 4)
           << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(v) << "</text>\n";
    }
    os << "<text x=\"" << size / 2 << "\" y=\"" << size - 8 << "\" text-anchor=\"middle\" font-size=\"13\">" << xlabel
       << "</text>\n";
    os << "<text x=\"14\" y=\"" << size / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 14 "
       << size / 2 << ")\">" << ylabel << "</text>\n";
    if (diagonal)
        os << "<line x1=\"" << X(0) << "\" y1=\"" << Y(0) << "\" x2=\"" << X(1) << "\" y2=\"" << Y(1)
           << "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
    os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (step && i > 0) os << fmt(X(pts[i][0])) << "," << fmt(Y(pts[i - 1][1])) << " ";
        os << fmt(X(pts[i][0])) << "," << fmt(Y(pts[i][1])) << " ";
    }
    os << "\"/>\n</svg>\n";
    return os.str();
}

std::string svg_confusion(const std::string& title, const std::array<std::array<long, 2>, 2>& c) {
    std::ostringstream os;
    const double cellsz = 140, size = 2 * cellsz + 2 * kMargin + 40;
    long total = 0, peak = 1;
    for (const auto& r : c)
        for (long v : r) {
            total += v;
            peak = std::max(peak, v);
        }
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << size << "\" height=\"" << size << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << size / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n";
    const char* names[] = {"control", "depressed"};
    for (int t = 0; t < 2; ++t)
        for (int p = 0; p < 2; ++p) {
            const double x = kMargin + 40 + p * cellsz, y = kMargin + t * cellsz;
            const int shade = 255 - static_cast<int>(std::lround(200.0 * static_cast<double>(c[t][p]) / peak));
            os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cellsz << "\" height=\"" << cellsz
               << "\" fill=\"rgb(" << shade << "," << shade << ",255)\" stroke=\"black\"/>\n";
            os << "<text x=\"" << x + cellsz / 2 << "\" y=\"" << y + cellsz / 2 + 6
               << "\" text-anchor=\"middle\" font-size=\"18\">" << c[t][p] << "</text>\n";
        }
    for (int i = 0; i < 2; ++i) {
        os << "<text x=\"" << kMargin + 40 + i * cellsz + cellsz / 2 << "\" y=\"" << kMargin + 2 * cellsz + 18
           << "\" text-anchor=\"middle\" font-size=\"12\">pred " << names[i] << "</text>\n";
        os << "<text x=\"" << kMargin + 34 << "\" y=\"" << kMargin + i * cellsz + cellsz / 2
           << "\" text-anchor=\"end\" font-size=\"12\">" << names[i] << "</text>\n";
    }
    os << "<text x=\"" << size / 2 << "\" y=\"" << size - 10 << "\" text-anchor=\"middle\" font-size=\"12\">n = " << total
       << "</text>\n</svg>\n";
    return os.str();
}

}  // namespace

void write_report_plots(const ExperimentReport& report, const std::filesystem::path& dir, const std::string& stem) {
    std::vector<int> y;
    std::vector<double> s;
    std::array<std::array<long, 2>, 2> conf{};
    for (const auto& f : report.folds) {
        y.insert(y.end(), f.y_true.begin(), f.y_true.end());
        s.insert(s.end(), f.y_score.begin(), f.y_score.end());
        for (int t = 0; t < 2; ++t)
            for (int p = 0; p < 2; ++p) conf[t][p] += f.metrics.confusion[t][p];
    }
    require(!y.empty(), ErrorCode::EmptyInput, "report has no predictions", "report");
    write_text_file(dir / (stem + "_roc.svg"),
                    svg_curve(report.name + " ROC", "false positive rate", "true positive rate", roc_curve(y, s), true,
                              false));
    write_text_file(dir / (stem + "_pr.svg"),
                    svg_curve(report.name + " precision-recall", "recall", "precision", pr_curve(y, s), false, true));
    write_text_file(dir / (stem + "_confusion.svg"), svg_confusion(report.name + " confusion", conf));
}

void write_report_bundle(const ExperimentReport& report, const std::filesystem::path& dir, const std::string& stem,
                         const std::string& started_at) {
    std::filesystem::create_directories(dir);
    write_report_csv(report, dir / (stem + ".csv"));
    write_report_json(report, dir / (stem + ".json"), started_at);
    write_report_plots(report, dir, stem);
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace abaf
