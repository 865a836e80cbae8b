#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>

#include "abaf/experiment.hpp"

namespace abaf {

inline constexpr std::array<const char*, 8> kMetricNames = {"acc",         "precision", "recall",  "f1",
                                                            "macro_f1",    "weighted_f1", "roc_auc", "pr_auc"};

/// The eight scalar metrics in kMetricNames order; absent AUCs stay empty.
std::array<std::optional<double>, 8> metric_values(const Metrics& m);

struct MetricAggregate {
    std::array<std::optional<double>, 8> mean;
    std::array<std::optional<double>, 8> std;  // population std over rows
};

/// Mean and std over the fold rows, skipping absent values.
MetricAggregate aggregate(const ExperimentReport& report);
double mean_metric(const ExperimentReport& report, const std::string& metric);

/// CSV: header, one row per fold, then `mean` and `std` rows. Absent
/// values are written as NA.
std::string report_csv(const ExperimentReport& report);
void write_report_csv(const ExperimentReport& report, const std::filesystem::path& path);

/// JSON summary with name, seed, config snapshot, per-fold and aggregate
/// metrics. `started_at` is the only time-dependent field.
std::string report_json(const ExperimentReport& report, const std::string& started_at);
void write_report_json(const ExperimentReport& report, const std::filesystem::path& path,
                       const std::string& started_at);

/// <stem>_roc.svg, <stem>_pr.svg and <stem>_confusion.svg from the
/// predictions pooled over all rows.
void write_report_plots(const ExperimentReport& report, const std::filesystem::path& dir, const std::string& stem);

/// CSV, JSON and plots under dir/<stem>.csv, dir/<stem>.json, dir/<stem>_*.svg.
void write_report_bundle(const ExperimentReport& report, const std::filesystem::path& dir, const std::string& stem,
                         const std::string& started_at);

/// Current UTC time, ISO 8601.
std::string utc_timestamp();

}  // namespace abaf
