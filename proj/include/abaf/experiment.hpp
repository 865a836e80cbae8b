#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "abaf/corpus.hpp"
#include "abaf/features.hpp"
#include "abaf/metrics.hpp"
#include "abaf/models.hpp"
#include "abaf/training.hpp"

namespace abaf {

enum class FeatureKind { Envelope, Spectrogram, Mel, Hsf };
inline constexpr std::array<FeatureKind, 4> kAllFeatures = {FeatureKind::Envelope, FeatureKind::Spectrogram,
                                                            FeatureKind::Mel, FeatureKind::Hsf};
std::string to_string(FeatureKind kind);
FeatureKind parse_feature_kind(const std::string& s);

/// Extracted features of a corpus held in memory, one row per subject.
struct FeatureSet {
    std::vector<std::string> ids;
    std::vector<int> labels;
    std::vector<std::optional<int>> scores;
    ScaleKind scale_kind = ScaleKind::Synthetic;
    std::array<nn::Tensor, 3> images;      // envelope, spectrogram, mel: N x C x H x W
    std::vector<std::vector<double>> hsf;  // N x 6552

    std::size_t size() const { return ids.size(); }
    FeatureSet select(const std::vector<std::size_t>& idx) const;
    void validate() const;
};

FeatureSet make_feature_set(const std::vector<SubjectRecord>& records, const std::vector<FeatureBundle>& bundles);

struct ExperimentConfig {
    std::size_t folds = 5;
    double val_fraction = 0.2;
    std::size_t hsf_top_k = 291;
    ImageModelConfig image;
    NumModelConfig num;
    FusionConfig fusion;
    TrainConfig train;
    TrainConfig fusion_train;
    WamWeights wam;
    double threshold = 0.5;
    bool fine_tune = false;  // update sub-models during fusion training
    std::uint64_t seed = 0;
    /// When set, trained models are saved as <dir>/fold<k>/<feature>.ckpt and
    /// <dir>/fold<k>/fusion.ckpt (ablation heads: fusion_without_<feature>.ckpt).
    std::filesystem::path checkpoint_dir;
    void validate() const;
};

struct FoldResult {
    std::size_t repeat = 0;
    std::size_t fold = 0;
    Metrics metrics;
    std::vector<std::string> ids;
    std::vector<int> y_true;
    std::vector<double> y_score;
    std::vector<double> weights;     // fusion stream weights (empty for single features)
    std::vector<double> sub_scores;  // WAM scores of the sub-models on validation
    std::size_t best_epoch = 0;
};

struct ExperimentReport {
    std::string name;
    std::uint64_t seed = 0;
    std::string config_snapshot;
    std::vector<FoldResult> folds;
};

/// Everything one cross-validation pass produces. Sub-models are trained
/// once per fold and shared by every requested report.
struct ExperimentOutputs {
    std::array<std::optional<ExperimentReport>, 4> single;  // indexed by FeatureKind
    std::optional<ExperimentReport> fusion;
    std::vector<ExperimentReport> ablation;  // one per excluded stream, in kAllFeatures order
};

struct ExperimentRequest {
    std::array<bool, 4> single{false, false, false, false};
    bool fusion = false;
    bool ablation = false;
};

ExperimentOutputs run_experiments(const FeatureSet& data, const ExperimentConfig& cfg,
                                  const ExperimentRequest& request);

ExperimentReport run_single_feature_experiment(const FeatureSet& data, FeatureKind kind, const ExperimentConfig& cfg);
ExperimentReport run_fusion_experiment(const FeatureSet& data, const ExperimentConfig& cfg);
std::vector<ExperimentReport> run_ablation(const FeatureSet& data, const ExperimentConfig& cfg);

/// 1 iff score >= t.
std::vector<int> label_by_threshold(const std::vector<int>& scores, int t);

/// Band pair task: subjects of bands a and b relabeled 0 / 1, balanced by
/// downsampling, fusion experiment repeated `repeats` times. Rows of the
/// report are (repeat, fold) pairs.
ExperimentReport run_subtype_pair(const FeatureSet& data, const BandTable& bands, std::size_t band_a,
                                  std::size_t band_b, std::size_t repeats, const ExperimentConfig& cfg);
/// Every band pair with both bands non-empty, in (a, b) order with a < b.
std::vector<ExperimentReport> run_subtype_tasks(const FeatureSet& data, const BandTable& bands, std::size_t repeats,
                                                const ExperimentConfig& cfg);
/// One fusion experiment per threshold on relabeled data.
std::vector<ExperimentReport> run_threshold_sweep(const FeatureSet& data, const std::vector<int>& thresholds,
                                                  const ExperimentConfig& cfg);

}  // namespace abaf
