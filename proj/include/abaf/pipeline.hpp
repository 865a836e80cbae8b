#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "abaf/analysis.hpp"
#include "abaf/config.hpp"
#include "abaf/corpus.hpp"
#include "abaf/experiment.hpp"
#include "abaf/features.hpp"
#include "abaf/preprocess.hpp"

namespace abaf {

enum class Profile { Paper, Desk };
std::string to_string(Profile p);
Profile parse_profile(const std::string& s);

/// Every tunable of the pipeline. Profiles fill all sections; a config file
/// or flags override individual keys.
struct PipelineConfig {
    Profile profile = Profile::Desk;
    std::filesystem::path corpus_dir = "corpus";
    std::filesystem::path cache_dir = "cache";
    std::filesystem::path out_dir = "runs";
    PreprocessConfig preprocess;
    ExtractionConfig extraction;
    ExperimentConfig experiment;
    SynthSpec synth;
    RankConfig analysis;
    std::size_t subtype_repeats = 10;
    std::vector<int> sweep_thresholds{3, 4, 5};
    std::uint64_t seed = 0;

    static PipelineConfig paper();
    static PipelineConfig desk();
    static PipelineConfig for_profile(Profile p);

    /// Canonical `section.key = value` form, keys sorted.
    KeyValueConfig to_kv() const;
    /// Starts from the profile named by `profile` (desk when absent) and
    /// applies every other key. Unknown keys are an error.
    static PipelineConfig from_kv(const KeyValueConfig& kv);
    /// Applies the keys of `kv` on top of this config.
    void apply(const KeyValueConfig& kv);

    /// Copies extraction-derived sizes into the model sections and seeds
    /// into the experiment; call after every change.
    void resolve();
    void validate() const;

    /// Hash of the preprocess and extraction sections; cache entries are
    /// keyed by it.
    std::uint64_t extraction_hash() const;
};

struct ExtractSummary {
    std::size_t extracted = 0;
    std::size_t reused = 0;
    std::vector<std::string> skipped;  // "id: reason"
};

inline constexpr const char* kIndexHeader = "subject_id,label,scale_score,scale_kind,cache_file";

/// Extracts (or reuses) one cached FeatureBundle per subject, using `jobs`
/// worker threads, then writes index.csv, hsf.csv and extraction.cfg into
/// the cache directory. Subjects that fail preprocessing are skipped and
/// reported.
ExtractSummary extract_corpus(const CorpusManifest& manifest, const PipelineConfig& cfg,
                              const std::filesystem::path& cache_dir, std::size_t jobs);

/// Reads index.csv and the cached bundles matching cfg.extraction_hash().
FeatureSet load_feature_set(const std::filesystem::path& cache_dir, const PipelineConfig& cfg);

/// HSF matrix from hsf.csv: ids, names and rows.
struct HsfTable {
    std::vector<std::string> ids;
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
};
HsfTable load_hsf_csv(const std::filesystem::path& path);

}  // namespace abaf
