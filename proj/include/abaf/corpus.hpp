#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace abaf {

enum class ScaleKind { Hamd17, Phq9, Synthetic };

ScaleKind parse_scale_kind(const std::string& s);
std::string to_string(ScaleKind kind);
/// Inclusive upper bound of the instrument (52 for HAMD-17, 27 for PHQ-9).
int scale_max(ScaleKind kind);

struct SubjectRecord {
    std::string subject_id;
    std::filesystem::path wav_path;
    int label = 0;  // 0 = control, 1 = depression
    std::optional<int> scale_score;
    ScaleKind scale_kind = ScaleKind::Synthetic;
};

struct CorpusManifest {
    std::string corpus_name;
    std::vector<SubjectRecord> records;

    std::vector<int> labels() const;
};

inline constexpr const char* kManifestHeader = "subject_id,wav_path,label,scale_score,scale_kind";

/// Parses the manifest CSV. Relative wav paths resolve against the manifest's
/// directory. When `check_files` is set every wav_path must exist.
CorpusManifest load_manifest(const std::filesystem::path& path, bool check_files = true);

/// Writes the manifest CSV; wav paths are written relative to the manifest
/// directory when they live under it.
void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& path);

/// Severity bands of a rating scale: names[i] covers [lower[i], lower[i+1]-1].
struct BandTable {
    std::vector<std::string> names;
    std::vector<int> lower;

    /// Band index of a score.
    std::size_t band_of(int score) const;
    std::size_t index_of(const std::string& name) const;
};

/// NC 0-7, Mild 8-16, Moderate 17-24, Severe >= 25.
BandTable hamd17_bands();
/// NC 0, Minimal 1-4, Mild 5-9, Moderate 10-14, ModeratelySevere 15-19, Severe >= 20.
BandTable phq9_bands();
BandTable band_table_for(ScaleKind kind);

/// Label implied by the score bands (the first band is the control band).
int label_from_score(ScaleKind kind, int score);

/// Seeded stand-in for a clinical corpus: class 1 differs from class 0 by
/// pitch shift, spectral tilt and segment-duration (tempo) scaling.
struct SynthSpec {
    int n_per_class = 100;
    double duration_s = 3.0;
    double class1_pitch_shift = 0.0;   // Hz
    double class1_tilt_db = 0.0;       // dB/octave
    double class1_tempo_factor = 1.0;  // multiplies segment and pause durations
    double class1_pitch_range = 1.0;   // multiplies pitch declination and vibrato depth
    double noise_db = -50.0;           // dBFS of the additive white noise
    double max_harmonic_hz = 7000.0;   // voice bandwidth, both classes

    void validate() const;
};

inline constexpr int kSynthSampleRate = 16000;
inline constexpr double kSynthBasePitchHz = 150.0;
inline constexpr double kSynthPitchJitterHz = 10.0;
inline constexpr double kSynthBaseTiltDb = -6.0;

/// Writes 2 * n_per_class mono 16 kHz WAVs plus manifest.csv to out_dir.
/// Identical (spec, seed) produce byte-identical files.
CorpusManifest generate_synthetic_corpus(const SynthSpec& spec, std::uint64_t seed,
                                         const std::filesystem::path& out_dir);

}  // namespace abaf
