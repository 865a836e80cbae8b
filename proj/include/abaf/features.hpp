#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "abaf/audio.hpp"
#include "abaf/dsp.hpp"
#include "abaf/signal.hpp"

namespace abaf {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ExtractionConfig {
    int sample_rate = 16000;
    double envelope_lp_ms = 20.0;

    std::size_t spectro_n_fft = 2048;
    std::size_t spectro_hop = 512;
    std::size_t image_n_mels = 64;

    std::size_t lld_frame = 512;
    std::size_t lld_hop = 160;
    std::size_t lld_n_mels = 26;
    std::size_t n_mfcc = 13;
    double f0_min = 62.5;
    double f0_max = 500.0;
    double voicing_threshold = 0.45;

    std::size_t image_side = 64;
    std::size_t image_channels = 1;

    void validate() const;
};

// ---------------------------------------------------------------------------
// Low-level descriptors
// ---------------------------------------------------------------------------

inline constexpr std::size_t kEnergyLlds = 2;
inline constexpr std::size_t kSpectralLlds = 51;
inline constexpr std::size_t kVoicingLlds = 3;
inline constexpr std::size_t kNumLlds = kEnergyLlds + kSpectralLlds + kVoicingLlds;
inline constexpr std::size_t kNumVariants = 3;
inline constexpr std::size_t kNumFunctionals = 39;
inline constexpr std::size_t kHsfLength = kNumLlds * kNumVariants * kNumFunctionals;
static_assert(kNumLlds == 56);
static_assert(kHsfLength == 6552);

inline constexpr double kLogEnergyFloorDb = -87.0;
/// F0 picks the shortest lag whose correlation reaches this share of the
/// maximum, which suppresses sub-octave errors on exactly periodic input.
inline constexpr double kOctaveGuard = 0.97;
inline constexpr std::size_t kF0EnvFrames = 3;

/// LLD names in row order.
const std::vector<std::string>& lld_names();

/// [56 x T] contours on a shared frame grid.
struct LldMatrix {
    Matrix values;
    double frame_rate = 0.0;
};

LldMatrix compute_llds(const AudioClip& clip, const ExtractionConfig& cfg);

/// Regression delta over +/-2 frames with edge replication, applied `order`
/// times. Rows are contours.
Matrix delta(const Matrix& contours, int order);

// ---------------------------------------------------------------------------
// Functionals
// ---------------------------------------------------------------------------

const std::array<std::string, kNumFunctionals>& functional_names();

/// 39 statistics of one contour, in functional_names() order.
std::array<double, kNumFunctionals> apply_functionals(std::span<const double> contour);

// ---------------------------------------------------------------------------
// HSF vector and images
// ---------------------------------------------------------------------------

/// Utterance-level statistical feature vector. Names are
/// `<lld>_<variant>_<functional>` with variant in {raw, de, dede}; ordering is
/// LLD-major, variant-middle, functional-minor.
struct HsfVector {
    std::vector<double> values;

    static const std::vector<std::string>& names();
};

HsfVector assemble_hsf(const AudioClip& clip, const ExtractionConfig& cfg);
/// Same, from already computed LLDs.
HsfVector assemble_hsf(const LldMatrix& llds);

enum class ImageKind { Envelope, Spectrogram, Mel };

struct FeatureImage {
    std::size_t channels = 1;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> pixels;  // [C x H x W]
    ImageKind kind = ImageKind::Envelope;

    double at(std::size_t c, std::size_t r, std::size_t col) const {
        return pixels[(c * height + r) * width + col];
    }
};

/// Value used for every pixel when the source feature is constant.
inline constexpr double kDegenerateImageValue = 0.5;

/// |x| convolved with a unit-sum moving average of round(sr*lp_len_ms/1000)
/// samples, "same" output length.
Contour upper_envelope(const AudioClip& clip, double lp_len_ms);

/// Area plot: column j is filled bottom-up to round(H * v(j/(W-1))) pixels,
/// v being the min-max normalized envelope (linear interpolation in time).
FeatureImage rasterize(const Contour& envelope, std::size_t H, std::size_t W, std::size_t C);

/// Min-max normalization to [0,1] and bilinear (corner-aligned) resize.
/// Row 0 of the image holds the highest bin.
FeatureImage rasterize(const SpectroMatrix& spectro, ImageKind kind, std::size_t H, std::size_t W,
                       std::size_t C);

struct FeatureBundle {
    FeatureImage envelope_img;
    FeatureImage spectro_img;
    FeatureImage mel_img;
    HsfVector hsf;
};

/// All four features of a preprocessed (voiced, resampled) clip.
FeatureBundle extract_bundle(const AudioClip& clip, const ExtractionConfig& cfg);

/// Indices of the k features with the largest |Welch t| between the two
/// label groups; ties go to the lower index. Rows are subjects.
std::vector<std::size_t> select_top_k(const std::vector<std::vector<double>>& hsf_rows,
                                      const std::vector<int>& labels, std::size_t k);

}  // namespace abaf
