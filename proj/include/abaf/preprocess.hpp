#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "abaf/audio.hpp"
#include "abaf/signal.hpp"

namespace abaf {

struct FrameSpec {
    std::size_t frame_len = 400;
    std::size_t hop = 160;
    WindowKind window = WindowKind::Hamming;

    void validate() const;
    std::size_t frame_count(std::size_t n_samples) const;
};

/// Dual-threshold endpoint detection parameters. HT and LT are fractions
/// of the clip's maximum short-time energy.
struct VadParams {
    double ht_frac = 0.10;
    double lt_frac = 0.02;
    bool zcr_extend = true;
    double min_segment_ms = 50.0;

    void validate() const;
};

struct VadSegment {
    std::size_t n_start = 0;
    std::size_t n_end = 0;  // exclusive

    std::size_t length() const { return n_end - n_start; }
    friend bool operator==(const VadSegment&, const VadSegment&) = default;
};

using VadSegments = std::vector<VadSegment>;

/// Frames whose zero-crossing extension stops after this many steps.
inline constexpr std::size_t kMaxZcrExtensionFrames = 10;
/// Frames below this fraction of LT are never absorbed by ZCR extension.
inline constexpr double kZcrExtensionEnergyFloor = 0.1;
/// Peak frame energy below which a clip is treated as digital silence.
inline constexpr double kSilencePeakEnergy = 1e-12;

/// Windowed-sinc polyphase resampler (Kaiser window, cutoff at the lower
/// of the two Nyquist frequencies). Output length is
/// round(len * target_sr / source_sr).
AudioClip resample(const AudioClip& clip, int target_sr);

/// Per-frame sum of s^2(m) * w(m - frame_start).
Contour short_time_energy(const AudioClip& clip, const FrameSpec& spec);

/// Per-frame sign changes divided by (frame_len - 1). Zero counts as positive.
Contour zero_crossing_rate(const AudioClip& clip, const FrameSpec& spec);

/// Scans the energy contour for start (E > HT) / end (E < LT) pairs. A
/// segment runs from the centre of its first active frame to the centre of
/// its last active frame. A segment that
/// starts in frame 0 starts at sample 0; one that never ends runs to
/// n_samples.
VadSegments detect_endpoints(const Contour& ste, const Contour& zcr, const VadParams& params,
                             const FrameSpec& spec, std::size_t n_samples, int sample_rate);

/// Concatenates the segment sample ranges. Throws on empty segment lists so
/// the caller can flag the subject.
AudioClip apply_vad(const AudioClip& clip, const VadSegments& segments);

struct PreprocessConfig {
    int target_sr = 16000;
    double frame_ms = 25.0;
    double hop_ms = 10.0;
    WindowKind window = WindowKind::Hamming;
    VadParams vad;
    bool enable_vad = true;

    FrameSpec frame_spec(int sample_rate) const;
};

/// VAD at the source rate, then resampling to target_sr.
AudioClip preprocess_clip(const AudioClip& clip, const PreprocessConfig& cfg);

}  // namespace abaf
