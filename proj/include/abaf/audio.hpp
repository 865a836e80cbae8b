#pragma once

#include <filesystem>
#include <vector>

namespace abaf {

/// Mono sample buffer. Samples are dimensionless amplitudes in [-1, 1].
struct AudioClip {
    std::vector<double> samples;
    int sample_rate = 0;

    std::size_t size() const { return samples.size(); }
    double duration_s() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

/// Reads a RIFF/WAVE PCM16 file, mono or stereo. Stereo is mean-downmixed.
/// Samples are divided by 32768.
AudioClip read_wav(const std::filesystem::path& path);

/// Writes mono PCM16. Values are scaled by 32768, rounded and clamped to the
/// int16 range, so read_wav(write_wav(x)) reproduces every PCM16 value.
void write_wav(const std::filesystem::path& path, const AudioClip& clip);

/// Encodes mono PCM16 WAV bytes (the exact payload write_wav emits).
std::vector<unsigned char> encode_wav(const AudioClip& clip);

}  // namespace abaf
