#pragma once

// Seeded test signals shared by the unit and acceptance suites.

#include <cmath>
#include <cstdint>

#include "abaf/audio.hpp"
#include "abaf/rng.hpp"

namespace construct {

struct ToneBurst {
    abaf::AudioClip clip;
    std::size_t on = 0;   // first tone sample
    std::size_t off = 0;  // one past the last tone sample
};

/// Silence | tone | silence with additive white noise at `noise_db` dBFS.
/// Seed varies tone frequency, amplitude and boundaries.
inline ToneBurst silence_tone_silence(std::uint64_t seed, double noise_db = -60.0) {
    abaf::Rng rng = abaf::Rng::named(seed, "vad-construction");
    const int sr = 16000;
    const double total_s = 2.0 + rng.uniform(0.0, 0.5);
    const double on_s = rng.uniform(0.3, 0.7);
    const double off_s = on_s + rng.uniform(0.6, 1.1);
    const double freq = rng.uniform(300.0, 2000.0);
    const double amp = rng.uniform(0.3, 0.6);
    const double noise_amp = std::pow(10.0, noise_db / 20.0);
    ToneBurst b;
    b.clip.sample_rate = sr;
    b.clip.samples.resize(static_cast<std::size_t>(total_s * sr));
    b.on = static_cast<std::size_t>(on_s * sr);
    b.off = static_cast<std::size_t>(off_s * sr);
    for (std::size_t i = 0; i < b.clip.size(); ++i) {
        double s = noise_amp * rng.normal();
        if (i >= b.on && i < b.off) s += amp * std::sin(2.0 * 3.141592653589793 * freq * i / sr);
        b.clip.samples[i] = s;
    }
    return b;
}

}  // namespace construct
