#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "abaf/audio.hpp"
#include "abaf/corpus.hpp"
#include "abaf/error.hpp"
#include "abaf/rng.hpp"

namespace abaf {

void SynthSpec::validate() const {
    require(n_per_class >= 1, ErrorCode::InvalidArgument, "n_per_class must be >= 1", "n_per_class");
    require(duration_s > 0.0, ErrorCode::InvalidArgument, "duration_s must be positive", "duration_s");
    require(class1_tempo_factor > 0.0, ErrorCode::InvalidArgument, "tempo factor must be positive",
            "class1_tempo_factor");
    require(max_harmonic_hz > 0.0 && max_harmonic_hz < kSynthSampleRate / 2.0, ErrorCode::InvalidArgument,
            "max_harmonic_hz must lie in (0, Nyquist)", "max_harmonic_hz");
    require(class1_pitch_range >= 0.0, ErrorCode::InvalidArgument, "pitch range factor must be >= 0",
            "class1_pitch_range");
}

namespace {

constexpr double kEdgeRampS = 0.015;
constexpr int kMaxHarmonics = 48;

struct Voice {
    double f0 = 0.0;
    double tempo = 1.0;
    double pitch_range = 1.0;
    std::vector<double> gains;  // per harmonic, normalized to unit sum
};

Voice make_voice(const SynthSpec& spec, int label, Rng& rng) {
    Voice v;
    v.f0 = kSynthBasePitchHz + rng.uniform(-kSynthPitchJitterHz, kSynthPitchJitterHz) +
           (label == 1 ? spec.class1_pitch_shift : 0.0);
    v.f0 = std::max(v.f0, 40.0);
    const double tilt = kSynthBaseTiltDb + rng.uniform(-1.0, 1.0) + (label == 1 ? spec.class1_tilt_db : 0.0);
    v.tempo = label == 1 ? spec.class1_tempo_factor : 1.0;
    v.pitch_range = label == 1 ? spec.class1_pitch_range : 1.0;
    const int harmonics = std::min(kMaxHarmonics, std::max(1, static_cast<int>(spec.max_harmonic_hz / v.f0)));
    double total = 0.0;
    for (int k = 1; k <= harmonics; ++k) {
        const double g = std::pow(10.0, tilt * std::log2(static_cast<double>(k)) / 20.0) *
                         (1.0 + 0.25 * rng.uniform(-1.0, 1.0));
        v.gains.push_back(g);
        total += g;
    }
    for (double& g : v.gains) g /= total;
    return v;
}

void render_segment(std::vector<double>& out, std::size_t start, std::size_t len, const Voice& voice,
                    Rng& rng) {
    const double sr = kSynthSampleRate;
    const double level = rng.uniform(0.25, 0.45);
    const double declination = rng.uniform(0.03, 0.08);
    const double vibrato_hz = rng.uniform(4.0, 6.0);
    std::vector<double> phase(voice.gains.size());
    for (double& p : phase) p = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double ramp = kEdgeRampS * sr;
    const double dlen = static_cast<double>(len);
    for (std::size_t i = 0; i < len && start + i < out.size(); ++i) {
        const double tau = static_cast<double>(i) / dlen;
        const double f = voice.f0 * (1.0 + voice.pitch_range * (declination * (0.5 - tau) +
                                                                0.01 * std::sin(2.0 * std::numbers::pi * vibrato_hz * i / sr)));
        double s = 0.0;
        for (std::size_t k = 0; k < voice.gains.size(); ++k) {
            phase[k] += 2.0 * std::numbers::pi * static_cast<double>(k + 1) * f / sr;
            s += voice.gains[k] * std::sin(phase[k]);
        }
        const double di = static_cast<double>(i);
        double env = 1.0;
        if (di < ramp) env = 0.5 - 0.5 * std::cos(std::numbers::pi * di / ramp);
        if (dlen - di < ramp) env = std::min(env, 0.5 - 0.5 * std::cos(std::numbers::pi * (dlen - di) / ramp));
        out[start + i] += level * env * s;
    }
}

AudioClip render_subject(const SynthSpec& spec, int label, Rng& rng) {
    const double sr = kSynthSampleRate;
    const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * sr));
    AudioClip clip;
    clip.sample_rate = kSynthSampleRate;
    clip.samples.assign(n, 0.0);

    const Voice voice = make_voice(spec, label, rng);
    double t = rng.uniform(0.15, 0.3);
    const double stop = spec.duration_s - 0.1;
    while (t < stop - 0.05) {
        const double seg = rng.uniform(0.25, 0.5) * voice.tempo;
        const double pause = rng.uniform(0.08, 0.2) * voice.tempo;
        const double end = std::min(t + seg, stop);
        const auto s0 = static_cast<std::size_t>(std::llround(t * sr));
        const auto s1 = static_cast<std::size_t>(std::llround(end * sr));
        if (s1 > s0) render_segment(clip.samples, s0, s1 - s0, voice, rng);
        t = end + pause;
    }

    const double sigma = std::pow(10.0, spec.noise_db / 20.0);
    for (double& s : clip.samples) s = std::clamp(s + sigma * rng.normal(), -1.0, 32767.0 / 32768.0);
    return clip;
}

}  // namespace

CorpusManifest generate_synthetic_corpus(const SynthSpec& spec, std::uint64_t seed,
                                         const std::filesystem::path& out_dir) {
    spec.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    require(!ec && std::filesystem::is_directory(out_dir), ErrorCode::IoFailure,
            "cannot create " + out_dir.string(), "out_dir");

    CorpusManifest manifest;
    manifest.corpus_name = "synthetic";
    for (int label = 0; label <= 1; ++label) {
        for (int i = 0; i < spec.n_per_class; ++i) {
            char id[32];
            std::snprintf(id, sizeof id, "%s_%04d", label == 0 ? "nc" : "dep", i);
            Rng rng = Rng::named(seed, id);
            const AudioClip clip = render_subject(spec, label, rng);
            SubjectRecord rec;
            rec.subject_id = id;
            rec.wav_path = out_dir / (std::string(id) + ".wav");
            rec.label = label;
            rec.scale_kind = ScaleKind::Synthetic;
            rec.scale_score = label == 0 ? static_cast<int>(rng.below(8)) : 8 + static_cast<int>(rng.below(33));
            write_wav(rec.wav_path, clip);
            manifest.records.push_back(std::move(rec));
        }
    }
    save_manifest(manifest, out_dir / "manifest.csv");
    return manifest;
}

}  // namespace abaf
