#include "abaf/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <numbers>

#include "abaf/error.hpp"

namespace abaf {

void FrameSpec::validate() const {
    require(frame_len > 0, ErrorCode::InvalidArgument, "frame_len must be positive", "frame_len");
    require(hop > 0 && hop <= frame_len, ErrorCode::InvalidArgument,
            "hop must satisfy 0 < hop <= frame_len", "hop");
}

std::size_t FrameSpec::frame_count(std::size_t n_samples) const {
    if (n_samples < frame_len) return 0;
    return (n_samples - frame_len) / hop + 1;
}

void VadParams::validate() const {
    require(ht_frac > 0.0 && ht_frac <= 1.0, ErrorCode::InvalidArgument, "ht_frac must be in (0,1]",
            "ht_frac");
    require(lt_frac > 0.0 && lt_frac < 1.0, ErrorCode::InvalidArgument, "lt_frac must be in (0,1)",
            "lt_frac");
    require(lt_frac < ht_frac, ErrorCode::InvalidArgument, "lt_frac must be below ht_frac",
            "lt_frac");
    require(min_segment_ms >= 0.0, ErrorCode::InvalidArgument, "min_segment_ms must be >= 0",
            "min_segment_ms");
}

namespace {

constexpr int kZeroCrossings = 32;   // filter half-length, in output-rate zero crossings
constexpr double kKaiserBeta = 8.6;

double kaiser(double x, double half_len) {
    const double r = x / half_len;
    if (std::abs(r) >= 1.0) return 0.0;
    return std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - r * r)) /
           std::cyl_bessel_i(0.0, kKaiserBeta);
}

double sinc(double x) {
    if (x == 0.0) return 1.0;
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

/// Taps for output phase `frac` in [0,1): weights for x[k0 - half + 1 + j].
std::vector<double> phase_taps(double frac, double cutoff, std::size_t half) {
    const double half_len = static_cast<double>(half);
    std::vector<double> taps(2 * half);
    double sum = 0.0;
    for (std::size_t j = 0; j < 2 * half; ++j) {
        const double t = frac + static_cast<double>(half) - 1.0 - static_cast<double>(j);
        taps[j] = 2.0 * cutoff * sinc(2.0 * cutoff * t) * kaiser(t, half_len);
        sum += taps[j];
    }
    if (sum != 0.0)
        for (double& v : taps) v /= sum;
    return taps;
}

}  // namespace

AudioClip resample(const AudioClip& clip, int target_sr) {
    require(target_sr > 0, ErrorCode::InvalidArgument, "target sample rate must be positive",
            "target_sr");
    require(clip.sample_rate > 0, ErrorCode::InvalidArgument, "source sample rate must be positive",
            "sample_rate");
    if (target_sr == clip.sample_rate) return clip;

    const long long g = std::gcd(static_cast<long long>(clip.sample_rate), static_cast<long long>(target_sr));
    const long long up = target_sr / g;
    const long long down = clip.sample_rate / g;
    const double cutoff = 0.5 * std::min(1.0, static_cast<double>(up) / static_cast<double>(down));
    const auto half = static_cast<std::size_t>(std::ceil(kZeroCrossings / (2.0 * cutoff)));

    const std::size_t n_in = clip.samples.size();
    const auto n_out = static_cast<std::size_t>(
        std::llround(static_cast<double>(n_in) * static_cast<double>(up) / static_cast<double>(down)));

    const bool tabulate = up <= 4096;
    std::vector<std::vector<double>> table;
    if (tabulate) {
        table.resize(static_cast<std::size_t>(up));
        for (long long p = 0; p < up; ++p)
            table[static_cast<std::size_t>(p)] =
                phase_taps(static_cast<double>(p) / static_cast<double>(up), cutoff, half);
    }

    AudioClip out;
    out.sample_rate = target_sr;
    out.samples.assign(n_out, 0.0);
    const auto signed_in = static_cast<long long>(n_in);
    for (std::size_t n = 0; n < n_out; ++n) {
        const long long num = static_cast<long long>(n) * down;
        const long long k0 = num / up;
        const long long phase = num % up;
        std::vector<double> local;
        const std::vector<double>* taps = nullptr;
        if (tabulate) {
            taps = &table[static_cast<std::size_t>(phase)];
        } else {
            local = phase_taps(static_cast<double>(phase) / static_cast<double>(up), cutoff, half);
            taps = &local;
        }
        const long long first = k0 - static_cast<long long>(half) + 1;
        double acc = 0.0;
        for (std::size_t j = 0; j < taps->size(); ++j) {
            const long long k = first + static_cast<long long>(j);
            if (k < 0 || k >= signed_in) continue;
            acc += (*taps)[j] * clip.samples[static_cast<std::size_t>(k)];
        }
        out.samples[n] = acc;
    }
    return out;
}

Contour short_time_energy(const AudioClip& clip, const FrameSpec& spec) {
    spec.validate();
    require(clip.samples.size() >= spec.frame_len, ErrorCode::TooShort,
            "clip shorter than one frame", "samples");
    const auto w = make_window(spec.window, spec.frame_len);
    const std::size_t frames = spec.frame_count(clip.samples.size());
    Contour out;
    out.frame_rate = clip.sample_rate > 0 ? static_cast<double>(clip.sample_rate) / spec.hop : 0.0;
    out.values.resize(frames);
    for (std::size_t f = 0; f < frames; ++f) {
        const double* s = clip.samples.data() + f * spec.hop;
        double e = 0.0;
        for (std::size_t m = 0; m < spec.frame_len; ++m) e += s[m] * s[m] * w[m];
        out.values[f] = e;
    }
    return out;
}

Contour zero_crossing_rate(const AudioClip& clip, const FrameSpec& spec) {
    spec.validate();
    require(clip.samples.size() >= spec.frame_len, ErrorCode::TooShort,
            "clip shorter than one frame", "samples");
    require(spec.frame_len >= 2, ErrorCode::InvalidArgument, "ZCR needs frames of 2+ samples",
            "frame_len");
    const std::size_t frames = spec.frame_count(clip.samples.size());
    Contour out;
    out.frame_rate = clip.sample_rate > 0 ? static_cast<double>(clip.sample_rate) / spec.hop : 0.0;
    out.values.resize(frames);
    for (std::size_t f = 0; f < frames; ++f) {
        const double* s = clip.samples.data() + f * spec.hop;
        std::size_t crossings = 0;
        for (std::size_t m = 1; m < spec.frame_len; ++m)
            if ((s[m] >= 0.0) != (s[m - 1] >= 0.0)) ++crossings;
        out.values[f] = static_cast<double>(crossings) / static_cast<double>(spec.frame_len - 1);
    }
    return out;
}

VadSegments detect_endpoints(const Contour& ste, const Contour& zcr, const VadParams& params,
                             const FrameSpec& spec, std::size_t n_samples, int sample_rate) {
    params.validate();
    spec.validate();
    require(!ste.values.empty(), ErrorCode::EmptyInput, "empty energy contour", "ste");
    require(ste.size() == zcr.size(), ErrorCode::ShapeMismatch,
            "energy and ZCR contours differ in length", "zcr");

    const auto& e = ste.values;
    const std::size_t frames = e.size();
    const double peak = *std::max_element(e.begin(), e.end());
    if (peak <= kSilencePeakEnergy) return {};
    const double ht = params.ht_frac * peak;
    const double lt = params.lt_frac * peak;

    // Frame-level [start, end) pairs.
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    std::size_t i = 0;
    while (i < frames) {
        std::size_t s = i;
        while (s < frames && !(e[s] > ht)) ++s;
        if (s == frames) break;
        std::size_t t = s + 1;
        while (t < frames && !(e[t] < lt)) ++t;
        spans.emplace_back(s, t);
        i = t + 1;
    }

    if (params.zcr_extend && !spans.empty()) {
        std::vector<double> sorted = zcr.values;
        std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
        const double median = sorted[sorted.size() / 2];
        const double floor = kZcrExtensionEnergyFloor * lt;
        auto absorbable = [&](std::size_t f) { return zcr.values[f] > median && e[f] > floor; };
        for (std::size_t k = 0; k < spans.size(); ++k) {
            auto& [s, t] = spans[k];
            const std::size_t lower = k == 0 ? 0 : spans[k - 1].second;
            for (std::size_t steps = 0; steps < kMaxZcrExtensionFrames && s > lower && absorbable(s - 1);
                 ++steps)
                --s;
            const std::size_t upper = k + 1 < spans.size() ? spans[k + 1].first : frames;
            for (std::size_t steps = 0; steps < kMaxZcrExtensionFrames && t < upper && absorbable(t);
                 ++steps)
                ++t;
        }
    }

    const std::size_t centre = spec.frame_len / 2;
    const double min_len = params.min_segment_ms * sample_rate / 1000.0;
    VadSegments out;
    for (const auto& [s, t] : spans) {
        VadSegment seg;
        seg.n_start = s == 0 ? 0 : std::min(n_samples, s * spec.hop + centre);
        seg.n_end = t >= frames ? n_samples : std::min(n_samples, (t - 1) * spec.hop + centre);
        if (seg.n_end <= seg.n_start) continue;
        if (!out.empty() && seg.n_start <= out.back().n_end) {
            out.back().n_end = std::max(out.back().n_end, seg.n_end);
            continue;
        }
        out.push_back(seg);
    }
    std::erase_if(out, [&](const VadSegment& seg) { return static_cast<double>(seg.length()) < min_len; });
    return out;
}

AudioClip apply_vad(const AudioClip& clip, const VadSegments& segments) {
    require(!segments.empty(), ErrorCode::EmptyInput, "no voiced segments detected", "segments");
    AudioClip out;
    out.sample_rate = clip.sample_rate;
    std::size_t prev_end = 0;
    for (const auto& seg : segments) {
        require(seg.n_start < seg.n_end && seg.n_end <= clip.samples.size(), ErrorCode::OutOfRange,
                "segment outside clip", "segments");
        require(seg.n_start >= prev_end, ErrorCode::InvalidArgument,
                "segments must be sorted and non-overlapping", "segments");
        out.samples.insert(out.samples.end(), clip.samples.begin() + static_cast<std::ptrdiff_t>(seg.n_start),
                           clip.samples.begin() + static_cast<std::ptrdiff_t>(seg.n_end));
        prev_end = seg.n_end;
    }
    return out;
}

FrameSpec PreprocessConfig::frame_spec(int sample_rate) const {
    FrameSpec spec;
    spec.frame_len = static_cast<std::size_t>(std::llround(frame_ms * sample_rate / 1000.0));
    spec.hop = static_cast<std::size_t>(std::llround(hop_ms * sample_rate / 1000.0));
    spec.window = window;
    spec.validate();
    return spec;
}

AudioClip preprocess_clip(const AudioClip& clip, const PreprocessConfig& cfg) {
    require(!clip.samples.empty(), ErrorCode::EmptyInput, "empty clip", "samples");
    AudioClip voiced = clip;
    if (cfg.enable_vad) {
        const FrameSpec spec = cfg.frame_spec(clip.sample_rate);
        const Contour ste = short_time_energy(clip, spec);
        const Contour zcr = zero_crossing_rate(clip, spec);
        const auto segments =
            detect_endpoints(ste, zcr, cfg.vad, spec, clip.samples.size(), clip.sample_rate);
        voiced = apply_vad(clip, segments);
    }
    return resample(voiced, cfg.target_sr);
}

}  // namespace abaf
