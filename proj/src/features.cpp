#include "abaf/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "abaf/error.hpp"

namespace abaf {

const std::vector<std::string>& HsfVector::names() {
    static const std::vector<std::string> names = [] {
        static const std::array<const char*, kNumVariants> variants = {"raw", "de", "dede"};
        std::vector<std::string> out;
        out.reserve(kHsfLength);
        for (const auto& lld : lld_names())
            for (const char* variant : variants)
                for (const auto& fn : functional_names()) out.push_back(lld + "_" + variant + "_" + fn);
        return out;
    }();
    return names;
}

HsfVector assemble_hsf(const LldMatrix& llds) {
    require(llds.values.rows == kNumLlds, ErrorCode::ShapeMismatch, "expected 56 LLD rows", "llds");
    const std::array<Matrix, kNumVariants> variants = {llds.values, delta(llds.values, 1),
                                                       delta(llds.values, 2)};
    HsfVector hsf;
    hsf.values.reserve(kHsfLength);
    for (std::size_t r = 0; r < kNumLlds; ++r) {
        for (const Matrix& m : variants) {
            const auto f = apply_functionals(std::span<const double>(m.row(r), m.cols));
            for (double v : f) hsf.values.push_back(std::isfinite(v) ? v : 0.0);
        }
    }
    return hsf;
}

HsfVector assemble_hsf(const AudioClip& clip, const ExtractionConfig& cfg) {
    return assemble_hsf(compute_llds(clip, cfg));
}

Contour upper_envelope(const AudioClip& clip, double lp_len_ms) {
    require(!clip.samples.empty(), ErrorCode::EmptyInput, "empty clip", "samples");
    require(lp_len_ms > 0.0, ErrorCode::InvalidArgument, "lp_len_ms must be positive", "lp_len_ms");
    const auto len = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(clip.sample_rate * lp_len_ms / 1000.0)));
    const std::size_t n = clip.samples.size();

    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + std::abs(clip.samples[i]);

    // "same" convolution: output i sees inputs [i - (len-1)/2 - ... ] centred on i.
    const auto before = static_cast<long long>((len - 1) / 2);
    const auto after = static_cast<long long>(len) - 1 - before;
    const auto signed_n = static_cast<long long>(n);
    Contour out;
    out.frame_rate = clip.sample_rate;
    out.values.resize(n);
    for (long long i = 0; i < signed_n; ++i) {
        const long long lo = std::max<long long>(0, i - before);
        const long long hi = std::min<long long>(signed_n, i + after + 1);
        out.values[static_cast<std::size_t>(i)] =
            (prefix[static_cast<std::size_t>(hi)] - prefix[static_cast<std::size_t>(lo)]) /
            static_cast<double>(len);
    }
    return out;
}

FeatureBundle extract_bundle(const AudioClip& clip, const ExtractionConfig& cfg) {
    cfg.validate();
    require(clip.sample_rate == cfg.sample_rate, ErrorCode::InvalidArgument,
            "clip sample rate differs from the extraction rate", "sample_rate");
    const std::size_t side = cfg.image_side, ch = cfg.image_channels;

    FeatureBundle b;
    b.envelope_img = rasterize(upper_envelope(clip, cfg.envelope_lp_ms), side, side, ch);

    const auto magnitude = stft_spectrogram(clip, cfg.spectro_n_fft, cfg.spectro_hop, WindowKind::Hanning, false);
    SpectroMatrix db = magnitude;
    {
        const double peak = *std::max_element(db.data.data.begin(), db.data.data.end());
        for (double& v : db.data.data) {
            const double d = peak > 0.0 && v > 0.0 ? 20.0 * std::log10(v / peak) : kSpectroDbFloor;
            v = std::max(d, kSpectroDbFloor);
        }
        db.log_scaled = true;
    }
    b.spectro_img = rasterize(db, ImageKind::Spectrogram, side, side, ch);

    const auto fb = mel_filterbank(cfg.spectro_n_fft, cfg.image_n_mels, cfg.sample_rate, 0.0,
                                   cfg.sample_rate / 2.0);
    b.mel_img = rasterize(apply_mel(magnitude, fb), ImageKind::Mel, side, side, ch);

    b.hsf = assemble_hsf(clip, cfg);
    return b;
}

std::vector<std::size_t> select_top_k(const std::vector<std::vector<double>>& rows,
                                      const std::vector<int>& labels, std::size_t k) {
    require(rows.size() == labels.size(), ErrorCode::ShapeMismatch, "rows and labels differ in count",
            "labels");
    require(!rows.empty(), ErrorCode::EmptyInput, "no subjects", "rows");
    const std::size_t d = rows.front().size();
    require(k <= d, ErrorCode::InvalidArgument, "k exceeds the feature count", "k");

    std::size_t n1 = 0;
    for (int y : labels) n1 += y == 1;
    const std::size_t n0 = labels.size() - n1;
    require(n0 >= 2 && n1 >= 2, ErrorCode::DegenerateData, "each class needs at least two subjects",
            "labels");

    std::vector<double> score(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double s0 = 0.0, s1 = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) (labels[i] ? s1 : s0) += rows[i][j];
        const double m0 = s0 / static_cast<double>(n0), m1 = s1 / static_cast<double>(n1);
        double v0 = 0.0, v1 = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double x = rows[i][j];
            if (labels[i])
                v1 += (x - m1) * (x - m1);
            else
                v0 += (x - m0) * (x - m0);
        }
        v0 /= static_cast<double>(n0 - 1);
        v1 /= static_cast<double>(n1 - 1);
        const double se = std::sqrt(v0 / static_cast<double>(n0) + v1 / static_cast<double>(n1));
        const double t = se > 0.0 ? (m1 - m0) / se : 0.0;
        score[j] = std::isfinite(t) ? std::abs(t) : 0.0;
    }

    std::vector<std::size_t> idx(d);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    idx.resize(k);
    return idx;
}

}  // namespace abaf
