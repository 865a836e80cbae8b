#include <algorithm>
#include <cmath>
#include <numeric>

#include "abaf/error.hpp"
#include "abaf/features.hpp"
#include "abaf/preprocess.hpp"

namespace abaf {

void ExtractionConfig::validate() const {
    require(sample_rate > 0, ErrorCode::InvalidArgument, "sample_rate must be positive", "sample_rate");
    require(envelope_lp_ms > 0.0, ErrorCode::InvalidArgument, "envelope_lp_ms must be positive",
            "envelope_lp_ms");
    require(is_power_of_two(spectro_n_fft), ErrorCode::InvalidArgument,
            "spectro_n_fft must be a power of two", "spectro_n_fft");
    require(is_power_of_two(lld_frame), ErrorCode::InvalidArgument,
            "lld_frame must be a power of two", "lld_frame");
    require(spectro_hop > 0 && lld_hop > 0, ErrorCode::InvalidArgument, "hops must be positive", "hop");
    require(lld_n_mels == 26 && n_mfcc == 13, ErrorCode::InvalidArgument,
            "the LLD set is fixed at 26 mel bands and 13 MFCCs", "lld_n_mels");
    require(f0_min > 0.0 && f0_min < f0_max && f0_max < sample_rate / 2.0, ErrorCode::InvalidArgument,
            "invalid pitch range", "f0_max");
    require(static_cast<double>(sample_rate) / f0_min < static_cast<double>(lld_frame),
            ErrorCode::InvalidArgument, "lld_frame too short for f0_min", "lld_frame");
    require(image_side >= 4 && image_side % 4 == 0, ErrorCode::InvalidArgument,
            "image_side must be a positive multiple of 4", "image_side");
    require(image_channels == 1 || image_channels == 3, ErrorCode::InvalidArgument,
            "image_channels must be 1 or 3", "image_channels");
}

const std::vector<std::string>& lld_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n = {"logEnergy",        "zcr",
                                      "fband0-250",       "fband0-650",
                                      "fband230-650",     "fband1000-4000",
                                      "spectralRollOff25.0", "spectralRollOff50.0",
                                      "spectralRollOff75.0", "spectralRollOff90.0",
                                      "spectralFlux",     "spectralCentroid",
                                      "spectralMaxPos",   "spectralMinPos"};
        for (int i = 0; i < 13; ++i) n.push_back("mfcc[" + std::to_string(i) + "]");
        for (int i = 0; i < 26; ++i) n.push_back("melspec[" + std::to_string(i) + "]");
        n.push_back("voiceProb");
        n.push_back("F0");
        n.push_back("F0env");
        return n;
    }();
    return names;
}

namespace {

constexpr std::array<std::pair<double, double>, 4> kBands = {
    {{0.0, 250.0}, {0.0, 650.0}, {230.0, 650.0}, {1000.0, 4000.0}}};
constexpr std::array<double, 4> kRollOffs = {0.25, 0.50, 0.75, 0.90};

enum Row : std::size_t {
    kLogEnergy = 0,
    kZcr = 1,
    kBand0 = 2,
    kRollOff0 = 6,
    kFlux = 10,
    kCentroid = 11,
    kMaxPos = 12,
    kMinPos = 13,
    kMfcc0 = 14,
    kMel0 = 27,
    kVoiceProb = 53,
    kF0 = 54,
    kF0Env = 55,
};

struct Voicing {
    double prob = 0.0;
    double f0 = 0.0;
};

/// Normalized cross-correlation over the overlapping parts of a frame.
Voicing voicing(const double* x, std::size_t n, std::size_t min_lag, std::size_t max_lag,
                int sample_rate, double threshold) {
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i] * x[i];
    if (prefix[n] <= 0.0) return {};

    std::vector<double> r(max_lag + 1, 0.0);
    double best = 0.0;
    for (std::size_t lag = min_lag; lag <= max_lag && lag < n; ++lag) {
        const std::size_t m = n - lag;
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) acc += x[i] * x[i + lag];
        const double e0 = prefix[m];
        const double e1 = prefix[n] - prefix[lag];
        const double denom = std::sqrt(e0 * e1);
        r[lag] = denom > 0.0 ? acc / denom : 0.0;
        best = std::max(best, r[lag]);
    }
    Voicing v;
    v.prob = std::clamp(best, 0.0, 1.0);
    if (v.prob > threshold) {
        for (std::size_t lag = min_lag; lag <= max_lag && lag < n; ++lag) {
            if (r[lag] >= kOctaveGuard * best) {
                // Climb to the local peak of this lobe.
                while (lag + 1 <= max_lag && lag + 1 < n && r[lag + 1] > r[lag]) ++lag;
                v.f0 = static_cast<double>(sample_rate) / static_cast<double>(lag);
                break;
            }
        }
    }
    return v;
}

}  // namespace

LldMatrix compute_llds(const AudioClip& clip, const ExtractionConfig& cfg) {
    cfg.validate();
    require(clip.sample_rate == cfg.sample_rate, ErrorCode::InvalidArgument,
            "clip sample rate differs from the extraction rate", "sample_rate");
    const std::size_t n = cfg.lld_frame;
    require(clip.samples.size() >= n, ErrorCode::TooShort, "clip shorter than one LLD frame",
            "samples");

    const std::size_t frames = (clip.samples.size() - n) / cfg.lld_hop + 1;
    const std::size_t bins = n / 2 + 1;
    const double sr = cfg.sample_rate;
    const auto window = make_window(WindowKind::Hamming, n);
    const auto fb = mel_filterbank(n, cfg.lld_n_mels, cfg.sample_rate, 0.0, sr / 2.0);
    const auto min_lag = static_cast<std::size_t>(std::floor(sr / cfg.f0_max));
    const auto max_lag = static_cast<std::size_t>(std::ceil(sr / cfg.f0_min));

    LldMatrix out;
    out.frame_rate = sr / static_cast<double>(cfg.lld_hop);
    out.values = Matrix(kNumLlds, frames);

    std::vector<double> buf(n), power(bins), norm_mag(bins), prev_norm_mag(bins, 0.0), logmel(cfg.lld_n_mels);
    auto bin_hz = [&](std::size_t k) { return static_cast<double>(k) * sr / static_cast<double>(n); };

    for (std::size_t f = 0; f < frames; ++f) {
        const double* x = clip.samples.data() + f * cfg.lld_hop;
        auto set = [&](std::size_t row, double v) { out.values(row, f) = v; };

        double energy = 0.0;
        std::size_t crossings = 0;
        for (std::size_t i = 0; i < n; ++i) {
            energy += x[i] * x[i];
            if (i > 0 && ((x[i] >= 0.0) != (x[i - 1] >= 0.0))) ++crossings;
        }
        energy /= static_cast<double>(n);
        set(kLogEnergy, energy > 0.0 ? std::max(10.0 * std::log10(energy), kLogEnergyFloorDb)
                                     : kLogEnergyFloorDb);
        set(kZcr, static_cast<double>(crossings) / static_cast<double>(n - 1));

        for (std::size_t i = 0; i < n; ++i) buf[i] = x[i] * window[i];
        const auto spec = rfft(buf);
        double total = 0.0, mag_total = 0.0, weighted = 0.0;
        for (std::size_t k = 0; k < bins; ++k) {
            power[k] = std::norm(spec[k]);
            total += power[k];
            mag_total += std::abs(spec[k]);
            weighted += bin_hz(k) * power[k];
        }

        for (std::size_t b = 0; b < kBands.size(); ++b) {
            double acc = 0.0;
            for (std::size_t k = 0; k < bins; ++k) {
                const double hz = bin_hz(k);
                if (hz >= kBands[b].first && hz <= kBands[b].second) acc += power[k];
            }
            set(kBand0 + b, acc);
        }

        for (std::size_t r = 0; r < kRollOffs.size(); ++r) {
            double v = 0.0;
            if (total > 0.0) {
                double cum = 0.0;
                for (std::size_t k = 0; k < bins; ++k) {
                    cum += power[k];
                    if (cum >= kRollOffs[r] * total) {
                        v = bin_hz(k);
                        break;
                    }
                }
            }
            set(kRollOff0 + r, v);
        }

        for (std::size_t k = 0; k < bins; ++k)
            norm_mag[k] = mag_total > 0.0 ? std::abs(spec[k]) / mag_total : 0.0;
        double flux = 0.0;
        if (f > 0)
            for (std::size_t k = 0; k < bins; ++k) flux += (norm_mag[k] - prev_norm_mag[k]) * (norm_mag[k] - prev_norm_mag[k]);
        set(kFlux, std::sqrt(flux));
        prev_norm_mag = norm_mag;

        set(kCentroid, total > 0.0 ? weighted / total : 0.0);
        const auto mx = std::max_element(power.begin(), power.end()) - power.begin();
        const auto mn = std::min_element(power.begin(), power.end()) - power.begin();
        set(kMaxPos, static_cast<double>(mx) / static_cast<double>(bins - 1));
        set(kMinPos, static_cast<double>(mn) / static_cast<double>(bins - 1));

        for (std::size_t m = 0; m < cfg.lld_n_mels; ++m) {
            double acc = 0.0;
            const double* w = fb.weights.row(m);
            for (std::size_t k = 0; k < bins; ++k) acc += w[k] * power[k];
            logmel[m] = std::log10(acc + kLogMelEpsilon);
            set(kMel0 + m, logmel[m]);
        }
        const auto cep = dct2_orthonormal(logmel, cfg.n_mfcc);
        for (std::size_t c = 0; c < cfg.n_mfcc; ++c) set(kMfcc0 + c, cep[c]);

        const Voicing v = voicing(x, n, min_lag, max_lag, cfg.sample_rate, cfg.voicing_threshold);
        set(kVoiceProb, v.prob);
        set(kF0, v.f0);
    }

    for (std::size_t f = 0; f < frames; ++f) {
        double env = 0.0;
        for (std::size_t k = 0; k < kF0EnvFrames && k <= f; ++k) env = std::max(env, out.values(kF0, f - k));
        out.values(kF0Env, f) = env;
    }
    return out;
}

Matrix delta(const Matrix& contours, int order) {
    require(order == 1 || order == 2, ErrorCode::InvalidArgument, "delta order must be 1 or 2", "order");
    require(contours.cols >= 5, ErrorCode::TooShort, "delta needs at least 5 frames", "frames");
    const std::size_t T = contours.cols;
    Matrix cur = contours;
    for (int pass = 0; pass < order; ++pass) {
        Matrix next(cur.rows, T);
        for (std::size_t r = 0; r < cur.rows; ++r) {
            const double* c = cur.row(r);
            auto at = [&](long long t) {
                return c[static_cast<std::size_t>(std::clamp<long long>(t, 0, static_cast<long long>(T) - 1))];
            };
            for (std::size_t t = 0; t < T; ++t) {
                const auto tt = static_cast<long long>(t);
                next(r, t) = (1.0 * (at(tt + 1) - at(tt - 1)) + 2.0 * (at(tt + 2) - at(tt - 2))) / 10.0;
            }
        }
        cur = std::move(next);
    }
    return cur;
}

}  // namespace abaf
