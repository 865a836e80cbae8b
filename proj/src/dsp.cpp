#include "abaf/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "abaf/error.hpp"

namespace abaf {

namespace {

struct PlanEntry {
    fftw_plan plan = nullptr;
};

class PlanCache {
public:
    ~PlanCache() {
        for (auto& [n, e] : plans_) fftw_destroy_plan(e.plan);
    }

    fftw_plan get(std::size_t n) {
        std::lock_guard lock(mutex_);
        auto it = plans_.find(n);
        if (it != plans_.end()) return it->second.plan;
        double* in = fftw_alloc_real(n);
        fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
        fftw_plan p = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
        fftw_free(in);
        fftw_free(out);
        plans_[n].plan = p;
        return p;
    }

private:
    std::mutex mutex_;
    std::map<std::size_t, PlanEntry> plans_;
};

PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

}  // namespace

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::vector<std::complex<double>> rfft(std::span<const double> frame) {
    const std::size_t n = frame.size();
    require(is_power_of_two(n), ErrorCode::InvalidArgument, "FFT length must be a power of two",
            "n_fft");
    fftw_plan plan = plan_cache().get(n);
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
    std::copy(frame.begin(), frame.end(), in);
    fftw_execute_dft_r2c(plan, in, out);
    std::vector<std::complex<double>> result(n / 2 + 1);
    for (std::size_t k = 0; k <= n / 2; ++k) result[k] = {out[k][0], out[k][1]};
    fftw_free(in);
    fftw_free(out);
    return result;
}

SpectroMatrix stft_spectrogram(const AudioClip& clip, std::size_t n_fft, std::size_t hop,
                               WindowKind window, bool db_scale) {
    require(is_power_of_two(n_fft), ErrorCode::InvalidArgument, "n_fft must be a power of two",
            "n_fft");
    require(hop > 0, ErrorCode::InvalidArgument, "hop must be positive", "hop");
    require(clip.samples.size() >= n_fft, ErrorCode::TooShort, "clip shorter than n_fft", "samples");

    const std::size_t frames = (clip.samples.size() - n_fft) / hop + 1;
    const std::size_t bins = n_fft / 2 + 1;
    const auto w = make_window(window, n_fft, true);

    SpectroMatrix out;
    out.data = Matrix(bins, frames);
    std::vector<double> buf(n_fft);
    for (std::size_t f = 0; f < frames; ++f) {
        const double* s = clip.samples.data() + f * hop;
        for (std::size_t i = 0; i < n_fft; ++i) buf[i] = s[i] * w[i];
        const auto spec = rfft(buf);
        for (std::size_t k = 0; k < bins; ++k) out.data(k, f) = std::abs(spec[k]);
    }
    if (db_scale) {
        const double peak = *std::max_element(out.data.data.begin(), out.data.data.end());
        for (double& v : out.data.data) {
            const double db = peak > 0.0 && v > 0.0 ? 20.0 * std::log10(v / peak) : kSpectroDbFloor;
            v = std::max(db, kSpectroDbFloor);
        }
        out.log_scaled = true;
    }
    return out;
}

double hz_to_mel(double f) {
    require(f >= 0.0, ErrorCode::InvalidArgument, "frequency must be non-negative", "f");
    return kMelScale * std::log10(1.0 + f / 700.0);
}

double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / kMelScale) - 1.0); }

std::vector<double> mel_grid_hz(std::size_t n_mels, double f_min, double f_max) {
    const double m_lo = hz_to_mel(f_min);
    const double m_hi = hz_to_mel(f_max);
    std::vector<double> grid(n_mels + 2);
    for (std::size_t i = 0; i < grid.size(); ++i)
        grid[i] = mel_to_hz(m_lo + (m_hi - m_lo) * static_cast<double>(i) / static_cast<double>(n_mels + 1));
    return grid;
}

MelFilterbank mel_filterbank(std::size_t n_fft, std::size_t n_mels, int sample_rate, double f_min,
                             double f_max) {
    require(n_mels >= 1, ErrorCode::InvalidArgument, "n_mels must be >= 1", "n_mels");
    require(f_min >= 0.0 && f_min < f_max && f_max <= sample_rate / 2.0, ErrorCode::InvalidArgument,
            "band must satisfy 0 <= f_min < f_max <= sr/2", "f_max");
    const std::size_t bins = n_fft / 2 + 1;
    const auto grid = mel_grid_hz(n_mels, f_min, f_max);

    MelFilterbank fb;
    fb.f_min = f_min;
    fb.f_max = f_max;
    fb.weights = Matrix(n_mels, bins);
    for (std::size_t m = 0; m < n_mels; ++m) {
        const double lo = grid[m], apex = grid[m + 1], hi = grid[m + 2];
        for (std::size_t k = 0; k < bins; ++k) {
            const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
            double w = 0.0;
            if (f > lo && f <= apex)
                w = (f - lo) / (apex - lo);
            else if (f > apex && f < hi)
                w = (hi - f) / (hi - apex);
            fb.weights(m, k) = w;
        }
    }
    return fb;
}

SpectroMatrix apply_mel(const SpectroMatrix& magnitude, const MelFilterbank& fb) {
    require(!magnitude.log_scaled, ErrorCode::InvalidArgument, "mel mapping needs linear magnitudes",
            "magnitude");
    require(magnitude.data.rows == fb.weights.cols, ErrorCode::ShapeMismatch,
            "filterbank width differs from spectrum bins", "weights");
    const std::size_t frames = magnitude.data.cols;
    SpectroMatrix out;
    out.bin_axis = BinAxis::Mel;
    out.log_scaled = true;
    out.data = Matrix(fb.weights.rows, frames);
    for (std::size_t m = 0; m < fb.weights.rows; ++m) {
        const double* w = fb.weights.row(m);
        for (std::size_t f = 0; f < frames; ++f) {
            double acc = 0.0;
            for (std::size_t k = 0; k < fb.weights.cols; ++k) {
                if (w[k] == 0.0) continue;
                const double mag = magnitude.data(k, f);
                acc += w[k] * mag * mag;
            }
            out.data(m, f) = std::log10(acc + kLogMelEpsilon);
        }
    }
    return out;
}

SpectroMatrix mel_spectrogram(const AudioClip& clip, std::size_t n_fft, std::size_t hop,
                              std::size_t n_mels) {
    const auto mag = stft_spectrogram(clip, n_fft, hop, WindowKind::Hanning, false);
    const auto fb = mel_filterbank(n_fft, n_mels, clip.sample_rate, 0.0, clip.sample_rate / 2.0);
    return apply_mel(mag, fb);
}

std::vector<double> dct2_orthonormal(std::span<const double> x, std::size_t n_coef) {
    const std::size_t n = x.size();
    require(n_coef <= n, ErrorCode::InvalidArgument, "more coefficients than inputs", "n_coef");
    std::vector<double> out(n_coef);
    const double s0 = std::sqrt(1.0 / static_cast<double>(n));
    const double sk = std::sqrt(2.0 / static_cast<double>(n));
    for (std::size_t k = 0; k < n_coef; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            acc += x[i] * std::cos(std::numbers::pi * static_cast<double>(k) *
                                   (2.0 * static_cast<double>(i) + 1.0) / (2.0 * static_cast<double>(n)));
        out[k] = (k == 0 ? s0 : sk) * acc;
    }
    return out;
}

SpectroMatrix mfcc(const SpectroMatrix& log_mel, std::size_t n_coef) {
    const std::size_t n_mels = log_mel.data.rows;
    require(n_coef <= n_mels, ErrorCode::InvalidArgument, "n_coef exceeds n_mels", "n_coef");
    SpectroMatrix out;
    out.bin_axis = BinAxis::Mel;
    out.log_scaled = true;
    out.data = Matrix(n_coef, log_mel.data.cols);
    std::vector<double> column(n_mels);
    for (std::size_t f = 0; f < log_mel.data.cols; ++f) {
        for (std::size_t m = 0; m < n_mels; ++m) column[m] = log_mel.data(m, f);
        const auto c = dct2_orthonormal(column, n_coef);
        for (std::size_t k = 0; k < n_coef; ++k) out.data(k, f) = c[k];
    }
    return out;
}

}  // namespace abaf
