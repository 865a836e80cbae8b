#pragma once

#include <complex>
#include <span>
#include <vector>

#include "abaf/audio.hpp"
#include "abaf/signal.hpp"

namespace abaf {

/// Real-input FFT of a power-of-two length frame; returns bins 0..n/2.
/// Plans are cached per size and shared across threads.
std::vector<std::complex<double>> rfft(std::span<const double> frame);

bool is_power_of_two(std::size_t n);

enum class BinAxis { LinearHz, Mel };

/// Time-frequency matrix, [bins x frames].
struct SpectroMatrix {
    Matrix data;
    BinAxis bin_axis = BinAxis::LinearHz;
    bool log_scaled = false;
};

inline constexpr double kSpectroDbFloor = -80.0;

/// Magnitude STFT, frames = floor((L - n_fft)/hop) + 1, no padding.
/// With `db_scale`, entries become 20*log10(|X|/max|X|) floored at -80 dB.
SpectroMatrix stft_spectrogram(const AudioClip& clip, std::size_t n_fft, std::size_t hop,
                               WindowKind window, bool db_scale);

inline constexpr double kMelScale = 2595.0;

double hz_to_mel(double f);
double mel_to_hz(double m);

struct MelFilterbank {
    Matrix weights;  // [n_mels x (n_fft/2 + 1)]
    double f_min = 0.0;
    double f_max = 0.0;
};

/// Triangles with apexes equally spaced on the mel axis; filter i spans
/// grid points i..i+2 of the n_mels+2 point grid and peaks at 1.
MelFilterbank mel_filterbank(std::size_t n_fft, std::size_t n_mels, int sample_rate, double f_min,
                             double f_max);

/// Hz positions of the n_mels + 2 grid points.
std::vector<double> mel_grid_hz(std::size_t n_mels, double f_min, double f_max);

inline constexpr double kLogMelEpsilon = 1e-10;

/// log10(filterbank x |STFT|^2 + eps) with a Hanning window over [0, sr/2].
SpectroMatrix mel_spectrogram(const AudioClip& clip, std::size_t n_fft, std::size_t hop,
                              std::size_t n_mels);

/// Same, from an existing linear-magnitude STFT and filterbank.
SpectroMatrix apply_mel(const SpectroMatrix& magnitude, const MelFilterbank& fb);

/// Orthonormal DCT-II of each column, keeping coefficients 0..n_coef-1.
SpectroMatrix mfcc(const SpectroMatrix& log_mel, std::size_t n_coef);

/// Orthonormal DCT-II of one vector, first n_coef coefficients.
std::vector<double> dct2_orthonormal(std::span<const double> x, std::size_t n_coef);

}  // namespace abaf
