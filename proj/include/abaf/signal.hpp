#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace abaf {

enum class WindowKind { Hamming, Hanning, Rect };

WindowKind parse_window_kind(const std::string& name);
std::string to_string(WindowKind kind);

/// Window of length n. Symmetric by default; `periodic` drops the final
/// sample of an n+1 symmetric window (the FFT-analysis convention).
std::vector<double> make_window(WindowKind kind, std::size_t n, bool periodic = false);

/// A per-frame scalar time series.
struct Contour {
    std::vector<double> values;
    double frame_rate = 0.0;  // frames per second

    std::size_t size() const { return values.size(); }
};

}  // namespace abaf

namespace abaf {

/// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
    double* row(std::size_t r) { return data.data() + r * cols; }
};

}  // namespace abaf
