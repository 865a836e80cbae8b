#include "abaf/signal.hpp"

#include <cmath>
#include <numbers>

#include "abaf/error.hpp"

namespace abaf {

WindowKind parse_window_kind(const std::string& name) {
    if (name == "hamming") return WindowKind::Hamming;
    if (name == "hanning" || name == "hann") return WindowKind::Hanning;
    if (name == "rect") return WindowKind::Rect;
    fail(ErrorCode::InvalidValue, "unknown window '" + name + "'", "window");
}

std::string to_string(WindowKind kind) {
    switch (kind) {
        case WindowKind::Hamming: return "hamming";
        case WindowKind::Hanning: return "hanning";
        case WindowKind::Rect: return "rect";
    }
    return "rect";
}

std::vector<double> make_window(WindowKind kind, std::size_t n, bool periodic) {
    std::vector<double> w(n, 1.0);
    if (kind == WindowKind::Rect || n < 2) return w;
    const double denom = periodic ? static_cast<double>(n) : static_cast<double>(n - 1);
    const double a0 = kind == WindowKind::Hamming ? 0.54 : 0.5;
    const double a1 = 1.0 - a0;
    for (std::size_t i = 0; i < n; ++i)
        w[i] = a0 - a1 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / denom);
    return w;
}

}  // namespace abaf
