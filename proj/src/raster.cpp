#include <algorithm>
#include <cmath>

#include "abaf/error.hpp"
#include "abaf/features.hpp"

namespace abaf {

namespace {

void check_dims(std::size_t H, std::size_t W, std::size_t C) {
    require(H >= 1 && W >= 1, ErrorCode::InvalidArgument, "image sides must be positive", "side");
    require(C == 1 || C == 3, ErrorCode::InvalidArgument, "channels must be 1 or 3", "channels");
}

void replicate_channels(FeatureImage& img) {
    const std::size_t plane = img.height * img.width;
    img.pixels.resize(plane * img.channels);
    for (std::size_t c = 1; c < img.channels; ++c)
        std::copy(img.pixels.begin(), img.pixels.begin() + static_cast<std::ptrdiff_t>(plane),
                  img.pixels.begin() + static_cast<std::ptrdiff_t>(c * plane));
}

double source_coord(std::size_t i, std::size_t out_len, std::size_t in_len) {
    if (out_len <= 1 || in_len <= 1) return 0.0;
    return static_cast<double>(i) * static_cast<double>(in_len - 1) / static_cast<double>(out_len - 1);
}

}  // namespace

FeatureImage rasterize(const Contour& envelope, std::size_t H, std::size_t W, std::size_t C) {
    check_dims(H, W, C);
    require(!envelope.values.empty(), ErrorCode::EmptyInput, "empty envelope", "envelope");
    FeatureImage img;
    img.kind = ImageKind::Envelope;
    img.channels = C;
    img.height = H;
    img.width = W;
    img.pixels.assign(H * W, 0.0);

    const auto [mn, mx] = std::minmax_element(envelope.values.begin(), envelope.values.end());
    const double lo = *mn, range = *mx - *mn;
    if (range <= 0.0) {
        img.pixels.assign(H * W, kDegenerateImageValue);
        replicate_channels(img);
        return img;
    }
    const std::size_t n = envelope.values.size();
    for (std::size_t j = 0; j < W; ++j) {
        const double pos = source_coord(j, W, n);
        const auto i0 = static_cast<std::size_t>(std::floor(pos));
        const std::size_t i1 = std::min(i0 + 1, n - 1);
        const double frac = pos - static_cast<double>(i0);
        const double v = envelope.values[i0] + frac * (envelope.values[i1] - envelope.values[i0]);
        const double norm = std::clamp((v - lo) / range, 0.0, 1.0);
        const auto filled = static_cast<std::size_t>(std::llround(static_cast<double>(H) * norm));
        for (std::size_t r = 0; r < filled; ++r) img.pixels[(H - 1 - r) * W + j] = 1.0;
    }
    replicate_channels(img);
    return img;
}

FeatureImage rasterize(const SpectroMatrix& spectro, ImageKind kind, std::size_t H, std::size_t W,
                       std::size_t C) {
    check_dims(H, W, C);
    const Matrix& m = spectro.data;
    require(m.rows > 0 && m.cols > 0, ErrorCode::EmptyInput, "empty spectrogram", "spectro");
    FeatureImage img;
    img.kind = kind;
    img.channels = C;
    img.height = H;
    img.width = W;
    img.pixels.assign(H * W, kDegenerateImageValue);

    const auto [mn, mx] = std::minmax_element(m.data.begin(), m.data.end());
    const double lo = *mn, range = *mx - *mn;
    if (range > 0.0) {
        for (std::size_t r = 0; r < H; ++r) {
            // Row 0 is the highest bin.
            const double src_r = source_coord(H - 1 - r, H, m.rows);
            const auto r0 = static_cast<std::size_t>(std::floor(src_r));
            const std::size_t r1 = std::min(r0 + 1, m.rows - 1);
            const double fr = src_r - static_cast<double>(r0);
            for (std::size_t c = 0; c < W; ++c) {
                const double src_c = source_coord(c, W, m.cols);
                const auto c0 = static_cast<std::size_t>(std::floor(src_c));
                const std::size_t c1 = std::min(c0 + 1, m.cols - 1);
                const double fc = src_c - static_cast<double>(c0);
                const double top = m(r0, c0) + fc * (m(r0, c1) - m(r0, c0));
                const double bottom = m(r1, c0) + fc * (m(r1, c1) - m(r1, c0));
                const double v = top + fr * (bottom - top);
                img.pixels[r * W + c] = std::clamp((v - lo) / range, 0.0, 1.0);
            }
        }
    }
    replicate_channels(img);
    return img;
}

}  // namespace abaf
