#include <algorithm>
#include <cmath>

#include "abaf/error.hpp"
#include "abaf/features.hpp"

namespace abaf {

const std::array<std::string, kNumFunctionals>& functional_names() {
    static const std::array<std::string, kNumFunctionals> names = {
        "maxPos",       "minPos",       "numPeaks",      "meanPeakDist",  "peakMean",
        "peakMeanMeanDist", "range",    "amean",         "absmean",       "qmean",
        "nzabsmean",    "nzqmean",      "nzgmean",       "nnz",           "quartile1",
        "quartile2",    "quartile3",    "iqr1-2",        "iqr2-3",        "iqr1-3",
        "percentile95.0", "percentile98.0", "centroid",  "variance",      "stddev",
        "skewness",     "kurtosis",     "zcr",           "linregc1",      "linregc2",
        "linregerrA",   "linregerrQ",   "qregc1",        "qregc2",        "qregc3",
        "qregerrA",     "qregerrQ",     "maxameandist",  "minameandist"};
    return names;
}

namespace {

double quantile_sorted(const std::vector<double>& sorted, double p) {
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

/// Solves the 3x3 system a * x = b by Gaussian elimination with partial pivoting.
std::array<double, 3> solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3> b) {
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (int r = col + 1; r < 3; ++r) {
            const double f = a[r][col] / a[col][col];
            for (int c = col; c < 3; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::array<double, 3> x{};
    for (int r = 2; r >= 0; --r) {
        double acc = b[r];
        for (int c = r + 1; c < 3; ++c) acc -= a[r][c] * x[c];
        x[r] = acc / a[r][r];
    }
    return x;
}

}  // namespace

std::array<double, kNumFunctionals> apply_functionals(std::span<const double> c) {
    const std::size_t n = c.size();
    require(n >= 3, ErrorCode::TooShort, "functionals need at least 3 frames", "contour");
    const double nd = static_cast<double>(n);
    const double span = nd - 1.0;

    std::array<double, kNumFunctionals> out{};
    std::size_t k = 0;
    auto emit = [&](double v) { out[k++] = v; };

    const auto [mn_it, mx_it] = std::minmax_element(c.begin(), c.end());
    // minmax_element returns the last maximum; positions use the first.
    const auto first_max = std::max_element(c.begin(), c.end());
    const double mx = *mx_it, mn = *mn_it;
    const double range = mx - mn;
    const bool constant = range == 0.0;

    double sum = 0.0, abs_sum = 0.0, sq_sum = 0.0;
    double nz_abs = 0.0, nz_sq = 0.0, nz_log = 0.0;
    std::size_t nnz = 0;
    for (double v : c) {
        sum += v;
        abs_sum += std::abs(v);
        sq_sum += v * v;
        if (v != 0.0) {
            ++nnz;
            nz_abs += std::abs(v);
            nz_sq += v * v;
            nz_log += std::log(std::abs(v));
        }
    }
    const double mean = constant ? c[0] : sum / nd;

    emit(static_cast<double>(first_max - c.begin()) / span);
    emit(static_cast<double>(mn_it - c.begin()) / span);

    std::vector<std::size_t> peaks;
    for (std::size_t i = 1; i + 1 < n; ++i)
        if (c[i] > c[i - 1] && c[i] > c[i + 1] && c[i] > mean) peaks.push_back(i);
    emit(static_cast<double>(peaks.size()));
    emit(peaks.size() >= 2
             ? static_cast<double>(peaks.back() - peaks.front()) / static_cast<double>(peaks.size() - 1) / span
             : 0.0);
    double peak_mean = 0.0;
    for (std::size_t p : peaks) peak_mean += c[p];
    if (!peaks.empty()) peak_mean /= static_cast<double>(peaks.size());
    emit(peak_mean);
    emit(peaks.empty() ? 0.0 : peak_mean - mean);

    emit(range);
    emit(mean);
    emit(abs_sum / nd);
    emit(std::sqrt(sq_sum / nd));
    emit(nnz ? nz_abs / static_cast<double>(nnz) : 0.0);
    emit(nnz ? std::sqrt(nz_sq / static_cast<double>(nnz)) : 0.0);
    emit(nnz ? std::exp(nz_log / static_cast<double>(nnz)) : 0.0);
    emit(static_cast<double>(nnz));

    std::vector<double> sorted(c.begin(), c.end());
    std::sort(sorted.begin(), sorted.end());
    const double q1 = quantile_sorted(sorted, 0.25);
    const double q2 = quantile_sorted(sorted, 0.50);
    const double q3 = quantile_sorted(sorted, 0.75);
    emit(q1);
    emit(q2);
    emit(q3);
    emit(q2 - q1);
    emit(q3 - q2);
    emit(q3 - q1);
    emit(quantile_sorted(sorted, 0.95));
    emit(quantile_sorted(sorted, 0.98));

    double wsum = 0.0, tw = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        wsum += std::abs(c[i]);
        tw += (static_cast<double>(i) / span) * std::abs(c[i]);
    }
    emit(wsum > 0.0 ? tw / wsum : 0.5);

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : c) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= nd;
    m3 /= nd;
    m4 /= nd;
    const double sd = std::sqrt(m2);
    emit(m2);
    emit(sd);
    emit(constant || sd == 0.0 ? 0.0 : m3 / (sd * sd * sd));
    emit(constant || sd == 0.0 ? 0.0 : m4 / (m2 * m2));

    std::size_t crossings = 0;
    for (std::size_t i = 1; i < n; ++i)
        if ((c[i] - mean >= 0.0) != (c[i - 1] - mean >= 0.0)) ++crossings;
    emit(static_cast<double>(crossings) / span);

    // Linear regression on t in [0,1].
    double stt = 0.0, stc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dt = static_cast<double>(i) / span - 0.5;
        stt += dt * dt;
        stc += dt * (c[i] - mean);
    }
    const double slope = constant ? 0.0 : stc / stt;
    const double offset = mean - 0.5 * slope;
    double lin_abs = 0.0, lin_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = c[i] - (slope * static_cast<double>(i) / span + offset);
        lin_abs += std::abs(r);
        lin_sq += r * r;
    }
    emit(slope);
    emit(offset);
    emit(lin_abs / nd);
    emit(lin_sq / nd);

    // Quadratic regression c ~ q1 t^2 + q2 t + q3 via the normal equations.
    std::array<double, 5> tp{};
    std::array<double, 3> rhs{};
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / span;
        double p = 1.0;
        for (int e = 0; e < 5; ++e) {
            tp[e] += p;
            if (e < 3) rhs[2 - e] += p * (c[i] - mean);
            p *= t;
        }
    }
    std::array<double, 3> q{0.0, 0.0, 0.0};
    if (!constant) {
        const std::array<std::array<double, 3>, 3> a = {
            {{tp[4], tp[3], tp[2]}, {tp[3], tp[2], tp[1]}, {tp[2], tp[1], tp[0]}}};
        q = solve3(a, rhs);
    }
    q[2] += mean;
    double q_abs = 0.0, q_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / span;
        const double r = c[i] - (q[0] * t * t + q[1] * t + q[2]);
        q_abs += std::abs(r);
        q_sq += r * r;
    }
    emit(q[0]);
    emit(q[1]);
    emit(q[2]);
    emit(q_abs / nd);
    emit(q_sq / nd);

    emit(mx - mean);
    emit(mean - mn);
    return out;
}

}  // namespace abaf
