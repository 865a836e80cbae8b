#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <numeric>

#include "abaf/analysis.hpp"
#include "abaf/error.hpp"

namespace abaf {

namespace {

void mean_var(const std::vector<double>& v, double& mean, double& var) {
    mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    var = ss / static_cast<double>(v.size() - 1);
}

}  // namespace

WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    require(a.size() >= 2 && b.size() >= 2, ErrorCode::DegenerateData, "each sample needs at least two values",
            "sample");
    double ma, va, mb, vb;
    mean_var(a, ma, va);
    mean_var(b, mb, vb);
    require(va > 0.0 && vb > 0.0, ErrorCode::DegenerateData, "each sample needs nonzero variance", "sample");
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double sa = va / na, sb = vb / nb;
    WelchResult r;
    r.t = (ma - mb) / std::sqrt(sa + sb);
    r.df = (sa + sb) * (sa + sb) / (sa * sa / (na - 1) + sb * sb / (nb - 1));
    r.p = std::clamp(boost::math::ibeta(r.df / 2, 0.5, r.df / (r.df + r.t * r.t)), 0.0, 1.0);
    return r;
}

std::vector<double> bh_fdr(const std::vector<double>& p) {
    for (double v : p)
        require(v >= 0.0 && v <= 1.0, ErrorCode::OutOfRange, "p-values must lie in [0,1]", "p_values");
    const std::size_t m = p.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
    std::vector<double> q(m);
    double running = 1.0;
    for (std::size_t r = m; r-- > 0;) {
        const std::size_t i = order[r];
        running = std::min(running, p[i] * (static_cast<double>(m) / static_cast<double>(r + 1)));
        q[i] = running;
    }
    return q;
}

}  // namespace abaf
