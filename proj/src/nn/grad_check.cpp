#include "abaf/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace abaf::nn {

GradCheckResult grad_check(Layer& layer, const Tensor& input, std::uint64_t seed, double eps, bool train,
                           bool check_input) {
    Tensor x = input;
    Tensor out = layer.forward(x, train);
    Rng rng = Rng::named(seed, "grad-check");
    Tensor r(out.shape);
    for (double& v : r.data) v = rng.normal();

    auto loss = [&](const Tensor& in) {
        const Tensor y = layer.forward(in, train);
        long double acc = 0.0L;
        for (std::size_t i = 0; i < y.size(); ++i) acc += static_cast<long double>(y.data[i]) * r.data[i];
        return static_cast<double>(acc);
    };

    const auto params = layer.parameters();
    for (Parameter* p : params) p->zero_grad();
    layer.forward(x, train);
    const Tensor dx = layer.backward(r);

    GradCheckResult res;
    auto record = [&](double analytic, double numeric, const std::string& where) {
        const double denom = std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
        const double err = std::abs(analytic - numeric) / denom;
        ++res.checked;
        if (err > res.max_rel_error) {
            res.max_rel_error = err;
            res.worst = where;
        }
    };

    for (Parameter* p : params) {
        const Tensor analytic = p->grad;
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double saved = p->value.data[i];
            p->value.data[i] = saved + eps;
            const double up = loss(x);
            p->value.data[i] = saved - eps;
            const double down = loss(x);
            p->value.data[i] = saved;
            record(analytic.data[i], (up - down) / (2.0 * eps), p->name + "[" + std::to_string(i) + "]");
        }
    }
    if (check_input) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double saved = x.data[i];
            x.data[i] = saved + eps;
            const double up = loss(x);
            x.data[i] = saved - eps;
            const double down = loss(x);
            x.data[i] = saved;
            record(dx.data[i], (up - down) / (2.0 * eps), "input[" + std::to_string(i) + "]");
        }
    }
    return res;
}

}  // namespace abaf::nn
