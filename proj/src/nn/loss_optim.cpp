#include "abaf/nn/loss_optim.hpp"

#include <algorithm>
#include <cmath>

#include "abaf/error.hpp"

namespace abaf::nn {

Tensor softmax_rows(const Tensor& logits) {
    require_shape(logits, {0, 0}, "logits");
    const std::size_t n = logits.dim(0), k = logits.dim(1);
    Tensor p({n, k});
    for (std::size_t i = 0; i < n; ++i) {
        const double* z = logits.ptr() + i * k;
        const double mx = *std::max_element(z, z + k);
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) sum += (p.data[i * k + j] = std::exp(z[j] - mx));
        for (std::size_t j = 0; j < k; ++j) p.data[i * k + j] /= sum;
    }
    return p;
}

LossResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    require_shape(logits, {labels.size(), 0}, "logits");
    const std::size_t n = logits.dim(0), k = logits.dim(1);
    require(n > 0, ErrorCode::EmptyInput, "empty batch", "logits");
    LossResult r;
    r.probs = softmax_rows(logits);
    r.grad = r.probs;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        require(labels[i] >= 0 && static_cast<std::size_t>(labels[i]) < k, ErrorCode::OutOfRange,
                "label " + std::to_string(labels[i]) + " outside [0," + std::to_string(k) + ")", "labels");
        const std::size_t y = static_cast<std::size_t>(labels[i]);
        const double* z = logits.ptr() + i * k;
        const double mx = *std::max_element(z, z + k);
        double lse = 0.0;
        for (std::size_t j = 0; j < k; ++j) lse += std::exp(z[j] - mx);
        total += std::log(lse) + mx - z[y];
        r.grad.data[i * k + y] -= 1.0;
    }
    for (double& g : r.grad.data) g /= static_cast<double>(n);
    r.loss = total / static_cast<double>(n);
    return r;
}

Adam::Adam(std::vector<Parameter*> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    require(cfg_.lr > 0.0, ErrorCode::InvalidArgument, "learning rate must be positive", "lr");
    for (const Parameter* p : params_) {
        m_.emplace_back(p->value.size(), 0.0);
        v_.emplace_back(p->value.size(), 0.0);
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto& w = params_[i]->value.data;
        const auto& g = params_[i]->grad.data;
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
            v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
            w[j] -= cfg_.lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + cfg_.eps);
        }
    }
}

void Adam::zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
}

}  // namespace abaf::nn
