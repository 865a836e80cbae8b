#pragma once

#include <vector>

#include "abaf/nn/tensor.hpp"

namespace abaf::nn {

struct LossResult {
    double loss = 0.0;
    Tensor grad;   // dL/dlogits, N x K
    Tensor probs;  // softmax(logits), N x K
};

/// Mean over the batch of -log softmax(logits)[label].
LossResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

/// Row-wise softmax of an N x K tensor.
Tensor softmax_rows(const Tensor& logits);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction. Moments are allocated per parameter on
/// construction, in the order given.
class Adam {
public:
    Adam(std::vector<Parameter*> params, AdamConfig cfg = {});
    void step();
    void zero_grad();
    long long steps() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    std::vector<Parameter*> params_;
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
    long long t_ = 0;
};

}  // namespace abaf::nn
