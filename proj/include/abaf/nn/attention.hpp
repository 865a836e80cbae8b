#pragma once

#include "abaf/nn/layers.hpp"

namespace abaf::nn {

/// Softmax pooling over time: s_t = v . h_t + c, alpha = softmax_t(s),
/// output = sum_t alpha_t h_t. N x T x D -> N x D.
class TemporalAttention : public Layer {
public:
    TemporalAttention(std::string name, std::size_t dim);
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<Parameter*> parameters() override { return {&v_, &c_}; }
    void init(Rng& rng) override;
    std::string kind() const override { return "temporal_attention"; }

    Parameter& v() { return v_; }
    Parameter& c() { return c_; }
    /// N x T weights of the last forward pass.
    const Tensor& alpha() const { return alpha_; }

private:
    std::size_t d_;
    Parameter v_;  // D
    Parameter c_;  // 1
    Tensor input_;
    Tensor alpha_;
};

enum class MhaConvention {
    Split,             // h heads of width E/h: 4 E^2 weights
    PerHeadFullWidth,  // h heads of width E: 4 h E^2 weights
};

/// Bias-free multi-head scaled dot-product self-attention over N x T x E.
class MultiHeadAttention : public Layer {
public:
    MultiHeadAttention(std::string name, std::size_t embed, std::size_t heads,
                       MhaConvention convention = MhaConvention::Split);
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<Parameter*> parameters() override { return {&wq_, &wk_, &wv_, &wo_}; }
    void init(Rng& rng) override;
    std::string kind() const override { return "multi_head_attention"; }

    std::size_t head_dim() const { return dh_; }
    /// N x heads x T x T softmax weights of the last forward pass.
    const Tensor& weights() const { return attn_; }
    Parameter& wq() { return wq_; }
    Parameter& wk() { return wk_; }
    Parameter& wv() { return wv_; }
    Parameter& wo() { return wo_; }

private:
    std::size_t e_, heads_, dh_;
    Parameter wq_, wk_, wv_;  // (heads*dh) x E
    Parameter wo_;            // E x (heads*dh)
    Tensor input_;
    Tensor q_, k_, v_, concat_;  // N x T x (heads*dh)
    Tensor attn_;
};

}  // namespace abaf::nn
