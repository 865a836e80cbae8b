#pragma once

#include "abaf/nn/layers.hpp"

namespace abaf::nn {

/// Single-layer LSTM over N x T x D_in with zero initial state; returns the
/// full N x T x H hidden sequence. Gate rows are stacked as (i, f, g, o).
class Lstm : public Layer {
public:
    Lstm(std::string name, std::size_t input, std::size_t hidden);
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<Parameter*> parameters() override { return {&w_ih_, &w_hh_, &bias_}; }
    void init(Rng& rng) override;
    std::string kind() const override { return "lstm"; }

    Parameter& w_ih() { return w_ih_; }
    Parameter& w_hh() { return w_hh_; }
    Parameter& bias() { return bias_; }
    std::size_t hidden() const { return h_; }

private:
    std::size_t d_, h_;
    Parameter w_ih_;  // 4H x D
    Parameter w_hh_;  // 4H x H
    Parameter bias_;  // 4H
    Tensor input_;
    std::vector<RowMatrix> gates_;  // per step, N x 4H, activated
    std::vector<RowMatrix> cells_;  // per step, N x H
    std::vector<RowMatrix> hidden_;
};

}  // namespace abaf::nn
