#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "abaf/nn/tensor.hpp"
#include "abaf/rng.hpp"

namespace abaf::nn {

/// A differentiable stage. forward() caches what backward() needs;
/// backward() accumulates parameter gradients and returns dL/dinput.
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x, bool train) = 0;
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual std::vector<Parameter*> parameters() { return {}; }
    /// Non-trainable state saved with checkpoints (batch-norm running stats).
    virtual std::vector<std::pair<std::string, Tensor*>> buffers() { return {}; }
    /// Draws initial weights.
    virtual void init(Rng&) {}
    virtual std::string kind() const = 0;
};

std::size_t count_params(const std::vector<Parameter*>& params);

/// 3x3 cross-correlation with zero padding 1 (H and W preserved).
class Conv2d : public Layer {
public:
    Conv2d(std::string name, std::size_t in_channels, std::size_t filters);
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
    void init(Rng& rng) override;
    std::string kind() const override { return "conv2d"; }
    Parameter& weight() { return weight_; }
    Parameter& bias() { return bias_; }

private:
    std::size_t c_, f_;
    Parameter weight_;  // F x C x 3 x 3
    Parameter bias_;    // F
    Shape in_shape_;
    std::vector<double> cols_;  // per sample: (C*9) x (H*W)
};

/// 2x2 max pooling, stride 2. Gradient goes to the first maximal element of
/// each window in row-major order.
class MaxPool2d : public Layer {
public:
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string kind() const override { return "maxpool2d"; }

private:
    Shape in_shape_;
    std::vector<std::size_t> argmax_;
};

/// y = x W^T + b on N x D_in inputs. Without bias, b is absent (and not
/// counted as a parameter).
class Linear : public Layer {
public:
    Linear(std::string name, std::size_t in, std::size_t out, bool with_bias = true);
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<Parameter*> parameters() override;
    void init(Rng& rng) override;
    std::string kind() const override { return "linear"; }
    Parameter& weight() { return weight_; }
    Parameter& bias() { return bias_; }

private:
    std::size_t in_, out_;
    bool with_bias_;
    Parameter weight_;  // out x in
    Parameter bias_;    // out, zero and frozen without bias
    Tensor input_;
};

class ReLU : public Layer {
public:
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string kind() const override { return "relu"; }

private:
    Tensor input_;
};

/// Inverted dropout: survivors are scaled by 1/(1-p) in training; identity
/// in evaluation. The mask stream is owned by the layer and seeded once.
class Dropout : public Layer {
public:
    Dropout(double p, std::uint64_t seed);
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string kind() const override { return "dropout"; }
    void reseed(std::uint64_t seed) { rng_ = Rng(seed); }

private:
    double p_;
    Rng rng_;
    std::vector<double> mask_;
    bool last_train_ = false;
};

/// Per-feature normalization over the batch of an N x D input.
class BatchNorm1d : public Layer {
public:
    BatchNorm1d(std::string name, std::size_t features, double momentum = 0.1, double eps = 1e-5);
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<Parameter*> parameters() override { return {&gamma_, &beta_}; }
    std::vector<std::pair<std::string, Tensor*>> buffers() override;
    void init(Rng& rng) override;
    std::string kind() const override { return "batchnorm1d"; }

private:
    std::string name_;
    std::size_t d_;
    double momentum_, eps_;
    Parameter gamma_, beta_;
    Tensor running_mean_, running_var_;
    Tensor xhat_;
    std::vector<double> inv_std_;
    bool last_train_ = false;
};

/// N x F x H x W feature maps to an N x T x (F*H*W/T) sequence. Token t holds
/// the width columns [t*W/T, (t+1)*W/T) of every channel and row.
class TokenSplit : public Layer {
public:
    explicit TokenSplit(std::size_t tokens) : tokens_(tokens) {}
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string kind() const override { return "token_split"; }

private:
    std::size_t tokens_;
    Shape in_shape_;
};

/// Keeps the batch dimension and reshapes the rest to `tail`.
class Reshape : public Layer {
public:
    explicit Reshape(Shape tail) : tail_(std::move(tail)) {}
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string kind() const override { return "reshape"; }

private:
    Shape tail_;
    Shape in_shape_;
};

/// Ordered stack of layers.
class Sequential : public Layer {
public:
    Sequential() = default;
    Sequential(Sequential&&) = default;
    Sequential& operator=(Sequential&&) = default;

    template <class L, class... Args>
    L& add(Args&&... args) {
        auto layer = std::make_unique<L>(std::forward<Args>(args)...);
        L& ref = *layer;
        layers_.push_back(std::move(layer));
        return ref;
    }
    void push(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

    Tensor forward(const Tensor& x, bool train) override;
    /// Runs layers [0, stop) only.
    Tensor forward_until(const Tensor& x, std::size_t stop, bool train);
    Tensor backward(const Tensor& grad_out) override;
    /// Backward through layers [0, stop) after a matching forward_until.
    Tensor backward_until(const Tensor& grad_out, std::size_t stop);
    std::vector<Parameter*> parameters() override;
    std::vector<std::pair<std::string, Tensor*>> buffers() override;
    void init(Rng& rng) override;
    std::string kind() const override { return "sequential"; }

    std::size_t size() const { return layers_.size(); }
    Layer& at(std::size_t i) { return *layers_.at(i); }
    void zero_grad();

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

}  // namespace abaf::nn
