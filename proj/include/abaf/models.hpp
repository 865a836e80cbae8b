#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "abaf/metrics.hpp"
#include "abaf/nn/layers.hpp"

namespace abaf {

struct ImageModelConfig {
    std::size_t in_channels = 1;
    std::size_t image_side = 64;
    std::size_t conv1_filters = 16;
    std::size_t conv2_filters = 32;
    std::size_t lstm_hidden = 32;
    std::vector<std::size_t> fc_sizes{128, 64, 2};
    double dropout_p = 0.3;
    std::size_t seq_tokens = 16;
    void validate() const;
};

struct NumModelConfig {
    std::size_t input_dim = 291;
    std::size_t lstm_hidden = 32;
    std::vector<std::size_t> fc_sizes{128, 64, 2};
    double dropout_p = 0.3;
    void validate() const;
};

struct FusionConfig {
    std::size_t token_dim = 128;
    std::size_t lstm_hidden = 32;
    std::vector<std::size_t> fc_sizes{64, 2};
    double dropout_p = 0.3;
    void validate() const;
};

/// A classifier built as one layer stack. The first FC block output (after
/// its activation, before dropout) is the embedding for sub-models.
class Model {
public:
    nn::Tensor forward(const nn::Tensor& x, bool train) { return net_.forward(x, train); }
    nn::Tensor backward(const nn::Tensor& g) { return net_.backward(g); }
    /// Embedding in evaluation mode. Only sub-models have one.
    nn::Tensor embed(const nn::Tensor& x);
    /// Embedding with layer caches kept for embedding_backward.
    nn::Tensor embed_train(const nn::Tensor& x);
    nn::Tensor embedding_backward(const nn::Tensor& g);
    std::vector<nn::Parameter*> parameters() { return net_.parameters(); }
    std::size_t count_params() { return nn::count_params(net_.parameters()); }
    void init(std::uint64_t seed);
    void zero_grad() { net_.zero_grad(); }
    nn::Sequential& net() { return net_; }
    /// Per-sample input shape (without the batch dimension).
    const nn::Shape& input_shape() const { return input_shape_; }
    /// The first fully connected layer after the attention pooling.
    nn::Linear& first_fc() { return *first_fc_; }
    std::size_t embedding_dim() const { return embedding_dim_; }

    friend Model make_image_model(const ImageModelConfig&, std::uint64_t);
    friend Model make_num_model(const NumModelConfig&, std::uint64_t);
    friend Model make_fusion_head(const FusionConfig&, std::size_t, std::uint64_t);

private:
    nn::Sequential net_;
    nn::Shape input_shape_;
    nn::Linear* first_fc_ = nullptr;
    std::size_t embedding_stop_ = 0;  // layers [0, stop) produce the embedding
    std::size_t embedding_dim_ = 0;
};

/// conv -> relu -> pool -> conv -> relu -> pool -> tokens -> LSTM -> attention
/// -> FC(128) -> relu [embedding] -> dropout -> FC(64) -> relu -> dropout -> FC(2).
/// Dropout masks draw from streams derived from `seed`.
Model make_image_model(const ImageModelConfig& cfg, std::uint64_t seed);

/// N x D vector viewed as an N x 1 x D sequence, then the same tail.
Model make_num_model(const NumModelConfig& cfg, std::uint64_t seed);

/// N x tokens x token_dim -> LSTM -> attention -> FC(64) -> relu -> dropout -> FC(2).
Model make_fusion_head(const FusionConfig& cfg, std::size_t tokens, std::uint64_t seed);

/// Parameter budget of the full-scale CNN stack: conv 3x3 (C -> f1), conv
/// 3x3 (f1 -> f2), and the 128-unit projection of the pooled maps, realized
/// as a bias-free FC followed by batch normalization.
std::size_t cnn_stack_param_budget(std::size_t in_channels, std::size_t image_side, std::size_t f1 = 16,
                                   std::size_t f2 = 32, std::size_t units = 128);

// ---------------------------------------------------------------------------
// Weight adjustment and late fusion
// ---------------------------------------------------------------------------

struct WamWeights {
    double alpha = 0.5;    // accuracy
    double beta = 0.1;     // precision
    double gamma = 0.1;    // recall
    double delta = 0.1;    // macro-average F1
    double epsilon = 0.1;  // weighted-average F1
    void validate() const;

    static WamWeights overall() { return {0.5, 0.1, 0.1, 0.1, 0.1}; }
    static WamWeights recall_oriented() { return {0.1, 0.3, 0.3, 0.1, 0.1}; }
    static WamWeights robustness() { return {0.1, 0.1, 0.1, 0.3, 0.3}; }
    static WamWeights preset(const std::string& name);
};

double wam_score(const Metrics& m, const WamWeights& w);

/// score_i / sum(score). All-zero scores give uniform weights and a warning.
std::vector<double> wam_weights(const std::vector<double>& scores);

/// Scales each N x D embedding by its weight and stacks them into an
/// N x K x D token sequence (K = number of streams).
nn::Tensor late_fuse(const std::vector<nn::Tensor>& embeddings, const std::vector<double>& weights);

}  // namespace abaf
