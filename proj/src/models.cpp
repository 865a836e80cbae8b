#include "abaf/models.hpp"

#include "abaf/error.hpp"
#include "abaf/nn/attention.hpp"
#include "abaf/nn/recurrent.hpp"
#include "abaf/rng.hpp"

namespace abaf {

namespace {

void validate_fc(const std::vector<std::size_t>& fc, std::size_t min_len, const char* field) {
    require(fc.size() >= min_len, ErrorCode::InvalidArgument, "fc_sizes too short", field);
    require(fc.back() == 2, ErrorCode::InvalidArgument, "fc_sizes must end in 2 logits", field);
    for (std::size_t v : fc) require(v > 0, ErrorCode::InvalidArgument, "fc sizes must be positive", field);
}

void validate_dropout(double p) {
    require(p >= 0.0 && p < 1.0, ErrorCode::InvalidArgument, "dropout_p must be in [0,1)", "dropout_p");
}

/// FC stack after attention pooling. Hidden blocks are FC -> relu -> dropout;
/// the last FC emits logits. Returns the index just past the first relu.
std::size_t add_fc_tail(nn::Sequential& net, const std::string& prefix, std::size_t in,
                        const std::vector<std::size_t>& sizes, double p, std::uint64_t seed,
                        nn::Linear** first) {
    std::size_t stop = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        auto& fc = net.add<nn::Linear>(prefix + "fc" + std::to_string(i + 1), in, sizes[i]);
        if (i == 0 && first) *first = &fc;
        in = sizes[i];
        if (i + 1 == sizes.size()) break;
        net.add<nn::ReLU>();
        if (i == 0) stop = net.size();
        net.add<nn::Dropout>(p, Rng::named(seed, prefix + "dropout" + std::to_string(i + 1)).next_u64());
    }
    return stop;
}

}  // namespace

void ImageModelConfig::validate() const {
    require(in_channels >= 1, ErrorCode::InvalidArgument, "in_channels must be >= 1", "in_channels");
    require(image_side >= 4 && image_side % 4 == 0, ErrorCode::InvalidArgument,
            "image_side must be a positive multiple of 4", "image_side");
    require(seq_tokens >= 1 && (image_side / 4) % seq_tokens == 0, ErrorCode::InvalidArgument,
            "seq_tokens must divide image_side / 4", "seq_tokens");
    require(conv1_filters > 0 && conv2_filters > 0 && lstm_hidden > 0, ErrorCode::InvalidArgument,
            "layer sizes must be positive", "image_model");
    validate_fc(fc_sizes, 2, "fc_sizes");
    validate_dropout(dropout_p);
}

void NumModelConfig::validate() const {
    require(input_dim >= 1, ErrorCode::InvalidArgument, "input_dim must be >= 1", "input_dim");
    require(lstm_hidden > 0, ErrorCode::InvalidArgument, "lstm_hidden must be positive", "lstm_hidden");
    validate_fc(fc_sizes, 2, "fc_sizes");
    validate_dropout(dropout_p);
}

void FusionConfig::validate() const {
    require(token_dim > 0 && lstm_hidden > 0, ErrorCode::InvalidArgument, "fusion sizes must be positive",
            "fusion");
    validate_fc(fc_sizes, 1, "fc_sizes");
    validate_dropout(dropout_p);
}

nn::Tensor Model::embed(const nn::Tensor& x) {
    require(embedding_stop_ > 0, ErrorCode::InvalidArgument, "model has no embedding layer", "model");
    return net_.forward_until(x, embedding_stop_, false);
}

nn::Tensor Model::embed_train(const nn::Tensor& x) {
    require(embedding_stop_ > 0, ErrorCode::InvalidArgument, "model has no embedding layer", "model");
    return net_.forward_until(x, embedding_stop_, true);
}

nn::Tensor Model::embedding_backward(const nn::Tensor& g) { return net_.backward_until(g, embedding_stop_); }

void Model::init(std::uint64_t seed) {
    Rng rng = Rng::named(seed, "init");
    net_.init(rng);
}

Model make_image_model(const ImageModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Model m;
    const std::size_t pooled = cfg.image_side / 4;
    const std::size_t token_dim = cfg.conv2_filters * pooled * (pooled / cfg.seq_tokens);
    m.input_shape_ = {cfg.in_channels, cfg.image_side, cfg.image_side};
    m.net_.add<nn::Conv2d>("conv1", cfg.in_channels, cfg.conv1_filters);
    m.net_.add<nn::ReLU>();
    m.net_.add<nn::MaxPool2d>();
    m.net_.add<nn::Conv2d>("conv2", cfg.conv1_filters, cfg.conv2_filters);
    m.net_.add<nn::ReLU>();
    m.net_.add<nn::MaxPool2d>();
    m.net_.add<nn::TokenSplit>(cfg.seq_tokens);
    m.net_.add<nn::Lstm>("lstm", token_dim, cfg.lstm_hidden);
    m.net_.add<nn::TemporalAttention>("attention", cfg.lstm_hidden);
    m.embedding_stop_ = add_fc_tail(m.net_, "", cfg.lstm_hidden, cfg.fc_sizes, cfg.dropout_p, seed, &m.first_fc_);
    m.embedding_dim_ = cfg.fc_sizes.front();
    m.init(seed);
    return m;
}

Model make_num_model(const NumModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Model m;
    m.input_shape_ = {cfg.input_dim};
    m.net_.add<nn::Reshape>(nn::Shape{1, cfg.input_dim});
    m.net_.add<nn::Lstm>("lstm", cfg.input_dim, cfg.lstm_hidden);
    m.net_.add<nn::TemporalAttention>("attention", cfg.lstm_hidden);
    m.embedding_stop_ = add_fc_tail(m.net_, "", cfg.lstm_hidden, cfg.fc_sizes, cfg.dropout_p, seed, &m.first_fc_);
    m.embedding_dim_ = cfg.fc_sizes.front();
    m.init(seed);
    return m;
}

Model make_fusion_head(const FusionConfig& cfg, std::size_t tokens, std::uint64_t seed) {
    cfg.validate();
    require(tokens >= 1, ErrorCode::InvalidArgument, "fusion needs at least one token", "tokens");
    Model m;
    m.input_shape_ = {tokens, cfg.token_dim};
    m.net_.add<nn::Lstm>("fusion.lstm", cfg.token_dim, cfg.lstm_hidden);
    m.net_.add<nn::TemporalAttention>("fusion.attention", cfg.lstm_hidden);
    add_fc_tail(m.net_, "fusion.", cfg.lstm_hidden, cfg.fc_sizes, cfg.dropout_p, seed, &m.first_fc_);
    m.embedding_stop_ = 0;
    m.init(seed);
    return m;
}

std::size_t cnn_stack_param_budget(std::size_t in_channels, std::size_t image_side, std::size_t f1,
                                   std::size_t f2, std::size_t units) {
    require(image_side % 4 == 0, ErrorCode::InvalidArgument, "image_side must be a multiple of 4", "image_side");
    nn::Sequential stack;
    stack.add<nn::Conv2d>("conv1", in_channels, f1);
    stack.add<nn::Conv2d>("conv2", f1, f2);
    stack.add<nn::Linear>("fc", f2 * (image_side / 4) * (image_side / 4), units, false);
    stack.add<nn::BatchNorm1d>("fc_bn", units);
    return nn::count_params(stack.parameters());
}

}  // namespace abaf
