#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "abaf/models.hpp"
#include "abaf/nn/tensor.hpp"

namespace abaf {

struct TrainConfig {
    std::size_t max_epochs = 100;
    std::size_t patience = 10;
    std::size_t batch_size = 16;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    void validate() const;
};

/// Stops after `patience` consecutive epochs without a strict decrease of
/// the monitored loss.
class EarlyStopping {
public:
    explicit EarlyStopping(std::size_t patience) : patience_(patience) {}
    /// Records one epoch; returns true when it is a new best.
    bool update(double loss);
    bool should_stop() const { return wait_ >= patience_; }
    double best() const { return best_; }
    /// 1-based epoch of the best loss, 0 before any update.
    std::size_t best_epoch() const { return best_epoch_; }

private:
    std::size_t patience_;
    std::size_t wait_ = 0;
    std::size_t epoch_ = 0;
    std::size_t best_epoch_ = 0;
    double best_ = std::numeric_limits<double>::infinity();
};

/// Samples stacked along the first tensor axis.
struct Dataset {
    nn::Tensor x;
    std::vector<int> y;
    std::size_t size() const { return y.size(); }
};

/// Rows `idx` of `x` (first axis).
nn::Tensor gather_rows(const nn::Tensor& x, const std::vector<std::size_t>& idx);
Dataset subset(const Dataset& d, const std::vector<std::size_t>& idx);

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainResult {
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    double best_val_loss = 0.0;
    bool stopped_early = false;
};

/// Adam on shuffled minibatches, validation loss after every epoch, early
/// stopping, and the best-validation weights restored on return.
TrainResult train_model(Model& model, const Dataset& train, const Dataset& val, const TrainConfig& cfg);

/// Mean cross-entropy in evaluation mode.
double evaluate_loss(Model& model, const Dataset& data, std::size_t batch_size = 64);
/// P(class 1) per sample in evaluation mode.
std::vector<double> predict_proba(Model& model, const nn::Tensor& x, std::size_t batch_size = 64);
/// Embeddings in evaluation mode, N x embedding_dim.
nn::Tensor embed_all(Model& model, const nn::Tensor& x, std::size_t batch_size = 64);

}  // namespace abaf
