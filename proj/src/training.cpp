#include "abaf/training.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>

#include "abaf/error.hpp"
#include "abaf/log.hpp"
#include "abaf/nn/checkpoint.hpp"
#include "abaf/nn/loss_optim.hpp"
#include "abaf/rng.hpp"

namespace abaf {

void TrainConfig::validate() const {
    require(max_epochs >= 1, ErrorCode::InvalidArgument, "max_epochs must be >= 1", "train.max_epochs");
    require(patience >= 1, ErrorCode::InvalidArgument, "patience must be >= 1", "train.patience");
    require(batch_size >= 1, ErrorCode::InvalidArgument, "batch_size must be >= 1", "train.batch_size");
    require(lr > 0.0, ErrorCode::InvalidArgument, "lr must be > 0", "train.lr");
}

bool EarlyStopping::update(double loss) {
    ++epoch_;
    if (loss < best_) {
        best_ = loss;
        best_epoch_ = epoch_;
        wait_ = 0;
        return true;
    }
    ++wait_;
    return false;
}

nn::Tensor gather_rows(const nn::Tensor& x, const std::vector<std::size_t>& idx) {
    require(x.ndim() >= 1, ErrorCode::ShapeMismatch, "cannot gather from a scalar", "x");
    const std::size_t row = x.shape[0] ? x.size() / x.shape[0] : 0;
    nn::Shape s = x.shape;
    s[0] = idx.size();
    nn::Tensor out(s);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        require(idx[i] < x.shape[0], ErrorCode::OutOfRange, "row index out of range", "idx");
        std::memcpy(out.data.data() + i * row, x.data.data() + idx[i] * row, row * sizeof(double));
    }
    return out;
}

Dataset subset(const Dataset& d, const std::vector<std::size_t>& idx) {
    Dataset out;
    out.x = gather_rows(d.x, idx);
    for (std::size_t i : idx) out.y.push_back(d.y[i]);
    return out;
}

namespace {

template <class Fn>
void for_batches(std::size_t n, std::size_t batch, Fn&& fn) {
    for (std::size_t start = 0; start < n; start += batch) {
        std::vector<std::size_t> idx(std::min(batch, n - start));
        std::iota(idx.begin(), idx.end(), start);
        fn(idx);
    }
}

}  // namespace

double evaluate_loss(Model& model, const Dataset& data, std::size_t batch_size) {
    require(data.size() > 0, ErrorCode::EmptyInput, "empty evaluation split", "data");
    double total = 0.0;
    for_batches(data.size(), batch_size, [&](const std::vector<std::size_t>& idx) {
        const Dataset b = subset(data, idx);
        total += nn::softmax_cross_entropy(model.forward(b.x, false), b.y).loss * static_cast<double>(idx.size());
    });
    return total / static_cast<double>(data.size());
}

std::vector<double> predict_proba(Model& model, const nn::Tensor& x, std::size_t batch_size) {
    std::vector<double> out;
    for_batches(x.shape.at(0), batch_size, [&](const std::vector<std::size_t>& idx) {
        const nn::Tensor p = nn::softmax_rows(model.forward(gather_rows(x, idx), false));
        for (std::size_t i = 0; i < idx.size(); ++i) out.push_back(p.data[i * 2 + 1]);
    });
    return out;
}

nn::Tensor embed_all(Model& model, const nn::Tensor& x, std::size_t batch_size) {
    const std::size_t n = x.shape.at(0), d = model.embedding_dim();
    nn::Tensor out({n, d});
    for_batches(n, batch_size, [&](const std::vector<std::size_t>& idx) {
        const nn::Tensor e = model.embed(gather_rows(x, idx));
        std::copy(e.data.begin(), e.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(idx.front() * d));
    });
    return out;
}

TrainResult train_model(Model& model, const Dataset& train, const Dataset& val, const TrainConfig& cfg) {
    cfg.validate();
    require(train.size() > 0, ErrorCode::EmptyInput, "empty training split", "train");
    require(val.size() > 0, ErrorCode::EmptyInput, "empty validation split", "val");
    nn::AdamConfig acfg;
    acfg.lr = cfg.lr;
    nn::Adam opt(model.parameters(), acfg);
    EarlyStopping stop(cfg.patience);
    nn::Snapshot best = nn::take_snapshot(model.net());
    TrainResult result;
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        Rng rng = Rng::named(cfg.seed, "epoch" + std::to_string(epoch));
        rng.shuffle(order);
        double total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                               order.begin() + static_cast<std::ptrdiff_t>(
                                                                   std::min(order.size(), start + cfg.batch_size)));
            const Dataset b = subset(train, idx);
            opt.zero_grad();
            const nn::LossResult loss = nn::softmax_cross_entropy(model.forward(b.x, true), b.y);
            model.backward(loss.grad);
            opt.step();
            total += loss.loss * static_cast<double>(idx.size());
        }
        EpochRecord rec{epoch, total / static_cast<double>(train.size()), evaluate_loss(model, val)};
        result.history.push_back(rec);
        log_debug("epoch " + std::to_string(epoch) + " train " + std::to_string(rec.train_loss) + " val " +
                  std::to_string(rec.val_loss));
        if (stop.update(rec.val_loss)) best = nn::take_snapshot(model.net());
        if (stop.should_stop()) {
            result.stopped_early = epoch < cfg.max_epochs;
            break;
        }
    }
    nn::restore_snapshot(model.net(), best);
    result.best_epoch = stop.best_epoch();
    result.best_val_loss = stop.best();
    return result;
}

}  // namespace abaf
