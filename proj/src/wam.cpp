#include <cmath>
#include <numeric>

#include "abaf/error.hpp"
#include "abaf/log.hpp"
#include "abaf/models.hpp"

namespace abaf {

void WamWeights::validate() const {
    for (double v : {alpha, beta, gamma, delta, epsilon})
        require(v >= 0.0 && std::isfinite(v), ErrorCode::InvalidArgument, "WAM coefficients must be >= 0", "wam");
    require(alpha + beta + gamma + delta + epsilon > 0.0, ErrorCode::InvalidArgument,
            "WAM coefficients must not all be zero", "wam");
}

WamWeights WamWeights::preset(const std::string& name) {
    if (name == "overall") return overall();
    if (name == "recall") return recall_oriented();
    if (name == "robustness") return robustness();
    fail(ErrorCode::InvalidArgument, "unknown WAM preset '" + name + "' (overall, recall, robustness)", "wam.preset");
}

double wam_score(const Metrics& m, const WamWeights& w) {
    w.validate();
    return w.alpha * m.acc + w.beta * m.precision + w.gamma * m.recall + w.delta * m.macro_f1 +
           w.epsilon * m.weighted_f1;
}

std::vector<double> wam_weights(const std::vector<double>& scores) {
    require(!scores.empty(), ErrorCode::EmptyInput, "no sub-model scores", "scores");
    for (double s : scores)
        require(s >= 0.0 && std::isfinite(s), ErrorCode::InvalidArgument, "scores must be finite and >= 0", "scores");
    const double total = std::accumulate(scores.begin(), scores.end(), 0.0);
    std::vector<double> w(scores.size());
    if (total == 0.0) {
        log_warn("all sub-model scores are zero; using uniform fusion weights");
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(scores.size()));
        return w;
    }
    for (std::size_t i = 0; i < scores.size(); ++i) w[i] = scores[i] / total;
    return w;
}

nn::Tensor late_fuse(const std::vector<nn::Tensor>& embeddings, const std::vector<double>& weights) {
    require(!embeddings.empty() && embeddings.size() == weights.size(), ErrorCode::ShapeMismatch,
            "need one weight per embedding", "weights");
    const nn::Shape& s0 = embeddings.front().shape;
    require(s0.size() == 2, ErrorCode::ShapeMismatch, "embeddings must be N x D", "embeddings");
    const std::size_t n = s0[0], d = s0[1], k = embeddings.size();
    nn::Tensor out({n, k, d});
    for (std::size_t j = 0; j < k; ++j) {
        require(embeddings[j].shape == s0, ErrorCode::ShapeMismatch, "embedding shapes differ", "embeddings");
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < d; ++c)
                out.data[(i * k + j) * d + c] = weights[j] * embeddings[j].data[i * d + c];
    }
    return out;
}

}  // namespace abaf
