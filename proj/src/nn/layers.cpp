#include "abaf/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "abaf/error.hpp"

namespace abaf::nn {

std::size_t count_params(const std::vector<Parameter*>& params) {
    std::size_t n = 0;
    for (const Parameter* p : params) n += p->value.size();
    return n;
}

namespace {

void uniform_fill(Tensor& t, Rng& rng, double bound) {
    for (double& v : t.data) v = rng.uniform(-bound, bound);
}

}  // namespace

// ---------------------------------------------------------------------------
// Conv2d
// ---------------------------------------------------------------------------

Conv2d::Conv2d(std::string name, std::size_t in_channels, std::size_t filters)
    : c_(in_channels),
      f_(filters),
      weight_(name + ".weight", {filters, in_channels, 3, 3}),
      bias_(name + ".bias", {filters}) {
    require(in_channels > 0 && filters > 0, ErrorCode::InvalidArgument, "conv2d needs positive sizes", name);
}

void Conv2d::init(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(c_ * 9));
    uniform_fill(weight_.value, rng, bound);
    uniform_fill(bias_.value, rng, bound);
}

Tensor Conv2d::forward(const Tensor& x, bool) {
    require_shape(x, {0, c_, 0, 0}, "conv2d input");
    in_shape_ = x.shape;
    const std::size_t n = x.dim(0), h = x.dim(2), w = x.dim(3), hw = h * w, k = c_ * 9;
    cols_.assign(n * k * hw, 0.0);
    Tensor out({n, f_, h, w});
    const auto wmat = as_matrix(weight_.value.ptr(), f_, k);
    const Eigen::Map<const Eigen::VectorXd> b(bias_.value.ptr(), static_cast<Eigen::Index>(f_));
    for (std::size_t s = 0; s < n; ++s) {
        double* col = cols_.data() + s * k * hw;
        const double* xs = x.ptr() + s * c_ * hw;
        for (std::size_t c = 0; c < c_; ++c)
            for (std::size_t ki = 0; ki < 3; ++ki)
                for (std::size_t kj = 0; kj < 3; ++kj) {
                    double* row = col + (c * 9 + ki * 3 + kj) * hw;
                    for (std::size_t i = 0; i < h; ++i) {
                        const long si = static_cast<long>(i + ki) - 1;
                        if (si < 0 || si >= static_cast<long>(h)) continue;
                        const double* src = xs + c * hw + static_cast<std::size_t>(si) * w;
                        for (std::size_t j = 0; j < w; ++j) {
                            const long sj = static_cast<long>(j + kj) - 1;
                            if (sj >= 0 && sj < static_cast<long>(w)) row[i * w + j] = src[sj];
                        }
                    }
                }
        auto o = as_matrix(out.ptr() + s * f_ * hw, f_, hw);
        o.noalias() = wmat * as_matrix(static_cast<const double*>(col), k, hw);
        o.colwise() += b;
    }
    return out;
}

Tensor Conv2d::backward(const Tensor& g) {
    require_shape(g, {in_shape_[0], f_, in_shape_[2], in_shape_[3]}, "conv2d grad");
    const std::size_t n = in_shape_[0], h = in_shape_[2], w = in_shape_[3], hw = h * w, k = c_ * 9;
    Tensor dx(in_shape_);
    auto dw = as_matrix(weight_.grad.ptr(), f_, k);
    const auto wmat = as_matrix(weight_.value.ptr(), f_, k);
    RowMatrix dcol(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(hw));
    for (std::size_t s = 0; s < n; ++s) {
        const auto gs = as_matrix(g.ptr() + s * f_ * hw, f_, hw);
        const auto col = as_matrix(static_cast<const double*>(cols_.data() + s * k * hw), k, hw);
        dw.noalias() += gs * col.transpose();
        for (std::size_t f = 0; f < f_; ++f) bias_.grad.data[f] += gs.row(static_cast<Eigen::Index>(f)).sum();
        dcol.noalias() = wmat.transpose() * gs;
        double* dxs = dx.ptr() + s * c_ * hw;
        for (std::size_t c = 0; c < c_; ++c)
            for (std::size_t ki = 0; ki < 3; ++ki)
                for (std::size_t kj = 0; kj < 3; ++kj) {
                    const double* row = dcol.data() + (c * 9 + ki * 3 + kj) * hw;
                    for (std::size_t i = 0; i < h; ++i) {
                        const long si = static_cast<long>(i + ki) - 1;
                        if (si < 0 || si >= static_cast<long>(h)) continue;
                        double* dst = dxs + c * hw + static_cast<std::size_t>(si) * w;
                        for (std::size_t j = 0; j < w; ++j) {
                            const long sj = static_cast<long>(j + kj) - 1;
                            if (sj >= 0 && sj < static_cast<long>(w)) dst[sj] += row[i * w + j];
                        }
                    }
                }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// MaxPool2d
// ---------------------------------------------------------------------------

Tensor MaxPool2d::forward(const Tensor& x, bool) {
    require_shape(x, {0, 0, 0, 0}, "maxpool2d input");
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    require(h % 2 == 0 && w % 2 == 0, ErrorCode::ShapeMismatch, "maxpool2d needs even spatial dims",
            "maxpool2d input");
    in_shape_ = x.shape;
    const std::size_t oh = h / 2, ow = w / 2;
    Tensor out({n, c, oh, ow});
    argmax_.resize(out.size());
    std::size_t o = 0;
    for (std::size_t plane = 0; plane < n * c; ++plane) {
        const std::size_t base = plane * h * w;
        for (std::size_t i = 0; i < oh; ++i)
            for (std::size_t j = 0; j < ow; ++j, ++o) {
                std::size_t best = base + 2 * i * w + 2 * j;
                for (std::size_t di = 0; di < 2; ++di)
                    for (std::size_t dj = 0; dj < 2; ++dj) {
                        const std::size_t idx = base + (2 * i + di) * w + 2 * j + dj;
                        if (x.data[idx] > x.data[best]) best = idx;
                    }
                argmax_[o] = best;
                out.data[o] = x.data[best];
            }
    }
    return out;
}

Tensor MaxPool2d::backward(const Tensor& g) {
    require(g.size() == argmax_.size(), ErrorCode::ShapeMismatch, "maxpool2d grad size", "maxpool2d grad");
    Tensor dx(in_shape_);
    for (std::size_t o = 0; o < argmax_.size(); ++o) dx.data[argmax_[o]] += g.data[o];
    return dx;
}

// ---------------------------------------------------------------------------
// Linear
// ---------------------------------------------------------------------------

Linear::Linear(std::string name, std::size_t in, std::size_t out, bool with_bias)
    : in_(in),
      out_(out),
      with_bias_(with_bias),
      weight_(name + ".weight", {out, in}),
      bias_(name + ".bias", {out}) {
    require(in > 0 && out > 0, ErrorCode::InvalidArgument, "linear needs positive sizes", name);
}

std::vector<Parameter*> Linear::parameters() {
    if (with_bias_) return {&weight_, &bias_};
    return {&weight_};
}

void Linear::init(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_));
    uniform_fill(weight_.value, rng, bound);
    if (with_bias_) uniform_fill(bias_.value, rng, bound);
}

Tensor Linear::forward(const Tensor& x, bool) {
    require_shape(x, {0, in_}, "linear input");
    input_ = x;
    const std::size_t n = x.dim(0);
    Tensor y({n, out_});
    auto ym = as_matrix(y.ptr(), n, out_);
    ym.noalias() = as_matrix(x.ptr(), n, in_) * as_matrix(weight_.value.ptr(), out_, in_).transpose();
    ym.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias_.value.ptr(), static_cast<Eigen::Index>(out_));
    return y;
}

Tensor Linear::backward(const Tensor& g) {
    const std::size_t n = input_.dim(0);
    require_shape(g, {n, out_}, "linear grad");
    const auto gm = as_matrix(g.ptr(), n, out_);
    as_matrix(weight_.grad.ptr(), out_, in_).noalias() += gm.transpose() * as_matrix(input_.ptr(), n, in_);
    if (with_bias_)
        Eigen::Map<Eigen::RowVectorXd>(bias_.grad.ptr(), static_cast<Eigen::Index>(out_)) += gm.colwise().sum();
    Tensor dx({n, in_});
    as_matrix(dx.ptr(), n, in_).noalias() = gm * as_matrix(weight_.value.ptr(), out_, in_);
    return dx;
}

// ---------------------------------------------------------------------------
// ReLU, Dropout
// ---------------------------------------------------------------------------

Tensor ReLU::forward(const Tensor& x, bool) {
    input_ = x;
    Tensor y = x;
    for (double& v : y.data) v = v > 0.0 ? v : 0.0;
    return y;
}

Tensor ReLU::backward(const Tensor& g) {
    Tensor dx = g;
    for (std::size_t i = 0; i < dx.size(); ++i)
        if (!(input_.data[i] > 0.0)) dx.data[i] = 0.0;
    return dx;
}

Dropout::Dropout(double p, std::uint64_t seed) : p_(p), rng_(seed) {
    require(p >= 0.0 && p < 1.0, ErrorCode::InvalidArgument, "dropout p must be in [0,1)", "dropout_p");
}

Tensor Dropout::forward(const Tensor& x, bool train) {
    last_train_ = train && p_ > 0.0;
    if (!last_train_) return x;
    mask_.resize(x.size());
    const double scale = 1.0 / (1.0 - p_);
    Tensor y = x;
    for (std::size_t i = 0; i < y.size(); ++i) {
        mask_[i] = rng_.uniform() < p_ ? 0.0 : scale;
        y.data[i] *= mask_[i];
    }
    return y;
}

Tensor Dropout::backward(const Tensor& g) {
    if (!last_train_) return g;
    Tensor dx = g;
    for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] *= mask_[i];
    return dx;
}

// ---------------------------------------------------------------------------
// BatchNorm1d
// ---------------------------------------------------------------------------

BatchNorm1d::BatchNorm1d(std::string name, std::size_t features, double momentum, double eps)
    : name_(name),
      d_(features),
      momentum_(momentum),
      eps_(eps),
      gamma_(name + ".gamma", {features}),
      beta_(name + ".beta", {features}),
      running_mean_({features}, 0.0),
      running_var_({features}, 1.0) {
    gamma_.value.fill(1.0);
}

void BatchNorm1d::init(Rng&) {
    gamma_.value.fill(1.0);
    beta_.value.fill(0.0);
    running_mean_.fill(0.0);
    running_var_.fill(1.0);
}

std::vector<std::pair<std::string, Tensor*>> BatchNorm1d::buffers() {
    return {{name_ + ".running_mean", &running_mean_}, {name_ + ".running_var", &running_var_}};
}

Tensor BatchNorm1d::forward(const Tensor& x, bool train) {
    require_shape(x, {0, d_}, "batchnorm input");
    const std::size_t n = x.dim(0);
    last_train_ = train;
    Tensor y({n, d_});
    xhat_ = Tensor({n, d_});
    inv_std_.assign(d_, 0.0);
    if (train) require(n >= 2, ErrorCode::InvalidArgument, "batch norm needs N >= 2 in training", "batch");
    for (std::size_t j = 0; j < d_; ++j) {
        double mean = 0.0, var = 0.0;
        if (train) {
            for (std::size_t i = 0; i < n; ++i) mean += x.data[i * d_ + j];
            mean /= static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double dlt = x.data[i * d_ + j] - mean;
                var += dlt * dlt;
            }
            var /= static_cast<double>(n);
            running_mean_.data[j] = (1.0 - momentum_) * running_mean_.data[j] + momentum_ * mean;
            running_var_.data[j] = (1.0 - momentum_) * running_var_.data[j] + momentum_ * var;
        } else {
            mean = running_mean_.data[j];
            var = running_var_.data[j];
        }
        inv_std_[j] = 1.0 / std::sqrt(var + eps_);
        for (std::size_t i = 0; i < n; ++i) {
            const double xh = (x.data[i * d_ + j] - mean) * inv_std_[j];
            xhat_.data[i * d_ + j] = xh;
            y.data[i * d_ + j] = gamma_.value.data[j] * xh + beta_.value.data[j];
        }
    }
    return y;
}

Tensor BatchNorm1d::backward(const Tensor& g) {
    const std::size_t n = xhat_.dim(0);
    require_shape(g, {n, d_}, "batchnorm grad");
    Tensor dx({n, d_});
    const double nd = static_cast<double>(n);
    for (std::size_t j = 0; j < d_; ++j) {
        double sum_g = 0.0, sum_gx = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum_g += g.data[i * d_ + j];
            sum_gx += g.data[i * d_ + j] * xhat_.data[i * d_ + j];
        }
        gamma_.grad.data[j] += sum_gx;
        beta_.grad.data[j] += sum_g;
        const double k = gamma_.value.data[j] * inv_std_[j];
        for (std::size_t i = 0; i < n; ++i) {
            const double gi = g.data[i * d_ + j];
            dx.data[i * d_ + j] =
                last_train_ ? k * (gi - sum_g / nd - xhat_.data[i * d_ + j] * sum_gx / nd) : k * gi;
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Reshapes
// ---------------------------------------------------------------------------

Tensor TokenSplit::forward(const Tensor& x, bool) {
    require_shape(x, {0, 0, 0, 0}, "token split input");
    const std::size_t n = x.dim(0), f = x.dim(1), h = x.dim(2), w = x.dim(3);
    require(tokens_ >= 1 && w % tokens_ == 0, ErrorCode::ShapeMismatch,
            "width " + std::to_string(w) + " not divisible into " + std::to_string(tokens_) + " tokens",
            "seq_tokens");
    in_shape_ = x.shape;
    const std::size_t tw = w / tokens_, d = f * h * tw;
    Tensor y({n, tokens_, d});
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t t = 0; t < tokens_; ++t)
            for (std::size_t c = 0; c < f; ++c)
                for (std::size_t i = 0; i < h; ++i)
                    for (std::size_t jj = 0; jj < tw; ++jj)
                        y.data[(s * tokens_ + t) * d + (c * h + i) * tw + jj] =
                            x.data[((s * f + c) * h + i) * w + t * tw + jj];
    return y;
}

Tensor TokenSplit::backward(const Tensor& g) {
    const std::size_t n = in_shape_[0], f = in_shape_[1], h = in_shape_[2], w = in_shape_[3];
    const std::size_t tw = w / tokens_, d = f * h * tw;
    require(g.size() == n * tokens_ * d, ErrorCode::ShapeMismatch, "token split grad size", "grad");
    Tensor dx(in_shape_);
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t t = 0; t < tokens_; ++t)
            for (std::size_t c = 0; c < f; ++c)
                for (std::size_t i = 0; i < h; ++i)
                    for (std::size_t jj = 0; jj < tw; ++jj)
                        dx.data[((s * f + c) * h + i) * w + t * tw + jj] =
                            g.data[(s * tokens_ + t) * d + (c * h + i) * tw + jj];
    return dx;
}

Tensor Reshape::forward(const Tensor& x, bool) {
    require(x.ndim() >= 1, ErrorCode::ShapeMismatch, "reshape needs a batch dimension", "reshape input");
    in_shape_ = x.shape;
    Shape s{x.dim(0)};
    s.insert(s.end(), tail_.begin(), tail_.end());
    return x.reshaped(s);
}

Tensor Reshape::backward(const Tensor& g) { return g.reshaped(in_shape_); }

// ---------------------------------------------------------------------------
// Sequential
// ---------------------------------------------------------------------------

Tensor Sequential::forward(const Tensor& x, bool train) { return forward_until(x, layers_.size(), train); }

Tensor Sequential::forward_until(const Tensor& x, std::size_t stop, bool train) {
    Tensor h = x;
    for (std::size_t i = 0; i < stop && i < layers_.size(); ++i) h = layers_[i]->forward(h, train);
    return h;
}

Tensor Sequential::backward(const Tensor& g) {
    Tensor d = g;
    for (std::size_t i = layers_.size(); i-- > 0;) d = layers_[i]->backward(d);
    return d;
}

Tensor Sequential::backward_until(const Tensor& g, std::size_t stop) {
    Tensor d = g;
    for (std::size_t i = std::min(stop, layers_.size()); i-- > 0;) d = layers_[i]->backward(d);
    return d;
}

std::vector<Parameter*> Sequential::parameters() {
    std::vector<Parameter*> out;
    for (auto& l : layers_) {
        auto p = l->parameters();
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

std::vector<std::pair<std::string, Tensor*>> Sequential::buffers() {
    std::vector<std::pair<std::string, Tensor*>> out;
    for (auto& l : layers_) {
        auto b = l->buffers();
        out.insert(out.end(), b.begin(), b.end());
    }
    return out;
}

void Sequential::init(Rng& rng) {
    for (auto& l : layers_) l->init(rng);
}

void Sequential::zero_grad() {
    for (Parameter* p : parameters()) p->zero_grad();
}

}  // namespace abaf::nn
