#include "abaf/nn/attention.hpp"

#include <algorithm>
#include <cmath>

#include "abaf/error.hpp"

namespace abaf::nn {

// ---------------------------------------------------------------------------
// TemporalAttention
// ---------------------------------------------------------------------------

TemporalAttention::TemporalAttention(std::string name, std::size_t dim)
    : d_(dim), v_(name + ".v", {dim}), c_(name + ".c", {1}) {
    require(dim > 0, ErrorCode::InvalidArgument, "attention needs a positive width", name);
}

void TemporalAttention::init(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(d_));
    for (double& x : v_.value.data) x = rng.uniform(-bound, bound);
    c_.value.fill(0.0);
}

Tensor TemporalAttention::forward(const Tensor& x, bool) {
    require_shape(x, {0, 0, d_}, "attention input");
    const std::size_t n = x.dim(0), steps = x.dim(1);
    require(steps >= 1, ErrorCode::ShapeMismatch, "attention needs T >= 1", "attention input");
    input_ = x;
    alpha_ = Tensor({n, steps});
    Tensor out({n, d_});
    for (std::size_t s = 0; s < n; ++s) {
        double* a = alpha_.ptr() + s * steps;
        double mx = -INFINITY;
        for (std::size_t t = 0; t < steps; ++t) {
            const double* ht = x.ptr() + (s * steps + t) * d_;
            double score = c_.value.data[0];
            for (std::size_t j = 0; j < d_; ++j) score += v_.value.data[j] * ht[j];
            a[t] = score;
            mx = std::max(mx, score);
        }
        double z = 0.0;
        for (std::size_t t = 0; t < steps; ++t) z += (a[t] = std::exp(a[t] - mx));
        for (std::size_t t = 0; t < steps; ++t) a[t] /= z;
        double* o = out.ptr() + s * d_;
        for (std::size_t t = 0; t < steps; ++t) {
            const double* ht = x.ptr() + (s * steps + t) * d_;
            for (std::size_t j = 0; j < d_; ++j) o[j] += a[t] * ht[j];
        }
    }
    return out;
}

Tensor TemporalAttention::backward(const Tensor& g) {
    const std::size_t n = input_.dim(0), steps = input_.dim(1);
    require_shape(g, {n, d_}, "attention grad");
    Tensor dx(input_.shape);
    std::vector<double> da(steps), ds(steps);
    for (std::size_t s = 0; s < n; ++s) {
        const double* a = alpha_.ptr() + s * steps;
        const double* gs = g.ptr() + s * d_;
        double mean_da = 0.0;
        for (std::size_t t = 0; t < steps; ++t) {
            const double* ht = input_.ptr() + (s * steps + t) * d_;
            double acc = 0.0;
            for (std::size_t j = 0; j < d_; ++j) acc += gs[j] * ht[j];
            da[t] = acc;
            mean_da += a[t] * acc;
        }
        for (std::size_t t = 0; t < steps; ++t) {
            ds[t] = a[t] * (da[t] - mean_da);
            const double* ht = input_.ptr() + (s * steps + t) * d_;
            double* dht = dx.ptr() + (s * steps + t) * d_;
            for (std::size_t j = 0; j < d_; ++j) {
                dht[j] = a[t] * gs[j] + ds[t] * v_.value.data[j];
                v_.grad.data[j] += ds[t] * ht[j];
            }
            c_.grad.data[0] += ds[t];
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// MultiHeadAttention
// ---------------------------------------------------------------------------

MultiHeadAttention::MultiHeadAttention(std::string name, std::size_t embed, std::size_t heads,
                                       MhaConvention convention)
    : e_(embed),
      heads_(heads),
      dh_(convention == MhaConvention::Split ? (heads ? embed / heads : 0) : embed),
      wq_(name + ".wq", {heads * dh_, embed}),
      wk_(name + ".wk", {heads * dh_, embed}),
      wv_(name + ".wv", {heads * dh_, embed}),
      wo_(name + ".wo", {embed, heads * dh_}) {
    require(embed > 0 && heads > 0, ErrorCode::InvalidArgument, "attention needs positive sizes", name);
    require(convention != MhaConvention::Split || embed % heads == 0, ErrorCode::InvalidArgument,
            "embed dimension not divisible by the head count", name);
}

void MultiHeadAttention::init(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(e_));
    for (Parameter* p : parameters())
        for (double& v : p->value.data) v = rng.uniform(-bound, bound);
}

Tensor MultiHeadAttention::forward(const Tensor& x, bool) {
    require_shape(x, {0, 0, e_}, "mha input");
    input_ = x;
    const std::size_t n = x.dim(0), steps = x.dim(1), w = heads_ * dh_;
    const std::size_t rows = n * steps;
    q_ = Tensor({n, steps, w});
    k_ = Tensor({n, steps, w});
    v_ = Tensor({n, steps, w});
    const auto xm = as_matrix(x.ptr(), rows, e_);
    as_matrix(q_.ptr(), rows, w).noalias() = xm * as_matrix(wq_.value.ptr(), w, e_).transpose();
    as_matrix(k_.ptr(), rows, w).noalias() = xm * as_matrix(wk_.value.ptr(), w, e_).transpose();
    as_matrix(v_.ptr(), rows, w).noalias() = xm * as_matrix(wv_.value.ptr(), w, e_).transpose();

    attn_ = Tensor({n, heads_, steps, steps});
    concat_ = Tensor({n, steps, w});
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh_));
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t hd = 0; hd < heads_; ++hd) {
            double* a = attn_.ptr() + (s * heads_ + hd) * steps * steps;
            for (std::size_t i = 0; i < steps; ++i) {
                const double* qi = q_.ptr() + (s * steps + i) * w + hd * dh_;
                double mx = -INFINITY;
                for (std::size_t j = 0; j < steps; ++j) {
                    const double* kj = k_.ptr() + (s * steps + j) * w + hd * dh_;
                    double dot = 0.0;
                    for (std::size_t d = 0; d < dh_; ++d) dot += qi[d] * kj[d];
                    a[i * steps + j] = dot * scale;
                    mx = std::max(mx, dot * scale);
                }
                double z = 0.0;
                for (std::size_t j = 0; j < steps; ++j) z += (a[i * steps + j] = std::exp(a[i * steps + j] - mx));
                for (std::size_t j = 0; j < steps; ++j) a[i * steps + j] /= z;
                double* oi = concat_.ptr() + (s * steps + i) * w + hd * dh_;
                for (std::size_t j = 0; j < steps; ++j) {
                    const double* vj = v_.ptr() + (s * steps + j) * w + hd * dh_;
                    for (std::size_t d = 0; d < dh_; ++d) oi[d] += a[i * steps + j] * vj[d];
                }
            }
        }
    Tensor out({n, steps, e_});
    as_matrix(out.ptr(), rows, e_).noalias() =
        as_matrix(concat_.ptr(), rows, w) * as_matrix(wo_.value.ptr(), e_, w).transpose();
    return out;
}

Tensor MultiHeadAttention::backward(const Tensor& g) {
    const std::size_t n = input_.dim(0), steps = input_.dim(1), w = heads_ * dh_;
    const std::size_t rows = n * steps;
    require_shape(g, {n, steps, e_}, "mha grad");
    const auto gm = as_matrix(g.ptr(), rows, e_);
    as_matrix(wo_.grad.ptr(), e_, w).noalias() += gm.transpose() * as_matrix(concat_.ptr(), rows, w);
    Tensor dconcat({n, steps, w});
    as_matrix(dconcat.ptr(), rows, w).noalias() = gm * as_matrix(wo_.value.ptr(), e_, w);

    Tensor dq({n, steps, w}), dk({n, steps, w}), dv({n, steps, w});
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh_));
    std::vector<double> da(steps);
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t hd = 0; hd < heads_; ++hd) {
            const double* a = attn_.ptr() + (s * heads_ + hd) * steps * steps;
            for (std::size_t i = 0; i < steps; ++i) {
                const double* doi = dconcat.ptr() + (s * steps + i) * w + hd * dh_;
                double mean_da = 0.0;
                for (std::size_t j = 0; j < steps; ++j) {
                    const double* vj = v_.ptr() + (s * steps + j) * w + hd * dh_;
                    double* dvj = dv.ptr() + (s * steps + j) * w + hd * dh_;
                    double acc = 0.0;
                    for (std::size_t d = 0; d < dh_; ++d) {
                        acc += doi[d] * vj[d];
                        dvj[d] += a[i * steps + j] * doi[d];
                    }
                    da[j] = acc;
                    mean_da += a[i * steps + j] * acc;
                }
                const double* qi = q_.ptr() + (s * steps + i) * w + hd * dh_;
                double* dqi = dq.ptr() + (s * steps + i) * w + hd * dh_;
                for (std::size_t j = 0; j < steps; ++j) {
                    const double dsc = a[i * steps + j] * (da[j] - mean_da) * scale;
                    const double* kj = k_.ptr() + (s * steps + j) * w + hd * dh_;
                    double* dkj = dk.ptr() + (s * steps + j) * w + hd * dh_;
                    for (std::size_t d = 0; d < dh_; ++d) {
                        dqi[d] += dsc * kj[d];
                        dkj[d] += dsc * qi[d];
                    }
                }
            }
        }

    const auto xm = as_matrix(input_.ptr(), rows, e_);
    as_matrix(wq_.grad.ptr(), w, e_).noalias() += as_matrix(dq.ptr(), rows, w).transpose() * xm;
    as_matrix(wk_.grad.ptr(), w, e_).noalias() += as_matrix(dk.ptr(), rows, w).transpose() * xm;
    as_matrix(wv_.grad.ptr(), w, e_).noalias() += as_matrix(dv.ptr(), rows, w).transpose() * xm;
    Tensor dx(input_.shape);
    auto dxm = as_matrix(dx.ptr(), rows, e_);
    dxm.noalias() = as_matrix(dq.ptr(), rows, w) * as_matrix(wq_.value.ptr(), w, e_);
    dxm.noalias() += as_matrix(dk.ptr(), rows, w) * as_matrix(wk_.value.ptr(), w, e_);
    dxm.noalias() += as_matrix(dv.ptr(), rows, w) * as_matrix(wv_.value.ptr(), w, e_);
    return dx;
}

}  // namespace abaf::nn
