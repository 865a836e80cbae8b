#include "abaf/nn/recurrent.hpp"

#include <cmath>

#include "abaf/error.hpp"

namespace abaf::nn {

namespace {

using StridedMap = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;
using MutStridedMap = Eigen::Map<RowMatrix, 0, Eigen::OuterStride<>>;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

Lstm::Lstm(std::string name, std::size_t input, std::size_t hidden)
    : d_(input),
      h_(hidden),
      w_ih_(name + ".w_ih", {4 * hidden, input}),
      w_hh_(name + ".w_hh", {4 * hidden, hidden}),
      bias_(name + ".bias", {4 * hidden}) {
    require(input > 0 && hidden > 0, ErrorCode::InvalidArgument, "lstm needs positive sizes", name);
}

void Lstm::init(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(h_));
    for (Parameter* p : parameters())
        for (double& v : p->value.data) v = rng.uniform(-bound, bound);
}

Tensor Lstm::forward(const Tensor& x, bool) {
    require_shape(x, {0, 0, d_}, "lstm input");
    const std::size_t n = x.dim(0), steps = x.dim(1), h = h_;
    require(steps >= 1, ErrorCode::ShapeMismatch, "lstm needs T >= 1", "lstm input");
    input_ = x;
    const auto wih = as_matrix(w_ih_.value.ptr(), 4 * h, d_);
    const auto whh = as_matrix(w_hh_.value.ptr(), 4 * h, h);
    const Eigen::Map<const Eigen::RowVectorXd> b(bias_.value.ptr(), static_cast<Eigen::Index>(4 * h));
    const auto ni = static_cast<Eigen::Index>(n), hi = static_cast<Eigen::Index>(h);

    gates_.assign(steps, RowMatrix());
    cells_.assign(steps, RowMatrix());
    hidden_.assign(steps, RowMatrix());
    Tensor out({n, steps, h});
    RowMatrix h_prev = RowMatrix::Zero(ni, hi), c_prev = RowMatrix::Zero(ni, hi);
    for (std::size_t t = 0; t < steps; ++t) {
        const StridedMap xt(x.ptr() + t * d_, ni, static_cast<Eigen::Index>(d_),
                            Eigen::OuterStride<>(static_cast<Eigen::Index>(steps * d_)));
        RowMatrix z = xt * wih.transpose();
        z.noalias() += h_prev * whh.transpose();
        z.rowwise() += b;
        RowMatrix c(ni, hi), hn(ni, hi);
        for (Eigen::Index r = 0; r < ni; ++r)
            for (Eigen::Index k = 0; k < hi; ++k) {
                const double ig = sigmoid(z(r, k));
                const double fg = sigmoid(z(r, hi + k));
                const double gg = std::tanh(z(r, 2 * hi + k));
                const double og = sigmoid(z(r, 3 * hi + k));
                z(r, k) = ig;
                z(r, hi + k) = fg;
                z(r, 2 * hi + k) = gg;
                z(r, 3 * hi + k) = og;
                c(r, k) = fg * c_prev(r, k) + ig * gg;
                hn(r, k) = og * std::tanh(c(r, k));
            }
        MutStridedMap(out.ptr() + t * h, ni, hi, Eigen::OuterStride<>(static_cast<Eigen::Index>(steps * h))) = hn;
        gates_[t] = std::move(z);
        cells_[t] = c;
        hidden_[t] = hn;
        h_prev = std::move(hn);
        c_prev = std::move(c);
    }
    return out;
}

Tensor Lstm::backward(const Tensor& g) {
    const std::size_t n = input_.dim(0), steps = input_.dim(1), h = h_;
    require_shape(g, {n, steps, h}, "lstm grad");
    const auto ni = static_cast<Eigen::Index>(n), hi = static_cast<Eigen::Index>(h);
    const auto wih = as_matrix(w_ih_.value.ptr(), 4 * h, d_);
    const auto whh = as_matrix(w_hh_.value.ptr(), 4 * h, h);
    auto dwih = as_matrix(w_ih_.grad.ptr(), 4 * h, d_);
    auto dwhh = as_matrix(w_hh_.grad.ptr(), 4 * h, h);
    Eigen::Map<Eigen::RowVectorXd> db(bias_.grad.ptr(), static_cast<Eigen::Index>(4 * h));

    Tensor dx(input_.shape);
    RowMatrix dh_next = RowMatrix::Zero(ni, hi), dc_next = RowMatrix::Zero(ni, hi);
    RowMatrix dz(ni, 4 * hi);
    for (std::size_t t = steps; t-- > 0;) {
        const RowMatrix& z = gates_[t];
        const StridedMap gt(g.ptr() + t * h, ni, hi, Eigen::OuterStride<>(static_cast<Eigen::Index>(steps * h)));
        for (Eigen::Index r = 0; r < ni; ++r)
            for (Eigen::Index k = 0; k < hi; ++k) {
                const double ig = z(r, k), fg = z(r, hi + k), gg = z(r, 2 * hi + k), og = z(r, 3 * hi + k);
                const double tc = std::tanh(cells_[t](r, k));
                const double c_prev = t > 0 ? cells_[t - 1](r, k) : 0.0;
                const double dh = gt(r, k) + dh_next(r, k);
                const double dc = dh * og * (1.0 - tc * tc) + dc_next(r, k);
                dz(r, k) = dc * gg * ig * (1.0 - ig);
                dz(r, hi + k) = dc * c_prev * fg * (1.0 - fg);
                dz(r, 2 * hi + k) = dc * ig * (1.0 - gg * gg);
                dz(r, 3 * hi + k) = dh * tc * og * (1.0 - og);
                dc_next(r, k) = dc * fg;
            }
        const StridedMap xt(input_.ptr() + t * d_, ni, static_cast<Eigen::Index>(d_),
                            Eigen::OuterStride<>(static_cast<Eigen::Index>(steps * d_)));
        dwih.noalias() += dz.transpose() * xt;
        if (t > 0) dwhh.noalias() += dz.transpose() * hidden_[t - 1];
        db += dz.colwise().sum();
        MutStridedMap(dx.ptr() + t * d_, ni, static_cast<Eigen::Index>(d_),
                      Eigen::OuterStride<>(static_cast<Eigen::Index>(steps * d_))) = dz * wih;
        dh_next.noalias() = dz * whh;
    }
    return dx;
}

}  // namespace abaf::nn
