#include <cmath>

#include "abaf/error.hpp"
#include "abaf/nn/attention.hpp"
#include "abaf/nn/checkpoint.hpp"
#include "abaf/nn/grad_check.hpp"
#include "abaf/nn/layers.hpp"
#include "abaf/nn/loss_optim.hpp"
#include "abaf/nn/recurrent.hpp"
#include "doctest.h"
#include "oracles/layer_suite.hpp"
#include "test_support.hpp"

using namespace abaf;
using namespace abaf::nn;

TEST_SUITE("nn") {
TEST_CASE("every layer passes finite differences at three seeds") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        for (const auto& c : suite::run_layer_checks(seed)) {
            INFO(c.layer << " seed " << seed << " worst " << c.worst);
            CHECK(c.max_rel_error < 1e-4);
        }
    }
    CHECK(suite::cross_entropy_check(5) < 1e-6);
}

TEST_CASE("conv2d analytic cases") {
    Conv2d conv("c", 1, 1);
    conv.weight().value.fill(0.0);
    conv.weight().value.data[4] = 1.0;
    Rng rng(1);
    const Tensor x = suite::random_tensor({1, 1, 5, 6}, rng);
    CHECK(conv.forward(x, false).data == x.data);

    conv.weight().value.fill(1.0);
    const Tensor y = conv.forward(x, false);
    double s = 0;
    for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) s += x.data[(2 + di) * 6 + (3 + dj)];
    CHECK(y.data[2 * 6 + 3] == doctest::Approx(s).epsilon(1e-14));
    CHECK_THROWS_AS(conv.forward(Tensor({1, 2, 4, 4}), false), Error);
}

TEST_CASE("maxpool shapes and tie rule") {
    MaxPool2d pool;
    Tensor x({1, 1, 224, 224}, 0.0);
    const Tensor once = pool.forward(x, false);
    CHECK(once.shape == Shape{1, 1, 112, 112});
    MaxPool2d pool2;
    CHECK(pool2.forward(once, false).shape == Shape{1, 1, 56, 56});

    MaxPool2d p;
    Tensor c({1, 1, 2, 4}, 3.0);
    const Tensor y = p.forward(c, true);
    CHECK(y.data == std::vector<double>{3.0, 3.0});
    const Tensor dx = p.backward(Tensor({1, 1, 1, 2}, 1.0));
    CHECK(dx.data == std::vector<double>{1, 0, 1, 0, 0, 0, 0, 0});
    CHECK_THROWS_AS(p.forward(Tensor({1, 1, 3, 4}), false), Error);
}

TEST_CASE("linear, dropout and batch norm conventions") {
    Linear fc("fc", 3, 3);
    fc.weight().value.fill(0.0);
    for (int i = 0; i < 3; ++i) fc.weight().value.data[i * 4] = 1.0;
    fc.bias().value.fill(0.0);
    const Tensor x({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(fc.forward(x, true).data == x.data);

    Dropout d0(0.0, 1);
    CHECK(d0.forward(x, true).data == x.data);
    CHECK(d0.forward(x, false).data == x.data);
    Dropout d5(0.5, 1);
    const Tensor big({1, 10000}, 1.0);
    const Tensor dropped = d5.forward(big, true);
    double kept = 0;
    for (double v : dropped.data) {
        CHECK((v == 0.0 || v == 2.0));
        kept += v;
    }
    CHECK(std::abs(kept / 10000 - 1.0) < 0.05);
    CHECK(d5.forward(big, false).data == big.data);
    Dropout a(0.3, 9), b(0.3, 9);
    CHECK(a.forward(big, true).data == b.forward(big, true).data);
    CHECK_THROWS_AS(Dropout(1.0, 1), Error);

    BatchNorm1d bn("bn", 3);
    CHECK_THROWS_AS(bn.forward(Tensor({1, 3}), true), Error);
    const Tensor y = bn.forward(x, true);
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(y.data[j] + y.data[3 + j]) < 1e-12);
    const Tensor e1 = bn.forward(x, false), e2 = bn.forward(x, false);
    CHECK(e1.data == e2.data);
}

TEST_CASE("lstm hand computation and zero case") {
    Lstm zero("z", 3, 2);
    CHECK(zero.forward(Tensor({2, 4, 3}, 0.0), false).data == std::vector<double>(16, 0.0));

    Lstm cell("s", 1, 1);
    const double wi = 0.5, wf = -0.3, wg = 0.8, wo = 1.2, b = 0.1, x = 0.7;
    cell.w_ih().value.data = {wi, wf, wg, wo};
    cell.w_hh().value.data = {0.9, 0.9, 0.9, 0.9};
    cell.bias().value.data = {b, b, b, b};
    auto sig = [](double z) { return 1 / (1 + std::exp(-z)); };
    const double i = sig(wi * x + b), g = std::tanh(wg * x + b), o = sig(wo * x + b);
    const double c = i * g;
    const double h = o * std::tanh(c);
    const Tensor out = cell.forward(Tensor({1, 1, 1}, {x}), false);
    CHECK(out.data[0] == doctest::Approx(h).epsilon(1e-14));
}

TEST_CASE("temporal attention cases") {
    TemporalAttention att("a", 3);
    Rng rng(4);
    att.init(rng);
    Tensor same({1, 4, 3});
    for (std::size_t t = 0; t < 4; ++t)
        for (std::size_t j = 0; j < 3; ++j) same.data[t * 3 + j] = static_cast<double>(j) - 0.5;
    const Tensor o = att.forward(same, false);
    for (std::size_t t = 0; t < 4; ++t) CHECK(att.alpha().data[t] == doctest::Approx(0.25).epsilon(1e-15));
    for (std::size_t j = 0; j < 3; ++j) CHECK(o.data[j] == doctest::Approx(same.data[j]).epsilon(1e-14));

    // One step scores 50 above the others.
    att.v().value.data = {1.0, 0.0, 0.0};
    att.c().value.data = {0.0};
    Tensor x({1, 3, 3}, 0.0);
    x.data[3] = 50.0;
    x.data[4] = 7.0;
    const Tensor s = att.forward(x, false);
    CHECK(att.alpha().data[0] + att.alpha().data[2] < 1e-20);
    CHECK(s.data[0] == doctest::Approx(50.0));
    CHECK(s.data[1] == doctest::Approx(7.0));

    Tensor rnd = suite::random_tensor({3, 6, 3}, rng);
    att.forward(rnd, false);
    for (std::size_t n = 0; n < 3; ++n) {
        double sum = 0;
        for (std::size_t t = 0; t < 6; ++t) {
            CHECK(att.alpha().data[n * 6 + t] >= 0.0);
            sum += att.alpha().data[n * 6 + t];
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("multi-head attention") {
    MultiHeadAttention mha("m", 4, 2);
    Rng rng(8);
    mha.init(rng);
    const Tensor x = suite::random_tensor({2, 1, 4}, rng);
    const Tensor y = mha.forward(x, false);
    // T = 1: output = Wo (Wv x).
    for (std::size_t n = 0; n < 2; ++n)
        for (std::size_t e = 0; e < 4; ++e) {
            double acc = 0;
            for (std::size_t k = 0; k < 4; ++k) {
                double v = 0;
                for (std::size_t j = 0; j < 4; ++j) v += mha.wv().value.data[k * 4 + j] * x.data[n * 4 + j];
                acc += mha.wo().value.data[e * 4 + k] * v;
            }
            CHECK(y.data[n * 4 + e] == doctest::Approx(acc).epsilon(1e-13));
        }
    const Tensor z = suite::random_tensor({2, 5, 4}, rng);
    mha.forward(z, false);
    const Tensor& w = mha.weights();
    for (std::size_t row = 0; row < w.size() / 5; ++row) {
        double sum = 0;
        for (std::size_t j = 0; j < 5; ++j) sum += w.data[row * 5 + j];
        CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
    CHECK_THROWS_AS(MultiHeadAttention("bad", 10, 4), Error);

    MultiHeadAttention full_width("p", 256, 4, MhaConvention::PerHeadFullWidth);
    CHECK(count_params(full_width.parameters()) == 1048576);
    MultiHeadAttention split("s", 256, 4, MhaConvention::Split);
    CHECK(count_params(split.parameters()) == 262144);
}

TEST_CASE("parameter counts") {
    Linear fc("fc", 291, 128);
    CHECK(count_params(fc.parameters()) == 37376);
    Sequential empty;
    CHECK(count_params(empty.parameters()) == 0);
    Sequential stack;
    stack.add<Conv2d>("c1", 3, 16);
    stack.add<Conv2d>("c2", 16, 32);
    stack.add<Linear>("fc", 32 * 56 * 56, 128);
    auto ps = stack.parameters();
    CHECK(count_params(ps) == 448 + 4640 + 12845184);
    std::reverse(ps.begin(), ps.end());
    CHECK(count_params(ps) == 448 + 4640 + 12845184);
    Linear nobias("nb", 4, 3, false);
    CHECK(count_params(nobias.parameters()) == 12);
}

TEST_CASE("loss and optimizer") {
    const auto r = softmax_cross_entropy(Tensor({3, 2}, 0.0), {0, 1, 1});
    CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK_THROWS_AS(softmax_cross_entropy(Tensor({1, 2}, 0.0), {2}), Error);
    const Tensor p = softmax_rows(Tensor({1, 3}, {1000.0, 0.0, -1000.0}));
    CHECK(p.data[0] == 1.0);

    Parameter w("w", {1});
    w.value.data[0] = 1.0;
    Adam adam({&w}, AdamConfig{0.1});
    w.grad.data[0] = 2.0 * w.value.data[0];
    adam.step();
    CHECK(w.value.data[0] == doctest::Approx(0.9).epsilon(1e-7));
    for (int i = 0; i < 500; ++i) {
        adam.zero_grad();
        w.grad.data[0] = 2.0 * w.value.data[0];
        adam.step();
    }
    CHECK(std::abs(w.value.data[0]) < 0.05);
}

TEST_CASE("checkpoint round trip and shape rejection") {
    const auto dir = test_support::scratch_dir("ckpt");
    Sequential a;
    a.add<Linear>("fc", 3, 4);
    a.add<BatchNorm1d>("bn", 4);
    Rng rng(3);
    a.init(rng);
    a.forward(suite::random_tensor({5, 3}, rng), true);
    save_checkpoint(a, dir / "a.ckpt");

    Sequential b;
    b.add<Linear>("fc", 3, 4);
    b.add<BatchNorm1d>("bn", 4);
    load_checkpoint(b, dir / "a.ckpt");
    const Tensor x = suite::random_tensor({2, 3}, rng);
    CHECK(a.forward(x, false).data == b.forward(x, false).data);

    Sequential c;
    c.add<Linear>("fc", 3, 5);
    CHECK_THROWS_AS(load_checkpoint(c, dir / "a.ckpt"), Error);

    const Snapshot snap = take_snapshot(a);
    for (Parameter* p : a.parameters()) p->value.fill(0.0);
    restore_snapshot(a, snap);
    CHECK(a.forward(x, false).data == b.forward(x, false).data);
}

TEST_CASE("token split layout") {
    TokenSplit split(2);
    Tensor x({1, 2, 2, 4});
    for (std::size_t i = 0; i < x.size(); ++i) x.data[i] = static_cast<double>(i);
    const Tensor y = split.forward(x, false);
    CHECK(y.shape == Shape{1, 2, 8});
    // token 0: columns 0..1 of channel 0 rows 0..1, then channel 1.
    CHECK(y.data[0] == 0);
    CHECK(y.data[1] == 1);
    CHECK(y.data[2] == 4);
    CHECK(y.data[4] == 8);
    CHECK(y.data[8] == 2);
    CHECK(split.backward(y).data == x.data);
    TokenSplit bad(3);
    CHECK_THROWS_AS(bad.forward(x, false), Error);
}
}
