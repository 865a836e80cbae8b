#include <chrono>
#include <cmath>

#include "abaf/error.hpp"
#include "abaf/models.hpp"
#include "abaf/nn/attention.hpp"
#include "abaf/nn/loss_optim.hpp"
#include "doctest.h"
#include "oracles/layer_suite.hpp"

using namespace abaf;
using namespace abaf::nn;

namespace {

void zero_weights(Model& m) {
    for (Parameter* p : m.parameters()) p->value.fill(0.0);
}

Metrics metric_vector(double acc, double p, double r, double macro, double weighted) {
    Metrics m;
    m.acc = acc;
    m.precision = p;
    m.recall = r;
    m.macro_f1 = macro;
    m.weighted_f1 = weighted;
    return m;
}

}  // namespace

TEST_SUITE("models") {
TEST_CASE("paper-profile parameter counts") {
    NumModelConfig num;
    num.lstm_hidden = 291;
    Model m = make_num_model(num, 1);
    CHECK(count_params(m.first_fc().parameters()) == 37376);
    CHECK(cnn_stack_param_budget(3, 224) == 12850400);
    CHECK(cnn_stack_param_budget(3, 224) == 448 + 4640 + 12845312);
}

TEST_CASE("zero weights give zero logits") {
    ImageModelConfig icfg;
    Model img = make_image_model(icfg, 3);
    zero_weights(img);
    const Tensor logits = img.forward(Tensor({2, 1, 64, 64}, 0.0), false);
    REQUIRE(logits.shape == Shape{2, 2});
    for (double v : logits.data) CHECK(v == 0.0);
    const Tensor probs = softmax_rows(logits);
    CHECK(probs.data[0] == doctest::Approx(0.5));

    Model num = make_num_model(NumModelConfig{}, 3);
    zero_weights(num);
    for (double v : num.forward(Tensor({3, 291}, 0.0), false).data) CHECK(v == 0.0);

    Model head = make_fusion_head(FusionConfig{}, 4, 3);
    zero_weights(head);
    for (double v : head.forward(Tensor({2, 4, 128}, 0.0), false).data) CHECK(v == 0.0);
}

TEST_CASE("single-step attention passes the hidden state through") {
    Model num = make_num_model(NumModelConfig{}, 5);
    Rng rng(2);
    num.forward(suite::random_tensor({3, 291}, rng), false);
    auto& att = dynamic_cast<TemporalAttention&>(num.net().at(2));
    for (double a : att.alpha().data) CHECK(a == 1.0);
}

TEST_CASE("desk image model forward is finite and fast") {
    Model m = make_image_model(ImageModelConfig{}, 11);
    Rng rng(4);
    const Tensor x = suite::random_tensor({4, 1, 64, 64}, rng);
    const auto t0 = std::chrono::steady_clock::now();
    const Tensor logits = m.forward(x, false);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(logits.shape == Shape{4, 2});
    CHECK(logits.all_finite());
    CHECK(secs < 1.0);
    const Tensor e = m.embed(x);
    CHECK(e.shape == Shape{4, 128});
    CHECK(m.embedding_dim() == 128);
}

TEST_CASE("shape mismatches are rejected") {
    Model m = make_image_model(ImageModelConfig{}, 1);
    CHECK_THROWS_AS(m.forward(Tensor({1, 1, 32, 32}, 0.0), false), Error);
    Model num = make_num_model(NumModelConfig{}, 1);
    CHECK_THROWS_AS(num.forward(Tensor({1, 290}, 0.0), false), Error);
    ImageModelConfig bad;
    bad.image_side = 62;
    CHECK_THROWS_AS(make_image_model(bad, 1), Error);
    bad = ImageModelConfig{};
    bad.fc_sizes = {128, 64, 3};
    CHECK_THROWS_AS(make_image_model(bad, 1), Error);
}

TEST_CASE("eval mode is deterministic and seeds reproduce models") {
    Model a = make_image_model(ImageModelConfig{}, 9);
    Model b = make_image_model(ImageModelConfig{}, 9);
    Rng rng(8);
    const Tensor x = suite::random_tensor({2, 1, 64, 64}, rng);
    CHECK(a.forward(x, false).data == a.forward(x, false).data);
    CHECK(a.forward(x, true).data == b.forward(x, true).data);
}

TEST_CASE("fusion gradient reaches every token") {
    Model head = make_fusion_head(FusionConfig{}, 4, 21);
    Rng rng(6);
    const Tensor x = suite::random_tensor({2, 4, 128}, rng);
    const Tensor logits = head.forward(x, false);
    const Tensor gx = head.backward(suite::random_tensor(logits.shape, rng));
    for (std::size_t n = 0; n < 2; ++n)
        for (std::size_t t = 0; t < 4; ++t) {
            double norm = 0;
            for (std::size_t d = 0; d < 128; ++d) norm += std::abs(gx.data[(n * 4 + t) * 128 + d]);
            CHECK(norm > 0.0);
        }
}

TEST_CASE("wam score examples") {
    const WamWeights w = WamWeights::overall();
    CHECK(wam_score(metric_vector(1, 1, 1, 1, 1), w) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(wam_score(metric_vector(0, 0, 0, 0, 0), w) == 0.0);
    CHECK(std::abs(wam_score(metric_vector(0.8, 0.6, 0.7, 0.65, 0.66), w) - 0.661) < 1e-12);
    CHECK_THROWS_AS(wam_score(metric_vector(1, 1, 1, 1, 1), WamWeights{-0.1, 0.1, 0.1, 0.1, 0.1}), Error);
    CHECK_THROWS_AS(WamWeights({0, 0, 0, 0, 0}).validate(), Error);
    CHECK(WamWeights::preset("recall").beta == 0.3);
    CHECK(WamWeights::preset("robustness").epsilon == 0.3);
    CHECK_THROWS_AS(WamWeights::preset("nope"), Error);
}

TEST_CASE("wam score is monotone in each metric") {
    const WamWeights w = WamWeights::overall();
    const Metrics base = metric_vector(0.5, 0.5, 0.5, 0.5, 0.5);
    const double s0 = wam_score(base, w);
    for (int k = 0; k < 5; ++k) {
        Metrics up = base;
        double* f[] = {&up.acc, &up.precision, &up.recall, &up.macro_f1, &up.weighted_f1};
        *f[k] = 0.6;
        CHECK(wam_score(up, w) > s0);
    }
}

TEST_CASE("wam weights examples") {
    auto sum = [](const std::vector<double>& v) { double s = 0; for (double x : v) s += x; return s; };
    const auto eq = wam_weights({0.7, 0.7, 0.7, 0.7});
    for (double v : eq) CHECK(v == 0.25);
    const auto three = wam_weights({0.661, 0.661, 0.661, 0.0});
    for (int i = 0; i < 3; ++i) CHECK(std::abs(three[i] - 1.0 / 3.0) < 1e-15);
    CHECK(three[3] == 0.0);
    const std::vector<double> s{0.3, 0.55, 0.61, 0.12};
    const auto w1 = wam_weights(s);
    std::vector<double> s10;
    for (double v : s) s10.push_back(v * 10);
    const auto w10 = wam_weights(s10);
    CHECK(std::abs(sum(w1) - 1.0) < 1e-12);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(w1[i] - w10[i]) < 1e-15);
    const auto z = wam_weights({0, 0, 0, 0});
    for (double v : z) CHECK(v == 0.25);
    CHECK_THROWS_AS(wam_weights({0.5, -0.1}), Error);
}

TEST_CASE("late fusion examples") {
    Rng rng(3);
    std::vector<Tensor> e;
    for (int i = 0; i < 4; ++i) e.push_back(suite::random_tensor({2, 128}, rng));
    const Tensor f = late_fuse(e, {0, 1, 0, 0});
    REQUIRE(f.shape == Shape{2, 4, 128});
    for (std::size_t n = 0; n < 2; ++n)
        for (std::size_t t = 0; t < 4; ++t)
            for (std::size_t d = 0; d < 128; ++d) {
                const double v = f.data[(n * 4 + t) * 128 + d];
                CHECK(v == (t == 1 ? e[1].data[n * 128 + d] : 0.0));
            }
    const Tensor u = late_fuse(e, {0.25, 0.25, 0.25, 0.25});
    CHECK(u.data[(1 * 4 + 2) * 128 + 5] == e[2].data[128 + 5] / 4);
    CHECK(u.size() / 2 == 512);

    std::vector<Tensor> doubled = e;
    for (double& v : doubled[3].data) v *= 2;
    const Tensor g = late_fuse(doubled, {0.1, 0.2, 0.3, 0.4});
    const Tensor h = late_fuse(e, {0.1, 0.2, 0.3, 0.4});
    for (std::size_t n = 0; n < 2; ++n)
        for (std::size_t t = 0; t < 4; ++t)
            for (std::size_t d = 0; d < 128; ++d) {
                const std::size_t i = (n * 4 + t) * 128 + d;
                CHECK(g.data[i] == (t == 3 ? 2 * h.data[i] : h.data[i]));
            }

    std::vector<Tensor> perm{e[2], e[0], e[3], e[1]};
    const Tensor a = late_fuse(e, {0.25, 0.25, 0.25, 0.25});
    const Tensor b = late_fuse(perm, {0.25, 0.25, 0.25, 0.25});
    const std::size_t src[] = {2, 0, 3, 1};
    for (std::size_t t = 0; t < 4; ++t)
        for (std::size_t d = 0; d < 128; ++d) CHECK(b.data[t * 128 + d] == a.data[src[t] * 128 + d]);

    CHECK_THROWS_AS(late_fuse(e, {0.5, 0.5}), Error);
    const Tensor three = late_fuse({e[0], e[1], e[2]}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
    CHECK(three.size() / 2 == 384);
}
}
