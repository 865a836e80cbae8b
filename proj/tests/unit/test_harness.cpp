#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "abaf/error.hpp"
#include "abaf/folds.hpp"
#include "abaf/nn/checkpoint.hpp"
#include "abaf/pipeline.hpp"
#include "abaf/reports.hpp"
#include "abaf/rng.hpp"
#include "abaf/text_io.hpp"
#include "abaf/training.hpp"
#include "doctest.h"
#include "json.hpp"
#include "test_support.hpp"

using namespace abaf;

namespace {

std::vector<int> counts_per_class(const std::vector<int>& labels, const std::vector<std::size_t>& idx) {
    std::vector<int> c(2, 0);
    for (std::size_t i : idx) ++c[static_cast<std::size_t>(labels[i])];
    return c;
}

/// Small in-memory corpus: class 1 images carry a bright block and HSF
/// column 0 is shifted, everything else is noise.
FeatureSet toy_set(std::size_t per_class, std::uint64_t seed, double signal) {
    Rng rng(seed);
    const std::size_t n = 2 * per_class, side = 16, d = 12;
    FeatureSet fs;
    for (auto& img : fs.images) img = nn::Tensor({n, 1, side, side});
    for (std::size_t i = 0; i < n; ++i) {
        const int y = static_cast<int>(i % 2);
        fs.ids.push_back("s" + std::to_string(i));
        fs.labels.push_back(y);
        fs.scores.push_back(y ? 8 + static_cast<int>(i % 20) : static_cast<int>(i % 8));
        for (std::size_t k = 0; k < 3; ++k)
            for (std::size_t p = 0; p < side * side; ++p) {
                const bool block = (p / side) < 6 && (p % side) < 6;
                fs.images[k].data[i * side * side + p] = 0.5 * rng.uniform() + (block && y ? signal : 0.0);
            }
        std::vector<double> row(d);
        for (double& v : row) v = rng.normal();
        row[0] += y * 4 * signal;
        fs.hsf.push_back(row);
    }
    return fs;
}

ExperimentConfig toy_config(std::uint64_t seed) {
    ExperimentConfig c;
    c.folds = 3;
    c.hsf_top_k = 4;
    c.image.image_side = 16;
    c.image.seq_tokens = 4;
    c.image.conv1_filters = 4;
    c.image.conv2_filters = 4;
    c.image.lstm_hidden = 8;
    c.image.fc_sizes = {16, 8, 2};
    c.num.lstm_hidden = 8;
    c.num.fc_sizes = {16, 8, 2};
    c.fusion.token_dim = 16;
    c.fusion.lstm_hidden = 8;
    c.fusion.fc_sizes = {8, 2};
    c.train.max_epochs = 4;
    c.fusion_train.max_epochs = 4;
    c.train.lr = 1e-2;
    c.fusion_train.lr = 1e-2;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_SUITE("harness") {
TEST_CASE("stratified k-fold") {
    std::vector<int> ten{0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
    const FoldPlan p = stratified_kfold(ten, 5, 3);
    for (const auto& f : p.folds) CHECK(counts_per_class(ten, f) == std::vector<int>{1, 1});
    CHECK(stratified_kfold(ten, 5, 3).folds == p.folds);
    CHECK(stratified_kfold(ten, 5, 4).folds != p.folds);

    std::vector<int> cnrac(216, 0);
    cnrac.resize(371, 1);
    const FoldPlan q = stratified_kfold(cnrac, 5, 11);
    std::set<std::size_t> all;
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(counts_per_class(cnrac, q.folds[i])[1] == 31);
        const int c0 = counts_per_class(cnrac, q.folds[i])[0];
        CHECK(std::abs(c0 - 216.0 / 5) <= 1.0);
        for (std::size_t j : q.folds[i]) CHECK(all.insert(j).second);
        const auto rest = q.complement(i);
        CHECK(rest.size() + q.folds[i].size() == 371);
    }
    CHECK(all.size() == 371);
    CHECK_THROWS_AS(stratified_kfold({0, 0, 0, 1, 1}, 3, 1), Error);
    CHECK_THROWS_AS(stratified_kfold(ten, 1, 1), Error);
}

TEST_CASE("downsample balance") {
    std::vector<int> y(216, 0);
    y.resize(278, 1);
    const auto a = downsample_balance(y, 1), b = downsample_balance(y, 2);
    CHECK(counts_per_class(y, a) == std::vector<int>{62, 62});
    CHECK(counts_per_class(y, b) == std::vector<int>{62, 62});
    CHECK(a != b);
    std::vector<int> balanced{0, 1, 1, 0};
    CHECK(downsample_balance(balanced, 5) == std::vector<std::size_t>{0, 1, 2, 3});
    CHECK_THROWS_AS(downsample_balance({1, 1, 1}, 1), Error);
}

TEST_CASE("stratified holdout") {
    std::vector<int> y(50, 0);
    y.resize(100, 1);
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < 100; i += 2) pool.push_back(i);
    for (std::size_t i = 1; i < 100; i += 2) pool.push_back(i);
    std::sort(pool.begin(), pool.end());
    const TrainValSplit s = stratified_holdout(pool, y, 0.2, 9);
    CHECK(s.val.size() == 20);
    CHECK(counts_per_class(y, s.val) == std::vector<int>{10, 10});
    std::vector<std::size_t> common;
    std::set_intersection(s.train.begin(), s.train.end(), s.val.begin(), s.val.end(), std::back_inserter(common));
    CHECK(common.empty());
    CHECK(s.train.size() + s.val.size() == 100);
}

TEST_CASE("early stopping rule") {
    EarlyStopping es(1);
    CHECK(es.update(1.0));
    CHECK(!es.should_stop());
    CHECK(!es.update(2.0));
    CHECK(es.should_stop());
    CHECK(es.best_epoch() == 1);

    EarlyStopping eq(2);
    eq.update(1.0);
    CHECK(!eq.update(1.0));  // equal is not an improvement
    CHECK(!eq.update(0.5 + 0.5));
    CHECK(eq.should_stop());
}

TEST_CASE("training loop contracts") {
    NumModelConfig nc;
    nc.input_dim = 4;
    nc.lstm_hidden = 6;
    nc.fc_sizes = {8, 4, 2};
    nc.dropout_p = 0.0;
    Rng rng(5);
    Dataset train, flipped;
    train.x = nn::Tensor({40, 4});
    for (std::size_t i = 0; i < 40; ++i) {
        const int y = static_cast<int>(i % 2);
        for (std::size_t j = 0; j < 4; ++j) train.x.data[i * 4 + j] = rng.normal() + (y ? 1.5 : -1.5);
        train.y.push_back(y);
        flipped.y.push_back(1 - y);
    }
    flipped.x = train.x;

    SUBCASE("patience 1 with worsening validation loss") {
        Model m = make_num_model(nc, 1);
        TrainConfig tc;
        tc.patience = 1;
        tc.lr = 0.05;
        tc.batch_size = 8;
        const TrainResult r = train_model(m, train, flipped, tc);
        REQUIRE(r.history.size() == 2);
        CHECK(r.history[1].val_loss > r.history[0].val_loss);
        CHECK(r.best_epoch == 1);
        CHECK(evaluate_loss(m, flipped) == r.history[0].val_loss);
    }
    SUBCASE("improving loss runs to max_epochs") {
        Model m = make_num_model(nc, 1);
        TrainConfig tc;
        tc.max_epochs = 3;
        tc.lr = 0.01;
        const TrainResult r = train_model(m, train, train, tc);
        CHECK(r.history.size() == 3);
        CHECK(r.best_epoch == 3);
        CHECK(!r.stopped_early);
    }
    SUBCASE("fixed seed gives identical history and weights") {
        nc.dropout_p = 0.3;
        Model a = make_num_model(nc, 2), b = make_num_model(nc, 2);
        TrainConfig tc;
        tc.max_epochs = 5;
        tc.seed = 77;
        const TrainResult ra = train_model(a, train, flipped, tc), rb = train_model(b, train, flipped, tc);
        REQUIRE(ra.history.size() == rb.history.size());
        for (std::size_t i = 0; i < ra.history.size(); ++i) {
            CHECK(ra.history[i].train_loss == rb.history[i].train_loss);
            CHECK(ra.history[i].val_loss == rb.history[i].val_loss);
        }
        CHECK(nn::take_snapshot(a.net()).values == nn::take_snapshot(b.net()).values);
    }
    SUBCASE("empty splits are rejected") {
        Model m = make_num_model(nc, 1);
        CHECK_THROWS_AS(train_model(m, train, Dataset{nn::Tensor({0, 4}), {}}, TrainConfig{}), Error);
    }
}

TEST_CASE("threshold labels and bands") {
    CHECK(label_by_threshold({2, 3, 4}, 4) == std::vector<int>{0, 0, 1});
    CHECK(label_by_threshold({2, 3, 4}, 3) == std::vector<int>{0, 1, 1});
}

TEST_CASE("toy experiment: reports, ablation and determinism") {
    const FeatureSet fs = toy_set(12, 3, 1.0);
    const ExperimentConfig cfg = toy_config(21);
    ExperimentRequest req;
    req.single = {true, true, true, true};
    req.fusion = true;
    req.ablation = true;
    const ExperimentOutputs out = run_experiments(fs, cfg, req);
    REQUIRE(out.fusion.has_value());
    CHECK(out.fusion->folds.size() == 3);
    CHECK(out.ablation.size() == 4);
    for (const auto& r : out.ablation) {
        CHECK(r.folds.size() == 3);
        for (const auto& f : r.folds) {
            REQUIRE(f.weights.size() == 3);
            for (double w : f.weights) CHECK(w == 1.0 / 3.0);
        }
    }
    CHECK(out.ablation[3].name == "ablation_without_hsf");
    std::set<std::string> tested;
    for (const auto& f : out.fusion->folds) {
        double s = 0;
        for (double w : f.weights) s += w;
        CHECK(std::abs(s - 1.0) < 1e-12);
        for (const auto& id : f.ids) CHECK(tested.insert(id).second);
    }
    CHECK(tested.size() == fs.size());
    for (const auto& r : out.single) CHECK(r->folds.size() == 3);

    // aggregation is recomputable from the fold rows
    const MetricAggregate agg = aggregate(*out.fusion);
    double m = 0;
    for (const auto& f : out.fusion->folds) m += f.metrics.acc;
    CHECK(std::abs(*agg.mean[0] - m / 3) < 1e-12);

    const ExperimentReport again = run_fusion_experiment(fs, cfg);
    CHECK(report_csv(again) == report_csv(*out.fusion));

    const auto dir = test_support::scratch_dir("reports");
    write_report_bundle(*out.fusion, dir, "fusion", "2026-01-01T00:00:00Z");
    const std::string csv = read_text_file(dir / "fusion.csv");
    std::size_t lines = std::count(csv.begin(), csv.end(), '\n');
    CHECK(lines == 1 + 3 + 2);
    CHECK(csv.rfind("row,repeat,fold,n,acc,precision,recall,f1,macro_f1,weighted_f1,roc_auc,pr_auc,tn,fp,fn,tp\n", 0) == 0);
    const auto j = nlohmann::json::parse(read_text_file(dir / "fusion.json"));
    CHECK(j["started_at"] == "2026-01-01T00:00:00Z");
    CHECK(j["folds"].size() == 3);
    CHECK(j["seed"] == 21);
    for (const char* f : {"fusion_roc.svg", "fusion_pr.svg", "fusion_confusion.svg"}) {
        CHECK(std::filesystem::exists(dir / f));
        CHECK(read_text_file(dir / f).rfind("<svg", 0) == 0);
    }
}

TEST_CASE("fine-tune switch trains sub-models through the fusion head") {
    const FeatureSet fs = toy_set(9, 4, 1.0);
    ExperimentConfig cfg = toy_config(5);
    cfg.fine_tune = true;
    cfg.train.max_epochs = 2;
    cfg.fusion_train.max_epochs = 2;
    const ExperimentReport r = run_fusion_experiment(fs, cfg);
    CHECK(r.folds.size() == 3);
    CHECK(std::isfinite(mean_metric(r, "acc")));
}

TEST_CASE("subtype pairs and threshold sweep") {
    const FeatureSet fs = toy_set(15, 6, 1.0);
    ExperimentConfig cfg = toy_config(8);
    cfg.train.max_epochs = 2;
    cfg.fusion_train.max_epochs = 2;
    const BandTable bands = hamd17_bands();
    const ExperimentReport pair = run_subtype_pair(fs, bands, 0, 1, 2, cfg);
    CHECK(pair.name == "subtype_NC_vs_Mild");
    CHECK(pair.folds.size() == 2 * 3);
    CHECK(pair.folds.back().repeat == 1);
    CHECK_THROWS_AS(run_subtype_pair(fs, bands, 0, 3, 1, cfg), Error);  // no Severe scores

    const auto sweep = run_threshold_sweep(fs, {3, 4, 5}, cfg);
    REQUIRE(sweep.size() == 3);
    CHECK(sweep[1].name == "threshold_4");
    for (const auto& r : sweep) CHECK(report_csv(r).find("pr_auc") != std::string::npos);
}

TEST_CASE("pipeline config round trip and profiles") {
    const PipelineConfig desk = PipelineConfig::desk();
    const PipelineConfig back = PipelineConfig::from_kv(desk.to_kv());
    CHECK(back.to_kv().serialize() == desk.to_kv().serialize());
    const PipelineConfig paper = PipelineConfig::paper();
    CHECK(paper.extraction.image_side == 224);
    CHECK(paper.experiment.image.in_channels == 3);
    CHECK(paper.experiment.num.lstm_hidden == 291);
    CHECK(paper.experiment.train.max_epochs == 100);
    CHECK(paper.experiment.train.patience == 10);
    CHECK(desk.experiment.image.image_side == 64);
    paper.validate();
    desk.validate();

    KeyValueConfig kv = KeyValueConfig::parse("profile = paper\ntrain.lr = 0.01\nseed = 9\n");
    const PipelineConfig p = PipelineConfig::from_kv(kv);
    CHECK(p.experiment.train.lr == 0.01);
    CHECK(p.experiment.seed == 9);
    CHECK(p.extraction.image_side == 224);
    CHECK_THROWS_AS(PipelineConfig::from_kv(KeyValueConfig::parse("train.nope = 1\n")), Error);

    PipelineConfig a = desk, b = desk;
    b.experiment.train.lr = 0.5;
    CHECK(a.extraction_hash() == b.extraction_hash());
    b.extraction.n_mfcc = 12;
    CHECK(a.extraction_hash() != b.extraction_hash());
}

TEST_CASE("extract stage writes the cache, index and hsf table") {
    const auto dir = test_support::scratch_dir("extract");
    SynthSpec spec;
    spec.n_per_class = 2;
    spec.duration_s = 1.0;
    const CorpusManifest m = generate_synthetic_corpus(spec, 3, dir / "corpus");
    PipelineConfig cfg = PipelineConfig::desk();
    const ExtractSummary s1 = extract_corpus(m, cfg, dir / "cache", 2);
    CHECK(s1.extracted == 4);
    CHECK(s1.skipped.empty());
    const std::string hsf = read_text_file(dir / "cache" / "hsf.csv");
    const auto header = parse_csv_row(hsf.substr(0, hsf.find('\n')));
    CHECK(header.size() == 6553);
    CHECK(std::count(hsf.begin(), hsf.end(), '\n') == 5);

    const ExtractSummary s2 = extract_corpus(m, cfg, dir / "cache", 1);
    CHECK(s2.reused == 4);
    CHECK(read_text_file(dir / "cache" / "hsf.csv") == hsf);

    const FeatureSet fs = load_feature_set(dir / "cache", cfg);
    CHECK(fs.size() == 4);
    CHECK(fs.images[2].shape == nn::Shape{4, 1, 64, 64});
    CHECK(fs.hsf.front().size() == 6552);
    const HsfTable t = load_hsf_csv(dir / "cache" / "hsf.csv");
    CHECK(t.rows.size() == 4);
    CHECK(t.rows[1] == fs.hsf[1]);

    cfg.extraction.n_mfcc = 12;
    CHECK_THROWS_AS(load_feature_set(dir / "cache", cfg), Error);
    CHECK_THROWS_AS(load_feature_set(dir / "nowhere", cfg), Error);
}
}
