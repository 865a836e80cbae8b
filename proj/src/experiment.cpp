#include "abaf/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "abaf/error.hpp"
#include "abaf/folds.hpp"
#include "abaf/log.hpp"
#include "abaf/nn/checkpoint.hpp"
#include "abaf/nn/loss_optim.hpp"
#include "abaf/rng.hpp"

namespace abaf {

std::string to_string(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::Envelope: return "envelope";
        case FeatureKind::Spectrogram: return "spectrogram";
        case FeatureKind::Mel: return "mel";
        case FeatureKind::Hsf: return "hsf";
    }
    return "?";
}

FeatureKind parse_feature_kind(const std::string& s) {
    for (FeatureKind k : kAllFeatures)
        if (to_string(k) == s) return k;
    fail(ErrorCode::InvalidArgument, "unknown feature '" + s + "' (envelope, spectrogram, mel, hsf)", "feature");
}

FeatureSet FeatureSet::select(const std::vector<std::size_t>& idx) const {
    FeatureSet out;
    out.scale_kind = scale_kind;
    for (std::size_t i : idx) {
        require(i < size(), ErrorCode::OutOfRange, "subject index out of range", "idx");
        out.ids.push_back(ids[i]);
        out.labels.push_back(labels[i]);
        out.scores.push_back(scores[i]);
        out.hsf.push_back(hsf[i]);
    }
    for (std::size_t k = 0; k < 3; ++k) out.images[k] = gather_rows(images[k], idx);
    return out;
}

void FeatureSet::validate() const {
    const std::size_t n = ids.size();
    require(n > 0, ErrorCode::EmptyInput, "feature set is empty", "features");
    require(labels.size() == n && scores.size() == n && hsf.size() == n, ErrorCode::ShapeMismatch,
            "feature set columns differ in length", "features");
    for (int y : labels) require(y == 0 || y == 1, ErrorCode::InvalidValue, "labels must be binary", "label");
    for (const auto& img : images)
        require(img.ndim() == 4 && img.shape[0] == n, ErrorCode::ShapeMismatch, "image tensor must be N x C x H x W",
                "images");
    for (const auto& row : hsf)
        require(row.size() == hsf.front().size(), ErrorCode::ShapeMismatch, "ragged HSF rows", "hsf");
}

FeatureSet make_feature_set(const std::vector<SubjectRecord>& records, const std::vector<FeatureBundle>& bundles) {
    require(records.size() == bundles.size(), ErrorCode::ShapeMismatch, "one bundle per record required",
            "bundles");
    require(!records.empty(), ErrorCode::EmptyInput, "no subjects", "records");
    FeatureSet fs;
    fs.scale_kind = records.front().scale_kind;
    const std::size_t n = records.size();
    for (std::size_t k = 0; k < 3; ++k) {
        auto pick = [&](const FeatureBundle& b) -> const FeatureImage& {
            return k == 0 ? b.envelope_img : k == 1 ? b.spectro_img : b.mel_img;
        };
        const FeatureImage& first = pick(bundles.front());
        const std::size_t per = first.channels * first.height * first.width;
        fs.images[k] = nn::Tensor({n, first.channels, first.height, first.width});
        for (std::size_t i = 0; i < n; ++i) {
            const FeatureImage& img = pick(bundles[i]);
            require(img.pixels.size() == per && img.height == first.height && img.width == first.width,
                    ErrorCode::ShapeMismatch, "image dimensions differ across subjects", "images");
            std::copy(img.pixels.begin(), img.pixels.end(), fs.images[k].data.begin() + static_cast<std::ptrdiff_t>(i * per));
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        fs.ids.push_back(records[i].subject_id);
        fs.labels.push_back(records[i].label);
        fs.scores.push_back(records[i].scale_score);
        fs.hsf.push_back(bundles[i].hsf.values);
    }
    return fs;
}

void ExperimentConfig::validate() const {
    require(folds >= 2, ErrorCode::InvalidArgument, "folds must be >= 2", "experiment.folds");
    require(val_fraction > 0.0 && val_fraction < 1.0, ErrorCode::InvalidArgument, "val_fraction must be in (0,1)",
            "experiment.val_fraction");
    require(hsf_top_k >= 1, ErrorCode::InvalidArgument, "hsf_top_k must be >= 1", "experiment.hsf_top_k");
    require(threshold >= 0.0 && threshold <= 1.0, ErrorCode::InvalidArgument, "threshold must be in [0,1]",
            "experiment.threshold");
    image.validate();
    fusion.validate();
    train.validate();
    fusion_train.validate();
    wam.validate();
}

namespace {

std::uint64_t derive(std::uint64_t seed, const std::string& name) { return Rng::named(seed, name).next_u64(); }

/// HSF columns picked and z-scored on the training rows only.
nn::Tensor hsf_inputs(const FeatureSet& data, const std::vector<std::size_t>& train, std::size_t k) {
    std::vector<std::vector<double>> rows;
    std::vector<int> y;
    for (std::size_t i : train) {
        rows.push_back(data.hsf[i]);
        y.push_back(data.labels[i]);
    }
    const std::vector<std::size_t> cols = select_top_k(rows, y, std::min(k, data.hsf.front().size()));
    std::vector<double> mean(cols.size(), 0.0), sd(cols.size(), 0.0);
    for (std::size_t c = 0; c < cols.size(); ++c) {
        for (const auto& r : rows) mean[c] += r[cols[c]];
        mean[c] /= static_cast<double>(rows.size());
        for (const auto& r : rows) sd[c] += (r[cols[c]] - mean[c]) * (r[cols[c]] - mean[c]);
        sd[c] = std::sqrt(sd[c] / static_cast<double>(rows.size()));
        if (!(sd[c] > 0.0)) sd[c] = 1.0;
    }
    nn::Tensor x({data.size(), cols.size()});
    for (std::size_t i = 0; i < data.size(); ++i)
        for (std::size_t c = 0; c < cols.size(); ++c)
            x.data[i * cols.size() + c] = (data.hsf[i][cols[c]] - mean[c]) / sd[c];
    return x;
}

Dataset make_dataset(const nn::Tensor& x, const std::vector<int>& labels, const std::vector<std::size_t>& idx) {
    Dataset d;
    d.x = gather_rows(x, idx);
    for (std::size_t i : idx) d.y.push_back(labels[i]);
    return d;
}

std::vector<int> pick(const std::vector<int>& v, const std::vector<std::size_t>& idx) {
    std::vector<int> out;
    for (std::size_t i : idx) out.push_back(v[i]);
    return out;
}

FoldResult fold_result(const FeatureSet& data, std::size_t fold, const std::vector<std::size_t>& test,
                       std::vector<double> scores, double threshold) {
    FoldResult r;
    r.fold = fold;
    for (std::size_t i : test) r.ids.push_back(data.ids[i]);
    r.y_true = pick(data.labels, test);
    r.y_score = std::move(scores);
    r.metrics = compute_metrics(r.y_true, r.y_score, threshold);
    return r;
}

struct SubModel {
    FeatureKind kind;
    nn::Tensor inputs;  // all subjects
    Model model;
    double wam = 0.0;
    std::size_t best_epoch = 0;
};

/// Fusion over the given streams. Frozen mode trains the head on fixed
/// embeddings; fine-tune mode also updates the sub-models through the
/// weighted embeddings.
struct FusionRun {
    std::vector<double> test_scores;
    std::size_t best_epoch = 0;
};

void save_model(const ExperimentConfig& cfg, std::size_t fold, const std::string& name, Model& model) {
    if (cfg.checkpoint_dir.empty()) return;
    const std::filesystem::path dir = cfg.checkpoint_dir / ("fold" + std::to_string(fold));
    std::filesystem::create_directories(dir);
    nn::save_checkpoint(model.net(), dir / (name + ".ckpt"));
}

FusionRun fuse_and_train(std::vector<SubModel*> streams, const std::vector<double>& weights,
                         const std::vector<int>& labels, const TrainValSplit& split,
                         const std::vector<std::size_t>& test, const ExperimentConfig& cfg, std::uint64_t seed,
                         std::size_t fold, const std::string& ckpt_name) {
    Model head = make_fusion_head(cfg.fusion, streams.size(), derive(seed, "model"));
    TrainConfig tc = cfg.fusion_train;
    tc.seed = derive(seed, "train");
    FusionRun run;

    auto fused_rows = [&](const std::vector<std::size_t>& idx) {
        std::vector<nn::Tensor> e;
        for (SubModel* s : streams) e.push_back(embed_all(s->model, gather_rows(s->inputs, idx)));
        return late_fuse(e, weights);
    };

    if (!cfg.fine_tune) {
        Dataset tr{fused_rows(split.train), pick(labels, split.train)};
        Dataset va{fused_rows(split.val), pick(labels, split.val)};
        run.best_epoch = train_model(head, tr, va, tc).best_epoch;
        run.test_scores = predict_proba(head, fused_rows(test));
        save_model(cfg, fold, ckpt_name, head);
        return run;
    }

    std::vector<nn::Parameter*> params = head.parameters();
    for (SubModel* s : streams) {
        auto p = s->model.parameters();
        params.insert(params.end(), p.begin(), p.end());
    }
    nn::AdamConfig acfg;
    acfg.lr = tc.lr;
    nn::Adam opt(params, acfg);
    auto snapshot_all = [&] {
        std::vector<nn::Snapshot> snaps{nn::take_snapshot(head.net())};
        for (SubModel* s : streams) snaps.push_back(nn::take_snapshot(s->model.net()));
        return snaps;
    };
    auto restore_all = [&](const std::vector<nn::Snapshot>& snaps) {
        nn::restore_snapshot(head.net(), snaps[0]);
        for (std::size_t j = 0; j < streams.size(); ++j) nn::restore_snapshot(streams[j]->model.net(), snaps[j + 1]);
    };
    EarlyStopping stop(tc.patience);
    auto best = snapshot_all();
    std::vector<std::size_t> order = split.train;
    const std::size_t k = streams.size(), d = cfg.fusion.token_dim;
    for (std::size_t epoch = 1; epoch <= tc.max_epochs; ++epoch) {
        Rng rng = Rng::named(tc.seed, "epoch" + std::to_string(epoch));
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
            const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                               order.begin() + static_cast<std::ptrdiff_t>(
                                                                   std::min(order.size(), start + tc.batch_size)));
            opt.zero_grad();
            std::vector<nn::Tensor> e;
            for (SubModel* s : streams) e.push_back(s->model.embed_train(gather_rows(s->inputs, idx)));
            const nn::LossResult loss = nn::softmax_cross_entropy(head.forward(late_fuse(e, weights), true),
                                                                  pick(labels, idx));
            const nn::Tensor g = head.backward(loss.grad);
            const std::size_t n = idx.size();
            for (std::size_t j = 0; j < k; ++j) {
                nn::Tensor gj({n, d});
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t c = 0; c < d; ++c) gj.data[i * d + c] = weights[j] * g.data[(i * k + j) * d + c];
                streams[j]->model.embedding_backward(gj);
            }
            opt.step();
        }
        Dataset va{fused_rows(split.val), pick(labels, split.val)};
        if (stop.update(evaluate_loss(head, va))) best = snapshot_all();
        if (stop.should_stop()) break;
    }
    restore_all(best);
    run.best_epoch = stop.best_epoch();
    run.test_scores = predict_proba(head, fused_rows(test));
    save_model(cfg, fold, ckpt_name, head);
    for (SubModel* s : streams) save_model(cfg, fold, ckpt_name + "_" + to_string(s->kind), s->model);
    return run;
}

void check_disjoint(const std::vector<std::size_t>& test, const TrainValSplit& split) {
    std::vector<std::size_t> seen = split.train;
    seen.insert(seen.end(), split.val.begin(), split.val.end());
    std::sort(seen.begin(), seen.end());
    for (std::size_t i : test)
        require(!std::binary_search(seen.begin(), seen.end(), i), ErrorCode::InvalidValue,
                "test subject leaked into training or validation", "folds");
    std::vector<std::size_t> common;
    std::set_intersection(split.train.begin(), split.train.end(), split.val.begin(), split.val.end(),
                          std::back_inserter(common));
    require(common.empty(), ErrorCode::InvalidValue, "validation subject leaked into training", "folds");
}

}  // namespace

ExperimentOutputs run_experiments(const FeatureSet& data, const ExperimentConfig& cfg, const ExperimentRequest& req) {
    cfg.validate();
    data.validate();
    const bool fused = req.fusion || req.ablation;
    std::array<bool, 4> need{};
    for (std::size_t k = 0; k < 4; ++k) need[k] = req.single[k] || fused;

    ExperimentOutputs out;
    auto new_report = [&](const std::string& name) {
        ExperimentReport r;
        r.name = name;
        r.seed = cfg.seed;
        return r;
    };
    for (std::size_t k = 0; k < 4; ++k)
        if (req.single[k]) out.single[k] = new_report("single_" + to_string(kAllFeatures[k]));
    if (req.fusion) out.fusion = new_report("fusion");
    if (req.ablation)
        for (FeatureKind k : kAllFeatures) out.ablation.push_back(new_report("ablation_without_" + to_string(k)));

    const FoldPlan plan = stratified_kfold(data.labels, cfg.folds, derive(cfg.seed, "folds"));
    for (std::size_t f = 0; f < cfg.folds; ++f) {
        const std::string fold_name = "fold" + std::to_string(f);
        const std::vector<std::size_t>& test = plan.folds[f];
        const TrainValSplit split =
            stratified_holdout(plan.complement(f), data.labels, cfg.val_fraction, derive(cfg.seed, fold_name + "/holdout"));
        check_disjoint(test, split);

        std::vector<SubModel> subs;
        subs.reserve(4);
        for (std::size_t k = 0; k < 4; ++k) {
            if (!need[k]) continue;
            const FeatureKind kind = kAllFeatures[k];
            const std::string base = fold_name + "/" + to_string(kind);
            SubModel s{kind, {}, Model{}, 0.0, 0};
            if (kind == FeatureKind::Hsf) {
                s.inputs = hsf_inputs(data, split.train, cfg.hsf_top_k);
                NumModelConfig nc = cfg.num;
                nc.input_dim = s.inputs.shape[1];
                s.model = make_num_model(nc, derive(cfg.seed, base + "/model"));
            } else {
                s.inputs = data.images[k];
                ImageModelConfig ic = cfg.image;
                ic.in_channels = s.inputs.shape[1];
                ic.image_side = s.inputs.shape[2];
                require(s.inputs.shape[3] == ic.image_side, ErrorCode::ShapeMismatch, "images must be square",
                        "images");
                s.model = make_image_model(ic, derive(cfg.seed, base + "/model"));
            }
            TrainConfig tc = cfg.train;
            tc.seed = derive(cfg.seed, base + "/train");
            s.best_epoch = train_model(s.model, make_dataset(s.inputs, data.labels, split.train),
                                       make_dataset(s.inputs, data.labels, split.val), tc)
                               .best_epoch;
            save_model(cfg, f, to_string(kind), s.model);
            const std::vector<double> val_scores = predict_proba(s.model, gather_rows(s.inputs, split.val));
            s.wam = wam_score(compute_metrics(pick(data.labels, split.val), val_scores, cfg.threshold), cfg.wam);
            if (req.single[k]) {
                FoldResult r = fold_result(data, f, test, predict_proba(s.model, gather_rows(s.inputs, test)),
                                           cfg.threshold);
                r.sub_scores = {s.wam};
                r.best_epoch = s.best_epoch;
                out.single[k]->folds.push_back(std::move(r));
            }
            log_info(fold_name + " " + to_string(kind) + ": best epoch " + std::to_string(s.best_epoch) +
                     ", validation WAM score " + std::to_string(s.wam));
            subs.push_back(std::move(s));
        }
        if (!fused) continue;

        std::vector<double> scores;
        for (const SubModel& s : subs) scores.push_back(s.wam);

        if (req.ablation) {
            for (std::size_t ex = 0; ex < 4; ++ex) {
                std::vector<SubModel*> streams;
                for (std::size_t j = 0; j < 4; ++j)
                    if (j != ex) streams.push_back(&subs[j]);
                const std::vector<double> w(3, 1.0 / 3.0);
                std::vector<nn::Snapshot> saved;
                for (SubModel* s : streams) saved.push_back(nn::take_snapshot(s->model.net()));
                const FusionRun run = fuse_and_train(
                    streams, w, data.labels, split, test, cfg,
                    derive(cfg.seed, fold_name + "/ablation/" + to_string(kAllFeatures[ex])), f,
                    "fusion_without_" + to_string(kAllFeatures[ex]));
                for (std::size_t j = 0; j < streams.size(); ++j) nn::restore_snapshot(streams[j]->model.net(), saved[j]);
                FoldResult r = fold_result(data, f, test, run.test_scores, cfg.threshold);
                r.weights = w;
                r.sub_scores = scores;
                r.best_epoch = run.best_epoch;
                out.ablation[ex].folds.push_back(std::move(r));
            }
        }
        if (req.fusion) {
            const std::vector<double> w = wam_weights(scores);
            std::vector<SubModel*> streams;
            for (SubModel& s : subs) streams.push_back(&s);
            const FusionRun run = fuse_and_train(streams, w, data.labels, split, test, cfg,
                                                 derive(cfg.seed, fold_name + "/fusion"), f, "fusion");
            FoldResult r = fold_result(data, f, test, run.test_scores, cfg.threshold);
            r.weights = w;
            r.sub_scores = scores;
            r.best_epoch = run.best_epoch;
            log_info(fold_name + " fusion: acc " + std::to_string(r.metrics.acc));
            out.fusion->folds.push_back(std::move(r));
        }
    }
    return out;
}

ExperimentReport run_single_feature_experiment(const FeatureSet& data, FeatureKind kind, const ExperimentConfig& cfg) {
    ExperimentRequest req;
    req.single[static_cast<std::size_t>(kind)] = true;
    return std::move(*run_experiments(data, cfg, req).single[static_cast<std::size_t>(kind)]);
}

ExperimentReport run_fusion_experiment(const FeatureSet& data, const ExperimentConfig& cfg) {
    ExperimentRequest req;
    req.fusion = true;
    return std::move(*run_experiments(data, cfg, req).fusion);
}

std::vector<ExperimentReport> run_ablation(const FeatureSet& data, const ExperimentConfig& cfg) {
    ExperimentRequest req;
    req.ablation = true;
    return run_experiments(data, cfg, req).ablation;
}

std::vector<int> label_by_threshold(const std::vector<int>& scores, int t) {
    std::vector<int> out;
    for (int s : scores) out.push_back(s >= t ? 1 : 0);
    return out;
}

namespace {

std::vector<int> required_scores(const FeatureSet& data) {
    std::vector<int> out;
    for (std::size_t i = 0; i < data.size(); ++i) {
        require(data.scores[i].has_value(), ErrorCode::MissingColumn,
                "subject '" + data.ids[i] + "' has no scale score", "scale_score");
        out.push_back(*data.scores[i]);
    }
    return out;
}

}  // namespace

ExperimentReport run_subtype_pair(const FeatureSet& data, const BandTable& bands, std::size_t a, std::size_t b,
                                  std::size_t repeats, const ExperimentConfig& cfg) {
    require(a < bands.names.size() && b < bands.names.size() && a != b, ErrorCode::InvalidArgument,
            "invalid band pair", "bands");
    require(repeats >= 1, ErrorCode::InvalidArgument, "repeats must be >= 1", "repeats");
    const std::vector<int> scores = required_scores(data);
    std::vector<std::size_t> members;
    std::vector<int> labels;
    std::size_t na = 0, nb = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::size_t band = bands.band_of(scores[i]);
        if (band != a && band != b) continue;
        members.push_back(i);
        labels.push_back(band == b ? 1 : 0);
        (band == b ? nb : na) += 1;
    }
    require(na > 0, ErrorCode::EmptyInput, "band '" + bands.names[a] + "' is empty after binning", "bands");
    require(nb > 0, ErrorCode::EmptyInput, "band '" + bands.names[b] + "' is empty after binning", "bands");

    const std::string name = "subtype_" + bands.names[a] + "_vs_" + bands.names[b];
    ExperimentReport report;
    report.name = name;
    report.seed = cfg.seed;
    for (std::size_t r = 0; r < repeats; ++r) {
        const std::string tag = name + "/repeat" + std::to_string(r);
        const std::vector<std::size_t> keep = downsample_balance(labels, derive(cfg.seed, tag + "/balance"));
        std::vector<std::size_t> idx;
        std::vector<int> y;
        for (std::size_t j : keep) {
            idx.push_back(members[j]);
            y.push_back(labels[j]);
        }
        FeatureSet sub = data.select(idx);
        sub.labels = y;
        ExperimentConfig rc = cfg;
        rc.seed = derive(cfg.seed, tag);
        ExperimentReport rep = run_fusion_experiment(sub, rc);
        for (FoldResult& f : rep.folds) {
            f.repeat = r;
            report.folds.push_back(std::move(f));
        }
    }
    return report;
}

std::vector<ExperimentReport> run_subtype_tasks(const FeatureSet& data, const BandTable& bands, std::size_t repeats,
                                                const ExperimentConfig& cfg) {
    const std::vector<int> scores = required_scores(data);
    std::vector<std::size_t> count(bands.names.size(), 0);
    for (int s : scores) ++count[bands.band_of(s)];
    std::vector<ExperimentReport> out;
    for (std::size_t a = 0; a < count.size(); ++a)
        for (std::size_t b = a + 1; b < count.size(); ++b) {
            const std::size_t minority = std::min(count[a], count[b]);
            if (minority == 0) {
                log_warn("skipping " + bands.names[a] + " vs " + bands.names[b] + ": a band is empty");
                continue;
            }
            const std::size_t train_min = minority - (minority + cfg.folds - 1) / cfg.folds;
            if (minority < cfg.folds || train_min < 3) {
                log_warn("skipping " + bands.names[a] + " vs " + bands.names[b] + ": only " +
                         std::to_string(minority) + " subjects in the smaller band");
                continue;
            }
            out.push_back(run_subtype_pair(data, bands, a, b, repeats, cfg));
        }
    return out;
}

std::vector<ExperimentReport> run_threshold_sweep(const FeatureSet& data, const std::vector<int>& thresholds,
                                                  const ExperimentConfig& cfg) {
    require(!thresholds.empty(), ErrorCode::EmptyInput, "no thresholds", "thresholds");
    const std::vector<int> scores = required_scores(data);
    std::vector<ExperimentReport> out;
    for (int t : thresholds) {
        FeatureSet relabeled = data;
        relabeled.labels = label_by_threshold(scores, t);
        ExperimentConfig tc = cfg;
        tc.seed = derive(cfg.seed, "threshold" + std::to_string(t));
        ExperimentReport rep = run_fusion_experiment(relabeled, tc);
        rep.name = "threshold_" + std::to_string(t);
        out.push_back(std::move(rep));
    }
    return out;
}

}  // namespace abaf
