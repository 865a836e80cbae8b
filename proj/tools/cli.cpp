#include "cli.hpp"

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "abaf/error.hpp"
#include "abaf/log.hpp"
#include "abaf/pipeline.hpp"
#include "abaf/reports.hpp"
#include "abaf/text_io.hpp"

namespace abaf::cli {

namespace {

namespace fs = std::filesystem;

/// Options shared by every subcommand.
struct Common {
    std::string config_path;
    std::string profile = "desk";
    long long seed = 0;
    int verbosity = 1;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* profile_opt = nullptr;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config_path, "Key-value config file (section.key = value)");
    c.profile_opt =
        sub->add_option("--profile", c.profile, "Default profile")->check(CLI::IsMember({"paper", "desk"}));
    c.seed_opt = sub->add_option("--seed", c.seed, "Run seed (overrides ABAF_SEED and the config file)")
                     ->check(CLI::NonNegativeNumber);
    sub->add_option("--verbosity", c.verbosity, "0 quiet, 1 warnings, 2 progress, 3 debug")->check(CLI::Range(0, 3));
}

/// profile defaults < config file < ABAF_SEED < flags.
PipelineConfig base_config(const Common& c) {
    std::optional<KeyValueConfig> file;
    if (!c.config_path.empty()) {
        require(fs::exists(c.config_path), ErrorCode::MissingFile, "config file not found: " + c.config_path,
                "--config");
        file = KeyValueConfig::load(c.config_path);
    }
    Profile profile = Profile::Desk;
    if (file && file->contains("profile")) profile = parse_profile(file->at("profile"));
    if (c.profile_opt->count() > 0) profile = parse_profile(c.profile);
    PipelineConfig cfg = PipelineConfig::for_profile(profile);
    if (file) cfg.apply(*file);
    if (const char* env = std::getenv("ABAF_SEED"); env && *env) {
        const long long s = parse_int(env, "ABAF_SEED");
        require(s >= 0, ErrorCode::InvalidValue, "ABAF_SEED must be >= 0", "ABAF_SEED");
        cfg.seed = static_cast<std::uint64_t>(s);
    }
    if (c.seed_opt->count() > 0) cfg.seed = static_cast<std::uint64_t>(c.seed);
    cfg.profile = profile;
    cfg.resolve();
    return cfg;
}

template <class T, class U>
void override_if(CLI::Option* opt, T& target, const U& value) {
    if (opt->count() > 0) target = static_cast<T>(value);
}

void require_input(const fs::path& p, const std::string& flag) {
    require(fs::exists(p), ErrorCode::MissingFile, "input not found: " + p.string(), flag);
}

void write_config_snapshot(const PipelineConfig& cfg, const fs::path& out) {
    fs::create_directories(out);
    write_text_file(out / "config.cfg", cfg.to_kv().serialize());
}

void emit(ExperimentReport report, const PipelineConfig& cfg, const fs::path& out, const std::string& started) {
    report.config_snapshot = cfg.to_kv().serialize();
    write_report_bundle(report, out, report.name, started);
}

std::string acc_summary(const ExperimentReport& r) {
    const MetricAggregate a = aggregate(r);
    return r.name + " acc " + format_fixed(a.mean[0].value_or(0.0), 3) + " +/- " + format_fixed(a.std[0].value_or(0.0), 3);
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"Speech-based depression detection pipeline: synthetic corpora, feature extraction, "
                 "sub-model and fusion training, ablation, subtype and threshold tasks, HSF analysis."};
    app.name(args.empty() ? "abaf" : fs::path(args[0]).filename().string());
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();

    // synth
    Common c_synth;
    auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic corpus (WAVs + manifest.csv)");
    add_common(synth, c_synth);
    int n_per_class = 100;
    double duration = 3.0, shift = -30.0, tilt = -3.0, tempo = 0.85, range = 1.0, noise_db = -50.0, max_harmonic = 7000.0;
    bool null_corpus = false;
    std::string synth_out = "corpus";
    auto* o_n = synth->add_option("--n", n_per_class, "Subjects per class")->check(CLI::PositiveNumber);
    auto* o_dur = synth->add_option("--duration", duration, "Clip length in seconds");
    auto* o_shift = synth->add_option("--pitch-shift", shift, "Class-1 pitch shift in Hz");
    auto* o_tilt = synth->add_option("--tilt", tilt, "Class-1 spectral tilt in dB/octave");
    auto* o_tempo = synth->add_option("--tempo", tempo, "Class-1 segment duration factor");
    auto* o_range = synth->add_option("--pitch-range", range, "Class-1 factor on pitch declination and vibrato depth");
    auto* o_bw = synth->add_option("--max-harmonic-hz", max_harmonic, "Voice bandwidth for both classes");
    auto* o_noise = synth->add_option("--noise-db", noise_db, "Additive noise level in dBFS");
    synth->add_flag("--null", null_corpus, "No planted class differences");
    auto* o_synth_out = synth->add_option("--out", synth_out, "Output corpus directory");

    // extract
    Common c_extract;
    auto* extract = app.add_subcommand("extract", "Preprocess and extract the four features of every subject");
    add_common(extract, c_extract);
    std::string manifest_path, cache_out = "cache";
    std::size_t jobs = 1;
    extract->add_option("--manifest", manifest_path, "Corpus manifest.csv")->required();
    auto* o_cache_out = extract->add_option("--out", cache_out, "Feature cache directory");
    extract->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

    // experiment subcommands share cache/out/folds
    struct ExpFlags {
        Common common;
        std::string cache = "cache", out = "runs/run";
        std::size_t folds = 5;
        CLI::Option *o_cache = nullptr, *o_out = nullptr, *o_folds = nullptr;
    };
    auto add_exp = [&](CLI::App* sub, ExpFlags& f) {
        add_common(sub, f.common);
        f.o_cache = sub->add_option("--cache", f.cache, "Feature cache directory written by extract");
        f.o_out = sub->add_option("--out", f.out, "Output directory for reports and checkpoints");
        f.o_folds = sub->add_option("--folds", f.folds, "Cross-validation folds")->check(CLI::Range(2, 1000));
    };

    ExpFlags f_single, f_fusion, f_ablate, f_subtype, f_sweep, f_analyze;
    auto* train_single = app.add_subcommand("train-single", "Cross-validate one sub-model per feature");
    add_exp(train_single, f_single);
    std::string feature = "all";
    train_single->add_option("--feature", feature, "Feature stream")
        ->check(CLI::IsMember({"all", "envelope", "spectrogram", "mel", "hsf"}));

    auto* train_fusion = app.add_subcommand("train-fusion", "Cross-validate the WAM late-fusion model");
    add_exp(train_fusion, f_fusion);
    std::string preset = "overall";
    bool fine_tune = false, with_singles = false;
    auto* o_preset = train_fusion->add_option("--preset", preset, "WAM preset")
                         ->check(CLI::IsMember({"overall", "recall", "robustness"}));
    auto* o_fine = train_fusion->add_flag("--fine-tune", fine_tune, "Update sub-models during fusion training");
    train_fusion->add_flag("--with-singles", with_singles, "Also report each sub-model on the same folds");

    auto* ablate = app.add_subcommand("ablate", "Leave-one-stream-out fusion with equal weights");
    add_exp(ablate, f_ablate);

    auto* subtype = app.add_subcommand("subtype", "Pairwise severity-band tasks with balanced downsampling");
    add_exp(subtype, f_subtype);
    std::size_t repeats = 10;
    auto* o_repeats = subtype->add_option("--repeats", repeats, "Repetitions per band pair")->check(CLI::PositiveNumber);
    std::string pair;
    subtype->add_option("--pair", pair, "Single band pair 'A,B' (default: all pairs)");

    auto* sweep = app.add_subcommand("sweep", "Fusion experiments on labels from score thresholds");
    add_exp(sweep, f_sweep);
    std::string thresholds = "3,4,5";
    auto* o_thr = sweep->add_option("--thresholds", thresholds, "Comma-separated score thresholds (label = score >= t)");

    auto* analyze = app.add_subcommand("analyze", "Welch t-tests with BH-FDR and random-forest ranking of HSFs");
    add_exp(analyze, f_analyze);
    double alpha = 0.01;
    std::string filter = "q";
    std::size_t trees = 100, max_depth = 0, min_leaf = 1, mtry = 0;
    auto* o_alpha = analyze->add_option("--alpha", alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
    auto* o_filter = analyze->add_option("--filter", filter, "Filter on q (FDR) or p values")->check(CLI::IsMember({"q", "p"}));
    auto* o_trees = analyze->add_option("--trees", trees, "Random-forest trees")->check(CLI::PositiveNumber);
    auto* o_depth = analyze->add_option("--max-depth", max_depth, "Tree depth limit (0 = unlimited)");
    auto* o_leaf = analyze->add_option("--min-leaf", min_leaf, "Minimum samples per leaf")->check(CLI::PositiveNumber);
    auto* o_mtry = analyze->add_option("--features-per-split", mtry, "Candidates per split (0 = sqrt(d))");

    std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1), args.end());
    std::reverse(rest.begin(), rest.end());
    try {
        app.parse(rest);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        CLI::App* failed = &app;
        for (CLI::App* sub : app.get_subcommands()) failed = sub;
        std::cerr << failed->help();
        return 2;
    }

    try {
        const std::string started = utc_timestamp();
        auto setup = [&](Common& c) {
            set_log_level(static_cast<LogLevel>(c.verbosity));
            return base_config(c);
        };

        if (synth->parsed()) {
            PipelineConfig cfg = setup(c_synth);
            override_if(o_n, cfg.synth.n_per_class, n_per_class);
            override_if(o_dur, cfg.synth.duration_s, duration);
            override_if(o_shift, cfg.synth.class1_pitch_shift, shift);
            override_if(o_tilt, cfg.synth.class1_tilt_db, tilt);
            override_if(o_tempo, cfg.synth.class1_tempo_factor, tempo);
            override_if(o_range, cfg.synth.class1_pitch_range, range);
            override_if(o_bw, cfg.synth.max_harmonic_hz, max_harmonic);
            override_if(o_noise, cfg.synth.noise_db, noise_db);
            if (null_corpus) {
                cfg.synth.class1_pitch_shift = 0.0;
                cfg.synth.class1_tilt_db = 0.0;
                cfg.synth.class1_tempo_factor = 1.0;
                cfg.synth.class1_pitch_range = 1.0;
            }
            if (o_synth_out->count()) cfg.corpus_dir = synth_out;
            const CorpusManifest m = generate_synthetic_corpus(cfg.synth, cfg.seed, cfg.corpus_dir);
            write_config_snapshot(cfg, cfg.corpus_dir);
            std::cout << "synth: " << m.records.size() << " clips and manifest.csv in " << cfg.corpus_dir.string()
                      << "\n";
            return 0;
        }
        if (extract->parsed()) {
            PipelineConfig cfg = setup(c_extract);
            require_input(manifest_path, "--manifest");
            if (o_cache_out->count()) cfg.cache_dir = cache_out;
            const CorpusManifest m = load_manifest(manifest_path);
            const ExtractSummary s = extract_corpus(m, cfg, cfg.cache_dir, jobs);
            std::cout << "extract: " << s.extracted << " extracted, " << s.reused << " reused, " << s.skipped.size()
                      << " skipped; cache " << cfg.cache_dir.string() << "\n";
            return 0;
        }

        auto exp_setup = [&](ExpFlags& f) {
            PipelineConfig cfg = setup(f.common);
            if (f.o_cache->count()) cfg.cache_dir = f.cache;
            if (f.o_out->count()) cfg.out_dir = f.out;
            override_if(f.o_folds, cfg.experiment.folds, f.folds);
            require_input(cfg.cache_dir / "index.csv", "--cache");
            return cfg;
        };

        if (train_single->parsed()) {
            PipelineConfig cfg = exp_setup(f_single);
            cfg.experiment.checkpoint_dir = cfg.out_dir;
            const FeatureSet data = load_feature_set(cfg.cache_dir, cfg);
            ExperimentRequest req;
            for (std::size_t k = 0; k < 4; ++k) req.single[k] = feature == "all" || feature == to_string(kAllFeatures[k]);
            const ExperimentOutputs out = run_experiments(data, cfg.experiment, req);
            write_config_snapshot(cfg, cfg.out_dir);
            std::string summary;
            for (const auto& r : out.single)
                if (r) {
                    emit(*r, cfg, cfg.out_dir, started);
                    summary += (summary.empty() ? "" : "; ") + acc_summary(*r);
                }
            std::cout << "train-single: " << summary << "\n";
            return 0;
        }
        if (train_fusion->parsed()) {
            PipelineConfig cfg = exp_setup(f_fusion);
            if (o_preset->count()) cfg.experiment.wam = WamWeights::preset(preset);
            override_if(o_fine, cfg.experiment.fine_tune, fine_tune);
            cfg.experiment.checkpoint_dir = cfg.out_dir;
            const FeatureSet data = load_feature_set(cfg.cache_dir, cfg);
            ExperimentRequest req;
            req.fusion = true;
            if (with_singles) req.single = {true, true, true, true};
            const ExperimentOutputs out = run_experiments(data, cfg.experiment, req);
            write_config_snapshot(cfg, cfg.out_dir);
            emit(*out.fusion, cfg, cfg.out_dir, started);
            for (const auto& r : out.single)
                if (r) emit(*r, cfg, cfg.out_dir, started);
            std::cout << "train-fusion: " << acc_summary(*out.fusion) << "; reports in " << cfg.out_dir.string() << "\n";
            return 0;
        }
        if (ablate->parsed()) {
            PipelineConfig cfg = exp_setup(f_ablate);
            cfg.experiment.checkpoint_dir = cfg.out_dir;
            const FeatureSet data = load_feature_set(cfg.cache_dir, cfg);
            ExperimentRequest req;
            req.fusion = true;
            req.ablation = true;
            const ExperimentOutputs out = run_experiments(data, cfg.experiment, req);
            write_config_snapshot(cfg, cfg.out_dir);
            emit(*out.fusion, cfg, cfg.out_dir, started);
            std::string summary = acc_summary(*out.fusion);
            for (const auto& r : out.ablation) {
                emit(r, cfg, cfg.out_dir, started);
                summary += "; " + acc_summary(r);
            }
            std::cout << "ablate: " << summary << "\n";
            return 0;
        }
        if (subtype->parsed()) {
            PipelineConfig cfg = exp_setup(f_subtype);
            override_if(o_repeats, cfg.subtype_repeats, repeats);
            const FeatureSet data = load_feature_set(cfg.cache_dir, cfg);
            const BandTable bands = band_table_for(data.scale_kind);
            std::vector<ExperimentReport> reports;
            if (!pair.empty()) {
                const auto parts = split(pair, ',');
                require(parts.size() == 2, ErrorCode::InvalidArgument, "expected --pair A,B", "--pair");
                reports.push_back(run_subtype_pair(data, bands, bands.index_of(trim(parts[0])),
                                                   bands.index_of(trim(parts[1])), cfg.subtype_repeats, cfg.experiment));
            } else {
                reports = run_subtype_tasks(data, bands, cfg.subtype_repeats, cfg.experiment);
            }
            require(!reports.empty(), ErrorCode::DegenerateData, "no band pair has enough subjects", "bands");
            write_config_snapshot(cfg, cfg.out_dir);
            std::string summary;
            for (const auto& r : reports) {
                emit(r, cfg, cfg.out_dir, started);
                summary += (summary.empty() ? "" : "; ") + acc_summary(r);
            }
            std::cout << "subtype: " << summary << "\n";
            return 0;
        }
        if (sweep->parsed()) {
            PipelineConfig cfg = exp_setup(f_sweep);
            if (o_thr->count()) {
                KeyValueConfig kv;
                kv.set("sweep.thresholds", thresholds);
                cfg.apply(kv);
            }
            const FeatureSet data = load_feature_set(cfg.cache_dir, cfg);
            const auto reports = run_threshold_sweep(data, cfg.sweep_thresholds, cfg.experiment);
            write_config_snapshot(cfg, cfg.out_dir);
            std::string summary;
            for (const auto& r : reports) {
                emit(r, cfg, cfg.out_dir, started);
                const auto pr = aggregate(r).mean[7];
                summary += (summary.empty() ? "" : "; ") + r.name + " pr_auc " + (pr ? format_fixed(*pr, 3) : "NA");
            }
            std::cout << "sweep: " << summary << "\n";
            return 0;
        }
        if (analyze->parsed()) {
            PipelineConfig cfg = exp_setup(f_analyze);
            override_if(o_alpha, cfg.analysis.alpha, alpha);
            if (o_filter->count())
                cfg.analysis.filter = filter == "q" ? SignificanceFilter::QValue : SignificanceFilter::PValue;
            override_if(o_trees, cfg.analysis.rf.n_trees, trees);
            override_if(o_depth, cfg.analysis.rf.max_depth, max_depth);
            override_if(o_leaf, cfg.analysis.rf.min_leaf, min_leaf);
            override_if(o_mtry, cfg.analysis.rf.features_per_split, mtry);
            const FeatureSet data = load_feature_set(cfg.cache_dir, cfg);
            const auto table = rank_significant_features(data.hsf, data.labels, HsfVector::names(), cfg.analysis);
            write_config_snapshot(cfg, cfg.out_dir);
            emit_feature_report(table, cfg.out_dir / "feature_report.csv");
            std::cout << "analyze: " << table.size() << " significant features; "
                      << (cfg.out_dir / "feature_report.csv").string() << "\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace abaf::cli
