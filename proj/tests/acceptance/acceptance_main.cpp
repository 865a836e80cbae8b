// Acceptance runner: one PASS/FAIL line per criterion, exit code 1 if any fails.
// Usage: abaf_acceptance [--only N[,N...]] [--work DIR]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "abaf/analysis.hpp"
#include "abaf/dsp.hpp"
#include "abaf/features.hpp"
#include "abaf/log.hpp"
#include "abaf/metrics.hpp"
#include "abaf/models.hpp"
#include "abaf/nn/attention.hpp"
#include "abaf/pipeline.hpp"
#include "abaf/preprocess.hpp"
#include "abaf/reports.hpp"
#include "abaf/text_io.hpp"
#include "oracles/constructions.hpp"
#include "oracles/layer_suite.hpp"
#include "oracles/oracles.hpp"

using namespace abaf;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

/// Collects sub-check results for one criterion.
class Checker {
public:
    void expect(bool ok, const std::string& what) {
        if (!ok) {
            pass_ = false;
            if (failures_.size() < 5) failures_.push_back(what);
        }
    }
    void note(const std::string& s) { notes_ += (notes_.empty() ? "" : "; ") + s; }
    Outcome outcome() const {
        Outcome o{pass_, notes_};
        for (const auto& f : failures_) o.detail += (o.detail.empty() ? "" : "; ") + std::string("failed: ") + f;
        return o;
    }

private:
    bool pass_ = true;
    std::vector<std::string> failures_;
    std::string notes_;
};

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

std::string fmt(double v, int digits = 3) { return format_fixed(v, digits); }

std::string sci(double v) {
    std::ostringstream s;
    s.precision(2);
    s << std::scientific << v;
    return s.str();
}

// 1. HSF cardinality
Outcome criterion_hsf_cardinality(const fs::path&) {
    Checker c;
    const auto& names = HsfVector::names();
    c.expect(names.size() == 6552, "6552 names");
    c.expect(lld_names().size() == 56 && functional_names().size() == 39, "56 LLDs x 39 functionals");
    c.expect(lld_names().size() * 3 * functional_names().size() == 6552, "decomposition");
    std::set<std::string> unique(names.begin(), names.end());
    c.expect(unique.size() == names.size(), "unique names");
    std::size_t idx = 0;
    bool layout = true;
    for (const auto& lld : lld_names())
        for (const char* variant : {"raw", "de", "dede"})
            for (const auto& f : functional_names()) layout = layout && names[idx++] == lld + "_" + variant + "_" + f;
    c.expect(layout, "name layout lld x variant x functional");
    AudioClip clip{std::vector<double>(16000), 16000};
    Rng rng(1);
    for (std::size_t i = 0; i < clip.size(); ++i)
        clip.samples[i] = 0.4 * std::sin(2 * oracle::kPi * 160.0 * i / 16000) + 0.01 * rng.normal();
    c.expect(assemble_hsf(clip, ExtractionConfig{}).values.size() == 6552, "assembled length");
    c.note("6552 = 56 x 3 x 39");
    return c.outcome();
}

// 2. Parameter counts
Outcome criterion_param_counts(const fs::path&) {
    Checker c;
    NumModelConfig num;
    num.lstm_hidden = 291;
    const std::size_t fc = nn::count_params(make_num_model(num, 1).first_fc().parameters());
    nn::MultiHeadAttention mha("mha", 256, 4, nn::MhaConvention::PerHeadFullWidth);
    const std::size_t att = nn::count_params(mha.parameters());
    const std::size_t cnn = cnn_stack_param_budget(3, 224);
    c.expect(fc == 37376, "NumModel first FC = 37376");
    c.expect(att == 1048576, "MHA per-head full width = 1048576");
    c.expect(cnn == 12850400, "CNN stack = 12850400");
    c.note("fc " + std::to_string(fc) + ", mha " + std::to_string(att) + ", cnn " + std::to_string(cnn));
    return c.outcome();
}

// 3. Gradient checks
Outcome criterion_gradients(const fs::path&) {
    Checker c;
    double worst = 0.0;
    std::string worst_layer;
    for (std::uint64_t seed : {1u, 2u, 3u})
        for (const auto& r : suite::run_layer_checks(seed)) {
            c.expect(r.max_rel_error < 1e-4, r.layer + " seed " + std::to_string(seed) + " (" + sci(r.max_rel_error) + ")");
            if (r.max_rel_error >= worst) {
                worst = r.max_rel_error;
                worst_layer = r.layer;
            }
        }
    c.note("worst rel error " + sci(worst) + " (" + worst_layer + ")");
    return c.outcome();
}

// 4. DSP oracles
Outcome criterion_dsp(const fs::path&) {
    Checker c;
    Rng rng(4);
    double fft_err = 0.0;
    for (std::size_t n : {16u, 64u, 256u})
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<double> x(n);
            for (double& v : x) v = rng.uniform(-1, 1);
            const auto fast = rfft(x);
            const auto slow = oracle::dft_magnitude(x);
            for (std::size_t k = 0; k < slow.size(); ++k) fft_err = std::max(fft_err, rel_err(std::abs(fast[k]), slow[k]));
        }
    c.expect(fft_err <= 1e-9, "FFT vs naive DFT");

    double dct_err = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t rows = 26;
        SpectroMatrix lm{Matrix(rows, 1, 0.0), BinAxis::Mel, true};
        std::vector<double> col(rows);
        for (std::size_t r = 0; r < rows; ++r) lm.data(r, 0) = col[r] = rng.uniform(-5, 5);
        const auto got = mfcc(lm, 13);
        const auto ref = oracle::dct2(col, 13);
        for (std::size_t k = 0; k < 13; ++k)
            dct_err = std::max(dct_err, std::abs(got.data(k, 0) - ref[k]) / std::max(1.0, std::abs(ref[k])));
    }
    c.expect(dct_err <= 1e-12, "MFCC vs naive DCT-II");

    double mel_err = 0.0;
    for (std::size_t n_mels : {26u, 40u, 64u}) {
        const auto grid = mel_grid_hz(n_mels, 0.0, 8000.0);
        const auto ref = oracle::mel_grid(n_mels, 0.0, 8000.0);
        for (std::size_t i = 0; i < ref.size(); ++i) mel_err = std::max(mel_err, std::abs(grid[i] - ref[i]) / std::max(1.0, ref[i]));
    }
    c.expect(mel_err <= 1e-9, "mel apex frequencies");
    const double m700 = std::abs(hz_to_mel(700.0) - 2595.0 * std::log10(2.0));
    c.expect(m700 <= 1e-12, "hz_to_mel(700)");

    double fn_err = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(3 + rng.below(60));
        for (double& v : x) v = rng.uniform(-3, 3);
        const auto got = apply_functionals(x);
        const auto ref = oracle::functionals(x);
        for (std::size_t i = 0; i < kNumFunctionals; ++i)
            fn_err = std::max(fn_err, std::abs(got[i] - ref[i]) / std::max(1.0, std::abs(ref[i])));
    }
    c.expect(fn_err <= 1e-10, "39 functionals vs brute force");
    c.note("fft " + sci(fft_err) + ", dct " + sci(dct_err) + ", mel " + sci(mel_err) + ", functionals " + sci(fn_err));
    return c.outcome();
}

VadSegments vad_of(const AudioClip& clip) {
    PreprocessConfig cfg;
    const FrameSpec spec = cfg.frame_spec(clip.sample_rate);
    return detect_endpoints(short_time_energy(clip, spec), zero_crossing_rate(clip, spec), cfg.vad, spec,
                            clip.size(), clip.sample_rate);
}

// 5. VAD boundaries and gain invariance
Outcome criterion_vad(const fs::path&) {
    Checker c;
    const double tol = 2.0 * 160.0;  // two 10 ms hops at 16 kHz
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto b = construct::silence_tone_silence(seed);
        const auto segs = vad_of(b.clip);
        c.expect(segs.size() == 1, "one segment, seed " + std::to_string(seed));
        if (segs.size() != 1) continue;
        const double e = std::max(std::abs(double(segs[0].n_start) - double(b.on)),
                                  std::abs(double(segs[0].n_end) - double(b.off)));
        worst = std::max(worst, e);
        c.expect(e <= tol, "boundaries within 2 hops, seed " + std::to_string(seed));
        for (double g : {0.1, 10.0}) {
            AudioClip scaled = b.clip;
            for (double& s : scaled.samples) s *= g;
            c.expect(vad_of(scaled) == segs, "gain x" + fmt(g, 1) + " invariance, seed " + std::to_string(seed));
        }
    }
    c.note("worst boundary error " + fmt(worst, 0) + " samples (limit 320)");
    return c.outcome();
}

// 6. Statistics oracles
Outcome criterion_stats(const fs::path&) {
    Checker c;
    Rng rng(6);
    double welch_t = 0.0, welch_p = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a(5 + rng.below(30)), b(5 + rng.below(30));
        const double shift = rng.uniform(-1.5, 1.5), scale = rng.uniform(0.5, 2.0);
        for (double& v : a) v = rng.normal();
        for (double& v : b) v = shift + scale * rng.normal();
        const auto got = welch_t_test(a, b);
        const auto ref = oracle::welch(a, b);
        welch_t = std::max(welch_t, rel_err(got.t, ref.t));
        welch_p = std::max(welch_p, std::abs(got.p - ref.p));
    }
    c.expect(welch_t <= 1e-10 && welch_p <= 1e-10, "Welch t/p vs direct evaluation");

    double q_err = 0.0;
    bool sets_equal = true;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> p(1 + rng.below(60));
        for (double& v : p) v = rng.bernoulli(0.3) ? rng.uniform(0.0, 0.01) : rng.uniform();
        const auto q = bh_fdr(p);
        const auto ref = oracle::bh_qvalues(p);
        for (std::size_t i = 0; i < p.size(); ++i) q_err = std::max(q_err, std::abs(q[i] - ref[i]));
        for (double alpha : {0.01, 0.05, 0.1}) {
            std::set<std::size_t> got;
            for (std::size_t i = 0; i < p.size(); ++i)
                if (q[i] <= alpha) got.insert(i);
            sets_equal = sets_equal && got == oracle::bh_stepup(p, alpha);
        }
    }
    c.expect(sets_equal, "BH significance sets");
    c.expect(q_err <= 1e-12, "BH q-values");

    double auc_err = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 4 + rng.below(60);
        std::vector<int> y(n);
        std::vector<double> s(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = i < 2 ? int(i) : int(rng.below(2));
            s[i] = trial % 4 == 0 ? double(rng.below(5)) / 4.0 : rng.uniform();
        }
        const Metrics m = compute_metrics(y, s, 0.5);
        auc_err = std::max(auc_err, std::abs(m.roc_auc.value() - oracle::wilcoxon_auc(y, s)));
    }
    c.expect(auc_err <= 1e-12, "ROC-AUC vs concordant pairs");
    c.note("welch t " + sci(welch_t) + " p " + sci(welch_p) + ", bh q " + sci(q_err) + ", auc " + sci(auc_err));
    return c.outcome();
}

// 9. WAM properties
Outcome criterion_wam(const fs::path&) {
    Checker c;
    Rng rng(9);
    double sum_err = 0.0, scale_err = 0.0, uniform_err = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 1 + rng.below(6);
        std::vector<double> s(k);
        for (double& v : s) v = rng.uniform(0.01, 1.0);
        const auto w = wam_weights(s);
        double sum = 0.0;
        for (double v : w) sum += v;
        sum_err = std::max(sum_err, std::abs(sum - 1.0));
        const double a = rng.uniform(0.01, 100.0);
        std::vector<double> scaled(s);
        for (double& v : scaled) v *= a;
        const auto ws = wam_weights(scaled);
        for (std::size_t i = 0; i < k; ++i) scale_err = std::max(scale_err, std::abs(ws[i] - w[i]));
        const auto wu = wam_weights(std::vector<double>(k, s[0]));
        for (double v : wu) uniform_err = std::max(uniform_err, std::abs(v - 1.0 / double(k)));
    }
    c.expect(sum_err <= 1e-12, "weights sum to 1");
    c.expect(uniform_err <= 1e-12, "uniform under equal scores");
    c.expect(scale_err <= 1e-12, "invariant under rescaling");
    const WamWeights overall = WamWeights::preset("overall");
    c.expect(overall.alpha == 0.5 && overall.beta == 0.1 && overall.gamma == 0.1 && overall.delta == 0.1 && overall.epsilon == 0.1,
             "preset (0.5, 0.1, 0.1, 0.1, 0.1)");
    Metrics m;
    m.acc = 0.8;
    m.precision = 0.6;
    m.recall = 0.7;
    m.macro_f1 = 0.65;
    m.weighted_f1 = 0.66;
    const double score = wam_score(m, overall);
    c.expect(std::abs(score - 0.661) <= 1e-12, "hand value 0.661");
    c.note("sum " + sci(sum_err) + ", rescale " + sci(scale_err) + ", wam " + format_double(score));
    return c.outcome();
}

// End-to-end runs (criteria 7, 8, 10)

struct RunResult {
    std::vector<ExperimentReport> reports;
    double fusion_acc = NAN;
    std::array<double, 4> single_acc{NAN, NAN, NAN, NAN};
    std::array<double, 4> ablation_acc{NAN, NAN, NAN, NAN};
    double seconds = 0.0;
};

RunResult run_corpus(const SynthSpec& spec, std::uint64_t seed, const fs::path& dir, bool singles, bool ablation) {
    const auto t0 = Clock::now();
    PipelineConfig cfg = PipelineConfig::desk();
    cfg.synth = spec;
    cfg.seed = seed;
    cfg.resolve();
    fs::remove_all(dir);
    const CorpusManifest m = generate_synthetic_corpus(cfg.synth, seed, dir / "corpus");
    extract_corpus(m, cfg, dir / "cache", 1);
    const FeatureSet data = load_feature_set(dir / "cache", cfg);
    ExperimentRequest req;
    req.fusion = true;
    req.ablation = ablation;
    if (singles) req.single = {true, true, true, true};
    const ExperimentOutputs out = run_experiments(data, cfg.experiment, req);
    RunResult r;
    for (std::size_t k = 0; k < 4; ++k)
        if (out.single[k]) {
            r.single_acc[k] = mean_metric(*out.single[k], "acc");
            r.reports.push_back(*out.single[k]);
        }
    r.fusion_acc = mean_metric(*out.fusion, "acc");
    r.reports.push_back(*out.fusion);
    for (std::size_t k = 0; k < out.ablation.size(); ++k) {
        r.ablation_acc[k] = mean_metric(out.ablation[k], "acc");
        r.reports.push_back(out.ablation[k]);
    }
    for (auto& rep : r.reports) {
        rep.config_snapshot = cfg.to_kv().serialize();
        fs::create_directories(dir / "reports");
        write_text_file(dir / "reports" / (rep.name + ".csv"), report_csv(rep));
    }
    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return r;
}

SynthSpec planted_spec() {
    SynthSpec s;
    s.n_per_class = 100;
    s.class1_pitch_shift = -30.0;
    s.class1_tilt_db = -3.0;
    s.class1_tempo_factor = 0.85;
    return s;
}

SynthSpec null_spec() {
    SynthSpec s = planted_spec();
    s.class1_pitch_shift = 0.0;
    s.class1_tilt_db = 0.0;
    s.class1_tempo_factor = 1.0;
    return s;
}

SynthSpec pitch_only_spec() {
    SynthSpec s = null_spec();
    s.class1_pitch_range = 0.0;
    s.max_harmonic_hz = 600.0;
    return s;
}

std::optional<RunResult> g_planted;

Outcome criterion_end_to_end(const fs::path& work) {
    Checker c;
    g_planted = run_corpus(planted_spec(), 7, work / "c7_planted", true, false);
    const RunResult& r = *g_planted;
    const double best_single = *std::max_element(r.single_acc.begin(), r.single_acc.end());
    c.expect(r.fusion_acc >= 0.9, "fusion ACC >= 0.90");
    c.expect(r.fusion_acc >= best_single, "fusion ACC >= best single");
    std::string singles;
    for (std::size_t k = 0; k < 4; ++k)
        singles += std::string(k ? " " : "") + to_string(kAllFeatures[k]) + " " + fmt(r.single_acc[k]);
    double total = r.seconds;
    std::string nulls;
    bool null_ok = true;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const RunResult n = run_corpus(null_spec(), seed, work / ("c7_null" + std::to_string(seed)), false, false);
        total += n.seconds;
        nulls += std::string(seed > 1 ? " " : "") + fmt(n.fusion_acc);
        null_ok = null_ok && std::abs(n.fusion_acc - 0.5) <= 0.12;
        fs::remove_all(work / ("c7_null" + std::to_string(seed)));
    }
    c.expect(null_ok, "null corpus ACC within 0.5 +/- 0.12 at every seed");
    c.expect(total < 30 * 60, "total under 30 min");
    c.note("fusion " + fmt(r.fusion_acc) + "; singles " + singles + "; null " + nulls + "; " + fmt(total, 0) + " s");
    return c.outcome();
}

Outcome criterion_ablation(const fs::path& work) {
    Checker c;
    const std::size_t hsf = static_cast<std::size_t>(FeatureKind::Hsf);
    double total = 0.0, fusion_sum = 0.0, without_sum = 0.0;
    std::string per_seed;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const RunResult r = run_corpus(pitch_only_spec(), seed, work / ("c8_seed" + std::to_string(seed)), false, true);
        total += r.seconds;
        fusion_sum += r.fusion_acc;
        without_sum += r.ablation_acc[hsf];
        per_seed += std::string(seed > 1 ? " " : "") + fmt(r.fusion_acc) + "/" + fmt(r.ablation_acc[hsf]);
        fs::remove_all(work / ("c8_seed" + std::to_string(seed)));
    }
    const double drop = (fusion_sum - without_sum) / 5.0;
    c.expect(drop >= 0.1, "mean ACC drop without HSF >= 0.1");
    c.expect(total < 45 * 60, "under 45 min");
    c.note("fusion/without_hsf per seed " + per_seed + "; mean drop " + fmt(drop) + "; " + fmt(total, 0) + " s");
    return c.outcome();
}

Outcome criterion_determinism(const fs::path& work) {
    Checker c;
    if (!g_planted) g_planted = run_corpus(planted_spec(), 7, work / "c7_planted", true, false);
    const RunResult again = run_corpus(planted_spec(), 7, work / "c10_rerun", true, false);
    c.expect(again.reports.size() == g_planted->reports.size(), "same report set");
    std::size_t identical = 0;
    for (std::size_t i = 0; i < std::min(again.reports.size(), g_planted->reports.size()); ++i) {
        const std::string a = read_text_file(work / "c7_planted" / "reports" / (g_planted->reports[i].name + ".csv"));
        const std::string b = read_text_file(work / "c10_rerun" / "reports" / (again.reports[i].name + ".csv"));
        c.expect(a == b, g_planted->reports[i].name + ".csv byte-identical");
        identical += a == b;
    }
    c.note(std::to_string(identical) + "/" + std::to_string(again.reports.size()) + " report CSVs byte-identical");
    return c.outcome();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria runner"};
    std::vector<int> only;
    std::string work = (fs::temp_directory_path() / "abaf_acceptance").string();
    app.add_option("--only", only, "Run only these criteria")->delimiter(',')->check(CLI::Range(1, 10));
    app.add_option("--work", work, "Scratch directory for end-to-end runs")->capture_default_str();
    CLI11_PARSE(app, argc, argv);
    set_log_level(LogLevel::Warn);

    const std::vector<std::pair<std::string, std::function<Outcome(const fs::path&)>>> criteria = {
        {"HSF cardinality 6552 = 56 x 3 x 39", criterion_hsf_cardinality},
        {"parameter counts 37376 / 1048576 / 12850400", criterion_param_counts},
        {"finite-difference gradients < 1e-4 at 3 seeds", criterion_gradients},
        {"DSP oracles", criterion_dsp},
        {"VAD boundaries within 2 hops, gain invariant", criterion_vad},
        {"statistics oracles", criterion_stats},
        {"end-to-end planted and null corpora", criterion_end_to_end},
        {"ablation drop >= 0.1 on pitch-only corpus", criterion_ablation},
        {"WAM properties", criterion_wam},
        {"determinism of criterion 7 report CSVs", criterion_determinism},
    };
    fs::create_directories(work);
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = criteria[i].second(work);
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << criteria[i].first << " ["
                  << fmt(secs, 1) << " s] " << o.detail << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
