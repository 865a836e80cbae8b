#include "abaf/pipeline.hpp"

#include <atomic>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "abaf/audio.hpp"
#include "abaf/error.hpp"
#include "abaf/feature_cache.hpp"
#include "abaf/log.hpp"
#include "abaf/rng.hpp"
#include "abaf/text_io.hpp"

namespace abaf {

std::string to_string(Profile p) { return p == Profile::Paper ? "paper" : "desk"; }

Profile parse_profile(const std::string& s) {
    if (s == "paper") return Profile::Paper;
    if (s == "desk") return Profile::Desk;
    fail(ErrorCode::InvalidArgument, "unknown profile '" + s + "' (paper, desk)", "profile");
}

PipelineConfig PipelineConfig::desk() {
    PipelineConfig c;
    c.profile = Profile::Desk;
    c.experiment.train.max_epochs = 30;
    c.experiment.fusion_train.max_epochs = 30;
    c.synth.class1_pitch_shift = -30.0;
    c.synth.class1_tilt_db = -3.0;
    c.synth.class1_tempo_factor = 0.85;
    c.resolve();
    return c;
}

PipelineConfig PipelineConfig::paper() {
    PipelineConfig c;
    c.profile = Profile::Paper;
    c.extraction.image_side = 224;
    c.extraction.image_channels = 3;
    c.experiment.image.seq_tokens = 56;
    c.experiment.image.lstm_hidden = 128;
    c.experiment.num.lstm_hidden = 291;
    c.experiment.fusion.lstm_hidden = 128;
    c.experiment.train.max_epochs = 100;
    c.experiment.fusion_train.max_epochs = 100;
    c.synth.class1_pitch_shift = -30.0;
    c.synth.class1_tilt_db = -3.0;
    c.synth.class1_tempo_factor = 0.85;
    c.resolve();
    return c;
}

PipelineConfig PipelineConfig::for_profile(Profile p) { return p == Profile::Paper ? paper() : desk(); }

void PipelineConfig::resolve() {
    experiment.image.in_channels = extraction.image_channels;
    experiment.image.image_side = extraction.image_side;
    experiment.num.input_dim = experiment.hsf_top_k;
    if (!experiment.image.fc_sizes.empty()) experiment.fusion.token_dim = experiment.image.fc_sizes.front();
    experiment.seed = seed;
    analysis.rf.seed = seed;
}

void PipelineConfig::validate() const {
    preprocess.vad.validate();
    extraction.validate();
    experiment.validate();
    experiment.num.validate();
    synth.validate();
    analysis.rf.validate();
    require(experiment.image.fc_sizes.front() == experiment.num.fc_sizes.front(), ErrorCode::InvalidArgument,
            "image and numeric sub-models must share the embedding width", "num_model.fc_sizes");
    require(experiment.hsf_top_k <= kHsfLength, ErrorCode::InvalidArgument, "hsf_top_k exceeds the HSF length",
            "experiment.hsf_top_k");
    require(subtype_repeats >= 1, ErrorCode::InvalidArgument, "subtype.repeats must be >= 1", "subtype.repeats");
    require(!sweep_thresholds.empty(), ErrorCode::InvalidArgument, "sweep.thresholds is empty", "sweep.thresholds");
}

namespace {

struct Field {
    const char* key;
    std::function<std::string(const PipelineConfig&)> get;
    std::function<void(PipelineConfig&, const std::string&)> set;
};

std::string str_size(std::size_t v) { return std::to_string(v); }

std::size_t to_size(const std::string& s, const std::string& key) {
    const long long v = parse_int(s, key);
    require(v >= 0, ErrorCode::InvalidValue, "expected a non-negative integer", key);
    return static_cast<std::size_t>(v);
}

bool to_bool(const std::string& v, const std::string& key) {
    KeyValueConfig kv;
    kv.set(key, v);
    return kv.get_bool(key);
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}

std::vector<std::size_t> to_sizes(const std::string& s, const std::string& key) {
    std::vector<std::size_t> out;
    for (const auto& part : split(s, ',')) out.push_back(to_size(trim(part), key));
    return out;
}

std::vector<int> to_ints(const std::string& s, const std::string& key) {
    std::vector<int> out;
    for (const auto& part : split(s, ',')) out.push_back(static_cast<int>(parse_int(trim(part), key)));
    return out;
}

#define ABAF_SIZE(KEY, MEMBER)                                                              \
    Field {                                                                                 \
        KEY, [](const PipelineConfig& c) { return str_size(c.MEMBER); },                   \
            [](PipelineConfig& c, const std::string& v) { c.MEMBER = to_size(v, KEY); }    \
    }
#define ABAF_DOUBLE(KEY, MEMBER)                                                            \
    Field {                                                                                 \
        KEY, [](const PipelineConfig& c) { return format_double(c.MEMBER); },              \
            [](PipelineConfig& c, const std::string& v) { c.MEMBER = parse_double(v, KEY); } \
    }
#define ABAF_INT(KEY, MEMBER)                                                                             \
    Field {                                                                                               \
        KEY, [](const PipelineConfig& c) { return std::to_string(c.MEMBER); },                           \
            [](PipelineConfig& c, const std::string& v) { c.MEMBER = static_cast<int>(parse_int(v, KEY)); } \
    }
#define ABAF_BOOL(KEY, MEMBER)                                                            \
    Field {                                                                               \
        KEY, [](const PipelineConfig& c) { return std::string(c.MEMBER ? "true" : "false"); }, \
            [](PipelineConfig& c, const std::string& v) { c.MEMBER = to_bool(v, KEY); }   \
    }
#define ABAF_SIZES(KEY, MEMBER)                                                             \
    Field {                                                                                 \
        KEY, [](const PipelineConfig& c) { return join(c.MEMBER); },                       \
            [](PipelineConfig& c, const std::string& v) { c.MEMBER = to_sizes(v, KEY); }   \
    }

const std::vector<Field>& fields() {
    static const std::vector<Field> f = {
        Field{"profile", [](const PipelineConfig& c) { return to_string(c.profile); },
              [](PipelineConfig& c, const std::string& v) { c.profile = parse_profile(v); }},
        Field{"seed", [](const PipelineConfig& c) { return std::to_string(c.seed); },
              [](PipelineConfig& c, const std::string& v) {
                  const long long s = parse_int(v, "seed");
                  require(s >= 0, ErrorCode::InvalidValue, "seed must be >= 0", "seed");
                  c.seed = static_cast<std::uint64_t>(s);
              }},
        Field{"paths.corpus", [](const PipelineConfig& c) { return c.corpus_dir.string(); },
              [](PipelineConfig& c, const std::string& v) { c.corpus_dir = v; }},
        Field{"paths.cache", [](const PipelineConfig& c) { return c.cache_dir.string(); },
              [](PipelineConfig& c, const std::string& v) { c.cache_dir = v; }},
        Field{"paths.out", [](const PipelineConfig& c) { return c.out_dir.string(); },
              [](PipelineConfig& c, const std::string& v) { c.out_dir = v; }},
        ABAF_INT("preprocess.target_sr", preprocess.target_sr),
        ABAF_DOUBLE("preprocess.frame_ms", preprocess.frame_ms),
        ABAF_DOUBLE("preprocess.hop_ms", preprocess.hop_ms),
        Field{"preprocess.window", [](const PipelineConfig& c) { return to_string(c.preprocess.window); },
              [](PipelineConfig& c, const std::string& v) { c.preprocess.window = parse_window_kind(v); }},
        ABAF_BOOL("preprocess.enable_vad", preprocess.enable_vad),
        ABAF_DOUBLE("preprocess.vad.ht_frac", preprocess.vad.ht_frac),
        ABAF_DOUBLE("preprocess.vad.lt_frac", preprocess.vad.lt_frac),
        ABAF_BOOL("preprocess.vad.zcr_extend", preprocess.vad.zcr_extend),
        ABAF_DOUBLE("preprocess.vad.min_segment_ms", preprocess.vad.min_segment_ms),
        ABAF_INT("extraction.sample_rate", extraction.sample_rate),
        ABAF_DOUBLE("extraction.envelope_lp_ms", extraction.envelope_lp_ms),
        ABAF_SIZE("extraction.spectro_n_fft", extraction.spectro_n_fft),
        ABAF_SIZE("extraction.spectro_hop", extraction.spectro_hop),
        ABAF_SIZE("extraction.image_n_mels", extraction.image_n_mels),
        ABAF_SIZE("extraction.lld_frame", extraction.lld_frame),
        ABAF_SIZE("extraction.lld_hop", extraction.lld_hop),
        ABAF_SIZE("extraction.lld_n_mels", extraction.lld_n_mels),
        ABAF_SIZE("extraction.n_mfcc", extraction.n_mfcc),
        ABAF_DOUBLE("extraction.f0_min", extraction.f0_min),
        ABAF_DOUBLE("extraction.f0_max", extraction.f0_max),
        ABAF_DOUBLE("extraction.voicing_threshold", extraction.voicing_threshold),
        ABAF_SIZE("extraction.image_side", extraction.image_side),
        ABAF_SIZE("extraction.image_channels", extraction.image_channels),
        ABAF_SIZE("image_model.conv1_filters", experiment.image.conv1_filters),
        ABAF_SIZE("image_model.conv2_filters", experiment.image.conv2_filters),
        ABAF_SIZE("image_model.lstm_hidden", experiment.image.lstm_hidden),
        ABAF_SIZES("image_model.fc_sizes", experiment.image.fc_sizes),
        ABAF_DOUBLE("image_model.dropout_p", experiment.image.dropout_p),
        ABAF_SIZE("image_model.seq_tokens", experiment.image.seq_tokens),
        ABAF_SIZE("num_model.lstm_hidden", experiment.num.lstm_hidden),
        ABAF_SIZES("num_model.fc_sizes", experiment.num.fc_sizes),
        ABAF_DOUBLE("num_model.dropout_p", experiment.num.dropout_p),
        ABAF_SIZE("fusion.lstm_hidden", experiment.fusion.lstm_hidden),
        ABAF_SIZES("fusion.fc_sizes", experiment.fusion.fc_sizes),
        ABAF_DOUBLE("fusion.dropout_p", experiment.fusion.dropout_p),
        ABAF_BOOL("fusion.fine_tune", experiment.fine_tune),
        ABAF_SIZE("experiment.folds", experiment.folds),
        ABAF_DOUBLE("experiment.val_fraction", experiment.val_fraction),
        ABAF_SIZE("experiment.hsf_top_k", experiment.hsf_top_k),
        ABAF_DOUBLE("experiment.threshold", experiment.threshold),
        ABAF_SIZE("train.max_epochs", experiment.train.max_epochs),
        ABAF_SIZE("train.patience", experiment.train.patience),
        ABAF_SIZE("train.batch_size", experiment.train.batch_size),
        ABAF_DOUBLE("train.lr", experiment.train.lr),
        ABAF_SIZE("fusion_train.max_epochs", experiment.fusion_train.max_epochs),
        ABAF_SIZE("fusion_train.patience", experiment.fusion_train.patience),
        ABAF_SIZE("fusion_train.batch_size", experiment.fusion_train.batch_size),
        ABAF_DOUBLE("fusion_train.lr", experiment.fusion_train.lr),
        ABAF_DOUBLE("wam.alpha", experiment.wam.alpha),
        ABAF_DOUBLE("wam.beta", experiment.wam.beta),
        ABAF_DOUBLE("wam.gamma", experiment.wam.gamma),
        ABAF_DOUBLE("wam.delta", experiment.wam.delta),
        ABAF_DOUBLE("wam.epsilon", experiment.wam.epsilon),
        ABAF_INT("synth.n_per_class", synth.n_per_class),
        ABAF_DOUBLE("synth.duration_s", synth.duration_s),
        ABAF_DOUBLE("synth.pitch_shift_hz", synth.class1_pitch_shift),
        ABAF_DOUBLE("synth.tilt_db", synth.class1_tilt_db),
        ABAF_DOUBLE("synth.tempo_factor", synth.class1_tempo_factor),
        ABAF_DOUBLE("synth.pitch_range", synth.class1_pitch_range),
        ABAF_DOUBLE("synth.noise_db", synth.noise_db),
        ABAF_DOUBLE("synth.max_harmonic_hz", synth.max_harmonic_hz),
        ABAF_DOUBLE("analysis.alpha", analysis.alpha),
        Field{"analysis.filter",
              [](const PipelineConfig& c) {
                  return std::string(c.analysis.filter == SignificanceFilter::QValue ? "q" : "p");
              },
              [](PipelineConfig& c, const std::string& v) {
                  require(v == "q" || v == "p", ErrorCode::InvalidValue, "expected 'q' or 'p'", "analysis.filter");
                  c.analysis.filter = v == "q" ? SignificanceFilter::QValue : SignificanceFilter::PValue;
              }},
        ABAF_SIZE("analysis.rf.n_trees", analysis.rf.n_trees),
        ABAF_SIZE("analysis.rf.max_depth", analysis.rf.max_depth),
        ABAF_SIZE("analysis.rf.features_per_split", analysis.rf.features_per_split),
        ABAF_SIZE("analysis.rf.min_leaf", analysis.rf.min_leaf),
        ABAF_SIZE("subtype.repeats", subtype_repeats),
        Field{"sweep.thresholds", [](const PipelineConfig& c) { return join(c.sweep_thresholds); },
              [](PipelineConfig& c, const std::string& v) { c.sweep_thresholds = to_ints(v, "sweep.thresholds"); }},
    };
    return f;
}

#undef ABAF_SIZE
#undef ABAF_DOUBLE
#undef ABAF_INT
#undef ABAF_BOOL
#undef ABAF_SIZES

}  // namespace

KeyValueConfig PipelineConfig::to_kv() const {
    KeyValueConfig kv;
    for (const Field& f : fields()) kv.set(f.key, f.get(*this));
    return kv;
}

void PipelineConfig::apply(const KeyValueConfig& kv) {
    for (const auto& [key, value] : kv.entries()) {
        const Field* field = nullptr;
        for (const Field& f : fields())
            if (key == f.key) field = &f;
        require(field != nullptr, ErrorCode::InvalidArgument, "unknown config key '" + key + "'", key);
        if (key == "profile") continue;
        field->set(*this, value);
    }
    resolve();
}

PipelineConfig PipelineConfig::from_kv(const KeyValueConfig& kv) {
    PipelineConfig c = for_profile(kv.contains("profile") ? parse_profile(kv.at("profile")) : Profile::Desk);
    c.apply(kv);
    return c;
}

std::uint64_t PipelineConfig::extraction_hash() const {
    std::string text;
    const KeyValueConfig kv = to_kv();
    for (const auto& [k, v] : kv.entries())
        if (k.rfind("preprocess.", 0) == 0 || k.rfind("extraction.", 0) == 0) text += k + "=" + v + "\n";
    return fnv1a64(text);
}

namespace {

std::string hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

ExtractSummary extract_corpus(const CorpusManifest& manifest, const PipelineConfig& cfg,
                              const std::filesystem::path& cache_dir, std::size_t jobs) {
    cfg.validate();
    require(!manifest.records.empty(), ErrorCode::EmptyInput, "manifest has no subjects", "manifest");
    require(jobs >= 1, ErrorCode::InvalidArgument, "jobs must be >= 1", "jobs");
    std::filesystem::create_directories(cache_dir);
    const std::uint64_t hash = cfg.extraction_hash();
    const std::size_t n = manifest.records.size();

    std::vector<std::optional<std::vector<double>>> hsf(n);
    std::vector<std::string> failure(n);
    std::vector<char> reused(n, 0);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            const SubjectRecord& rec = manifest.records[i];
            try {
                if (auto cached = load_feature_bundle(rec.subject_id, hash, cache_dir)) {
                    hsf[i] = std::move(cached->hsf.values);
                    reused[i] = 1;
                    continue;
                }
                const AudioClip clip = preprocess_clip(read_wav(rec.wav_path), cfg.preprocess);
                FeatureBundle b = extract_bundle(clip, cfg.extraction);
                store_feature_bundle(rec.subject_id, b, hash, cache_dir);
                hsf[i] = std::move(b.hsf.values);
            } catch (const Error& e) {
                failure[i] = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < std::min(jobs, n); ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    ExtractSummary summary;
    std::ostringstream index, table;
    index << kIndexHeader << "\n";
    std::vector<std::string> header{"subject_id"};
    for (const auto& name : HsfVector::names()) header.push_back(name);
    table << csv_row(header);
    for (std::size_t i = 0; i < n; ++i) {
        const SubjectRecord& rec = manifest.records[i];
        if (!hsf[i]) {
            summary.skipped.push_back(rec.subject_id + ": " + failure[i]);
            log_warn("skipping " + rec.subject_id + ": " + failure[i]);
            continue;
        }
        (reused[i] ? summary.reused : summary.extracted) += 1;
        index << csv_row({rec.subject_id, std::to_string(rec.label),
                          rec.scale_score ? std::to_string(*rec.scale_score) : "", to_string(rec.scale_kind),
                          feature_cache_path(rec.subject_id, hash, cache_dir).filename().string()});
        std::vector<std::string> row{rec.subject_id};
        for (double v : *hsf[i]) row.push_back(format_double(v));
        table << csv_row(row);
    }
    require(summary.extracted + summary.reused > 0, ErrorCode::EmptyInput, "every subject failed preprocessing",
            "manifest");
    write_text_file(cache_dir / "index.csv", index.str());
    write_text_file(cache_dir / "hsf.csv", table.str());
    KeyValueConfig ext;
    const KeyValueConfig all = cfg.to_kv();
    for (const auto& [k, v] : all.entries())
        if (k.rfind("preprocess.", 0) == 0 || k.rfind("extraction.", 0) == 0) ext.set(k, v);
    write_text_file(cache_dir / "extraction.cfg", "# extraction hash " + hex16(hash) + "\n" + ext.serialize());
    return summary;
}

FeatureSet load_feature_set(const std::filesystem::path& cache_dir, const PipelineConfig& cfg) {
    const std::filesystem::path index_path = cache_dir / "index.csv";
    require(std::filesystem::exists(index_path), ErrorCode::MissingFile,
            "no index.csv in " + cache_dir.string() + " (run extract first)", "cache");
    const std::string text = read_text_file(index_path);
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    require(trim(line) == kIndexHeader, ErrorCode::MalformedHeader, "unexpected index.csv header", "index.csv");
    const std::uint64_t hash = cfg.extraction_hash();
    std::vector<SubjectRecord> records;
    std::vector<FeatureBundle> bundles;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto cells = parse_csv_row(trim(line));
        require(cells.size() == 5, ErrorCode::MalformedHeader, "index.csv row needs 5 cells", "index.csv");
        SubjectRecord rec;
        rec.subject_id = cells[0];
        rec.label = static_cast<int>(parse_int(cells[1], "label"));
        if (!cells[2].empty()) rec.scale_score = static_cast<int>(parse_int(cells[2], "scale_score"));
        rec.scale_kind = parse_scale_kind(cells[3]);
        auto bundle = load_feature_bundle(rec.subject_id, hash, cache_dir);
        require(bundle.has_value(), ErrorCode::MissingFile,
                "no cached features for '" + rec.subject_id + "' under the current extraction config (" +
                    feature_cache_path(rec.subject_id, hash, cache_dir).string() + ")",
                "cache");
        records.push_back(std::move(rec));
        bundles.push_back(std::move(*bundle));
    }
    return make_feature_set(records, bundles);
}

HsfTable load_hsf_csv(const std::filesystem::path& path) {
    require(std::filesystem::exists(path), ErrorCode::MissingFile, "missing " + path.string(), "hsf.csv");
    const std::string text = read_text_file(path);
    std::istringstream in(text);
    std::string line;
    HsfTable t;
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::MalformedHeader, "empty hsf.csv", "hsf.csv");
    auto header = parse_csv_row(trim(line));
    require(header.size() >= 2 && header[0] == "subject_id", ErrorCode::MalformedHeader,
            "hsf.csv must start with subject_id", "hsf.csv");
    t.names.assign(header.begin() + 1, header.end());
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto cells = parse_csv_row(trim(line));
        require(cells.size() == header.size(), ErrorCode::MalformedHeader, "hsf.csv row width differs", "hsf.csv");
        t.ids.push_back(cells[0]);
        std::vector<double> row;
        for (std::size_t j = 1; j < cells.size(); ++j) row.push_back(parse_double(cells[j], t.names[j - 1]));
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace abaf
