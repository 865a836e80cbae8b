#include <cmath>
#include <fstream>

#include "abaf/audio.hpp"
#include "abaf/corpus.hpp"
#include "abaf/dsp.hpp"
#include "abaf/error.hpp"
#include "abaf/feature_cache.hpp"
#include "abaf/text_io.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace abaf;
namespace fs = std::filesystem;

namespace {

std::vector<unsigned char> read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& b) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an abaf::Error");
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_SUITE("corpus") {
TEST_CASE("wav round trip is lossless on PCM16 values") {
    const auto dir = test_support::scratch_dir("wav");
    AudioClip clip{std::vector<double>(16000), 16000};
    for (std::size_t i = 0; i < clip.size(); ++i)
        clip.samples[i] = std::round(20000.0 * std::sin(0.01 * i)) / 32768.0;
    clip.samples[5] = -1.0;
    write_wav(dir / "a.wav", clip);
    const AudioClip back = read_wav(dir / "a.wav");
    CHECK(back.sample_rate == 16000);
    REQUIRE(back.size() == 16000);
    CHECK(back.samples == clip.samples);
}

TEST_CASE("all-zero wav reads as exact zeros") {
    const auto dir = test_support::scratch_dir("wav0");
    write_wav(dir / "z.wav", AudioClip{std::vector<double>(321, 0.0), 8000});
    const AudioClip z = read_wav(dir / "z.wav");
    CHECK(z.size() == 321);
    for (double v : z.samples) CHECK(v == 0.0);
}

TEST_CASE("stereo is mean-downmixed") {
    const auto dir = test_support::scratch_dir("stereo");
    auto bytes = encode_wav(AudioClip{std::vector<double>(4, 0.0), 16000});
    // Rewrite as 2 channels with frames (1000, 3000) and (-2000, 0).
    bytes[22] = 2;
    const std::uint32_t byte_rate = 16000 * 4;
    for (int i = 0; i < 4; ++i) bytes[28 + i] = static_cast<unsigned char>(byte_rate >> (8 * i));
    bytes[32] = 4;
    const std::int16_t s[4] = {1000, 3000, -2000, 0};
    for (int i = 0; i < 4; ++i) {
        const auto u = static_cast<std::uint16_t>(s[i]);
        bytes[44 + 2 * i] = static_cast<unsigned char>(u & 0xff);
        bytes[45 + 2 * i] = static_cast<unsigned char>(u >> 8);
    }
    write_bytes(dir / "s.wav", bytes);
    const AudioClip c = read_wav(dir / "s.wav");
    REQUIRE(c.size() == 2);
    CHECK(c.samples[0] == doctest::Approx(2000.0 / 32768.0));
    CHECK(c.samples[1] == doctest::Approx(-1000.0 / 32768.0));
}

TEST_CASE("wav errors carry distinct codes and fields") {
    const auto dir = test_support::scratch_dir("wavbad");
    CHECK(code_of([&] { read_wav(dir / "missing.wav"); }) == ErrorCode::MissingFile);

    auto bytes = encode_wav(AudioClip{std::vector<double>(100, 0.0), 16000});
    write_bytes(dir / "trunc.wav", {bytes.begin(), bytes.begin() + 20});
    CHECK(code_of([&] { read_wav(dir / "trunc.wav"); }) == ErrorCode::MalformedHeader);

    auto float_fmt = bytes;
    float_fmt[20] = 3;
    write_bytes(dir / "float.wav", float_fmt);
    try {
        read_wav(dir / "float.wav");
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnsupportedCodec);
        CHECK(e.field() == "audio_format");
    }
}

TEST_CASE("manifest parsing") {
    const auto dir = test_support::scratch_dir("manifest");
    write_text_file(dir / "m.csv", std::string(kManifestHeader) +
                                       "\na,a.wav,0,3,hamd17\nb,b.wav,1,20,hamd17\n");
    const auto m = load_manifest(dir / "m.csv", false);
    REQUIRE(m.records.size() == 2);
    CHECK(m.records[1].label == 1);
    CHECK(m.records[1].scale_score.value() == 20);
    CHECK(m.records[0].wav_path == dir / "a.wav");

    write_text_file(dir / "dup.csv", std::string(kManifestHeader) + "\na,a.wav,0,,synthetic\na,b.wav,1,,synthetic\n");
    CHECK(code_of([&] { load_manifest(dir / "dup.csv", false); }) == ErrorCode::DuplicateId);

    write_text_file(dir / "phq.csv", std::string(kManifestHeader) + "\na,a.wav,1,30,phq9\n");
    CHECK(code_of([&] { load_manifest(dir / "phq.csv", false); }) == ErrorCode::OutOfRange);

    write_text_file(dir / "col.csv", "subject_id,wav_path,label\na,a.wav,0\n");
    CHECK(code_of([&] { load_manifest(dir / "col.csv", false); }) == ErrorCode::MissingColumn);

    write_text_file(dir / "lab.csv", std::string(kManifestHeader) + "\na,a.wav,x,,synthetic\n");
    CHECK(code_of([&] { load_manifest(dir / "lab.csv", false); }) == ErrorCode::InvalidValue);

    write_text_file(dir / "band.csv", std::string(kManifestHeader) + "\na,a.wav,0,20,hamd17\n");
    CHECK(code_of([&] { load_manifest(dir / "band.csv", false); }) == ErrorCode::InvalidValue);

    CHECK(code_of([&] { load_manifest(dir / "m.csv", true); }) == ErrorCode::MissingFile);
}

TEST_CASE("band tables") {
    const auto h = hamd17_bands();
    CHECK(h.names[h.band_of(7)] == "NC");
    CHECK(h.names[h.band_of(8)] == "Mild");
    CHECK(h.names[h.band_of(17)] == "Moderate");
    CHECK(h.names[h.band_of(25)] == "Severe");
    const auto p = phq9_bands();
    CHECK(p.band_of(0) == 0);
    CHECK(p.band_of(4) == 1);
    CHECK(p.band_of(20) == 5);
    CHECK(label_from_score(ScaleKind::Phq9, 0) == 0);
    CHECK(label_from_score(ScaleKind::Phq9, 1) == 1);
}

TEST_CASE("synthetic corpus is byte-deterministic") {
    SynthSpec spec;
    spec.n_per_class = 3;
    spec.duration_s = 1.0;
    spec.class1_pitch_shift = -30;
    spec.class1_tilt_db = -3;
    spec.class1_tempo_factor = 0.85;
    const auto d1 = test_support::scratch_dir("synth1");
    const auto d2 = test_support::scratch_dir("synth2");
    const auto m1 = generate_synthetic_corpus(spec, 7, d1);
    const auto m2 = generate_synthetic_corpus(spec, 7, d2);
    REQUIRE(m1.records.size() == 6);
    for (std::size_t i = 0; i < m1.records.size(); ++i) {
        CHECK(m1.records[i].subject_id == m2.records[i].subject_id);
        CHECK(read_bytes(m1.records[i].wav_path) == read_bytes(m2.records[i].wav_path));
    }
    CHECK(read_bytes(d1 / "manifest.csv") == read_bytes(d2 / "manifest.csv"));
    const auto loaded = load_manifest(d1 / "manifest.csv");
    CHECK(loaded.labels() == m1.labels());
    const AudioClip c = read_wav(m1.records[0].wav_path);
    CHECK(c.sample_rate == 16000);
    CHECK(c.size() == 16000);

    const auto d3 = test_support::scratch_dir("synth3");
    const auto m3 = generate_synthetic_corpus(spec, 8, d3);
    CHECK(read_bytes(m3.records[0].wav_path) != read_bytes(m1.records[0].wav_path));
}

TEST_CASE("synthetic pitch range and voice bandwidth") {
    SynthSpec spec;
    spec.n_per_class = 1;
    spec.duration_s = 1.0;
    const auto base = generate_synthetic_corpus(spec, 3, test_support::scratch_dir("synth_base"));
    SynthSpec flat = spec;
    flat.class1_pitch_range = 0.0;
    const auto mono = generate_synthetic_corpus(flat, 3, test_support::scratch_dir("synth_flat"));
    for (std::size_t i = 0; i < base.records.size(); ++i) {
        const bool same = read_bytes(base.records[i].wav_path) == read_bytes(mono.records[i].wav_path);
        CHECK(same == (base.records[i].label == 0));
    }

    SynthSpec narrow = spec;
    narrow.max_harmonic_hz = 1000.0;
    narrow.noise_db = -90.0;
    const auto m = generate_synthetic_corpus(narrow, 3, test_support::scratch_dir("synth_narrow"));
    const AudioClip c = read_wav(m.records[0].wav_path);
    std::vector<double> frame(c.samples.begin() + 4000, c.samples.begin() + 4000 + 8192);
    const auto spectrum = rfft(frame);
    double low = 0.0, high = 0.0;
    for (std::size_t k = 0; k < spectrum.size(); ++k) {
        const double hz = 16000.0 * static_cast<double>(k) / 8192.0;
        (hz < 1300.0 ? low : high) += std::norm(spectrum[k]);
    }
    CHECK(high < 1e-3 * low);

    narrow.max_harmonic_hz = 9000.0;
    CHECK(code_of([&] { narrow.validate(); }) == ErrorCode::InvalidArgument);
    flat.class1_pitch_range = -1.0;
    CHECK(code_of([&] { flat.validate(); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("feature cache round trip, miss and replace") {
    const auto dir = test_support::scratch_dir("cache");
    FeatureBundle b;
    b.envelope_img = FeatureImage{1, 2, 3, {0.1, 0.2, 0.3, 0.4, 0.5, 1.0 / 3.0}, ImageKind::Envelope};
    b.spectro_img = FeatureImage{2, 1, 1, {1e-300, -0.0}, ImageKind::Spectrogram};
    b.mel_img = FeatureImage{1, 1, 2, {7.0, 8.0}, ImageKind::Mel};
    b.hsf.values = {1.5, -2.25, 3.0e10};
    const auto path = store_feature_bundle("s1", b, 0xabcdefULL, dir);
    CHECK(fs::exists(path));
    const auto back = load_feature_bundle("s1", 0xabcdefULL, dir);
    REQUIRE(back.has_value());
    CHECK(back->envelope_img.pixels == b.envelope_img.pixels);
    CHECK(back->spectro_img.channels == 2);
    CHECK(std::signbit(back->spectro_img.pixels[1]));
    CHECK(back->mel_img.kind == ImageKind::Mel);
    CHECK(back->hsf.values == b.hsf.values);

    CHECK_FALSE(load_feature_bundle("s1", 0x123ULL, dir).has_value());
    CHECK_FALSE(load_feature_bundle("nobody", 0xabcdefULL, dir).has_value());

    b.hsf.values = {9.0};
    store_feature_bundle("s1", b, 0xabcdefULL, dir);
    CHECK(load_feature_bundle("s1", 0xabcdefULL, dir)->hsf.values == std::vector<double>{9.0});
    std::size_t entries = 0;
    for (const auto& e : fs::directory_iterator(dir)) entries += e.path().filename().string().rfind("s1.", 0) == 0;
    CHECK(entries == 1);
}
}
