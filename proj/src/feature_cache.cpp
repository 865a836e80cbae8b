#include "abaf/feature_cache.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "abaf/error.hpp"

namespace abaf {

namespace {

class Writer {
public:
    void u8(std::uint8_t v) { bytes_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        bytes_.insert(bytes_.end(), b, b + n);
    }
    const std::vector<std::uint8_t>& bytes() const { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
};

class Reader {
public:
    explicit Reader(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}

    std::uint8_t u8() { return take(1)[0]; }
    std::uint32_t u32() {
        const auto* p = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[i]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        const auto* p = take(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str(std::size_t n) {
        const auto* p = take(n);
        return std::string(reinterpret_cast<const char*>(p), n);
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    const std::uint8_t* take(std::size_t n) {
        require(pos_ + n <= bytes_.size(), ErrorCode::MalformedHeader, "feature cache entry truncated",
                "cache");
        const auto* p = bytes_.data() + pos_;
        pos_ += n;
        return p;
    }
    std::vector<std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

void write_image(Writer& w, const FeatureImage& img) {
    w.u8(static_cast<std::uint8_t>(img.kind));
    w.u32(static_cast<std::uint32_t>(img.channels));
    w.u32(static_cast<std::uint32_t>(img.height));
    w.u32(static_cast<std::uint32_t>(img.width));
    for (double v : img.pixels) w.f64(v);
}

FeatureImage read_image(Reader& r) {
    FeatureImage img;
    const std::uint8_t kind = r.u8();
    require(kind <= 2, ErrorCode::MalformedHeader, "unknown image kind", "cache");
    img.kind = static_cast<ImageKind>(kind);
    img.channels = r.u32();
    img.height = r.u32();
    img.width = r.u32();
    img.pixels.resize(img.channels * img.height * img.width);
    for (double& v : img.pixels) v = r.f64();
    return img;
}

}  // namespace

std::filesystem::path feature_cache_path(const std::string& subject_id, std::uint64_t config_hash,
                                         const std::filesystem::path& cache_dir) {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(config_hash));
    return cache_dir / (subject_id + "." + hex + ".abfc");
}

std::filesystem::path store_feature_bundle(const std::string& subject_id, const FeatureBundle& bundle,
                                           std::uint64_t config_hash,
                                           const std::filesystem::path& cache_dir) {
    std::error_code ec;
    std::filesystem::create_directories(cache_dir, ec);
    require(std::filesystem::is_directory(cache_dir), ErrorCode::IoFailure,
            "cannot create " + cache_dir.string(), "cache_dir");

    Writer w;
    w.raw("ABFC", 4);
    w.u8(kFeatureCacheVersion);
    w.u64(config_hash);
    w.u32(static_cast<std::uint32_t>(subject_id.size()));
    w.raw(subject_id.data(), subject_id.size());
    write_image(w, bundle.envelope_img);
    write_image(w, bundle.spectro_img);
    write_image(w, bundle.mel_img);
    w.u32(static_cast<std::uint32_t>(bundle.hsf.values.size()));
    for (double v : bundle.hsf.values) w.f64(v);

    const auto path = feature_cache_path(subject_id, config_hash, cache_dir);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(static_cast<bool>(out), ErrorCode::IoFailure, "cannot write " + tmp.string(), "cache_dir");
        out.write(reinterpret_cast<const char*>(w.bytes().data()), static_cast<std::streamsize>(w.bytes().size()));
        require(static_cast<bool>(out), ErrorCode::IoFailure, "write failed for " + tmp.string(), "cache_dir");
    }
    std::filesystem::rename(tmp, path);
    return path;
}

std::optional<FeatureBundle> load_feature_bundle(const std::string& subject_id, std::uint64_t config_hash,
                                                 const std::filesystem::path& cache_dir) {
    const auto path = feature_cache_path(subject_id, config_hash, cache_dir);
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    Reader r(std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
    require(r.str(4) == "ABFC", ErrorCode::MalformedHeader, "bad feature cache magic", "cache");
    require(r.u8() == kFeatureCacheVersion, ErrorCode::FormatVersion, "unsupported cache version", "cache");
    if (r.u64() != config_hash) return std::nullopt;
    const std::uint32_t id_len = r.u32();
    if (r.str(id_len) != subject_id) return std::nullopt;

    FeatureBundle b;
    b.envelope_img = read_image(r);
    b.spectro_img = read_image(r);
    b.mel_img = read_image(r);
    b.hsf.values.resize(r.u32());
    for (double& v : b.hsf.values) v = r.f64();
    require(r.done(), ErrorCode::MalformedHeader, "trailing bytes in cache entry", "cache");
    return b;
}

}  // namespace abaf
