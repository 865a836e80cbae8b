#include "abaf/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "abaf/error.hpp"

namespace abaf {

namespace {

std::uint32_t le32(const unsigned char* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}

std::uint16_t le16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

void put16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_tag(std::vector<unsigned char>& out, const char* tag) {
    out.insert(out.end(), tag, tag + 4);
}

}  // namespace

AudioClip read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::MissingFile, "cannot open " + path.string(), "path");
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                           std::istreambuf_iterator<char>());

    require(bytes.size() >= 12, ErrorCode::MalformedHeader, "file shorter than RIFF header", "RIFF");
    require(std::memcmp(bytes.data(), "RIFF", 4) == 0, ErrorCode::MalformedHeader,
            "missing RIFF tag", "RIFF");
    require(std::memcmp(bytes.data() + 8, "WAVE", 4) == 0, ErrorCode::MalformedHeader,
            "missing WAVE tag", "WAVE");

    bool have_fmt = false;
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    const unsigned char* data = nullptr;
    std::size_t data_len = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* chunk = bytes.data() + pos;
        const std::uint32_t len = le32(chunk + 4);
        const std::size_t body = pos + 8;
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            require(len >= 16 && body + 16 <= bytes.size(), ErrorCode::MalformedHeader,
                    "fmt chunk truncated", "fmt");
            format = le16(bytes.data() + body);
            channels = le16(bytes.data() + body + 2);
            rate = le32(bytes.data() + body + 4);
            bits = le16(bytes.data() + body + 14);
            have_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            require(have_fmt, ErrorCode::MalformedHeader, "data chunk before fmt chunk", "fmt");
            require(body + len <= bytes.size(), ErrorCode::MalformedHeader,
                    "data chunk length exceeds file size", "data");
            data = bytes.data() + body;
            data_len = len;
            break;
        }
        pos = body + len + (len & 1u);
    }
    require(have_fmt, ErrorCode::MalformedHeader, "no fmt chunk", "fmt");
    require(data != nullptr, ErrorCode::MalformedHeader, "no data chunk", "data");
    require(format == 1, ErrorCode::UnsupportedCodec,
            "audio format " + std::to_string(format) + " is not PCM", "audio_format");
    require(bits == 16, ErrorCode::UnsupportedCodec,
            std::to_string(bits) + "-bit samples are not supported", "bits_per_sample");
    require(channels == 1 || channels == 2, ErrorCode::UnsupportedCodec,
            std::to_string(channels) + " channels are not supported", "channels");
    require(rate > 0, ErrorCode::MalformedHeader, "zero sample rate", "sample_rate");

    const std::size_t frames = data_len / (2u * channels);
    AudioClip clip;
    clip.sample_rate = static_cast<int>(rate);
    clip.samples.resize(frames);
    for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
            const auto raw = static_cast<std::int16_t>(le16(data + 2 * (i * channels + c)));
            acc += raw / 32768.0;
        }
        clip.samples[i] = acc / channels;
    }
    return clip;
}

std::vector<unsigned char> encode_wav(const AudioClip& clip) {
    require(clip.sample_rate > 0, ErrorCode::InvalidArgument, "sample rate must be positive",
            "sample_rate");
    const auto data_len = static_cast<std::uint32_t>(clip.samples.size() * 2);
    std::vector<unsigned char> out;
    out.reserve(44 + data_len);
    put_tag(out, "RIFF");
    put32(out, 36 + data_len);
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put32(out, 16);
    put16(out, 1);
    put16(out, 1);
    put32(out, static_cast<std::uint32_t>(clip.sample_rate));
    put32(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
    put16(out, 2);
    put16(out, 16);
    put_tag(out, "data");
    put32(out, data_len);
    for (double s : clip.samples) {
        const double scaled = std::clamp(std::nearbyint(s * 32768.0), -32768.0, 32767.0);
        put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
    }
    return out;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
    const auto bytes = encode_wav(clip);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::IoFailure, "cannot write " + path.string(), "path");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(out), ErrorCode::IoFailure, "write failed for " + path.string(), "path");
}

}  // namespace abaf
