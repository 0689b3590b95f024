#include "decayrate/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>

#include "decayrate/errors.hpp"

namespace decayrate {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
           (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

struct Format {
    std::uint16_t tag = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t block_align = 0;
    std::uint16_t bits = 0;
};

WavEncoding resolve_encoding(const Format& fmt) {
    if (fmt.tag == kFormatPcm) {
        switch (fmt.bits) {
            case 16: return WavEncoding::Pcm16;
            case 24: return WavEncoding::Pcm24;
            case 32: return WavEncoding::Pcm32;
            default: break;
        }
    } else if (fmt.tag == kFormatFloat) {
        if (fmt.bits == 32) return WavEncoding::Float32;
        if (fmt.bits == 64) return WavEncoding::Float64;
    }
    throw FormatError("chunk 'fmt ': unsupported encoding (format tag " + std::to_string(fmt.tag) + ", " +
                      std::to_string(fmt.bits) + " bits)");
}

double decode_sample(const std::uint8_t* p, WavEncoding enc) {
    switch (enc) {
        case WavEncoding::Pcm16: {
            const auto v = static_cast<std::int16_t>(static_cast<std::uint16_t>(p[0] | (p[1] << 8)));
            return v / 32768.0;
        }
        case WavEncoding::Pcm24: {
            std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
            if (v & 0x800000) v -= 0x1000000;
            return v / 8388608.0;
        }
        case WavEncoding::Pcm32: {
            const auto u = static_cast<std::uint32_t>(p[0] | (p[1] << 8) | (p[2] << 16)) |
                           (static_cast<std::uint32_t>(p[3]) << 24);
            return static_cast<std::int32_t>(u) / 2147483648.0;
        }
        case WavEncoding::Float32: {
            std::uint32_t u = 0;
            for (int i = 3; i >= 0; --i) u = (u << 8) | p[i];
            return static_cast<double>(std::bit_cast<float>(u));
        }
        case WavEncoding::Float64: {
            std::uint64_t u = 0;
            for (int i = 7; i >= 0; --i) u = (u << 8) | p[i];
            return std::bit_cast<double>(u);
        }
    }
    return 0.0;
}

}  // namespace

WavFile parse_wav(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw FormatError("chunk 'RIFF': not a RIFF/WAVE file");

    std::optional<Format> fmt;
    std::span<const std::uint8_t> data;
    bool have_data = false;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::string id(reinterpret_cast<const char*>(bytes.data() + pos), 4);
        const std::uint32_t size = read_u32(bytes, pos + 4);
        const std::size_t body = pos + 8;
        if (body + size > bytes.size()) {
            if (id != "data") throw FormatError("chunk '" + id + "': truncated");
        }
        const std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
        if (id == "fmt ") {
            if (avail < 16) throw FormatError("chunk 'fmt ': too short");
            Format f;
            f.tag = read_u16(bytes, body);
            f.channels = read_u16(bytes, body + 2);
            f.sample_rate = read_u32(bytes, body + 4);
            f.block_align = read_u16(bytes, body + 12);
            f.bits = read_u16(bytes, body + 14);
            if (f.tag == kFormatExtensible) {
                if (avail < 26) throw FormatError("chunk 'fmt ': extensible header too short");
                f.tag = read_u16(bytes, body + 24);  // first two bytes of the subformat GUID
            }
            fmt = f;
        } else if (id == "data") {
            data = bytes.subspan(body, avail);
            have_data = true;
        }
        pos = body + size + (size & 1u);
    }
    if (!fmt) throw FormatError("chunk 'fmt ': missing");
    if (!have_data) throw FormatError("chunk 'data': missing");
    if (fmt->channels == 0) throw FormatError("chunk 'fmt ': zero channels");
    if (fmt->sample_rate == 0) throw FormatError("chunk 'fmt ': zero sample rate");

    const WavEncoding enc = resolve_encoding(*fmt);
    const std::size_t bytes_per_sample = fmt->bits / 8u;
    const std::size_t frame = bytes_per_sample * fmt->channels;
    if (fmt->block_align != frame) throw FormatError("chunk 'fmt ': block align does not match channels x bits");
    const std::size_t frames = data.size() / frame;
    if (frames == 0) throw FormatError("chunk 'data': no samples");

    std::vector<double> samples(frames);
    for (std::size_t i = 0; i < frames; ++i) samples[i] = decode_sample(data.data() + i * frame, enc);
    WavFile out{SampledSignal(std::move(samples), fmt->sample_rate), enc, fmt->channels, fmt->channels > 1};
    return out;
}

WavFile load_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return parse_wav(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_wav(const SampledSignal& signal, WavEncoding encoding) {
    if (encoding != WavEncoding::Pcm16 && encoding != WavEncoding::Float32)
        throw ParameterError("only 16-bit PCM and 32-bit float output are supported");
    const double rate = signal.sample_rate_hz();
    if (rate != std::round(rate) || rate > 4294967295.0)
        throw ParameterError("sample rate must be an integral number of Hz to be stored as WAV");

    const std::uint16_t bits = encoding == WavEncoding::Pcm16 ? 16 : 32;
    const std::uint16_t block = bits / 8;
    const auto data_bytes = static_cast<std::uint32_t>(signal.size() * block);

    std::vector<std::uint8_t> out;
    out.reserve(44 + data_bytes);
    put_tag(out, "RIFF");
    put_u32(out, 36 + data_bytes);
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put_u32(out, 16);
    put_u16(out, encoding == WavEncoding::Pcm16 ? kFormatPcm : kFormatFloat);
    put_u16(out, 1);
    put_u32(out, static_cast<std::uint32_t>(rate));
    put_u32(out, static_cast<std::uint32_t>(rate) * block);
    put_u16(out, block);
    put_u16(out, bits);
    put_tag(out, "data");
    put_u32(out, data_bytes);
    for (const double x : signal.samples()) {
        if (encoding == WavEncoding::Pcm16) {
            const double q = std::clamp(std::round(x * 32768.0), -32768.0, 32767.0);
            put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
        } else {
            put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
        }
    }
    return out;
}

void save_wav(const std::filesystem::path& path, const SampledSignal& signal, WavEncoding encoding) {
    const auto bytes = encode_wav(signal, encoding);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace decayrate
