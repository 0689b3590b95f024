#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "decayrate/signal.hpp"

namespace decayrate {

enum class WavEncoding { Pcm16, Pcm24, Pcm32, Float32, Float64 };

struct WavFile {
    SampledSignal signal;  ///< first channel, normalized by format full scale
    WavEncoding encoding = WavEncoding::Pcm16;
    unsigned channels = 1;
    bool first_channel_only = false;  ///< set when channels > 1
};

/// Parses a RIFF/WAVE image. Accepts linear PCM 16/24/32-bit and IEEE float
/// 32/64-bit, plain or WAVE_FORMAT_EXTENSIBLE. Throws FormatError naming the
/// offending chunk.
WavFile parse_wav(std::span<const std::uint8_t> bytes);
WavFile load_wav(const std::filesystem::path& path);

/// Encodes mono samples. Pcm16 maps x to round(32768 x), clamped to the
/// 16-bit range; Float32 stores the values directly.
std::vector<std::uint8_t> encode_wav(const SampledSignal& signal, WavEncoding encoding = WavEncoding::Pcm16);
void save_wav(const std::filesystem::path& path, const SampledSignal& signal,
              WavEncoding encoding = WavEncoding::Pcm16);

}  // namespace decayrate
