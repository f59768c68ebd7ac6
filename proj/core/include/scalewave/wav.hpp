#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scalewave/tensor.hpp"

namespace scalewave {

// 16-bit PCM RIFF/WAVE clip; samples deinterleaved to [channels, frames] as
// floats in [-1, 1) (value = pcm / 32768).
struct WavClip {
    std::uint32_t sample_rate = 22050;
    Tensor samples;  // [channels, frames]

    std::int64_t channels() const { return samples.dim(0); }
    std::int64_t frames() const { return samples.dim(1); }
};

WavClip read_wav(const std::vector<std::uint8_t>& bytes);
WavClip read_wav_file(const std::string& path);

std::vector<std::uint8_t> write_wav(const WavClip& clip);
void write_wav_file(const WavClip& clip, const std::string& path);

// Zero-pads (or leaves alone) the frame axis up to `frames`.
Tensor zero_pad_to(const Tensor& samples, std::int64_t frames);

}  // namespace scalewave
