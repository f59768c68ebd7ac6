#include "scalewave/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace scalewave {

namespace {

std::uint32_t read_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<std::uint8_t>& v, std::uint32_t x) {
    v.push_back(static_cast<std::uint8_t>(x & 0xff));
    v.push_back(static_cast<std::uint8_t>((x >> 8) & 0xff));
    v.push_back(static_cast<std::uint8_t>((x >> 16) & 0xff));
    v.push_back(static_cast<std::uint8_t>((x >> 24) & 0xff));
}

void put_u16(std::vector<std::uint8_t>& v, std::uint16_t x) {
    v.push_back(static_cast<std::uint8_t>(x & 0xff));
    v.push_back(static_cast<std::uint8_t>((x >> 8) & 0xff));
}

void put_tag(std::vector<std::uint8_t>& v, const char* tag) {
    v.insert(v.end(), tag, tag + 4);
}

}  // namespace

WavClip read_wav(const std::vector<std::uint8_t>& bytes) {
    check(bytes.size() >= 12, ErrorCode::wav_truncated_chunk, "file shorter than a RIFF header");
    check(std::memcmp(bytes.data(), "RIFF", 4) == 0, ErrorCode::wav_bad_magic, "missing RIFF magic");
    check(std::memcmp(bytes.data() + 8, "WAVE", 4) == 0, ErrorCode::wav_bad_magic, "missing WAVE form type");

    bool have_fmt = false;
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t sample_rate = 0;
    const std::uint8_t* data_ptr = nullptr;
    std::uint32_t data_len = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* tag = reinterpret_cast<const char*>(bytes.data() + pos);
        const std::uint32_t len = read_u32(bytes.data() + pos + 4);
        pos += 8;
        check(pos + len <= bytes.size(), ErrorCode::wav_truncated_chunk,
              "chunk '" + std::string(tag, 4) + "' declares " + std::to_string(len) + " bytes past end of file");
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            check(len >= 16, ErrorCode::wav_truncated_chunk, "fmt chunk shorter than 16 bytes");
            format = read_u16(bytes.data() + pos);
            channels = read_u16(bytes.data() + pos + 2);
            sample_rate = read_u32(bytes.data() + pos + 4);
            bits = read_u16(bytes.data() + pos + 14);
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            data_ptr = bytes.data() + pos;
            data_len = len;
        }
        pos += len + (len & 1);  // chunks are word aligned
    }

    check(have_fmt, ErrorCode::wav_truncated_chunk, "missing fmt chunk");
    check(format == 1, ErrorCode::wav_unsupported_format,
          "only PCM (format code 1) is supported, got " + std::to_string(format));
    check(bits == 16, ErrorCode::wav_unsupported_depth, "only 16-bit PCM is supported, got " + std::to_string(bits));
    check(channels >= 1, ErrorCode::wav_unsupported_format, "channel count must be >= 1");
    check(data_ptr != nullptr, ErrorCode::wav_truncated_chunk, "missing data chunk");
    check(data_len % (2 * channels) == 0, ErrorCode::wav_truncated_chunk, "data chunk not a whole number of frames");

    const std::int64_t frames = static_cast<std::int64_t>(data_len) / (2 * channels);
    WavClip clip;
    clip.sample_rate = sample_rate;
    clip.samples = Tensor(Shape{channels, frames});
    for (std::int64_t f = 0; f < frames; ++f) {
        for (std::int64_t c = 0; c < channels; ++c) {
            const std::uint8_t* p = data_ptr + 2 * (f * channels + c);
            const std::int16_t s = static_cast<std::int16_t>(p[0] | (p[1] << 8));
            clip.samples[c * frames + f] = static_cast<double>(s) / 32768.0;
        }
    }
    return clip;
}

WavClip read_wav_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    check(in.good(), ErrorCode::io_error, "cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return read_wav(bytes);
}

std::vector<std::uint8_t> write_wav(const WavClip& clip) {
    const std::int64_t channels = clip.channels();
    const std::int64_t frames = clip.frames();
    const std::uint32_t data_len = static_cast<std::uint32_t>(2 * channels * frames);

    std::vector<std::uint8_t> out;
    out.reserve(44 + data_len);
    put_tag(out, "RIFF");
    put_u32(out, 36 + data_len);
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put_u32(out, 16);
    put_u16(out, 1);  // PCM
    put_u16(out, static_cast<std::uint16_t>(channels));
    put_u32(out, clip.sample_rate);
    put_u32(out, clip.sample_rate * static_cast<std::uint32_t>(2 * channels));
    put_u16(out, static_cast<std::uint16_t>(2 * channels));
    put_u16(out, 16);
    put_tag(out, "data");
    put_u32(out, data_len);
    for (std::int64_t f = 0; f < frames; ++f) {
        for (std::int64_t c = 0; c < channels; ++c) {
            double v = clip.samples[c * frames + f] * 32768.0;
            v = std::clamp(v, -32768.0, 32767.0);
            const std::int16_t s = static_cast<std::int16_t>(std::lrint(v));
            put_u16(out, static_cast<std::uint16_t>(s));
        }
    }
    return out;
}

void write_wav_file(const WavClip& clip, const std::string& path) {
    std::vector<std::uint8_t> bytes = write_wav(clip);
    std::ofstream out(path, std::ios::binary);
    check(out.good(), ErrorCode::io_error, "cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Tensor zero_pad_to(const Tensor& samples, std::int64_t frames) {
    check_shape(samples.rank() == 2, "zero_pad_to expects [channels, frames]");
    const std::int64_t c = samples.dim(0), f = samples.dim(1);
    check_contract(frames >= f, "target length shorter than the clip");
    Tensor out(Shape{c, frames});
    for (std::int64_t ch = 0; ch < c; ++ch)
        for (std::int64_t i = 0; i < f; ++i) out[ch * frames + i] = samples[ch * f + i];
    return out;
}

}  // namespace scalewave
