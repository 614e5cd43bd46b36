// RIFF/WAVE decoding and canonical PCM16 encoding.

#include "speeji/audio.hpp"
#include "speeji/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <optional>
#include <string_view>

#include <fmt/format.h>

namespace speeji {

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<std::uint8_t>& out, std::string_view tag) {
    out.insert(out.end(), tag.begin(), tag.end());
}

bool tag_is(const std::uint8_t* p, std::string_view tag) {
    return std::memcmp(p, tag.data(), 4) == 0;
}

struct Format {
    std::uint16_t tag = 0;
    std::uint16_t channels = 0;
    std::uint32_t rate = 0;
    std::uint16_t block_align = 0;
    std::uint16_t bits = 0;
};

Format parse_fmt(const std::uint8_t* p, std::uint32_t size) {
    if (size < 16) {
        throw DecodeError(fmt::format("fmt chunk too short ({} bytes)", size));
    }
    Format f;
    f.tag = read_u16(p);
    f.channels = read_u16(p + 2);
    f.rate = read_u32(p + 4);
    f.block_align = read_u16(p + 12);
    f.bits = read_u16(p + 14);
    if (f.tag == kFormatExtensible) {
        if (size < 40) {
            throw DecodeError("extensible fmt chunk too short");
        }
        // First two bytes of the sub-format GUID carry the real format tag.
        f.tag = read_u16(p + 24);
    }
    return f;
}

}  // namespace

AudioClip decode_wav_native(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 12) {
        throw DecodeError(fmt::format("file too short for a RIFF header ({} bytes)", bytes.size()));
    }
    const std::uint8_t* base = bytes.data();
    if (!tag_is(base, "RIFF") || !tag_is(base + 8, "WAVE")) {
        throw DecodeError("not a RIFF/WAVE file");
    }

    std::optional<Format> format;
    const std::uint8_t* data = nullptr;
    std::size_t data_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint8_t* hdr = base + pos;
        const std::uint32_t size = read_u32(hdr + 4);
        const std::size_t body = pos + 8;
        const std::size_t available = bytes.size() - body;
        if (tag_is(hdr, "fmt ")) {
            if (size > available) throw DecodeError("truncated fmt chunk");
            format = parse_fmt(base + body, size);
        } else if (tag_is(hdr, "data")) {
            data = base + body;
            // Streaming writers leave the size unset; trust the file length.
            data_size = std::min<std::size_t>(size, available);
            break;
        }
        pos = body + size + (size & 1U);
    }

    if (!format) throw DecodeError("missing fmt chunk");
    if (data == nullptr) throw DecodeError("missing data chunk");

    const Format& f = *format;
    if (f.channels < 1 || f.channels > 2) {
        throw DecodeError(fmt::format("unsupported channel count {}", f.channels));
    }
    if (f.rate == 0) throw DecodeError("sample rate is zero");

    std::size_t sample_bytes = 0;
    if (f.tag == kFormatPcm && f.bits == 16) {
        sample_bytes = 2;
    } else if (f.tag == kFormatFloat && f.bits == 32) {
        sample_bytes = 4;
    } else {
        throw DecodeError(
            fmt::format("unsupported codec (format tag {:#06x}, {} bits)", f.tag, f.bits));
    }
    const std::size_t frame_bytes = sample_bytes * f.channels;
    if (f.block_align != 0 && f.block_align != frame_bytes) {
        throw DecodeError(fmt::format("block align {} does not match {} channel(s) of {} bits",
                                      f.block_align, f.channels, f.bits));
    }

    const std::size_t frames = data_size / frame_bytes;
    if (frames == 0) throw DecodeError("data chunk holds no samples");

    std::vector<float> mono(frames);
    for (std::size_t i = 0; i < frames; ++i) {
        const std::uint8_t* frame = data + i * frame_bytes;
        double acc = 0.0;
        for (std::size_t c = 0; c < f.channels; ++c) {
            const std::uint8_t* s = frame + c * sample_bytes;
            if (sample_bytes == 2) {
                acc += static_cast<std::int16_t>(read_u16(s)) / 32768.0;
            } else {
                float x;
                const std::uint32_t raw = read_u32(s);
                std::memcpy(&x, &raw, sizeof x);
                if (!std::isfinite(x)) {
                    throw DecodeError(fmt::format("non-finite float sample at frame {}", i));
                }
                acc += x;
            }
        }
        mono[i] = static_cast<float>(acc / f.channels);
    }
    return AudioClip(std::move(mono), f.rate);
}

AudioClip decode_wav(std::span<const std::uint8_t> bytes) {
    AudioClip native = decode_wav_native(bytes);
    if (native.sample_rate() == kCanonicalRate) return native;
    return resample_linear(native, kCanonicalRate);
}

std::vector<std::uint8_t> encode_wav(const AudioClip& clip) {
    const auto samples = clip.samples();
    const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);

    std::vector<std::uint8_t> out;
    out.reserve(44 + data_bytes);
    put_tag(out, "RIFF");
    put_u32(out, 36 + data_bytes);
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put_u32(out, 16);
    put_u16(out, kFormatPcm);
    put_u16(out, 1);
    put_u32(out, clip.sample_rate());
    put_u32(out, clip.sample_rate() * 2);
    put_u16(out, 2);
    put_u16(out, 16);
    put_tag(out, "data");
    put_u32(out, data_bytes);
    for (float x : samples) {
        const double scaled = std::round(static_cast<double>(x) * 32768.0);
        const auto q = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
        put_u16(out, static_cast<std::uint16_t>(q));
    }
    return out;
}

AudioClip resample_linear(const AudioClip& clip, std::uint32_t target_rate) {
    if (target_rate == 0) throw InputError("target rate is zero");
    const auto in = clip.samples();
    const double ratio = static_cast<double>(clip.sample_rate()) / target_rate;
    const auto count = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(in.size() / ratio)));

    std::vector<float> out(count);
    const std::size_t last = in.size() - 1;
    for (std::size_t j = 0; j < count; ++j) {
        const double pos = j * ratio;
        const auto i = std::min(static_cast<std::size_t>(pos), last);
        const std::size_t next = std::min(i + 1, last);
        const double frac = pos - static_cast<double>(i);
        out[j] = static_cast<float>(in[i] + frac * (static_cast<double>(in[next]) - in[i]));
    }
    return AudioClip(std::move(out), target_rate);
}

}  // namespace speeji
