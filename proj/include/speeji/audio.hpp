#pragma once

#include "speeji/emotion.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace speeji {

inline constexpr std::uint32_t kCanonicalRate = 16000;
inline constexpr double kDefaultChunkSeconds = 0.5;

/// Mono audio with samples in [-1, 1].
class AudioClip {
public:
    /// Throws InputError on empty input, zero rate or non-finite samples.
    /// Finite samples are clamped into [-1, 1].
    AudioClip(std::vector<float> samples, std::uint32_t sample_rate);

    std::span<const float> samples() const noexcept { return samples_; }
    std::uint32_t sample_rate() const noexcept { return rate_; }
    std::size_t size() const noexcept { return samples_.size(); }
    double duration_s() const noexcept {
        return static_cast<double>(samples_.size()) / static_cast<double>(rate_);
    }

    /// Sample index range [first, last) covered by a time span, clamped to the
    /// clip and never empty.
    std::pair<std::size_t, std::size_t> sample_range(const TimeSpan& span) const;

private:
    std::vector<float> samples_;
    std::uint32_t rate_;
};

struct ChunkSpan {
    double start_s = 0.0;
    double end_s = 0.0;
    std::size_t index = 0;

    TimeSpan span() const noexcept { return {start_s, end_s}; }
    friend bool operator==(const ChunkSpan&, const ChunkSpan&) = default;
};

struct WaveBar {
    double start_s = 0.0;
    double end_s = 0.0;
    double height = 0.0;  // [0.05, 1], peak-normalized
    BarColor color = BarColor::neutral_gray();

    double midpoint() const noexcept { return 0.5 * (start_s + end_s); }
};

struct AcousticFeatures {
    double rms_dbfs = 0.0;
    double spectral_centroid_hz = 0.0;
    double zero_crossings_per_s = 0.0;

    friend bool operator==(const AcousticFeatures&, const AcousticFeatures&) = default;
};

// ---------------------------------------------------------------------------
// WAV codec

/// Decodes RIFF/WAVE (PCM16 or float32, 1-2 channels) into a canonical
/// 16 kHz mono clip. Throws DecodeError with a reason.
AudioClip decode_wav(std::span<const std::uint8_t> bytes);

/// Same as decode_wav but keeps the source rate (still downmixed to mono).
AudioClip decode_wav_native(std::span<const std::uint8_t> bytes);

/// Writes a mono PCM16 WAV at the clip's rate.
std::vector<std::uint8_t> encode_wav(const AudioClip& clip);

/// Linear-interpolation resampler.
AudioClip resample_linear(const AudioClip& clip, std::uint32_t target_rate);

// ---------------------------------------------------------------------------
// Segmentation and analysis

inline constexpr double kBarSeconds = 0.1;
inline constexpr std::size_t kMaxBars = 120;
inline constexpr double kBarFloor = 0.05;

/// Consecutive chunk_s spans covering [0, duration]. A trailing remainder
/// shorter than chunk_s / 2 is folded into the previous span; a message
/// shorter than chunk_s is a single span. Throws InputError if
/// duration_s <= 0 or chunk_s <= 0.
std::vector<ChunkSpan> chunk_spans(double duration_s, double chunk_s = kDefaultChunkSeconds);

/// Amplitude bars: 0.1 s each, or duration / 120 when that would exceed 120
/// bars. Heights are per-bar peaks over the clip peak, floored at 0.05.
std::vector<WaveBar> wave_bars(const AudioClip& clip);

AcousticFeatures features(const AudioClip& clip, const TimeSpan& span);

}  // namespace speeji
