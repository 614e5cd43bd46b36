#pragma once

#include "speeji/audio.hpp"
#include "speeji/emotion.hpp"

#include <chrono>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace speeji {

struct BackendConfig {
    enum class Kind { Baseline, External };

    Kind kind = Kind::Baseline;
    std::string endpoint_url;  // external only, e.g. "http://127.0.0.1:9000"
    double timeout_s = 30.0;
    int retry_count = 1;

    /// Throws ConfigError when the combination is invalid.
    void validate() const;
};

/// Speech emotion recognition contract: one VadPoint per requested span, in
/// request order. Every span is an independent inference, including the
/// whole-message span.
class SerBackend {
public:
    virtual ~SerBackend() = default;
    virtual std::vector<VadPoint> analyze(const AudioClip& clip,
                                          std::span<const TimeSpan> spans) = 0;
    virtual std::string name() const = 0;
};

struct TranscriptSegment {
    double start_s = 0.0;
    double end_s = 0.0;
    std::string text;

    friend bool operator==(const TranscriptSegment&, const TranscriptSegment&) = default;
};

class Transcriber {
public:
    virtual ~Transcriber() = default;
    virtual std::vector<TranscriptSegment> transcribe(const AudioClip& clip) = 0;
};

// ---------------------------------------------------------------------------
// Deterministic acoustic baseline

/// Maps loudness to arousal, spectral centroid to valence and zero-crossing
/// rate to dominance. Not an emotion model; it keeps the pipeline testable
/// without a neural backend.
VadPoint baseline_analyze(const AudioClip& clip, const TimeSpan& span);

class BaselineBackend final : public SerBackend {
public:
    std::vector<VadPoint> analyze(const AudioClip& clip, std::span<const TimeSpan> spans) override;
    std::string name() const override { return "baseline"; }
};

// ---------------------------------------------------------------------------
// HTTP backends
//
// POST <endpoint>/analyze and <endpoint>/transcribe with
//   {"sample_rate": N, "spans": [{"start_s": s, "end_s": e}, ...], "audio_b64": "..."}
// where audio_b64 is base64 of 16-bit little-endian mono PCM.

std::string build_request_body(const AudioClip& clip, std::span<const TimeSpan> spans);

/// Parses {"results": [{valence, arousal, dominance}, ...]} on the native
/// [0, 1] scale and maps each value through x -> 2x - 1.
std::vector<VadPoint> parse_analyze_response(std::string_view body, std::size_t expected);

/// Parses {"segments": [{start_s, end_s, text}, ...]} and validates ordering.
std::vector<TranscriptSegment> parse_transcribe_response(std::string_view body);

/// Throws BackendError(MalformedResponse) unless segments are ordered,
/// non-overlapping and have start < end.
void validate_transcript(std::span<const TranscriptSegment> segments);

class ExternalSerBackend final : public SerBackend {
public:
    explicit ExternalSerBackend(BackendConfig cfg);
    std::vector<VadPoint> analyze(const AudioClip& clip, std::span<const TimeSpan> spans) override;
    std::string name() const override { return "external"; }

private:
    BackendConfig cfg_;
};

class ExternalTranscriber final : public Transcriber {
public:
    explicit ExternalTranscriber(BackendConfig cfg);
    std::vector<TranscriptSegment> transcribe(const AudioClip& clip) override;

private:
    BackendConfig cfg_;
};

// ---------------------------------------------------------------------------
// Alignment

/// For each anchor, the transcript texts overlapping it by more than zero
/// seconds, in transcript order, joined with single spaces.
std::vector<std::string> align(std::span<const TimeSpan> anchors,
                               std::span<const TranscriptSegment> transcript);

}  // namespace speeji
