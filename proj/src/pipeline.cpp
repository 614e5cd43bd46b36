#include "speeji/pipeline.hpp"
#include "speeji/errors.hpp"

#include <algorithm>
#include <future>

#include <fmt/format.h>

namespace speeji {

void AugmentOptions::validate() const {
    if (!(chunk_s > 0.0)) throw ConfigError(fmt::format("chunk length {} must be positive", chunk_s));
    if (!(neutral_tau >= 0.0 && neutral_tau < 1.0)) {
        throw ConfigError(fmt::format("neutral threshold {} outside [0, 1)", neutral_tau));
    }
    if (!(interest_tau >= 0.0)) {
        throw ConfigError(fmt::format("interest threshold {} must be >= 0", interest_tau));
    }
}

TimeSpan ending_span(double duration_s) {
    if (!(duration_s > 0.0)) {
        throw InputError(fmt::format("duration must be positive, got {}", duration_s));
    }
    const double length = std::max(1.5, 0.20 * duration_s);
    if (length >= duration_s) return {0.0, duration_s};
    return {duration_s - length, duration_s};
}

namespace {

// Index of the chunk whose [start, end) holds t; the last chunk also owns its
// end point.
std::size_t chunk_at(const std::vector<ChunkSpan>& spans, double t) {
    auto it = std::upper_bound(spans.begin(), spans.end(), t,
                               [](double x, const ChunkSpan& s) { return x < s.start_s; });
    if (it == spans.begin()) return 0;
    return static_cast<std::size_t>(std::distance(spans.begin(), it) - 1);
}

}  // namespace

AugmentationDescriptor augment(const AudioClip& clip, const EmojiTable& table, SerBackend& ser,
                               Transcriber* transcriber, const AugmentOptions& options,
                               std::string message_id) {
    options.validate();

    AugmentationDescriptor d;
    d.message_id = std::move(message_id);
    d.duration_s = clip.duration_s();
    d.ending_span = ending_span(d.duration_s);
    d.bars = wave_bars(clip);

    std::future<std::vector<TranscriptSegment>> transcript;
    if (transcriber != nullptr) {
        transcript = std::async(std::launch::async, [&] { return transcriber->transcribe(clip); });
    }

    const std::vector<ChunkSpan> spans = chunk_spans(d.duration_s, options.chunk_s);
    std::vector<TimeSpan> request;
    request.reserve(spans.size() + 2);
    for (const auto& s : spans) request.push_back(s.span());
    request.push_back({0.0, d.duration_s});
    request.push_back(d.ending_span);

    std::vector<VadPoint> vads;
    try {
        vads = ser.analyze(clip, request);
        if (vads.size() != request.size()) {
            throw BackendError(BackendError::Kind::MalformedResponse,
                               fmt::format("backend returned {} results for {} spans", vads.size(),
                                           request.size()));
        }
    } catch (const std::exception& e) {
        d.status = AugmentationStatus::AugmentationFailed;
        d.failure_reason = fmt::format("{} backend: {}", ser.name(), e.what());
        vads.clear();
    }

    if (transcript.valid()) {
        try {
            d.transcript = transcript.get();
        } catch (const std::exception&) {
            d.transcript.clear();
        }
    }

    if (d.status == AugmentationStatus::AugmentationFailed) {
        return canonicalize(d);
    }

    // Everything downstream derives from the stored precision.
    for (auto& v : vads) v = canonical_vad(v);

    std::vector<ChunkEmotion> chunk_emotions;
    for (std::size_t i = 0; i < spans.size(); ++i) {
        d.chunks.push_back({spans[i], vads[i]});
        chunk_emotions.push_back({spans[i].span(), vads[i]});
    }
    d.overall = vads[spans.size()];
    d.ending = vads[spans.size() + 1];
    d.overall_emoji = nearest_emoji(*d.overall, table);
    d.ending_emoji = nearest_emoji(*d.ending, table);

    for (auto& bar : d.bars) {
        bar.color = color_for(d.chunks[chunk_at(spans, bar.midpoint())].vad, options.neutral_tau);
    }

    d.interest_segments = interest_segments(chunk_emotions, options.interest_tau, table);
    if (!d.transcript.empty()) {
        std::vector<TimeSpan> anchors;
        for (const auto& s : d.interest_segments) anchors.push_back({s.start_s, s.end_s});
        auto texts = align(anchors, d.transcript);
        for (std::size_t i = 0; i < texts.size(); ++i) {
            d.interest_segments[i].text = std::move(texts[i]);
        }
    }
    return canonicalize(d);
}

}  // namespace speeji
