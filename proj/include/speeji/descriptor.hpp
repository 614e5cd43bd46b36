#pragma once

#include "speeji/audio.hpp"
#include "speeji/backends.hpp"
#include "speeji/emotion.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace speeji {

inline constexpr std::string_view kEngineVersion = "speeji/1.0.0";
inline constexpr std::string_view kGeneratedBy = "ai";

enum class AugmentationStatus { Done, AugmentationFailed };

std::string_view to_string(AugmentationStatus s);

struct ChunkResult {
    ChunkSpan span;
    VadPoint vad;
};

/// Everything computed for one voice message. Serialized as canonical JSON
/// (fixed key order, reals as 6-decimal fixed point); see
/// docs/descriptor.schema.json.
struct AugmentationDescriptor {
    std::string message_id;
    AugmentationStatus status = AugmentationStatus::Done;
    std::string generated_by{kGeneratedBy};
    std::string engine_version{kEngineVersion};
    double duration_s = 0.0;
    std::vector<ChunkResult> chunks;
    std::optional<VadPoint> overall;
    TimeSpan ending_span;
    std::optional<VadPoint> ending;
    std::optional<EmojiEntry> overall_emoji;
    std::optional<EmojiEntry> ending_emoji;
    std::vector<WaveBar> bars;
    std::vector<InterestSegment> interest_segments;
    std::vector<TranscriptSegment> transcript;
    std::string failure_reason;  // set only when status is AugmentationFailed
};

/// Value of x after a trip through the 6-decimal serialized form.
double canonical_real(double x);
VadPoint canonical_vad(const VadPoint& p);

std::string to_json(const AugmentationDescriptor& d);

/// Parses and validates a descriptor. Throws SchemaError naming the first
/// failing JSON pointer (e.g. "/bars").
AugmentationDescriptor descriptor_from_json(std::string_view text);

/// Round-trips through the canonical JSON so in-memory values carry exactly
/// the serialized precision.
AugmentationDescriptor canonicalize(const AugmentationDescriptor& d);

}  // namespace speeji
