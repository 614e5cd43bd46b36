#pragma once

#include "speeji/audio.hpp"
#include "speeji/backends.hpp"
#include "speeji/descriptor.hpp"
#include "speeji/emotion.hpp"

#include <string>

namespace speeji {

struct AugmentOptions {
    double chunk_s = kDefaultChunkSeconds;
    double neutral_tau = kDefaultNeutralTau;
    double interest_tau = kDefaultInterestTau;

    /// Throws ConfigError for out-of-range values.
    void validate() const;
};

/// Final part of a message that drives the second headline emoji:
/// max(1.5 s, 20 % of the duration), anchored at the end, clamped to the
/// message. Throws InputError if duration_s <= 0.
TimeSpan ending_span(double duration_s);

/// Runs one message through chunking, a single SER request (chunks, whole
/// message, ending span), emoji and color mapping, and optional
/// transcription. Transcription runs concurrently with SER; its failure only
/// empties the transcript. SER failure yields status AugmentationFailed with
/// gray bars and no emojis.
AugmentationDescriptor augment(const AudioClip& clip, const EmojiTable& table, SerBackend& ser,
                               Transcriber* transcriber, const AugmentOptions& options,
                               std::string message_id);

}  // namespace speeji
