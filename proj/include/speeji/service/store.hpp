#pragma once

#include "speeji/service/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

namespace speeji::service {

/// On-disk layout under a data directory:
///
///   audio/<sha256>.wav            canonical 16 kHz mono PCM16, content addressed
///   conversations/<id>.jsonl      append-only log, one JSON record per line
///
/// Log records, in order of appearance:
///   {"kind":"conversation","conversation_id":..,"title":..,"created_at":..}
///   {"kind":"message","message_id":..,"sender":..,"created_at":..,"audio_ref":..}
///   {"kind":"result","message_id":..,"status":..,"descriptor":{..}}
///
/// Audio is made durable before the message record that references it, so a
/// replayed log never lists a message without audio.
class Store {
public:
    explicit Store(std::filesystem::path data_dir);

    const std::filesystem::path& data_dir() const noexcept { return root_; }

    /// Writes the blob if absent (temp file, fsync, rename). Returns the ref.
    std::string put_audio(std::span<const std::uint8_t> canonical_wav);
    bool has_audio(const std::string& ref) const;
    std::filesystem::path audio_path(const std::string& ref) const;
    std::vector<std::uint8_t> read_audio(const std::string& ref) const;

    void append_conversation(const Conversation& c);
    void append_message(const VoiceMessage& m);
    void append_result(const std::string& conversation_id, const std::string& message_id,
                       const AugmentationDescriptor& d);

    struct Replayed {
        Conversation conversation;
        std::vector<VoiceMessage> messages;  // log order
        std::size_t skipped_records = 0;     // torn or invalid lines
        std::size_t missing_audio = 0;       // messages dropped for lack of audio
    };

    /// Replays every conversation log.
    std::vector<Replayed> replay() const;

private:
    void append_line(const std::string& conversation_id, const std::string& line);

    std::filesystem::path root_;
    std::mutex audio_mutex_;
};

}  // namespace speeji::service
