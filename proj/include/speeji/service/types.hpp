#pragma once

#include "speeji/descriptor.hpp"

#include <chrono>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace speeji::service {

using Timestamp = std::chrono::sys_time<std::chrono::microseconds>;

Timestamp now_utc();

/// "2026-10-18T11:43:00.123456Z"
std::string format_rfc3339(Timestamp t);

/// Accepts fractional seconds and either "Z" or a "+hh:mm" offset.
std::optional<Timestamp> parse_rfc3339(std::string_view text);

enum class MessageStatus { Processing, Done, AugmentationFailed };

std::string_view to_string(MessageStatus s);
MessageStatus from_augmentation(AugmentationStatus s);

struct VoiceMessage {
    std::string message_id;
    std::string conversation_id;
    std::string sender;
    Timestamp created_at;
    std::string audio_ref;  // sha256 of the canonical WAV bytes
    MessageStatus status = MessageStatus::Processing;
    std::shared_ptr<const AugmentationDescriptor> descriptor;
};

struct Conversation {
    std::string conversation_id;
    std::string title;
    Timestamp created_at;
};

struct Event {
    std::string type;  // "message.created" | "message.augmented"
    std::string conversation_id;
    std::string message_id;
    MessageStatus status = MessageStatus::Processing;
};

/// JSON text for the API. The descriptor, when present, is embedded in its
/// canonical form.
std::string to_json(const VoiceMessage& m);
std::string to_json(const Conversation& c);
std::string to_json(const Event& e);

class ServiceError : public std::runtime_error {
public:
    enum class Code { BadRequest = 400, NotFound = 404, Conflict = 409, TooLarge = 413, Unprocessable = 422,
                      Unavailable = 503 };

    ServiceError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Code code() const noexcept { return code_; }
    int http_status() const noexcept { return static_cast<int>(code_); }

private:
    Code code_;
};

}  // namespace speeji::service
