#pragma once

#include "speeji/backends.hpp"
#include "speeji/emotion.hpp"
#include "speeji/pipeline.hpp"
#include "speeji/service/events.hpp"
#include "speeji/service/store.hpp"
#include "speeji/service/types.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <span>
#include <thread>
#include <vector>

namespace speeji::service {

inline constexpr double kMaxMessageSeconds = 300.0;

struct ServiceConfig {
    std::filesystem::path data_dir = "speeji-data";
    std::shared_ptr<const EmojiTable> table;  // builtin when null
    BackendConfig ser;
    std::optional<BackendConfig> asr;  // transcription is optional
    AugmentOptions augment;
    std::size_t workers = 4;
    double max_duration_s = kMaxMessageSeconds;

    /// SPEEJI_DATA_DIR, SPEEJI_SER_BACKEND, SPEEJI_SER_URL, SPEEJI_ASR_URL,
    /// SPEEJI_EMOJI_TABLE, SPEEJI_NEUTRAL_TAU, SPEEJI_INTEREST_TAU. Throws
    /// ConfigError on bad values.
    static ServiceConfig from_env();
};

/// Conversations, voice messages and asynchronous augmentation.
///
/// Writes to one conversation are serialized by a per-conversation lock;
/// events for a conversation are published under that lock so subscribers see
/// state changes in order. Augmentation runs on a fixed worker pool.
class MessageService {
public:
    /// Replays the data directory and re-enqueues unfinished messages.
    explicit MessageService(ServiceConfig cfg);
    ~MessageService();

    MessageService(const MessageService&) = delete;
    MessageService& operator=(const MessageService&) = delete;

    Conversation create_conversation(std::string title);
    std::vector<Conversation> list_conversations() const;

    /// Stores the audio, appends the message and enqueues augmentation.
    /// Throws ServiceError: NotFound, Unprocessable (decode), TooLarge.
    VoiceMessage post_message(const std::string& conversation_id, std::string sender,
                              std::span<const std::uint8_t> wav_bytes);

    VoiceMessage get_message(const std::string& message_id) const;

    /// Messages with created_at strictly after `since`, in conversation order.
    std::vector<VoiceMessage> list_messages(const std::string& conversation_id,
                                            std::optional<Timestamp> since = std::nullopt) const;

    /// Canonical WAV bytes of a message.
    std::vector<std::uint8_t> message_audio(const std::string& message_id) const;

    /// Live event feed; throws ServiceError(NotFound) for unknown ids.
    std::shared_ptr<Subscription> subscribe(const std::string& conversation_id);

    /// Stops taking jobs and waits up to `drain` for queued and running jobs.
    /// Returns true when everything finished. Unfinished messages stay in
    /// processing and are re-enqueued on the next start.
    bool shutdown(std::chrono::milliseconds drain);

    std::size_t pending_jobs() const;
    const ServiceConfig& config() const noexcept { return cfg_; }
    const EmojiTable& table() const noexcept { return *table_; }

    struct RecoveryReport {
        std::size_t conversations = 0;
        std::size_t messages = 0;
        std::size_t requeued = 0;
        std::size_t skipped_records = 0;
        std::size_t missing_audio = 0;
    };
    const RecoveryReport& recovery() const noexcept { return recovery_; }

private:
    struct ConversationState {
        Conversation info;
        std::vector<std::string> message_ids;  // created_at order
        Timestamp last_created{};
        std::mutex write_mutex;
    };

    struct Job {
        std::string conversation_id;
        std::string message_id;
        std::shared_ptr<const AudioClip> clip;  // loaded lazily when null
    };

    void recover();
    void enqueue(Job job);
    void worker_loop();
    void run_job(const Job& job);
    ConversationState& conversation(const std::string& id) const;
    std::string new_id(std::string_view prefix);

    ServiceConfig cfg_;
    std::shared_ptr<const EmojiTable> table_;
    std::unique_ptr<SerBackend> ser_;
    std::unique_ptr<Transcriber> asr_;
    Store store_;
    EventHub hub_;
    RecoveryReport recovery_;

    mutable std::shared_mutex index_mutex_;
    std::map<std::string, std::unique_ptr<ConversationState>> conversations_;
    std::map<std::string, VoiceMessage> messages_;

    mutable std::mutex queue_mutex_;
    std::condition_variable queue_cv_;
    std::condition_variable idle_cv_;
    std::deque<Job> queue_;
    std::size_t active_ = 0;
    bool stopping_ = false;
    std::vector<std::thread> workers_;

    std::mutex id_mutex_;
    std::mt19937_64 rng_;
};

}  // namespace speeji::service
