#include "speeji/service/message_service.hpp"

#include "speeji/errors.hpp"

#include <cstdlib>
#include <iostream>

#include <fmt/format.h>

namespace speeji::service {

namespace {

std::optional<std::string> env(const char* name) {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
}

double env_real(const char* name, double fallback) {
    const auto v = env(name);
    if (!v) return fallback;
    try {
        std::size_t used = 0;
        const double x = std::stod(*v, &used);
        if (used != v->size()) throw std::invalid_argument(*v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(fmt::format("{}={} is not a number", name, *v));
    }
}

}  // namespace

ServiceConfig ServiceConfig::from_env() {
    ServiceConfig cfg;
    if (auto v = env("SPEEJI_DATA_DIR")) cfg.data_dir = *v;
    if (auto v = env("SPEEJI_SER_BACKEND")) {
        if (*v == "baseline") {
            cfg.ser.kind = BackendConfig::Kind::Baseline;
        } else if (*v == "external") {
            cfg.ser.kind = BackendConfig::Kind::External;
        } else {
            throw ConfigError(fmt::format("SPEEJI_SER_BACKEND must be baseline or external, got {}", *v));
        }
    }
    if (auto v = env("SPEEJI_SER_URL")) cfg.ser.endpoint_url = *v;
    if (auto v = env("SPEEJI_ASR_URL")) {
        BackendConfig asr;
        asr.kind = BackendConfig::Kind::External;
        asr.endpoint_url = *v;
        cfg.asr = asr;
    }
    if (auto v = env("SPEEJI_EMOJI_TABLE")) {
        cfg.table = std::make_shared<const EmojiTable>(EmojiTable::load(*v));
    }
    cfg.augment.neutral_tau = env_real("SPEEJI_NEUTRAL_TAU", cfg.augment.neutral_tau);
    cfg.augment.interest_tau = env_real("SPEEJI_INTEREST_TAU", cfg.augment.interest_tau);
    return cfg;
}

MessageService::MessageService(ServiceConfig cfg)
    : cfg_(std::move(cfg)), store_(cfg_.data_dir), rng_(std::random_device{}()) {
    cfg_.augment.validate();
    cfg_.ser.validate();
    if (cfg_.workers == 0) throw ConfigError("worker count must be at least 1");
    table_ = cfg_.table ? cfg_.table : std::shared_ptr<const EmojiTable>(&EmojiTable::builtin(), [](auto*) {});
    if (cfg_.ser.kind == BackendConfig::Kind::External) {
        ser_ = std::make_unique<ExternalSerBackend>(cfg_.ser);
    } else {
        ser_ = std::make_unique<BaselineBackend>();
    }
    if (cfg_.asr) asr_ = std::make_unique<ExternalTranscriber>(*cfg_.asr);

    recover();
    for (std::size_t i = 0; i < cfg_.workers; ++i) workers_.emplace_back([this] { worker_loop(); });
}

MessageService::~MessageService() {
    shutdown(std::chrono::milliseconds(0));
}

void MessageService::recover() {
    std::vector<Job> requeue;
    for (auto& r : store_.replay()) {
        auto state = std::make_unique<ConversationState>();
        state->info = r.conversation;
        state->last_created = r.conversation.created_at;
        // Log order is append order, which is created_at order by construction;
        // sort anyway so hand-edited logs cannot break listing order.
        std::stable_sort(r.messages.begin(), r.messages.end(), [](const auto& a, const auto& b) {
            return a.created_at != b.created_at ? a.created_at < b.created_at : a.message_id < b.message_id;
        });
        for (auto& m : r.messages) {
            state->message_ids.push_back(m.message_id);
            state->last_created = std::max(state->last_created, m.created_at);
            if (m.status == MessageStatus::Processing) {
                requeue.push_back({m.conversation_id, m.message_id, nullptr});
            }
            messages_.emplace(m.message_id, std::move(m));
        }
        recovery_.messages += state->message_ids.size();
        recovery_.skipped_records += r.skipped_records;
        recovery_.missing_audio += r.missing_audio;
        ++recovery_.conversations;
        conversations_.emplace(r.conversation.conversation_id, std::move(state));
    }
    recovery_.requeued = requeue.size();
    for (auto& j : requeue) queue_.push_back(std::move(j));
}

std::string MessageService::new_id(std::string_view prefix) {
    std::lock_guard lock(id_mutex_);
    return fmt::format("{}{:016x}{:08x}", prefix, rng_(), static_cast<std::uint32_t>(rng_()));
}

MessageService::ConversationState& MessageService::conversation(const std::string& id) const {
    std::shared_lock lock(index_mutex_);
    auto it = conversations_.find(id);
    if (it == conversations_.end()) {
        throw ServiceError(ServiceError::Code::NotFound, fmt::format("unknown conversation {}", id));
    }
    return *it->second;
}

Conversation MessageService::create_conversation(std::string title) {
    auto state = std::make_unique<ConversationState>();
    state->info.conversation_id = new_id("c");
    state->info.title = std::move(title);
    state->info.created_at = now_utc();
    state->last_created = state->info.created_at;
    store_.append_conversation(state->info);
    Conversation info = state->info;
    std::unique_lock lock(index_mutex_);
    conversations_.emplace(info.conversation_id, std::move(state));
    return info;
}

std::vector<Conversation> MessageService::list_conversations() const {
    std::shared_lock lock(index_mutex_);
    std::vector<Conversation> out;
    for (const auto& [id, state] : conversations_) out.push_back(state->info);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.created_at != b.created_at ? a.created_at < b.created_at
                                            : a.conversation_id < b.conversation_id;
    });
    return out;
}

VoiceMessage MessageService::post_message(const std::string& conversation_id, std::string sender,
                                          std::span<const std::uint8_t> wav_bytes) {
    ConversationState& conv = conversation(conversation_id);

    AudioClip decoded = [&] {
        try {
            return decode_wav(wav_bytes);
        } catch (const DecodeError& e) {
            throw ServiceError(ServiceError::Code::Unprocessable, fmt::format("undecodable audio: {}", e.what()));
        } catch (const InputError& e) {
            throw ServiceError(ServiceError::Code::Unprocessable, fmt::format("undecodable audio: {}", e.what()));
        }
    }();
    if (decoded.duration_s() > cfg_.max_duration_s) {
        throw ServiceError(ServiceError::Code::TooLarge,
                           fmt::format("message is {:.1f} s; the limit is {:.0f} s", decoded.duration_s(),
                                       cfg_.max_duration_s));
    }

    // Canonical bytes are what gets stored and served; analyze exactly those
    // samples.
    const std::vector<std::uint8_t> canonical = encode_wav(decoded);
    auto clip = std::make_shared<const AudioClip>(decode_wav(canonical));

    {
        std::lock_guard lock(queue_mutex_);
        if (stopping_) throw ServiceError(ServiceError::Code::Unavailable, "service is shutting down");
    }

    VoiceMessage m;
    m.message_id = new_id("m");
    m.conversation_id = conversation_id;
    m.sender = std::move(sender);
    m.audio_ref = store_.put_audio(canonical);
    m.status = MessageStatus::Processing;

    {
        std::lock_guard write(conv.write_mutex);
        m.created_at = std::max(now_utc(), conv.last_created + std::chrono::microseconds(1));
        store_.append_message(m);
        conv.last_created = m.created_at;
        {
            std::unique_lock lock(index_mutex_);
            conv.message_ids.push_back(m.message_id);
            messages_.emplace(m.message_id, m);
        }
        hub_.publish({"message.created", conversation_id, m.message_id, m.status});
    }
    enqueue({conversation_id, m.message_id, std::move(clip)});
    return m;
}

VoiceMessage MessageService::get_message(const std::string& message_id) const {
    std::shared_lock lock(index_mutex_);
    auto it = messages_.find(message_id);
    if (it == messages_.end()) {
        throw ServiceError(ServiceError::Code::NotFound, fmt::format("unknown message {}", message_id));
    }
    return it->second;
}

std::vector<VoiceMessage> MessageService::list_messages(const std::string& conversation_id,
                                                        std::optional<Timestamp> since) const {
    const ConversationState& conv = conversation(conversation_id);
    std::shared_lock lock(index_mutex_);
    std::vector<VoiceMessage> out;
    for (const auto& id : conv.message_ids) {
        const auto& m = messages_.at(id);
        if (!since || m.created_at > *since) out.push_back(m);
    }
    return out;
}

std::vector<std::uint8_t> MessageService::message_audio(const std::string& message_id) const {
    return store_.read_audio(get_message(message_id).audio_ref);
}

std::shared_ptr<Subscription> MessageService::subscribe(const std::string& conversation_id) {
    conversation(conversation_id);
    return hub_.subscribe(conversation_id);
}

void MessageService::enqueue(Job job) {
    {
        std::lock_guard lock(queue_mutex_);
        queue_.push_back(std::move(job));
    }
    queue_cv_.notify_one();
}

std::size_t MessageService::pending_jobs() const {
    std::lock_guard lock(queue_mutex_);
    return queue_.size() + active_;
}

void MessageService::worker_loop() {
    for (;;) {
        Job job;
        {
            std::unique_lock lock(queue_mutex_);
            queue_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
            if (queue_.empty() || stopping_) return;
            job = std::move(queue_.front());
            queue_.pop_front();
            ++active_;
        }
        try {
            run_job(job);
        } catch (const std::exception& e) {
            std::cerr << fmt::format("speeji: augmentation of {} failed: {}\n", job.message_id, e.what());
        }
        {
            std::lock_guard lock(queue_mutex_);
            --active_;
        }
        idle_cv_.notify_all();
    }
}

void MessageService::run_job(const Job& job) {
    std::shared_ptr<const AudioClip> clip = job.clip;
    if (!clip) {
        clip = std::make_shared<const AudioClip>(decode_wav(message_audio(job.message_id)));
    }
    auto d = std::make_shared<const AugmentationDescriptor>(
        augment(*clip, *table_, *ser_, asr_.get(), cfg_.augment, job.message_id));

    ConversationState& conv = conversation(job.conversation_id);
    std::lock_guard write(conv.write_mutex);
    store_.append_result(job.conversation_id, job.message_id, *d);
    const MessageStatus status = from_augmentation(d->status);
    {
        std::unique_lock lock(index_mutex_);
        auto& m = messages_.at(job.message_id);
        m.status = status;
        m.descriptor = std::move(d);
    }
    hub_.publish({"message.augmented", job.conversation_id, job.message_id, status});
}

bool MessageService::shutdown(std::chrono::milliseconds drain) {
    bool drained;
    {
        std::unique_lock lock(queue_mutex_);
        if (workers_.empty()) return queue_.empty() && active_ == 0;
        drained = idle_cv_.wait_for(lock, drain, [this] { return queue_.empty() && active_ == 0; });
        stopping_ = true;
    }
    queue_cv_.notify_all();
    // Running jobs finish (bounded by the backend timeout); queued ones stay
    // in processing and are picked up on the next start.
    for (auto& w : workers_) w.join();
    workers_.clear();
    hub_.close_all();
    return drained;
}

}  // namespace speeji::service
