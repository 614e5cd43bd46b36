#pragma once

#include "speeji/service/types.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace speeji::service {

/// Live-only event feed for one conversation. Holds at most `capacity`
/// undelivered events; a subscriber that falls behind is closed instead of
/// buffering without bound.
class Subscription {
public:
    explicit Subscription(std::size_t capacity) : capacity_(capacity) {}

    /// Waits up to `timeout`; empty when nothing arrived or the feed closed.
    std::optional<Event> next(std::chrono::milliseconds timeout);

    bool closed() const;
    bool overflowed() const;
    void close();

private:
    friend class EventHub;
    void push(const Event& e);

    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<Event> queue_;
    std::size_t capacity_;
    bool closed_ = false;
    bool overflowed_ = false;
};

class EventHub {
public:
    explicit EventHub(std::size_t capacity = 256) : capacity_(capacity) {}

    std::shared_ptr<Subscription> subscribe(const std::string& conversation_id);

    /// Never blocks on subscribers.
    void publish(const Event& e);

    /// Closes every subscription (used on shutdown).
    void close_all();

    std::size_t subscriber_count(const std::string& conversation_id) const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::vector<std::weak_ptr<Subscription>>> subs_;
    std::size_t capacity_;
};

}  // namespace speeji::service
