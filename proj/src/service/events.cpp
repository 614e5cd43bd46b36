#include "speeji/service/events.hpp"

#include <algorithm>

namespace speeji::service {

std::optional<Event> Subscription::next(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    cv_.wait_for(lock, timeout, [this] { return !queue_.empty() || closed_; });
    // Deliver what was queued before a close.
    if (queue_.empty()) return std::nullopt;
    Event e = std::move(queue_.front());
    queue_.pop_front();
    return e;
}

bool Subscription::closed() const {
    std::lock_guard lock(mutex_);
    return closed_;
}

bool Subscription::overflowed() const {
    std::lock_guard lock(mutex_);
    return overflowed_;
}

void Subscription::close() {
    {
        std::lock_guard lock(mutex_);
        closed_ = true;
    }
    cv_.notify_all();
}

void Subscription::push(const Event& e) {
    {
        std::lock_guard lock(mutex_);
        if (closed_) return;
        if (queue_.size() >= capacity_) {
            overflowed_ = true;
            closed_ = true;
            queue_.clear();
        } else {
            queue_.push_back(e);
        }
    }
    cv_.notify_all();
}

std::shared_ptr<Subscription> EventHub::subscribe(const std::string& conversation_id) {
    auto sub = std::make_shared<Subscription>(capacity_);
    std::lock_guard lock(mutex_);
    subs_[conversation_id].push_back(sub);
    return sub;
}

void EventHub::publish(const Event& e) {
    std::vector<std::shared_ptr<Subscription>> live;
    {
        std::lock_guard lock(mutex_);
        auto it = subs_.find(e.conversation_id);
        if (it == subs_.end()) return;
        auto& list = it->second;
        std::erase_if(list, [](const auto& w) { return w.expired(); });
        for (const auto& w : list) {
            if (auto s = w.lock()) live.push_back(std::move(s));
        }
    }
    for (const auto& s : live) s->push(e);
}

void EventHub::close_all() {
    std::vector<std::shared_ptr<Subscription>> live;
    {
        std::lock_guard lock(mutex_);
        for (auto& [id, list] : subs_) {
            for (const auto& w : list) {
                if (auto s = w.lock()) live.push_back(std::move(s));
            }
        }
        subs_.clear();
    }
    for (const auto& s : live) s->close();
}

std::size_t EventHub::subscriber_count(const std::string& conversation_id) const {
    std::lock_guard lock(mutex_);
    auto it = subs_.find(conversation_id);
    if (it == subs_.end()) return 0;
    return static_cast<std::size_t>(
        std::count_if(it->second.begin(), it->second.end(), [](const auto& w) {
            auto s = w.lock();
            return s && !s->closed();
        }));
}

}  // namespace speeji::service
