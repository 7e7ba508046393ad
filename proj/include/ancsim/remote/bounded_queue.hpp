#pragma once

#include <atomic>
#include <cstddef>
#include <deque>
#include <mutex>
#include <optional>

namespace ancsim {

/// Bounded single-direction queue; producers never block (a full queue drops
/// and counts), consumers poll.
template <typename T>
class BoundedQueue {
public:
    explicit BoundedQueue(std::size_t capacity) : cap_(capacity) {}

    bool try_push(T v) {
        std::lock_guard lock(m_);
        if (q_.size() >= cap_) {
            dropped_.fetch_add(1, std::memory_order_relaxed);
            return false;
        }
        q_.push_back(std::move(v));
        return true;
    }

    std::optional<T> try_pop() {
        std::lock_guard lock(m_);
        if (q_.empty()) return std::nullopt;
        T v = std::move(q_.front());
        q_.pop_front();
        return v;
    }

    std::size_t size() const {
        std::lock_guard lock(m_);
        return q_.size();
    }

    std::size_t capacity() const noexcept { return cap_; }
    std::uint64_t dropped() const noexcept { return dropped_.load(std::memory_order_relaxed); }

private:
    std::size_t cap_;
    mutable std::mutex m_;
    std::deque<T> q_;
    std::atomic<std::uint64_t> dropped_{0};
};

} // namespace ancsim
