#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "ancsim/remote/envelope.hpp"

namespace ancsim {

enum class RouteStatus { Routed, MalformedTopic };

struct RouteResult {
    RouteStatus status = RouteStatus::Routed;
    std::size_t delivered = 0;
    std::size_t dropped = 0;  // matching subscribers whose sink refused the message
};

/// Topic router. Each subscriber owns a sink; the broker calls it at most once
/// per published message, in publish order, so per-subscriber FIFO holds as
/// long as the sink itself is FIFO. QoS is at-most-once.
class Broker {
public:
    using SubscriberId = std::uint64_t;
    // Returns false when the subscriber could not take the message (queue full).
    using Sink = std::function<bool(const Envelope&)>;

    SubscriberId add_subscriber(Sink sink) {
        std::lock_guard lock(m_);
        const auto id = next_id_++;
        subs_[id] = Subscriber{std::move(sink), {}};
        return id;
    }

    void remove_subscriber(SubscriberId id) {
        std::lock_guard lock(m_);
        subs_.erase(id);
    }

    /// Returns false (and registers nothing) for a malformed filter.
    bool subscribe(SubscriberId id, const std::string& filter) {
        if (!valid_filter(filter)) return false;
        std::lock_guard lock(m_);
        auto it = subs_.find(id);
        if (it == subs_.end()) return false;
        for (const auto& f : it->second.filters) {
            if (f == filter) return true;
        }
        it->second.filters.push_back(filter);
        return true;
    }

    RouteResult route(const Envelope& e) {
        if (!parse_topic(e.topic)) return {RouteStatus::MalformedTopic, 0, 0};
        std::lock_guard lock(m_);
        RouteResult r;
        for (auto& [id, sub] : subs_) {
            for (const auto& f : sub.filters) {
                if (filter_matches(f, e.topic)) {
                    if (sub.sink(e)) {
                        ++r.delivered;
                    } else {
                        ++r.dropped;
                    }
                    break;  // at most one delivery per subscriber
                }
            }
        }
        return r;
    }

    std::size_t subscriber_count() const {
        std::lock_guard lock(m_);
        return subs_.size();
    }

private:
    struct Subscriber {
        Sink sink;
        std::vector<std::string> filters;
    };

    mutable std::mutex m_;
    std::map<SubscriberId, Subscriber> subs_;
    SubscriberId next_id_ = 1;
};

} // namespace ancsim
