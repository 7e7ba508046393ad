#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

#include "ancsim/errors.hpp"

namespace ancsim {

using json = nlohmann::json;

/// One message on the control plane. Serialized as a single JSON line.
struct Envelope {
    std::string topic;
    std::uint64_t seq = 0;
    json payload = json::object();

    friend bool operator==(const Envelope&, const Envelope&) = default;
};

inline void to_json(json& j, const Envelope& e) { j = json{{"topic", e.topic}, {"seq", e.seq}, {"payload", e.payload}}; }

inline void from_json(const json& j, Envelope& e) {
    if (!j.is_object()) throw ConfigError("envelope must be a JSON object");
    if (!j.contains("topic") || !j.at("topic").is_string()) throw ConfigError("envelope needs a string 'topic'");
    if (!j.contains("seq") || !j.at("seq").is_number_unsigned()) throw ConfigError("envelope needs an unsigned 'seq'");
    e.topic = j.at("topic").get<std::string>();
    e.seq = j.at("seq").get<std::uint64_t>();
    e.payload = j.value("payload", json::object());
}

inline std::string to_line(const Envelope& e) { return json(e).dump(); }

inline Envelope parse_envelope(std::string_view line) {
    json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) throw ConfigError("envelope is not valid JSON");
    return j.get<Envelope>();
}

enum class TopicKind { UnitCmd, UnitTelemetry, UnitAck, UnitEvent, BrokerHello, BrokerSubscribe };

struct Topic {
    TopicKind kind;
    unsigned unit = 0;  // meaningful for unit/* topics
};

/// Accepts `unit/<id>/(cmd|telemetry|ack|event)` and `broker/(hello|subscribe)`.
inline std::optional<Topic> parse_topic(std::string_view t) {
    if (t == "broker/hello") return Topic{TopicKind::BrokerHello};
    if (t == "broker/subscribe") return Topic{TopicKind::BrokerSubscribe};
    constexpr std::string_view prefix = "unit/";
    if (!t.starts_with(prefix)) return std::nullopt;
    t.remove_prefix(prefix.size());
    const auto slash = t.find('/');
    if (slash == std::string_view::npos || slash == 0) return std::nullopt;
    const auto id = t.substr(0, slash);
    unsigned unit = 0;
    const auto [ptr, ec] = std::from_chars(id.data(), id.data() + id.size(), unit);
    if (ec != std::errc{} || ptr != id.data() + id.size()) return std::nullopt;
    const auto leaf = t.substr(slash + 1);
    if (leaf == "cmd") return Topic{TopicKind::UnitCmd, unit};
    if (leaf == "telemetry") return Topic{TopicKind::UnitTelemetry, unit};
    if (leaf == "ack") return Topic{TopicKind::UnitAck, unit};
    if (leaf == "event") return Topic{TopicKind::UnitEvent, unit};
    return std::nullopt;
}

inline std::string unit_topic(unsigned unit, std::string_view leaf) {
    return "unit/" + std::to_string(unit) + "/" + std::string(leaf);
}

/// A filter is an exact topic, `#`, or a `/`-terminated prefix followed by `#`.
inline bool valid_filter(std::string_view f) {
    if (f.empty()) return false;
    if (f.back() == '#') {
        f.remove_suffix(1);
        return f.empty() || (f.back() == '/' && f.find('#') == std::string_view::npos);
    }
    return parse_topic(f).has_value();
}

inline bool filter_matches(std::string_view filter, std::string_view topic) {
    if (!filter.empty() && filter.back() == '#') {
        filter.remove_suffix(1);
        return topic.starts_with(filter);
    }
    return filter == topic;
}

} // namespace ancsim
