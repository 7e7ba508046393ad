#pragma once

#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "ancsim/remote/envelope.hpp"
#include "ancsim/remote/telemetry.hpp"

namespace ancsim {

struct ReplayResult {
    std::vector<Envelope> envelopes;          // every well-formed line, in order
    std::vector<TelemetryFrame> timeline;     // telemetry payloads, in order
    std::size_t corrupt_lines = 0;
};

/// Rebuilds the telemetry timeline from a newline-delimited envelope log.
/// Lines that do not parse (including a truncated final line) are skipped and counted.
inline ReplayResult replay_log(std::istream& in) {
    ReplayResult r;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            Envelope e = parse_envelope(line);
            const auto topic = parse_topic(e.topic);
            if (topic && topic->kind == TopicKind::UnitTelemetry) {
                r.timeline.push_back(e.payload.get<TelemetryFrame>());
            }
            r.envelopes.push_back(std::move(e));
        } catch (const std::exception&) {
            ++r.corrupt_lines;
        }
    }
    return r;
}

inline ReplayResult replay_log(const std::string& text) {
    std::istringstream in(text);
    return replay_log(in);
}

/// Re-serializes the well-formed envelopes, one per line.
inline std::string serialize_log(const std::vector<Envelope>& envs) {
    std::string out;
    for (const auto& e : envs) {
        out += to_line(e);
        out += '\n';
    }
    return out;
}

} // namespace ancsim
