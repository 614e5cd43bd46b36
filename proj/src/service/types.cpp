#include "speeji/service/types.hpp"

#include <cctype>
#include <charconv>

#include <fmt/format.h>
#include <json.hpp>

namespace speeji::service {

using namespace std::chrono;

Timestamp now_utc() { return time_point_cast<microseconds>(system_clock::now()); }

std::string format_rfc3339(Timestamp t) {
    const auto day = floor<days>(t);
    const year_month_day ymd{day};
    const hh_mm_ss<microseconds> tod{t - day};
    return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}.{:06d}Z", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                       tod.hours().count(), tod.minutes().count(), tod.seconds().count(),
                       tod.subseconds().count());
}

namespace {

bool read_int(std::string_view s, std::size_t& pos, std::size_t digits, int& out) {
    if (pos + digits > s.size()) return false;
    for (std::size_t i = 0; i < digits; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[pos + i]))) return false;
    }
    std::from_chars(s.data() + pos, s.data() + pos + digits, out);
    pos += digits;
    return true;
}

bool expect(std::string_view s, std::size_t& pos, char c) {
    if (pos >= s.size() || s[pos] != c) return false;
    ++pos;
    return true;
}

}  // namespace

std::optional<Timestamp> parse_rfc3339(std::string_view s) {
    std::size_t pos = 0;
    int y, mo, d, h, mi, sec;
    if (!read_int(s, pos, 4, y) || !expect(s, pos, '-') || !read_int(s, pos, 2, mo) ||
        !expect(s, pos, '-') || !read_int(s, pos, 2, d)) {
        return std::nullopt;
    }
    if (pos >= s.size() || (s[pos] != 'T' && s[pos] != 't' && s[pos] != ' ')) return std::nullopt;
    ++pos;
    if (!read_int(s, pos, 2, h) || !expect(s, pos, ':') || !read_int(s, pos, 2, mi) ||
        !expect(s, pos, ':') || !read_int(s, pos, 2, sec)) {
        return std::nullopt;
    }
    long long micros = 0;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        int digits = 0;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
            if (digits < 6) micros = micros * 10 + (s[pos] - '0');
            ++digits;
            ++pos;
        }
        if (digits == 0) return std::nullopt;
        for (int i = digits; i < 6; ++i) micros *= 10;
    }
    minutes offset{0};
    if (pos < s.size() && (s[pos] == 'Z' || s[pos] == 'z')) {
        ++pos;
    } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
        const int sign = s[pos] == '-' ? -1 : 1;
        ++pos;
        int oh, om;
        if (!read_int(s, pos, 2, oh) || !expect(s, pos, ':') || !read_int(s, pos, 2, om)) {
            return std::nullopt;
        }
        offset = minutes(sign * (oh * 60 + om));
    } else {
        return std::nullopt;
    }
    if (pos != s.size()) return std::nullopt;

    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) return std::nullopt;
    return Timestamp{sys_days{ymd}} + hours{h} + minutes{mi} + seconds{sec} + microseconds{micros} -
           offset;
}

std::string_view to_string(MessageStatus s) {
    switch (s) {
        case MessageStatus::Processing: return "processing";
        case MessageStatus::Done: return "done";
        case MessageStatus::AugmentationFailed: return "augmentation_failed";
    }
    return "unknown";
}

MessageStatus from_augmentation(AugmentationStatus s) {
    return s == AugmentationStatus::Done ? MessageStatus::Done : MessageStatus::AugmentationFailed;
}

std::string to_json(const VoiceMessage& m) {
    nlohmann::ordered_json j;
    j["message_id"] = m.message_id;
    j["conversation_id"] = m.conversation_id;
    j["sender"] = m.sender;
    j["created_at"] = format_rfc3339(m.created_at);
    j["audio_ref"] = m.audio_ref;
    j["status"] = to_string(m.status);
    std::string out = j.dump();
    if (m.descriptor) {
        out.pop_back();
        out += ",\"descriptor\":";
        out += to_json(*m.descriptor);
        out += '}';
    }
    return out;
}

std::string to_json(const Conversation& c) {
    nlohmann::ordered_json j;
    j["conversation_id"] = c.conversation_id;
    j["title"] = c.title;
    j["created_at"] = format_rfc3339(c.created_at);
    return j.dump();
}

std::string to_json(const Event& e) {
    nlohmann::ordered_json j;
    j["type"] = e.type;
    j["conversation_id"] = e.conversation_id;
    j["message_id"] = e.message_id;
    j["status"] = to_string(e.status);
    return j.dump();
}

}  // namespace speeji::service
