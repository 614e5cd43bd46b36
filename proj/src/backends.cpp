#include "speeji/backends.hpp"
#include "speeji/codec.hpp"
#include "speeji/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

namespace speeji {

using Kind = BackendError::Kind;

void BackendConfig::validate() const {
    if (!(timeout_s > 0.0) || !std::isfinite(timeout_s)) {
        throw ConfigError(fmt::format("backend timeout must be positive, got {}", timeout_s));
    }
    if (retry_count < 0) {
        throw ConfigError(fmt::format("retry count must be >= 0, got {}", retry_count));
    }
    if (kind == Kind::External && endpoint_url.empty()) {
        throw ConfigError("external backend requires an endpoint URL");
    }
}

// ---------------------------------------------------------------------------
// Baseline

VadPoint baseline_analyze(const AudioClip& clip, const TimeSpan& span) {
    const AcousticFeatures f = features(clip, span);
    return VadPoint::clamped((f.spectral_centroid_hz - 1500.0) / 1500.0,
                             (f.rms_dbfs + 40.0) / 15.0 - 1.0,
                             (f.zero_crossings_per_s - 1500.0) / 1500.0);
}

std::vector<VadPoint> BaselineBackend::analyze(const AudioClip& clip,
                                               std::span<const TimeSpan> spans) {
    std::vector<VadPoint> out;
    out.reserve(spans.size());
    for (const auto& s : spans) out.push_back(baseline_analyze(clip, s));
    return out;
}

// ---------------------------------------------------------------------------
// Wire format

namespace {

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

std::vector<std::uint8_t> pcm16_le(const AudioClip& clip) {
    std::vector<std::uint8_t> out;
    out.reserve(clip.size() * 2);
    for (float x : clip.samples()) {
        const double scaled = std::round(static_cast<double>(x) * 32768.0);
        const auto q = static_cast<std::uint16_t>(
            static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0)));
        out.push_back(static_cast<std::uint8_t>(q & 0xFF));
        out.push_back(static_cast<std::uint8_t>(q >> 8));
    }
    return out;
}

nlohmann::json parse_body(std::string_view body, std::size_t spans) {
    try {
        return nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw BackendError(Kind::MalformedResponse,
                           fmt::format("response is not JSON: {}", e.what()), all_indices(spans));
    }
}

}  // namespace

std::string build_request_body(const AudioClip& clip, std::span<const TimeSpan> spans) {
    nlohmann::ordered_json body;
    body["sample_rate"] = clip.sample_rate();
    auto arr = nlohmann::ordered_json::array();
    for (const auto& s : spans) arr.push_back({{"start_s", s.start_s}, {"end_s", s.end_s}});
    body["spans"] = std::move(arr);
    body["audio_b64"] = base64_encode(pcm16_le(clip));
    return body.dump();
}

std::vector<VadPoint> parse_analyze_response(std::string_view body, std::size_t expected) {
    const auto doc = parse_body(body, expected);
    if (!doc.is_object() || !doc.contains("results") || !doc["results"].is_array()) {
        throw BackendError(Kind::MalformedResponse, "response lacks a \"results\" array",
                           all_indices(expected));
    }
    const auto& results = doc["results"];
    if (results.size() != expected) {
        // Positions cannot be trusted once the arity is off.
        throw BackendError(Kind::MalformedResponse,
                           fmt::format("expected {} results, got {}", expected, results.size()),
                           all_indices(expected));
    }

    std::vector<VadPoint> out;
    std::vector<std::size_t> out_of_range;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        double raw[3];
        const char* keys[3] = {"valence", "arousal", "dominance"};
        for (int k = 0; k < 3; ++k) {
            if (!r.is_object() || !r.contains(keys[k]) || !r[keys[k]].is_number()) {
                throw BackendError(Kind::MalformedResponse,
                                   fmt::format("result {} lacks numeric \"{}\"", i, keys[k]), {i});
            }
            raw[k] = r[keys[k]].get<double>();
        }
        const bool ok = std::all_of(std::begin(raw), std::end(raw),
                                    [](double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; });
        if (!ok) {
            out_of_range.push_back(i);
            continue;
        }
        out.push_back(VadPoint::clamped(2.0 * raw[0] - 1.0, 2.0 * raw[1] - 1.0, 2.0 * raw[2] - 1.0));
    }
    if (!out_of_range.empty()) {
        throw BackendError(Kind::OutOfRange,
                           fmt::format("{} result(s) outside the [0, 1] scale", out_of_range.size()),
                           std::move(out_of_range));
    }
    return out;
}

void validate_transcript(std::span<const TranscriptSegment> segments) {
    double prev_end = 0.0;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& s = segments[i];
        if (!std::isfinite(s.start_s) || !std::isfinite(s.end_s) || s.start_s < 0.0 ||
            !(s.start_s < s.end_s)) {
            throw BackendError(Kind::MalformedResponse,
                               fmt::format("segment {} has invalid times [{}, {}]", i, s.start_s,
                                           s.end_s));
        }
        if (i > 0 && s.start_s < prev_end) {
            throw BackendError(Kind::MalformedResponse,
                               fmt::format("segment {} overlaps or precedes segment {}", i, i - 1));
        }
        prev_end = s.end_s;
    }
}

std::vector<TranscriptSegment> parse_transcribe_response(std::string_view body) {
    const auto doc = parse_body(body, 0);
    if (!doc.is_object() || !doc.contains("segments") || !doc["segments"].is_array()) {
        throw BackendError(Kind::MalformedResponse, "response lacks a \"segments\" array");
    }
    std::vector<TranscriptSegment> out;
    for (const auto& s : doc["segments"]) {
        if (!s.is_object() || !s.contains("start_s") || !s["start_s"].is_number() ||
            !s.contains("end_s") || !s["end_s"].is_number() || !s.contains("text") ||
            !s["text"].is_string()) {
            throw BackendError(Kind::MalformedResponse,
                               fmt::format("segment {} must have start_s, end_s and text",
                                           out.size()));
        }
        out.push_back({s["start_s"].get<double>(), s["end_s"].get<double>(),
                       s["text"].get<std::string>()});
    }
    validate_transcript(out);
    return out;
}

// ---------------------------------------------------------------------------
// HTTP transport

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path prefix without trailing slash
};

Endpoint split_url(const std::string& url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) {
        throw ConfigError(fmt::format("endpoint URL {} lacks a scheme", url));
    }
    const auto path = url.find('/', scheme + 3);
    Endpoint e;
    e.origin = url.substr(0, path);
    if (path != std::string::npos) {
        e.prefix = url.substr(path);
        while (!e.prefix.empty() && e.prefix.back() == '/') e.prefix.pop_back();
    }
    return e;
}

std::string post_json(const BackendConfig& cfg, const std::string& route, const std::string& body,
                      std::size_t spans) {
    const Endpoint ep = split_url(cfg.endpoint_url);
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(cfg.timeout_s));
    const auto secs = static_cast<time_t>(timeout.count() / 1000000);
    const auto usecs = static_cast<time_t>(timeout.count() % 1000000);

    std::optional<BackendError> last;
    for (int attempt = 0; attempt <= cfg.retry_count; ++attempt) {
        httplib::Client client(ep.origin);
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);

        const auto started = std::chrono::steady_clock::now();
        auto res = client.Post(ep.prefix + route, body, "application/json");
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;

        if (!res) {
            const auto err = res.error();
            const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                                   elapsed.count() >= 0.9 * cfg.timeout_s;
            last.emplace(timed_out ? Kind::Timeout : Kind::Connection,
                         fmt::format("{}{}: {}", cfg.endpoint_url, route,
                                     timed_out ? "timed out" : httplib::to_string(err)),
                         all_indices(spans));
            continue;
        }
        if (res->status >= 500) {
            last.emplace(Kind::HttpStatus,
                         fmt::format("{}{}: HTTP {}", cfg.endpoint_url, route, res->status),
                         all_indices(spans));
            continue;
        }
        if (res->status != 200) {
            throw BackendError(Kind::HttpStatus,
                               fmt::format("{}{}: HTTP {}", cfg.endpoint_url, route, res->status),
                               all_indices(spans));
        }
        return res->body;
    }
    throw *last;
}

}  // namespace

ExternalSerBackend::ExternalSerBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.kind = BackendConfig::Kind::External;
    cfg_.validate();
    split_url(cfg_.endpoint_url);
}

std::vector<VadPoint> ExternalSerBackend::analyze(const AudioClip& clip,
                                                  std::span<const TimeSpan> spans) {
    const std::string body = post_json(cfg_, "/analyze", build_request_body(clip, spans),
                                       spans.size());
    return parse_analyze_response(body, spans.size());
}

ExternalTranscriber::ExternalTranscriber(BackendConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.kind = BackendConfig::Kind::External;
    cfg_.validate();
    split_url(cfg_.endpoint_url);
}

std::vector<TranscriptSegment> ExternalTranscriber::transcribe(const AudioClip& clip) {
    const TimeSpan whole{0.0, clip.duration_s()};
    const std::string body =
        post_json(cfg_, "/transcribe", build_request_body(clip, std::span(&whole, 1)), 0);
    return parse_transcribe_response(body);
}

// ---------------------------------------------------------------------------
// Alignment

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

}  // namespace

std::vector<std::string> align(std::span<const TimeSpan> anchors,
                               std::span<const TranscriptSegment> transcript) {
    std::vector<std::string> out;
    out.reserve(anchors.size());
    for (const auto& a : anchors) {
        std::string text;
        for (const auto& seg : transcript) {
            const double overlap = std::min(a.end_s, seg.end_s) - std::max(a.start_s, seg.start_s);
            if (overlap <= 0.0) continue;
            const auto piece = trim(seg.text);
            if (piece.empty()) continue;
            if (!text.empty()) text += ' ';
            text += piece;
        }
        out.push_back(std::move(text));
    }
    return out;
}

}  // namespace speeji
