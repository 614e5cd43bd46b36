#include "speeji/descriptor.hpp"
#include "speeji/errors.hpp"

#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

namespace speeji {

std::string_view to_string(AugmentationStatus s) {
    switch (s) {
        case AugmentationStatus::Done: return "done";
        case AugmentationStatus::AugmentationFailed: return "augmentation_failed";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// Canonical writer

namespace {

std::string fixed6(double x) {
    std::string s = fmt::format("{:.6f}", x);
    if (s == "-0.000000") s = "0.000000";
    return s;
}

}  // namespace

double canonical_real(double x) { return std::stod(fixed6(x)); }

VadPoint canonical_vad(const VadPoint& p) {
    return VadPoint::clamped(canonical_real(p.valence()), canonical_real(p.arousal()),
                             canonical_real(p.dominance()));
}

namespace {

class Writer {
public:
    Writer& raw(std::string_view s) {
        out_ += s;
        return *this;
    }

    Writer& key(std::string_view k) {
        comma();
        out_ += '"';
        out_ += k;
        out_ += "\":";
        fresh_ = true;
        return *this;
    }

    Writer& real(double x) {
        comma();
        out_ += fixed6(x);
        return *this;
    }

    Writer& integer(std::size_t x) {
        comma();
        out_ += std::to_string(x);
        return *this;
    }

    Writer& boolean(bool b) {
        comma();
        out_ += b ? "true" : "false";
        return *this;
    }

    Writer& string(std::string_view s) {
        comma();
        out_ += nlohmann::json(std::string(s)).dump();
        return *this;
    }

    Writer& null() {
        comma();
        out_ += "null";
        return *this;
    }

    Writer& begin_object() { return open('{'); }
    Writer& end_object() { return close('}'); }
    Writer& begin_array() { return open('['); }
    Writer& end_array() { return close(']'); }

    std::string take() { return std::move(out_); }

private:
    void comma() {
        if (!fresh_) out_ += ',';
        fresh_ = false;
    }

    Writer& open(char c) {
        comma();
        out_ += c;
        fresh_ = true;
        return *this;
    }

    Writer& close(char c) {
        out_ += c;
        fresh_ = false;
        return *this;
    }

    std::string out_;
    bool fresh_ = true;
};

void write_vad(Writer& w, const VadPoint& p) {
    w.begin_object();
    w.key("valence").real(p.valence());
    w.key("arousal").real(p.arousal());
    w.key("dominance").real(p.dominance());
    w.end_object();
}

void write_opt_vad(Writer& w, const std::optional<VadPoint>& p) {
    if (p) {
        write_vad(w, *p);
    } else {
        w.null();
    }
}

void write_emoji(Writer& w, const EmojiEntry& e) {
    w.begin_object();
    w.key("glyph").string(e.glyph);
    w.key("label").string(e.label);
    w.key("valence").real(e.valence);
    w.key("arousal").real(e.arousal);
    w.end_object();
}

void write_opt_emoji(Writer& w, const std::optional<EmojiEntry>& e) {
    if (e) {
        write_emoji(w, *e);
    } else {
        w.null();
    }
}

}  // namespace

std::string to_json(const AugmentationDescriptor& d) {
    Writer w;
    w.begin_object();
    w.key("message_id").string(d.message_id);
    w.key("status").string(to_string(d.status));
    w.key("generated_by").string(d.generated_by);
    w.key("engine_version").string(d.engine_version);
    w.key("duration_s").real(d.duration_s);

    w.key("chunks").begin_array();
    for (const auto& c : d.chunks) {
        w.begin_object();
        w.key("index").integer(c.span.index);
        w.key("start_s").real(c.span.start_s);
        w.key("end_s").real(c.span.end_s);
        w.key("vad");
        write_vad(w, c.vad);
        w.end_object();
    }
    w.end_array();

    w.key("overall");
    write_opt_vad(w, d.overall);
    w.key("ending_span").begin_object();
    w.key("start_s").real(d.ending_span.start_s);
    w.key("end_s").real(d.ending_span.end_s);
    w.end_object();
    w.key("ending");
    write_opt_vad(w, d.ending);
    w.key("overall_emoji");
    write_opt_emoji(w, d.overall_emoji);
    w.key("ending_emoji");
    write_opt_emoji(w, d.ending_emoji);

    w.key("bars").begin_array();
    for (const auto& b : d.bars) {
        w.begin_object();
        w.key("start_s").real(b.start_s);
        w.key("end_s").real(b.end_s);
        w.key("height").real(b.height);
        w.key("color").begin_object();
        w.key("hue").real(b.color.hue);
        w.key("saturation").real(b.color.saturation);
        w.key("lightness").real(b.color.lightness);
        w.key("neutral").boolean(b.color.neutral);
        w.end_object();
        w.end_object();
    }
    w.end_array();

    w.key("interest_segments").begin_array();
    for (const auto& s : d.interest_segments) {
        w.begin_object();
        w.key("start_s").real(s.start_s);
        w.key("end_s").real(s.end_s);
        w.key("centroid");
        write_vad(w, s.centroid);
        w.key("emoji");
        write_emoji(w, s.emoji);
        w.key("text").string(s.text);
        w.end_object();
    }
    w.end_array();

    w.key("transcript").begin_array();
    for (const auto& t : d.transcript) {
        w.begin_object();
        w.key("start_s").real(t.start_s);
        w.key("end_s").real(t.end_s);
        w.key("text").string(t.text);
        w.end_object();
    }
    w.end_array();

    if (d.status == AugmentationStatus::AugmentationFailed) {
        w.key("failure_reason").string(d.failure_reason);
    }
    w.end_object();
    return w.take();
}

// ---------------------------------------------------------------------------
// Validating reader

namespace {

using Json = nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw SchemaError(path.empty() ? "/" : path, what);
}

const Json& field(const Json& obj, const std::string& path, const char* key) {
    if (!obj.is_object()) fail(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(path + "/" + key, "required field is missing");
    return *it;
}

double real(const Json& obj, const std::string& path, const char* key) {
    const Json& v = field(obj, path, key);
    if (!v.is_number()) fail(path + "/" + key, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(path + "/" + key, "expected a finite number");
    return x;
}

double real_in(const Json& obj, const std::string& path, const char* key, double lo, double hi) {
    const double x = real(obj, path, key);
    if (x < lo || x > hi) fail(path + "/" + key, fmt::format("{} outside [{}, {}]", x, lo, hi));
    return x;
}

std::string text(const Json& obj, const std::string& path, const char* key) {
    const Json& v = field(obj, path, key);
    if (!v.is_string()) fail(path + "/" + key, "expected a string");
    return v.get<std::string>();
}

const Json& array(const Json& obj, const std::string& path, const char* key) {
    const Json& v = field(obj, path, key);
    if (!v.is_array()) fail(path + "/" + key, "expected an array");
    return v;
}

VadPoint read_vad(const Json& v, const std::string& path) {
    if (!v.is_object()) fail(path, "expected an object");
    return VadPoint(real_in(v, path, "valence", -1.0, 1.0), real_in(v, path, "arousal", -1.0, 1.0),
                    real_in(v, path, "dominance", -1.0, 1.0));
}

std::optional<VadPoint> read_opt_vad(const Json& obj, const std::string& path, const char* key) {
    const Json& v = field(obj, path, key);
    if (v.is_null()) return std::nullopt;
    return read_vad(v, path + "/" + key);
}

EmojiEntry read_emoji(const Json& v, const std::string& path) {
    if (!v.is_object()) fail(path, "expected an object");
    EmojiEntry e;
    e.glyph = text(v, path, "glyph");
    if (e.glyph.empty()) fail(path + "/glyph", "glyph is empty");
    e.label = text(v, path, "label");
    e.valence = real_in(v, path, "valence", -1.0, 1.0);
    e.arousal = real_in(v, path, "arousal", -1.0, 1.0);
    return e;
}

std::optional<EmojiEntry> read_opt_emoji(const Json& obj, const std::string& path,
                                         const char* key) {
    const Json& v = field(obj, path, key);
    if (v.is_null()) return std::nullopt;
    return read_emoji(v, path + "/" + key);
}

}  // namespace

AugmentationDescriptor descriptor_from_json(std::string_view body) {
    Json doc;
    try {
        doc = Json::parse(body);
    } catch (const Json::parse_error& e) {
        fail("", fmt::format("invalid JSON: {}", e.what()));
    }
    if (!doc.is_object()) fail("", "expected an object");

    AugmentationDescriptor d;
    d.message_id = text(doc, "", "message_id");

    const std::string status = text(doc, "", "status");
    if (status == "done") {
        d.status = AugmentationStatus::Done;
    } else if (status == "augmentation_failed") {
        d.status = AugmentationStatus::AugmentationFailed;
    } else {
        fail("/status", fmt::format("unknown status \"{}\"", status));
    }
    d.generated_by = text(doc, "", "generated_by");
    if (d.generated_by != kGeneratedBy) fail("/generated_by", "must be \"ai\"");
    d.engine_version = text(doc, "", "engine_version");
    d.duration_s = real(doc, "", "duration_s");
    if (!(d.duration_s > 0.0)) fail("/duration_s", "must be positive");

    const Json& chunks = array(doc, "", "chunks");
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        const std::string p = fmt::format("/chunks/{}", i);
        const Json& c = chunks[i];
        const Json& idx = field(c, p, "index");
        if (!idx.is_number_unsigned()) fail(p + "/index", "expected a non-negative integer");
        ChunkResult r;
        r.span.index = idx.get<std::size_t>();
        r.span.start_s = real(c, p, "start_s");
        r.span.end_s = real(c, p, "end_s");
        if (!(r.span.start_s >= 0.0 && r.span.start_s < r.span.end_s)) {
            fail(p, "span must satisfy 0 <= start_s < end_s");
        }
        r.vad = read_vad(field(c, p, "vad"), p + "/vad");
        d.chunks.push_back(r);
    }

    d.overall = read_opt_vad(doc, "", "overall");
    const Json& es = field(doc, "", "ending_span");
    d.ending_span.start_s = real(es, "/ending_span", "start_s");
    d.ending_span.end_s = real(es, "/ending_span", "end_s");
    if (!(d.ending_span.start_s >= 0.0 && d.ending_span.start_s < d.ending_span.end_s)) {
        fail("/ending_span", "span must satisfy 0 <= start_s < end_s");
    }
    d.ending = read_opt_vad(doc, "", "ending");
    d.overall_emoji = read_opt_emoji(doc, "", "overall_emoji");
    d.ending_emoji = read_opt_emoji(doc, "", "ending_emoji");

    const Json& bars = array(doc, "", "bars");
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const std::string p = fmt::format("/bars/{}", i);
        const Json& b = bars[i];
        WaveBar bar;
        bar.start_s = real(b, p, "start_s");
        bar.end_s = real(b, p, "end_s");
        bar.height = real_in(b, p, "height", 0.0, 1.0);
        const Json& c = field(b, p, "color");
        const std::string cp = p + "/color";
        bar.color.hue = real_in(c, cp, "hue", 0.0, 360.0);
        bar.color.saturation = real_in(c, cp, "saturation", 0.0, 100.0);
        bar.color.lightness = real_in(c, cp, "lightness", 0.0, 100.0);
        const Json& n = field(c, cp, "neutral");
        if (!n.is_boolean()) fail(cp + "/neutral", "expected a boolean");
        bar.color.neutral = n.get<bool>();
        d.bars.push_back(bar);
    }

    const Json& segs = array(doc, "", "interest_segments");
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const std::string p = fmt::format("/interest_segments/{}", i);
        const Json& s = segs[i];
        InterestSegment seg;
        seg.start_s = real(s, p, "start_s");
        seg.end_s = real(s, p, "end_s");
        if (!(seg.start_s >= 0.0 && seg.start_s < seg.end_s)) {
            fail(p, "span must satisfy 0 <= start_s < end_s");
        }
        seg.centroid = read_vad(field(s, p, "centroid"), p + "/centroid");
        seg.emoji = read_emoji(field(s, p, "emoji"), p + "/emoji");
        seg.text = text(s, p, "text");
        d.interest_segments.push_back(std::move(seg));
    }

    const Json& transcript = array(doc, "", "transcript");
    for (std::size_t i = 0; i < transcript.size(); ++i) {
        const std::string p = fmt::format("/transcript/{}", i);
        const Json& t = transcript[i];
        d.transcript.push_back({real(t, p, "start_s"), real(t, p, "end_s"), text(t, p, "text")});
    }

    if (d.status == AugmentationStatus::AugmentationFailed) {
        if (auto it = doc.find("failure_reason"); it != doc.end()) {
            if (!it->is_string()) fail("/failure_reason", "expected a string");
            d.failure_reason = it->get<std::string>();
        }
    } else {
        if (d.chunks.empty()) fail("/chunks", "done descriptor has no chunks");
        if (!d.overall) fail("/overall", "done descriptor requires a value");
        if (!d.ending) fail("/ending", "done descriptor requires a value");
        if (!d.overall_emoji) fail("/overall_emoji", "done descriptor requires an emoji");
        if (!d.ending_emoji) fail("/ending_emoji", "done descriptor requires an emoji");
    }
    return d;
}

AugmentationDescriptor canonicalize(const AugmentationDescriptor& d) {
    return descriptor_from_json(to_json(d));
}

}  // namespace speeji
