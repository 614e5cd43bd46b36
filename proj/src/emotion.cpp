#include "speeji/emotion.hpp"

#include "speeji/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace speeji {

namespace {

void check_axis(double x, const char* name) {
    if (!std::isfinite(x)) {
        throw InputError(fmt::format("{} is not finite", name));
    }
}

}  // namespace

VadPoint::VadPoint(double valence, double arousal, double dominance)
    : valence_(valence), arousal_(arousal), dominance_(dominance) {
    for (auto [x, name] : {std::pair{valence, "valence"}, std::pair{arousal, "arousal"},
                           std::pair{dominance, "dominance"}}) {
        check_axis(x, name);
        if (x < -1.0 || x > 1.0) {
            throw InputError(fmt::format("{} {} outside [-1, 1]", name, x));
        }
    }
}

VadPoint VadPoint::clamped(double valence, double arousal, double dominance) {
    check_axis(valence, "valence");
    check_axis(arousal, "arousal");
    check_axis(dominance, "dominance");
    return VadPoint(std::clamp(valence, -1.0, 1.0), std::clamp(arousal, -1.0, 1.0),
                    std::clamp(dominance, -1.0, 1.0));
}

double VadPoint::va_norm() const noexcept { return std::hypot(valence_, arousal_); }

// ---------------------------------------------------------------------------
// Emoji table

EmojiTable::EmojiTable(std::vector<EmojiEntry> entries, std::string source)
    : entries_(std::move(entries)), source_(std::move(source)) {
    if (entries_.empty()) {
        throw ConfigError("emoji table is empty");
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        if (e.glyph.empty()) {
            throw ConfigError(fmt::format("entry {}: empty glyph", i));
        }
        if (!seen.insert(e.glyph).second) {
            throw ConfigError(fmt::format("entry {}: duplicate glyph {}", i, e.glyph));
        }
        for (double x : {e.valence, e.arousal}) {
            if (!std::isfinite(x) || x < -1.0 || x > 1.0) {
                throw ConfigError(
                    fmt::format("entry {} ({}): coordinate {} outside [-1, 1]", i, e.label, x));
            }
        }
    }
}

const EmojiTable& EmojiTable::builtin() {
    // Positions follow the valence/arousal ratings of facial emojis reported by
    // Kutsuzawa et al. (2022), rescaled to [-1, 1] and rounded; curated
    // estimates, not verbatim ratings. Keep in sync with data/emoji_table.json.
    static const EmojiTable table(
        {
            {"\U0001F602", 0.70, 0.70, "face with tears of joy"},
            {"\U0001F923", 0.72, 0.82, "rolling on the floor laughing"},
            {"\U0001F606", 0.68, 0.60, "grinning squinting face"},
            {"\U0001F601", 0.70, 0.50, "beaming face with smiling eyes"},
            {"\U0001F60D", 0.80, 0.45, "smiling face with heart-eyes"},
            {"\U0001F970", 0.82, 0.30, "smiling face with hearts"},
            {"\U0001F60A", 0.66, 0.15, "smiling face with smiling eyes"},
            {"\U0001F642", 0.35, -0.15, "slightly smiling face"},
            {"\U0001F60C", 0.40, -0.50, "relieved face"},
            {"\U0001F610", 0.00, -0.40, "neutral face"},
            {"\U0001F634", 0.05, -0.85, "sleeping face"},
            {"\U0001F632", 0.15, 0.75, "astonished face"},
            {"\U0001F633", -0.10, 0.55, "flushed face"},
            {"\U0001F631", -0.55, 0.90, "face screaming in fear"},
            {"\U0001F628", -0.60, 0.62, "fearful face"},
            {"\U0001F621", -0.80, 0.78, "enraged face"},
            {"\U0001F620", -0.70, 0.50, "angry face"},
            {"\U0001F62D", -0.75, 0.30, "loudly crying face"},
            {"\U0001F629", -0.50, 0.15, "weary face"},
            {"\U0001F622", -0.65, -0.05, "crying face"},
            {"\U0001F61E", -0.55, -0.35, "disappointed face"},
            {"\U0001F614", -0.40, -0.55, "pensive face"},
        },
        "builtin: facial-emoji valence/arousal positions after Kutsuzawa et al. (2022), "
        "rescaled to [-1,1]");
    return table;
}

EmojiTable EmojiTable::from_json(std::string_view text, std::string default_source) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(fmt::format("emoji table: invalid JSON: {}", e.what()));
    }

    std::string source = std::move(default_source);
    const nlohmann::json* list = &doc;
    if (doc.is_object()) {
        if (auto it = doc.find("source"); it != doc.end() && it->is_string()) {
            source = it->get<std::string>();
        }
        auto it = doc.find("entries");
        if (it == doc.end()) {
            throw ConfigError("emoji table: object form requires an \"entries\" array");
        }
        list = &*it;
    }
    if (!list->is_array()) {
        throw ConfigError("emoji table: expected a JSON array of entries");
    }

    std::vector<EmojiEntry> entries;
    entries.reserve(list->size());
    for (std::size_t i = 0; i < list->size(); ++i) {
        const auto& item = (*list)[i];
        auto fail = [&](const char* what) {
            throw ConfigError(fmt::format("emoji table entry {}: {}", i, what));
        };
        if (!item.is_object()) fail("not an object");
        EmojiEntry e;
        auto g = item.find("glyph");
        if (g == item.end() || !g->is_string()) fail("missing string \"glyph\"");
        e.glyph = g->get<std::string>();
        auto v = item.find("valence");
        if (v == item.end() || !v->is_number()) fail("missing number \"valence\"");
        e.valence = v->get<double>();
        auto a = item.find("arousal");
        if (a == item.end() || !a->is_number()) fail("missing number \"arousal\"");
        e.arousal = a->get<double>();
        if (auto l = item.find("label"); l != item.end()) {
            if (!l->is_string()) fail("\"label\" must be a string");
            e.label = l->get<std::string>();
        }
        entries.push_back(std::move(e));
    }
    return EmojiTable(std::move(entries), std::move(source));
}

EmojiTable EmojiTable::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError(fmt::format("cannot read emoji table {}", path));
    }
    std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return from_json(text, "file:" + path);
}

std::string EmojiTable::to_json() const {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& e : entries_) {
        arr.push_back({{"glyph", e.glyph},
                       {"valence", e.valence},
                       {"arousal", e.arousal},
                       {"label", e.label}});
    }
    return arr.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Mapping

const EmojiEntry& nearest_emoji(const VadPoint& p, const EmojiTable& table) {
    const auto entries = table.entries();
    if (entries.empty()) {
        throw ConfigError("emoji table is empty");
    }
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const double dv = entries[i].valence - p.valence();
        const double da = entries[i].arousal - p.arousal();
        const double d2 = dv * dv + da * da;
        if (d2 < best_d2) {  // strict: earlier entries win ties
            best_d2 = d2;
            best = i;
        }
    }
    return entries[best];
}

bool is_neutral(const VadPoint& p, double tau_neutral) { return p.va_norm() < tau_neutral; }

BarColor BarColor::neutral_gray() { return BarColor{0.0, 0.0, 62.0, true}; }

std::string BarColor::css() const {
    return fmt::format("hsl({:.2f},{:.2f}%,{:.2f}%)", hue, saturation, lightness);
}

BarColor color_for(const VadPoint& p, double tau_neutral) {
    if (!(tau_neutral >= 0.0 && tau_neutral < 1.0)) {
        throw InputError(fmt::format("neutral threshold {} outside [0, 1)", tau_neutral));
    }
    if (is_neutral(p, tau_neutral)) {
        return BarColor::neutral_gray();
    }
    return BarColor{
        120.0 * (p.valence() + 1.0) / 2.0,
        35.0 + 50.0 * (p.arousal() + 1.0) / 2.0,
        50.0,
        false,
    };
}

std::vector<InterestSegment> interest_segments(std::span<const ChunkEmotion> chunks,
                                               double tau_interest,
                                               const EmojiTable& table) {
    std::vector<InterestSegment> out;
    std::size_t i = 0;
    while (i < chunks.size()) {
        if (chunks[i].vad.va_norm() < tau_interest) {
            ++i;
            continue;
        }
        std::size_t j = i;
        double total = 0.0, v = 0.0, a = 0.0, d = 0.0;
        for (; j < chunks.size() && chunks[j].vad.va_norm() >= tau_interest; ++j) {
            const double w = chunks[j].span.length();
            total += w;
            v += w * chunks[j].vad.valence();
            a += w * chunks[j].vad.arousal();
            d += w * chunks[j].vad.dominance();
        }
        const double start = chunks[i].span.start_s;
        const double end = chunks[j - 1].span.end_s;
        // Tolerate accumulated rounding when spans sum to exactly 0.5 s.
        if (end - start >= kMinInterestSeconds - 1e-9 && total > 0.0) {
            InterestSegment seg;
            seg.start_s = start;
            seg.end_s = end;
            seg.centroid = VadPoint::clamped(v / total, a / total, d / total);
            seg.emoji = nearest_emoji(seg.centroid, table);
            out.push_back(std::move(seg));
        }
        i = j;
    }
    return out;
}

}  // namespace speeji
