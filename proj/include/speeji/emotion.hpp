#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace speeji {

inline constexpr double kDefaultNeutralTau = 0.15;
inline constexpr double kDefaultInterestTau = 0.35;
inline constexpr double kMinInterestSeconds = 0.5;

/// A point in the continuous valence/arousal/dominance space. Every axis is
/// finite and lies in [-1, 1]; 0 is neutral.
class VadPoint {
public:
    constexpr VadPoint() = default;

    /// Throws InputError if any coordinate is non-finite or outside [-1, 1].
    VadPoint(double valence, double arousal, double dominance);

    /// Clamps finite coordinates into [-1, 1]; non-finite still throws.
    static VadPoint clamped(double valence, double arousal, double dominance);

    double valence() const noexcept { return valence_; }
    double arousal() const noexcept { return arousal_; }
    double dominance() const noexcept { return dominance_; }

    /// Euclidean norm in the valence/arousal plane.
    double va_norm() const noexcept;

    friend bool operator==(const VadPoint&, const VadPoint&) = default;

private:
    double valence_ = 0.0;
    double arousal_ = 0.0;
    double dominance_ = 0.0;
};

struct EmojiEntry {
    std::string glyph;
    double valence = 0.0;
    double arousal = 0.0;
    std::string label;

    friend bool operator==(const EmojiEntry&, const EmojiEntry&) = default;
};

/// Ordered emoji set with valence/arousal coordinates. Order matters: when two
/// entries are equally close to a point, the earlier one wins.
class EmojiTable {
public:
    /// Validates: at least one entry, unique non-empty glyphs, coordinates
    /// within the unit square. Throws ConfigError otherwise.
    EmojiTable(std::vector<EmojiEntry> entries, std::string source);

    /// The 22-emoji table shipped with the engine.
    static const EmojiTable& builtin();

    /// Accepts a JSON array of {glyph, valence, arousal, label} objects, or
    /// an object {source, entries: [...]}. Throws ConfigError.
    static EmojiTable from_json(std::string_view text, std::string default_source = "");
    static EmojiTable load(const std::string& path);

    /// Serializes as the plain array form.
    std::string to_json() const;

    std::span<const EmojiEntry> entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    const std::string& source() const noexcept { return source_; }

private:
    std::vector<EmojiEntry> entries_;
    std::string source_;
};

/// HSL color of one waveform bar. Neutral bars use a fixed gray.
struct BarColor {
    double hue = 0.0;         // degrees, [0, 360)
    double saturation = 0.0;  // percent
    double lightness = 0.0;   // percent
    bool neutral = false;

    static BarColor neutral_gray();

    /// CSS form, e.g. "hsl(120.00,85.00%,50.00%)".
    std::string css() const;

    friend bool operator==(const BarColor&, const BarColor&) = default;
};

struct TimeSpan {
    double start_s = 0.0;
    double end_s = 0.0;

    double length() const noexcept { return end_s - start_s; }
    friend bool operator==(const TimeSpan&, const TimeSpan&) = default;
};

struct InterestSegment {
    double start_s = 0.0;
    double end_s = 0.0;
    VadPoint centroid;
    EmojiEntry emoji;
    std::string text;  // aligned transcript text, empty when unavailable
};

struct ChunkEmotion {
    TimeSpan span;
    VadPoint vad;
};

/// Entry nearest to p in the valence/arousal plane; dominance is ignored.
/// Ties go to the lowest table index.
const EmojiEntry& nearest_emoji(const VadPoint& p, const EmojiTable& table);

bool is_neutral(const VadPoint& p, double tau_neutral);

/// Hue follows valence (0 = red .. 120 = green), saturation follows arousal
/// (35 .. 85 %), lightness fixed at 50 %. Neutral points map to gray.
BarColor color_for(const VadPoint& p, double tau_neutral);

/// Merges maximal runs of chunks whose VA norm is >= tau_interest, drops runs
/// shorter than 0.5 s, and labels each with the emoji nearest its
/// duration-weighted centroid.
std::vector<InterestSegment> interest_segments(std::span<const ChunkEmotion> chunks,
                                               double tau_interest,
                                               const EmojiTable& table);

}  // namespace speeji
