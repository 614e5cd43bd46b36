#include "speeji/render.hpp"
#include "speeji/errors.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace speeji {

namespace {

std::string px(double x) {
    std::string s = fmt::format("{:.2f}", x);
    if (s == "-0.00") s = "0.00";
    return s;
}

std::string escape_xml(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

void emit_emoji(std::string& svg, const EmojiEntry& e, std::string_view role, double cx, double cy,
                double size) {
    svg += fmt::format(
        "  <text class=\"speeji speeji-{}\" data-generated-by=\"ai\" x=\"{}\" y=\"{}\" "
        "font-size=\"{}\" text-anchor=\"middle\" dominant-baseline=\"central\">"
        "<title>{} (AI-generated)</title>{}</text>\n",
        role, px(cx), px(cy), px(size), escape_xml(e.label), escape_xml(e.glyph));
}

}  // namespace

std::string render_svg(const AugmentationDescriptor& d, const RenderOptions& options) {
    if (options.width_px <= 0 || options.height_px <= 0) {
        throw InputError(fmt::format("render dimensions must be positive, got {}x{}",
                                     options.width_px, options.height_px));
    }
    const double width = options.width_px;
    const double height = options.height_px;
    const bool done = d.status == AugmentationStatus::Done && d.overall_emoji && d.ending_emoji;
    const bool segments = done && options.show_segments && !d.interest_segments.empty();

    // Headline emojis sit in square slots left and right of the waveform.
    const double slot = done ? height : 0.0;
    const double wave_left = slot;
    const double wave_width = width - 2.0 * slot;
    const double band = segments ? 0.35 * height : 0.0;
    const double wave_top = band;
    const double wave_height = height - band;
    const std::size_t n = d.bars.size();
    if (wave_width <= 0.0 || (n > 0 && wave_width / static_cast<double>(n) < 0.05)) {
        throw InputError(fmt::format("width {} too small for {} bars", options.width_px, n));
    }

    std::string svg;
    svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" "
        "viewBox=\"0 0 {} {}\" data-status=\"{}\" data-generated-by=\"{}\">\n",
        options.width_px, options.height_px, options.width_px, options.height_px,
        to_string(d.status), escape_xml(d.generated_by));

    const double emoji_size = 0.6 * wave_height;
    const double mid_y = wave_top + wave_height / 2.0;
    if (done) emit_emoji(svg, *d.overall_emoji, "overall", slot / 2.0, mid_y, emoji_size);

    svg += "  <g class=\"waveform\">\n";
    const double pitch = n > 0 ? wave_width / static_cast<double>(n) : 0.0;
    const double bar_width = 0.6 * pitch;
    for (std::size_t i = 0; i < n; ++i) {
        const WaveBar& b = d.bars[i];
        const double h = std::max(1.0, b.height * 0.9 * wave_height);
        const double x = wave_left + static_cast<double>(i) * pitch + 0.2 * pitch;
        const double y = wave_top + (wave_height - h) / 2.0;
        const BarColor color = done ? b.color : BarColor::neutral_gray();
        svg += fmt::format(
            "    <rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" rx=\"{}\" fill=\"{}\"/>\n",
            px(x), px(y), px(bar_width), px(h), px(std::min(bar_width, h) / 2.0), color.css());
    }
    svg += "  </g>\n";

    if (done) emit_emoji(svg, *d.ending_emoji, "ending", width - slot / 2.0, mid_y, emoji_size);

    if (segments) {
        for (const auto& s : d.interest_segments) {
            const double mid = 0.5 * (s.start_s + s.end_s) / d.duration_s;
            emit_emoji(svg, s.emoji, "segment", wave_left + mid * wave_width, band / 2.0,
                       0.8 * band);
        }
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace speeji
