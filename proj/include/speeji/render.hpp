#pragma once

#include "speeji/descriptor.hpp"

#include <string>

namespace speeji {

struct RenderOptions {
    int width_px = 480;
    int height_px = 64;
    bool show_segments = false;  // draw interest-segment emojis above their spans
};

/// SVG 1.1 document for a descriptor. Byte-identical for identical inputs.
/// Throws InputError for non-positive or too-small dimensions.
std::string render_svg(const AugmentationDescriptor& d, const RenderOptions& options);

}  // namespace speeji
