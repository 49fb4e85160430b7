#pragma once

// Deterministic SVG wireframes of layouts and side-by-side pairs.

#include <map>
#include <string>

#include "designsense/layout.hpp"
#include "designsense/preference.hpp"

namespace dsense {

struct RenderStyle {
    std::map<ElementKind, std::string> palette{{ElementKind::text, "#1f77b4"},
                                               {ElementKind::image, "#2ca02c"},
                                               {ElementKind::shape, "#ff7f0e"},
                                               {ElementKind::other, "#7f7f7f"}};
    int stroke_width = 2;
    bool show_labels = true;
    bool show_scale_bar = false;
    // Pair renders.
    int pair_display_height = 400;
    int gutter = 24;
    int caption_height = 28;

    void validate() const;  // palette covers all kinds, sizes positive
};

// Half-up rounding of normalized coordinate * pixels.
long to_pixel(double normalized, int pixels);

// One <rect class="element"> per element in z order (stable), a canvas frame,
// optional id/label text and scale bar.
std::string render_svg(const Layout& l, const RenderStyle& style = {});

// Both canvases scaled to the display height, separated by the gutter, with
// "A" and "B" captions underneath.
std::string render_pair(const PreferencePair& p, const RenderStyle& style = {});

std::string base64_encode(const std::string& bytes);

}  // namespace dsense
