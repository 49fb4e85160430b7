#pragma once

// Layout data model and the geometric primitives shared by every stage.
//
// Boxes are expressed as fractions of the canvas, origin top-left, so that
// aspect-ratio transforms and cross-canvas comparisons stay exact.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace dsense {

using Json = nlohmann::json;

// Total pairwise intersection below this is "touching", not overlapping.
inline constexpr double kOverlapEpsilon = 1e-6;
inline constexpr double kDefaultSnapTolerance = 0.01;

struct BBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double right() const noexcept { return x + w; }
    double bottom() const noexcept { return y + h; }
    double cx() const noexcept { return x + 0.5 * w; }
    double cy() const noexcept { return y + 0.5 * h; }
    double area() const noexcept { return w * h; }

    friend bool operator==(const BBox&, const BBox&) = default;
};

struct Canvas {
    int width_px = 1;
    int height_px = 1;

    double aspect() const noexcept { return static_cast<double>(width_px) / height_px; }

    friend bool operator==(const Canvas&, const Canvas&) = default;
};

enum class ElementKind { text, image, shape, other };
enum class LayoutSource { original, generated, perturbed, refined };
enum class Variant { original_ratio, stretching_2x, inverse_ratio };

inline constexpr std::array<ElementKind, 4> kAllElementKinds{
    ElementKind::text, ElementKind::image, ElementKind::shape, ElementKind::other};
inline constexpr std::array<Variant, 3> kAllVariants{
    Variant::original_ratio, Variant::stretching_2x, Variant::inverse_ratio};

struct Element {
    std::string id;
    ElementKind kind = ElementKind::other;
    BBox bbox;
    int z = 0;
    std::string label;
    Json extra = Json::object();  // unknown fields, kept for round-trips

    friend bool operator==(const Element&, const Element&) = default;
};

struct Layout {
    std::string layout_id;
    Canvas canvas;
    std::vector<Element> elements;
    LayoutSource source = LayoutSource::original;
    Variant variant = Variant::original_ratio;
    // Element grouping, when the layout passed through the grouping stage.
    std::optional<std::vector<std::vector<std::string>>> groups;
    Json extra = Json::object();

    const Element* find(std::string_view id) const;
    std::vector<std::string> element_ids() const;  // sorted

    friend bool operator==(const Layout&, const Layout&) = default;
};

struct ValidationReport {
    double overflow_area = 0.0;
    double overlap_area = 0.0;
    int misaligned_pairs = 0;
    bool is_clean = false;
};

std::string_view to_string(ElementKind k);
std::string_view to_string(LayoutSource s);
std::string_view to_string(Variant v);
ElementKind element_kind_from_string(std::string_view s);
LayoutSource layout_source_from_string(std::string_view s);
Variant variant_from_string(std::string_view s);

// Throws InvalidGeometry when w or h is not strictly positive (or not finite).
void check_box(const BBox& b);

// Structural checks: positive canvas, positive boxes, unique element ids.
// Overflow is not an error here; it is measured by validate_layout.
void check_layout(const Layout& l);

double intersection_area(const BBox& a, const BBox& b);
double iou(const BBox& a, const BBox& b);

// Signed minimum edge distance: negative when the boxes overlap, Euclidean
// corner distance when separated on both axes.
double box_gap(const BBox& a, const BBox& b);

// Area of the box lying outside the unit canvas.
double overflow_area(const BBox& b);
double overflow_area(const Layout& l);

// Sum of pairwise intersection areas over unordered element pairs.
double total_overlap(const Layout& l);

// The three vertical (or horizontal) guide lines of a box: near edge, center, far edge.
std::array<double, 3> x_lines(const BBox& b);
std::array<double, 3> y_lines(const BBox& b);

// True when some same-type line (left/left, center/center, ...) of the two
// boxes lies within tol.
bool shares_alignment_line(const BBox& a, const BBox& b, double tol);

// Pairs with a same-type line strictly off by less than tol but not exactly aligned.
int misaligned_pairs(const Layout& l, double snap_tolerance = kDefaultSnapTolerance);

ValidationReport validate_layout(const Layout& l, double snap_tolerance = kDefaultSnapTolerance);

bool same_element_set(const Layout& a, const Layout& b);

Layout mirrored_horizontally(const Layout& l);

}  // namespace dsense
