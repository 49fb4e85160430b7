#include "designsense/layout.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "designsense/error.hpp"

namespace dsense {

namespace {

// Overflow below this is floating-point residue from clamping, not a defect.
constexpr double kOverflowResidue = 1e-12;
// Lines closer than this count as exactly aligned.
constexpr double kAlignedExactly = 1e-9;

template <class Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::array<std::pair<Enum, std::string_view>, N>& table,
                std::string_view what) {
    for (const auto& [value, name] : table) {
        if (name == s) return value;
    }
    throw DomainError("unknown " + std::string(what) + " '" + std::string(s) + "'");
}

constexpr std::array<std::pair<ElementKind, std::string_view>, 4> kKindNames{{
    {ElementKind::text, "text"},
    {ElementKind::image, "image"},
    {ElementKind::shape, "shape"},
    {ElementKind::other, "other"},
}};

constexpr std::array<std::pair<LayoutSource, std::string_view>, 4> kSourceNames{{
    {LayoutSource::original, "original"},
    {LayoutSource::generated, "generated"},
    {LayoutSource::perturbed, "perturbed"},
    {LayoutSource::refined, "refined"},
}};

constexpr std::array<std::pair<Variant, std::string_view>, 3> kVariantNames{{
    {Variant::original_ratio, "original_ratio"},
    {Variant::stretching_2x, "stretching_2x"},
    {Variant::inverse_ratio, "inverse_ratio"},
}};

template <class Enum, std::size_t N>
std::string_view name_of(Enum e, const std::array<std::pair<Enum, std::string_view>, N>& table) {
    for (const auto& [value, name] : table) {
        if (value == e) return name;
    }
    return "?";
}

double overlap_1d(double a0, double a1, double b0, double b1) {
    return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

}  // namespace

std::string_view to_string(ElementKind k) { return name_of(k, kKindNames); }
std::string_view to_string(LayoutSource s) { return name_of(s, kSourceNames); }
std::string_view to_string(Variant v) { return name_of(v, kVariantNames); }

ElementKind element_kind_from_string(std::string_view s) { return parse_enum(s, kKindNames, "element kind"); }
LayoutSource layout_source_from_string(std::string_view s) { return parse_enum(s, kSourceNames, "layout source"); }
Variant variant_from_string(std::string_view s) { return parse_enum(s, kVariantNames, "variant"); }

const Element* Layout::find(std::string_view id) const {
    for (const auto& e : elements) {
        if (e.id == id) return &e;
    }
    return nullptr;
}

std::vector<std::string> Layout::element_ids() const {
    std::vector<std::string> ids;
    ids.reserve(elements.size());
    for (const auto& e : elements) ids.push_back(e.id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

void check_box(const BBox& b) {
    if (!std::isfinite(b.x) || !std::isfinite(b.y) || !std::isfinite(b.w) || !std::isfinite(b.h)) {
        throw InvalidGeometry("box has non-finite coordinates");
    }
    if (!(b.w > 0.0) || !(b.h > 0.0)) {
        throw InvalidGeometry("degenerate box (w=" + std::to_string(b.w) + ", h=" + std::to_string(b.h) + ")");
    }
}

void check_layout(const Layout& l) {
    if (l.canvas.width_px < 1 || l.canvas.height_px < 1) {
        throw InvalidGeometry("layout '" + l.layout_id + "': canvas dimensions must be >= 1 px");
    }
    std::set<std::string_view> seen;
    for (const auto& e : l.elements) {
        try {
            check_box(e.bbox);
        } catch (const InvalidGeometry& ex) {
            throw InvalidGeometry("layout '" + l.layout_id + "', element '" + e.id + "': " + ex.what());
        }
        if (!seen.insert(e.id).second) {
            throw DomainError("layout '" + l.layout_id + "': duplicate element id '" + e.id + "'");
        }
    }
}

double intersection_area(const BBox& a, const BBox& b) {
    return overlap_1d(a.x, a.right(), b.x, b.right()) * overlap_1d(a.y, a.bottom(), b.y, b.bottom());
}

double iou(const BBox& a, const BBox& b) {
    check_box(a);
    check_box(b);
    if (a == b) return 1.0;
    const double inter = intersection_area(a, b);
    const double uni = a.area() + b.area() - inter;
    return std::clamp(inter / uni, 0.0, 1.0);
}

double box_gap(const BBox& a, const BBox& b) {
    const double gx = std::max(a.x - b.right(), b.x - a.right());
    const double gy = std::max(a.y - b.bottom(), b.y - a.bottom());
    if (gx > 0.0 && gy > 0.0) return std::hypot(gx, gy);
    return std::max(gx, gy);
}

double overflow_area(const BBox& b) {
    const double inside = overlap_1d(b.x, b.right(), 0.0, 1.0) * overlap_1d(b.y, b.bottom(), 0.0, 1.0);
    const double out = b.area() - inside;
    return out < kOverflowResidue ? 0.0 : out;
}

double overflow_area(const Layout& l) {
    double total = 0.0;
    for (const auto& e : l.elements) total += overflow_area(e.bbox);
    return total;
}

double total_overlap(const Layout& l) {
    double total = 0.0;
    for (std::size_t i = 0; i < l.elements.size(); ++i) {
        for (std::size_t j = i + 1; j < l.elements.size(); ++j) {
            total += intersection_area(l.elements[i].bbox, l.elements[j].bbox);
        }
    }
    return total;
}

std::array<double, 3> x_lines(const BBox& b) { return {b.x, b.cx(), b.right()}; }
std::array<double, 3> y_lines(const BBox& b) { return {b.y, b.cy(), b.bottom()}; }

bool shares_alignment_line(const BBox& a, const BBox& b, double tol) {
    const auto ax = x_lines(a), bx = x_lines(b), ay = y_lines(a), by = y_lines(b);
    for (int k = 0; k < 3; ++k) {
        if (std::abs(ax[k] - bx[k]) <= tol + kAlignedExactly) return true;
        if (std::abs(ay[k] - by[k]) <= tol + kAlignedExactly) return true;
    }
    return false;
}

int misaligned_pairs(const Layout& l, double snap_tolerance) {
    // An axis is a near miss when some same-type line pair is off by less than
    // the tolerance and no line pair on that axis is already exact.
    const auto near_miss = [&](const std::array<double, 3>& a, const std::array<double, 3>& b) {
        bool exact = false, close = false;
        for (int k = 0; k < 3; ++k) {
            const double d = std::abs(a[k] - b[k]);
            exact = exact || d <= kAlignedExactly;
            close = close || (d > kAlignedExactly && d < snap_tolerance);
        }
        return close && !exact;
    };
    int count = 0;
    for (std::size_t i = 0; i < l.elements.size(); ++i) {
        for (std::size_t j = i + 1; j < l.elements.size(); ++j) {
            const auto& a = l.elements[i].bbox;
            const auto& b = l.elements[j].bbox;
            if (near_miss(x_lines(a), x_lines(b)) || near_miss(y_lines(a), y_lines(b))) ++count;
        }
    }
    return count;
}

ValidationReport validate_layout(const Layout& l, double snap_tolerance) {
    if (l.elements.empty()) {
        throw EmptyLayoutError("layout '" + l.layout_id + "' has no elements");
    }
    check_layout(l);
    ValidationReport r;
    r.overflow_area = overflow_area(l);
    r.overlap_area = total_overlap(l);
    r.misaligned_pairs = misaligned_pairs(l, snap_tolerance);
    r.is_clean = r.overflow_area == 0.0 && r.overlap_area <= kOverlapEpsilon;
    return r;
}

bool same_element_set(const Layout& a, const Layout& b) { return a.element_ids() == b.element_ids(); }

Layout mirrored_horizontally(const Layout& l) {
    Layout m = l;
    for (auto& e : m.elements) e.bbox.x = 1.0 - e.bbox.x - e.bbox.w;
    return m;
}

}  // namespace dsense
