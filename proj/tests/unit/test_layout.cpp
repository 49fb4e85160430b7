#include <cmath>

#include "doctest.h"
#include "designsense/error.hpp"
#include "designsense/json_io.hpp"
#include "designsense/layout.hpp"
#include "designsense/random.hpp"
#include "support/fixtures.hpp"

using namespace dsense;
using dsense::testing::make_layout;

namespace {

// Exact area by counting cells of a 1/64 grid; boxes must sit on that grid.
double grid_area(bool (*inside)(const BBox&, const BBox&, double, double), const BBox& a, const BBox& b) {
    long cells = 0;
    for (int i = 0; i < 128; ++i)
        for (int j = 0; j < 128; ++j) {
            const double cx = (i + 0.5) / 64.0 - 0.5, cy = (j + 0.5) / 64.0 - 0.5;
            if (inside(a, b, cx, cy)) ++cells;
        }
    return cells / (64.0 * 64.0);
}

bool contains(const BBox& b, double x, double y) { return x > b.x && x < b.right() && y > b.y && y < b.bottom(); }

BBox random_grid_box(Rng& rng) {
    const int w = 1 + static_cast<int>(rng.below(32)), h = 1 + static_cast<int>(rng.below(32));
    const int x = static_cast<int>(rng.below(64)) - 16, y = static_cast<int>(rng.below(64)) - 16;
    return {x / 64.0, y / 64.0, w / 64.0, h / 64.0};
}

BBox random_box(Rng& rng) { return {rng.uniform(-0.5, 1.0), rng.uniform(-0.5, 1.0), rng.uniform(1e-3, 0.8), rng.uniform(1e-3, 0.8)}; }

}  // namespace

TEST_CASE("iou fixtures") {
    const BBox a{0.1, 0.2, 0.3, 0.4};
    CHECK(iou(a, a) == 1.0);
    CHECK(iou({0, 0, 0.1, 0.1}, {0.5, 0.5, 0.1, 0.1}) == 0.0);
    CHECK(iou({0, 0, 0.2, 0.2}, {0.1, 0.1, 0.2, 0.2}) == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("iou rejects degenerate boxes") {
    CHECK_THROWS_AS(iou({0, 0, 0, 0.1}, {0, 0, 0.1, 0.1}), InvalidGeometry);
    CHECK_THROWS_AS(iou({0, 0, 0.1, 0.1}, {0, 0, 0.1, -0.2}), InvalidGeometry);
    CHECK_THROWS_AS(iou({0, 0, NAN, 0.1}, {0, 0, 0.1, 0.1}), InvalidGeometry);
}

TEST_CASE("iou matches grid counting on grid-aligned boxes") {
    Rng rng(11);
    for (int t = 0; t < 300; ++t) {
        const BBox a = random_grid_box(rng), b = random_grid_box(rng);
        const double inter = grid_area(
            [](const BBox& p, const BBox& q, double x, double y) { return contains(p, x, y) && contains(q, x, y); }, a, b);
        const double uni = grid_area(
            [](const BBox& p, const BBox& q, double x, double y) { return contains(p, x, y) || contains(q, x, y); }, a, b);
        CHECK(intersection_area(a, b) == doctest::Approx(inter).epsilon(1e-12));
        CHECK(iou(a, b) == doctest::Approx(inter / uni).epsilon(1e-12));
    }
}

TEST_CASE("iou properties over random boxes") {
    Rng rng(5);
    for (int t = 0; t < 2000; ++t) {
        const BBox a = random_box(rng), b = random_box(rng);
        const double v = iou(a, b);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        CHECK(v == iou(b, a));
        CHECK(iou(a, a) == doctest::Approx(1.0).epsilon(1e-12));
        const double dx = rng.uniform(-0.3, 0.3), dy = rng.uniform(-0.3, 0.3);
        const BBox ta{a.x + dx, a.y + dy, a.w, a.h}, tb{b.x + dx, b.y + dy, b.w, b.h};
        CHECK(iou(ta, tb) == doctest::Approx(v).epsilon(1e-9));
    }
}

TEST_CASE("validate_layout fixtures") {
    SUBCASE("two separated in-bounds boxes are clean") {
        const auto r = validate_layout(make_layout("a", {{0.1, 0.1, 0.2, 0.2}, {0.5, 0.5, 0.2, 0.2}}));
        CHECK(r.overlap_area == 0.0);
        CHECK(r.overflow_area == 0.0);
        CHECK(r.is_clean);
    }
    SUBCASE("a box reaching x+w=1.2 reports the 0.2-wide strip") {
        const auto r = validate_layout(make_layout("a", {{0.6, 0.1, 0.6, 0.5}}));
        CHECK(r.overflow_area == doctest::Approx(0.2 * 0.5).epsilon(1e-12));
        CHECK_FALSE(r.is_clean);
    }
    SUBCASE("coincident tenth boxes overlap by 0.01") {
        const auto r = validate_layout(make_layout("a", {{0.3, 0.3, 0.1, 0.1}, {0.3, 0.3, 0.1, 0.1}}));
        CHECK(r.overlap_area == doctest::Approx(0.01).epsilon(1e-12));
        CHECK_FALSE(r.is_clean);
    }
    SUBCASE("touching edges are not overlap") {
        const auto r = validate_layout(make_layout("a", {{0.1, 0.1, 0.2, 0.2}, {0.3, 0.1, 0.2, 0.2}}));
        CHECK(r.is_clean);
    }
    SUBCASE("empty layout") {
        Layout l;
        l.layout_id = "empty";
        CHECK_THROWS_AS(validate_layout(l), EmptyLayoutError);
    }
}

TEST_CASE("validate_layout is deterministic") {
    Rng rng(3);
    for (int t = 0; t < 50; ++t) {
        std::vector<BBox> boxes;
        for (int k = 0; k < 6; ++k) boxes.push_back(random_box(rng));
        const auto l = make_layout("r", boxes);
        const auto a = validate_layout(l), b = validate_layout(l);
        CHECK(a.overlap_area == b.overlap_area);
        CHECK(a.overflow_area == b.overflow_area);
        CHECK(a.misaligned_pairs == b.misaligned_pairs);
        CHECK(a.is_clean == b.is_clean);
    }
}

TEST_CASE("total_overlap fixtures") {
    CHECK(total_overlap(make_layout("a", {{0, 0, 0.1, 0.1}, {0.5, 0.5, 0.1, 0.1}})) == 0.0);
    const BBox c{0.2, 0.2, 0.1, 0.1};
    CHECK(total_overlap(make_layout("a", {c, c, c})) == doctest::Approx(0.03).epsilon(1e-12));
    // 0.1 x 0.05 strip shared.
    CHECK(total_overlap(make_layout("a", {{0, 0, 0.2, 0.1}, {0.1, 0.05, 0.2, 0.1}})) ==
          doctest::Approx(0.005).epsilon(1e-12));
}

TEST_CASE("check_layout catches structural errors") {
    auto l = make_layout("a", {{0, 0, 0.1, 0.1}, {0.2, 0.2, 0.1, 0.1}});
    CHECK_NOTHROW(check_layout(l));
    l.elements[1].id = l.elements[0].id;
    CHECK_THROWS_AS(check_layout(l), Error);
    auto bad = make_layout("b", {{0, 0, 0.1, 0.1}});
    bad.canvas.width_px = 0;
    CHECK_THROWS_AS(check_layout(bad), Error);
}

TEST_CASE("box_gap sign convention") {
    CHECK(box_gap({0, 0, 0.2, 0.2}, {0.1, 0.1, 0.2, 0.2}) < 0.0);
    CHECK(box_gap({0, 0, 0.1, 0.1}, {0.3, 0, 0.1, 0.1}) == doctest::Approx(0.2));
    CHECK(box_gap({0, 0, 0.1, 0.1}, {0.4, 0.5, 0.1, 0.1}) == doctest::Approx(0.5));
}

TEST_CASE("misaligned pairs count near misses only") {
    // Left edges 0.005 apart: a near miss.
    CHECK(misaligned_pairs(make_layout("a", {{0.1, 0.1, 0.2, 0.1}, {0.105, 0.5, 0.3, 0.1}})) == 1);
    // Exactly aligned left edges.
    CHECK(misaligned_pairs(make_layout("a", {{0.1, 0.1, 0.2, 0.1}, {0.1, 0.5, 0.3, 0.1}})) == 0);
}

TEST_CASE("enum names round trip") {
    for (auto k : kAllElementKinds) CHECK(element_kind_from_string(to_string(k)) == k);
    for (auto v : kAllVariants) CHECK(variant_from_string(to_string(v)) == v);
    CHECK_THROWS_AS(variant_from_string("square"), DomainError);
}

TEST_CASE("layout json round trip keeps values and unknown fields") {
    Rng rng(17);
    for (int t = 0; t < 100; ++t) {
        std::vector<BBox> boxes;
        for (int k = 0; k < 5; ++k) boxes.push_back({rng.uniform(), rng.uniform(), rng.uniform(1e-4, 1), rng.uniform(1e-4, 1)});
        auto l = make_layout("L" + std::to_string(t), boxes, {1080, 1920}, ElementKind::image);
        l.variant = Variant::inverse_ratio;
        l.source = LayoutSource::generated;
        l.extra["note"] = "kept";
        l.elements[0].extra["font"] = "serif";
        const Layout back = layout_from_json(parse_json_text(dump_pretty(to_json(l)), "test"));
        CHECK(back == l);
    }
}

TEST_CASE("layout json schema errors name the field") {
    Json j = to_json(make_layout("a", {{0, 0, 0.1, 0.1}}));
    j["elements"][0]["bbox"].erase("w");
    try {
        (void)layout_from_json(j);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("w") != std::string::npos);
    }
    Json k = to_json(make_layout("a", {{0, 0, 0.1, 0.1}}));
    k["elements"][0]["kind"] = "video";
    CHECK_THROWS_AS((void)layout_from_json(k), ParseError);
    Json g = to_json(make_layout("a", {{0, 0, 0.1, 0.1}}));
    g["elements"][0]["bbox"]["h"] = -1.0;
    CHECK_THROWS_AS((void)layout_from_json(g), ParseError);
}

TEST_CASE("numbers serialize with enough digits to round trip") {
    const auto l = make_layout("a", {{1.0 / 3.0, 2.0 / 7.0, 0.123456789012345, 1e-7}});
    const std::string text = dump_pretty(to_json(l));
    CHECK(text.find("0.3333333333333333") != std::string::npos);
    CHECK(layout_from_json(parse_json_text(text, "t")) == l);
}

TEST_CASE("mirroring is an involution") {
    const auto l = make_layout("a", {{0.1, 0.2, 0.3, 0.1}, {0.6, 0.5, 0.2, 0.2}});
    const auto m = mirrored_horizontally(l);
    CHECK(m.elements[0].bbox.x == doctest::Approx(0.6));
    const auto mm = mirrored_horizontally(m);
    for (std::size_t i = 0; i < l.elements.size(); ++i)
        CHECK(mm.elements[i].bbox.x == doctest::Approx(l.elements[i].bbox.x).epsilon(1e-15));
}
