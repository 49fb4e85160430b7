#include <cstdlib>
#include <filesystem>
#include <cmath>
#include <regex>

#include "designsense/random.hpp"

#include "doctest.h"
#include "designsense/error.hpp"
#include "designsense/render.hpp"
#include "support/fixtures.hpp"

using namespace dsense;
using namespace dsense::testing;

namespace {

Layout three_elements() {
    auto l = make_layout("golden_three", {{0.25, 0.25, 0.5, 0.5}, {0.05, 0.05, 0.3, 0.1}, {0.6, 0.8, 0.3, 0.15}},
                         {400, 400});
    l.elements[0].kind = ElementKind::image;
    l.elements[1].kind = ElementKind::text;
    l.elements[1].label = "Title <b> & \"sub\"";
    l.elements[2].kind = ElementKind::shape;
    l.elements[0].z = 1;
    l.elements[1].z = 2;
    l.elements[2].z = 0;
    return l;
}

// Compares against tests/golden/<name>; DSENSE_UPDATE_GOLDEN=1 rewrites the file.
void check_golden(const std::string& name, const std::string& actual) {
    const std::string path = std::string(DSENSE_GOLDEN_DIR) + "/" + name;
    const char* update = std::getenv("DSENSE_UPDATE_GOLDEN");
    if (update && std::string(update) == "1") {
        write_file(path, actual);
        MESSAGE("updated " << path);
        return;
    }
    REQUIRE_MESSAGE(std::filesystem::exists(path), "missing golden file " << path);
    CHECK(read_file(path) == actual);
}

struct Rect {
    long x, y, w, h;
};

std::vector<Rect> element_rects(const std::string& svg) {
    static const std::regex re(R"re(<rect class="element"[^>]* x="(-?\d+)" y="(-?\d+)" width="(\d+)" height="(\d+)")re");
    std::vector<Rect> out;
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it)
        out.push_back({std::stol((*it)[1]), std::stol((*it)[2]), std::stol((*it)[3]), std::stol((*it)[4])});
    return out;
}

}  // namespace

TEST_CASE("to_pixel rounds half up") {
    CHECK(to_pixel(0.25, 400) == 100);
    CHECK(to_pixel(0.00125, 400) == 1);   // 0.5 px
    CHECK(to_pixel(0.00375, 400) == 2);   // 1.5 px
    CHECK(to_pixel(0.001, 400) == 0);     // 0.4 px
    CHECK(to_pixel(-0.00125, 400) == 0);  // -0.5 px rounds up
}

TEST_CASE("render_svg structure") {
    const auto l = three_elements();
    const std::string svg = render_svg(l);
    CHECK(count_occurrences(svg, "<rect class=\"element\"") == 3);
    CHECK(count_occurrences(svg, "<rect class=\"frame\"") == 1);
    // z order: shape (z 0), image (z 1), text (z 2).
    const auto shape = svg.find("data-kind=\"shape\""), image = svg.find("data-kind=\"image\""),
               text = svg.find("data-kind=\"text\"");
    CHECK(shape < image);
    CHECK(image < text);
    CHECK(svg.find("Title &lt;b&gt; &amp; &quot;sub&quot;") != std::string::npos);
    CHECK(render_svg(l) == svg);
}

TEST_CASE("element at a quarter inset on 400x400 maps to 100,100,200,200") {
    const auto l = make_layout("q", {{0.25, 0.25, 0.5, 0.5}}, {400, 400});
    const auto rects = element_rects(render_svg(l));
    REQUIRE(rects.size() == 1);
    CHECK(rects[0].x == 100);
    CHECK(rects[0].y == 100);
    CHECK(rects[0].w == 200);
    CHECK(rects[0].h == 200);
}

TEST_CASE("pixel rectangles equal rounded normalized coordinates") {
    Rng rng(120);
    for (int t = 0; t < 100; ++t) {
        const Canvas c{100 + static_cast<int>(rng.below(2000)), 100 + static_cast<int>(rng.below(2000))};
        std::vector<BBox> boxes;
        for (int k = 0; k < 4; ++k) boxes.push_back({rng.uniform(0, 0.7), rng.uniform(0, 0.7), rng.uniform(0.01, 0.3), rng.uniform(0.01, 0.3)});
        const auto l = make_layout("r", boxes, c);
        const auto rects = element_rects(render_svg(l));
        REQUIRE(rects.size() == 4);
        for (int k = 0; k < 4; ++k) {
            CHECK(rects[k].x == std::floor(boxes[k].x * c.width_px + 0.5));
            CHECK(rects[k].h == std::floor(boxes[k].h * c.height_px + 0.5));
        }
    }
}

TEST_CASE("style toggles") {
    RenderStyle s;
    s.show_labels = false;
    s.show_scale_bar = true;
    const std::string svg = render_svg(three_elements(), s);
    CHECK(svg.find("class=\"label\"") == std::string::npos);
    CHECK(svg.find("class=\"scale-bar\"") != std::string::npos);
    RenderStyle broken;
    broken.palette.erase(ElementKind::other);
    CHECK_THROWS_AS(render_svg(three_elements(), broken), DomainError);
}

TEST_CASE("render_pair layout") {
    SUBCASE("identical sides render identically") {
        const auto l = three_elements();
        const std::string svg = render_pair(make_pair("same", l, l));
        const auto a = svg.find("data-side=\"A\""), b = svg.find("data-side=\"B\"");
        REQUIRE(a != std::string::npos);
        REQUIRE(b != std::string::npos);
        const auto body_a = svg.substr(svg.find('\n', a), svg.find("</g>", a) - svg.find('\n', a));
        const auto body_b = svg.substr(svg.find('\n', b), svg.find("</g>", b) - svg.find('\n', b));
        CHECK(body_a == body_b);
        CHECK(svg.find(">A</text>") != std::string::npos);
        CHECK(svg.find(">B</text>") != std::string::npos);
    }
    SUBCASE("mixed canvas heights share the display height") {
        auto left = make_layout("l", {{0.1, 0.1, 0.2, 0.2}}, {1080, 1920});
        auto right = make_layout("r", {{0.1, 0.1, 0.2, 0.2}}, {1200, 628});
        const std::string svg = render_pair(make_pair("mixed", left, right));
        // 1080 * 400/1920 = 225; 1200 * 400/628 = 764.33 -> 764; gutter 24.
        CHECK(svg.find("width=\"1013\" height=\"428\"") != std::string::npos);
        CHECK(svg.find("translate(0,0) scale(0.208333333)") != std::string::npos);
        CHECK(svg.find("translate(249,0)") != std::string::npos);
    }
    SUBCASE("deterministic") {
        const auto p = make_pair("d", three_elements(), make_layout("o", {{0.5, 0.5, 0.2, 0.2}}, {400, 800}));
        CHECK(render_pair(p) == render_pair(p));
    }
}

TEST_CASE("golden renders") {
    check_golden("layout_three.svg", render_svg(three_elements()));
    RenderStyle s;
    s.show_scale_bar = true;
    check_golden("layout_three_scalebar.svg", render_svg(three_elements(), s));
    auto other = make_layout("golden_wide", {{0.1, 0.2, 0.35, 0.6}, {0.55, 0.2, 0.35, 0.6}}, {1200, 628});
    check_golden("pair_mixed.svg", render_pair(make_pair("golden_pair", three_elements(), other)));
}

TEST_CASE("base64") {
    CHECK(base64_encode("") == "");
    CHECK(base64_encode("f") == "Zg==");
    CHECK(base64_encode("fo") == "Zm8=");
    CHECK(base64_encode("foo") == "Zm9v");
    CHECK(base64_encode("foobar") == "Zm9vYmFy");
}
