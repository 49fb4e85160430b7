#include "designsense/synthetic.hpp"

#include <cmath>

#include "designsense/error.hpp"

namespace dsense {

namespace {

constexpr Canvas kCanvases[] = {{1080, 1080}, {1080, 1920}, {1920, 1080}, {1200, 628}, {800, 1000}};

Element make_element(Rng& rng, int k, const BBox& b) {
    Element e;
    e.id = "e" + std::to_string(k);
    e.kind = kAllElementKinds[rng.below(kAllElementKinds.size())];
    e.bbox = b;
    e.z = k;
    e.label = std::string(to_string(e.kind)) + " " + std::to_string(k);
    return e;
}

}  // namespace

Layout synthetic_layout(Rng& rng, std::string layout_id, int n) {
    if (n < 1) throw DomainError("a synthetic layout needs at least one element");
    Layout l;
    l.layout_id = std::move(layout_id);
    l.canvas = kCanvases[rng.below(std::size(kCanvases))];
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    const int rows = (n + cols - 1) / cols;
    const double cw = 1.0 / cols, ch = 1.0 / rows;
    for (int k = 0; k < n; ++k) {
        const int r = k / cols, c = k % cols;
        const double w = cw * rng.uniform(0.5, 0.9);
        const double h = ch * rng.uniform(0.5, 0.9);
        const double x = c * cw + rng.uniform(0.0, cw - w);
        const double y = r * ch + rng.uniform(0.0, ch - h);
        l.elements.push_back(make_element(rng, k, {x, y, w, h}));
    }
    return l;
}

std::vector<Layout> synthetic_corpus(std::size_t n, std::uint64_t seed, const SyntheticOptions& opt) {
    if (opt.min_elements < 1 || opt.max_elements < opt.min_elements) throw DomainError("bad element count range");
    Rng rng(seed);
    std::vector<Layout> out;
    for (std::size_t i = 0; i < n; ++i) {
        const int count = opt.min_elements + static_cast<int>(rng.below(opt.max_elements - opt.min_elements + 1));
        char id[32];
        std::snprintf(id, sizeof id, "design_%03zu", i);
        out.push_back(synthetic_layout(rng, id, count));
    }
    return out;
}

Layout random_layout(Rng& rng, std::string layout_id, int n, double min_side, double max_side) {
    Layout l;
    l.layout_id = std::move(layout_id);
    l.canvas = kCanvases[rng.below(std::size(kCanvases))];
    for (int k = 0; k < n; ++k) {
        const double w = rng.uniform(min_side, max_side);
        const double h = rng.uniform(min_side, max_side);
        l.elements.push_back(make_element(rng, k, {rng.uniform(0.0, 1.0 - w), rng.uniform(0.0, 1.0 - h), w, h}));
    }
    return l;
}

}  // namespace dsense
