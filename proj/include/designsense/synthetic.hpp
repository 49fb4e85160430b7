#pragma once

// Seeded synthetic layouts for demos, tests and the end-to-end run.

#include <cstdint>
#include <string>
#include <vector>

#include "designsense/layout.hpp"
#include "designsense/random.hpp"

namespace dsense {

struct SyntheticOptions {
    int min_elements = 3;
    int max_elements = 8;
};

// Elements on a jittered grid: no overlap, nothing outside the canvas.
Layout synthetic_layout(Rng& rng, std::string layout_id, int n_elements);
std::vector<Layout> synthetic_corpus(std::size_t n, std::uint64_t seed, const SyntheticOptions& opt = {});

// Boxes placed independently inside the canvas; overlaps are likely.
Layout random_layout(Rng& rng, std::string layout_id, int n_elements, double min_side = 0.05, double max_side = 0.4);

}  // namespace dsense
