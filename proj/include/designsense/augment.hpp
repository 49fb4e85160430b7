#pragma once

// Aspect-ratio variants, the layout-generator client, and the perturbation
// engine that manufactures automatically labeled negative pairs.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "designsense/grouping.hpp"
#include "designsense/layout.hpp"
#include "designsense/preference.hpp"
#include "designsense/remote.hpp"

namespace dsense {

// original_ratio: identity. stretching_2x: longest side doubled (a square
// canvas doubles its height). inverse_ratio: width and height swapped.
Canvas apply_variant(const Canvas& c, Variant v);

struct PerturbationConfig {
    double element_fraction = 0.7;
    double offset_min_frac = 0.2;
    double offset_max_frac = 0.5;
    double scale_min = 0.8;
    double scale_max = 1.2;
    std::uint64_t seed = 0;

    // Throws DomainError when a range is empty or the fraction is outside (0, 1].
    void validate() const;
};

enum class PerturbationKind { offset, scale_width, scale_height };

struct PerturbationRecord {
    std::string element_id;
    PerturbationKind kind;
    double dx = 0.0;      // offset only
    double dy = 0.0;      // offset only
    double factor = 1.0;  // scale only
};

struct PerturbedLayout {
    Layout layout;
    std::vector<PerturbationRecord> records;  // one per modified element, in layout order
};

// Number of elements a perturbation touches: round-half-up of fraction * n, at least 1.
std::size_t perturbation_count(std::size_t n, double fraction);

PerturbedLayout perturb_layout_detailed(const Layout& l, const PerturbationConfig& cfg);
Layout perturb_layout(const Layout& l, const PerturbationConfig& cfg);

enum class NegativeMode {
    original_vs_perturbed,  // one (original, perturbed) pair per original
    both_perturbed,         // one (perturbed, perturbed) pair per original, labeled both_bad
    combined,               // both of the above
};

std::string_view to_string(NegativeMode m);
NegativeMode negative_mode_from_string(std::string_view s);

// Pairs built from validated originals. For original-vs-perturbed pairs the
// original's side is drawn from the seed and the gold label points to it.
std::vector<PreferencePair> make_negative_pairs(const std::vector<Layout>& originals, const PerturbationConfig& cfg,
                                                NegativeMode mode = NegativeMode::original_vs_perturbed);

// --- generator intake --------------------------------------------------------

struct GroupMember {
    std::string id;
    ElementKind kind = ElementKind::other;
    BBox rel;  // position inside the group's bounding region, as fractions of it
    int z = 0;
    std::string label;
};

struct GroupPayload {
    std::string group_id;
    BBox bbox;  // composite bounding region on the source canvas
    std::vector<GroupMember> members;
};

struct GeneratorRequest {
    std::string design_id;
    Canvas source_canvas;
    Canvas target_canvas;
    Variant variant = Variant::original_ratio;
    std::vector<GroupPayload> groups;
    int num_samples = 10;
    double temperature = 1.0;
};

// Builds group payloads from a layout and its partition for the given variant.
GeneratorRequest make_generator_request(const Layout& l, const Partition& p, Variant v, int num_samples = 10,
                                        double temperature = 1.0);

Json to_json(const GeneratorRequest& r);
GeneratorRequest generator_request_from_json(const Json& j);

// Places each group's region at the given box (normalized on the target
// canvas) and maps members through the same affine transform.
Layout place_groups(const GeneratorRequest& req, const std::vector<BBox>& group_boxes, std::string layout_id);

// Anything that answers the generator wire protocol: request JSON
// {groups, canvas, num_samples, temperature, ...} -> {layouts: [...]}.
class GeneratorBackend {
public:
    virtual ~GeneratorBackend() = default;
    virtual Json generate(const Json& request) = 0;
};

class HttpGenerator final : public GeneratorBackend {
public:
    explicit HttpGenerator(Endpoint ep) : ep_(std::move(ep)) {}
    Json generate(const Json& request) override { return post_json(ep_, "/generate", request); }

private:
    Endpoint ep_;
};

struct FetchResult {
    std::vector<Layout> layouts;
    int dropped = 0;
    std::vector<std::string> warnings;
};

// Decodes the response, drops layouts that fail the schema or do not carry
// exactly the request's element set on the target canvas, tags the rest as
// generated and renames them "<design>__<variant>__<k>".
FetchResult fetch_candidates(const GeneratorRequest& req, GeneratorBackend& backend);

}  // namespace dsense
