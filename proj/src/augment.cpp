#include "designsense/augment.hpp"

#include <algorithm>
#include <cmath>

#include "designsense/error.hpp"
#include "designsense/json_io.hpp"
#include "designsense/random.hpp"

namespace dsense {

Canvas apply_variant(const Canvas& c, Variant v) {
    switch (v) {
        case Variant::original_ratio: return c;
        case Variant::stretching_2x:
            if (c.height_px >= c.width_px) return {c.width_px, c.height_px * 2};
            return {c.width_px * 2, c.height_px};
        case Variant::inverse_ratio: return {c.height_px, c.width_px};
    }
    return c;
}

void PerturbationConfig::validate() const {
    if (!(element_fraction > 0.0 && element_fraction <= 1.0))
        throw DomainError("element_fraction must lie in (0, 1]");
    if (!(offset_min_frac >= 0.0 && offset_min_frac < offset_max_frac))
        throw DomainError("offset range must satisfy 0 <= min < max");
    if (!(scale_min > 0.0 && scale_min < scale_max)) throw DomainError("scale range must satisfy 0 < min < max");
}

std::size_t perturbation_count(std::size_t n, double fraction) {
    if (n == 0) return 0;
    // The tiny bias keeps exact halves (e.g. 0.35 * 10) from rounding down.
    const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 0.5 + 1e-9));
    return std::clamp<std::size_t>(k, 1, n);
}

PerturbedLayout perturb_layout_detailed(const Layout& l, const PerturbationConfig& cfg) {
    cfg.validate();
    if (l.elements.empty()) throw EmptyLayoutError("cannot perturb layout '" + l.layout_id + "' with no elements");

    Rng rng(cfg.seed);
    const std::size_t n = l.elements.size();
    const std::size_t k = perturbation_count(n, cfg.element_fraction);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = 0; i < k; ++i) std::swap(order[i], order[i + rng.below(n - i)]);
    std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(chosen.begin(), chosen.end());

    PerturbedLayout out{l, {}};
    out.layout.layout_id = l.layout_id + "~p";
    out.layout.source = LayoutSource::perturbed;
    for (std::size_t idx : chosen) {
        Element& e = out.layout.elements[idx];
        PerturbationRecord rec{e.id, PerturbationKind::offset};
        if (rng.coin()) {
            const double mx = rng.uniform(cfg.offset_min_frac, cfg.offset_max_frac);
            const double sx = rng.coin() ? 1.0 : -1.0;
            const double my = rng.uniform(cfg.offset_min_frac, cfg.offset_max_frac);
            const double sy = rng.coin() ? 1.0 : -1.0;
            rec.dx = sx * mx * e.bbox.w;
            rec.dy = sy * my * e.bbox.h;
            e.bbox.x += rec.dx;
            e.bbox.y += rec.dy;
        } else {
            rec.factor = rng.uniform(cfg.scale_min, cfg.scale_max);
            if (rng.coin()) {
                rec.kind = PerturbationKind::scale_width;
                const double cx = e.bbox.cx();
                e.bbox.w *= rec.factor;
                e.bbox.x = cx - 0.5 * e.bbox.w;
            } else {
                rec.kind = PerturbationKind::scale_height;
                const double cy = e.bbox.cy();
                e.bbox.h *= rec.factor;
                e.bbox.y = cy - 0.5 * e.bbox.h;
            }
        }
        out.records.push_back(rec);
    }
    return out;
}

Layout perturb_layout(const Layout& l, const PerturbationConfig& cfg) { return perturb_layout_detailed(l, cfg).layout; }

std::string_view to_string(NegativeMode m) {
    switch (m) {
        case NegativeMode::original_vs_perturbed: return "original_vs_perturbed";
        case NegativeMode::both_perturbed: return "both_perturbed";
        case NegativeMode::combined: return "combined";
    }
    return "?";
}

NegativeMode negative_mode_from_string(std::string_view s) {
    for (auto m : {NegativeMode::original_vs_perturbed, NegativeMode::both_perturbed, NegativeMode::combined}) {
        if (to_string(m) == s) return m;
    }
    throw DomainError("unknown negative-pair mode '" + std::string(s) + "'");
}

std::vector<PreferencePair> make_negative_pairs(const std::vector<Layout>& originals, const PerturbationConfig& cfg,
                                                NegativeMode mode) {
    constexpr std::uint64_t kSideStream = 0x51DE51DE51DE51DEull;
    std::vector<PreferencePair> pairs;
    for (std::size_t i = 0; i < originals.size(); ++i) {
        const Layout& orig = originals[i];
        if (!validate_layout(orig).is_clean) {
            throw DomainError("negative pairs need validated originals; '" + orig.layout_id + "' has defects");
        }
        PerturbationConfig ca = cfg, cb = cfg;
        ca.seed = mix_seed(cfg.seed, 2 * i);
        cb.seed = mix_seed(cfg.seed, 2 * i + 1);
        Layout pa = perturb_layout(orig, ca);
        pa.layout_id = orig.layout_id + "~pa";

        if (mode != NegativeMode::both_perturbed) {
            Rng side(mix_seed(cfg.seed ^ kSideStream, i));
            const bool original_left = side.coin();
            PreferencePair p;
            p.pair_id = orig.layout_id + "~neg";
            p.left = original_left ? orig : pa;
            p.right = original_left ? pa : orig;
            p.gold_label = original_left ? PreferenceLabel::left : PreferenceLabel::right;
            p.provenance = PairProvenance::perturbation;
            p.extra = Json{{"construction", std::string(to_string(NegativeMode::original_vs_perturbed))},
                           {"perturbation_seed", ca.seed}};
            pairs.push_back(std::move(p));
        }
        if (mode != NegativeMode::original_vs_perturbed) {
            Layout pb = perturb_layout(orig, cb);
            pb.layout_id = orig.layout_id + "~pb";
            PreferencePair p;
            p.pair_id = orig.layout_id + "~negbb";
            p.left = pa;
            p.right = std::move(pb);
            p.gold_label = PreferenceLabel::both_bad;
            p.provenance = PairProvenance::perturbation;
            p.extra = Json{{"construction", std::string(to_string(NegativeMode::both_perturbed))},
                           {"perturbation_seeds", {ca.seed, cb.seed}}};
            pairs.push_back(std::move(p));
        }
    }
    return pairs;
}

GeneratorRequest make_generator_request(const Layout& l, const Partition& p, Variant v, int num_samples,
                                        double temperature) {
    if (num_samples < 1) throw DomainError("num_samples must be >= 1");
    if (p.groups.empty()) throw DomainError("generator request needs at least one group");
    GeneratorRequest req;
    req.design_id = l.layout_id;
    req.source_canvas = l.canvas;
    req.target_canvas = apply_variant(l.canvas, v);
    req.variant = v;
    req.num_samples = num_samples;
    req.temperature = temperature;
    for (std::size_t g = 0; g < p.groups.size(); ++g) {
        GroupPayload payload;
        payload.group_id = "g" + std::to_string(g);
        double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
        std::vector<const Element*> members;
        for (const auto& id : p.groups[g]) {
            const Element* e = l.find(id);
            if (!e) throw DomainError("group member '" + id + "' not in layout '" + l.layout_id + "'");
            members.push_back(e);
            x0 = std::min(x0, e->bbox.x);
            y0 = std::min(y0, e->bbox.y);
            x1 = std::max(x1, e->bbox.right());
            y1 = std::max(y1, e->bbox.bottom());
        }
        payload.bbox = {x0, y0, x1 - x0, y1 - y0};
        for (const Element* e : members) {
            payload.members.push_back({e->id,
                                       e->kind,
                                       {(e->bbox.x - x0) / payload.bbox.w, (e->bbox.y - y0) / payload.bbox.h,
                                        e->bbox.w / payload.bbox.w, e->bbox.h / payload.bbox.h},
                                       e->z,
                                       e->label});
        }
        req.groups.push_back(std::move(payload));
    }
    return req;
}

Json to_json(const GeneratorRequest& r) {
    Json groups = Json::array();
    for (const auto& g : r.groups) {
        Json members = Json::array();
        for (const auto& m : g.members) {
            members.push_back({{"id", m.id},
                               {"kind", std::string(to_string(m.kind))},
                               {"rel", to_json(m.rel)},
                               {"z", m.z},
                               {"label", m.label}});
        }
        groups.push_back({{"group_id", g.group_id}, {"bbox", to_json(g.bbox)}, {"members", std::move(members)}});
    }
    return Json{{"design_id", r.design_id},
                {"variant", std::string(to_string(r.variant))},
                {"source_canvas", to_json(r.source_canvas)},
                {"canvas", to_json(r.target_canvas)},
                {"groups", std::move(groups)},
                {"num_samples", r.num_samples},
                {"temperature", r.temperature}};
}

GeneratorRequest generator_request_from_json(const Json& j) {
    GeneratorRequest r;
    try {
        r.design_id = j.value("design_id", std::string("design"));
        r.variant = variant_from_string(j.value("variant", std::string("original_ratio")));
        r.target_canvas = canvas_from_json(j.at("canvas"), "canvas");
        r.source_canvas = j.contains("source_canvas") ? canvas_from_json(j["source_canvas"], "source_canvas") : r.target_canvas;
        r.num_samples = j.value("num_samples", 10);
        r.temperature = j.value("temperature", 1.0);
        for (const auto& g : j.at("groups")) {
            GroupPayload payload;
            payload.group_id = g.value("group_id", std::string());
            payload.bbox = bbox_from_json(g.at("bbox"), "groups.bbox");
            for (const auto& m : g.at("members")) {
                payload.members.push_back({m.at("id").get<std::string>(),
                                           element_kind_from_string(m.value("kind", std::string("other"))),
                                           bbox_from_json(m.at("rel"), "members.rel"), m.value("z", 0),
                                           m.value("label", std::string())});
            }
            r.groups.push_back(std::move(payload));
        }
    } catch (const Json::exception& e) {
        throw ParseError("generator request", e.what());
    } catch (const DomainError& e) {
        throw ParseError("generator request", e.what());
    }
    return r;
}

Layout place_groups(const GeneratorRequest& req, const std::vector<BBox>& group_boxes, std::string layout_id) {
    if (group_boxes.size() != req.groups.size()) throw DomainError("one box per group is required");
    Layout l;
    l.layout_id = std::move(layout_id);
    l.canvas = req.target_canvas;
    l.variant = req.variant;
    l.source = LayoutSource::generated;
    std::vector<std::vector<std::string>> groups;
    for (std::size_t g = 0; g < req.groups.size(); ++g) {
        const BBox& box = group_boxes[g];
        std::vector<std::string> ids;
        for (const auto& m : req.groups[g].members) {
            l.elements.push_back({m.id,
                                  m.kind,
                                  {box.x + m.rel.x * box.w, box.y + m.rel.y * box.h, m.rel.w * box.w, m.rel.h * box.h},
                                  m.z,
                                  m.label,
                                  Json::object()});
            ids.push_back(m.id);
        }
        groups.push_back(std::move(ids));
    }
    std::stable_sort(l.elements.begin(), l.elements.end(), [](const Element& a, const Element& b) { return a.z < b.z; });
    l.groups = std::move(groups);
    return l;
}

FetchResult fetch_candidates(const GeneratorRequest& req, GeneratorBackend& backend) {
    if (req.groups.empty()) throw DomainError("generator request has no groups");
    const Json response = backend.generate(to_json(req));
    if (!response.is_object() || !response.contains("layouts") || !response["layouts"].is_array()) {
        throw ProtocolError("generator response lacks a 'layouts' array", excerpt(response.dump()));
    }
    std::vector<std::string> expected_ids;
    for (const auto& g : req.groups)
        for (const auto& m : g.members) expected_ids.push_back(m.id);
    std::sort(expected_ids.begin(), expected_ids.end());

    FetchResult out;
    const Json& layouts = response["layouts"];
    for (std::size_t i = 0; i < layouts.size(); ++i) {
        if (out.layouts.size() >= static_cast<std::size_t>(req.num_samples)) break;
        Layout l;
        try {
            l = layout_from_json(layouts[i], "layouts[" + std::to_string(i) + "]");
        } catch (const ParseError& e) {
            ++out.dropped;
            out.warnings.push_back(std::string("dropped malformed layout: ") + e.what());
            continue;
        }
        if (l.element_ids() != expected_ids) {
            ++out.dropped;
            out.warnings.push_back("dropped layouts[" + std::to_string(i) + "]: element ids differ from the request");
            continue;
        }
        if (!(l.canvas == req.target_canvas)) {
            ++out.dropped;
            out.warnings.push_back("dropped layouts[" + std::to_string(i) + "]: canvas differs from the target");
            continue;
        }
        l.layout_id = req.design_id + "__" + std::string(to_string(req.variant)) + "__" + std::to_string(out.layouts.size());
        l.source = LayoutSource::generated;
        l.variant = req.variant;
        l.extra["design_id"] = req.design_id;
        out.layouts.push_back(std::move(l));
    }
    return out;
}

}  // namespace dsense
