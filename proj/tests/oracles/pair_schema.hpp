#pragma once

// Structural check of one pair record, written against the wire format
// rather than the library's parser. Returns an empty string when valid.

#include <set>
#include <string>

#include "json.hpp"

namespace oracle {

namespace detail {

inline bool one_of(const nlohmann::json& j, std::initializer_list<const char*> allowed) {
    if (!j.is_string()) return false;
    for (const char* a : allowed)
        if (j.get<std::string>() == a) return true;
    return false;
}

inline std::string check_layout(const nlohmann::json& l, const std::string& side, std::set<std::string>& ids) {
    if (!l.is_object()) return side + " is not an object";
    if (!l.contains("layout_id") || !l["layout_id"].is_string() || l["layout_id"].get<std::string>().empty())
        return side + ".layout_id missing";
    if (!l.contains("canvas") || !l["canvas"].is_object()) return side + ".canvas missing";
    for (const char* k : {"width_px", "height_px"}) {
        const auto& c = l["canvas"];
        if (!c.contains(k) || !c[k].is_number_integer() || c[k].get<long long>() <= 0)
            return side + ".canvas." + k + " must be a positive integer";
    }
    if (!l.contains("variant") || !one_of(l["variant"], {"original_ratio", "stretching_2x", "inverse_ratio"}))
        return side + ".variant invalid";
    if (!l.contains("source") || !one_of(l["source"], {"original", "generated", "perturbed", "refined"}))
        return side + ".source invalid";
    if (!l.contains("elements") || !l["elements"].is_array() || l["elements"].empty())
        return side + ".elements must be a nonempty array";
    for (const auto& e : l["elements"]) {
        if (!e.is_object() || !e.contains("id") || !e["id"].is_string()) return side + " element without id";
        const std::string id = e["id"];
        if (!ids.insert(id).second) return side + " duplicate element id " + id;
        if (!e.contains("kind") || !one_of(e["kind"], {"text", "image", "shape", "other"}))
            return side + " element " + id + " kind invalid";
        if (!e.contains("z") || !e["z"].is_number_integer()) return side + " element " + id + " z invalid";
        if (!e.contains("label") || !e["label"].is_string()) return side + " element " + id + " label invalid";
        if (!e.contains("bbox") || !e["bbox"].is_object()) return side + " element " + id + " bbox missing";
        for (const char* k : {"x", "y", "w", "h"})
            if (!e["bbox"].contains(k) || !e["bbox"][k].is_number())
                return side + " element " + id + " bbox." + k + " not a number";
        if (!(e["bbox"]["w"].get<double>() > 0.0) || !(e["bbox"]["h"].get<double>() > 0.0))
            return side + " element " + id + " has a non-positive size";
    }
    return {};
}

}  // namespace detail

inline std::string check_pair_record(const nlohmann::json& p) {
    if (!p.is_object()) return "record is not an object";
    if (!p.contains("pair_id") || !p["pair_id"].is_string() || p["pair_id"].get<std::string>().empty())
        return "pair_id missing";
    std::set<std::string> left_ids, right_ids;
    if (!p.contains("left")) return "left missing";
    if (!p.contains("right")) return "right missing";
    if (auto e = detail::check_layout(p["left"], "left", left_ids); !e.empty()) return e;
    if (auto e = detail::check_layout(p["right"], "right", right_ids); !e.empty()) return e;
    if (left_ids != right_ids) return "left and right element sets differ";
    if (p["left"]["canvas"] != p["right"]["canvas"]) return "left and right canvases differ";
    if (!p.contains("gold_label")) return "gold_label missing";
    if (!p["gold_label"].is_null() && !detail::one_of(p["gold_label"], {"left", "right", "both_good", "both_bad"}))
        return "gold_label invalid";
    if (!p.contains("annotator_labels") || !p["annotator_labels"].is_array()) return "annotator_labels missing";
    if (!p.contains("provenance") || !detail::one_of(p["provenance"], {"pipeline", "perturbation", "external"}))
        return "provenance invalid";
    return {};
}

}  // namespace oracle
