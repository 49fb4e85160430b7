#include "designsense/json_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "designsense/error.hpp"

namespace dsense {

namespace {

const Json& require(const Json& j, const char* key, const std::string& path) {
    if (!j.is_object()) throw ParseError(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(path + "." + key, "missing required field");
    return *it;
}

double number_at(const Json& j, const char* key, const std::string& path) {
    const Json& v = require(j, key, path);
    if (!v.is_number()) throw ParseError(path + "." + key, "expected a number");
    return v.get<double>();
}

int integer_at(const Json& j, const char* key, const std::string& path) {
    const Json& v = require(j, key, path);
    if (!v.is_number_integer()) throw ParseError(path + "." + key, "expected an integer");
    return v.get<int>();
}

std::string string_at(const Json& j, const char* key, const std::string& path) {
    const Json& v = require(j, key, path);
    if (!v.is_string()) throw ParseError(path + "." + key, "expected a string");
    return v.get<std::string>();
}

template <class F>
auto enum_at(const Json& j, const char* key, const std::string& path, F&& parse) {
    const std::string s = string_at(j, key, path);
    try {
        return parse(s);
    } catch (const DomainError& e) {
        throw ParseError(path + "." + key, e.what());
    }
}

Json extras(const Json& j, std::initializer_list<const char*> known) {
    Json out = Json::object();
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool is_known = false;
        for (const char* k : known) is_known = is_known || it.key() == k;
        if (!is_known) out[it.key()] = it.value();
    }
    return out;
}

void merge_extra(Json& j, const Json& extra) {
    if (!extra.is_object()) return;
    for (auto it = extra.begin(); it != extra.end(); ++it) {
        if (!j.contains(it.key())) j[it.key()] = it.value();
    }
}

}  // namespace

Json to_json(const BBox& b) { return Json{{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }

Json to_json(const Canvas& c) { return Json{{"width_px", c.width_px}, {"height_px", c.height_px}}; }

Json to_json(const Element& e) {
    Json j{{"id", e.id},
           {"kind", std::string(to_string(e.kind))},
           {"bbox", to_json(e.bbox)},
           {"z", e.z},
           {"label", e.label}};
    merge_extra(j, e.extra);
    return j;
}

Json to_json(const Layout& l) {
    Json elements = Json::array();
    for (const auto& e : l.elements) elements.push_back(to_json(e));
    Json j{{"layout_id", l.layout_id},
           {"canvas", to_json(l.canvas)},
           {"variant", std::string(to_string(l.variant))},
           {"source", std::string(to_string(l.source))},
           {"elements", std::move(elements)}};
    if (l.groups) j["groups"] = *l.groups;
    merge_extra(j, l.extra);
    return j;
}

Json to_json(const Verdict& v) {
    Json j{{"label", std::string(to_string(v.label))}, {"debiased", v.debiased}};
    if (v.left_score) j["left_score"] = *v.left_score;
    if (v.right_score) j["right_score"] = *v.right_score;
    if (v.swapped_label) j["swapped_label"] = std::string(to_string(*v.swapped_label));
    return j;
}

Json to_json(const PreferencePair& p) {
    Json annotations = Json::array();
    for (const auto& a : p.annotator_labels) {
        annotations.push_back({{"annotator_id", a.annotator_id}, {"label", std::string(to_string(a.label))}});
    }
    Json j{{"pair_id", p.pair_id},
           {"left", to_json(p.left)},
           {"right", to_json(p.right)},
           {"gold_label", p.gold_label ? Json(std::string(to_string(*p.gold_label))) : Json(nullptr)},
           {"annotator_labels", std::move(annotations)},
           {"provenance", std::string(to_string(p.provenance))}};
    merge_extra(j, p.extra);
    return j;
}

BBox bbox_from_json(const Json& j, const std::string& path) {
    return BBox{number_at(j, "x", path), number_at(j, "y", path), number_at(j, "w", path), number_at(j, "h", path)};
}

Canvas canvas_from_json(const Json& j, const std::string& path) {
    return Canvas{integer_at(j, "width_px", path), integer_at(j, "height_px", path)};
}

Element element_from_json(const Json& j, const std::string& path) {
    Element e;
    e.id = string_at(j, "id", path);
    e.kind = enum_at(j, "kind", path, element_kind_from_string);
    e.bbox = bbox_from_json(require(j, "bbox", path), path + ".bbox");
    e.z = j.contains("z") ? integer_at(j, "z", path) : 0;
    if (j.contains("label")) e.label = string_at(j, "label", path);
    e.extra = extras(j, {"id", "kind", "bbox", "z", "label"});
    return e;
}

Layout layout_from_json(const Json& j, const std::string& path) {
    Layout l;
    l.layout_id = string_at(j, "layout_id", path);
    l.canvas = canvas_from_json(require(j, "canvas", path), path + ".canvas");
    l.variant = j.contains("variant") ? enum_at(j, "variant", path, variant_from_string) : Variant::original_ratio;
    l.source = j.contains("source") ? enum_at(j, "source", path, layout_source_from_string) : LayoutSource::original;
    const Json& elements = require(j, "elements", path);
    if (!elements.is_array()) throw ParseError(path + ".elements", "expected an array");
    for (std::size_t i = 0; i < elements.size(); ++i) {
        l.elements.push_back(element_from_json(elements[i], path + ".elements[" + std::to_string(i) + "]"));
    }
    if (j.contains("groups") && !j.at("groups").is_null()) {
        try {
            l.groups = j.at("groups").get<std::vector<std::vector<std::string>>>();
        } catch (const Json::exception&) {
            throw ParseError(path + ".groups", "expected a list of id lists");
        }
    }
    l.extra = extras(j, {"layout_id", "canvas", "variant", "source", "elements", "groups"});
    try {
        check_layout(l);
    } catch (const Error& e) {
        throw ParseError(path, e.what());
    }
    return l;
}

Verdict verdict_from_json(const Json& j, const std::string& path) {
    Verdict v;
    v.label = enum_at(j, "label", path, label_from_string);
    if (j.contains("left_score") && !j["left_score"].is_null()) v.left_score = number_at(j, "left_score", path);
    if (j.contains("right_score") && !j["right_score"].is_null()) v.right_score = number_at(j, "right_score", path);
    if (j.contains("swapped_label") && !j["swapped_label"].is_null())
        v.swapped_label = enum_at(j, "swapped_label", path, label_from_string);
    if (j.contains("debiased")) v.debiased = j["debiased"].get<bool>();
    return v;
}

PreferencePair pair_from_json(const Json& j, const std::string& path) {
    PreferencePair p;
    p.pair_id = string_at(j, "pair_id", path);
    p.left = layout_from_json(require(j, "left", path), path + ".left");
    p.right = layout_from_json(require(j, "right", path), path + ".right");
    if (j.contains("gold_label") && !j["gold_label"].is_null())
        p.gold_label = enum_at(j, "gold_label", path, label_from_string);
    if (j.contains("annotator_labels")) {
        const Json& a = j["annotator_labels"];
        for (std::size_t i = 0; i < a.size(); ++i) {
            const std::string ap = path + ".annotator_labels[" + std::to_string(i) + "]";
            p.annotator_labels.push_back(
                {string_at(a[i], "annotator_id", ap), enum_at(a[i], "label", ap, label_from_string)});
        }
    }
    if (j.contains("provenance")) p.provenance = enum_at(j, "provenance", path, pair_provenance_from_string);
    p.extra = extras(j, {"pair_id", "left", "right", "gold_label", "annotator_labels", "provenance"});
    return p;
}

Json parse_json_text(std::string_view text, const std::string& where) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ParseError(where, e.what());
    }
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_json_text(ss.str(), path);
}

void write_text_atomic(const std::string& path, const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        out << contents;
        if (!out.flush()) throw Error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

std::string dump_pretty(const Json& j) { return j.dump(2) + "\n"; }

void write_json_file(const std::string& path, const Json& j) { write_text_atomic(path, dump_pretty(j)); }

Layout read_layout_file(const std::string& path) { return layout_from_json(read_json_file(path), path); }

void write_layout_file(const std::string& path, const Layout& l) { write_json_file(path, to_json(l)); }

}  // namespace dsense
